"""Cell parameters, open-circuit curves, operating protocol and config loading.

All quantities are SI. Region-wise properties are stored as separate
``*_neg`` / ``*_sep`` / ``*_pos`` fields and resolved through :func:`region_of`
or :meth:`CellParameters.by_region`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, DomainError

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class Region(enum.Enum):
    NEGATIVE = "negative"
    SEPARATOR = "separator"
    POSITIVE = "positive"

    @property
    def is_electrode(self):
        return self is not Region.SEPARATOR


_SUFFIX = {Region.NEGATIVE: "_neg", Region.SEPARATOR: "_sep", Region.POSITIVE: "_pos"}


@dataclass(frozen=True)
class OcvCurve:
    """Tabulated equilibrium potential U(y) and entropy coefficient dU/dT(y).

    Values between knots come from a monotone piecewise-cubic (PCHIP)
    interpolant, which never overshoots the neighbouring knot values.
    Stoichiometries outside the knot range are clamped to the end knots.
    """

    stoichiometry_knots: tuple
    u_values: tuple
    dudt_values: tuple
    interpolation: str = "pchip"

    def __post_init__(self):
        y = np.asarray(self.stoichiometry_knots, dtype=float)
        u = np.asarray(self.u_values, dtype=float)
        du = np.asarray(self.dudt_values, dtype=float)
        if not (y.ndim == 1 and y.size >= 2 and u.shape == y.shape and du.shape == y.shape):
            raise ConfigurationError("OCV table needs >= 2 knots and equal-length value arrays")
        if np.any(np.diff(y) <= 0) or y[0] < 0 or y[-1] > 1:
            raise ConfigurationError("OCV knots must be strictly increasing within [0, 1]")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(du))):
            raise ConfigurationError("OCV values must be finite")
        if self.interpolation not in ("pchip", "linear"):
            raise ConfigurationError(f"unknown OCV interpolation {self.interpolation!r}")
        object.__setattr__(self, "stoichiometry_knots", tuple(y.tolist()))
        object.__setattr__(self, "u_values", tuple(u.tolist()))
        object.__setattr__(self, "dudt_values", tuple(du.tolist()))
        object.__setattr__(self, "_y", y)
        if self.interpolation == "pchip":
            object.__setattr__(self, "_u", PchipInterpolator(y, u, extrapolate=False))
            object.__setattr__(self, "_du", PchipInterpolator(y, du, extrapolate=False))
        else:
            object.__setattr__(self, "_u", lambda s: np.interp(s, y, u))
            object.__setattr__(self, "_du", lambda s: np.interp(s, y, du))

    def _clip(self, y):
        return np.clip(y, self._y[0], self._y[-1])

    def u(self, y):
        return self._u(self._clip(y))

    def dudt(self, y):
        return self._du(self._clip(y))

    @classmethod
    def constant(cls, u0, dudt=0.0):
        return cls((0.0, 1.0), (u0, u0), (dudt, dudt))


@dataclass(frozen=True)
class CellParameters:
    L1: float
    delta: float
    L2: float
    A: float
    eps_e_neg: float
    eps_e_sep: float
    eps_e_pos: float
    eps_s_neg: float
    eps_s_pos: float
    p: float
    De: float
    Ds_neg: float
    Ds_pos: float
    Rs_neg: float
    Rs_pos: float
    sigma_neg: float
    sigma_pos: float
    t_plus: float
    k_neg: float
    k_pos: float
    alpha_a: float
    alpha_c: float
    cs_max_neg: float
    cs_max_pos: float
    ocv_neg: OcvCurve
    ocv_pos: OcvCurve
    kappa_coeffs: tuple = (1.0,)
    kappa_temp_coeff: float = 0.0
    F: float = 96485.33212
    R_gas: float = 8.314462618
    Rf: float = 0.0
    M: float = 0.04
    Cp: float = 1000.0
    h: float = 10.0
    As: float = 0.01
    T_amb: float = 298.15
    T_ref: float = 298.15
    n_series: int = 1
    L: float = None

    def __post_init__(self):
        if self.L is None:
            object.__setattr__(self, "L", self.L1 + self.delta + self.L2)
        object.__setattr__(self, "kappa_coeffs", tuple(float(c) for c in self.kappa_coeffs))

    # region lookups -------------------------------------------------------

    def by_region(self, name, region):
        """Return the ``name`` property (e.g. ``"eps_e"``) of ``region``."""
        try:
            return getattr(self, name + _SUFFIX[region])
        except AttributeError:
            raise DomainError(f"{name} is not defined in the {region.value} region") from None

    def ocv(self, region):
        if region is Region.NEGATIVE:
            return self.ocv_neg
        if region is Region.POSITIVE:
            return self.ocv_pos
        raise DomainError("no equilibrium potential in the separator")

    def kappa(self, ce, T):
        """Electrolyte conductivity: polynomial in c_e times a linear T factor."""
        ce = np.asarray(ce, dtype=float)
        val = np.polynomial.polynomial.polyval(ce, self.kappa_coeffs)
        return val * (1.0 + self.kappa_temp_coeff * (T - self.T_ref))

    def nu(self, T):
        """Coefficient (1 - 2 t+) R T / F of the concentration drift term."""
        return (1.0 - 2.0 * self.t_plus) * self.R_gas * T / self.F

    def replace(self, **changes):
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        if "L" not in changes and any(k in changes for k in ("L1", "delta", "L2")):
            kw["L"] = None
        kw.update(changes)
        return CellParameters(**kw)


def region_of(x, params):
    """Region containing the macro coordinate ``x`` (faces belong to the right)."""
    if not (0.0 <= x <= params.L) or math.isnan(x):
        raise DomainError(f"x = {x!r} outside [0, L = {params.L!r}]")
    if x < params.L1:
        return Region.NEGATIVE
    if x < params.L1 + params.delta:
        return Region.SEPARATOR
    return Region.POSITIVE


@dataclass
class ValidationReport:
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def add(self, name, message):
        self.failures.append((name, message))

    def fields(self):
        return [name for name, _ in self.failures]

    def __str__(self):
        if self.ok:
            return "parameters valid"
        return "\n".join(f"{name}: {msg}" for name, msg in self.failures)


_POSITIVE = ("L1", "delta", "L2", "A", "De", "Ds_neg", "Ds_pos", "Rs_neg", "Rs_pos",
             "sigma_neg", "sigma_pos", "cs_max_neg", "cs_max_pos", "F", "R_gas", "M", "Cp",
             "As", "k_neg", "k_pos", "T_amb", "T_ref", "p")
_UNIT_OPEN = ("t_plus", "eps_e_neg", "eps_e_sep", "eps_e_pos", "eps_s_neg", "eps_s_pos")


def validate(params):
    """Check every invariant of ``params``; never raises."""
    rep = ValidationReport()
    for name in _POSITIVE:
        v = getattr(params, name)
        if not (np.isfinite(v) and v > 0):
            rep.add(name, f"must be > 0 (got {v!r})")
    for name in ("h", "Rf"):
        v = getattr(params, name)
        if not (np.isfinite(v) and v >= 0):
            rep.add(name, f"must be >= 0 (got {v!r})")
    for name in _UNIT_OPEN:
        v = getattr(params, name)
        if not (0 < v < 1):
            rep.add(name, f"must lie in (0, 1) (got {v!r})")
    for name in ("alpha_a", "alpha_c"):
        v = getattr(params, name)
        if not (np.isfinite(v) and v > 0):
            rep.add(name, f"must be > 0 (got {v!r})")
    if params.L != params.L1 + params.delta + params.L2:
        rep.add("L", f"geometry inconsistent: L = {params.L!r} != L1 + delta + L2 = "
                     f"{params.L1 + params.delta + params.L2!r}")
    if not (isinstance(params.n_series, (int, np.integer)) and params.n_series >= 1):
        rep.add("n_series", f"must be a positive integer (got {params.n_series!r})")
    if not params.kappa_coeffs or not all(np.isfinite(params.kappa_coeffs)):
        rep.add("kappa_coeffs", "need at least one finite coefficient")
    for name in ("ocv_neg", "ocv_pos"):
        if not isinstance(getattr(params, name), OcvCurve):
            rep.add(name, "must be an OcvCurve")
    return rep


# --------------------------------------------------------------------------
# protocol and initial state


@dataclass(frozen=True)
class Segment:
    """Constant current, or a table of (time since segment start, current)."""

    duration: float
    current: float = 0.0
    table: tuple = None

    def current_at(self, tau):
        if self.table is None:
            return self.current
        t, i = zip(*self.table)
        return float(np.interp(tau, t, i))


@dataclass(frozen=True)
class Protocol:
    """Applied current I(t), positive on discharge."""

    segments: tuple
    t_end: float = None
    cutoff_voltage_low: float = None
    cutoff_voltage_high: float = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ConfigurationError("protocol needs at least one segment")
        if any(not (s.duration > 0) for s in segs):
            raise ConfigurationError("segment durations must be > 0")
        total = float(sum(s.duration for s in segs))
        if self.t_end is None:
            object.__setattr__(self, "t_end", total)
        elif not math.isclose(self.t_end, total, rel_tol=1e-12, abs_tol=0.0):
            raise ConfigurationError(f"t_end = {self.t_end} but segment durations sum to {total}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, current, duration, **kw):
        return cls((Segment(duration, current),), **kw)

    def current_at(self, t):
        """I(t); segments are closed on the right, so I(0) is the first segment's start."""
        start = 0.0
        for seg in self.segments:
            if t <= start + seg.duration:
                return seg.current_at(max(t - start, 0.0))
            start += seg.duration
        return self.segments[-1].current_at(self.segments[-1].duration)


@dataclass(frozen=True)
class InitialConditions:
    """``ce0`` is a constant or an ``(x, c)`` table interpolated onto the mesh."""

    ce0: Any
    cs0_neg: float
    cs0_pos: float
    T0: float = 298.15

    def ce_on(self, x):
        x = np.asarray(x, dtype=float)
        if np.ndim(self.ce0) == 0:
            return np.full(x.shape, float(self.ce0))
        xs, cs = (np.asarray(a, dtype=float) for a in self.ce0)
        return np.interp(x, xs, cs)

    def check(self, params):
        ce = np.atleast_1d(self.ce0 if np.ndim(self.ce0) == 0 else self.ce0[1])
        if np.any(np.asarray(ce, dtype=float) <= 0):
            raise ConfigurationError("initial electrolyte concentration must be > 0")
        if not 0 < self.cs0_neg < params.cs_max_neg:
            raise ConfigurationError("cs0_neg must lie in (0, cs_max_neg)")
        if not 0 < self.cs0_pos < params.cs_max_pos:
            raise ConfigurationError("cs0_pos must lie in (0, cs_max_pos)")
        if not self.T0 > 0:
            raise ConfigurationError("T0 must be > 0")


# --------------------------------------------------------------------------
# config files


@dataclass
class Config:
    cell: CellParameters
    protocol: Protocol
    initial: InitialConditions
    numerics: dict = field(default_factory=dict)


DEFAULT_CONFIG = Path(__file__).with_name("data") / "default_cell.json"


def read_mapping(path):
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(raw.decode("utf-8"))
        return json.loads(raw)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from exc


def _ocv_from(d):
    return OcvCurve(tuple(d["stoichiometry"]), tuple(d["u"]), tuple(d["dudt"]),
                    d.get("interpolation", "pchip"))


def cell_from_mapping(d):
    d = dict(d)
    try:
        d["ocv_neg"] = _ocv_from(d["ocv_neg"])
        d["ocv_pos"] = _ocv_from(d["ocv_pos"])
        if "kappa_coeffs" in d:
            d["kappa_coeffs"] = tuple(d["kappa_coeffs"])
        return CellParameters(**d)
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad [cell] table: {exc}") from exc


def protocol_from_mapping(d):
    try:
        segs = []
        for s in d["segments"]:
            table = s.get("current_table")
            segs.append(Segment(float(s["duration"]), float(s.get("current", 0.0)),
                                tuple(tuple(map(float, row)) for row in table) if table else None))
        return Protocol(tuple(segs), d.get("t_end"), d.get("cutoff_voltage_low"),
                        d.get("cutoff_voltage_high"))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad [protocol] table: {exc}") from exc


def initial_from_mapping(d):
    try:
        ce0 = d["ce0"]
        if isinstance(ce0, dict):
            ce0 = (tuple(ce0["x"]), tuple(ce0["c"]))
        return InitialConditions(ce0, float(d["cs0_neg"]), float(d["cs0_pos"]),
                                 float(d.get("T0", 298.15)))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"bad [initial] table: {exc}") from exc


def load_config(path=None):
    """Read a JSON or TOML config (``.toml`` suffix selects TOML).

    With ``path=None`` the bundled graphite/LMO default set is loaded.
    """
    d = read_mapping(DEFAULT_CONFIG if path is None else path)
    for key in ("cell", "protocol", "initial"):
        if key not in d:
            raise ConfigurationError(f"config is missing the [{key}] table")
    return Config(cell_from_mapping(d["cell"]), protocol_from_mapping(d["protocol"]),
                  initial_from_mapping(d["initial"]), dict(d.get("numerics", {})))


def default_parameters():
    return load_config().cell
