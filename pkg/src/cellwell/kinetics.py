"""Equilibrium potential, exchange current density and the reaction current.

Functions accept scalars or numpy arrays; the region argument is a single
:class:`~cellwell.params.Region` applied to every entry.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, KineticOverflowError
from .params import Region

log = logging.getLogger(__name__)

#: largest |alpha F eta / (R T)| accepted before declaring the iterate diverged
EXPONENT_GUARD = 500.0

#: relative floor used when clamping concentrations before exponentiation
CLAMP_FLOOR = 1e-9


class KineticsMode(enum.Enum):
    BUTLER_VOLMER = "butler-volmer"
    LINEARIZED = "linearized"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise DomainError(f"unknown kinetics mode {value!r}") from None


@dataclass(frozen=True)
class LocalKineticState:
    region: Region
    phi_s: float
    phi_e: float
    cs_surf: float
    ce: float
    T: float


def _electrode(region):
    if region is Region.SEPARATOR:
        raise DomainError("kinetics are undefined in the separator")


def specific_area(region, params):
    """a_s = 3 eps_s / R_s (1/m)."""
    _electrode(region)
    return 3.0 * params.by_region("eps_s", region) / params.by_region("Rs", region)


def equilibrium_potential(region, cs_surf, T, params):
    """U(y) + dU/dT(y) (T - T_ref) with y = cs_surf / cs_max."""
    _electrode(region)
    cs_max = params.by_region("cs_max", region)
    cs = np.asarray(cs_surf, dtype=float)
    if np.any(cs < 0) or np.any(cs > cs_max):
        raise DomainError(f"surface concentration outside [0, {cs_max}]")
    if np.any(np.asarray(T) <= 0):
        raise DomainError("temperature must be > 0")
    curve = params.ocv(region)
    y = cs / cs_max
    out = curve.u(y) + curve.dudt(y) * (T - params.T_ref)
    return out if out.ndim else float(out)


def exchange_current_density(region, cs_surf, ce, params):
    """k (ce)^aa (cs_max - cs)^aa (cs)^ac in A/m^2."""
    _electrode(region)
    cs = np.asarray(cs_surf, dtype=float)
    ce = np.asarray(ce, dtype=float)
    cs_max = params.by_region("cs_max", region)
    if np.any(cs < 0) or np.any(ce < 0) or np.any(cs > cs_max):
        raise DomainError("concentrations must be non-negative and cs <= cs_max")
    aa, ac = params.alpha_a, params.alpha_c
    out = params.by_region("k", region) * ce ** aa * (cs_max - cs) ** aa * cs ** ac
    return out if out.ndim else float(out)


def overpotential(phi_s, phi_e, u_eq):
    return phi_s - phi_e - u_eq


def clamp_concentrations(ce, cs_surf, cs_max, ce_scale):
    """Pull ``ce`` and ``cs_surf`` into [floor, cap] so the power laws stay finite.

    The floor is ``CLAMP_FLOOR`` times the respective scale; the clamping
    distance is logged at DEBUG level.
    """
    ce = np.asarray(ce, dtype=float)
    cs = np.asarray(cs_surf, dtype=float)
    lo_e = CLAMP_FLOOR * ce_scale
    lo_s = CLAMP_FLOOR * cs_max
    ce_c = np.maximum(ce, lo_e)
    cs_c = np.clip(cs, lo_s, cs_max - lo_s)
    dist = max(float(np.max(np.abs(ce_c - ce), initial=0.0)),
               float(np.max(np.abs(cs_c - cs), initial=0.0)))
    if dist > 0:
        log.debug("clamped concentrations by up to %.3e mol/m^3", dist)
    return ce_c, cs_c


def rate_factor(eta, T, params, mode=KineticsMode.BUTLER_VOLMER):
    """Dimensionless E(eta) and dE/deta (1/V).

    Butler-Volmer: exp(aa F eta / RT) - exp(-ac F eta / RT).
    Linearized:    (aa + ac) F eta / RT.
    """
    f = params.F / (params.R_gas * T)
    eta = np.asarray(eta, dtype=float)
    if mode is KineticsMode.LINEARIZED:
        s = (params.alpha_a + params.alpha_c) * f
        return s * eta, np.broadcast_to(s, eta.shape).astype(float)
    xa = params.alpha_a * f * eta
    xc = params.alpha_c * f * eta
    big = np.maximum(np.abs(xa), np.abs(xc))
    if np.any(~(big <= EXPONENT_GUARD)):
        idx = int(np.argmax(~(big <= EXPONENT_GUARD))) if eta.ndim else None
        raise KineticOverflowError(
            f"Butler-Volmer exponent {float(np.max(big)):.1f} exceeds guard {EXPONENT_GUARD}", idx)
    ea = np.exp(xa)
    ec = np.exp(-xc)
    return ea - ec, params.alpha_a * f * ea + params.alpha_c * f * ec


def reaction_current(state, mode, params):
    """Volumetric reaction current j^Li (A/m^3); zero in the separator."""
    mode = KineticsMode.parse(mode)
    if state.region is Region.SEPARATOR:
        return 0.0 * np.asarray(state.phi_s, dtype=float)
    u_eq = equilibrium_potential(state.region, state.cs_surf, state.T, params)
    eta = overpotential(state.phi_s, state.phi_e, u_eq)
    i0 = exchange_current_density(state.region, state.cs_surf, state.ce, params)
    e, _ = rate_factor(eta, state.T, params, mode)
    out = specific_area(state.region, params) * i0 * e
    return out if np.ndim(out) else float(out)


def reaction_current_deta(state, mode, params):
    """Analytic dj/deta at fixed concentrations (used by the Newton Jacobian)."""
    mode = KineticsMode.parse(mode)
    if state.region is Region.SEPARATOR:
        return 0.0 * np.asarray(state.phi_s, dtype=float)
    u_eq = equilibrium_potential(state.region, state.cs_surf, state.T, params)
    eta = overpotential(state.phi_s, state.phi_e, u_eq)
    i0 = exchange_current_density(state.region, state.cs_surf, state.ce, params)
    _, de = rate_factor(eta, state.T, params, mode)
    out = specific_area(state.region, params) * i0 * de
    return out if np.ndim(out) else float(out)
