"""Time loop, observables and per-step bookkeeping checks."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import charge as ch
from .errors import CellwellError, ConfigurationError, InvariantViolation, SimulationAbort
from .kinetics import KineticsMode
from .mesh import build_mesh
from .params import Region, validate
from .thermal import heat_sources, temperature_step
from .transport import electrolyte_inventory, electrolyte_step, solid_inventory, solid_step

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t", "I", "V", "pack_V", "SOC", "T", "q_r", "q_j", "q_c", "q_e",
               "compat_defect", "newton_iters")


@dataclass
class CellState:
    time: float
    ce: np.ndarray
    cs_neg: np.ndarray   # (n_neg, n_r)
    cs_pos: np.ndarray   # (n_pos, n_r)
    T: float
    phi: ch.PotentialSolution = None


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: float
    I: float
    V: float
    pack_V: float
    SOC: float
    T: float
    q_r: float
    q_j: float
    q_c: float
    q_e: float
    compat_defect: float
    newton_iters: int
    stop_reason: str = ""

    def row(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass(frozen=True)
class StepLedger:
    electrolyte_change: float
    electrolyte_source: float
    solid_change: float
    solid_source: float
    electrolyte_before: float
    solid_before: float
    lithium_before: float
    lithium_after: float


@dataclass
class SimulationOptions:
    n_neg: int = 10
    n_sep: int = 10
    n_pos: int = 10
    n_r: int = 20
    dt: float = 1.0
    kinetics: str = "butler-volmer"
    bc_mode: str = "correct"
    gauge_x: float = 0.0
    gauge_value: float = 0.0
    gauge_phase: str = "solid"
    newton_tol: float = 1e-10
    newton_max_iters: int = 30
    coupling_sweeps: int = 1
    coupling_tol: float = 1e-8
    warm_start: bool = True
    check_invariants: bool = True
    keep_ledger: bool = False
    snapshot_dir: str = None

    @classmethod
    def from_numerics(cls, numerics, **overrides):
        known = {f.name for f in fields(cls)}
        unknown = set(numerics) - known
        if unknown:
            raise ConfigurationError(f"unknown numerics keys: {sorted(unknown)}")
        kw = dict(numerics)
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    @property
    def gauge(self):
        return ch.Gauge(float(self.gauge_x), float(self.gauge_value), self.gauge_phase)


# --------------------------------------------------------------------------
# observables


def soc(state, params, mesh, radial_meshes):
    """Bulk negative-electrode state of charge."""
    rn = radial_meshes[0]
    per_cell = state.cs_neg @ rn.volumes / rn.volume
    return float(np.dot(mesh.widths[mesh.neg], per_cell)) / (params.L1 * params.cs_max_neg)


def cell_voltage(problem, sol, current, params):
    """phi_s(L) - phi_s(0) - Rf I / A, the end values extrapolated with the
    boundary slopes."""
    return (ch.potential_at(problem, sol, params.L) - ch.potential_at(problem, sol, 0.0)
            - params.Rf / params.A * current)


def pack_voltage(v_cell, n_series):
    if n_series < 1:
        raise ValueError("n_series must be >= 1")
    return n_series * v_cell


def total_lithium(state, params, mesh, radial_meshes):
    return (electrolyte_inventory(state.ce, params, mesh)
            + solid_inventory(state.cs_neg, state.cs_pos, params, mesh, radial_meshes))


# --------------------------------------------------------------------------


class Simulation:
    """Owns one cell state and advances it step by step.

    Each step: assemble the charge problem at frozen concentrations, solve
    it, advance electrolyte and solid diffusion with the resulting j field,
    then the temperature. ``coupling_sweeps > 1`` repeats the charge solve
    with the tentative end-of-step concentrations until j settles.
    """

    def __init__(self, params, protocol, initial, options=None):
        self.options = options or SimulationOptions()
        rep = validate(params)
        if not rep.ok:
            raise ConfigurationError(f"invalid parameters:\n{rep}")
        initial.check(params)
        if not self.options.dt > 0:
            raise ConfigurationError("dt must be > 0")
        if ch.BCMode.parse(self.options.bc_mode) is not ch.BCMode.CORRECT:
            raise ConfigurationError("time integration requires bc_mode 'correct'")
        self.params = params
        self.protocol = protocol
        self.mode = KineticsMode.parse(self.options.kinetics)
        o = self.options
        self.mesh, self.radial = build_mesh(params, o.n_neg, o.n_sep, o.n_pos, o.n_r)
        m = self.mesh
        self.state = CellState(
            0.0, initial.ce_on(m.centers),
            np.full((m.n_neg, o.n_r), float(initial.cs0_neg)),
            np.full((m.n_pos, o.n_r), float(initial.cs0_pos)), float(initial.T0))
        self.step_index = 0
        self.records = []
        self.ledger = []
        self.last_problem = None

    @property
    def n_steps(self):
        return max(1, math.ceil(self.protocol.t_end / self.options.dt - 1e-9))

    def assemble(self, state, current):
        return ch.assemble_charge_problem(state, self.params, self.mesh, ch.BCMode.CORRECT,
                                          self.options.gauge, current=current,
                                          radial_meshes=self.radial)

    def solve(self, problem, initial=None):
        o = self.options
        if self.mode is KineticsMode.LINEARIZED:
            return ch.solve_charge_linearized(problem, self.params)
        return ch.solve_charge_newton(problem, self.params, tol=o.newton_tol,
                                      max_iters=o.newton_max_iters, mode=self.mode,
                                      initial=initial if o.warm_start else None)

    def _transport(self, state, j, dt):
        p, m = self.params, self.mesh
        ce = electrolyte_step(state.ce, j, dt, p, m).values
        cs_neg = solid_step(state.cs_neg, j[m.neg], dt, Region.NEGATIVE, p, self.radial[0])
        cs_pos = solid_step(state.cs_pos, j[m.pos], dt, Region.POSITIVE, p, self.radial[1])
        return ce, cs_neg, cs_pos

    def step(self):
        """Advance one step and return its record."""
        p, m, o = self.params, self.mesh, self.options
        s = self.state
        k = self.step_index + 1
        t_new = min(k * o.dt, self.protocol.t_end)
        dt = t_new - s.time
        current = self.protocol.current_at(t_new)

        problem = self.assemble(s, current)
        sol = self.solve(problem, s.phi)
        j = ch.reaction_field(problem, sol, p, self.mode)
        ce, cs_neg, cs_pos = self._transport(s, j, dt)
        for sweep in range(1, o.coupling_sweeps):
            trial = CellState(t_new, ce, cs_neg, cs_pos, s.T)
            problem = self.assemble(trial, current)
            sol = self.solve(problem, sol)
            j_new = ch.reaction_field(problem, sol, p, self.mode)
            change = np.max(np.abs(j_new - j)) / max(np.max(np.abs(j_new)), 1e-300)
            j = j_new
            ce, cs_neg, cs_pos = self._transport(s, j, dt)
            if change < o.coupling_tol:
                break

        heat = heat_sources(problem, sol, j, p, s.T, current)
        T_new = temperature_step(s.T, heat, dt, p)
        new = CellState(t_new, ce, cs_neg, cs_pos, T_new, sol)
        defect = ch.compatibility_defect(problem)
        if o.check_invariants or o.keep_ledger:
            ledger = self._ledger(s, new, j, dt)
            if o.check_invariants:
                self._check(problem, sol, defect, ledger)
            if o.keep_ledger:
                self.ledger.append(ledger)

        v = cell_voltage(problem, sol, current, p)
        rec = TimeSeriesRecord(
            *(float(x) for x in (t_new, current, v, pack_voltage(v, p.n_series),
                                 soc(new, p, m, self.radial), T_new, heat.q_r, heat.q_j,
                                 heat.q_c, heat.q_e, defect)),
            newton_iters=int(sol.newton_iters))
        self.state = new
        self.step_index = k
        self.last_problem = problem
        self.records.append(rec)
        return rec

    def _ledger(self, old, new, j, dt):
        p, m, rad = self.params, self.mesh, self.radial
        e0 = electrolyte_inventory(old.ce, p, m)
        e1 = electrolyte_inventory(new.ce, p, m)
        s0 = solid_inventory(old.cs_neg, old.cs_pos, p, m, rad)
        s1 = solid_inventory(new.cs_neg, new.cs_pos, p, m, rad)
        jw = float(np.dot(j, m.widths))
        return StepLedger(e1 - e0, dt * (1.0 - p.t_plus) / p.F * jw, s1 - s0, -dt / p.F * jw,
                          e0, s0, e0 + s0, e1 + s1)

    def _check(self, problem, sol, defect, lg):
        if defect > 1e-12 * problem.current_scale:
            raise InvariantViolation("compatibility", f"defect {defect:.3e} A/m^2")
        # each phase ledger is judged relative to that phase's inventory
        if abs(lg.electrolyte_change - lg.electrolyte_source) > 1e-12 * lg.electrolyte_before:
            raise InvariantViolation(
                "electrolyte-conservation",
                f"change {lg.electrolyte_change:.6e} vs source {lg.electrolyte_source:.6e}")
        if abs(lg.solid_change - lg.solid_source) > 1e-12 * lg.solid_before:
            raise InvariantViolation(
                "solid-conservation", f"change {lg.solid_change:.6e} vs source {lg.solid_source:.6e}")
        drift = abs(lg.lithium_after - lg.lithium_before) / lg.lithium_before
        if drift > 1e-10:
            raise InvariantViolation("total-lithium", f"relative drift {drift:.3e} in one step")
        g = problem.gauge
        got = ch.potential_at(problem, sol, g.x, g.phase)
        if abs(got - g.value) > 1e-9 * (1.0 + abs(g.value)):
            raise InvariantViolation("gauge", f"pinned potential {got!r} != {g.value!r}")

    def run(self, on_step=None):
        """Step to t_end or a voltage cutoff; returns the list of records.

        ``on_step(sim, record)`` is called after every accepted step.
        """
        cut_lo = self.protocol.cutoff_voltage_low
        cut_hi = self.protocol.cutoff_voltage_high
        while self.step_index < self.n_steps:
            try:
                rec = self.step()
            except CellwellError as exc:
                path = self.dump_snapshot()
                raise SimulationAbort(
                    f"step {self.step_index + 1} failed: {exc}. "
                    "Hint: reduce dt or check the operating protocol.",
                    self.step_index + 1, path, exc) from exc
            if on_step is not None:
                on_step(self, rec)
            reason = ""
            if cut_lo is not None and rec.V < cut_lo:
                reason = "cutoff_voltage_low"
            elif cut_hi is not None and rec.V > cut_hi:
                reason = "cutoff_voltage_high"
            if reason:
                self.records[-1] = replace(rec, stop_reason=reason)
                log.info("stopped at t = %g s: %s", rec.t, reason)
                break
        else:
            if self.records:
                self.records[-1] = replace(self.records[-1], stop_reason="t_end")
        return self.records

    def dump_snapshot(self):
        """Write the full state as JSON into ``snapshot_dir``; returns the path."""
        if not self.options.snapshot_dir:
            return None
        path = Path(self.options.snapshot_dir) / f"abort_state_step{self.step_index + 1}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(state_to_dict(self.state), indent=1))
        return str(path)


def state_to_dict(state):
    d = {"time": state.time, "T": state.T, "ce": np.asarray(state.ce).tolist(),
         "cs_neg": np.asarray(state.cs_neg).tolist(), "cs_pos": np.asarray(state.cs_pos).tolist()}
    if state.phi is not None:
        d["phi_e"] = state.phi.phi_e.tolist()
        d["phi_s"] = state.phi.phi_s.tolist()
    return d


def run(params, protocol, initial, options=None):
    return Simulation(params, protocol, initial, options).run()
