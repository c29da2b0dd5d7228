"""Command-line entry point: ``cellwell run | diagnose | validate-config``.

Exit codes: 0 success, 2 configuration or assembly problem, 3 solver abort.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import charge as ch
from .errors import CellwellError, ConfigurationError, SimulationAbort
from .mesh import build_mesh
from .params import Protocol, load_config, protocol_from_mapping, read_mapping, validate
from .simulate import CSV_COLUMNS, CellState, Simulation, SimulationOptions
from .transport import surface_concentration

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

SNAPSHOT_COLUMNS = ("x", "region", "c_e", "phi_e", "phi_s", "c_s_surface")

log = logging.getLogger("cellwell")


def _fmt(x):
    return format(x, ".17g")


def write_timeseries(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(v) if isinstance(v, float) else str(v) for v in r.row()])


def write_spatial_snapshot(path, sim):
    """One row per macro cell; solid columns are empty in the separator."""
    m, s = sim.mesh, sim.state
    cs_neg = surface_concentration(s.cs_neg, sim.radial[0])
    cs_pos = surface_concentration(s.cs_pos, sim.radial[1])
    phi = s.phi
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SNAPSHOT_COLUMNS)
        k = 0
        for i in range(m.n):
            region = m.regions[i]
            if region.is_electrode:
                solid = [_fmt(float(phi.phi_s[k])),
                         _fmt(float(cs_neg[k] if k < m.n_neg else cs_pos[k - m.n_neg]))]
                k += 1
            else:
                solid = ["", ""]
            w.writerow([_fmt(float(m.centers[i])), region.value, _fmt(float(s.ce[i])),
                        _fmt(float(phi.phi_e[i]))] + solid)


# --------------------------------------------------------------------------


def _build_parser():
    p = argparse.ArgumentParser(prog="cellwell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON or TOML config (default: bundled cell)")
        sp.add_argument("--protocol", help="JSON or TOML file holding a protocol table")
        sp.add_argument("--current", type=float, help="constant current (A), overrides the protocol")
        sp.add_argument("--duration", type=float, help="duration (s) of the constant-current protocol")
        sp.add_argument("--kinetics", choices=["butler-volmer", "linearized"])
        sp.add_argument("--gauge-x", type=float)
        sp.add_argument("--gauge-value", type=float)
        sp.add_argument("--newton-tol", type=float)
        sp.add_argument("--newton-max-iters", type=int)
        for name in ("n-neg", "n-sep", "n-pos", "n-r"):
            sp.add_argument(f"--{name}", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--coupling-sweeps", type=int)

    r = sub.add_parser("run", help="integrate the protocol and write CSV output")
    common(r)
    r.add_argument("--bc-mode", default="correct", choices=[m.value for m in ch.BCMode])
    r.add_argument("--output", default="cellwell_out", help="output directory")
    r.add_argument("--snapshot-every", type=int, default=0,
                   help="write snapshot_<step>.csv every N steps (0: never)")

    d = sub.add_parser("diagnose", help="check well-posedness of the charge system")
    common(d)
    d.add_argument("--bc-mode", default="correct", choices=[m.value for m in ch.BCMode])

    v = sub.add_parser("validate-config", help="validate a config file")
    common(v)
    return p


def _load(args):
    """Config, protocol and options from the parsed arguments."""
    cfg = load_config(args.config)
    protocol = cfg.protocol
    if args.protocol:
        d = read_mapping(args.protocol)
        protocol = protocol_from_mapping(d.get("protocol", d))
    if args.current is not None or args.duration is not None:
        duration = args.duration if args.duration is not None else protocol.t_end
        current = args.current if args.current is not None else protocol.current_at(0.0)
        protocol = Protocol.constant(current, duration,
                                     cutoff_voltage_low=protocol.cutoff_voltage_low,
                                     cutoff_voltage_high=protocol.cutoff_voltage_high)
    overrides = {k: getattr(args, k, None) for k in (
        "kinetics", "gauge_x", "gauge_value", "newton_tol", "newton_max_iters", "n_neg",
        "n_sep", "n_pos", "n_r", "dt", "coupling_sweeps")}
    try:
        options = SimulationOptions.from_numerics(cfg.numerics, **overrides)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    if not options.dt > 0:
        raise ConfigurationError("dt must be > 0")
    if not 1 <= options.coupling_sweeps <= 5:
        raise ConfigurationError("coupling_sweeps must be between 1 and 5")
    report = validate(cfg.cell)
    if not report.ok:
        raise ConfigurationError(f"invalid cell parameters:\n{report}")
    cfg.initial.check(cfg.cell)
    return cfg, protocol, options


def cmd_run(args):
    try:
        if args.bc_mode != "correct":
            raise ConfigurationError("run requires --bc-mode correct; use diagnose for wrong modes")
        cfg, protocol, options = _load(args)
        if args.snapshot_every < 0:
            raise ConfigurationError("--snapshot-every must be >= 0")
        out = Path(args.output)
        options.snapshot_dir = str(out)
        sim = Simulation(cfg.cell, protocol, cfg.initial, options)
    except CellwellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG

    def snapshot(sim, rec):
        if args.snapshot_every and sim.step_index % args.snapshot_every == 0:
            write_spatial_snapshot(out / f"snapshot_{sim.step_index}.csv", sim)

    status = EXIT_OK
    try:
        records = sim.run(on_step=snapshot)
        if records and records[-1].stop_reason.startswith("cutoff"):
            log.warning("voltage cutoff reached at t = %g s (%s)", records[-1].t,
                        records[-1].stop_reason)
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.snapshot_path:
            print(f"state snapshot: {exc.snapshot_path}", file=sys.stderr)
        status = EXIT_SOLVER
    write_timeseries(out / "timeseries.csv", sim.records)
    log.info("wrote %d records to %s", len(sim.records), out / "timeseries.csv")
    return status


def _diagnostics_table(problem):
    lhs, rhs = ch.compatibility_sides(problem)
    defect = ch.compatibility_defect(problem)
    if defect <= 1e-12 * problem.current_scale:
        if problem.bc_mode is ch.BCMode.CORRECT:
            verdict = "well-posed (compatibility holds)"
        else:
            verdict = ("compatible only because I = 0; with these boundary data "
                       "no solution exists unless I(t) = 0")
    else:
        verdict = "no solution exists unless I(t) = 0 (compatibility violated)"
    rows = [("bc mode", problem.bc_mode.value),
            ("applied current / area (A/m^2)", _fmt(problem.applied_current_over_area)),
            ("k- d- / q- (A/m^2)", _fmt(lhs)),
            ("k+ d+ / q+ (A/m^2)", _fmt(rhs)),
            ("compatibility defect (A/m^2)", _fmt(defect)),
            ("verdict", verdict)]
    return rows, defect


def cmd_diagnose(args):
    try:
        cfg, protocol, options = _load(args)
        mesh, radial = build_mesh(cfg.cell, options.n_neg, options.n_sep, options.n_pos,
                                  options.n_r)
        state = CellState(0.0, cfg.initial.ce_on(mesh.centers),
                          np.full((mesh.n_neg, options.n_r), cfg.initial.cs0_neg),
                          np.full((mesh.n_pos, options.n_r), cfg.initial.cs0_pos),
                          cfg.initial.T0)
        current = protocol.current_at(0.0)
        problem = ch.assemble_charge_problem(state, cfg.cell, mesh, args.bc_mode, options.gauge,
                                             current=current, radial_meshes=radial)
    except CellwellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    rows, _ = _diagnostics_table(problem)
    if problem.bc_mode is ch.BCMode.CORRECT:
        try:
            g = options.gauge
            kw = dict(mode=options.kinetics, tol=options.newton_tol,
                      max_iters=options.newton_max_iters)
            s0 = ch.solve_charge(problem, cfg.cell, **kw)
            shifted = replace(problem, gauge=ch.Gauge(g.x, g.value + 0.7, g.phase))
            s1 = ch.solve_charge(shifted, cfg.cell, **kw)
        except CellwellError as exc:
            print(f"error: solve failed: {exc}", file=sys.stderr)
            return EXIT_SOLVER
        dev = max(np.max(np.abs(s1.phi_e - s0.phi_e - 0.7)),
                  np.max(np.abs(s1.phi_s - s0.phi_s - 0.7)))
        rows.append(("gauge check: max |offset - 0.7 V| (V)", _fmt(float(dev))))
        rows.append(("gauge check", "unique up to a constant" if dev <= 1e-9 else "FAILED"))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return EXIT_OK


def cmd_validate_config(args):
    try:
        cfg, protocol, options = _load(args)
        build_mesh(cfg.cell, options.n_neg, options.n_sep, options.n_pos, options.n_r)
    except CellwellError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: L = {cfg.cell.L:.6g} m, t_end = {protocol.t_end:g} s, "
          f"{options.n_neg}/{options.n_sep}/{options.n_pos} cells, {options.n_r} shells")
    return EXIT_OK


def _setup_logging():
    level = os.environ.get("CELLWELL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = _build_parser().parse_args(argv)
    handler = {"run": cmd_run, "diagnose": cmd_diagnose,
               "validate-config": cmd_validate_config}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
