"""Linearized kinetics: a mean-zero solution, then a gauge shift.

With j linear in eta, the charge system is singular only in the constant
mode. We solve it with a mean-zero constraint (a bordered system). Then we
shift the result so that the gauge condition holds. At small current the
result matches the full Butler-Volmer solve.
"""

import numpy as np

from cellwell import charge as ch
from cellwell.mesh import build_mesh
from cellwell.params import load_config
from cellwell.simulate import CellState

cfg = load_config()
p = cfg.cell
mesh, radial = build_mesh(p, 10, 10, 10, 8)
state = CellState(0.0, np.full(mesh.n, cfg.initial.ce0),
                  np.full((mesh.n_neg, 8), cfg.initial.cs0_neg),
                  np.full((mesh.n_pos, 8), cfg.initial.cs0_pos), cfg.initial.T0)

for current in (1e-4, 1e-3, 1e-2, 1e-1):
    prob = ch.assemble_charge_problem(state, p, mesh, "correct", ch.Gauge(0.0, 0.0),
                                      current=current, radial_meshes=radial)
    mz = ch.mean_zero_solution(prob, p)
    lin = ch.solve_charge_linearized(prob, p)
    bv = ch.solve_charge_newton(prob, p)
    w = mesh.widths
    print(f"I = {current:7.0e} A: mean phi_e of mean-zero solve {np.dot(w, mz.phi_e) / p.L:+.1e}, "
          f"residual {ch.relative_residual(prob, lin, p, 'linearized'):.1e}, "
          f"max|eta| {np.max(np.abs(bv.eta)):.1e} V, "
          f"|lin - BV| {max(np.max(np.abs(lin.phi_e - bv.phi_e)), np.max(np.abs(lin.phi_s - bv.phi_s))):.1e} V")
