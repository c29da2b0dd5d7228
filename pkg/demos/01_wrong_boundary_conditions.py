"""Why two common boundary setups for the charge system have no solution.

Integrating both potential equations over the cell gives a solvability
condition that ties the boundary fluxes together. With the correct data the
two sides agree for any current. The "wrong" setups put the same sign on the
solid-phase flux at both current collectors, and the two sides then differ by
2|I|/A. So a solution exists only when I = 0.
"""

from cellwell import charge as ch
from cellwell.errors import IllPosedError
from cellwell.mesh import build_mesh
from cellwell.params import load_config
from cellwell.simulate import CellState, SimulationOptions

import numpy as np

cfg = load_config()
p = cfg.cell.replace(A=1.0)
mesh, radial = build_mesh(p, 10, 10, 10, 8)
state = CellState(0.0, cfg.initial.ce_on(mesh.centers),
                  np.full((mesh.n_neg, 8), cfg.initial.cs0_neg),
                  np.full((mesh.n_pos, 8), cfg.initial.cs0_pos), cfg.initial.T0)

print(f"{'mode':<15}{'I (A)':>8}{'lhs':>14}{'rhs':>14}{'defect':>12}")
for mode in ch.BCMode:
    for current in (0.0, 0.1, 1.0, 10.0):
        prob = ch.assemble_charge_problem(state, p, mesh, mode, SimulationOptions().gauge,
                                          current=current, radial_meshes=radial)
        lhs, rhs = ch.compatibility_sides(prob)
        print(f"{mode.value:<15}{current:>8g}{lhs:>14.6g}{rhs:>14.6g}"
              f"{ch.compatibility_defect(prob):>12.3g}")

prob = ch.assemble_charge_problem(state, p, mesh, "wrong-smith", SimulationOptions().gauge,
                                  current=1.0, radial_meshes=radial)
try:
    ch.solve_charge_newton(prob, p)
except IllPosedError as exc:
    print("\nsolver refuses the wrong mode:", exc)
