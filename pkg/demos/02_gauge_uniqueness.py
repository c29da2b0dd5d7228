"""Potentials are fixed only up to a shared constant.

Both phases appear in the equations only through gradients and the
difference phi_s - phi_e. Adding a constant to both changes nothing. The
gauge row picks one representative. Two solves with different gauge values
differ by exactly that constant, and v - u does not change.
"""

import numpy as np

from cellwell import charge as ch
from cellwell.params import load_config
from cellwell.simulate import Simulation, SimulationOptions

cfg = load_config()
sim = Simulation(cfg.cell, cfg.protocol, cfg.initial, SimulationOptions())
for _ in range(600):   # let the concentrations develop some structure
    sim.step()

current = cfg.protocol.current_at(sim.state.time)
sols = {}
for value in (0.0, 0.7, -3.0):
    prob = ch.assemble_charge_problem(sim.state, cfg.cell, sim.mesh, "correct",
                                      ch.Gauge(0.0, value), current=current,
                                      radial_meshes=sim.radial)
    sols[value] = ch.solve_charge_newton(prob, cfg.cell)

ref = sols[0.0]
for value, s in sols.items():
    off_e = s.phi_e - ref.phi_e
    off_s = s.phi_s - ref.phi_s
    print(f"gauge {value:+.1f} V: phi_e shift in [{off_e.min():+.12f}, {off_e.max():+.12f}], "
          f"phi_s shift in [{off_s.min():+.12f}, {off_s.max():+.12f}], "
          f"max |d eta| = {np.max(np.abs(s.eta - ref.eta)):.1e} V")
