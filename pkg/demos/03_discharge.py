"""A constant-current discharge with the bundled cell.

Prints voltage, state of charge, temperature and the heat split every ten
minutes, then checks the lithium inventory.
"""

from cellwell.params import load_config
from cellwell.simulate import Simulation, SimulationOptions, total_lithium

cfg = load_config()
opts = SimulationOptions.from_numerics(cfg.numerics)
sim = Simulation(cfg.cell, cfg.protocol, cfg.initial, opts)
li0 = total_lithium(sim.state, cfg.cell, sim.mesh, sim.radial)

print(f"{'t (s)':>7}{'V':>10}{'SOC':>9}{'T (K)':>10}{'q_r (W)':>11}{'q_j (W)':>11}"
      f"{'q_c (W)':>11}{'iters':>6}")
for rec in sim.run():
    if rec.t % 600 == 0 or rec.stop_reason:
        print(f"{rec.t:>7g}{rec.V:>10.5f}{rec.SOC:>9.5f}{rec.T:>10.4f}{rec.q_r:>11.3e}"
              f"{rec.q_j:>11.3e}{rec.q_c:>11.3e}{rec.newton_iters:>6d}")

li1 = total_lithium(sim.state, cfg.cell, sim.mesh, sim.radial)
print(f"\nstop: {sim.records[-1].stop_reason}; relative lithium drift {abs(li1 - li0) / li0:.1e}")
