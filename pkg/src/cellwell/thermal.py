"""Heat sources and the lumped temperature balance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Region


@dataclass(frozen=True)
class HeatBreakdown:
    q_r: float
    q_j: float
    q_c: float
    q_e: float
    convective_loss: float

    @property
    def sources(self):
        return self.q_r + self.q_j + self.q_c + self.q_e


def heat_sources(problem, sol, j_field, params, T, current):
    """Reaction, ohmic, contact and entropic heat (W) for a converged solve.

    Gradients are taken at cell faces; the half cells next to x = 0 and
    x = L use the boundary slope. The electrolyte integral runs over (0, L),
    separator included.
    """
    m = problem.mesh
    w = m.widths
    A = params.A
    j = np.asarray(j_field, dtype=float)
    nn = m.n_neg
    eta = sol.eta
    j_e = np.concatenate([j[m.neg], j[m.pos]])
    w_e = np.concatenate([w[m.neg], w[m.pos]])

    q_r = A * float(np.dot(w_e, j_e * eta))

    # solid: sigma_eff * int (phi_s')^2 dx
    def solid_term(phi, widths, sigma_eff, left_slope, right_slope):
        h = 0.5 * (widths[:-1] + widths[1:])
        g = np.diff(phi) / h
        return sigma_eff * (float(np.dot(h, g * g)) + 0.5 * widths[0] * left_slope ** 2
                            + 0.5 * widths[-1] * right_slope ** 2)

    q_solid = (solid_term(sol.phi_s[:nn], w[m.neg], problem.sigma_eff_neg, -problem.d_neg, 0.0)
               + solid_term(sol.phi_s[nn:], w[m.pos], problem.sigma_eff_pos, 0.0, -problem.d_pos))

    h = np.diff(m.centers)
    gu = np.diff(sol.phi_e) / h
    # log_drift holds nu r d(ln c)/dx, and (2 t+ - 1) R T / F = -nu
    q_elec = float(np.dot(h, problem.r_face * gu * gu - problem.log_drift * gu))
    q_j = A * (q_solid + q_elec)

    q_c = current ** 2 * params.Rf / A

    q_e = 0.0
    for region, sl, y in ((Region.NEGATIVE, m.neg, problem.y_surf_neg),
                          (Region.POSITIVE, m.pos, problem.y_surf_pos)):
        q_e += float(np.dot(w[sl], j[sl] * params.ocv(region).dudt(y)))
    q_e *= T * A

    return HeatBreakdown(q_r, q_j, q_c, q_e, params.h * params.As * (T - params.T_amb))


def temperature_step(T, heat, dt, params):
    """Backward Euler with implicit convection and explicit sources.

    Written for the deviation from ambient so that T = T_amb with zero
    sources is reproduced exactly rather than to within rounding.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    mc = params.M * params.Cp
    hA = params.h * params.As
    return params.T_amb + (T - params.T_amb + dt * heat.sources / mc) / (1.0 + dt * hA / mc)
