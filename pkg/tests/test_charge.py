import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cellwell import charge as ch
from cellwell.errors import IllPosedError, NonConvergenceError
from cellwell.mesh import build_mesh
from cellwell.params import load_config

from conftest import graded_problem, uniform_problem

P = load_config().cell
MESH30, _ = build_mesh(P, 10, 10, 10, 4)
MESH12, _ = build_mesh(P, 4, 4, 4, 4)


# --------------------------------------------------------------------------
# compatibility


@pytest.mark.parametrize("current", [0.1, 1.0, 10.0])
def test_compatibility_defect_by_mode(current):
    p1 = P.replace(A=1.0)
    assert ch.compatibility_defect(uniform_problem(p1, MESH30, current)) <= 1e-14 * current
    for mode in ("wrong-smith", "wrong-gomadam"):
        prob = uniform_problem(p1, MESH30, current, mode)
        assert ch.compatibility_defect(prob) == pytest.approx(2 * current, rel=1e-12)
        with pytest.raises(IllPosedError) as info:
            ch.solve_charge_newton(prob, p1)
        assert info.value.defect == pytest.approx(2 * current, rel=1e-12)
        with pytest.raises(IllPosedError):
            ch.solve_charge_linearized(prob, p1)


def test_wrong_modes_consistent_only_at_zero_current():
    for mode in ("wrong-smith", "wrong-gomadam"):
        assert ch.compatibility_defect(uniform_problem(P, MESH30, 0.0, mode)) == 0.0


def test_compatibility_sides_equal_current_density():
    lhs, rhs = ch.compatibility_sides(uniform_problem(P, MESH30, 0.5))
    assert lhs == pytest.approx(0.5 / P.A, rel=1e-14)
    assert rhs == pytest.approx(0.5 / P.A, rel=1e-14)


# --------------------------------------------------------------------------
# Newton solve


def test_equilibrium_is_an_exact_root():
    prob = uniform_problem(P, MESH30, 0.0)
    sol = ch.solve_charge_newton(prob, P)
    assert sol.newton_iters == 0
    assert np.max(np.abs(sol.eta)) <= 1e-15
    assert np.max(np.abs(ch.reaction_field(prob, sol, P))) <= 1e-9


def test_gauge_value_shifts_everything_uniformly():
    prob0 = graded_problem(P, MESH30, 2.0, ch.Gauge(0.0, 0.0))
    prob7 = graded_problem(P, MESH30, 2.0, ch.Gauge(0.0, 0.7))
    s0 = ch.solve_charge_newton(prob0, P)
    s7 = ch.solve_charge_newton(prob7, P)
    assert np.max(np.abs(s7.phi_e - s0.phi_e - 0.7)) <= 1e-9
    assert np.max(np.abs(s7.phi_s - s0.phi_s - 0.7)) <= 1e-9
    ec = np.r_[np.arange(10), np.arange(20, 30)]
    np.testing.assert_allclose(s7.phi_s - s7.phi_e[ec], s0.phi_s - s0.phi_e[ec], rtol=0, atol=1e-10)


def test_electrolyte_gauge_and_interior_points():
    for gauge in (ch.PinElectrolyteAt(P.L / 2, 0.25), ch.PinSolidAt(P.L, 4.0),
                  ch.PinSolidAt(P.L1 / 3, -1.0)):
        prob = graded_problem(P, MESH30, 1.0, gauge)
        sol = ch.solve_charge_newton(prob, P)
        assert ch.potential_at(prob, sol, gauge.x, gauge.phase) == pytest.approx(
            gauge.value, abs=1e-12)


def test_solid_gauge_in_separator_rejected():
    prob = uniform_problem(P, MESH30, 1.0, gauge=ch.PinSolidAt(P.L1 + P.delta / 2))
    with pytest.raises(ValueError):
        ch.solve_charge_newton(prob, P)


@pytest.mark.parametrize("current", [-5.0, -0.5, 0.5, 5.0])
def test_divergence_identities_hold(current):
    prob = graded_problem(P, MESH30, current)
    sol = ch.solve_charge_newton(prob, P)
    scale = max(1.0, abs(current) / P.A)
    total, neg, pos = ch.divergence_identities(prob, sol, P)
    # the electrode identities are compared in current-density form
    assert abs(total) <= 1e-9 * scale
    assert abs(neg) * prob.sigma_eff_neg <= 1e-9 * scale
    assert abs(pos) * prob.sigma_eff_pos <= 1e-9 * scale


def test_residual_small_after_solve():
    prob = graded_problem(P, MESH30, 3.0)
    sol = ch.solve_charge_newton(prob, P)
    assert sol.final_residual_norm <= 1e-10 * 3.0 / P.A
    assert ch.relative_residual(prob, sol, P) <= 1e-12


def test_quadratic_contraction():
    prob = graded_problem(P, MESH30, 5.0)
    sol = ch.solve_charge_newton(prob, P, tol=1e-12)
    h = np.array(sol.history)
    # iterates well above round-off contract like r_{k+1} <= C r_k^2
    usable = [(a, b) for a, b in zip(h[:-1], h[1:]) if b > 1e-8]
    assert len(usable) >= 2
    ratios = [b / a ** 2 for a, b in usable]
    assert max(ratios) < 1.0
    assert h[-1] < h[0] * 1e-10


def test_unreachable_tolerance_reports_nonconvergence():
    # below the round-off floor of the residual the line search cannot progress
    prob = graded_problem(P, MESH30, 1e-3)
    with pytest.raises(NonConvergenceError):
        ch.solve_charge_newton(prob, P, tol=1e-16)


def test_iteration_cap_raises_with_history():
    prob = graded_problem(P, MESH30, 5.0)
    with pytest.raises(NonConvergenceError) as info:
        ch.solve_charge_newton(prob, P, max_iters=1)
    assert len(info.value.history) == 2


def test_warm_start_reaches_same_root():
    prob = graded_problem(P, MESH30, 2.0)
    cold = ch.solve_charge_newton(prob, P)
    warm = ch.solve_charge_newton(prob, P, initial=cold)
    assert warm.newton_iters == 0
    np.testing.assert_allclose(warm.phi_s, cold.phi_s, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-8.0, 8.0), st.floats(-3.0, 3.0))
def test_solutions_satisfy_compatibility(current, value):
    prob = graded_problem(P, MESH30, current, ch.Gauge(0.0, value))
    sol = ch.solve_charge_newton(prob, P)
    total, _, _ = ch.divergence_identities(prob, sol, P)
    assert abs(total) <= 1e-9 * max(1.0, abs(current) / P.A)
    assert ch.potential_at(prob, sol, 0.0) == pytest.approx(value, abs=1e-12)


# --------------------------------------------------------------------------
# linearized construction


def _oracle(current, ce, cs_neg, cs_pos, T, mesh):
    """Independent assembly of the linearized system with explicit loops,
    solved by dense least squares with the mean-zero row appended."""
    n = mesh.n
    w = mesh.widths
    x = mesh.centers
    regions = [r.value for r in mesh.regions]
    eps_e = {"negative": P.eps_e_neg, "separator": P.eps_e_sep, "positive": P.eps_e_pos}
    kap = np.array([eps_e[regions[i]] ** P.p * np.polynomial.polynomial.polyval(
        ce[i], P.kappa_coeffs) for i in range(n)])
    nu = (1 - 2 * P.t_plus) * P.R_gas * T / P.F
    s = (P.alpha_a + P.alpha_c) * P.F / (P.R_gas * T)
    elec = [i for i in range(n) if regions[i] != "separator"]
    ne = len(elec)
    N = n + ne
    M = np.zeros((N, N))
    rhs = np.zeros(N)
    # electrolyte rows: (kappa u')' - (kappa nu (ln c)')' + j = 0, zero flux at ends
    for i in range(n - 1):
        g = 1.0 / (w[i] / (2 * kap[i]) + w[i + 1] / (2 * kap[i + 1]))
        drift = nu * g * (np.log(ce[i + 1]) - np.log(ce[i]))
        for a, b, sign in ((i, i + 1, 1.0), (i + 1, i, -1.0)):
            M[a, a] -= g
            M[a, b] += g
            rhs[a] += sign * drift
    info = {}
    for k, i in enumerate(elec):
        reg = regions[i]
        if reg == "negative":
            cs, cmax, eps_s, Rs, kk, curve = cs_neg[k], P.cs_max_neg, P.eps_s_neg, P.Rs_neg, P.k_neg, P.ocv_neg
        else:
            cs, cmax, eps_s, Rs, kk, curve = (cs_pos[k - mesh.n_neg], P.cs_max_pos, P.eps_s_pos,
                                              P.Rs_pos, P.k_pos, P.ocv_pos)
        i0 = kk * ce[i] ** P.alpha_a * (cmax - cs) ** P.alpha_a * cs ** P.alpha_c
        U = float(curve.u(cs / cmax) + curve.dudt(cs / cmax) * (T - P.T_ref))
        c = 3 * eps_s / Rs * i0 * s * w[i]     # w j = c (v - u - U)
        info[k] = (i, reg, eps_s)
        M[i, n + k] += c
        M[i, i] -= c
        rhs[i] += c * U
        M[n + k, n + k] -= c
        M[n + k, i] += c
        rhs[n + k] -= c * U
    # solid rows: sigma v'' = j, with -v'(0) = d-, v'(L) = -d+, insulated at the separator
    for region, sig, eps_s in (("negative", P.sigma_neg, P.eps_s_neg),
                               ("positive", P.sigma_pos, P.eps_s_pos)):
        ks = [k for k in range(ne) if info[k][1] == region]
        se = sig * eps_s
        for a, b in zip(ks[:-1], ks[1:]):
            ia, ib = info[a][0], info[b][0]
            g = se / (x[ib] - x[ia])
            M[n + a, n + a] -= g
            M[n + a, n + b] += g
            M[n + b, n + b] -= g
            M[n + b, n + a] += g
        d = current / (P.A * se)
        if region == "negative":
            rhs[n + ks[0]] += -se * d       # sigma v'(0) = -sigma d-
        else:
            rhs[n + ks[-1]] += se * d       # -sigma v'(L) = sigma d+
    # mean-zero constraint on u, scaled like the operator
    row = np.zeros(N)
    row[:n] = w * np.max(np.abs(M)) / np.max(w)
    sol = np.linalg.lstsq(np.vstack([M, row]), np.append(rhs, 0.0), rcond=None)[0]
    return sol[:n], sol[n:]


def _fields12():
    x = MESH12.centers / P.L
    ce = 1000.0 * (1.0 + 0.3 * np.cos(np.pi * x))
    cs_neg = P.cs_max_neg * (0.75 + 0.1 * x[MESH12.neg])
    cs_pos = P.cs_max_pos * (0.35 + 0.2 * x[MESH12.pos])
    return ce, cs_neg, cs_pos, 300.0


@pytest.mark.parametrize("current", [0.05, 0.5, -2.0])
def test_linearized_matches_dense_oracle(current):
    ce, cs_neg, cs_pos, T = _fields12()
    prob = ch.assemble_from_fields(ce, cs_neg, cs_pos, T, current, P, MESH12)
    mz = ch.mean_zero_solution(prob, P)
    u_ref, v_ref = _oracle(current, ce, cs_neg, cs_pos, T, MESH12)
    assert abs(np.dot(MESH12.widths, mz.phi_e)) <= 1e-12 * P.L
    np.testing.assert_allclose(mz.phi_e, u_ref, rtol=0, atol=1e-10)
    np.testing.assert_allclose(mz.phi_s, v_ref, rtol=0, atol=1e-10)


def test_linearized_multiplier_vanishes_and_shift_keeps_residual():
    ce, cs_neg, cs_pos, T = _fields12()
    prob = ch.assemble_from_fields(ce, cs_neg, cs_pos, T, 1.0, P, MESH12,
                                   gauge=ch.Gauge(0.0, 0.3))
    sol = ch.solve_charge_linearized(prob, P)
    assert abs(sol.multiplier) <= 1e-8 * max(1.0, 1.0 / P.A)
    assert ch.potential_at(prob, sol, 0.0) == pytest.approx(0.3, abs=1e-12)
    assert ch.relative_residual(prob, sol, P, "linearized") <= 1e-10
    for gamma in (-2.0, 0.7, 11.0):
        shifted = ch.gauge_shift(sol, gamma)
        np.testing.assert_array_equal(shifted.eta, sol.eta)
        assert ch.relative_residual(prob, shifted, P, "linearized") <= 1e-10


def test_linearized_agrees_with_newton_at_small_current():
    # graded concentrations drive internal currents (eta ~ 1e-2 V) even at
    # I = 0, so the small-overpotential regime needs uniform fields
    prob = uniform_problem(P, MESH30, 1e-3)
    lin = ch.solve_charge_linearized(prob, P)
    bv = ch.solve_charge_newton(prob, P)
    assert np.max(np.abs(bv.eta)) < 1e-4
    assert np.max(np.abs(lin.phi_e - bv.phi_e)) <= 1e-6
    assert np.max(np.abs(lin.phi_s - bv.phi_s)) <= 1e-6
