"""Conservation of charge: the coupled phi_e / phi_s system at frozen concentrations.

Unknowns are cell values of the electrolyte potential ``u`` on every macro
cell and of the solid potential ``v`` on electrode cells. Internally the
solvers work with perturbations::

    u = gamma + eu,      v = f + gamma + ev,      eta = ev - eu

where ``f`` is the equilibrium potential and ``gamma`` the gauge constant.
The constant drops out of every equation, so the iteration never forms
large-magnitude differences and the residual floor stays far below the
tolerances used here. ``gamma`` is fixed at the end from the gauge.

Residual rows are integrated over a cell and carry units of A/m^2. The solid
rows are multiplied by eps_s sigma, which makes the Jacobian symmetric and
turns the row sums into the discrete electrode-current balances.
"""

from __future__ import annotations

import enum
import functools
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import AssemblyError, CellwellError, IllPosedError, KineticOverflowError, NonConvergenceError
from .kinetics import KineticsMode, clamp_concentrations, equilibrium_potential, rate_factor
from .params import Region
from .transport import _memo, cell_property, face_conductance, surface_concentration

log = logging.getLogger(__name__)


class BCMode(enum.Enum):
    CORRECT = "correct"
    WRONG_SMITH = "wrong-smith"
    WRONG_GOMADAM = "wrong-gomadam"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError:
            raise ValueError(f"unknown boundary-condition mode {value!r}") from None


@dataclass(frozen=True)
class Gauge:
    """Reference value ``value`` imposed on one phase potential at ``x``."""

    x: float = 0.0
    value: float = 0.0
    phase: str = "solid"


def PinSolidAt(x=0.0, value=0.0):
    return Gauge(x, value, "solid")


def PinElectrolyteAt(x=0.0, value=0.0):
    return Gauge(x, value, "electrolyte")


@dataclass(frozen=True)
class ChargeProblem:
    mesh: object
    r_cell: np.ndarray      # eps_e^p kappa per cell, S/m
    r_face: np.ndarray      # harmonic face value, S/m
    r_cond: np.ndarray      # r_face / h_face, S/m^2
    nu: float               # (1 - 2 t+) R T / F, V
    log_drift: np.ndarray   # nu r d(ln c)/dx at interior faces, A/m^2
    b_neg: np.ndarray
    b_pos: np.ndarray
    f_neg: np.ndarray       # equilibrium potential, V
    f_pos: np.ndarray
    k_neg: float
    k_pos: float
    q_neg: float
    q_pos: float
    d_neg: float            # -dv/dx(0) = d_neg, V/m
    d_pos: float            # dv/dx(L) = -d_pos, V/m
    sigma_eff_neg: float
    sigma_eff_pos: float
    applied_current_over_area: float
    T: float
    y_surf_neg: np.ndarray  # surface stoichiometry used for f and b
    y_surf_pos: np.ndarray
    bc_mode: BCMode = BCMode.CORRECT
    gauge: Gauge = field(default_factory=Gauge)

    @property
    def f(self):
        return np.concatenate([self.f_neg, self.f_pos])

    @property
    def current_scale(self):
        return max(1.0, abs(self.applied_current_over_area))


@dataclass(frozen=True)
class PotentialSolution:
    phi_e: np.ndarray       # every macro cell
    phi_s: np.ndarray       # negative cells then positive cells
    eta: np.ndarray         # overpotential on the same cells as phi_s
    n_neg: int
    newton_iters: int = 0
    final_residual_norm: float = 0.0
    converged: bool = True
    history: tuple = ()
    multiplier: float = 0.0

    @property
    def phi_s_neg(self):
        return self.phi_s[:self.n_neg]

    @property
    def phi_s_pos(self):
        return self.phi_s[self.n_neg:]


# --------------------------------------------------------------------------
# assembly


def assemble_charge_problem(state, params, mesh, bc_mode=BCMode.CORRECT, gauge=None, *,
                            current, radial_meshes):
    """Freeze coefficients of the charge system from ``state``.

    ``state`` needs ``ce`` (cell array), ``cs_neg`` / ``cs_pos`` (radial
    profiles per electrode cell) and ``T``.
    """
    cs_surf_neg = surface_concentration(state.cs_neg, radial_meshes[0])
    cs_surf_pos = surface_concentration(state.cs_pos, radial_meshes[1])
    ce = state.ce.values if hasattr(state.ce, "values") else state.ce
    return assemble_from_fields(ce, cs_surf_neg, cs_surf_pos, state.T, current, params, mesh,
                                bc_mode, gauge)


def assemble_from_fields(ce, cs_surf_neg, cs_surf_pos, T, current, params, mesh,
                         bc_mode=BCMode.CORRECT, gauge=None):
    bc_mode = BCMode.parse(bc_mode)
    gauge = Gauge() if gauge is None else gauge
    ce = np.asarray(ce, dtype=float)
    if np.any(ce <= 0):
        raise AssemblyError("electrolyte concentration must be positive")
    kappa = params.kappa(ce, T)
    if np.any(~(kappa > 0)):
        raise AssemblyError(f"non-positive electrolyte conductivity (min {np.min(kappa):.3e} S/m)")
    eps_p = _memo(mesh, "eps_e_p", lambda: cell_property(params, mesh, "eps_e") ** params.p, params)
    r_cell = eps_p * kappa
    r_cond = face_conductance(r_cell, mesh.widths)
    h_face = np.diff(mesh.centers)
    nu = params.nu(T)
    log_drift = nu * r_cond * np.diff(np.log(ce))

    ce_scale = float(np.max(ce))
    bs, fs, ys = [], [], []
    for region, sl, cs_surf in ((Region.NEGATIVE, mesh.neg, cs_surf_neg),
                                (Region.POSITIVE, mesh.pos, cs_surf_pos)):
        cs_max = params.by_region("cs_max", region)
        ce_c, cs_c = clamp_concentrations(ce[sl], cs_surf, cs_max, ce_scale)
        a_s = 3.0 * params.by_region("eps_s", region) / params.by_region("Rs", region)
        bs.append(a_s * ce_c ** params.alpha_a * (cs_max - cs_c) ** params.alpha_a
                  * cs_c ** params.alpha_c)
        fs.append(np.asarray(equilibrium_potential(region, cs_c, T, params), dtype=float)
                  * np.ones(cs_c.shape))
        ys.append(cs_c / cs_max)

    se_neg = params.eps_s_neg * params.sigma_neg
    se_pos = params.eps_s_pos * params.sigma_pos
    i_a = current / params.A
    d_neg = i_a / se_neg
    d_pos = i_a / se_pos
    if bc_mode is BCMode.WRONG_SMITH:
        d_pos = -d_pos
    elif bc_mode is BCMode.WRONG_GOMADAM:
        d_neg = -d_neg
    return ChargeProblem(
        mesh=mesh, r_cell=r_cell, r_face=r_cond * h_face, r_cond=r_cond, nu=nu,
        log_drift=log_drift, b_neg=bs[0], b_pos=bs[1], f_neg=fs[0], f_pos=fs[1],
        k_neg=params.k_neg, k_pos=params.k_pos,
        q_neg=params.k_neg / se_neg, q_pos=params.k_pos / se_pos,
        d_neg=d_neg, d_pos=d_pos, sigma_eff_neg=se_neg, sigma_eff_pos=se_pos,
        applied_current_over_area=i_a, T=float(T), y_surf_neg=ys[0], y_surf_pos=ys[1], bc_mode=bc_mode, gauge=gauge)


def compatibility_sides(problem):
    """(k- d- / q-, k+ d+ / q+); equal iff the system can have a solution."""
    return (problem.k_neg * problem.d_neg / problem.q_neg,
            problem.k_pos * problem.d_pos / problem.q_pos)


def compatibility_defect(problem):
    """|k- d- / q- - k+ d+ / q+| in A/m^2: zero for the correct boundary data,
    2 |I| / A when one end flux has the wrong sign."""
    lhs, rhs = compatibility_sides(problem)
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# discrete operator


@functools.lru_cache(maxsize=64)
def _layout(n_neg, n_sep, n_pos):
    """Interleaved unknown ordering: u_i then v_i (electrode cells) per cell.

    Keeps every coupling within two positions of the diagonal.
    """
    n = n_neg + n_sep + n_pos
    iu = np.empty(n, dtype=int)
    iv = np.empty(n_neg + n_pos, dtype=int)
    pos = 0
    k = 0
    for i in range(n):
        iu[i] = pos
        pos += 1
        if i < n_neg or i >= n_neg + n_sep:
            iv[k] = pos
            pos += 1
            k += 1
    ecells = np.r_[np.arange(n_neg), np.arange(n_neg + n_sep, n)]
    return iu, iv, ecells, pos


def _kb(problem):
    return np.concatenate([problem.k_neg * problem.b_neg, problem.k_pos * problem.b_pos])


def _solid_cond(problem):
    """sigma_eff / h for interior faces of each electrode."""
    m = problem.mesh
    w = m.widths
    gn = problem.sigma_eff_neg / (0.5 * (w[m.neg][:-1] + w[m.neg][1:]))
    gp = problem.sigma_eff_pos / (0.5 * (w[m.pos][:-1] + w[m.pos][1:]))
    return gn, gp


def _residual(problem, params, mode, eu, ev, df_neg, df_pos):
    """Residual rows and the reaction current for perturbations (eu, ev).

    ``df_neg`` / ``df_pos`` are differences of the solid offset between
    neighbouring cells (differences of ``f`` for the internal form).
    """
    m = problem.mesh
    ec = _layout(m.n_neg, m.n_sep, m.n_pos)[2]
    eta = ev - eu[ec]
    e, de = rate_factor(eta, problem.T, params, mode)
    kb = _kb(problem)
    w_e = m.widths[ec]
    j = kb * e

    flux_u = problem.r_cond * np.diff(eu) - problem.log_drift
    ru = np.zeros(m.n)
    ru[:-1] -= flux_u
    ru[1:] += flux_u
    ru[ec] -= w_e * j

    gn, gp = _solid_cond(problem)
    nn = m.n_neg
    sn = gn * (np.diff(ev[:nn]) + df_neg)
    sp = gp * (np.diff(ev[nn:]) + df_pos)
    rv = w_e * j
    rv[:nn - 1] -= sn
    rv[1:nn] += sn
    rv[nn:-1] -= sp
    rv[nn + 1:] += sp
    # boundary solid currents: sigma v'(0) = -sigma d-, sigma v'(L) = -sigma d+
    rv[0] += -problem.sigma_eff_neg * problem.d_neg
    rv[-1] -= -problem.sigma_eff_pos * problem.d_pos
    return ru, rv, j, kb * de


def _jacobian_banded(problem, djde):
    m = problem.mesh
    iu, iv, ec, N = _layout(m.n_neg, m.n_sep, m.n_pos)
    ab = np.zeros((5, N))
    w_e = m.widths[ec]
    c = w_e * djde

    g = problem.r_cond
    du = np.zeros(m.n)
    du[:-1] += g
    du[1:] += g
    du[ec] += c
    ab[2, iu] = du
    ab[2 + iu[:-1] - iu[1:], iu[1:]] = -g
    ab[2 + iu[1:] - iu[:-1], iu[:-1]] = -g

    gn, gp = _solid_cond(problem)
    nn = m.n_neg
    dv = c.copy()
    dv[:nn - 1] += gn
    dv[1:nn] += gn
    dv[nn:-1] += gp
    dv[nn + 1:] += gp
    ab[2, iv] = dv
    for gg, idx in ((gn, iv[:nn]), (gp, iv[nn:])):
        ab[2 + idx[:-1] - idx[1:], idx[1:]] = -gg
        ab[2 + idx[1:] - idx[:-1], idx[:-1]] = -gg

    ab[2 + iu[ec] - iv, iv] = -c
    ab[2 + iv - iu[ec], iu[ec]] = -c
    return ab


def _dense_from_banded(ab):
    N = ab.shape[1]
    A = np.zeros((N, N))
    for d in range(5):
        for jcol in range(N):
            i = d - 2 + jcol
            if 0 <= i < N:
                A[i, jcol] = ab[d, jcol]
    return A


def _pin_functional(problem, gauge):
    """Cells, weights and constant with phase_potential(x) = sum(w * value) + const.

    Solid potential outside the outermost centres is extrapolated with the
    known boundary slope; the electrolyte has zero slope at both ends.
    """
    m = problem.mesh
    x = float(gauge.x)
    if gauge.phase == "electrolyte":
        cells = np.arange(m.n)
        slopes = (0.0, 0.0)
        local = m.centers
    elif gauge.phase == "solid":
        if m.faces[0] <= x <= m.faces[m.n_neg]:
            cells = np.arange(m.n_neg)
            slopes = (-problem.d_neg, 0.0)
        elif m.faces[m.n_neg + m.n_sep] <= x <= m.faces[-1]:
            cells = np.arange(m.n_neg + m.n_sep, m.n)
            slopes = (0.0, -problem.d_pos)
        else:
            raise ValueError(f"solid potential gauge point x = {x} is not in an electrode")
        local = m.centers[cells]
    else:
        raise ValueError(f"unknown gauge phase {gauge.phase!r}")
    if x <= local[0]:
        return cells[:1], np.array([1.0]), (x - local[0]) * slopes[0]
    if x >= local[-1]:
        return cells[-1:], np.array([1.0]), (x - local[-1]) * slopes[1]
    k = int(np.searchsorted(local, x)) - 1
    th = (x - local[k]) / (local[k + 1] - local[k])
    return cells[k:k + 2], np.array([1.0 - th, th]), 0.0


def _pin_rows(problem):
    """Positions (in the unknown vector) and weights of the gauge functional."""
    m = problem.mesh
    iu, iv, ec, _ = _layout(m.n_neg, m.n_sep, m.n_pos)
    cells, wts, const = _pin_functional(problem, problem.gauge)
    if problem.gauge.phase == "electrolyte":
        idx = iu[cells]
    else:
        lookup = {c: k for k, c in enumerate(ec)}
        idx = iv[[lookup[c] for c in cells]]
    return idx, wts, const, cells


def _gauge_constant(problem, eu, ev):
    """gamma such that the pinned phase potential equals the gauge value."""
    m = problem.mesh
    cells, wts, const = _pin_functional(problem, problem.gauge)
    if problem.gauge.phase == "electrolyte":
        base = float(np.dot(wts, eu[cells]))
    else:
        ec = _layout(m.n_neg, m.n_sep, m.n_pos)[2]
        lookup = {c: k for k, c in enumerate(ec)}
        kk = [lookup[c] for c in cells]
        f = problem.f
        base = float(np.dot(wts, f[kk] + ev[kk]))
    return problem.gauge.value - base - const


def _pack(problem, x):
    m = problem.mesh
    iu, iv, _, _ = _layout(m.n_neg, m.n_sep, m.n_pos)
    return x[iu], x[iv]


def _solution(problem, eu, ev, **kw):
    gamma = _gauge_constant(problem, eu, ev)
    return PotentialSolution(phi_e=eu + gamma, phi_s=problem.f + ev + gamma, eta=ev - eu[
        _layout(problem.mesh.n_neg, problem.mesh.n_sep, problem.mesh.n_pos)[2]],
        n_neg=problem.mesh.n_neg, **kw)


def _require_correct(problem):
    if problem.bc_mode is not BCMode.CORRECT:
        defect = compatibility_defect(problem)
        raise IllPosedError(
            f"boundary mode {problem.bc_mode.value!r} violates the compatibility condition "
            f"(defect {defect:.6g} A/m^2): no solution exists unless I = 0", defect)


def _df(problem):
    return np.diff(problem.f_neg), np.diff(problem.f_pos)


def solve_charge_newton(problem, params, tol=1e-10, max_iters=30,
                        mode=KineticsMode.BUTLER_VOLMER, initial=None, max_halvings=8):
    """Damped Newton on the coupled discretization with the gauge row pinned.

    Converged means max |residual| <= tol * max(1, |I|/A) (A/m^2). ``initial``
    may be a previous :class:`PotentialSolution`; otherwise the equilibrium
    guess phi_e = 0, phi_s = f is used.
    """
    _require_correct(problem)
    if not tol > 0:
        raise ValueError("tol must be > 0")
    mode = KineticsMode.parse(mode)
    m = problem.mesh
    iu, iv, ec, N = _layout(m.n_neg, m.n_sep, m.n_pos)
    pin_idx, pin_w, _, _ = _pin_rows(problem)
    pin_row = pin_idx[int(np.argmax(pin_w))]
    df_neg, df_pos = _df(problem)

    if initial is None:
        eu = np.zeros(m.n)
        ev = np.zeros(ec.size)
    else:
        ref = float(initial.phi_e[0])
        eu = initial.phi_e - ref
        ev = initial.phi_s - problem.f - ref
    x = np.empty(N)
    x[iu] = eu
    x[iv] = ev
    shift = float(np.dot(pin_w, x[pin_idx]))
    if shift != 0.0:
        x -= shift

    threshold = tol * problem.current_scale
    pin_scale = float(np.max(problem.r_cond))

    def evaluate(xv):
        eu_, ev_ = _pack(problem, xv)
        try:
            ru, rv, _, djde = _residual(problem, params, mode, eu_, ev_, df_neg, df_pos)
        except KineticOverflowError as exc:
            if exc.cell is not None:
                exc.cell = int(ec[exc.cell])
            raise
        r = np.empty(N)
        r[iu] = ru
        r[iv] = rv
        r[pin_row] = pin_scale * float(np.dot(pin_w, xv[pin_idx]))
        return r, djde

    r, djde = evaluate(x)
    norm = float(np.max(np.abs(r)))
    history = [norm]
    it = 0
    while norm > threshold:
        if it >= max_iters:
            raise NonConvergenceError(
                f"Newton did not converge in {max_iters} iterations "
                f"(residual {norm:.3e} > {threshold:.3e} A/m^2)", history)
        ab = _jacobian_banded(problem, djde)
        # replace the pinned cell's row by the gauge functional
        lo, hi = max(0, pin_row - 2), min(N, pin_row + 3)
        for col in range(lo, hi):
            ab[2 + pin_row - col, col] = 0.0
        for idx, wt in zip(pin_idx, pin_w):
            ab[2 + pin_row - idx, idx] = pin_scale * wt
        try:
            dx = solve_banded((2, 2), ab, r, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NonConvergenceError(f"singular Newton Jacobian: {exc}", history) from exc
        lam = 1.0
        last_exc = None
        for _ in range(max_halvings + 1):
            xt = x - lam * dx
            try:
                rt, djt = evaluate(xt)
            except KineticOverflowError as exc:
                last_exc = exc
                lam *= 0.5
                continue
            nt = float(np.max(np.abs(rt)))
            if nt < norm:
                break
            lam *= 0.5
        else:
            if last_exc is not None:
                raise last_exc
            raise NonConvergenceError(
                f"line search failed to reduce the residual ({norm:.3e} A/m^2)", history)
        x, r, djde, norm = xt, rt, djt, nt
        history.append(norm)
        it += 1

    eu, ev = _pack(problem, x)
    return _solution(problem, eu, ev, newton_iters=it, final_residual_norm=norm,
                     converged=True, history=tuple(history))


def solve_charge_linearized(problem, params):
    """Solve the linearized-kinetics system on the mean-zero-u subspace.

    The bordered system ``[K m; m^T 0]`` enforces sum(w u) = 0 with a scalar
    multiplier; the gauge is then restored by a constant shift. The
    multiplier vanishes whenever the boundary data are compatible.
    """
    _require_correct(problem)
    m = problem.mesh
    iu, iv, ec, N = _layout(m.n_neg, m.n_sep, m.n_pos)
    mode = KineticsMode.LINEARIZED
    df_neg, df_pos = _df(problem)
    eu0 = np.zeros(m.n)
    ev0 = np.zeros(ec.size)
    ru, rv, _, djde = _residual(problem, params, mode, eu0, ev0, df_neg, df_pos)
    K = _dense_from_banded(_jacobian_banded(problem, djde))
    r0 = np.empty(N)
    r0[iu] = ru
    r0[iv] = rv
    mean_row = np.zeros(N)
    mean_row[iu] = m.widths
    # scale the constraint to the operator so the bordered matrix is balanced
    s = float(np.max(np.abs(K))) / float(np.max(m.widths))
    B = np.zeros((N + 1, N + 1))
    B[:N, :N] = K
    B[:N, N] = s * mean_row
    B[N, :N] = s * mean_row
    rhs = np.append(-r0, 0.0)
    try:
        sol = np.linalg.solve(B, rhs)
    except np.linalg.LinAlgError as exc:
        raise CellwellError(f"constrained linear system is singular: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise CellwellError("constrained linear system produced non-finite values")
    x = sol[:N]
    eu, ev = _pack(problem, x)
    rf = r0 + K @ x
    return _solution(problem, eu, ev, newton_iters=1,
                     final_residual_norm=float(np.max(np.abs(rf))), converged=True,
                     multiplier=float(s * sol[N]))


def mean_zero_solution(problem, params):
    """The pair (u_bar, v_bar) with sum(w u_bar) = 0, before any gauge shift."""
    sol = solve_charge_linearized(problem, params)
    gamma = float(np.dot(problem.mesh.widths, sol.phi_e)) / float(np.sum(problem.mesh.widths))
    return gauge_shift(sol, -gamma)


def gauge_shift(sol, gamma):
    """Add ``gamma`` to both phase potentials; eta and residuals are unchanged."""
    if gamma == 0:
        return sol
    return replace(sol, phi_e=sol.phi_e + gamma, phi_s=sol.phi_s + gamma)


def solve_charge(problem, params, mode=KineticsMode.BUTLER_VOLMER, **kw):
    mode = KineticsMode.parse(mode)
    if mode is KineticsMode.LINEARIZED:
        return solve_charge_linearized(problem, params)
    return solve_charge_newton(problem, params, mode=mode, **kw)


# --------------------------------------------------------------------------
# evaluation helpers


def reaction_field(problem, sol, params, mode=KineticsMode.BUTLER_VOLMER):
    """j^Li on every macro cell (zero in the separator) from the solution eta."""
    mode = KineticsMode.parse(mode)
    m = problem.mesh
    ec = _layout(m.n_neg, m.n_sep, m.n_pos)[2]
    e, _ = rate_factor(sol.eta, problem.T, params, mode)
    j = np.zeros(m.n)
    j[ec] = _kb(problem) * e
    return j


def charge_residual(problem, sol, params, mode=KineticsMode.BUTLER_VOLMER):
    """Unpinned residual rows (A/m^2) evaluated directly from phi_e, phi_s.

    Returns ``(residual, scale)``; ``scale`` bounds the magnitude of the terms
    in each row, so ``residual / scale`` is the relative residual.
    """
    mode = KineticsMode.parse(mode)
    m = problem.mesh
    iu, iv, ec, N = _layout(m.n_neg, m.n_sep, m.n_pos)
    u = np.asarray(sol.phi_e, dtype=float)
    v = np.asarray(sol.phi_s, dtype=float)
    ru, rv, j, _ = _residual(problem, params, mode, u, v - problem.f, *_df(problem))
    gn, gp = _solid_cond(problem)
    nn = m.n_neg

    au = np.abs(u)
    su = np.zeros(m.n)
    t = problem.r_cond * (au[:-1] + au[1:]) + np.abs(problem.log_drift)
    su[:-1] += t
    su[1:] += t
    w_e = m.widths[ec]
    su[ec] += w_e * np.abs(j)
    av = np.abs(v)
    sv = w_e * np.abs(j)
    tn = gn * (av[:nn - 1] + av[1:nn])
    tp = gp * (av[nn:-1] + av[nn + 1:])
    sv[:nn - 1] += tn
    sv[1:nn] += tn
    sv[nn:-1] += tp
    sv[nn + 1:] += tp
    sv[0] += abs(problem.sigma_eff_neg * problem.d_neg)
    sv[-1] += abs(problem.sigma_eff_pos * problem.d_pos)
    r = np.empty(N)
    s = np.empty(N)
    r[iu], r[iv] = ru, rv
    s[iu], s[iv] = su, sv
    return r, s


def relative_residual(problem, sol, params, mode=KineticsMode.BUTLER_VOLMER):
    """max |r_i| / max s_i for the unpinned discrete system (scale-free)."""
    r, s = charge_residual(problem, sol, params, mode)
    return float(np.max(np.abs(r)) / max(float(np.max(s)), np.finfo(float).tiny))


def potential_at(problem, sol, x, phase="solid"):
    """Phase potential at ``x`` with the same extrapolation as the gauge."""
    cells, wts, const = _pin_functional(problem, Gauge(x, 0.0, phase))
    if phase == "electrolyte":
        return float(np.dot(wts, sol.phi_e[cells]) + const)
    m = problem.mesh
    ec = _layout(m.n_neg, m.n_sep, m.n_pos)[2]
    lookup = {c: k for k, c in enumerate(ec)}
    return float(np.dot(wts, sol.phi_s[[lookup[c] for c in cells]]) + const)


def divergence_identities(problem, sol, params, mode=KineticsMode.BUTLER_VOLMER):
    """The three integral identities any solution must satisfy.

    Returns ``(k- S- + k+ S+, q- S- - d-, q+ S+ + d+)`` with
    ``S = sum(w b E)`` over each electrode; all three vanish at a solution.
    """
    mode = KineticsMode.parse(mode)
    m = problem.mesh
    e, _ = rate_factor(sol.eta, problem.T, params, mode)
    nn = m.n_neg
    s_neg = float(np.dot(m.widths[m.neg] * problem.b_neg, e[:nn]))
    s_pos = float(np.dot(m.widths[m.pos] * problem.b_pos, e[nn:]))
    return (problem.k_neg * s_neg + problem.k_pos * s_pos,
            problem.q_neg * s_neg - problem.d_neg,
            problem.q_pos * s_pos + problem.d_pos)
