"""Backward-Euler finite-volume steps for electrolyte and solid diffusion.

Both discretizations are conservative: interior face fluxes telescope, so the
discrete inventories change only through the source / surface-flux terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dgtsv

from .errors import CellwellError, StepFailureError
from .params import Region

#: tolerance on solid concentration bounds, relative to cs_max
SOLID_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class ElectrolyteField:
    values: np.ndarray
    time: float = 0.0


def _banded_solve(lower, diag, upper, rhs):
    """Tridiagonal solve (LAPACK gtsv, partial pivoting)."""
    out, info = dgtsv(lower, diag, upper, rhs)[3:]
    if info != 0:
        raise CellwellError(f"singular tridiagonal system (gtsv info {info})")
    if not np.all(np.isfinite(out)):
        raise CellwellError("tridiagonal solve produced non-finite values")
    return out


def _memo(owner, key, build, *ident):
    """Cache ``build()`` on a mesh object; reused only while ``ident`` objects are unchanged."""
    cache = owner.__dict__.setdefault("_memo", {})
    hit = cache.get(key)
    if hit is not None and len(hit[0]) == len(ident) and all(a is b for a, b in zip(hit[0], ident)):
        return hit[1]
    val = build()
    if isinstance(val, np.ndarray):
        val.setflags(write=False)
    cache[key] = (ident, val)
    return val


def cell_property(params, mesh, name):
    """Per-cell array of a region-wise property, e.g. ``"eps_e"``."""
    vals = [params.by_region(name, Region.NEGATIVE), params.by_region(name, Region.SEPARATOR),
            params.by_region(name, Region.POSITIVE)]
    return np.repeat(vals, [mesh.n_neg, mesh.n_sep, mesh.n_pos]).astype(float)


def face_conductance(coef, widths):
    """coef_f / h_f at interior faces, with coef harmonically averaged.

    Exact for a piecewise-constant coefficient with a continuous flux.
    """
    return 1.0 / (0.5 * widths[:-1] / coef[:-1] + 0.5 * widths[1:] / coef[1:])


def _eps_e(params, mesh):
    return _memo(mesh, "eps_e", lambda: cell_property(params, mesh, "eps_e"), params)


def electrolyte_conductance(params, mesh):
    def build():
        return params.De * face_conductance(_eps_e(params, mesh) ** params.p, mesh.widths)
    return _memo(mesh, "electrolyte_conductance", build, params)


def electrolyte_inventory(ce, params, mesh):
    """Sum of eps_e c_e w (mol per m^2 of plate)."""
    return float(np.dot(_eps_e(params, mesh) * mesh.widths, ce))


def electrolyte_step(ce, j_field, dt, params, mesh, extra_source=None):
    """Advance c_e by ``dt`` with the reaction source frozen at ``j_field``.

    ``extra_source`` (mol m^-3 s^-1, per cell) is added to the right-hand
    side; it exists for manufactured-solution checks.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    t0 = ce.time if isinstance(ce, ElectrolyteField) else 0.0
    c = np.asarray(ce.values if isinstance(ce, ElectrolyteField) else ce, dtype=float)
    j = np.asarray(j_field, dtype=float)
    if np.any(j[mesh.sep] != 0.0):
        raise ValueError("reaction current must vanish on separator cells")
    w = mesh.widths
    cap = _eps_e(params, mesh) * w / dt
    g = electrolyte_conductance(params, mesh)
    diag = cap.copy()
    diag[:-1] += g
    diag[1:] += g
    rhs = cap * c + w * (1.0 - params.t_plus) / params.F * j
    if extra_source is not None:
        rhs = rhs + w * np.asarray(extra_source, dtype=float)
    new = _banded_solve(-g, diag, -g, rhs)
    if np.any(new <= 0):
        i = int(np.argmin(new))
        raise StepFailureError(
            f"electrolyte concentration became non-positive ({new[i]:.3e} mol/m^3 in cell {i}); "
            "reduce dt")
    return ElectrolyteField(new, t0 + dt)


# --------------------------------------------------------------------------
# solid phase


def surface_flux(j_local, region, params):
    """Outward molar flux density at r = R_s: R_s j / (3 eps_s F)."""
    return (params.by_region("Rs", region) * np.asarray(j_local, dtype=float)
            / (3.0 * params.by_region("eps_s", region) * params.F))


def solid_step(profile, j_local, dt, region, params, radial_mesh, extra_source=None):
    """Advance one or many particle profiles of one electrode.

    ``profile`` has shape ``(n_r,)`` or ``(m, n_r)``; ``j_local`` is a scalar
    or length-``m``. All particles are solved in a single banded system.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if region is Region.SEPARATOR:
        raise ValueError("no solid phase in the separator")
    prof = np.asarray(profile, dtype=float)
    single = prof.ndim == 1
    c = np.atleast_2d(prof)
    m, n_r = c.shape
    rm = radial_mesh
    D = params.by_region("Ds", region)
    cs_max = params.by_region("cs_max", region)

    vol = rm.volumes / dt
    flux = np.broadcast_to(surface_flux(j_local, region, params), (m,))
    rhs = c * vol
    rhs[:, -1] -= rm.face_areas[-1] * flux
    if extra_source is not None:
        rhs = rhs + rm.volumes * np.asarray(extra_source, dtype=float)

    def build():
        g = D * rm.face_areas[1:-1] / rm.dr  # interior faces
        diag1 = vol.copy()
        diag1[:-1] += g
        diag1[1:] += g
        off = np.tile(np.append(-g, 0.0), m)[:-1]
        return np.concatenate([off, np.tile(diag1, m), off])
    bands = _memo(rm, ("solid", D, float(dt), m), build)
    k = m * n_r
    new = _banded_solve(bands[:k - 1], bands[k - 1:2 * k - 1], bands[2 * k - 1:],
                        rhs.ravel()).reshape(m, n_r)
    tol = SOLID_BOUND_TOL * cs_max
    if np.any(new < -tol) or np.any(new > cs_max + tol):
        raise StepFailureError(
            f"solid concentration left [0, {cs_max}] in the {region.value} electrode "
            f"(range {new.min():.6g}..{new.max():.6g}); reduce dt")
    return new[0] if single else new


def surface_concentration(profile, radial_mesh):
    """Linear extrapolation of the two outermost shell values to r = R_s."""
    c = np.asarray(profile, dtype=float)
    r = radial_mesh.centers
    slope = (c[..., -1] - c[..., -2]) / (r[-1] - r[-2])
    return c[..., -1] + slope * (radial_mesh.radius - r[-1])


def particle_mean(profile, radial_mesh):
    """Volume-averaged concentration of each particle."""
    c = np.asarray(profile, dtype=float)
    return c @ radial_mesh.volumes / radial_mesh.volume


def solid_inventory(cs_neg, cs_pos, params, mesh, radial_meshes):
    """Sum over electrode cells of eps_s w c_mean (mol per m^2 of plate)."""
    rn, rp = radial_meshes
    w = mesh.widths
    return float(params.eps_s_neg * np.dot(w[mesh.neg], particle_mean(cs_neg, rn))
                 + params.eps_s_pos * np.dot(w[mesh.pos], particle_mean(cs_pos, rp)))
