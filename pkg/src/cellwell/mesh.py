"""Control-volume grids: the macro x-grid and one radial grid per electrode."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .params import Region


@dataclass(frozen=True)
class MacroMesh:
    n_neg: int
    n_sep: int
    n_pos: int
    faces: np.ndarray
    centers: np.ndarray
    widths: np.ndarray
    regions: tuple

    @property
    def n(self):
        return self.n_neg + self.n_sep + self.n_pos

    @property
    def special_faces(self):
        """Face indices of x = 0, L1, L1 + delta and L."""
        return (0, self.n_neg, self.n_neg + self.n_sep, self.n)

    @property
    def neg(self):
        return slice(0, self.n_neg)

    @property
    def sep(self):
        return slice(self.n_neg, self.n_neg + self.n_sep)

    @property
    def pos(self):
        return slice(self.n_neg + self.n_sep, self.n)

    @property
    def electrode_mask(self):
        m = np.ones(self.n, dtype=bool)
        m[self.sep] = False
        return m

    def integrate(self, values, region=None):
        """Midpoint quadrature of cell values over the cell or one region."""
        values = np.broadcast_to(np.asarray(values, dtype=float), (self.n,))
        if region is None:
            return float(np.dot(values, self.widths))
        sl = {Region.NEGATIVE: self.neg, Region.SEPARATOR: self.sep, Region.POSITIVE: self.pos}[region]
        return float(np.dot(values[sl], self.widths[sl]))


@dataclass(frozen=True)
class RadialMesh:
    """Spherical shells on [0, R]; nodes sit at shell midpoints."""

    radius: float
    edges: np.ndarray
    centers: np.ndarray
    volumes: np.ndarray

    @property
    def n_r(self):
        return self.centers.size

    @property
    def dr(self):
        return self.radius / self.n_r

    @property
    def face_areas(self):
        """4 pi r^2 at each edge (the inner edge r = 0 has zero area)."""
        return 4.0 * np.pi * self.edges ** 2

    @property
    def volume(self):
        return 4.0 / 3.0 * np.pi * self.radius ** 3

    def weighted_r2_integral(self, values):
        """int_0^R r^2 c dr with c piecewise constant per shell."""
        return float(np.dot(values, self.volumes)) / (4.0 * np.pi)


def _region_faces(x0, width, n):
    f = x0 + width * np.arange(n + 1) / n
    f[-1] = x0 + width
    return f


def build_radial_mesh(radius, n_r):
    if n_r < 2:
        raise ConfigurationError(f"radial shell count must be >= 2 (got {n_r})")
    edges = radius * np.arange(n_r + 1) / n_r
    edges[-1] = radius
    volumes = 4.0 / 3.0 * np.pi * np.diff(edges ** 3)
    return RadialMesh(radius, edges, 0.5 * (edges[:-1] + edges[1:]), volumes)


def build_mesh(params, n_neg, n_sep, n_pos, n_r):
    """Uniform-per-region macro mesh plus radial meshes ``(neg, pos)``.

    Region interfaces coincide with faces: face ``n_neg`` is exactly ``L1``.
    """
    for name, n in (("n_neg", n_neg), ("n_sep", n_sep), ("n_pos", n_pos), ("n_r", n_r)):
        if int(n) != n or n < 2:
            raise ConfigurationError(f"{name} must be an integer >= 2 (got {n})")
    n_neg, n_sep, n_pos, n_r = int(n_neg), int(n_sep), int(n_pos), int(n_r)
    x1 = params.L1
    x2 = params.L1 + params.delta
    f_neg = _region_faces(0.0, params.L1, n_neg)
    f_sep = _region_faces(x1, params.delta, n_sep)
    f_pos = _region_faces(x2, params.L2, n_pos)
    f_pos[-1] = params.L
    faces = np.concatenate([f_neg, f_sep[1:], f_pos[1:]])
    faces[n_neg] = x1
    faces[n_neg + n_sep] = x2
    widths = np.concatenate([np.full(n_neg, params.L1 / n_neg),
                             np.full(n_sep, params.delta / n_sep),
                             np.full(n_pos, params.L2 / n_pos)])
    centers = 0.5 * (faces[:-1] + faces[1:])
    regions = ((Region.NEGATIVE,) * n_neg + (Region.SEPARATOR,) * n_sep
               + (Region.POSITIVE,) * n_pos)
    macro = MacroMesh(n_neg, n_sep, n_pos, faces, centers, widths, regions)
    return macro, (build_radial_mesh(params.Rs_neg, n_r), build_radial_mesh(params.Rs_pos, n_r))
