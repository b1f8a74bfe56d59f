"""Convex bodies, sphere quadrature grids and support/radial/gauge evaluation.

Bodies come in three representations: polytopes (vertex lists with the origin
strictly inside), ellipsoids (images A*B of the unit ball under an invertible
matrix) and support-sampled bodies (support values on a sphere grid).  All
bodies are immutable after construction and every evaluation is pure.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

from .errors import NumericFailure
from .params import unit_ball_volume

_MIN_ORIGIN_CLEARANCE = 1e-9
_POSITIVE_DOT = 1e-12


class SphereGrid:
    """Quadrature nodes and weights on the unit circle or unit sphere.

    n = 2 uses N uniformly spaced angles (periodic trapezoid rule); n = 3 uses
    a product rule, Gauss-Legendre in cos(theta) times uniform phi.
    """

    def __init__(self, dim: int, nodes: np.ndarray, weights: np.ndarray, shape=None):
        self.dim = dim
        self.nodes = np.ascontiguousarray(nodes, dtype=float)
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.shape = shape  # (n_theta, n_phi) for the product rule
        self._kernel_cache: dict[float, np.ndarray] = {}
        self._kernel_lock = threading.Lock()

    def __len__(self):
        return len(self.nodes)

    @property
    def angles(self) -> np.ndarray:
        if self.dim != 2:
            raise AttributeError("angles only defined for the circle grid")
        return np.arctan2(self.nodes[:, 1], self.nodes[:, 0]) % (2 * math.pi)

    @staticmethod
    @lru_cache(maxsize=32)
    def circle(n_nodes: int = 1024) -> "SphereGrid":
        theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(n_nodes, 2.0 * math.pi / n_nodes)
        return SphereGrid(2, nodes, weights)

    @staticmethod
    @lru_cache(maxsize=8)
    def sphere(n_theta: int = 64, n_phi: int = 128) -> "SphereGrid":
        from scipy.special import roots_legendre
        x, w = roots_legendre(n_theta)  # cos(theta) in (-1,1)
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        sin_t = np.sqrt(1.0 - x ** 2)
        nodes = np.empty((n_theta * n_phi, 3))
        nodes[:, 0] = np.outer(sin_t, np.cos(phi)).ravel()
        nodes[:, 1] = np.outer(sin_t, np.sin(phi)).ravel()
        nodes[:, 2] = np.repeat(x, n_phi)
        weights = np.repeat(w, n_phi) * (2.0 * math.pi / n_phi)
        return SphereGrid(3, nodes, weights, shape=(n_theta, n_phi))

    @staticmethod
    def default(dim: int) -> "SphereGrid":
        return SphereGrid.circle() if dim == 2 else SphereGrid.sphere()

    def abs_dot_pow(self, p: float) -> np.ndarray:
        """Cached kernel |<u_i, u_j>|^p * w_i used by every moment integral."""
        key = float(p)
        with self._kernel_lock:
            mat = self._kernel_cache.get(key)
            if mat is None:
                dots = np.abs(self.nodes @ self.nodes.T)
                mat = dots ** key if key != 1.0 else dots
                mat *= self.weights[:, None]
                self._kernel_cache[key] = mat
            return mat

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def _as_directions(xi) -> tuple[np.ndarray, bool]:
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    return (xi[None, :] if single else xi), single


def _ret(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


class ConvexBody:
    """Common interface: support, radial, gauge, volume, linear images."""

    dim: int

    # -- subclass surface -------------------------------------------------
    def _support(self, xi: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _radial(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _gauge_grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def linear_image(self, a: np.ndarray) -> "ConvexBody":
        raise NotImplementedError

    # -- shared ------------------------------------------------------------
    def support(self, xi):
        """h(xi) = max over the body of <xi, .>; h(0) = 0 by homogeneity."""
        mat, single = _as_directions(xi)
        return _ret(self._support(mat), single)

    def radial(self, u):
        """Exit distance of the ray through u (|u| = 1 expected)."""
        mat, single = _as_directions(u)
        return _ret(self._radial(mat), single)

    def gauge(self, x):
        """Minkowski functional ||x||_K = |x| / radial(x/|x|); gauge(0) = 0."""
        mat, single = _as_directions(x)
        norms = np.linalg.norm(mat, axis=1)
        out = np.zeros(len(mat))
        nz = norms > 0
        if np.any(nz):
            out[nz] = norms[nz] / self._radial(mat[nz] / norms[nz, None])
        return _ret(out, single)

    def gauge_grad(self, x):
        """Gradient of the gauge at x != 0 (0-homogeneous in x)."""
        mat, single = _as_directions(x)
        out = self._gauge_grad(mat)
        return out[0] if single else out

    def support_vector(self, grid: SphereGrid) -> np.ndarray:
        return self._support(grid.nodes)

    def radial_vector(self, grid: SphereGrid) -> np.ndarray:
        return self._radial(grid.nodes)

    def as_support_sampled(self, grid: SphereGrid | None = None) -> "SupportSampled":
        grid = grid or SphereGrid.default(self.dim)
        return SupportSampled(grid, self.support_vector(grid))


def _check_invertible(a: np.ndarray, dim: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (dim, dim):
        raise ValueError(f"matrix must be {dim}x{dim}, got {a.shape}")
    if abs(np.linalg.det(a)) < 1e-12:
        raise ValueError("matrix is singular")
    return a


class Polytope(ConvexBody):
    """Convex hull of a vertex list with the origin strictly inside.

    Facet normals, offsets and areas come from the hull; support and radial
    evaluations are exact.
    """

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] not in (2, 3):
            raise ValueError("vertices must be an (m, 2) or (m, 3) array")
        self.dim = vertices.shape[1]
        hull = ConvexHull(vertices)
        self.vertices = vertices[hull.vertices] if self.dim == 2 else vertices
        # hull.equations rows are [normal, -offset] with outward unit normals
        self.normals = hull.equations[:, :-1].copy()
        self.offsets = -hull.equations[:, -1].copy()
        if np.min(self.offsets) < _MIN_ORIGIN_CLEARANCE:
            raise ValueError("origin is not strictly inside the polytope")
        if self.dim == 2:
            simp = vertices[hull.simplices]
            self.facet_areas = np.linalg.norm(simp[:, 0] - simp[:, 1], axis=1)
        else:
            areas = []
            for tri in hull.simplices:
                a, b, c = vertices[tri]
                areas.append(0.5 * np.linalg.norm(np.cross(b - a, c - a)))
            self.facet_areas = np.asarray(areas)

    def _support(self, xi):
        return np.max(xi @ self.vertices.T, axis=1)

    def _radial(self, u):
        dots = u @ self.normals.T
        with np.errstate(divide="ignore"):
            ratios = np.where(dots > _POSITIVE_DOT, self.offsets / dots, np.inf)
        r = np.min(ratios, axis=1)
        if np.any(~np.isfinite(r)):
            raise NumericFailure("ray misses every facet halfspace boundary")
        return r

    def _gauge_grad(self, x):
        # gauge = max_j <x, nu_j> / h_j; gradient is nu/h at the active facet
        scaled = self.normals / self.offsets[:, None]
        idx = np.argmax(x @ scaled.T, axis=1)
        return scaled[idx]

    def volume(self):
        return float(np.dot(self.offsets, self.facet_areas) / self.dim)

    def linear_image(self, a):
        a = _check_invertible(a, self.dim)
        return Polytope(self.vertices @ a.T)


class Ellipsoid(ConvexBody):
    """Image A * B of the unit ball under an invertible matrix A."""

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        self.dim = matrix.shape[0]
        self.matrix = _check_invertible(matrix, self.dim)
        self._inv = np.linalg.inv(self.matrix)
        self._quad = self._inv.T @ self._inv   # (A A^T)^{-1}

    @staticmethod
    def ball(dim: int, radius: float = 1.0) -> "Ellipsoid":
        return Ellipsoid(radius * np.eye(dim))

    def _support(self, xi):
        return np.linalg.norm(xi @ self.matrix, axis=1)

    def _radial(self, u):
        return 1.0 / np.sqrt(np.einsum("ij,jk,ik->i", u, self._quad, u))

    def _gauge_grad(self, x):
        mx = x @ self._quad.T
        g = np.sqrt(np.einsum("ij,ij->i", x, mx))
        return mx / g[:, None]

    def volume(self):
        return abs(np.linalg.det(self.matrix)) * unit_ball_volume(self.dim)

    def linear_image(self, a):
        a = _check_invertible(a, self.dim)
        return Ellipsoid(a @ self.matrix)


class SupportSampled(ConvexBody):
    """Body known through positive support values on a sphere grid.

    The implied body is the intersection of the tangent halfspaces
    {<x, u_i> <= h_i}; its radial function is exact via polar duality and
    support values between nodes are interpolated.
    """

    def __init__(self, grid: SphereGrid, values):
        values = np.asarray(values, dtype=float)
        if len(values) != len(grid):
            raise ValueError("support values do not match the grid")
        if np.min(values) <= 0:
            raise ValueError("support values must be positive (origin interior)")
        self.grid = grid
        self.values = values
        self.dim = grid.dim

    def _support(self, xi):
        norms = np.linalg.norm(xi, axis=1)
        out = np.zeros(len(xi))
        nz = norms > 0
        if not np.any(nz):
            return out
        units = xi[nz] / norms[nz, None]
        if self.dim == 2:
            theta = np.arctan2(units[:, 1], units[:, 0]) % (2 * math.pi)
            n = len(self.grid)
            pos = theta / (2 * math.pi) * n
            i0 = np.floor(pos).astype(int) % n
            frac = pos - np.floor(pos)
            vals = (1.0 - frac) * self.values[i0] + frac * self.values[(i0 + 1) % n]
        else:
            vals = self._interp_sphere(units)
        out[nz] = vals * norms[nz]
        return out

    def _interp_sphere(self, units):
        n_theta, n_phi = self.grid.shape
        table = self.values.reshape(n_theta, n_phi)
        cos_t = np.clip(units[:, 2], -1.0, 1.0)
        phi = np.arctan2(units[:, 1], units[:, 0]) % (2 * math.pi)
        # nodes are stored theta-major with ascending leggauss abscissas
        cos_axis = self.grid.nodes[::n_phi, 2]
        order = np.argsort(cos_axis)
        cos_sorted = cos_axis[order]
        j = np.clip(np.searchsorted(cos_sorted, cos_t) - 1, 0, n_theta - 2)
        c0, c1 = cos_sorted[j], cos_sorted[j + 1]
        ft = np.clip((cos_t - c0) / (c1 - c0), 0.0, 1.0)
        pos = phi / (2 * math.pi) * n_phi
        k0 = np.floor(pos).astype(int) % n_phi
        fp = pos - np.floor(pos)
        k1 = (k0 + 1) % n_phi
        row0, row1 = order[j], order[j + 1]
        v00 = table[row0, k0]
        v01 = table[row0, k1]
        v10 = table[row1, k0]
        v11 = table[row1, k1]
        return ((1 - ft) * ((1 - fp) * v00 + fp * v01)
                + ft * ((1 - fp) * v10 + fp * v11))

    def _radial(self, u):
        # polar duality: r(u) = inf over directions of h / <u, .>; the discrete
        # minimum over grid nodes is refined against the interpolated support
        # in 2D, which removes the first-order roof error over flat facets
        out = np.empty(len(u))
        argmin = np.empty(len(u), dtype=int)
        nodes_t = self.grid.nodes.T
        chunk = max(1, int(4e6) // max(len(self.grid), 1))
        for lo in range(0, len(u), chunk):
            dots = u[lo:lo + chunk] @ nodes_t
            with np.errstate(divide="ignore"):
                ratios = np.where(dots > _POSITIVE_DOT, self.values / dots, np.inf)
            out[lo:lo + chunk] = np.min(ratios, axis=1)
            argmin[lo:lo + chunk] = np.argmin(ratios, axis=1)
        if np.any(~np.isfinite(out)):
            raise NumericFailure("no grid node with positive inner product (grid too coarse)")
        if self.dim == 2:
            out = np.minimum(out, self._refined_dual_min(u, argmin))
        return out

    def _refined_dual_min(self, u, argmin, per_arc: int = 33):
        delta = 2.0 * math.pi / len(self.grid)
        base = argmin * delta
        offsets = np.linspace(-2.0 * delta, 2.0 * delta, per_arc)
        phi = base[:, None] + offsets[None, :]
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)   # (m, k, 2)
        h = self._support(dirs.reshape(-1, 2)).reshape(phi.shape)
        dots = np.einsum("mkj,mj->mk", dirs, u)
        with np.errstate(divide="ignore"):
            ratios = np.where(dots > _POSITIVE_DOT, h / dots, np.inf)
        return np.min(ratios, axis=1)

    def _gauge_grad(self, x):
        scaled = self.grid.nodes / self.values[:, None]
        idx = np.argmax(x @ scaled.T, axis=1)
        return scaled[idx]

    def edge_lengths(self) -> np.ndarray:
        """Exact boundary edge lengths of the implied tangent polygon (n = 2).

        For uniformly spaced normals at step d the edge on tangent line i has
        length (h_{i-1} + h_{i+1} - 2 h_i cos d) / sin d, clipped at 0 when
        the tangent line is inactive.
        """
        if self.dim != 2:
            raise ValueError("edge lengths defined only on the circle grid")
        h = self.values
        d = 2.0 * math.pi / len(h)
        ell = (np.roll(h, 1) + np.roll(h, -1) - 2.0 * h * math.cos(d)) / math.sin(d)
        return np.clip(ell, 0.0, None)

    def volume(self):
        if self.dim == 2:
            return float(0.5 * np.dot(self.values, self.edge_lengths()))
        r = self._radial(self.grid.nodes)
        return float(np.dot(self.grid.weights, r ** self.dim) / self.dim)

    def linear_image(self, a):
        a = _check_invertible(a, self.dim)
        return SupportSampled(self.grid, self._support(self.grid.nodes @ a))


def lr_combination(k: ConvexBody, l: ConvexBody, eps: float, r: float,
                   grid: SphereGrid | None = None) -> SupportSampled:
    """Body with support (h_K^r + eps * h_L^r)^(1/r) sampled on a shared grid."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if r < 1:
        raise ValueError("r must be >= 1")
    if k.dim != l.dim:
        raise ValueError("bodies live in different dimensions")
    if grid is None:
        gk = k.grid if isinstance(k, SupportSampled) else None
        gl = l.grid if isinstance(l, SupportSampled) else None
        if gk is not None and gl is not None and gk is not gl:
            raise ValueError("sampled bodies use incompatible grids")
        grid = gk or gl or SphereGrid.default(k.dim)
    hk = k.support_vector(grid)
    hl = l.support_vector(grid)
    return SupportSampled(grid, (hk ** r + eps * hl ** r) ** (1.0 / r))


# ---------------------------------------------------------------------------
# JSON body literals

def body_to_json(body: ConvexBody) -> dict:
    if isinstance(body, Polytope):
        return {"polytope": body.vertices.tolist()}
    if isinstance(body, Ellipsoid):
        return {"ellipsoid": body.matrix.tolist()}
    if isinstance(body, SupportSampled):
        return {"support": {"grid_n": len(body.grid), "values": body.values.tolist()}}
    raise TypeError(f"cannot serialize {type(body).__name__}")


def body_from_json(obj: dict) -> ConvexBody:
    if "polytope" in obj:
        return Polytope(obj["polytope"])
    if "ellipsoid" in obj:
        return Ellipsoid(obj["ellipsoid"])
    if "support" in obj:
        spec = obj["support"]
        return SupportSampled(SphereGrid.circle(int(spec["grid_n"])),
                              np.asarray(spec["values"], dtype=float))
    raise ValueError(f"unrecognized body literal with keys {sorted(obj)}")
