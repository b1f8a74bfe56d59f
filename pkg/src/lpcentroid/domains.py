"""Compact domains given per-direction by radial interval unions.

A domain M is stored, for every grid direction xi, as the set
L_xi = {t >= 0 : t*xi in M} -- a finite union of disjoint intervals.  This
makes the radial power sums exact per ray, so the volume-preserving star
symmetrization and the moment comparison against it are quadrature-exact in
the radial variable.
"""

from __future__ import annotations

import numpy as np

from .geometry import ConvexBody, SphereGrid

MAX_INTERVALS_PER_RAY = 16


class StarBody:
    """Star-shaped set about the origin given by radial values on a grid."""

    def __init__(self, grid: SphereGrid, radii):
        radii = np.asarray(radii, dtype=float)
        if len(radii) != len(grid) or np.min(radii) < 0:
            raise ValueError("radii must be nonnegative and match the grid")
        self.grid = grid
        self.radii = radii
        self.dim = grid.dim

    def volume(self) -> float:
        return float(np.dot(self.grid.weights, self.radii ** self.dim) / self.dim)

    def as_domain(self) -> "CompactDomain":
        rays = [np.array([[0.0, r]]) if r > 0 else np.empty((0, 2)) for r in self.radii]
        return CompactDomain(self.grid, rays)


class CompactDomain:
    """Bounded domain represented by per-ray interval unions."""

    def __init__(self, grid: SphereGrid, rays):
        if len(rays) != len(grid):
            raise ValueError("one interval list per grid node required")
        clean = []
        for k, ray in enumerate(rays):
            arr = np.asarray(ray, dtype=float).reshape(-1, 2)
            if len(arr) > MAX_INTERVALS_PER_RAY:
                raise ValueError(
                    f"ray {k} has {len(arr)} intervals (cap {MAX_INTERVALS_PER_RAY})")
            if len(arr):
                arr = arr[np.argsort(arr[:, 0])]
                if np.any(arr[:, 0] < 0) or np.any(arr[:, 1] <= arr[:, 0]):
                    raise ValueError(f"ray {k} has an empty or negative interval")
                if np.any(arr[1:, 0] < arr[:-1, 1]):
                    raise ValueError(f"ray {k} has overlapping intervals")
            clean.append(arr)
        self.grid = grid
        self.rays = clean
        self.dim = grid.dim

    @staticmethod
    def from_body(body: ConvexBody, grid: SphereGrid | None = None) -> "CompactDomain":
        grid = grid or SphereGrid.default(body.dim)
        radii = body.radial_vector(grid)
        return CompactDomain(grid, [np.array([[0.0, r]]) for r in radii])

    @staticmethod
    def annulus(inner: float, outer: float, grid: SphereGrid | None = None,
                dim: int = 2) -> "CompactDomain":
        grid = grid or SphereGrid.default(dim)
        return CompactDomain(grid, [np.array([[inner, outer]])] * len(grid))

    @staticmethod
    def from_grid_field(field, threshold: float,
                        grid: SphereGrid | None = None) -> "CompactDomain":
        """Threshold {|field| >= t} by marching each grid ray at grid resolution.

        Run boundaries are refined by linear interpolation between the two
        samples bracketing each crossing.
        """
        grid = grid or SphereGrid.default(field.dim)
        step = field.spacing
        r_max = float(np.linalg.norm(field.halfwidths))
        ts = np.arange(0.0, r_max + step, step)
        rays = []
        for u in grid.nodes:
            vals = np.abs(field.values_at(ts[:, None] * u[None, :]))
            rays.append(_runs_to_intervals(ts, vals, threshold))
        return CompactDomain(grid, rays)

    def _power_sums(self, power: float) -> np.ndarray:
        out = np.zeros(len(self.grid))
        for k, ray in enumerate(self.rays):
            if len(ray):
                out[k] = np.sum(ray[:, 1] ** power - ray[:, 0] ** power)
        return out

    def volume(self) -> float:
        n = self.dim
        return float(np.dot(self.grid.weights, self._power_sums(n)) / n)

    def moment(self, p: float, xi) -> float:
        """Integral of |<x, xi>|^p over the domain (exact in the radial variable)."""
        xi = np.asarray(xi, dtype=float)
        n = self.dim
        shells = self._power_sums(n + p) / (n + p)
        dots = np.abs(self.grid.nodes @ xi) ** p
        return float(np.dot(self.grid.weights, shells * dots))

    def moment_vector(self, p: float) -> np.ndarray:
        """Moments against every grid node direction at once."""
        shells = self._power_sums(self.dim + p) / (self.dim + p)
        return self.grid.abs_dot_pow(p).T @ shells

    def sm_symmetrize(self) -> StarBody:
        """Volume-preserving star rearrangement.

        Per ray the interval union is pushed to a single interval [0, rho]
        with the same n-th power mass: rho = (sum_i (b_i^n - a_i^n))^(1/n).
        """
        return StarBody(self.grid, self._power_sums(self.dim) ** (1.0 / self.dim))


def _runs_to_intervals(ts: np.ndarray, vals: np.ndarray,
                       threshold: float) -> np.ndarray:
    """Runs of {vals >= threshold} as intervals with interpolated crossings."""
    inside = vals >= threshold
    if not np.any(inside):
        return np.empty((0, 2))
    padded = np.concatenate([[False], inside, [False]])
    flips = np.flatnonzero(padded[1:] != padded[:-1])
    starts, ends = flips[::2], flips[1::2] - 1
    merged = []
    for s, e in zip(starts, ends):
        lo = ts[s]
        if s > 0 and vals[s] > vals[s - 1]:
            lo = ts[s - 1] + (ts[s] - ts[s - 1]) * (threshold - vals[s - 1]) \
                / (vals[s] - vals[s - 1])
        hi = ts[e]
        if e + 1 < len(ts) and vals[e] > vals[e + 1]:
            hi = ts[e] + (ts[e + 1] - ts[e]) * (vals[e] - threshold) \
                / (vals[e] - vals[e + 1])
        if hi <= lo:
            continue
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(hi, merged[-1][1])
        else:
            merged.append([lo, hi])
    if not merged:
        return np.empty((0, 2))
    out = np.asarray(merged)
    return out[:MAX_INTERVALS_PER_RAY] if len(out) > MAX_INTERVALS_PER_RAY else out


def sm_symmetrize(domain: CompactDomain) -> StarBody:
    return domain.sm_symmetrize()


def domain_volume(domain: CompactDomain) -> float:
    return domain.volume()


def domain_moment(domain: CompactDomain, p: float, xi) -> float:
    return domain.moment(p, xi)
