"""Scalar fields on R^n: uniform grids and radial profiles composed with gauges.

Two representations back every operation.  Closed-form radial profiles give
machine-accurate equality-case numbers (their integrals reduce to 1D
quadrature against the gauge body); grid fields give generality for random
instances.  Profiles may have unbounded support (radius = inf); those are
integrated through a rational change of variables and refuse rasterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import RegularGridInterpolator

from .errors import DegenerateSourceError
from .geometry import ConvexBody, SphereGrid
from .params import fr_exponent

_HUGE_NODE_SPLIT = 10.0  # split point for [0, inf) quadratures


def _quad(fun, a, b, points=None):
    if np.isinf(b):
        v1, _ = integrate.quad(fun, a, _HUGE_NODE_SPLIT, points=points, limit=300)
        v2, _ = integrate.quad(fun, _HUGE_NODE_SPLIT, np.inf, limit=300)
        return v1 + v2
    pts = [p for p in (points or []) if a < p < b]
    val, _ = integrate.quad(fun, a, b, points=pts or None, limit=300)
    return val


# ---------------------------------------------------------------------------
# 1D profiles

@dataclass(frozen=True)
class RadialProfile:
    """Nonincreasing 1D profile with derivative and (optional) exact inverse.

    ``radius`` is the support radius in gauge units (inf for decaying
    profiles).  ``invert(t)`` returns the largest s with value(s) >= t.
    """

    value: Callable
    deriv: Callable
    radius: float
    name: str = "custom"
    inverse: Callable | None = None
    breakpoints: tuple = ()
    strictly_decreasing: bool = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= self.radius, self.value(np.minimum(t, self.radius)), 0.0)
        return float(out) if out.ndim == 0 else out

    def slope(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= self.radius, self.deriv(np.minimum(t, self.radius)), 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def peak(self) -> float:
        return float(self.value(np.asarray(0.0)))

    def invert(self, t: float) -> float:
        """Largest s with value(s) >= t, clipped to [0, radius]; 0 if t > peak."""
        if t > self.peak:
            return 0.0
        if self.inverse is not None:
            return float(min(self.inverse(t), self.radius))
        lo, hi = 0.0, min(self.radius, 1e12)
        if np.isinf(self.radius):
            hi = 1.0
            while self.value(np.asarray(hi)) >= t and hi < 1e12:
                hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self(mid)) >= t:
                lo = mid
            else:
                hi = mid
        return lo

    def scaled(self, c: float) -> "RadialProfile":
        if c <= 0:
            raise ValueError("scale must be positive")
        return replace(
            self,
            value=lambda t, _v=self.value: c * _v(t),
            deriv=lambda t, _d=self.deriv: c * _d(t),
            inverse=(None if self.inverse is None
                     else (lambda t, _i=self.inverse: _i(t / c))),
            name=f"{c}*{self.name}")

    def truncated(self, r_cut: float) -> "RadialProfile":
        """Compactify by subtracting the boundary value: (P - P(r_cut))_+.

        Keeps the profile continuous, so the truncated field stays admissible
        for every inequality it is fed to.
        """
        if not 0 < r_cut < self.radius:
            raise ValueError("cut radius must be inside the support")
        shift = float(self.value(np.asarray(r_cut)))
        inv = (None if self.inverse is None
               else (lambda t, _i=self.inverse, _s=shift: _i(t + _s)))
        return replace(
            self,
            value=lambda t, _v=self.value, _s=shift: np.clip(_v(t) - _s, 0.0, None),
            radius=r_cut,
            inverse=inv,
            breakpoints=tuple(b for b in self.breakpoints if b < r_cut),
            name=f"{self.name}|trunc{r_cut:g}")


def cone_profile() -> RadialProfile:
    return RadialProfile(
        value=lambda t: np.clip(1.0 - t, 0.0, None),
        deriv=lambda t: np.where(t <= 1.0, -1.0, 0.0),
        radius=1.0, name="cone",
        inverse=lambda t: 1.0 - t, breakpoints=(1.0,))


def bump_profile() -> RadialProfile:
    return RadialProfile(
        value=lambda t: np.clip(1.0 - t ** 2, 0.0, None) ** 2,
        deriv=lambda t: -4.0 * t * np.clip(1.0 - t ** 2, 0.0, None),
        radius=1.0, name="bump",
        inverse=lambda t: math.sqrt(max(1.0 - math.sqrt(t), 0.0)), breakpoints=(1.0,))


def indicator_profile() -> RadialProfile:
    """Indicator of the unit gauge ball (not C^1; level/moment use only)."""
    return RadialProfile(
        value=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        deriv=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        radius=1.0, name="indicator",
        inverse=lambda t: 1.0, strictly_decreasing=False)


def sobolev_profile(n: int, r: float, variant: str = "decaying") -> RadialProfile:
    """The sharp-Sobolev equality profile (1 + t^(r/(r-1)))^e, e = 1 - n/r."""
    if r <= 1:
        raise ValueError("profile undefined at r = 1")
    e = fr_exponent(n, r, variant)
    rp = r / (r - 1.0)
    radius = np.inf if e < 0 else 1e9  # printed variant grows; cap its domain
    inv = (lambda t: (t ** (1.0 / e) - 1.0) ** (1.0 / rp)) if e < 0 else None
    return RadialProfile(
        value=lambda t: (1.0 + t ** rp) ** e,
        deriv=lambda t: e * rp * t ** (rp - 1.0) * (1.0 + t ** rp) ** (e - 1.0),
        radius=radius, name=f"sobolev(n={n},r={r},{variant})",
        inverse=inv, strictly_decreasing=e < 0)


def layer_profile(p: float, lam: float) -> RadialProfile:
    """The layer-cake equality profile for either lambda branch."""
    e = 1.0 / (lam - 1.0)
    if lam > 1:
        return RadialProfile(
            value=lambda t: np.clip(1.0 - t ** p, 0.0, None) ** e,
            deriv=lambda t: np.where(
                t < 1.0, -e * p * t ** (p - 1.0)
                * np.clip(1.0 - t ** p, 1e-300, None) ** (e - 1.0), 0.0),
            radius=1.0, name=f"layer(p={p},lam={lam})",
            inverse=lambda t: (1.0 - t ** (1.0 / e)) ** (1.0 / p), breakpoints=(1.0,))
    return RadialProfile(
        value=lambda t: (1.0 + t ** p) ** e,
        deriv=lambda t: e * p * t ** (p - 1.0) * (1.0 + t ** p) ** (e - 1.0),
        radius=np.inf, name=f"layer(p={p},lam={lam})",
        inverse=lambda t: (t ** (1.0 / e) - 1.0) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Field representations

class RadialField:
    """f(x) = P(||x||_K) for a profile P and gauge body K."""

    def __init__(self, profile: RadialProfile, gauge: ConvexBody):
        self.profile = profile
        self.gauge_body = gauge
        self.dim = gauge.dim

    @property
    def compact(self) -> bool:
        return np.isfinite(self.profile.radius)

    def bounding_radius(self) -> float:
        if not self.compact:
            raise ValueError("field has unbounded support")
        grid = SphereGrid.default(self.dim)
        return float(self.profile.radius * np.max(self.gauge_body.radial_vector(grid)))

    def values_at(self, x):
        return self.profile(self.gauge_body.gauge(x))

    def gradient_at(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        t = np.atleast_1d(self.gauge_body.gauge(pts))
        out = np.zeros_like(pts)
        inside = (t > 0) & (t <= self.profile.radius)
        if np.any(inside):
            w = self.gauge_body.gauge_grad(pts[inside])
            out[inside] = np.atleast_1d(self.profile.slope(t[inside]))[:, None] * w
        return out[0] if single else out

    def max_abs(self) -> float:
        return self.profile.peak

    def rasterized(self, shape: int = 256, margin: float = 1.1) -> "GridField":
        rad = self.bounding_radius() * margin
        return GridField.from_function(self.values_at, lo=-rad, hi=rad,
                                       shape=shape, dim=self.dim)


class GridField:
    """Node-centered samples on a uniform grid over a square box.

    Values must vanish on the box boundary (compact support inside the box).
    """

    def __init__(self, lo: float, hi: float, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        self.dim = values.ndim
        if self.dim not in (2, 3):
            raise ValueError("grid fields are 2- or 3-dimensional")
        if len(set(values.shape)) != 1:
            raise ValueError("grid must be square/cubic")
        self.lo, self.hi = float(lo), float(hi)
        self.values = values
        self.shape = values.shape[0]
        self.spacing = (self.hi - self.lo) / (self.shape - 1)
        boundary = np.abs(np.concatenate([
            values[0].ravel(), values[-1].ravel(),
            values[:, 0].ravel(), values[:, -1].ravel()]
            + ([values[:, :, 0].ravel(), values[:, :, -1].ravel()] if self.dim == 3 else [])))
        peak = np.max(np.abs(values)) or 1.0
        if boundary.size and np.max(boundary) > 1e-9 * peak:
            raise ValueError("field does not vanish on the box boundary")

    @staticmethod
    def from_function(fun, lo: float, hi: float, shape: int = 256,
                      dim: int = 2) -> "GridField":
        axes = [np.linspace(lo, hi, shape)] * dim
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        vals = np.asarray(fun(pts), dtype=float).reshape([shape] * dim)
        return GridField(lo, hi, vals)

    @property
    def axes(self):
        return [np.linspace(self.lo, self.hi, self.shape)] * self.dim

    @property
    def halfwidths(self):
        return np.full(self.dim, 0.5 * (self.hi - self.lo))

    @cached_property
    def _interp(self):
        return RegularGridInterpolator(self.axes, self.values, method="linear",
                                       bounds_error=False, fill_value=0.0)

    @cached_property
    def grad_arrays(self):
        return np.gradient(self.values, self.spacing)

    @cached_property
    def _grad_interp(self):
        return [RegularGridInterpolator(self.axes, g, method="linear",
                                        bounds_error=False, fill_value=0.0)
                for g in self.grad_arrays]

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def values_at(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        out = self._interp(x[None, :] if single else x)
        return float(out[0]) if single else out

    def gradient_at(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        out = np.stack([gi(pts) for gi in self._grad_interp], axis=1)
        return out[0] if single else out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def scaled(self, c: float) -> "GridField":
        return GridField(self.lo, self.hi, c * self.values)


ScalarField = GridField | RadialField


# ---------------------------------------------------------------------------
# Operations

def lq_norm(f: ScalarField, q: float) -> float:
    """(integral of |f|^q)^(1/q); a quasi-norm for q < 1."""
    if q <= 0:
        raise ValueError("exponent must be positive")
    if isinstance(f, GridField):
        total = np.sum(np.abs(f.values) ** q) * f.cell_volume
        return float(total ** (1.0 / q))
    n = f.dim
    p_ = f.profile
    iq = _quad(lambda t: t ** (n - 1) * p_(t) ** q, 0.0, p_.radius,
               points=p_.breakpoints)
    return float((n * f.gauge_body.volume() * iq) ** (1.0 / q))


def _grid_level_fractions(f: GridField, levels: np.ndarray) -> np.ndarray:
    """Per-node occupied fractions for a batch of levels, shape (len(levels),).

    Each node contributes a linearized interface fraction
    clip(0.5 + (|v| - t) / (|grad v| h), 0, 1); nodes with zero gradient
    contribute their indicator.
    """
    v = np.abs(f.values).ravel()
    slope = np.sqrt(sum(g ** 2 for g in f.grad_arrays)).ravel() * f.spacing
    flat = slope == 0
    out = np.zeros(len(levels))
    chunk = max(1, int(4e6) // max(len(levels), 1))
    for lo in range(0, len(v), chunk):
        vv = v[lo:lo + chunk, None]
        ss = slope[lo:lo + chunk, None]
        fl = flat[lo:lo + chunk, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(fl, vv >= levels[None, :],
                            np.clip(0.5 + (vv - levels[None, :])
                                    / np.where(fl, 1.0, ss), 0.0, 1.0))
        out += frac.sum(axis=0)
    return out * f.cell_volume


def level_volume(f: ScalarField, t: float) -> float:
    """Volume of {|f| >= t} for t > 0."""
    if t <= 0:
        raise ValueError("level must be positive")
    if isinstance(f, RadialField):
        if t > f.profile.peak:
            return 0.0
        s = f.profile.invert(t)
        return f.gauge_body.volume() * s ** f.dim
    return float(_grid_level_fractions(f, np.array([t]))[0])


def layer_integral(f: ScalarField, eta: float, n_levels: int = 2048) -> float:
    """Integral over t of vol({|f| >= t})^eta."""
    if eta <= 0:
        raise ValueError("exponent must be positive")
    if isinstance(f, RadialField) and f.profile.strictly_decreasing:
        # substitute t = P(s): integral becomes vol(K)^eta * int s^(n eta) |P'(s)| ds
        n, p_ = f.dim, f.profile
        base = _quad(lambda s: s ** (n * eta) * np.abs(p_.slope(s)),
                     0.0, p_.radius, points=p_.breakpoints)
        return float(f.gauge_body.volume() ** eta * base)
    if isinstance(f, RadialField):
        f = f.rasterized()
    top = f.max_abs()
    if top <= 0:
        return 0.0
    # the level table is piecewise linear in t, so a dense midpoint rule converges
    step = top / n_levels
    ts = (np.arange(n_levels) + 0.5) * step
    vols = _grid_level_fractions(f, ts)
    return float(np.sum(vols ** eta) * step)


def gradient_eval(f: ScalarField, x):
    """Gradient of the field at x (vectorized over rows of x)."""
    return f.gradient_at(x)


@dataclass(frozen=True)
class DiscreteSphereMeasure:
    """Atomic measure on sphere-grid nodes (weights aligned with the grid)."""

    grid: SphereGrid
    weights: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values_at_nodes) -> float:
        return float(np.dot(self.weights, values_at_nodes))

    def support_rank(self) -> int:
        active = self.grid.nodes[self.weights > 1e-12 * max(self.total_mass, 1e-300)]
        if len(active) == 0:
            return 0
        return int(np.linalg.matrix_rank(active, tol=1e-9))


def surface_measure_of_function(f: ScalarField, r: float,
                                grid: SphereGrid | None = None,
                                raster_shape: int = 256) -> DiscreteSphereMeasure:
    """Discrete L_r surface measure of f on a sphere grid.

    Bins the direction of -grad f at every sample cell into the nearest grid
    node, weighted by |grad f|^r times the cell volume.
    """
    if isinstance(f, RadialField):
        f = f.rasterized(shape=raster_shape)
    grid = grid or SphereGrid.default(f.dim)
    grads = np.stack([g.ravel() for g in f.grad_arrays], axis=1)
    mags = np.linalg.norm(grads, axis=1)
    mask = mags > 1e-12 * max(float(np.max(mags)), 1e-300)
    if not np.any(mask):
        raise DegenerateSourceError("field gradient vanishes everywhere")
    dirs = -grads[mask] / mags[mask, None]
    w = mags[mask] ** r * f.cell_volume
    idx = _nearest_node(grid, dirs)
    weights = np.bincount(idx, weights=w, minlength=len(grid))
    return DiscreteSphereMeasure(grid, weights)


def _nearest_node(grid: SphereGrid, dirs: np.ndarray) -> np.ndarray:
    if grid.dim == 2:
        n = len(grid)
        theta = np.arctan2(dirs[:, 1], dirs[:, 0]) % (2 * math.pi)
        return np.round(theta / (2 * math.pi) * n).astype(int) % n
    n_theta, n_phi = grid.shape
    cos_axis = grid.nodes[::n_phi, 2]
    mids = 0.5 * (cos_axis[:-1] + cos_axis[1:])
    ti = np.searchsorted(mids, np.clip(dirs[:, 2], -1.0, 1.0))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0]) % (2 * math.pi)
    pi_ = np.round(phi / (2 * math.pi) * n_phi).astype(int) % n_phi
    return ti * n_phi + pi_


# ---------------------------------------------------------------------------
# Level-set extraction (2D grid fields)

@dataclass(frozen=True)
class LevelContour:
    """Polyline approximation of {|f| = t} with per-segment data."""

    threshold: float
    midpoints: np.ndarray      # (m, 2)
    lengths: np.ndarray        # (m,)
    normals: np.ndarray        # (m, 2), direction of -grad f
    grad_mags: np.ndarray      # (m,)
    irregular: bool = False    # some segment had a vanishing gradient

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))


def extract_contour(f: GridField, t: float) -> LevelContour:
    """Marching-squares contour of |f| at level t with midpoint gradient data."""
    from skimage import measure

    if not isinstance(f, GridField) or f.dim != 2:
        raise ValueError("contours are extracted from 2D grid fields")
    paths = measure.find_contours(np.abs(f.values), t)
    mids, lens = [], []
    for path in paths:
        pts = f.lo + path * f.spacing      # index -> coordinate (ij indexing)
        seg = np.diff(pts, axis=0)
        ln = np.linalg.norm(seg, axis=1)
        keep = ln > 0
        mids.append(0.5 * (pts[:-1] + pts[1:])[keep])
        lens.append(ln[keep])
    if not mids or sum(len(m) for m in mids) == 0:
        return LevelContour(t, np.empty((0, 2)), np.empty(0), np.empty((0, 2)),
                            np.empty(0))
    mid = np.concatenate(mids)
    ln = np.concatenate(lens)
    grads = f.gradient_at(mid)
    mags = np.linalg.norm(grads, axis=1)
    irregular = bool(np.any(mags < 1e-12))
    normals = np.zeros_like(grads)
    ok = mags > 0
    normals[ok] = -grads[ok] / mags[ok, None]
    return LevelContour(t, mid, ln, normals, mags, irregular)


def field_to_json_header(f: GridField) -> dict:
    return {"box": [f.lo, f.hi], "shape": [f.shape] * f.dim}


def grid_field_from_binary(header: dict, raw: bytes) -> GridField:
    shape = tuple(header["shape"])
    values = np.frombuffer(raw, dtype="<f8").reshape(shape)
    lo, hi = header["box"]
    return GridField(lo, hi, values.copy())


_PROFILE_BUILDERS = {
    "cone": lambda spec: cone_profile(),
    "bump": lambda spec: bump_profile(),
    "indicator": lambda spec: indicator_profile(),
    "sobolev": lambda spec: sobolev_profile(int(spec["n"]), float(spec["r"]),
                                            spec.get("variant", "decaying")),
    "layer": lambda spec: layer_profile(float(spec["p"]), float(spec["lambda"])),
}


def radial_field_from_json(obj: dict) -> RadialField:
    from .geometry import body_from_json

    spec = obj["profile"]
    prof = _PROFILE_BUILDERS[spec["name"]](spec)
    if obj.get("R") is not None and float(obj["R"]) < prof.radius:
        prof = prof.truncated(float(obj["R"]))
    if "scale" in spec:
        prof = prof.scaled(float(spec["scale"]))
    return RadialField(prof, body_from_json(obj["gauge"]))
