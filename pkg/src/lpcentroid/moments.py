"""L_p moment and centroid bodies of bodies, domains and scalar fields.

The p-th power of the moment body's support function is the p-th absolute
moment of the source against each direction.  Star-shaped and convex sources
integrate sphere x exact-radial; compact domains use their per-ray power
sums; grid fields use cell sums; radial-profile fields factor through the
moment body of their gauge.
"""

from __future__ import annotations

import numpy as np

from .domains import CompactDomain, StarBody
from .errors import DegenerateSourceError
from .fields import GridField, RadialField, RadialProfile, _quad
from .geometry import ConvexBody, SphereGrid, SupportSampled
from .params import centroid_normalization

_DEGENERATE_SUPPORT = 1e-12


class MomentBody(SupportSampled):
    """Support-sampled moment body remembering its source and exponent.

    ``support_exact`` re-integrates the source against arbitrary directions
    (no interpolation), which keeps covariance tests honest.
    """

    def __init__(self, grid: SphereGrid, values, source_kind: str, p: float,
                 exact_eval=None):
        super().__init__(grid, values)
        self.source_kind = source_kind
        self.p = p
        self._exact_eval = exact_eval

    def support_exact(self, xi):
        if self._exact_eval is None:
            return self.support(xi)
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        out = self._exact_eval(xi[None, :] if single else xi)
        return float(out[0]) if single else out

    def to_json(self) -> dict:
        return {"support": {"grid_n": len(self.grid), "values": self.values.tolist()},
                "source": self.source_kind, "p": self.p}


def radial_moment_factor(profile: RadialProfile, n: int, p: float) -> float:
    """Scalar relating the moment body of P(||.||_K) to the moment body of K.

    Equals ((n+p) * integral of t^(n+p-1) P(t) dt)^(1/p).  Unbounded profiles
    are rejected when the mass beyond the convergence-check radius exceeds
    1e-3 of the total (slowly decaying or divergent moment).
    """
    integrand = lambda t: t ** (n + p - 1.0) * profile(t)
    total = _quad(integrand, 0.0, profile.radius, points=profile.breakpoints)
    if np.isinf(profile.radius):
        with np.errstate(over="ignore"):
            tail, _ = _tail_estimate(integrand)
        if not np.isfinite(tail) or tail > 1e-3 * max(total, 1e-300):
            raise ValueError(
                f"profile {profile.name}: moment tail mass {tail!r} exceeds "
                f"1e-3 of total {total!r} (divergent or too slowly decaying)")
    if total <= 0:
        raise ValueError("profile has no mass")
    return float(((n + p) * total) ** (1.0 / p))


def _tail_estimate(integrand, t_check: float = 1e3):
    from scipy import integrate as _si
    val, err = _si.quad(integrand, t_check, np.inf, limit=200)
    return val, err


def moment_body(source, p: float, grid: SphereGrid | None = None) -> MomentBody:
    """L_p moment body of a convex body, star body, domain or scalar field."""
    if p < 1:
        raise ValueError("moment exponent must be >= 1")
    if isinstance(source, RadialField):
        return _moment_of_radial_field(source, p, grid)
    if isinstance(source, GridField):
        return _moment_of_grid_field(source, p, grid)
    if isinstance(source, CompactDomain):
        return _moment_of_domain(source, p, grid)
    if isinstance(source, (ConvexBody, StarBody)):
        return _moment_of_star(source, p, grid)
    raise TypeError(f"unsupported moment source {type(source).__name__}")


def _finalize(grid, hp, kind, p, exact_eval) -> MomentBody:
    if np.max(hp) <= 0:
        raise ValueError("source has zero mass")
    h = hp ** (1.0 / p)
    if np.min(h) < _DEGENERATE_SUPPORT:
        raise DegenerateSourceError(
            "moment mass is concentrated on a hyperplane (support ~ 0 in some direction)")
    return MomentBody(grid, h, kind, p, exact_eval)


def _moment_of_star(source, p: float, grid: SphereGrid | None) -> MomentBody:
    grid = grid or getattr(source, "grid", None) or SphereGrid.default(source.dim)
    n = source.dim
    if isinstance(source, StarBody):
        radii = source.radii
    else:
        radii = source.radial_vector(grid)
    shell = radii ** (n + p) / (n + p)
    hp = grid.abs_dot_pow(p).T @ shell
    weighted = grid.weights * shell

    def exact(xi):
        dots = np.abs(grid.nodes @ xi.T) ** p     # (nodes, m)
        return (weighted @ dots) ** (1.0 / p)

    return _finalize(grid, hp, "body", p, exact)


def _moment_of_domain(source: CompactDomain, p: float,
                      grid: SphereGrid | None) -> MomentBody:
    out_grid = grid or source.grid
    n = source.dim
    weighted = source.grid.weights * source._power_sums(n + p) / (n + p)

    def exact(xi):
        dots = np.abs(source.grid.nodes @ xi.T) ** p
        return (weighted @ dots) ** (1.0 / p)

    hp = exact(out_grid.nodes) ** p
    return _finalize(out_grid, hp, "domain", p, exact)


def _moment_of_grid_field(source: GridField, p: float,
                          grid: SphereGrid | None) -> MomentBody:
    grid = grid or SphereGrid.default(source.dim)
    vals = source.values.ravel()
    mask = vals != 0
    if not np.any(mask):
        raise ValueError("source has zero mass")
    if np.any(vals < 0):
        raise ValueError("moment source field must be nonnegative")
    pts = source.points[mask]
    g = vals[mask] * source.cell_volume

    def exact(xi):
        out = np.zeros(len(xi))
        chunk = max(1, int(4e6) // max(len(xi), 1))
        for lo in range(0, len(pts), chunk):
            out += (np.abs(pts[lo:lo + chunk] @ xi.T) ** p).T @ g[lo:lo + chunk]
        return out ** (1.0 / p)

    hp = exact(grid.nodes) ** p
    return _finalize(grid, hp, "field", p, exact)


def _moment_of_radial_field(source: RadialField, p: float,
                            grid: SphereGrid | None) -> MomentBody:
    factor = radial_moment_factor(source.profile, source.dim, p)
    base = _moment_of_star(source.gauge_body, p, grid)
    exact = lambda xi, _b=base, _f=factor: _f * _b.support_exact(xi)
    return MomentBody(base.grid, factor * base.values, "field", p, exact)


def centroid_body(source, p: float, grid: SphereGrid | None = None) -> MomentBody:
    """Moment body normalized by (vol * c_np)^(1/p); fixes centered ellipsoids."""
    if isinstance(source, (GridField, RadialField)):
        raise TypeError("centroid bodies are defined for bodies and domains")
    vol = source.volume()
    if vol <= 0:
        raise ValueError("source must have positive volume")
    n = source.dim
    scale = (vol * centroid_normalization(n, p)) ** (-1.0 / p)
    mb = moment_body(source, p, grid)
    exact = lambda xi, _m=mb, _s=scale: _s * _m.support_exact(xi)
    return MomentBody(mb.grid, scale * mb.values, mb.source_kind, p, exact)
