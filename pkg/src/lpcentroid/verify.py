"""Inequality harness: evaluate both sides of every inequality on instances.

Each check evaluates the printed left and right sides on a concrete instance
(given or generated deterministically from a seed) and emits a DeficitReport
whose deficit is the scale-free ratio lhs/rhs (>= 1 when the inequality
holds).  Slack budgets per inequality come from resolution-doubling studies;
every report records the quadrature resolutions it used.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .domains import CompactDomain
from .fields import (GridField, RadialField, layer_integral, layer_profile,
                     lq_norm, sobolev_profile)
from .geometry import ConvexBody, Ellipsoid, Polytope, SphereGrid
from .mixed import (dual_mixed_volume, functional_mixed_volume, mixed_volume,
                    polar_projection_body, support_dual_integral)
from .moments import centroid_body, moment_body
from .params import (ParamSet, centroid_normalization, layer_constant,
                     main_constant, sharp_sobolev_constant)

INEQUALITY_IDS = (
    "bp",             # centroid-body volume vs body volume
    "bp-domain",      # the same for compact domains
    "bathtub",        # nodewise moment drop under star symmetrization
    "mixed",          # V_r(K, L) vs vol(K)^((n-r)/n) vol(L)^(r/n)
    "moment-mixed",   # V_r(L, M_p K) lower bound
    "sobolev-mixed",  # V_r(f, K) vs sharp-constant Sobolev product
    "moment-volume",  # vol(M_p g)^(p/n) lower bound
    "layer-norm",     # layer integral at (n-1)/n vs L_{n/(n-1)} norm
    "layer-power",    # layer integral at (n+p)/n lower bound
    "main",           # the composed functional inequality
    "chain",          # the same with every intermediate link reported
    "dual-identity",  # Fubini identity for the projection-body remark
)

DEFAULT_SLACK = {
    "bp": 1e-3, "bp-domain": 1e-3, "bathtub": 1e-9,
    "mixed": 1e-3, "moment-mixed": 1e-2, "sobolev-mixed": 1e-2,
    "moment-volume": 1e-2, "layer-norm": 1e-3, "layer-power": 1e-2,
    "main": 1e-2, "chain": 1e-2, "dual-identity": 1e-3,
}

# checks where pass means |deficit - 1| <= slack rather than deficit >= 1-slack
_TWO_SIDED = {"dual-identity"}

_CHAIN_ORDER_SLACK = 1e-9


@dataclass(frozen=True)
class InstanceSpec:
    """Deterministic instance recipe: same spec + seed -> identical instance."""

    kind: str
    seed: int
    size: dict = field(default_factory=dict)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class DeficitReport:
    id: str
    seed: int | None
    instance: str
    params: ParamSet
    lhs: float
    rhs: float
    deficit: float
    slack: float
    passed: bool
    resolutions: dict
    time_ms: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "id": self.id, "seed": self.seed, "instance": self.instance,
            "n": self.params.n, "p": self.params.p, "r": self.params.r,
            "lambda": self.params.lam, "lhs": self.lhs, "rhs": self.rhs,
            "deficit": self.deficit, "slack": self.slack, "pass": self.passed,
            "resolutions": self.resolutions, "time_ms": round(self.time_ms, 3),
        }
        payload.update({k: v for k, v in self.extras.items()})
        return json.dumps(_jsonable(payload))

    def csv_row(self) -> str:
        cols = [self.id, self.seed if self.seed is not None else "",
                self.params.n, f"{self.params.p:.12g}", f"{self.params.r:.12g}",
                f"{self.params.lam:.12g}", f"{self.lhs:.12g}", f"{self.rhs:.12g}",
                f"{self.deficit:.12g}", str(self.passed).lower(),
                f"{self.time_ms:.3f}"]
        return ",".join(str(c) for c in cols)


CSV_HEADER = "id,seed,n,p,r,lambda,lhs,rhs,deficit,pass,time_ms"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# ---------------------------------------------------------------------------
# Instance generators

def random_polygon(rng: np.random.Generator) -> Polytope:
    """5-12 vertices on a radially perturbed random ellipse, centroid at origin."""
    while True:
        m = int(rng.integers(5, 13))
        a, b = rng.uniform(0.6, 1.6, size=2)
        phi = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        theta = np.sort(rng.uniform(0, 2 * np.pi, size=m))
        pts = np.column_stack([a * np.cos(theta), b * np.sin(theta)]) @ rot.T
        pts *= (1.0 + 0.2 * rng.uniform(-1, 1, size=(m, 1)))
        pts -= _polygon_centroid(pts)
        try:
            poly = Polytope(pts)
        except Exception:
            continue
        diam = 2.0 * np.max(np.linalg.norm(poly.vertices, axis=1))
        if np.min(poly.offsets) >= 1e-3 * diam:
            return poly


def _polygon_centroid(pts: np.ndarray) -> np.ndarray:
    from scipy.spatial import ConvexHull
    hull = ConvexHull(pts)
    v = pts[hull.vertices]
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = np.sum(cross) / 2.0
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return np.array([cx, cy])


def random_ellipse(rng: np.random.Generator) -> Ellipsoid:
    a, b = rng.uniform(0.5, 1.8, size=2)
    phi = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    return Ellipsoid(rot @ np.diag([a, b]))


def _smooth_noise(rng: np.random.Generator, theta: np.ndarray, modes: int = 4):
    out = np.zeros_like(theta)
    for m in range(1, modes + 1):
        am, bm = rng.normal(size=2)
        out += (am * np.cos(m * theta) + bm * np.sin(m * theta)) / m
    return out


def random_domain(rng: np.random.Generator,
                  grid: SphereGrid | None = None) -> CompactDomain:
    """1-3 radial intervals per ray with endpoints smooth across rays."""
    grid = grid or SphereGrid.circle(256)
    theta = grid.angles
    shells = int(rng.integers(1, 4))
    touches_origin = bool(rng.integers(0, 2))
    edges = []
    level = np.zeros_like(theta)
    for _ in range(2 * shells):
        level = level + 0.15 + 0.25 / (1.0 + np.exp(-_smooth_noise(rng, theta)))
        edges.append(level.copy())
    rays = []
    for k in range(len(grid)):
        iv = [[edges[2 * i][k], edges[2 * i + 1][k]] for i in range(shells)]
        if touches_origin:
            iv[0][0] = 0.0
        rays.append(np.asarray(iv))
    return CompactDomain(grid, rays)


def random_field(rng: np.random.Generator, shape: int = 128,
                 dim: int = 2) -> GridField:
    """Nonnegative C^1 mixture of 2-4 elliptic-gauge bumps on a padded box."""
    k = int(rng.integers(2, 5))
    comps = []
    for _ in range(k):
        amp = rng.uniform(0.5, 1.5)
        center = rng.uniform(-0.4, 0.4, size=dim)
        axes = rng.uniform(0.4, 1.0, size=dim)
        if dim == 2:
            phi = rng.uniform(0, 2 * np.pi)
            rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
        else:
            rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
        quad = rot @ np.diag(1.0 / axes ** 2) @ rot.T
        comps.append((amp, center, quad))

    def values(pts):
        total = np.zeros(len(pts))
        for amp, center, quad in comps:
            d = pts - center
            t2 = np.einsum("ij,jk,ik->i", d, quad, d)
            total += amp * np.clip(1.0 - t2, 0.0, None) ** 2
        return total

    half = 1.6  # supports live inside |x|_inf <= 1.4; 10%+ margin
    return GridField.from_function(values, -half, half, shape=shape, dim=dim)


def random_radial_field(rng: np.random.Generator) -> RadialField:
    from .fields import bump_profile
    scale = rng.uniform(0.5, 1.5)
    return RadialField(bump_profile().scaled(scale), random_ellipse(rng))


def extremal_pair(params: ParamSet, truncation: float | None = None):
    """The equality-case pair (f, g) sharing one ellipsoidal gauge."""
    gauge = Ellipsoid.ball(params.n)
    fp = sobolev_profile(params.n, params.r)
    gp = layer_profile(params.p, params.lam)
    if truncation is not None:
        if np.isinf(fp.radius):
            fp = fp.truncated(truncation)
        if np.isinf(gp.radius):
            gp = gp.truncated(truncation)
    return RadialField(fp, gauge), RadialField(gp, gauge)


def random_unimodular(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Random matrix with determinant exactly +1 and moderate conditioning."""
    while True:
        a = rng.normal(size=(dim, dim))
        det = np.linalg.det(a)
        if abs(det) > 0.3 and np.linalg.cond(a) < 6.0:
            a /= abs(det) ** (1.0 / dim)
            if np.linalg.det(a) < 0:
                a[:, 0] *= -1.0
            return a


def transform_instance(instance, a: np.ndarray):
    """Apply a linear map to an instance (bodies map; radial fields map gauges)."""
    if isinstance(instance, tuple):
        return tuple(transform_instance(x, a) for x in instance)
    if isinstance(instance, RadialField):
        return RadialField(instance.profile, instance.gauge_body.linear_image(a))
    if isinstance(instance, ConvexBody):
        return instance.linear_image(a)
    raise TypeError(f"cannot linearly transform {type(instance).__name__}")


def random_instance(spec: InstanceSpec, params: ParamSet | None = None):
    """Materialize a deterministic instance from its spec."""
    rng = spec.rng()
    kind = spec.kind
    if kind == "random-polygon":
        return random_polygon(rng)
    if kind == "random-ellipse":
        return random_ellipse(rng)
    if kind == "random-polygon-pair":
        return random_polygon(rng), random_polygon(rng)
    if kind == "dilate-pair":
        k = random_polygon(rng)
        return k, k.linear_image(float(rng.uniform(0.5, 2.0)) * np.eye(2))
    if kind == "random-domain":
        return random_domain(rng, grid=SphereGrid.circle(int(spec.size.get("grid_n", 256))))
    if kind == "random-grid-field":
        return random_field(rng, shape=int(spec.size.get("shape", 128)))
    if kind == "random-grid-field-pair":
        return (random_field(rng, shape=int(spec.size.get("shape", 128))),
                random_field(rng, shape=int(spec.size.get("shape", 128))))
    if kind == "radial-profile-field":
        return random_radial_field(rng)
    if kind == "field-body-pair":
        return (random_field(rng, shape=int(spec.size.get("shape", 128))),
                random_polygon(rng))
    if kind == "radial-body-pair":
        return random_radial_field(rng), random_polygon(rng)
    if kind == "extremal-pair":
        if params is None:
            raise ValueError("extremal instances need a ParamSet")
        return extremal_pair(params, truncation=spec.size.get("truncation"))
    if kind == "sobolev-extremal":
        if params is None:
            raise ValueError("extremal instances need a ParamSet")
        gauge = random_ellipse(rng)
        prof = sobolev_profile(params.n, params.r)
        trunc = spec.size.get("truncation")
        if trunc is not None:
            prof = prof.truncated(trunc)
        return RadialField(prof, gauge), gauge
    if kind == "layer-extremal":
        if params is None:
            raise ValueError("extremal instances need a ParamSet")
        gauge = random_ellipse(rng)
        prof = layer_profile(params.p, params.lam)
        trunc = spec.size.get("truncation")
        if trunc is not None and np.isinf(prof.radius):
            prof = prof.truncated(trunc)
        return RadialField(prof, gauge)
    raise ValueError(f"unknown instance kind {kind!r}")


DEFAULT_KIND = {
    "bp": "random-polygon",
    "bp-domain": "random-domain",
    "bathtub": "random-domain",
    "mixed": "random-polygon-pair",
    "moment-mixed": "random-polygon-pair",
    "sobolev-mixed": "field-body-pair",
    "moment-volume": "random-grid-field",
    "layer-norm": "random-grid-field",
    "layer-power": "random-grid-field",
    "main": "random-grid-field-pair",
    "chain": "random-grid-field-pair",
    "dual-identity": "random-grid-field-pair",
}


def _describe(instance) -> str:
    if isinstance(instance, tuple):
        return "(" + ",".join(_describe(x) for x in instance) + ")"
    if isinstance(instance, Polytope):
        return f"polygon[{len(instance.vertices)}]"
    if isinstance(instance, Ellipsoid):
        return "ellipsoid"
    if isinstance(instance, CompactDomain):
        return f"domain[{max(len(r) for r in instance.rays)}]"
    if isinstance(instance, GridField):
        return f"grid[{instance.shape}]"
    if isinstance(instance, RadialField):
        return f"radial[{instance.profile.name}]"
    return type(instance).__name__


# ---------------------------------------------------------------------------
# Checks

def _norm_product(g, params: ParamSet, per_p: bool):
    """The ||g||_1^.. ||g||_lam^.. product of the layer bounds.

    ``per_p`` divides both exponents by p (the form used after the p-th root
    is taken inside the main inequality).
    """
    n, p, lam = params.n, params.p, params.lam
    d = params.chain_exponent
    e1 = d / ((lam - 1.0) * n)
    e2 = -lam * p / ((lam - 1.0) * n)
    if per_p:
        e1, e2 = e1 / p, e2 / p
    return lq_norm(g, 1.0) ** e1 * lq_norm(g, lam) ** e2


def _check_bp(instance, params, grid):
    body = instance
    gamma = centroid_body(body, params.p, grid)
    return gamma.volume(), body.volume(), {}


def _check_bathtub(instance, params, grid):
    dom = instance
    star = dom.sm_symmetrize().as_domain()
    m_dom = dom.moment_vector(params.p)
    m_star = star.moment_vector(params.p)
    ratios = m_dom / np.where(m_star > 0, m_star, 1e-300)
    worst = int(np.argmin(ratios))
    return float(m_dom[worst]), float(m_star[worst]), {
        "worst_node": worst, "min_ratio": float(ratios[worst])}


def _check_mixed(instance, params, grid):
    k, l = instance
    n = params.n
    lhs = mixed_volume(k, l, params.r, grid)
    rhs = k.volume() ** ((n - params.r) / n) * l.volume() ** (params.r / n)
    return lhs, rhs, {}


def _check_moment_mixed(instance, params, grid):
    k, l = instance
    n, p, r = params.n, params.p, params.r
    mk = moment_body(k, p, grid)
    lhs = mixed_volume(l, mk, r, grid)
    rhs = (centroid_normalization(n, p) ** (r / p)
           * l.volume() ** ((n - r) / n)
           * k.volume() ** ((n + p) * r / (n * p)))
    return lhs, rhs, {}


def _check_sobolev_mixed(instance, params, grid):
    f, k = instance
    n, r = params.n, params.r
    if r <= 1:
        raise ValueError("the sharp-constant check needs 1 < r < n")
    lhs = functional_mixed_volume(f, k, r, grid)
    c1 = sharp_sobolev_constant(n, r)
    rhs = c1 ** r * lq_norm(f, params.q) ** r * k.volume() ** (r / n)
    return lhs, rhs, {}


def _check_moment_volume(instance, params, grid):
    g = instance
    n, p = params.n, params.p
    mg = moment_body(g, p, grid)
    lhs = mg.volume() ** (p / n)
    a = layer_constant(params).constant
    rhs = centroid_normalization(n, p) * a * _norm_product(g, params, per_p=False)
    return lhs, rhs, {}


def _check_layer_norm(instance, params, grid):
    f = instance
    n = params.n
    lhs = layer_integral(f, (n - 1.0) / n)
    rhs = lq_norm(f, n / (n - 1.0))
    return lhs, rhs, {}


def _check_layer_power(instance, params, grid):
    g = instance
    n, p = params.n, params.p
    lhs = layer_integral(g, (n + p) / n)
    a = layer_constant(params).constant
    rhs = a * _norm_product(g, params, per_p=False)
    return lhs, rhs, {}


def _main_sides(f, g, params, grid):
    n, p, r = params.n, params.p, params.r
    mg = moment_body(g, p, grid)
    lhs = n * functional_mixed_volume(f, mg, r, grid)
    rhs = (main_constant(params) * _norm_product(g, params, per_p=True) ** r
           * lq_norm(f, params.q) ** r)
    return lhs, rhs, mg


def _check_main(instance, params, grid):
    f, g = instance
    lhs, rhs, _ = _main_sides(f, g, params, grid)
    return lhs, rhs, {}


def _check_chain(instance, params, grid):
    f, g = instance
    n, p, r = params.n, params.p, params.r
    lhs, rhs, mg = _main_sides(f, g, params, grid)
    c_chain = sharp_sobolev_constant(n, r) if r > 1 else 1.0
    middle = (n * c_chain ** r * lq_norm(f, params.q) ** r
              * mg.volume() ** (r / n))
    links = [lhs, middle, rhs]
    ordered = all(links[i] >= links[i + 1] * (1.0 - _CHAIN_ORDER_SLACK)
                  for i in range(len(links) - 1))
    return lhs, rhs, {"links": links, "ordered": ordered}


def _check_dual_identity(instance, params, grid):
    f, g = instance
    n, p = params.n, params.p
    mg = moment_body(g, p, grid)
    order_a = n * functional_mixed_volume(f, mg, p, grid)
    pi_f = polar_projection_body(f, p, grid)
    order_b = support_dual_integral(g, pi_f, p)
    literal = dual_mixed_volume(g, pi_f, p)
    kappa = order_b / (order_a / n)      # polar reading; equals n exactly
    return order_a, order_b, {
        "printed_ratio": order_a / n / literal if literal else float("nan"),
        "polar_constant": kappa}


_CHECKS = {
    "bp": _check_bp,
    "bp-domain": _check_bp,
    "bathtub": _check_bathtub,
    "mixed": _check_mixed,
    "moment-mixed": _check_moment_mixed,
    "sobolev-mixed": _check_sobolev_mixed,
    "moment-volume": _check_moment_volume,
    "layer-norm": _check_layer_norm,
    "layer-power": _check_layer_power,
    "main": _check_main,
    "chain": _check_chain,
    "dual-identity": _check_dual_identity,
}


_EXPECTED_SHAPE = {
    "bp": "body", "bp-domain": "domain", "bathtub": "domain",
    "mixed": "body-pair", "moment-mixed": "body-pair",
    "sobolev-mixed": "field-body", "moment-volume": "field",
    "layer-norm": "field", "layer-power": "field",
    "main": "field-pair", "chain": "field-pair", "dual-identity": "field-pair",
}


def _validate_instance(ineq_id: str, instance):
    is_field = lambda x: isinstance(x, (GridField, RadialField))
    shape = _EXPECTED_SHAPE[ineq_id]
    ok = {
        "body": lambda: isinstance(instance, ConvexBody),
        "domain": lambda: isinstance(instance, CompactDomain),
        "body-pair": lambda: (isinstance(instance, tuple) and len(instance) == 2
                              and all(isinstance(x, ConvexBody) for x in instance)),
        "field-body": lambda: (isinstance(instance, tuple) and len(instance) == 2
                               and is_field(instance[0])
                               and isinstance(instance[1], ConvexBody)),
        "field": lambda: is_field(instance),
        "field-pair": lambda: (isinstance(instance, tuple) and len(instance) == 2
                               and all(is_field(x) for x in instance)),
    }[shape]
    if not ok():
        raise ValueError(
            f"instance {_describe(instance)} is incompatible with check "
            f"{ineq_id!r} (expected {shape})")


def check_inequality(ineq_id: str, instance, params: ParamSet,
                     grid: SphereGrid | None = None,
                     slack: float | None = None) -> DeficitReport:
    """Evaluate one inequality on one instance and report the deficit."""
    if ineq_id not in _CHECKS:
        raise ValueError(f"unknown inequality id {ineq_id!r}; "
                         f"expected one of {INEQUALITY_IDS}")
    seed = None
    if isinstance(instance, InstanceSpec):
        seed = instance.seed
        instance = random_instance(instance, params)
    _validate_instance(ineq_id, instance)
    grid = grid or SphereGrid.default(params.n)
    slack = DEFAULT_SLACK[ineq_id] if slack is None else slack
    start = time.perf_counter()
    lhs, rhs, extras = _CHECKS[ineq_id](instance, params, grid)
    elapsed = (time.perf_counter() - start) * 1e3
    lhs, rhs = float(lhs), float(rhs)
    deficit = lhs / rhs if rhs else float("inf")
    if ineq_id in _TWO_SIDED:
        passed = abs(deficit - 1.0) <= slack
    else:
        passed = deficit >= 1.0 - slack
    if ineq_id == "chain":
        passed = bool(passed and extras.get("ordered", False))
    res = {"sphere_nodes": len(grid)}
    for item in (instance if isinstance(instance, tuple) else (instance,)):
        if isinstance(item, GridField):
            res["field_shape"] = item.shape
    return DeficitReport(
        id=ineq_id, seed=seed, instance=_describe(instance), params=params,
        lhs=lhs, rhs=rhs, deficit=deficit, slack=slack, passed=passed,
        resolutions=res, time_ms=elapsed, extras=extras)


def run_batch(ineq_id: str, seeds, params: ParamSet, kind: str | None = None,
              grid: SphereGrid | None = None, size: dict | None = None,
              slack: float | None = None) -> list[DeficitReport]:
    """Run one inequality over many seeds; reports ordered by (id, seed)."""
    kind = kind or DEFAULT_KIND[ineq_id]
    reports = [
        check_inequality(ineq_id, InstanceSpec(kind, int(s), size or {}),
                         params, grid=grid, slack=slack)
        for s in seeds
    ]
    reports.sort(key=lambda rep: (rep.id, rep.seed))
    return reports


def lambda_sweep(ineq_id: str, params: ParamSet, n_points: int = 10,
                 seeds=(0,), kind: str | None = None,
                 grid: SphereGrid | None = None) -> list[DeficitReport]:
    """Sweep a 10-point lambda grid on each branch of the valid range."""
    n, p = params.n, params.p
    lo = n / (n + p) + 0.02
    lows = np.linspace(lo, 1.0 - 0.06, n_points // 2)
    highs = np.geomspace(1.0 + 0.06, 8.0, n_points - n_points // 2)
    reports = []
    for lam in np.concatenate([lows, highs]):
        pset = ParamSet(n=params.n, p=params.p, r=params.r, lam=float(lam))
        reports.extend(run_batch(ineq_id, seeds, pset, kind=kind, grid=grid))
    return reports


def resolution_study(ineq_id: str, spec: InstanceSpec, params: ParamSet,
                     base_nodes: int = 512) -> tuple[DeficitReport, DeficitReport]:
    """The same check at base and doubled sphere resolution (slack evidence)."""
    coarse = check_inequality(ineq_id, spec, params,
                              grid=SphereGrid.circle(base_nodes))
    fine = check_inequality(ineq_id, spec, params,
                            grid=SphereGrid.circle(2 * base_nodes))
    return coarse, fine
