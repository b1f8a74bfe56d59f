"""Scalar parameters, closed-form constants and extremal profiles.

Everything here is a pure function of the parameter tuple (n, p, r, lambda).
Gamma factors are evaluated through log-gamma so large or fractional
arguments never overflow.  The one numerically-derived constant
(``sharp_sobolev_constant``) is computed once per (n, r) by radial
quadrature of its equality case and cached.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericFailure

# Guard bands for the layer-cake exponent: the envelope exponents blow up as
# lambda -> 1 and integrability fails at lambda -> n/(n+p).
LAMBDA_UNIT_GAP = 0.05
LAMBDA_LOWER_GAP = 0.01

# Decay exponent variants for the Sobolev extremal profile.  The "decaying"
# variant 1 - n/r is the default: it is the one that reproduces equality in
# the sharp inequality (the "printed" variant 1 - r/n grows at infinity and
# is kept only so both can be compared in tests).
FR_EXPONENT_DECAYING = "decaying"
FR_EXPONENT_PRINTED = "printed"


def _gamma(x: float) -> float:
    """Gamma via log-gamma (positive arguments only)."""
    return math.exp(math.lgamma(x))


@dataclass(frozen=True)
class ParamSet:
    """The scalar parameter tuple (n, p, r, lam).

    The Sobolev exponent q = nr/(n-r) is always derived, never supplied.
    lam must stay clear of 1 and of n/(n+p) by the module guard bands.
    """

    n: int
    p: float = 2.0
    r: float = 1.5
    lam: float = 2.0

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        if not self.p >= 1:
            raise ValueError(f"moment exponent p must be >= 1, got {self.p}")
        if not 1 <= self.r < self.n:
            raise ValueError(f"mixed-volume exponent r must satisfy 1 <= r < n, got {self.r}")
        lo = self.n / (self.n + self.p)
        if self.lam < lo + LAMBDA_LOWER_GAP:
            raise ValueError(
                f"lambda = {self.lam} too close to n/(n+p) = {lo:.6g} "
                f"(must exceed it by {LAMBDA_LOWER_GAP})")
        if abs(self.lam - 1.0) < LAMBDA_UNIT_GAP:
            raise ValueError(
                f"lambda = {self.lam} inside the guard band |lambda-1| < {LAMBDA_UNIT_GAP}")

    @property
    def q(self) -> float:
        """Derived Sobolev exponent nr/(n-r)."""
        return self.n * self.r / (self.n - self.r)

    @property
    def lam_branch(self) -> str:
        return "lambda>1" if self.lam > 1 else "lambda<1"

    @property
    def chain_exponent(self) -> float:
        """The combined exponent (n+p)(lam-1)+p that recurs in every bound."""
        return (self.n + self.p) * (self.lam - 1.0) + self.p


def unit_ball_volume(m: float) -> float:
    """Volume of the unit ball in dimension m (m >= 0, fractional allowed)."""
    if m < 0:
        raise ValueError(f"dimension must be nonnegative, got {m}")
    return math.pi ** (m / 2.0) / _gamma(m / 2.0 + 1.0)


def centroid_normalization(n: int, p: float) -> float:
    """Normalization making the centroid body of a centered ball the ball itself.

    Equals omega_{n+p} / (omega_2 * omega_n * omega_{p-1}).
    """
    if n < 2 or p < 1:
        raise ValueError("need n >= 2 and p >= 1")
    return unit_ball_volume(n + p) / (
        unit_ball_volume(2) * unit_ball_volume(n) * unit_ball_volume(p - 1))


@dataclass(frozen=True)
class PowerSumMinimum:
    s_star: float
    value: float


def minimize_power_sum(a: float, b: float, alpha: float, beta: float) -> PowerSumMinimum:
    """Unique minimum of s -> a*s^(-alpha) + b*s^beta over s > 0.

    Closed form: s* = (alpha*a / (beta*b))^(1/(alpha+beta)).
    """
    if min(a, b, alpha, beta) <= 0:
        raise ValueError("all arguments must be strictly positive")
    s = (alpha * a / (beta * b)) ** (1.0 / (alpha + beta))
    return PowerSumMinimum(s_star=s, value=a * s ** (-alpha) + b * s ** beta)


@dataclass(frozen=True)
class LayerConstant:
    """Constants of the layer-cake lower bound for one lambda branch.

    ``coefficient`` is the envelope coefficient (the A-branch value for
    lam > 1, the B-branch value for lam < 1); ``constant`` is the assembled
    multiplicative constant of the lower bound itself.
    """

    branch: str
    coefficient: float
    constant: float


def envelope_profile_integral(params: ParamSet) -> float:
    """Integral of the comparison envelope's (n+p)/n power over (0, inf).

    For lam > 1 the envelope is (1 - t^(lam-1))_+^(n/p); for lam < 1 it is
    (t^(lam-1) - 1)_+^(n/p).  Both reduce to beta functions; this quadrature
    form is kept as the independent route used by the oracle tests.
    """
    n, p, lam = params.n, params.p, params.lam
    e = (n + p) / p
    if lam > 1:
        integrand = lambda t: (1.0 - t ** (lam - 1.0)) ** e if t < 1.0 else 0.0
    else:
        integrand = lambda t: (t ** (lam - 1.0) - 1.0) ** e if t < 1.0 else 0.0
    val, _ = integrate.quad(integrand, 0.0, 1.0, points=[0.0, 1.0], limit=200)
    return val


def layer_constant(params: ParamSet) -> LayerConstant:
    """Closed-form envelope coefficient and layer-cake constant.

    lam > 1 branch:
        A = D * [Gamma(lam/(lam-1)) * (lam p)^(1/(1-lam))
                 * ((lam-1)(n+p))^(-(n+p)/p) * Gamma(n/p+2)
                 / Gamma(n/p + 1/(lam-1) + 2)]^((lam-1) p / D),
        constant a = A^(-D / ((lam-1) n)),   D = (lam-1) n + lam p.

    lam < 1 branch:
        B = lam * p/(n+p) * (lam - n/(n+p))^((1-lam)(n+p)/p - 1)
            * [(1-lam)^(-n/p-2) * Gamma(n/p+2) * Gamma(lam/(1-lam) - n/p)
               / Gamma((lam-2)/(lam-1))]^(1-lam),
        constant a = B^(p / ((lam-1) n)).
    """
    n, p, lam = params.n, params.p, params.lam
    D = params.chain_exponent  # (n+p)(lam-1)+p == (lam-1)n + lam p
    if lam > 1:
        log_br = (math.lgamma(lam / (lam - 1.0))
                  + math.log(lam * p) / (1.0 - lam)
                  - (n + p) / p * math.log((lam - 1.0) * (n + p))
                  + math.lgamma(n / p + 2.0)
                  - math.lgamma(n / p + 1.0 / (lam - 1.0) + 2.0))
        coeff = D * math.exp(log_br * (lam - 1.0) * p / D)
        const = coeff ** (-D / ((lam - 1.0) * n))
        return LayerConstant(branch="lambda>1", coefficient=coeff, constant=const)
    log_br = (-(n / p + 2.0) * math.log(1.0 - lam)
              + math.lgamma(n / p + 2.0)
              + math.lgamma(lam / (1.0 - lam) - n / p)
              - math.lgamma((lam - 2.0) / (lam - 1.0)))
    coeff = (lam * p / (n + p)
             * (lam - n / (n + p)) ** ((1.0 - lam) * (n + p) / p - 1.0)
             * math.exp(log_br * (1.0 - lam)))
    const = coeff ** (p / ((lam - 1.0) * n))
    return LayerConstant(branch="lambda<1", coefficient=coeff, constant=const)


def level_sobolev_constant(n: int, r: float) -> float:
    """Gamma-product constant of the level-set Sobolev lower bound (1 < r < n)."""
    if not 1 < r < n:
        raise ValueError(f"requires 1 < r < n, got r={r}, n={n}")
    q = n * r / (n - r)
    log_ratio = math.lgamma(n / r) + math.lgamma(n + 1.0 - n / r) - math.lgamma(n)
    return (n ** (1.0 / q)
            * ((n - r) / (r - 1.0)) ** ((r - 1.0) / r)
            * math.exp(log_ratio / n))


def sobolev_extremal(n: int, r: float, t, variant: str = FR_EXPONENT_DECAYING):
    """Radial profile (1 + t^(r/(r-1)))^e of the sharp-Sobolev equality case.

    The default exponent e = 1 - n/r decays at infinity; ``variant="printed"``
    selects e = 1 - r/n instead.  Undefined for r = 1.
    """
    if r <= 1:
        raise ValueError("the Sobolev extremal profile is unsupported at r = 1")
    e = fr_exponent(n, r, variant)
    t = np.asarray(t, dtype=float)
    out = (1.0 + t ** (r / (r - 1.0))) ** e
    return float(out) if out.ndim == 0 else out


def fr_exponent(n: int, r: float, variant: str = FR_EXPONENT_DECAYING) -> float:
    if variant == FR_EXPONENT_DECAYING:
        return 1.0 - n / r
    if variant == FR_EXPONENT_PRINTED:
        return 1.0 - r / n
    raise ValueError(f"unknown exponent variant {variant!r}")


def layer_extremal(p: float, lam: float, t):
    """Radial profile of the layer-cake equality case.

    (1 + t^p)^(1/(lam-1)) for lam < 1 and (1 - t^p)_+^(1/(lam-1)) for lam > 1.
    """
    t = np.asarray(t, dtype=float)
    if lam > 1:
        out = np.where(t < 1.0, np.clip(1.0 - t ** p, 0.0, None) ** (1.0 / (lam - 1.0)), 0.0)
    else:
        out = (1.0 + t ** p) ** (1.0 / (lam - 1.0))
    return float(out) if out.ndim == 0 else out


def extremal_profile(kind: str, params: ParamSet, t):
    """Evaluate one of the two equality-case profiles at t >= 0.

    ``kind`` is "sobolev" (needs r > 1) or "layer".
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("profile argument must be nonnegative")
    if kind == "sobolev":
        return sobolev_extremal(params.n, params.r, t)
    if kind == "layer":
        return layer_extremal(params.p, params.lam, t)
    raise ValueError(f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# Numerically derived constants

_c1_cache: dict[tuple[int, float], float] = {}
_c1_lock = threading.Lock()


def _radial_integral_log(log_fun, tail_exponent: float, nodes: int) -> float:
    """Gauss-Legendre integral over (0, inf) of an integrand given in log form.

    ``log_fun(log_t)`` returns the log of the integrand; the integrand decays
    like t^tail_exponent (< -1) at infinity.  Nodes map through
    t = (u/(1-u))^gamma with gamma sized so the transformed integrand vanishes
    algebraically fast at u = 1; working in logs keeps the slow-tail cases
    (r near n) free of overflow.
    """
    from scipy.special import roots_legendre

    gamma = max(1.0, 3.0 / (-tail_exponent - 1.0))
    u, w = roots_legendre(nodes)
    u = 0.5 * (u + 1.0)          # (0,1)
    w = 0.5 * w
    log_base = np.log(u) - np.log1p(-u)
    log_t = gamma * log_base
    log_jac = math.log(gamma) + (gamma - 1.0) * log_base - 2.0 * np.log1p(-u)
    vals = np.exp(log_fun(log_t) + log_jac + np.log(w))
    return float(np.sum(vals))


def _sobolev_ratio(n: int, r: float, nodes: int) -> float:
    """Equality-case ratio V_r(f*, B) / (||f*||_q^r vol(B)^{r/n}), f* radial."""
    q = n * r / (n - r)
    e = 1.0 - n / r
    rp = r / (r - 1.0)
    tail_g = n - 1.0 - r + r * (r - n) / (r - 1.0)
    tail_q = n - 1.0 - n * r / (r - 1.0)
    log_coeff = r * math.log(abs(e) * rp)

    def log_grad(log_t):
        # log of t^(n-1) |F'(t)|^r with F = (1 + t^rp)^e
        return (log_coeff + (n - 1.0 + r / (r - 1.0)) * log_t
                + (e - 1.0) * r * np.logaddexp(0.0, rp * log_t))

    def log_power(log_t):
        # log of t^(n-1) F(t)^q
        return (n - 1.0) * log_t + e * q * np.logaddexp(0.0, rp * log_t)

    i_g = _radial_integral_log(log_grad, tail_g, nodes)
    i_q = _radial_integral_log(log_power, tail_q, nodes)
    omega_n = unit_ball_volume(n)
    v_r = omega_n * i_g                       # (1/n) * n*omega_n * int
    norm_q = (n * omega_n * i_q) ** (1.0 / q)
    return v_r / (norm_q ** r * omega_n ** (r / n))


def sharp_sobolev_constant(n: int, r: float) -> float:
    """Optimal constant of the functional mixed-volume lower bound (1 < r < n).

    Defined by equality at the radial extremal profile: the r-th root of
    V_r(f*, B) / (||f*||_q^r vol(B)^{r/n}).  Computed by high-resolution
    radial quadrature at two resolutions; failure to agree raises.
    Cached per (n, r); the cache is written under a lock and read freely.
    """
    if not 1 < r < n:
        raise ValueError(f"requires 1 < r < n, got r={r}, n={n}")
    key = (n, float(r))
    if key in _c1_cache:
        return _c1_cache[key]
    with _c1_lock:
        if key in _c1_cache:
            return _c1_cache[key]
        coarse = _sobolev_ratio(n, r, 2000)
        fine = _sobolev_ratio(n, r, 4000)
        if abs(fine - coarse) > 1e-8 * abs(fine):
            raise NumericFailure(
                f"sharp-constant quadrature did not converge for n={n}, r={r}: "
                f"{coarse!r} vs {fine!r}")
        val = fine ** (1.0 / r)
        _c1_cache[key] = val
        return val


def main_constant(params: ParamSet) -> float:
    """Sharp constant of the composed main inequality.

    n * c1^r * (c_np * a)^{r/p} for 1 < r < n; the r = 1 chain replaces the
    c1 factor by 1 (its link holds with constant one).
    """
    n, p, r = params.n, params.p, params.r
    chain = sharp_sobolev_constant(n, r) if r > 1 else 1.0
    a = layer_constant(params).constant
    return n * chain ** r * (centroid_normalization(n, p) * a) ** (r / p)


@dataclass(frozen=True)
class ConstantBundle:
    """Every scalar constant of a parameter set, evaluated once."""

    params: ParamSet
    omega_n: float
    c_np: float
    branch: str
    coefficient: float
    constant: float
    c2: float | None
    c1: float | None
    c_main: float

    def as_dict(self) -> dict:
        return {
            "n": self.params.n,
            "p": self.params.p,
            "r": self.params.r,
            "lambda": self.params.lam,
            "q": self.params.q,
            "omega_n": self.omega_n,
            "c_np": self.c_np,
            "branch": self.branch,
            "A_or_B": self.coefficient,
            "a": self.constant,
            "c2": self.c2,
            "c1": self.c1,
            "C_main": self.c_main,
        }


def constant_bundle(params: ParamSet) -> ConstantBundle:
    """Evaluate all constants for one parameter set (c2/c1 are None at r = 1)."""
    lc = layer_constant(params)
    has_r = params.r > 1
    return ConstantBundle(
        params=params,
        omega_n=unit_ball_volume(params.n),
        c_np=centroid_normalization(params.n, params.p),
        branch=lc.branch,
        coefficient=lc.coefficient,
        constant=lc.constant,
        c2=level_sobolev_constant(params.n, params.r) if has_r else None,
        c1=sharp_sobolev_constant(params.n, params.r) if has_r else None,
        c_main=main_constant(params),
    )
