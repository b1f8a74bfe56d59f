"""Independent oracle routes for the closed-form constants.

Each oracle rebuilds a constant through quadrature plus black-box numeric
minimization, never through the closed form it checks.  The CLI exposes the
comparison so a run can certify the constants on demand.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize

from .params import (ParamSet, envelope_profile_integral, layer_constant,
                     minimize_power_sum)


def golden_minimum(fun, lo: float = 1e-6, hi: float = 1e6) -> float:
    """Golden-section minimum over (lo, hi), bracketed on a geometric scan."""
    grid = np.geomspace(lo, hi, 240)
    vals = np.array([fun(s) for s in grid])
    k = int(np.argmin(vals))
    if k in (0, len(grid) - 1):
        raise ValueError("minimum not bracketed inside the scan range")
    res = optimize.minimize_scalar(fun, bracket=(grid[k - 1], grid[k], grid[k + 1]),
                                   method="golden", options={"xtol": 1e-14})
    return float(res.fun)


def layer_coefficient_oracle(params: ParamSet, norm_stub: float = 0.7,
                             layer_stub: float = 1.3) -> float:
    """Envelope coefficient implied by the bound at stand-in norm values.

    Follows the derivation operationally: quadrature for the envelope's
    integral, golden-section minimization of the two-power envelope, then
    extraction of the coefficient that makes the bound an identity.  The
    result must not depend on the stand-in values.
    """
    n, p, lam = params.n, params.p, params.lam
    env = envelope_profile_integral(params)
    d = params.chain_exponent
    if lam > 1:
        alpha, beta = lam - 1.0, p / (n + p)
        a = norm_stub / lam                      # stand-in ||g||_lam^lam / lam
        b = layer_stub ** (n / (n + p)) * env ** (p / (n + p))
        val = golden_minimum(lambda s: a * s ** (-alpha) + b * s ** beta)
        return val * norm_stub ** (-p / d) * layer_stub ** (-(lam - 1.0) * n / d)
    alpha = 1.0 - lam
    beta = d / (n + p)
    a = norm_stub                                # stand-in ||g||_1
    b = layer_stub ** (n / (n + p)) * env ** (p / (n + p))
    val = golden_minimum(lambda s: a * s ** (-alpha) + b * s ** beta)
    return lam * val * norm_stub ** (-d / p) * layer_stub ** (-(1.0 - lam) * n / p)


def layer_constant_discrepancy(params: ParamSet) -> float:
    """Relative gap between the closed-form envelope coefficient and its oracle."""
    closed = layer_constant(params).coefficient
    worst = 0.0
    for stub in ((0.7, 1.3), (1.9, 0.4)):
        implied = layer_coefficient_oracle(params, *stub)
        worst = max(worst, abs(implied - closed) / closed)
    return worst


def power_sum_discrepancy(rng: np.random.Generator, trials: int = 100) -> float:
    """Closed-form two-power minimum vs golden-section search."""
    worst = 0.0
    for _ in range(trials):
        a, b, alpha, beta = rng.uniform(0.1, 5.0, size=4)
        closed = minimize_power_sum(a, b, alpha, beta).value
        numeric = golden_minimum(lambda s: a * s ** (-alpha) + b * s ** beta)
        worst = max(worst, abs(closed - numeric) / closed)
    return worst


DEFAULT_ORACLE_POINTS = (
    ParamSet(n=2, p=1.0, r=1.5, lam=2.0),
    ParamSet(n=2, p=2.0, r=1.5, lam=3.0),
    ParamSet(n=2, p=2.0, r=1.5, lam=0.9),
    ParamSet(n=3, p=1.0, r=1.5, lam=2.0),
    ParamSet(n=2, p=1.0, r=1.5, lam=0.8),
    ParamSet(n=3, p=2.0, r=2.0, lam=0.85),
)


def run_constant_oracles(seed: int = 0) -> dict:
    """Max discrepancies of every constant oracle (CLI `oracle constants`)."""
    layer_worst = max(layer_constant_discrepancy(ps) for ps in DEFAULT_ORACLE_POINTS)
    power_worst = power_sum_discrepancy(np.random.default_rng(seed))
    return {
        "layer_constant_max_rel_err": layer_worst,
        "power_sum_max_rel_err": power_worst,
        "max_discrepancy": max(layer_worst, power_worst),
    }
