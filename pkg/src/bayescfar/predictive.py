"""Bayesian predictive densities and false-alarm integrals.

Two routes to the same quantities live here on purpose. The order-statistic
chain for exponential clutter has closed forms (alternating binomial sums);
the generic machinery integrates likelihood times posterior numerically for
any one- or two-parameter clutter model. Each route is used to check the
other in the test suite.

Closed-form evaluation policy: the alternating sum is computed with
compensated summation. When its cancellation diagnostic shows the float
terms have lost digits (ratio above 1e4) the same sum is re-evaluated in
exact rational arithmetic, which is immune to cancellation because the
inputs are exact binary rationals. Beyond a ratio of 1e8 the closed form is
abandoned for the positive-integrand quadrature form, which by construction
has no cancellation at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .numerics import (
    QuadratureSettings,
    alternating_binomial_sum,
    binom,
    integrate_semi_infinite,
)

__all__ = [
    "OsPredictive",
    "PredictiveModel",
    "posterior_lambda_os",
    "os_predictive_density",
    "os_pfa",
    "os_pfa_quadrature",
    "generic_predictive_density",
    "generic_pfa",
]

# Cancellation ratio beyond which the closed form switches to quadrature.
FALLBACK_CANCELLATION = 1e8
# Ratio beyond which the float sum is re-done in exact rational arithmetic:
# term rounding costs about cancellation * eps digits, so 1e4 keeps the pure
# float path comfortably below 1e-11 relative error.
EXACT_RECHECK_CANCELLATION = 1e4

# Pure-relative control for the internal quadrature fallback and oracle:
# false-alarm probabilities spanning many decades need the error budget tied
# to the value, not to an absolute floor.
_OS_QUAD = QuadratureSettings(
    relative_tolerance=1e-10, absolute_tolerance=1e-300, max_subdivisions=200
)

_NORMALIZATION_TOLERANCE = 1e-6


@dataclass(frozen=True)
class OsPredictive:
    """Conditioning data for the order-statistic chain.

    n window cells, order index k, and the observed value t of the k-th
    order statistic. t = 0 is rejected: the posterior it would induce is not
    normalizable, and a zero order statistic has probability zero under any
    continuous clutter model.
    """

    n: int
    k: int
    t: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if not (1 <= self.k <= self.n):
            raise ValueError(f"k={self.k} outside 1..{self.n}")
        if not (self.t > 0) or not math.isfinite(self.t):
            raise ValueError(f"observed order statistic must be positive, got {self.t}")


def _log_prefactor(os: OsPredictive) -> float:
    return math.log(os.k * os.t) + binom(os.n, os.k).log()


def posterior_lambda_os(rate_lambda: float, os: OsPredictive) -> float:
    """Posterior density of the exponential rate given the k-th order statistic.

    Under the scale-invariant reciprocal prior the posterior is

        t * k * C(n,k) * (1 - e^{-lambda t})^{k-1} * e^{-lambda t (n-k+1)},

    normalized to integrate to 1 over lambda in (0, inf) for every (n, k, t).
    It depends on lambda and t only through their product, which is what
    makes every detector built on it scale-free.
    """
    if not (rate_lambda > 0):
        raise ValueError(f"rate_lambda must be positive, got {rate_lambda}")
    lt = rate_lambda * os.t
    grow = -math.expm1(-lt)
    if os.k > 1 and grow == 0.0:
        return 0.0
    log_body = -lt * (os.n - os.k + 1)
    if os.k > 1:
        log_body += (os.k - 1) * math.log(grow)
    log_val = _log_prefactor(os) + log_body
    return math.exp(log_val) if log_val > -745.0 else 0.0


def _series_exact(x: float, os: OsPredictive, power: int) -> float:
    # Exactly rounded: x and t are exact binary rationals, so the whole sum
    # is a rational number and float() rounds it once.
    xf, tf = Fraction(x), Fraction(os.t)
    acc = Fraction(0)
    for i in range(os.k):
        c = Fraction(math.comb(os.k - 1, i))
        d = (xf + tf * (os.n - os.k + 1 + i)) ** power
        acc = acc + c / d if i % 2 == 0 else acc - c / d
    return float(os.k * math.comb(os.n, os.k) * tf * acc)


def _os_closed_form(x: float, os: OsPredictive, power: int) -> float | None:
    """k t C(n,k) sum_i (-1)^i C(k-1,i) (x + t(n-k+1+i))^(-power), or None.

    Returns None when cancellation exceeds the fallback threshold and the
    caller should integrate instead.
    """
    n, k, t = os.n, os.k, os.t

    def term(i: int) -> float:
        return (x + t * (n - k + 1 + i)) ** -power

    series = alternating_binomial_sum(k, term)
    if series.cancellation > FALLBACK_CANCELLATION:
        return None
    if series.cancellation > EXACT_RECHECK_CANCELLATION:
        return _series_exact(x, os, power)
    c = binom(n, k)
    if c.exact:
        return k * t * c.value * series.value
    if series.value <= 0.0:
        return None
    return math.exp(_log_prefactor(os) + math.log(series.value))


def _os_integrand_log(rate_lambda: float, os: OsPredictive, shift: float, extra_lambda: bool) -> float:
    lt = rate_lambda * os.t
    grow = -math.expm1(-lt)
    if os.k > 1 and grow == 0.0:
        return -math.inf
    val = -rate_lambda * (shift + os.t * (os.n - os.k + 1))
    if os.k > 1:
        val += (os.k - 1) * math.log(grow)
    if extra_lambda:
        val += math.log(rate_lambda)
    return val


def _os_quadrature(shift: float, os: OsPredictive, extra_lambda: bool,
                   settings: QuadratureSettings) -> float:
    logpref = _log_prefactor(os)

    def f(rate_lambda: float) -> float:
        log_val = logpref + _os_integrand_log(rate_lambda, os, shift, extra_lambda)
        return math.exp(log_val) if log_val > -745.0 else 0.0

    # integrand scale in lambda is set by 1/t
    ladder = [10.0**e / os.t for e in range(-6, 7)]
    return integrate_semi_infinite(f, settings, breakpoints=ladder).value


def os_predictive_density(z0: float, os: OsPredictive,
                          settings: QuadratureSettings = _OS_QUAD) -> float:
    """Predictive density of the cell under test given the order statistic.

    Closed form: k t C(n,k) sum_i (-1)^i C(k-1,i) [z0 + t(n-k+1+i)]^{-2},
    replaced by the quadrature form when cancellation is severe. Severe
    failures of the quadrature itself surface as QuadratureError rather
    than a silently wrong value.
    """
    if not (z0 >= 0):
        raise ValueError(f"z0 must be nonnegative, got {z0}")
    value = _os_closed_form(z0, os, power=2)
    if value is None:
        value = _os_quadrature(z0, os, extra_lambda=True, settings=settings)
    return max(value, 0.0)


def os_pfa(tau: float, os: OsPredictive,
           settings: QuadratureSettings = _OS_QUAD) -> float:
    """False-alarm probability of the threshold tau under the predictive law.

    Closed form: k t C(n,k) sum_i (-1)^i C(k-1,i) [tau + t(n-k+1+i)]^{-1}.
    At tau = 0 the sum telescopes to exactly 1 (a Beta-function identity),
    so 1.0 is returned without summing. Strictly decreasing in tau; depends
    on tau and t only through tau/t.
    """
    if not (tau >= 0):
        raise ValueError(f"tau must be nonnegative, got {tau}")
    if tau == 0.0:
        return 1.0
    value = _os_closed_form(tau, os, power=1)
    if value is None:
        value = _os_quadrature(tau, os, extra_lambda=False, settings=settings)
    return min(max(value, 0.0), 1.0)


def os_pfa_quadrature(tau: float, os: OsPredictive,
                      settings: QuadratureSettings = _OS_QUAD) -> float:
    """Independent oracle for os_pfa: the same probability as one integral.

    Integrating the predictive density over (tau, inf) before any binomial
    expansion leaves k t C(n,k) * integral of
    (1 - e^{-lambda t})^{k-1} e^{-lambda (tau + t(n-k+1))} over lambda,
    whose integrand is positive, so nothing cancels. Default settings are
    pure-relative so small probabilities keep full relative accuracy.
    """
    if not (tau >= 0):
        raise ValueError(f"tau must be nonnegative, got {tau}")
    value = _os_quadrature(tau, os, extra_lambda=False, settings=settings)
    return min(max(value, 0.0), 1.0)


def _scan_axis(values: np.ndarray, grid: np.ndarray) -> tuple[float, float]:
    peak = values.max()
    idx = np.nonzero(values > peak * 1e-280)[0]
    lo = grid[max(idx[0] - 1, 0)]
    hi = grid[min(idx[-1] + 1, len(grid) - 1)]
    return float(lo), float(hi)


def _locate_support_1d(density: Callable[[float], float]) -> list[float]:
    grid = np.geomspace(1e-12, 1e12, 131073)
    vals = np.fromiter((density(x) for x in grid), dtype=float, count=len(grid))
    if not np.all(np.isfinite(vals)):
        raise ValueError("posterior evaluated to a non-finite value during support scan")
    if vals.max() <= 0.0:
        raise ValueError(
            "posterior support not found on (1e-12, 1e12); "
            "density may be zero everywhere or concentrated outside the scanned range"
        )
    lo, hi = _scan_axis(vals, grid)
    return list(np.geomspace(lo, hi, 49))


def _locate_support_2d(
    density: Callable[[tuple[float, float]], float],
) -> tuple[list[float], list[float]]:
    lo = [1e-12, 1e-12]
    hi = [1e12, 1e12]
    for _ in range(4):
        ga = np.geomspace(lo[0], hi[0], 129)
        gb = np.geomspace(lo[1], hi[1], 129)
        vals = np.empty((len(ga), len(gb)))
        for i, a in enumerate(ga):
            for j, b in enumerate(gb):
                v = density((a, b))
                if not math.isfinite(v):
                    raise ValueError(
                        "posterior evaluated to a non-finite value during support scan"
                    )
                vals[i, j] = v
        if vals.max() <= 0.0:
            raise ValueError(
                "posterior support not found on (1e-12, 1e12)^2; "
                "spikes narrower than about 0.5% relative width are beyond the scan"
            )
        new_lo = list(lo)
        new_hi = list(hi)
        new_lo[0], new_hi[0] = _scan_axis(vals.max(axis=1), ga)
        new_lo[1], new_hi[1] = _scan_axis(vals.max(axis=0), gb)
        shrunk = new_hi[0] / new_lo[0] < 0.5 * hi[0] / lo[0] or \
            new_hi[1] / new_lo[1] < 0.5 * hi[1] / lo[1]
        lo, hi = new_lo, new_hi
        if not shrunk:
            break
    return list(np.geomspace(lo[0], hi[0], 33)), list(np.geomspace(lo[1], hi[1], 33))


class PredictiveModel:
    """A predictive density defined by a likelihood and a normalized posterior.

    likelihood(z0, theta) is the clutter density of the cell under test given
    the parameter; posterior(theta) is the parameter density given the
    observed window, prior already folded in. theta is a positive float when
    parameter_dimension is 1 and a pair of positive floats when it is 2.

    Construction scans for the posterior's support on a dense logarithmic
    grid (so that sharply concentrated posteriors are not stepped over by
    the quadrature rule) and then verifies the posterior integrates to 1,
    within a small multiple of the integration tolerance floored at 1e-6.
    Both failures raise ValueError.
    """

    def __init__(
        self,
        likelihood: Callable[..., float],
        posterior: Callable[..., float],
        parameter_dimension: int,
        integration: QuadratureSettings = QuadratureSettings(),
    ):
        if parameter_dimension not in (1, 2):
            raise ValueError(
                f"parameter_dimension must be 1 or 2, got {parameter_dimension}"
            )
        self.likelihood = likelihood
        self.posterior = posterior
        self.parameter_dimension = parameter_dimension
        self.integration = integration
        if parameter_dimension == 1:
            self._breakpoints = _locate_support_1d(posterior)
            self._breakpoints_b = None
            norm = integrate_semi_infinite(
                posterior, integration, breakpoints=self._breakpoints
            ).value
        else:
            self._breakpoints, self._breakpoints_b = _locate_support_2d(posterior)

            def marginal_a(a: float) -> float:
                return integrate_semi_infinite(
                    lambda b: posterior((a, b)), integration,
                    breakpoints=self._breakpoints_b,
                ).value

            norm = integrate_semi_infinite(
                marginal_a, integration, breakpoints=self._breakpoints
            ).value
        tol = max(_NORMALIZATION_TOLERANCE, 100.0 * integration.relative_tolerance)
        if abs(norm - 1.0) > tol:
            raise ValueError(
                f"posterior integrates to {norm!r}, not 1 (tolerance {tol:g}); "
                "pass a normalized posterior"
            )


def generic_predictive_density(z0: float, model: PredictiveModel) -> float:
    """Predictive density: integral of likelihood(z0, theta) * posterior(theta)."""
    if not (z0 >= 0):
        raise ValueError(f"z0 must be nonnegative, got {z0}")
    settings = model.integration
    if model.parameter_dimension == 1:
        return integrate_semi_infinite(
            lambda th: model.likelihood(z0, th) * model.posterior(th),
            settings,
            breakpoints=model._breakpoints,
        ).value

    def outer(a: float) -> float:
        return integrate_semi_infinite(
            lambda b: model.likelihood(z0, (a, b)) * model.posterior((a, b)),
            settings,
            breakpoints=model._breakpoints_b,
        ).value

    return integrate_semi_infinite(
        outer, settings, breakpoints=model._breakpoints
    ).value


# z0-axis subdivision hints for the tail integral; spans any desk-scale unit.
_Z0_LADDER = [10.0**e for e in range(-9, 10)]


def generic_pfa(tau: float, model: PredictiveModel) -> float:
    """Probability that the cell under test exceeds tau, under the model.

    Integrates the predictive density over (tau, inf). The outer tolerance
    is kept a factor 30 looser than the inner one so that round-off noise
    from the inner quadrature cannot stall the outer refinement.
    """
    if not (tau >= 0):
        raise ValueError(f"tau must be nonnegative, got {tau}")
    inner = model.integration
    outer = QuadratureSettings(
        relative_tolerance=min(30.0 * inner.relative_tolerance, 1e-2),
        absolute_tolerance=inner.absolute_tolerance,
        max_subdivisions=inner.max_subdivisions,
    )
    value = integrate_semi_infinite(
        lambda x: generic_predictive_density(tau + x, model),
        outer,
        breakpoints=_Z0_LADDER,
    ).value
    return min(max(value, 0.0), 1.0)
