"""Sliding-window decision rules.

All rules share the same shape: declare a detection when the cell under
test strictly exceeds a multiple of a window statistic. The Bayesian
order-statistic rule is evaluated the other way round, by comparing the
predictive false-alarm probability of the observed cell against the design
value, which avoids inverting the Pfa curve; strict monotonicity makes the
two phrasings equivalent.

Ties sit with H0 everywhere: H1 requires a strict inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable

from .clutter_models import CrpWindow, kth_order_statistic, window_sum
from .numerics import RootSettings, solve_monotone_decreasing
from .predictive import OsPredictive, os_pfa

__all__ = [
    "Family",
    "Verdict",
    "DecisionPath",
    "DetectorSpec",
    "Decision",
    "DegenerateWindowError",
    "bayes_os_decide",
    "bayes_os_threshold",
    "min_cfar_decide",
    "ca_cfar_decide",
    "custom_g_decide",
    "threshold_multiplier",
]


class Family(str, Enum):
    BAYES_OS = "bayes_os"
    MIN_CFAR = "min_cfar"
    CA_CFAR = "ca_cfar"
    CUSTOM_G = "custom_g"


class Verdict(str, Enum):
    H0 = "H0"
    H1 = "H1"


class DecisionPath(str, Enum):
    THRESHOLD = "threshold"
    PFA_COMPARISON = "pfa_comparison"


class DegenerateWindowError(ValueError):
    """The window statistic is zero where the rule needs it positive."""


@dataclass(frozen=True)
class DetectorSpec:
    """Detector family, window size, order index (OS families), design Pfa."""

    family: Family
    n: int
    design_pfa: float
    k: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if self.n < 1:
            raise ValueError(f"window size n must be at least 1, got {self.n}")
        if not (0.0 < self.design_pfa < 1.0):
            raise ValueError(f"design_pfa must lie in (0, 1), got {self.design_pfa}")
        if self.family is Family.BAYES_OS:
            if self.k is None:
                raise ValueError("bayes_os requires an order index k")
            if not (1 <= self.k <= self.n):
                raise ValueError(f"k={self.k} outside 1..{self.n}")
        elif self.family is Family.MIN_CFAR:
            if self.k not in (None, 1):
                raise ValueError("min_cfar is the k=1 rule; leave k unset or 1")
        elif self.k is not None:
            raise ValueError(f"{self.family.value} takes no order index k")


@dataclass(frozen=True)
class Decision:
    """One verdict with the quantity the cell was compared against.

    comparison_value is the evaluated false-alarm probability on the
    pfa_comparison path and the threshold tau*g on the threshold path.
    """

    verdict: Verdict
    statistic_z0: float
    comparison_value: float
    path: DecisionPath


def _require_window(window: CrpWindow, spec: DetectorSpec) -> None:
    if window.n != spec.n:
        raise ValueError(f"window has {window.n} samples but the detector expects {spec.n}")


def _require_z0(z0: float) -> None:
    if not (z0 >= 0) or not math.isfinite(z0):
        raise ValueError(f"z0 must be finite and nonnegative, got {z0}")


def bayes_os_decide(z0: float, window: CrpWindow, spec: DetectorSpec) -> Decision:
    """Bayesian order-statistic rule via the comparison shortcut.

    Evaluates the predictive false-alarm probability at the observed cell
    and rejects H0 when it falls strictly below the design value. No
    threshold is ever solved for.
    """
    if spec.family is not Family.BAYES_OS:
        raise ValueError(f"bayes_os_decide needs a bayes_os spec, got {spec.family.value}")
    _require_z0(z0)
    _require_window(window, spec)
    t = kth_order_statistic(window, spec.k).value_t
    if t == 0.0:
        raise DegenerateWindowError(
            f"order statistic k={spec.k} of the window is zero; the rule is undefined"
        )
    pfa_at_z0 = os_pfa(z0, OsPredictive(spec.n, spec.k, t))
    verdict = Verdict.H1 if pfa_at_z0 < spec.design_pfa else Verdict.H0
    return Decision(verdict, z0, pfa_at_z0, DecisionPath.PFA_COMPARISON)


@lru_cache(maxsize=4096)
def _bayes_multiplier(n: int, k: int, design_pfa: float, settings: RootSettings) -> float:
    # tau for unit order statistic; thresholds scale linearly in t
    unit = OsPredictive(n, k, 1.0)
    return solve_monotone_decreasing(lambda m: os_pfa(m, unit), design_pfa, settings)


def bayes_os_threshold(spec: DetectorSpec, t: float,
                       settings: RootSettings = RootSettings()) -> float:
    """Explicit threshold tau with os_pfa(tau; n, k, t) = design_pfa.

    k = 1 has the closed form t*n*(1/pfa - 1); other k invert the Pfa curve
    by bisection. The multiplier tau/t depends only on (n, k, pfa), so it is
    solved once at t = 1 and cached.
    """
    if spec.family is not Family.BAYES_OS:
        raise ValueError(f"bayes_os_threshold needs a bayes_os spec, got {spec.family.value}")
    if not (t > 0) or not math.isfinite(t):
        raise ValueError(f"observed order statistic must be positive, got {t}")
    if spec.k == 1:
        return t * spec.n * (1.0 / spec.design_pfa - 1.0)
    return t * _bayes_multiplier(spec.n, spec.k, spec.design_pfa, settings)


def min_cfar_decide(z0: float, window: CrpWindow, spec: DetectorSpec) -> Decision:
    """Minimum-based rule: H1 iff z0 > n*(1/pfa - 1) * min(window)."""
    if spec.family is not Family.MIN_CFAR:
        raise ValueError(f"min_cfar_decide needs a min_cfar spec, got {spec.family.value}")
    _require_z0(z0)
    _require_window(window, spec)
    threshold = spec.n * (1.0 / spec.design_pfa - 1.0) * min(window.samples)
    verdict = Verdict.H1 if z0 > threshold else Verdict.H0
    return Decision(verdict, z0, threshold, DecisionPath.THRESHOLD)


def ca_cfar_decide(z0: float, window: CrpWindow, spec: DetectorSpec) -> Decision:
    """Cell-averaging rule: H1 iff z0 > (pfa^(-1/n) - 1) * sum(window).

    The multiplier is exactly calibrated in exponential clutter; the
    simulation harness certifies that rather than trusting it.
    """
    if spec.family is not Family.CA_CFAR:
        raise ValueError(f"ca_cfar_decide needs a ca_cfar spec, got {spec.family.value}")
    _require_z0(z0)
    _require_window(window, spec)
    threshold = (spec.design_pfa ** (-1.0 / spec.n) - 1.0) * window_sum(window)
    verdict = Verdict.H1 if z0 > threshold else Verdict.H0
    return Decision(verdict, z0, threshold, DecisionPath.THRESHOLD)


def custom_g_decide(z0: float, window: CrpWindow, tau: float,
                    g: Callable[[CrpWindow], float]) -> Decision:
    """General rule H1 iff z0 > tau * g(window), for a caller-supplied g."""
    _require_z0(z0)
    if not (tau >= 0) or not math.isfinite(tau):
        raise ValueError(f"tau must be finite and nonnegative, got {tau}")
    threshold = tau * g(window)
    verdict = Verdict.H1 if z0 > threshold else Verdict.H0
    return Decision(verdict, z0, threshold, DecisionPath.THRESHOLD)


def threshold_multiplier(spec: DetectorSpec) -> float:
    """The scalar m with threshold = m * (window statistic) for spec's family.

    The statistic is the k-th order statistic for bayes_os, the minimum for
    min_cfar, and the window sum for ca_cfar. custom_g has no closed
    multiplier and is rejected.
    """
    if spec.family is Family.BAYES_OS:
        return bayes_os_threshold(spec, 1.0)
    if spec.family is Family.MIN_CFAR:
        return spec.n * (1.0 / spec.design_pfa - 1.0)
    if spec.family is Family.CA_CFAR:
        return spec.design_pfa ** (-1.0 / spec.n) - 1.0
    raise ValueError("custom_g has no closed-form threshold multiplier")
