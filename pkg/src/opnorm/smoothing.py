"""Randomized-smoothing radius arithmetic and l2 -> linf translation.

The certified l2 radius of a smoothed classifier is
(sigma/2) (Phi^-1(p_a) - Phi^-1(p_b)); dividing a certified l2 radius by a
certified bound kappa >= ||Pi||_{inf->2} yields a certified linf radius
for classifiers of the form f(Pi x). Both operations, plus the noise-scale
rule for projected smoothing and certified-accuracy curves, live here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import PreconditionError

PROBABILITY_CLAMP = 1e-12


class ProbabilityClampWarning(UserWarning):
    """A class probability sat on {0, 1} and was clamped before inversion."""


# Rational approximation of the standard-normal quantile (Acklam's
# coefficients, |rel err| < 1.2e-9), refined below with one Halley step
# against erfc to full double precision.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4])
                 * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4])
                  * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return (((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4])
              * r + _A[5]) * q)
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4])
               * r + 1.0))


def _quantile_lower_half(p: float) -> float:
    # p <= 0.5, so Phi(x) = 0.5 erfc(-x/sqrt(2)) evaluates erfc on a
    # non-negative argument at full relative precision.
    x = _acklam(p)
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def normal_quantile(p: float) -> float:
    """Inverse standard-normal CDF, accurate to ~1e-15 relative.

    Acklam's rational approximation plus one Halley refinement against
    erfc; the upper half is folded onto the lower by symmetry (1 - p is
    exact there), so both tails keep full precision. p must lie strictly
    inside (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise PreconditionError(f"quantile argument must be in (0, 1), got {p}")
    if p > 0.5:
        return -_quantile_lower_half(1.0 - p)
    return _quantile_lower_half(p)


@dataclass(frozen=True)
class SmoothingEstimate:
    """Noise level and top-two class probabilities of a smoothed classifier."""

    sigma: float
    p_a: float
    p_b: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise PreconditionError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.p_b <= 1.0 or not 0.0 <= self.p_a <= 1.0:
            raise PreconditionError("probabilities must lie in [0, 1]")
        if self.p_a < self.p_b:
            raise PreconditionError(
                f"top-class probability {self.p_a} below runner-up {self.p_b}")
        if self.p_a + self.p_b > 1.0 + 1e-12:
            raise PreconditionError("p_a + p_b must not exceed 1")


@dataclass(frozen=True)
class RobustnessRecord:
    """Per-example outcome: label correctness and certified l2 radius.

    Abstentions are encoded as radius 0 with correct=False.
    """

    correct: bool
    l2_radius: float

    def __post_init__(self):
        if self.l2_radius < 0:
            raise PreconditionError(
                f"certified radius must be non-negative, got {self.l2_radius}")


def _clamped(p: float) -> float:
    if p < PROBABILITY_CLAMP or p > 1.0 - PROBABILITY_CLAMP:
        warnings.warn(
            f"probability {p} clamped to [{PROBABILITY_CLAMP}, "
            f"{1 - PROBABILITY_CLAMP}] before quantile inversion",
            ProbabilityClampWarning, stacklevel=3)
        return min(max(p, PROBABILITY_CLAMP), 1.0 - PROBABILITY_CLAMP)
    return p


def certified_radius(est: SmoothingEstimate) -> float:
    """(sigma/2) (Phi^-1(p_a) - Phi^-1(p_b)); zero when the classes tie."""
    p_a = _clamped(est.p_a)
    p_b = _clamped(est.p_b)
    if p_a == p_b:
        return 0.0
    return est.sigma / 2.0 * (normal_quantile(p_a) - normal_quantile(p_b))


def translate_radius(l2_radius: float, kappa: float) -> float:
    """Certified linf radius l2_radius / kappa, valid for f(Pi x) classifiers
    whenever kappa >= ||Pi||_{inf->2}."""
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    if l2_radius < 0:
        raise PreconditionError(f"radius must be non-negative, got {l2_radius}")
    return l2_radius / kappa


def noise_sigma(lam: float, n: int, r: int, sigma_base: float) -> float:
    """Noise scale lam * sigma_base * sqrt(n/r) for rank-r projected smoothing."""
    if r < 1:
        raise PreconditionError("projection rank must be at least 1")
    if not 1 <= r <= n:
        raise PreconditionError(f"need 1 <= r <= n, got r={r}, n={n}")
    if not 0.0 <= lam <= 1.0:
        raise PreconditionError(f"lambda must lie in [0, 1], got {lam}")
    if sigma_base <= 0:
        raise PreconditionError("sigma_base must be positive")
    return lam * sigma_base * math.sqrt(n / r)


def certified_accuracy(records, epsilon: float) -> float:
    """Fraction of records that are correct with certified radius >= epsilon."""
    if epsilon < 0:
        raise PreconditionError("epsilon must be non-negative")
    records = list(records)
    if not records:
        raise PreconditionError("certified accuracy of an empty record set")
    hits = sum(1 for rec in records if rec.correct and rec.l2_radius >= epsilon)
    return hits / len(records)


def accuracy_curve_translate(records, kappa: float, epsilons):
    """Translate an l2 accuracy curve into the certified linf curve.

    Returns [(eps / kappa, certified_accuracy(records, eps)) for eps in
    epsilons].
    """
    if kappa <= 0:
        raise PreconditionError(f"kappa must be positive, got {kappa}")
    return [(eps / kappa, certified_accuracy(records, eps)) for eps in epsilons]


def subspace_noise_sample(proj, sigma: float, count: int, seed: int = 0) -> np.ndarray:
    """count i.i.d. samples of Pi @ delta with delta ~ N(0, sigma^2 I).

    The empirical covariance converges to sigma^2 Pi as count grows.
    """
    if sigma <= 0:
        raise PreconditionError("sigma must be positive")
    if count < 1:
        raise PreconditionError("count must be at least 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, proj.n)) * sigma
    return (z @ proj.basis) @ proj.basis.T
