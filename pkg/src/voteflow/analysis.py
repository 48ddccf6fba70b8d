"""Closed-form oracles used to validate simulation output.

Three quantities with exact or limiting expressions:

* the expected weight of the first voter under single uniform delegation,
  a Gamma-function ratio satisfying E[S_1] = 1, E[S_{t+1}] = (1 + d/t) E[S_t];
* the limit sequence (alpha_k) of the tail-weight share F_j(k)/j under
  greedy double delegation, defined by nested quadratics;
* the tail-weight statistic F(k) itself, summing the weights of all voters
  whose weight is at least k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graph import WeightReport


@dataclass(frozen=True)
class AlphaSequence:
    """Limit values alpha_1..alpha_K of F_j(k)/j for delegation probability d."""

    d: float
    values: tuple[float, ...]

    def __getitem__(self, k: int) -> float:
        """1-based access: self[k] is alpha_k."""
        if not 1 <= k <= len(self.values):
            raise IndexError(f"k must be in 1..{len(self.values)}")
        return self.values[k - 1]


@dataclass(frozen=True)
class FStatistic:
    """F(k) for k = 1..k_max: total weight held by voters of weight >= k."""

    values: tuple[int, ...]

    def __getitem__(self, k: int) -> int:
        if not 1 <= k <= len(self.values):
            raise IndexError(f"k must be in 1..{len(self.values)}")
        return self.values[k - 1]


def alpha_polynomial(d: float, k: int, x: float, p: float) -> float:
    """The quadratic d*x^2 + k*d*(p^2 - x^2) - x whose root defines alpha_k."""
    return d * x * x + k * d * (p * p - x * x) - x


def alpha_sequence(d: float, k_max: int) -> AlphaSequence:
    """First ``k_max`` alpha values for delegation probability ``d``.

    alpha_1 = 1; for k >= 2, alpha_k is the unique root in (0, alpha_{k-1})
    of d*(1-k)*x^2 - x + k*d*alpha_{k-1}^2 = 0. The quadratic formula is
    evaluated in the conjugate form 2c / (1 + sqrt(1 - 4ac)), which avoids
    the catastrophic cancellation the textbook form hits once the values
    get small. Mathematically the sequence decreases strictly within
    (0, 1] and falls like 1/k^2; since the true decay is eventually doubly
    exponential, values drop below double precision around k of a few
    dozen and are then reported as exactly 0.0.
    """
    if not 0.0 < d < 1.0:
        raise ValueError(f"d must lie strictly in (0, 1), got {d}")
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    values = [1.0]
    for k in range(2, k_max + 1):
        prev = values[-1]
        # a x^2 + b x + c with a = d(1-k) < 0, b = -1, c = k d prev^2
        a = d * (1.0 - k)
        c = k * d * prev * prev
        root = 2.0 * c / (1.0 + math.sqrt(1.0 - 4.0 * a * c))
        if prev > 0.0 and not 0.0 <= root < prev:
            raise ArithmeticError(
                f"alpha_{k} root {root} fell outside (0, alpha_{k - 1}={prev})"
            )
        values.append(root)
    return AlphaSequence(d=d, values=tuple(values))


def _log_gamma_tail(x: float) -> float:
    # Stirling remainder 1/(12x) - 1/(360x^3) + 1/(1260x^5) - 1/(1680x^7);
    # beyond x = 30 the truncated term is below 1e-16
    inv = 1.0 / x
    inv2 = inv * inv
    return inv * (
        1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0))
    )


def _log_gamma_ratio(t: float, d: float) -> float:
    """log(Gamma(t + d) / Gamma(t)) without large-argument cancellation.

    Subtracting two log-Gamma values of size t*log(t) loses ~1e-10 of
    absolute precision, which is too coarse for the stated 1e-10 relative
    recurrence accuracy; expanding the Stirling difference keeps every term
    of size O(d log t) instead.
    """
    if t < 30.0:
        return math.lgamma(t + d) - math.lgamma(t)
    base = (t - 0.5) * math.log1p(d / t) + d * math.log(t + d) - d
    return base + _log_gamma_tail(t + d) - _log_gamma_tail(t)


def expected_first_voter_weight(t: int, d: float) -> float:
    """Expected weight of agent 0 after t steps of single uniform delegation.

    Evaluates Gamma(t + d) / (Gamma(d + 1) * Gamma(t)) through log-Gamma so
    values stay finite for t well beyond 10**7.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    if not 0.0 < d < 1.0:
        raise ValueError(f"d must lie strictly in (0, 1), got {d}")
    return math.exp(_log_gamma_ratio(float(t), d) - math.lgamma(d + 1.0))


def f_statistic(report: WeightReport, k_max: int) -> FStatistic:
    """Tail-weight sums F(k) = sum of voter weights that are >= k."""
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    weights = sorted(report.weights.values())
    values = []
    total = sum(weights)
    idx = 0
    for k in range(1, k_max + 1):
        while idx < len(weights) and weights[idx] < k:
            total -= weights[idx]
            idx += 1
        values.append(total)
    return FStatistic(values=tuple(values))
