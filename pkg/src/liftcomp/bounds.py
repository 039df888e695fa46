"""Distance certificates for compressed models.

The distance between the original and compressed distributions is the
log-ratio span d = ln(max_r psi'(r)/psi(r)) - ln(min_r psi'(r)/psi(r)),
computed on unnormalized potential products so the partition functions
cancel and never have to be tracked. distance_exact enumerates it;
bound_general and bound_tight certify it from the factor count m and the
tolerance eps alone. The tight bound exploits that every updated table
is a group mean, which couples the attainable extremes; worst_case_fg
builds the adversarial model that attains it exactly and anchors the
formula tests.

A distance d converts into interval guarantees: posterior odds of any
conditional query move by at most e^{+/-d}, and prob_envelope transports
that to probabilities. Formulas are evaluated in log space (log1p,
expm1) so small eps keeps full precision at large m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .equivalence import check_epsilon
from .errors import InvariantError
from .model import Factor, FactorGraph, RandomVariable, joint_table

__all__ = [
    "BoundSet",
    "DistanceReport",
    "bound_general",
    "bound_tight",
    "bound_set",
    "distance_exact",
    "odds_envelope",
    "prob_envelope",
    "corollary_envelopes",
    "worst_case_fg",
]


def _check_m(m: int) -> int:
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise InvariantError(f"modified-factor count must be a positive int, got {m!r}")
    return m


def bound_general(m: int, eps: float) -> float:
    """m * (ln(1+eps) - ln(1-eps)): every entry ratio lies in [1-eps, 1+eps]."""
    _check_m(m)
    check_epsilon(eps)
    return m * (math.log1p(eps) - math.log1p(-eps))


def bound_tight(m: int, eps: float) -> float:
    """m * ln((1 + (m-1)/m * eps) * (1+eps) / (1 + eps/m)).

    Updated tables are group means, so one entry sitting at the (1+eps)
    extreme drags the mean of its group along; the attainable per-factor
    ratio extremes shrink to alpha1 = (1+eps/m)/(1+eps) from below and
    alpha2 = 1+(m-1)/m*eps from above. At m = 1 the expression is 0: a
    lone factor can only be averaged with itself.
    """
    _check_m(m)
    check_epsilon(eps)
    inner = math.log1p((m - 1) / m * eps) + math.log1p(eps) - math.log1p(eps / m)
    return m * inner


@dataclass(frozen=True)
class BoundSet:
    """Both certificates plus the per-factor ratio extremes they rest on."""

    m: int
    eps: float
    d_general: float
    d_tight: float
    alpha1: float
    alpha2: float

    def __post_init__(self) -> None:
        if not self.alpha1 <= 1.0 <= self.alpha2:
            raise InvariantError("ratio extremes must straddle 1")
        if self.eps > 0.0:
            middle = 2 * self.m * math.log1p(self.eps)
            if not self.d_tight < middle < self.d_general:
                raise InvariantError(
                    "bound chain violated: expected d_tight < 2m*ln(1+eps) < d_general"
                )


def bound_set(m: int, eps: float) -> BoundSet:
    _check_m(m)
    check_epsilon(eps)
    alpha1 = (1.0 + eps / m) / (1.0 + eps)
    alpha2 = 1.0 + (m - 1) / m * eps
    return BoundSet(m, eps, bound_general(m, eps), bound_tight(m, eps), alpha1, alpha2)


@dataclass(frozen=True)
class DistanceReport:
    """Exact distance with the assignments attaining the ratio extremes."""

    d_exact: float
    argmax_assignment: dict[str, str]
    argmin_assignment: dict[str, str]
    max_ratio: float
    min_ratio: float

    def __post_init__(self) -> None:
        if self.d_exact < 0.0:
            raise InvariantError("distance cannot be negative")


def distance_exact(
    m1: FactorGraph, m2: FactorGraph, cap: int | None = None
) -> DistanceReport:
    """Enumerate max and min of psi2/psi1 over all joint states.

    Both models must declare the same random variables with the same
    ranges; factorisations may differ. Raises through joint_table when
    the state space exceeds the enumeration cap.
    """
    names1 = [rv.name for rv in m1.rvs]
    names2 = [rv.name for rv in m2.rvs]
    if sorted(names1) != sorted(names2):
        raise InvariantError("models declare different random variables")
    for rv in m1.rvs:
        if m2.rv(rv.name).range != rv.range:
            raise InvariantError(
                f"rv {rv.name!r} has different ranges in the two models"
            )
    j1 = joint_table(m1, cap)
    j2 = joint_table(m2, cap)
    if names1 != names2:
        perm = tuple(names2.index(n) for n in names1)
        j2 = np.transpose(j2, perm)
    ratio = j2 / j1
    hi_idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    lo_idx = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    max_ratio = float(ratio[hi_idx])
    min_ratio = float(ratio[lo_idx])
    hi = {rv.name: rv.range[k] for rv, k in zip(m1.rvs, hi_idx)}
    lo = {rv.name: rv.range[k] for rv, k in zip(m1.rvs, lo_idx)}
    return DistanceReport(
        d_exact=math.log(max_ratio) - math.log(min_ratio),
        argmax_assignment=hi,
        argmin_assignment=lo,
        max_ratio=max_ratio,
        min_ratio=min_ratio,
    )


def odds_envelope(d: float) -> tuple[float, float]:
    """Posterior odds of any conditional query move by a factor in this band."""
    if d < 0.0 or not math.isfinite(d):
        raise InvariantError(f"distance must be non-negative and finite, got {d!r}")
    return (math.exp(-d), math.exp(d))


def _prob_shift(p: float, t: float) -> float:
    # p*e^t / (p*(e^t - 1) + 1), stable for small |t| via expm1
    return p * math.exp(t) / (p * math.expm1(t) + 1.0)


def prob_envelope(p: float, d: float) -> tuple[float, float]:
    """Interval containing the true probability when the model reports p."""
    if not 0.0 < p < 1.0:
        raise InvariantError(f"probability must lie in (0, 1), got {p!r}")
    if d < 0.0:
        raise InvariantError(f"distance must be non-negative, got {d!r}")
    return (_prob_shift(p, -d), _prob_shift(p, d))


def corollary_envelopes(m: int, eps: float) -> dict[str, tuple[float, float]]:
    """Odds-ratio bands under both certificates; the tight band is nested."""
    bounds = bound_set(m, eps)
    return {
        "general": odds_envelope(bounds.d_general),
        "tight": odds_envelope(bounds.d_tight),
    }


def worst_case_fg(m: int, eps: float) -> FactorGraph:
    """Adversarial model whose exact distance attains bound_tight(m, eps).

    m unary factors over m fresh RVs sharing a 2m-label range. Factor i
    inflates row j by (1+eps) exactly when j == i in the lower half or
    j - m != i in the upper half; base values are the row numbers. All m
    factors are pairwise eps-equivalent, so compression merges them into
    one group whose mean realises the extreme per-state ratios on the
    diagonal (minimum) and shifted diagonal (maximum) simultaneously.
    """
    _check_m(m)
    check_epsilon(eps)
    if m < 2:
        raise InvariantError("adversarial construction needs at least 2 factors")
    labels = tuple(f"r{j}" for j in range(1, 2 * m + 1))
    rvs = tuple(RandomVariable(f"R{i}", labels) for i in range(1, m + 1))
    factors = []
    for i in range(1, m + 1):
        rows = np.empty(2 * m, dtype=np.float64)
        for j in range(1, 2 * m + 1):
            inflate = (j <= m and j == i) or (j > m and j - m != i)
            rows[j - 1] = j * (1.0 + eps) if inflate else float(j)
        factors.append(Factor(f"phi{i}", (f"R{i}",), rows))
    return FactorGraph(rvs, tuple(factors))
