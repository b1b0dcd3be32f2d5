"""Rank and distribution comparison metrics: Kendall's tau and KL divergence.

Tau defaults to the tie-adjusted tau-b because centrality vectors of
higher-order models contain exact ties (symmetric nodes); the plain
2(C - D) / (n(n-1)) form is available as ``variant="raw"`` for fidelity
checks.  KL uses natural logarithms throughout, matching the
cross-entropy unit of the prediction task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .analytics import ScoreVector


def kl_divergence(p: ScoreVector, q: ScoreVector, epsilon: float = 0.0,
                  smooth: str = "both") -> float:
    """D_KL(P || Q) = sum_i P(i) ln(P(i)/Q(i)) over the union support.

    Both vectors are additively smoothed by ``epsilon`` and renormalized
    (``smooth="q"`` smooths only the model side Q, leaving structural
    zeros of P intact).  Terms with P(i) = 0 contribute 0.  With no
    smoothing, a Q-zero under P-support returns ``math.inf`` rather than
    raising.
    """
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    if smooth not in ("both", "q"):
        raise ValidationError(f"unknown smoothing side {smooth!r}")
    support = sorted(set(p.scores) | set(q.scores))
    if not support:
        raise InsufficientDataError("both distributions are empty")
    pv = np.array([p.scores.get(v, 0.0) for v in support])
    qv = np.array([q.scores.get(v, 0.0) for v in support])
    if smooth == "both":
        pv = pv + epsilon
    qv = qv + epsilon
    if pv.sum() <= 0 or qv.sum() <= 0:
        raise InsufficientDataError("a distribution sums to zero after smoothing")
    pv = pv / pv.sum()
    qv = qv / qv.sum()
    total = 0.0
    for pi, qi in zip(pv, qv):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        total += pi * math.log(pi / qi)
    return max(total, 0.0)


def kendall_tau(x: ScoreVector, y: ScoreVector, variant: str = "b") -> float:
    """Rank correlation over the common support of the two score vectors.

    ``variant="b"`` excludes tied pairs from both sides and adjusts the
    denominator; ``variant="raw"`` keeps the n(n-1)/2 denominator with
    ties counting as neither concordant nor discordant.
    """
    if variant not in ("b", "raw"):
        raise ValidationError(f"unknown tau variant {variant!r}")
    common = sorted(set(x.scores) & set(y.scores))
    n = len(common)
    if n < 2:
        raise InsufficientDataError(
            f"need at least 2 common nodes for a rank correlation, got {n}"
        )
    xv = np.array([x.scores[v] for v in common])
    yv = np.array([y.scores[v] for v in common])
    iu = np.triu_indices(n, k=1)
    dx = np.sign(xv[:, None] - xv[None, :])[iu]
    dy = np.sign(yv[:, None] - yv[None, :])[iu]
    prod = dx * dy
    concordant = int(np.count_nonzero(prod > 0))
    discordant = int(np.count_nonzero(prod < 0))
    n0 = n * (n - 1) // 2
    if variant == "raw":
        return (concordant - discordant) / n0
    ties_x = int(np.count_nonzero(dx == 0))
    ties_y = int(np.count_nonzero(dy == 0))
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        raise InsufficientDataError("all scores tied in one vector; tau-b undefined")
    return (concordant - discordant) / denom


@dataclass(frozen=True)
class RankedComparison:
    """Joint rank/divergence comparison of a model vector to ground truth."""

    common_support: frozenset
    tau: float
    kl: float
    smoothing_epsilon: float


def compare_to_ground_truth(truth: ScoreVector, model: ScoreVector,
                            epsilon: float = 1e-9,
                            tau_variant: str = "b") -> RankedComparison:
    """Tau over the common support and KL(truth || model).

    Smoothing is applied to the model side only: a model may legitimately
    assign 0 to nodes the ground truth visits, while truth zeros are
    structural.
    """
    tau = kendall_tau(truth, model, variant=tau_variant)
    kl = kl_divergence(truth, model, epsilon=epsilon, smooth="q")
    return RankedComparison(
        common_support=frozenset(set(truth.scores) & set(model.scores)),
        tau=tau,
        kl=kl,
        smoothing_epsilon=epsilon,
    )
