"""Layered multi-order models, likelihood-ratio order selection.

A multi-order model stacks attributed models of orders 1..K trained on
the same corpus.  A path's likelihood uses a growing context near the
path start (layer i for the transition into position i+1 while i < K)
and layer K afterwards.  Nested models are compared with a likelihood
ratio test whose degrees of freedom are adjusted for the paths actually
feasible in the underlying graph.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import (
    DegenerateTestError,
    EmptyModelError,
    NumericalError,
    ValidationError,
)
from .graph import FirstOrderGraph
from .hon import IMPOSSIBLE, build_from_paths, frequency_graph, path_likelihood
from .special import regularized_gamma_q
from .trajectories import TrajectoryCorpus


class MultiOrderModel:
    """Stack of attributed fixed-order models plus a start distribution."""

    def __init__(self, layers, start_distribution, first_order=None, reduced_from=None):
        self.layers = dict(layers)
        self.max_order = max(self.layers)
        if sorted(self.layers) != list(range(1, self.max_order + 1)):
            raise ValidationError("layers must cover orders 1..K contiguously")
        self.start_distribution = dict(start_distribution)
        self.first_order = first_order
        self.reduced_from = reduced_from
        total = sum(self.start_distribution.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"start distribution sums to {total}, expected 1")

    def truncated(self, k: int) -> "MultiOrderModel":
        """Shallow view with layers 1..k (layers are shared, not copied)."""
        if not 1 <= k <= self.max_order:
            raise ValidationError(f"cannot truncate to order {k} (have 1..{self.max_order})")
        return MultiOrderModel(
            {i: self.layers[i] for i in range(1, k + 1)},
            self.start_distribution,
            first_order=self.first_order,
            reduced_from=None,
        )


def start_distribution(corpus: TrajectoryCorpus):
    """Empirical multiplicity-weighted frequency of path start nodes."""
    counts = {}
    total = 0
    for traj in corpus.paths():
        counts[traj.nodes[0]] = counts.get(traj.nodes[0], 0) + traj.multiplicity
        total += traj.multiplicity
    return {v: c / total for v, c in counts.items()}


def build_multi_order(corpus: TrajectoryCorpus, K: int,
                      first_order: FirstOrderGraph | None = None) -> MultiOrderModel:
    """Build layers 1..K from the corpus; K is reduced (with a warning)
    to the largest order that still has observed windows."""
    if K < 1:
        raise ValidationError(f"max order K must be >= 1, got {K}")
    if corpus.n_unique == 0:
        raise ValidationError("empty corpus")
    if first_order is None:
        first_order = frequency_graph(corpus)
    layers = {}
    reduced_from = None
    for k in range(1, K + 1):
        try:
            layers[k] = build_from_paths(corpus, k, attributed=True, first_order=first_order)
        except EmptyModelError:
            if k == 1:
                raise
            reduced_from = K
            warnings.warn(
                f"no order-{k} windows in the corpus; reducing max order from {K} to {k - 1}",
                stacklevel=2,
            )
            break
    return MultiOrderModel(
        layers, start_distribution(corpus), first_order=first_order, reduced_from=reduced_from
    )


def multi_order_path_likelihood(m: MultiOrderModel, path, condition_on_start: bool = True) -> float:
    """Log-likelihood of a path under the multi-order model.

    The transition into position j uses layer min(j-1, K), i.e. the
    longest context available early in the path and layer K once a full
    context exists.  With ``condition_on_start=False`` the empirical
    start-node probability multiplies in as well.  Any transition unseen
    at its layer makes the path ``IMPOSSIBLE``.
    """
    nodes = path.nodes if hasattr(path, "nodes") else tuple(path)
    if len(nodes) < 1:
        raise ValidationError("empty path")
    K = m.max_order
    total = 0.0
    if not condition_on_start:
        p0 = m.start_distribution.get(nodes[0], 0.0)
        if p0 == 0.0:
            return IMPOSSIBLE
        total += math.log(p0)
    for j in range(1, len(nodes)):
        k = min(j, K)
        window = nodes[j - k: j + 1]
        lp = m.layers[k].edge_logprob.get(window)
        if lp is None:
            return IMPOSSIBLE
        total += lp
    return total


def _per_path_logliks(m: MultiOrderModel, corpus: TrajectoryCorpus, condition_on_start: bool):
    """Per unique path: (log-likelihood, multiplicity), in corpus order."""
    out = []
    K = m.max_order
    logprobs = {k: m.layers[k].edge_logprob for k in m.layers}
    start = m.start_distribution
    for traj in corpus.paths():
        nodes = traj.nodes
        total = 0.0
        if not condition_on_start:
            p0 = start.get(nodes[0], 0.0)
            total = math.log(p0) if p0 > 0.0 else IMPOSSIBLE
        if total != IMPOSSIBLE:
            for j in range(1, len(nodes)):
                k = j if j < K else K
                lp = logprobs[k].get(nodes[j - k: j + 1])
                if lp is None:
                    total = IMPOSSIBLE
                    break
                total += lp
        out.append((total, traj.multiplicity))
    return out


def multi_order_corpus_likelihood(m: MultiOrderModel, corpus: TrajectoryCorpus,
                                  condition_on_start: bool = True) -> float:
    """Multiplicity-weighted corpus log-likelihood (IMPOSSIBLE propagates)."""
    total = 0.0
    for ll, mult in _per_path_logliks(m, corpus, condition_on_start):
        if ll == IMPOSSIBLE:
            return IMPOSSIBLE
        total += mult * ll
    return total


# -- degrees of freedom -------------------------------------------------------


def _sparse_square_rows(g: FirstOrderGraph):
    rows = {}
    for u, v, _ in g.edges():
        rows.setdefault(g.index[u], {})[g.index[v]] = 1
    return rows


def _sparse_mul(a, b):
    out = {}
    for i, row in a.items():
        acc = {}
        for j, aij in row.items():
            brow = b.get(j)
            if not brow:
                continue
            for l, bjl in brow.items():
                acc[l] = acc.get(l, 0) + aij * bjl
        if acc:
            out[i] = acc
    return out


def degrees_of_freedom(g: FirstOrderGraph, k: int) -> int:
    """Feasibility-adjusted parameter count of the multi-order model.

    d(k) = (|V| - 1) + sum_{i=1..k} [walks of length i  -  non-zero rows
    of A^i], with the adjacency powers computed exactly over Python
    integers (no overflow).
    """
    if g.n_nodes == 0:
        raise ValidationError("empty graph")
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    total = g.n_nodes - 1
    a = _sparse_square_rows(g)
    power = a
    for i in range(1, k + 1):
        walks = sum(sum(row.values()) for row in power.values())
        nonzero_rows = len(power)
        total += walks - nonzero_rows
        if i < k:
            power = _sparse_mul(power, a)
    return total


# -- likelihood ratio test ----------------------------------------------------


@dataclass(frozen=True)
class LrtResult:
    """Nested-model likelihood-ratio test outcome."""

    lambda_: float
    delta_dof: int
    p_value: float
    loglik_null: float
    loglik_alt: float
    excluded_paths: int


def _lrt_from_logliks(lls_null, lls_alt, delta_dof):
    if delta_dof <= 0:
        raise DegenerateTestError(
            f"degrees-of-freedom difference must be positive, got {delta_dof}"
        )
    ll_null = 0.0
    ll_alt = 0.0
    excluded = 0
    for (a, mult), (b, _) in zip(lls_null, lls_alt):
        if a == IMPOSSIBLE or b == IMPOSSIBLE:
            excluded += mult
            continue
        ll_null += mult * a
        ll_alt += mult * b
    lam = 2.0 * (ll_alt - ll_null)
    if lam < 0.0:
        # nested MLE models cannot lose likelihood; small violations are
        # floating-point noise in the big sums, anything larger is a bug
        tol = 1e-9 * max(1.0, abs(ll_null), abs(ll_alt))
        if lam >= -tol:
            lam = 0.0
        else:
            raise NumericalError(
                f"nested likelihood inequality violated: lambda={lam} (tolerance {-tol})"
            )
    p = regularized_gamma_q(delta_dof / 2.0, lam / 2.0)
    return LrtResult(
        lambda_=lam,
        delta_dof=delta_dof,
        p_value=p,
        loglik_null=ll_null,
        loglik_alt=ll_alt,
        excluded_paths=excluded,
    )


def likelihood_ratio_test(m_k: MultiOrderModel, m_k1: MultiOrderModel,
                          corpus: TrajectoryCorpus, g: FirstOrderGraph,
                          condition_on_start: bool = True) -> LrtResult:
    """Test whether the order-(k+1) model fits significantly better.

    Paths impossible under either model are excluded from both sums so
    that the statistic compares the same support; the excluded count is
    reported on the result.
    """
    if m_k1.max_order != m_k.max_order + 1:
        raise ValidationError(
            f"models must be nested with consecutive orders, got "
            f"{m_k.max_order} and {m_k1.max_order}"
        )
    k = m_k.max_order
    delta_dof = degrees_of_freedom(g, k + 1) - degrees_of_freedom(g, k)
    lls_null = _per_path_logliks(m_k, corpus, condition_on_start)
    lls_alt = _per_path_logliks(m_k1, corpus, condition_on_start)
    return _lrt_from_logliks(lls_null, lls_alt, delta_dof)


@dataclass(frozen=True)
class OrderDetectionStep:
    k_null: int
    k_alt: int
    result: LrtResult
    significant: bool


@dataclass(frozen=True)
class OrderDetectionReport:
    optimal_order: int
    max_order: int
    epsilon: float
    steps: tuple


def order_detection_report(corpus: TrajectoryCorpus, g: FirstOrderGraph, K_max: int,
                           epsilon: float = 0.01,
                           condition_on_start: bool = True) -> OrderDetectionReport:
    """Sequential nested tests k vs k+1, stopping at the first
    non-significant step; the optimal order is the highest order whose
    step (and every step before it) was significant."""
    if K_max < 1:
        raise ValidationError(f"K_max must be >= 1, got {K_max}")
    if not 0.0 < epsilon < 1.0:
        raise ValidationError(f"epsilon must be in (0, 1), got {epsilon}")
    multi = build_multi_order(corpus, K_max)
    K_eff = multi.max_order
    dof = {k: degrees_of_freedom(g, k) for k in range(1, K_eff + 1)}
    lls = {
        k: _per_path_logliks(multi.truncated(k), corpus, condition_on_start)
        for k in range(1, K_eff + 1)
    }
    optimal = 1
    steps = []
    for k in range(1, K_eff):
        res = _lrt_from_logliks(lls[k], lls[k + 1], dof[k + 1] - dof[k])
        significant = res.p_value < epsilon
        steps.append(OrderDetectionStep(k_null=k, k_alt=k + 1, result=res,
                                        significant=significant))
        if not significant:
            break
        optimal = k + 1
    return OrderDetectionReport(
        optimal_order=optimal, max_order=K_eff, epsilon=epsilon, steps=tuple(steps)
    )


def detect_optimal_order(corpus: TrajectoryCorpus, g: FirstOrderGraph, K_max: int,
                         epsilon: float = 0.01) -> int:
    """Largest order supported by consecutive significant likelihood-ratio
    tests starting from order 1."""
    return order_detection_report(corpus, g, K_max, epsilon).optimal_order
