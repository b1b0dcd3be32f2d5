"""Higher-order analytics: betweenness, PageRank with projection, and
multi-order next-step prediction.

Betweenness generalizes the classical shortest-path count to order-k
models: for every ordered pair of model nodes, each shortest path is
expanded back to its first-order node sequence (the full tuple of the
first node, then the last element of every subsequent node) and every
expanded occurrence of a first-order node collects sigma_st(v)/sigma_st.
Occurrences whose value equals the pair's first-order origin or
destination are excluded, mirroring the s != v != t condition of the
classical definition.

The per-source accumulation follows Brandes' dependency scheme, extended
with one channel per first-order node so that destination-value
exclusions can be subtracted exactly without enumerating paths.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConvergenceError,
    DeadEndError,
    InsufficientDataError,
    UnknownNodeError,
    ValidationError,
)
from .graph import shortest_path_dag
from .hon import HigherOrderModel
from .multiorder import MultiOrderModel
from .trajectories import TrajectoryCorpus


@dataclass(frozen=True)
class ScoreVector:
    """Nonnegative per-node scores, optionally normalized to sum 1."""

    scores: dict
    normalized: bool = False

    def total(self) -> float:
        return sum(self.scores.values())

    def normalize(self) -> "ScoreVector":
        total = self.total()
        if total <= 0:
            raise ValidationError("cannot normalize an all-zero score vector")
        return ScoreVector({k: v / total for k, v in self.scores.items()}, normalized=True)

    def sorted_items(self):
        """(node, score) pairs, descending score then ascending label."""
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))


# -- higher-order betweenness -------------------------------------------------


def _edge_costs(m: HigherOrderModel, weight_mode: str):
    """Index-level adjacency of the model under the chosen edge costs."""
    succ = [[] for _ in range(m.n_nodes)]
    for t in m.nodes:
        i = m.node_index[t]
        for to, _, prob in m.out[t]:
            if weight_mode == "neg_log_prob":
                if prob <= 0.0:
                    raise ValidationError(
                        f"edge {t!r} -> {to!r} has probability {prob}; "
                        "zero-probability edges cannot exist under neg_log_prob weights"
                    )
                cost = -math.log(prob)
            else:
                cost = 1.0
            succ[i].append((m.node_index[to], cost))
    return succ


def _source_contribution(source, n, succ, unit, color, tuple_color_mult, n_colors,
                         exclude_endpoints):
    """Per-first-order-node occurrence mass contributed by one source node."""
    dag = shortest_path_dag(n, succ, source, unit=unit)
    sigma = dag.sigma
    reach = [u for u in dag.topo if u != source]
    contrib = np.zeros(n_colors)
    if not reach:
        return contrib

    # delta[u, c]: dependency of u restricted to targets of color c
    delta = np.zeros((n, n_colors))
    for u in reversed(dag.topo):
        if u != source:
            delta[u, color[u]] += 1.0
        du = delta[u]
        su = sigma[u]
        for p in dag.preds[u]:
            delta[p] += (sigma[p] / su) * du

    reach_arr = np.array(reach)
    rows = delta[reach_arr]
    row_sums = rows.sum(axis=1)
    colors_r = color[reach_arr]
    # occurrences at expanded positions >= 1, over all targets
    contrib += np.bincount(colors_r, weights=row_sums, minlength=n_colors)
    if exclude_endpoints:
        # remove occurrences whose value equals the pair's destination value
        diag = rows[np.arange(len(reach_arr)), colors_r]
        contrib -= np.bincount(colors_r, weights=diag, minlength=n_colors)

    # the source tuple itself appears once on every shortest path
    n_reach = len(reach)
    reach_per_color = np.bincount(colors_r, minlength=n_colors)
    src_mult = tuple_color_mult[source]
    if exclude_endpoints:
        contrib += src_mult * (n_reach - reach_per_color)
    else:
        contrib += src_mult * n_reach
    return contrib


def ho_betweenness(m: HigherOrderModel, weight_mode: str = "neg_log_prob",
                   endpoint_policy: str = "exclude", pair_mode: str = "ho",
                   normalize: bool = True, threads: int | None = None) -> ScoreVector:
    """First-order betweenness scores from shortest paths of an order-k model.

    ``weight_mode`` is ``"neg_log_prob"`` (cost -log p, favoring frequent
    transitions; requires an attributed model) or ``"unit"``.
    ``endpoint_policy`` is ``"exclude"`` (drop occurrences equal to the
    pair's origin or destination value) or ``"include"``.
    ``pair_mode="ho"`` treats every ordered pair of model nodes as one
    origin-destination pair; ``"first_order"`` aggregates path counts over
    model-node pairs sharing the same first-order endpoints before taking
    ratios (quadratic; for small graphs and sensitivity checks).
    """
    if weight_mode not in ("neg_log_prob", "unit"):
        raise ValidationError(f"unknown weight_mode {weight_mode!r}")
    if endpoint_policy not in ("exclude", "include"):
        raise ValidationError(f"unknown endpoint_policy {endpoint_policy!r}")
    if pair_mode not in ("ho", "first_order"):
        raise ValidationError(f"unknown pair_mode {pair_mode!r}")
    if weight_mode == "neg_log_prob" and not m.attributed:
        # uniform out-degree probabilities still define costs; allowed,
        # but an attributed model is the intended use
        pass

    labels = sorted(m.first_order_labels())
    color_id = {lab: c for c, lab in enumerate(labels)}
    n_colors = len(labels)
    n = m.n_nodes
    unit = weight_mode == "unit"
    succ = _edge_costs(m, weight_mode)
    color = np.array([color_id[t[-1]] for t in m.nodes])
    first_of = np.array([color_id[t[0]] for t in m.nodes])
    tuple_color_mult = np.zeros((n, n_colors))
    for t, i in m.node_index.items():
        for lab in t:
            tuple_color_mult[i, color_id[lab]] += 1.0

    exclude = endpoint_policy == "exclude"
    if pair_mode == "first_order":
        totals = _betweenness_first_order_pairs(
            m, succ, unit, color, first_of, tuple_color_mult, n_colors, exclude
        )
    else:
        def one_source(s):
            c = _source_contribution(
                s, n, succ, unit, color, tuple_color_mult, n_colors, exclude
            )
            if exclude:
                c[first_of[s]] = 0.0  # origin-value occurrences never count
            return c

        totals = np.zeros(n_colors)
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for c in pool.map(one_source, range(n)):
                    totals += c  # map() preserves source order: deterministic
        else:
            for s in range(n):
                totals += one_source(s)

    scores = {lab: float(totals[color_id[lab]]) for lab in labels}
    vec = ScoreVector(scores, normalized=False)
    return vec.normalize() if normalize else vec


def _betweenness_first_order_pairs(m, succ, unit, color, first_of, tuple_color_mult,
                                   n_colors, exclude):
    """Aggregate sigma over model-node pairs sharing first-order endpoints.

    Exact but O(V * E) per source; intended for small models.
    """
    n = m.n_nodes
    num = {}  # (orig_color, dest_color) -> np.ndarray occurrence counts
    den = {}  # (orig_color, dest_color) -> total path count
    for s in range(n):
        dag = shortest_path_dag(n, succ, s, unit=unit)
        sigma = dag.sigma
        topo = dag.topo
        for t in topo:
            if t == s or sigma[t] == 0:
                continue
            # paths from u to t inside the DAG
            sigma_rev = [0] * n
            sigma_rev[t] = 1
            for u in reversed(topo):
                acc = sigma_rev[u]
                if acc:
                    for p in dag.preds[u]:
                        sigma_rev[p] += acc
            key = (first_of[s], color[t])
            occ = num.get(key)
            if occ is None:
                occ = np.zeros(n_colors)
                num[key] = occ
                den[key] = 0
            den[key] += sigma[t]
            for u in topo:
                if u == s:
                    continue
                paths_through = sigma[u] * sigma_rev[u]
                if paths_through:
                    occ[color[u]] += paths_through
            occ += sigma[t] * tuple_color_mult[s]
    totals = np.zeros(n_colors)
    for key in sorted(num):
        oc, dc = key
        share = num[key] / den[key]
        if exclude:
            share[oc] = 0.0
            share[dc] = 0.0
        totals += share
    return totals


# -- higher-order PageRank ----------------------------------------------------


def ho_pagerank(m: HigherOrderModel, alpha: float = 0.85, tol: float = 1e-10,
                max_iter: int = 100_000):
    """Stationary teleporting-walk distribution over model nodes.

    Power iteration on r <- r (alpha T + (1 - alpha) E / m); dangling
    nodes redistribute their mass uniformly.  Returns a node -> probability
    dict summing to 1 within 1e-12.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must be in (0, 1), got {alpha}")
    n = m.n_nodes
    if n == 0:
        raise ValidationError("empty model")
    rows, cols, data = [], [], []
    dangling = np.ones(n, dtype=bool)
    for t in m.nodes:
        i = m.node_index[t]
        edges = m.out[t]
        if edges:
            dangling[i] = False
            for to, _, prob in edges:
                rows.append(m.node_index[to])
                cols.append(i)
                data.append(prob)
    # transition operator transposed: (T^T r)_j = sum_i r_i T_ij
    tt = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    r = np.full(n, 1.0 / n)
    base = (1.0 - alpha) / n
    for _ in range(max_iter):
        dangling_mass = float(r[dangling].sum())
        r_new = alpha * (tt.dot(r) + dangling_mass / n) + base
        residual = float(np.abs(r_new - r).sum())
        r = r_new
        if residual <= tol:
            r = r / r.sum()
            return {t: float(r[m.node_index[t]]) for t in m.nodes}
    raise ConvergenceError(
        f"PageRank did not converge in {max_iter} iterations", residual=residual
    )


def project_pagerank(ho_scores) -> ScoreVector:
    """Aggregate model-node scores onto first-order nodes by last component."""
    total = sum(ho_scores.values())
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"input scores sum to {total}, expected 1 +- 1e-9")
    out = {}
    for t, score in ho_scores.items():
        last = t[-1]
        out[last] = out.get(last, 0.0) + score
    return ScoreVector(out, normalized=True)


# -- next-step prediction -----------------------------------------------------


@dataclass(frozen=True)
class PredictionResult:
    context: tuple
    distribution: dict
    top: str
    used_order: int  # 0 means the uniform out-neighbor fallback


def _argmax_label(distribution):
    best = max(distribution.values())
    return min(lab for lab, p in distribution.items() if p == best)


def predict_next(m: MultiOrderModel, context) -> PredictionResult:
    """Next-node distribution for a context, using the longest trained
    suffix (orders K down to 1), then uniform over first-order
    out-neighbors of the last node."""
    context = tuple(context)
    if not context:
        raise ValidationError("empty context")
    last = context[-1]
    known = (last,) in m.layers[1].node_index or (
        m.first_order is not None and m.first_order.has_node(last)
    )
    if not known:
        raise UnknownNodeError(f"node {last!r} is not part of the model")
    for k in range(min(m.max_order, len(context)), 0, -1):
        suffix = context[-k:]
        layer = m.layers[k]
        if suffix in layer.node_index and layer.out[suffix]:
            dist = layer.out_distribution(suffix)
            return PredictionResult(context, dist, _argmax_label(dist), k)
    if m.first_order is None:
        raise ValidationError(
            "order-1 context unseen and no first-order graph attached for fallback"
        )
    succ = m.first_order.successors(last) if m.first_order.has_node(last) else []
    if not succ:
        raise DeadEndError(f"no outgoing transition from {last!r} at any order")
    p = 1.0 / len(succ)
    dist = {v: p for v in succ}
    return PredictionResult(context, dist, _argmax_label(dist), 0)


@dataclass(frozen=True)
class PredictionEvaluation:
    cross_entropy: float
    accuracy: float
    n_samples: int
    n_failed: int  # unknown-node or dead-end samples, scored as wrong


def evaluate_prediction(m: MultiOrderModel, test_samples,
                        floor: float = 1e-12) -> PredictionEvaluation:
    """Mean negative log-probability (floored) and argmax accuracy."""
    n = 0
    failed = 0
    loss = 0.0
    correct = 0
    for context, true_next in test_samples:
        n += 1
        try:
            pred = predict_next(m, context)
        except (UnknownNodeError, DeadEndError):
            failed += 1
            loss -= math.log(floor)
            continue
        p = pred.distribution.get(true_next, 0.0)
        loss -= math.log(max(p, floor))
        if pred.top == true_next:
            correct += 1
    if n == 0:
        raise InsufficientDataError("no test samples")
    return PredictionEvaluation(
        cross_entropy=loss / n, accuracy=correct / n, n_samples=n, n_failed=failed
    )


def prediction_samples(corpus: TrajectoryCorpus, K: int):
    """(context, true_next) pairs for every transition of every trajectory
    instance, with contexts clipped to the last K nodes."""
    samples = []
    for traj in corpus.paths():
        nodes = traj.nodes
        per_path = [
            (nodes[max(0, j - K): j], nodes[j]) for j in range(1, len(nodes))
        ]
        samples.extend(per_path * traj.multiplicity)
    return samples


# -- ground truth -------------------------------------------------------------


def ground_truth_frequencies(corpus: TrajectoryCorpus, mode: str = "traversal") -> ScoreVector:
    """Empirical node-frequency distribution from the trajectories.

    ``visitation`` counts every occurrence of a node; ``traversal`` counts
    only occurrences whose value differs from the path's first and last
    node, mirroring the endpoint exclusion of betweenness.
    """
    if mode not in ("traversal", "visitation"):
        raise ValidationError(f"unknown ground-truth mode {mode!r}")
    counts = {}
    for traj in corpus.paths():
        nodes = traj.nodes
        m = traj.multiplicity
        if mode == "visitation":
            for v in nodes:
                counts[v] = counts.get(v, 0) + m
        else:
            first, last = nodes[0], nodes[-1]
            for v in nodes:
                if v != first and v != last:
                    counts[v] = counts.get(v, 0) + m
    total = sum(counts.values())
    if total == 0:
        raise InsufficientDataError(
            f"no {mode} occurrences in the corpus (all paths too short?)"
        )
    return ScoreVector({v: c / total for v, c in counts.items()}, normalized=True)
