"""Synthetic trajectory generation with a planted memory order.

A planted model fixes, for every feasible k-context (walk of k nodes),
a successor distribution over the out-neighbors of its last node, drawn
from a symmetric Dirichlet with concentration ``skew`` (small skew:
near-deterministic routing; large skew: near-uniform).  Corpora sampled
from the model are the ground truth for order detection and the trend
experiments.

Generation is keyed per path index via ``SeedSequence.spawn``, so the
corpus is reproducible regardless of how work is scheduled.
"""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import FirstOrderGraph, build_graph
from .trajectories import TrajectoryCorpus


def _covers_all(succ_of, n, start):
    seen = {start}
    q = deque([start])
    while q:
        u = q.popleft()
        for v in succ_of[u]:
            if v not in seen:
                seen.add(v)
                q.append(v)
    return len(seen) == n


def is_strongly_connected(g: FirstOrderGraph) -> bool:
    if g.n_nodes == 0:
        return False
    fwd = [[] for _ in range(g.n_nodes)]
    rev = [[] for _ in range(g.n_nodes)]
    for u, v, _ in g.edges():
        i, j = g.index[u], g.index[v]
        fwd[i].append(j)
        rev[j].append(i)
    return _covers_all(fwd, g.n_nodes, 0) and _covers_all(rev, g.n_nodes, 0)


def random_strongly_connected_graph(n: int, extra_edges: int, seed: int) -> FirstOrderGraph:
    """Random directed graph: a Hamiltonian cycle over a shuffled node
    order plus ``extra_edges`` distinct random non-loop edges."""
    if n < 2:
        raise ValidationError(f"need at least 2 nodes, got {n}")
    rng = np.random.default_rng(seed)
    labels = [f"v{i:02d}" for i in range(n)]
    perm = rng.permutation(n)
    edges = set()
    for a, b in zip(perm, np.roll(perm, -1)):
        edges.add((int(a), int(b)))
    while len(edges) < n + extra_edges:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            edges.add((u, v))
    rows = sorted((labels[u], labels[v]) for u, v in edges)
    return build_graph(rows)


@dataclass(frozen=True)
class PlantedModel:
    """Ground-truth k-th order routing model on a base graph."""

    base_graph: FirstOrderGraph
    order: int
    transition_table: dict  # k-tuple -> {next label: prob}; {} marks absorbing
    start_distribution: dict
    seed: int = 0

    def __post_init__(self):
        for ctx, dist in self.transition_table.items():
            if dist and abs(sum(dist.values()) - 1.0) > 1e-12:
                raise ValidationError(f"context {ctx!r} distribution does not sum to 1")


def _feasible_contexts(g: FirstOrderGraph, k: int):
    walks = [(lab,) for lab in g.labels]
    for _ in range(k - 1):
        walks = [w + (v,) for w in walks for v in g.successors(w[-1])]
    return walks


def random_planted_model(g: FirstOrderGraph, k: int, skew: float, seed: int) -> PlantedModel:
    """Draw a Dirichlet(skew) successor distribution for every feasible
    k-context.  Contexts whose last node is a sink become absorbing."""
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    if skew <= 0:
        raise ValidationError(f"skew must be positive, got {skew}")
    if not is_strongly_connected(g):
        warnings.warn("base graph is not strongly connected; paths may truncate",
                      stacklevel=2)
    rng = np.random.default_rng(seed)
    table = {}
    for ctx in sorted(_feasible_contexts(g, k)):
        succ = g.successors(ctx[-1])
        if not succ:
            table[ctx] = {}
            continue
        probs = rng.dirichlet(np.full(len(succ), skew))
        table[ctx] = {v: float(p) for v, p in zip(succ, probs)}
    starts = [lab for lab in g.labels if g.out_degree(lab) > 0]
    start = {lab: 1.0 / len(starts) for lab in starts}
    return PlantedModel(base_graph=g, order=k, transition_table=table,
                        start_distribution=start, seed=seed)


def _cumulative(dist):
    labels = list(dist)
    cum = np.cumsum([dist[lab] for lab in labels])
    cum[-1] = 1.0
    return labels, cum


def generate_corpus(pm: PlantedModel, n_paths: int, length_range, seed: int) -> TrajectoryCorpus:
    """Sample trajectories from the planted model.

    Each path draws its length uniformly from ``length_range``, starts
    from the start distribution, walks uniformly over out-neighbors until
    a full k-context exists, then follows the planted table.  Paths that
    hit an absorbing context are truncated; the count is recorded in
    ``corpus.meta["truncated_paths"]``.
    """
    lo, hi = int(length_range[0]), int(length_range[1])
    if n_paths < 1:
        raise ValidationError(f"n_paths must be >= 1, got {n_paths}")
    if lo < pm.order + 1:
        raise ValidationError(
            f"minimum length {lo} is below order+1 = {pm.order + 1}"
        )
    if hi < lo:
        raise ValidationError(f"bad length range [{lo}, {hi}]")
    g = pm.base_graph
    k = pm.order
    start_labels, start_cum = _cumulative(pm.start_distribution)
    table_cum = {ctx: _cumulative(d) for ctx, d in pm.transition_table.items() if d}
    uniform_succ = {lab: g.successors(lab) for lab in g.labels}

    corpus = TrajectoryCorpus()
    truncated = 0
    streams = np.random.SeedSequence(seed).spawn(n_paths)
    for i in range(n_paths):
        rng = np.random.default_rng(streams[i])
        length = int(rng.integers(lo, hi + 1))
        u = rng.random(length)  # one draw per step keeps streams aligned
        path = [start_labels[int(np.searchsorted(start_cum, u[0], side="right"))]]
        for step in range(1, length):
            if len(path) < k:
                succ = uniform_succ[path[-1]]
                if not succ:
                    truncated += 1
                    break
                path.append(succ[int(u[step] * len(succ))])
            else:
                entry = table_cum.get(tuple(path[-k:]))
                if entry is None:
                    truncated += 1
                    break
                labels, cum = entry
                path.append(labels[int(np.searchsorted(cum, u[step], side="right"))])
        corpus.add(path)
    corpus.meta["planted_order"] = k
    corpus.meta["requested_paths"] = n_paths
    corpus.meta["truncated_paths"] = truncated
    corpus.meta["seed"] = seed
    return corpus
