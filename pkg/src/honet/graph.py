"""Directed graphs with labeled nodes, row-stochastic transitions, and
shortest-path counting.

Nodes are opaque string labels mapped to dense integer indices at build
time; every heavy loop works on indices.  Graphs are immutable after
construction and safe to share across threads.

Shortest-path counting returns exact integer path counts (``sigma``).
Counts are kept as Python integers, so they never overflow silently.
Equality of two weighted path costs is decided with a relative tolerance
(see :func:`costs_equal`); exact comparison would undercount ties between
irrational edge costs such as negative log-probabilities.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .errors import NumericalError, ParseError, UnknownNodeError, ValidationError

#: Relative tolerance used to decide that two path costs are equal.
COST_REL_TOL = 1e-9


def costs_equal(a: float, b: float, rel: float = COST_REL_TOL) -> bool:
    """True if costs ``a`` and ``b`` are equal within relative tolerance."""
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


class FirstOrderGraph:
    """Immutable directed graph with optional nonnegative edge weights.

    An edge without an explicit weight is *non-attributed*; wherever a
    weight is needed (transition probabilities, weighted costs) it counts
    as 1.  Duplicate edges are merged by summing their weights.
    """

    def __init__(self, labels, edges):
        # labels: sequence of str in index order; edges: dict (i, j) -> float | None
        self.labels = tuple(labels)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ValidationError("duplicate node labels")
        self._edges = dict(edges)
        n = len(self.labels)
        self._succ = [[] for _ in range(n)]
        for (i, j), w in self._edges.items():
            self._succ[i].append((j, w))
        for lst in self._succ:
            lst.sort(key=lambda e: e[0])

    # -- basic accessors ---------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def weighted(self) -> bool:
        """True if any edge carries an explicit weight."""
        return any(w is not None for w in self._edges.values())

    def has_node(self, label: str) -> bool:
        return label in self.index

    def has_edge(self, u: str, v: str) -> bool:
        return (self.index[u], self.index[v]) in self._edges

    def edge_weight(self, u: str, v: str):
        """Stored weight of edge (u, v); None if the edge is non-attributed."""
        return self._edges[(self.index[u], self.index[v])]

    def edges(self):
        """Iterate (u_label, v_label, weight-or-None) in deterministic order."""
        for i, lst in enumerate(self._succ):
            for j, w in lst:
                yield self.labels[i], self.labels[j], w

    def successors(self, label: str):
        """Out-neighbor labels of ``label``, sorted by node index."""
        try:
            i = self.index[label]
        except KeyError:
            raise UnknownNodeError(f"unknown node {label!r}") from None
        return [self.labels[j] for j, _ in self._succ[i]]

    def out_degree(self, label: str) -> int:
        return len(self._succ[self.index[label]])

    def successor_indices(self, i: int):
        return self._succ[i]

    def adjacency_rows(self):
        """Sparse adjacency as {row: {col: 1}} over indices (exact ints)."""
        rows = {}
        for (i, j) in self._edges:
            rows.setdefault(i, {})[j] = 1
        return rows


def build_graph(edge_list) -> FirstOrderGraph:
    """Build a graph from (source, target[, weight]) rows.

    Duplicate (u, v) rows sum their weights, a missing weight counting
    as 1.  An edge that appears exactly once without a weight stays
    non-attributed.  Weights must be finite and nonnegative; a self-loop
    with weight 0 is rejected because a zero-cost self-loop would make
    shortest-path counts diverge.
    """
    labels = []
    index = {}
    agg = {}  # (i, j) -> [explicit_any, weight_sum, occurrences]

    def intern(label, row_no):
        if not isinstance(label, str) or label == "":
            raise ParseError(f"empty or non-string node label in row {row_no}")
        if label not in index:
            index[label] = len(labels)
            labels.append(label)
        return index[label]

    for row_no, row in enumerate(edge_list, start=1):
        if len(row) == 2:
            u, v = row
            w = None
        elif len(row) == 3:
            u, v, w = row
        else:
            raise ParseError(f"edge row {row_no} must have 2 or 3 fields, got {len(row)}")
        if w is not None:
            w = float(w)
            if math.isnan(w) or math.isinf(w):
                raise ValidationError(f"edge row {row_no}: weight must be finite, got {w}")
            if w < 0:
                raise ValidationError(f"edge row {row_no}: negative weight {w}")
        i, j = intern(u, row_no), intern(v, row_no)
        key = (i, j)
        if key not in agg:
            agg[key] = [w is not None, 1.0 if w is None else w, 1]
        else:
            entry = agg[key]
            entry[0] = entry[0] or w is not None
            entry[1] += 1.0 if w is None else w
            entry[2] += 1

    edges = {}
    for (i, j), (explicit, wsum, occ) in agg.items():
        if explicit or occ > 1:
            w = wsum
        else:
            w = None
        if i == j and w == 0.0:
            raise ValidationError(
                f"zero-weight self-loop on {labels[i]!r}: zero-cost self-loops are rejected"
            )
        edges[(i, j)] = w
    return FirstOrderGraph(labels, edges)


def parse_edge_list_file(path) -> FirstOrderGraph:
    """Parse a tab-separated edge list: ``source<TAB>target[<TAB>weight]``.

    ``#`` starts a comment line; blank lines are ignored.
    """
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise ParseError(
                    f"expected 2 or 3 tab-separated fields, got {len(fields)}",
                    line=line_no, path=path,
                )
            if any(f == "" for f in fields[:2]):
                raise ParseError("empty node label", line=line_no, path=path)
            if len(fields) == 3:
                try:
                    w = float(fields[2])
                except ValueError:
                    raise ParseError(
                        f"bad weight {fields[2]!r}", line=line_no, path=path
                    ) from None
                if math.isnan(w) or math.isinf(w):
                    raise ParseError(f"weight must be finite, got {w}", line=line_no, path=path)
                if w < 0:
                    raise ParseError(f"negative weight {w}", line=line_no, path=path)
                rows.append((fields[0], fields[1], w))
            else:
                rows.append((fields[0], fields[1]))
    return build_graph(rows)


def write_edge_list_file(g: FirstOrderGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, w in g.edges():
            if w is None:
                fh.write(f"{u}\t{v}\n")
            else:
                fh.write(f"{u}\t{v}\t{w!r}\n")


def row_stochastic_transitions(g: FirstOrderGraph):
    """Per-edge transition probabilities w(u,v) / sum_l w(u,l).

    Unweighted edges count as weight 1.  Sink nodes simply have no
    entries; PageRank-style consumers handle them by teleporting.
    """
    probs = {}
    for i in range(g.n_nodes):
        row = g.successor_indices(i)
        if not row:
            continue
        total = sum(1.0 if w is None else w for _, w in row)
        if total <= 0:
            raise ValidationError(
                f"node {g.labels[i]!r} has outgoing edges but zero total weight"
            )
        for j, w in row:
            probs[(g.labels[i], g.labels[j])] = (1.0 if w is None else w) / total
    return probs


# -- shortest paths ---------------------------------------------------------


@dataclass(frozen=True)
class ShortestPathSummary:
    """Distances, exact path counts, and predecessor sets from one source.

    ``dist`` maps unreachable nodes to ``math.inf``; ``sigma`` counts all
    minimum-cost paths (exact integers); ``preds`` spans the
    shortest-path DAG.
    """

    source: str
    dist: dict
    sigma: dict
    preds: dict


class _Dag:
    """Index-level shortest-path DAG from one source (internal)."""

    __slots__ = ("source", "dist", "sigma", "preds", "succ", "topo")

    def __init__(self, source, dist, sigma, preds, succ, topo):
        self.source = source
        self.dist = dist
        self.sigma = sigma
        self.preds = preds
        self.succ = succ
        self.topo = topo


def _distances(n, succ, source, unit):
    dist = [math.inf] * n
    dist[source] = 0 if unit else 0.0
    if unit:
        q = deque([source])
        while q:
            u = q.popleft()
            du = dist[u]
            for v, _ in succ[u]:
                if v != u and math.isinf(dist[v]):
                    dist[v] = du + 1
                    q.append(v)
    else:
        heap = [(0.0, source)]
        done = [False] * n
        while heap:
            du, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for v, c in succ[u]:
                if v == u:
                    continue  # self-loops never lie on a shortest-path DAG
                nd = du + c
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
    return dist


def shortest_path_dag(n, succ, source, unit=True) -> _Dag:
    """Compute distances, the tie-tolerant shortest-path DAG, and exact sigma.

    ``succ`` is an index adjacency list of (target, cost) pairs.  Costs
    must be nonnegative.  A zero-cost cycle lying on shortest paths makes
    the path count infinite and raises :class:`NumericalError`.
    """
    dist = _distances(n, succ, source, unit)
    preds = [[] for _ in range(n)]
    dag_succ = [[] for _ in range(n)]
    indeg = [0] * n
    for u in range(n):
        du = dist[u]
        if math.isinf(du):
            continue
        for v, c in succ[u]:
            if v == u or math.isinf(dist[v]):
                continue
            cand = du + (1 if unit else c)
            on_dag = cand == dist[v] if unit else costs_equal(cand, dist[v])
            if on_dag:
                preds[v].append(u)
                dag_succ[u].append(v)
                indeg[v] += 1

    reachable = [u for u in range(n) if not math.isinf(dist[u])]
    topo = []
    q = deque(u for u in reachable if indeg[u] == 0)
    while q:
        u = q.popleft()
        topo.append(u)
        for v in dag_succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                q.append(v)
    if len(topo) != len(reachable):
        raise NumericalError(
            "zero-cost cycle on shortest paths: path counts diverge"
        )

    sigma = [0] * n
    sigma[source] = 1
    for u in topo:
        su = sigma[u]
        if su == 0:
            continue
        for v in dag_succ[u]:
            sigma[v] += su
    return _Dag(source, dist, sigma, preds, dag_succ, topo)


def single_source_shortest_paths(g: FirstOrderGraph, source: str, cost_mode: str = "unit") -> ShortestPathSummary:
    """Shortest-path distances and exact path counts from ``source``.

    ``cost_mode`` is ``"unit"`` (every edge costs 1) or ``"weighted"``
    (stored weights are costs; missing weights count as 1).
    """
    if cost_mode not in ("unit", "weighted"):
        raise ValidationError(f"cost_mode must be 'unit' or 'weighted', got {cost_mode!r}")
    if not g.has_node(source):
        raise UnknownNodeError(f"unknown source node {source!r}")
    unit = cost_mode == "unit"
    if unit:
        succ = [g.successor_indices(i) for i in range(g.n_nodes)]
    else:
        succ = [
            [(j, 1.0 if w is None else w) for j, w in g.successor_indices(i)]
            for i in range(g.n_nodes)
        ]
    dag = shortest_path_dag(g.n_nodes, succ, g.index[source], unit=unit)
    labels = g.labels
    dist = {labels[i]: dag.dist[i] for i in range(g.n_nodes)}
    sigma = {labels[i]: dag.sigma[i] for i in range(g.n_nodes)}
    preds = {
        labels[i]: frozenset(labels[p] for p in dag.preds[i]) for i in range(g.n_nodes)
    }
    return ShortestPathSummary(source=source, dist=dist, sigma=sigma, preds=preds)
