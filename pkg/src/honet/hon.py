"""Order-k de Bruijn network models over node sequences.

A model of order k has one node per observed (or feasible) k-tuple of
graph nodes and one edge per (k+1)-tuple, connecting tuples that overlap
in k-1 positions.  Edge probabilities are either maximum-likelihood
estimates from window counts (attributed) or uniform over the observed
successors (non-attributed).  Likelihoods are handled in log space; an
impossible transition yields ``IMPOSSIBLE`` (-inf) rather than an
exception so that model comparison survives unseen test paths.
"""

from __future__ import annotations

import json
import math

from .errors import (
    EmptyModelError,
    UnseenContextError,
    ValidationError,
)
from .graph import FirstOrderGraph, build_graph
from .trajectories import SubpathCounts, TrajectoryCorpus, _windows, subpath_counts

#: Log-likelihood marker for a path the model cannot produce.
IMPOSSIBLE = float("-inf")

#: Abort topology-based construction beyond this many higher-order nodes.
DEFAULT_NODE_CAP = 10**7


class HigherOrderModel:
    """Immutable order-k model: tuple nodes, shift-rule edges, probabilities."""

    def __init__(self, order, nodes, edge_count, edge_prob, attributed, first_order=None):
        self.order = int(order)
        self.nodes = tuple(sorted(nodes))
        self.node_index = {t: i for i, t in enumerate(self.nodes)}
        self.attributed = bool(attributed)
        self.first_order = first_order
        self.edge_count = dict(edge_count)  # (k+1)-tuple -> int
        self.edge_prob = dict(edge_prob)  # (k+1)-tuple -> float
        self.edge_logprob = {w: math.log(p) for w, p in self.edge_prob.items()}
        out = {t: [] for t in self.nodes}
        for w in sorted(self.edge_prob):
            out[w[:-1]].append((w[1:], self.edge_count.get(w, 0), self.edge_prob[w]))
        self.out = {t: tuple(lst) for t, lst in out.items()}

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edge_prob)

    def has_node(self, t) -> bool:
        return tuple(t) in self.node_index

    def out_edges(self, t):
        """Successor edges of a node as (to_tuple, count, prob) triples."""
        return self.out[tuple(t)]

    def first_order_labels(self):
        """All underlying graph labels appearing in any node tuple."""
        labels = set()
        for t in self.nodes:
            labels.update(t)
        if self.first_order is not None:
            labels.update(self.first_order.labels)
        return labels

    def transition_prob(self, context, nxt) -> float:
        """P(nxt | context) for a known context; raises if the context is unseen."""
        context = tuple(context)
        if context not in self.node_index or not self.out[context]:
            raise UnseenContextError(f"context {context!r} has no observed continuation")
        return self.edge_prob.get(context + (nxt,), 0.0)

    def out_distribution(self, context):
        """Next-label distribution from a context node; empty dict if dangling."""
        context = tuple(context)
        edges = self.out.get(context, ())
        return {to[-1]: p for to, _, p in edges}


def frequency_graph(corpus: TrajectoryCorpus) -> FirstOrderGraph:
    """First-order graph with edge weights = observed transition counts."""
    pairs = subpath_counts(corpus, 1).counts
    rows = [(u, v, float(c)) for (u, v), c in pairs.items()]
    if not rows:
        # corpus of isolated single-node paths: nodes only
        return build_graph([])
    return build_graph(rows)


def build_from_paths(corpus: TrajectoryCorpus, k: int, attributed: bool = True,
                     first_order: FirstOrderGraph | None = None) -> HigherOrderModel:
    """Build an order-k model from observed trajectories.

    Nodes are the observed k-windows, edges the observed (k+1)-windows.
    Attributed models carry MLE transition probabilities
    (window count / context total); non-attributed models spread
    probability uniformly over the observed successors.
    """
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    nodes = set()
    max_len = 0
    for traj in corpus.paths():
        max_len = max(max_len, len(traj.nodes))
        for w in _windows(traj.nodes, k):
            nodes.add(w)
    sc = subpath_counts(corpus, k)
    if not sc.counts:
        raise EmptyModelError(
            f"no windows of length {k + 1} for order {k}; longest path has {max_len} nodes"
        )
    edge_prob = {}
    if attributed:
        for w, c in sc.counts.items():
            edge_prob[w] = c / sc.context_totals[w[:-1]]
    else:
        out_deg = {}
        for w in sc.counts:
            out_deg[w[:-1]] = out_deg.get(w[:-1], 0) + 1
        for w in sc.counts:
            edge_prob[w] = 1.0 / out_deg[w[:-1]]
    return HigherOrderModel(
        order=k,
        nodes=nodes,
        edge_count=sc.counts,
        edge_prob=edge_prob,
        attributed=attributed,
        first_order=first_order,
    )


def build_from_topology(g: FirstOrderGraph, k: int,
                        node_cap: int = DEFAULT_NODE_CAP) -> HigherOrderModel:
    """Build an order-k model from graph connectivity alone.

    Nodes are all walks of k consecutive graph nodes (repeats allowed;
    cycles are legal), edges follow the overlap-shift rule, and
    probabilities are uniform over out-degree.  Construction aborts with
    a :class:`ValidationError` once the walk count exceeds ``node_cap``,
    since the de Bruijn explosion is combinatorial in k.
    """
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    walks = [(lab,) for lab in g.labels]
    for _ in range(k - 1):
        nxt = []
        for w in walks:
            for v in g.successors(w[-1]):
                nxt.append(w + (v,))
                if len(nxt) > node_cap:
                    raise ValidationError(
                        f"topology-based order-{k} model exceeds the node cap "
                        f"({node_cap}); pass a larger node_cap to override"
                    )
        walks = nxt
    edge_count = {}
    edge_prob = {}
    for w in walks:
        succ = g.successors(w[-1])
        if not succ:
            continue
        p = 1.0 / len(succ)
        for v in succ:
            window = w + (v,)
            edge_count[window] = 0
            edge_prob[window] = p
    return HigherOrderModel(
        order=k,
        nodes=walks,
        edge_count=edge_count,
        edge_prob=edge_prob,
        attributed=False,
        first_order=g,
    )


def mle_transition(counts: SubpathCounts, context, nxt) -> float:
    """Empirical-frequency estimate of P(nxt | context) from window counts."""
    context = tuple(context)
    if len(context) != counts.order:
        raise ValidationError(
            f"context length {len(context)} does not match counts of order {counts.order}"
        )
    total = counts.context_totals.get(context)
    if not total:
        raise UnseenContextError(f"context {context!r} was never observed")
    return counts.counts.get(context + (nxt,), 0) / total


def path_likelihood(m: HigherOrderModel, path) -> float:
    """Log-likelihood of a path under the fixed-order model.

    The product runs over all (k+1)-windows; any window the model has
    never seen (or with zero probability) makes the whole path
    ``IMPOSSIBLE``.
    """
    nodes = path.nodes if hasattr(path, "nodes") else tuple(path)
    if len(nodes) <= m.order:
        raise ValidationError(
            f"path of length {len(nodes)} has no order-{m.order} transitions"
        )
    logprob = m.edge_logprob
    total = 0.0
    for w in _windows(nodes, m.order + 1):
        lp = logprob.get(w)
        if lp is None:
            return IMPOSSIBLE
        total += lp
    return total


def corpus_likelihood(m: HigherOrderModel, corpus: TrajectoryCorpus) -> float:
    """Corpus log-likelihood: multiplicity-weighted sum of path terms.

    Paths with no window of length k+1 contribute nothing; an impossible
    contributing path makes the corpus impossible.
    """
    total = 0.0
    for traj in corpus.paths():
        if len(traj.nodes) <= m.order:
            continue
        lp = path_likelihood(m, traj)
        if lp == IMPOSSIBLE:
            return IMPOSSIBLE
        total += traj.multiplicity * lp
    return total


# -- serialization ------------------------------------------------------------

_FORMAT = "honet-model"
_VERSION = 1


def save_model(m: HigherOrderModel, path) -> None:
    """Write a versioned JSON container (deterministic field order)."""
    node_rows = [list(t) for t in m.nodes]
    edges = []
    for w in sorted(m.edge_prob):
        edges.append([
            m.node_index[w[:-1]],
            m.node_index[w[1:]],
            m.edge_count.get(w, 0),
            m.edge_prob[w],
        ])
    doc = {
        "format": _FORMAT,
        "version": _VERSION,
        "order": m.order,
        "attributed": m.attributed,
        "nodes": node_rows,
        "edges": edges,
    }
    if m.first_order is not None:
        doc["first_order"] = {
            "nodes": list(m.first_order.labels),
            "edges": [[u, v, w] for u, v, w in m.first_order.edges()],
        }
    else:
        doc["first_order"] = None
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> HigherOrderModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise ValidationError(f"not a {_FORMAT} file: {path}")
    if doc.get("version") != _VERSION:
        raise ValidationError(f"unsupported model version {doc.get('version')!r}")
    nodes = [tuple(row) for row in doc["nodes"]]
    edge_count = {}
    edge_prob = {}
    for i, j, count, prob in doc["edges"]:
        frm, to = nodes[i], nodes[j]
        window = frm + (to[-1],)
        if frm[1:] != to[:-1]:
            raise ValidationError(f"edge {frm!r} -> {to!r} violates the overlap rule")
        edge_count[window] = count
        edge_prob[window] = prob
    first_order = None
    if doc.get("first_order") is not None:
        fo = doc["first_order"]
        rows = [tuple(e) if e[2] is not None else (e[0], e[1]) for e in fo["edges"]]
        first_order = build_graph(rows)
    return HigherOrderModel(
        order=doc["order"],
        nodes=nodes,
        edge_count=edge_count,
        edge_prob=edge_prob,
        attributed=doc["attributed"],
        first_order=first_order,
    )


def write_model_csv(m: HigherOrderModel, path) -> None:
    """CSV export ``from_tuple,to_tuple,count,prob`` with ``|``-joined tuples."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("from_tuple,to_tuple,count,prob\n")
        for w in sorted(m.edge_prob):
            fh.write(
                f"{'|'.join(w[:-1])},{'|'.join(w[1:])},"
                f"{m.edge_count.get(w, 0)},{m.edge_prob[w]!r}\n"
            )
