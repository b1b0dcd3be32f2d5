"""Trajectory corpora: ngram-file parsing, sliding windows, subpath counts,
and deterministic train/test splits.

A corpus is a multiset of node-label sequences.  Identical sequences are
aggregated into one entry with a multiplicity, which keeps mobility
corpora with heavy path duplication compact.  The ngram file format is
one path per line, labels comma-separated, with an optional trailing
``*n`` multiplicity field::

    a,b,c
    a,b,d,*4
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientDataError, ParseError, ValidationError


@dataclass(frozen=True)
class Trajectory:
    """One observed node sequence with a multiplicity."""

    nodes: tuple
    multiplicity: int = 1

    def __post_init__(self):
        if len(self.nodes) < 1:
            raise ValidationError("a trajectory needs at least one node")
        if self.multiplicity < 1:
            raise ValidationError(f"multiplicity must be >= 1, got {self.multiplicity}")

    def __len__(self):
        return len(self.nodes)


class TrajectoryCorpus:
    """Multiset of trajectories; insertion order is preserved."""

    def __init__(self, paths=(), meta=None):
        self._mult = {}  # tuple(nodes) -> multiplicity
        self.node_universe = set()
        self.meta = dict(meta) if meta else {}
        for p in paths:
            if isinstance(p, Trajectory):
                self.add(p.nodes, p.multiplicity)
            else:
                self.add(tuple(p), 1)

    def add(self, nodes, multiplicity=1):
        nodes = tuple(sys.intern(str(n)) for n in nodes)
        if len(nodes) < 1:
            raise ValidationError("a trajectory needs at least one node")
        if multiplicity < 1:
            raise ValidationError(f"multiplicity must be >= 1, got {multiplicity}")
        self._mult[nodes] = self._mult.get(nodes, 0) + multiplicity
        self.node_universe.update(nodes)

    def paths(self):
        """Iterate unique trajectories (insertion order)."""
        for nodes, m in self._mult.items():
            yield Trajectory(nodes, m)

    @property
    def total_paths(self) -> int:
        """Number of observed trajectory instances (multiplicity-weighted)."""
        return sum(self._mult.values())

    @property
    def n_unique(self) -> int:
        return len(self._mult)

    def multiplicity(self, nodes) -> int:
        return self._mult.get(tuple(nodes), 0)

    def as_multiset(self):
        return dict(self._mult)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryCorpus):
            return NotImplemented
        return self._mult == other._mult

    def __repr__(self):
        return f"TrajectoryCorpus(unique={self.n_unique}, total={self.total_paths})"


def parse_ngram_file(path) -> TrajectoryCorpus:
    """Parse a UTF-8 ngram file into a corpus.

    Raises :class:`ParseError` with the offending line number for empty
    paths, empty labels, and malformed multiplicities.
    """
    corpus = TrajectoryCorpus()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            fields = line.split(",")
            mult = 1
            if len(fields) >= 2 and fields[-1].startswith("*"):
                raw = fields[-1][1:]
                try:
                    mult = int(raw)
                except ValueError:
                    raise ParseError(
                        f"non-integer multiplicity {fields[-1]!r}", line=line_no, path=path
                    ) from None
                if mult < 1:
                    raise ParseError(
                        f"multiplicity must be positive, got {mult}", line=line_no, path=path
                    )
                fields = fields[:-1]
            if not fields or all(f == "" for f in fields):
                raise ParseError("empty path line", line=line_no, path=path)
            if any(f == "" for f in fields):
                raise ParseError("empty node label", line=line_no, path=path)
            corpus.add(fields, mult)
    if corpus.n_unique == 0:
        raise ParseError("file contains no paths", path=path)
    return corpus


def write_ngram_file(corpus: TrajectoryCorpus, path) -> None:
    """Serialize a corpus; ``parse_ngram_file`` reproduces the multiset."""
    with open(path, "w", encoding="utf-8") as fh:
        for traj in corpus.paths():
            line = ",".join(traj.nodes)
            if traj.multiplicity > 1:
                line += f",*{traj.multiplicity}"
            fh.write(line + "\n")


def _windows(nodes, size):
    if len(nodes) < size:
        return []
    return list(zip(*(nodes[i:] for i in range(size))))


def sliding_windows(path, k: int):
    """Contiguous (k+1)-windows of a trajectory, in order.

    Returns ``len(path) - k`` windows; empty when the path is too short.
    """
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    nodes = path.nodes if isinstance(path, Trajectory) else tuple(path)
    return _windows(nodes, k + 1)


@dataclass(frozen=True)
class SubpathCounts:
    """Empirical (k+1)-window counts and their k-context totals."""

    order: int
    counts: dict = field(default_factory=dict)
    context_totals: dict = field(default_factory=dict)


def subpath_counts(corpus: TrajectoryCorpus, k: int) -> SubpathCounts:
    """Count (k+1)-windows over the corpus, weighted by multiplicity."""
    if k < 1:
        raise ValidationError(f"order k must be >= 1, got {k}")
    counts = {}
    totals = {}
    for traj in corpus.paths():
        m = traj.multiplicity
        for w in _windows(traj.nodes, k + 1):
            counts[w] = counts.get(w, 0) + m
            ctx = w[:-1]
            totals[ctx] = totals.get(ctx, 0) + m
    return SubpathCounts(order=k, counts=counts, context_totals=totals)


def write_subpath_counts_csv(sc: SubpathCounts, path) -> None:
    """CSV export ``context,next,count`` with ``|``-joined context labels."""
    rows = sorted(sc.counts.items())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("context,next,count\n")
        for window, c in rows:
            fh.write(f"{'|'.join(window[:-1])},{window[-1]},{c}\n")


def train_test_split(corpus: TrajectoryCorpus, ratio: float, seed: int):
    """Split trajectory *instances* independently into (train, test).

    Each instance (multiplicity expanded) goes to the train side with
    probability ``ratio``, drawn from a seeded PRNG; the same seed always
    yields the identical split.  Subpaths of one trajectory are dependent,
    so the split unit is the whole trajectory instance.
    """
    if not 0.0 < ratio < 1.0:
        raise ValidationError(f"split ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train = TrajectoryCorpus()
    test = TrajectoryCorpus()
    for traj in corpus.paths():
        draws = rng.random(traj.multiplicity)
        m_train = int(np.count_nonzero(draws < ratio))
        m_test = traj.multiplicity - m_train
        if m_train:
            train.add(traj.nodes, m_train)
        if m_test:
            test.add(traj.nodes, m_test)
    return train, test


@dataclass(frozen=True)
class PathLengthStats:
    count: int
    mean: float
    histogram: dict  # length -> instance count


def path_length_stats(corpus: TrajectoryCorpus) -> PathLengthStats:
    """Multiplicity-weighted count, mean length, and integer histogram."""
    if corpus.n_unique == 0:
        raise InsufficientDataError("empty corpus")
    count = 0
    total = 0
    hist = {}
    for traj in corpus.paths():
        m = traj.multiplicity
        length = len(traj.nodes)
        count += m
        total += m * length
        hist[length] = hist.get(length, 0) + m
    return PathLengthStats(count=count, mean=total / count, histogram=dict(sorted(hist.items())))


def validate_corpus(corpus: TrajectoryCorpus, g) -> None:
    """Check every consecutive node pair against the graph's edge set."""
    for traj in corpus.paths():
        for u, v in zip(traj.nodes, traj.nodes[1:]):
            if not g.has_node(u) or not g.has_node(v) or not g.has_edge(u, v):
                raise ValidationError(
                    f"trajectory step ({u!r} -> {v!r}) is not an edge of the graph"
                )
