"""Simple undirected graphs, degree-law samplers, and contact-data ingestion.

Vertices are dense 0-based indices; labelled inputs are mapped to indices in
first-seen order. Graphs are immutable once built: edge arrays are stored
read-only and the dense adjacency matrix is materialized lazily for the
operations that need it.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Sequence, Union

import numpy as np
from scipy import integrate


class EdgeListError(ValueError):
    """Malformed edge-list or contact-round input; message carries the line number."""


class Graph:
    """Simple undirected graph with canonical ``i < j`` edge storage.

    Edges are kept as a sorted array of linear pair codes ``i * n_v + j``
    with ``i < j``, which makes set operations on edge sets (noise
    perturbation, replicate comparison) cheap without touching the dense
    adjacency matrix. ``adjacency`` is built on first use and cached.
    """

    __slots__ = ("n_v", "codes", "edge_i", "edge_j", "degrees", "labels", "meta", "_adj")

    def __init__(
        self,
        n_v: int,
        edge_i: Sequence[int] = (),
        edge_j: Sequence[int] = (),
        labels: Sequence[str] | None = None,
        meta: dict | None = None,
    ):
        n_v = int(n_v)
        if n_v < 0:
            raise ValueError("vertex count must be nonnegative")
        ei = np.asarray(edge_i, dtype=np.int64).ravel()
        ej = np.asarray(edge_j, dtype=np.int64).ravel()
        if ei.shape != ej.shape:
            raise ValueError("edge endpoint arrays differ in length")
        if ei.size:
            if ei.min() < 0 or ej.min() < 0 or max(int(ei.max()), int(ej.max())) >= n_v:
                raise IndexError("edge endpoint out of range")
            if np.any(ei == ej):
                raise ValueError("self-edges are not allowed")
            lo = np.minimum(ei, ej)
            hi = np.maximum(ei, ej)
            codes = np.unique(lo * n_v + hi)
        else:
            codes = np.empty(0, dtype=np.int64)
        self._init_from_codes(n_v, codes, labels, meta)

    def _init_from_codes(self, n_v, codes, labels, meta):
        self.n_v = n_v
        self.codes = codes
        if codes.size:
            self.edge_i = codes // n_v
            self.edge_j = codes % n_v
        else:
            self.edge_i = np.empty(0, dtype=np.int64)
            self.edge_j = np.empty(0, dtype=np.int64)
        self.degrees = np.bincount(
            np.concatenate([self.edge_i, self.edge_j]), minlength=n_v
        ).astype(np.int64)
        for arr in (self.codes, self.edge_i, self.edge_j, self.degrees):
            arr.flags.writeable = False
        self.labels = tuple(labels) if labels is not None else None
        if self.labels is not None and len(self.labels) != n_v:
            raise ValueError("label count does not match vertex count")
        self.meta = dict(meta) if meta else {}
        self._adj = None

    @classmethod
    def _from_codes(cls, n_v, codes, labels=None, meta=None) -> "Graph":
        # fast path for internal construction; codes must be sorted, unique,
        # self-free and in range
        obj = cls.__new__(cls)
        obj._init_from_codes(int(n_v), np.asarray(codes, dtype=np.int64), labels, meta)
        return obj

    @classmethod
    def from_adjacency(cls, matrix, labels=None, meta=None) -> "Graph":
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        a = a.astype(bool)
        if np.any(np.diagonal(a)):
            raise ValueError("adjacency has a nonzero diagonal")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency is not symmetric")
        i, j = np.nonzero(np.triu(a, 1))
        return cls(a.shape[0], i, j, labels=labels, meta=meta)

    # -- basic accessors -------------------------------------------------

    @property
    def n_edges(self) -> int:
        return int(self.codes.size)

    @property
    def density(self) -> float:
        if self.n_v < 2:
            return 0.0
        return 2.0 * self.n_edges / (self.n_v * (self.n_v - 1))

    @property
    def adjacency(self) -> np.ndarray:
        if self._adj is None:
            a = np.zeros((self.n_v, self.n_v), dtype=bool)
            if self.codes.size:
                a[self.edge_i, self.edge_j] = True
                a[self.edge_j, self.edge_i] = True
            a.flags.writeable = False
            self._adj = a
        return self._adj

    def _check_vertex(self, i: int) -> int:
        i = int(i)
        if not 0 <= i < self.n_v:
            raise IndexError(f"vertex {i} out of range for {self.n_v} vertices")
        return i

    def degree(self, i: int) -> int:
        return int(self.degrees[self._check_vertex(i)])

    def has_edge(self, i: int, j: int) -> bool:
        i = self._check_vertex(i)
        j = self._check_vertex(j)
        if i == j:
            return False
        lo, hi = (i, j) if i < j else (j, i)
        code = lo * self.n_v + hi
        pos = int(np.searchsorted(self.codes, code))
        return pos < self.codes.size and self.codes[pos] == code

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[self._check_vertex(i)])

    def common_neighbors(self, i: int, j: int) -> int:
        i = self._check_vertex(i)
        j = self._check_vertex(j)
        if i == j:
            raise ValueError("common_neighbors needs two distinct vertices")
        return int(np.count_nonzero(self.adjacency[i] & self.adjacency[j]))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_v == other.n_v
            and np.array_equal(self.codes, other.codes)
            and self.labels == other.labels
        )

    def __repr__(self):
        return f"Graph(n_v={self.n_v}, n_edges={self.n_edges})"


def common_neighbors(g: Graph, i: int, j: int) -> int:
    """Number of vertices adjacent to both ``i`` and ``j``."""
    return g.common_neighbors(i, j)


# -- degree distributions ------------------------------------------------


def _truncated_poisson_rate(mean_degree: float) -> float:
    """Parent Poisson rate whose zero-truncated mean equals ``mean_degree``.

    The truncated mean mu / (1 - exp(-mu)) increases from 1, so targets at
    or below 1 collapse to the point mass at degree 1 (rate 0). Solved by
    bisection to an interval width of 1e-12.
    """
    if not math.isfinite(mean_degree) or mean_degree <= 0:
        raise ValueError("mean degree must be positive and finite")
    if mean_degree <= 1.0:
        return 0.0
    lo, hi = 1e-12, float(mean_degree)
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if mid / -math.expm1(-mid) < mean_degree:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ZeroTruncatedPoisson:
    """Homogeneous degree law: Poisson conditioned on being at least 1."""

    mean_degree: float

    def __post_init__(self):
        if not math.isfinite(self.mean_degree) or self.mean_degree <= 0:
            raise ValueError("mean degree must be positive and finite")

    @property
    def parent_rate(self) -> float:
        return _truncated_poisson_rate(self.mean_degree)


@dataclass(frozen=True)
class ParetoExpCutoff:
    """Heavy-tailed degree law with density ~ exp(-rate*x) * x**-(shape+1) on [lower, upper]."""

    rate: float
    shape: float
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError("rate must be positive")
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError("shape must be positive")
        if not (1 <= self.lower < self.upper):
            raise ValueError("need 1 <= lower < upper")

    def _weight(self, x):
        return np.exp(-self.rate * x) * x ** -(self.shape + 1.0)

    def _integrals(self) -> tuple[float, float]:
        i0, _ = integrate.quad(self._weight, self.lower, self.upper, limit=200)
        i1, _ = integrate.quad(lambda x: x * self._weight(x), self.lower, self.upper, limit=200)
        return i0, i1

    @property
    def normalization(self) -> float:
        """Constant making the density integrate to 1 over [lower, upper]."""
        i0, _ = self._integrals()
        if not (i0 > 0 and math.isfinite(i0)):
            raise ValueError("degenerate cutoff distribution")
        return 1.0 / i0

    @property
    def mean(self) -> float:
        i0, i1 = self._integrals()
        return i1 / i0


DegreeDistribution = Union[ZeroTruncatedPoisson, ParetoExpCutoff]


def sample_degree_sequence(
    dist: DegreeDistribution, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` integer degrees from ``dist``, clamped to [1, n-1].

    The Pareto-with-cutoff law is sampled exactly on its continuous support
    by inverse-CDF draws from the pure truncated Pareto accepted with
    probability exp(-rate * (x - lower)), then rounded to the nearest
    integer and clamped to [max(1, ceil(lower)), n-1].
    """
    n = int(n)
    if n < 2:
        raise ValueError("need at least two vertices")

    if isinstance(dist, ZeroTruncatedPoisson):
        mu = dist.parent_rate
        if mu == 0.0:
            return np.ones(n, dtype=np.int64)
        out = np.empty(0, dtype=np.int64)
        while out.size < n:
            batch = rng.poisson(mu, size=int((n - out.size) * 1.25) + 16)
            batch = batch[batch > 0]
            out = np.concatenate([out, batch[: n - out.size]])
        return np.minimum(out, n - 1)

    if isinstance(dist, ParetoExpCutoff):
        a = float(dist.lower)
        b = float(min(dist.upper, n - 1))
        if not a < b:
            raise ValueError("lower bound must sit below min(upper, n-1)")
        k_lo = max(1, math.ceil(a))
        za, zb = a ** -dist.shape, b ** -dist.shape
        out = np.empty(0, dtype=np.int64)
        while out.size < n:
            m = int((n - out.size) * 1.6) + 16
            u = rng.random(m)
            x = (za - u * (za - zb)) ** (-1.0 / dist.shape)
            accept = rng.random(m) < np.exp(-dist.rate * (x - a))
            k = np.rint(x[accept]).astype(np.int64)
            out = np.concatenate([out, k[: n - out.size]])
        return np.clip(out, k_lo, n - 1)

    raise TypeError(f"unknown degree distribution: {dist!r}")


# -- graph construction --------------------------------------------------


def build_graph_configuration(
    degrees: Sequence[int],
    rng: np.random.Generator,
    max_attempts: int = 100,
) -> Graph:
    """Random simple graph from a degree sequence by stub matching.

    Stubs are matched uniformly at random; matchings containing self-loops
    or parallel edges are redrawn up to ``max_attempts`` times, after which
    the offending pairs of the last matching are erased. Either way realized
    degrees never exceed the requested ones, and the number of stubs lost to
    erasure is reported in ``meta['erased_stub_count']``. An odd stub total
    is repaired by adding one stub to a uniformly chosen vertex that can
    still take it (``meta['odd_repair_node']``).
    """
    d = np.asarray(degrees, dtype=np.int64).copy()
    n = d.size
    if n == 0:
        raise ValueError("degree sequence is empty")
    if d.min() < 1 or d.max() > n - 1:
        raise ValueError("each degree must lie in [1, n-1]")

    meta: dict = {"odd_repair_node": None}
    if d.sum() % 2 == 1:
        candidates = np.flatnonzero(d < n - 1)
        pick = int(rng.choice(candidates))
        d[pick] += 1
        meta["odd_repair_node"] = pick

    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    n_pairs = stubs.size // 2
    codes = np.empty(0, dtype=np.int64)
    attempts = 0
    for attempts in range(1, max_attempts + 1):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        keep = a != b
        lo = np.minimum(a[keep], b[keep])
        hi = np.maximum(a[keep], b[keep])
        codes = np.unique(lo * n + hi)
        if codes.size == n_pairs:
            break
    meta["matching_attempts"] = attempts
    meta["erased_stub_count"] = int(2 * (n_pairs - codes.size))
    return Graph._from_codes(n, codes, meta=meta)


# -- edge-list and contact-round ingestion --------------------------------

Source = Union[str, Path, IO[str]]


def _rows(source: Source) -> Iterator[list[str]]:
    if hasattr(source, "read"):
        yield from csv.reader(source)
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            yield from csv.reader(fh)


def _parse_pair(fields, labels: dict, lineno: int) -> tuple[int, int]:
    a, b = fields[0].strip(), fields[1].strip()
    if not a or not b:
        raise EdgeListError(f"line {lineno}: empty node label")
    if a == b:
        raise EdgeListError(f"line {lineno}: self-edge {a!r}")
    ia = labels.setdefault(a, len(labels))
    ib = labels.setdefault(b, len(labels))
    return (ia, ib) if ia < ib else (ib, ia)


def load_edge_list(source: Source) -> Graph:
    """Read an undirected edge list with header ``node_a,node_b``.

    Labels map to dense indices in first-seen order; duplicate and reversed
    pairs collapse to one edge. A header-only stream yields the empty graph.
    """
    rows = _rows(source)
    header = next(rows, None)
    if header is None or [c.strip() for c in header] != ["node_a", "node_b"]:
        raise EdgeListError("line 1: expected header 'node_a,node_b'")
    labels: dict[str, int] = {}
    pairs: set[tuple[int, int]] = set()
    for lineno, fields in enumerate(rows, start=2):
        if not fields:
            continue
        if len(fields) != 2:
            raise EdgeListError(f"line {lineno}: expected 2 fields, got {len(fields)}")
        pairs.add(_parse_pair(fields, labels, lineno))
    if pairs:
        ei, ej = map(np.asarray, zip(*sorted(pairs)))
    else:
        ei = ej = ()
    return Graph(len(labels), ei, ej, labels=tuple(labels))


@dataclass(frozen=True)
class RoundedContactData:
    """Per-round contact edge sets over a shared labelled vertex universe."""

    round_ids: tuple[int, ...]
    edges_by_round: tuple[frozenset[tuple[int, int]], ...]
    labels: tuple[str, ...]

    @property
    def n_v(self) -> int:
        return len(self.labels)

    @property
    def n_rounds(self) -> int:
        return len(self.round_ids)


def load_rounds(source: Source) -> RoundedContactData:
    """Read multi-round contact data with header ``round,node_a,node_b``."""
    rows = _rows(source)
    header = next(rows, None)
    if header is None or [c.strip() for c in header] != ["round", "node_a", "node_b"]:
        raise EdgeListError("line 1: expected header 'round,node_a,node_b'")
    labels: dict[str, int] = {}
    by_round: dict[int, set[tuple[int, int]]] = {}
    for lineno, fields in enumerate(rows, start=2):
        if not fields:
            continue
        if len(fields) != 3:
            raise EdgeListError(f"line {lineno}: expected 3 fields, got {len(fields)}")
        try:
            rid = int(fields[0].strip())
        except ValueError:
            raise EdgeListError(f"line {lineno}: round {fields[0]!r} is not an integer") from None
        if rid < 1:
            raise EdgeListError(f"line {lineno}: round must be a positive integer")
        pair = _parse_pair(fields[1:], labels, lineno)
        by_round.setdefault(rid, set()).add(pair)
    ids = tuple(sorted(by_round))
    return RoundedContactData(
        round_ids=ids,
        edges_by_round=tuple(frozenset(by_round[r]) for r in ids),
        labels=tuple(labels),
    )


def build_true_graph_from_rounds(data: RoundedContactData, min_count: int = 2) -> Graph:
    """Graph whose edges are the pairs seen in at least ``min_count`` rounds."""
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    if data.n_rounds < 1:
        raise ValueError("need at least one round")
    counts: dict[tuple[int, int], int] = {}
    for edges in data.edges_by_round:
        for pair in edges:
            counts[pair] = counts.get(pair, 0) + 1
    kept = sorted(pair for pair, c in counts.items() if c >= min_count)
    if kept:
        ei, ej = map(np.asarray, zip(*kept))
    else:
        ei = ej = ()
    return Graph(data.n_v, ei, ej, labels=data.labels)


def align_on_labels(graphs: Sequence[Graph]) -> list[Graph]:
    """Re-index labelled graphs onto their shared label universe.

    Independently loaded edge lists assign dense indices in their own
    first-seen order, so the same label can sit at different indices in
    different files. This rebuilds every graph on the union of labels
    (first-seen across the inputs, in input order) so that edge sets are
    directly comparable.
    """
    mapping: dict[str, int] = {}
    for g in graphs:
        if g.labels is None:
            raise ValueError("all graphs must carry vertex labels")
        for lab in g.labels:
            mapping.setdefault(lab, len(mapping))
    labels = tuple(mapping)
    n = len(mapping)
    out = []
    for g in graphs:
        if g.n_edges:
            ix = np.asarray([mapping[lab] for lab in g.labels], dtype=np.int64)
            out.append(Graph(n, ix[g.edge_i], ix[g.edge_j], labels=labels))
        else:
            out.append(Graph(n, labels=labels))
    return out


def write_edge_list(g: Graph, sink: Source) -> None:
    """Write ``g`` as a ``node_a,node_b`` CSV in canonical edge order."""
    labels = g.labels if g.labels is not None else tuple(str(i) for i in range(g.n_v))

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_a", "node_b"])
        for i, j in zip(g.edge_i, g.edge_j):
            w.writerow([labels[i], labels[j]])

    if hasattr(sink, "write"):
        _write(sink)
    else:
        with open(sink, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
