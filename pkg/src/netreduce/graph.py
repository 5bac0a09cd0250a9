"""Weighted graphs: containers, random generators, edge-list I/O, degrees.

A :class:`Graph` stores one record per edge id.  For undirected graphs each
record stands for a pair of directed entries (one per direction) sharing the
same id and weight; :meth:`Graph.entries` expands them.  Node ids are dense
integers ``0..n_nodes-1``.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import (
    InvalidParameterError,
    InvalidWeightError,
    NoEdgesError,
    ParseError,
)

__all__ = [
    "Graph",
    "DegreeVectors",
    "gen_er",
    "gen_ba",
    "gen_sw",
    "load_edge_list",
    "save_edge_list",
    "degrees",
    "degree_correlation",
]

log = logging.getLogger(__name__)


@dataclass
class Graph:
    """A weighted graph with stable edge ids.

    ``edge_u[k]``, ``edge_v[k]``, ``edge_w[k]`` describe edge id ``k`` in its
    primary orientation (the orientation in which it was first created).
    """

    n_nodes: int
    directed: bool
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray

    def __post_init__(self) -> None:
        self.edge_u = np.asarray(self.edge_u, dtype=np.int64)
        self.edge_v = np.asarray(self.edge_v, dtype=np.int64)
        self.edge_w = np.asarray(self.edge_w, dtype=np.float64)
        if self.n_nodes < 0:
            raise InvalidParameterError("n_nodes must be non-negative")
        if not (len(self.edge_u) == len(self.edge_v) == len(self.edge_w)):
            raise InvalidParameterError("edge arrays must have equal length")
        if len(self.edge_u) and (
            self.edge_u.min() < 0
            or self.edge_v.min() < 0
            or self.edge_u.max() >= self.n_nodes
            or self.edge_v.max() >= self.n_nodes
        ):
            raise InvalidParameterError("edge endpoint out of range")
        if np.any(self.edge_u == self.edge_v):
            raise InvalidParameterError("self-loops are not allowed")
        if np.any(self.edge_w < 0):
            raise InvalidParameterError("edge weights must be non-negative")
        key = self._pair_keys()
        if len(np.unique(key)) != len(key):
            raise InvalidParameterError("duplicate node pair among edges")

    def _pair_keys(self) -> np.ndarray:
        u, v = self.edge_u, self.edge_v
        if not self.directed:
            u, v = np.minimum(u, v), np.maximum(u, v)
        return u * np.int64(self.n_nodes) + v

    @property
    def n_edges(self) -> int:
        """Number of distinct edge ids."""
        return len(self.edge_u)

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Directed entries as ``(src, dst, weight, edge_id)`` arrays.

        Undirected graphs yield two entries per edge id, primary orientation
        first; directed graphs yield one.
        """
        ids = np.arange(self.n_edges, dtype=np.int64)
        if self.directed:
            return self.edge_u, self.edge_v, self.edge_w, ids
        src = np.concatenate([self.edge_u, self.edge_v])
        dst = np.concatenate([self.edge_v, self.edge_u])
        w = np.concatenate([self.edge_w, self.edge_w])
        return src, dst, w, np.concatenate([ids, ids])

    def incoming(self, node: int) -> list[tuple[int, float, int]]:
        """Incoming ``(neighbor, weight, edge_id)`` triples of ``node``."""
        src, dst, w, ids = self.entries()
        sel = dst == node
        return list(zip(src[sel].tolist(), w[sel].tolist(), ids[sel].tolist()))

    def scaled(self, factor: float) -> "Graph":
        """Copy of the graph with every weight multiplied by ``factor``."""
        if factor < 0:
            raise InvalidParameterError("scale factor must be non-negative")
        return Graph(self.n_nodes, self.directed, self.edge_u.copy(),
                     self.edge_v.copy(), self.edge_w * factor)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n_nodes == other.n_nodes
            and self.directed == other.directed
            and np.array_equal(self.edge_u, other.edge_u)
            and np.array_equal(self.edge_v, other.edge_v)
            and np.array_equal(self.edge_w, other.edge_w)
        )


@dataclass(frozen=True)
class DegreeVectors:
    """In- and out-strength per node (weighted degrees)."""

    s_in: np.ndarray
    s_out: np.ndarray


def _require_rng_seed(seed: int) -> np.random.Generator:
    if not isinstance(seed, (int, np.integer)):
        raise InvalidParameterError("seed must be an integer")
    return np.random.default_rng(int(seed))


def gen_er(n: int, c: float, seed: int) -> Graph:
    """Undirected Erdős–Rényi graph: each pair is an edge with probability c.

    Pairs are visited in lexicographic order, one uniform draw per pair, so a
    given seed always yields the same graph.
    """
    if n < 2:
        raise InvalidParameterError(f"gen_er needs n >= 2, got {n}")
    if not 0.0 <= c <= 1.0:
        raise InvalidParameterError(f"connection probability must be in [0, 1], got {c}")
    rng = _require_rng_seed(seed)
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < c
    u, v = iu[keep], iv[keep]
    return Graph(n, False, u, v, np.ones(len(u)))


def gen_ba(n: int, m: int, seed: int) -> Graph:
    """Undirected preferential-attachment graph.

    Starts from a complete core on the first ``m`` nodes; every later node
    attaches to ``m`` distinct existing nodes chosen with probability
    proportional to current degree.  Final edge count is
    ``m*(m-1)/2 + (n-m)*m``.
    """
    if m < 1:
        raise InvalidParameterError(f"gen_ba needs m >= 1, got {m}")
    if n <= m:
        raise InvalidParameterError(f"gen_ba needs n > m, got n={n}, m={m}")
    rng = _require_rng_seed(seed)
    us: list[int] = []
    vs: list[int] = []
    # degree-proportional sampling by node repetition, one entry per endpoint
    repeated: list[int] = []
    for u in range(m):
        for v in range(u + 1, m):
            us.append(u)
            vs.append(v)
            repeated.append(u)
            repeated.append(v)
    for v in range(m, n):
        targets: set[int] = set()
        while len(targets) < m:
            if repeated:
                t = repeated[int(rng.integers(len(repeated)))]
            else:
                t = int(rng.integers(v))  # m = 1 core has no edges yet
            targets.add(t)
        for t in sorted(targets):
            us.append(t)
            vs.append(v)
            repeated.append(t)
            repeated.append(v)
    u = np.asarray(us, dtype=np.int64)
    v = np.asarray(vs, dtype=np.int64)
    return Graph(n, False, u, v, np.ones(len(u)))


def gen_sw(n: int, k: int, beta: float, seed: int) -> Graph:
    """Small-world ring-rewiring graph (ring lattice plus random rewiring).

    Each node starts connected to its ``k // 2`` nearest neighbours on each
    side; every lattice edge is then rewired with probability ``beta`` to a
    uniformly random target, skipping self-loops and duplicates.  The edge
    count is always ``n * k / 2``.
    """
    if k < 2 or k % 2 != 0:
        raise InvalidParameterError(f"gen_sw needs even k >= 2, got {k}")
    if n <= k:
        raise InvalidParameterError(f"gen_sw needs n > k, got n={n}, k={k}")
    if not 0.0 <= beta <= 1.0:
        raise InvalidParameterError(f"rewiring probability must be in [0, 1], got {beta}")
    rng = _require_rng_seed(seed)
    edges: list[tuple[int, int]] = []
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for i in range(n):
            t = (i + j) % n
            edges.append((i, t))
            adjacency[i].add(t)
            adjacency[t].add(i)
    # rewiring pass visits edges in construction order and keeps positions,
    # so edge ids are stable for a given seed
    for idx, (u, v) in enumerate(edges):
        if rng.random() >= beta:
            continue
        if len(adjacency[u]) >= n - 1:
            continue  # node already saturated, nothing to rewire to
        t = int(rng.integers(n))
        while t == u or t in adjacency[u]:
            t = int(rng.integers(n))
        adjacency[u].discard(v)
        adjacency[v].discard(u)
        adjacency[u].add(t)
        adjacency[t].add(u)
        edges[idx] = (u, t)
    u = np.asarray([e[0] for e in edges], dtype=np.int64)
    v = np.asarray([e[1] for e in edges], dtype=np.int64)
    return Graph(n, False, u, v, np.ones(len(u)))


def _merge_pairs(
    n_nodes: int,
    pairs: Iterable[tuple[int, int, float]],
    directed: bool,
) -> Graph:
    """Accumulate parallel records into single edges, preserving first-seen
    orientation and order."""
    order: dict[tuple[int, int], int] = {}
    us: list[int] = []
    vs: list[int] = []
    ws: list[float] = []
    for u, v, w in pairs:
        key = (u, v) if directed else (min(u, v), max(u, v))
        idx = order.get(key)
        if idx is None:
            order[key] = len(us)
            us.append(u)
            vs.append(v)
            ws.append(w)
        else:
            ws[idx] += w
    return Graph(n_nodes, directed,
                 np.asarray(us, dtype=np.int64),
                 np.asarray(vs, dtype=np.int64),
                 np.asarray(ws, dtype=np.float64))


def load_edge_list(text: str | IO[str], treat_as_undirected: bool = True) -> Graph:
    """Parse a whitespace- or comma-separated edge list.

    Each payload line is ``src dst [weight]`` with arbitrary integer node
    ids; a missing weight defaults to 1.  Lines starting with ``%`` or ``#``
    and blank lines are skipped.  Node ids are remapped to ``0..n-1`` in
    first-appearance order; parallel records merge by summing weights;
    self-loops are dropped (count logged).  A ``% nodes=N directed=D`` header,
    as written by :func:`save_edge_list`, preserves isolated trailing nodes.
    """
    if isinstance(text, str):
        stream: Iterator[str] = iter(io.StringIO(text))
    else:
        stream = iter(text)

    header_nodes: int | None = None
    node_index: dict[int, int] = {}
    raw: list[tuple[int, int, float]] = []
    self_loops = 0

    def intern(raw_id: int) -> int:
        idx = node_index.get(raw_id)
        if idx is None:
            idx = len(node_index)
            node_index[raw_id] = idx
        return idx

    for line_no, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith(("%", "#")):
            if stripped.startswith("%") and "nodes=" in stripped:
                for token in stripped[1:].split():
                    if token.startswith("nodes="):
                        try:
                            header_nodes = int(token.split("=", 1)[1])
                        except ValueError:
                            pass
            continue
        fields = stripped.replace(",", " ").split()
        if len(fields) not in (2, 3):
            raise ParseError(f"expected 2 or 3 fields, got {len(fields)}", line_no)
        try:
            a = int(fields[0])
            b = int(fields[1])
        except ValueError:
            raise ParseError(f"non-numeric node id in {fields[:2]}", line_no) from None
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise ParseError(f"non-numeric weight {fields[2]!r}", line_no) from None
            if not np.isfinite(w):
                raise InvalidWeightError(f"non-finite weight {fields[2]!r}", line_no)
            if w < 0:
                raise InvalidWeightError(f"negative weight {w}", line_no)
        else:
            w = 1.0
        if a == b:
            self_loops += 1
            intern(a)  # the node still exists even if its loop is dropped
            continue
        raw.append((intern(a), intern(b), w))

    if self_loops:
        log.warning("dropped %d self-loop line(s) from edge list", self_loops)
    n_nodes = len(node_index)
    if header_nodes is not None:
        n_nodes = max(n_nodes, header_nodes)
    return _merge_pairs(n_nodes, raw, directed=not treat_as_undirected)


def save_edge_list(g: Graph, dest: str | IO[str]) -> None:
    """Write ``g`` in the edge-list format accepted by :func:`load_edge_list`.

    One line per edge id in id order, primary orientation, so loading the
    output reproduces the graph exactly (ids included).
    """
    if isinstance(dest, str):
        with open(dest, "w", encoding="utf-8") as fh:
            save_edge_list(g, fh)
        return
    dest.write("% netreduce edge list\n")
    dest.write(f"% nodes={g.n_nodes} directed={1 if g.directed else 0}\n")
    for u, v, w in zip(g.edge_u.tolist(), g.edge_v.tolist(), g.edge_w.tolist()):
        dest.write(f"{u} {v} {w:.17g}\n")


def degrees(g: Graph) -> DegreeVectors:
    """Weighted in- and out-strength per node.

    For undirected graphs the two vectors are identical by construction, so
    the same array values are returned for both.
    """
    if g.directed:
        s_in = np.bincount(g.edge_v, weights=g.edge_w, minlength=g.n_nodes)
        s_out = np.bincount(g.edge_u, weights=g.edge_w, minlength=g.n_nodes)
    else:
        s_in = (
            np.bincount(g.edge_v, weights=g.edge_w, minlength=g.n_nodes)
            + np.bincount(g.edge_u, weights=g.edge_w, minlength=g.n_nodes)
        )
        s_out = s_in.copy()
    return DegreeVectors(s_in=s_in, s_out=s_out)


def degree_correlation(g: Graph) -> float:
    """Pearson correlation of ``(s_out[src], s_in[dst])`` over directed entries.

    Returns 0.0 when either marginal is constant (zero variance).
    """
    if g.n_edges == 0:
        raise NoEdgesError("degree correlation needs at least one edge")
    dv = degrees(g)
    src, dst, _, _ = g.entries()
    xs = dv.s_out[src]
    ys = dv.s_in[dst]
    sx = float(np.std(xs))
    sy = float(np.std(ys))
    scale = max(float(np.max(np.abs(xs))), float(np.max(np.abs(ys))), 1.0)
    if sx <= 1e-12 * scale or sy <= 1e-12 * scale:
        return 0.0
    return float(np.corrcoef(xs, ys)[0, 1])
