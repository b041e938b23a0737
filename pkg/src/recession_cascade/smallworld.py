"""Small-world topology: ring lattice, replacement rewiring, path-length metrics."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

log = logging.getLogger(__name__)

Edge = tuple[int, int]


class DisconnectedGraphError(ValueError):
    pass


class GraphGenerationError(RuntimeError):
    def __init__(self, attempts: int, n: int, k: int, mu: float):
        self.attempts = attempts
        super().__init__(
            f"no connected graph after {attempts} attempts (n={n}, k={k}, mu={mu})"
        )


def _norm(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices ``0..n-1``.

    ``rewired`` counts edges selected for rewiring and ``attempts`` counts the
    generations needed to obtain a connected graph; neither takes part in
    equality.
    """

    n: int
    edges: frozenset[Edge]
    rewired: int = field(default=0, compare=False)
    attempts: int = field(default=1, compare=False)

    def __post_init__(self):
        edges = self.edges
        if not isinstance(edges, frozenset) or any(a >= b for a, b in edges):
            edges = frozenset(_norm(a, b) for a, b in edges)
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop at vertex {a}")
            if a < 0 or b >= self.n:
                raise ValueError(f"edge ({a}, {b}) outside 0..{self.n - 1}")
        object.__setattr__(self, "edges", edges)

    @cached_property
    def distances(self) -> NDArray[np.int64]:
        """All-pairs shortest-path lengths; -1 marks unreachable pairs."""
        return _distance_rows(self.adjacency_matrix() > 0)

    @classmethod
    def _trusted(cls, n: int, edges: frozenset[Edge], rewired: int = 0, attempts: int = 1) -> "Graph":
        """Skip validation for edge sets built from an already valid graph."""
        g = object.__new__(cls)
        for name, value in (("n", n), ("edges", edges), ("rewired", rewired), ("attempts", attempts)):
            object.__setattr__(g, name, value)
        return g

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return tuple(tuple(sorted(v)) for v in nbrs)

    def degrees(self) -> NDArray[np.int64]:
        deg = np.zeros(self.n, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def adjacency_matrix(self) -> NDArray[np.float64]:
        m = np.zeros((self.n, self.n))
        if self.edges:
            idx = np.array(sorted(self.edges))
            m[idx[:, 0], idx[:, 1]] = 1.0
            m[idx[:, 1], idx[:, 0]] = 1.0
        return m

    def edge_list(self) -> list[list[int]]:
        return [list(e) for e in sorted(self.edges)]

    def relabel(self, perm: Sequence[int]) -> "Graph":
        return Graph(self.n, frozenset(_norm(perm[a], perm[b]) for a, b in self.edges))


@lru_cache(maxsize=64)
def lattice_edges(n: int, k: int) -> tuple[Edge, ...]:
    """Lattice edges in canonical order: (i, i+1), ..., (i, i+k) for each i."""
    return tuple((i, (i + d) % n) for i in range(n) for d in range(1, k + 1))


@lru_cache(maxsize=64)
def ring_lattice(n: int, k: int) -> Graph:
    """Ring of ``n`` vertices, each joined to ``k`` neighbors on either side."""
    if n < 3 or k < 1 or 2 * k >= n:
        raise ValueError(f"ring lattice needs n >= 3, 1 <= k, 2k < n; got n={n}, k={k}")
    return Graph(n, frozenset(_norm(a, b) for a, b in lattice_edges(n, k)))


def empty_graph(n: int) -> Graph:
    return Graph(n, frozenset())


def _swap_rewire(graph: Graph, selected: list[Edge], rng: np.random.Generator) -> tuple[set[Edge], int]:
    edges = set(graph.edges)
    order = rng.permutation(len(selected))
    picked = [selected[i] for i in order]
    failed = 0
    for p in range(0, len(picked) - 1, 2):
        (a, b), (c, d) = picked[p], picked[p + 1]
        if _norm(a, b) not in edges or _norm(c, d) not in edges:
            failed += 1
            continue
        # (a,b),(c,d) -> (a,d),(c,b), or the other recombination if that one is illegal
        options = [((a, d), (c, b)), ((a, c), (b, d))]
        if rng.random() < 0.5:
            options.reverse()
        for e1, e2 in options:
            n1, n2 = _norm(*e1), _norm(*e2)
            if e1[0] == e1[1] or e2[0] == e2[1] or n1 == n2:
                continue
            rest = edges - {_norm(a, b), _norm(c, d)}
            if n1 in rest or n2 in rest:
                continue
            edges = rest | {n1, n2}
            break
        else:
            failed += 1
    return edges, failed


def _endpoint_rewire(graph: Graph, selected_mask: NDArray[np.bool_], canonical: Sequence[Edge],
                     rng: np.random.Generator) -> set[Edge]:
    edges = set(graph.edges)
    nbrs = [set(v) for v in graph.adjacency]
    everyone = frozenset(range(graph.n))
    for idx in np.flatnonzero(selected_mask):
        a, b = canonical[idx]
        if _norm(a, b) not in edges:
            continue
        candidates = sorted(everyone - nbrs[a] - {a})
        if not candidates:
            continue
        z = candidates[int(rng.integers(len(candidates)))]
        edges.discard(_norm(a, b))
        nbrs[a].discard(b)
        nbrs[b].discard(a)
        edges.add(_norm(a, z))
        nbrs[a].add(z)
        nbrs[z].add(a)
    return edges


def rewire(graph: Graph, mu: float, rng: np.random.Generator, k: int,
           mode: str = "degree-preserving-swap") -> Graph:
    """Select each lattice edge with probability ``mu`` and rewire the selection.

    In ``degree-preserving-swap`` mode selected edges are shuffled, paired and
    swapped, so every vertex keeps its degree; a leftover odd edge stays put.
    ``endpoint-rewire`` is the classic small-world move that keeps one endpoint
    and moves the other to a random non-neighbor.
    """
    canonical = lattice_edges(graph.n, k)
    mask = rng.random(len(canonical)) < mu
    n_sel = int(mask.sum())
    if n_sel == 0:
        return Graph._trusted(graph.n, graph.edges)
    if mode == "degree-preserving-swap":
        selected = [e for e, m in zip(canonical, mask) if m]
        edges, _ = _swap_rewire(graph, selected, rng)
    elif mode == "endpoint-rewire":
        edges = _endpoint_rewire(graph, mask, canonical, rng)
    else:
        raise ValueError(f"unknown rewiring mode {mode!r}")
    return Graph._trusted(graph.n, frozenset(edges), rewired=n_sel)


def _distance_rows(adj: NDArray[np.bool_]) -> NDArray[np.int64]:
    """Level-synchronous BFS from every source at once; -1 marks unreachable.

    Accepts a stack ``(..., n, n)`` of adjacency matrices.
    """
    n = adj.shape[-1]
    frontier = np.broadcast_to(np.identity(n), adj.shape).copy()
    seen = frontier > 0
    dist = np.where(seen, 0, -1).astype(np.int64)
    level = 0
    adj_f = adj.astype(float)
    while True:
        nxt = (frontier @ adj_f > 0) & ~seen
        if not nxt.any():
            break
        level += 1
        dist[nxt] = level
        seen |= nxt
        frontier = nxt.astype(float)
    return dist


def shortest_path_lengths(graph: Graph) -> NDArray[np.int64]:
    return graph.distances


def is_connected(graph: Graph) -> bool:
    if graph.n <= 1:
        return True
    if "distances" in graph.__dict__:
        return bool((graph.distances[0] >= 0).all())
    nbrs = graph.adjacency
    seen = {0}
    stack = [0]
    while stack:
        for w in nbrs[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == graph.n


def path_length_total(graph: Graph) -> tuple[int, int]:
    """(sum of shortest-path lengths, number of unordered pairs)."""
    dist = shortest_path_lengths(graph)
    if (dist < 0).any():
        raise DisconnectedGraphError("average path length undefined: graph is disconnected")
    n = graph.n
    return int(np.triu(dist, 1).sum()), n * (n - 1) // 2


def average_path_length(graph: Graph) -> float:
    """Mean shortest-path length over all unordered vertex pairs."""
    total, pairs = path_length_total(graph)
    if pairs == 0:
        raise ValueError("average path length needs at least two vertices")
    return float(Fraction(total, pairs))


def generate_connected(n: int, k: int, mu: float, rng: np.random.Generator,
                       max_attempts: int = 100, mode: str = "degree-preserving-swap") -> Graph:
    """Draw rewired lattices until one is connected.

    ``k == 0`` yields the empty graph, which is accepted as is (the network
    ablation has no edges to traverse).
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if k == 0:
        return empty_graph(n)
    base = ring_lattice(n, k)
    for attempt in range(1, max_attempts + 1):
        g = rewire(base, mu, rng, k, mode)
        if is_connected(g):
            if attempt > 1:
                log.debug("connected graph after %d attempts", attempt)
            out = Graph._trusted(g.n, g.edges, rewired=g.rewired, attempts=attempt)
            for cached in ("distances", "adjacency"):
                if cached in g.__dict__:
                    out.__dict__[cached] = g.__dict__[cached]
            return out
    raise GraphGenerationError(max_attempts, n, k, mu)


@dataclass(frozen=True)
class CurveRow:
    mu: float
    mean_apl: float
    realizations: int
    regenerations: int


def path_length_curve(n: int, k: int, mu_grid: Iterable[float], realizations: int, seed: int,
                      mode: str = "degree-preserving-swap", max_attempts: int = 100) -> list[CurveRow]:
    """Mean APL over ``realizations`` connected graphs for every ``mu`` in the grid.

    Realization ``r`` at grid index ``i`` draws from a stream seeded by
    ``(seed, i, r)``, so rows do not depend on evaluation order.
    """
    if realizations < 1:
        raise ValueError("realizations must be >= 1")
    rows = []
    pairs = n * (n - 1) // 2
    for i, mu in enumerate(mu_grid):
        adj = np.empty((realizations, n, n))
        regen = 0
        for r in range(realizations):
            rng = np.random.default_rng(np.random.SeedSequence([seed, i, r]))
            g = generate_connected(n, k, mu, rng, max_attempts, mode)
            regen += g.attempts - 1
            adj[r] = g.adjacency_matrix()
        totals = np.triu(_distance_rows(adj > 0), 1).sum(axis=(1, 2))
        mean = float(Fraction(int(totals.sum()), pairs * realizations))
        rows.append(CurveRow(float(mu), mean, realizations, regen))
        if regen:
            log.info("k=%d mu=%.3f: %d regenerations over %d realizations", k, mu, regen, realizations)
    return rows


def curve_to_csv(rows: Iterable[CurveRow], k: int | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["mu", "mean_apl", "realizations"]
    if k is not None:
        header = ["k"] + header
    w.writerow(header)
    for row in rows:
        vals = [repr(row.mu), repr(row.mean_apl), row.realizations]
        w.writerow(([k] if k is not None else []) + vals)
    return buf.getvalue()
