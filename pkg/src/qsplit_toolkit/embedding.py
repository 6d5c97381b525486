"""Chimera target graphs and a chain-growth minor-embedding heuristic.

Node numbering for Chimera(m, n, t)::

    node = ((row * n + col) * 2 + shore) * t + k

Shore 0 nodes couple to the same ``k`` in the cell below, shore 1 nodes
to the same ``k`` in the cell to the right; inside a cell every shore-0
node couples to every shore-1 node.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import GraphParseError, ParameterError
from .qubo import SEED_MASK, QuboMatrix

__all__ = [
    "HardwareGraph",
    "ProblemGraph",
    "Embedding",
    "EmbeddingStats",
    "chimera_graph",
    "clique_graph",
    "find_embedding",
    "best_embedding",
    "verify_embedding",
    "embedding_stats",
    "parse_graph_file",
    "serialize_graph_file",
    "embedding_to_json",
]

Embedding = dict[int, tuple[int, ...]]


def _normalize_edges(num_nodes: int, edges: Iterable[tuple[int, int]]) -> frozenset:
    out = set()
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            raise ParameterError(f"self-loop at node {u}")
        if not (0 <= u < num_nodes and 0 <= v < num_nodes):
            raise ParameterError(f"edge ({u}, {v}) references a missing node")
        out.add((min(u, v), max(u, v)))
    return frozenset(out)


@dataclass(frozen=True)
class _Graph:
    num_nodes: int
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", _normalize_edges(self.num_nodes, self.edges))

    @cached_property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_nodes)]
        for u, v in sorted(self.edges):
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])


@dataclass(frozen=True)
class HardwareGraph(_Graph):
    topology: tuple = field(default=("custom",))

    @cached_property
    def csr_structure(self) -> tuple[np.ndarray, np.ndarray]:
        indptr = np.zeros(self.num_nodes + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in self.adjacency])
        indices = np.fromiter((v for a in self.adjacency for v in a), dtype=np.int64,
                              count=int(indptr[-1]))
        return indptr, indices


@dataclass(frozen=True)
class ProblemGraph(_Graph):

    @classmethod
    def from_qubo(cls, q: QuboMatrix) -> "ProblemGraph":
        return cls(q.n, frozenset((i, j) for i, j in q.entries if i != j))


def chimera_graph(m: int, n: int, t: int) -> HardwareGraph:
    if min(m, n, t) < 1:
        raise ParameterError("Chimera dimensions must all be >= 1")

    def node(row, col, shore, k):
        return ((row * n + col) * 2 + shore) * t + k

    edges = []
    for row in range(m):
        for col in range(n):
            for a in range(t):
                for b in range(t):
                    edges.append((node(row, col, 0, a), node(row, col, 1, b)))
                if row + 1 < m:
                    edges.append((node(row, col, 0, a), node(row + 1, col, 0, a)))
                if col + 1 < n:
                    edges.append((node(row, col, 1, a), node(row, col + 1, 1, a)))
    return HardwareGraph(2 * t * m * n, frozenset(edges), ("chimera", m, n, t))


def clique_graph(n: int) -> ProblemGraph:
    return ProblemGraph(n, frozenset((u, v) for u in range(n) for v in range(u + 1, n)))


def verify_embedding(p: _Graph, h: _Graph, chains: Mapping[int, Iterable[int]]) -> list[str]:
    """Every way ``chains`` fails to be a minor embedding of ``p`` in ``h``.

    An empty list means the embedding is valid.
    """
    violations = []
    sets = {}
    for v in range(p.num_nodes):
        chain = set(chains.get(v, ()))
        if not chain:
            violations.append(f"node {v}: empty chain")
        bad = [q for q in chain if not 0 <= q < h.num_nodes]
        if bad:
            violations.append(f"node {v}: hardware nodes {sorted(bad)} do not exist")
            chain -= set(bad)
        sets[v] = chain
    extra = sorted(set(chains) - set(range(p.num_nodes)))
    if extra:
        violations.append(f"chains given for unknown problem nodes {extra}")

    owner: dict[int, int] = {}
    for v in range(p.num_nodes):
        for q in sorted(sets[v]):
            if q in owner:
                violations.append(f"hardware node {q} shared by chains {owner[q]} and {v}")
            else:
                owner[q] = v

    adj = h.adjacency
    for v in range(p.num_nodes):
        chain = sets[v]
        if not chain:
            continue
        start = min(chain)
        seen, stack = {start}, [start]
        while stack:
            a = stack.pop()
            for b in adj[a]:
                if b in chain and b not in seen:
                    seen.add(b)
                    stack.append(b)
        if seen != chain:
            violations.append(f"node {v}: chain is disconnected ({len(seen)} of {len(chain)} reachable)")

    for u, v in sorted(p.edges):
        cu, cv = sets[u], sets[v]
        if not any(b in cv for a in cu for b in adj[a]):
            violations.append(f"edge ({u}, {v}): no hardware coupler between chains")
    return violations


class _ChainGrower:
    """Negotiated-congestion chain placement on a fixed target.

    Entering a hardware node costs ``1 + history + penalty * usage``.
    ``history`` accumulates on nodes (and, at half rate, their neighbours)
    that stayed overused after a pass, so contested regions get more
    expensive over time even for chains that caused the congestion.
    """

    def __init__(self, p: ProblemGraph, h: HardwareGraph, rng: np.random.Generator):
        self.p, self.h, self.rng = p, h, rng
        self.indptr, self.indices = h.csr_structure
        n = h.num_nodes
        self.adj = csr_matrix((np.ones(len(self.indices)), self.indices, self.indptr), shape=(n, n))
        self.usage = np.zeros(n, dtype=np.int64)
        self.history = np.zeros(n)
        self.chains: dict[int, list[int]] = {}
        self.penalty = 1.0

    def weights(self) -> np.ndarray:
        return 1.0 + self.history + self.penalty * self.usage

    def rip_up(self, v: int):
        for q in self.chains.pop(v, ()):
            self.usage[q] -= 1

    def place(self, v: int) -> bool:
        w = self.weights()
        placed = [u for u in self.p.adjacency[v] if u in self.chains]
        if not placed:
            free = np.flatnonzero(w == w.min())
            self._commit(v, [int(self.rng.choice(free))])
            return True
        graph = csr_matrix((w[self.indices], self.indices, self.indptr),
                           shape=(self.h.num_nodes, self.h.num_nodes))
        # Root cost counts its own weight once per neighbour chain reached.
        total = np.zeros(self.h.num_nodes)
        preds = []
        for u in placed:
            src = self.chains[u]
            dist, pred, _ = dijkstra(graph, directed=True, indices=src, min_only=True,
                                     return_predecessors=True)
            dist[src] = w[src]
            total += dist
            preds.append((set(src), pred))
        best = total.min()
        if not np.isfinite(best):
            return False
        root = int(self.rng.choice(np.flatnonzero(total == best)))
        chain = {root}
        for src, pred in preds:
            q = root
            while q not in src:
                chain.add(q)
                q = int(pred[q])
        self._commit(v, sorted(chain))
        return True

    def _commit(self, v: int, chain: list[int]):
        self.chains[v] = chain
        self.usage[chain] += 1

    def overlapping(self) -> bool:
        return bool((self.usage > 1).any())

    def negotiate(self, growth: float = 1.1):
        over = (self.usage > 1).astype(float)
        self.history += over + 0.5 * (self.adj @ over > 0)
        self.penalty = min(self.penalty * growth, 1e6)


def find_embedding(p: ProblemGraph, h: HardwareGraph, seed: int = 0, timeout: float = 60.0,
                   max_passes: int = 64) -> Embedding | None:
    """Chain-growth heuristic; ``None`` when the budget runs out.

    Nodes are first placed in descending degree order with overlaps
    allowed. Each later pass rips up and re-places every chain in a fresh
    random order under rising congestion costs, until no hardware node is
    shared.
    """
    if p.num_nodes == 0:
        return {}
    if p.num_nodes > h.num_nodes:
        return None
    start = time.perf_counter()
    rng = np.random.default_rng(int(seed) & SEED_MASK)
    order = sorted(range(p.num_nodes), key=lambda v: (-p.degree(v), v))
    grower = _ChainGrower(p, h, rng)
    for v in order:
        if not grower.place(v):
            return None
    for _ in range(max_passes + 1):
        if not grower.overlapping():
            chains = {v: tuple(grower.chains[v]) for v in range(p.num_nodes)}
            if not verify_embedding(p, h, chains):
                return chains
        if time.perf_counter() - start > timeout:
            return None
        grower.negotiate()
        for v in rng.permutation(order):
            grower.rip_up(int(v))
            if not grower.place(int(v)):
                return None
    return None


def best_embedding(p: ProblemGraph, h: HardwareGraph, seeds: Iterable[int],
                   timeout: float = 60.0, max_passes: int = 64) -> Embedding | None:
    """Run one search per seed; keep the smallest total chain size, lowest seed on ties."""
    best, best_key = None, None
    for seed in seeds:
        chains = find_embedding(p, h, seed=seed, timeout=timeout, max_passes=max_passes)
        if chains is None:
            continue
        key = (sum(len(c) for c in chains.values()), seed)
        if best_key is None or key < best_key:
            best, best_key = chains, key
    return best


@dataclass(frozen=True)
class EmbeddingStats:
    total_nodes: int
    max_chain: int
    elapsed: float


def embedding_stats(chains: Mapping[int, Iterable[int]], elapsed: float = 0.0) -> EmbeddingStats:
    sizes = [len(tuple(c)) for c in chains.values()]
    return EmbeddingStats(sum(sizes), max(sizes, default=0), float(elapsed))


def parse_graph_file(text: str, kind: type = ProblemGraph):
    """``g <num_nodes>`` header then ``<u> <v>`` lines with ``u < v``."""
    num_nodes = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if num_nodes is None:
            if len(parts) != 2 or parts[0] != "g" or not parts[1].isdigit():
                raise GraphParseError("expected header 'g <num_nodes>'", lineno)
            num_nodes = int(parts[1])
            continue
        if len(parts) != 2 or not all(x.isdigit() for x in parts):
            raise GraphParseError("expected '<u> <v>'", lineno)
        u, v = int(parts[0]), int(parts[1])
        if not u < v:
            raise GraphParseError(f"edge ({u}, {v}) must satisfy u < v", lineno)
        if v >= num_nodes:
            raise GraphParseError(f"node {v} out of range for {num_nodes} nodes", lineno)
        edges.append((u, v))
    if num_nodes is None:
        raise GraphParseError("missing header 'g <num_nodes>'")
    return kind(num_nodes, frozenset(edges))


def serialize_graph_file(g: _Graph) -> str:
    lines = [f"g {g.num_nodes}"] + [f"{u} {v}" for u, v in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def embedding_to_json(chains: Mapping[int, Iterable[int]]) -> str:
    doc = {str(v): sorted(int(q) for q in chains[v]) for v in sorted(chains)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
