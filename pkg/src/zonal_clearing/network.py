"""Zonal transmission network: adjacency, DFS reachability, cuts and cycles.

Zones are addressed internally by their 0-based position in
``NetworkTopology.codes``. The adjacency matrix is always derived from the
edge list, so it is symmetric by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .errors import InputError, ParseError, TopologyError


class Zone(NamedTuple):
    index: int
    code: str


class EdgeCut(NamedTuple):
    edge: tuple[int, int]
    side_membership: np.ndarray


def _norm(edge) -> tuple[int, int]:
    i, j = edge
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class NetworkTopology:
    codes: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        codes = tuple(self.codes)
        for c in codes:
            if not c or c != c.upper() or not c.strip() == c:
                raise InputError(f"zone code {c!r} must be non-empty uppercase")
        if len(set(codes)) != len(codes):
            raise InputError("duplicate zone code")
        n = len(codes)
        edges = []
        seen = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if not (0 <= i < n and 0 <= j < n):
                raise InputError(f"edge {e} has an endpoint outside 0..{n - 1}")
            if i == j:
                raise InputError(f"self-loop on zone {codes[i]}")
            key = _norm((i, j))
            if key in seen:
                raise InputError(f"duplicate edge {codes[key[0]]}-{codes[key[1]]}")
            seen.add(key)
            edges.append(key)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(self, "_index", {c: k for k, c in enumerate(codes)})

    @classmethod
    def from_codes(cls, codes: Iterable[str], edges: Iterable[tuple[str, str]]):
        codes = tuple(codes)
        lookup = {c: k for k, c in enumerate(codes)}
        pairs = []
        for a, b in edges:
            if a not in lookup or b not in lookup:
                raise InputError(f"edge {a}-{b} references an unknown zone")
            pairs.append((lookup[a], lookup[b]))
        return cls(codes, tuple(pairs))

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def zones(self) -> list[Zone]:
        return [Zone(k, c) for k, c in enumerate(self.codes)]

    @cached_property
    def adjacency(self) -> np.ndarray:
        G = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges:
            G[i, j] = G[j, i] = 1
        G.setflags(write=False)
        return G

    def index(self, code: str) -> int:
        try:
            return self._index[code]
        except KeyError:
            raise InputError(f"unknown zone {code!r}") from None

    @cached_property
    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        return _norm((i, j)) in self.edge_set

    def without_edges(self, removed) -> "NetworkTopology":
        drop = {_norm(e) for e in removed}
        return NetworkTopology(self.codes, tuple(e for e in self.edges if e not in drop))

    def label(self, edge) -> str:
        i, j = edge
        return f"{self.codes[i]}->{self.codes[j]}"


def _check_zone(topology: NetworkTopology, z) -> int:
    z = int(z)
    if not 0 <= z < topology.n:
        raise InputError(f"zone index {z} outside 0..{topology.n - 1}")
    return z


def _open_adjacency(topology: NetworkTopology, removed_edges) -> np.ndarray:
    G = topology.adjacency.copy()
    for e in removed_edges or ():
        i, j = _norm(e)
        if (i, j) not in topology.edge_set:
            raise InputError(f"cannot remove {i}-{j}: not an edge")
        G[i, j] = G[j, i] = 0
    return G


def reachable_zones(topology: NetworkTopology, start: int, removed_edges=()) -> np.ndarray:
    """Boolean mask of zones reached by DFS from ``start`` with ``removed_edges`` opened."""
    start = _check_zone(topology, start)
    G = _open_adjacency(topology, removed_edges)
    return kernels.dfs_reach(G, start)


def connected_components(topology: NetworkTopology, removed_edges=()) -> list[tuple[int, ...]]:
    """Maximal connected zone sets, ordered by their smallest index."""
    G = _open_adjacency(topology, removed_edges)
    visited = np.zeros(topology.n, dtype=bool)
    components = []
    for z in range(topology.n):
        if visited[z]:
            continue
        part = kernels.dfs_reach(G, z)
        visited |= part
        components.append(tuple(np.flatnonzero(part).tolist()))
    return components


def detect_cycles(topology: NetworkTopology) -> list[tuple[int, int]]:
    """Edges that close a cycle when edges are added in order (union-find).

    Removing all returned edges leaves a spanning forest; the list is empty
    iff the graph is acyclic.
    """
    parent = list(range(topology.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    closing = []
    for i, j in topology.edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            closing.append((i, j))
        else:
            parent[ri] = rj
    return closing


def _require_tree(topology: NetworkTopology):
    cyc = detect_cycles(topology)
    if cyc:
        names = ", ".join(f"{topology.codes[i]}-{topology.codes[j]}" for i, j in cyc)
        raise TopologyError(f"unsupported cycle (closing edges: {names})")


def edge_cut(topology: NetworkTopology, edge) -> EdgeCut:
    """Zones on the ``i`` side of directed edge ``i -> j`` once that edge is opened."""
    i, j = (_check_zone(topology, v) for v in edge)
    if not topology.has_edge(i, j):
        raise InputError(f"{topology.label((i, j))} is not an edge")
    _require_tree(topology)
    return EdgeCut((i, j), reachable_zones(topology, i, [(i, j)]))


def cut_matrix(topology: NetworkTopology, directed_edges) -> np.ndarray:
    """Stack the cut memberships of ``directed_edges`` as a 0/1 float matrix."""
    _require_tree(topology)
    out = np.zeros((len(directed_edges), topology.n))
    base = topology.adjacency.copy()
    for r, (i, j) in enumerate(directed_edges):
        if not topology.has_edge(i, j):
            raise InputError(f"{topology.label((i, j))} is not an edge")
        base[i, j] = base[j, i] = 0
        out[r] = kernels.dfs_reach(base, i)
        base[i, j] = base[j, i] = 1
    return out


def parse_topology(stream, source=None) -> NetworkTopology:
    """Read the ``zones:`` / ``edges:`` text format."""
    codes, edges = [], []
    section = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = line.lower()
        if head in ("zones:", "edges:"):
            section = head[:-1]
            continue
        if section == "zones":
            if len(line.split()) != 1:
                raise ParseError(f"expected a single zone code, got {line!r}", lineno, source)
            codes.append(line)
        elif section == "edges":
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'CODE_A CODE_B', got {line!r}", lineno, source)
            edges.append((lineno, parts[0], parts[1]))
        else:
            raise ParseError("content before 'zones:' header", lineno, source)
    try:
        topo = NetworkTopology(tuple(codes), ())
    except InputError as exc:
        raise ParseError(str(exc), None, source) from None
    pairs = []
    for lineno, a, b in edges:
        try:
            pairs.append((topo.index(a), topo.index(b)))
        except InputError as exc:
            raise ParseError(str(exc), lineno, source) from None
    try:
        return NetworkTopology(topo.codes, tuple(pairs))
    except InputError as exc:
        raise ParseError(str(exc), None, source) from None


def format_topology(topology: NetworkTopology) -> str:
    lines = ["zones:", *topology.codes, "edges:"]
    lines += [f"{topology.codes[i]} {topology.codes[j]}" for i, j in topology.edges]
    return "\n".join(lines) + "\n"
