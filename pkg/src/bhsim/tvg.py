"""Time-varying graph model.

A simulation runs on a static *footprint* (port-labelled undirected graph,
optionally with one black-hole node) whose per-round edge set is the footprint
minus a small set of missing edges chosen by an adversary.  Every snapshot must
stay connected and may miss at most ``ELL`` edges.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Optional

ELL = 1  # per-round edge-removal budget; nothing in this package handles more


class GraphError(ValueError):
    """A footprint or port query violates a structural invariant."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class IllegalAdversary(RuntimeError):
    """The adversary proposed an illegal snapshot.  Scenarios abort on this."""


def edge_key(u: int, v: int) -> tuple[int, int]:
    """Canonical (min, max) form of an undirected edge."""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Footprint:
    """Static underlying graph with local port labels.

    ``ports[v][p]`` is the neighbour reached from ``v`` through port ``p``;
    the list order *is* the port labelling.  ``black_hole`` is None for
    pure-exploration graphs.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    ports: tuple[tuple[int, ...], ...]
    black_hole: Optional[int] = None

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.ports[v]

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self._edge_set

    @cached_property
    def _edge_set(self) -> frozenset:
        return frozenset(self.edges)

    @cached_property
    def _edge_order(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    def edge_index(self, e: tuple[int, int]) -> int:
        return self._edge_order[edge_key(*e)]


def canonical_ports(n: int, edges: Iterable[tuple[int, int]]) -> tuple[tuple[int, ...], ...]:
    """Port labelling used by all generators: at each node, incident edges
    sorted by far-endpoint id get labels 0,1,2,...  Keeps traces reproducible.
    """
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    return tuple(tuple(sorted(nbrs)) for nbrs in adj)


def make_footprint(
    n: int,
    edges: Iterable[tuple[int, int]],
    black_hole: Optional[int] = None,
    ports: Optional[dict[int, dict[int, int]]] = None,
) -> Footprint:
    """Build a footprint.  ``ports`` overrides the canonical labelling with an
    explicit per-node {port: neighbour} map (used by validation tests)."""
    norm = tuple(sorted(edge_key(u, v) for u, v in edges))
    if ports is None:
        plists = canonical_ports(n, norm)
    else:
        plists = []
        for v in range(n):
            pmap = ports.get(v, {})
            plists.append(tuple(pmap[p] for p in sorted(pmap)))
        plists = tuple(plists)
    return Footprint(node_count=n, edges=norm, ports=plists, black_hole=black_hole)


def is_connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    """Independent BFS connectivity check (used both by validation and tests)."""
    if n == 0:
        return False
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return len(seen) == n


def validate_footprint(f: Footprint) -> None:
    """Raise GraphError naming the first violated invariant; return None if ok."""
    n = f.node_count
    seen = set()
    for u, v in f.edges:
        if u == v:
            raise GraphError("self-loop", f"edge ({u},{v})")
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError("bad-node-id", f"edge ({u},{v}) outside 0..{n - 1}")
        k = edge_key(u, v)
        if k in seen:
            raise GraphError("duplicate-edge", f"edge {k} repeated")
        seen.add(k)
    if len(f.ports) != n:
        raise GraphError("bad-port-bijection", "port table size != node count")
    for v in range(n):
        nbrs = f.ports[v]
        incident = sorted(u if w == v else w for (u, w) in seen if v in (u, w))
        if sorted(nbrs) != incident:
            raise GraphError(
                "bad-port-bijection",
                f"node {v}: ports map to {sorted(nbrs)}, incident edges give {incident}",
            )
    if not is_connected(n, f.edges):
        raise GraphError("disconnected-footprint", "footprint is not connected")
    if f.black_hole is not None and not (0 <= f.black_hole < n):
        raise GraphError("invalid-black-hole", f"node {f.black_hole} not in graph")


def neighbor_via_port(f: Footprint, v: int, p: int) -> int:
    """Node reached from v through port p.  Total and deterministic on valid ports."""
    if not (0 <= p < f.degree(v)):
        raise GraphError("port-out-of-range", f"port {p} at node {v} (deg {f.degree(v)})")
    return f.ports[v][p]


def entry_port(f: Footprint, v: int, u: int) -> int:
    """Label of edge (v,u) at u: the port an agent arriving at u from v came in through."""
    if not f.has_edge(v, u):
        raise GraphError("not-an-edge", f"({v},{u}) is not a footprint edge")
    return f.ports[u].index(v)


def bridges(f: Footprint) -> frozenset:
    """Edges whose removal disconnects the footprint (never legal to delete)."""
    out = set()
    for e in f.edges:
        rest = [x for x in f.edges if x != e]
        if not is_connected(f.node_count, rest):
            out.add(e)
    return frozenset(out)


def removable_edges(f: Footprint) -> tuple[tuple[int, int], ...]:
    b = bridges(f)
    return tuple(e for e in f.edges if e not in b)


@dataclass(frozen=True)
class Snapshot:
    """Per-round edge availability: the footprint minus ``missing``."""

    round: int
    missing: frozenset
    ell: int = ELL


def validate_snapshot(f: Footprint, missing: Iterable[tuple[int, int]]) -> frozenset:
    miss = frozenset(edge_key(u, v) for u, v in missing)
    if len(miss) > ELL:
        raise IllegalAdversary(f"removed {len(miss)} edges, budget is {ELL}")
    for e in miss:
        if e not in f._edge_set:
            raise IllegalAdversary(f"{e} is not a footprint edge")
    if miss and not is_connected(f.node_count, [e for e in f.edges if e not in miss]):
        raise IllegalAdversary(f"removing {sorted(miss)} disconnects the snapshot")
    return miss


def snapshot_for_round(f: Footprint, adversary: Callable, r: int, view) -> Snapshot:
    """Ask the adversary for round r's missing edges and vet the answer.

    Illegal output is a hard scenario error, never silently corrected.
    """
    chosen = adversary(view)
    miss = validate_snapshot(f, chosen if chosen is not None else ())
    return Snapshot(round=r, missing=miss)


# ---------------------------------------------------------------------------
# Graph file format: header "n m bh" (bh = -1 when absent), then m lines "u v".
# Ports are always canonical, so they are not serialized.
# ---------------------------------------------------------------------------

def write_graph_file(f: Footprint, path: str) -> None:
    bh = -1 if f.black_hole is None else f.black_hole
    lines = [f"{f.node_count} {f.m} {bh}"]
    lines += [f"{u} {v}" for u, v in f.edges]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph_file(path: str) -> Footprint:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 3:
        raise GraphError("bad-graph-file", f"{path}: missing header")
    n, m, bh = int(tokens[0]), int(tokens[1]), int(tokens[2])
    body = tokens[3:]
    if len(body) != 2 * m:
        raise GraphError("bad-graph-file", f"{path}: expected {m} edges")
    edges = [(int(body[2 * i]), int(body[2 * i + 1])) for i in range(m)]
    f = make_footprint(n, edges, black_hole=None if bh < 0 else bh)
    validate_footprint(f)
    return f
