"""Adversary strategies and the clique-chain stall constructions.

An adversary is a callable taking the engine's omniscient per-round view and
returning the set of edges (at most one here) missing that round.  The engine
validates every answer; an illegal choice aborts the scenario.

The two builders assemble the graphs used for the stall experiments: a chain
of p cliques whose two ends attach to the hostile node, and the scattered
variant where the hostile node's neighbours carry the agents and the clique
chain hangs off the first two neighbours.  Their paired adversaries block the
two attachment edges whenever two or more agents are near, and after a death
they cut the chain connector in front of any survivor heading back, confining
it to the middle cliques.
"""
from __future__ import annotations

from random import Random
from typing import Optional

from .tvg import Footprint, bridges, edge_key, is_connected, make_footprint, validate_footprint


class NullAdversary:
    """Never deletes anything."""

    def __call__(self, view):
        return frozenset()


class RandomLegalAdversary:
    """Deletes a uniformly chosen non-bridge edge most rounds; always legal."""

    def __init__(self, footprint: Footprint, seed: int, delete_prob: float = 0.75):
        self.candidates = tuple(sorted(e for e in footprint.edges if e not in bridges(footprint)))
        self.rng = Random(seed)
        self.delete_prob = delete_prob

    def __call__(self, view):
        if not self.candidates or self.rng.random() >= self.delete_prob:
            return frozenset()
        return frozenset({self.rng.choice(self.candidates)})


class GreedyStaller:
    """Deletes the edge most agents intend to traverse, when legal.

    Reads the declared move intents from the omniscient view, ranks edges by
    (intent count desc, edge index asc), and removes the first whose deletion
    keeps the snapshot connected.  No intents, or no legal candidate: deletes
    nothing.
    """

    def __init__(self, footprint: Footprint):
        self._bridges = bridges(footprint)
        self._order = {e: i for i, e in enumerate(footprint.edges)}

    def __call__(self, view):
        counts: dict = {}
        for aid in sorted(view.intents):
            e = view.intents[aid]
            if e is not None:
                counts[e] = counts.get(e, 0) + 1
        ranked = sorted(counts, key=lambda e: (-counts[e], self._order[e]))
        for e in ranked:
            if e not in self._bridges:
                return frozenset({e})
        return frozenset()


class FreezeOnFirstWait:
    """Removes, permanently, the first removable edge the waiting walker wants.

    Used for the coverage experiments: once agent ``watch`` is about to cross
    a non-bridge edge, that edge goes missing and stays missing, so the walker
    waits forever and its deviating partner must cover the rest alone.
    """

    def __init__(self, footprint: Footprint, watch: int = 1, arm_round: int = 0):
        self._bridges = bridges(footprint)
        self.watch = watch
        self.arm_round = arm_round  # ignore intents before this round
        self.frozen: Optional[tuple] = None
        self.freeze_round: Optional[int] = None

    def __call__(self, view):
        if self.frozen is not None:
            return frozenset({self.frozen})
        if view.round < self.arm_round:
            return frozenset()
        e = view.intents.get(self.watch)
        if e is not None and e not in self._bridges:
            self.frozen = e
            self.freeze_round = view.round
            return frozenset({e})
        return frozenset()


# ---------------------------------------------------------------------------
# Clique-chain constructions
# ---------------------------------------------------------------------------

def _chain_cliques(first_node: int, p: int, size: int):
    """p cliques of the given size, chained; returns (nodes, edges, landmarks)."""
    cliques = []
    base = first_node
    for _ in range(p):
        cliques.append(list(range(base, base + size)))
        base += size
    edges = []
    for cl in cliques:
        for i in range(len(cl)):
            for j in range(i + 1, len(cl)):
                edges.append((cl[i], cl[j]))
    # landmarks: v1 in the first clique, vp in the last, connector endpoints
    v1 = cliques[0][0]
    w1_first = cliques[0][1]
    vp = cliques[-1][0]
    w1_last = cliques[-1][1]
    connectors = []
    # first connector leaves the first clique
    prev_exit = w1_first
    for i in range(1, p):
        cl = cliques[i]
        if i < p - 1:
            w_in, w_out = cl[0], cl[1]
        else:
            w_in, w_out = w1_last, None
        connectors.append(edge_key(prev_exit, w_in))
        edges.append((prev_exit, w_in))
        prev_exit = w_out
    return cliques, edges, {
        "v1": v1,
        "vp": vp,
        "w_entry_second": cliques[1][0],  # re-entry point toward the first clique
        "w_exit_second_last": cliques[-2][1] if p > 2 else cliques[-2][0],
        "connectors": connectors,
    }


def build_thm1_graph(p: int):
    """Chain of p cliques of size p with a degree-2 hostile node at both ends.

    Returns (footprint, meta).  n = p**2 + 1.
    """
    if p < 3:
        raise ValueError("the construction needs at least three cliques (p >= 3)")
    bh = 0
    cliques, edges, marks = _chain_cliques(1, p, p)
    e = edge_key(bh, marks["v1"])
    e_prime = edge_key(bh, marks["vp"])
    edges += [e, e_prime]
    n = p * p + 1
    f = make_footprint(n, edges, black_hole=bh)
    validate_footprint(f)
    meta = {
        "p": p,
        "e": e,
        "e_prime": e_prime,
        "cliques": [frozenset(cl) for cl in cliques],
        "first_region": frozenset(cliques[0]),
        "last_region": frozenset(cliques[-1]),
        "w_entry": marks["w_entry_second"],
        "w_exit": marks["w_exit_second_last"],
        "e1": marks["connectors"][0],
        "e_last": marks["connectors"][-1],
        "root": marks["v1"],
    }
    return f, meta


def build_thm2_graph(p: int):
    """Scattered stall construction: n = p**4 + 1 with deg(black hole) = p**2.

    The named parts (hostile node, its p**2 neighbours, p chained cliques)
    account for 2*p**2 + 1 nodes; the cliques are padded to size p**3 - p each
    so the total matches p**4 + 1.  Returns (footprint, meta, placements);
    placements put two agents on the first neighbour and one on each other
    neighbour (p**2 + 1 agents overall).  ``meta['audit']`` records the count
    reconciliation.
    """
    if p < 3:
        raise ValueError("the construction needs at least three cliques (p >= 3)")
    bh = 0
    nsq = p * p
    u = list(range(1, nsq + 1))  # neighbours of the hostile node
    clique_size = p ** 3 - p
    cliques, edges, marks = _chain_cliques(nsq + 1, p, clique_size)
    edges += [(bh, ui) for ui in u]
    e = edge_key(u[0], marks["v1"])
    e_prime = edge_key(u[1], marks["vp"])
    edges += [e, e_prime]
    n = 1 + nsq + p * clique_size
    f = make_footprint(n, edges, black_hole=bh)
    validate_footprint(f)
    assert n == p ** 4 + 1, "padding failed to reconcile the node count"
    placements = {1: u[0], 2: u[0]}
    for i, ui in enumerate(u[1:], start=3):
        placements[i] = ui
    meta = {
        "p": p,
        "u": u,
        "e_hat": edge_key(bh, u[0]),
        "e_hat_prime": edge_key(bh, u[1]),
        "first_region": frozenset(cliques[0]) | {u[0]},
        "last_region": frozenset(cliques[-1]) | {u[1]},
        "w_entry": marks["w_entry_second"],
        "w_exit": marks["w_exit_second_last"],
        "e1": marks["connectors"][0],
        "e_last": marks["connectors"][-1],
        "audit": {
            "n": n,
            "expected": p ** 4 + 1,
            "named_nodes": 2 * nsq + 1,
            "padded_clique_size": clique_size,
        },
    }
    return f, meta, placements


class _ChainStaller:
    """Shared blocking strategy for both clique-chain constructions.

    Priority order: block the first attachment edge while two or more agents
    are in the first region; block the second while two or more are in the
    last region; after a death through an attachment edge, cut the adjacent
    chain connector whenever a survivor stands on its far endpoint.
    """

    def __init__(self, first_edge, last_edge, first_region, last_region, w_entry, w_exit, e1, e_last):
        self.first_edge = first_edge
        self.last_edge = last_edge
        self.first_region = first_region
        self.last_region = last_region
        self.w_entry = w_entry
        self.w_exit = w_exit
        self.e1 = e1
        self.e_last = e_last

    def __call__(self, view):
        positions = [view.positions[a] for a in sorted(view.alive)]
        if sum(1 for v in positions if v in self.first_region) >= 2:
            return frozenset({self.first_edge})
        if sum(1 for v in positions if v in self.last_region) >= 2:
            return frozenset({self.last_edge})
        death_edges = {d.edge for d in view.deaths}
        if self.first_edge in death_edges and any(v == self.w_entry for v in positions):
            return frozenset({self.e1})
        if self.last_edge in death_edges and any(v == self.w_exit for v in positions):
            return frozenset({self.e_last})
        return frozenset()


def thm1_adversary(meta) -> _ChainStaller:
    return _ChainStaller(
        first_edge=meta["e"],
        last_edge=meta["e_prime"],
        first_region=meta["first_region"],
        last_region=meta["last_region"],
        w_entry=meta["w_entry"],
        w_exit=meta["w_exit"],
        e1=meta["e1"],
        e_last=meta["e_last"],
    )


def thm2_adversary(meta) -> _ChainStaller:
    return _ChainStaller(
        first_edge=meta["e_hat"],
        last_edge=meta["e_hat_prime"],
        first_region=meta["first_region"],
        last_region=meta["last_region"],
        w_entry=meta["w_entry"],
        w_exit=meta["w_exit"],
        e1=meta["e1"],
        e_last=meta["e_last"],
    )
