"""Exploration protocols built directly on the DFS walker.

``SingleWalkerProtocol`` drives one walker (used for the static 4m-round
exploration bound).  ``TwoWalkerProtocol`` runs the split strategy: walker 1
never deviates from its walk and waits out missing edges, walker 2 skips a
missing edge in explore, and starts a new walk when a missing edge blocks a
return move or its root scan is exhausted.  Walkers here see incident-edge
presence at the start of each round, so skips cost no extra rounds.

No black hole is involved; these protocols never declare.
"""
from __future__ import annotations

from typing import Optional

from . import dfs
from .engine import Action, ProtocolViolation, World
from .tvg import edge_key


class Walker:
    """One DFS walker bound to a whiteboard namespace and a missing-edge discipline."""

    def __init__(self, aid: int, ns: str, discipline: str, labelled: bool):
        self.aid = aid
        self.ns = ns
        self.discipline = discipline  # 'wait' | 'deviate'
        self.labelled = labelled
        self.dfs = dfs.DfsState()
        self.pending: Optional[dfs.Step] = None
        self.in_flight = False
        self._synced_round = -1

    def setup(self, world: World) -> None:
        start = world.agents[self.aid].position
        self.dfs = dfs.DfsState(root=start)

    # -- whiteboard ----------------------------------------------------------
    def entry_at(self, world: World, node: int) -> Optional[int]:
        rec = world.wb_read(node).get(self.ns)
        if rec is None:
            return None
        if self.labelled and rec.get("label") != self.dfs.dfs_label:
            return None  # stale record from an older walk
        return rec["parent"]

    def write_mark(self, world: World, node: int, parent: int) -> None:
        rec = {"parent": parent}
        if self.labelled:
            rec["label"] = self.dfs.dfs_label
        world.wb_write(node, self.ns, rec)

    # -- per-round machinery ---------------------------------------------------
    def sync(self, world: World) -> None:
        """Fold last round's move result into the walker state (idempotent)."""
        if self._synced_round == world.round:
            return
        self._synced_round = world.round
        if self.in_flight:
            rec = world.agents[self.aid]
            if rec.last_move != "succeeded":
                raise ProtocolViolation(
                    f"walker {self.aid} moved through a port it saw present, yet failed"
                )
            self.dfs = dfs.arrive(self.dfs, rec.last_arrival_port)
            self.in_flight = False
            self.pending = None

    def peek_plan(self, world: World) -> dfs.Step:
        """The move this walker wants next, without committing state."""
        self.sync(world)
        if self.pending is not None:
            return self.pending
        node = world.agents[self.aid].position
        _, step = dfs.dfs_step(self.dfs, world.footprint.degree(node), self.entry_at(world, node))
        return step

    def plan(self, world: World) -> None:
        if self.pending is not None:
            return
        node = world.agents[self.aid].position
        self.dfs, step = dfs.dfs_step(
            self.dfs, world.footprint.degree(node), self.entry_at(world, node)
        )
        if step.mark:
            self.write_mark(world, node, self.dfs.prt_in)
        self.pending = step

    def restart(self, world: World, node: int) -> None:
        self.dfs = dfs.restart_dfs(self.dfs, node)
        self.write_mark(world, node, -1)
        world.emit({"t": "restart", "agent": self.aid, "label": self.dfs.dfs_label})
        self.pending = None
        self.plan(world)

    def step(self, world: World, edge_present: dict) -> Action:
        """Compute this round's action given incident-edge presence."""
        self.sync(world)
        node = world.agents[self.aid].position
        self.plan(world)

        for _ in range(world.footprint.degree(node) + 2):  # bounded advance
            step = self.pending
            if step.done:
                if self.discipline == "deviate":
                    self.restart(world, node)
                    continue
                return Action("stay")
            port = step.port
            if edge_present[port]:
                self.in_flight = True
                return Action("move", port=port, probe=step.kind == "probe")
            # the pending edge is missing this round
            if self.discipline == "wait":
                return Action("stay")
            if step.kind == "probe":
                s, nxt = dfs.skip_edge(
                    self.dfs, world.footprint.degree(node), self.entry_at(world, node), port
                )
                if nxt.port is None and not nxt.done:
                    return Action("stay")  # degree-1 dead end: retry later
                self.dfs = s
                self.pending = nxt
                world.emit({"t": "skip", "agent": self.aid, "port": port})
                continue
            # a return move is blocked: abandon the walk and start fresh here
            self.restart(world, node)
        raise ProtocolViolation(f"walker {self.aid} failed to settle on a move")

    def intent_edge(self, world: World) -> Optional[tuple]:
        step = self.peek_plan(world)
        if step.port is None:
            return None
        node = world.agents[self.aid].position
        return edge_key(node, world.footprint.ports[node][step.port])


class SingleWalkerProtocol:
    """One agent exploring with plain DFS; waits whenever its edge is missing."""

    def __init__(self, aid: int = 1):
        self.walker = Walker(aid, "G1", "wait", labelled=False)

    def setup(self, world: World) -> None:
        self.walker.setup(world)

    def step_round(self, world: World, obs: dict) -> dict:
        w = self.walker
        return {w.aid: w.step(world, obs[w.aid].edge_present)}

    def move_intents(self, world: World) -> dict:
        return {self.walker.aid: self.walker.intent_edge(world)}

    def public_state(self, aid: int) -> dict:
        return {}

    def agent_tags(self, aid: int) -> tuple:
        w = self.walker
        return "walker", f"{w.dfs.mode}/{w.dfs.dfs_label}"


class TwoWalkerProtocol:
    """Two co-located walkers: one waits at missing edges, one deviates."""

    def __init__(self, wait_aid: int = 1, deviate_aid: int = 2):
        self.walkers = {
            wait_aid: Walker(wait_aid, "G1", "wait", labelled=False),
            deviate_aid: Walker(deviate_aid, "G2", "deviate", labelled=True),
        }

    def setup(self, world: World) -> None:
        for w in self.walkers.values():
            w.setup(world)

    def step_round(self, world: World, obs: dict) -> dict:
        return {
            aid: w.step(world, obs[aid].edge_present)
            for aid, w in sorted(self.walkers.items())
        }

    def move_intents(self, world: World) -> dict:
        return {aid: w.intent_edge(world) for aid, w in sorted(self.walkers.items())}

    def public_state(self, aid: int) -> dict:
        return {}

    def agent_tags(self, aid: int) -> tuple:
        w = self.walkers[aid]
        return w.ns, f"{w.dfs.mode}/{w.dfs.dfs_label}"
