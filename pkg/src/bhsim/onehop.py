"""Four co-located agents with one-hop visibility hunting the black hole.

The agents form two groups of leader + helper.  Each group runs a DFS walk;
every move into territory not yet known safe is *cautious*: the helper probes
the port one round ahead, and the leader follows only after seeing the helper
alive at the far end of a present edge.  A present edge with the helper gone
is the detection event.  Group 1 never deviates from its walk and waits out
missing edges; group 2 skips missing explore edges and restarts its walk when
a return move is blocked or its root scan is exhausted.

When exactly one of the two groups is split across the single missing edge,
the stranded agents are traded between groups so that at least one full pair
keeps moving; the dispatch below enumerates those trade patterns.  Stranded
agents themselves always hold position until a leader reaches or sees them.

A degraded three-agent variant (group 2 is a lone leader that moves without
caution and can never trade) exists for the stall experiments on the
clique-chain constructions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import dfs
from .engine import Action, ProtocolViolation, World
from .tvg import edge_key


@dataclass
class Group:
    tag: str  # 'G1' | 'G2'
    leader: int
    helper: Optional[int]
    dfs: dfs.DfsState
    stage: str = "plan"  # 'plan' | 'ready' | 'sent' | 'moving' | 'done' | 'dead'
    pending: Optional[dfs.Step] = None
    prober: Optional[int] = None  # agent standing (or lost) across the pending edge

    def members(self) -> tuple:
        return (self.leader,) if self.helper is None else (self.leader, self.helper)


class OneHopProtocol:
    """Case-driven controller for the rooted two-group search."""

    def __init__(self, agent_ids=(1, 2, 3, 4)):
        if len(agent_ids) == 4:
            a1, a2, a3, a4 = agent_ids
            self.lone_g2 = False
        elif len(agent_ids) == 3:
            a1, a2, a3 = agent_ids
            a4 = None
            self.lone_g2 = True
        else:
            raise ValueError("one-hop search needs 3 or 4 agents")
        self.g1 = Group("G1", leader=a1, helper=a2, dfs=dfs.DfsState())
        self.g2 = Group("G2", leader=a3, helper=a4, dfs=dfs.DfsState())
        self._stall_streak = 0
        self._inferred_flagged = False

    # ------------------------------------------------------------------ setup
    def setup(self, world: World) -> None:
        root = world.agents[self.g1.leader].position
        for g in (self.g1, self.g2):
            for aid in g.members():
                if world.agents[aid].position != root:
                    raise ProtocolViolation("rooted scenario requires co-located agents")
            g.dfs = dfs.DfsState(root=root)

    # ------------------------------------------------- whiteboard per group
    def _entry(self, world: World, g: Group, node: int) -> Optional[int]:
        rec = world.wb_read(node).get(g.tag)
        if rec is None:
            return None
        if g.tag == "G2" and rec.get("label") != g.dfs.dfs_label:
            return None
        return rec["parent"]

    def _mark(self, world: World, g: Group, node: int, parent: int) -> None:
        rec = {"parent": parent}
        if g.tag == "G2":
            rec["label"] = g.dfs.dfs_label
        world.wb_write(node, g.tag, rec)

    # --------------------------------------------------------------- helpers
    def _pos(self, world: World, aid: Optional[int]) -> Optional[int]:
        if aid is None:
            return None
        a = world.agents[aid]
        return a.position if a.alive else None

    def _alive(self, world: World, aid: Optional[int]) -> bool:
        return aid is not None and world.agents[aid].alive

    def _pending_edge(self, world: World, g: Group) -> Optional[tuple]:
        if g.pending is None or g.pending.port is None:
            return None
        v = self._pos(world, g.leader)
        if v is None:
            return None
        return edge_key(v, world.footprint.ports[v][g.pending.port])

    def _restart(self, world: World, g: Group, node: int) -> None:
        g.dfs = dfs.restart_dfs(g.dfs, node)
        self._mark(world, g, node, -1)
        g.pending = None
        g.prober = None
        g.stage = "plan"
        world.emit({"t": "restart", "group": g.tag, "label": g.dfs.dfs_label, "node": node})

    def _exchange(self, world: World, case: str) -> None:
        world.emit(
            {
                "t": "exchange",
                "case": case,
                "G1": list(self.g1.members()),
                "G2": list(self.g2.members()),
            }
        )

    # ------------------------------------------------------------ round logic
    def step_round(self, world: World, obs: dict) -> dict:
        actions: dict[int, Action] = {}
        f = world.footprint

        # fold last round's arrivals into group state
        for g in (self.g1, self.g2):
            if g.stage == "dead":
                continue
            if not self._alive(world, g.leader):
                # only the degraded lone group can lose its leader mid-move
                if not (self.lone_g2 and g is self.g2):
                    raise ProtocolViolation(f"{g.tag} leader died outside a probe")
                g.stage = "dead"
                continue
            if g.stage == "moving":
                rec = world.agents[g.leader]
                if rec.last_move != "succeeded":
                    raise ProtocolViolation(f"{g.tag} moved through an edge it saw present")
                g.dfs = dfs.arrive(g.dfs, rec.last_arrival_port)
                g.stage = "plan"
                g.pending = None
                g.prober = None

        # plan: arrival processing at the walker's node
        for g in (self.g1, self.g2):
            if g.stage != "plan":
                continue
            v = self._pos(world, g.leader)
            if g.helper is not None and self._pos(world, g.helper) != v:
                raise ProtocolViolation(f"{g.tag} planned while split")
            g.dfs, step = dfs.dfs_step(g.dfs, f.degree(v), self._entry(world, g, v))
            if step.mark:
                self._mark(world, g, v, g.dfs.prt_in)
            if step.done:
                if g.tag == "G2":
                    self._restart(world, g, v)
                    g.dfs, step = dfs.dfs_step(g.dfs, f.degree(v), self._entry(world, g, v))
                else:
                    g.stage = "done"
                    continue
            g.pending = step
            g.stage = "ready"

        # resolve in-flight cautious steps whose edge is present this round
        stuck: list[Group] = []
        moved_this_round = False
        for g in (self.g1, self.g2):
            if g.stage != "sent":
                continue
            v = self._pos(world, g.leader)
            port = g.pending.port
            far = f.ports[v][port]
            if edge_key(v, far) in world.missing:
                stuck.append(g)
                continue
            if g.pending.kind == "probe":
                if self._pos(world, g.prober) != far:
                    if self._alive(world, g.prober):
                        raise ProtocolViolation(f"{g.tag} prober strayed from its post")
                    actions[g.leader] = Action("declare", port=port)
                    continue
            # cross: the leader commits the step; a co-located helper rides along
            movers = [g.leader]
            if g.helper is not None and self._pos(world, g.helper) == v:
                movers.append(g.helper)
            for aid in movers:
                actions[aid] = Action("move", port=port)
            g.stage = "moving"
            moved_this_round = True
        if any(a.kind == "declare" for a in actions.values()):
            # fill stays for completeness; engine stops at the declaration
            for aid in world.alive_ids():
                actions.setdefault(aid, Action("stay"))
            return actions

        # groups whose fresh pending move is blocked join the stuck set
        for g in (self.g1, self.g2):
            if g.stage == "ready":
                e = self._pending_edge(world, g)
                if e is not None and e in world.missing:
                    stuck.append(g)

        exchanged = self._handle_stuck(world, stuck)

        # dispatch ready groups whose pending edge is present
        skipped = self._dispatch(world, actions)

        for aid in world.alive_ids():
            actions.setdefault(aid, Action("stay"))

        moved_this_round = moved_this_round or any(
            a.kind == "move" for a in actions.values()
        )
        blocked = bool(stuck)
        if moved_this_round or exchanged or skipped or blocked:
            self._stall_streak = 0
        else:
            self._stall_streak += 1
            if self._stall_streak >= 3:
                raise ProtocolViolation("no progress and nobody waiting on a missing edge")
        return actions

    # ----------------------------------------------------------- stuck logic
    def _handle_stuck(self, world: World, stuck: list) -> bool:
        """Apply at most one trade of stranded agents between the groups."""
        g1, g2 = self.g1, self.g2
        if g1 not in stuck:
            if g2 in stuck and g2.stage == "sent" and not self._inferred_flagged:
                # split group 2 blocked while group 1 moves freely: hold position
                world.emit({"t": "inferred-case", "group": "G2"})
                self._inferred_flagged = True
            return False
        if self.lone_g2 or g2.stage == "dead":
            return False

        v = self._pos(world, g1.leader)
        e = self._pending_edge(world, g1)
        g1_together = self._pos(world, g1.helper) == v
        g2_leader_here = self._pos(world, g2.leader) == v
        # group 2's scout landed here through the very edge that blocks group 1
        g2_prober_here = (
            g2.stage == "sent"
            and not g2_leader_here
            and self._pos(world, g2.prober) == v
            and self._pending_edge(world, g2) == e
        )
        # group 2 probed this edge from here and its scout is stranded across
        g2_sent_from_here = (
            g2.stage == "sent"
            and g2_leader_here
            and self._pending_edge(world, g2) == e
            and self._pos(world, g2.helper) != v
        )

        if g1_together and g1.pending.kind == "probe":
            # group 1 fully present, explore move blocked
            if g2_sent_from_here:
                # adopt group 2's scout, already safely across this edge
                old_h1, old_h2 = g1.helper, g2.helper
                g1.helper = old_h2
                g1.prober = old_h2
                g1.stage = "sent"
                g2.helper = old_h1
                self._exchange(world, "I.a")
                self._restart(world, g2, v)
                return True
            if g2_prober_here:
                # group 2's scout is here; its leader stranded across becomes
                # group 1's helper, and the scout leads a rebuilt group 2
                old_h1, old_l2, old_h2 = g1.helper, g2.leader, g2.helper
                g1.helper = old_l2
                g1.prober = old_l2
                g1.stage = "sent"
                g2.leader = old_h2
                g2.helper = old_h1
                self._exchange(world, "I.b")
                self._restart(world, g2, v)
                return True
            return False

        if g1_together and g1.pending.kind == "return":
            # group 1 fully present, backtrack blocked
            if g2_prober_here:
                old_h1, old_l2, old_h2 = g1.helper, g2.leader, g2.helper
                g2.leader = old_h2
                g2.helper = old_h1
                g1.helper = old_l2
                g1.prober = old_l2
                g1.stage = "sent"
                # the new leader stands where its probe landed: walk on from here
                g2.dfs = dfs.arrive(g2.dfs, world.agents[old_h2].last_arrival_port)
                g2.stage = "plan"
                g2.pending = None
                g2.prober = None
                self._exchange(world, "BT.a")
                return True
            if g2_sent_from_here:
                old_h1, old_h2 = g1.helper, g2.helper
                g1.helper = old_h2
                g1.prober = old_h2
                g1.stage = "sent"
                g2.helper = old_h1
                self._exchange(world, "BT.b")
                self._restart(world, g2, v)
                return True
            return False

        if not g1_together and g1.pending.kind == "probe" and g1.stage == "sent":
            # leader alone, its helper stranded across the missing edge
            if g2_prober_here:
                # the two scouts passed each other on this edge last round:
                # re-pair both sides of the gap
                old_h1, old_h2 = g1.prober, g2.prober
                far = self._pos(world, old_h1)
                g1.helper = old_h2
                g1.prober = None
                g1.stage = "ready"  # fresh cautious step once the edge returns
                g2.helper = old_h1
                self._exchange(world, "II.c")
                self._restart(world, g2, far)
                return True
            return False

        return False

    # ------------------------------------------------------------- dispatch
    def _dispatch(self, world: World, actions: dict) -> bool:
        f = world.footprint
        g1, g2 = self.g1, self.g2
        progressed = False

        # group 2 clears its own blocked moves first: skip or restart
        if g2.stage == "ready":
            guard = 0
            while g2.stage == "ready":
                e = self._pending_edge(world, g2)
                if e is None or e not in world.missing:
                    break
                v = self._pos(world, g2.leader)
                if g2.helper is not None and self._pos(world, g2.helper) != v:
                    break  # split pair holds position
                if g2.pending.kind == "probe":
                    s, nxt = dfs.skip_edge(
                        g2.dfs, f.degree(v), self._entry(world, g2, v), g2.pending.port
                    )
                    if nxt.port is None and not nxt.done:
                        break  # degree-1 dead end: retry next round
                    world.emit({"t": "skip", "group": "G2", "port": g2.pending.port})
                    progressed = True
                    g2.dfs = s
                    if nxt.done:
                        self._restart(world, g2, v)
                        g2.dfs, nxt = dfs.dfs_step(
                            g2.dfs, f.degree(v), self._entry(world, g2, v)
                        )
                else:
                    self._restart(world, g2, v)
                    g2.dfs, nxt = dfs.dfs_step(
                        g2.dfs, f.degree(v), self._entry(world, g2, v)
                    )
                    progressed = True
                g2.pending = nxt
                g2.stage = "ready"
                guard += 1
                if guard > f.degree(v) + 2:
                    raise ProtocolViolation("skip loop failed to settle")

        # shared probe: both groups ready to explore the same port from the
        # same node; only group 2's helper goes, group 1 rides on the answer
        if (
            not self.lone_g2
            and g1.stage == "ready"
            and g2.stage == "ready"
            and g1.pending.kind == "probe"
            and g2.pending.kind == "probe"
            and self._pos(world, g1.leader) == self._pos(world, g2.leader)
            and g1.pending.port == g2.pending.port
        ):
            e = self._pending_edge(world, g2)
            if e is not None and e not in world.missing:
                actions[g2.helper] = Action("move", port=g2.pending.port, probe=True)
                g2.prober = g2.helper
                g2.stage = "sent"
                g1.prober = g2.helper
                g1.stage = "sent"
                world.emit({"t": "probe", "group": "G1+G2", "agent": g2.helper})
                return True

        for g in (g1, g2):
            if g.stage != "ready":
                continue
            e = self._pending_edge(world, g)
            if e is None or e in world.missing:
                continue
            if g.pending.kind == "probe":
                if g.helper is None:
                    # degraded lone group: the leader scouts for itself
                    actions[g.leader] = Action("move", port=g.pending.port, probe=True)
                    g.stage = "moving"
                else:
                    if self._pos(world, g.helper) != self._pos(world, g.leader):
                        continue  # stranded partner: wait for reunion
                    actions[g.helper] = Action("move", port=g.pending.port, probe=True)
                    g.prober = g.helper
                    g.stage = "sent"
                    world.emit({"t": "probe", "group": g.tag, "agent": g.helper})
                progressed = True
            else:
                movers = [g.leader]
                if g.helper is not None:
                    if self._pos(world, g.helper) != self._pos(world, g.leader):
                        continue
                    movers.append(g.helper)
                for aid in movers:
                    actions[aid] = Action("move", port=g.pending.port)
                g.stage = "moving"
                progressed = True

        # helpers of different groups must never probe a port together
        probing = [
            (self._pos(world, g.prober), g.pending.port)
            for g in (g1, g2)
            if g.stage == "sent" and g.prober is not None and g.prober in actions
        ]
        if len(probing) == 2 and probing[0] == probing[1] and g1.prober != g2.prober:
            raise ProtocolViolation("both helpers probed the same port in one round")
        return progressed

    # ------------------------------------------------------------- interface
    def move_intents(self, world: World) -> dict:
        intents = {}
        for g in (self.g1, self.g2):
            if g.stage in ("ready", "sent"):
                e = self._pending_edge(world, g)
                for aid in g.members():
                    if self._alive(world, aid):
                        intents[aid] = e
        for aid in world.alive_ids():
            intents.setdefault(aid, None)
        return intents

    def public_state(self, aid: int) -> dict:
        return {}

    def agent_tags(self, aid: int) -> tuple:
        for g in (self.g1, self.g2):
            if aid == g.leader:
                return f"{g.tag}/L", f"{g.dfs.mode}/{g.dfs.dfs_label}/{g.stage}"
            if aid == g.helper:
                return f"{g.tag}/H", f"{g.dfs.mode}/{g.dfs.dfs_label}/{g.stage}"
        return "?", "?"
