"""Scattered agents with global communication and 0-hop visibility.

Only two agents explore at a time; everyone else holds position.  The active
pair runs the split walk (one never deviates, one skips and restarts), with
every move into unverified territory wrapped in a write-probe-return-erase
cautious cycle: the agent records its id and departure port on the whiteboard,
crosses, comes back to erase the record, and only then commits the crossing.
An agent that dies in the black hole leaves its record behind as a tombstone;
since liveness is globally visible, any later visitor of that node can match
the record against the alive set and name the fatal port.

Deaths are detected through global communication at the next round start, and
the smallest-id agent that has not yet explored inherits the vacant role.  Two
stuck-resolution rules keep the pair moving: mutual record erasure when both
actives are stranded on opposite sides of the same missing edge, and strict
smaller-id-first serialization when both want the same port of a shared node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import dfs
from .engine import Action, ProtocolViolation, World
from .tvg import edge_key


@dataclass
class ActiveState:
    role: str  # 'A1' never deviates; 'A2' skips and restarts
    dfs: dfs.DfsState
    phase: str = "plan"  # 'plan' | 'out' | 'back' | 'final' | 'ret' | 'shadow' | 'done'
    pending: Optional[dfs.Step] = None
    origin: Optional[int] = None  # cautious-cycle origin node
    port: Optional[int] = None    # cautious-cycle departure port (or plain move port)
    back_port: Optional[int] = None
    watched: Optional[int] = None  # shadow: smaller-id active engaged on my port


class GlobalSearchProtocol:
    """Roster of scattered agents; the two smallest ids explore, the rest idle."""

    def __init__(self, agent_ids):
        self.ids = tuple(sorted(agent_ids))
        if len(self.ids) < 2:
            raise ValueError("the scattered search needs at least 2 agents")
        self.active: dict[int, ActiveState] = {}
        self.activated: set = set()
        self._exhausted_flagged = False
        self._dispatched_probe: dict = {}
        # death certificates: the node each dead explorer was last seen at.
        # A record is an actionable tombstone only at its writer's certified
        # node, which makes records abandoned mid-cycle harmless: a writer
        # re-engaging at a node overwrites its own stale record there, and a
        # death anywhere else certifies a different node.
        self.certificates: dict[int, int] = {}
        self._snap: dict = {}

    # ------------------------------------------------------------------ setup
    def setup(self, world: World) -> None:
        for aid in self.ids[:2]:
            self._activate(world, aid, "A1" if aid == self.ids[0] else "A2")

    def _activate(self, world: World, aid: int, role: str) -> None:
        start = world.agents[aid].position
        self.active[aid] = ActiveState(role=role, dfs=dfs.DfsState(root=start))
        self.activated.add(aid)
        world.emit({"t": "activate", "agent": aid, "role": role})

    # ---------------------------------------------------------------- roster
    def _update_roster(self, world: World) -> None:
        dead = [aid for aid in list(self.active) if not world.agents[aid].alive]
        if not dead:
            return
        vacant_roles = sorted(self.active[aid].role for aid in dead)
        for aid in dead:
            # last round's snapshot still holds where the agent stood when it
            # made its fatal move
            if aid in self._snap:
                self.certificates[aid] = self._snap[aid]["pos"]
            del self.active[aid]
        pool = [a for a in world.alive_ids() if a not in self.activated]
        for role in vacant_roles:  # 'A1' fills before 'A2'
            if not pool:
                if not self._exhausted_flagged:
                    world.emit({"t": "roster-exhausted"})
                    self._exhausted_flagged = True
                break
            self._activate(world, pool.pop(0), role)
        if len(self.active) > 2:
            raise ProtocolViolation("more than two agents in exploration roles")

    # ------------------------------------------------- whiteboard per walker
    def _entry(self, world: World, aid: int, node: int) -> Optional[int]:
        rec = world.wb_read(node).get(f"dfs:{aid}")
        if rec is None or rec.get("label") != self.active[aid].dfs.dfs_label:
            return None
        return rec["parent"]

    def _mark(self, world: World, aid: int, node: int, parent: int) -> None:
        world.wb_write(
            node, f"dfs:{aid}", {"parent": parent, "label": self.active[aid].dfs.dfs_label}
        )

    @staticmethod
    def _tombstones(world: World, node: int) -> list:
        """(writer, port) for every cautious-cycle record left at this node."""
        out = []
        for key, rec in sorted(world.wb_read(node).items()):
            if key.startswith("cm1:"):
                out.append((int(key.split(":", 1)[1]), rec["port"]))
        return out

    # ------------------------------------------------------------ round logic
    def step_round(self, world: World, obs: dict) -> dict:
        self._update_roster(world)
        self._dispatched_probe = {}
        # freeze round-start facts so paired stuck-resolution decisions are
        # symmetric even though the two actives compute one after the other
        self._snap = {}
        for aid, st in sorted(self.active.items()):
            rec = world.agents[aid]
            attempt = None
            if st.phase == "back":
                attempt = st.back_port
            elif st.phase in ("out", "final", "ret"):
                attempt = st.port
            failed = rec.last_move == "failed"
            edge = None
            if attempt is not None and failed:
                # a failed mover is still at the node the port belongs to
                edge = edge_key(rec.position, world.footprint.ports[rec.position][attempt])
            self._snap[aid] = {
                "phase": st.phase,
                "origin": st.origin,
                "pos": rec.position,
                "failed": failed,
                "edge": edge,
            }
        actions: dict[int, Action] = {}
        for aid in sorted(self.active):
            actions[aid] = self._step_active(world, aid)
        for aid in world.alive_ids():
            actions.setdefault(aid, Action("stay"))
        return actions

    def _step_active(self, world: World, aid: int) -> Action:
        st = self.active[aid]
        rec = world.agents[aid]
        v = rec.position
        alive = set(world.alive_ids())

        # tombstone pre-check: a record whose writer died here names the fatal port
        for writer, port in self._tombstones(world, v):
            if writer not in alive and self.certificates.get(writer) == v:
                world.emit({"t": "tombstone", "agent": aid, "writer": writer})
                return Action("declare", port=port)

        # cleaning half of the blocked-return resolution: the other active is
        # stranded mid-return on the far side of my blocked edge and cannot
        # reach the record it left here
        partner = self._case4_clean_target(aid)
        if partner is not None and f"cm1:{partner}" in world.wb_read(v):
            world.wb_delete(v, f"cm1:{partner}")
            world.emit({"t": "case4-clean", "agent": aid, "partner": partner})

        if st.phase == "done":
            return Action("stay")

        if st.phase == "out":
            if rec.last_move == "succeeded":
                # survived the probe: head straight back to erase the record
                st.phase = "back"
                st.back_port = rec.last_arrival_port
                return Action("move", port=st.back_port)
            if st.role == "A1":
                return Action("move", port=st.port, probe=True)  # retry, never deviate
            # deviating walker: the edge is missing, take the skip rule
            world.wb_delete(st.origin, f"cm1:{aid}")
            return self._skip_from(world, aid, st, v)

        if st.phase == "back":
            if rec.last_move == "succeeded":
                # back at the origin: erase, then commit the crossing for real
                world.wb_delete(v, f"cm1:{aid}")
                st.phase = "final"
                return Action("move", port=st.port)
            if self._case4_abandon(aid):
                # the other active is stranded on the far side of this very
                # edge (and erases my record there): commit the crossing and
                # walk on from here
                world.emit({"t": "case4", "agent": aid})
                st.dfs = dfs.arrive(st.dfs, st.back_port)
                st.phase = "plan"
                st.pending = None
                return self._plan_and_dispatch(world, aid, st, v)
            return Action("move", port=st.back_port)

        if st.phase == "final":
            if rec.last_move == "succeeded":
                st.dfs = dfs.arrive(st.dfs, rec.last_arrival_port)
                st.phase = "plan"
                st.pending = None
                return self._plan_and_dispatch(world, aid, st, v)
            if st.role == "A1":
                return Action("move", port=st.port)
            # record already erased: a blocked commit crossing is skippable
            return self._skip_from(world, aid, st, v)

        if st.phase == "ret":
            if rec.last_move == "succeeded":
                st.dfs = dfs.arrive(st.dfs, rec.last_arrival_port)
                st.phase = "plan"
                st.pending = None
                return self._plan_and_dispatch(world, aid, st, v)
            if st.role == "A1":
                return Action("move", port=st.port)
            # a blocked return move restarts the deviating walker's DFS here
            self._restart(world, aid, st, v)
            return self._plan_and_dispatch(world, aid, st, v)

        if st.phase == "shadow":
            other = st.watched
            if other not in alive:
                world.emit({"t": "case5-death", "agent": aid, "watched": other})
                return Action("declare", port=st.port)
            if not self._engaged_on(world, other, v, st.port):
                st.phase = "plan"  # conflict dissolved; re-dispatch my own step
                return self._plan_and_dispatch(world, aid, st, v)
            if st.role == "A2" and world.agents[other].last_move == "failed":
                # the shared port is blocked: deviate instead of queueing
                return self._skip_from(world, aid, st, v)
            return Action("stay")

        return self._plan_and_dispatch(world, aid, st, v)

    # --------------------------------------------------------------- helpers
    def _restart(self, world: World, aid: int, st: ActiveState, node: int) -> None:
        st.dfs = dfs.restart_dfs(st.dfs, node)
        self._mark(world, aid, node, -1)
        st.pending = None
        world.emit({"t": "restart", "agent": aid, "label": st.dfs.dfs_label, "node": node})

    def _skip_from(self, world: World, aid: int, st: ActiveState, v: int) -> Action:
        """Deviating walker found its probe edge missing: advance past it."""
        deg = world.footprint.degree(v)
        s, nxt = dfs.skip_edge(st.dfs, deg, self._entry(world, aid, v), st.port)
        if nxt.port is None and not nxt.done:
            st.phase = "plan"  # degree-1 dead end: retry the same port later
            return Action("stay")
        world.emit({"t": "skip", "agent": aid, "port": st.port})
        st.dfs = s
        if nxt.done:
            self._restart(world, aid, st, v)
            return self._plan_and_dispatch(world, aid, st, v)
        st.pending = nxt
        st.phase = "plan"
        return self._dispatch(world, aid, st, v)

    def _plan_and_dispatch(self, world: World, aid: int, st: ActiveState, v: int) -> Action:
        if st.pending is None:
            st.dfs, step = dfs.dfs_step(
                st.dfs, world.footprint.degree(v), self._entry(world, aid, v)
            )
            if step.mark:
                self._mark(world, aid, v, st.dfs.prt_in)
            if step.done:
                if st.role == "A1":
                    st.phase = "done"
                    return Action("stay")
                self._restart(world, aid, st, v)
                st.dfs, step = dfs.dfs_step(
                    st.dfs, world.footprint.degree(v), self._entry(world, aid, v)
                )
            st.pending = step
        return self._dispatch(world, aid, st, v)

    def _dispatch(self, world: World, aid: int, st: ActiveState, v: int) -> Action:
        step = st.pending
        if step.done:
            st.phase = "done"
            return Action("stay")
        if step.kind == "return":
            st.phase = "ret"
            st.port = step.port
            return Action("move", port=step.port)
        # cautious cycle for a move into unverified territory
        other = self._smaller_active_engaged(world, aid, v, step.port)
        if other is not None:
            st.phase = "shadow"
            st.port = step.port
            st.watched = other
            world.emit({"t": "case5-defer", "agent": aid, "watched": other, "port": step.port})
            return Action("stay")
        st.phase = "out"
        st.origin = v
        st.port = step.port
        world.wb_write(v, f"cm1:{aid}", {"port": step.port, "round": world.round})
        self._dispatched_probe[aid] = (v, step.port)
        return Action("move", port=step.port, probe=True)

    def _engaged_on(self, world: World, other: int, node: int, port: int) -> bool:
        """Is `other` currently committed to first-crossing (node, port)?"""
        if other in self._dispatched_probe:
            return self._dispatched_probe[other] == (node, port)
        st = self.active.get(other)
        if st is None:
            return False
        return (
            st.phase == "out"
            and st.origin == node
            and st.port == port
            and world.agents[other].position == node
        )

    def _smaller_active_engaged(self, world: World, aid: int, node: int, port: int) -> Optional[int]:
        for other in sorted(self.active):
            if other < aid and self._engaged_on(world, other, node, port):
                return other
        return None

    def _case4_abandon(self, aid: int) -> bool:
        """Give up a blocked return leg.

        Fires when the other active failed last round on the very edge that
        blocks me, whichever side it stands on: neither of us can cross, so
        retrying would deadlock the pair.  The crossing being committed is
        safe, and the record left behind can never be misread as a tombstone
        thanks to the death-certificate check.
        """
        me = self._snap[aid]
        if me["phase"] != "back" or not me["failed"]:
            return False
        for other, o in sorted(self._snap.items()):
            if other == aid:
                continue
            if o["failed"] and o["edge"] == me["edge"]:
                return True
        return False

    def _case4_clean_target(self, aid: int) -> Optional[int]:
        """The other active whose record at my node I must erase.

        Mirror half of the blocked-return resolution: the other active is in
        its return leg toward my node, both of us failed on the same edge.
        """
        me = self._snap[aid]
        if not me["failed"] or me["edge"] is None:
            return None
        for other, o in sorted(self._snap.items()):
            if other == aid:
                continue
            if (
                o["phase"] == "back"
                and o["failed"]
                and o["origin"] == me["pos"]
                and o["edge"] == me["edge"]
            ):
                return other
        return None

    # ------------------------------------------------------------- interface
    def move_intents(self, world: World) -> dict:
        intents: dict[int, Optional[tuple]] = {}
        f = world.footprint
        for aid in world.alive_ids():
            intents[aid] = None
            st = self.active.get(aid)
            if st is None:
                continue
            v = world.agents[aid].position
            port = None
            if st.phase in ("out", "final"):
                port = st.port
            elif st.phase == "back":
                port = st.back_port
            elif st.phase == "ret":
                port = st.port
            elif st.pending is not None and st.pending.port is not None:
                port = st.pending.port
            if port is not None and 0 <= port < f.degree(v):
                intents[aid] = edge_key(v, f.ports[v][port])
        return intents

    def public_state(self, aid: int) -> dict:
        st = self.active.get(aid)
        if st is None:
            return {"phase": "idle"}
        out = {"phase": st.phase, "role": st.role}
        if st.phase == "back":
            out["returning_to"] = st.origin
        return out

    def agent_tags(self, aid: int) -> tuple:
        st = self.active.get(aid)
        if st is None:
            return ("idle", "idle")
        return (st.role, f"{st.dfs.mode}/{st.dfs.dfs_label}/{st.phase}")
