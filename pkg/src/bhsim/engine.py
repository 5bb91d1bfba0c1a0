"""Synchronous Communicate-Compute-Move round loop.

Each round: (1) the adversary fixes the missing-edge set, (2) every alive agent
gets an Observation built for the scenario's visibility and communication
model, (3) the protocol computes one action per agent (reading and writing the
whiteboard of the node it stands on), (4) all moves resolve simultaneously; a
move over a missing edge fails in place, and agents whose destination is the
black hole are destroyed at the end of the move, leaving no trace.

Identical scenario + seed gives bit-identical traces: all iteration is in
sorted order and nothing here consults wall clocks or global RNG state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import tvg
from .tvg import Footprint, edge_key, entry_port, neighbor_via_port, snapshot_for_round


class ProtocolViolation(RuntimeError):
    """An algorithm reached a state its case analysis claims impossible."""


class VerificationError(RuntimeError):
    """A declared black-hole port disagrees with the ground-truth footprint."""


class ScenarioError(ValueError):
    """Bad scenario configuration (placement on the black hole, wrong k, ...)."""


@dataclass
class AgentRecord:
    id: int
    position: Optional[int]  # node id, or None once destroyed
    alive: bool = True
    last_move: str = "none"  # 'none' | 'succeeded' | 'failed'
    last_arrival_port: int = -1


@dataclass(frozen=True)
class Observation:
    """What one agent perceives at the start of its Compute step."""

    agent_id: int
    round: int
    node: int
    degree: int
    colocated: tuple
    last_move: str
    # 1-hop and full visibility only; None under 0-hop
    edge_present: Optional[dict] = None
    # agent ids at the far end of each *present* incident edge (1-hop / full)
    far_agents: Optional[dict] = None
    # global communication only
    alive_ids: Optional[tuple] = None
    broadcasts: Optional[dict] = None
    # full visibility only
    all_missing: Optional[tuple] = None
    all_positions: Optional[dict] = None


@dataclass(frozen=True)
class Action:
    kind: str  # 'move' | 'stay' | 'declare'
    port: Optional[int] = None
    probe: bool = False  # move enters territory not yet known safe


@dataclass(frozen=True)
class Death:
    round: int
    agent: int
    edge: tuple
    probe: bool


@dataclass
class Outcome:
    verdict: str  # 'Solved' | 'Explored' | 'Failed' | 'TimedOut'
    agent: Optional[int] = None
    witness_node: Optional[int] = None
    witness_port: Optional[int] = None
    rounds_used: int = 0
    deaths: int = 0
    cover_round: dict = field(default_factory=dict)
    trace_lines: Optional[list] = None


class World:
    """Mutable simulation state shared with the protocol and adversary."""

    def __init__(self, footprint: Footprint, placements: dict):
        self.footprint = footprint
        self.agents = {
            aid: AgentRecord(id=aid, position=node)
            for aid, node in sorted(placements.items())
        }
        self.whiteboards: dict[int, dict] = {v: {} for v in range(footprint.node_count)}
        self.round = 0
        self.missing: frozenset = frozenset()
        self.deaths: list[Death] = []
        self.visited: dict[int, set] = {aid: {node} for aid, node in placements.items()}
        self._events: list = []
        self._wb_deltas: list = []

    # -- whiteboard access (all writes funnel through here for the trace) -----
    def wb_read(self, node: int) -> dict:
        return self.whiteboards[node]

    def wb_write(self, node: int, key: str, value) -> None:
        self.whiteboards[node][key] = value
        self._wb_deltas.append([node, key, value])

    def wb_delete(self, node: int, key: str) -> None:
        if key in self.whiteboards[node]:
            del self.whiteboards[node][key]
            self._wb_deltas.append([node, key, None])

    def emit(self, event: dict) -> None:
        self._events.append(event)

    def alive_ids(self) -> list:
        return [aid for aid, a in sorted(self.agents.items()) if a.alive]

    def agents_at(self, node: int) -> list:
        return [aid for aid, a in sorted(self.agents.items()) if a.alive and a.position == node]


@dataclass(frozen=True)
class AdversaryView:
    """Omniscient world view handed to the adversary before each round."""

    round: int
    footprint: Footprint
    positions: dict
    alive: frozenset
    intents: dict  # agent id -> edge it will try next, best effort
    deaths: tuple
    whiteboards: dict
    rng_stream: Optional[object] = None


def resolve_moves(
    footprint: Footprint,
    missing: frozenset,
    positions: dict,
    intents: dict,
) -> tuple[dict, dict, dict]:
    """Resolve all move intents simultaneously.

    Two agents may traverse the same edge in the same round, including in
    opposite directions.  Returns (new_positions, success flags, arrival ports).
    """
    new_pos = dict(positions)
    flags = {}
    arrival = {}
    for aid in sorted(intents):
        port = intents[aid]
        v = positions[aid]
        u = neighbor_via_port(footprint, v, port)
        if edge_key(v, u) in missing:
            flags[aid] = False
        else:
            flags[aid] = True
            new_pos[aid] = u
            arrival[aid] = entry_port(footprint, v, u)
    return new_pos, flags, arrival


def observe(
    world: World,
    aid: int,
    visibility: str,
    communication: str,
    position_index: dict,
    broadcasts: Optional[dict] = None,
) -> Observation:
    a = world.agents[aid]
    node = a.position
    f = world.footprint
    colocated = tuple(x for x in position_index.get(node, ()) if x != aid)
    edge_present = None
    far_agents = None
    if visibility in ("1hop", "full"):
        edge_present = {}
        far_agents = {}
        for p in range(f.degree(node)):
            u = f.ports[node][p]
            present = edge_key(node, u) not in world.missing
            edge_present[p] = present
            if present:
                far_agents[p] = tuple(position_index.get(u, ()))
    alive = tuple(world.alive_ids()) if communication == "global" else None
    all_missing = None
    all_positions = None
    if visibility == "full":
        all_missing = tuple(sorted(world.missing))
        all_positions = {x: world.agents[x].position for x in world.alive_ids()}
    return Observation(
        agent_id=aid,
        round=world.round,
        node=node,
        degree=f.degree(node),
        colocated=colocated,
        last_move=a.last_move,
        edge_present=edge_present,
        far_agents=far_agents,
        alive_ids=alive,
        broadcasts=broadcasts if communication == "global" else None,
        all_missing=all_missing,
        all_positions=all_positions,
    )


def _trace_line(world: World, protocol) -> str:
    agents = []
    for aid, a in sorted(world.agents.items()):
        role, state = protocol.agent_tags(aid)
        agents.append([aid, a.position if a.alive else -1, 1 if a.alive else 0, role, state])
    rec = {
        "r": world.round,
        "miss": [list(e) for e in sorted(world.missing)],
        "agents": agents,
        "wb": world._wb_deltas,
        "ev": world._events,
    }
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def run(
    footprint: Footprint,
    placements: dict,
    protocol,
    adversary: Callable,
    max_rounds: int,
    visibility: str = "0hop",
    communication: str = "f2f",
    goal: str = "bhs",
    explore_targets: tuple = (),
    collect_trace: bool = False,
) -> Outcome:
    """Drive the round loop until detection, coverage, extinction, or timeout."""
    tvg.validate_footprint(footprint)
    bh = footprint.black_hole
    for aid, node in placements.items():
        if node == bh:
            raise ScenarioError(f"agent {aid} placed on the black hole")
        if not (0 <= node < footprint.node_count):
            raise ScenarioError(f"agent {aid} placed on unknown node {node}")

    world = World(footprint, placements)
    k = len(world.agents)
    protocol.setup(world)
    trace: Optional[list] = [] if collect_trace else None
    all_nodes = set(range(footprint.node_count))
    if bh is not None:
        all_nodes.discard(bh)
    cover_round: dict = {}
    for aid in world.agents:
        if world.visited[aid] >= all_nodes:
            cover_round[aid] = 0

    def finish(verdict, **kw) -> Outcome:
        out = Outcome(
            verdict=verdict,
            rounds_used=world.round,
            deaths=len(world.deaths),
            cover_round=dict(cover_round),
            trace_lines=trace,
            **kw,
        )
        if trace is not None:
            summary = {
                "outcome": out.verdict,
                "agent": out.agent,
                "witness": None
                if out.witness_node is None
                else [out.witness_node, out.witness_port],
                "rounds": out.rounds_used,
                "deaths": out.deaths,
            }
            trace.append(json.dumps(summary, sort_keys=True, separators=(",", ":")))
        return out

    for r in range(max_rounds):
        world.round = r
        world._events = []
        world._wb_deltas = []

        # (1) adversary fixes the missing edges before anyone observes
        intents = protocol.move_intents(world)
        view = AdversaryView(
            round=r,
            footprint=footprint,
            positions={aid: a.position for aid, a in world.agents.items()},
            alive=frozenset(world.alive_ids()),
            intents=intents,
            deaths=tuple(world.deaths),
            whiteboards=world.whiteboards,
        )
        snap = snapshot_for_round(footprint, adversary, r, view)
        world.missing = snap.missing

        # (2) communicate: everyone observes the same pre-compute state
        position_index: dict = {}
        for aid in world.alive_ids():
            position_index.setdefault(world.agents[aid].position, []).append(aid)
        broadcasts = None
        if communication == "global":
            broadcasts = {aid: protocol.public_state(aid) for aid in world.alive_ids()}
        obs = {
            aid: observe(world, aid, visibility, communication, position_index, broadcasts)
            for aid in world.alive_ids()
        }

        # (3) compute: the protocol returns one action per alive agent
        actions = protocol.step_round(world, obs)

        declares = sorted(
            (aid, act) for aid, act in actions.items() if act.kind == "declare"
        )
        if declares:
            aid, act = declares[0]
            v = world.agents[aid].position
            p = act.port
            if bh is None or neighbor_via_port(footprint, v, p) != bh:
                raise VerificationError(
                    f"agent {aid} declared ({v}, port {p}) but that is not the black hole"
                )
            world.emit({"t": "declare", "agent": aid, "node": v, "port": p})
            if trace is not None:
                trace.append(_trace_line(world, protocol))
            return finish("Solved", agent=aid, witness_node=v, witness_port=p)

        # (4) move: simultaneous resolution, then destruction
        move_intents = {}
        probe_flags = {}
        for aid, act in sorted(actions.items()):
            if act.kind == "move":
                a = world.agents[aid]
                if not (0 <= act.port < footprint.degree(a.position)):
                    raise ProtocolViolation(
                        f"agent {aid} chose invalid port {act.port} at node {a.position}"
                    )
                move_intents[aid] = act.port
                probe_flags[aid] = act.probe
        positions = {aid: world.agents[aid].position for aid in world.alive_ids()}
        new_pos, flags, arrival = resolve_moves(footprint, world.missing, positions, move_intents)
        for aid in world.alive_ids():
            a = world.agents[aid]
            if aid in move_intents:
                a.last_move = "succeeded" if flags[aid] else "failed"
                if flags[aid]:
                    old = a.position
                    a.position = new_pos[aid]
                    a.last_arrival_port = arrival[aid]
                    if a.position == bh:
                        a.alive = False
                        a.position = None
                        world.deaths.append(
                            Death(r, aid, edge_key(old, new_pos[aid]), probe_flags[aid])
                        )
                        world.emit({"t": "death", "agent": aid})
                    else:
                        world.visited[aid].add(a.position)
                        if aid not in cover_round and world.visited[aid] >= all_nodes:
                            cover_round[aid] = r
            else:
                a.last_move = "none"

        assert len(world.alive_ids()) + len(world.deaths) == k, "agent conservation broke"

        if trace is not None:
            trace.append(_trace_line(world, protocol))

        if goal == "explore" and any(t in cover_round for t in explore_targets):
            return finish("Explored")
        if not world.alive_ids():
            return finish("Failed")

    world.round = max_rounds
    return finish("TimedOut")
