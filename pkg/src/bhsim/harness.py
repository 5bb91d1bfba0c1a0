"""Scenario configuration, graph generators, runner, and trace verification.

Scenario files are flat key=value text, one key per line, lists comma
separated.  Example::

    algorithm=onehop4
    graph=ring
    n=6
    bh=3
    root=0
    adversary=greedy_staller
    seed=7

Exit codes used by the CLI: 0 solved/explored, 2 timed out, 3 all agents
dead, 4 configuration error, 5 verification failure.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from . import adversaries, engine, tvg
from .engine import Outcome, ScenarioError
from .explore import SingleWalkerProtocol, TwoWalkerProtocol
from .globalsearch import GlobalSearchProtocol
from .onehop import OneHopProtocol
from .tvg import Footprint, make_footprint, neighbor_via_port, validate_footprint

ALGORITHMS = ("dfs1", "explore2", "onehop4", "onehop3", "global")
ADVERSARIES = ("null", "random_legal", "greedy_staller", "thm1", "thm2", "freeze")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def generate_graph(kind: str, bh: Optional[int] = None, **params) -> Footprint:
    """Deterministic graph generators with canonical port labels."""
    if kind == "ring":
        n = params["n"]
        if n < 3:
            raise ScenarioError("ring needs n >= 3")
        edges = [(i, (i + 1) % n) for i in range(n)]
    elif kind == "star":
        n = params["n"]
        if n < 2:
            raise ScenarioError("star needs n >= 2")
        edges = [(0, i) for i in range(1, n)]
    elif kind == "grid":
        a, b = params["a"], params["b"]
        if a < 1 or b < 1 or a * b < 2:
            raise ScenarioError("grid needs at least 2 nodes")
        edges = []
        for i in range(a):
            for j in range(b):
                v = i * b + j
                if j + 1 < b:
                    edges.append((v, v + 1))
                if i + 1 < a:
                    edges.append((v, v + b))
        n = a * b
    elif kind == "random_connected":
        n, m, seed = params["n"], params["m"], params.get("seed", 0)
        if m < n - 1 or m > n * (n - 1) // 2:
            raise ScenarioError(f"random_connected: m={m} infeasible for n={n}")
        rng = Random(seed)
        order = list(range(n))
        rng.shuffle(order)
        edges = set()
        for i in range(1, n):  # random spanning tree first
            edges.add(tvg.edge_key(order[i], order[rng.randrange(i)]))
        rest = [
            (u, v)
            for u in range(n)
            for v in range(u + 1, n)
            if (u, v) not in edges
        ]
        rng.shuffle(rest)
        for e in rest:
            if len(edges) >= m:
                break
            edges.add(e)
        edges = sorted(edges)
    elif kind == "clique_chain":
        f, _ = adversaries.build_thm1_graph(params["p"])
        if bh is not None and bh != f.black_hole:
            raise ScenarioError("clique_chain fixes its own hostile node")
        return f
    elif kind == "thm2_chain":
        f, _, _ = adversaries.build_thm2_graph(params["p"])
        return f
    else:
        raise ScenarioError(f"unknown graph kind {kind!r}")
    f = make_footprint(n, edges, black_hole=bh)
    validate_footprint(f)
    return f


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    algorithm: str
    footprint: Footprint
    adversary_kind: str = "null"
    seed: int = 0
    root: Optional[int] = None
    placements: Optional[list] = None
    max_rounds: Optional[int] = None
    strict: bool = True
    explore_target: str = "any"
    graph_meta: Optional[dict] = None
    name: str = "scenario"


_INT_KEYS = {"n", "m", "bh", "p", "a", "b", "gseed", "root", "seed", "max_rounds"}


def parse_config(text: str, name: str = "scenario", base_dir: str = ".") -> Scenario:
    kv = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{name}:{lineno}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    algorithm = kv.pop("algorithm", None)
    if algorithm not in ALGORITHMS:
        raise ScenarioError(f"{name}: algorithm must be one of {ALGORITHMS}")

    def geti(key, default=None):
        if key not in kv:
            return default
        try:
            return int(kv.pop(key))
        except ValueError:
            raise ScenarioError(f"{name}: {key} must be an integer")

    meta = None
    if "graph_file" in kv:
        path = kv.pop("graph_file")
        if not path.startswith("/"):
            path = f"{base_dir}/{path}"
        footprint = tvg.read_graph_file(path)
    else:
        kind = kv.pop("graph", None)
        if kind is None:
            raise ScenarioError(f"{name}: need graph= or graph_file=")
        params = {}
        for pk in ("n", "m", "p", "a", "b"):
            v = geti(pk)
            if v is not None:
                params[pk] = v
        gseed = geti("gseed", 0)
        if kind == "random_connected":
            params["seed"] = gseed
        bh = geti("bh")
        if bh is not None and bh < 0:
            bh = None
        if kind == "clique_chain":
            footprint, meta = adversaries.build_thm1_graph(params["p"])
        elif kind == "thm2_chain":
            footprint, meta, auto_place = adversaries.build_thm2_graph(params["p"])
            if kv.get("placements") == "auto":
                kv["placements"] = ",".join(
                    str(auto_place[a]) for a in sorted(auto_place)
                )
        else:
            footprint = generate_graph(kind, bh=bh, **params)

    placements = None
    if "placements" in kv:
        placements = [int(x) for x in kv.pop("placements").split(",") if x != ""]

    scenario = Scenario(
        algorithm=algorithm,
        footprint=footprint,
        adversary_kind=kv.pop("adversary", "null"),
        seed=geti("seed", 0),
        root=geti("root"),
        placements=placements,
        max_rounds=geti("max_rounds"),
        strict=kv.pop("strict", "1") not in ("0", "false"),
        explore_target=kv.pop("explore_target", "any"),
        graph_meta=meta,
        name=name,
    )
    if kv:
        raise ScenarioError(f"{name}: unknown keys {sorted(kv)}")
    if scenario.adversary_kind not in ADVERSARIES:
        raise ScenarioError(f"{name}: adversary must be one of {ADVERSARIES}")
    return scenario


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        text = fh.read()
    base_dir = path.rsplit("/", 1)[0] if "/" in path else "."
    return parse_config(text, name=path, base_dir=base_dir)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def build_adversary(scenario: Scenario):
    kind = scenario.adversary_kind
    f = scenario.footprint
    if kind == "null":
        return adversaries.NullAdversary()
    if kind == "random_legal":
        return adversaries.RandomLegalAdversary(f, seed=scenario.seed)
    if kind == "greedy_staller":
        return adversaries.GreedyStaller(f)
    if kind == "freeze":
        return adversaries.FreezeOnFirstWait(f, watch=1)
    if kind in ("thm1", "thm2"):
        if scenario.graph_meta is None:
            raise ScenarioError(f"adversary {kind} needs its matching chain graph")
        if kind == "thm1":
            return adversaries.thm1_adversary(scenario.graph_meta)
        return adversaries.thm2_adversary(scenario.graph_meta)
    raise ScenarioError(f"unknown adversary {kind!r}")


def default_max_rounds(scenario: Scenario) -> int:
    m = scenario.footprint.m
    if scenario.algorithm in ("onehop4", "onehop3"):
        return 512 * m * m
    if scenario.algorithm == "global":
        dbh = scenario.footprint.degree(scenario.footprint.black_hole)
        return 512 * dbh * m * m
    return 64 * m * m


def run_scenario(scenario: Scenario, trace_path: Optional[str] = None, collect_trace: bool = False) -> Outcome:
    f = scenario.footprint
    alg = scenario.algorithm
    bh = f.black_hole

    if alg in ("onehop4", "onehop3", "global") and bh is None:
        raise ScenarioError(f"{alg} needs a black hole in the footprint")

    if alg in ("dfs1", "explore2", "onehop4", "onehop3"):
        if scenario.root is None:
            raise ScenarioError(f"{alg} needs root=")
        root = scenario.root
        if alg == "dfs1":
            placements = {1: root}
            protocol = SingleWalkerProtocol(1)
            visibility, communication, goal = "1hop", "f2f", "explore"
            targets = (1,)
        elif alg == "explore2":
            placements = {1: root, 2: root}
            protocol = TwoWalkerProtocol(1, 2)
            visibility, communication, goal = "1hop", "f2f", "explore"
            targets = {"any": (1, 2), "g1": (1,), "g2": (2,)}[scenario.explore_target]
        else:
            k = 4 if alg == "onehop4" else 3
            placements = {i: root for i in range(1, k + 1)}
            protocol = OneHopProtocol(tuple(range(1, k + 1)))
            visibility, communication, goal = "1hop", "f2f", "bhs"
            targets = ()
    else:  # global
        if not scenario.placements:
            raise ScenarioError("global needs placements=")
        placements = {i + 1: node for i, node in enumerate(scenario.placements)}
        k = len(placements)
        dbh = f.degree(bh)
        if scenario.strict and k != dbh + 2:
            raise ScenarioError(
                f"global needs {dbh + 2} agents for a degree-{dbh} black hole, got {k}"
            )
        protocol = GlobalSearchProtocol(tuple(placements))
        visibility, communication, goal = "0hop", "global", "bhs"
        targets = ()

    adversary = build_adversary(scenario)
    max_rounds = scenario.max_rounds or default_max_rounds(scenario)
    outcome = engine.run(
        f,
        placements,
        protocol,
        adversary,
        max_rounds=max_rounds,
        visibility=visibility,
        communication=communication,
        goal=goal,
        explore_targets=targets,
        collect_trace=collect_trace or trace_path is not None,
    )
    if outcome.verdict == "Solved":
        # ground-truth check before anything is written anywhere
        if neighbor_via_port(f, outcome.witness_node, outcome.witness_port) != bh:
            raise engine.VerificationError("declared witness fails the footprint check")
    if trace_path is not None:
        with open(trace_path, "w") as fh:
            fh.write("\n".join(outcome.trace_lines) + "\n")
    return outcome


EXIT_CODES = {"Solved": 0, "Explored": 0, "TimedOut": 2, "Failed": 3}


# ---------------------------------------------------------------------------
# Offline trace verification
# ---------------------------------------------------------------------------

@dataclass
class TraceReport:
    violations: list = field(default_factory=list)
    rounds: int = 0
    outcome: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, round_no, code, detail):
        self.violations.append({"round": round_no, "code": code, "detail": detail})


def verify_trace(trace_path: str, graph_path: str) -> TraceReport:
    """Replay invariant checks offline against the ground-truth footprint."""
    f = tvg.read_graph_file(graph_path)
    report = TraceReport()
    records = []
    with open(trace_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                report.add(None, "parse-error", f"line {lineno} is not valid JSON")
                return report

    prev_state: dict = {}
    expected_round = 0
    k = None
    dead_ever: set = set()
    for rec in records:
        if "outcome" in rec:
            report.outcome = rec
            if rec["outcome"] == "Solved":
                v, p = rec["witness"]
                if f.black_hole is None or neighbor_via_port(f, v, p) != f.black_hole:
                    report.add(None, "unsound-declaration", f"witness ({v},{p})")
            continue
        r = rec["r"]
        if r != expected_round:
            report.add(r, "round-gap", f"expected round {expected_round}")
        expected_round = r + 1
        report.rounds = r + 1

        miss = [tvg.edge_key(u, v) for u, v in rec["miss"]]
        if len(miss) > tvg.ELL:
            report.add(r, "adversary-budget", f"{len(miss)} edges missing")
        for e in miss:
            if e not in f._edge_set:
                report.add(r, "adversary-unknown-edge", str(e))
        if miss and not tvg.is_connected(
            f.node_count, [e for e in f.edges if e not in set(miss)]
        ):
            report.add(r, "adversary-disconnects", str(miss))

        if k is None:
            k = len(rec["agents"])
        elif len(rec["agents"]) != k:
            report.add(r, "agent-count-changed", f"{len(rec['agents'])} != {k}")
        for aid, node, alive, _role, _state in rec["agents"]:
            alive = bool(alive)
            if aid in dead_ever:
                if alive:
                    report.add(r, "resurrection", f"agent {aid}")
                elif node != -1:
                    report.add(r, "dead-agent-acted", f"agent {aid} at node {node}")
            if not alive:
                dead_ever.add(aid)
                if node != -1:
                    report.add(r, "dead-agent-acted", f"agent {aid} at node {node}")
            else:
                if node == -1 or not (0 <= node < f.node_count):
                    report.add(r, "bad-position", f"agent {aid} at {node}")
                elif f.black_hole is not None and node == f.black_hole:
                    report.add(r, "agent-on-black-hole", f"agent {aid}")
                prev = prev_state.get(aid)
                if prev is not None and prev != node:
                    if not f.has_edge(prev, node):
                        report.add(r, "teleport", f"agent {aid}: {prev} -> {node}")
                    elif tvg.edge_key(prev, node) in set(miss):
                        report.add(r, "moved-missing-edge", f"agent {aid}")
                prev_state[aid] = node
    return report
