"""Whiteboard-assisted depth-first walker.

The walker cycles through ports at each node: on first arrival it records the
entry port as the node's parent and leaves through ``(prt_in + 1) mod deg``;
re-entering an already-visited node bounces straight back; when the scan wraps
around to the parent port the walker backtracks.  A walk rooted by ``prt_in = -1``
is exhausted once a backtrack-style arrival at the root wraps its scan to port 0.

Two extra maneuvers support dynamic edges: ``skip_edge`` treats a missing port
as explored-and-bounced, and ``restart_dfs`` abandons the walk for a fresh one
(higher label) rooted at the current node.  Walkers that never deviate simply
retry the same port instead.

State transitions are pure; callers own positions and whiteboard storage.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional


class InconsistentWhiteboard(RuntimeError):
    """A backtrack arrival found no parent record for the walker's label."""


@dataclass(frozen=True)
class DfsState:
    mode: str = "explore"  # 'explore' | 'backtrack'
    prt_in: int = -1       # arrival port at the current node; -1 at a DFS root
    dfs_label: int = 1     # counts restarts; stale whiteboard entries have lower labels
    root: int = 0
    bounced: bool = False  # last move was a bounce-back; process arrival as a backtrack
    done: bool = False     # root scan wrapped: nothing left to explore


@dataclass(frozen=True)
class Step:
    """One computed move: leave through ``port`` (None = stay put).

    ``kind`` is 'probe' for moves into possibly-unexplored territory (the ones
    that need caution when a black hole may exist) and 'return' for bounces and
    backtracks into nodes the walk already committed.  ``mark`` tells the caller
    to write/overwrite this node's parent record before moving.
    """

    port: Optional[int]
    kind: Optional[str]
    mark: bool = False
    done: bool = False


def dfs_step(s: DfsState, degree: int, entry: Optional[int]) -> tuple[DfsState, Step]:
    """Process arrival at the current node and compute the outgoing move.

    ``entry`` is the parent port recorded at this node for the walker's current
    label (-1 at the root of the current walk), or None when unvisited/stale.
    """
    if s.done:
        return s, Step(None, None, done=True)

    if s.mode == "explore" and not s.bounced:
        if s.prt_in == -1:
            # start (or restart) at the root: scan begins at port 0
            if degree == 0:
                return replace(s, done=True), Step(None, None, done=True)
            return s, Step(0, "probe", mark=entry is None)
        if entry is not None:
            # already visited: bounce straight back where we came from
            return replace(s, bounced=True), Step(s.prt_in, "return")
        first = s.prt_in
        prt_out = (s.prt_in + 1) % degree
        if prt_out == first:
            # degree-1 dead end: the only way out is back to the parent
            return replace(s, mode="backtrack"), Step(prt_out, "return", mark=True)
        return s, Step(prt_out, "probe", mark=True)

    # backtrack branch: also handles the arrival after a bounce-back
    if entry is None:
        raise InconsistentWhiteboard(
            f"backtrack arrival with no parent record (label {s.dfs_label})"
        )
    prt_out = (s.prt_in + 1) % degree
    if entry == -1:
        # at the root of the current walk
        if prt_out == 0:
            return replace(s, bounced=False, done=True), Step(None, None, done=True)
        return replace(s, bounced=False, mode="explore"), Step(prt_out, "probe")
    if prt_out == entry:
        return replace(s, bounced=False, mode="backtrack"), Step(prt_out, "return")
    return replace(s, bounced=False, mode="explore"), Step(prt_out, "probe")


def skip_edge(s: DfsState, degree: int, entry: Optional[int], blocked_port: int) -> tuple[DfsState, Step]:
    """Advance past a missing port as if it had been explored and bounced.

    Only 'probe' moves are skippable.  At a degree-1 node there is nothing to
    advance to, so the walker stays and retries.  If the scan wraps to port 0
    at the root the walk is exhausted (callers restart deviating walkers).
    """
    if degree == 1:
        return s, Step(None, None)
    if entry is None:
        raise InconsistentWhiteboard("skip at an unmarked node")
    prt_out = (blocked_port + 1) % degree
    if entry == -1:
        if prt_out == 0:
            return replace(s, done=True), Step(None, None, done=True)
        return replace(s, mode="explore"), Step(prt_out, "probe")
    if prt_out == entry:
        return replace(s, mode="backtrack"), Step(prt_out, "return")
    return replace(s, mode="explore"), Step(prt_out, "probe")


def restart_dfs(s: DfsState, at_node: int) -> DfsState:
    """Begin a new walk rooted here: bump the label so old records look unvisited."""
    return DfsState(mode="explore", prt_in=-1, dfs_label=s.dfs_label + 1, root=at_node)


def arrive(s: DfsState, entry_port: int) -> DfsState:
    """Record the port through which the walker just entered its new node."""
    return replace(s, prt_in=entry_port)
