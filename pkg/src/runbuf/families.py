"""Handcrafted instance families, emitted at the dependency-graph level."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotPerfectSquare
from .graphs import LabeledDepGraph, UnlabeledDepGraph


@dataclass(frozen=True)
class SticksFamily:
    labeled: LabeledDepGraph      # bidirectional complete digraph K_n
    unlabeled: UnlabeledDepGraph  # complete bipartite graph K_{n,n}


def gen_sticks(n: int) -> SticksFamily:
    """Family where every start pose collides with every goal pose."""
    if n < 1:
        raise ValueError("n must be at least 1")
    arcs = [(i, j) for i in range(n) for j in range(n) if i != j]
    edges = [(s, g) for s in range(n) for g in range(n)]
    return SticksFamily(LabeledDepGraph(n, arcs), UnlabeledDepGraph(n, edges))


def _grid_layout(m: int):
    """Lattice vertices (x, y) with 1 <= x <= m, 1 <= y <= 2m.

    Even x+y means a start vertex (so (1,1) is a start); odd means a goal.
    Returns per-partite index maps and coordinates in index order.
    """
    start_of = {}
    goal_of = {}
    start_xy = []
    goal_xy = []
    for x in range(1, m + 1):
        for y in range(1, 2 * m + 1):
            if (x + y) % 2 == 0:
                start_of[(x, y)] = len(start_xy)
                start_xy.append((float(x), float(y)))
            else:
                goal_of[(x, y)] = len(goal_xy)
                goal_xy.append((float(x), float(y)))
    return start_of, goal_of, start_xy, goal_xy


def gen_grid(m: int) -> UnlabeledDepGraph:
    """Dependency grid D(m, 2m): m columns, 2m rows, orthogonal edges.

    Parity of x+y fixes the partite set, giving m^2 starts and m^2 goals.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    start_of, goal_of, _, _ = _grid_layout(m)
    edges = []
    for (x, y), s in start_of.items():
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            g = goal_of.get((nx, ny))
            if g is not None:
                edges.append((s, g))
    return UnlabeledDepGraph(m * m, edges)


def grid_embedding(m: int):
    """Lattice coordinates aligned with gen_grid's vertex indexing.

    Returns (start_xy, goal_xy, r) with r = 0.5: every edge spans distance
    exactly 1 < 4r, so a median strip of half-width 2r = 1 is guaranteed to
    catch all edges that would cross between the two sides.
    """
    _, _, start_xy, goal_xy = _grid_layout(m)
    return start_xy, goal_xy, 0.5


def gen_cycle(n: int) -> LabeledDepGraph:
    """Cycle family: object i depends on i-1 and i+sqrt(n), both mod n."""
    m = math.isqrt(n)
    if m < 2 or m * m != n:
        raise NotPerfectSquare(f"n must be a perfect square >= 4, got {n}")
    arcs = []
    for i in range(n):
        arcs.append((i, (i - 1) % n))
        arcs.append((i, (i + m) % n))
    return LabeledDepGraph(n, arcs)
