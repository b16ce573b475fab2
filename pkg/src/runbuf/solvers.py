"""MRB solvers: exhaustive oracle, subset DP, iterative-deepening DFS,
best-first search for unlabeled graphs, and the separator-based planner.

All exact solvers return a SolveResult whose witness ordering re-simulates to
exactly the claimed MRB. The separator planner is an upper-bound method: its
plan deliberately buffers separator vertices, its mrb is that plan's replayed
peak, and its witness is the goal fill sequence of the plan.
"""

from __future__ import annotations

import itertools
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SolveTimeout, TooLarge
from .graphs import LabeledDepGraph, UndirectedGraph, UnlabeledDepGraph
from .planning import (START, Action, ExecutionTrace, Plan, _Slots,
                       simulate_labeled, simulate_unlabeled)

_DEADLINE_STRIDE = 2048


@dataclass(frozen=True)
class SolveResult:
    mrb: int
    ordering: tuple[int, ...]
    plan: Plan
    trace: object
    stats: dict = field(default_factory=dict)


class _Deadline:
    """Cooperative timeout: cheap to poll, raises SolveTimeout when expired."""

    def __init__(self, deadline):
        self.deadline = deadline
        self.tick = 0

    def poll(self):
        if self.deadline is None:
            return
        self.tick += 1
        if self.tick % _DEADLINE_STRIDE == 0 and time.monotonic() > self.deadline:
            raise SolveTimeout("solver deadline expired")


def _bits(x):
    while x:
        b = x & -x
        yield b.bit_length() - 1
        x ^= b


def _popcount(x):
    return bin(x).count("1")


# ---------------------------------------------------------------------------
# exhaustive oracle

def _labeled_peak(dep, phi, cutoff):
    """Transient peak of an ordering, or cutoff as soon as it is reached."""
    moved = 0
    buffered = 0
    occ = 0
    peak = 0
    for i in phi:
        moved |= 1 << i
        if dep[i] & ~moved:
            buffered |= 1 << i
            occ += 1
            if occ > peak:
                peak = occ
                if peak >= cutoff:
                    return cutoff
        rest = buffered
        while rest:
            b = rest & -rest
            o = b.bit_length() - 1
            rest ^= b
            if not (dep[o] & ~moved):
                buffered ^= b
                occ -= 1
    return peak


def _unlabeled_peak(g, order, cutoff):
    """Peak of the rule-based unlabeled simulation, cut off early."""
    cleared = 0
    occ = 0
    peak = 0
    full = (1 << g.n) - 1
    goal_nbr = g.goal_nbr
    for t, v in enumerate(order):
        todo = goal_nbr[v] & ~cleared
        if todo:
            k = _popcount(todo)
            cleared |= todo
            occ += k - 1
            if occ > peak:
                peak = occ
                if peak >= cutoff:
                    return cutoff
        elif occ > 0:
            occ -= 1
        else:
            free = full & ~cleared
            s = None
            for w in order[t + 1:]:
                cand = goal_nbr[w] & free
                if cand:
                    s = cand & -cand
                    break
            if s is None:
                s = free & -free
            cleared |= s
    return peak


def solve_brute(g, deadline=None) -> SolveResult:
    """Exact minimum over all orderings; lexicographically smallest witness.

    Labeled graphs enumerate object orderings, unlabeled graphs enumerate goal
    fill orders. Guarded at n <= 10.
    """
    if g.n > 10:
        raise TooLarge("solve_brute is limited to n <= 10")
    t0 = time.perf_counter()
    dl = _Deadline(deadline)
    labeled = isinstance(g, LabeledDepGraph)
    if not labeled and not isinstance(g, UnlabeledDepGraph):
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    best = g.n + 1
    witness = None
    nodes = 0
    for perm in itertools.permutations(range(g.n)):
        dl.poll()
        nodes += 1
        peak = (_labeled_peak(g.dep, perm, best) if labeled
                else _unlabeled_peak(g, perm, best))
        if peak < best:
            best = peak
            witness = perm
            if best == 0:
                break
    sim = simulate_labeled if labeled else simulate_unlabeled
    trace, plan = sim(g, witness)
    assert trace.max_rb == best
    return SolveResult(best, witness, plan, trace,
                       {"nodes_expanded": nodes, "states_stored": 0,
                        "wall_time": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# subset dynamic programming (labeled)

def _blocked_masks(n, dep):
    """For every subset S: the mask of objects in S that still block someone
    outside S, i.e. the buffered set at rest after moving S."""
    size = 1 << n
    subsets = np.arange(size, dtype=np.uint32)
    not_s = subsets ^ np.uint32(size - 1)
    bmask = np.zeros(size, dtype=np.uint32)
    for o in range(n):
        inside = (subsets >> np.uint32(o)) & np.uint32(1)
        blocking = (np.uint32(dep[o]) & not_s) != 0
        bmask |= (inside.astype(bool) & blocking).astype(np.uint32) << np.uint32(o)
    return bmask


def _popcount_array(a):
    a = a.astype(np.uint32)
    a = a - ((a >> 1) & np.uint32(0x55555555))
    a = (a & np.uint32(0x33333333)) + ((a >> 2) & np.uint32(0x33333333))
    a = (a + (a >> 4)) & np.uint32(0x0F0F0F0F)
    return ((a * np.uint32(0x01010101)) >> np.uint32(24)).astype(np.uint8)


def solve_dp(g: LabeledDepGraph, deadline=None) -> SolveResult:
    """Exact MRB by dynamic programming over moved-object subsets.

    State value for S is the best achievable peak over orderings of S; the
    transition removing last object o costs max(value(S\\o), |blocked(S)|,
    |blocked(S\\o)| + tc) where tc is 1 iff o is still blocked in S. Memory
    guard at n = 24.
    """
    if not isinstance(g, LabeledDepGraph):
        raise TypeError("solve_dp expects a labeled graph")
    if g.n > 24:
        raise TooLarge("solve_dp is limited to n <= 24")
    t0 = time.perf_counter()
    n = g.n
    dl = _Deadline(deadline)
    size = 1 << n
    bmask = _blocked_masks(n, g.dep)
    bsize = _popcount_array(bmask)
    pc = _popcount_array(np.arange(size, dtype=np.uint32))
    order = np.argsort(pc, kind="stable").astype(np.uint32)
    bounds = np.searchsorted(pc[order], np.arange(n + 2))
    value = np.full(size, 255, dtype=np.uint8)
    parent = np.full(size, -1, dtype=np.int8)
    value[0] = 0
    for layer in range(1, n + 1):
        members = order[bounds[layer]:bounds[layer + 1]]
        dl.poll()
        for o in range(n):
            with_o = members[(members >> np.uint32(o)) & np.uint32(1) == 1]
            if with_o.size == 0:
                continue
            prev = with_o ^ np.uint32(1 << o)
            tc = ((bmask[with_o] >> np.uint32(o)) & np.uint32(1)).astype(np.uint8)
            cand = np.maximum(value[prev], bsize[with_o])
            cand = np.maximum(cand, bsize[prev] + tc)
            better = cand < value[with_o]
            if better.any():
                upd = with_o[better]
                value[upd] = cand[better]
                parent[upd] = o
    full = size - 1
    mrb = int(value[full])
    ordering = []
    s = full
    while s:
        o = int(parent[s])
        ordering.append(o)
        s ^= 1 << o
    ordering.reverse()
    trace, plan = simulate_labeled(g, tuple(ordering))
    assert trace.max_rb == mrb
    return SolveResult(mrb, tuple(ordering), plan, trace,
                       {"nodes_expanded": size - 1, "states_stored": size,
                        "wall_time": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# iterative-deepening depth-first search

def _dfdp_labeled(g, k_start, dl):
    n = g.n
    dep = g.dep
    rdep = g.rdep
    full = (1 << n) - 1
    nodes = 0
    states = 0

    def blocked_after(s_mask):
        m = 0
        for o in _bits(s_mask):
            if dep[o] & ~s_mask:
                m |= 1 << o
        return m

    for k in itertools.count(max(0, k_start)):
        failed = set()
        path = []

        def dfs(s_mask, bmask):
            nonlocal nodes
            dl.poll()
            nodes += 1
            if s_mask == full:
                return True
            bsz = _popcount(bmask)
            direct = []
            to_buffer = []
            for i in _bits(full & ~s_mask):
                if dep[i] & ~(s_mask | (1 << i)):
                    if bsz + 1 <= k:
                        # prefer moves that unblock many buffered objects
                        unblocks = _popcount(rdep[i] & bmask)
                        to_buffer.append((-unblocks, i))
                else:
                    direct.append(i)
            to_buffer.sort()
            for i in direct + [i for _, i in to_buffer]:
                s2 = s_mask | (1 << i)
                if s2 in failed:
                    continue
                b2 = bmask | (1 << i)
                drop = 0
                for o in _bits(b2):
                    if not (dep[o] & ~s2):
                        drop |= 1 << o
                b2 &= ~drop
                if dfs(s2, b2):
                    path.append(i)
                    return True
                failed.add(s2)
            return False

        if dfs(0, 0):
            path.reverse()
            states += len(failed)
            return k, tuple(path), nodes, states
        states += len(failed)


def _reduce_free_goals(g, cleared, filled, occ, fills, all_goals):
    """Fill every goal with at most one uncleared neighbor (hand-over for one,
    buffer-take at positive occupancy for zero); loops to a fixed point.
    Deficit goals at occupancy zero stay open as branch points. Occupancy
    never rises, so this is always safe under any cap."""
    goal_nbr = g.goal_nbr
    progress = True
    while progress:
        progress = False
        for v in _bits(all_goals & ~filled):
            todo = goal_nbr[v] & ~cleared
            cnt = _popcount(todo)
            if cnt == 1:
                cleared |= todo
                filled |= 1 << v
                fills.append(v)
                progress = True
            elif cnt == 0 and occ > 0:
                filled |= 1 << v
                occ -= 1
                fills.append(v)
                progress = True
    return cleared, filled, occ


def _dfdp_unlabeled(g, k_start, dl):
    n = g.n
    goal_nbr = g.goal_nbr
    full = (1 << n) - 1
    nodes = 0
    states = 0

    for k in itertools.count(max(0, k_start)):
        failed = set()
        order = []

        def dfs(cleared, filled, occ):
            nonlocal nodes
            dl.poll()
            nodes += 1
            fills = []
            cleared, filled, occ = _reduce_free_goals(
                g, cleared, filled, occ, fills, full)
            if filled == full:
                order.extend(reversed(fills))
                return True
            key = (cleared, filled)
            if key in failed:
                return False
            # fills needing several clears, cheapest first
            branch = []
            deficit = []
            for v in _bits(full & ~filled):
                todo = goal_nbr[v] & ~cleared
                cnt = _popcount(todo)
                if cnt == 0:
                    deficit.append(v)  # occ == 0 here, else reduced above
                elif occ + cnt - 1 <= k:
                    branch.append((cnt, v))
            branch.sort()
            for cnt, v in branch:
                if dfs(cleared | goal_nbr[v], filled | (1 << v), occ + cnt - 1):
                    order.append(v)
                    order.extend(reversed(fills))
                    return True
            for v in deficit:
                for s in _bits(full & ~cleared):
                    if dfs(cleared | (1 << s), filled | (1 << v), occ):
                        order.append(v)
                        order.extend(reversed(fills))
                        return True
            failed.add(key)
            return False

        if dfs(0, 0, 0):
            order.reverse()
            states += len(failed)
            return k, tuple(order), nodes, states
        states += len(failed)


def solve_dfdp(g, k_start: int = 0, deadline=None) -> SolveResult:
    """Iterative deepening on the cap k: depth-first feasibility checks with
    per-k memoization of failed states; the first feasible k is the MRB."""
    t0 = time.perf_counter()
    dl = _Deadline(deadline)
    if isinstance(g, LabeledDepGraph):
        k, ordering, nodes, states = _dfdp_labeled(g, k_start, dl)
        trace, plan = simulate_labeled(g, ordering)
    elif isinstance(g, UnlabeledDepGraph):
        k, ordering, nodes, states = _dfdp_unlabeled(g, k_start, dl)
        trace, plan = simulate_unlabeled(g, ordering)
    else:
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    assert trace.max_rb == k
    return SolveResult(k, ordering, plan, trace,
                       {"nodes_expanded": nodes, "states_stored": states,
                        "wall_time": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# best-first search over filled/cleared states (unlabeled)

def solve_pqs(g: UnlabeledDepGraph, deadline=None) -> SolveResult:
    """Best-first minimax search over (cleared starts, filled goals) states.

    Expansion fills all free goals as one macro step, then branches on filling
    each non-free goal, clearing each start, and the zero-occupancy hand-over
    fills. A child reached with a smaller peak is reparented; states never
    beating the incumbent are pruned. The first finished state popped is
    optimal.
    """
    if not isinstance(g, UnlabeledDepGraph):
        raise TypeError("solve_pqs expects an unlabeled graph")
    import heapq

    t0 = time.perf_counter()
    dl = _Deadline(deadline)
    n = g.n
    full = (1 << n) - 1
    goal_nbr = g.goal_nbr
    start_state = (0, 0)
    best_cost = {start_state: 0}
    parent = {start_state: (None, ())}
    heap = [(0, 0, start_state)]
    counter = 1
    nodes = 0
    incumbent = n + 1

    def push(state, cost, par, fills):
        nonlocal counter, incumbent
        if cost >= incumbent:
            return
        old = best_cost.get(state)
        if old is not None and old <= cost:
            return
        best_cost[state] = cost
        parent[state] = (par, fills)
        heapq.heappush(heap, (cost, counter, state))
        counter += 1
        if state[1] == full and cost < incumbent:
            incumbent = cost

    goal_state = None
    while heap:
        dl.poll()
        cost, _, state = heapq.heappop(heap)
        if cost > best_cost.get(state, n + 1):
            continue  # stale heap entry
        cleared, filled = state
        if filled == full:
            goal_state = state
            break
        nodes += 1
        occ = _popcount(cleared) - _popcount(filled)
        # macro step: fill all free goals at once
        fills = []
        c2, f2, _ = _reduce_free_goals(g, cleared, filled, occ, fills, full)
        if fills:
            push((c2, f2), cost, state, tuple(fills))
            continue
        for v in _bits(full & ~filled):
            todo = goal_nbr[v] & ~cleared
            cnt = _popcount(todo)
            if cnt == 0:
                # occupancy is zero here: hand over from any uncleared start
                for s in _bits(full & ~cleared):
                    push((cleared | (1 << s), filled | (1 << v)),
                         cost, state, (v,))
            else:
                peak = occ + cnt - 1
                push((cleared | todo | goal_nbr[v], filled | (1 << v)),
                     max(cost, peak), state, (v,))
        for s in _bits(full & ~cleared):
            push((cleared | (1 << s), filled), max(cost, occ + 1), state, ())

    assert goal_state is not None
    mrb = best_cost[goal_state]
    fills = []
    st = goal_state
    while st is not None:
        par, step_fills = parent[st]
        fills.extend(reversed(step_fills))
        st = par
    fills.reverse()
    trace, plan = simulate_unlabeled(g, tuple(fills))
    assert trace.max_rb == mrb
    return SolveResult(mrb, tuple(fills), plan, trace,
                       {"nodes_expanded": nodes, "states_stored": len(best_cost),
                        "wall_time": time.perf_counter() - t0})


# ---------------------------------------------------------------------------
# separators

@dataclass(frozen=True)
class SeparatorSplit:
    """Vertex partition A | C | B with no edge joining A and B; the deltas
    are (#goals - #starts) per side for start/goal graphs, zero otherwise."""
    A: tuple[int, ...]
    B: tuple[int, ...]
    C: tuple[int, ...]
    delta_A: int
    delta_B: int


def _geometry_pair(geometry):
    """Accept (centers, radius) or a geometric instance; centers are listed
    start poses first, then goal poses, matching pose-vertex numbering."""
    if geometry is None:
        return None
    if hasattr(geometry, "start") and hasattr(geometry, "goal"):
        return (list(geometry.start.poses) + list(geometry.goal.poses),
                geometry.start.radius)
    centers, radius = geometry
    return list(centers), float(radius)


def _strip_separator(centers, radius, total):
    """Median strip of width four radii along the axis giving the smallest
    cut; discs on opposite sides are more than a diameter apart, so no edge
    crosses. A median strip leaves at most half the vertices on each side."""
    band = 2.0 * radius
    best = None
    for axis in (0, 1):
        vals = [c[axis] for c in centers]
        med = statistics.median(vals)
        a = [u for u in range(total) if vals[u] < med - band]
        b = [u for u in range(total) if vals[u] > med + band]
        c = [u for u in range(total) if abs(vals[u] - med) <= band]
        key = (len(c), max(len(a), len(b)))
        if best is None or key < best[0]:
            best = (key, a, b, c)
    _, a, b, c = best
    return a, b, c


def _components(adj, total, excluded):
    """Connected components outside the excluded mask, each sorted, listed by
    their smallest vertex."""
    seen = excluded
    comps = []
    for u in range(total):
        if seen >> u & 1:
            continue
        seen |= 1 << u
        stack = [u]
        comp = []
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in _bits(adj[x] & ~seen):
                seen |= 1 << y
                stack.append(y)
        comps.append(sorted(comp))
    return comps


def _pack_two_bins(comps, cap):
    """First assignment (by component-subset mask) putting every component in
    one of two bins with both bin sizes at most cap, or None."""
    sizes = [len(c) for c in comps]
    rest = sum(sizes)
    for mask in range(1 << len(comps)):
        a = sum(sz for i, sz in enumerate(sizes) if mask >> i & 1)
        if a <= cap and rest - a <= cap:
            side_a = sorted(v for i, c in enumerate(comps) if mask >> i & 1 for v in c)
            side_b = sorted(v for i, c in enumerate(comps) if not mask >> i & 1 for v in c)
            return side_a, side_b
    return None


def _greedy_bins(comps, cap):
    order = sorted(range(len(comps)), key=lambda i: (-len(comps[i]), comps[i][0]))
    bins = ([], [])
    sizes = [0, 0]
    for i in order:
        j = 0 if sizes[0] <= sizes[1] else 1
        bins[j].extend(comps[i])
        sizes[j] += len(comps[i])
    if max(sizes) <= cap:
        return sorted(bins[0]), sorted(bins[1])
    return None


def _exhaustive_separator(adj, total):
    """Smallest cut set (ties by vertex tuple) whose removal packs into two
    sides of at most 2/3 of the vertices each."""
    cap = 2 * total / 3
    for csize in range(total + 1):
        for comb in itertools.combinations(range(total), csize):
            cmask = 0
            for u in comb:
                cmask |= 1 << u
            packing = _pack_two_bins(_components(adj, total, cmask), cap)
            if packing is not None:
                return packing[0], packing[1], list(comb)
    raise AssertionError("unreachable: the full vertex set always packs")


def _bfs_levels(adj, source):
    levels = [[source]]
    seen = 1 << source
    while True:
        nxt = 0
        for x in levels[-1]:
            nxt |= adj[x] & ~seen
        if not nxt:
            return levels
        seen |= nxt
        levels.append(list(_bits(nxt)))


def _bfs_separator(adj, total):
    """Heuristic cut for big graphs: whole components packed into two bins
    when possible, otherwise the most balanced breadth-first level cut of the
    largest component (level edges only join adjacent levels)."""
    cap = 2 * total / 3
    comps = _components(adj, total, 0)
    if len(comps) > 1:
        packing = (_pack_two_bins(comps, cap) if len(comps) <= 16
                   else _greedy_bins(comps, cap))
        if packing is not None:
            return packing[0], packing[1], []
    comps.sort(key=lambda c: (-len(c), c[0]))
    big = comps[0]
    others = sorted(v for c in comps[1:] for v in c)
    levels = _bfs_levels(adj, big[0])
    best = None
    for cut in range(1, len(levels)):
        a = [v for lv in levels[:cut] for v in lv]
        c = sorted(levels[cut])
        b = sorted([v for lv in levels[cut + 1:] for v in lv] + others)
        key = (max(len(a), len(b)), len(c), cut)
        if best is None or key < best[0]:
            best = (key, sorted(a), b, c)
    if best is None:  # single-level component: no cut to make
        return [], others, big
    _, a, b, c = best
    return a, b, c


def _pose_adjacency(g: UnlabeledDepGraph):
    """Start/goal overlap graph on 2n vertices: start s is vertex s, goal v is
    vertex n + v."""
    total = 2 * g.n
    adj = [0] * total
    for v in range(g.n):
        for s in _bits(g.goal_nbr[v]):
            adj[s] |= 1 << (g.n + v)
            adj[g.n + v] |= 1 << s
    return adj


def find_separator(g, geometry=None) -> SeparatorSplit:
    """Split a pose graph into sides A and B plus a cut set C with no edge
    joining A and B.

    Unlabeled start/goal graphs are expanded to their 2n pose vertices (goal v
    becomes vertex n + v); plain undirected graphs are taken as-is. With
    geometry, a (centers, radius) pair or a geometric instance, the cut is a
    median strip of width four radii (axis chosen for the smallest cut, then
    balance). Without geometry, graphs of at most 12 vertices get the smallest
    cut with both sides at most 2|V|/3, larger ones a breadth-first level cut.
    """
    if isinstance(g, UnlabeledDepGraph):
        total = 2 * g.n
        adj = _pose_adjacency(g)
        goal_from = g.n
    elif isinstance(g, UndirectedGraph):
        total = g.n
        adj = g.adj
        goal_from = None
    else:
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    pair = _geometry_pair(geometry)
    if pair is not None:
        centers, radius = pair
        if len(centers) != total:
            raise ValueError("geometry must give one center per vertex")
        a, b, c = _strip_separator(centers, radius, total)
    elif total <= 12:
        a, b, c = _exhaustive_separator(adj, total)
    else:
        a, b, c = _bfs_separator(adj, total)

    def delta(side):
        if goal_from is None:
            return 0
        goals = sum(1 for u in side if u >= goal_from)
        return goals - (len(side) - goals)

    return SeparatorSplit(tuple(sorted(a)), tuple(sorted(b)), tuple(sorted(c)),
                          delta(a), delta(b))


# ---------------------------------------------------------------------------
# separator-based planner

def solve_sepplan(g: UnlabeledDepGraph, geometry=None, deadline=None) -> SolveResult:
    """Divide-and-conquer upper-bound planner for unlabeled instances.

    Each fragment is split with find_separator; every object whose start lies
    in the cut set or blocks a cut-set goal is buffered, the now-isolated
    cut-set goals are filled from the buffer, and the two sides are finished
    recursively, goal-heavy side first. Fragments of at most 4 vertices are
    closed by trying every fill order against the live state. The plan is
    valid by construction but not necessarily optimal; mrb is the plan's own
    peak occupancy, which can exceed what the fill sequence needs under the
    lazier rule-based simulation.
    """
    if not isinstance(g, UnlabeledDepGraph):
        raise TypeError("solve_sepplan expects an unlabeled graph")
    t0 = time.perf_counter()
    dl = _Deadline(deadline)
    n = g.n
    full = (1 << n) - 1
    pair = _geometry_pair(geometry)
    if pair is not None and len(pair[0]) != 2 * n:
        raise ValueError("geometry must give one center per start and goal")
    adj = _pose_adjacency(g)

    cleared = 0
    filled = 0
    occ = 0
    peak = 0
    slots = _Slots()
    buffered = []
    actions = []
    profile = []
    fill_seq = []
    total_buffers = 0
    nodes = 0

    def clear_to_buffer(s):
        nonlocal cleared, occ, peak, total_buffers
        slot = slots.take(s)
        buffered.append(s)
        cleared |= 1 << s
        occ += 1
        total_buffers += 1
        if occ > peak:
            peak = occ
        actions.append(Action(s, START, f"B:{slot}"))
        profile.append((occ, occ))

    def fill_from_buffer(v):
        nonlocal filled, occ
        s = min(buffered)
        buffered.remove(s)
        slot = slots.release(s)
        occ -= 1
        filled |= 1 << v
        fill_seq.append(v)
        actions.append(Action(s, f"B:{slot}", f"G:{v}"))
        profile.append((occ, occ))

    def handover(s, v):
        nonlocal cleared, filled
        cleared |= 1 << s
        filled |= 1 << v
        fill_seq.append(v)
        actions.append(Action(s, START, f"G:{v}"))
        profile.append((occ, occ))

    def lowest_uncleared():
        m = full & ~cleared
        return (m & -m).bit_length() - 1

    def fill_goal(v):
        todo = g.goal_nbr[v] & ~cleared
        blockers = list(_bits(todo))
        for s in blockers[:-1]:
            clear_to_buffer(s)
        if blockers:
            handover(blockers[-1], v)
        elif occ > 0:
            fill_from_buffer(v)
        else:
            handover(lowest_uncleared(), v)

    def order_peak(goals):
        """Peak of filling these goals now, mirroring fill_goal exactly."""
        c = cleared
        o = occ
        pk = o
        for v in goals:
            todo = g.goal_nbr[v] & ~c
            cnt = _popcount(todo)
            if cnt:
                c |= todo
                o += cnt - 1
                if o > pk:
                    pk = o
            elif o > 0:
                o -= 1
            else:
                m = full & ~c
                c |= m & -m
        return pk

    def close_leaf(goals):
        best_pk = None
        best_perm = ()
        for perm in itertools.permutations(goals):
            dl.poll()
            pk = order_peak(perm)
            if best_pk is None or pk < best_pk:
                best_pk = pk
                best_perm = perm
        for v in best_perm:
            fill_goal(v)

    def split_fragment(wverts):
        local = {u: i for i, u in enumerate(wverts)}
        edges = []
        for i, u in enumerate(wverts):
            for x in _bits(adj[u]):
                j = local.get(x)
                if j is not None and j > i:
                    edges.append((i, j))
        sub = UndirectedGraph(len(wverts), edges)
        geo = None
        if pair is not None:
            geo = ([pair[0][u] for u in wverts], pair[1])
        sp = find_separator(sub, geo)
        back = lambda ids: [wverts[i] for i in ids]
        return back(sp.A), back(sp.B), back(sp.C)

    stack = [list(range(2 * n))]
    while stack:
        dl.poll()
        wverts = stack.pop()
        if not wverts:
            continue
        nodes += 1
        if len(wverts) <= 4:
            close_leaf(sorted(u - n for u in wverts
                              if u >= n and not filled >> (u - n) & 1))
            continue
        side_a, side_b, cut = split_fragment(wverts)
        cut_goals = sorted(u - n for u in cut
                           if u >= n and not filled >> (u - n) & 1)
        for s in sorted(u for u in cut if u < n and not cleared >> u & 1):
            clear_to_buffer(s)
        blockers = 0
        for v in cut_goals:
            blockers |= g.goal_nbr[v] & ~cleared
        for s in _bits(blockers):
            clear_to_buffer(s)
        for v in cut_goals:
            if occ > 0:
                fill_from_buffer(v)
            else:
                handover(lowest_uncleared(), v)
        da = sum(1 for u in side_a if u >= n) - sum(1 for u in side_a if u < n)
        db = sum(1 for u in side_b if u >= n) - sum(1 for u in side_b if u < n)
        first, second = (side_a, side_b) if da >= db else (side_b, side_a)
        stack.append(sorted(second))
        stack.append(sorted(first))

    assert filled == full and occ == 0 and not buffered
    trace = ExecutionTrace(tuple(profile), peak, total_buffers, tuple(fill_seq))
    plan = Plan(n, tuple(actions))
    return SolveResult(peak, tuple(fill_seq), plan, trace,
                       {"nodes_expanded": nodes, "states_stored": 0,
                        "wall_time": time.perf_counter() - t0})
