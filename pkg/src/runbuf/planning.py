"""Plans, the ordering -> plan simulators, and plan validation.

A plan is an ordered list of pick-n-place actions. Buffer slots are abstract
non-negative integers reused greedily (lowest free slot first); buffer poses
themselves carry no meaning. Running buffer (RB) is the number of objects
parked in the buffer at a moment; the labeled simulator additionally tracks
the transient peak that counts a just-picked object before eligible buffered
objects are flushed to their goals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidPermutation
from .graphs import LabeledDepGraph, UndirectedGraph, UnlabeledDepGraph

START = "S"
GOAL = "G"


@dataclass(frozen=True)
class Action:
    obj: int
    src: str  # "S" or "B:<slot>"
    dst: str  # "G", "G:<goal>", or "B:<slot>"


@dataclass(frozen=True)
class Plan:
    n: int
    actions: tuple[Action, ...]


@dataclass(frozen=True)
class ExecutionTrace:
    # One row per action: (occupancy after the action, transient peak during it).
    rb_profile: tuple[tuple[int, int], ...]
    max_rb: int
    total_buffers: int
    ordering: tuple[int, ...]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    action_index: int | None = None
    message: str = ""
    max_rb: int = 0  # replayed peak occupancy; valid when ok


def _check_perm(seq, n, what):
    if sorted(seq) != list(range(n)):
        raise InvalidPermutation(f"{what} must be a permutation of 0..{n - 1}")


class _Slots:
    """Greedy buffer-slot allocator, lowest free slot first."""

    def __init__(self):
        self.of_obj = {}
        self.free = []
        self.used = 0

    def take(self, obj):
        if self.free:
            self.free.sort()
            slot = self.free.pop(0)
        else:
            slot = self.used
            self.used += 1
        self.of_obj[obj] = slot
        return slot

    def release(self, obj):
        slot = self.of_obj.pop(obj)
        self.free.append(slot)
        return slot


def simulate_labeled(g: LabeledDepGraph, phi, transient: bool = True):
    """Execute ordering phi on a labeled graph; returns (trace, plan).

    Objects are picked in phi order. An object whose dependencies have all
    left their start poses goes straight to its goal, otherwise to the buffer.
    After every pick, buffered objects whose dependencies have left start are
    flushed to their goals eagerly, in ascending object index. With
    transient=True (default) the peak counts a just-buffered object before the
    flush; transient=False counts occupancy only at the rest points after
    flushing, which is the completion-time accounting.
    """
    phi = tuple(phi)
    _check_perm(phi, g.n, "phi")
    dep = g.dep
    moved = 0
    buffered = 0  # mask
    slots = _Slots()
    actions = []
    profile = []
    max_rb = 0
    total_buffers = 0
    occ = 0
    for i in phi:
        moved |= 1 << i
        if dep[i] & ~moved:
            slot = slots.take(i)
            buffered |= 1 << i
            occ += 1
            total_buffers += 1
            actions.append(Action(i, START, f"B:{slot}"))
            if transient and occ > max_rb:
                max_rb = occ
            profile.append((occ, occ))
        else:
            actions.append(Action(i, START, GOAL))
            profile.append((occ, occ))
        # eager unload: everything whose dependencies have left start
        while True:
            ready = 0
            rest = buffered
            while rest:
                b = rest & -rest
                o = b.bit_length() - 1
                rest ^= b
                if not (dep[o] & ~moved):
                    ready |= b
            if not ready:
                break
            while ready:
                b = ready & -ready
                o = b.bit_length() - 1
                ready ^= b
                slot = slots.release(o)
                buffered ^= b
                occ -= 1
                actions.append(Action(o, f"B:{slot}", GOAL))
                profile.append((occ, occ))
        if occ > max_rb:  # rest-point occupancy (both accounting modes)
            max_rb = occ
    trace = ExecutionTrace(tuple(profile), max_rb, total_buffers, phi)
    return trace, Plan(g.n, tuple(actions))


def soonest_needed_start(g: UnlabeledDepGraph, uncleared_mask: int, remaining_goals):
    """Deficit rule: the uncleared start needed soonest as a blocker of a goal
    later in the fill order; ties and the never-needed case take the lowest
    index."""
    for v in remaining_goals:
        cand = g.goal_nbr[v] & uncleared_mask
        if cand:
            return (cand & -cand).bit_length() - 1
    return (uncleared_mask & -uncleared_mask).bit_length() - 1


def simulate_unlabeled(g: UnlabeledDepGraph, fill_order):
    """Execute a goal fill order on an unlabeled graph; returns (trace, plan).

    Filling goal v first clears v's still-uncleared neighbor starts: all but
    the last are picked to the buffer, and the last is handed over directly to
    v without touching the buffer. If v has no uncleared neighbors, it is
    filled from the buffer when occupancy is positive; at zero occupancy an
    object is handed over from the uncleared start chosen by the soonest-need
    rule. Objects are named by their start vertex; goal placements use the
    explicit "G:<goal>" form.
    """
    order = tuple(fill_order)
    _check_perm(order, g.n, "fill_order")
    full = (1 << g.n) - 1
    cleared = 0
    occ = 0
    slots = _Slots()
    buffered = []  # start indices, insertion order
    actions = []
    profile = []
    max_rb = 0
    total_buffers = 0
    for t, v in enumerate(order):
        todo = g.goal_nbr[v] & ~cleared
        if todo:
            blockers = []
            while todo:
                b = todo & -todo
                blockers.append(b.bit_length() - 1)
                todo ^= b
            for s in blockers[:-1]:
                slot = slots.take(s)
                buffered.append(s)
                cleared |= 1 << s
                occ += 1
                total_buffers += 1
                actions.append(Action(s, START, f"B:{slot}"))
                profile.append((occ, occ))
            last = blockers[-1]
            cleared |= 1 << last
            actions.append(Action(last, START, f"G:{v}"))
            profile.append((occ, occ))
        elif occ > 0:
            s = min(buffered)
            buffered.remove(s)
            slot = slots.release(s)
            occ -= 1
            actions.append(Action(s, f"B:{slot}", f"G:{v}"))
            profile.append((occ, occ))
        else:
            s = soonest_needed_start(g, full & ~cleared, order[t + 1:])
            cleared |= 1 << s
            actions.append(Action(s, START, f"G:{v}"))
            profile.append((occ, occ))
        if occ > max_rb:
            max_rb = occ
    trace = ExecutionTrace(tuple(profile), max_rb, total_buffers, order)
    return trace, Plan(g.n, tuple(actions))


def vertex_separation(g: UndirectedGraph, phi) -> int:
    """max over prefix lengths of the number of prefix vertices that still
    have a neighbor in the suffix."""
    phi = tuple(phi)
    _check_perm(phi, g.n, "phi")
    pos = [0] * g.n
    for rank, v in enumerate(phi):
        pos[v] = rank
    best = 0
    suffix = (1 << g.n) - 1
    for rank, v in enumerate(phi):
        suffix ^= 1 << v
        active = 0
        for u in phi[:rank + 1]:
            if g.adj[u] & suffix:
                active += 1
        if active > best:
            best = active
    return best


def _parse_loc(token):
    if token == START or token == GOAL:
        return (token, None)
    if token.startswith("B:"):
        return ("B", int(token[2:]))
    if token.startswith("G:"):
        return ("G", int(token[2:]))
    raise ValueError(f"bad location token {token!r}")


def validate(plan: Plan, g) -> ValidationReport:
    """Check plan well-formedness and dependency feasibility against g.

    Never raises: returns a report naming the first violating action. The
    report also carries the replayed peak buffer occupancy.
    """
    try:
        return _validate(plan, g)
    except Exception as exc:  # malformed tokens and the like
        return ValidationReport(False, None, f"malformed plan: {exc}")


def _validate(plan: Plan, g):
    n = plan.n
    labeled = isinstance(g, LabeledDepGraph)
    if not labeled and not isinstance(g, UnlabeledDepGraph):
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    if g.n != n:
        return ValidationReport(False, None, "plan and graph disagree on n")
    where = {o: ("S", None) for o in range(n)}
    slot_holder = {}
    filled_goals = set()
    left_start = 0  # mask of objects/ starts vacated
    placed = 0
    occ = 0
    max_rb = 0
    for idx, act in enumerate(plan.actions):
        if not (0 <= act.obj < n):
            return ValidationReport(False, idx, f"object {act.obj} out of range")
        src = _parse_loc(act.src)
        dst = _parse_loc(act.dst)
        if src[0] == "G" or dst[0] == "S":
            return ValidationReport(False, idx, "objects only move S->B, S->G, or B->G")
        if src[0] == "B" and dst[0] == "B":
            return ValidationReport(False, idx, "buffer-to-buffer moves never occur")
        if where[act.obj] != src:
            return ValidationReport(
                False, idx, f"object {act.obj} is at {where[act.obj]}, not {src}")
        if src[0] == "B":
            if slot_holder.get(src[1]) != act.obj:
                return ValidationReport(False, idx, f"buffer slot {src[1]} mismatch")
            del slot_holder[src[1]]
            occ -= 1
        if src[0] == "S":
            left_start |= 1 << act.obj
        if dst[0] == "B":
            if dst[1] in slot_holder:
                return ValidationReport(False, idx, f"buffer slot {dst[1]} occupied")
            slot_holder[dst[1]] = act.obj
            occ += 1
            if occ > max_rb:
                max_rb = occ
        else:
            # goal placement: dependency / blocking checks
            if labeled:
                if dst[1] is not None:
                    return ValidationReport(False, idx, "labeled plans place at plain G")
                if g.dep[act.obj] & ~left_start:
                    return ValidationReport(
                        False, idx,
                        f"object {act.obj} placed while a dependency remains at start")
                if act.obj in filled_goals:
                    return ValidationReport(False, idx, f"object {act.obj} placed twice")
                filled_goals.add(act.obj)
            else:
                if dst[1] is None:
                    return ValidationReport(False, idx, "unlabeled plans place at G:<goal>")
                v = dst[1]
                if not (0 <= v < n):
                    return ValidationReport(False, idx, f"goal {v} out of range")
                if v in filled_goals:
                    return ValidationReport(False, idx, f"goal {v} filled twice")
                if g.goal_nbr[v] & ~left_start:
                    return ValidationReport(
                        False, idx,
                        f"goal {v} filled while an overlapping start is uncleared")
                filled_goals.add(v)
            placed += 1
        where[act.obj] = dst if dst[0] == "B" else ("G", dst[1])
    if placed != n:
        missing = n - placed
        return ValidationReport(False, None, f"{missing} object(s) never reach a goal")
    if len(filled_goals) != n:
        return ValidationReport(False, None, "some goal is never filled")
    return ValidationReport(True, None, "", max_rb)


def plan_to_json(plan: Plan) -> str:
    rows = ", ".join(
        f'{{"o": {a.obj}, "from": "{a.src}", "to": "{a.dst}"}}' for a in plan.actions)
    return f'{{"n": {plan.n}, "actions": [{rows}]}}\n'


def parse_plan(text: str) -> Plan:
    obj = json.loads(text)
    actions = tuple(Action(int(a["o"]), a["from"], a["to"]) for a in obj["actions"])
    return Plan(int(obj["n"]), actions)


def trace_to_csv(trace: ExecutionTrace, plan: Plan) -> str:
    """CSV with one row per action: step,object,action,occupancy,transient_peak."""
    lines = ["step,object,action,occupancy,transient_peak"]
    for step, (act, (occ, peak)) in enumerate(zip(plan.actions, trace.rb_profile)):
        lines.append(f"{step},{act.obj},{act.src}->{act.dst},{occ},{peak}")
    return "\n".join(lines) + "\n"
