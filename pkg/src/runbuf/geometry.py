"""Geometric instances: uniform-disc arrangements in a rectangular workspace.

Discs have a common radius (fixed to 1 by the generator; the workspace scales
instead). Density is the covered-area fraction n*pi*r^2 / (w*h). Tangency does
not count as overlap: two discs interfere only when their center distance is
strictly below 2r minus a small tolerance.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .errors import GenerationFailure

# Tangent discs must not create dependencies; scaled by the radius.
TOL_FACTOR = 1e-9

_DART_TRIES_PER_DISC = 600
_CONTRACT_ROUNDS = 200
_RELAX_SWEEPS = 400


@dataclass(frozen=True)
class Workspace:
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError("workspace sides must be positive")


@dataclass(frozen=True)
class Arrangement:
    radius: float
    poses: tuple[tuple[float, float], ...]
    workspace: Workspace

    @property
    def n(self) -> int:
        return len(self.poses)

    def inside_workspace(self) -> bool:
        r, w, h = self.radius, self.workspace.w, self.workspace.h
        return all(r <= x <= w - r and r <= y <= h - r for x, y in self.poses)

    def collision_free(self, tol: float | None = None) -> bool:
        """Pairwise non-overlap within this arrangement (O(n^2) scan)."""
        t = TOL_FACTOR * self.radius if tol is None else tol
        ps = self.poses
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                if overlaps(ps[i], ps[j], self.radius, t):
                    return False
        return True


@dataclass(frozen=True)
class GeomInstance:
    start: Arrangement
    goal: Arrangement
    kind: str  # "labeled" | "unlabeled"
    labels: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("labeled", "unlabeled"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if len(self.start.poses) != len(self.goal.poses):
            raise ValueError("start and goal must hold the same number of discs")
        if self.start.radius != self.goal.radius:
            raise ValueError("start and goal must share the disc radius")
        if self.start.workspace != self.goal.workspace:
            raise ValueError("start and goal must share the workspace")
        if self.kind == "labeled":
            if self.labels is None or sorted(self.labels) != list(range(1, self.n + 1)):
                raise ValueError("labeled instance needs a bijection on 1..n")

    @property
    def n(self) -> int:
        return self.start.n


def overlaps(p, q, r, tol=None):
    """True iff discs of radius r at centers p and q overlap non-trivially.

    Exact tangency (distance == 2r) is not an overlap; tol shrinks the
    threshold further so near-tangent pairs are treated as clear.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if tol is None:
        tol = TOL_FACTOR * r
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    lim = 2 * r - tol
    return dx * dx + dy * dy < lim * lim


def density(inst: GeomInstance) -> float:
    """Covered-area fraction n*pi*r^2 / (w*h) of one arrangement."""
    ws = inst.start.workspace
    return inst.n * math.pi * inst.start.radius ** 2 / (ws.w * ws.h)


class _Grid:
    """Uniform hash grid over disc centers; cells sized one diameter."""

    def __init__(self, r):
        self.cell = 2 * r
        self.cells = {}

    def _key(self, x, y):
        return (int(x // self.cell), int(y // self.cell))

    def add(self, idx, x, y):
        self.cells.setdefault(self._key(x, y), []).append(idx)

    def near(self, x, y):
        cx, cy = self._key(x, y)
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                yield from self.cells.get((gx, gy), ())


def _dart_throw(rng, n, w, r, tol):
    """Sequential rejection sampling; None when the budget runs out."""
    lo, hi = r, w - r
    if hi < lo:
        return None
    grid = _Grid(r)
    poses = []
    for i in range(n):
        for _ in range(_DART_TRIES_PER_DISC):
            x = rng.uniform(lo, hi)
            y = rng.uniform(lo, hi)
            if all(not overlaps((x, y), poses[j], r, tol) for j in grid.near(x, y)):
                grid.add(i, x, y)
                poses.append((x, y))
                break
        else:
            return None
    return poses


def _relax(rng, poses, w, r, tol):
    """Separate overlapping discs in place; False if overlaps persist.

    Each overlapping pair is moved apart symmetrically, half the deficit
    each, clamped to the workspace. Symmetric displacement converges far
    more reliably than pushing one side, which tends to ping-pong.
    """
    n = len(poses)
    lo, hi = r, w - r
    sep = 2 * r + 4 * TOL_FACTOR * r
    for _ in range(_RELAX_SWEEPS):
        grid = _Grid(r)
        for i, (x, y) in enumerate(poses):
            grid.add(i, x, y)
        bad = 0
        for i in range(n):
            x, y = poses[i]
            for j in grid.near(x, y):
                if j <= i:
                    continue
                if overlaps((x, y), poses[j], r, tol):
                    bad += 1
                    qx, qy = poses[j]
                    dx, dy = x - qx, y - qy
                    d = math.hypot(dx, dy)
                    if d == 0:
                        ang = rng.uniform(0, 2 * math.pi)
                        dx, dy, d = math.cos(ang), math.sin(ang), 1.0
                    push = (sep - d) / 2
                    ux, uy = dx / d, dy / d
                    x = min(max(x + ux * push, lo), hi)
                    y = min(max(y + uy * push, lo), hi)
                    poses[i] = (x, y)
                    poses[j] = (min(max(qx - ux * push, lo), hi),
                                min(max(qy - uy * push, lo), hi))
        if bad == 0:
            return True
    return False


def _densify(rng, n, w_target, r, tol):
    """Dart-throw in a roomier box, then contract it down to w_target.

    The starting box is sized so darts land at the lesser of 0.8x the
    requested density and 0.42, comfortably below where sequential
    rejection sampling saturates; relaxation carries the rest.
    """
    rho = n * math.pi * r * r / (w_target * w_target)
    w = w_target * math.sqrt(rho / min(0.8 * rho, 0.42))
    poses = _dart_throw(rng, n, w, r, tol)
    if poses is None:
        return None
    for _ in range(_CONTRACT_ROUNDS):
        if w <= w_target:
            break
        w_new = max(w * 0.99, w_target)
        scale = (w_new - 2 * r) / (w - 2 * r)
        poses = [(r + (x - r) * scale, r + (y - r) * scale) for x, y in poses]
        if not _relax(rng, poses, w_new, r, tol):
            return None
        w = w_new
    return poses if w <= w_target else None


_DENSIFY_TRIES = 8


def _gen_arrangement(rng, n, w, r, tol):
    poses = _dart_throw(rng, n, w, r, tol)
    for _ in range(_DENSIFY_TRIES):
        if poses is not None:
            return poses
        poses = _densify(rng, n, w, r, tol)
    return poses


def gen_random(n: int, rho: float, kind: str, seed: int) -> GeomInstance:
    """Random instance at density rho: independent start + goal arrangements.

    The workspace is square with side sqrt(n*pi/rho) and r = 1, so the density
    comes out exactly rho. Labeled instances get a uniformly random bijection.
    Deterministic per (n, rho, kind, seed).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0 < rho < 0.7):
        raise ValueError("rho must lie in (0, 0.7)")
    if kind not in ("labeled", "unlabeled"):
        raise ValueError(f"unknown kind {kind!r}")
    r = 1.0
    tol = TOL_FACTOR * r
    w = math.sqrt(n * math.pi / rho)
    rng = random.Random(seed)
    ws = Workspace(w, w)
    arrangements = []
    for which in ("start", "goal"):
        poses = _gen_arrangement(rng, n, w, r, tol)
        if poses is None:
            raise GenerationFailure(
                f"could not place {n} discs at rho={rho:g} for the {which} "
                f"arrangement ({_DART_TRIES_PER_DISC} darts/disc, "
                f"{_CONTRACT_ROUNDS} contraction rounds)")
        arrangements.append(Arrangement(r, tuple(poses), ws))
    labels = None
    if kind == "labeled":
        perm = list(range(1, n + 1))
        rng.shuffle(perm)
        labels = tuple(perm)
    return GeomInstance(arrangements[0], arrangements[1], kind, labels)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def instance_to_json(inst: GeomInstance) -> str:
    """Serialize with 17 significant digits so floats round-trip bit-exact."""
    def poses(arr):
        return "[" + ", ".join(f"[{_fmt(x)}, {_fmt(y)}]" for x, y in arr.poses) + "]"

    ws = inst.start.workspace
    parts = [
        f'"kind": "{inst.kind}"',
        f'"n": {inst.n}',
        f'"r": {_fmt(inst.start.radius)}',
        f'"w": {_fmt(ws.w)}',
        f'"h": {_fmt(ws.h)}',
        f'"start": {poses(inst.start)}',
        f'"goal": {poses(inst.goal)}',
    ]
    if inst.labels is not None:
        parts.append('"labels": [' + ", ".join(str(l) for l in inst.labels) + "]")
    return "{" + ", ".join(parts) + "}\n"


def parse_instance(text: str) -> GeomInstance:
    obj = json.loads(text)
    ws = Workspace(float(obj["w"]), float(obj["h"]))
    r = float(obj["r"])
    start = Arrangement(r, tuple((float(x), float(y)) for x, y in obj["start"]), ws)
    goal = Arrangement(r, tuple((float(x), float(y)) for x, y in obj["goal"]), ws)
    labels = tuple(int(l) for l in obj["labels"]) if "labels" in obj else None
    return GeomInstance(start, goal, obj["kind"], labels)


def save_instance(inst: GeomInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(instance_to_json(inst))


def load_instance(path) -> GeomInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())
