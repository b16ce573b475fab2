"""Total-buffer minimization under a running-buffer cap, minimum feedback
vertex sets, and a textual MILP emitter for the ordering-based encoding.

The MILP is emitted, never solved here: correctness of the encoding is
exercised by evaluating its rows against simulator-derived assignments
(check_encoding) and by the exact subset DP (solve_tb_dp).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, InvalidPermutation, TooLarge
from .graphs import LabeledDepGraph
from .solvers import _blocked_masks, _bits, _popcount, _popcount_array


@dataclass(frozen=True)
class TbResult:
    k: int
    total_buffers: int
    ordering: tuple[int, ...]


@dataclass(frozen=True)
class FvsResult:
    fvs: tuple[int, ...]
    size: int


# ---------------------------------------------------------------------------
# exact total-buffer DP

def solve_tb_dp(g: LabeledDepGraph, k: int, transient: bool = True) -> TbResult:
    """Minimum number of objects ever buffered, over all orderings whose
    running buffer never exceeds k.

    Subset DP: the cost of a moved-set S is the least total count of buffered
    objects over feasible orderings of S. Appending object o to S\\o costs 1
    when o is still blocked in S. With transient=True the in-flight object
    counts against the cap (|blocked(S\\o)| + cost of o must fit); otherwise
    only settled occupancies |blocked(S)| are capped.
    """
    if not isinstance(g, LabeledDepGraph):
        raise TypeError("solve_tb_dp expects a labeled graph")
    if g.n > 24:
        raise TooLarge("solve_tb_dp is limited to n <= 24")
    n = g.n
    size = 1 << n
    bmask = _blocked_masks(n, g.dep)
    bsize = _popcount_array(bmask)
    pc = _popcount_array(np.arange(size, dtype=np.uint32))
    order = np.argsort(pc, kind="stable").astype(np.uint32)
    bounds = np.searchsorted(pc[order], np.arange(n + 2))
    inf = np.int16(999)
    cost = np.full(size, inf, dtype=np.int16)
    parent = np.full(size, -1, dtype=np.int8)
    cost[0] = 0
    for layer in range(1, n + 1):
        members = order[bounds[layer]:bounds[layer + 1]]
        if bool(np.all(bsize[members] > k)):
            continue
        for o in range(n):
            with_o = members[(members >> np.uint32(o)) & np.uint32(1) == 1]
            if with_o.size == 0:
                continue
            prev = with_o ^ np.uint32(1 << o)
            tc = ((bmask[with_o] >> np.uint32(o)) & np.uint32(1)).astype(np.int16)
            cand = cost[prev] + tc
            bad = bsize[with_o] > k
            if transient:
                bad |= (bsize[prev].astype(np.int16) + tc) > k
            cand = np.where(bad, inf, cand)
            better = cand < cost[with_o]
            if better.any():
                upd = with_o[better]
                cost[upd] = cand[better]
                parent[upd] = o
    full = size - 1
    if int(cost[full]) >= int(inf):
        raise Infeasible(k)
    total = int(cost[full])
    ordering = []
    s = full
    while s:
        o = int(parent[s])
        ordering.append(o)
        s ^= 1 << o
    ordering.reverse()
    return TbResult(k, total, tuple(ordering))


# ---------------------------------------------------------------------------
# minimum feedback vertex set

def _acyclic_without(g: LabeledDepGraph, removed: int) -> bool:
    rem = ((1 << g.n) - 1) & ~removed
    while rem:
        stripped = 0
        for i in _bits(rem):
            if not (g.dep[i] & rem):
                stripped |= 1 << i
        if not stripped:
            return False
        rem &= ~stripped
    return True


def solve_mfvs(g: LabeledDepGraph, exact: bool | None = None) -> FvsResult:
    """Feedback vertex set of the labeled dependency digraph.

    Exact mode (default for n <= 24) enumerates vertex subsets by ascending
    size and returns the lexicographically first minimum set. Above the guard
    a deterministic greedy fallback strips cycle-free vertices and removes the
    highest in-degree-times-out-degree vertex until acyclic; its size is an
    upper bound only.
    """
    if not isinstance(g, LabeledDepGraph):
        raise TypeError("solve_mfvs expects a labeled graph")
    if exact is None:
        exact = g.n <= 24
    if exact:
        if g.n > 24:
            raise TooLarge("exact solve_mfvs is limited to n <= 24")
        for size in range(g.n + 1):
            for comb in itertools.combinations(range(g.n), size):
                removed = 0
                for i in comb:
                    removed |= 1 << i
                if _acyclic_without(g, removed):
                    return FvsResult(tuple(comb), size)
        raise AssertionError("unreachable: removing every vertex is acyclic")
    rem = (1 << g.n) - 1
    fvs = []
    while True:
        while True:  # strip vertices that cannot lie on a remaining cycle
            stripped = 0
            for i in _bits(rem):
                if not (g.dep[i] & rem) or not (g.rdep[i] & rem):
                    stripped |= 1 << i
            if not stripped:
                break
            rem &= ~stripped
        if not rem:
            return FvsResult(tuple(fvs), len(fvs))
        pick = max(_bits(rem),
                   key=lambda i: (_popcount(g.dep[i] & rem)
                                  * _popcount(g.rdep[i] & rem), -i))
        fvs.append(pick)
        rem &= ~(1 << pick)


# ---------------------------------------------------------------------------
# MILP emission

@dataclass(frozen=True)
class Row:
    name: str
    terms: tuple[tuple[float, str], ...]
    sense: str  # "<=" or "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    n: int
    k: int
    mode: str
    variables: tuple[str, ...]
    objective: tuple[tuple[float, str], ...]
    rows: tuple[Row, ...]


def _dep_sets(g: LabeledDepGraph):
    """D[j] = {j} plus everything j's landing waits on (1-based lists)."""
    dsets = []
    for j in range(g.n):
        dsets.append(sorted({j + 1} | {l + 1 for l in _bits(g.dep[j])}))
    return dsets


def _order_rows(n):
    rows = []
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            rows.append(Row(f"order_{i}_{j}",
                            ((1.0, f"y_{i}_{j}"), (1.0, f"y_{j}_{i}")), "=", 1.0))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            for l in range(1, n + 1):
                if len({i, j, l}) < 3:
                    continue
                rows.append(Row(f"trans_{i}_{j}_{l}",
                                ((1.0, f"y_{i}_{j}"), (1.0, f"y_{j}_{l}"),
                                 (-1.0, f"y_{i}_{l}")), "<=", 1.0))
    return rows


def _aggregate_rows(n, dsets):
    """The goal/buffer rows exactly as printed: the goal bounds sum c_{j,l}
    y_{i,l} over l (lower bound divided by n), the buffer bounds sum
    (2 - y_{i,l} - g_{i,l}) over ALL l with no reference to j (folding the
    fixed diagonal y_{i,i} = 1 into the right-hand side)."""
    rows = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            terms = []
            const = 0.0
            for l in dsets[j - 1]:
                if l == i:
                    const += 1.0
                else:
                    terms.append((1.0 / n, f"y_{i}_{l}"))
            rows.append(Row(f"goal_lb_{i}_{j}",
                            tuple(terms) + ((-1.0, f"g_{i}_{j}"),),
                            "<=", -const / n))
            terms2 = [(-c * n, v) for c, v in terms]
            rows.append(Row(f"goal_ub_{i}_{j}",
                            ((1.0, f"g_{i}_{j}"),) + tuple(terms2),
                            "<=", const))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            lb = []
            ub = []
            const = 2.0 * n - 1.0  # n twos, minus the folded y_{i,i} = 1
            for l in range(1, n + 1):
                if l != i:
                    lb.append((-0.5, f"y_{i}_{l}"))
                    ub.append((1.0, f"y_{i}_{l}"))
                lb.append((-0.5, f"g_{i}_{l}"))
                ub.append((1.0, f"g_{i}_{l}"))
            rows.append(Row(f"buf_lb_{i}_{j}",
                            tuple(lb) + ((-1.0, f"b_{i}_{j}"),),
                            "<=", -const / 2.0))
            rows.append(Row(f"buf_ub_{i}_{j}",
                            ((1.0, f"b_{i}_{j}"),) + tuple(ub),
                            "<=", const))
    return rows


def _semantic_rows(n, dsets):
    """Linearization of the stated meanings: g_{i,j} is the AND of y_{l,i}
    over j's dependency set, b_{i,j} = y_{j,i} AND NOT g_{i,j}."""
    rows = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            others = [l for l in dsets[j - 1] if l != i]
            for l in others:
                rows.append(Row(f"goal_ub_{i}_{j}_{l}",
                                ((1.0, f"g_{i}_{j}"), (-1.0, f"y_{l}_{i}")),
                                "<=", 0.0))
            terms = [(1.0, f"y_{l}_{i}") for l in others]
            folded = len(dsets[j - 1]) - len(others)  # y_{i,i} = 1 if i in D_j
            rows.append(Row(f"goal_lb_{i}_{j}",
                            tuple(terms) + ((-1.0, f"g_{i}_{j}"),),
                            "<=", float(len(dsets[j - 1]) - 1 - folded)))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                rows.append(Row(f"buf_y_{i}_{j}",
                                ((1.0, f"b_{i}_{j}"), (-1.0, f"y_{j}_{i}")),
                                "<=", 0.0))
            rows.append(Row(f"buf_g_{i}_{j}",
                            ((1.0, f"b_{i}_{j}"), (1.0, f"g_{i}_{j}")),
                            "<=", 1.0))
            if i == j:  # y_{i,i} = 1 folded into the right-hand side
                rows.append(Row(f"buf_lb_{i}_{j}",
                                ((-1.0, f"g_{i}_{j}"), (-1.0, f"b_{i}_{j}")),
                                "<=", -1.0))
            else:
                rows.append(Row(f"buf_lb_{i}_{j}",
                                ((1.0, f"y_{j}_{i}"), (-1.0, f"g_{i}_{j}"),
                                 (-1.0, f"b_{i}_{j}")), "<=", 0.0))
    return rows


def build_tb_milp(g: LabeledDepGraph, k: int, mode: str = "aggregate") -> MilpModel:
    """Binary program minimizing the number of ever-buffered objects under
    running-buffer cap k, over ordering variables y_{i,j}.

    Two emissions of the goal/buffer coupling are supported: "aggregate"
    reproduces the source bounds verbatim, index quirks included, so they stay
    inspectable; "semantic" linearizes the stated variable meanings row by
    row. Ordering consistency, transitivity, the cap rows and the objective
    are shared. All names are 1-based; the diagonal y_{i,i} = 1 is folded into
    constants rather than emitted.
    """
    if not isinstance(g, LabeledDepGraph):
        raise TypeError("build_tb_milp expects a labeled graph")
    if mode not in ("aggregate", "semantic"):
        raise ValueError(f"unknown mode {mode!r}")
    n = g.n
    dsets = _dep_sets(g)
    rows = _order_rows(n)
    rows += _aggregate_rows(n, dsets) if mode == "aggregate" else _semantic_rows(n, dsets)
    for i in range(1, n + 1):
        rows.append(Row(f"cap_{i}",
                        tuple((1.0, f"b_{i}_{j}") for j in range(1, n + 1)),
                        "<=", float(k)))
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            rows.append(Row(f"ever_{i}_{j}",
                            ((1.0, f"b_{i}_{j}"), (-1.0, f"ever_{j}")),
                            "<=", 0.0))
    variables = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                variables.append(f"y_{i}_{j}")
    for kind in ("g", "b"):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                variables.append(f"{kind}_{i}_{j}")
    variables += [f"ever_{j}" for j in range(1, n + 1)]
    objective = tuple((1.0, f"ever_{j}") for j in range(1, n + 1))
    return MilpModel(n, k, mode, tuple(variables), objective, tuple(rows))


def _fmt_num(x: float) -> str:
    if x == int(x):
        return str(int(x))
    return format(x, ".17g")


def lp_text(model: MilpModel) -> str:
    """Textual rendering: OBJECTIVE / CONSTRAINTS / BINARY sections, one row
    per line as `name: <+/- coeff var ...> <sense> rhs`. Deterministic for a
    given (graph, k, mode)."""
    lines = ["OBJECTIVE"]
    terms = " ".join(f"{'+' if c >= 0 else '-'} {_fmt_num(abs(c))} {v}"
                     for c, v in model.objective)
    lines.append(f"min: {terms}")
    lines.append("CONSTRAINTS")
    for row in model.rows:
        terms = " ".join(f"{'+' if c >= 0 else '-'} {_fmt_num(abs(c))} {v}"
                         for c, v in row.terms)
        lines.append(f"{row.name}: {terms} {row.sense} {_fmt_num(row.rhs)}")
    lines.append("BINARY")
    lines.extend(model.variables)
    return "\n".join(lines) + "\n"


def check_encoding(g: LabeledDepGraph, ordering, k: int, model: MilpModel = None,
                   y_override: dict | None = None) -> str:
    """Evaluate a model's rows under the assignment an ordering induces.

    y comes from precedence in the ordering, g from whether each object has
    reached its goal by the completion of each move, b from being off both
    start and goal at that completion, ever from any b being set. Returns
    "ok" or the name of the first violated row (in model row order).
    y_override maps 1-based (i, j) pairs to forced y values, letting tests
    probe deliberately broken assignments.
    """
    if model is None:
        model = build_tb_milp(g, k, mode="semantic")
    n = g.n
    pos = {o + 1: t for t, o in enumerate(ordering)}
    if sorted(pos) != list(range(1, n + 1)):
        raise InvalidPermutation("ordering must be a permutation of all objects")

    yval = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            yval[(i, j)] = 1.0 if i == j or pos[i] < pos[j] else 0.0
    if y_override:
        for (i, j), v in y_override.items():
            yval[(i, j)] = float(v)

    dsets = _dep_sets(g)
    values = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                values[f"y_{i}_{j}"] = yval[(i, j)]
            gv = min(yval[(l, i)] for l in dsets[j - 1])
            values[f"g_{i}_{j}"] = gv
            values[f"b_{i}_{j}"] = yval[(j, i)] * (1.0 - gv)
    for j in range(1, n + 1):
        values[f"ever_{j}"] = max(values[f"b_{i}_{j}"] for i in range(1, n + 1))

    eps = 1e-9
    for row in model.rows:
        lhs = sum(c * values[v] for c, v in row.terms)
        if row.sense == "<=":
            ok = lhs <= row.rhs + eps
        else:
            ok = abs(lhs - row.rhs) <= eps
        if not ok:
            return row.name
    return "ok"
