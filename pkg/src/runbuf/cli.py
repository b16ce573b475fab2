"""Command line front end: instance generation, solving, batch benchmarks
with CSV and SVG output, MILP emission, and graph diagnostics.

Exit codes: 0 success, 2 bad input or usage, 3 solver timeout.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
import time
from dataclasses import dataclass

from . import families, geometry, graphs, optmodels, planning, solvers
from .errors import (GenerationFailure, Infeasible, InvalidPermutation,
                     NotPerfectSquare, SolveTimeout, TooLarge)

_SOLVERS = ("brute", "dp", "dfdp", "pqs", "sepplan")
_LABELED_OK = {"brute", "dp", "dfdp"}
_UNLABELED_OK = {"brute", "dfdp", "pqs", "sepplan"}

BENCH_HEADER = "solver,kind,n,rho,seed,mrb,total_buffers,nodes,ms,timed_out"
SOLVE_HEADER = "solver,n,rho,kind,seed,mrb,nodes,states,ms,timeout_flag"


@dataclass(frozen=True)
class BenchConfig:
    solvers: tuple[str, ...]
    ns: tuple[int, ...]
    rhos: tuple[float, ...]
    kind: str
    trials: int
    timeout: float
    seed_base: int


# ---------------------------------------------------------------------------
# shared plumbing

def _load_input(path):
    """Read a JSON file as (graph, instance-or-None), telling graph files
    (a "type" key) apart from geometric instances (a "kind" key)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    obj = json.loads(text)
    if "type" in obj:
        return graphs.parse_graph(text), None
    if "kind" in obj:
        inst = geometry.parse_instance(text)
        if inst.kind == "labeled":
            return graphs.build_labeled(inst), inst
        return graphs.build_unlabeled(inst), inst
    raise ValueError(f"{path}: neither a graph file nor an instance file")


def _check_compat(solver, graph):
    labeled = isinstance(graph, graphs.LabeledDepGraph)
    allowed = _LABELED_OK if labeled else _UNLABELED_OK
    if solver not in allowed:
        kind = "labeled" if labeled else "unlabeled"
        raise ValueError(f"solver {solver!r} does not handle {kind} graphs")


def _run_solver(solver, graph, inst, deadline):
    if solver == "brute":
        return solvers.solve_brute(graph, deadline=deadline)
    if solver == "dp":
        return solvers.solve_dp(graph, deadline=deadline)
    if solver == "dfdp":
        return solvers.solve_dfdp(graph, deadline=deadline)
    if solver == "pqs":
        return solvers.solve_pqs(graph, deadline=deadline)
    if solver == "sepplan":
        return solvers.solve_sepplan(graph, inst, deadline=deadline)
    raise ValueError(f"unknown solver {solver!r}")


# ---------------------------------------------------------------------------
# gen

def cmd_gen(args) -> int:
    if args.family is None:
        if args.n is None or args.rho is None:
            raise ValueError("random generation needs --n and --rho")
        inst = geometry.gen_random(args.n, args.rho, args.kind, args.seed)
        text = geometry.instance_to_json(inst)
        info = f"n={inst.n} kind={inst.kind} density={geometry.density(inst):.6g}"
    else:
        if args.family == "grid":
            if args.m is None:
                raise ValueError("--family grid needs --m")
            g = families.gen_grid(args.m)
        elif args.family == "cycle":
            if args.n is None:
                raise ValueError("--family cycle needs --n")
            g = families.gen_cycle(args.n)
        elif args.family == "sticks":
            if args.n is None:
                raise ValueError("--family sticks needs --n")
            fam = families.gen_sticks(args.n)
            g = fam.labeled if args.kind == "labeled" else fam.unlabeled
        else:
            raise ValueError(f"unknown family {args.family!r}")
        text = graphs.graph_to_json(g)
        kind = "labeled" if isinstance(g, graphs.LabeledDepGraph) else "unlabeled"
        info = f"n={g.n} kind={kind} family={args.family}"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(info)
    else:
        sys.stdout.write(text)
        print(info, file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# solve

def cmd_solve(args) -> int:
    graph, inst = _load_input(args.input)
    _check_compat(args.solver, graph)
    deadline = time.monotonic() + args.timeout if args.timeout else None
    rho = f"{geometry.density(inst):.4g}" if inst is not None else ""
    kind = "labeled" if isinstance(graph, graphs.LabeledDepGraph) else "unlabeled"
    t0 = time.perf_counter()
    try:
        res = _run_solver(args.solver, graph, inst, deadline)
    except SolveTimeout:
        ms = int((time.perf_counter() - t0) * 1000)
        print(f"timeout after {args.timeout:g}s", file=sys.stderr)
        print(SOLVE_HEADER)
        print(f"{args.solver},{graph.n},{rho},{kind},,,,,{ms},true")
        return 3
    if args.solver == "sepplan":
        print(f"RB = {res.mrb} (upper bound)")
    else:
        print(f"MRB = {res.mrb}")
    print("ordering: " + " ".join(str(o) for o in res.ordering))
    print("profile: " + " ".join(str(occ) for occ, _ in res.trace.rb_profile))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(planning.plan_to_json(res.plan))
        print(f"plan written to {args.output}")
    ms = int(res.stats["wall_time"] * 1000)
    print(SOLVE_HEADER)
    print(f"{args.solver},{graph.n},{rho},{kind},,{res.mrb},"
          f"{res.stats['nodes_expanded']},{res.stats['states_stored']},{ms},false")
    return 0


# ---------------------------------------------------------------------------
# bench

def _bench_worker(task):
    """One benchmark cell: regenerate the seeded instance, solve under the
    deadline, re-validate the plan, and return a finished CSV row."""
    solver, kind, n, rho, seed, timeout = task
    try:
        inst = geometry.gen_random(n, rho, kind, seed)
    except GenerationFailure as exc:
        return ("error", str(exc))
    if kind == "labeled":
        graph = graphs.build_labeled(inst)
    else:
        graph = graphs.build_unlabeled(inst)
    deadline = time.monotonic() + timeout
    t0 = time.perf_counter()
    try:
        res = _run_solver(solver, graph, inst, deadline)
    except SolveTimeout:
        ms = int((time.perf_counter() - t0) * 1000)
        return ("row", f"{solver},{kind},{n},{rho:g},{seed},,,,{ms},true")
    ms = int((time.perf_counter() - t0) * 1000)
    report = planning.validate(res.plan, graph)
    if not report.ok or report.max_rb != res.mrb:
        return ("error",
                f"solver {solver} produced an invalid plan on seed {seed}: "
                f"{report.message}")
    return ("row", f"{solver},{kind},{n},{rho:g},{seed},{res.mrb},"
                   f"{res.trace.total_buffers},{res.stats['nodes_expanded']},"
                   f"{ms},false")


def _parse_bench_config(args) -> BenchConfig:
    solver_list = tuple(s for s in args.solvers.split(",") if s)
    if not solver_list:
        raise ValueError("--solvers must name at least one solver")
    for s in solver_list:
        if s not in _SOLVERS:
            raise ValueError(f"unknown solver {s!r}")
        allowed = _LABELED_OK if args.kind == "labeled" else _UNLABELED_OK
        if s not in allowed:
            raise ValueError(f"solver {s!r} does not handle {args.kind} graphs")
    ns = tuple(int(x) for x in args.n.split(",") if x)
    rhos = tuple(float(x) for x in args.rho.split(",") if x)
    if not ns or not rhos:
        raise ValueError("--n and --rho must list at least one value")
    if args.trials < 1:
        raise ValueError("--trials must be at least 1")
    if args.timeout <= 0:
        raise ValueError("--timeout must be positive")
    return BenchConfig(solver_list, ns, rhos, args.kind, args.trials,
                       args.timeout, args.seed)


def cmd_bench(args) -> int:
    cfg = _parse_bench_config(args)
    tasks = [(solver, cfg.kind, n, rho, cfg.seed_base + t, cfg.timeout)
             for solver in cfg.solvers
             for n in cfg.ns
             for rho in cfg.rhos
             for t in range(cfg.trials)]
    rows = []
    failure = None
    out = open(args.output, "w", encoding="utf-8")
    out.write(BENCH_HEADER + "\n")
    try:
        if args.jobs > 1:
            with multiprocessing.Pool(args.jobs) as pool:
                results = pool.imap(_bench_worker, tasks, chunksize=1)
                for status, payload in results:
                    if status == "error":
                        failure = payload
                        break
                    out.write(payload + "\n")
                    out.flush()
                    rows.append(payload)
        else:
            for task in tasks:
                status, payload = _bench_worker(task)
                if status == "error":
                    failure = payload
                    break
                out.write(payload + "\n")
                out.flush()
                rows.append(payload)
    except KeyboardInterrupt:
        out.close()
        print(f"interrupted: {len(rows)} rows flushed to {args.output}",
              file=sys.stderr)
        return 130
    out.close()
    if failure is not None:
        print(f"error: {failure}", file=sys.stderr)
        return 2
    stem = args.output[:-4] if args.output.endswith(".csv") else args.output
    _bench_plots(rows, stem)
    print(f"wrote {len(rows)} rows to {args.output}")
    print(f"plots: {stem}.time.svg {stem}.success.svg {stem}.mrb.svg")
    return 0


# ---------------------------------------------------------------------------
# bench plots

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd",
            "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _bench_cells(rows):
    """Group parsed rows into cells[(solver, rho)][n] = list of row dicts."""
    cells = {}
    for line in rows:
        f = line.split(",")
        row = {"solver": f[0], "kind": f[1], "n": int(f[2]), "rho": f[3],
               "seed": int(f[4]), "mrb": None if f[5] == "" else int(f[5]),
               "ms": int(f[8]), "timed_out": f[9] == "true"}
        cells.setdefault((row["solver"], row["rho"]), {}) \
             .setdefault(row["n"], []).append(row)
    return cells


def _svg_plot(path, title, ylabel, series, whiskers=None, y_top=None):
    """Minimal line chart: series is [(label, [(x, y), ...])], whiskers an
    optional parallel [(x, lo, hi), ...] per series. Pixel coordinates are
    rounded to two decimals so output is byte-stable."""
    width, height = 640, 440
    left, right, top, bottom = 60.0, 620.0, 40.0, 390.0
    xs = sorted({x for _, pts in series for x, _ in pts})
    ys = [y for _, pts in series for _, y in pts]
    if whiskers:
        for wk in whiskers.values():
            ys.extend(v for _, lo, hi in wk for v in (lo, hi))
    if not xs:
        xs = [0.0]
    if not ys:
        ys = [0.0]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    y0 = 0.0
    y1 = y_top if y_top is not None else max(ys) * 1.1
    if y1 <= y0:
        y1 = y0 + 1.0

    def px(x):
        return round(left + (x - x0) / (x1 - x0) * (right - left), 2)

    def py(y):
        return round(bottom - (y - y0) / (y1 - y0) * (bottom - top), 2)

    e = []
    e.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">')
    e.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')
    e.append(f'<text x="{(left + right) / 2}" y="22" text-anchor="middle" '
             f'font-family="sans-serif" font-size="15">{title}</text>')
    e.append(f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" '
             f'stroke="#222222"/>')
    e.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" '
             f'stroke="#222222"/>')
    for x in xs:
        e.append(f'<line x1="{px(x)}" y1="{bottom}" x2="{px(x)}" '
                 f'y2="{bottom + 5}" stroke="#222222"/>')
        e.append(f'<text x="{px(x)}" y="{bottom + 20}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="11">{x:g}</text>')
    for i in range(6):
        yv = y0 + (y1 - y0) * i / 5
        e.append(f'<line x1="{left - 5}" y1="{py(yv)}" x2="{left}" '
                 f'y2="{py(yv)}" stroke="#222222"/>')
        e.append(f'<text x="{left - 8}" y="{py(yv) + 4}" text-anchor="end" '
                 f'font-family="sans-serif" font-size="11">{yv:.3g}</text>')
    e.append(f'<text x="{(left + right) / 2}" y="{height - 10}" '
             f'text-anchor="middle" font-family="sans-serif" '
             f'font-size="12">n</text>')
    e.append(f'<text x="16" y="{(top + bottom) / 2}" text-anchor="middle" '
             f'font-family="sans-serif" font-size="12" '
             f'transform="rotate(-90 16 {(top + bottom) / 2})">{ylabel}</text>')
    for idx, (label, pts) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        if whiskers and label in whiskers:
            for x, lo, hi in whiskers[label]:
                e.append(f'<line x1="{px(x)}" y1="{py(lo)}" x2="{px(x)}" '
                         f'y2="{py(hi)}" stroke="{color}" stroke-width="1"/>')
                for yv in (lo, hi):
                    e.append(f'<line x1="{px(x) - 3}" y1="{py(yv)}" '
                             f'x2="{px(x) + 3}" y2="{py(yv)}" '
                             f'stroke="{color}" stroke-width="1"/>')
        if pts:
            coords = " ".join(f"{px(x)},{py(y)}" for x, y in pts)
            e.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
            for x, y in pts:
                e.append(f'<circle cx="{px(x)}" cy="{py(y)}" r="3" '
                         f'fill="{color}"/>')
        ly = top + 14 + 16 * idx
        e.append(f'<line x1="{right - 150}" y1="{ly - 4}" x2="{right - 125}" '
                 f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        e.append(f'<text x="{right - 120}" y="{ly}" font-family="sans-serif" '
                 f'font-size="11">{label}</text>')
    e.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(e) + "\n")


def _bench_plots(rows, stem):
    cells = _bench_cells(rows)
    multi_rho = len({rho for _, rho in cells}) > 1
    time_series = []
    success_series = []
    mrb_series = []
    mrb_whiskers = {}
    for (solver, rho) in sorted(cells):
        label = f"{solver} rho={rho}" if multi_rho else solver
        by_n = cells[(solver, rho)]
        tpts, spts, mpts, whisk = [], [], [], []
        for n in sorted(by_n):
            grp = by_n[n]
            done = [r for r in grp if not r["timed_out"]]
            spts.append((n, len(done) / len(grp)))
            if done:
                tpts.append((n, sum(r["ms"] for r in done) / len(done) / 1000))
                vals = [r["mrb"] for r in done]
                mpts.append((n, sum(vals) / len(vals)))
                whisk.append((n, min(vals), max(vals)))
        time_series.append((label, tpts))
        success_series.append((label, spts))
        mrb_series.append((label, mpts))
        mrb_whiskers[label] = whisk
    _svg_plot(f"{stem}.time.svg", "mean solve time vs n", "seconds",
              time_series)
    _svg_plot(f"{stem}.success.svg", "success rate vs n", "fraction solved",
              success_series, y_top=1.05)
    _svg_plot(f"{stem}.mrb.svg", "mean MRB vs n (min/max whiskers)", "MRB",
              mrb_series, whiskers=mrb_whiskers)


# ---------------------------------------------------------------------------
# ilp

def cmd_ilp(args) -> int:
    graph, _ = _load_input(args.input)
    if not isinstance(graph, graphs.LabeledDepGraph):
        raise ValueError("the MILP encoding needs a labeled graph")
    if args.k == "mrb":
        deadline = time.monotonic() + args.timeout if args.timeout else None
        try:
            k = solvers.solve_dfdp(graph, deadline=deadline).mrb
        except SolveTimeout:
            print(f"timeout after {args.timeout:g}s", file=sys.stderr)
            return 3
    else:
        k = int(args.k)
    model = optmodels.build_tb_milp(graph, k, mode=args.mode)
    text = optmodels.lp_text(model)
    counts = (f"k={k} mode={model.mode} variables={len(model.variables)} "
              f"rows={len(model.rows)}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(counts)
        print(f"model written to {args.output}")
    else:
        sys.stdout.write(text)
        print(counts, file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# stats

def cmd_stats(args) -> int:
    graph, inst = _load_input(args.input)
    st = graphs.stats(graph)
    kind = "labeled" if isinstance(graph, graphs.LabeledDepGraph) else "unlabeled"
    print(f"n = {graph.n}")
    print(f"kind = {kind}")
    if inst is not None:
        print(f"density = {geometry.density(inst):.6g}")
    print(f"max_degree = {st.max_degree}")
    print(f"num_sccs = {st.num_sccs}")
    print(f"largest_component = {st.largest_component}")
    print(f"is_acyclic = {str(st.is_acyclic).lower()}")
    return 0


# ---------------------------------------------------------------------------
# parser

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="runbuf",
        description="Running-buffer-minimal rearrangement planning toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance or a family graph")
    g.add_argument("--n", type=int, default=None, help="object count")
    g.add_argument("--rho", type=float, default=None, help="target density")
    g.add_argument("--kind", choices=("labeled", "unlabeled"),
                   default="labeled")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--family", choices=("grid", "cycle", "sticks"),
                   default=None)
    g.add_argument("--m", type=int, default=None, help="grid family size")
    g.add_argument("-o", "--output", default=None)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance or graph file")
    s.add_argument("input")
    s.add_argument("--solver", choices=_SOLVERS, required=True)
    s.add_argument("--timeout", type=float, default=None, help="seconds")
    s.add_argument("-o", "--output", default=None, help="plan JSON path")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark grid, emit CSV + SVGs")
    b.add_argument("--solvers", required=True,
                   help="comma-separated solver names")
    b.add_argument("--n", required=True, help="comma-separated object counts")
    b.add_argument("--rho", required=True, help="comma-separated densities")
    b.add_argument("--kind", choices=("labeled", "unlabeled"),
                   default="labeled")
    b.add_argument("--trials", type=int, default=30)
    b.add_argument("--timeout", type=float, default=30.0, help="seconds per solve")
    b.add_argument("--seed", type=int, default=0, help="seed base")
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("-o", "--output", required=True, help="CSV path")
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("ilp", help="emit the total-buffer MILP for a labeled graph")
    i.add_argument("input")
    i.add_argument("--k", required=True,
                   help="running-buffer cap, an integer or 'mrb'")
    i.add_argument("--mode", choices=("aggregate", "semantic"),
                   default="aggregate")
    i.add_argument("--timeout", type=float, default=None,
                   help="seconds for the --k mrb computation")
    i.add_argument("-o", "--output", default=None)
    i.set_defaults(func=cmd_ilp)

    t = sub.add_parser("stats", help="structural diagnostics for a file")
    t.add_argument("input")
    t.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, TypeError, InvalidPermutation,
            GenerationFailure, TooLarge, Infeasible, NotPerfectSquare,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
