"""runbuf: running-buffer-minimal rearrangement planning for tabletop
pick-n-place, on geometric disc instances or abstract dependency graphs."""

from .errors import (GenerationFailure, Infeasible, InvalidPermutation,
                     NotPerfectSquare, SolveTimeout, TooLarge)
from .families import (SticksFamily, gen_cycle, gen_grid, gen_sticks,
                       grid_embedding)
from .geometry import (Arrangement, GeomInstance, Workspace, density,
                       gen_random, instance_to_json, load_instance, overlaps,
                       parse_instance, save_instance)
from .graphs import (GraphStats, LabeledDepGraph, UndirectedGraph,
                     UnlabeledDepGraph, bidirectionalize, build_labeled,
                     build_unlabeled, graph_to_json, load_graph, parse_graph,
                     save_graph, stats)
from .optmodels import (FvsResult, MilpModel, Row, TbResult, build_tb_milp,
                        check_encoding, lp_text, solve_mfvs, solve_tb_dp)
from .planning import (Action, ExecutionTrace, Plan, ValidationReport,
                       parse_plan, plan_to_json, simulate_labeled,
                       simulate_unlabeled, soonest_needed_start, trace_to_csv,
                       validate, vertex_separation)
from .solvers import (SeparatorSplit, SolveResult, find_separator, solve_brute,
                      solve_dfdp, solve_dp, solve_pqs, solve_sepplan)

__version__ = "0.1.0"

__all__ = [
    "Action", "Arrangement", "ExecutionTrace", "FvsResult", "GenerationFailure",
    "GeomInstance", "GraphStats", "Infeasible", "InvalidPermutation",
    "LabeledDepGraph", "MilpModel", "NotPerfectSquare", "Plan", "Row",
    "SeparatorSplit", "SolveResult", "SolveTimeout", "SticksFamily", "TbResult",
    "TooLarge", "UndirectedGraph", "UnlabeledDepGraph", "ValidationReport",
    "Workspace", "bidirectionalize", "build_labeled", "build_tb_milp",
    "build_unlabeled", "check_encoding", "density", "find_separator",
    "gen_cycle", "gen_grid", "gen_random", "gen_sticks", "graph_to_json",
    "grid_embedding", "instance_to_json", "load_graph", "load_instance",
    "lp_text", "overlaps", "parse_graph", "parse_instance", "parse_plan",
    "plan_to_json", "save_graph", "save_instance", "simulate_labeled",
    "simulate_unlabeled", "solve_brute", "solve_dfdp", "solve_dp",
    "solve_mfvs", "solve_pqs", "solve_sepplan", "solve_tb_dp",
    "soonest_needed_start", "stats", "trace_to_csv", "validate",
    "vertex_separation",
]
