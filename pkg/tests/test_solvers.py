import math
import random
import time
from itertools import permutations

import pytest

from _oracles import (labeled_mrb, random_bipartite, random_labeled,
                      unlabeled_mrb)
from runbuf.errors import SolveTimeout, TooLarge
from runbuf.families import gen_cycle, gen_grid, gen_sticks, grid_embedding
from runbuf.geometry import gen_random
from runbuf.graphs import (LabeledDepGraph, UndirectedGraph, UnlabeledDepGraph,
                           bidirectionalize, build_unlabeled)
from runbuf.planning import simulate_labeled, simulate_unlabeled, validate
from runbuf.solvers import (find_separator, solve_brute, solve_dfdp, solve_dp,
                            solve_pqs, solve_sepplan)

TWO_CYCLE = LabeledDepGraph(2, ((0, 1), (1, 0)))


def bidirectional_k(n):
    return LabeledDepGraph(n, tuple((i, j) for i in range(n)
                                    for j in range(n) if i != j))


def check_result(res, g):
    """Witness ordering re-simulates to the claimed value; plan validates."""
    if isinstance(g, LabeledDepGraph):
        trace, _ = simulate_labeled(g, res.ordering)
    else:
        trace, _ = simulate_unlabeled(g, res.ordering)
    assert trace.max_rb == res.mrb
    rep = validate(res.plan, g)
    assert rep.ok and rep.max_rb == res.mrb
    assert set(res.stats) >= {"nodes_expanded", "states_stored", "wall_time"}


class TestBrute:
    def test_two_cycle(self):
        res = solve_brute(TWO_CYCLE)
        assert res.mrb == 1
        check_result(res, TWO_CYCLE)

    def test_bidirectional_k5(self):
        res = solve_brute(bidirectional_k(5))
        assert res.mrb == 4

    def test_acyclic_zero(self):
        g = LabeledDepGraph(4, ((0, 1), (1, 2), (2, 3)))
        assert solve_brute(g).mrb == 0

    def test_grid_d24_golden(self):
        assert solve_brute(gen_grid(2)).mrb == 1

    def test_lexicographically_smallest_witness(self):
        g = LabeledDepGraph(3, ())
        assert solve_brute(g).ordering == (0, 1, 2)

    def test_size_guard(self):
        with pytest.raises(TooLarge):
            solve_brute(LabeledDepGraph(11, ()))

    def test_timeout_raised(self):
        g = bidirectional_k(9)
        with pytest.raises(SolveTimeout):
            solve_brute(g, deadline=time.monotonic() - 1)


class TestDp:
    def test_matches_brute_random(self):
        rng = random.Random(10)
        for _ in range(60):
            n = rng.randint(2, 7)
            g = LabeledDepGraph(n, random_labeled(rng, n, rng.choice((0.2, 0.4, 0.6))))
            res = solve_dp(g)
            assert res.mrb == solve_brute(g).mrb
            check_result(res, g)

    def test_last_object_choice_pattern(self):
        # from a 3-subset state, a still-blocked last object costs
        # max(2, 2, 2+1) = 3 while an unblocked one keeps the peak at 2;
        # the DP must pick the cheaper branch
        arcs = ((0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1), (2, 3))
        g = LabeledDepGraph(4, arcs)
        res = solve_dp(g)
        assert res.mrb == solve_brute(g).mrb == 2
        check_result(res, g)

    def test_acyclic_zero(self):
        g = LabeledDepGraph(5, ((1, 0), (2, 1), (3, 2), (4, 3)))
        assert solve_dp(g).mrb == 0

    def test_labeled_only(self):
        with pytest.raises(TypeError):
            solve_dp(UnlabeledDepGraph(2, ((0, 0),)))

    def test_size_guard(self):
        with pytest.raises(TooLarge):
            solve_dp(LabeledDepGraph(25, ()))

    def test_sticks_ladder(self):
        for n in range(2, 8):
            assert solve_dp(gen_sticks(n).labeled).mrb == n - 1


class TestDfdp:
    def test_matches_brute_labeled(self):
        rng = random.Random(11)
        for _ in range(60):
            n = rng.randint(2, 8)
            g = LabeledDepGraph(n, random_labeled(rng, n, rng.choice((0.2, 0.4, 0.6))))
            res = solve_dfdp(g)
            assert res.mrb == solve_brute(g).mrb
            check_result(res, g)

    def test_matches_brute_unlabeled(self):
        rng = random.Random(12)
        for _ in range(60):
            n = rng.randint(2, 7)
            g = UnlabeledDepGraph(n, random_bipartite(rng, n, rng.choice((0.25, 0.4, 0.6))))
            res = solve_dfdp(g)
            assert res.mrb == solve_brute(g).mrb
            check_result(res, g)

    def test_matches_dp_on_larger_graphs(self):
        rng = random.Random(13)
        for _ in range(10):
            n = rng.randint(10, 16)
            g = LabeledDepGraph(n, random_labeled(rng, n, 0.12))
            assert solve_dfdp(g).mrb == solve_dp(g).mrb

    def test_k_start_hint_is_safe(self):
        # starting the deepening above 0 must not change the answer when
        # the hint is below or at the true value
        g = gen_sticks(5).labeled
        assert solve_dfdp(g, k_start=2).mrb == 4
        assert solve_dfdp(g, k_start=4).mrb == 4

    def test_grid_goldens(self):
        # cross-validated against the exhaustive oracle at m=2,3 and
        # frozen; m=4 extends the ladder
        assert solve_dfdp(gen_grid(2)).mrb == 1
        assert solve_dfdp(gen_grid(3)).mrb == 1
        assert solve_dfdp(gen_grid(4)).mrb == 2

    def test_cycle_family_matches_brute(self):
        g = gen_cycle(9)
        assert solve_dfdp(g).mrb == solve_brute(g).mrb

    def test_monotone_under_arc_insertion(self):
        rng = random.Random(14)
        for _ in range(25):
            n = rng.randint(3, 7)
            arcs = set(random_labeled(rng, n, 0.3))
            g1 = LabeledDepGraph(n, tuple(arcs))
            missing = [(i, j) for i in range(n) for j in range(n)
                       if i != j and (i, j) not in arcs]
            if not missing:
                continue
            arcs.add(rng.choice(missing))
            g2 = LabeledDepGraph(n, tuple(arcs))
            assert solve_dfdp(g2).mrb >= solve_dfdp(g1).mrb

    def test_timeout_raised(self):
        g = bidirectional_k(12)
        with pytest.raises(SolveTimeout):
            solve_dfdp(g, deadline=time.monotonic() - 1)


class TestPqs:
    def test_matches_brute(self):
        rng = random.Random(15)
        for _ in range(60):
            n = rng.randint(2, 7)
            g = UnlabeledDepGraph(n, random_bipartite(rng, n, rng.choice((0.25, 0.4, 0.6))))
            res = solve_pqs(g)
            assert res.mrb == solve_brute(g).mrb
            check_result(res, g)

    def test_k66(self):
        assert solve_pqs(gen_sticks(6).unlabeled).mrb == 5

    def test_empty_edges_all_free(self):
        g = UnlabeledDepGraph(4, ())
        res = solve_pqs(g)
        assert res.mrb == 0
        assert len(res.plan.actions) == 4
        assert all(a.src == "S" for a in res.plan.actions)

    def test_unlabeled_only(self):
        with pytest.raises(TypeError):
            solve_pqs(TWO_CYCLE)

    def test_stats_present(self):
        res = solve_pqs(gen_grid(3))
        assert res.stats["nodes_expanded"] >= 1
        assert res.stats["states_stored"] >= 1


class TestSeparator:
    def test_two_disjoint_edges_empty_cut(self):
        g = UnlabeledDepGraph(2, ((0, 0), (1, 1)))
        sep = find_separator(g)
        assert sep.C == ()
        assert len(sep.A) == 2 and len(sep.B) == 2
        assert set(sep.A) | set(sep.B) == set(range(4))

    def test_path_of_nine_middle_vertex(self):
        g = UndirectedGraph(9, tuple((i, i + 1) for i in range(8)))
        sep = find_separator(g)
        assert len(sep.C) == 1
        assert max(len(sep.A), len(sep.B)) <= 6  # 2n/3

    def test_no_a_b_edge_invariant(self):
        rng = random.Random(16)
        for _ in range(30):
            n = rng.randint(2, 8)
            g = UnlabeledDepGraph(n, random_bipartite(rng, n, 0.3))
            sep = find_separator(g)
            a, b, c = set(sep.A), set(sep.B), set(sep.C)
            assert not (a & b) and not (a & c) and not (b & c)
            assert a | b | c == set(range(2 * g.n))
            for s, v in g.edges:
                sv, gv = s, g.n + v  # starts then goals in pose-vertex ids
                assert not (sv in a and gv in b)
                assert not (sv in b and gv in a)

    def test_grid_strip_bound(self):
        m = 4
        g = gen_grid(m)
        start_xy, goal_xy, r = grid_embedding(m)
        centers = list(start_xy) + list(goal_xy)
        sep = find_separator(g, (centers, r))
        assert len(sep.C) <= math.ceil(2 * math.sqrt(2 * 2 * g.n))  # 22 here
        assert max(len(sep.A), len(sep.B)) <= 2 * (2 * g.n) / 3 + 1

    def test_geometry_from_instance(self):
        inst = gen_random(20, 0.4, "unlabeled", seed=9)
        g = build_unlabeled(inst)
        sep = find_separator(g, inst)
        total = len(sep.A) + len(sep.B) + len(sep.C)
        assert total == 2 * g.n
        # delta bookkeeping: goals minus starts on each side
        goals_a = sum(1 for v in sep.A if v >= g.n)
        starts_a = len(sep.A) - goals_a
        assert sep.delta_A == goals_a - starts_a

    def test_rejects_wrong_type(self):
        with pytest.raises(TypeError):
            find_separator(TWO_CYCLE)


class TestSepPlan:
    def test_empty_edges_direct(self):
        g = UnlabeledDepGraph(5, ())
        res = solve_sepplan(g)
        assert res.mrb == 0
        assert validate(res.plan, g).ok

    def test_valid_and_upper_bound_random(self):
        rng = random.Random(17)
        for _ in range(40):
            n = rng.randint(2, 7)
            g = UnlabeledDepGraph(n, random_bipartite(rng, n, rng.choice((0.3, 0.5))))
            res = solve_sepplan(g)
            rep = validate(res.plan, g)
            assert rep.ok and rep.max_rb == res.mrb
            assert res.mrb >= solve_brute(g).mrb

    def test_instances_with_geometry(self):
        for seed in range(5):
            inst = gen_random(30, 0.5, "unlabeled", seed)
            g = build_unlabeled(inst)
            res = solve_sepplan(g, inst)
            rep = validate(res.plan, g)
            assert rep.ok and rep.max_rb == res.mrb
            assert res.mrb >= solve_dfdp(g).mrb

    def test_grid_family_sqrt_growth(self):
        peaks = {}
        for m in (3, 4, 5, 6, 7, 8):
            g = gen_grid(m)
            start_xy, goal_xy, r = grid_embedding(m)
            centers = list(start_xy) + list(goal_xy)
            res = solve_sepplan(g, (centers, r))
            assert validate(res.plan, g).ok
            peaks[m] = res.mrb
            assert res.mrb <= 10 * math.sqrt(2 * 2 * g.n)
        assert peaks[8] <= 4 * peaks[3] + 8  # sane growth, not linear blowup
