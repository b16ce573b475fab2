import json
import random

import pytest

from _oracles import pairwise_overlap_arcs, pairwise_overlap_edges, two_colorable
from runbuf.geometry import Arrangement, GeomInstance, Workspace, gen_random
from runbuf.graphs import (LabeledDepGraph, UndirectedGraph, UnlabeledDepGraph,
                           bidirectionalize, build_labeled, build_unlabeled,
                           graph_to_json, load_graph, parse_graph, save_graph,
                           stats)


def _swap_instance():
    """Two objects exactly exchanging poses."""
    ws = Workspace(10, 10)
    start = Arrangement(1.0, ((2, 2), (6, 6)), ws)
    goal = Arrangement(1.0, ((6, 6), (2, 2)), ws)
    return GeomInstance(start, goal, "labeled", labels=(1, 2))


def test_build_labeled_swap_is_two_cycle():
    g = build_labeled(_swap_instance())
    assert g.arcs == ((0, 1), (1, 0))


def test_build_labeled_identity_has_no_arcs():
    ws = Workspace(10, 10)
    arr = Arrangement(1.0, ((2, 2), (6, 6)), ws)
    g = build_labeled(GeomInstance(arr, arr, "labeled", labels=(1, 2)))
    assert g.arcs == ()


def test_build_labeled_requires_labeled_kind():
    inst = gen_random(4, 0.3, "unlabeled", seed=0)
    with pytest.raises(ValueError):
        build_labeled(inst)


@pytest.mark.parametrize("seed", range(8))
def test_build_labeled_matches_pairwise_scan(seed):
    inst = gen_random(8, 0.4, "labeled", seed)
    g = build_labeled(inst)
    assert set(g.arcs) == pairwise_overlap_arcs(inst)


@pytest.mark.parametrize("seed", range(8))
def test_build_unlabeled_matches_pairwise_scan(seed):
    inst = gen_random(8, 0.45, "unlabeled", seed)
    g = build_unlabeled(inst)
    assert set(g.edges) == pairwise_overlap_edges(inst)


def test_build_unlabeled_disjoint_footprints():
    ws = Workspace(20, 20)
    start = Arrangement(1.0, ((2, 2), (6, 2)), ws)
    goal = Arrangement(1.0, ((2, 12), (6, 12)), ws)
    g = build_unlabeled(GeomInstance(start, goal, "unlabeled"))
    assert g.edges == ()


def test_build_unlabeled_coincident_pose_edge():
    ws = Workspace(20, 20)
    start = Arrangement(1.0, ((2, 2), (8, 8)), ws)
    goal = Arrangement(1.0, ((14, 14), (2, 2)), ws)
    g = build_unlabeled(GeomInstance(start, goal, "unlabeled"))
    assert (0, 1) in g.edges


def test_unlabeled_degree_bound_big_instance():
    inst = gen_random(50, 0.5, "unlabeled", seed=2)
    g = build_unlabeled(inst)
    assert stats(g).max_degree <= 5


def test_unlabeled_always_two_colorable():
    for seed in range(5):
        inst = gen_random(12, 0.5, "unlabeled", seed)
        g = build_unlabeled(inst)
        assert two_colorable(g.n, g.n, g.edges)


def test_stats_empty_graph():
    st = stats(LabeledDepGraph(5, ()))
    assert st.max_degree == 0
    assert st.is_acyclic
    assert st.num_sccs == 5
    assert st.largest_component == 1


def test_stats_two_cycle():
    st = stats(LabeledDepGraph(2, ((0, 1), (1, 0))))
    assert st.num_sccs == 1
    assert not st.is_acyclic
    assert st.largest_component == 2


def test_stats_cycle_family_strongly_connected():
    from runbuf.families import gen_cycle

    st = stats(gen_cycle(9))
    assert st.largest_component == 9
    assert st.num_sccs == 1


def test_stats_unlabeled_component_bound():
    g = UnlabeledDepGraph(3, ((0, 0), (0, 1)))
    st = stats(g)
    assert st.largest_component <= 2 * g.n
    assert st.largest_component == 3  # s0, g0, g1 form one component
    assert st.max_degree == 2


def test_bidirectionalize_single_edge():
    g = bidirectionalize(UndirectedGraph(2, ((0, 1),)))
    assert g.arcs == ((0, 1), (1, 0))


def test_bidirectionalize_triangle():
    g = bidirectionalize(UndirectedGraph(3, ((0, 1), (1, 2), (0, 2))))
    assert len(g.arcs) == 6


def test_bidirectionalize_path():
    g = bidirectionalize(UndirectedGraph(3, ((0, 1), (1, 2))))
    assert len(g.arcs) == 4


def test_no_self_arcs_allowed():
    with pytest.raises(ValueError):
        LabeledDepGraph(2, ((0, 0),))


def test_graph_json_shape_and_order():
    g = LabeledDepGraph(3, ((2, 0), (0, 1)))
    obj = json.loads(graph_to_json(g))
    assert obj["type"] == "labeled"
    assert obj["n"] == 3
    assert obj["arcs"] == [[0, 1], [2, 0]]  # sorted lexicographically


def test_graph_json_roundtrip(tmp_path):
    rng = random.Random(0)
    for kind in ("labeled", "unlabeled"):
        n = 6
        pairs = [(i, j) for i in range(n) for j in range(n)
                 if kind == "unlabeled" or i != j]
        chosen = tuple(p for p in pairs if rng.random() < 0.4)
        g = (LabeledDepGraph(n, chosen) if kind == "labeled"
             else UnlabeledDepGraph(n, chosen))
        text = graph_to_json(g)
        assert graph_to_json(parse_graph(text)) == text
        p = tmp_path / f"{kind}.json"
        save_graph(g, p)
        assert graph_to_json(load_graph(p)) == text
