"""Dependency graphs built from geometric instances, plus diagnostics.

Labeled: digraph with an arc i -> j when object i's goal pose overlaps object
j's start pose (i must wait for j to move). Unlabeled: bipartite graph between
start poses and goal poses that overlap. Adjacency is kept as Python-int
bitmasks, which serve as bitsets for any n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .geometry import GeomInstance, overlaps


class LabeledDepGraph:
    """Directed dependency graph on n objects; no self-arcs."""

    __slots__ = ("n", "arcs", "dep", "rdep")

    def __init__(self, n: int, arcs):
        arcs = tuple(sorted((int(i), int(j)) for i, j in arcs))
        dep = [0] * n
        rdep = [0] * n
        for i, j in arcs:
            if i == j:
                raise ValueError("self-arcs are not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError("arc endpoint out of range")
            dep[i] |= 1 << j
            rdep[j] |= 1 << i
        self.n = n
        self.arcs = arcs
        self.dep = dep    # dep[i]: mask of objects i waits for
        self.rdep = rdep  # rdep[j]: mask of objects waiting for j

    def __eq__(self, other):
        return (isinstance(other, LabeledDepGraph)
                and self.n == other.n and self.arcs == other.arcs)

    def __hash__(self):
        return hash((self.n, self.arcs))

    def __repr__(self):
        return f"LabeledDepGraph(n={self.n}, arcs={len(self.arcs)})"


class UnlabeledDepGraph:
    """Bipartite graph between n start vertices and n goal vertices."""

    __slots__ = ("n", "edges", "goal_nbr", "start_nbr")

    def __init__(self, n: int, edges):
        edges = tuple(sorted((int(s), int(g)) for s, g in edges))
        goal_nbr = [0] * n
        start_nbr = [0] * n
        for s, g in edges:
            if not (0 <= s < n and 0 <= g < n):
                raise ValueError("edge endpoint out of range")
            goal_nbr[g] |= 1 << s
            start_nbr[s] |= 1 << g
        self.n = n
        self.edges = edges
        self.goal_nbr = goal_nbr    # goal_nbr[g]: mask of start vertices blocking g
        self.start_nbr = start_nbr  # start_nbr[s]: mask of goals touching s

    def __eq__(self, other):
        return (isinstance(other, UnlabeledDepGraph)
                and self.n == other.n and self.edges == other.edges)

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"UnlabeledDepGraph(n={self.n}, edges={len(self.edges)})"


class UndirectedGraph:
    """Simple undirected graph on n vertices."""

    __slots__ = ("n", "edges", "adj")

    def __init__(self, n: int, edges):
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError("loops are not allowed")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge endpoint out of range")
            norm.add((min(u, v), max(u, v)))
        self.n = n
        self.edges = tuple(sorted(norm))
        adj = [0] * n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        self.adj = adj


@dataclass(frozen=True)
class GraphStats:
    max_degree: int
    num_sccs: int
    largest_component: int
    is_acyclic: bool


def build_labeled(inst: GeomInstance) -> LabeledDepGraph:
    """Arc i -> j iff the goal pose of object i overlaps the start pose of j."""
    if inst.kind != "labeled":
        raise ValueError("build_labeled needs a labeled instance")
    n = inst.n
    r = inst.start.radius
    arcs = []
    for i in range(n):
        gi = inst.goal.poses[inst.labels[i] - 1]
        for j in range(n):
            if i != j and overlaps(gi, inst.start.poses[j], r):
                arcs.append((i, j))
    return LabeledDepGraph(n, arcs)


def build_unlabeled(inst: GeomInstance) -> UnlabeledDepGraph:
    """Edge (s, g) iff start pose s overlaps goal pose g."""
    n = inst.n
    r = inst.start.radius
    edges = []
    for s in range(n):
        ps = inst.start.poses[s]
        for g in range(n):
            if overlaps(ps, inst.goal.poses[g], r):
                edges.append((s, g))
    return UnlabeledDepGraph(n, edges)


def bidirectionalize(g: UndirectedGraph) -> LabeledDepGraph:
    """Replace each undirected edge with the two opposite arcs."""
    arcs = []
    for u, v in g.edges:
        arcs.append((u, v))
        arcs.append((v, u))
    return LabeledDepGraph(g.n, arcs)


def _bits(x):
    while x:
        b = x & -x
        yield b.bit_length() - 1
        x ^= b


def _tarjan_scc_sizes(n, out):
    """Iterative Tarjan; returns the list of SCC sizes."""
    index = [0] * n
    low = [0] * n
    on_stack = [False] * n
    seen = [False] * n
    stack = []
    sizes = []
    counter = 1
    for root in range(n):
        if seen[root]:
            continue
        work = [(root, iter(list(_bits(out[root]))))]
        seen[root] = True
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if not seen[w]:
                    seen[w] = True
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(list(_bits(out[w])))))
                    advanced = True
                    break
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                size = 0
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    size += 1
                    if w == v:
                        break
                sizes.append(size)
    return sizes


def _component_sizes(n, adj):
    seen = [False] * n
    sizes = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        frontier = [root]
        size = 0
        while frontier:
            v = frontier.pop()
            size += 1
            for w in _bits(adj[v]):
                if not seen[w]:
                    seen[w] = True
                    frontier.append(w)
        sizes.append(size)
    return sizes


def stats(g) -> GraphStats:
    """Structural diagnostics.

    Labeled: degree counts incident arcs (in + out); SCCs via Tarjan;
    components in the undirected sense; acyclic iff every SCC is a singleton.
    Unlabeled: the bipartite graph on 2n vertices; num_sccs is its component
    count; acyclic iff it is a forest.
    """
    if isinstance(g, LabeledDepGraph):
        n = g.n
        deg = [0] * n
        for i, j in g.arcs:
            deg[i] += 1
            deg[j] += 1
        adj = [g.dep[i] | g.rdep[i] for i in range(n)]
        scc_sizes = _tarjan_scc_sizes(n, g.dep)
        comp_sizes = _component_sizes(n, adj)
        return GraphStats(
            max_degree=max(deg, default=0),
            num_sccs=len(scc_sizes),
            largest_component=max(comp_sizes, default=0),
            is_acyclic=all(s == 1 for s in scc_sizes),
        )
    if isinstance(g, UnlabeledDepGraph):
        n2 = 2 * g.n
        adj = [0] * n2  # starts 0..n-1, goals n..2n-1
        for s, gl in g.edges:
            adj[s] |= 1 << (g.n + gl)
            adj[g.n + gl] |= 1 << s
        deg = [bin(a).count("1") for a in adj]
        comp_sizes = _component_sizes(n2, adj)
        ncomp = len(comp_sizes)
        forest = len(g.edges) == n2 - ncomp
        return GraphStats(
            max_degree=max(deg, default=0),
            num_sccs=ncomp,
            largest_component=max(comp_sizes, default=0),
            is_acyclic=forest,
        )
    raise TypeError(f"unsupported graph type {type(g).__name__}")


def graph_to_json(g) -> str:
    """{"type", "n", "arcs"} with 0-based, lexicographically sorted pairs."""
    if isinstance(g, LabeledDepGraph):
        kind, pairs = "labeled", g.arcs
    elif isinstance(g, UnlabeledDepGraph):
        kind, pairs = "unlabeled", g.edges
    else:
        raise TypeError(f"unsupported graph type {type(g).__name__}")
    body = ", ".join(f"[{a}, {b}]" for a, b in pairs)
    return f'{{"type": "{kind}", "n": {g.n}, "arcs": [{body}]}}\n'


def parse_graph(text: str):
    obj = json.loads(text)
    pairs = [(int(a), int(b)) for a, b in obj["arcs"]]
    if obj["type"] == "labeled":
        return LabeledDepGraph(int(obj["n"]), pairs)
    if obj["type"] == "unlabeled":
        return UnlabeledDepGraph(int(obj["n"]), pairs)
    raise ValueError(f"unknown graph type {obj['type']!r}")


def save_graph(g, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(graph_to_json(g))


def load_graph(path):
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())
