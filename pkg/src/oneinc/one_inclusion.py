"""One-inclusion hypergraphs, their orientations and density profile.

All densities are exact ``Fraction`` values.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Sequence

import networkx as nx
import numpy as np

from .class_core import FiniteClass, NonRealizableError, ResourceError, restricted_rows

EXHAUSTIVE_CAP = 20
MULTISET_CAP = 200_000


@dataclass(frozen=True)
class OneInclusionGraph:
    """Vertices are the rows of ``H|_S``; ``edges[k] = (i, members)``."""

    points: tuple
    labels: tuple
    vertices: np.ndarray
    edges: tuple

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def m(self) -> int:
        return len(self.points)

    def incidence(self) -> list[list[int]]:
        inc = [[] for _ in range(self.n_vertices)]
        for k, (_, members) in enumerate(self.edges):
            for v in members:
                inc[v].append(k)
        return inc

    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for _, members in self.edges:
            for v in members:
                deg[v] += 1
        return deg

    def vertex_labels(self, v: int) -> tuple:
        return tuple(self.labels[k] for k in self.vertices[v])

    def to_dict(self) -> dict:
        from .class_core import label_to_text
        return {
            "points": [str(x) for x in self.points],
            "vertices": [[label_to_text(y) for y in self.vertex_labels(v)] for v in range(self.n_vertices)],
            "edges": [{"coordinate": i, "members": list(members)} for i, members in self.edges],
        }


@dataclass(frozen=True)
class Orientation:
    head: tuple
    out_degree: tuple

    @property
    def max_out_degree(self) -> int:
        return max(self.out_degree, default=0)


@dataclass(frozen=True)
class DensityReport:
    value: Fraction
    witness: tuple
    method: str
    upper: Fraction | None = None

    @property
    def exact(self) -> bool:
        return self.method == "exhaustive"


@dataclass(frozen=True)
class MuReport:
    value: Fraction
    witness: tuple
    exact: bool
    n_samples: int


def build_graph(cls: FiniteClass, S: Sequence) -> OneInclusionGraph:
    """One-inclusion hypergraph of ``cls`` restricted to the point sequence ``S``.

    Repeated points in ``S`` never carry edges: rows equal on one copy are equal
    on the other.
    """
    S = tuple(S)
    rows = restricted_rows(cls, S)
    m = len(S)
    edges = []
    for i in range(m):
        if rows.shape[0] < 2:
            break
        rest = np.delete(rows, i, axis=1)
        if rest.shape[1] == 0:
            groups = [np.arange(rows.shape[0])]
        else:
            _, inverse = np.unique(rest, axis=0, return_inverse=True)
            inverse = inverse.ravel()
            order = np.argsort(inverse, kind="stable")
            splits = np.flatnonzero(np.diff(inverse[order])) + 1
            groups = np.split(order, splits)
        for members in groups:
            if len(members) >= 2:
                edges.append((i, tuple(sorted(int(v) for v in members))))
    edges.sort(key=lambda e: (e[0], e[1][0]))
    g = OneInclusionGraph(S, cls.labels, rows, tuple(edges))
    check_graph(g)
    return g


def check_graph(g: OneInclusionGraph) -> None:
    """Structural invariants of one-inclusion graphs; a failure is a bug."""
    seen_slot = set()
    for i, members in g.edges:
        assert len(members) >= 2
        sub = g.vertices[list(members)]
        assert len(set(sub[:, i].tolist())) == len(members), "edge members must differ at their coordinate"
        rest = np.delete(sub, i, axis=1)
        assert (rest == rest[0]).all(), "edge members must agree off their coordinate"
        for v in members:
            assert (v, i) not in seen_slot
            seen_slot.add((v, i))
    # two members shared by distinct edges would have to agree everywhere
    pair_owner = {}
    for k, (_, members) in enumerate(g.edges):
        if len(members) > 40:
            continue
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                key = (members[a], members[b])
                assert key not in pair_owner, "distinct edges share two vertices"
                pair_owner[key] = k


# -- peeling ----------------------------------------------------------------

def _peel(n: int, edges: Sequence[Sequence[int]]):
    """Repeatedly delete a minimum induced-degree vertex (ties by index).

    Returns (order, degree at removal, best average, best prefix start).
    The induced degree of v in U counts edges e with v in e and |e ∩ U| >= 2.
    """
    inc = [[] for _ in range(n)]
    for k, members in enumerate(edges):
        for v in members:
            inc[v].append(k)
    live = [len(e) for e in edges]
    deg = [len(inc[v]) for v in range(n)]
    total = sum(deg)
    alive = [True] * n
    heap = [(deg[v], v) for v in range(n)]
    heapq.heapify(heap)
    order, removal_deg = [], []
    best, best_step = Fraction(-1), 0
    remaining = n
    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != deg[v]:
            continue
        avg = Fraction(total, remaining)
        if avg > best:
            best, best_step = avg, len(order)
        order.append(v)
        removal_deg.append(d)
        alive[v] = False
        remaining -= 1
        total -= d
        for k in inc[v]:
            live[k] -= 1
            if live[k] == 1:
                # the last surviving member loses this edge
                for u in edges[k]:
                    if alive[u]:
                        deg[u] -= 1
                        total -= 1
                        heapq.heappush(heap, (deg[u], u))
    return order, removal_deg, best, best_step


def orient_greedy(g: OneInclusionGraph) -> Orientation:
    """Head every edge at its member removed last by minimum-degree peeling."""
    members = [e for _, e in g.edges]
    order, _, _, _ = _peel(g.n_vertices, members)
    pos = {v: t for t, v in enumerate(order)}
    head = tuple(max(e, key=pos.__getitem__) for e in members)
    return _orientation(g, head)


def _orientation(g: OneInclusionGraph, head: Sequence[int]) -> Orientation:
    out = [0] * g.n_vertices
    for (_, members), h in zip(g.edges, head):
        for v in members:
            if v != h:
                out[v] += 1
    return Orientation(tuple(head), tuple(out))


def orientation_from_heads(g: OneInclusionGraph, head: Sequence[int]) -> Orientation:
    for (_, members), h in zip(g.edges, head):
        if h not in members:
            raise ValueError(f"head {h} is not a member of edge {members}")
    return _orientation(g, head)


def _feasible_heads(g: OneInclusionGraph, k: int, deg: list[int]):
    """Heads with every out-degree <= k, or None.

    Circulation: s->edge [1,1], edge->member [0,1], vertex->t [max(0, deg-k), deg],
    t->s unbounded; lower bounds are moved into node demands.
    """
    lower = [max(0, d - k) for d in deg]
    if sum(lower) > len(g.edges):
        return None
    G = nx.DiGraph()
    excess = {"s": 0, "t": 0}

    def arc(u, v, lo, hi):
        if hi is None:
            G.add_edge(u, v)
        else:
            G.add_edge(u, v, capacity=hi - lo)
        excess[v] = excess.get(v, 0) + lo
        excess[u] = excess.get(u, 0) - lo

    for j, (_, members) in enumerate(g.edges):
        arc("s", ("e", j), 1, 1)
        for v in members:
            arc(("e", j), ("v", v), 0, 1)
    for v, d in enumerate(deg):
        if d:
            arc(("v", v), "t", lower[v], d)
    arc("t", "s", 0, None)
    need = 0
    for node, ex in excess.items():
        if ex > 0:
            G.add_edge("S*", node, capacity=ex)
            need += ex
        elif ex < 0:
            G.add_edge(node, "T*", capacity=-ex)
    if need == 0:
        return tuple(members[0] for _, members in g.edges)
    value, flow = nx.maximum_flow(G, "S*", "T*")
    if value < need:
        return None
    head = []
    for j, (_, members) in enumerate(g.edges):
        chosen = [v for v in members if flow[("e", j)].get(("v", v), 0) > 0]
        head.append(chosen[0])
    return tuple(head)


def orient_exact(g: OneInclusionGraph) -> Orientation:
    """Orientation minimizing the maximum out-degree (binary search over k)."""
    if not g.edges:
        return _orientation(g, ())
    deg = g.degrees()
    greedy = orient_greedy(g)
    lo, hi = 0, greedy.max_out_degree
    best = greedy.head
    while lo < hi:
        mid = (lo + hi) // 2
        heads = _feasible_heads(g, mid, deg)
        if heads is None:
            lo = mid + 1
        else:
            hi, best = mid, heads
    return _orientation(g, best)


# -- density ----------------------------------------------------------------

def _components(n: int, edges: Sequence[Sequence[int]]) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in edges:
        r = find(e[0])
        for v in e[1:]:
            rv = find(v)
            if rv != r:
                parent[rv] = r
    comps: dict[int, list[int]] = {}
    for v in range(n):
        comps.setdefault(find(v), []).append(v)
    return list(comps.values())


def induced_degree_sum(edges: Sequence[Sequence[int]], U) -> int:
    U = set(U)
    total = 0
    for e in edges:
        c = sum(1 for v in e if v in U)
        if c >= 2:
            total += c
    return total


def _prune(vertices: list[int], edges: Sequence[Sequence[int]], threshold: Fraction) -> list[int]:
    """Drop vertices whose induced degree d satisfies 2d < threshold, to a fixpoint.

    Every vertex of a densest subset U* has 2 deg_{U*} >= md, so pruning against a
    valid lower bound never loses an optimum.
    """
    alive = set(vertices)
    changed = True
    while changed:
        changed = False
        deg = dict.fromkeys(alive, 0)
        for e in edges:
            inside = [v for v in e if v in alive]
            if len(inside) >= 2:
                for v in inside:
                    deg[v] += 1
        for v, d in deg.items():
            if 2 * d < threshold:
                alive.discard(v)
                changed = True
    return sorted(alive)


def _exhaustive_density(vertices: list[int], edges: Sequence[Sequence[int]]):
    s = len(vertices)
    local = {v: t for t, v in enumerate(vertices)}
    masks = np.arange(1, 1 << s, dtype=np.int64)
    sizes = np.bitwise_count(masks)
    total = np.zeros(masks.shape, dtype=np.int64)
    for e in edges:
        em = 0
        for v in e:
            if v in local:
                em |= 1 << local[v]
        if bin(em).count("1") < 2:
            continue
        c = np.bitwise_count(masks & em).astype(np.int64)
        total += np.where(c >= 2, c, 0)
    best, best_mask = Fraction(-1), 0
    for k in range(1, s + 1):
        idx = int(np.argmax(np.where(sizes == k, total, -1)))
        val = Fraction(int(total[idx]), k)
        if val > best:
            best, best_mask = val, int(masks[idx])
    witness = tuple(vertices[t] for t in range(s) if best_mask >> t & 1)
    return best, witness


def max_avg_degree(g: OneInclusionGraph, cap: int = EXHAUSTIVE_CAP) -> DensityReport:
    """Maximal average degree of the induced sub-hypergraphs.

    Exact when every pruned component has at most ``cap`` vertices; otherwise a
    [peeling lower bound, max-degree upper bound] interval.
    """
    return _density(g.n_vertices, [e for _, e in g.edges], cap)


def _density(n: int, edges: list, cap: int) -> DensityReport:
    if not edges:
        return DensityReport(Fraction(0), (0,), "exhaustive")
    order, _, lb, step = _peel(n, edges)
    best, witness = lb, tuple(sorted(order[step:]))
    bounded = False
    upper = Fraction(0)
    for comp in _components(n, edges):
        if len(comp) < 2:
            continue
        comp_edges = [e for e in edges if e[0] in set(comp)]
        core = _prune(comp, comp_edges, best)
        if len(core) < 2:
            continue
        for sub in _components_within(core, comp_edges):
            if len(sub) < 2:
                continue
            if len(sub) > cap:
                bounded = True
                deg = {v: 0 for v in sub}
                for e in comp_edges:
                    inside = [v for v in e if v in deg]
                    if len(inside) >= 2:
                        for v in inside:
                            deg[v] += 1
                upper = max(upper, Fraction(max(deg.values())))
                continue
            val, wit = _exhaustive_density(sub, comp_edges)
            if val > best:
                best, witness = val, wit
    if bounded:
        return DensityReport(best, witness, "bounded", upper=max(upper, best))
    return DensityReport(best, witness, "exhaustive")


def _components_within(vertices: list[int], edges) -> list[list[int]]:
    local = {v: t for t, v in enumerate(vertices)}
    sub_edges = []
    for e in edges:
        inside = [local[v] for v in e if v in local]
        if len(inside) >= 2:
            sub_edges.append(inside)
    return [[vertices[t] for t in comp] for comp in _components(len(vertices), sub_edges)]


def core_vertices(g: OneInclusionGraph, k: int) -> list[int]:
    """Largest vertex set in which every vertex has induced degree >= k."""
    alive = set(range(g.n_vertices))
    members = [e for _, e in g.edges]
    changed = True
    while changed and alive:
        changed = False
        deg = dict.fromkeys(alive, 0)
        for e in members:
            inside = [v for v in e if v in alive]
            if len(inside) >= 2:
                for v in inside:
                    deg[v] += 1
        for v, d in deg.items():
            if d < k:
                alive.discard(v)
                changed = True
    return sorted(alive)


# -- mu profile and transductive error ---------------------------------------

def _samples(cls: FiniteClass, m: int, mode, cap: int):
    if mode == "exhaustive":
        n = len(cls.domain)
        from math import comb
        count = comb(n + m - 1, m)
        if count > cap:
            raise ResourceError(f"{count} multisets of size {m} exceed cap {cap}")
        return combinations_with_replacement(cls.domain, m), True
    kind, k, seed = mode
    if kind != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    idx = [sorted(rng.integers(0, len(cls.domain), size=m).tolist()) for _ in range(k)]
    return ([cls.domain[j] for j in row] for row in idx), False


def mu_profile(cls: FiniteClass, m: int, mode="exhaustive", cap: int = MULTISET_CAP,
               md_cap: int = EXHAUSTIVE_CAP) -> MuReport:
    """max md(G(H|_S)) over size-m multisets S; sampled mode gives a lower bound."""
    if m < 1:
        raise ValueError("m must be >= 1")
    samples, exhaustive = _samples(cls, m, mode, cap)
    best, witness, count = Fraction(-1), (), 0
    for S in samples:
        count += 1
        rep = max_avg_degree(build_graph(cls, S), cap=md_cap)
        if not rep.exact and exhaustive:
            raise ResourceError(f"md of sample {tuple(S)} not exact within cap {md_cap}")
        if rep.value > best:
            best, witness = rep.value, tuple(S)
    return MuReport(best, witness, exhaustive, count)


class OneInclusionPredictor:
    """Transductive predictor; caches graph and exact orientation per sample."""

    def __init__(self, cls: FiniteClass):
        self.cls = cls
        self._cache: dict[tuple, tuple[OneInclusionGraph, Orientation]] = {}

    def graph(self, S: Sequence):
        key = tuple(S)
        if key not in self._cache:
            g = build_graph(self.cls, key)
            self._cache[key] = (g, orient_exact(g))
        return self._cache[key]

    def predict(self, S: Sequence, known: Sequence, i: int):
        S = tuple(S)
        if len(known) != len(S):
            raise ValueError("known labels must align with S (entry i is ignored)")
        g, orient = self.graph(S)
        mask = np.ones(g.n_vertices, dtype=bool)
        for j, y in enumerate(known):
            if j == i:
                continue
            if not self.cls.has_label(y):
                raise NonRealizableError(f"label {y!r} at position {j} (point {S[j]!r}) is outside the alphabet")
            mask &= g.vertices[:, j] == self.cls.label_index(y)
            if not mask.any():
                raise NonRealizableError(
                    f"no hypothesis agrees with the labels; first contradicted constraint: "
                    f"position {j} (point {S[j]!r}) label {y!r}")
        consistent = np.flatnonzero(mask)
        if len(consistent) == 1:
            v = int(consistent[0])
        else:
            members = tuple(int(v) for v in consistent)
            k = next(k for k, (c, e) in enumerate(g.edges) if c == i and e == members)
            v = orient.head[k]
        return self.cls.labels[g.vertices[v, i]]


def predict_transductive(cls: FiniteClass, S: Sequence, known: Sequence, i: int):
    """Label for position ``i`` of ``S`` given the labels at every other position."""
    return OneInclusionPredictor(cls).predict(S, known, i)


def worst_case_transductive_error(cls: FiniteClass, m: int, mode="exhaustive", cap: int = MULTISET_CAP):
    """max over S and targets of the exact-orientation predictor's leave-one-out error.

    For a target vertex the mistakes are exactly its out-degree. Returns
    ``(error, witness_S)``.
    """
    samples, _ = _samples(cls, m, mode, cap)
    best, witness = Fraction(0), None
    for S in samples:
        S = tuple(S)
        g = build_graph(cls, S)
        err = Fraction(orient_exact(g).max_out_degree, m)
        if witness is None or err > best:
            best, witness = err, S
    return best, witness
