from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oneinc.cantor import make_first_cantor
from oneinc.class_core import FiniteClass, NonRealizableError, boolean_class, random_class
from oneinc.one_inclusion import (OneInclusionGraph, OneInclusionPredictor, build_graph, core_vertices,
                                  induced_degree_sum, max_avg_degree, mu_profile, orient_exact, orient_greedy,
                                  orientation_from_heads, predict_transductive, worst_case_transductive_error)


def abstract_graph(n, edges):
    return OneInclusionGraph((0,), (0,), np.zeros((n, 1), dtype=np.int64), tuple((0, tuple(e)) for e in edges))


def brute_edges(cls, S):
    """Group rows of H|_S by agreement off each coordinate, the slow way."""
    rows = sorted({tuple(cls.table[r, [cls.point_index(x) for x in S]]) for r in range(len(cls))})
    out = set()
    for i in range(len(S)):
        groups = {}
        for r in rows:
            groups.setdefault(r[:i] + r[i + 1:], []).append(r)
        out |= {(i, tuple(sorted(g))) for g in groups.values() if len(g) >= 2}
    return out


def brute_md(n, edges):
    best = Fraction(0)
    for k in range(1, n + 1):
        for U in combinations(range(n), k):
            best = max(best, Fraction(induced_degree_sum(edges, U), k))
    return best


def brute_min_max_out(n, edges):
    best = None
    for heads in product(*edges):
        out = [0] * n
        for e, h in zip(edges, heads):
            for v in e:
                out[v] += v != h
        best = max(out) if best is None else min(best, max(out))
    return best


def graph_edges_as_rows(g):
    return {(i, tuple(sorted(tuple(g.vertices[v]) for v in e))) for i, e in g.edges}


def test_boolean2_is_four_cycle():
    g = build_graph(boolean_class(2), [0, 1])
    assert g.n_vertices == 4 and len(g.edges) == 4
    assert all(len(e) == 2 for _, e in g.edges)
    assert max_avg_degree(g).value == 2
    assert orient_exact(g).max_out_degree == 1
    assert orient_greedy(g).max_out_degree <= 2


def test_constant_functions_one_edge():
    cls = FiniteClass.from_rows((0,), [("a",), ("b",), ("c",)])
    g = build_graph(cls, [0])
    assert g.edges == ((0, (0, 1, 2)),)
    # each vertex lies in exactly one edge
    assert max_avg_degree(g).value == 1


def test_first_cantor3_matches_grouping_oracle():
    cls = make_first_cantor(3)
    g = build_graph(cls, [0, 1, 2])
    assert graph_edges_as_rows(g) == brute_edges(cls, [0, 1, 2])
    assert max_avg_degree(g).value == brute_md(g.n_vertices, [e for _, e in g.edges])


def test_duplicate_points_have_no_edges():
    g = build_graph(boolean_class(1), [0, 0])
    assert g.n_vertices == 2 and g.edges == ()


def test_path_and_star_density():
    assert max_avg_degree(abstract_graph(3, [(0, 1), (1, 2)])).value == Fraction(4, 3)
    star = abstract_graph(4, [(0, 1), (0, 2), (0, 3)])
    assert max_avg_degree(star).value == Fraction(3, 2)
    assert orient_greedy(star).max_out_degree <= 1


def test_single_edge_orientation():
    o = orient_exact(abstract_graph(2, [(0, 1)]))
    assert sorted(o.out_degree) == [0, 1]


def test_isolated_vertex_untouched():
    o = orient_exact(abstract_graph(3, [(0, 1)]))
    assert o.out_degree[2] == 0


def test_cube_exact_optimum_against_full_search():
    g = build_graph(boolean_class(3), [0, 1, 2])
    edges = [e for _, e in g.edges]
    assert len(edges) == 12
    assert brute_min_max_out(8, edges) == 2
    assert orient_exact(g).max_out_degree == 2


def test_orientation_from_heads_validates():
    g = abstract_graph(3, [(0, 1)])
    with pytest.raises(ValueError):
        orientation_from_heads(g, [2])


def test_bounded_density_beyond_cap():
    g = build_graph(boolean_class(5), range(5))
    rep = max_avg_degree(g, cap=8)
    assert rep.method == "bounded" and not rep.exact
    assert rep.value <= 5 <= rep.upper
    assert orient_greedy(g).max_out_degree <= rep.value


def test_mu_profile_hypercube_and_singleton():
    assert mu_profile(boolean_class(3), 3).value == 3
    single = FiniteClass.from_rows((0, 1), [(0, 0)])
    assert all(mu_profile(single, m).value == 0 for m in (1, 2, 3))


def test_mu_at_one():
    cls = FiniteClass.from_rows((0, 1), [(0, 0), (1, 0), (2, 0), (0, 1)])
    # a single point gives one edge per column; md is 1 whenever some column varies
    assert mu_profile(cls, 1).value == 1
    const = FiniteClass.from_rows((0, 1), [(0, 0), (0, 1)])
    assert mu_profile(const, 1).value == 1
    assert max_avg_degree(build_graph(const, [0])).value == 0


def test_core_vertices_cube():
    g = build_graph(boolean_class(3), [0, 1, 2])
    assert core_vertices(g, 3) == list(range(8))
    assert core_vertices(g, 4) == []


def test_predict_determined_and_contradiction():
    cls = boolean_class(2)
    assert predict_transductive(cls, [0, 1], [None, 1], 0) in (0, 1)
    tiny = FiniteClass.from_rows((0, 1), [(0, 0), (1, 1)])
    assert predict_transductive(tiny, [0, 1], [None, 1], 0) == 1
    with pytest.raises(NonRealizableError, match="position 1"):
        predict_transductive(tiny, [0, 1, 0], [0, 1, None], 2)


def test_worst_case_values():
    assert worst_case_transductive_error(boolean_class(2), 2)[0] == Fraction(1, 2)
    single = FiniteClass.from_rows((0, 1), [(0, 0)])
    assert worst_case_transductive_error(single, 2)[0] == 0
    pair = FiniteClass.from_rows((0, 1, 2), [(0, 0, 0), (0, 1, 0)])
    assert worst_case_transductive_error(pair, 3)[0] == Fraction(1, 3)


def _direct_worst_case(cls, m):
    pred = OneInclusionPredictor(cls)
    from itertools import combinations_with_replacement
    worst = Fraction(0)
    for S in combinations_with_replacement(cls.domain, m):
        for r in range(len(cls)):
            labels = [cls.value(r, x) for x in S]
            wrong = sum(pred.predict(S, labels, i) != labels[i] for i in range(m))
            worst = max(worst, Fraction(wrong, m))
    return worst


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_worst_case_matches_direct_prediction(seed, m):
    cls = random_class(np.random.default_rng(seed), 3, 3, 10)
    assert worst_case_transductive_error(cls, m)[0] == _direct_worst_case(cls, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_graph_invariants_random(seed, m):
    rng = np.random.default_rng(seed)
    cls = random_class(rng, 4, 3, 25)
    S = rng.integers(0, 4, size=m).tolist()
    g = build_graph(cls, S)
    assert graph_edges_as_rows(g) == brute_edges(cls, S)
    edges = [e for _, e in g.edges]
    md = max_avg_degree(g)
    assert md.exact and md.value == brute_md(g.n_vertices, edges)
    gr, ex = orient_greedy(g), orient_exact(g)
    assert gr.max_out_degree <= md.value
    assert ex.max_out_degree <= gr.max_out_degree
    for o in (gr, ex):
        assert sum(o.out_degree) == sum(len(e) - 1 for e in edges)
    if len(edges) <= 10:
        assert ex.max_out_degree == brute_min_max_out(g.n_vertices, edges)
