from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oneinc.class_core import (ABSTAIN, ABSTAIN_TOKEN, ConstantHypothesis, DiscreteDistribution, DomainError,
                               FiniteClass, LabeledSample, Realization, ResourceError, boolean_class,
                               class_from_json, class_to_json, disjoint_union, empirical_error, full_class,
                               random_class, restrict, restricted_rows, true_error, verify_realization)


@pytest.fixture
def tiny():
    return FiniteClass.from_rows(("a", "b"), [(0, 1), (1, 1), (1, 0)], name="tiny")


def test_from_rows_infers_alphabet(tiny):
    assert tiny.labels == (0, 1)
    assert len(tiny) == 3
    assert tiny.value(2, "b") == 0


def test_rejects_duplicate_rows():
    with pytest.raises(ValueError, match="duplicate"):
        FiniteClass.from_rows((0, 1), [(0, 0), (0, 0)])


def test_dedupe_flag():
    assert len(FiniteClass.from_rows((0, 1), [(0, 0), (0, 0), (1, 0)], dedupe=True)) == 2


def test_rejects_bad_table_shape():
    with pytest.raises(ValueError):
        FiniteClass((0, 1), (0, 1), np.zeros((2, 3), dtype=int))
    with pytest.raises(ValueError):
        FiniteClass((0, 1), (0, 1), np.full((1, 2), 2))


def test_unknown_point(tiny):
    with pytest.raises(DomainError):
        tiny.point_index("zz")


def test_restrict_dedupes(tiny):
    r = restrict(tiny, ["b"])
    assert sorted(r.row_values(i) for i in range(len(r))) == [(0,), (1,)]
    with pytest.raises(ValueError):
        restrict(tiny, ["a", "a"])


def test_restricted_rows_multiset(tiny):
    rows = restricted_rows(tiny, ["a", "a"])
    assert rows.shape == (2, 2)
    assert (rows[:, 0] == rows[:, 1]).all()


def test_true_error_exact_and_abstain():
    target = ConstantHypothesis(1)
    d = DiscreteDistribution.uniform(range(4))
    h = lambda x: 1 if x < 3 else 0
    assert true_error(h, target, d) == Fraction(1, 4)
    assert true_error(lambda x: ABSTAIN, ConstantHypothesis(ABSTAIN), d) == 1


def test_empirical_error():
    s = LabeledSample(((0, 1), (1, 1), (2, 0)))
    assert empirical_error(ConstantHypothesis(1), s) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        LabeledSample(((0, ABSTAIN),))


def test_distribution_validation_and_mixture():
    with pytest.raises(ValueError):
        DiscreteDistribution({0: 0.5, 1: 0.6})
    with pytest.raises(ValueError):
        DiscreteDistribution({0: -0.5, 1: 1.5})
    a = DiscreteDistribution({0: Fraction(1)})
    b = DiscreteDistribution({1: Fraction(1)})
    mix = a.mixture(b, Fraction(1, 3))
    assert list(mix.weights) == [0, 1]
    assert mix.weights[1] == Fraction(2, 3)


def test_sampling_reproducible():
    d = DiscreteDistribution.uniform(range(5))
    assert d.sample(np.random.default_rng(3), 10) == d.sample(np.random.default_rng(3), 10)


def test_disjoint_union_counts():
    u = disjoint_union(boolean_class(1), 3)
    assert len(u) == 8 and len(u.domain) == 3
    with pytest.raises(ResourceError):
        disjoint_union(boolean_class(2), 6, row_cap=1000)


def test_full_class_cap():
    assert len(full_class((0, 1), "abc")) == 9
    with pytest.raises(ResourceError):
        full_class(range(30), (0, 1))


def test_verify_realization_identity_and_failure(tiny):
    lam = {0: 0, 1: 1, ABSTAIN: ABSTAIN}
    ok, _ = verify_realization(tiny, tiny, Realization({"a": "a", "b": "b"}, lam))
    assert ok
    smaller = FiniteClass.from_rows(("a", "b"), [(0, 1), (1, 1)])
    ok, (row, _) = verify_realization(tiny, smaller, Realization({"a": "a", "b": "b"}, lam))
    assert not ok and row == 2


def test_json_round_trip_with_abstain():
    cls = FiniteClass(("p", "q"), ("x", ABSTAIN), np.array([[0, 1], [1, 0]]))
    text = class_to_json(cls)
    assert ABSTAIN_TOKEN in text
    back = class_from_json(text)
    assert back.labels[1] is ABSTAIN
    assert (back.table == cls.table).all()


@pytest.mark.parametrize("text,msg", [
    ('{"domain": ["a"], "labels": ["0"]}', "missing"),
    ('{"domain": ["a"], "labels": ["0"], "hypotheses": [["0"]], "x": 1}', "unknown"),
    ('{"domain": ["a"], "labels": ["0"], "hypotheses": [["1"]]}', "outside"),
    ('{"domain": ["a"], "labels": ["0"], "hypotheses": [["0"], ["0"]]}', "duplicate"),
])
def test_json_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        class_from_json(text)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3), st.integers(1, 30))
def test_random_class_rows_distinct(seed, n, k, rows):
    cls = random_class(np.random.default_rng(seed), n, k, rows)
    assert len({cls.row_values(r) for r in range(len(cls))}) == len(cls) <= min(rows, k**n)
    assert class_from_json(class_to_json(cls)).table.shape == cls.table.shape
