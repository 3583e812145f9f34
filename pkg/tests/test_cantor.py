from fractions import Fraction

import numpy as np
import pytest

from oneinc.cantor import (STAR, ElementHypothesis, SubsetHypothesis, adversarial_distribution_hd,
                           bad_erm_first_cantor, bad_erm_second_cantor, check_revealing, good_erm,
                           improper_learner_hd, make_first_cantor, make_hd, make_second_cantor, members,
                           proper_erm_hd)
from oneinc.class_core import (ConstantHypothesis, DiscreteDistribution, LabeledSample, NonRealizableError,
                               ResourceError, boolean_class, true_error)


def sample(target, pts):
    return LabeledSample.from_target(pts, target)


def test_first_cantor_shape():
    cls = make_first_cantor(3)
    assert len(cls) == 8 and len(cls.labels) == 9
    assert cls.row_values(5) == (5, STAR, 5)
    assert check_revealing(cls)


def test_hd_rows_are_half_subsets():
    cls = make_hd(4)
    assert len(cls) == 6
    for r in range(len(cls)):
        vals = [v for v in cls.row_values(r) if v != STAR]
        assert len(vals) == 2 and len(set(vals)) == 1


def test_second_cantor_shape():
    cls = make_second_cantor(3)
    assert len(cls.domain) == 8 and len(cls) == 4
    assert cls.row_values(3) == (STAR,) * 8
    assert cls.value(1, 0b011) == 1 and cls.value(1, 0b101) == STAR
    assert check_revealing(cls)


def test_caps():
    with pytest.raises(ValueError):
        make_first_cantor(0)
    with pytest.raises(ResourceError):
        make_second_cantor(17)


def test_revealing_fails_for_boolean():
    assert not check_revealing(boolean_class(2).__class__.from_rows((0, 1), [(0, STAR), (0, 1)]))


def test_good_erm_first_cantor():
    cls = make_first_cantor(4)
    h = good_erm(sample(SubsetHypothesis(0b0110), [1, 0]), cls)
    assert [h(x) for x in range(4)] == [STAR, 6, 6, STAR]
    assert isinstance(good_erm(sample(SubsetHypothesis(0b0110), [0, 3]), cls), ConstantHypothesis)


def test_good_erm_rejects_unrealizable():
    with pytest.raises(NonRealizableError):
        good_erm(LabeledSample(((0, 0b0010),)), make_first_cantor(2))


def test_bad_erm_first_cantor_errs_on_unseen_mass():
    n = 6
    h = bad_erm_first_cantor(sample(SubsetHypothesis(0), [0, 2, 2]), n)
    d = DiscreteDistribution.uniform(range(n))
    assert true_error(h, SubsetHypothesis(0), d) == Fraction(4, 6)
    assert members(h.A) == [1, 3, 4, 5]


def test_proper_erm_hd_lexicographic():
    d = 6
    h = proper_erm_hd(sample(SubsetHypothesis(0b111000), [0, 1]), d)
    assert members(h.A) == [2, 3, 4]
    h = proper_erm_hd(sample(SubsetHypothesis(0b111000), [3]), d)
    assert h.A == 0b111000
    with pytest.raises(NonRealizableError):
        proper_erm_hd(LabeledSample(((0, 0b1),)), d)


def test_improper_learner_hd_is_star_when_blind():
    h = improper_learner_hd(sample(SubsetHypothesis(0b0011), [2, 3]), 4)
    assert all(h(x) == STAR for x in range(4))


def test_bad_erm_second_cantor():
    t = 3
    s = sample(ElementHypothesis(STAR), [0b001, 0b011])
    h = bad_erm_second_cantor(s, t)
    assert h == ElementHypothesis(2)
    s = sample(ElementHypothesis(STAR), [0b111])
    assert bad_erm_second_cantor(s, t) == ElementHypothesis(STAR)
    s = sample(ElementHypothesis(1), [0b010])
    assert bad_erm_second_cantor(s, t) == ElementHypothesis(1)
    d = DiscreteDistribution.uniform(range(8))
    assert true_error(ElementHypothesis(2), ElementHypothesis(STAR), d) == Fraction(1, 2)


def test_adversarial_distribution():
    d, eps = 10, Fraction(1, 32)
    A = 0b11111
    D = adversarial_distribution_hd(d, eps, A, 7)
    assert D.weights[7] == Fraction(1, 2)
    assert sum(D.weights.values()) == 1
    assert set(D.support) == {5, 6, 7, 8, 9}
    assert all(D.weights[x] == Fraction(1, 8) for x in (5, 6, 8, 9))
    with pytest.raises(ValueError):
        adversarial_distribution_hd(d, eps, A, 0)
    with pytest.raises(ValueError):
        adversarial_distribution_hd(d, Fraction(1, 8), A, 7)
    with pytest.raises(ValueError):
        adversarial_distribution_hd(d, eps, 0b111, 7)


def test_proper_vs_improper_on_blind_sample():
    d = 10
    A, x0 = 0b1111100000, 0
    D = adversarial_distribution_hd(d, Fraction(1, 32), A, x0)
    target = SubsetHypothesis(A)
    s = sample(target, [0, 0])
    assert true_error(improper_learner_hd(s, d), target, D) == 0
    # lexicographic pick {1..5} is wrong on 1..4, each of mass 1/8
    assert true_error(proper_erm_hd(s, d), target, D) == Fraction(1, 2)
    s = sample(target, [0, 1, 2])
    assert true_error(proper_erm_hd(s, d), target, D) == Fraction(1, 4)


def test_learners_are_consistent_random():
    rng = np.random.default_rng(0)
    cls = make_first_cantor(5)
    for _ in range(200):
        target = SubsetHypothesis(int(rng.integers(32)))
        s = sample(target, rng.integers(0, 5, size=int(rng.integers(1, 6))).tolist())
        for h in (good_erm(s, cls), bad_erm_first_cantor(s, 5)):
            assert all(h(x) == y for x, y in s)
