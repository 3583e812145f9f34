
import numpy as np
import pytest

from oneinc.cantor import SubsetHypothesis, bad_erm_first_cantor, good_erm, make_first_cantor
from oneinc.class_core import DiscreteDistribution, LabeledSample, boolean_class
from oneinc.learners_eval import (CSV_COLUMNS, CurvePoint, ExperimentRecord, LearnerHandle,
                                  estimate_sample_complexity, failure_upper_bound, ibar_learner,
                                  inductive_from_transductive, learning_curve, pac_wrapper_ibar, records_csv,
                                  run_trials, summarize, summary_csv, trial_rng, wrapper_parts)


@pytest.fixture
def cantor6():
    cls = make_first_cantor(6)
    return cls, DiscreteDistribution.uniform(cls.domain)


def handles(cls, n):
    return (LearnerHandle("good", lambda s: good_erm(s, cls), "improper"),
            LearnerHandle("bad", lambda s: bad_erm_first_cantor(s, n), "proper"))


def test_learner_kind_checked():
    with pytest.raises(ValueError):
        LearnerHandle("x", lambda s: s, "weird")


def test_trial_rng_independent_of_order():
    a = trial_rng(5, 3, 7).integers(1 << 30, size=4)
    trial_rng(5, 3, 6).integers(1 << 30, size=100)
    assert (a == trial_rng(5, 3, 7).integers(1 << 30, size=4)).all()


def test_curve_point_checks():
    with pytest.raises(ValueError):
        CurvePoint(1, 0, 0.0, 0.0, (0, 0, 0), 0)
    with pytest.raises(ValueError):
        CurvePoint(1, 3, 0.0, 0.0, (0.5, 0.1, 0.9), 0)


def test_summarize():
    p = summarize(4, [0.0, 1.0, 0.0, 1.0], 0)
    assert p.mean == 0.5 and p.se == pytest.approx(np.std([0, 1, 0, 1], ddof=1) / 2)


def test_bad_erm_matches_unseen_mass_oracle(cantor6):
    cls, dist = cantor6
    _, bad = handles(cls, 6)
    m = 3
    errs = run_trials(bad, lambda rng: (SubsetHypothesis(0), dist), m, 3000, seed=11)
    expect = (5 / 6) ** m
    se = np.std(errs, ddof=1) / np.sqrt(len(errs))
    assert abs(np.mean(errs) - expect) <= 4 * se


def test_learning_curve_records_and_reproducibility(cantor6):
    cls, dist = cantor6
    good, bad = handles(cls, 6)
    pts, recs = learning_curve(bad, cls, SubsetHypothesis(0), dist, [1, 2], 5, seed=3, experiment="t")
    assert [p.m for p in pts] == [1, 2] and len(recs) == 10
    _, recs2 = learning_curve(bad, cls, SubsetHypothesis(0), dist, [1, 2], 5, seed=3, experiment="t")
    assert records_csv(recs) == records_csv(recs2)
    pts, _ = learning_curve(good, cls, SubsetHypothesis(0), dist, [4], 20, seed=3)
    assert pts[0].mean == 0.0


def test_golden_csv():
    recs = [ExperimentRecord("e", "c", "l", 2, 0, 0.1, 7), ExperimentRecord("e", "c", "l", 2, 1, 0.5, 7)]
    assert records_csv(recs) == ("experiment,class,learner,m,trial,error,seed\n"
                                 "e,c,l,2,0,0.10000000000000001,7\n"
                                 "e,c,l,2,1,0.5,7\n")
    assert summary_csv(recs).splitlines()[1].startswith("e,c,l,2,2,0.29999999999999999,")
    assert records_csv([]).strip().split(",") == list(CSV_COLUMNS)


def test_clopper_pearson():
    assert failure_upper_bound(0, 100) == pytest.approx(1 - 0.05 ** (1 / 100))
    assert failure_upper_bound(10, 10) == 1.0
    assert failure_upper_bound(5, 100) > 0.05


def test_sample_complexity_good_vs_bad(cantor6):
    cls, dist = cantor6
    good, bad = handles(cls, 6)
    g = estimate_sample_complexity(good, cls, SubsetHypothesis(0), dist, 0.4, 0.1, 100, seed=0)
    b = estimate_sample_complexity(bad, cls, SubsetHypothesis(0), dist, 0.4, 0.1, 100, seed=0)
    assert g.bounded and g.m == 1
    assert b.bounded and b.m > g.m


def test_sample_complexity_unbounded():
    never = LearnerHandle("never", lambda s: (lambda x: -1))
    cls = boolean_class(1)
    r = estimate_sample_complexity(never, cls, cls.hypothesis(0), DiscreteDistribution.uniform(cls.domain),
                                   0.1, 0.1, 20, seed=0, m_max=8)
    assert not r.bounded and r.m is None


def test_wrapper_parts():
    assert wrapper_parts(40, 0.1) == (4, 5)
    assert wrapper_parts(2, 0.5) == (1, 1)
    with pytest.raises(ValueError):
        wrapper_parts(5, 0.1)
    with pytest.raises(ValueError):
        wrapper_parts(100, 1.5)


def test_inductive_one_inclusion_is_consistent():
    cls = boolean_class(3)
    L = inductive_from_transductive(cls)
    target = cls.hypothesis(5)
    s = LabeledSample.from_target([0, 2], target)
    h = L.fit(s)
    assert h(0) == target(0) and h(2) == target(2)


def test_pac_wrapper_picks_best_validation():
    cls = make_first_cantor(4)
    target = SubsetHypothesis(0b0011)
    rng = np.random.default_rng(0)
    s = LabeledSample.from_target(rng.integers(0, 4, size=40).tolist(), target)
    w = pac_wrapper_ibar(cls, s, 0.1)
    assert len(w.candidates) == 4
    assert w.val_errors[w.chosen] == min(w.val_errors)
    assert ibar_learner(cls, 0.1).kind == "transductive-derived"
