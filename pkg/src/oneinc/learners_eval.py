"""Learners as handles, the transductive-to-inductive reduction, the PAC wrapper,
learning curves and sample-complexity estimates.

Every trial draws from its own stream ``SeedSequence([seed, m, trial])`` so any
single (m, trial) cell can be replayed in isolation.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta

from .class_core import DiscreteDistribution, FiniteClass, LabeledSample, empirical_error, true_error
from .one_inclusion import OneInclusionPredictor

CSV_COLUMNS = ("experiment", "class", "learner", "m", "trial", "error", "seed")
SUMMARY_COLUMNS = ("experiment", "class", "learner", "m", "trials", "mean", "se", "q10", "q50", "q90")


@dataclass(frozen=True)
class LearnerHandle:
    name: str
    fit: Callable
    kind: str = "proper"

    def __post_init__(self):
        if self.kind not in ("proper", "improper", "transductive-derived"):
            raise ValueError(f"unknown learner kind {self.kind!r}")


@dataclass(frozen=True)
class ExperimentRecord:
    experiment: str
    class_name: str
    learner: str
    m: int
    trial: int
    error: float
    seed: int

    def row(self) -> list:
        return [self.experiment, self.class_name, self.learner, self.m, self.trial,
                format(self.error, ".17g"), self.seed]


@dataclass(frozen=True)
class CurvePoint:
    m: int
    trials: int
    mean: float
    se: float
    quantiles: tuple
    seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if list(self.quantiles) != sorted(self.quantiles):
            raise ValueError("quantiles out of order")


def trial_rng(seed: int, m: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, m, trial]))


# -- the one-inclusion learner as an inductive learner ------------------------------

@dataclass
class _TransductivePredictor:
    engine: OneInclusionPredictor
    sample: LabeledSample

    def __call__(self, x):
        S = tuple(self.sample.points) + (x,)
        known = list(self.sample.labels) + [None]
        return self.engine.predict(S, known, len(S) - 1)


def inductive_from_transductive(cls: FiniteClass) -> LearnerHandle:
    """h(x) is the one-inclusion prediction at x given the sample plus x."""
    engine = OneInclusionPredictor(cls)
    return LearnerHandle(f"one-inclusion[{cls.name}]",
                         lambda sample: _TransductivePredictor(engine, LabeledSample(tuple(sample))),
                         "transductive-derived")


@dataclass
class WrappedPredictor:
    candidates: list
    val_errors: list
    chosen: int

    def __call__(self, x):
        return self.candidates[self.chosen](x)


def wrapper_parts(m: int, delta: float) -> tuple[int, int]:
    """(number of candidates k, chunk size)."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    k = max(1, math.ceil(math.log2(1 / delta)))
    if m < 2 * k:
        raise ValueError(f"sample of size {m} is too small for {k} candidates (need {2 * k})")
    return k, m // (2 * k)


def pac_wrapper_ibar(cls: FiniteClass, sample, delta: float, learner: LearnerHandle | None = None):
    """Fit k candidates on disjoint chunks of the first half, keep the best on the rest."""
    pairs = list(sample)
    k, chunk = wrapper_parts(len(pairs), delta)
    learner = learner or inductive_from_transductive(cls)
    candidates = [learner.fit(LabeledSample(tuple(pairs[i * chunk:(i + 1) * chunk]))) for i in range(k)]
    validation = LabeledSample(tuple(pairs[k * chunk:]))
    errs = [empirical_error(h, validation) for h in candidates]
    chosen = min(range(k), key=lambda i: (errs[i], i))
    return WrappedPredictor(candidates, errs, chosen)


def ibar_learner(cls: FiniteClass, delta: float) -> LearnerHandle:
    inner = inductive_from_transductive(cls)
    return LearnerHandle(f"ibar[{cls.name},delta={delta}]",
                         lambda sample: pac_wrapper_ibar(cls, sample, delta, inner), "transductive-derived")


# -- trials, curves and sample complexity --------------------------------------------

def fixed_task(target, dist: DiscreteDistribution):
    return lambda rng: (target, dist)


def run_trials(learner: LearnerHandle, task: Callable, m: int, trials: int, seed: int) -> list[float]:
    """True errors over ``trials`` seeded draws; ``task(rng)`` returns (target, distribution)."""
    errors = []
    for trial in range(trials):
        rng = trial_rng(seed, m, trial)
        target, dist = task(rng)
        sample = LabeledSample.from_target(dist.sample(rng, m), target)
        h = learner.fit(sample)
        errors.append(float(true_error(h, target, dist)))
    return errors


def summarize(m: int, errors: Sequence[float], seed: int) -> CurvePoint:
    arr = np.asarray(errors, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    q = tuple(float(v) for v in np.quantile(arr, [0.1, 0.5, 0.9]))
    return CurvePoint(m, len(arr), float(arr.mean()), se, q, seed)


def learning_curve(learner: LearnerHandle, cls: FiniteClass, target, dist, m_grid: Sequence[int], trials: int,
                   seed: int, experiment: str = "", task: Callable | None = None):
    """Per-m error summaries plus one record per trial."""
    if not m_grid:
        raise ValueError("m grid must be nonempty")
    task = task or fixed_task(target, dist)
    points, records = [], []
    for m in m_grid:
        errors = run_trials(learner, task, m, trials, seed)
        points.append(summarize(m, errors, seed))
        records.extend(ExperimentRecord(experiment, cls.name, learner.name, m, t, e, seed)
                       for t, e in enumerate(errors))
    return points, records


def failure_upper_bound(failures: int, n: int, confidence: float = 0.95) -> float:
    """One-sided Clopper-Pearson upper bound on a binomial rate."""
    if failures >= n:
        return 1.0
    return float(beta.ppf(confidence, failures + 1, n - failures))


@dataclass(frozen=True)
class SampleComplexity:
    m: int | None
    bounded: bool
    failures: int
    trials: int
    upper: float
    note: str


def estimate_sample_complexity(learner: LearnerHandle, cls: FiniteClass, target, dist, epsilon: float,
                               delta: float, trials: int, seed: int, m_max: int = 4096,
                               task: Callable | None = None) -> SampleComplexity:
    """Smallest m (doubling, then bisection) whose failure rate is certified <= delta.

    A size passes when the 95% Clopper-Pearson upper bound on
    Pr[error > epsilon] is at most delta.
    """
    task = task or fixed_task(target, dist)
    cache: dict[int, tuple[int, float]] = {}

    def check(m):
        if m not in cache:
            errs = run_trials(learner, task, m, trials, seed)
            fails = sum(e > epsilon for e in errs)
            cache[m] = (fails, failure_upper_bound(fails, trials))
        return cache[m][1] <= delta

    m = 1
    while not check(m):
        if m >= m_max:
            f, u = cache[m]
            return SampleComplexity(None, False, f, trials, u, f"no m <= {m_max} certified")
        m = min(2 * m, m_max)
    lo, hi = m // 2, m
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if check(mid):
            hi = mid
        else:
            lo = mid
    f, u = cache[hi]
    return SampleComplexity(hi, True, f, trials, u, "95% one-sided Clopper-Pearson")


# -- CSV output ----------------------------------------------------------------

def records_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def summary_csv(records: Sequence[ExperimentRecord]) -> str:
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.experiment, r.class_name, r.learner, r.m), []).append(r.error)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for (exp, cname, lname, m), errs in groups.items():
        p = summarize(m, errs, 0)
        w.writerow([exp, cname, lname, m, p.trials] +
                   [format(v, ".17g") for v in (p.mean, p.se) + p.quantiles])
    return buf.getvalue()
