"""Canned experiments. Each runner takes a resolved config dict and returns a
``ScenarioResult``; the CLI handles files and manifests.

Scenarios that are not learning curves still emit the fixed CSV schema: the
``learner`` column names the measured quantity and ``error`` holds its value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import cantor
from .cantor import STAR, SubsetHypothesis, ElementHypothesis
from .class_core import DiscreteDistribution, FiniteClass, boolean_class, random_class
from .compression import (compress_dim, compress_margin, decompress_dim, decompress_margin,
                          planted_margin_stream, planted_multivector_sample)
from .dimensions import avg_degree, dim_ratio_scan, graph_dim, inclusion_dim, natarajan_dim
from .learners_eval import ExperimentRecord, LearnerHandle, learning_curve
from .linear_features import (circle_embedding, orthobasis_margin_embedding,
                              structured_cosine_embedding, structured_margin_embedding)
from .one_inclusion import mu_profile, worst_case_transductive_error


@dataclass
class ScenarioResult:
    summary: dict
    records: list
    ok: bool


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    defaults: dict
    runner: Callable
    params: dict = field(default_factory=dict)


def parse_class_spec(spec: str) -> FiniteClass:
    """``first-cantor:n=8``, ``hd:d=10``, ``second-cantor:t=8``, ``boolean:n=3``,
    ``random:n=4,k=3,rows=20,seed=1`` or a path to a class file."""
    from .class_core import load_class
    if ":" not in spec:
        return load_class(spec)
    kind, _, rest = spec.partition(":")
    args = {}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"bad class parameter {part!r} in {spec!r}")
        args[key.strip()] = int(val)
    builders = {
        "first-cantor": lambda a: cantor.make_first_cantor(a.pop("n")),
        "hd": lambda a: cantor.make_hd(a.pop("d")),
        "second-cantor": lambda a: cantor.make_second_cantor(a.pop("t")),
        "boolean": lambda a: boolean_class(a.pop("n")),
        "random": lambda a: random_class(np.random.default_rng(a.pop("seed", 0)), a.pop("n"), a.pop("k"),
                                         a.pop("rows")),
    }
    if kind not in builders:
        raise ValueError(f"unknown class generator {kind!r}")
    try:
        cls = builders[kind](args)
    except KeyError as exc:
        raise ValueError(f"class spec {spec!r} is missing parameter {exc.args[0]!r}") from None
    if args:
        raise ValueError(f"unused class parameters {sorted(args)} in {spec!r}")
    return cls


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return x


def _curve_summary(points) -> list:
    return [{"m": p.m, "trials": p.trials, "mean": p.mean, "se": p.se, "q10": p.quantiles[0],
             "q50": p.quantiles[1], "q90": p.quantiles[2]} for p in points]


# -- improper-gap ----------------------------------------------------------------

def run_improper_gap(cfg) -> ScenarioResult:
    cls = parse_class_spec(cfg["class"])
    d = len(cls.domain)
    eps = Fraction(cfg["epsilon"]).limit_denominator(10**6)

    def task(rng):
        A = sorted(rng.choice(d, size=d // 2, replace=False).tolist())
        rest = [x for x in range(d) if x not in A]
        x0 = int(rest[int(rng.integers(len(rest)))])
        return SubsetHypothesis(sum(1 << a for a in A)), cantor.adversarial_distribution_hd(d, eps, A, x0)

    learners = [LearnerHandle("proper_erm_hd", lambda s: cantor.proper_erm_hd(s, d), "proper"),
                LearnerHandle("improper_learner_hd", lambda s: cantor.improper_learner_hd(s, d), "improper")]
    curves, records = {}, []
    for L in learners:
        pts, recs = learning_curve(L, cls, None, None, cfg["m_grid"], cfg["trials"], cfg["seed"],
                                   "improper-gap", task=task)
        curves[L.name] = pts
        records += recs
    rows, dominates = [], True
    for p, q in zip(curves["proper_erm_hd"], curves["improper_learner_hd"]):
        gap = p.mean - q.mean
        dominates &= q.mean <= p.mean + 3 * math.hypot(p.se, q.se)
        rows.append({"m": p.m, "proper": p.mean, "improper": q.mean, "gap": gap,
                     "gap_flag": gap >= cfg["params"]["gap_margin"]})
    summary = {"epsilon": str(eps), "by_m": rows, "improper_dominates": dominates,
               "curves": {k: _curve_summary(v) for k, v in curves.items()}}
    return ScenarioResult(summary, records, dominates)


# -- ERM gaps on the Cantor classes -------------------------------------------------

def _erm_gap(cfg, cls, target, good, bad, oracle, name) -> ScenarioResult:
    dist = DiscreteDistribution.uniform(cls.domain)
    curves, records = {}, []
    for L in (good, bad):
        pts, recs = learning_curve(L, cls, target, dist, cfg["m_grid"], cfg["trials"], cfg["seed"], name)
        curves[L.name] = pts
        records += recs
    ok = True
    rows = []
    for pg, pb in zip(curves[good.name], curves[bad.name]):
        expect = oracle(pb.m)
        # 1/trials floor: with few trials the empirical SE can collapse to 0
        within = abs(pb.mean - expect) <= 3 * pb.se + 1 / pb.trials
        good_zero = pg.quantiles[-1] == 0.0 and pg.mean == 0.0
        ok &= within and good_zero
        rows.append({"m": pb.m, "bad_mean": pb.mean, "bad_se": pb.se, "bad_oracle": expect,
                     "bad_within_3se": within, "good_mean": pg.mean, "good_all_zero": good_zero})
    return ScenarioResult({"by_m": rows, "curves": {k: _curve_summary(v) for k, v in curves.items()}},
                          records, ok)


def run_erm_gap_cantor1(cfg) -> ScenarioResult:
    cls = parse_class_spec(cfg["class"])
    n = len(cls.domain)
    good = LearnerHandle("good_erm", lambda s: cantor.good_erm(s, cls), "improper")
    bad = LearnerHandle("bad_erm", lambda s: cantor.bad_erm_first_cantor(s, n), "proper")
    # target h_empty: the bad ERM errs exactly on the unseen mass
    return _erm_gap(cfg, cls, SubsetHypothesis(0), good, bad, lambda m: (1 - 1 / n) ** m, "erm-gap-cantor1")


def run_erm_gap_cantor2(cfg) -> ScenarioResult:
    cls = parse_class_spec(cfg["class"])
    t = len(cls.labels) - 1
    good = LearnerHandle("good_erm", lambda s: cantor.good_erm(s, cls), "improper")
    bad = LearnerHandle("bad_erm", lambda s: cantor.bad_erm_second_cantor(s, t), "proper")
    # the bad ERM picks an uncovered element y whenever one exists; h_y then errs on half the sets
    oracle = lambda m: 0.5 * (1 - (1 - 0.5 ** m) ** t)
    return _erm_gap(cfg, cls, ElementHypothesis(STAR), good, bad, oracle, "erm-gap-cantor2")


# -- one-inclusion sandwich -------------------------------------------------------

def run_sandwich(cfg) -> ScenarioResult:
    p = cfg["params"]
    records, rows, violations = [], [], 0
    for i in range(cfg["trials"]):
        rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], i]))
        cls = random_class(rng, int(rng.integers(1, p["max_points"] + 1)), int(rng.integers(2, p["max_labels"] + 1)),
                           p["max_rows"])
        for m in cfg["m_grid"]:
            mu = mu_profile(cls, m).value
            err, _ = worst_case_transductive_error(cls, m)
            ok = mu / (2 * m) <= err <= mu / m
            violations += not ok
            rows.append({"class": i, "m": m, "mu": _num(mu), "error": _num(err), "ok": ok})
            records.append(ExperimentRecord("sandwich-oneinclusion", f"random#{i}", "worst_case_error", m, i,
                                            float(err), cfg["seed"]))
    return ScenarioResult({"violations": violations, "cases": rows}, records, violations == 0)


# -- dimensions table --------------------------------------------------------------

def run_dims_table(cfg) -> ScenarioResult:
    rows, records = [], []
    ok = True
    for spec in cfg["params"]["classes"]:
        cls = parse_class_spec(spec)
        cap = max(16, len(cls.domain))
        nd, nw = natarajan_dim(cls, cap=cap)
        gd, gw = graph_dim(cls, cap=cap)
        row = {"class": spec, "Ndim": nd, "Gdim": gd, "N_points": list(map(str, nw.points)),
               "G_points": list(map(str, gw.points))}
        if len(cls.domain) <= 12:
            dm, _ = inclusion_dim(cls)
            ad = avg_degree(cls)
            row.update({"dim": dm, "avg_degree": _num(ad)})
            ok &= nd <= dm <= gd
        rows.append(row)
        for key in ("Ndim", "dim", "Gdim"):
            if key in row:
                records.append(ExperimentRecord("dims-table", spec, key, len(cls.domain), 0, float(row[key]),
                                                cfg["seed"]))
    return ScenarioResult({"table": rows}, records, ok)


# -- compression and perceptron -------------------------------------------------------

def _pool_error(h, w_eval, pool) -> float:
    return float(np.mean([h(x) != w_eval(x) for x in pool]))


def run_compression_curve(cfg) -> ScenarioResult:
    p = cfg["params"]
    d, k = p["d"], p["k"]
    records, rows, ok = [], [], True
    for m in cfg["m_grid"]:
        errs, sizes = [], []
        for trial in range(cfg["trials"]):
            rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], m, trial]))
            psi, w, pairs = planted_multivector_sample(rng, d, k, m + p["test_size"])
            train, test = pairs[:m], pairs[m:]
            cs = compress_dim(train, psi)
            h = decompress_dim(cs, psi)
            train_err = sum(h(x) != y for x, y in train)
            ok &= train_err == 0 and (len(set(cs.examples)) <= psi.dim or cs.degenerate)
            err = float(np.mean([h(x) != y for x, y in test]))
            errs.append(err)
            sizes.append(len(set(cs.examples)))
            records.append(ExperimentRecord("compression-curve", f"multivector:d={d},k={k}", "compress_dim", m,
                                            trial, err, cfg["seed"]))
        rows.append({"m": m, "mean_test_error": float(np.mean(errs)), "max_distinct_kept": max(sizes)})
    return ScenarioResult({"dim": d * k, "by_m": rows}, records, ok)


def run_perceptron_margin(cfg) -> ScenarioResult:
    p = cfg["params"]
    records, rows, ok = [], [], True
    m = cfg["m_grid"][0]
    for R in p["R"]:
        worst = 0
        for trial in range(cfg["trials"]):
            rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], int(R * 1000), trial]))
            psi, w, pairs = planted_margin_stream(rng, p["d"], p["k"], R, m + p["test_size"])
            train, test = pairs[:m], pairs[m:]
            cs = compress_margin(train, psi, R)
            h = decompress_margin(cs, psi)
            ok &= all(h(x) == y for x, y in train) and len(cs) <= 4 * R
            worst = max(worst, len(cs))
            err = float(np.mean([h(x) != y for x, y in test]))
            records.append(ExperimentRecord("perceptron-margin", f"multivector-margin:R={R}", "compress_margin",
                                            m, trial, err, cfg["seed"]))
        rows.append({"R": R, "max_mistakes": worst, "bound": 4 * R})
    return ScenarioResult({"m": m, "by_R": rows}, records, ok)


# -- embeddings and ratio scan --------------------------------------------------------

def verify_all_embeddings(n_max: int = 8, t_max: int = 6):
    out = []
    for n in range(1, n_max + 1):
        out.append(("circle", n, circle_embedding(n).verify()[0], None))
        e = orthobasis_margin_embedding(n)
        out.append(("orthobasis", n, e.verify()[0], e.max_sq_norm()))
    for t in range(1, t_max + 1):
        e = structured_margin_embedding(t)
        out.append(("structured-margin", t, e.verify()[0], e.max_sq_norm()))
        out.append(("structured-cosine", t, structured_cosine_embedding(t).verify()[0], None))
    return out


def run_verify_embeddings(cfg) -> ScenarioResult:
    p = cfg["params"]
    results = verify_all_embeddings(p["n_max"], p["t_max"])
    records = [ExperimentRecord("verify-embeddings", name, "counterexample", size, 0, 0.0 if ok else 1.0,
                                cfg["seed"]) for name, size, ok, _ in results]
    rows = [{"embedding": name, "size": size, "pass": ok, "max_sq_norm": nrm} for name, size, ok, nrm in results]
    return ScenarioResult({"checks": rows}, records, all(ok for _, _, ok, _ in results))


def run_dim_ratio_scan(cfg) -> ScenarioResult:
    p = cfg["params"]
    rep = dim_ratio_scan({"n_points": p["n_points"], "n_labels": p["n_labels"], "max_rows": p["max_rows"]},
                         cfg["trials"], cfg["seed"])
    records = [ExperimentRecord("dim-ratio-scan", f"random#{i}", "avg_degree/dim", p["n_points"], i,
                                float("nan") if r is None else float(r), cfg["seed"])
               for i, r in enumerate(rep.ratios)]
    summary = {"max_ratio": _num(rep.best_ratio), "skipped": rep.skipped,
               "witness_class": rep.best_class}
    return ScenarioResult(summary, records, True)


def _base(**kw):
    base = {"class": None, "learners": [], "distribution": "uniform", "epsilon": 0.1, "delta": 0.1,
            "m_grid": [1], "trials": 100, "seed": 0, "params": {}}
    base.update(kw)
    return base


SCENARIOS = {s.name: s for s in [
    Scenario("improper-gap", "Proper lexicographic ERM vs the improper good-ERM learner on H_d under the "
             "adversarial distribution D_A with a fresh random A per trial.",
             _base(**{"class": "hd:d=10", "learners": ["proper_erm_hd", "improper_learner_hd"],
                      "distribution": "adversarial", "epsilon": 0.03125, "m_grid": [1, 2, 4, 8, 40],
                      "trials": 1000, "params": {"gap_margin": 0.1}}),
             run_improper_gap),
    Scenario("erm-gap-cantor1", "Good vs bad ERM on the first Cantor class, uniform distribution, target h_empty.",
             _base(**{"class": "first-cantor:n=12", "learners": ["good_erm", "bad_erm"],
                      "m_grid": [1, 2, 4, 6, 8, 12, 16, 24], "trials": 2000}),
             run_erm_gap_cantor1),
    Scenario("erm-gap-cantor2", "Good vs bad ERM on the second Cantor class, uniform distribution, target h_*.",
             _base(**{"class": "second-cantor:t=8", "learners": ["good_erm", "bad_erm"],
                      "m_grid": [1, 2, 4, 8], "trials": 500}),
             run_erm_gap_cantor2),
    Scenario("sandwich-oneinclusion", "Worst-case transductive error of the exact one-inclusion predictor "
             "against the mu/(2m) and mu/m bounds on seeded random classes.",
             _base(**{"m_grid": [1, 2, 3], "trials": 20,
                      "params": {"max_points": 4, "max_labels": 3, "max_rows": 12}}),
             run_sandwich),
    Scenario("dims-table", "Natarajan, inclusion and graph dimension plus average degree for reference classes.",
             _base(**{"params": {"classes": ["boolean:n=3", "first-cantor:n=2", "first-cantor:n=3",
                                             "first-cantor:n=4", "hd:d=4", "hd:d=6", "second-cantor:t=3",
                                             "second-cantor:t=4", "second-cantor:t=5"]}}),
             run_dims_table),
    Scenario("compression-curve", "Test error of the min-norm compression scheme on planted multivector data.",
             _base(**{"m_grid": [2, 4, 8, 16, 32], "trials": 50, "params": {"d": 3, "k": 3, "test_size": 200}}),
             run_compression_curve),
    Scenario("perceptron-margin", "Perceptron margin compression on planted margin-1 streams with |w*|^2 = R.",
             _base(**{"m_grid": [40], "trials": 50, "params": {"R": [2, 5, 10], "d": 3, "k": 3,
                                                               "test_size": 200}}),
             run_perceptron_margin),
    Scenario("verify-embeddings", "Exhaustive checks that the circle, orthobasis and structured embeddings "
             "realize the Cantor classes.",
             _base(**{"params": {"n_max": 8, "t_max": 6}}),
             run_verify_embeddings),
    Scenario("dim-ratio-scan", "Exploratory scan of avg_degree / inclusion dimension over random classes.",
             _base(**{"trials": 200, "params": {"n_points": 4, "n_labels": 3, "max_rows": 20}}),
             run_dim_ratio_scan),
]}


def scenarios() -> list[dict]:
    return [{"name": s.name, "description": s.description, "defaults": s.defaults} for s in SCENARIOS.values()]
