"""``oneinc`` command line.

Run configs are JSON objects. Precedence is flags over file over scenario
defaults; unknown keys are rejected with the offending line number.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .class_core import DiscreteDistribution, ResourceError
from .dimensions import avg_degree, graph_dim, inclusion_dim, natarajan_dim
from .learners_eval import (LearnerHandle, SUMMARY_COLUMNS, CSV_COLUMNS, ibar_learner, inductive_from_transductive,
                            learning_curve, records_csv, summary_csv)
from .one_inclusion import build_graph, max_avg_degree, orient_exact, orient_greedy
from .scenarios import SCENARIOS, parse_class_spec, scenarios, verify_all_embeddings

CONFIG_KEYS = ("scenario", "class", "learners", "distribution", "epsilon", "delta", "m_grid", "trials", "seed",
               "out", "params")


class ConfigError(ValueError):
    pass


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def load_config(path) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}:1: config must be a JSON object")
    for key in obj:
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{_key_line(text, key)}: unknown key {key!r}")
    checks = {"trials": int, "seed": int, "epsilon": (int, float), "delta": (int, float), "params": dict,
              "m_grid": list, "learners": list, "scenario": str, "class": str, "out": str,
              "distribution": str}
    for key, typ in checks.items():
        if key in obj and (not isinstance(obj[key], typ) or isinstance(obj[key], bool)):
            raise ConfigError(f"{path}:{_key_line(text, key)}: {key!r} has the wrong type")
    return obj


def resolve_config(scenario: str, file_cfg: dict, flags: dict) -> dict:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    if file_cfg.get("scenario", scenario) != scenario:
        raise ConfigError(f"config names scenario {file_cfg['scenario']!r}, command line says {scenario!r}")
    cfg = json.loads(json.dumps(SCENARIOS[scenario].defaults))
    params = dict(cfg["params"])
    for src in (file_cfg, flags):
        for k, v in src.items():
            if v is None:
                continue
            if k == "params":
                unknown = set(v) - set(params)
                if unknown:
                    raise ConfigError(f"unknown params for {scenario}: {sorted(unknown)}")
                params.update(v)
            else:
                cfg[k] = v
    cfg["params"] = params
    cfg["scenario"] = scenario
    if cfg["trials"] < 1 or any(m < 1 for m in cfg["m_grid"]) or not cfg["m_grid"]:
        raise ConfigError("trials and every m in the grid must be positive")
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return cfg


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _versions() -> dict:
    import networkx
    import scipy
    return {"oneinc": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "networkx": networkx.__version__}


def run_scenario(cfg: dict, out: Path) -> bool:
    """Execute one scenario and write its four artifacts; returns the check status."""
    res = SCENARIOS[cfg["scenario"]].runner(cfg)
    out.mkdir(parents=True, exist_ok=True)
    cfg_public = {k: v for k, v in cfg.items() if k != "out"}
    files = {
        "summary.json": json.dumps({"scenario": cfg["scenario"], "ok": bool(res.ok), "config": cfg_public,
                                    "result": res.summary}, indent=1, sort_keys=True, default=str) + "\n",
        "curve.csv": records_csv(res.records),
        "summary.csv": summary_csv(res.records),
    }
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
    manifest = {"scenario": cfg["scenario"], "seed": cfg["seed"], "config_sha256": _sha(_canonical(cfg_public)),
                "versions": _versions(), "csv_columns": list(CSV_COLUMNS), "summary_columns": list(SUMMARY_COLUMNS),
                "files": {name: _sha(text.encode()) for name, text in files.items()}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return bool(res.ok)


# -- subcommands -----------------------------------------------------------------

def _points(cls, text: str) -> list:
    lookup = {str(x): x for x in cls.domain}
    out = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if tok not in lookup:
            raise ValueError(f"point {tok!r} is not in the domain of {cls.name or 'the class'}")
        out.append(lookup[tok])
    return out


def _emit(obj):
    print(json.dumps(obj, indent=1, default=str))


def cmd_scenarios(args):
    _emit(scenarios())
    return 0


def cmd_dims(args):
    spec = args.class_spec or args.class_file
    if spec is None:
        raise ValueError("dims needs a class: pass a file or --class")
    cls = parse_class_spec(spec)
    cap = args.cap or max(16, len(cls.domain))
    nd, nw = natarajan_dim(cls, cap=cap)
    gd, gw = graph_dim(cls, cap=cap)
    out = {"class": cls.name, "Ndim": nd, "Gdim": gd, "N_witness": [str(x) for x in nw.points],
           "G_witness": [str(x) for x in gw.points]}
    try:
        dm, dw = inclusion_dim(cls)
        out.update({"dim": dm, "dim_witness": [str(x) for x in dw.points], "avg_degree": str(avg_degree(cls))})
    except ResourceError as exc:
        out["dim"] = f"skipped: {exc}"
    _emit(out)
    return 0


def cmd_graph(args):
    cls = parse_class_spec(args.class_spec)
    g = build_graph(cls, _points(cls, args.points))
    d = g.to_dict()
    rep = max_avg_degree(g)
    d["max_avg_degree"] = {"value": str(rep.value), "method": rep.method,
                           "upper": None if rep.upper is None else str(rep.upper)}
    _emit(d)
    return 0


def cmd_orient(args):
    cls = parse_class_spec(args.class_spec)
    g = build_graph(cls, _points(cls, args.points))
    o = orient_greedy(g) if args.greedy else orient_exact(g)
    _emit({"method": "greedy" if args.greedy else "exact", "max_out_degree": o.max_out_degree,
           "heads": [{"edge": k, "coordinate": i, "head": h} for k, ((i, _), h) in enumerate(zip(g.edges, o.head))],
           "out_degree": list(o.out_degree)})
    return 0


def _learner(name: str, cls, delta: float) -> LearnerHandle:
    from . import cantor
    if name == "good_erm":
        return LearnerHandle(name, lambda s: cantor.good_erm(s, cls), "improper")
    if name == "one-inclusion":
        return inductive_from_transductive(cls)
    if name == "ibar":
        return ibar_learner(cls, delta)
    raise ValueError(f"unknown learner {name!r}; choose good_erm, one-inclusion or ibar")


def cmd_learn(args):
    cls = parse_class_spec(args.class_spec)
    if not 0 <= args.target < len(cls):
        raise ValueError(f"target row {args.target} out of range for {len(cls)} hypotheses")
    target = cls.hypothesis(args.target)
    learner = _learner(args.learner, cls, args.delta)
    grid = args.m_grid or [1, 2, 4, 8]
    _, records = learning_curve(learner, cls, target, DiscreteDistribution.uniform(cls.domain), grid,
                                args.trials, args.seed, "learn")
    text = records_csv(records)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "curve.csv").write_text(text, encoding="utf-8")
        (Path(args.out) / "summary.csv").write_text(summary_csv(records), encoding="utf-8")
    sys.stdout.write(summary_csv(records))
    return 0


def cmd_run(args):
    file_cfg = load_config(args.config) if args.config else {}
    flags = {"class": args.class_spec, "seed": args.seed, "trials": args.trials, "epsilon": args.epsilon,
             "delta": args.delta, "m_grid": args.m_grid, "out": args.out}
    cfg = resolve_config(args.scenario, file_cfg, flags)
    out = Path(cfg.get("out") or f"runs/{args.scenario}")
    ok = run_scenario(cfg, out)
    print(f"{args.scenario}: {'PASS' if ok else 'FAIL'} -> {out}")
    return 0 if ok else 1


def cmd_verify(args):
    ok = True
    for name, size, passed, norm in verify_all_embeddings(args.n_max, args.t_max):
        extra = "" if norm is None else f" max|w|^2={norm:.4g}"
        print(f"{name:18s} size={size:<2d} {'PASS' if passed else 'FAIL'}{extra}")
        ok &= passed
    return 0 if ok else 1


def _grid(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad m grid {text!r}; expected comma-separated integers") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oneinc", description="One-inclusion graphs and multiclass learning experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("scenarios", help="list canned scenarios").set_defaults(func=cmd_scenarios)

    s = sub.add_parser("dims", help="Natarajan, inclusion and graph dimension of a class")
    s.add_argument("class_file", nargs="?", default=None, help="class file or generator string")
    s.add_argument("--class", dest="class_spec", default=None)
    s.add_argument("--cap", type=int, default=None)
    s.set_defaults(func=cmd_dims)

    for name, func in (("graph", cmd_graph), ("orient", cmd_orient)):
        s = sub.add_parser(name, help=f"{name} of the one-inclusion graph on a sample")
        s.add_argument("--class", dest="class_spec", required=True)
        s.add_argument("--points", required=True, help="comma-separated domain points")
        if name == "orient":
            s.add_argument("--greedy", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("learn", help="learning curve of one learner under the uniform distribution")
    s.add_argument("--class", dest="class_spec", required=True)
    s.add_argument("--learner", default="one-inclusion")
    s.add_argument("--target", type=int, default=0, help="row index of the target hypothesis")
    s.add_argument("--m-grid", type=_grid, default=None)
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("run", help="run a canned scenario")
    s.add_argument("scenario")
    s.add_argument("--config", default=None)
    s.add_argument("--class", dest="class_spec", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--trials", type=int, default=None)
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--m-grid", type=_grid, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("verify", help="exhaustively check the feature-map realizations")
    s.add_argument("--n-max", type=int, default=8)
    s.add_argument("--t-max", type=int, default=6)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, ResourceError, OSError) as exc:
        print(f"oneinc: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
