"""Finite multiclass hypothesis classes, samples, distributions and combinators."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

DEFAULT_ROW_CAP = 2**20


class DomainError(ValueError):
    """A point id is not part of the class domain."""


class ResourceError(RuntimeError):
    """A combinatorial cap was exceeded."""


class NonRealizableError(ValueError):
    """A labeled sample is not consistent with any hypothesis of the class."""


class _Abstain:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSTAIN"

    def __reduce__(self):
        return (_Abstain, ())


ABSTAIN = _Abstain()
ABSTAIN_TOKEN = "!abstain"


def label_to_text(label) -> str:
    if label is ABSTAIN:
        return ABSTAIN_TOKEN
    return str(label)


class FiniteClass:
    """An explicit hypothesis class over a finite domain.

    ``table[r, j]`` is the index into ``labels`` of the value hypothesis ``r``
    assigns to ``domain[j]``.
    """

    __slots__ = ("domain", "labels", "table", "name", "_point_index", "_label_index")

    def __init__(self, domain: Sequence[Hashable], labels: Sequence[Hashable], table, name: str = "",
                 check_distinct: bool = True):
        domain = tuple(domain)
        labels = tuple(labels)
        if not domain:
            raise ValueError("domain must be nonempty")
        if len(set(domain)) != len(domain):
            raise ValueError("domain contains duplicate point ids")
        if len(set(labels)) != len(labels):
            raise ValueError("label alphabet contains duplicates")
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 2 or table.shape[1] != len(domain):
            raise ValueError(f"table must have shape (rows, {len(domain)}), got {table.shape}")
        if table.shape[0] == 0:
            raise ValueError("class must contain at least one hypothesis")
        if table.min() < 0 or table.max() >= len(labels):
            raise ValueError("table entry outside the label alphabet")
        if check_distinct:
            _check_distinct_rows(table)
        table.setflags(write=False)
        self.domain = domain
        self.labels = labels
        self.table = table
        self.name = name
        self._point_index = {x: j for j, x in enumerate(domain)}
        self._label_index = {y: k for k, y in enumerate(labels)}

    @classmethod
    def from_rows(cls, domain, rows: Iterable[Sequence[Hashable]], labels=None, name="", dedupe=False):
        """Build a class from rows given as label values (not indices)."""
        rows = [tuple(r) for r in rows]
        if labels is None:
            seen = {}
            for r in rows:
                for y in r:
                    seen.setdefault(y, None)
            labels = list(seen)
        index = {y: k for k, y in enumerate(labels)}
        if dedupe:
            rows = list(dict.fromkeys(rows))
        try:
            table = [[index[y] for y in r] for r in rows]
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} missing from alphabet") from None
        return cls(domain, labels, np.array(table, dtype=np.int64).reshape(len(rows), len(tuple(domain))), name=name)

    def __len__(self):
        return self.table.shape[0]

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<FiniteClass{tag} rows={len(self)} points={len(self.domain)} labels={len(self.labels)}>"

    def point_index(self, x) -> int:
        try:
            return self._point_index[x]
        except (KeyError, TypeError):
            raise DomainError(f"unknown point id {x!r}") from None

    def label_index(self, y) -> int:
        try:
            return self._label_index[y]
        except (KeyError, TypeError):
            raise ValueError(f"label {y!r} not in alphabet") from None

    def has_label(self, y) -> bool:
        try:
            return y in self._label_index
        except TypeError:
            return False

    def value(self, row: int, x):
        return self.labels[self.table[row, self.point_index(x)]]

    def row_values(self, row: int) -> tuple:
        return tuple(self.labels[k] for k in self.table[row])

    def hypothesis(self, row: int) -> "TableHypothesis":
        return TableHypothesis(dict(zip(self.domain, self.row_values(row))))

    def hypotheses(self):
        return [self.hypothesis(r) for r in range(len(self))]

    def ordinary_label_indices(self) -> list[int]:
        return [k for k, y in enumerate(self.labels) if y is not ABSTAIN]

    def to_dict(self) -> dict:
        return {
            "domain": [str(x) for x in self.domain],
            "labels": [label_to_text(y) for y in self.labels],
            "hypotheses": [[label_to_text(self.labels[k]) for k in row] for row in self.table],
        }


def _check_distinct_rows(table: np.ndarray) -> None:
    seen: dict[bytes, int] = {}
    for r, row in enumerate(table):
        key = row.tobytes()
        if key in seen:
            raise ValueError(f"duplicate hypotheses: rows {seen[key]} and {r}")
        seen[key] = r


@dataclass(frozen=True)
class TableHypothesis:
    """A predictor given by an explicit point -> label table."""

    values: Mapping

    def __call__(self, x):
        try:
            return self.values[x]
        except KeyError:
            raise DomainError(f"unknown point id {x!r}") from None


@dataclass(frozen=True)
class ConstantHypothesis:
    label: Any

    def __call__(self, x):
        return self.label


@dataclass(frozen=True)
class LabeledSample:
    """Ordered (point, label) pairs; repeated points are allowed."""

    pairs: tuple = ()

    def __post_init__(self):
        pairs = tuple((x, y) for x, y in self.pairs)
        for x, y in pairs:
            if y is ABSTAIN:
                raise ValueError(f"sample label at point {x!r} is ABSTAIN; targets must be ordinary labels")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_target(cls, points: Iterable, target: Callable) -> "LabeledSample":
        return cls(tuple((x, target(x)) for x in points))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def points(self) -> list:
        return [x for x, _ in self.pairs]

    @property
    def labels(self) -> list:
        return [y for _, y in self.pairs]


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite-support marginal over the domain."""

    weights: Mapping

    def __post_init__(self):
        weights = dict(self.weights)
        for x, w in weights.items():
            if w < 0:
                raise ValueError(f"negative mass {w} at {x!r}")
        total = sum(weights.values())
        if abs(float(total) - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {float(total)!r}, expected 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points: Iterable) -> "DiscreteDistribution":
        points = list(points)
        return cls({x: Fraction(1, len(points)) for x in points})

    @property
    def support(self) -> list:
        return [x for x, w in self.weights.items() if w > 0]

    def mass(self, points: Iterable) -> float:
        return sum(self.weights.get(x, 0) for x in set(points))

    def sample(self, rng: np.random.Generator, m: int) -> list:
        points = list(self.weights)
        p = np.array([float(self.weights[x]) for x in points])
        p = p / p.sum()
        idx = rng.choice(len(points), size=m, p=p)
        return [points[i] for i in idx]

    def mixture(self, other: "DiscreteDistribution", alpha) -> "DiscreteDistribution":
        keys = list(self.weights) + [x for x in other.weights if x not in self.weights]
        return DiscreteDistribution({x: alpha * self.weights.get(x, 0) + (1 - alpha) * other.weights.get(x, 0)
                                     for x in keys})


@dataclass(frozen=True)
class Realization:
    """Maps witnessing ``source ⊆ Λ ∘ target ∘ Γ``."""

    gamma: Mapping
    lambda_: Mapping

    def __call__(self, h: Callable) -> Callable:
        gamma, lam = self.gamma, self.lambda_
        return lambda x: lam[h(gamma[x])]


def restrict(cls: FiniteClass, subset: Sequence) -> FiniteClass:
    """Distinct restrictions of the rows to ``subset`` (order kept, repeats allowed)."""
    cols = [cls.point_index(x) for x in subset]
    if len(set(subset)) != len(subset):
        raise ValueError("restrict takes distinct points; use restricted_rows for multisets")
    table = distinct_rows(cls.table[:, cols])
    return FiniteClass(tuple(subset), cls.labels, table, name=cls.name, check_distinct=False)


def distinct_rows(table: np.ndarray) -> np.ndarray:
    """Rows of ``table`` without repeats, in order of first appearance."""
    if table.shape[1] == 0:
        return table[:1]
    _, first = np.unique(table, axis=0, return_index=True)
    return table[np.sort(first)]


def restricted_rows(cls: FiniteClass, points: Sequence) -> np.ndarray:
    """``H|_S`` for a point sequence that may repeat (columns follow ``points``)."""
    cols = [cls.point_index(x) for x in points]
    return distinct_rows(cls.table[:, cols])


def true_error(h: Callable, target: Callable, dist: DiscreteDistribution):
    """Exact disagreement mass of ``h`` against ``target`` under ``dist``.

    An ABSTAIN prediction always counts as an error.
    """
    err = 0
    for x, w in dist.weights.items():
        if w == 0:
            continue
        yh = h(x)
        if yh is ABSTAIN or yh != target(x):
            err += w
    return err


def empirical_error(h: Callable, sample: LabeledSample) -> float:
    if len(sample) == 0:
        return 0.0
    wrong = sum(1 for x, y in sample if h(x) is ABSTAIN or h(x) != y)
    return wrong / len(sample)


def disjoint_union(cls: FiniteClass, m: int, row_cap: int = DEFAULT_ROW_CAP) -> FiniteClass:
    """All functions on ``domain x [m]`` whose restriction to each copy lies in the class."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n_rows = len(cls) ** m
    if n_rows > row_cap:
        raise ResourceError(f"disjoint union would have {n_rows} rows (cap {row_cap})")
    domain = tuple((x, i) for i in range(m) for x in cls.domain)
    table = np.empty((n_rows, len(domain)), dtype=np.int64)
    for r, combo in enumerate(product(range(len(cls)), repeat=m)):
        table[r] = np.concatenate([cls.table[c] for c in combo])
    return FiniteClass(domain, cls.labels, table, name=f"{cls.name}^{m}" if cls.name else "", check_distinct=False)


def verify_realization(source: FiniteClass, target: FiniteClass, r: Realization):
    """Check that every source row equals ``Λ ∘ h ∘ Γ`` for some target row ``h``.

    Returns ``(True, None)`` or ``(False, (source_row, point))`` naming the first
    point where the closest candidate disagrees.
    """
    try:
        cols = [target.point_index(r.gamma[x]) for x in source.domain]
    except KeyError as exc:
        raise ValueError(f"gamma is not total: missing {exc.args[0]!r}") from None
    lam = np.empty(len(target.labels), dtype=object)
    for k, y in enumerate(target.labels):
        if y not in r.lambda_:
            raise ValueError(f"lambda is not total: missing {label_to_text(y)}")
        lam[k] = r.lambda_[y]
    if ABSTAIN not in r.lambda_:
        raise ValueError("lambda must be defined on ABSTAIN")
    images = [tuple(lam[target.table[t, cols]]) for t in range(len(target))]
    image_set = set(images)
    for s in range(len(source)):
        row = source.row_values(s)
        if row in image_set:
            continue
        best_j = -1
        for img in images:
            j = next((i for i, (a, b) in enumerate(zip(row, img)) if a != b), len(row))
            best_j = max(best_j, j)
        return False, (s, source.domain[min(best_j, len(row) - 1)])
    return True, None


def full_class(domain: Sequence, labels: Sequence, row_cap: int = DEFAULT_ROW_CAP, name="") -> FiniteClass:
    """All functions ``domain -> labels``."""
    n = len(labels) ** len(domain)
    if n > row_cap:
        raise ResourceError(f"full class has {n} rows (cap {row_cap})")
    table = np.array(list(product(range(len(labels)), repeat=len(domain))), dtype=np.int64)
    return FiniteClass(domain, labels, table.reshape(n, len(domain)), name=name, check_distinct=False)


def boolean_class(n: int) -> FiniteClass:
    return full_class(tuple(range(n)), (0, 1), name=f"boolean:n={n}")


def random_class(rng: np.random.Generator, n_points: int, n_labels: int, max_rows: int,
                 min_rows: int = 1) -> FiniteClass:
    """Uniformly random distinct rows over ``range(n_points)`` with labels ``range(n_labels)``."""
    total = n_labels ** n_points
    n_rows = int(rng.integers(min_rows, min(max_rows, total) + 1))
    codes = rng.choice(total, size=n_rows, replace=False) if total <= 10**6 else None
    if codes is None:
        rows = set()
        while len(rows) < n_rows:
            rows.add(tuple(int(v) for v in rng.integers(0, n_labels, size=n_points)))
        table = np.array(sorted(rows), dtype=np.int64)
    else:
        table = np.array([[(int(c) // n_labels**j) % n_labels for j in range(n_points)] for c in codes],
                         dtype=np.int64)
    return FiniteClass(tuple(range(n_points)), tuple(range(n_labels)), table, name="random")


# -- class file format -------------------------------------------------------

def load_class(path) -> FiniteClass:
    with open(path, encoding="utf-8") as fh:
        return class_from_json(fh.read())


def class_from_json(text: str) -> FiniteClass:
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("class file must hold an object")
    missing = {"domain", "labels", "hypotheses"} - set(obj)
    if missing:
        raise ValueError(f"class file missing fields: {sorted(missing)}")
    extra = set(obj) - {"domain", "labels", "hypotheses", "name"}
    if extra:
        raise ValueError(f"unknown class file fields: {sorted(extra)}")
    domain = [str(x) for x in obj["domain"]]
    labels = [ABSTAIN if y == ABSTAIN_TOKEN else str(y) for y in obj["labels"]]
    index = {label_to_text(y): k for k, y in enumerate(labels)}
    if len(index) != len(labels):
        raise ValueError("label alphabet contains duplicates")
    rows = []
    seen: dict[tuple, int] = {}
    for r, row in enumerate(obj["hypotheses"]):
        if len(row) != len(domain):
            raise ValueError(f"hypothesis {r} has {len(row)} entries, expected {len(domain)}")
        try:
            idx = tuple(index[str(v)] for v in row)
        except KeyError as exc:
            raise ValueError(f"hypothesis {r} uses label {exc.args[0]!r} outside the alphabet") from None
        if idx in seen:
            raise ValueError(f"duplicate hypotheses: rows {seen[idx]} and {r}")
        seen[idx] = r
        rows.append(idx)
    table = np.array(rows, dtype=np.int64).reshape(len(rows), len(domain))
    return FiniteClass(domain, labels, table, name=obj.get("name", ""), check_distinct=False)


def class_to_json(cls: FiniteClass) -> str:
    return json.dumps(cls.to_dict(), indent=1)

