"""The first and second Cantor classes, the subclass H_d, and reference learners.

Subsets of the point set ``range(n)`` are bitmask integers. The star label is the
plain string ``"*"``; it is an ordinary label, not ABSTAIN.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np

from .class_core import (ConstantHypothesis, DiscreteDistribution, FiniteClass, LabeledSample,
                         NonRealizableError, ResourceError)

STAR = "*"
MAX_N = 16


@dataclass(frozen=True)
class SubsetHypothesis:
    """h_A on the first Cantor domain: A where x is in A, star elsewhere."""

    A: int

    def __call__(self, x):
        return self.A if (self.A >> x) & 1 else STAR


@dataclass(frozen=True)
class ElementHypothesis:
    """h_y on the second Cantor domain; ``y = "*"`` is the constant star map."""

    y: object

    def __call__(self, A):
        if self.y == STAR:
            return STAR
        return self.y if (A >> self.y) & 1 else STAR


def members(mask: int) -> list[int]:
    return [i for i in range(mask.bit_length()) if (mask >> i) & 1]


def _check_n(n: int, what: str):
    if n < 1:
        raise ValueError(f"{what} must be >= 1")
    if n > MAX_N:
        raise ResourceError(f"{what}={n} exceeds cap {MAX_N}")


def _subset_table(n: int, subsets) -> np.ndarray:
    # label index of subset A is A itself; star sits at index 2^n
    star = 1 << n
    pts = np.arange(n)
    return np.array([np.where((A >> pts) & 1, A, star) for A in subsets], dtype=np.int64).reshape(-1, n)


@lru_cache(maxsize=16)
def make_first_cantor(n: int) -> FiniteClass:
    """All h_A for A a subset of ``range(n)``; labels are the 2^n subsets plus star."""
    _check_n(n, "n")
    labels = tuple(range(1 << n)) + (STAR,)
    table = _subset_table(n, range(1 << n))
    return FiniteClass(tuple(range(n)), labels, table, name=f"first-cantor:n={n}", check_distinct=False)


@lru_cache(maxsize=16)
def make_hd(d: int) -> FiniteClass:
    """h_A for |A| = floor(d/2), over the first Cantor alphabet of 2^d + 1 labels."""
    _check_n(d, "d")
    subsets = [sum(1 << i for i in c) for c in combinations(range(d), d // 2)]
    labels = tuple(range(1 << d)) + (STAR,)
    return FiniteClass(tuple(range(d)), labels, _subset_table(d, subsets), name=f"hd:d={d}",
                       check_distinct=False)


@lru_cache(maxsize=16)
def make_second_cantor(t: int) -> FiniteClass:
    """Domain: all subsets of ``range(t)``; rows h_0 .. h_{t-1} then h_*."""
    _check_n(t, "t")
    pts = np.arange(1 << t)
    rows = [np.where((pts >> y) & 1, y, t) for y in range(t)]
    rows.append(np.full(1 << t, t))
    labels = tuple(range(t)) + (STAR,)
    return FiniteClass(tuple(range(1 << t)), labels, np.array(rows, dtype=np.int64),
                       name=f"second-cantor:t={t}", check_distinct=False)


# -- learners ---------------------------------------------------------------

class _RevealIndex:
    """Lookup (point, non-star label) -> the unique row carrying it."""

    def __init__(self, cls: FiniteClass):
        if not cls.has_label(STAR):
            raise ValueError(f"{cls!r} has no star label")
        star = cls.label_index(STAR)
        self.owner: dict[tuple[int, int], int] = {}
        for j in range(len(cls.domain)):
            col = cls.table[:, j]
            vals, counts = np.unique(col, return_counts=True)
            for v, c in zip(vals.tolist(), counts.tolist()):
                if v != star and c > 1:
                    raise ValueError(f"{cls!r} lacks the revealing-label property: label "
                                     f"{cls.labels[v]!r} appears {c} times at point {cls.domain[j]!r}")
            for r in np.flatnonzero(col != star).tolist():
                self.owner[(j, int(col[r]))] = r


@lru_cache(maxsize=32)
def _reveal_index(cls: FiniteClass) -> _RevealIndex:
    return _RevealIndex(cls)


def check_revealing(cls: FiniteClass) -> bool:
    try:
        _reveal_index(cls)
    except ValueError:
        return False
    return True


def good_erm(sample: LabeledSample, cls: FiniteClass):
    """Constant star when every label is star, else the unique consistent row."""
    idx = _reveal_index(cls)
    for x, y in sample:
        if y != STAR:
            j = cls.point_index(x)
            if not cls.has_label(y) or (j, cls.label_index(y)) not in idx.owner:
                raise NonRealizableError(f"no hypothesis labels point {x!r} with {y!r}")
            r = idx.owner[(j, cls.label_index(y))]
            h = cls.hypothesis(r)
            _require_consistent(h, sample)
            return h
    return ConstantHypothesis(STAR)


def _require_consistent(h, sample: LabeledSample):
    for x, y in sample:
        if h(x) != y:
            raise NonRealizableError(f"sample is not realizable: point {x!r} labelled {y!r}")


def _revealed_subset(sample: LabeledSample):
    for _, y in sample:
        if y != STAR:
            return y
    return None


def bad_erm_first_cantor(sample: LabeledSample, n: int):
    """h_A if some label A was revealed, else h_B with B = every unseen point."""
    A = _revealed_subset(sample)
    if A is None:
        seen = 0
        for x, _ in sample:
            seen |= 1 << x
        h = SubsetHypothesis(((1 << n) - 1) & ~seen)
    else:
        h = SubsetHypothesis(A)
    _require_consistent(h, sample)
    return h


def proper_erm_hd(sample: LabeledSample, d: int):
    """Lexicographically smallest consistent h_B with |B| = floor(d/2)."""
    A = _revealed_subset(sample)
    if A is not None:
        if bin(A).count("1") != d // 2:
            raise NonRealizableError(f"revealed set {members(A)} is not of size {d // 2}")
        h = SubsetHypothesis(A)
    else:
        seen = {x for x, _ in sample}
        free = [x for x in range(d) if x not in seen][: d // 2]
        if len(free) < d // 2:
            raise NonRealizableError("too few unseen points for a consistent proper hypothesis")
        h = SubsetHypothesis(sum(1 << x for x in free))
    _require_consistent(h, sample)
    return h


def improper_learner_hd(sample: LabeledSample, d: int):
    """The good ERM of the full first Cantor class, applied to an H_d sample."""
    return good_erm(sample, make_first_cantor(d))


def bad_erm_second_cantor(sample: LabeledSample, t: int):
    """h_y for a revealed y; otherwise the smallest consistent h_y, falling back to h_*."""
    y = _revealed_subset(sample)
    if y is None:
        covered = 0
        for A, _ in sample:
            covered |= A
        free = [y for y in range(t) if not (covered >> y) & 1]
        h = ElementHypothesis(free[0] if free else STAR)
    else:
        h = ElementHypothesis(y)
    _require_consistent(h, sample)
    return h


def adversarial_distribution_hd(d: int, epsilon, A, x0) -> DiscreteDistribution:
    """Mass 1 - 16 eps at x0, the rest spread evenly over points outside A and != x0."""
    A = members(A) if isinstance(A, int) else sorted(A)
    if len(A) != d // 2 or any(not 0 <= a < d for a in A):
        raise ValueError(f"A must be a subset of range({d}) of size {d // 2}")
    if x0 in A or not 0 <= x0 < d:
        raise ValueError("x0 must be a point outside A")
    eps = Fraction(epsilon) if isinstance(epsilon, (int, Fraction)) else epsilon
    if not 0 <= 16 * eps <= 1:
        raise ValueError("need 0 <= 16 * epsilon <= 1")
    rest = [x for x in range(d) if x not in A and x != x0]
    if not rest and 16 * eps > 0:
        raise ValueError("no points left to carry the 16 epsilon mass")
    weights = {x0: 1 - 16 * eps}
    for x in rest:
        weights[x] = 16 * eps / len(rest)
    return DiscreteDistribution(weights)
