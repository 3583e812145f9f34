"""Natarajan dimension, graph dimension, the inclusion dimension and average degree.

Shattering searches work on bitmasks over the rows of the class. A point x and
a label choice give a "gadget" ``(P, Q)`` of disjoint row sets; a gadget family
shatters when every intersection pattern of the chosen sides is nonempty. Two
gadgets taken from the same column can never pass that test together, so a
surviving family automatically uses distinct points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from typing import Any

import numpy as np

from .class_core import ABSTAIN, FiniteClass, ResourceError, class_to_json, random_class
from .one_inclusion import build_graph, core_vertices

DOMAIN_CAP = 16
INCLUSION_CAP = 12
STATE_CAP = 500_000


@dataclass(frozen=True)
class ShatterWitness:
    kind: str
    points: tuple
    data: Any

    def __post_init__(self):
        if self.kind not in ("N", "G", "inclusion"):
            raise ValueError(f"unknown witness kind {self.kind!r}")


def _row_masks(cls: FiniteClass):
    """masks[j][k] = bitmask of rows taking label index k at domain point j."""
    out = []
    for j in range(len(cls.domain)):
        col = cls.table[:, j]
        masks = {}
        for r, k in enumerate(col.tolist()):
            masks[k] = masks.get(k, 0) | (1 << r)
        out.append(masks)
    return out


def _gadgets(cls: FiniteClass, kind: str, gadget_cap: int):
    full = (1 << len(cls)) - 1
    abstain = {k for k, y in enumerate(cls.labels) if y is ABSTAIN}
    gadgets: dict[tuple[int, int], tuple] = {}
    for j, masks in enumerate(_row_masks(cls)):
        ordinary = sorted(k for k in masks if k not in abstain)
        if kind == "G":
            for a in ordinary:
                p, q = masks[a], full & ~masks[a]
                if q:
                    gadgets.setdefault((p, q), (j, a))
        else:
            for a, b in combinations(ordinary, 2):
                key = (masks[a], masks[b]) if masks[a] < masks[b] else (masks[b], masks[a])
                gadgets.setdefault(key, (j, a, b))
        if len(gadgets) > gadget_cap:
            raise ResourceError(f"more than {gadget_cap} candidate gadgets")
    return list(gadgets.items())


def _shatter_search(cls: FiniteClass, kind: str, cap: int, state_cap: int = STATE_CAP):
    if len(cls.domain) > cap:
        raise ResourceError(f"domain of size {len(cls.domain)} exceeds cap {cap}")
    gadgets = _gadgets(cls, kind, state_cap)
    n_rows = len(cls)
    # a state is the partition into nonempty cells; extension only depends on it
    level = {frozenset([(1 << n_rows) - 1]): ()}
    best: tuple = ()
    k = 0
    while level and 2 ** (k + 1) <= n_rows:
        nxt: dict[frozenset, tuple] = {}
        for cells, chosen in level.items():
            for g, ((p, q), _) in enumerate(gadgets):
                new = []
                for c in cells:
                    a, b = c & p, c & q
                    if not a or not b:
                        break
                    new.append(a)
                    new.append(b)
                else:
                    key = frozenset(new)
                    if key not in nxt:
                        nxt[key] = chosen + (g,)
                        if len(nxt) > state_cap:
                            raise ResourceError(f"shattering search exceeded {state_cap} states")
        if not nxt:
            break
        k += 1
        best = min(nxt.values())
        level = nxt
    return best, gadgets


def natarajan_dim(cls: FiniteClass, cap: int = DOMAIN_CAP) -> tuple[int, ShatterWitness]:
    chosen, gadgets = _shatter_search(cls, "N", cap)
    picks = sorted(gadgets[g][1] for g in chosen)
    points = tuple(cls.domain[j] for j, _, _ in picks)
    f1 = tuple(cls.labels[a] for _, a, _ in picks)
    f2 = tuple(cls.labels[b] for _, _, b in picks)
    w = ShatterWitness("N", points, (f1, f2))
    assert verify_witness(cls, w), "natarajan witness failed re-verification"
    return len(points), w


def graph_dim(cls: FiniteClass, cap: int = DOMAIN_CAP) -> tuple[int, ShatterWitness]:
    chosen, gadgets = _shatter_search(cls, "G", cap)
    picks = sorted(gadgets[g][1] for g in chosen)
    points = tuple(cls.domain[j] for j, _ in picks)
    f = tuple(cls.labels[a] for _, a in picks)
    w = ShatterWitness("G", points, f)
    assert verify_witness(cls, w), "graph-dimension witness failed re-verification"
    return len(points), w


def inclusion_dim(cls: FiniteClass, cap: int = INCLUSION_CAP) -> tuple[int, ShatterWitness]:
    """Largest d with a size-d point set whose one-inclusion graph has a nonempty d-core.

    The property is closed under taking subsets, so the search is level-wise.
    """
    n = len(cls.domain)
    if n > cap:
        raise ResourceError(f"domain of size {n} exceeds cap {cap}")
    best = ShatterWitness("inclusion", (), ())
    good = {()}
    for d in range(1, n + 1):
        found = {}
        for base in sorted(good):
            start = base[-1] + 1 if base else 0
            for j in range(start, n):
                S = base + (j,)
                if any(S[:t] + S[t + 1:] not in good for t in range(d)):
                    continue
                g = build_graph(cls, [cls.domain[i] for i in S])
                core = core_vertices(g, d)
                if core:
                    found[S] = tuple(g.vertex_labels(v) for v in core)
        if not found:
            break
        S = min(found)
        best = ShatterWitness("inclusion", tuple(cls.domain[i] for i in S), found[S])
        good = set(found)
    assert verify_witness(cls, best), "inclusion witness failed re-verification"
    return len(best.points), best


def avg_degree(cls: FiniteClass) -> Fraction:
    """Mean over hypotheses of the number of points where a single flip stays in the class."""
    g = build_graph(cls, cls.domain)
    return Fraction(sum(g.degrees()), g.n_vertices)


# -- independent re-verification ------------------------------------------------

def verify_witness(cls: FiniteClass, w: ShatterWitness) -> bool:
    """Check a witness against the raw definitions, by direct table scans."""
    cols = [cls.point_index(x) for x in w.points]
    rows = [tuple(cls.labels[k] for k in cls.table[r, cols]) for r in range(len(cls))]
    k = len(cols)
    if len(set(w.points)) != k:
        return False
    if w.kind == "N":
        f1, f2 = w.data if k else ((), ())
        if any(a == b or a is ABSTAIN or b is ABSTAIN for a, b in zip(f1, f2)):
            return False
        for bits in product((0, 1), repeat=k):
            want = tuple(f1[i] if bits[i] else f2[i] for i in range(k))
            if want not in rows:
                return False
        return True
    if w.kind == "G":
        f = w.data
        if any(a is ABSTAIN for a in f):
            return False
        for bits in product((0, 1), repeat=k):
            if not any(all((h[i] == f[i]) == bool(bits[i]) for i in range(k)) for h in rows):
                return False
        return True
    family = set(w.data)
    if not family and k == 0:
        return True
    if not family or not family <= set(rows):
        return False
    for h in family:
        for i in range(k):
            if not any(g[i] != h[i] and all(g[t] == h[t] for t in range(k) if t != i) for g in family):
                return False
    return True


# -- exploratory scan ---------------------------------------------------------

@dataclass
class RatioReport:
    ratios: list
    running_max: list
    skipped: int
    best_ratio: Fraction | None
    best_class: str | None


def dim_ratio_scan(generator: dict, trials: int, seed: int) -> RatioReport:
    """Largest observed avg_degree / inclusion_dim over seeded random classes.

    ``generator`` holds ``n_points``, ``n_labels``, ``max_rows`` (and optionally
    ``min_rows``). Classes with dim 0 have no edges at all and are skipped.
    """
    ratios, running, skipped = [], [], 0
    best, best_json = None, None
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
        cls = random_class(rng, generator["n_points"], generator["n_labels"], generator["max_rows"],
                           generator.get("min_rows", 1))
        dim, _ = inclusion_dim(cls)
        if dim == 0:
            skipped += 1
            ratios.append(None)
        else:
            r = avg_degree(cls) / dim
            ratios.append(r)
            if best is None or r > best:
                best, best_json = r, class_to_json(cls)
        running.append(best)
    return RatioReport(ratios, running, skipped, best, best_json)
