"""Feature maps, argmax / margin linear predictors and explicit embeddings.

Matrix-valued features (multivector, structured) are flattened column-major, so
column ``j`` of a ``d x k`` matrix occupies entries ``j*d:(j+1)*d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Callable, Iterable, Sequence

import numpy as np

from .class_core import ABSTAIN, ABSTAIN_TOKEN, FiniteClass, Realization, ResourceError, label_to_text
from .cantor import STAR, make_first_cantor, make_second_cantor

TIE_TOL = 1e-12
UNIT_TOL = 1e-9
NORM_SLACK = 1e-9


@dataclass(eq=False)
class FeatureMap:
    """Psi: (point, label) -> R^dim.

    ``labels`` is the finite label list when known; ``points`` the finite support
    when known. With both present and ``unit_ball`` set, the unit-ball claim is
    checked at construction.
    """

    dim: int
    psi: Callable
    labels: tuple | None = None
    points: tuple | None = None
    unit_ball: bool = False
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.labels is not None:
            self.labels = tuple(self.labels)
        if self.points is not None:
            self.points = tuple(self.points)
        self.check_unit_ball()

    def check_unit_ball(self):
        if self.unit_ball and self.labels is not None and self.points is not None:
            for x in self.points:
                norms = np.linalg.norm(self.table(x), axis=1)
                if norms.max(initial=0.0) > 1 + UNIT_TOL:
                    raise ValueError(f"feature map {self.name!r} leaves the unit ball at point {x!r}")

    def __call__(self, x, y) -> np.ndarray:
        v = np.asarray(self.psi(x, y), dtype=float).ravel()
        if v.shape != (self.dim,):
            raise ValueError(f"psi returned shape {v.shape}, expected ({self.dim},)")
        return v

    def table(self, x, labels: Sequence | None = None) -> np.ndarray:
        """Stacked feature vectors for every label (rows follow ``labels``)."""
        if labels is None:
            if self.labels is None:
                raise ValueError("feature map has no finite label list; pass labels")
            key = x
            if key in self._cache:
                return self._cache[key]
            out = np.array([self(x, y) for y in self.labels]).reshape(len(self.labels), self.dim)
            if len(self._cache) < 100_000:
                self._cache[key] = out
            return out
        return np.array([self(x, y) for y in labels]).reshape(len(labels), self.dim)

    def to_dict(self) -> dict:
        if self.labels is None or self.points is None:
            raise ValueError("only finite feature maps serialize")
        return {
            "dim": self.dim,
            "unit_ball": self.unit_ball,
            "entries": [
                {"point": _jsonable(x), "label": label_to_text(y), "vector": self(x, y).tolist()}
                for x in self.points for y in self.labels
            ],
        }

    @classmethod
    def from_table(cls, points, labels, vectors, unit_ball=False, name="table") -> "FeatureMap":
        """Finite map from an array of shape (len(points), len(labels), dim)."""
        vectors = np.asarray(vectors, dtype=float)
        points, labels = tuple(points), tuple(labels)
        if vectors.shape[:2] != (len(points), len(labels)):
            raise ValueError("vector array does not match points x labels")
        pi = {x: i for i, x in enumerate(points)}
        li = {y: j for j, y in enumerate(labels)}
        return cls(vectors.shape[2], lambda x, y: vectors[pi[x], li[y]], labels, points, unit_ball, name)

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureMap":
        extra = set(obj) - {"dim", "unit_ball", "entries"}
        if extra:
            raise ValueError(f"unknown feature map fields: {sorted(extra)}")
        points, labels, vecs = {}, {}, {}
        for e in obj["entries"]:
            x = _unjson(e["point"])
            y = ABSTAIN if e["label"] == ABSTAIN_TOKEN else e["label"]
            points.setdefault(x, None)
            labels.setdefault(y, None)
            vecs[(x, y)] = np.asarray(e["vector"], dtype=float)
        pts, labs = tuple(points), tuple(labels)
        arr = np.zeros((len(pts), len(labs), obj["dim"]))
        for i, x in enumerate(pts):
            for j, y in enumerate(labs):
                if (x, y) not in vecs:
                    raise ValueError(f"missing entry for ({x!r}, {y!r})")
                arr[i, j] = vecs[(x, y)]
        return cls.from_table(pts, labs, arr, unit_ball=obj.get("unit_ball", False))


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


def _unjson(x):
    if isinstance(x, list):
        return tuple(_unjson(v) for v in x)
    return x


# -- predictors ---------------------------------------------------------------

def _scores(w, psi: FeatureMap, x, labels):
    labs = psi.labels if labels is None else tuple(labels)
    return psi.table(x, None if labels is None else labs) @ np.asarray(w, dtype=float), labs


def eval_argmax(w, psi: FeatureMap, x, labels=None):
    """Unique maximizer of <w, Psi(x, y)>; ABSTAIN when two scores are within 1e-12."""
    s, labs = _scores(w, psi, x, labels)
    b = int(np.argmax(s))
    if np.count_nonzero(s >= s[b] - TIE_TOL) > 1:
        return ABSTAIN
    return labs[b]


def eval_margin(w, psi: FeatureMap, x, labels=None):
    """The label beating every other by a score gap of at least 1, else ABSTAIN.

    The comparison is exact, so a gap of 1 - 1e-15 abstains.
    """
    if not psi.unit_ball:
        raise ValueError("margin predictions need a unit-ball feature map")
    s, labs = _scores(w, psi, x, labels)
    if len(s) == 1:
        return labs[0]
    b = int(np.argmax(s))
    others = np.delete(s, b)
    if s[b] - others.max() >= 1.0:
        return labs[b]
    return ABSTAIN


@dataclass(frozen=True)
class LinearHypothesis:
    w: np.ndarray
    psi: FeatureMap
    mode: str = "argmax"
    R: float | None = None
    labels: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("argmax", "margin"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "margin":
            if self.R is None:
                raise ValueError("margin mode needs a budget R")
            if float(np.dot(self.w, self.w)) > self.R + NORM_SLACK:
                raise ValueError(f"|w|^2 = {float(np.dot(self.w, self.w))} exceeds R = {self.R}")

    def __call__(self, x):
        if self.mode == "argmax":
            return eval_argmax(self.w, self.psi, x, self.labels)
        return eval_margin(self.w, self.psi, x, self.labels)


def class_of_weights(psi: FeatureMap, weights: Iterable, mode="argmax", labels=None, points=None,
                     name="") -> FiniteClass:
    """The finite class {h_w restricted to ``points``} for the given weight vectors."""
    points = tuple(psi.points if points is None else points)
    labs = tuple(psi.labels if labels is None else labels)
    ev = eval_argmax if mode == "argmax" else eval_margin
    rows = [tuple(ev(w, psi, x, labels) for x in points) for w in weights]
    return FiniteClass.from_rows(points, rows, labels=labs + (ABSTAIN,), name=name, dedupe=True)


# -- multivector and structured maps -------------------------------------------

def multivector_map(d: int, k: int) -> FeatureMap:
    def psi(x, y):
        out = np.zeros(d * k)
        out[y * d:(y + 1) * d] = np.asarray(x, dtype=float)
        return out
    return FeatureMap(d * k, psi, tuple(range(k)), name=f"multivector:d={d},k={k}")


def multivector_margin_map(d: int, k: int) -> FeatureMap:
    base = multivector_map(d, k)

    def psi(x, y):
        if np.linalg.norm(np.asarray(x, dtype=float)) > 1 + UNIT_TOL:
            raise ValueError(f"instance {x!r} lies outside the unit ball")
        return base.psi(x, y)
    return FeatureMap(d * k, psi, base.labels, unit_ball=True, name=f"multivector-margin:d={d},k={k}")


def structured_labels(t: int, q: int):
    """Lazily enumerate [q]^t as digit strings."""
    if q > 10:
        raise ValueError("digit-string labels need q <= 10")
    return ("".join(map(str, digits)) for digits in product(range(q), repeat=t))


def _instance(X, d: int, t: int) -> np.ndarray:
    """Instances are tuples of t column tuples; returns the d x t matrix."""
    M = np.asarray(X, dtype=float).T
    if M.shape != (d, t):
        raise ValueError(f"instance has shape {M.shape}, expected ({d}, {t})")
    return M


def _digits(y, t: int, q: int) -> list[int]:
    ds = [int(c) for c in y]
    if len(ds) != t or any(not 0 <= c < q for c in ds):
        raise ValueError(f"label {y!r} is not in [{q}]^{t}")
    return ds


def structured_psi1(d: int, t: int, q: int) -> FeatureMap:
    """Column j is the sum of the instance columns labelled j."""
    def psi(X, y):
        M, ys = _instance(X, d, t), _digits(y, t, q)
        out = np.zeros((d, q))
        for i, j in enumerate(ys):
            out[:, j] += M[:, i]
        return out.ravel(order="F")
    labels = tuple(structured_labels(t, q)) if q ** t <= 4096 else None
    return FeatureMap(d * q, psi, labels, name=f"psi1:d={d},t={t},q={q}")


def structured_psi2(q: int, t: int | None = None) -> FeatureMap:
    """Binary q x q matrix with entry (i, j) set when letter j directly follows letter i."""
    def psi(X, y):
        ys = [int(c) for c in y]
        out = np.zeros((q, q))
        for a, b in zip(ys, ys[1:]):
            out[a, b] = 1.0
        return out.ravel(order="F")
    labels = tuple(structured_labels(t, q)) if t is not None and q ** t <= 4096 else None
    return FeatureMap(q * q, psi, labels, name=f"psi2:q={q}")


def structured_margin_psi(d: int, t: int, q: int) -> FeatureMap:
    """Column j is 1/q times the average of the instance columns labelled j."""
    def psi(X, y):
        M, ys = _instance(X, d, t), _digits(y, t, q)
        if np.linalg.norm(M, axis=0).max(initial=0.0) > 1 + UNIT_TOL:
            raise ValueError("instance columns must lie in the unit ball")
        out = np.zeros((d, q))
        counts = np.zeros(q)
        for i, j in enumerate(ys):
            out[:, j] += M[:, i]
            counts[j] += 1
        nz = counts > 0
        out[:, nz] /= counts[nz] * q
        return out.ravel(order="F")
    labels = tuple(structured_labels(t, q)) if q ** t <= 4096 else None
    return FeatureMap(d * q, psi, labels, unit_ball=True, name=f"psi-margin:d={d},t={t},q={q}")


def random_feature_map(rng: np.random.Generator, n_points: int, n_labels: int, d: int) -> FeatureMap:
    vecs = rng.standard_normal((n_points, n_labels, d))
    return FeatureMap.from_table(range(n_points), range(n_labels), vecs, name="random")


# -- embeddings of the Cantor classes ---------------------------------------------

@dataclass(frozen=True)
class Embedding:
    """A feature map with witness weights realizing a source class."""

    source: FiniteClass
    psi: FeatureMap
    witnesses: dict
    mode: str
    R: float | None
    realization: Realization

    def target_class(self) -> FiniteClass:
        return class_of_weights(self.psi, self.witnesses.values(), self.mode,
                                points=tuple(self.realization.gamma[x] for x in self.source.domain))

    def verify(self):
        from .class_core import verify_realization
        if self.mode == "margin":
            for w in self.witnesses.values():
                if float(np.dot(w, w)) > self.R + NORM_SLACK:
                    return False, ("norm", float(np.dot(w, w)))
        return verify_realization(self.source, self.target_class(), self.realization)

    def max_sq_norm(self) -> float:
        return max(float(np.dot(w, w)) for w in self.witnesses.values())


def _identity_labels(labels) -> dict:
    lam = {y: y for y in labels}
    lam[ABSTAIN] = ABSTAIN
    return lam


def circle_k(n: int, literal: bool = False) -> int:
    # with k = 2 the star feature vanishes and h_w ties on points outside B
    return 2 ** n if literal else max(2 ** n, 3)


def circle_embedding(n: int, literal: bool = False) -> Embedding:
    """First Cantor class inside the argmax class of a 3-dimensional map."""
    if n > 10:
        raise ResourceError(f"n={n} exceeds cap 10")
    source = make_first_cantor(n)
    k = circle_k(n, literal)
    c = 0.5 + 0.5 * math.cos(2 * math.pi / k)

    def phi(A):
        if A == STAR:
            return np.array([0.0, 0.0, 1.0])
        a = 2 * math.pi * A / k
        return np.array([math.cos(a), math.sin(a), 0.0])

    def psi(x, y):
        if y == STAR:
            return c * phi(STAR)
        return phi(y) if (y >> x) & 1 else np.zeros(3)

    fm = FeatureMap(3, psi, source.labels, source.domain, name=f"circle:n={n}")
    witnesses = {B: phi(B) + phi(STAR) for B in range(1 << n)}
    r = Realization({x: x for x in source.domain}, _identity_labels(source.labels))
    return Embedding(source, fm, witnesses, "argmax", None, r)


def orthobasis_margin_embedding(n: int, W: float = 100 / 45) -> Embedding:
    """First Cantor class inside a margin class with an orthonormal label basis."""
    if n > 8:
        raise ResourceError(f"n={n} exceeds cap 8")
    source = make_first_cantor(n)
    dim = (1 << n) + 1
    star = 1 << n

    def e(i):
        v = np.zeros(dim)
        v[i] = 1.0
        return v

    def psi(x, y):
        if y == STAR:
            return e(star)
        return e(y) if (y >> x) & 1 else np.zeros(dim)

    fm = FeatureMap(dim, psi, source.labels, source.domain, unit_ball=True, name=f"orthobasis:n={n}")
    witnesses = {B: W * (e(B) + 0.5 * e(star)) for B in range(1 << n)}
    r = Realization({x: x for x in source.domain}, _identity_labels(source.labels))
    return Embedding(source, fm, witnesses, "margin", 8.0, r)


def _structured_lambda(t: int) -> dict:
    lam = {}
    for y in structured_labels(t, 2):
        ones = [i for i, c in enumerate(y) if c == "1"]
        if not ones:
            lam[y] = STAR
        elif len(ones) == 1:
            lam[y] = ones[0]
        else:
            lam[y] = ABSTAIN
    lam[ABSTAIN] = ABSTAIN
    return lam


def _columns(M: np.ndarray) -> tuple:
    return tuple(tuple(float(v) for v in col) for col in M.T)


def structured_margin_embedding(t: int) -> Embedding:
    """Second Cantor class over range(t) inside the margin structured class, d = t+1, q = 2."""
    if t > 6:
        raise ResourceError(f"t={t} exceeds cap 6")
    source = make_second_cantor(t)
    d = t + 1
    fm = structured_margin_psi(d, t, 2)
    eye = np.eye(d)
    gamma = {}
    for A in source.domain:
        M = np.stack([0.5 * eye[i] + 0.25 * eye[t] if (A >> i) & 1 else 0.25 * eye[t] for i in range(t)],
                     axis=1)
        gamma[A] = _columns(M)
    fm.points = tuple(gamma.values())
    fm.check_unit_ball()
    witnesses = {}
    for i in range(t):
        Wm = np.zeros((d, 2))
        Wm[:, 1] = 8 * eye[i] - 8 * eye[t]
        witnesses[i] = Wm.ravel(order="F")
    Wm = np.zeros((d, 2))
    Wm[:, 1] = -8 * eye[t]
    witnesses[STAR] = Wm.ravel(order="F")
    return Embedding(source, fm, witnesses, "margin", 128.0, Realization(gamma, _structured_lambda(t)))


def cosine_k(t: int, literal: bool = False) -> int:
    # with k <= 2 the star column collapses to zero and ties appear
    return t if literal else max(t, 3)


def structured_cosine_embedding(t: int, literal: bool = False) -> Embedding:
    """Second Cantor class over range(t) inside the argmax structured class, d = 3, q = 2."""
    if t > 6:
        raise ResourceError(f"t={t} exceeds cap 6")
    source = make_second_cantor(t)
    k = cosine_k(t, literal)
    c = 0.5 + 0.5 * math.cos(2 * math.pi / k)

    def phi(i):
        if i == STAR:
            return np.array([0.0, 0.0, c])
        a = 2 * math.pi * i / k
        return np.array([math.cos(a), math.sin(a), 0.0])

    fm = structured_psi1(3, t, 2)
    gamma = {}
    for A in source.domain:
        M = np.stack([0.5 * phi(i) + 0.5 * phi(STAR) if (A >> i) & 1 else 0.5 * phi(STAR) for i in range(t)],
                     axis=1)
        gamma[A] = _columns(M)
    fm.points = tuple(gamma.values())
    e3 = np.array([0.0, 0.0, 1.0])
    witnesses = {}
    for i in range(t):
        Wm = np.zeros((3, 2))
        Wm[:, 1] = phi(i) - e3
        witnesses[i] = Wm.ravel(order="F")
    Wm = np.zeros((3, 2))
    Wm[:, 1] = -e3
    witnesses[STAR] = Wm.ravel(order="F")
    return Embedding(source, fm, witnesses, "argmax", None, Realization(gamma, _structured_lambda(t)))


def structured_cantor_embeddings(t: int) -> tuple[Embedding, Embedding]:
    return structured_margin_embedding(t), structured_cosine_embedding(t)


# -- exact behaviour enumeration of H_Psi on a finite point set -----------------------

def _orth_complement(a: np.ndarray) -> np.ndarray:
    """Orthonormal basis (rows) of the complement of vector ``a`` in R^len(a)."""
    return np.linalg.svd(a.reshape(1, -1))[2][1:]


def _flat_key(B: np.ndarray) -> tuple:
    if B.shape[0] == 0:
        return (0,)
    P = B.T @ B
    return (B.shape[0],) + tuple(np.round(P, 8).ravel().tolist())


def argmax_behaviours(psi: FeatureMap, points: Sequence, labels: Sequence | None = None,
                      tol: float = 1e-9) -> FiniteClass:
    """Every distinct restriction of h_w (argmax mode) to ``points``, over all w.

    The sign pattern of w against the difference normals fixes h_w. Each face of
    that central arrangement gets a representative: a region of a flat L is reached
    by stepping off a region of one of its codimension-one subflats along the
    in-flat normal.
    """
    points = tuple(points)
    labs = tuple(psi.labels if labels is None else labels)
    d = psi.dim
    P = np.stack([psi.table(x, None if labels is None else labs) for x in points])
    normals = []
    for i in range(len(points)):
        for a, b in combinations(range(len(labs)), 2):
            v = P[i, a] - P[i, b]
            nv = np.linalg.norm(v)
            if nv > tol:
                normals.append(v / nv)
    N = np.array(normals).reshape(-1, d)
    # flats as orthonormal row bases, generated top-down
    top = np.eye(d)
    flats = {_flat_key(top): top}
    children: dict[tuple, list[tuple]] = {}
    frontier = [_flat_key(top)]
    while frontier:
        nxt = []
        for key in frontier:
            B = flats[key]
            kids = []
            if B.shape[0] > 0:
                proj = N @ B.T
                seen = set()
                for row in proj:
                    if np.linalg.norm(row) <= tol:
                        continue
                    C = _orth_complement(row / np.linalg.norm(row)) @ B
                    ck = _flat_key(C)
                    if ck in seen:
                        continue
                    seen.add(ck)
                    kids.append(ck)
                    if ck not in flats:
                        flats[ck] = C
                        nxt.append(ck)
            children[key] = kids
        frontier = nxt
    reps: dict[tuple, list[np.ndarray]] = {}
    for key in sorted(flats, key=lambda k: flats[k].shape[0]):
        B = flats[key]
        if B.shape[0] == 0:
            reps[key] = [np.zeros(d)]
            continue
        out = []
        if not children[key]:
            out.append(B[0])
        for ck in children[key]:
            C = flats[ck]
            # pick the basis direction of L with the largest component off F
            cand = B - (B @ C.T) @ C if C.shape[0] else B
            u = cand[int(np.argmax(np.linalg.norm(cand, axis=1)))]
            u = u / np.linalg.norm(u)
            for p in reps[ck]:
                hits = N @ p
                slope = np.abs(N @ u)
                mask = (np.abs(hits) > tol) & (slope > tol)
                delta = 0.5 * float(np.min(np.abs(hits[mask]) / slope[mask])) if mask.any() else 1.0
                for sgn in (1.0, -1.0):
                    q = p + sgn * delta * u
                    out.append(q / np.linalg.norm(q))
        reps[key] = out
    allreps = np.array([r for rs in reps.values() for r in rs]).reshape(-1, d)
    scores = np.einsum("rd,nld->rnl", allreps, P)
    best = scores.max(axis=2, keepdims=True)
    ties = (scores >= best - TIE_TOL).sum(axis=2)
    arg = scores.argmax(axis=2)
    rows = set()
    out_labels = labs + (ABSTAIN,)
    for r in range(allreps.shape[0]):
        rows.add(tuple(len(labs) if ties[r, i] > 1 else int(arg[r, i]) for i in range(len(points))))
    table = np.array(sorted(rows), dtype=np.int64).reshape(len(rows), len(points))
    return FiniteClass(points, out_labels, table, name="argmax-behaviours", check_distinct=False)
