"""Min-norm point, constructive Caratheodory, and the two compression schemes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .class_core import NonRealizableError
from .linear_features import FeatureMap, LinearHypothesis

WEIGHT_FLOOR = 1e-12
CERT_SLACK = 1e-9
MAX_ITER = 10_000


class NumericError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ConvexCombination:
    """``point = sum(weight * Z[index])`` over ``support``."""

    support: tuple
    point: np.ndarray
    Z: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        ws = np.array([w for _, w in self.support])
        if (ws <= WEIGHT_FLOOR).any():
            raise ValueError("support weight below floor")
        if abs(ws.sum() - 1) > 1e-10:
            raise ValueError(f"weights sum to {ws.sum()}")
        recon = ws @ self.Z[[i for i, _ in self.support]]
        if np.linalg.norm(recon - self.point) > 1e-9:
            raise ValueError("point does not match its weights")

    @property
    def indices(self) -> list[int]:
        return [i for i, _ in self.support]

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.support])


def _make(Z, idx, lam, degenerate=False) -> ConvexCombination:
    lam = np.asarray(lam, dtype=float)
    keep = lam > WEIGHT_FLOOR
    idx = [i for i, k in zip(idx, keep) if k]
    lam = lam[keep] / lam[keep].sum()
    order = np.argsort(idx)
    idx = [idx[o] for o in order]
    lam = lam[order]
    return ConvexCombination(tuple(zip(idx, lam.tolist())), lam @ Z[idx], Z, degenerate)


def _affine_minimizer(P: np.ndarray):
    """Coefficients (summing to 1) of the min-norm point of the affine hull of rows of P."""
    if P.shape[0] == 1:
        return np.ones(1)
    D = (P[1:] - P[0]).T
    beta, *_ = np.linalg.lstsq(D, -P[0], rcond=None)
    return np.concatenate([[1 - beta.sum()], beta])


def min_norm_point(Z, max_iter: int = MAX_ITER) -> ConvexCombination:
    """Wolfe's active-set method for the shortest vector in conv(Z)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    if Z.shape[0] == 0:
        raise ValueError("Z must be nonempty")
    scale = max(1.0, float((Z * Z).sum(axis=1).max()))
    S = [int(np.argmin((Z * Z).sum(axis=1)))]
    lam = np.ones(1)
    x = Z[S[0]].copy()
    for _ in range(max_iter):
        dots = Z @ x
        j = int(np.argmin(dots))
        if dots[j] >= x @ x - 1e-13 * scale or j in S:
            return _make(Z, S, lam)
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_minimizer(Z[S])
            if (alpha > WEIGHT_FLOOR).all():
                lam = alpha
                x = lam @ Z[S]
                break
            neg = alpha < lam
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg & (alpha <= WEIGHT_FLOOR), lam / (lam - alpha), np.inf)
            theta = min(1.0, float(ratios.min()))
            lam = lam + theta * (alpha - lam)
            keep = lam > WEIGHT_FLOOR
            if keep.all():
                keep[int(np.argmin(lam))] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            x = lam @ Z[S]
    dots = Z @ x
    raise NumericError(f"min-norm point did not converge in {max_iter} iterations; "
                       f"residual {float(x @ x - dots.min()):.3e}")


def certificate_gap(c: ConvexCombination) -> float:
    """min_z <w, z> - |w|^2; nonnegative (up to slack) at the optimum."""
    w = c.point
    return float((c.Z @ w).min() - w @ w)


def min_norm_point_bruteforce(Z) -> np.ndarray:
    """Oracle: best affine minimizer with positive weights over supports of size <= d+1."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n, d = Z.shape
    best, best_norm = None, np.inf
    for size in range(1, min(n, d + 1) + 1):
        for idx in combinations(range(n), size):
            P = Z[list(idx)]
            alpha = _affine_minimizer(P)
            if (alpha < -1e-12).any():
                continue
            p = alpha @ P
            nv = float(p @ p)
            if nv < best_norm - 1e-15:
                best, best_norm = p, nv
    return best


def _null_vector(M: np.ndarray, rel_tol: float = 1e-9):
    _, s, vt = np.linalg.svd(M)
    rank = int((s > rel_tol * max(1.0, s[0] if len(s) else 1.0)).sum())
    if rank >= M.shape[1]:
        return None
    return vt[-1]


def caratheodory_reduce(c: ConvexCombination, d: int) -> ConvexCombination:
    """Shrink the support to at most d points while keeping the same point.

    Each step takes an affine dependence (sum lam_i z_i = 0, sum lam_i = 0) on
    the support and shifts weight until one coefficient vanishes. If the support
    stalls at d+1 with no dependence, the result is flagged degenerate.
    """
    Z = c.Z
    idx = c.indices
    alpha = c.weights
    while len(idx) > d:
        M = np.vstack([Z[idx].T, np.ones(len(idx))])
        lam = _null_vector(M)
        if lam is None:
            if len(idx) > d + 1:
                raise NumericError(f"no affine dependence among {len(idx)} points in R^{d}")
            return _make(Z, idx, alpha, degenerate=True)
        if (lam > 0).sum() == 0:
            lam = -lam
        pos = lam > 1e-15
        t = float((alpha[pos] / lam[pos]).min())
        alpha = alpha - t * lam
        drop = int(np.argmin(np.where(pos, alpha, np.inf)))
        alpha[drop] = 0.0
        keep = alpha > WEIGHT_FLOOR
        idx = [i for i, k in zip(idx, keep) if k]
        alpha = alpha[keep]
        alpha = alpha / alpha.sum()
    return _make(Z, idx, alpha)


# -- dimension-based scheme ---------------------------------------------------------

@dataclass(frozen=True)
class CompressedSample:
    examples: tuple
    cap: int
    degenerate: bool = False

    def __post_init__(self):
        if len(self.examples) > self.cap + (1 if self.degenerate else 0):
            raise ValueError(f"{len(self.examples)} examples exceed cap {self.cap}")

    def __len__(self):
        return len(self.examples)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, tuple):
                return [enc(u) for u in v]
            return v
        return {"cap": self.cap, "degenerate": self.degenerate,
                "examples": [[enc(x), enc(y)] for x, y in self.examples]}

    @classmethod
    def from_dict(cls, obj: dict) -> "CompressedSample":
        def dec(v):
            if isinstance(v, list):
                return tuple(dec(u) for u in v)
            return v
        return cls(tuple((dec(x), dec(y)) for x, y in obj["examples"]), obj["cap"], obj.get("degenerate", False))


def difference_set(sample, psi: FeatureMap, labels=None):
    """Rows Psi(x_i, y_i) - Psi(x_i, y) for every y != y_i, tagged (i, y)."""
    labs = tuple(psi.labels if labels is None else labels)
    rows, tags = [], []
    for i, (x, yi) in enumerate(sample):
        base = psi(x, yi)
        for y in labs:
            if y != yi:
                rows.append(base - psi(x, y))
                tags.append((i, y))
    return np.array(rows).reshape(len(rows), psi.dim), tags


def compress_dim(sample, psi: FeatureMap, labels=None) -> CompressedSample:
    pairs = list(sample)
    if not pairs:
        return CompressedSample((), psi.dim)
    Z, tags = difference_set(pairs, psi, labels)
    if len(Z) == 0:
        return CompressedSample(tuple(pairs[:1]) * psi.dim, psi.dim)
    c = min_norm_point(Z)
    if np.linalg.norm(c.point) <= 1e-9:
        raise NonRealizableError("0 lies in the convex hull of the difference vectors")
    c = caratheodory_reduce(c, psi.dim)
    chosen = list(dict.fromkeys(tags[i][0] for i in c.indices))
    examples = [pairs[i] for i in chosen]
    examples += [pairs[0]] * (psi.dim - len(examples))
    return CompressedSample(tuple(examples), psi.dim, c.degenerate)


def decompress_dim(compressed: CompressedSample, psi: FeatureMap, labels=None) -> LinearHypothesis:
    Z, _ = difference_set(compressed.examples, psi, labels)
    if len(Z) == 0:
        return LinearHypothesis(np.zeros(psi.dim), psi, "argmax", labels=labels)
    return LinearHypothesis(min_norm_point(Z).point, psi, "argmax", labels=labels)


# -- perceptron and margin scheme ---------------------------------------------------

@dataclass(frozen=True)
class PerceptronPredictor:
    w: np.ndarray
    psi: FeatureMap
    labels: tuple

    def __call__(self, x):
        return self.labels[int(np.argmax(self.psi.table(x, self.labels) @ self.w))]


def perceptron_run(stream, psi: FeatureMap, labels=None, w=None):
    """One pass of the multiclass perceptron; returns (w, mistake trace)."""
    labs = tuple(psi.labels if labels is None else labels)
    w = np.zeros(psi.dim) if w is None else np.array(w, dtype=float)
    trace = []
    for x, y in stream:
        T = psi.table(x, labs)
        yhat = labs[int(np.argmax(T @ w))]
        if yhat != y:
            w = w + psi(x, y) - psi(x, yhat)
            trace.append((x, y))
    return w, trace


def compress_margin(sample, psi: FeatureMap, R: float, labels=None) -> CompressedSample:
    """Repeat perceptron passes until one is clean; keep the mistakes made before it."""
    pairs = list(sample)
    cap = math.ceil(4 * R)
    w, trace = None, []
    for _ in range(cap + 1):
        w, mistakes = perceptron_run(pairs, psi, labels, w)
        if not mistakes:
            if len(trace) > cap:
                raise NonRealizableError(f"{len(trace)} mistakes exceed the bound {cap}")
            return CompressedSample(tuple(trace), cap)
        trace.extend(mistakes)
    raise NonRealizableError(f"no clean pass within {cap + 1} passes")


def decompress_margin(compressed: CompressedSample, psi: FeatureMap, labels=None) -> PerceptronPredictor:
    labs = tuple(psi.labels if labels is None else labels)
    w, _ = perceptron_run(compressed.examples, psi, labs)
    return PerceptronPredictor(w, psi, labs)


# -- seeded generators for realizable samples ------------------------------------

def planted_multivector_sample(rng: np.random.Generator, d: int, k: int, m: int, tie_gap: float = 1e-6):
    """(psi, w, pairs): Gaussian instances labelled by a Gaussian planted weight matrix."""
    from .linear_features import multivector_map
    psi = multivector_map(d, k)
    w = rng.standard_normal(d * k)
    W = w.reshape(k, d)
    pairs = []
    while len(pairs) < m:
        x = rng.standard_normal(d)
        s = np.sort(W @ x)
        if k > 1 and s[-1] - s[-2] < tie_gap:
            continue
        pairs.append((tuple(x.tolist()), int(np.argmax(W @ x))))
    return psi, w, pairs


def planted_margin_stream(rng: np.random.Generator, d: int, k: int, R: float, m: int, noise: float = 0.4,
                          max_restarts: int = 100):
    """(psi, w, pairs) with |w|^2 = R and every pair labelled by h_w with margin 1.

    Instances are unit vectors scattered around the planted label directions;
    draws that h_w abstains on are rejected.
    """
    from .class_core import ABSTAIN
    from .linear_features import eval_margin, multivector_margin_map
    psi = multivector_margin_map(d, k)
    for _ in range(max_restarts):
        W = rng.standard_normal((d, k))
        W -= W.mean(axis=1, keepdims=True)
        W *= math.sqrt(R) / np.linalg.norm(W)
        w = W.ravel(order="F")
        pairs, tries = [], 0
        while len(pairs) < m and tries < 50 * m:
            tries += 1
            y = int(rng.integers(k))
            x = W[:, y] / np.linalg.norm(W[:, y]) + noise * rng.standard_normal(d)
            x = tuple((x / np.linalg.norm(x)).tolist())
            lab = eval_margin(w, psi, x)
            if lab is not ABSTAIN:
                pairs.append((x, lab))
        if len(pairs) == m:
            return psi, w, pairs
    raise RuntimeError("could not plant a margin-realizable stream; raise R or lower k")
