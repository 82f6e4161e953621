"""Predictors from feature vectors into the similarity space.

The main predictor is (optionally ridge-penalized) linear regression solved
by least squares; with ridge_lambda = 0 and rank-deficient features the
minimum-norm solution is returned. Four reference baselines, least-squares
multilateration from anchor distances, and the within/across-domain distance
round out the module.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LabeledDataset, make_rng

BASELINE_KINDS = ("zero", "mean", "distribution", "random-draw")


@dataclass(frozen=True)
class LinearMap:
    """Affine map: prediction = x @ weights + intercept."""

    weights: np.ndarray          # k x d
    intercept: np.ndarray        # d
    ridge_lambda: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.intercept, dtype=float).reshape(-1)
        if w.ndim != 2 or w.shape[1] != b.shape[0]:
            raise ValueError("weights and intercept dimensions disagree")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite model parameters")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", b)

    @property
    def feature_width(self) -> int:
        return self.weights.shape[0]

    @property
    def dims(self) -> int:
        return self.weights.shape[1]


def fit_linear_map(data: LabeledDataset, ridge_lambda: float = 0.0,
                   standardize: bool = False) -> LinearMap:
    """Least-squares fit of features -> target points.

    Minimizes sum ||x W + b - y||^2 + ridge_lambda * ||W||_F^2 with the
    intercept unpenalized (features and targets are centered before the
    solve). With standardize=True feature columns are z-scored from the
    training data; the scaling is folded back into weights/intercept so the
    returned model still consumes raw features.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be >= 0")
    X = data.features.features
    Y = data.target_rows()
    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    Xc = X - x_mean
    scale = np.ones(X.shape[1])
    if standardize:
        sd = Xc.std(axis=0)
        scale = np.where(sd > 0, sd, 1.0)
        Xc = Xc / scale
    Yc = Y - y_mean
    if ridge_lambda > 0:
        k = Xc.shape[1]
        Xa = np.vstack([Xc, np.sqrt(ridge_lambda) * np.eye(k)])
        Ya = np.vstack([Yc, np.zeros((k, Yc.shape[1]))])
        W, *_ = np.linalg.lstsq(Xa, Ya, rcond=None)
    else:
        W, *_ = np.linalg.lstsq(Xc, Yc, rcond=None)
    W = W / scale[:, None]
    b = y_mean - x_mean @ W
    return LinearMap(W, b, ridge_lambda)


def predict(m: LinearMap, x: np.ndarray) -> np.ndarray:
    """Apply the affine map to one feature vector or a batch (rows)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != m.feature_width:
        raise ValueError(f"feature width {x.shape[-1]} does not match model ({m.feature_width})")
    return x @ m.weights + m.intercept


def write_linear_map(m: LinearMap, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"#ridge_lambda={m.ridge_lambda:.17g}\n")
        w = csv.writer(fh)
        w.writerow([f"dim_{j}" for j in range(m.dims)])
        w.writerow([f"{v:.17g}" for v in m.intercept])
        for row in m.weights:
            w.writerow([f"{v:.17g}" for v in row])


def load_linear_map(path) -> LinearMap:
    ridge = 0.0
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "ridge_lambda":
                    ridge = float(val)
                continue
            rows.append(next(csv.reader([line])))
    if len(rows) < 2:
        raise ValueError(f"{path}: malformed model file")
    intercept = [float(v) for v in rows[1]]
    weights = [[float(v) for v in row] for row in rows[2:]]
    return LinearMap(np.array(weights).reshape(len(rows) - 2, len(intercept)),
                     np.array(intercept), ridge)


@dataclass(frozen=True)
class BaselineModel:
    """Constant or sampling predictor estimated from training targets only."""

    kind: str
    train_mean: np.ndarray
    train_stddev: np.ndarray
    train_points: np.ndarray

    @property
    def dims(self) -> int:
        return self.train_mean.shape[0]


def fit_baseline(kind: str, train_targets: Sequence[np.ndarray]) -> BaselineModel:
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}, expected one of {BASELINE_KINDS}")
    pts = np.atleast_2d(np.asarray(list(train_targets), dtype=float))
    if pts.shape[0] < 1:
        raise ValueError("baseline needs at least one training target")
    if kind == "distribution" and pts.shape[0] < 2:
        raise ValueError("distribution baseline needs at least 2 training targets")
    mean = pts.mean(axis=0)
    stddev = pts.std(axis=0, ddof=1) if pts.shape[0] >= 2 else np.zeros(pts.shape[1])
    return BaselineModel(kind, mean, stddev, pts)


def baseline_predict(m: BaselineModel, rng) -> np.ndarray:
    """One prediction; rng is a numpy Generator or a 64-bit seed."""
    if not isinstance(rng, np.random.Generator):
        rng = make_rng(rng)
    if m.kind == "zero":
        return np.zeros(m.dims)
    if m.kind == "mean":
        return m.train_mean.copy()
    if m.kind == "distribution":
        return rng.normal(m.train_mean, m.train_stddev)
    return m.train_points[rng.integers(0, len(m.train_points))].copy()


def triangulate(anchors: Sequence[np.ndarray], distances: Sequence[float]) -> np.ndarray:
    """Recover a point from its distances to known anchors.

    Subtracting the first anchor's squared-distance equation from the others
    linearizes the system, which is then solved in least squares. Needs at
    least d+1 affinely independent anchors.
    """
    A = np.atleast_2d(np.asarray(list(anchors), dtype=float))
    dist = np.asarray(list(distances), dtype=float).reshape(-1)
    if A.shape[0] != dist.shape[0]:
        raise ValueError("anchor and distance counts differ")
    if np.any(dist < 0):
        raise ValueError("distances must be >= 0")
    d = A.shape[1]
    if A.shape[0] < d + 1:
        raise ValueError(f"insufficient anchors: got {A.shape[0]}, need at least {d + 1}")
    rel = A[1:] - A[0]
    if np.linalg.matrix_rank(rel) < d:
        raise ValueError("rank-deficient anchor set: anchors do not span the space")
    # ||x-a_i||^2 - ||x-a_0||^2 = d_i^2 - d_0^2  =>  2 (a_i - a_0) . x = rhs_i
    M = 2.0 * rel
    rhs = (dist[0] ** 2 - dist[1:] ** 2
           + np.sum(A[1:] ** 2, axis=1) - np.sum(A[0] ** 2))
    x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return x


@dataclass(frozen=True)
class DomainPartition:
    """Named groups of dimension indices that exactly partition 0..d-1."""

    domains: tuple[tuple[str, tuple[int, ...]], ...]

    def __post_init__(self):
        doms = tuple((str(name), tuple(int(i) for i in idx)) for name, idx in self.domains)
        seen: list[int] = []
        for name, idx in doms:
            if not idx:
                raise ValueError(f"domain {name!r} is empty")
            seen.extend(idx)
        if sorted(seen) != list(range(len(seen))):
            raise ValueError("domains must disjointly cover dimensions 0..d-1")
        object.__setattr__(self, "domains", doms)

    @property
    def dims(self) -> int:
        return sum(len(idx) for _, idx in self.domains)


def conceptual_distance(p: np.ndarray, q: np.ndarray, partition: DomainPartition) -> float:
    """Euclidean within each domain, Manhattan-summed across domains."""
    p = np.asarray(p, dtype=float).reshape(-1)
    q = np.asarray(q, dtype=float).reshape(-1)
    if p.shape != q.shape:
        raise ValueError("points have different dimensions")
    if p.shape[0] != partition.dims:
        raise ValueError(f"partition covers {partition.dims} dims, points have {p.shape[0]}")
    total = 0.0
    for _, idx in partition.domains:
        sel = list(idx)
        total += float(np.linalg.norm(p[sel] - q[sel]))
    return total
