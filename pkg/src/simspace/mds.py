"""Metric MDS by SMACOF stress majorization.

Minimizes raw stress sum_{i<j} (d_ij(X) - delta_ij)^2 with unit weights via
the Guttman transform X+ = B(X) X / n, which never increases stress. Multiple
restarts (classical Torgerson start plus seeded random starts) keep the best
configuration; solutions are translated to zero centroid and compared through
Procrustes alignment since MDS is only determined up to rigid motion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import DissimilarityMatrix, Embedding, check_seed, derive_seed, make_rng

INIT_MODES = ("random", "classical", "both")


@dataclass(frozen=True)
class SmacofConfig:
    dims: int = 2
    restarts: int = 4
    max_iter: int = 300
    rel_tol: float = 1e-9
    init: str = "both"
    seed: int = 0

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        check_seed(self.seed)


@dataclass(frozen=True)
class IterationTrace:
    """Raw stress after the initial configuration and each Guttman step."""

    raw_stress: tuple[float, ...]
    restart_index: int


@dataclass(frozen=True)
class StressCurve:
    points: tuple[tuple[int, float, float], ...]   # (dims, stress1, raw_stress)
    warnings: tuple[str, ...] = ()


def _distances(coords: np.ndarray) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def raw_stress(coords: np.ndarray, delta: DissimilarityMatrix) -> float:
    """Sum over unordered pairs of squared (distance - dissimilarity)."""
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[0] != delta.n:
        raise ValueError(f"coords shape {coords.shape} does not match {delta.n} stimuli")
    d = _distances(coords)
    iu = np.triu_indices(delta.n, k=1)
    return float(np.sum((d[iu] - delta.values[iu]) ** 2))


def stress1(coords: np.ndarray, delta: DissimilarityMatrix) -> float:
    """Normalized stress: sqrt(raw_stress / sum of squared dissimilarities)."""
    iu = np.triu_indices(delta.n, k=1)
    denom = float(np.sum(delta.values[iu] ** 2))
    if denom == 0.0:
        raise ValueError("degenerate dissimilarities: all entries are zero")
    return float(np.sqrt(raw_stress(coords, delta) / denom))


def classical_init(delta: DissimilarityMatrix, dims: int) -> np.ndarray:
    """Torgerson double-centering start: top eigenpairs of -1/2 J delta^2 J.

    Negative eigenvalues are clipped to zero (those dimensions collapse).
    Sign convention: the first component of each eigenvector that is nonzero
    beyond 1e-12 of the vector's largest magnitude is made positive.
    """
    if dims < 1:
        raise ValueError("dims must be >= 1")
    n = delta.n
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (delta.values ** 2) @ J
    B = (B + B.T) / 2.0
    try:
        eigvals, eigvecs = np.linalg.eigh(B)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(eigvals)[::-1][:dims]
    lam = np.clip(eigvals[order], 0.0, None)
    vecs = eigvecs[:, order]
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        tol = 1e-12 * np.max(np.abs(col)) if np.max(np.abs(col)) > 0 else 0.0
        nz = np.nonzero(np.abs(col) > tol)[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    coords = vecs * np.sqrt(lam)
    if coords.shape[1] < dims:
        coords = np.hstack([coords, np.zeros((n, dims - coords.shape[1]))])
    return coords - coords.mean(axis=0)


def guttman_step(coords: np.ndarray, delta: DissimilarityMatrix) -> np.ndarray:
    """One majorization update; raw stress never increases.

    B has off-diagonal -delta_ij/d_ij (zero where points coincide) and a
    diagonal that fixes row sums to zero.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.shape[0] != delta.n:
        raise ValueError(f"coords shape {coords.shape} does not match {delta.n} stimuli")
    d = _distances(coords)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(d > 0, -delta.values / np.where(d > 0, d, 1.0), 0.0)
    np.fill_diagonal(b, 0.0)
    np.fill_diagonal(b, -b.sum(axis=1))
    return (b @ coords) / delta.n


def _run_single(delta: DissimilarityMatrix, init_coords: np.ndarray,
                max_iter: int, rel_tol: float) -> tuple[np.ndarray, list[float]]:
    coords = init_coords
    trace = [raw_stress(coords, delta)]
    for _ in range(max_iter):
        if trace[-1] == 0.0:
            break
        coords = guttman_step(coords, delta)
        s = raw_stress(coords, delta)
        trace.append(s)
        if (trace[-2] - s) < rel_tol * trace[-2]:
            break
    return coords, trace


def _random_init(delta: DissimilarityMatrix, dims: int, rng: np.random.Generator) -> np.ndarray:
    # Uniform cube scaled by the mean off-diagonal dissimilarity so random
    # starts live at the data's scale (and scale with c * delta).
    iu = np.triu_indices(delta.n, k=1)
    scale = float(np.mean(delta.values[iu]))
    return rng.uniform(-1.0, 1.0, size=(delta.n, dims)) * scale


def smacof(delta: DissimilarityMatrix, config: SmacofConfig) -> tuple[Embedding, IterationTrace]:
    """Best-of-restarts SMACOF; ties on final stress go to the lowest restart."""
    best = None
    for r in range(config.restarts):
        if r == 0 and config.init in ("classical", "both"):
            start = classical_init(delta, config.dims)
        else:
            rng = make_rng(derive_seed(config.seed, "smacof", f"restart{r}"))
            start = _random_init(delta, config.dims, rng)
        coords, trace = _run_single(delta, start, config.max_iter, config.rel_tol)
        key = (trace[-1], r)
        if best is None or key < best[0]:
            best = (key, coords, trace, r)
    _, coords, trace, r = best
    coords = coords - coords.mean(axis=0)
    emb = Embedding(delta.ids, coords, stress1(coords, delta))
    return emb, IterationTrace(tuple(trace), r)


def scan_seed(seed: int, dims: int) -> int:
    """Per-dims seed used by dimension_scan (shared with the CLI)."""
    return derive_seed(seed, "scan", dims)


def dimension_scan(delta: DissimilarityMatrix, dims_list: Sequence[int],
                   config: SmacofConfig) -> StressCurve:
    """Run smacof once per requested dimensionality and collect stress values."""
    dims_list = [int(d) for d in dims_list]
    if any(b <= a for a, b in zip(dims_list, dims_list[1:])):
        raise ValueError("dims_list must be strictly increasing")
    points, warnings = [], []
    for d in dims_list:
        emb, trace = smacof(delta, replace(config, dims=d, seed=scan_seed(config.seed, d)))
        points.append((d, emb.stress1, trace.raw_stress[-1]))
        if d >= delta.n - 1:
            warnings.append(f"dims >= n-1 at dims={d}: space is over-parameterized")
    return StressCurve(tuple(points), tuple(warnings))


def write_stress_curve(curve: StressCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("dims,stress1,raw_stress\n")
        for d, s1, raw in curve.points:
            fh.write(f"{d},{s1:.17g},{raw:.17g}\n")


def procrustes_align(a: Embedding, b: Embedding, allow_scale: bool = False) -> tuple[Embedding, float]:
    """Align b onto a by translation + orthogonal transform (+ optional scale).

    Returns the aligned embedding and the disparity: the minimized sum of
    squared point-wise distances. Reflections are allowed.
    """
    if a.ids != b.ids:
        raise ValueError("embeddings cover different stimuli")
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    A = a.coords - a.coords.mean(axis=0)
    B = b.coords - b.coords.mean(axis=0)
    U, sv, Vt = np.linalg.svd(B.T @ A)
    R = U @ Vt
    scale = float(np.sum(sv) / np.sum(B * B)) if allow_scale and np.sum(B * B) > 0 else 1.0
    aligned = scale * (B @ R) + a.coords.mean(axis=0)
    disparity = float(np.sum((a.coords - aligned) ** 2))
    return Embedding(a.ids, aligned, b.stress1), disparity
