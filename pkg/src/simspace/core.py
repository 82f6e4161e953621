"""Shared data model, deterministic randomness, and CSV I/O.

All tabular artifacts are CSV with a header row; floats are serialized with
17 significant digits so that write/load round-trips are bit-exact for
64-bit values. All randomness flows through 64-bit seeds feeding numpy's
PCG64 generator; child seeds are derived from a parent seed and a label
path via SHA-256 (see `derive_seed`), so results are reproducible from a
single master seed regardless of evaluation order.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

SYMMETRY_ATOL = 1e-9          # matrices must be symmetric to this tolerance
LOAD_ASYMMETRY_TOL = 1e-6     # loader silently symmetrizes below this
DIAGONAL_ATOL = 1e-9

_SEED_MASK = (1 << 64) - 1


def check_seed(seed: int) -> int:
    """Validate a 64-bit unsigned seed and return it as a plain int."""
    s = int(seed)
    if not 0 <= s <= _SEED_MASK:
        raise ValueError(f"seed out of range for 64-bit unsigned: {seed}")
    return s


def derive_seed(seed: int, *labels: object) -> int:
    """Derive a child seed from a parent seed and a label path.

    The derivation is SHA-256 over ``"<seed>/<label>/<label>..."`` (labels
    joined by '/'), taking the first 8 digest bytes little-endian. It is
    documented here so independent implementations can reproduce it.
    """
    check_seed(seed)
    text = "/".join([str(seed)] + [str(lbl) for lbl in labels])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator for a validated seed; the one PRNG used everywhere."""
    return np.random.Generator(np.random.PCG64(check_seed(seed)))


def _format_float(x: float) -> str:
    return f"{float(x):.17g}"


def _check_ids(ids: Sequence[str]) -> tuple[str, ...]:
    ids = tuple(str(i) for i in ids)
    for i in ids:
        if not i:
            raise ValueError("empty id")
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if list(ids).count(i) > 1})
        raise ValueError(f"duplicate ids: {', '.join(dupes)}")
    return ids


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DissimilarityMatrix:
    """Symmetric nonnegative pairwise dissimilarities over named stimuli."""

    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = _check_ids(self.ids)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"matrix is not square: shape {v.shape}")
        if v.shape[0] != len(ids):
            raise ValueError("id count does not match matrix size")
        if v.shape[0] < 3:
            raise ValueError("need at least 3 stimuli")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite dissimilarity entries")
        if np.max(np.abs(v - v.T)) > SYMMETRY_ATOL:
            raise ValueError("matrix is not symmetric")
        if np.min(v) < 0:
            raise ValueError("negative dissimilarity entries")
        if np.max(np.abs(np.diag(v))) > DIAGONAL_ATOL:
            raise ValueError("nonzero diagonal")
        v = v.copy()
        np.fill_diagonal(v, 0.0)
        v = (v + v.T) / 2.0
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric pairwise similarities (higher means more similar)."""

    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ids = _check_ids(self.ids)
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"matrix is not square: shape {v.shape}")
        if v.shape[0] != len(ids):
            raise ValueError("id count does not match matrix size")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite similarity entries")
        if np.max(np.abs(v - v.T)) > SYMMETRY_ATOL:
            raise ValueError("matrix is not symmetric")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", _freeze((v + v.T) / 2.0))


def similarity_to_dissimilarity(s: SimilarityMatrix, mode: str = "max-minus") -> DissimilarityMatrix:
    """Convert similarities to dissimilarities.

    mode "max-minus": delta = max(s) - s; mode "one-minus": delta = 1 - s,
    requiring entries in [0, 1]. The diagonal is forced to zero either way.
    """
    v = s.values
    if mode == "max-minus":
        d = float(np.max(v)) - v
    elif mode == "one-minus":
        if np.min(v) < 0 or np.max(v) > 1:
            raise ValueError("one-minus conversion requires similarities in [0, 1]")
        d = 1.0 - v
    else:
        raise ValueError(f"unknown conversion mode: {mode!r}")
    d = d.copy()
    np.fill_diagonal(d, 0.0)
    return DissimilarityMatrix(s.ids, d)


@dataclass(frozen=True)
class Embedding:
    """Stimulus coordinates in the similarity space plus achieved stress."""

    ids: tuple[str, ...]
    coords: np.ndarray
    stress1: float = 0.0

    def __post_init__(self):
        ids = _check_ids(self.ids)
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 2:
            raise ValueError("coords must be a 2-D array")
        if c.shape[0] != len(ids):
            raise ValueError("row count does not match id count")
        if c.shape[1] < 1:
            raise ValueError("need at least one dimension")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coordinates")
        s = float(self.stress1)
        if not np.isfinite(s) or s < 0:
            raise ValueError(f"stress1 must be finite and >= 0, got {s}")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "coords", _freeze(c))
        object.__setattr__(self, "stress1", s)

    @property
    def dims(self) -> int:
        return self.coords.shape[1]

    def point(self, stimulus_id: str) -> np.ndarray:
        return self.coords[self.ids.index(stimulus_id)]


@dataclass(frozen=True)
class FeatureTable:
    """Per-item feature vectors keyed by item id and source stimulus id."""

    item_ids: tuple[str, ...]
    group_ids: tuple[str, ...]
    features: np.ndarray

    def __post_init__(self):
        item_ids = _check_ids(self.item_ids)
        group_ids = tuple(str(g) for g in self.group_ids)
        f = np.asarray(self.features, dtype=float)
        if len(item_ids) == 0:
            raise ValueError("no items")
        if f.ndim != 2 or f.shape[0] != len(item_ids) or len(group_ids) != len(item_ids):
            raise ValueError("feature row count does not match item count")
        if f.shape[1] < 1:
            raise ValueError("empty feature vectors")
        if not np.all(np.isfinite(f)):
            raise ValueError("non-finite feature values")
        object.__setattr__(self, "item_ids", item_ids)
        object.__setattr__(self, "group_ids", group_ids)
        object.__setattr__(self, "features", _freeze(f))

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return len(self.item_ids)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature table joined with a group -> target-point map."""

    features: FeatureTable
    targets: Mapping[str, np.ndarray]

    def __post_init__(self):
        targets = {str(g): np.asarray(p, dtype=float).reshape(-1) for g, p in self.targets.items()}
        dims = {p.shape[0] for p in targets.values()}
        if len(dims) > 1:
            raise ValueError("targets have mixed dimensions")
        missing = sorted(set(self.features.group_ids) - set(targets))
        if missing:
            raise ValueError(f"unknown group_id on join: {', '.join(missing)}")
        for g in targets:
            targets[g] = _freeze(targets[g])
        object.__setattr__(self, "targets", targets)

    @property
    def dims(self) -> int:
        return next(iter(self.targets.values())).shape[0]

    def target_rows(self) -> np.ndarray:
        """Per-item target matrix, aligned with the feature rows."""
        return np.stack([self.targets[g] for g in self.features.group_ids])


# ---------------------------------------------------------------------------
# CSV I/O


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty file")
    return rows


def _read_comments(path) -> dict[str, str]:
    meta = {}
    with open(path, newline="") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if "=" in line:
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
    return meta


def _parse_float(tok: str, where: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ValueError(f"{where}: malformed number {tok!r}") from None


def load_dissimilarity_matrix(path) -> DissimilarityMatrix:
    """Load a matrix CSV: header ``id,<id1>,...,<idn>``, one labeled row per id.

    Asymmetry up to 1e-6 is silently averaged away; anything larger is an
    error, as are negative entries and diagonals above 1e-9.
    """
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 2 or header[0] != "id":
        raise ValueError(f"{path}: malformed header, expected 'id,<id1>,...'")
    ids = _check_ids(header[1:])
    n = len(ids)
    if len(rows) - 1 != n:
        raise ValueError(f"{path}: matrix is not square ({len(rows) - 1} rows, {n} columns)")
    values = np.zeros((n, n))
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise ValueError(f"{path}: row {i + 2} has {len(row) - 1} values, expected {n}")
        if row[0] != ids[i]:
            raise ValueError(f"{path}: row label {row[0]!r} does not match header id {ids[i]!r}")
        values[i] = [_parse_float(tok, f"{path} row {i + 2}") for tok in row[1:]]
    asym = float(np.max(np.abs(values - values.T)))
    if asym > LOAD_ASYMMETRY_TOL:
        raise ValueError(f"{path}: asymmetry {asym:.3g} exceeds tolerance {LOAD_ASYMMETRY_TOL:g}")
    values = (values + values.T) / 2.0
    if np.max(np.abs(np.diag(values))) > DIAGONAL_ATOL:
        raise ValueError(f"{path}: nonzero diagonal")
    np.fill_diagonal(values, 0.0)
    if np.min(values) < 0:
        raise ValueError(f"{path}: negative dissimilarity entries")
    return DissimilarityMatrix(ids, values)


def write_dissimilarity_matrix(m: DissimilarityMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *m.ids])
        for i, sid in enumerate(m.ids):
            w.writerow([sid, *[_format_float(x) for x in m.values[i]]])


def load_similarity_matrix(path) -> SimilarityMatrix:
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 2 or header[0] != "id":
        raise ValueError(f"{path}: malformed header, expected 'id,<id1>,...'")
    ids = _check_ids(header[1:])
    n = len(ids)
    if len(rows) - 1 != n:
        raise ValueError(f"{path}: matrix is not square")
    values = np.zeros((n, n))
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise ValueError(f"{path}: row {i + 2} has {len(row) - 1} values, expected {n}")
        values[i] = [_parse_float(tok, f"{path} row {i + 2}") for tok in row[1:]]
    if np.max(np.abs(values - values.T)) > LOAD_ASYMMETRY_TOL:
        raise ValueError(f"{path}: asymmetry exceeds tolerance")
    return SimilarityMatrix(ids, (values + values.T) / 2.0)


def write_embedding(e: Embedding, path) -> None:
    """Write an embedding CSV (``id,dim_0,...``) with a ``#stress1=`` comment."""
    with open(path, "w", newline="") as fh:
        fh.write(f"#stress1={_format_float(e.stress1)}\n")
        w = csv.writer(fh)
        w.writerow(["id", *[f"dim_{j}" for j in range(e.dims)]])
        for i, sid in enumerate(e.ids):
            w.writerow([sid, *[_format_float(x) for x in e.coords[i]]])


def load_embedding(path) -> Embedding:
    meta = _read_comments(path)
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 2 or header[0] != "id" or header[1:] != [f"dim_{j}" for j in range(len(header) - 1)]:
        raise ValueError(f"{path}: malformed header, expected 'id,dim_0,...'")
    d = len(header) - 1
    ids, coords = [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != d + 1:
            raise ValueError(f"{path}: row {i + 2} has {len(row) - 1} values, expected {d}")
        ids.append(row[0])
        coords.append([_parse_float(tok, f"{path} row {i + 2}") for tok in row[1:]])
    stress1 = _parse_float(meta["stress1"], path) if "stress1" in meta else 0.0
    return Embedding(tuple(ids), np.array(coords), stress1)


def write_feature_table(t: FeatureTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["item_id", "group_id", *[f"f_{j}" for j in range(t.width)]])
        for i in range(len(t)):
            w.writerow([t.item_ids[i], t.group_ids[i],
                        *[_format_float(x) for x in t.features[i]]])


def load_feature_table(path) -> FeatureTable:
    """Load a feature CSV (``item_id,group_id,f_0,...``)."""
    rows = _read_rows(path)
    header = rows[0]
    if len(header) < 3 or header[:2] != ["item_id", "group_id"]:
        raise ValueError(f"{path}: malformed header, expected 'item_id,group_id,f_0,...'")
    k = len(header) - 2
    if len(rows) == 1:
        raise ValueError(f"{path}: no items")
    item_ids, group_ids, feats = [], [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != k + 2:
            raise ValueError(f"{path}: ragged feature width at row {i + 2} "
                             f"({len(row) - 2} values, expected {k})")
        item_ids.append(row[0])
        group_ids.append(row[1])
        feats.append([_parse_float(tok, f"{path} row {i + 2}") for tok in row[2:]])
    return FeatureTable(tuple(item_ids), tuple(group_ids), np.array(feats))
