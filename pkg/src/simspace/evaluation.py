"""Feasibility-study harness: grouped leave-one-out CV, RMSE, shuffle control.

Each fold holds out every item of one source stimulus, so a predictor can
never score by memorizing the held-out stimulus. The shuffled-target control
permutes the group -> point assignment (keeping the target multiset intact)
to measure how much of the regression's performance rests on the space's
semantic structure. Deterministic predictors are evaluated once and
replicated across runs; stochastic ones get fresh derived seeds per run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import Embedding, FeatureTable, LabeledDataset, derive_seed, make_rng
from .mapping import BASELINE_KINDS, baseline_predict, fit_baseline, fit_linear_map, predict
from .svg import bar_chart_svg

PREDICTORS = ("zero", "mean", "distribution", "random-draw",
              "regression-correct", "regression-shuffled")
_DETERMINISTIC = ("zero", "mean", "regression-correct")


def label_features(features: FeatureTable, embedding: Embedding) -> LabeledDataset:
    """Join a feature table with an embedding: each group gets its point."""
    known = set(embedding.ids)
    missing = sorted(set(features.group_ids) - known)
    if missing:
        raise ValueError(f"unknown group_id on join: {', '.join(missing)}")
    return LabeledDataset(features, {g: embedding.point(g) for g in set(features.group_ids)})


def rmse(predictions: np.ndarray, targets: np.ndarray, per_coordinate: bool = False) -> float:
    """Root mean squared Euclidean distance per item.

    With per_coordinate=True the mean runs over items x coordinates instead,
    dividing the squared distances by the dimension count.
    """
    p = np.atleast_2d(np.asarray(predictions, dtype=float))
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    if p.shape != t.shape:
        raise ValueError(f"prediction shape {p.shape} does not match targets {t.shape}")
    if p.shape[0] == 0:
        raise ValueError("empty input")
    sq = np.sum((p - t) ** 2, axis=1)
    if per_coordinate:
        return float(np.sqrt(np.mean(sq) / p.shape[1]))
    return float(np.sqrt(np.mean(sq)))


@dataclass(frozen=True)
class Fold:
    test_group: str
    train_items: tuple[str, ...]
    test_items: tuple[str, ...]


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[Fold, ...]


def make_folds(dataset: LabeledDataset) -> FoldPlan:
    """One fold per group: its items test, everything else trains."""
    groups = sorted(set(dataset.features.group_ids))
    if len(groups) < 2:
        raise ValueError("need at least 2 groups for leave-one-out folds")
    items = dataset.features.item_ids
    gids = dataset.features.group_ids
    folds = []
    for g in groups:
        test = tuple(i for i, gg in zip(items, gids) if gg == g)
        train = tuple(i for i, gg in zip(items, gids) if gg != g)
        folds.append(Fold(g, train, test))
    return FoldPlan(tuple(folds))


def shuffle_targets(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Uniformly permute which group gets which target point."""
    rng = make_rng(seed)
    groups = sorted(dataset.targets)
    perm = rng.permutation(len(groups))
    new_targets = {groups[i]: dataset.targets[groups[perm[i]]] for i in range(len(groups))}
    return LabeledDataset(dataset.features, new_targets)


@dataclass(frozen=True)
class PredictorSpec:
    """Which predictor to evaluate: a baseline kind or 'regression'."""

    kind: str
    ridge_lambda: float = 0.0
    standardize: bool = False

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS and self.kind != "regression":
            raise ValueError(f"unknown predictor kind {self.kind!r}")

    @property
    def deterministic(self) -> bool:
        return self.kind in ("zero", "mean", "regression")


@dataclass(frozen=True)
class LoocvResult:
    mean_train: float
    mean_test: float
    per_fold: tuple[tuple[float, float], ...]   # (train_rmse, test_rmse) per fold


def _fold_indices(features: FeatureTable, plan: FoldPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    pos = {item: i for i, item in enumerate(features.item_ids)}
    out = []
    for fold in plan.folds:
        out.append((np.array([pos[i] for i in fold.train_items], dtype=int),
                    np.array([pos[i] for i in fold.test_items], dtype=int)))
    return out


def run_loocv(dataset: LabeledDataset, predictor: PredictorSpec, seed: int,
              per_coordinate: bool = False, jobs: int = 1) -> LoocvResult:
    """Fit per fold on the training items, score train and test RMSE."""
    plan = make_folds(dataset)
    X = dataset.features.features
    Y = dataset.target_rows()
    index_pairs = _fold_indices(dataset.features, plan)

    def one_fold(args):
        fold_no, (tr, te) = args
        fold = plan.folds[fold_no]
        if predictor.kind == "regression":
            sub = LabeledDataset(
                FeatureTable(fold.train_items,
                             tuple(dataset.features.group_ids[i] for i in tr),
                             X[tr]),
                {g: dataset.targets[g] for g in set(dataset.features.group_ids[i] for i in tr)})
            model = fit_linear_map(sub, predictor.ridge_lambda, predictor.standardize)
            p_train, p_test = predict(model, X[tr]), predict(model, X[te])
        else:
            model = fit_baseline(predictor.kind, Y[tr])
            rng = make_rng(derive_seed(seed, "fold", fold.test_group))
            p_train = np.stack([baseline_predict(model, rng) for _ in range(len(tr))])
            p_test = np.stack([baseline_predict(model, rng) for _ in range(len(te))])
        return (rmse(p_train, Y[tr], per_coordinate),
                rmse(p_test, Y[te], per_coordinate))

    tasks = list(enumerate(index_pairs))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_fold = tuple(pool.map(one_fold, tasks))
    else:
        per_fold = tuple(one_fold(t) for t in tasks)
    trains = [a for a, _ in per_fold]
    tests = [b for _, b in per_fold]
    return LoocvResult(float(np.mean(trains)), float(np.mean(tests)), per_fold)


@dataclass(frozen=True)
class StudyCell:
    dims: int
    predictor: str
    train_runs: tuple[float, ...]
    test_runs: tuple[float, ...]
    seeds: tuple[int, ...]

    @property
    def mean_train(self) -> float:
        return float(np.mean(self.train_runs))

    @property
    def mean_test(self) -> float:
        return float(np.mean(self.test_runs))

    @property
    def stddev_train(self) -> float:
        return float(np.std(self.train_runs))

    @property
    def stddev_test(self) -> float:
        return float(np.std(self.test_runs))

    @property
    def runs(self) -> int:
        return len(self.test_runs)


@dataclass(frozen=True)
class StudyReport:
    cells: tuple[StudyCell, ...]

    def cell(self, dims: int, predictor: str) -> StudyCell:
        for c in self.cells:
            if c.dims == dims and c.predictor == predictor:
                return c
        raise KeyError(f"no cell for dims={dims}, predictor={predictor!r}")

    @property
    def dims_list(self) -> tuple[int, ...]:
        return tuple(sorted({c.dims for c in self.cells}))


def run_study(embeddings: Mapping[int, Embedding], features: FeatureTable,
              ridge_lambda: float = 0.0, runs: int = 10, seed: int = 0,
              per_coordinate: bool = False, standardize: bool = False,
              jobs: int = 1) -> StudyReport:
    """Evaluate the four baselines plus correct/shuffled regression per space.

    Every (dims, predictor) cell is averaged over `runs` runs; stochastic
    predictors and the shuffle control get fresh seeds derived from the
    master seed per run, deterministic predictors are computed once.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    missing = [d for d, e in embeddings.items() if set(features.group_ids) - set(e.ids)]
    if missing:
        raise ValueError(f"embedding for dims={missing[0]} is missing groups referenced by features")
    cells = []
    for dims in sorted(embeddings):
        emb = embeddings[dims]
        targets = {g: emb.point(g) for g in set(features.group_ids)}
        dataset = LabeledDataset(features, targets)
        for name in PREDICTORS:
            kind = "regression" if name.startswith("regression") else name
            spec = PredictorSpec(kind, ridge_lambda, standardize)
            run_seeds, train_runs, test_runs = [], [], []
            n_fits = 1 if name in _DETERMINISTIC else runs
            for r in range(n_fits):
                run_seed = derive_seed(seed, "study", dims, name, r)
                data = dataset
                if name == "regression-shuffled":
                    data = shuffle_targets(dataset, derive_seed(run_seed, "shuffle"))
                res = run_loocv(data, spec, run_seed, per_coordinate, jobs)
                run_seeds.append(run_seed)
                train_runs.append(res.mean_train)
                test_runs.append(res.mean_test)
            if n_fits == 1 and runs > 1:
                # deterministic predictor: replicate the single evaluation
                run_seeds, train_runs, test_runs = (run_seeds * runs,
                                                    train_runs * runs, test_runs * runs)
            cells.append(StudyCell(dims, name, tuple(train_runs), tuple(test_runs),
                                   tuple(run_seeds)))
    return StudyReport(tuple(cells))


def write_report_csv(report: StudyReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("dims,predictor,split,mean_rmse,stddev_rmse,runs\n")
        for c in report.cells:
            fh.write(f"{c.dims},{c.predictor},train,{c.mean_train:.17g},{c.stddev_train:.17g},{c.runs}\n")
            fh.write(f"{c.dims},{c.predictor},test,{c.mean_test:.17g},{c.stddev_test:.17g},{c.runs}\n")


def report_bar_chart_svg(report: StudyReport, dims: int) -> str:
    """Test-RMSE bar chart for one space, one bar per predictor."""
    labels, values = [], []
    for name in PREDICTORS:
        cell = report.cell(dims, name)
        labels.append(name)
        values.append(cell.mean_test)
    return bar_chart_svg(labels, values, title=f"Test RMSE, {dims}-dimensional space",
                         ylabel="test RMSE")
