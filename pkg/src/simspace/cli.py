"""Command-line front end: mds, augment, train, eval, scatter, triangulate.

Commands are thin wrappers over the library operations; a JSON config file
(--config) can predefine any long option, with explicit flags winning. All
randomness flows from --seed through the documented SHA-256 seed derivation,
and SIMSPACE_JOBS mirrors --jobs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import augment as aug
from . import core, evaluation, mds
from . import mapping as mp
from .svg import scatter_svg


def _parse_pair(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{name} expects 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _parse_dims(text: str) -> list[int]:
    dims = [int(t) for t in text.split(",") if t.strip()]
    if not dims:
        raise ValueError("dims list is empty")
    return dims


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _merge_config(args: argparse.Namespace, extra_skip: tuple[str, ...] = ()) -> argparse.Namespace:
    """Fill unset options from the JSON config; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    cfg = _load_config(args.config)
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("config", "func") or dest in extra_skip:
            continue
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)
    return args


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        opts = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ValueError(f"missing required inputs: {opts}")


def _jobs(args) -> int:
    if getattr(args, "jobs", None) is not None:
        return max(1, int(args.jobs))
    env = os.environ.get("SIMSPACE_JOBS")
    return max(1, int(env)) if env else 1


def _smacof_config(args, dims: int, seed: int) -> mds.SmacofConfig:
    return mds.SmacofConfig(
        dims=dims,
        restarts=int(args.restarts) if args.restarts is not None else 4,
        max_iter=int(args.max_iter) if args.max_iter is not None else 300,
        rel_tol=float(args.rel_tol) if args.rel_tol is not None else 1e-9,
        init=args.init if args.init is not None else "both",
        seed=seed,
    )


def cmd_mds(args) -> int:
    _merge_config(args)
    _require(args, "dissimilarity", "out_dir")
    delta = core.load_dissimilarity_matrix(args.dissimilarity)
    dims_list = _parse_dims(args.dims if args.dims is not None else "2,4,8")
    seed = core.check_seed(args.seed if args.seed is not None else 0)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    points = []
    for d in dims_list:
        cfg = _smacof_config(args, d, mds.scan_seed(seed, d))
        emb, trace = mds.smacof(delta, cfg)
        core.write_embedding(emb, out / f"embedding_{d}d.csv")
        points.append((d, emb.stress1, trace.raw_stress[-1]))
        if d >= delta.n - 1:
            print(f"warning: dims >= n-1 at dims={d}: space is over-parameterized",
                  file=sys.stderr)
        print(f"dims={d} stress1={emb.stress1:.6g}")
    mds.write_stress_curve(mds.StressCurve(tuple(points)), out / "stress_curve.csv")
    return 0


def _augment_spec(args) -> aug.AugmentSpec:
    defaults = aug.AugmentSpec()
    def get(name, cast=float):
        v = getattr(args, name, None)
        return cast(v) if v is not None else getattr(defaults, name)
    return aug.AugmentSpec(
        flip_prob=get("flip_prob"),
        affine_prob=get("affine_prob"),
        max_rotation_deg=get("max_rotation_deg"),
        max_shear_deg=get("max_shear_deg"),
        max_translate_frac=get("max_translate_frac"),
        scale_range=_parse_pair(args.scale_range, "--scale-range")
        if args.scale_range is not None else defaults.scale_range,
        crop_prob=get("crop_prob"),
        crop_fraction_range=_parse_pair(args.crop_fraction_range, "--crop-fraction-range")
        if args.crop_fraction_range is not None else defaults.crop_fraction_range,
        blur_prob=get("blur_prob"),
        blur_sigma_range=_parse_pair(args.blur_sigma_range, "--blur-sigma-range")
        if args.blur_sigma_range is not None else defaults.blur_sigma_range,
        color_prob=get("color_prob"),
        contrast_range=_parse_pair(args.contrast_range, "--contrast-range")
        if args.contrast_range is not None else defaults.contrast_range,
        brightness_range=_parse_pair(args.brightness_range, "--brightness-range")
        if args.brightness_range is not None else defaults.brightness_range,
        noise_prob=get("noise_prob"),
        gauss_noise_sigma=get("gauss_noise_sigma"),
        salt_pepper_prob=get("salt_pepper_prob"),
        salt_pepper_fraction=get("salt_pepper_fraction"),
    )


IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def cmd_augment(args) -> int:
    _merge_config(args)
    _require(args, "images_dir", "out_dir")
    img_dir = Path(args.images_dir)
    paths = sorted(p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise ValueError(f"no images found in {img_dir}")
    originals = {p.stem: aug.load_image(p) for p in paths}
    factor = int(args.factor) if args.factor is not None else 1
    seed = core.check_seed(args.seed if args.seed is not None else 0)
    dataset = aug.augment_dataset(originals, factor, _augment_spec(args), seed)
    manifest = aug.write_augmented_dataset(dataset, args.out_dir)
    print(f"{len(dataset.items)} items -> {manifest}")
    return 0


def cmd_train(args) -> int:
    _merge_config(args)
    _require(args, "features", "embedding", "out")
    features = core.load_feature_table(args.features)
    emb = core.load_embedding(args.embedding)
    dataset = evaluation.label_features(features, emb)
    model = mp.fit_linear_map(dataset,
                              float(args.ridge) if args.ridge is not None else 0.0,
                              bool(args.standardize))
    mp.write_linear_map(model, args.out)
    train_rmse = evaluation.rmse(mp.predict(model, features.features), dataset.target_rows())
    print(f"trained {model.feature_width}->{model.dims} map, train RMSE {train_rmse:.6g}")
    return 0


def cmd_eval(args) -> int:
    _merge_config(args)
    _require(args, "features", "out_dir")
    features = core.load_feature_table(args.features)
    embeddings: dict[int, core.Embedding] = {}
    if args.embedding:
        for path in args.embedding:
            emb = core.load_embedding(path)
            if emb.dims in embeddings:
                raise ValueError(f"duplicate embedding for dims={emb.dims}")
            embeddings[emb.dims] = emb
    elif args.dissimilarity:
        delta = core.load_dissimilarity_matrix(args.dissimilarity)
        seed = core.check_seed(args.seed if args.seed is not None else 0)
        for d in _parse_dims(args.dims if args.dims is not None else "2,4,8"):
            cfg = _smacof_config(args, d, mds.scan_seed(seed, d))
            embeddings[d], _ = mds.smacof(delta, cfg)
    else:
        raise ValueError("missing required inputs: provide --embedding or --dissimilarity")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = evaluation.run_study(
        embeddings, features,
        ridge_lambda=float(args.ridge) if args.ridge is not None else 0.0,
        runs=int(args.runs) if args.runs is not None else 10,
        seed=core.check_seed(args.seed if args.seed is not None else 0),
        per_coordinate=bool(args.rmse_per_coordinate),
        standardize=bool(args.standardize),
        jobs=_jobs(args),
    )
    evaluation.write_report_csv(report, out / "report.csv")
    for d in report.dims_list:
        (out / f"test_rmse_{d}d.svg").write_text(evaluation.report_bar_chart_svg(report, d))
    for c in report.cells:
        print(f"dims={c.dims} predictor={c.predictor} train={c.mean_train:.4f} "
              f"test={c.mean_test:.4f} runs={c.runs}")
    return 0


def cmd_scatter(args) -> int:
    _merge_config(args)
    _require(args, "embedding", "out")
    emb = core.load_embedding(args.embedding)
    if emb.dims < 2:
        raise ValueError("embedding has fewer than 2 dimensions")
    if args.axes is not None:
        ij = [int(t) for t in args.axes.split(",")]
        if len(ij) != 2 or not all(0 <= a < emb.dims for a in ij):
            raise ValueError(f"--axes must name two dimensions below {emb.dims}")
        i, j = ij
    else:
        i, j = 0, 1
    images = None
    if args.manifest:
        by_group: dict[str, str] = {}
        for item_id, gid, fpath in aug.load_manifest(args.manifest):
            by_group.setdefault(gid, fpath)
        images = [by_group.get(sid, "") for sid in emb.ids]
    svg = scatter_svg(emb.coords[:, i].tolist(), emb.coords[:, j].tolist(),
                      list(emb.ids), xlabel=f"dim_{i}", ylabel=f"dim_{j}",
                      title=Path(args.embedding).stem, images=images)
    Path(args.out).write_text(svg)
    print(f"wrote {args.out}")
    return 0


def cmd_triangulate(args) -> int:
    _merge_config(args)
    _require(args, "embedding", "anchors", "distances")
    emb = core.load_embedding(args.embedding)
    anchor_ids = [t for t in args.anchors.split(",") if t]
    unknown = [a for a in anchor_ids if a not in emb.ids]
    if unknown:
        raise ValueError(f"unknown anchor ids: {', '.join(unknown)}")
    distances = [float(t) for t in args.distances.split(",") if t]
    if len(distances) != len(anchor_ids):
        raise ValueError("anchor and distance counts differ")
    point = mp.triangulate([emb.point(a) for a in anchor_ids], distances)
    print(",".join(f"{x:.17g}" for x in point))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.add_argument("--seed", type=int, default=None, help="master 64-bit seed (default 0)")
    p.add_argument("--jobs", type=int, default=None,
                   help="worker cap for folds (default SIMSPACE_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simspace",
                                     description="similarity spaces from dissimilarity data, "
                                                 "and mappings into them")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mds", help="embed a dissimilarity matrix at one or more dims")
    p.add_argument("--dissimilarity", help="dissimilarity matrix CSV")
    p.add_argument("--dims", help="comma-separated dims list (default 2,4,8)")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--init", choices=mds.INIT_MODES, default=None)
    p.add_argument("--out-dir")
    _add_common(p)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("augment", help="generate augmented image variants + manifest")
    p.add_argument("--images-dir")
    p.add_argument("--factor", type=int, default=None)
    p.add_argument("--out-dir")
    for flag in ("flip-prob", "affine-prob", "max-rotation-deg", "max-shear-deg",
                 "max-translate-frac", "crop-prob", "blur-prob", "color-prob",
                 "noise-prob", "gauss-noise-sigma", "salt-pepper-prob",
                 "salt-pepper-fraction"):
        p.add_argument(f"--{flag}", type=float, default=None)
    for flag in ("scale-range", "crop-fraction-range", "blur-sigma-range",
                 "contrast-range", "brightness-range"):
        p.add_argument(f"--{flag}", default=None, help="lo,hi")
    _add_common(p)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", help="fit the feature -> space regression")
    p.add_argument("--features", help="feature CSV")
    p.add_argument("--embedding", help="embedding CSV with the target space")
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", help="output model CSV")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the baseline/regression study grid")
    p.add_argument("--features", help="feature CSV")
    p.add_argument("--embedding", action="append",
                   help="embedding CSV (repeatable, one per dims)")
    p.add_argument("--dissimilarity", help="compute embeddings from this matrix instead")
    p.add_argument("--dims", help="dims list when computing embeddings (default 2,4,8)")
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--init", choices=mds.INIT_MODES, default=None)
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--rmse-per-coordinate", action="store_true")
    p.add_argument("--out-dir")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scatter", help="SVG scatter of a 2-D embedding (or dim pair)")
    p.add_argument("--embedding")
    p.add_argument("--axes", help="two dimension indices, e.g. 0,3 (default 0,1)")
    p.add_argument("--manifest", help="optional manifest CSV for thumbnails")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("triangulate", help="place a point from anchor distances")
    p.add_argument("--embedding")
    p.add_argument("--anchors", help="comma-separated stimulus ids")
    p.add_argument("--distances", help="comma-separated distances")
    _add_common(p)
    p.set_defaults(func=cmd_triangulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
