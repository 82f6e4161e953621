import json
import re

import numpy as np

from simspace import cli
from simspace.augment import RasterImage, save_image
from simspace.core import (
    Embedding,
    FeatureTable,
    load_embedding,
    make_rng,
    write_embedding,
    write_feature_table,
)
from simspace.evaluation import run_study, write_report_csv
from simspace.mapping import load_linear_map, triangulate


def run(argv):
    return cli.main(argv)


def make_delta_csv(path, n=6, seed=0):
    rng = make_rng(seed)
    coords = rng.normal(0, 1, (n, 3))
    d = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
    ids = [f"s{i}" for i in range(n)]
    with open(path, "w") as fh:
        fh.write("id," + ",".join(ids) + "\n")
        for i in range(n):
            fh.write(ids[i] + "," + ",".join(f"{x:.17g}" for x in d[i]) + "\n")
    return path


def make_study_inputs(tmp_path, n_groups=5, per_group=3, k=4, seed=1):
    rng = make_rng(seed)
    gids = tuple(f"g{i}" for i in range(n_groups))
    emb = Embedding(gids, rng.normal(0, 1, (n_groups, 2)))
    emb_path = tmp_path / "emb2.csv"
    write_embedding(emb, emb_path)
    items, groups, feats = [], [], []
    for g in gids:
        for v in range(per_group):
            items.append(f"{g}#{v}")
            groups.append(g)
            feats.append(rng.normal(0, 1, k))
    features = FeatureTable(tuple(items), tuple(groups), np.array(feats))
    feat_path = tmp_path / "features.csv"
    write_feature_table(features, feat_path)
    return emb, emb_path, features, feat_path


class TestMdsCommand:
    def test_writes_embeddings_and_curve(self, tmp_path, capsys):
        delta_path = make_delta_csv(tmp_path / "delta.csv")
        out = tmp_path / "out"
        code = run(["mds", "--dissimilarity", str(delta_path), "--dims", "2,3",
                    "--seed", "5", "--out-dir", str(out)])
        assert code == 0
        assert (out / "embedding_2d.csv").exists()
        assert (out / "embedding_3d.csv").exists()
        lines = (out / "stress_curve.csv").read_text().strip().split("\n")
        assert lines[0] == "dims,stress1,raw_stress"
        assert len(lines) == 3
        emb3 = load_embedding(out / "embedding_3d.csv")
        assert emb3.stress1 < 1e-6  # the matrix came from an exact 3-D config

    def test_overparameterized_warning_on_stderr(self, tmp_path, capsys):
        delta_path = make_delta_csv(tmp_path / "delta.csv", n=3)
        code = run(["mds", "--dissimilarity", str(delta_path), "--dims", "5",
                    "--out-dir", str(tmp_path / "o")])
        assert code == 0
        assert "dims >= n-1" in capsys.readouterr().err

    def test_missing_input_fails(self, tmp_path, capsys):
        code = run(["mds", "--out-dir", str(tmp_path)])
        assert code == 1
        assert "--dissimilarity" in capsys.readouterr().err


class TestEvalCommand:
    def test_matches_library_call(self, tmp_path):
        emb, emb_path, features, feat_path = make_study_inputs(tmp_path)
        out = tmp_path / "out"
        code = run(["eval", "--features", str(feat_path), "--embedding", str(emb_path),
                    "--runs", "2", "--seed", "3", "--out-dir", str(out)])
        assert code == 0
        report = run_study({2: emb}, features, runs=2, seed=3)
        expected = tmp_path / "expected.csv"
        write_report_csv(report, expected)
        assert (out / "report.csv").read_bytes() == expected.read_bytes()
        assert (out / "test_rmse_2d.svg").read_text().startswith("<svg")

    def test_seed_determinism(self, tmp_path):
        _, emb_path, _, feat_path = make_study_inputs(tmp_path, seed=2)
        outs = []
        for name in ("o1", "o2"):
            out = tmp_path / name
            assert run(["eval", "--features", str(feat_path), "--embedding", str(emb_path),
                        "--runs", "2", "--seed", "11", "--out-dir", str(out)]) == 0
            outs.append((out / "report.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_jobs_flag_does_not_change_output(self, tmp_path):
        _, emb_path, _, feat_path = make_study_inputs(tmp_path, seed=4)
        outs = []
        for name, jobs in (("j1", "1"), ("j2", "3")):
            out = tmp_path / name
            assert run(["eval", "--features", str(feat_path), "--embedding", str(emb_path),
                        "--runs", "2", "--seed", "1", "--jobs", jobs,
                        "--out-dir", str(out)]) == 0
            outs.append((out / "report.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_jobs_env_var_mirrors_flag(self, tmp_path, monkeypatch):
        _, emb_path, _, feat_path = make_study_inputs(tmp_path, seed=10)
        outs = []
        for name, env in (("e1", "2"), ("e2", None)):
            if env:
                monkeypatch.setenv("SIMSPACE_JOBS", env)
            else:
                monkeypatch.delenv("SIMSPACE_JOBS", raising=False)
            out = tmp_path / name
            assert run(["eval", "--features", str(feat_path), "--embedding", str(emb_path),
                        "--runs", "2", "--seed", "1", "--out-dir", str(out)]) == 0
            outs.append((out / "report.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_config_file_with_flag_override(self, tmp_path):
        _, emb_path, _, feat_path = make_study_inputs(tmp_path, seed=5)
        cfg = {"features": str(feat_path), "embedding": [str(emb_path)],
               "runs": 5, "seed": 2, "out-dir": str(tmp_path / "cfg_out")}
        cfg_path = tmp_path / "study.json"
        cfg_path.write_text(json.dumps(cfg))
        # flag --runs 2 must beat the config's 5
        assert run(["eval", "--config", str(cfg_path), "--runs", "2"]) == 0
        report = (tmp_path / "cfg_out" / "report.csv").read_text()
        assert report.count(",2\n") > 0 and ",5\n" not in report

    def test_requires_embedding_or_dissimilarity(self, tmp_path, capsys):
        _, _, _, feat_path = make_study_inputs(tmp_path, seed=6)
        code = run(["eval", "--features", str(feat_path), "--out-dir", str(tmp_path / "x")])
        assert code == 1
        assert "--embedding or --dissimilarity" in capsys.readouterr().err


class TestTrainCommand:
    def test_trains_and_serializes(self, tmp_path):
        emb, emb_path, features, feat_path = make_study_inputs(tmp_path, seed=7)
        out = tmp_path / "model.csv"
        code = run(["train", "--features", str(feat_path), "--embedding", str(emb_path),
                    "--ridge", "0.5", "--out", str(out)])
        assert code == 0
        model = load_linear_map(out)
        assert model.feature_width == features.width
        assert model.dims == emb.dims
        assert model.ridge_lambda == 0.5

    def test_unknown_group_fails(self, tmp_path, capsys):
        emb, emb_path, features, feat_path = make_study_inputs(tmp_path, seed=8)
        bad = FeatureTable(("q#0",), ("nope",), np.zeros((1, 4)))
        bad_path = tmp_path / "bad.csv"
        write_feature_table(bad, bad_path)
        code = run(["train", "--features", str(bad_path), "--embedding", str(emb_path),
                    "--out", str(tmp_path / "m.csv")])
        assert code == 1
        assert "unknown group_id" in capsys.readouterr().err


class TestScatterCommand:
    def test_three_point_scatter(self, tmp_path):
        emb = Embedding(("a", "b", "c"), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
        emb_path = tmp_path / "e.csv"
        write_embedding(emb, emb_path)
        out = tmp_path / "s.svg"
        assert run(["scatter", "--embedding", str(emb_path), "--out", str(out)]) == 0
        svg = out.read_text()
        assert svg.count("<circle") == 3
        assert "dim_0" in svg and "dim_1" in svg
        # marker layout must match the coordinates up to the linear viewport map
        cx = [float(m) for m in re.findall(r'circle cx="([0-9.]+)"', svg)]
        cy = [float(m) for m in re.findall(r'cy="([0-9.]+)"', svg)]
        assert cx[1] > cx[0] and abs(cx[2] - cx[0]) < 1e-6   # b right of a, c above a
        assert cy[2] < cy[0] and abs(cy[1] - cy[0]) < 1e-6   # svg y axis points down

    def test_axes_selection(self, tmp_path):
        rng = make_rng(9)
        emb = Embedding(("a", "b", "c"), rng.normal(0, 1, (3, 4)))
        emb_path = tmp_path / "e.csv"
        write_embedding(emb, emb_path)
        out = tmp_path / "s.svg"
        assert run(["scatter", "--embedding", str(emb_path), "--axes", "0,3",
                    "--out", str(out)]) == 0
        svg = out.read_text()
        assert "dim_3" in svg

    def test_one_dimensional_embedding_fails(self, tmp_path, capsys):
        emb = Embedding(("a", "b", "c"), np.array([[0.0], [1.0], [2.0]]))
        emb_path = tmp_path / "e.csv"
        write_embedding(emb, emb_path)
        code = run(["scatter", "--embedding", str(emb_path), "--out", str(tmp_path / "s.svg")])
        assert code == 1
        assert "fewer than 2 dimensions" in capsys.readouterr().err


class TestAugmentCommand:
    def test_augments_directory(self, tmp_path):
        img_dir = tmp_path / "imgs"
        img_dir.mkdir()
        rng = make_rng(10)
        for name in ("obj1", "obj2"):
            save_image(RasterImage(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)),
                       img_dir / f"{name}.png")
        out = tmp_path / "aug"
        code = run(["augment", "--images-dir", str(img_dir), "--factor", "3",
                    "--seed", "4", "--out-dir", str(out)])
        assert code == 0
        manifest = (out / "manifest.csv").read_text().strip().split("\n")
        assert manifest[0] == "item_id,group_id,file_path"
        assert len(manifest) == 1 + 6

    def test_empty_directory_fails(self, tmp_path, capsys):
        (tmp_path / "none").mkdir()
        code = run(["augment", "--images-dir", str(tmp_path / "none"),
                    "--out-dir", str(tmp_path / "aug")])
        assert code == 1
        assert "no images" in capsys.readouterr().err


class TestTriangulateCommand:
    def test_places_point(self, tmp_path, capsys):
        emb = Embedding(("a", "b", "c"), np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]]))
        emb_path = tmp_path / "e.csv"
        write_embedding(emb, emb_path)
        code = run(["triangulate", "--embedding", str(emb_path),
                    "--anchors", "a,b,c",
                    "--distances", f"{np.sqrt(2)},{np.sqrt(5)},{np.sqrt(5)}"])
        assert code == 0
        point = [float(t) for t in capsys.readouterr().out.strip().split(",")]
        assert np.allclose(point, [1.0, 1.0], atol=1e-9)
        direct = triangulate([emb.point(i) for i in ("a", "b", "c")],
                             [np.sqrt(2), np.sqrt(5), np.sqrt(5)])
        assert np.allclose(point, direct, atol=1e-12)

    def test_unknown_anchor(self, tmp_path, capsys):
        emb = Embedding(("a", "b", "c"), np.zeros((3, 2)))
        emb_path = tmp_path / "e.csv"
        write_embedding(emb, emb_path)
        code = run(["triangulate", "--embedding", str(emb_path),
                    "--anchors", "a,x", "--distances", "1,1"])
        assert code == 1
        assert "unknown anchor" in capsys.readouterr().err
