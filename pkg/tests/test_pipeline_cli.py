import json

import numpy as np
import pytest
from PIL import Image as PILImage

from leafshape.cli import main
from leafshape.errors import NoContour
from leafshape.laii import ScaleSet
from leafshape.pipeline import (PipelineConfig, extract_from_image,
                                read_feature_csv, write_feature_csv)
from leafshape.synth import CorpusSpec, ShapeClass, synth_corpus
from conftest import disk_mask


def _leaf_image(size=512, radius=150):
    img = np.full((size, size), 255, np.uint8)
    img[disk_mask(size, radius)] = 30
    return img


TINY_FAMILIES = (
    ShapeClass("disk", "disk"),
    ShapeClass("square", "square"),
    ShapeClass("star", "star", {"points": 5, "inner_ratio": 0.45}),
)


class TestPipeline:
    def test_single_image_gives_719(self):
        res = extract_from_image(_leaf_image())
        assert res.features.shape == (719,)
        assert np.isfinite(res.features).all()
        assert not res.used_fallback

    def test_low_resolution_profile_gives_433(self):
        cfg = PipelineConfig(scale_set=ScaleSet(scales=(5.0, 10.0, 15.0)))
        res = extract_from_image(_leaf_image(256, 70), cfg)
        assert res.features.shape == (433,)

    def test_fast_path_matches_reference(self):
        img = _leaf_image()
        ref = extract_from_image(img, PipelineConfig(fast_laii=False))
        fast = extract_from_image(img, PipelineConfig(fast_laii=True))
        assert np.array_equal(ref.features, fast.features)

    def test_resize_profile(self):
        img = _leaf_image(1024, 300)
        res = extract_from_image(img, PipelineConfig(resize_to=512))
        assert res.features.shape == (719,)
        assert res.mask.shape == (512, 512)

    def test_fallback_engages_on_inverted_mask(self):
        # white shape on black defeats the darker-than-background threshold
        img = np.zeros((512, 512), np.uint8)
        img[disk_mask(512, 150)] = 220
        res = extract_from_image(img)
        assert res.used_fallback
        assert abs(res.contour.area - np.pi * 150 * 150) / (np.pi * 150 * 150) < 0.06

    def test_no_contour_raises(self):
        rng = np.random.default_rng(0)
        img = np.clip(rng.normal(128, 2, (64, 64)), 0, 255).astype(np.uint8)
        with pytest.raises(NoContour):
            extract_from_image(img)

    def test_feature_csv_roundtrip(self, tmp_path, rng):
        X = rng.normal(size=(7, 11))
        labels = [f"c{k % 3}" for k in range(7)]
        paths = [f"dir/img_{k}.png" for k in range(7)]
        store = tmp_path / "features.csv"
        write_feature_csv(store, labels, paths, X)
        l2, p2, x2 = read_feature_csv(store)
        assert l2 == labels and p2 == paths
        assert np.array_equal(x2, X)  # repr round-trips float64 exactly

    def test_laii_csv_export(self, tmp_path):
        from leafshape.laii import write_laii_csv
        res = extract_from_image(_leaf_image())
        out = tmp_path / "laii.csv"
        write_laii_csv(res.laiis, out)
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 6  # header + one row per scale
        assert lines[0].startswith("scale_percent,radius_px,k000")
        first = lines[1].split(",")
        assert float(first[0]) == 1.0 and len(first) == 258

    def test_raster_scale_feature_invariance(self):
        # re-rendering the same shape at 2x resolution moves compactness
        # (P/A is resolution-dependent) but leaves the LAII-derived block
        # nearly unchanged
        def ellipse_img(size, a, b):
            yy, xx = np.mgrid[0:size, 0:size]
            c = (size - 1) / 2.0
            inside = ((xx - c) / a) ** 2 + ((yy - c) / b) ** 2 <= 1.0
            return np.where(inside, 0, 255).astype(np.uint8)

        small = extract_from_image(ellipse_img(256, 90, 55)).features
        large = extract_from_image(ellipse_img(512, 180, 110)).features
        rel = np.linalg.norm(large[4:] - small[4:]) / np.linalg.norm(small[4:])
        assert rel < 0.05
        assert abs(large[3] / small[3] - 0.5) < 0.05  # compactness halves at 2x


@pytest.fixture(scope="module")
def tiny_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    spec = CorpusSpec(classes=TINY_FAMILIES, per_class=6, size=256,
                      scale_range=(0.7, 0.9))
    synth_corpus(spec, root, seed=21)
    return root


class TestCli:
    def test_full_workflow(self, tiny_corpus, tmp_path, capsys):
        features = tmp_path / "features.csv"
        model = tmp_path / "shapes.model"
        report = tmp_path / "report.json"
        curve = tmp_path / "topn.csv"

        assert main(["extract", str(tiny_corpus), "--out", str(features)]) == 0
        labels, paths, X = read_feature_csv(features)
        assert X.shape == (18, 719)

        assert main(["train", "--features", str(features), "--test-per-class", "2",
                     "--seed", "5", "--model", str(model), "--grid"]) == 0
        assert main(["evaluate", "--model", str(model), "--features", str(features),
                     "--report", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["n_test"] == 6  # 3 classes x 2 held out
        assert data["top_n"][0] >= 2 / 3  # desk-scale corpus separates easily

        assert main(["plot-topn", "--report", str(report), "--out", str(curve)]) == 0
        lines = curve.read_text().strip().splitlines()
        assert lines[0] == "n,accuracy"
        assert len(lines) == 11

        image_path = next(tiny_corpus.rglob("disk_*.png"))
        assert main(["predict", "--model", str(model), str(image_path), "--top", "2"]) == 0
        out = capsys.readouterr().out
        assert "votes=" in out

    def test_parallel_extract_matches_serial(self, tiny_corpus, tmp_path):
        from leafshape.dataset import load_dataset
        from leafshape.pipeline import PipelineConfig, extract_dataset
        ds = load_dataset(tiny_corpus)
        serial = extract_dataset(ds, PipelineConfig())
        parallel = extract_dataset(ds, PipelineConfig(), workers=2)
        assert serial[0] == parallel[0] and serial[1] == parallel[1]
        assert np.array_equal(serial[2], parallel[2])

    def test_reduced_scales_flag(self, tiny_corpus, tmp_path):
        features = tmp_path / "lowres.csv"
        assert main(["extract", str(tiny_corpus), "--out", str(features),
                     "--scales", "5,10,15"]) == 0
        _, _, X = read_feature_csv(features)
        assert X.shape[1] == 433

    def test_scales_from_config_file(self, tiny_corpus, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"scales": "5,10,15"}))
        features = tmp_path / "lowres.csv"
        assert main(["--config", str(config), "extract", str(tiny_corpus),
                     "--out", str(features)]) == 0
        _, _, X = read_feature_csv(features)
        assert X.shape[1] == 433

    def test_predict_laii_export_and_evaluate_all(self, tiny_corpus, tmp_path):
        features = tmp_path / "f.csv"
        model = tmp_path / "m.model"
        assert main(["extract", str(tiny_corpus), "--out", str(features)]) == 0
        assert main(["train", "--features", str(features), "--model", str(model),
                     "--gamma", "0.001", "--C", "100"]) == 0
        image_path = next(tiny_corpus.rglob("square_*.png"))
        laii_csv = tmp_path / "laii.csv"
        assert main(["predict", "--model", str(model), str(image_path),
                     "--laii-out", str(laii_csv)]) == 0
        assert len(laii_csv.read_text().strip().splitlines()) == 6
        report = tmp_path / "all.json"
        assert main(["evaluate", "--model", str(model), "--features", str(features),
                     "--report", str(report), "--all"]) == 0
        assert json.loads(report.read_text())["n_test"] == 18

    def test_segment_command(self, tmp_path, capsys):
        img_path = tmp_path / "leaf.png"
        PILImage.fromarray(_leaf_image(256, 80)).save(img_path)
        mask_path = tmp_path / "mask.png"
        contour_path = tmp_path / "contour.csv"
        code = main(["segment", str(img_path), "--mask-out", str(mask_path),
                     "--contour-out", str(contour_path)])
        assert code == 0
        mask = np.asarray(PILImage.open(mask_path))
        assert mask.dtype == bool or set(np.unique(mask)) <= {0, 255, True, False}
        assert contour_path.read_text().startswith("x,y")
        assert "foreground" in capsys.readouterr().out

    def test_synth_command(self, tmp_path):
        spec_file = tmp_path / "spec.json"
        spec_file.write_text(json.dumps({
            "classes": [{"name": "disk", "kind": "disk"},
                        {"name": "square", "kind": "square"}],
            "per_class": 2, "size": 64}))
        out_dir = tmp_path / "corpus"
        assert main(["synth", "--spec", str(spec_file), "--out", str(out_dir),
                     "--seed", "3"]) == 0
        assert sum(1 for _ in out_dir.rglob("*.png")) == 4

    def test_exit_code_input_error(self, tmp_path):
        assert main(["extract", str(tmp_path / "missing"), "--out",
                     str(tmp_path / "f.csv")]) == 2

    def test_exit_code_segmentation_failure(self, tmp_path):
        rng = np.random.default_rng(1)
        img_path = tmp_path / "flat.png"
        PILImage.fromarray(np.clip(rng.normal(128, 2, (64, 64)), 0, 255)
                           .astype(np.uint8)).save(img_path)
        assert main(["segment", str(img_path)]) == 3

    def test_exit_code_model_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.model"
        bad.write_text("{not json")
        img_path = tmp_path / "img.png"
        PILImage.fromarray(_leaf_image(256, 80)).save(img_path)
        assert main(["predict", "--model", str(bad), str(img_path)]) == 4

    def test_config_file_defaults_and_override(self, tiny_corpus, tmp_path):
        features = tmp_path / "f.csv"
        assert main(["extract", str(tiny_corpus), "--out", str(features)]) == 0

        config = tmp_path / "config.json"
        config.write_text(json.dumps({"gamma": 0.01, "C": 50.0, "components": 8}))
        m1 = tmp_path / "m1.model"
        assert main(["--config", str(config), "train", "--features", str(features),
                     "--model", str(m1)]) == 0
        from leafshape.harness import load_model
        model1 = load_model(m1)
        assert model1.config.gamma == 0.01 and model1.config.C == 50.0
        assert model1.pca.n_components == 8

        m2 = tmp_path / "m2.model"
        assert main(["--config", str(config), "train", "--features", str(features),
                     "--model", str(m2), "--gamma", "0.05"]) == 0
        assert load_model(m2).config.gamma == 0.05  # CLI flag wins
