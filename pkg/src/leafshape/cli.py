"""Command-line interface.

Subcommands: segment, extract, train, predict, evaluate, synth, plot-topn.
A JSON config file (--config) may hold the same keys as the CLI flags;
explicit flags win. Exit codes: 0 success, 2 input error, 3 segmentation or
extraction failure, 4 model error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import imageio, pipeline
from .classifier import SvmConfig
from .contours import extract_contours, select_leaf_contour, write_contour_csv
from .dataset import Dataset, load_dataset, split_dataset
from .errors import (CorruptModel, DimensionMismatch, EmptyClass, EmptyDataset,
                     EmptySegmentation, LengthMismatch, NoContour, RadiusTooSmall,
                     VersionMismatch)
from .harness import (evaluate, fit_reduced_model, grid_search, load_model,
                      save_model)
from .laii import ScaleSet, write_laii_csv
from .synth import CorpusSpec, synth_corpus

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SEGMENTATION = 3
EXIT_MODEL = 4

log = logging.getLogger("leafshape")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leafshape",
                                     description="Shape-only leaf identification pipeline")
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file with default values for any flag")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one image and report mask statistics")
    p.add_argument("image", type=Path)
    p.add_argument("--mask-out", type=Path, default=None, help="write the mask as 1-bit PNG")
    p.add_argument("--contour-out", type=Path, default=None,
                   help="write the selected boundary as CSV (x,y rows)")

    p = sub.add_parser("extract", help="extract features for a dataset directory")
    p.add_argument("dataset_root", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scales", type=str, default=None, help="comma list, e.g. 1,2.5,5,10,15")
    p.add_argument("--min-radius", type=int, default=None)
    p.add_argument("--resize", type=int, default=None,
                   help="rescale images so max dimension matches before extraction")
    p.add_argument("--fast", action="store_true", help="use the incremental LAII path")
    p.add_argument("--jobs", type=int, default=None,
                   help="extract in parallel with this many worker processes")

    p = sub.add_parser("train", help="train a model from a feature store")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--test-per-class", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--C", type=float, default=None, dest="C")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--components", type=int, default=None)
    p.add_argument("--scales", type=str, default=None)
    p.add_argument("--min-radius", type=int, default=None)
    p.add_argument("--resize", type=int, default=None,
                   help="recorded so predict/evaluate reuse the profile")
    p.add_argument("--grid", action="store_true",
                   help="pick C/gamma by cross-validated grid search on the training split")

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("image", type=Path)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--laii-out", type=Path, default=None,
                   help="also write the extracted LAII signals as CSV")

    p = sub.add_parser("evaluate", help="score a model against a feature store")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--test-per-class", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--all", action="store_true",
                   help="score every row instead of the recorded held-out split")

    p = sub.add_parser("synth", help="generate a synthetic shape corpus")
    p.add_argument("--spec", type=Path, default=None, help="JSON corpus spec")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("plot-topn", help="emit the top-n accuracy curve as CSV")
    p.add_argument("--report", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config file must hold a JSON object")
    return cfg


def _resolve(args, config, key, default):
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, default)
    return value


def _parse_scales(text):
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def _scale_set(args, config) -> ScaleSet:
    scales = _resolve(args, config, "scales", None)
    min_radius = int(_resolve(args, config, "min_radius", 4))
    if scales is None:
        return ScaleSet(min_radius_px=min_radius)
    if isinstance(scales, str):
        scales = _parse_scales(scales)
    return ScaleSet(scales=tuple(scales), min_radius_px=min_radius)


def _pipeline_config(args, config) -> pipeline.PipelineConfig:
    return pipeline.PipelineConfig(
        scale_set=_scale_set(args, config),
        resize_to=_resolve(args, config, "resize", None),
        fast_laii=bool(_resolve(args, config, "fast", False)),
    )


def _cmd_segment(args, config) -> int:
    img = imageio.load_image(args.image)
    mask = pipeline.segment_image(img)
    if args.mask_out:
        imageio.save_mask_png(mask, args.mask_out)
    print(f"foreground: {int(mask.sum())} px "
          f"({100.0 * mask.mean():.2f}% of {mask.shape[1]}x{mask.shape[0]})")
    if args.contour_out:
        chosen = select_leaf_contour(extract_contours(mask), img.shape)
        if chosen is None:
            raise NoContour("no selectable boundary in the segmented mask")
        write_contour_csv(chosen, args.contour_out)
    return EXIT_OK


def _cmd_extract(args, config) -> int:
    ds = load_dataset(args.dataset_root)
    cfg = _pipeline_config(args, config)
    workers = int(_resolve(args, config, "jobs", 0) or 0)
    labels, paths, X, skipped = pipeline.extract_dataset(ds, cfg, workers=workers)
    if skipped:
        log.warning("skipped %d of %d images", len(skipped), len(ds))
    if not labels:
        print("error: no image could be processed", file=sys.stderr)
        return EXIT_SEGMENTATION
    pipeline.write_feature_csv(args.out, labels, paths, X)
    print(f"wrote {len(labels)} rows x {X.shape[1]} features to {args.out}"
          + (f" ({len(skipped)} skipped)" if skipped else ""))
    return EXIT_OK


def _train_test_rows(labels, paths, test_per_class, seed):
    ds = Dataset(items=list(zip(labels, paths)), classes=sorted(set(labels)))
    split = split_dataset(ds, test_per_class, seed)
    test_paths = {p for _, p in split.test}
    train_idx = [i for i, p in enumerate(paths) if p not in test_paths]
    test_idx = [i for i, p in enumerate(paths) if p in test_paths]
    return train_idx, test_idx


def _cmd_train(args, config) -> int:
    labels, paths, X = pipeline.read_feature_csv(args.features)
    test_per_class = int(_resolve(args, config, "test_per_class", 0) or 0)
    seed = int(_resolve(args, config, "seed", 0) or 0)
    if test_per_class > 0:
        train_idx, _ = _train_test_rows(labels, paths, test_per_class, seed)
    else:
        train_idx = list(range(len(labels)))
    train_labels = [labels[i] for i in train_idx]
    train_X = X[train_idx]
    scale_set = _scale_set(args, config)
    n_components = int(_resolve(args, config, "components", 128))
    cfg = SvmConfig(C=float(_resolve(args, config, "C", 1000.0)),
                    gamma=float(_resolve(args, config, "gamma", 7.0)))
    if args.grid:
        cfg, _ = grid_search(train_X, train_labels,
                             c_grid=(10.0, 100.0, 1000.0),
                             gamma_grid=(1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2),
                             scale_set=scale_set, seed=seed,
                             n_components=n_components)
        print(f"grid search picked C={cfg.C:g} gamma={cfg.gamma:g}")
    meta = {"test_per_class": test_per_class, "split_seed": seed,
            "resize_to": _resolve(args, config, "resize", None)}
    model = fit_reduced_model(train_X, train_labels, cfg, scale_set,
                              n_components=n_components, meta=meta)
    save_model(model, args.model)
    print(f"trained {len(model.machines)} pairwise machines over "
          f"{len(model.labels)} classes on {len(train_idx)} samples -> {args.model}")
    return EXIT_OK


def _cmd_predict(args, config) -> int:
    model = load_model(args.model)
    img = imageio.load_image(args.image)
    top = _resolve(args, config, "top", None)
    top = min(int(top), len(model.labels)) if top is not None else min(5, len(model.labels))
    cfg = pipeline.PipelineConfig(scale_set=model.scale_set,
                                  resize_to=model.meta.get("resize_to"))
    res = pipeline.extract_from_image(img, cfg)
    if args.laii_out:
        write_laii_csv(res.laiis, args.laii_out)
    for lab, votes, margin in pipeline.predict_features(model, res.features, top):
        print(f"{lab}\tvotes={votes}\tmargin={margin:.4f}")
    return EXIT_OK


def _cmd_evaluate(args, config) -> int:
    model = load_model(args.model)
    labels, paths, X = pipeline.read_feature_csv(args.features)
    test_per_class = _resolve(args, config, "test_per_class", None)
    seed = _resolve(args, config, "seed", None)
    if test_per_class is None and not args.all:
        test_per_class = model.meta.get("test_per_class") or None
        seed = model.meta.get("split_seed", 0) if test_per_class else None
    if args.all:
        test_per_class = None
    if test_per_class:
        _, test_idx = _train_test_rows(labels, paths, int(test_per_class), int(seed or 0))
        labels = [labels[i] for i in test_idx]
        X = X[test_idx]
        print(f"evaluating the {len(labels)}-row held-out split "
              f"(test_per_class={test_per_class}, seed={seed})")
    report = evaluate(model, X, labels)
    with open(args.report, "w") as fh:
        json.dump(report.to_dict(), fh, indent=1)
    print(f"n={report.n_test} recall={report.macro_recall:.4f} "
          f"precision={report.macro_precision:.4f} f1={report.macro_f1:.4f} "
          f"top1={report.top_n[0]:.4f} top2={report.top_n[1]:.4f}")
    return EXIT_OK


def _cmd_synth(args, config) -> int:
    spec = CorpusSpec.from_json(args.spec) if args.spec else CorpusSpec()
    seed = int(_resolve(args, config, "seed", 0) or 0)
    ds = synth_corpus(spec, args.out, seed)
    print(f"wrote {len(ds)} images over {len(ds.classes)} classes to {args.out}")
    return EXIT_OK


def _cmd_plot_topn(args, config) -> int:
    with open(args.report) as fh:
        report = json.load(fh)
    curve = report.get("top_n")
    if not curve:
        raise ValueError(f"{args.report} has no top_n field")
    with open(args.out, "w") as fh:
        fh.write("n,accuracy\n")
        for n, acc in enumerate(curve, start=1):
            fh.write(f"{n},{acc!r}\n")
    print(f"wrote top-n curve ({len(curve)} points) to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "segment": _cmd_segment,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "synth": _cmd_synth,
    "plot-topn": _cmd_plot_topn,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        config = _load_config(args.config)
        return _COMMANDS[args.command](args, config)
    except (EmptySegmentation, NoContour, RadiusTooSmall) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEGMENTATION
    except (VersionMismatch, CorruptModel, DimensionMismatch, LengthMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (EmptyDataset, EmptyClass, FileNotFoundError, IsADirectoryError,
            PermissionError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
