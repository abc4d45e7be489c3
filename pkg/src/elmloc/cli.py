"""Command-line front end: ingest, train, predict, sweep, benchmark, report.

Dataset files live under a root directory (flag ``--data-root`` or env var
``ELMLOC_DATA_ROOT``, default "."), one subdirectory per dataset:

    <root>/<NAME>/train.csv
    <root>/<NAME>/test.csv
    <root>/<NAME>/manifest.json

SYN1 is generated in memory when its files are absent. Option precedence is
CLI flag > config file (``--config``) > registry defaults; the resolved
configuration and its digest are echoed so every run is reproducible.

Exit codes: 0 success, 1 reserved for accuracy-gate failures in CI
wrappers, 2 I/O or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import elm as elm_mod
from . import evaluation
from .dataset import (
    DatasetDescriptor,
    ParseError,
    RadioMap,
    SchemaError,
    UnknownDatasetError,
    load_csv,
    load_manifest,
    registry_lookup,
    registry_names,
    split_validation,
)
from .evaluation import config_digest, format_table, hit_rate, run_benchmark
from .featurizer import featurize, init_featurizer
from .pipeline import PipelineConfig, fit_pipeline, load_model, predict_pipeline, save_model
from .preprocess import apply_preprocess, fit_preprocess
from .synthetic import generate_synthetic

_DATA_ROOT_ENV = "ELMLOC_DATA_ROOT"


class CliError(Exception):
    """User-facing failure; message printed, exit code 2."""


def _data_root(args) -> Path:
    if args.data_root:
        return Path(args.data_root)
    return Path(os.environ.get(_DATA_ROOT_ENV, "."))


def _load_pair(name: str, root: Path) -> tuple[RadioMap, RadioMap]:
    ds_dir = root / name
    manifest_path = ds_dir / "manifest.json"
    if not manifest_path.exists():
        if name == "SYN1":
            return generate_synthetic()
        raise CliError(f"missing file: {manifest_path}")
    manifest = load_manifest(manifest_path)
    pair = []
    for split in ("train", "test"):
        path = ds_dir / f"{split}.csv"
        if not path.exists():
            raise CliError(f"missing file: {path}")
        pair.append(load_csv(path, manifest.schema, manifest.sentinel, name=f"{name}-{split}"))
    return pair[0], pair[1]


def _descriptor(name: str) -> DatasetDescriptor | None:
    try:
        return registry_lookup(name)
    except UnknownDatasetError:
        return None


def _read_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return cfg


def _pick(flag_value, file_config: dict, key: str, fallback):
    """CLI flag > config file > registry/default."""
    if flag_value is not None:
        return flag_value
    if key in file_config:
        return file_config[key]
    return fallback


def _resolve_run(args) -> dict:
    """Merge flags, config file, and registry into one echoed mapping."""
    cfg_file = _read_config_file(args.config)
    desc = _descriptor(args.dataset)
    L = _pick(args.L, cfg_file, "L", desc.L_default if desc else None)
    c = _pick(args.c, cfg_file, "c", desc.c_default if desc else None)
    if c is None:
        raise CliError(f"dataset {args.dataset!r} is unregistered; pass --c")
    if L is None:
        raise CliError(f"dataset {args.dataset!r} is unregistered; pass --L")
    resolved = {
        "dataset": args.dataset,
        "approach": _pick(args.approach, cfg_file, "approach", "cnn_elm"),
        "L": L if L == "auto" else int(L),
        "c": float(c),
        "seed": int(_pick(args.seed, cfg_file, "seed", 0)),
        "norm_mode": _pick(args.norm_mode, cfg_file, "norm_mode", "per_feature"),
        "kernel_size": int(_pick(args.kernel_size, cfg_file, "kernel_size", 3)),
        "n_filters": int(_pick(args.n_filters, cfg_file, "n_filters", 2)),
        "quantize": bool(_pick(args.quantize or None, cfg_file, "quantize", False)),
    }
    return resolved


def _echo(resolved: dict) -> None:
    digest = config_digest(resolved)
    print(f"config: {json.dumps(resolved, sort_keys=True)}")
    print(f"config_digest: {digest}")


def _pipeline_config(resolved: dict, L: int) -> PipelineConfig:
    return PipelineConfig(
        L=L,
        c=resolved["c"],
        seed=resolved["seed"],
        approach=resolved["approach"],
        norm_mode=resolved["norm_mode"],
        n_filters=resolved["n_filters"],
        kernel_size=resolved["kernel_size"],
        quantize=resolved["quantize"],
    )


def _sweep_features(train: RadioMap, resolved: dict):
    """Preprocessed (and maybe featurized) train/validation design matrices."""
    sweep_train, val = split_validation(train, fraction=0.1, seed=resolved["seed"])
    params = fit_preprocess(sweep_train, mode=resolved["norm_mode"])
    x_tr = apply_preprocess(sweep_train, params)
    x_val = apply_preprocess(val, params)
    if resolved["approach"] == "cnn_elm":
        spec = init_featurizer(
            resolved["seed"],
            train.n_aps,
            n_filters=resolved["n_filters"],
            kernel_size=resolved["kernel_size"],
        )
        x_tr = featurize(x_tr, spec)
        x_val = featurize(x_val, spec)
    return x_tr, sweep_train.label_pairs(), x_val, val.label_pairs()


def _run_sweep(train: RadioMap, resolved: dict, L_max: int, step: int) -> elm_mod.SweepResult:
    x_tr, p_tr, x_val, p_val = _sweep_features(train, resolved)
    return elm_mod.sweep_hidden(
        x_tr, p_tr, x_val, p_val, resolved["c"], L_max, step=step, seed=resolved["seed"]
    )


# ---------------------------------------------------------------------------
# Subcommands


def cmd_ingest(args) -> int:
    root = _data_root(args)
    train, test = _load_pair(args.dataset, root)
    desc = _descriptor(args.dataset)
    summary = {
        "dataset": args.dataset,
        "train_samples": train.n_samples,
        "test_samples": test.n_samples,
        "n_aps": train.n_aps,
        "buildings": int(train.building.max()) + 1 if train.has_building else 1,
        "floors": sorted(int(f) for f in np.unique(train.floor)),
        "classes": int(np.unique(train.label_pairs(), axis=0).shape[0]),
        "detected_fraction": round(float(np.mean(train.rss != 0.0)), 4),
    }
    if test.n_aps != train.n_aps:
        raise CliError(
            f"train has {train.n_aps} AP columns but test has {test.n_aps}"
        )
    if desc is not None:
        expected = (desc.train_size, desc.test_size, desc.n_aps)
        got = (train.n_samples, test.n_samples, train.n_aps)
        summary["matches_registry"] = got == expected
        if got != expected:
            print(
                f"warning: registry expects train/test/aps {expected}, files have {got}",
                file=sys.stderr,
            )
    print(json.dumps(summary, indent=2))
    return 0


def cmd_train(args) -> int:
    resolved = _resolve_run(args)
    root = _data_root(args)
    train, _ = _load_pair(args.dataset, root)
    if resolved["L"] == "auto":
        result = _run_sweep(train, resolved, args.L_max, args.step)
        grid = ", ".join(str(s) for s in result.sizes.tolist())
        print(f"sweep grid: {{{grid}}}")
        best_idx = int(np.nonzero(result.sizes == result.best_L)[0][0])
        print(f"selected L = {result.best_L} (validation floor hit "
              f"{result.floor_hits[best_idx]:.2f}%)")
        resolved["L"] = result.best_L
    _echo(resolved)
    config = _pipeline_config(resolved, resolved["L"])

    t0 = time.perf_counter()
    model = fit_pipeline(train, config, dataset=args.dataset)
    train_s = time.perf_counter() - t0
    pred = np.column_stack(predict_pipeline(train, model))
    truth = train.label_pairs()
    out_path = Path(args.out) if args.out else Path(f"{args.dataset}.model.json")
    save_model(model, out_path)
    print(f"train time: {train_s:.3f} s")
    if train.has_building:
        print(f"training building hit: {hit_rate(pred, truth, 'building'):.2f}%")
    print(f"training floor hit: {hit_rate(pred, truth, 'floor'):.2f}%")
    print(f"model written to {out_path}")
    return 0


def _read_queries(path: Path, model) -> tuple[RadioMap | None, np.ndarray | None]:
    """Query matrix plus truth labels when the file carries them."""
    manifest_path = path.parent / "manifest.json"
    if manifest_path.exists():
        manifest = load_manifest(manifest_path)
        if manifest.schema.n_aps != model.n_aps:
            raise CliError(
                f"manifest maps {manifest.schema.n_aps} AP columns, "
                f"model expects {model.n_aps}"
            )
        rmap = load_csv(path, manifest.schema, manifest.sentinel, name=path.stem)
        return rmap, rmap.label_pairs()
    # No manifest: the file must be exactly the AP columns, UJI-style sentinel.
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    if len(header) != model.n_aps:
        raise CliError(
            f"{path} has {len(header)} columns but the model expects {model.n_aps} "
            "AP columns; place a manifest.json next to the file to map columns"
        )
    rows = [line.split(",") for line in lines[1:] if line.strip()]
    try:
        data = np.asarray(rows, dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric cell ({exc})") from None
    if data.shape[1] != model.n_aps:
        raise ParseError(f"{path}: ragged rows")
    data[data == 100.0] = 0.0
    rmap = RadioMap(rss=data, floor=np.zeros(data.shape[0], dtype=np.int64))
    return rmap, None


def cmd_predict(args) -> int:
    model = load_model(args.model)
    queries_path = Path(args.queries)
    if not queries_path.exists():
        raise CliError(f"missing file: {queries_path}")
    out_path = Path(args.out) if args.out else queries_path.with_suffix(".predictions.csv")
    with open(queries_path) as fh:
        has_data = bool(fh.readline()) and bool(fh.readline().strip())
    if not has_data:
        out_path.write_text("building,floor\n")
        print(f"0 queries; wrote {out_path}")
        return 0
    rmap, truth = _read_queries(queries_path, model)
    if args.quantized and model.elm.quantized is None:
        raise CliError("model has no quantized weights (train with --quantize)")
    buildings, floors = predict_pipeline(rmap, model, quantized=args.quantized)
    with open(out_path, "w") as fh:
        fh.write("building,floor\n")
        for b, f in zip(buildings, floors):
            fh.write(f"{int(b)},{int(f)}\n")
    print(f"{len(floors)} predictions written to {out_path}")
    if truth is not None:
        pred = np.column_stack([buildings, floors])
        if rmap.has_building:
            print(f"building hit: {hit_rate(pred, truth, 'building'):.2f}%")
        print(f"floor hit: {hit_rate(pred, truth, 'floor'):.2f}%")
    return 0


def cmd_sweep(args) -> int:
    resolved = _resolve_run(args)
    root = _data_root(args)
    train, _ = _load_pair(args.dataset, root)
    _echo(resolved)
    result = _run_sweep(train, resolved, args.L_max, args.step)
    print(f"{'L':>6} {'floor_hit':>10} {'building_hit':>13}")
    for L, fh_, bh in zip(result.sizes, result.floor_hits, result.building_hits):
        marker = "  <- selected" if int(L) == result.best_L else ""
        print(f"{int(L):>6} {fh_:>9.2f}% {bh:>12.2f}%{marker}")
    print(f"selected L = {result.best_L}")
    return 0


def cmd_benchmark(args) -> int:
    root = _data_root(args)
    datasets = args.datasets.split(",")
    approaches = args.approaches.split(",")
    seeds = [int(s) for s in args.seeds.split(",")]
    out_dir = Path(args.out_dir)

    def loader(name):
        return _load_pair(name, root)

    rows, failures = run_benchmark(
        datasets,
        approaches,
        seeds,
        loader,
        end_to_end=args.end_to_end,
        out_dir=out_dir,
    )
    print(format_table(rows))
    for name, err in failures.items():
        print(f"FAILED {name}: {err}", file=sys.stderr)
    print(f"report written to {out_dir}/report.csv and {out_dir}/report.json")
    if len(failures) == len(datasets):
        raise CliError("every requested dataset failed to load")
    return 0


def cmd_report(args) -> int:
    rows, payload = evaluation.read_json(args.json)
    print(format_table(rows))
    print(f"config_digest: {payload.get('config_digest', '')}")
    failures = payload.get("failures") or {}
    for name, err in failures.items():
        print(f"FAILED {name}: {err}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help=f"one of {', '.join(registry_names())} or a user dataset")
    p.add_argument("--data-root", help=f"dataset root directory (default: ${_DATA_ROOT_ENV} or .)")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--approach", choices=["cnn_elm", "elm_only"])
    p.add_argument("--L", help="hidden neurons, or 'auto' to sweep")
    p.add_argument("--c", type=float, help="regularization term")
    p.add_argument("--seed", type=int)
    p.add_argument("--norm-mode", choices=["per_feature", "per_sample"])
    p.add_argument("--kernel-size", type=int)
    p.add_argument("--n-filters", type=int)
    p.add_argument("--quantize", action="store_true", help="attach int8 weights to the model")
    p.add_argument("--L-max", type=int, default=500, help="sweep upper bound for --L auto")
    p.add_argument("--step", type=int, default=5, help="sweep grid step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elmloc",
        description="Building/floor classification from Wi-Fi RSS fingerprints.",
    )
    parser.add_argument(
        "--error-json",
        action="store_true",
        help="on failure, also print a machine-readable error object to stdout",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and describe a dataset's files")
    p.add_argument("--dataset", required=True)
    p.add_argument("--data-root")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit a model and write it to JSON")
    _add_common_train_flags(p)
    p.add_argument("--out", help="model output path (default <dataset>.model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="classify query fingerprints with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True, help="CSV of query fingerprints")
    p.add_argument("--out", help="output CSV (default <queries>.predictions.csv)")
    p.add_argument("--quantized", action="store_true", help="use the int8 weight path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="hidden-size grid search on a validation split")
    _add_common_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("benchmark", help="run the dataset x approach x seed table")
    p.add_argument("--datasets", required=True, help="comma-separated registered names")
    p.add_argument("--approaches", default="knn,elm_only,cnn_elm")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--data-root")
    p.add_argument("--out-dir", default="reports")
    p.add_argument("--end-to-end", action="store_true",
                   help="include preprocessing fit in the timed training phase")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("report", help="render a benchmark JSON report as a table")
    p.add_argument("--json", required=True, help="path to report.json")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, OSError, ParseError, SchemaError, UnknownDatasetError, ValueError) as exc:
        if getattr(args, "error_json", False):
            print(json.dumps({"error": str(exc), "type": type(exc).__name__}))
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
