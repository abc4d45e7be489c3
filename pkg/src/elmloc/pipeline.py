"""End-to-end train/predict bundle.

``fit_pipeline`` runs the whole off-line phase — preprocessing fit, optional
fixed conv featurization, closed-form classifier fit — and returns a single
object that ``save_model``/``load_model`` round-trip through one JSON file.
The on-line side (``predict_pipeline``) therefore needs only that artifact
plus raw RSS rows: stored preprocessing state and filter weights travel with
the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import elm as elm_mod
from .dataset import RadioMap
from .featurizer import FeaturizerSpec, featurize, init_featurizer, spec_from_dict, spec_to_dict
from .preprocess import (
    DEFAULT_EXPONENT,
    PreprocessParams,
    apply_preprocess,
    fit_preprocess,
    params_from_dict,
    params_to_dict,
)

_FORMAT = "elmloc-model-v1"


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved training knobs for one run."""

    L: int
    c: float
    seed: int = 0
    approach: str = "cnn_elm"  # or "elm_only"
    exponent: float = DEFAULT_EXPONENT
    norm_mode: str = "per_feature"
    n_filters: int = 2
    kernel_size: int = 3
    pool_size: int = 2
    pool_stride: int = 2
    quantize: bool = False

    def __post_init__(self):
        if self.approach not in ("cnn_elm", "elm_only"):
            raise ValueError(f"approach must be cnn_elm or elm_only, got {self.approach!r}")


@dataclass(frozen=True)
class TrainedModel:
    """Everything the on-line phase needs, plus the config that produced it."""

    preprocess: PreprocessParams
    featurizer: FeaturizerSpec | None  # None for the no-conv variant
    elm: elm_mod.ElmModel
    config: PipelineConfig
    dataset: str = ""

    @property
    def n_aps(self) -> int:
        if self.featurizer is not None and self.featurizer.n_aps is not None:
            return self.featurizer.n_aps
        if self.preprocess.feature_norms is not None:
            return self.preprocess.feature_norms.shape[0]
        return self.elm.n_features


def fit_pipeline(train: RadioMap, config: PipelineConfig, dataset: str = "") -> TrainedModel:
    params = fit_preprocess(train, config.exponent, config.norm_mode)
    x = apply_preprocess(train, params)
    fspec = None
    if config.approach == "cnn_elm":
        fspec = init_featurizer(
            config.seed,
            train.n_aps,
            n_filters=config.n_filters,
            kernel_size=config.kernel_size,
            pool_size=config.pool_size,
            pool_stride=config.pool_stride,
        )
        x = featurize(x, fspec)
    model = elm_mod.train_elm(x, train.label_pairs(), config.L, config.c, config.seed)
    if config.quantize:
        model = elm_mod.quantize(model)
    return TrainedModel(
        preprocess=params,
        featurizer=fspec,
        elm=model,
        config=config,
        dataset=dataset or train.name,
    )


def predict_pipeline(
    data, model: TrainedModel, quantized: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """(buildings, floors) for raw RSS rows (matrix or RadioMap)."""
    rss = data.rss if isinstance(data, RadioMap) else np.asarray(data, dtype=np.float64)
    if rss.ndim != 2:
        raise ValueError(f"expected a 2-D RSS matrix, got shape {rss.shape}")
    if rss.shape[1] != model.n_aps:
        raise ValueError(f"model expects {model.n_aps} AP columns, input has {rss.shape[1]}")
    x = apply_preprocess(rss, model.preprocess)
    if model.featurizer is not None:
        x = featurize(x, model.featurizer)
    if quantized:
        return elm_mod.predict_quantized(x, model.elm)
    return elm_mod.predict(x, model.elm)


def _config_to_dict(config: PipelineConfig) -> dict:
    return {
        "L": config.L,
        "c": config.c,
        "seed": config.seed,
        "approach": config.approach,
        "exponent": config.exponent,
        "norm_mode": config.norm_mode,
        "n_filters": config.n_filters,
        "kernel_size": config.kernel_size,
        "pool_size": config.pool_size,
        "pool_stride": config.pool_stride,
        "quantize": config.quantize,
    }


def save_model(model: TrainedModel, path) -> None:
    doc = {
        "format": _FORMAT,
        "dataset": model.dataset,
        "config": _config_to_dict(model.config),
        "preprocess": params_to_dict(model.preprocess),
        "featurizer": None if model.featurizer is None else spec_to_dict(model.featurizer),
        "elm": elm_mod.model_to_dict(model.elm),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> TrainedModel:
    path = Path(path)
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not a valid model file: {exc}") from exc
    if doc.get("format") != _FORMAT:
        raise ValueError(f"{path}: unrecognized model format {doc.get('format')!r}")
    return TrainedModel(
        preprocess=params_from_dict(doc["preprocess"]),
        featurizer=None if doc["featurizer"] is None else spec_from_dict(doc["featurizer"]),
        elm=elm_mod.model_from_dict(doc["elm"]),
        config=PipelineConfig(**doc["config"]),
        dataset=doc.get("dataset", ""),
    )
