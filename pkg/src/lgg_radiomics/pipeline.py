"""End-to-end pipeline: split -> standardize -> PCA -> SMOTE -> MLP, plus model persistence.

Randomness comes from two seeds only: ``split.seed`` (partitioning and
SMOTE) and ``train.seed`` (weight init and batch shuffling).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .metrics import confusion_matrix, metrics
from .mlp import LAYER_SIZES, MlpModel, TrainConfig, init_mlp, predict_proba, train
from .roi import BinSpec
from .tabular import (
    FeatureTable,
    PcaModel,
    ScalerModel,
    SmoteConfig,
    apply_pca,
    apply_scaler,
    fit_pca,
    fit_scaler,
    smote,
    stratified_split,
)

logger = logging.getLogger(__name__)

MODEL_FORMAT = "lgg-radiomics-model/1"
REPORT_FORMAT = "lgg-radiomics-report/1"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it for diagnostics."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class ModelVersionMismatch(ValueError):
    pass


class FeatureNameMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    bin_spec: BinSpec = field(default_factory=BinSpec)
    pca_k: int = 8
    smote_k: int = 5
    test_fraction: float = 0.25
    split_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    threshold: float = 0.5

    def __post_init__(self):
        if self.pca_k < 1:
            raise ConfigError("pca_k must be >= 1")
        if self.smote_k < 1:
            raise ConfigError("smote.k_neighbors must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ConfigError("split.test_fraction must be in (0, 1)")
        if not 0 <= self.threshold <= 1:
            raise ConfigError("threshold must be in [0, 1]")

    @property
    def smote_config(self) -> SmoteConfig:
        return SmoteConfig(self.smote_k, self.split_seed)

    def to_dict(self) -> dict:
        return {
            "bin": self.bin_spec.to_dict(),
            "pca_k": self.pca_k,
            "smote": {"k_neighbors": self.smote_k},
            "split": {"test_fraction": self.test_fraction, "seed": self.split_seed},
            "train": self.train.to_dict(),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {"bin", "pca_k", "smote", "split", "train", "threshold"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        split = d.get("split", {})
        try:
            return cls(
                bin_spec=BinSpec.from_dict(d.get("bin", {})),
                pca_k=int(d.get("pca_k", 8)),
                smote_k=int(d.get("smote", {}).get("k_neighbors", 5)),
                test_fraction=float(split.get("test_fraction", 0.25)),
                split_seed=int(split.get("seed", 0)),
                train=TrainConfig(**d.get("train", {})),
                threshold=float(d.get("threshold", 0.5)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        if path is None:
            return cls()
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class PipelineModel:
    feature_names: tuple[str, ...]
    scaler: ScalerModel
    pca: PcaModel
    mlp: MlpModel
    config: PipelineConfig

    def transform(self, table: FeatureTable) -> np.ndarray:
        """Scaler then PCA with the stored (training) statistics."""
        table = self.align(table)
        return apply_pca(self.pca, apply_scaler(self.scaler, table.X))

    def align(self, table: FeatureTable) -> FeatureTable:
        """Match columns by name; the name sets must be identical."""
        have, want = set(table.names), set(self.feature_names)
        if have != want:
            missing = sorted(want - have)[:5]
            extra = sorted(have - want)[:5]
            raise FeatureNameMismatch(f"feature columns differ from the model schema "
                                      f"(missing {missing}, unexpected {extra})")
        return table.select(self.feature_names)

    def predict_proba(self, table: FeatureTable) -> np.ndarray:
        return predict_proba(self.mlp, self.transform(table))

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT,
            "package_version": __version__,
            "feature_names": list(self.feature_names),
            "scaler": self.scaler.to_dict(),
            "pca": self.pca.to_dict(),
            "mlp": self.mlp.to_dict(),
            "config": self.config.to_dict(),
            "seeds": {"split": self.config.split_seed, "train": self.config.train.seed},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineModel":
        version = d.get("format_version")
        if version != MODEL_FORMAT:
            raise ModelVersionMismatch(f"model format {version!r}, expected {MODEL_FORMAT!r}")
        return cls(
            tuple(d["feature_names"]),
            ScalerModel.from_dict(d["scaler"]),
            PcaModel.from_dict(d["pca"]),
            MlpModel.from_dict(d["mlp"]),
            PipelineConfig.from_dict(d["config"]),
        )

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    @classmethod
    def load(cls, path) -> "PipelineModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def timestamp() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def evaluate_table(model: PipelineModel, table: FeatureTable) -> dict:
    """Predictions, confusion matrix and rates for *table*; nothing is refitted."""
    proba = model.predict_proba(table)
    pred = (proba >= model.config.threshold).astype(np.int64)
    cm = confusion_matrix(pred, table.y)
    return {
        "n_cases": len(table),
        "confusion": cm.to_dict(),
        "rates": metrics(cm).to_dict(),
        "predictions": [
            {"case_id": cid, "probability": float(p), "predicted": int(yh), "actual": int(y)}
            for cid, p, yh, y in zip(table.case_ids, proba, pred, table.y)
        ],
    }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        raise StageError(name, str(exc)) from exc


def fit_pipeline(table: FeatureTable, config: PipelineConfig = PipelineConfig()):
    """Fit every stage on the training partition only; returns (model, report)."""
    if min(table.class_counts().values()) < 2:
        raise StageError("split", f"need at least 2 cases per class, got {table.class_counts()}")
    train_t, test_t = _stage("split", stratified_split, table, config.test_fraction, config.split_seed)

    scaler = _stage("scale", fit_scaler, train_t.X)
    train_scaled = apply_scaler(scaler, train_t.X)
    pca = _stage("pca", fit_pca, train_scaled, config.pca_k)
    train_pc = train_t.with_matrix(apply_pca(pca, train_scaled), [f"PC{i + 1}" for i in range(pca.k)])

    balanced = _stage("smote", smote, train_pc, config.smote_config)

    if pca.k != LAYER_SIZES[0]:
        sizes = (pca.k,) + LAYER_SIZES[1:]
    else:
        sizes = LAYER_SIZES
    mlp0 = init_mlp(config.train.seed, sizes)
    mlp, history = _stage("train", train, mlp0, balanced.table.X, balanced.table.y, config.train)

    model = PipelineModel(tuple(table.names), scaler, pca, mlp, config)
    ratios = pca.explained_variance_ratio
    report = {
        "format_version": REPORT_FORMAT,
        "generated_at": timestamp(),
        "command": "train",
        "input": {"n_cases": len(table), "n_features": len(table.names),
                  "class_counts": _counts(table)},
        "split": {
            "test_fraction": config.test_fraction,
            "train_cases": len(train_t),
            "test_cases": len(test_t),
            "train_class_counts": _counts(train_t),
            "test_class_counts": _counts(test_t),
            "test_case_ids": list(test_t.case_ids),
        },
        "pca": {
            "k": pca.k,
            "explained_variance_ratio": ratios.tolist(),
            "percent": [float(100 * r) for r in ratios],
            "total_percent": float(100 * ratios.sum()),
        },
        "smote": {
            "minority_class": balanced.minority_class,
            "synthetic_rows": balanced.n_synthetic,
            "class_counts_before": _counts(train_pc),
            "class_counts_after": _counts(balanced.table),
            "rows": len(balanced.table),
            "columns": len(balanced.table.names),
        },
        "history": {"epochs": config.train.epochs, **history.to_dict()},
        "metrics": {
            "test": _stage("evaluate", evaluate_table, model, test_t),
            "train": _stage("evaluate", evaluate_table, model, train_t),
            "all": _stage("evaluate", evaluate_table, model, table),
        },
        "final_training_accuracy": float(np.mean(
            (predict_proba(mlp, balanced.table.X) >= config.threshold) == (balanced.table.y == 1))),
    }
    return model, report


def _counts(table: FeatureTable) -> dict[str, int]:
    return {str(k): v for k, v in table.class_counts().items()}
