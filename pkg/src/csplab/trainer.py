"""NMSE objective, the training loop and evaluation reports."""
from __future__ import annotations

import copy
import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from csplab.chansim.dataset import Dataset
from csplab.model.checkpoint import round_to_f32
from csplab.model.network import CspModel
from csplab.numcore import Adam, NumericFailure, RngStream, Tensor, no_grad
from csplab.pipeline import denormalize, split_target

log = logging.getLogger(__name__)

VELOCITY_EDGES = tuple(range(10, 101, 10))


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0
    shuffle: bool = True
    clip_norm: float | None = None  # e.g. 10.0 to rescue diverging runs

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.lr < 0:
            raise ValueError("learning rate must be nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    train_nmse: float
    val_nmse: float


@dataclass
class TrainResult:
    model: CspModel  # parameters of the best validation epoch
    history: list[EpochRecord]
    best_epoch: int
    best_val_nmse: float


class TrainingAborted(NumericFailure):
    """Loss became non-finite; carries the last good model and the history so far."""

    def __init__(self, message: str, model: CspModel, history: list[EpochRecord]):
        super().__init__(message)
        self.model = model
        self.history = history


def nmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Error energy over truth energy for one K x L grid."""
    energy = np.sum(np.abs(truth) ** 2)
    if energy == 0:
        raise ValueError("truth grid has zero energy")
    return float(np.sum(np.abs(pred - truth) ** 2) / energy)


def per_sample_nmse(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Vectorised :func:`nmse` over a leading sample axis."""
    energy = np.sum(np.abs(truth) ** 2, axis=(-2, -1))
    if np.any(energy == 0):
        raise ValueError("a truth grid has zero energy")
    return np.sum(np.abs(pred - truth) ** 2, axis=(-2, -1)) / energy


def nmse_loss(x_hat: Tensor, norm_f, dl: np.ndarray) -> Tensor:
    """Mean per-sample NMSE of a normalised (B, 2K, L) prediction against complex (B, K, L) truth."""
    truth = split_target(dl)
    pred = denormalize(x_hat, norm_f, 2)
    err = ((pred - truth) ** 2).sum(axis=(1, 2))
    energy = np.sum(truth**2, axis=(1, 2))
    return (err / energy).mean()


def persistence_baseline(ul_history: np.ndarray, horizon: int) -> np.ndarray:
    """Repeat the last history slot ``horizon`` times; works on (K, P) or (B, K, P)."""
    last = np.asarray(ul_history)[..., -1:]
    return np.repeat(last, horizon, axis=-1)


def _clip(params: dict[str, Tensor], max_norm: float) -> None:
    total = np.sqrt(sum(float(np.sum(p.grad**2)) for p in params.values() if p.grad is not None))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad *= scale


def _batches(n: int, size: int, order: np.ndarray):
    for start in range(0, n, size):
        yield order[start:start + size]


def dataset_nmse(model: CspModel, ds: Dataset, batch_size: int = 128) -> np.ndarray:
    """Per-sample NMSE of ``model`` on ``ds``, in dataset order."""
    out = np.empty(len(ds))
    for start in range(0, len(ds), batch_size):
        sl = slice(start, start + batch_size)
        out[sl] = per_sample_nmse(model.predict(ds.ul[sl]), ds.dl[sl])
    return out


def train(model: CspModel, train_set: Dataset, val_set: Dataset, cfg: TrainConfig) -> TrainResult:
    """Minimise mean per-sample NMSE with Adam.

    Validation runs after every epoch on the parameters rounded to float32,
    i.e. on exactly what a saved checkpoint holds. The returned model carries
    the full-precision parameters of the best validation epoch; ties go to
    the earlier epoch.
    """
    mc = model.config
    for ds, name in ((train_set, "train"), (val_set, "validation")):
        if (ds.K, ds.P, ds.L) != (mc.K, mc.P, mc.L):
            raise ValueError(f"{name} set shape (K={ds.K}, P={ds.P}, L={ds.L}) does not match the model")
    trainable = model.trainable()
    frozen = frozenset(set(model.params) - set(trainable))
    opt = Adam(model.params, cfg.lr, cfg.beta1, cfg.beta2, frozen=frozen)
    history: list[EpochRecord] = []
    best = (np.inf, 0, copy.deepcopy(model.params))
    n = len(train_set)
    for epoch in range(1, cfg.epochs + 1):
        order = RngStream(cfg.seed, "shuffle", epoch).permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for idx in _batches(n, cfg.batch_size, order):
            opt.zero_grad()
            x_hat, batch = model.forward(train_set.ul[idx])
            loss = nmse_loss(x_hat, batch.norm_f, train_set.dl[idx])
            if not np.isfinite(loss.data):
                model.params = best[2]
                raise TrainingAborted(f"non-finite loss in epoch {epoch}", model, history)
            loss.backward()
            if cfg.clip_norm is not None:
                _clip(trainable, cfg.clip_norm)
            opt.step()
            total += float(loss.data) * len(idx)
        val = float(np.mean(dataset_nmse(round_to_f32(model), val_set)))
        history.append(EpochRecord(epoch, total / n, val))
        log.info("epoch %d train %.5f val %.5f", epoch, total / n, val)
        if val < best[0]:
            best = (val, epoch, copy.deepcopy(model.params))
    opt.zero_grad()
    best_model = CspModel(model.config, best[2])
    return TrainResult(best_model, history, best[1], best[0])


def write_history_csv(history: Sequence[EpochRecord], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_nmse", "val_nmse"])
        for r in history:
            w.writerow([r.epoch, repr(r.train_nmse), repr(r.val_nmse)])


@dataclass
class EvalReport:
    overall_nmse: float
    per_velocity: dict[str, float | None]
    per_horizon: dict[int, float]
    sample_count: int
    per_sample: np.ndarray = field(repr=False, default=None)

    def to_json(self) -> str:
        d = {k: v for k, v in asdict(self).items() if k != "per_sample"}
        d["per_horizon"] = {str(k): v for k, v in self.per_horizon.items()}
        return json.dumps(d, indent=2, sort_keys=True)


def velocity_bins(velocities: np.ndarray, edges: Sequence[float] = VELOCITY_EDGES) -> tuple[np.ndarray, list[str]]:
    """Bin index per sample; the last bin is closed on the right."""
    edges = np.asarray(edges, dtype=np.float64)
    idx = np.clip(np.searchsorted(edges, velocities, side="right") - 1, 0, len(edges) - 2)
    labels = [f"{edges[i]:g}-{edges[i + 1]:g}" for i in range(len(edges) - 1)]
    return idx, labels


def report_from_predictions(pred: np.ndarray, truth: np.ndarray, velocities: np.ndarray,
                            edges: Sequence[float] = VELOCITY_EDGES) -> EvalReport:
    if len(truth) == 0:
        raise ValueError("cannot evaluate an empty set")
    scores = per_sample_nmse(pred, truth)
    idx, labels = velocity_bins(velocities, edges)
    per_velocity: dict[str, Any] = {}
    for b, label in enumerate(labels):
        sel = idx == b
        per_velocity[label] = float(scores[sel].mean()) if sel.any() else None
    horizon = {}
    for l in range(truth.shape[-1]):
        err = np.sum(np.abs(pred[..., l] - truth[..., l]) ** 2, axis=-1)
        horizon[l + 1] = float(np.mean(err / np.sum(np.abs(truth[..., l]) ** 2, axis=-1)))
    return EvalReport(float(scores.mean()), per_velocity, horizon, len(truth), scores)


def evaluate(model: CspModel, test_set: Dataset, edges: Sequence[float] = VELOCITY_EDGES,
             batch_size: int = 128) -> EvalReport:
    if len(test_set) == 0:
        raise ValueError("cannot evaluate an empty set")
    with no_grad():
        pred = np.concatenate([model.predict(test_set.ul[s:s + batch_size])
                               for s in range(0, len(test_set), batch_size)])
    return report_from_predictions(pred, test_set.dl, test_set.velocity, edges)


def evaluate_persistence(test_set: Dataset, edges: Sequence[float] = VELOCITY_EDGES) -> EvalReport:
    pred = persistence_baseline(test_set.ul, test_set.L)
    return report_from_predictions(pred, test_set.dl, test_set.velocity, edges)
