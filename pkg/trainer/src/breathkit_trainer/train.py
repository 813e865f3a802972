"""Training loop: binary cross-entropy, Adam at 1e-4, reduce-on-plateau
scheduler, 50 epochs, best model selected by validation F1.

Determinism mode fixes all seeds and forces deterministic kernels; it is
mandatory for fixture export so reference outputs are reproducible.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
from torch import nn

from .bkw import write_bundle
from .data import SegmentDataset, rebalance, stratified_split
from .model import SkillClassifier, build_model
from .netspec import NetSpec


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class TrainConfig:
    lr: float = 1e-4
    epochs: int = 50
    batch_size: int = 32
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    seed: int = 0
    val_fraction: float = 0.2
    # stop as soon as validation F1 reaches this value (None trains all epochs)
    stop_f1: float | None = None
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainResult:
    model: SkillClassifier
    best_state: dict
    best_f1: float
    best_epoch: int
    log: list = field(default_factory=list)

    def load_best(self) -> SkillClassifier:
        self.model.load_state_dict(self.best_state)
        return self.model


def _binary_f1(labels: np.ndarray, preds: np.ndarray) -> float:
    tp = int(np.sum((labels == 1) & (preds == 1)))
    fp = int(np.sum((labels == 0) & (preds == 1)))
    fn = int(np.sum((labels == 1) & (preds == 0)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _evaluate(model: SkillClassifier, ds: SegmentDataset, batch_size: int):
    model.eval()
    losses, probs = [], []
    criterion = nn.BCEWithLogitsLoss()
    with torch.no_grad():
        for start in range(0, len(ds), batch_size):
            x = torch.as_tensor(ds.segments[start:start + batch_size], dtype=torch.float32)
            y = torch.as_tensor(ds.labels[start:start + batch_size], dtype=torch.float32)
            logits = model(x)
            losses.append(float(criterion(logits, y)) * len(y))
            probs.append(torch.sigmoid(logits).numpy())
    probs = np.concatenate(probs)
    preds = (probs >= 0.5).astype(np.int64)
    return sum(losses) / len(ds), _binary_f1(ds.labels, preds), probs


def train(ds: SegmentDataset, spec: NetSpec, cfg: TrainConfig) -> TrainResult:
    """Train one skill classifier; returns the model, best state, and log."""
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
    torch.manual_seed(cfg.seed)

    train_ds, val_ds = stratified_split(ds, cfg.val_fraction, cfg.seed)
    train_ds = rebalance(train_ds, cfg.seed)

    model = build_model(spec, cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, mode="min", factor=cfg.scheduler_factor,
        patience=cfg.scheduler_patience)
    criterion = nn.BCEWithLogitsLoss()
    shuffle_rng = np.random.default_rng(cfg.seed)

    best_f1, best_epoch = -1.0, -1
    best_state: dict = {}
    log = []
    for epoch in range(cfg.epochs):
        model.train()
        order = shuffle_rng.permutation(len(train_ds))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            x = torch.as_tensor(train_ds.segments[idx], dtype=torch.float32)
            y = torch.as_tensor(train_ds.labels[idx], dtype=torch.float32)
            optimizer.zero_grad()
            loss = criterion(model(x), y)
            if not torch.isfinite(loss):
                raise TrainingDiverged(epoch)
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss) * len(idx)
        epoch_loss /= len(train_ds)

        val_loss, val_f1, _ = _evaluate(model, val_ds, cfg.batch_size)
        scheduler.step(val_loss)
        lr_now = optimizer.param_groups[0]["lr"]
        log.append({"epoch": epoch, "train_loss": epoch_loss, "val_loss": val_loss,
                    "val_f1": val_f1, "lr": lr_now})
        if val_f1 > best_f1:
            best_f1, best_epoch = val_f1, epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
        if cfg.stop_f1 is not None and val_f1 >= cfg.stop_f1:
            break

    return TrainResult(model=model, best_state=best_state, best_f1=best_f1,
                       best_epoch=best_epoch, log=log)


def export_bundle(result: TrainResult, path) -> None:
    """Write the best-validation-F1 weights as a .bkw bundle (validated
    against the spec before the write completes)."""
    model = result.load_best()
    write_bundle(model.spec, model.export_tensors(), path)


def write_log(result: TrainResult, cfg: TrainConfig, path) -> None:
    doc = {"config": asdict(cfg), "best_f1": result.best_f1,
           "best_epoch": result.best_epoch, "epochs": result.log}
    with open(str(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
