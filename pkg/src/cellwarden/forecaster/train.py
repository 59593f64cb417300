"""Adam training loop with early stopping and best-checkpoint restore."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import Dataset
from .model import LstmModel, TrainConfig

EVAL_CHUNK = 512


@dataclass
class TrainHistory:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = 0          # 1-based
    stopped_reason: str = ""
    residual_sigma: float = 0.0

    def __len__(self) -> int:
        return len(self.train_mse)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_mse", "val_mse"])
            for i, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), 1):
                writer.writerow([i, repr(tr), repr(va)])


def predict_dataset(model: LstmModel, dataset: Dataset,
                    indices: np.ndarray) -> np.ndarray:
    """Inference over many samples, chunked to bound memory."""
    out = np.empty(len(indices))
    for lo in range(0, len(indices), EVAL_CHUNK):
        chunk = indices[lo:lo + EVAL_CHUNK]
        x, _ = dataset.batch(chunk)
        pred, _ = model.forward(x, train_mode=False)
        out[lo:lo + len(chunk)] = pred
    return out


def _mse_over(model: LstmModel, dataset: Dataset, indices: np.ndarray) -> float:
    err = predict_dataset(model, dataset, indices) - dataset.targets(indices)
    return float(np.mean(err * err))


def train(model: LstmModel, dataset: Dataset, cfg: TrainConfig,
          quiet: bool = True) -> TrainHistory:
    """Minimize MSE; stop when validation stalls; restore the best epoch."""
    train_idx = dataset.train_indices()
    val_idx = dataset.val_indices()
    if len(train_idx) == 0 or len(val_idx) == 0:
        raise ValueError("dataset must have nonempty train and validation splits")

    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 7]))
    names = model.param_names()
    m = {n: np.zeros_like(model.params[n]) for n in names}
    v = {n: np.zeros_like(model.params[n]) for n in names}
    adam_t = 0

    history = TrainHistory()
    best_val = np.inf
    best_params: dict[str, np.ndarray] = {}
    stale = 0

    for epoch in range(1, cfg.epochs_max + 1):
        order = rng.permutation(train_idx)
        epoch_loss = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            bidx = order[lo:lo + cfg.batch_size]
            x, y = dataset.batch(bidx)
            loss, grads = model.loss_and_grads(x, y, train_mode=True, rng=rng)
            if not np.isfinite(loss):
                raise RuntimeError(f"training diverged at epoch {epoch}")
            epoch_loss += loss * len(bidx)
            adam_t += 1
            lr_t = cfg.learning_rate * (
                np.sqrt(1.0 - cfg.beta2 ** adam_t) / (1.0 - cfg.beta1 ** adam_t))
            for n in names:
                g = grads[n]
                m[n] = cfg.beta1 * m[n] + (1.0 - cfg.beta1) * g
                v[n] = cfg.beta2 * v[n] + (1.0 - cfg.beta2) * (g * g)
                model.params[n] -= lr_t * m[n] / (np.sqrt(v[n]) + cfg.eps)
        model.check_finite()

        val = _mse_over(model, dataset, val_idx)
        if not np.isfinite(val):
            raise RuntimeError(f"training diverged at epoch {epoch}")
        history.train_mse.append(epoch_loss / len(order))
        history.val_mse.append(val)
        if not quiet:
            print(f"epoch {epoch}: train_mse={history.train_mse[-1]:.6g} "
                  f"val_mse={val:.6g}")

        if val < best_val:
            best_val = val
            history.best_epoch = epoch
            best_params = {n: model.params[n].copy() for n in names}
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stopping_patience:
                history.stopped_reason = "early_stopping"
                break
    else:
        history.stopped_reason = "epochs_max"

    model.params = best_params
    residuals = predict_dataset(model, dataset, val_idx) - dataset.targets(val_idx)
    history.residual_sigma = float(np.std(residuals))
    return history
