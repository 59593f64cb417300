"""The two-layer LSTM regressor with dense head, parameters as named tensors.

Everything runs in float64 internally; archives snapshot to float32. The
sequence recurrence goes through the selected kernel backend; the one-step
path used by autoregressive forecasting is plain numpy, so forecasts do not
depend on which backend trained the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .features import STEP_DIM


@dataclass(frozen=True)
class TrainConfig:
    epochs_max: int = 500
    batch_size: int = 32
    learning_rate: float = 0.001
    dropout: float = 0.2
    early_stopping_patience: int = 10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    validation_split: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs_max", "batch_size", "learning_rate",
                     "early_stopping_patience", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.validation_split < 1.0:
            raise ValueError("validation_split must be in (0, 1)")
        if self.early_stopping_patience >= self.epochs_max:
            raise ValueError("patience must be below epochs_max")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class LstmModel:
    """lstm1 -> lstm2 -> dense1 -> dense2 -> linear head (one load value)."""

    def __init__(self, input_dim: int = STEP_DIM, hidden1: int = 128,
                 hidden2: int = 64, dense1: int = 32, dense2: int = 16,
                 dropout_rate: float = 0.2, seed: int = 0,
                 version: str | None = None):
        self.input_dim = input_dim
        self.hidden1 = hidden1
        self.hidden2 = hidden2
        self.dense1 = dense1
        self.dense2 = dense2
        self.dropout_rate = dropout_rate
        self.version = version or (
            f"lstm-{hidden1}x{hidden2}-d{dense1}x{dense2}-s{seed}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 31]))
        p = {
            "lstm1.wx": _glorot(rng, input_dim, 4 * hidden1),
            "lstm1.wh": _glorot(rng, hidden1, 4 * hidden1),
            "lstm1.b": np.zeros(4 * hidden1),
            "lstm2.wx": _glorot(rng, hidden1, 4 * hidden2),
            "lstm2.wh": _glorot(rng, hidden2, 4 * hidden2),
            "lstm2.b": np.zeros(4 * hidden2),
            "dense1.w": _glorot(rng, hidden2, dense1),
            "dense1.b": np.zeros(dense1),
            "dense2.w": _glorot(rng, dense1, dense2),
            "dense2.b": np.zeros(dense2),
            "head.w": _glorot(rng, dense2, 1),
            "head.b": np.zeros(1),
        }
        # forget-gate bias starts open so gradients flow through long windows
        p["lstm1.b"][hidden1:2 * hidden1] = 1.0
        p["lstm2.b"][hidden2:2 * hidden2] = 1.0
        self.params = p

    # -- helpers -----------------------------------------------------------
    def param_names(self) -> list[str]:
        return sorted(self.params)

    def check_finite(self) -> None:
        for name, arr in self.params.items():
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"non-finite parameter {name}")

    @staticmethod
    def _guard(arr: np.ndarray, layer: str) -> None:
        if np.all(np.isfinite(arr)):
            return
        if arr.ndim == 3:
            bad = ~np.isfinite(arr).all(axis=(0, 2))
            step = int(np.argmax(bad))
        else:
            step = arr.shape[1] - 1 if arr.ndim > 1 else 0
        raise FloatingPointError(
            f"non-finite activation in {layer} at step {step}")

    # -- forward -----------------------------------------------------------
    def forward(self, x: np.ndarray, train_mode: bool = False,
                rng: np.random.Generator | None = None
                ) -> tuple[np.ndarray, dict]:
        """x: (B, T, input_dim) -> predictions (B,), plus cached activations."""
        if x.ndim != 3 or x.shape[2] != self.input_dim:
            raise ValueError(f"expected (B, T, {self.input_dim}) input")
        if train_mode and self.dropout_rate > 0 and rng is None:
            raise ValueError("train_mode forward needs an rng for dropout")
        p = self.params
        b, t_len, _ = x.shape
        cache: dict = {"x": x, "train_mode": train_mode}

        zx1 = x.reshape(b * t_len, -1) @ p["lstm1.wx"] + p["lstm1.b"]
        h1_all, c1_all, gates1 = backend.lstm_layer_forward(
            np.ascontiguousarray(zx1.reshape(b, t_len, -1)), p["lstm1.wh"],
            np.zeros((b, self.hidden1)), np.zeros((b, self.hidden1)))
        seq1 = h1_all[:, 1:, :]
        self._guard(seq1, "lstm1")

        if train_mode and self.dropout_rate > 0:
            keep = 1.0 - self.dropout_rate
            mask1 = (rng.uniform(size=seq1.shape) < keep) / keep
            seq1 = seq1 * mask1
            cache["mask1"] = mask1

        zx2 = seq1.reshape(b * t_len, -1) @ p["lstm2.wx"] + p["lstm2.b"]
        h2_all, c2_all, gates2 = backend.lstm_layer_forward(
            np.ascontiguousarray(zx2.reshape(b, t_len, -1)), p["lstm2.wh"],
            np.zeros((b, self.hidden2)), np.zeros((b, self.hidden2)))
        self._guard(h2_all[:, 1:, :], "lstm2")
        last = h2_all[:, -1, :]

        if train_mode and self.dropout_rate > 0:
            keep = 1.0 - self.dropout_rate
            mask2 = (rng.uniform(size=last.shape) < keep) / keep
            last = last * mask2
            cache["mask2"] = mask2

        a1 = np.maximum(last @ p["dense1.w"] + p["dense1.b"], 0.0)
        self._guard(a1[:, None, :], "dense1")
        a2 = np.maximum(a1 @ p["dense2.w"] + p["dense2.b"], 0.0)
        self._guard(a2[:, None, :], "dense2")
        pred = (a2 @ p["head.w"] + p["head.b"])[:, 0]
        self._guard(pred[:, None], "head")

        cache.update(h1_all=h1_all, c1_all=c1_all, gates1=gates1, seq1=seq1,
                     h2_all=h2_all, c2_all=c2_all, gates2=gates2, last=last,
                     a1=a1, a2=a2)
        return pred, cache

    # -- backward ----------------------------------------------------------
    def backward(self, cache: dict, dpred: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(pred), shape (B,)."""
        p = self.params
        x = cache["x"]
        b, t_len, _ = x.shape
        grads: dict[str, np.ndarray] = {}

        a2, a1, last = cache["a2"], cache["a1"], cache["last"]
        dpred = dpred[:, None]
        grads["head.w"] = a2.T @ dpred
        grads["head.b"] = dpred.sum(axis=0)
        da2 = (dpred @ p["head.w"].T) * (a2 > 0)
        grads["dense2.w"] = a1.T @ da2
        grads["dense2.b"] = da2.sum(axis=0)
        da1 = (da2 @ p["dense2.w"].T) * (a1 > 0)
        grads["dense1.w"] = last.T @ da1
        grads["dense1.b"] = da1.sum(axis=0)
        dlast = da1 @ p["dense1.w"].T
        if "mask2" in cache:
            dlast = dlast * cache["mask2"]

        dh2 = np.zeros((b, t_len, self.hidden2))
        dh2[:, -1, :] = dlast
        dzx2, dwh2, _, _ = backend.lstm_layer_backward(
            dh2, p["lstm2.wh"], cache["h2_all"], cache["c2_all"],
            cache["gates2"])
        grads["lstm2.wh"] = dwh2
        dzx2_2d = dzx2.reshape(b * t_len, -1)
        grads["lstm2.wx"] = cache["seq1"].reshape(b * t_len, -1).T @ dzx2_2d
        grads["lstm2.b"] = dzx2_2d.sum(axis=0)

        dseq1 = (dzx2_2d @ p["lstm2.wx"].T).reshape(b, t_len, -1)
        if "mask1" in cache:
            dseq1 = dseq1 * cache["mask1"]
        dzx1, dwh1, _, _ = backend.lstm_layer_backward(
            np.ascontiguousarray(dseq1), p["lstm1.wh"], cache["h1_all"],
            cache["c1_all"], cache["gates1"])
        grads["lstm1.wh"] = dwh1
        dzx1_2d = dzx1.reshape(b * t_len, -1)
        grads["lstm1.wx"] = x.reshape(b * t_len, -1).T @ dzx1_2d
        grads["lstm1.b"] = dzx1_2d.sum(axis=0)
        return grads

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray,
                       train_mode: bool = True,
                       rng: np.random.Generator | None = None
                       ) -> tuple[float, dict[str, np.ndarray]]:
        pred, cache = self.forward(x, train_mode=train_mode, rng=rng)
        err = pred - y
        loss = float(np.mean(err * err))
        dpred = 2.0 * err / len(y)
        return loss, self.backward(cache, dpred)

    # -- one-step path for autoregressive decoding --------------------------
    def init_state(self) -> dict[str, np.ndarray]:
        return {"h1": np.zeros(self.hidden1), "c1": np.zeros(self.hidden1),
                "h2": np.zeros(self.hidden2), "c2": np.zeros(self.hidden2)}

    @staticmethod
    def _cell_step(x: np.ndarray, h: np.ndarray, c: np.ndarray,
                   wx: np.ndarray, wh: np.ndarray, bias: np.ndarray,
                   n: int) -> tuple[np.ndarray, np.ndarray]:
        z = x @ wx + h @ wh + bias
        gi = _sigmoid(z[:n])
        gf = _sigmoid(z[n:2 * n])
        gg = np.tanh(z[2 * n:3 * n])
        go = _sigmoid(z[3 * n:])
        c_new = gf * c + gi * gg
        return go * np.tanh(c_new), c_new

    def step(self, x_t: np.ndarray, state: dict[str, np.ndarray]) -> float:
        """Advance one timestep in place and return the head output."""
        p = self.params
        state["h1"], state["c1"] = self._cell_step(
            x_t, state["h1"], state["c1"], p["lstm1.wx"], p["lstm1.wh"],
            p["lstm1.b"], self.hidden1)
        state["h2"], state["c2"] = self._cell_step(
            state["h1"], state["h2"], state["c2"], p["lstm2.wx"],
            p["lstm2.wh"], p["lstm2.b"], self.hidden2)
        a1 = np.maximum(state["h2"] @ p["dense1.w"] + p["dense1.b"], 0.0)
        a2 = np.maximum(a1 @ p["dense2.w"] + p["dense2.b"], 0.0)
        return float(a2 @ p["head.w"][:, 0] + p["head.b"][0])

    # -- persistence --------------------------------------------------------
    def state_meta(self) -> dict:
        return {"input_dim": self.input_dim, "hidden1": self.hidden1,
                "hidden2": self.hidden2, "dense1": self.dense1,
                "dense2": self.dense2, "dropout_rate": self.dropout_rate,
                "version": self.version}

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray],
                     meta: dict) -> "LstmModel":
        model = cls(input_dim=int(meta["input_dim"]),
                    hidden1=int(meta["hidden1"]), hidden2=int(meta["hidden2"]),
                    dense1=int(meta["dense1"]), dense2=int(meta["dense2"]),
                    dropout_rate=float(meta.get("dropout_rate", 0.2)),
                    version=str(meta.get("version", "restored")))
        for name in model.params:
            if name not in tensors:
                raise ValueError(f"archive missing tensor {name}")
            if tensors[name].shape != model.params[name].shape:
                raise ValueError(
                    f"tensor {name} has shape {tensors[name].shape}, "
                    f"expected {model.params[name].shape}")
            model.params[name] = tensors[name].astype(np.float64)
        return model
