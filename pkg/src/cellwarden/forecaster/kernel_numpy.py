"""Pure-numpy LSTM sequence kernels (reference backend).

Gate order along the last axis is [input, forget, candidate, output]. The
input projection (x @ Wx + b) happens outside the kernel as a single BLAS
call; the kernel runs the recurrence, caching what backward needs. The
compiled backend implements the same contract and must agree to near
machine precision.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def lstm_layer_forward(zx: np.ndarray, wh: np.ndarray, h0: np.ndarray,
                       c0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run one layer over a full sequence.

    zx: (B, T, 4H) pre-projected inputs; wh: (H, 4H); h0, c0: (B, H).
    Returns (h_all, c_all, gates) where h_all/c_all are (B, T+1, H) with the
    initial state at index 0 and gates is (B, T, 4H) post-nonlinearity.
    """
    b, t_len, h4 = zx.shape
    h = h4 // 4
    h_all = np.empty((b, t_len + 1, h))
    c_all = np.empty((b, t_len + 1, h))
    gates = np.empty((b, t_len, h4))
    h_all[:, 0] = h0
    c_all[:, 0] = c0
    for t in range(t_len):
        z = zx[:, t, :] + h_all[:, t, :] @ wh
        gi = _sigmoid(z[:, :h])
        gf = _sigmoid(z[:, h:2 * h])
        gg = np.tanh(z[:, 2 * h:3 * h])
        go = _sigmoid(z[:, 3 * h:])
        c = gf * c_all[:, t, :] + gi * gg
        gates[:, t, :h] = gi
        gates[:, t, h:2 * h] = gf
        gates[:, t, 2 * h:3 * h] = gg
        gates[:, t, 3 * h:] = go
        c_all[:, t + 1] = c
        h_all[:, t + 1] = go * np.tanh(c)
    return h_all, c_all, gates


def lstm_layer_backward(dh_out: np.ndarray, wh: np.ndarray, h_all: np.ndarray,
                        c_all: np.ndarray, gates: np.ndarray
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Backpropagate through one layer's recurrence.

    dh_out: (B, T, H) gradient w.r.t. each emitted hidden state.
    Returns (dzx, dwh, dh0, dc0).
    """
    b, t_len, h = dh_out.shape
    dzx = np.empty((b, t_len, 4 * h))
    dwh = np.zeros_like(wh)
    dh = np.zeros((b, h))
    dc = np.zeros((b, h))
    for t in range(t_len - 1, -1, -1):
        gi = gates[:, t, :h]
        gf = gates[:, t, h:2 * h]
        gg = gates[:, t, 2 * h:3 * h]
        go = gates[:, t, 3 * h:]
        tc = np.tanh(c_all[:, t + 1])
        dh_t = dh + dh_out[:, t, :]
        dct = dc + dh_t * go * (1.0 - tc * tc)
        dzx[:, t, :h] = dct * gg * gi * (1.0 - gi)
        dzx[:, t, h:2 * h] = dct * c_all[:, t] * gf * (1.0 - gf)
        dzx[:, t, 2 * h:3 * h] = dct * gi * (1.0 - gg * gg)
        dzx[:, t, 3 * h:] = dh_t * tc * go * (1.0 - go)
        dc = dct * gf
        dz = dzx[:, t, :]
        dh = dz @ wh.T
        dwh += h_all[:, t, :].T @ dz
    return dzx, dwh, dh, dc
