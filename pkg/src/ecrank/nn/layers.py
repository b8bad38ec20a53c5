"""Layers with explicit backward passes (float64 numpy).

Convolutional activations are channel-major, shape (C, N, L), so that each
kernel tap is a single (C_out, C_in) x (C_in, N*L) product.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeMismatch


def _uniform(rng, bound, shape):
    return rng.uniform(-bound, bound, size=shape)


# ---------------------------------------------------------------------------
# functional forms


def conv_out_len(L: int, stride: int) -> int:
    return -(-L // stride)


COL_BUDGET = 1 << 23  # float64 entries per im2col block


def _taps(xp, k, stride, Lout):
    return xp[:, :, k:k + stride * (Lout - 1) + 1:stride]


def _im2col(xp, KS, stride, Lout):
    """(C, n, Lp) -> (C*KS, n*Lout), row index c*KS + k."""
    C, n, _ = xp.shape
    win = np.lib.stride_tricks.sliding_window_view(xp, KS, axis=2)[:, :, ::stride][:, :, :Lout]
    return np.ascontiguousarray(win.transpose(0, 3, 1, 2)).reshape(C * KS, n * Lout)


def _chunks(N, per_sample):
    step = max(1, COL_BUDGET // max(per_sample, 1))
    return [(i, min(N, i + step)) for i in range(0, N, step)]


def _check_conv(x, W, stride):
    C_out, C_in, KS = W.shape
    if x.shape[0] != C_in:
        raise ShapeMismatch(f"conv1d expects {C_in} input channels, got {x.shape[0]}")
    if KS % 2 == 0 or stride not in (1, 2):
        raise ShapeMismatch("conv1d needs odd kernel size and stride 1 or 2")


def conv1d_forward(x, W, b, stride: int = 1):
    """Zero-padded cross-correlation. x: (C_in, N, L) or (C_in, L); W: (C_out, C_in, KS)."""
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, None, :]
    _check_conv(x, W, stride)
    C_out, C_in, KS = W.shape
    pad = (KS - 1) // 2
    _, N, L = x.shape
    Lout = conv_out_len(L, stride)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    W2 = W.reshape(C_out, C_in * KS)
    out = np.empty((C_out, N, Lout))
    for a, z in _chunks(N, C_in * KS * Lout):
        cols = _im2col(xp[:, a:z], KS, stride, Lout)
        out[:, a:z] = (W2 @ cols).reshape(C_out, z - a, Lout)
    out += b[:, None, None]
    return out[:, 0, :] if squeeze else out


def conv1d_backward(g, x, W, stride: int = 1):
    """Gradients (dx, dW, db) of conv1d_forward for upstream gradient g."""
    squeeze = x.ndim == 2
    if squeeze:
        x, g = x[:, None, :], g[:, None, :]
    _check_conv(x, W, stride)
    C_out, C_in, KS = W.shape
    pad = (KS - 1) // 2
    _, N, L = x.shape
    Lout = conv_out_len(L, stride)
    if g.shape != (C_out, N, Lout):
        raise ShapeMismatch(f"gradient shape {g.shape} does not match output {(C_out, N, Lout)}")
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    W2 = W.reshape(C_out, C_in * KS)
    dW2 = np.zeros((C_out, C_in * KS))
    dxp = np.zeros_like(xp)
    for a, z in _chunks(N, C_in * KS * Lout):
        n = z - a
        g2 = np.ascontiguousarray(g[:, a:z]).reshape(C_out, n * Lout)
        dW2 += g2 @ _im2col(xp[:, a:z], KS, stride, Lout).T
        dcols = (W2.T @ g2).reshape(C_in, KS, n, Lout)
        sub = dxp[:, a:z]
        for k in range(KS):
            _taps(sub, k, stride, Lout)[...] += dcols[:, k]
    db = g.sum(axis=(1, 2))
    dx = dxp[:, :, pad:pad + L]
    return (dx[:, 0, :] if squeeze else dx), dW2.reshape(W.shape), db


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_weighted(logits, labels, weights=None):
    """Class-weighted mean of -log softmax(logits)[label]; returns (loss, dlogits)."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    N, K = logits.shape
    w = np.ones(K) if weights is None else np.asarray(weights, dtype=np.float64)
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    nll = lse - z[np.arange(N), labels]
    ws = w[labels]
    total = ws.sum()
    loss = float((ws * nll).sum() / total)
    grad = softmax(logits)
    grad[np.arange(N), labels] -= 1
    grad *= (ws / total)[:, None]
    return loss, grad


# ---------------------------------------------------------------------------
# layer objects


class Layer:
    params: list
    grads: list
    buffers: list = []

    def forward(self, x, train: bool):
        raise NotImplementedError

    def backward(self, g):
        raise NotImplementedError

    def release(self):
        """Drop activations cached for backward."""
        for name in ("_x", "_mask", "_cache"):
            self.__dict__.pop(name, None)

    def spec(self) -> str:
        return type(self).__name__


class Conv1d(Layer):
    def __init__(self, c_in, c_out, ks, stride, rng):
        bound = 1 / math.sqrt(c_in * ks)
        self.W = _uniform(rng, bound, (c_out, c_in, ks))
        self.b = _uniform(rng, bound, (c_out,))
        self.stride = stride
        self.params = [self.W, self.b]
        self.grads = [np.zeros_like(self.W), np.zeros_like(self.b)]
        self.buffers = []

    def forward(self, x, train):
        self._x = x
        return conv1d_forward(x, self.W, self.b, self.stride)

    def backward(self, g):
        dx, dW, db = conv1d_backward(g, self._x, self.W, self.stride)
        self.grads[0][...] = dW
        self.grads[1][...] = db
        return dx

    def spec(self):
        c_out, c_in, ks = self.W.shape
        return f"Conv1d({c_in},{c_out},{ks},{self.stride})"


class ReLU(Layer):
    params, grads, buffers = [], [], []

    def forward(self, x, train):
        self._mask = x > 0
        return x * self._mask

    def backward(self, g):
        return g * self._mask


class BatchNorm1d(Layer):
    """Per-channel normalisation over every axis but the first (channels)."""

    def __init__(self, channels, eps=1e-5, momentum=0.1):
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.eps, self.momentum = eps, momentum
        self.params = [self.gamma, self.beta]
        self.grads = [np.zeros(channels), np.zeros(channels)]
        self.buffers = [self.running_mean, self.running_var]

    def _shape(self, x):
        return (-1,) + (1,) * (x.ndim - 1)

    def forward(self, x, train):
        axes = tuple(range(1, x.ndim))
        sh = self._shape(x)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = x.size // x.shape[0]
            self.running_mean *= 1 - self.momentum
            self.running_mean += self.momentum * mean
            self.running_var *= 1 - self.momentum
            self.running_var += self.momentum * var * m / max(m - 1, 1)
        else:
            mean, var = self.running_mean, self.running_var
        inv = 1 / np.sqrt(var + self.eps)
        xhat = x - mean.reshape(sh)
        xhat *= inv.reshape(sh)
        self._cache = (xhat, inv, axes, sh)
        out = self.gamma.reshape(sh) * xhat
        out += self.beta.reshape(sh)
        return out

    def backward(self, g):
        xhat, inv, axes, sh = self._cache
        m = g.size // g.shape[0]
        self.grads[0][...] = (g * xhat).sum(axis=axes)
        self.grads[1][...] = g.sum(axis=axes)
        gx = g * self.gamma.reshape(sh)
        s1 = gx.sum(axis=axes).reshape(sh)
        s2 = (gx * xhat).sum(axis=axes).reshape(sh)
        gx *= m
        gx -= s1
        gx -= xhat * s2
        gx *= inv.reshape(sh) / m
        return gx

    def spec(self):
        return f"BatchNorm1d({len(self.gamma)})"


class Dense(Layer):
    """y = x W^T + b with W of shape (out, in)."""

    def __init__(self, n_in, n_out, rng):
        bound = 1 / math.sqrt(n_in)
        self.W = _uniform(rng, bound, (n_out, n_in))
        self.b = _uniform(rng, bound, (n_out,))
        self.params = [self.W, self.b]
        self.grads = [np.zeros_like(self.W), np.zeros_like(self.b)]
        self.buffers = []

    def forward(self, x, train):
        if x.shape[1] != self.W.shape[1]:
            raise ShapeMismatch(f"dense expects {self.W.shape[1]} features, got {x.shape[1]}")
        self._x = x
        return x @ self.W.T + self.b

    def backward(self, g):
        self.grads[0][...] = g.T @ self._x
        self.grads[1][...] = g.sum(axis=0)
        return g @ self.W

    def spec(self):
        return f"Dense({self.W.shape[1]},{self.W.shape[0]})"


class Dropout(Layer):
    """Inverted dropout; identity in eval mode."""

    params, grads, buffers = [], [], []

    def __init__(self, rate, rng):
        if not 0 <= rate < 1:
            raise ValueError("dropout rate must lie in [0, 1)")
        self.rate = rate
        self.rng = rng

    def forward(self, x, train):
        if not train or self.rate == 0:
            self._mask = None
            return x
        self._mask = (self.rng.random(x.shape) >= self.rate) / (1 - self.rate)
        return x * self._mask

    def backward(self, g):
        return g if self._mask is None else g * self._mask

    def spec(self):
        return f"Dropout({self.rate})"


def dropout(x, rate, train, rng):
    return Dropout(rate, rng).forward(x, train)


def relu(x):
    return np.maximum(x, 0)


class ToChannelMajor(Layer):
    """(N, C, L) -> (C, N, L)."""

    params, grads, buffers = [], [], []

    def forward(self, x, train):
        return np.ascontiguousarray(x.transpose(1, 0, 2))

    def backward(self, g):
        return g.transpose(1, 0, 2)


class Collapse(Layer):
    """(C, N, 1) -> (N, C) once the sequence has length one."""

    params, grads, buffers = [], [], []

    def forward(self, x, train):
        if x.shape[2] != 1:
            raise ShapeMismatch(f"sequence length {x.shape[2]} != 1 before the output layer")
        return np.ascontiguousarray(x[:, :, 0].T)

    def backward(self, g):
        return g.T[:, :, None]


class Standardize(Layer):
    """Fixed affine rescaling (x - mean) / scale; statistics are set from training data."""

    params, grads = [], []

    def __init__(self, n):
        self.mean = np.zeros(n)
        self.scale = np.ones(n)
        self.buffers = [self.mean, self.scale]

    def fit(self, x):
        self.mean[...] = x.mean(axis=0)
        s = x.std(axis=0)
        self.scale[...] = np.where(s > 0, s, 1.0)

    def forward(self, x, train):
        return (x - self.mean) / self.scale

    def backward(self, g):
        return g / self.scale

    def spec(self):
        return f"Standardize({len(self.mean)})"
