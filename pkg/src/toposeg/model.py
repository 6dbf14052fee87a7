"""Two-layer convolutional segmenter with hand-written backward pass.

conv 5x5 (1 -> 8 channels, mirror same-padding) -> ReLU -> 1x1 conv (8 -> 1)
-> logistic. Parameters live in a plain dict of float64 arrays.
"""

import struct
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

N_FILTERS = 8
KERNEL = 5
PARAM_NAMES = ("w1", "b1", "w2", "b2")

_MAGIC = b"TSEG"
_VERSION = 1


def init_params(rng, n_filters=N_FILTERS, kernel=KERNEL, scale=0.1):
    """Uniform init in [-scale, scale] drawn in PARAM_NAMES order."""
    shapes = param_shapes(n_filters, kernel)
    return {name: rng.uniform(-scale, scale, size=shapes[name]) for name in PARAM_NAMES}


def param_shapes(n_filters=N_FILTERS, kernel=KERNEL):
    return {"w1": (n_filters, kernel, kernel), "b1": (n_filters,), "w2": (n_filters,), "b2": (1,)}


def zero_params(n_filters=N_FILTERS, kernel=KERNEL):
    return {name: np.zeros(shape) for name, shape in param_shapes(n_filters, kernel).items()}


def _patches(img, kernel):
    r = kernel // 2
    padded = np.pad(img, r, mode="symmetric")
    h, w = img.shape
    return sliding_window_view(padded, (kernel, kernel)).reshape(h * w, kernel * kernel)


def forward(params, img, cache=False):
    """Likelihood map of ``img``; with ``cache`` also return intermediates."""
    img = np.asarray(img, dtype=np.float64)
    w1 = params["w1"]
    nf, k, _ = w1.shape
    cols = _patches(img, k)
    z1 = cols @ w1.reshape(nf, k * k).T + params["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ params["w2"] + params["b2"][0]
    f = expit(z2).reshape(img.shape)
    if cache:
        return f, (cols, z1, a1)
    return f


def backward(params, img, grad_f, cache=None):
    """Gradients of ``sum(grad_f * forward(img))`` for every parameter."""
    img = np.asarray(img, dtype=np.float64)
    grad_f = np.asarray(grad_f, dtype=np.float64)
    if grad_f.shape != img.shape:
        raise ValueError(f"gradient shape {grad_f.shape} does not match image {img.shape}")
    if cache is None:
        f, cache = forward(params, img, cache=True)
    else:
        f = None
    cols, z1, a1 = cache
    if f is None:
        f = expit(a1 @ params["w2"] + params["b2"][0]).reshape(img.shape)
    nf, k, _ = params["w1"].shape
    dz2 = (grad_f * f * (1.0 - f)).ravel()
    dz1 = np.outer(dz2, params["w2"]) * (z1 > 0.0)
    return {
        "w1": (dz1.T @ cols).reshape(nf, k, k),
        "b1": dz1.sum(axis=0),
        "w2": a1.T @ dz2,
        "b2": np.array([dz2.sum()]),
    }


def flatten(params):
    return np.concatenate([params[name].ravel() for name in PARAM_NAMES])


def unflatten(vector, n_filters=N_FILTERS, kernel=KERNEL):
    shapes = param_shapes(n_filters, kernel)
    out, pos = {}, 0
    for name in PARAM_NAMES:
        size = int(np.prod(shapes[name]))
        out[name] = np.array(vector[pos : pos + size], dtype=np.float64).reshape(shapes[name])
        pos += size
    if pos != len(vector):
        raise ValueError("parameter vector has the wrong length")
    return out


def save_checkpoint(params, path):
    """16-byte header (magic, version, n_filters, kernel) + little-endian float64s."""
    nf, k, _ = params["w1"].shape
    header = _MAGIC + struct.pack("<III", _VERSION, nf, k)
    Path(path).write_bytes(header + flatten(params).astype("<f8").tobytes())


def load_checkpoint(path):
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != _MAGIC:
        raise ValueError(f"{path}: not a segmenter checkpoint")
    version, nf, k = struct.unpack("<III", data[4:16])
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    return unflatten(np.frombuffer(data[16:], dtype="<f8"), nf, k)


class Adam:
    """Adam with bias correction over a dict of parameter arrays."""

    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        t = self.t
        for name, g in grads.items():
            m = self.m.get(name, 0.0)
            v = self.v.get(name, 0.0)
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[name], self.v[name] = m, v
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            params[name] = params[name] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return params
