"""Minimal 64-bit neural stack: tanh MLPs, diagonal-Gaussian policy head,
value head, analytic backprop, Adam, and Gaussian log-prob/entropy/KL.

Gradients are fixed-topology analytic backpropagation (two hidden layers,
tanh); no autodiff framework is involved. Every gradient path here is
checked against central finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG_STD_MIN = math.log(1e-4)
LOG_STD_MAX = math.log(1e2)
LOG_2PI = math.log(2.0 * math.pi)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


# --- MLP core ----------------------------------------------------------------

@dataclass
class MLPParams:
    """Fully-connected net; tanh on hidden layers, identity on the output."""

    weights: list  # layer i: (d_in, d_out)
    biases: list  # layer i: (d_out,)

    @property
    def dims(self) -> tuple:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def copy(self) -> "MLPParams":
        return MLPParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def _orthogonal(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity
    if rows < cols:
        q = q.T
    return gain * q[:rows, :cols]


def mlp_init(dims, rng: np.random.Generator, out_zero: bool = False,
             hidden_gain: float = math.sqrt(2.0), out_gain: float = 1.0) -> MLPParams:
    """Orthogonal hidden layers (gain sqrt(2) by default); optional zero
    output layer, which pins the initial policy mean to exactly zero."""
    weights, biases = [], []
    for i in range(len(dims) - 1):
        last = i == len(dims) - 2
        if last and out_zero:
            w = np.zeros((dims[i], dims[i + 1]))
        else:
            w = _orthogonal(dims[i], dims[i + 1], out_gain if last else hidden_gain, rng)
        weights.append(w)
        biases.append(np.zeros(dims[i + 1]))
    return MLPParams(weights, biases)


def mlp_forward(p: MLPParams, x: np.ndarray):
    """Forward pass; returns (output, cache) with cache holding each
    layer's input for the backward pass."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    a = x.reshape(1, -1) if squeeze else x
    if a.shape[1] != p.weights[0].shape[0]:
        raise ValueError(
            f"input dim {a.shape[1]} does not match net input {p.weights[0].shape[0]}"
        )
    cache = [a]
    n = len(p.weights)
    for i in range(n):
        z = a @ p.weights[i] + p.biases[i]
        a = np.tanh(z) if i < n - 1 else z
        if i < n - 1:
            cache.append(a)
    y = a[0] if squeeze else a
    return y, cache


def mlp_backward(p: MLPParams, cache: list, dy: np.ndarray):
    """Backprop dL/dy through the net; returns per-layer (dW, db) grads
    summed over the batch, plus dL/dx."""
    dy = np.asarray(dy, dtype=np.float64)
    dz = dy.reshape(1, -1) if dy.ndim == 1 else dy
    n = len(p.weights)
    dws = [None] * n
    dbs = [None] * n
    for i in range(n - 1, -1, -1):
        a_in = cache[i]
        dws[i] = a_in.T @ dz
        dbs[i] = dz.sum(axis=0)
        da = dz @ p.weights[i].T
        if i > 0:
            dz = da * (1.0 - cache[i] ** 2)
    dx = da
    return dws, dbs, dx


# --- policy and value heads ----------------------------------------------------

@dataclass
class GaussianPolicy:
    """State-conditioned mean via MLP; state-independent learnable log-std."""

    mean_net: MLPParams
    log_std: np.ndarray

    @property
    def obs_dim(self) -> int:
        return self.mean_net.dims[0]

    @property
    def act_dim(self) -> int:
        return self.mean_net.dims[-1]

    def forward(self, obs):
        mean, _ = mlp_forward(self.mean_net, obs)
        std = np.exp(self.log_std)
        return mean, std

    def forward_cached(self, obs):
        mean, cache = mlp_forward(self.mean_net, obs)
        return mean, np.exp(self.log_std), cache

    def sample(self, obs, rng: np.random.Generator):
        mean, std = self.forward(obs)
        noise = rng.standard_normal(mean.shape)
        action = mean + std * noise
        return action, gaussian_log_prob(mean, std, action)

    def predict(self, obs):
        """Deterministic (mean) action."""
        return self.forward(obs)[0]

    def clamp_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.mean_net.copy(), self.log_std.copy())


@dataclass
class ValueNet:
    net: MLPParams

    @property
    def obs_dim(self) -> int:
        return self.net.dims[0]

    def value(self, obs):
        v, _ = mlp_forward(self.net, obs)
        return v[..., 0]

    def value_cached(self, obs):
        v, cache = mlp_forward(self.net, obs)
        return v[..., 0], cache

    def copy(self) -> "ValueNet":
        return ValueNet(self.net.copy())


def init_policy(obs_dim: int, act_dim: int, rng: np.random.Generator,
                hidden=(64, 64)) -> GaussianPolicy:
    """64-64 tanh policy; zero output layer (zero initial mean) and
    log_std = 0 (initial exploration variance 1)."""
    net = mlp_init((obs_dim, *hidden, act_dim), rng, out_zero=True)
    return GaussianPolicy(mean_net=net, log_std=np.zeros(act_dim))


def init_value(obs_dim: int, rng: np.random.Generator, hidden=(64, 64)) -> ValueNet:
    return ValueNet(mlp_init((obs_dim, *hidden, 1), rng))


def policy_forward(p: GaussianPolicy, obs):
    """Mean and std of the action distribution at ``obs``."""
    return p.forward(obs)


# --- Gaussian distribution math -------------------------------------------------

def gaussian_log_prob(mean, std, action):
    """Diagonal-Gaussian log density, summed over action dimensions."""
    mean = np.asarray(mean)
    std = np.asarray(std)
    action = np.asarray(action)
    z = (action - mean) / std
    return np.sum(-0.5 * z * z - np.log(std) - 0.5 * LOG_2PI, axis=-1)


def gaussian_kl(p, q):
    """KL(p || q) between diagonal Gaussians given as (mean, std) pairs."""
    mp, sp = (np.asarray(a) for a in p)
    mq, sq = (np.asarray(a) for a in q)
    return np.sum(
        np.log(sq / sp) + (sp * sp + (mp - mq) ** 2) / (2.0 * sq * sq) - 0.5, axis=-1
    )


def gaussian_entropy(std):
    std = np.asarray(std)
    return np.sum(0.5 * (1.0 + LOG_2PI) + np.log(std), axis=-1)


def gaussian_kl_grads_wrt_q(p, q):
    """Per-state KL(p || q) plus its gradients w.r.t. q's mean and log-std.

    Used wherever a policy is pulled toward a frozen reference (the
    distillation loss and the peer regularizer): only the q side is
    trainable there.
    """
    mp, sp = (np.asarray(a) for a in p)
    mq, sq = (np.asarray(a) for a in q)
    var_q = sq * sq
    kl = np.sum(np.log(sq / sp) + (sp * sp + (mp - mq) ** 2) / (2.0 * var_q) - 0.5, axis=-1)
    dmean_q = (mq - mp) / var_q
    dlog_std_q = 1.0 - (sp * sp + (mp - mq) ** 2) / var_q
    return kl, dmean_q, dlog_std_q


# --- parameter plumbing: flat views, Adam ---------------------------------------

def param_arrays(obj) -> list:
    """The trainable arrays of a policy/value net (views, fixed order)."""
    if isinstance(obj, GaussianPolicy):
        arrays = []
        for w, b in zip(obj.mean_net.weights, obj.mean_net.biases):
            arrays.extend([w, b])
        arrays.append(obj.log_std)
        return arrays
    if isinstance(obj, ValueNet):
        arrays = []
        for w, b in zip(obj.net.weights, obj.net.biases):
            arrays.extend([w, b])
        return arrays
    return list(obj)


def flatten_arrays(arrays) -> np.ndarray:
    return np.concatenate([np.asarray(a).ravel() for a in arrays])


def assign_arrays(arrays, flat: np.ndarray) -> None:
    k = 0
    for a in arrays:
        n = a.size
        a[...] = np.asarray(flat[k:k + n]).reshape(a.shape)
        k += n


class GradBuffer:
    """Accumulated gradients plus Adam moment slots for one parameter set.

    Shape-congruent with the arrays it was built from; gradients are
    accumulated by summation (mergeable across sequential accumulators)
    and cleared after each applied update.
    """

    def __init__(self, params):
        self.arrays = param_arrays(params)
        self.grads = [np.zeros_like(a) for a in self.arrays]
        self.m = [np.zeros_like(a) for a in self.arrays]
        self.v = [np.zeros_like(a) for a in self.arrays]
        self.t = 0

    def zero(self) -> None:
        for g in self.grads:
            g[...] = 0.0

    def add(self, grads) -> None:
        for slot, g in zip(self.grads, grads):
            slot += g

    def add_mlp(self, dws, dbs, offset: int = 0) -> None:
        """Accumulate mlp_backward output; layer i maps to slots
        (offset + 2i, offset + 2i + 1)."""
        for i, (dw, db) in enumerate(zip(dws, dbs)):
            self.grads[offset + 2 * i] += dw
            self.grads[offset + 2 * i + 1] += db


def adam_update(params, grads: GradBuffer, lr: float,
                beta1: float = ADAM_BETA1, beta2: float = ADAM_BETA2,
                eps: float = ADAM_EPS):
    """Standard Adam step on ``params`` from the accumulated gradients.

    Rejects (raises, with diagnostics, before touching any state) if a
    gradient is non-finite. Policy log-std is clamped after the step.
    Accumulated gradients are cleared once applied.
    """
    for i, g in enumerate(grads.grads):
        if not np.all(np.isfinite(g)):
            raise ValueError(
                f"non-finite gradient in parameter array {i} "
                f"(shape {g.shape}); update rejected"
            )
    grads.t += 1
    t = grads.t
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for a, g, m, v in zip(grads.arrays, grads.grads, grads.m, grads.v):
        m[...] = beta1 * m + (1.0 - beta1) * g
        v[...] = beta2 * v + (1.0 - beta2) * g * g
        a -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    if isinstance(params, GaussianPolicy):
        params.clamp_log_std()
    grads.zero()
    return params


# --- JSON wire format -----------------------------------------------------------

def policy_to_doc(policy: GaussianPolicy, meta: dict | None = None) -> dict:
    dims = policy.mean_net.dims
    return {
        "obs_dim": dims[0],
        "act_dim": dims[-1],
        "hidden": list(dims[1:-1]),
        "activation": "tanh",
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(policy.mean_net.weights, policy.mean_net.biases)
        ],
        "log_std": policy.log_std.tolist(),
        "meta": dict(meta or {}),
    }


def policy_from_doc(doc: dict) -> GaussianPolicy:
    weights = [np.array(layer["w"], dtype=np.float64) for layer in doc["layers"]]
    biases = [np.array(layer["b"], dtype=np.float64) for layer in doc["layers"]]
    net = MLPParams(weights, biases)
    if doc.get("activation", "tanh") != "tanh":
        raise ValueError(f"unsupported activation {doc['activation']!r}")
    return GaussianPolicy(mean_net=net, log_std=np.array(doc["log_std"], dtype=np.float64))


def value_to_doc(value: ValueNet, meta: dict | None = None) -> dict:
    doc = policy_to_doc(GaussianPolicy(value.net, np.zeros(1)), meta)
    doc["log_std"] = None
    return doc


def value_from_doc(doc: dict) -> ValueNet:
    weights = [np.array(layer["w"], dtype=np.float64) for layer in doc["layers"]]
    biases = [np.array(layer["b"], dtype=np.float64) for layer in doc["layers"]]
    return ValueNet(MLPParams(weights, biases))
