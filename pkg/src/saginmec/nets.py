"""Feedforward networks, their gradients, and the optimizer.

Everything is float64 numpy with hand-written backward passes.  The
fanciest thing here is the chain rule; keeping it explicit is what makes
the finite-difference gradient checks in the test suite meaningful.
"""
from __future__ import annotations

from typing import List, Sequence

import numpy as np


def _hidden_init(rng: np.random.Generator, fan_in: int, fan_out: int):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Mlp:
    """Fully connected net, rectifier hidden units, linear output.

    The output layer is initialized uniformly in +-final_init (small, so
    early actions sit near range midpoints and early values near zero);
    pass final_init=0.0 for an exactly-zero output layer.
    """

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator,
                 final_init: float = 3e-3):
        self.sizes = list(sizes)
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for li in range(len(sizes) - 1):
            fan_in, fan_out = sizes[li], sizes[li + 1]
            if li == len(sizes) - 2:
                w = rng.uniform(-final_init, final_init,
                                size=(fan_in, fan_out))
                b = rng.uniform(-final_init, final_init, size=fan_out)
            else:
                w = _hidden_init(rng, fan_in, fan_out)
                b = np.zeros(fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def params(self) -> List[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray):
        """x (batch, in) -> (y (batch, out), cache for backward)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        h = x
        n_layers = len(self.weights)
        for li in range(n_layers):
            z = h @ self.weights[li] + self.biases[li]
            if li < n_layers - 1:
                z = np.maximum(z, 0.0)
            acts.append(z)
            h = z
        return h, acts

    def backward(self, cache, dy: np.ndarray):
        """Gradients of Σ_batch <dy, y> w.r.t. params and input.

        Returns (grads, dx) with grads matching self.params order.
        """
        acts = cache
        n_layers = len(self.weights)
        grads = [None] * (2 * n_layers)
        d = np.atleast_2d(np.asarray(dy, dtype=float))
        for li in range(n_layers - 1, -1, -1):
            if li < n_layers - 1:
                d = d * (acts[li + 1] > 0.0)
            grads[2 * li] = acts[li].T @ d
            grads[2 * li + 1] = d.sum(axis=0)
            d = d @ self.weights[li].T
        return grads, d

    def state(self) -> dict:
        return {f"w{li}": w.copy() for li, w in enumerate(self.weights)} \
            | {f"b{li}": b.copy() for li, b in enumerate(self.biases)}

    def load_state(self, state: dict) -> None:
        for li in range(len(self.weights)):
            self.weights[li][...] = state[f"w{li}"]
            self.biases[li][...] = state[f"b{li}"]


class Actor:
    """Maps one agent's observation to a bounded action.

    The net's output is squashed by tanh into u in [-1, 1]^d; the
    environment-facing action is the affine image of u in [lo, hi].
    Training works in u-space throughout (exploration noise, replay,
    critic inputs); only the environment sees [lo, hi] values.
    """

    def __init__(self, obs_dim: int, act_lo, act_hi,
                 hidden: Sequence[int], rng: np.random.Generator,
                 final_init: float = 3e-3):
        self.act_lo = np.asarray(act_lo, dtype=float)
        self.act_hi = np.asarray(act_hi, dtype=float)
        if self.act_lo.shape != self.act_hi.shape \
                or np.any(self.act_hi <= self.act_lo):
            raise ValueError("action bounds must satisfy lo < hi")
        self.net = Mlp([obs_dim, *hidden, len(self.act_lo)], rng, final_init)

    @property
    def params(self) -> List[np.ndarray]:
        return self.net.params

    def forward_u(self, obs: np.ndarray):
        """(u (batch, d), cache); u is the squashed pre-scale action."""
        z, acts = self.net.forward(obs)
        u = np.tanh(z)
        return u, (acts, u)

    def backward_u(self, cache, du: np.ndarray):
        """Gradients of Σ <du, u> w.r.t. actor params."""
        acts, u = cache
        dz = np.atleast_2d(du) * (1.0 - u * u)
        grads, _ = self.net.backward(acts, dz)
        return grads

    def to_env(self, u: np.ndarray) -> np.ndarray:
        """Affine map from u-space onto the action box."""
        return self.act_lo + 0.5 * (np.asarray(u) + 1.0) \
            * (self.act_hi - self.act_lo)

    def act(self, obs: np.ndarray) -> np.ndarray:
        u, _ = self.forward_u(obs)
        return self.to_env(u)[0]


class Critic:
    """Scores a joint (all observations, all u-actions) input."""

    def __init__(self, in_dim: int, hidden: Sequence[int],
                 rng: np.random.Generator, final_init: float = 3e-3):
        self.net = Mlp([in_dim, *hidden, 1], rng, final_init)

    @property
    def params(self) -> List[np.ndarray]:
        return self.net.params

    def forward(self, x: np.ndarray):
        q, acts = self.net.forward(x)
        return q, acts

    def backward(self, cache, dq: np.ndarray):
        """(param grads, input grads) of Σ <dq, q>."""
        return self.net.backward(cache, dq)


class Adam:
    """Adaptive-moment gradient descent over a list of parameter arrays."""

    def __init__(self, params: List[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: List[np.ndarray],
             grads: List[np.ndarray]) -> None:
        """One descent step; mutates params in place."""
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def state(self) -> dict:
        out = {"t": np.array(self.t)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"m{i}"] = m.copy()
            out[f"v{i}"] = v.copy()
        return out

    def load_state(self, state: dict) -> None:
        self.t = int(state["t"])
        for i in range(len(self.m)):
            self.m[i][...] = state[f"m{i}"]
            self.v[i][...] = state[f"v{i}"]


def soft_update(online: List[np.ndarray], target: List[np.ndarray],
                rate: float) -> None:
    """Polyak tracking: target <- rate*online + (1-rate)*target."""
    if not 0.0 < rate <= 1.0:
        raise ValueError("tracking rate must be in (0, 1]")
    for src, dst in zip(online, target):
        dst *= 1.0 - rate
        dst += rate * src


def copy_params(src: List[np.ndarray], dst: List[np.ndarray]) -> None:
    for s, d in zip(src, dst):
        d[...] = s


def flatten_params(params: List[np.ndarray]) -> np.ndarray:
    return np.concatenate([p.ravel() for p in params])


def assign_params(params: List[np.ndarray], vector: np.ndarray) -> None:
    at = 0
    for p in params:
        n = p.size
        p[...] = vector[at:at + n].reshape(p.shape)
        at += n
    if at != len(vector):
        raise ValueError("vector length does not match parameter count")
