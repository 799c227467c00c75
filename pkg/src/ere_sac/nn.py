"""Dense ReLU networks with hand-written backprop, Adam, and a tanh-squashed Gaussian policy.

Checkpoint layout (little-endian, shared by every file this package writes)::

    magic    8 bytes   b"ERESAC01"
    n        uint32    number of layer sizes
    sizes    n x uint32
    payload  float64   for each layer: W (fan_in x fan_out, row-major) then b
"""
from __future__ import annotations

import struct

import numpy as np

MAGIC = b"ERESAC01"
LOG_2PI = np.log(2.0 * np.pi)


class StaleCacheError(RuntimeError):
    pass


class DenseNet:
    """ReLU hidden layers, identity output; weights are ``(fan_in, fan_out)``."""

    def __init__(self, sizes, rng: np.random.Generator | None = None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self.sizes = sizes
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.params.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
            self.params.append(rng.uniform(-bound, bound, fan_out))
        self.version = 0

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    def copy(self) -> "DenseNet":
        other = DenseNet.__new__(DenseNet)
        other.sizes = self.sizes
        other.params = [p.copy() for p in self.params]
        other.version = 0
        return other

    def forward(self, x):
        """Return ``(output, cache)``; the cache feeds :meth:`backward`."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.sizes[0]:
            raise ValueError(f"input dimension {x.shape[-1]} != {self.sizes[0]}")
        acts = [x]
        h = x
        for i in range(self.n_layers):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i < self.n_layers - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        return h, (self.version, acts)

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, cache, grad_out):
        """Gradients of ``sum(grad_out * output)`` w.r.t. parameters and input."""
        version, acts = cache
        if version != self.version:
            raise StaleCacheError("parameters changed since the forward pass")
        g = np.asarray(grad_out, dtype=float)
        grads = [None] * len(self.params)
        for i in reversed(range(self.n_layers)):
            if i < self.n_layers - 1:
                g = g * (acts[i + 1] > 0)
            a = acts[i]
            grads[2 * i] = a.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            grads[2 * i + 1] = g.reshape(-1, g.shape[-1]).sum(axis=0)
            g = g @ self.params[2 * i].T
        return grads, g

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, vec) -> None:
        vec = np.asarray(vec, dtype=float)
        pos = 0
        for p in self.params:
            p[...] = vec[pos:pos + p.size].reshape(p.shape)
            pos += p.size
        self.version += 1

    def save(self, fh) -> None:
        write_params(fh, self.sizes, self.params)

    @classmethod
    def load(cls, fh) -> "DenseNet":
        sizes, params = read_params(fh)
        net = cls.__new__(cls)
        net.sizes, net.params, net.version = sizes, params, 0
        return net


def write_params(fh, sizes, arrays) -> None:
    fh.write(MAGIC)
    fh.write(struct.pack("<I", len(sizes)))
    fh.write(struct.pack(f"<{len(sizes)}I", *sizes))
    for a in arrays:
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_params(fh):
    if fh.read(len(MAGIC)) != MAGIC:
        raise ValueError("not a parameter block")
    (n,) = struct.unpack("<I", fh.read(4))
    sizes = struct.unpack(f"<{n}I", fh.read(4 * n))
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        for shape in ((fan_in, fan_out), (fan_out,)):
            count = int(np.prod(shape))
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError("truncated parameter block")
            params.append(np.frombuffer(buf, dtype="<f8").astype(float).reshape(shape))
    return tuple(sizes), params


class Adam:
    """Bias-corrected Adam acting in place on one network's parameters."""

    def __init__(self, net: DenseNet, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.net = net
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in net.params]
        self.v = [np.zeros_like(p) for p in net.params]
        self.t = 0

    def step(self, grads):
        if len(grads) != len(self.m):
            raise ValueError("gradient list does not match parameters")
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise FloatingPointError("non-finite gradient")
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.net.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.net.version += 1
        return self.net.params

    def save(self, fh) -> None:
        fh.write(struct.pack("<Q", self.t))
        write_params(fh, self.net.sizes, self.m)
        write_params(fh, self.net.sizes, self.v)

    def load(self, fh) -> None:
        (self.t,) = struct.unpack("<Q", fh.read(8))
        _, self.m = read_params(fh)
        _, self.v = read_params(fh)


def squash_correction(u):
    """``log(1 - tanh(u)**2)`` evaluated without cancellation at large ``|u|``."""
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


class PolicyHead:
    """Gaussian over pre-squash actions, squashed by tanh and scaled to the action limit.

    The network emits ``[mean, log_std]`` per action dimension; ``log_std`` is
    clipped to ``log_std_bounds`` before exponentiation.
    """

    def __init__(self, obs_dim, act_dim, hidden=(256, 256), action_limit=1.0,
                 log_std_bounds=(-20.0, 2.0), rng=None):
        if not action_limit > 0:
            raise ValueError("action_limit must be positive")
        self.obs_dim, self.act_dim = int(obs_dim), int(act_dim)
        self.action_limit = float(action_limit)
        self.log_std_bounds = tuple(log_std_bounds)
        self.net = DenseNet((obs_dim, *hidden, 2 * act_dim), rng)

    def _dist(self, state):
        out, cache = self.net.forward(state)
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("policy network produced non-finite output")
        mean, raw_log_std = out[..., :self.act_dim], out[..., self.act_dim:]
        lo, hi = self.log_std_bounds
        log_std = np.clip(raw_log_std, lo, hi)
        inside = (raw_log_std >= lo) & (raw_log_std <= hi)
        return mean, log_std, inside, cache

    def sample_action(self, state, noise):
        """Reparameterized action and its log-density; returns ``(action, log_prob, cache)``."""
        mean, log_std, inside, cache = self._dist(state)
        noise = np.asarray(noise, dtype=float)
        if noise.shape[-1] != self.act_dim:
            raise ValueError("noise dimension must equal action dimension")
        std = np.exp(log_std)
        u = mean + std * noise
        squashed = np.tanh(u)
        log_prob = (
            np.sum(-0.5 * noise ** 2 - log_std - 0.5 * LOG_2PI, axis=-1)
            - np.sum(squash_correction(u), axis=-1)
            - self.act_dim * np.log(self.action_limit)
        )
        return self.action_limit * squashed, log_prob, (cache, noise, std, u, squashed, inside)

    def backward(self, cache, grad_action, grad_log_prob):
        """Parameter gradients given cotangents of the action and the log-density."""
        net_cache, noise, std, u, squashed, inside = cache
        grad_action = np.asarray(grad_action, dtype=float)
        grad_lp = np.asarray(grad_log_prob, dtype=float)[..., None]
        grad_u = grad_action * self.action_limit * (1.0 - squashed ** 2) + grad_lp * 2.0 * squashed
        grad_mean = grad_u
        grad_log_std = (grad_u * std * noise - grad_lp) * inside
        grad_out = np.concatenate([grad_mean, grad_log_std], axis=-1)
        grads, _ = self.net.backward(net_cache, grad_out)
        return grads

    def deterministic_action(self, state):
        mean, _, _, _ = self._dist(state)
        return self.action_limit * np.tanh(mean)
