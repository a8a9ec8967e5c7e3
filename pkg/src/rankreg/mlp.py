"""Feed-forward scorer with hand-written backpropagation and momentum SGD.

Hidden layers use ReLU; the output layer is a single linear unit whose value
is the raw logit.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, InvalidArgumentError, NumericError, ParseError

MODEL_FORMAT = "rankreg-mlp 1"


class Mlp:
    def __init__(self, layer_dims, weights, biases):
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.weights = weights
        self.biases = biases
        # bumped on every parameter update so stale forward caches can be detected
        self.version = 0

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self):
        return Mlp(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def decision_function(self, X):
        return forward(self, X)[0]


@dataclass
class Cache:
    activations: list
    pre_activations: list
    version: int
    owner: int


def init_mlp(layer_dims, seed=0):
    """He-initialised weights (fan-in scaled normal), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise ConfigurationError("layer_dims needs an input and an output dimension")
    if any(d <= 0 for d in dims):
        raise ConfigurationError(f"layer dimensions must be positive, got {dims}")
    if dims[-1] != 1:
        raise ConfigurationError("the output layer must have exactly one unit")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return Mlp(dims, weights, biases)


def forward(mlp, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != mlp.layer_dims[0]:
        raise InvalidArgumentError(
            f"expected inputs of shape (N, {mlp.layer_dims[0]}), got {X.shape}"
        )
    activations = [X]
    pre = []
    h = X
    last = len(mlp.weights) - 1
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return h[:, 0].copy(), Cache(activations, pre, mlp.version, id(mlp))


def backward(mlp, cache, dscore):
    """Gradients of ``sum_i dscore[i] * score[i]``, as ``[dW0, db0, dW1, ...]``."""
    if cache.owner != id(mlp) or cache.version != mlp.version:
        raise InvalidArgumentError("forward cache is stale or belongs to another model")
    g = np.asarray(dscore, dtype=float)
    n = cache.activations[0].shape[0]
    if g.shape != (n,):
        raise InvalidArgumentError(f"dscore must have length {n}, got shape {g.shape}")
    delta = g[:, None]
    grads = []
    for i in range(len(mlp.weights) - 1, -1, -1):
        a_in = cache.activations[i]
        grads.append(delta.sum(axis=0))
        grads.append(a_in.T @ delta)
        if i > 0:
            delta = (delta @ mlp.weights[i].T) * (cache.pre_activations[i - 1] > 0)
    grads.reverse()
    return grads


@dataclass
class OptimizerState:
    learning_rate: float = 0.05
    momentum: float = 0.9
    velocity: list = field(default=None, repr=False)

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be > 0")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError("momentum must lie in [0, 1)")


def sgd_step(mlp, grads, opt):
    params = mlp.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise InvalidArgumentError("gradient shapes do not match the model parameters")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NumericError("non-finite gradient; step aborted")
    if opt.velocity is None:
        opt.velocity = [np.zeros_like(p) for p in params]
    for p, v, g in zip(params, opt.velocity, grads):
        v *= opt.momentum
        v += g
        p -= opt.learning_rate * v
    mlp.version += 1


def save_model(mlp, path):
    lines = [MODEL_FORMAT, "layer_dims " + " ".join(str(d) for d in mlp.layer_dims)]
    for p in mlp.params():
        lines.extend(repr(float(v)) for v in p.ravel())
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MODEL_FORMAT:
        raise ParseError(f"not a {MODEL_FORMAT!r} model file", 1)
    head = lines[1].split() if len(lines) > 1 else []
    if not head or head[0] != "layer_dims":
        raise ParseError("expected 'layer_dims' header", 2)
    try:
        dims = [int(d) for d in head[1:]]
        values = np.array([float(v) for v in lines[2:]])
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    mlp = init_mlp(dims, 0)
    expected = mlp.n_params
    if values.size != expected:
        raise ParseError(f"expected {expected} parameter values, found {values.size}")
    offset = 0
    for p in mlp.params():
        p[...] = values[offset : offset + p.size].reshape(p.shape)
        offset += p.size
    return mlp
