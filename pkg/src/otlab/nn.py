"""MLP networks for the potential (scalar output) and the transport map.

A map between equal-dimension spaces may be built in residual form
``T(x) = x + mlp(x)`` with a zero-initialized final layer, so training
starts exactly at the identity.
"""

from __future__ import annotations

import json

import numpy as np

from . import autodiff as ad
from .exceptions import ConfigError, ContractError, ShapeError
from .seeding import rng_from
from .validation import as_batch

CHECKPOINT_MAGIC = "otlab-mlp-v1"


def _glorot(rng, fan_in, fan_out):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class Mlp:
    """Affine/leaky-ReLU stack: hidden layers activated, output linear.

    Parameters live on ``self.tape`` (one is created if not supplied) so a
    single backward pass populates their gradients.
    """

    def __init__(self, dims, alpha=0.2, residual=False, seed=0, tape=None):
        dims = [int(d) for d in dims]
        if len(dims) < 2:
            raise ConfigError(f"need at least input and output dims, got {dims}")
        if any(d < 1 for d in dims):
            raise ConfigError(f"layer dims must be positive, got {dims}")
        if residual and dims[0] != dims[-1]:
            raise ConfigError(f"residual form needs equal input/output dims, got {dims}")
        self.dims = dims
        self.alpha = float(alpha)
        self.residual = bool(residual)
        self.seed = seed
        self.tape = tape if tape is not None else ad.Tape()
        rng = rng_from(seed)
        self.weights = []
        self.biases = []
        n_layers = len(dims) - 1
        for i in range(n_layers):
            w = _glorot(rng, dims[i], dims[i + 1])
            if residual and i == n_layers - 1:
                w = np.zeros_like(w)
            self.weights.append(ad.Tensor(w, tape=self.tape))
            self.biases.append(ad.Tensor(np.zeros(dims[i + 1]), tape=self.tape))

    @property
    def dim_in(self):
        return self.dims[0]

    @property
    def dim_out(self):
        return self.dims[-1]

    def parameters(self) -> dict:
        out = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"layer{i}.weight"] = w
            out[f"layer{i}.bias"] = b
        return out

    def num_params(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def __call__(self, x) -> ad.Tensor:
        """Tape-recorded forward pass; use predict() for plain inference."""
        x = ad.as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise ShapeError(f"expected batch [B, {self.dims[0]}], got shape {x.shape}")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add_row(ad.matmul(h, w), b)
            if i < last:
                h = ad.leaky_relu(h, self.alpha)
        if self.residual:
            h = ad.add(x, h)
        return h

    def predict(self, x) -> np.ndarray:
        """Inference on raw arrays; never touches the tape."""
        x = as_batch(x, dim=self.dims[0], name="x")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data[None, :]
            if i < last:
                h = np.where(h > 0, h, self.alpha * h)
        if self.residual:
            h = x + h
        return h

    def freeze(self) -> "FrozenMap":
        return FrozenMap(self)

    def save(self, path):
        """JSON header line + little-endian f64 blob, layer order, bit-exact."""
        header = {
            "format": CHECKPOINT_MAGIC,
            "dims": self.dims,
            "activation": {"name": "leaky_relu", "alpha": self.alpha},
            "seed": self.seed if isinstance(self.seed, int) else 0,
            "residual": self.residual,
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
            fh.write(b"\n")
            for w, b in zip(self.weights, self.biases):
                fh.write(np.ascontiguousarray(w.data, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b.data, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path, tape=None) -> "Mlp":
        with open(path, "rb") as fh:
            header_line = fh.readline()
            blob = fh.read()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("format") != CHECKPOINT_MAGIC:
            raise ConfigError(f"not an MLP checkpoint: {path}")
        net = cls(
            header["dims"],
            alpha=header["activation"]["alpha"],
            residual=header["residual"],
            seed=header["seed"],
            tape=tape,
        )
        flat = np.frombuffer(blob, dtype="<f8")
        offset = 0
        for w, b in zip(net.weights, net.biases):
            w.data[...] = flat[offset : offset + w.size].reshape(w.shape)
            offset += w.size
            b.data[...] = flat[offset : offset + b.size].reshape(b.shape)
            offset += b.size
        if offset != flat.size:
            raise ConfigError(f"checkpoint blob has {flat.size} values, expected {offset}")
        return net


class FrozenMap:
    """Inference-only snapshot of an Mlp; parameters never receive gradients.

    Calling it on a tracked tensor still records the input-side operations,
    which is what lets frozen feature maps and frozen potentials appear
    inside differentiable losses.
    """

    def __init__(self, net: Mlp):
        self.dims = list(net.dims)
        self.alpha = net.alpha
        self.residual = net.residual
        self.weights = [w.data.copy() for w in net.weights]
        self.biases = [b.data.copy() for b in net.biases]

    @property
    def dim_in(self):
        return self.dims[0]

    @property
    def dim_out(self):
        return self.dims[-1]

    def predict(self, x) -> np.ndarray:
        x = as_batch(x, dim=self.dims[0], name="x")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b[None, :]
            if i < last:
                h = np.where(h > 0, h, self.alpha * h)
        if self.residual:
            h = x + h
        return h

    def __call__(self, x: ad.Tensor) -> ad.Tensor:
        x = ad.as_tensor(x)
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.add_row(ad.matmul(h, ad.Tensor(w)), ad.Tensor(b))
            if i < last:
                h = ad.leaky_relu(h, self.alpha)
        if self.residual:
            h = ad.add(x, h)
        return h


def freeze(net: Mlp) -> FrozenMap:
    return net.freeze()


def input_gradient(net: Mlp, x: np.ndarray) -> ad.Tensor:
    """Per-sample gradient of a scalar-output net w.r.t. its input.

    Expressed through tape primitives, so the result stays differentiable
    w.r.t. the net's parameters (what a gradient penalty needs). The
    leaky-ReLU masks enter as constants; their own derivative is zero
    almost everywhere, so this matches exact double backprop.
    """
    if net.dims[-1] != 1:
        raise ContractError(f"input_gradient needs scalar output, got dim {net.dims[-1]}")
    if net.residual:
        raise ContractError("input_gradient does not support residual nets")
    x = as_batch(x, dim=net.dims[0], name="x")
    masks = []
    h = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        pre = h @ w.data + b.data[None, :]
        if i < last:
            masks.append(np.where(pre > 0, 1.0, net.alpha))
            h = pre * masks[-1]
    g = ad.Tensor(np.ones((x.shape[0], 1)))
    for i in range(last, -1, -1):
        g = ad.matmul(g, ad.transpose(net.weights[i]))
        if i > 0:
            g = ad.mul(g, ad.Tensor(masks[i - 1]))
    return g
