"""Transport/content cost functions c(x, y).

``per_sample`` returns one nonnegative cost per batch row as a tape tensor:
gradient flows to the ``y`` argument only (``x`` is data). Cost objects are
immutable after construction; refreshing a dynamic cost returns a new value.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .exceptions import ConfigError, ContractError, ShapeError
from .nn import FrozenMap, Mlp, freeze
from .seeding import child
from .validation import as_batch


class CostFn:
    def per_sample(self, x, y) -> ad.Tensor:
        """Cost of each (x_i, y_i) pair: [B, dX] x [B, dY] -> [B]."""
        raise NotImplementedError

    def _pair(self, x, y):
        x = as_batch(x, name="x")
        y = ad.as_tensor(y)
        if y.ndim != 2:
            raise ShapeError(f"y must be a batch [B, d], got shape {y.shape}")
        if x.shape[0] != y.shape[0]:
            raise ShapeError(f"batch sizes differ: {x.shape[0]} vs {y.shape[0]}")
        return x, y


def eval_cost(cost: CostFn, x, y) -> ad.Tensor:
    return cost.per_sample(x, y)


class Quadratic(CostFn):
    """Squared Euclidean distance, no normalization."""

    def per_sample(self, x, y):
        x, y = self._pair(x, y)
        if x.shape[1] != y.shape[1]:
            raise ShapeError(f"quadratic cost needs equal dims, got {x.shape} vs {y.shape}")
        return ad.sum_rows(ad.square(ad.sub(y, ad.Tensor(x))))


class Mse(CostFn):
    """Squared Euclidean distance divided by the output dimension."""

    def per_sample(self, x, y):
        x, y = self._pair(x, y)
        if x.shape[1] != y.shape[1]:
            raise ShapeError(f"mse cost needs equal dims, got {x.shape} vs {y.shape}")
        return ad.scale(ad.sum_rows(ad.square(ad.sub(y, ad.Tensor(x)))), 1.0 / y.shape[1])


class Mae(CostFn):
    """L1 distance divided by the output dimension; subgradient 0 at ties."""

    def per_sample(self, x, y):
        x, y = self._pair(x, y)
        if x.shape[1] != y.shape[1]:
            raise ShapeError(f"mae cost needs equal dims, got {x.shape} vs {y.shape}")
        return ad.scale(ad.sum_rows(ad.absolute(ad.sub(y, ad.Tensor(x)))), 1.0 / y.shape[1])


class Lp(CostFn):
    """Euclidean norm raised to the p-th power, p >= 1."""

    def __init__(self, p):
        if p < 1:
            raise ConfigError(f"Lp cost needs p >= 1, got {p}")
        self.p = float(p)

    def per_sample(self, x, y):
        x, y = self._pair(x, y)
        if x.shape[1] != y.shape[1]:
            raise ShapeError(f"Lp cost needs equal dims, got {x.shape} vs {y.shape}")
        sq = ad.sum_rows(ad.square(ad.sub(y, ad.Tensor(x))))
        if self.p == 2.0:
            return sq
        return ad.powf(sq, self.p / 2.0)


class Upsampler:
    """1-D upsampling of [B, n] to [B, n*factor].

    Linear interpolation places output sample j at input coordinate
    j*(n-1)/(n_out-1) (endpoints land exactly on the first/last input
    samples, out-of-range coordinates replicate the endpoints), so affine
    input sequences stay affine. Nearest repeats each sample factor times.
    """

    def __init__(self, kind="linear", factor=2):
        if kind not in ("linear", "nearest"):
            raise ConfigError(f"unknown upsampler kind {kind!r}")
        if int(factor) < 1:
            raise ConfigError(f"factor must be >= 1, got {factor}")
        self.kind = kind
        self.factor = int(factor)

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = as_batch(x, name="x")
        n = x.shape[1]
        if self.factor == 1:
            return x.copy()
        if self.kind == "nearest":
            return np.repeat(x, self.factor, axis=1)
        n_out = n * self.factor
        if n == 1:
            return np.repeat(x, self.factor, axis=1)
        pos = np.arange(n_out) * (n - 1) / (n_out - 1)
        lo = np.clip(np.floor(pos).astype(int), 0, n - 2)
        w = pos - lo
        return (1.0 - w)[None, :] * x[:, lo] + w[None, :] * x[:, lo + 1]


class CompositeUpsample(CostFn):
    """base(Up(x), y): compares the upsampled input against y."""

    def __init__(self, base: CostFn, upsampler: Upsampler):
        self.base = base
        self.upsampler = upsampler

    def per_sample(self, x, y):
        x = as_batch(x, name="x")
        return self.base.per_sample(self.upsampler.apply(x), y)


class Dynamic(CostFn):
    """base(frozen(x), y): the input is lifted by a frozen snapshot of a map."""

    def __init__(self, base: CostFn, frozen: FrozenMap):
        if isinstance(base, (Dynamic, CompositeUpsample)):
            base = base.base
        self.base = base
        self.frozen = frozen

    def per_sample(self, x, y):
        x = as_batch(x, name="x")
        return self.base.per_sample(self.frozen.predict(x), y)


class Scaled(CostFn):
    def __init__(self, base: CostFn, factor: float):
        self.base = base
        self.factor = float(factor)

    def per_sample(self, x, y):
        return ad.scale(self.base.per_sample(x, y), self.factor)


def scale_cost(cost: CostFn, factor: float) -> CostFn:
    if factor <= 0:
        raise ConfigError(f"cost scale must be positive, got {factor}")
    return Scaled(cost, factor)


def refresh_dynamic(cost: Dynamic, current_map: Mlp) -> Dynamic:
    """Replace the frozen snapshot with a fresh copy of the current map."""
    if not isinstance(cost, Dynamic):
        raise ContractError(f"refresh_dynamic needs a Dynamic cost, got {type(cost).__name__}")
    return Dynamic(cost.base, freeze(current_map))


class RandomFeatureCost(CostFn):
    """MSE + (1/3)*MAE + (1/50)*sum_k MSE over fixed random feature maps.

    Stands in for a pretrained-network perceptual cost: the feature maps are
    frozen randomly initialized MLPs, fixed at construction by the seed.
    """

    N_FEATURE_MAPS = 4

    def __init__(self, dim, seed=0, feature_dim=32, hidden_dim=64):
        self.dim = int(dim)
        self.seed = seed
        self.feature_dim = int(feature_dim)
        self.hidden_dim = int(hidden_dim)
        self._mse = Mse()
        self._mae = Mae()
        self._features = [
            freeze(Mlp([dim, hidden_dim, feature_dim], seed=child(seed, "feature", k)))
            for k in range(self.N_FEATURE_MAPS)
        ]

    def per_sample(self, x, y):
        x, y = self._pair(x, y)
        if x.shape[1] != self.dim or y.shape[1] != self.dim:
            raise ShapeError(f"feature cost built for dim {self.dim}, got {x.shape} vs {y.shape}")
        total = ad.add(
            self._mse.per_sample(x, y),
            ad.scale(self._mae.per_sample(x, y), 1.0 / 3.0),
        )
        for phi in self._features:
            fx = phi.predict(x)
            fy = phi(y)
            total = ad.add(total, ad.scale(self._mse.per_sample(fx, fy), 1.0 / 50.0))
        return total


_NAMED_COSTS = {
    "quadratic": Quadratic,
    "mse": Mse,
    "mae": Mae,
}


def cost_by_name(name: str, **kwargs) -> CostFn:
    if name in _NAMED_COSTS:
        return _NAMED_COSTS[name]()
    if name == "lp":
        return Lp(kwargs["p"])
    if name == "perceptual":
        return RandomFeatureCost(kwargs["dim"], seed=kwargs.get("seed", 0))
    raise ConfigError(f"unknown cost {name!r}")
