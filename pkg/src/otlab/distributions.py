"""Seeded samplers over R^d.

Every distribution owns its RNG stream (derived from a root seed through
named substreams); sampling on a shared instance is not thread-safe, but
``substream`` clones carry independent streams for parallel sweeps. The
synthetic super-resolution pair is unpaired by construction: the
low-resolution side degrades its own private draws of the high-resolution
field, so no aligned (x, y) pairs ever exist.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError, ShapeError
from .seeding import as_seed_sequence, child
from .validation import as_batch, as_vector, check_spd, check_weights

# fixed circulant smoothing kernel for the synthetic high-resolution field
SMOOTHING_KERNEL = np.array([1.0, 2.0, 4.0, 2.0, 1.0]) / 10.0


class Distribution:
    """Base sampler: subclasses implement _draw and _with_seed."""

    dim: int

    def __init__(self, seed=0):
        self._seed_seq = as_seed_sequence(seed)
        self._rng = np.random.default_rng(self._seed_seq)

    def sample(self, n: int) -> np.ndarray:
        if n < 1:
            raise ConfigError(f"batch size must be >= 1, got {n}")
        out = self._draw(int(n))
        assert out.shape == (n, self.dim)
        return out

    def substream(self, *keys) -> "Distribution":
        """Clone with an independent stream; same parameters."""
        return self._with_seed(child(self._seed_seq, "substream", *keys))

    def _draw(self, n):
        raise NotImplementedError

    def _with_seed(self, seed):
        raise NotImplementedError


class Gaussian(Distribution):
    def __init__(self, mean, cov, seed=0):
        super().__init__(seed)
        self.mean = as_vector(mean, name="mean")
        self.cov = check_spd(cov, name="cov")
        if self.cov.shape[0] != self.mean.shape[0]:
            raise ShapeError(f"mean dim {self.mean.shape[0]} != cov dim {self.cov.shape[0]}")
        self.dim = self.mean.shape[0]
        self._chol = np.linalg.cholesky(self.cov)

    def _draw(self, n):
        z = self._rng.standard_normal((n, self.dim))
        return self.mean[None, :] + z @ self._chol.T

    def _with_seed(self, seed):
        return Gaussian(self.mean, self.cov, seed)


class Mixture(Distribution):
    """Finite mixture; component choice uses a dedicated substream so the
    choice sequence is reproducible independently of the component draws."""

    def __init__(self, weights, components, seed=0):
        super().__init__(seed)
        if not components:
            raise ConfigError("mixture needs at least one component")
        self.weights = check_weights(weights, n=len(components))
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ConfigError(f"mixture components disagree on dim: {sorted(dims)}")
        self.dim = components[0].dim
        self.components = [
            c._with_seed(child(self._seed_seq, "component", i)) for i, c in enumerate(components)
        ]
        self._choice_rng = np.random.default_rng(child(self._seed_seq, "choice"))
        self._cum = np.cumsum(self.weights)

    def _draw(self, n):
        u = self._choice_rng.random(n)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, len(self.components) - 1)
        out = np.empty((n, self.dim))
        for i, comp in enumerate(self.components):
            where = np.flatnonzero(idx == i)
            if where.size:
                out[where] = comp.sample(where.size)
        return out

    def _with_seed(self, seed):
        return Mixture(self.weights, self.components, seed)


class DiscreteAtoms(Distribution):
    def __init__(self, points, weights=None, seed=0):
        super().__init__(seed)
        self.points = as_batch(points, name="points")
        m = self.points.shape[0]
        if weights is None:
            weights = np.full(m, 1.0 / m)
        self.weights = check_weights(weights, n=m)
        self.dim = self.points.shape[1]
        self._cum = np.cumsum(self.weights)

    def _draw(self, n):
        u = self._rng.random(n)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, self.points.shape[0] - 1)
        return self.points[idx].copy()

    def _with_seed(self, seed):
        return DiscreteAtoms(self.points, self.weights, seed)


class Degradation:
    """Fixed blur kernel + integer-stride subsampling; deterministic."""

    def __init__(self, kernel, stride):
        kernel = as_vector(kernel, name="kernel")
        if np.any(kernel < 0) or kernel.sum() <= 0:
            raise ConfigError("kernel must be nonnegative with positive sum")
        self.kernel = kernel / kernel.sum()
        if int(stride) < 1:
            raise ConfigError(f"stride must be >= 1, got {stride}")
        self.stride = int(stride)

    @classmethod
    def box(cls, width=4, stride=4):
        return cls(np.ones(width), stride)

    def apply(self, hr: np.ndarray) -> np.ndarray:
        hr = as_batch(hr, name="hr")
        n = hr.shape[1]
        if n % self.stride != 0:
            raise ShapeError(f"signal dim {n} not divisible by stride {self.stride}")
        m = n // self.stride
        taps = np.arange(self.kernel.size)
        idx = (self.stride * np.arange(m)[:, None] + taps[None, :]) % n
        return hr[:, idx] @ self.kernel


class SmoothField(Distribution):
    """High-resolution synthetic signal: circulant smoothing of white noise."""

    def __init__(self, dim, seed=0, kernel=None):
        super().__init__(seed)
        self.dim = int(dim)
        if self.dim < 1:
            raise ConfigError(f"signal dim must be positive, got {dim}")
        self.kernel = SMOOTHING_KERNEL if kernel is None else as_vector(kernel)
        taps = np.arange(self.kernel.size) - self.kernel.size // 2
        self._idx = (np.arange(self.dim)[:, None] + taps[None, :]) % self.dim

    def _draw(self, n):
        white = self._rng.standard_normal((n, self.dim))
        return white[:, self._idx] @ self.kernel

    def _with_seed(self, seed):
        return SmoothField(self.dim, seed, self.kernel)


class DegradedField(Distribution):
    """Low-resolution side: degrades its own independent high-res draws."""

    def __init__(self, signal_dim, degradation, seed=0, kernel=None):
        super().__init__(seed)
        self.signal_dim = int(signal_dim)
        self.degradation = degradation
        self._source = SmoothField(signal_dim, child(self._seed_seq, "hr-source"), kernel)
        self.dim = self.signal_dim // degradation.stride

    def _draw(self, n):
        return self.degradation.apply(self._source.sample(n))

    def _with_seed(self, seed):
        return DegradedField(self.signal_dim, self.degradation, seed, self._source.kernel)


def make_sr_pair(signal_dim, degradation, seed=0):
    """Unpaired (low-res, high-res) sampler pair with a known degradation.

    The degradation stays with the caller for evaluation; solvers only ever
    see the two samplers.
    """
    if signal_dim % degradation.stride != 0:
        raise ConfigError(
            f"signal dim {signal_dim} not divisible by stride {degradation.stride}"
        )
    ss = as_seed_sequence(seed)
    lr = DegradedField(signal_dim, degradation, child(ss, "lr"))
    hr = SmoothField(signal_dim, child(ss, "hr"))
    return lr, hr
