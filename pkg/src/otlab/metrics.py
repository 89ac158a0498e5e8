"""Quantitative judges: unexplained-variance percentage, kernel two-sample
discrepancy, transport-cost estimates, palette variance, and log-log slope
fits for first-variation scaling checks on discrete supports.

All Monte-Carlo metrics take explicit seeds and never consume the caller's
sampler stream: they draw from named substreams of the distribution.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog

from .costs import CostFn, Quadratic
from .distributions import DiscreteAtoms, Distribution
from .exceptions import ConfigError, DomainError, NumericError, ShapeError
from .seeding import rng_from
from .validation import as_batch

__all__ = [
    "MetricReport",
    "RbfKernel",
    "median_bandwidth",
    "mmd2",
    "l2_uvp",
    "transport_cost_estimate",
    "palette_variance",
    "palette_variance_spread",
    "FvSlope",
    "fv_slope",
    "discrete_w2",
]


@dataclass
class MetricReport:
    name: str
    value: float
    n_samples: int
    seed: int
    tolerance_used: float | None = None

    def to_dict(self):
        return asdict(self)


def _samples_of(dist, n, key, seed):
    """Draw n samples without consuming the caller's stream."""
    if isinstance(dist, Distribution):
        return dist.substream(key, seed).sample(n)
    return as_batch(dist)


class RbfKernel:
    """k(a, b) = exp(-||a-b||^2 / (2 sigma^2)); k(y, y) = 1."""

    def __init__(self, bandwidth):
        if bandwidth <= 0:
            raise ConfigError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = float(bandwidth)

    def gram(self, A, B) -> np.ndarray:
        A = as_batch(A, name="A")
        B = as_batch(B, dim=A.shape[1], name="B")
        sq = (
            np.sum(A * A, axis=1)[:, None]
            - 2.0 * (A @ B.T)
            + np.sum(B * B, axis=1)[None, :]
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.bandwidth**2))


def median_bandwidth(samples, cap=1024) -> float:
    """Median pairwise distance heuristic (capped subset for large inputs)."""
    Z = as_batch(samples, name="samples")
    if Z.shape[0] > cap:
        Z = Z[:cap]
    diff = Z[:, None, :] - Z[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=2))
    med = float(np.median(dists[np.triu_indices(Z.shape[0], k=1)]))
    if med <= 0:
        raise NumericError("median pairwise distance is zero; pass a bandwidth explicitly")
    return med


def mmd2(X, Y, kernel: RbfKernel | None = None) -> float:
    """Unbiased U-statistic estimate of the squared kernel discrepancy.

    Diagonal terms are excluded on both within-sample blocks, so the
    estimator is unbiased for the population value (and may go negative
    when the distributions coincide).
    """
    X = as_batch(X, name="X")
    Y = as_batch(Y, dim=X.shape[1], name="Y")
    m, n = X.shape[0], Y.shape[0]
    if m < 2 or n < 2:
        raise ConfigError("mmd2 needs at least 2 samples per side")
    if kernel is None:
        kernel = RbfKernel(median_bandwidth(np.vstack([X, Y])))
    kxx = kernel.gram(X, X)
    kyy = kernel.gram(Y, Y)
    kxy = kernel.gram(X, Y)
    sum_xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    sum_yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(sum_xx + sum_yy - 2.0 * kxy.mean())


def l2_uvp(map_hat, map_star, P, Q, n=10_000, seed=0) -> float:
    """Percentage of unexplained variance of a fitted map.

    100 * E_P ||map_hat(x) - map_star(x)||^2 / Var(Q), where Var(Q) is the
    trace of Q's covariance, both estimated on n Monte-Carlo samples.
    """
    if n < 10_000:
        raise ConfigError(f"l2_uvp needs n >= 10^4 samples, got {n}")
    xs = _samples_of(P, n, "l2-uvp-p", seed)
    ys = _samples_of(Q, n, "l2-uvp-q", seed)
    err = float(np.mean(np.sum((map_hat(xs) - map_star(xs)) ** 2, axis=1)))
    var_q = float(np.trace(np.cov(ys, rowvar=False).reshape(ys.shape[1], ys.shape[1])))
    if var_q < 1e-12:
        raise DomainError(f"target variance {var_q:.3e} is numerically zero")
    return 100.0 * err / var_q


def transport_cost_estimate(map_hat, P, cost: CostFn, n=10_000, seed=0) -> float:
    """Monte-Carlo mean of cost(x, map_hat(x)) over x ~ P."""
    if n < 10_000:
        raise ConfigError(f"transport_cost_estimate needs n >= 10^4, got {n}")
    xs = _samples_of(P, n, "transport-cost", seed)
    return float(np.mean(cost.per_sample(xs, map_hat(xs)).data))


def _palette_draws(samples, n_points, repeats, seed):
    samples = as_batch(samples, name="samples")
    if samples.shape[0] < 1_000:
        raise ConfigError(f"palette variance needs >= 10^3 samples, got {samples.shape[0]}")
    rng = rng_from(seed, "palette")
    out = np.empty(repeats)
    for r in range(repeats):
        rows = rng.integers(0, samples.shape[0], size=n_points)
        cols = rng.integers(0, samples.shape[1], size=n_points)
        out[r] = samples[rows, cols].var()
    return out


def palette_variance(samples, n_points=1000, repeats=100, seed=0) -> float:
    """Variance of randomly picked coordinate values, averaged over repeats.

    Scalar analogue of a color-palette variance: each repeat picks
    ``n_points`` random (sample, coordinate) entries and takes their
    variance; the mean over repeats is returned.
    """
    return float(_palette_draws(samples, n_points, repeats, seed).mean())


def palette_variance_spread(samples, n_points=1000, repeats=100, seed=0):
    draws = _palette_draws(samples, n_points, repeats, seed)
    return float(draws.mean()), float(draws.std())


def discrete_w2(points, weights_a, weights_b) -> float:
    """Exact squared-quadratic transport cost between two weightings of a
    common support, via the dense transportation LP (general weights)."""
    points = as_batch(points, name="points")
    n = points.shape[0]
    if n > 64:
        raise ConfigError(f"transportation LP capped at 64 atoms, got {n}")
    wa = np.asarray(weights_a, dtype=np.float64)
    wb = np.asarray(weights_b, dtype=np.float64)
    if wa.shape != (n,) or wb.shape != (n,):
        raise ShapeError("weights must match the support size")
    diff = points[:, None, :] - points[None, :, :]
    cost = np.sum(diff * diff, axis=2).reshape(-1)
    # marginal constraints; the last column constraint is redundant and dropped
    a_eq = []
    b_eq = []
    for i in range(n):
        row = np.zeros(n * n)
        row[i * n : (i + 1) * n] = 1.0
        a_eq.append(row)
        b_eq.append(wa[i])
    for j in range(n - 1):
        col = np.zeros(n * n)
        col[j::n] = 1.0
        a_eq.append(col)
        b_eq.append(wb[j])
    res = linprog(cost, A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    if not res.success:
        raise NumericError(f"transportation LP failed: {res.message}")
    return float(res.fun)


def _kl_discrete(w, q):
    if np.any((q <= 0) & (w > 0)):
        raise DomainError("KL undefined: mixture puts mass where the reference has none")
    pos = w > 0
    return float(np.sum(w[pos] * np.log(w[pos] / q[pos])))


@dataclass
class FvSlope:
    """Fitted log-log slope of eps -> D(Q + eps*(P - Q), Q)."""

    kind: str
    slope: float
    eps_used: np.ndarray
    values: np.ndarray


def fv_slope(kind, Q: DiscreteAtoms, P: DiscreteAtoms, eps_grid, kernel=None) -> FvSlope:
    """Scaling exponent of a discrepancy along the mixture path toward P.

    Evaluates D(Q + eps*(P-Q), Q) exactly on the shared finite support for
    each eps (KL in closed form, squared kernel discrepancy from the Gram
    matrix, squared-quadratic transport by the transportation LP) and fits
    the slope of log D against log eps by least squares. Grid points where
    D falls below 1e-14 are excluded; fewer than 3 usable points is an
    error. A slope near 2 certifies a vanishing first-order term.
    """
    if kind not in ("kl", "mmd2", "w2"):
        raise ConfigError(f"unknown discrepancy kind {kind!r}")
    if not isinstance(Q, DiscreteAtoms) or not isinstance(P, DiscreteAtoms):
        raise ConfigError("fv_slope needs DiscreteAtoms on both sides")
    if Q.points.shape[0] > 64:
        raise ConfigError(f"support capped at 64 atoms, got {Q.points.shape[0]}")
    if Q.points.shape != P.points.shape or not np.allclose(Q.points, P.points):
        raise ConfigError("P and Q must share a common finite support")
    eps_grid = np.asarray(eps_grid, dtype=np.float64)
    if eps_grid.size < 5 or np.any(eps_grid <= 0) or np.any(eps_grid > 0.1):
        raise ConfigError("eps grid must have >= 5 points inside (0, 0.1]")
    q = Q.weights
    delta = P.weights - q
    if kind == "mmd2" and kernel is None:
        kernel = RbfKernel(median_bandwidth(Q.points))
    values = np.empty(eps_grid.size)
    for i, eps in enumerate(eps_grid):
        w = q + eps * delta
        if kind == "kl":
            values[i] = _kl_discrete(w, q)
        elif kind == "mmd2":
            d = w - q
            values[i] = float(d @ kernel.gram(Q.points, Q.points) @ d)
        else:
            values[i] = discrete_w2(Q.points, w, q)
    usable = values > 1e-14
    if usable.sum() < 3:
        raise DomainError(
            f"only {int(usable.sum())} usable grid points (discrepancy at floor); widen the grid"
        )
    slope = float(np.polyfit(np.log(eps_grid[usable]), np.log(values[usable]), 1)[0])
    return FvSlope(kind=kind, slope=slope, eps_used=eps_grid[usable], values=values[usable])
