"""Exact and analytic ground truths that trained maps are judged against.

These stay independent of the training code: closed-form Gaussian transport
maps, exact assignment on discrete supports, 1-D monotone rearrangement,
and the closed-form two-atom solution of the content-regularized objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .costs import CostFn
from .exceptions import ConfigError, DomainError, ShapeError
from .validation import as_batch, as_vector, check_spd

EIG_FLOOR = 1e-12


def _spd_power(mat, power):
    """mat^power via eigendecomposition; degenerate spectra are rejected."""
    vals, vecs = np.linalg.eigh(mat)
    if np.any(vals < EIG_FLOOR):
        raise ConfigError(f"matrix is numerically degenerate (min eigenvalue {vals.min():.3e})")
    return (vecs * vals**power) @ vecs.T


class GaussianOTMap:
    """Affine map pushing N(mean_p, cov_p) exactly onto N(mean_q, cov_q).

    For the squared-Euclidean cost the optimal map is
        T(x) = mean_q + A (x - mean_p),
        A = cov_p^{-1/2} (cov_p^{1/2} cov_q cov_p^{1/2})^{1/2} cov_p^{-1/2}.
    """

    def __init__(self, mean_p, cov_p, mean_q, cov_q):
        self.mean_p = as_vector(np.atleast_1d(mean_p), name="mean_p")
        self.mean_q = as_vector(np.atleast_1d(mean_q), name="mean_q")
        self.cov_p = check_spd(np.atleast_2d(cov_p), name="cov_p")
        self.cov_q = check_spd(np.atleast_2d(cov_q), name="cov_q")
        if self.mean_p.shape != self.mean_q.shape:
            raise ShapeError("source and target dims differ")
        half = _spd_power(self.cov_p, 0.5)
        inv_half = _spd_power(self.cov_p, -0.5)
        mid = _spd_power(half @ self.cov_q @ half, 0.5)
        self.matrix = inv_half @ mid @ inv_half

    @property
    def dim(self):
        return self.mean_p.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = as_batch(x, dim=self.dim, name="x")
        return self.mean_q[None, :] + (x - self.mean_p[None, :]) @ self.matrix.T


def gaussian_ot_map(mean_p, cov_p, mean_q, cov_q) -> GaussianOTMap:
    return GaussianOTMap(mean_p, cov_p, mean_q, cov_q)


def bures_wasserstein_cost(mean_p, cov_p, mean_q, cov_q) -> float:
    """Squared quadratic transport cost between two Gaussians:
    ||m_p - m_q||^2 + tr(S_p + S_q - 2 (S_p^{1/2} S_q S_p^{1/2})^{1/2})."""
    mean_p = as_vector(np.atleast_1d(mean_p))
    mean_q = as_vector(np.atleast_1d(mean_q))
    cov_p = check_spd(np.atleast_2d(cov_p), name="cov_p")
    cov_q = check_spd(np.atleast_2d(cov_q), name="cov_q")
    half = _spd_power(cov_p, 0.5)
    cross = _spd_power(half @ cov_q @ half, 0.5)
    return float(np.sum((mean_p - mean_q) ** 2) + np.trace(cov_p + cov_q - 2.0 * cross))


class MonotoneRearrangement1D:
    """Nondecreasing sample-quantile map between two 1-D sample sets."""

    def __init__(self, samples_p, samples_q):
        self.xs = np.sort(np.ravel(np.asarray(samples_p, dtype=np.float64)))
        self.ys = np.sort(np.ravel(np.asarray(samples_q, dtype=np.float64)))
        if self.xs.size < 2 or self.ys.size < 2:
            raise ConfigError("need at least two samples per side")
        self._grid_p = (np.arange(self.xs.size) + 0.5) / self.xs.size
        self._grid_q = (np.arange(self.ys.size) + 0.5) / self.ys.size

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1)
        ranks = np.interp(flat, self.xs, self._grid_p)
        out = np.interp(ranks, self._grid_q, self.ys)
        return out.reshape(x.shape)


@dataclass
class DiscretePlan:
    """Optimal bijection between equal-size point sets under a cost."""

    assignment: np.ndarray  # assignment[i] = index matched to point i
    total_cost: float  # mean of the matched per-pair costs


def pairwise_cost_matrix(X, Y, cost: CostFn) -> np.ndarray:
    X = as_batch(X, name="X")
    Y = as_batch(Y, name="Y")
    n, m = X.shape[0], Y.shape[0]
    x_rep = np.repeat(X, m, axis=0)
    y_til = np.tile(Y, (n, 1))
    vals = cost.per_sample(x_rep, y_til).data
    return vals.reshape(n, m)


def discrete_ot(X, Y, cost: CostFn) -> DiscretePlan:
    """Exact optimal assignment between uniform empirical measures.

    Solved as a minimum-cost bijection (Hungarian-class exact solver);
    capped at n <= 256 points where exactness is cheap.
    """
    X = as_batch(X, name="X")
    Y = as_batch(Y, name="Y")
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"point counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] > 256:
        raise ConfigError(f"discrete_ot capped at 256 points, got {X.shape[0]}")
    matrix = pairwise_cost_matrix(X, Y, cost)
    rows, cols = linear_sum_assignment(matrix)
    assignment = np.empty(X.shape[0], dtype=int)
    assignment[rows] = cols
    return DiscretePlan(assignment=assignment, total_cost=float(matrix[rows, cols].mean()))


def example1_solution(lam: float):
    """Closed-form minimizer of the two-atom regularized objective.

    Sources at {0, 2}, targets at {1, 3}, absolute-difference content cost,
    exact squared-quadratic transport discrepancy: the unique minimizer is
    (1 - lam/2, 3 - lam/2). Valid for 0 < lam < 2; outside that window the
    piecewise structure of the objective changes and the formula is not
    asserted.
    """
    lam = float(lam)
    if not 0.0 < lam < 2.0:
        raise DomainError(f"closed form requires 0 < lam < 2, got {lam}")
    return 1.0 - lam / 2.0, 3.0 - lam / 2.0
