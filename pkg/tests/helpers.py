"""Shared test utilities, chiefly the finite-difference gradient oracle.

The oracle only ever evaluates forward passes, so it stays independent of
the reverse-mode path it is used to check.
"""

import numpy as np

FD_STEP = 1e-5


def fd_gradient(fn, arr, h=FD_STEP):
    """Central-difference gradient of a scalar function of one array."""
    arr = np.asarray(arr, dtype=np.float64)
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        hi = fn(arr)
        flat[i] = orig - h
        lo = fn(arr)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * h)
    return grad


def rel_err(a, b):
    """Scale-aware relative error between two gradient arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)
    return float(np.max(np.abs(a - b)) / scale)


def random_mlp_dims(rng, max_hidden_layers=2, max_width=64):
    """Random layer spec for a net of at most 3 linear layers."""
    n_hidden = int(rng.integers(0, max_hidden_layers + 1))
    dims = [int(rng.integers(1, 6))]
    for _ in range(n_hidden):
        dims.append(int(rng.integers(2, max_width + 1)))
    dims.append(int(rng.integers(1, 4)))
    return dims


def two_atom_objective(t0, t2, lam):
    """Regularized two-atom objective (vectorized over t0/t2 grids)."""
    branch_a = 0.5 * (t0 - 1.0) ** 2 + 0.5 * (t2 - 3.0) ** 2
    branch_b = 0.5 * (t0 - 3.0) ** 2 + 0.5 * (t2 - 1.0) ** 2
    content = 0.5 * lam * (np.abs(t0) + np.abs(t2 - 2.0))
    return np.minimum(branch_a, branch_b) + content


def two_atom_grid_minimum(lam, lo=-1.0, hi=4.0, step=1e-3):
    """Brute-force minimizer of the two-atom objective on a dense grid.

    Full evaluation over the product grid, chunked over rows to bound
    memory; independent of any gradient-based solve.
    """
    axis = np.arange(lo, hi + step / 2, step)
    best_val = np.inf
    best = (np.nan, np.nan)
    chunk = 500
    for start in range(0, axis.size, chunk):
        t0 = axis[start : start + chunk][:, None]
        t2 = axis[None, :]
        vals = two_atom_objective(t0, t2, lam)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best = (float(t0[idx[0], 0]), float(axis[idx[1]]))
    return best, best_val
