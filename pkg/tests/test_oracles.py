import itertools

import numpy as np
import pytest

from otlab import (
    ConfigError,
    DomainError,
    Gaussian,
    Mae,
    MonotoneRearrangement1D,
    Quadratic,
    bures_wasserstein_cost,
    discrete_ot,
    example1_solution,
    gaussian_ot_map,
)


def test_gaussian_map_1d_closed_form():
    t = gaussian_ot_map([0.0], [[1.0]], [2.0], [[4.0]])
    x = np.linspace(-3, 3, 11)[:, None]
    np.testing.assert_allclose(t(x), 2.0 + 2.0 * x)


def test_gaussian_map_1d_agrees_with_monotone_rearrangement():
    n = 100_000
    p = Gaussian([0.0], [[1.0]], seed=0)
    q = Gaussian([2.0], [[4.0]], seed=1)
    mono = MonotoneRearrangement1D(p.sample(n), q.sample(n))
    t = gaussian_ot_map([0.0], [[1.0]], [2.0], [[4.0]])
    grid = np.linspace(-2.0, 2.0, 41)[:, None]
    assert np.max(np.abs(mono(grid) - t(grid))) < 1e-2 * np.max(np.abs(t(grid)))


def test_gaussian_map_identity_case():
    mean = np.array([1.0, -2.0])
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    t = gaussian_ot_map(mean, cov, mean, cov)
    x = np.random.default_rng(0).standard_normal((50, 2))
    np.testing.assert_allclose(t(x), x, atol=1e-10)


def test_gaussian_map_pushforward_moments():
    rng = np.random.default_rng(4)
    mean_p, mean_q = np.array([0.5, -1.0]), np.array([2.0, 3.0])
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2))
    cov_p = a @ a.T + 0.5 * np.eye(2)
    cov_q = b @ b.T + 0.5 * np.eye(2)
    t = gaussian_ot_map(mean_p, cov_p, mean_q, cov_q)
    xs = Gaussian(mean_p, cov_p, seed=2).sample(100_000)
    ys = t(xs)
    np.testing.assert_allclose(ys.mean(axis=0), mean_q, atol=0.05)
    np.testing.assert_allclose(np.cov(ys, rowvar=False), cov_q, atol=0.08)


def test_gaussian_map_cost_matches_bures_value():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2))
    cov_p = a @ a.T + 0.4 * np.eye(2)
    cov_q = b @ b.T + 0.4 * np.eye(2)
    mean_p, mean_q = np.array([1.0, 0.0]), np.array([-1.0, 2.0])
    t = gaussian_ot_map(mean_p, cov_p, mean_q, cov_q)
    xs = Gaussian(mean_p, cov_p, seed=3).sample(200_000)
    mc_cost = np.mean(np.sum((t(xs) - xs) ** 2, axis=1))
    exact = bures_wasserstein_cost(mean_p, cov_p, mean_q, cov_q)
    assert abs(mc_cost - exact) < 0.02 * exact


def test_bures_1d_closed_form():
    # (sigma_q - sigma_p)^2 + (m_q - m_p)^2
    val = bures_wasserstein_cost([0.0], [[1.0]], [2.0], [[4.0]])
    assert val == pytest.approx((2.0 - 1.0) ** 2 + 2.0**2)


def test_degenerate_covariance_rejected():
    with pytest.raises((ConfigError, np.linalg.LinAlgError)):
        gaussian_ot_map([0.0, 0.0], [[1.0, 0.0], [0.0, 1e-15]], [0.0, 0.0], np.eye(2))


def test_monotone_rearrangement_is_nondecreasing():
    rng = np.random.default_rng(5)
    mono = MonotoneRearrangement1D(rng.standard_normal(500), rng.gamma(2.0, size=500))
    grid = np.linspace(-3, 3, 200)
    vals = mono(grid)
    assert np.all(np.diff(vals) >= 0)


def test_discrete_ot_two_atom_example():
    X = np.array([[0.0], [2.0]])
    Y = np.array([[1.0], [3.0]])
    plan = discrete_ot(X, Y, Mae())
    np.testing.assert_array_equal(plan.assignment, [0, 1])  # 0 -> 1, 2 -> 3
    assert plan.total_cost == pytest.approx(1.0)
    # enumeration over both permutations confirms optimality
    anti = 0.5 * (abs(0.0 - 3.0) + abs(2.0 - 1.0))
    assert plan.total_cost < anti


def test_discrete_ot_identity_on_equal_sets():
    X = np.random.default_rng(6).standard_normal((12, 3))
    plan = discrete_ot(X, X, Quadratic())
    np.testing.assert_array_equal(plan.assignment, np.arange(12))
    assert plan.total_cost == pytest.approx(0.0, abs=1e-12)


def test_discrete_ot_matches_full_enumeration_n7():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((7, 2))
    Y = rng.standard_normal((7, 2))
    plan = discrete_ot(X, Y, Quadratic())
    costs = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=2)
    best = min(
        np.mean([costs[i, p[i]] for i in range(7)]) for p in itertools.permutations(range(7))
    )
    assert plan.total_cost == pytest.approx(best)


def test_discrete_ot_beats_random_permutations():
    rng = np.random.default_rng(8)
    X = rng.standard_normal((7, 2))
    Y = rng.standard_normal((7, 2))
    plan = discrete_ot(X, Y, Quadratic())
    costs = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=2)
    for _ in range(1000):
        perm = rng.permutation(7)
        assert plan.total_cost <= np.mean(costs[np.arange(7), perm]) + 1e-12


def test_discrete_ot_validations():
    with pytest.raises(Exception):
        discrete_ot(np.zeros((3, 1)), np.zeros((4, 1)), Quadratic())
    with pytest.raises(ConfigError):
        discrete_ot(np.zeros((257, 1)), np.zeros((257, 1)), Quadratic())


@pytest.mark.parametrize(
    "lam,expected",
    [(0.5, (0.75, 2.75)), (1.0, (0.5, 2.5)), (1e-9, (1.0, 3.0))],
)
def test_example1_closed_form(lam, expected):
    t0, t2 = example1_solution(lam)
    assert t0 == pytest.approx(expected[0], abs=1e-6)
    assert t2 == pytest.approx(expected[1], abs=1e-6)


@pytest.mark.parametrize("lam", [0.0, 2.0, -1.0, 2.5])
def test_example1_domain_window(lam):
    with pytest.raises(DomainError):
        example1_solution(lam)
