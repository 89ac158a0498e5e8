import numpy as np
import pytest

from otlab import (
    ConfigError,
    Degradation,
    DiscreteAtoms,
    Gaussian,
    Mixture,
    SmoothField,
    make_sr_pair,
)


def test_discrete_atoms_sample_values():
    dist = DiscreteAtoms([0.0, 2.0], [0.5, 0.5], seed=3)
    batch = dist.sample(4)
    assert batch.shape == (4, 1)
    assert set(np.unique(batch)) <= {0.0, 2.0}


def test_discrete_atoms_weight_frequencies():
    dist = DiscreteAtoms([0.0, 1.0], [0.9, 0.1], seed=0)
    batch = dist.sample(20_000)
    assert abs((batch == 0.0).mean() - 0.9) < 0.02


def test_gaussian_sample_mean_clt_bound():
    n = 100_000
    dist = Gaussian(np.zeros(3), np.eye(3), seed=1)
    batch = dist.sample(n)
    assert np.all(np.abs(batch.mean(axis=0)) < 3.0 / np.sqrt(n))


def test_same_seed_identical_batches():
    a = Gaussian([0.0], [[1.0]], seed=7).sample(32)
    b = Gaussian([0.0], [[1.0]], seed=7).sample(32)
    np.testing.assert_array_equal(a, b)


def test_substream_independent_of_consumption():
    p = Gaussian([0.0], [[1.0]], seed=11)
    fresh = Gaussian([0.0], [[1.0]], seed=11)
    p.sample(100)  # consume the parent stream
    np.testing.assert_array_equal(p.substream("eval").sample(8), fresh.substream("eval").sample(8))
    assert not np.allclose(p.substream("a").sample(8), p.substream("b").sample(8))


def test_non_spd_cov_rejected_at_construction():
    with pytest.raises(ConfigError):
        Gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(ConfigError):
        Gaussian([0.0, 0.0], [[1.0, 0.5], [0.4, 1.0]])  # asymmetric


def test_batch_size_validation():
    with pytest.raises(ConfigError):
        Gaussian([0.0], [[1.0]]).sample(0)


def test_mixture_weight_validation():
    comps = [Gaussian([0.0], [[1.0]]), Gaussian([5.0], [[1.0]])]
    with pytest.raises(ConfigError):
        Mixture([0.5, 0.6], comps)
    with pytest.raises(ConfigError):
        Mixture([-0.5, 1.5], comps)
    with pytest.raises(ConfigError):
        Mixture([0.5, 0.5], [Gaussian([0.0], [[1.0]]), Gaussian([0.0, 0.0], np.eye(2))])


def test_mixture_proportions_and_determinism():
    comps = [Gaussian([-10.0], [[0.5]]), Gaussian([10.0], [[0.5]])]
    mix = Mixture([0.25, 0.75], comps, seed=2)
    batch = mix.sample(20_000)
    assert abs((batch > 0).mean() - 0.75) < 0.02
    again = Mixture([0.25, 0.75], comps, seed=2).sample(20_000)
    np.testing.assert_array_equal(batch, again)


def test_mixture_choice_stream_decoupled_from_component_draws():
    # same seed, different component spreads: the selection pattern must match
    far = 100.0
    a = Mixture([0.6, 0.4], [Gaussian([-far], [[1.0]]), Gaussian([far], [[1.0]])], seed=9)
    b = Mixture([0.6, 0.4], [Gaussian([-far], [[0.25]]), Gaussian([far], [[4.0]])], seed=9)
    np.testing.assert_array_equal(a.sample(500) > 0, b.sample(500) > 0)


def test_degradation_dims_and_constants():
    deg = Degradation.box(width=4, stride=4)
    hr = np.full((3, 64), 2.5)
    lr = deg.apply(hr)
    assert lr.shape == (3, 16)
    np.testing.assert_allclose(lr, 2.5)


def test_degradation_kernel_normalized():
    deg = Degradation([2.0, 2.0], stride=2)
    np.testing.assert_allclose(deg.kernel, [0.5, 0.5])


def test_make_sr_pair_dims():
    lr, hr = make_sr_pair(64, Degradation.box(4, 4), seed=0)
    assert hr.dim == 64
    assert lr.dim == 16
    assert lr.sample(5).shape == (5, 16)


def test_make_sr_pair_rejects_indivisible_dims():
    with pytest.raises(ConfigError):
        make_sr_pair(62, Degradation.box(4, 4), seed=0)


def test_lr_variance_below_hr_variance():
    lr, hr = make_sr_pair(64, Degradation.box(4, 4), seed=5)
    n = 100_000 // 64  # ~1e5 scalar draws per side
    var_lr = lr.sample(n * 4).var()
    var_hr = hr.sample(n * 4).var()
    assert var_lr < var_hr


def test_sr_pair_is_unpaired():
    # interleaving draws on one side must not perturb the other side's stream
    lr1, hr1 = make_sr_pair(32, Degradation.box(4, 4), seed=8)
    lr2, hr2 = make_sr_pair(32, Degradation.box(4, 4), seed=8)
    a = lr1.sample(4)
    hr1.sample(100)
    b = lr1.sample(4)
    c = lr2.sample(4)
    d = lr2.sample(4)
    np.testing.assert_array_equal(a, c)
    np.testing.assert_array_equal(b, d)


def test_smooth_field_is_smoother_than_white_noise():
    field = SmoothField(64, seed=1)
    x = field.sample(2000)
    lag1 = np.mean(x[:, :-1] * x[:, 1:]) / x.var()
    assert lag1 > 0.3  # strong positive neighbor correlation
