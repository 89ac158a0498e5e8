import numpy as np
import pytest
from helpers import two_atom_grid_minimum

from otlab import (
    CompositeUpsample,
    ConfigError,
    ConvergenceError,
    Degradation,
    DiscreteAtoms,
    DivergenceError,
    Gaussian,
    GanConfig,
    Mlp,
    Mse,
    OtsConfig,
    Quadratic,
    RbfKernel,
    Upsampler,
    discrete_ot,
    example1_solution,
    gaussian_ot_map,
    l2_uvp,
    make_sr_pair,
    median_bandwidth,
    mmd2,
    scale_cost,
    solve_example1,
    train_gan,
    train_ots,
)
from otlab.costs import Dynamic
from otlab.seeding import child


def _nets(seed, dim_in, dim_out, width=64, residual=False):
    map_net = Mlp([dim_in, width, width, dim_out], residual=residual, seed=child(seed, "T"))
    potential = Mlp([dim_out, width, width, 1], seed=child(seed, "f"))
    return potential, map_net


def test_config_validation():
    with pytest.raises(ConfigError):
        OtsConfig(cost=Mse(), map_iters_per_potential=0)
    with pytest.raises(ConfigError):
        OtsConfig(cost=Mse(), lr_schedule="warmup")
    with pytest.raises(ConfigError):
        GanConfig(content_weight=-1.0)
    with pytest.raises(ConfigError):
        train_ots(
            Gaussian([0.0], [[1.0]], 0),
            Gaussian([0.0], [[1.0]], 1),
            Mlp([1, 8, 2], seed=0),  # potential output must be scalar
            Mlp([1, 8, 1], seed=1),
            OtsConfig(cost=Mse(), potential_iters=1),
        )


def test_ots_equal_distributions_stays_at_identity():
    seed = 3
    p = Gaussian(np.zeros(2), np.eye(2), seed=child(seed, "P"))
    q = Gaussian(np.zeros(2), np.eye(2), seed=child(seed, "Q"))
    potential, map_net = _nets(seed, 2, 2, residual=True)
    cfg = OtsConfig(
        cost=Mse(),
        potential_iters=600,
        lr_potential=1e-3,
        lr_map=1e-3,
        lr_schedule="cosine",
        batch_size=128,
    )
    map_net, _, _ = train_ots(p, q, potential, map_net, cfg)
    identity = lambda x: x
    assert l2_uvp(map_net.predict, identity, p, q, n=50_000, seed=0) < 1.0


def test_ots_1d_gaussian_recovers_affine_map(ots_1d_run):
    run = ots_1d_run
    uvp = l2_uvp(run["map"].predict, run["t_star"], run["P"], run["Q"], n=100_000, seed=0)
    assert uvp < 2.0
    probe = run["map"].predict(np.array([[-1.0], [0.0], [1.0]])).ravel()
    np.testing.assert_allclose(probe, [0.0, 2.0, 4.0], atol=0.35)


def test_ots_saddle_value_matches_oracle_cost(ots_1d_run):
    # dual estimate mean_Q f + mean_P [c(x,T(x)) - f(T(x))] on held-out batches
    run = ots_1d_run
    xs = run["P"].substream("heldout-x").sample(100_000)
    ys = run["Q"].substream("heldout-y").sample(100_000)
    f, t = run["potential"], run["map"]
    mapped = t.predict(xs)
    cost_term = Mse().per_sample(xs, mapped).data.mean()
    dual = f.predict(ys).mean() + cost_term - f.predict(mapped).mean()
    assert abs(dual - run["oracle_cost"]) < 0.05 * run["oracle_cost"]


def test_ots_trace_shape_and_determinism():
    def run():
        p = Gaussian([0.0], [[1.0]], seed=child(9, "P"))
        q = Gaussian([1.0], [[1.0]], seed=child(9, "Q"))
        potential, map_net = _nets(9, 1, 1, width=16, residual=True)
        cfg = OtsConfig(cost=Mse(), potential_iters=40, batch_size=32, lr_potential=1e-3, lr_map=1e-3)
        _, _, trace = train_ots(p, q, potential, map_net, cfg)
        return trace

    a, b = run(), run()
    assert a.columns == ("iter", "loss_f", "loss_T")
    assert len(a.rows) == 40
    assert a.rows == b.rows  # bit-identical loss sequence


def test_ots_divergence_guard():
    p = Gaussian([0.0], [[1.0]], seed=child(11, "P"))
    q = Gaussian([1.0], [[1.0]], seed=child(11, "Q"))
    potential, map_net = _nets(11, 1, 1, width=16)
    cfg = OtsConfig(cost=Mse(), potential_iters=400, lr_potential=1e4, lr_map=1e4, batch_size=16)
    with pytest.raises(DivergenceError) as exc_info:
        train_ots(p, q, potential, map_net, cfg)
    assert exc_info.value.trace is not None


def test_ots_map_invariant_under_cost_scaling():
    t_star = gaussian_ot_map([0.0], [[1.0]], [2.0], [[4.0]])
    uvps = {}
    for lam in (0.1, 10.0):
        p = Gaussian([0.0], [[1.0]], seed=child(7, "P"))
        q = Gaussian([2.0], [[4.0]], seed=child(7, "Q"))
        potential, map_net = _nets(7, 1, 1, residual=True)
        cfg = OtsConfig(
            cost=scale_cost(Mse(), lam),
            potential_iters=4000,
            lr_potential=1e-3,
            lr_map=1e-3,
            lr_schedule="cosine",
            batch_size=128,
        )
        map_net, _, _ = train_ots(p, q, potential, map_net, cfg)
        uvps[lam] = l2_uvp(map_net.predict, t_star, p, q, n=50_000, seed=3)
    assert abs(uvps[0.1] - uvps[10.0]) < 1.0


def test_ots_dynamic_cost_refresh_runs():
    lr_dist, hr_dist = make_sr_pair(16, Degradation.box(2, 2), seed=child(13, "sr"))
    cost = CompositeUpsample(Mse(), Upsampler("linear", 2))
    potential = Mlp([16, 32, 1], seed=child(13, "f"))
    map_net = Mlp([8, 32, 16], seed=child(13, "T"))
    cfg = OtsConfig(
        cost=cost, potential_iters=60, cost_refresh_every=20, batch_size=32,
        lr_potential=1e-3, lr_map=1e-3,
    )
    map_net, _, trace = train_ots(lr_dist, hr_dist, potential, map_net, cfg)
    assert len(trace.rows) == 60


def test_ots_refresh_requires_liftable_cost():
    p = Gaussian([0.0], [[1.0]], seed=child(14, "P"))
    q = Gaussian([1.0], [[1.0]], seed=child(14, "Q"))
    potential, map_net = _nets(14, 1, 1, width=8, residual=True)
    cfg = OtsConfig(cost=Mse(), potential_iters=5, cost_refresh_every=2, batch_size=8)
    with pytest.raises(ConfigError):
        train_ots(p, q, potential, map_net, cfg)


def test_gan_high_content_weight_pins_map_to_identity():
    seed = 21
    p = Gaussian([0.0], [[1.0]], seed=child(seed, "P"))
    q = Gaussian([2.0], [[4.0]], seed=child(seed, "Q"))
    gen = Mlp([1, 64, 64, 1], residual=True, seed=child(seed, "gen"))
    disc = Mlp([1, 64, 64, 1], seed=child(seed, "disc"))
    cfg = GanConfig(content_weight=1e5, generator_iters=200, lr=1e-3, batch_size=128, seed=seed)
    gen, _ = train_gan(p, q, gen, disc, cfg, Mse())
    xs = p.substream("probe").sample(2000)
    assert np.mean((gen.predict(xs) - xs) ** 2) < 0.01


def test_gan_zero_content_weight_ignores_content_cost_entirely():
    # at weight 0 the content term is dropped, so even a pathological cost
    # must leave training bit-identical; the map still trains adversarially
    def run(content_cost):
        seed = 22
        p = Gaussian([0.0], [[1.0]], seed=child(seed, "P"))
        q = Gaussian([1.0], [[2.25]], seed=child(seed, "Q"))
        gen = Mlp([1, 32, 32, 1], residual=True, seed=child(seed, "gen"))
        disc = Mlp([1, 32, 32, 1], seed=child(seed, "disc"))
        cfg = GanConfig(content_weight=0.0, generator_iters=120, lr=1e-3, batch_size=64, seed=seed)
        return train_gan(p, q, gen, disc, cfg, content_cost)

    gen_a, trace_a = run(Mse())
    gen_b, trace_b = run(scale_cost(Mse(), 1e12))
    assert trace_a.rows == trace_b.rows
    assert trace_a.columns == ("iter", "loss_disc", "loss_gen", "gp")
    assert len(trace_a.rows) == 120
    probe = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_array_equal(gen_a.predict(probe), gen_b.predict(probe))
    # adversarial pressure moved the map off its identity start
    moved = float(np.mean((gen_a.predict(probe) - probe) ** 2))
    assert moved > 1e-3
    # pushforward stays in kernel range (the sweep comparisons live in the
    # bench experiment, where this cell's discrepancy is judged against Q)
    xs = np.random.default_rng(0).standard_normal((500, 1))
    qs = Gaussian([1.0], [[2.25]], seed=99).sample(500)
    assert mmd2(gen_a.predict(xs), qs, RbfKernel(median_bandwidth(qs))) < 2.0


def test_gan_bias_grows_toward_extreme_content_weight():
    seed = 23
    t_star = gaussian_ot_map([0.0], [[1.0]], [1.0], [[2.25]])
    uvps = {}
    for lam in (1.0, 1e5):
        p = Gaussian([0.0], [[1.0]], seed=child(seed, "P", int(lam)))
        q = Gaussian([1.0], [[2.25]], seed=child(seed, "Q", int(lam)))
        gen = Mlp([1, 64, 64, 1], residual=True, seed=child(seed, "gen", int(lam)))
        disc = Mlp([1, 64, 64, 1], seed=child(seed, "disc", int(lam)))
        cfg = GanConfig(content_weight=lam, generator_iters=800, lr=1e-3, batch_size=128, seed=seed)
        gen, _ = train_gan(p, q, gen, disc, cfg, Mse())
        uvps[lam] = l2_uvp(gen.predict, t_star, p, q, n=50_000, seed=5)
    assert uvps[1e5] > 2.0 * uvps[1.0]


def test_gan_determinism():
    def run():
        p = Gaussian([0.0], [[1.0]], seed=child(24, "P"))
        q = Gaussian([1.0], [[1.0]], seed=child(24, "Q"))
        gen = Mlp([1, 16, 1], residual=True, seed=child(24, "gen"))
        disc = Mlp([1, 16, 1], seed=child(24, "disc"))
        cfg = GanConfig(generator_iters=20, disc_iters_per_gen=3, batch_size=16, lr=1e-3, seed=24)
        _, trace = train_gan(p, q, gen, disc, cfg, Mse())
        return trace.rows

    assert run() == run()


def test_gan_divergence_guard():
    p = Gaussian([0.0], [[1.0]], seed=child(25, "P"))
    q = Gaussian([1.0], [[1.0]], seed=child(25, "Q"))
    gen = Mlp([1, 16, 1], residual=True, seed=child(25, "gen"))
    disc = Mlp([1, 16, 1], seed=child(25, "disc"))
    cfg = GanConfig(generator_iters=300, disc_iters_per_gen=2, batch_size=16, lr=1e5, seed=25)
    with pytest.raises(DivergenceError):
        train_gan(p, q, gen, disc, cfg, Mse())


def test_ots_on_two_atoms_matches_assignment_oracle():
    seed = 1
    p = DiscreteAtoms([0.0, 2.0], seed=child(seed, "P"))
    q = DiscreteAtoms([1.0, 3.0], seed=child(seed, "Q"))
    potential, map_net = _nets(seed, 1, 1, residual=True)
    cfg = OtsConfig(
        cost=Mse(),
        potential_iters=1200,
        lr_potential=1e-3,
        lr_map=1e-3,
        lr_schedule="cosine",
        batch_size=128,
    )
    map_net, _, _ = train_ots(p, q, potential, map_net, cfg)
    plan = discrete_ot(np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]]), Mse())
    np.testing.assert_array_equal(plan.assignment, [0, 1])
    vals = map_net.predict(np.array([[0.0], [2.0]])).ravel()
    assert abs(vals[0] - 1.0) < 0.05
    assert abs(vals[1] - 3.0) < 0.05


@pytest.mark.parametrize("lam", [0.2, 0.6, 1.0, 1.4, 1.8])
def test_solve_example1_matches_closed_form(lam):
    t0, t2 = solve_example1(lam)
    e0, e2 = example1_solution(lam)
    assert abs(t0 - e0) < 1e-3
    assert abs(t2 - e2) < 1e-3


def test_solve_example1_matches_grid_search_oracle():
    for lam in np.arange(0.2, 1.81, 0.2):
        t0, t2 = solve_example1(float(lam))
        (g0, g2), _ = two_atom_grid_minimum(float(lam))
        assert abs(t0 - g0) < 2e-3
        assert abs(t2 - g2) < 2e-3


def test_solve_example1_validation_and_convergence_error():
    with pytest.raises(ConfigError):
        solve_example1(0.0)
    with pytest.raises(ConfigError):
        solve_example1(2.0)
    with pytest.raises(ConvergenceError) as exc_info:
        solve_example1(1.0, max_iters=3)
    assert len(exc_info.value.trajectory) == 4
