import numpy as np
import pytest

from otlab import Gaussian, Mlp, Mse, OtsConfig, gaussian_ot_map, train_ots
from otlab.seeding import child


@pytest.fixture(scope="session")
def ots_1d_run():
    """One converged 1-D Gaussian->Gaussian training run, shared by tests."""
    seed = 0
    p = Gaussian([0.0], [[1.0]], seed=child(seed, "P"))
    q = Gaussian([2.0], [[4.0]], seed=child(seed, "Q"))
    potential = Mlp([1, 64, 64, 1], seed=child(seed, "f"))
    map_net = Mlp([1, 64, 64, 1], residual=True, seed=child(seed, "T"))
    cfg = OtsConfig(
        cost=Mse(),
        potential_iters=1200,
        map_iters_per_potential=10,
        lr_potential=1e-3,
        lr_map=1e-3,
        lr_schedule="cosine",
        batch_size=128,
    )
    map_net, potential, trace = train_ots(p, q, potential, map_net, cfg)
    return {
        "P": p,
        "Q": q,
        "map": map_net,
        "potential": potential,
        "trace": trace,
        "cfg": cfg,
        "t_star": gaussian_ot_map([0.0], [[1.0]], [2.0], [[4.0]]),
        "oracle_cost": (2.0 - 1.0) ** 2 + 2.0**2,  # 1-D closed form, mse == quadratic
    }
