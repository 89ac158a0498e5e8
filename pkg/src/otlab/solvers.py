"""Adversarial map solvers and their sklearn-style estimator wrappers.

``train_ots`` alternates one unconstrained potential ascent step with
``map_iters_per_potential`` inner map descent steps on
``mean[c(x, T(x)) - f(T(x))]``: the map solves the inner problem, the
potential the outer one, and no regularization weight exists. ``train_gan``
is the baseline it is compared against: a Wasserstein-1 critic with
gradient penalty, where the generator solves the outer problem and carries
an explicit content-weight hyperparameter.

``OTSolver`` and ``GANSolver`` wrap the trainers as fit/transform
estimators over unpaired sample batches (or Distribution objects), so the
learned maps compose with the wider scikit-learn ecosystem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import autodiff as ad
from .costs import CompositeUpsample, CostFn, Dynamic, Upsampler, cost_by_name, refresh_dynamic
from .distributions import DiscreteAtoms, Distribution
from .exceptions import ConfigError, ConvergenceError, DivergenceError, NumericError
from .nn import Mlp, freeze, input_gradient
from .optim import Adam
from .seeding import child, rng_from
from .validation import as_batch


@dataclass
class TrainTrace:
    """Per-iteration loss records plus wall-clock, and nothing else: the
    CSV body must be bit-reproducible, so timing lives in separate fields."""

    columns: tuple
    rows: list = field(default_factory=list)
    wall_times: list = field(default_factory=list)
    total_seconds: float = 0.0

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("# columns: " + ",".join(self.columns) + "\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])


def _lr_factor(schedule, it, total):
    if schedule == "constant":
        return 1.0
    if schedule == "cosine":
        return 0.5 * (1.0 + np.cos(np.pi * (it - 1) / max(total - 1, 1)))
    raise ConfigError(f"unknown lr schedule {schedule!r}")


@dataclass
class OtsConfig:
    cost: CostFn = None
    potential_iters: int = 2000
    map_iters_per_potential: int = 10
    lr_potential: float = 1e-4
    lr_map: float = 1e-4
    lr_schedule: str = "constant"
    batch_size: int = 64
    cost_refresh_every: int | None = None
    divergence_limit: float = 1e8

    def __post_init__(self):
        if self.map_iters_per_potential < 1:
            raise ConfigError("map_iters_per_potential must be >= 1")
        if self.batch_size < 1 or self.potential_iters < 1:
            raise ConfigError("batch_size and potential_iters must be >= 1")
        if self.cost_refresh_every is not None and self.cost_refresh_every < 1:
            raise ConfigError("cost_refresh_every must be >= 1 when set")
        _lr_factor(self.lr_schedule, 1, 1)


@dataclass
class GanConfig:
    content_weight: float = 1.0
    gp_weight: float = 10.0
    disc_iters_per_gen: int = 10
    lr: float = 1e-4
    # low-momentum Adam is the standard stabilizer for penalized critics;
    # beta1=0.9 makes the adversarial pair orbit instead of converge
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    batch_size: int = 64
    generator_iters: int = 2000
    divergence_limit: float = 1e8
    seed: int = 0

    def __post_init__(self):
        if self.content_weight < 0:
            raise ConfigError("content_weight must be >= 0")
        if self.disc_iters_per_gen < 1 or self.batch_size < 1 or self.generator_iters < 1:
            raise ConfigError("iteration counts and batch_size must be >= 1")


def _guard(value, limit, trace, what):
    if not np.isfinite(value) or abs(value) > limit:
        raise DivergenceError(f"{what} diverged: loss {value!r} exceeds {limit:g}", trace)


def train_ots(P: Distribution, Q: Distribution, potential: Mlp, map_net: Mlp, cfg: OtsConfig):
    """Alternating saddle-point training of an unregularized transport map.

    Per outer iteration: one potential step descending
    ``mean f(T(x)) - mean f(y)`` (ascent on the dual), then
    ``map_iters_per_potential`` map steps descending
    ``mean[c(x, T(x)) - f(T(x))]`` against a frozen potential. If
    ``cost_refresh_every`` is set, the cost's frozen lift is replaced by a
    snapshot of the current map at that cadence.

    Returns (map_net, potential, trace).
    """
    if potential.dim_out != 1:
        raise ConfigError(f"potential must output a scalar, got dim {potential.dim_out}")
    if map_net.dim_in != P.dim or map_net.dim_out != Q.dim:
        raise ConfigError(
            f"map dims {map_net.dims} do not connect P (dim {P.dim}) to Q (dim {Q.dim})"
        )
    cost = cfg.cost
    if cost is None:
        raise ConfigError("OtsConfig.cost is required")
    adam_f = Adam(potential.parameters(), lr=cfg.lr_potential)
    adam_t = Adam(map_net.parameters(), lr=cfg.lr_map)
    trace = TrainTrace(columns=("iter", "loss_f", "loss_T"))
    start = time.perf_counter()
    try:
        for it in range(1, cfg.potential_iters + 1):
            factor = _lr_factor(cfg.lr_schedule, it, cfg.potential_iters)
            adam_f.lr = cfg.lr_potential * factor
            adam_t.lr = cfg.lr_map * factor
            x = P.sample(cfg.batch_size)
            y = Q.sample(cfg.batch_size)
            mapped = map_net.predict(x)
            loss_f = ad.sub(ad.mean(potential(mapped)), ad.mean(potential(y)))
            potential.tape.backward(loss_f)
            adam_f.step()
            loss_f_val = loss_f.item()

            frozen_f = freeze(potential)
            loss_t_val = np.nan
            for _ in range(cfg.map_iters_per_potential):
                xk = P.sample(cfg.batch_size)
                y_hat = map_net(xk)
                loss_t = ad.sub(
                    ad.mean(cost.per_sample(xk, y_hat)), ad.mean(frozen_f(y_hat))
                )
                map_net.tape.backward(loss_t)
                adam_t.step()
                loss_t_val = loss_t.item()

            trace.rows.append((float(it), loss_f_val, loss_t_val))
            trace.wall_times.append(time.perf_counter() - start)
            _guard(loss_f_val, cfg.divergence_limit, trace, "potential")
            _guard(loss_t_val, cfg.divergence_limit, trace, "map")

            if cfg.cost_refresh_every and it % cfg.cost_refresh_every == 0:
                if isinstance(cost, Dynamic):
                    cost = refresh_dynamic(cost, map_net)
                elif isinstance(cost, CompositeUpsample):
                    # initial lift is the fixed upsampler; from here on the
                    # frozen current map takes its place
                    cost = Dynamic(cost.base, freeze(map_net))
                else:
                    raise ConfigError(
                        "cost_refresh_every needs a Dynamic or CompositeUpsample cost"
                    )
    except NumericError as exc:
        raise DivergenceError(f"non-finite value during training: {exc}", trace) from exc
    trace.total_seconds = time.perf_counter() - start
    return map_net, potential, trace


def train_gan(
    P: Distribution,
    Q: Distribution,
    gen: Mlp,
    disc: Mlp,
    cfg: GanConfig,
    content_cost: CostFn,
):
    """Wasserstein-1 critic with gradient penalty, content-regularized generator.

    Critic step (disc_iters_per_gen per generator step): descend
    ``mean d(T(x)) - mean d(y) + gp_weight * mean (||grad d(z)|| - 1)^2``
    with z uniform on segments between generated and real samples (one
    interpolate per pair, resampled each step). Generator step: descend
    ``-mean d(T(x)) + content_weight * mean c(x, T(x))``; the content term
    is dropped entirely at weight 0.

    Returns (gen, trace).
    """
    if disc.dim_out != 1:
        raise ConfigError(f"critic must output a scalar, got dim {disc.dim_out}")
    if gen.dim_in != P.dim or gen.dim_out != Q.dim:
        raise ConfigError(f"generator dims {gen.dims} do not connect P to Q")
    rng = rng_from(cfg.seed, "gp-interpolates")
    adam_d = Adam(disc.parameters(), lr=cfg.lr, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2)
    adam_g = Adam(gen.parameters(), lr=cfg.lr, beta1=cfg.adam_beta1, beta2=cfg.adam_beta2)
    trace = TrainTrace(columns=("iter", "loss_disc", "loss_gen", "gp"))
    start = time.perf_counter()
    try:
        for it in range(1, cfg.generator_iters + 1):
            loss_d_val = np.nan
            gp_val = np.nan
            for _ in range(cfg.disc_iters_per_gen):
                x = P.sample(cfg.batch_size)
                y = Q.sample(cfg.batch_size)
                fake = gen.predict(x)
                eps = rng.random((cfg.batch_size, 1))
                z = eps * y + (1.0 - eps) * fake
                grad_z = input_gradient(disc, z)
                norm = ad.sqrt(ad.add(ad.sum_rows(ad.square(grad_z)), 1e-12))
                gp = ad.mean(ad.square(ad.sub(norm, 1.0)))
                loss_d = ad.add(
                    ad.sub(ad.mean(disc(fake)), ad.mean(disc(y))),
                    ad.scale(gp, cfg.gp_weight),
                )
                disc.tape.backward(loss_d)
                adam_d.step()
                loss_d_val = loss_d.item()
                gp_val = gp.item()

            x = P.sample(cfg.batch_size)
            y_hat = gen(x)
            critic = freeze(disc)
            loss_g = ad.scale(ad.mean(critic(y_hat)), -1.0)
            if cfg.content_weight > 0:
                loss_g = ad.add(
                    loss_g,
                    ad.scale(ad.mean(content_cost.per_sample(x, y_hat)), cfg.content_weight),
                )
            gen.tape.backward(loss_g)
            adam_g.step()
            loss_g_val = loss_g.item()

            trace.rows.append((float(it), loss_d_val, loss_g_val, gp_val))
            trace.wall_times.append(time.perf_counter() - start)
            _guard(loss_d_val, cfg.divergence_limit, trace, "critic")
            _guard(loss_g_val, cfg.divergence_limit, trace, "generator")
    except NumericError as exc:
        raise DivergenceError(f"non-finite value during training: {exc}", trace) from exc
    trace.total_seconds = time.perf_counter() - start
    return gen, trace


def solve_example1(lam: float, lr=0.1, max_iters=10_000, tol=1e-12):
    """Subgradient descent on the closed-form two-atom objective.

    Minimizes over (t0, t2):
        min{ (t0-1)^2/2 + (t2-3)^2/2 ; (t0-3)^2/2 + (t2-1)^2/2 }
        + lam * (|t0 - 0| + |t2 - 2|) / 2
    The outer min is handled by following the active branch's gradient,
    ties broken toward the first (order-preserving) branch; |.| contributes
    its subgradient with sign(0) = 0. Starts at the content-optimal point
    (0, 2).
    """
    lam = float(lam)
    if not 0.0 < lam < 2.0:
        raise ConfigError(f"solve_example1 requires 0 < lam < 2, got {lam}")
    t0, t2 = 0.0, 2.0
    trajectory = [(t0, t2)]
    for _ in range(max_iters):
        branch_a = 0.5 * (t0 - 1.0) ** 2 + 0.5 * (t2 - 3.0) ** 2
        branch_b = 0.5 * (t0 - 3.0) ** 2 + 0.5 * (t2 - 1.0) ** 2
        if branch_a <= branch_b:
            g0, g2 = t0 - 1.0, t2 - 3.0
        else:
            g0, g2 = t0 - 3.0, t2 - 1.0
        g0 += lam * 0.5 * np.sign(t0)
        g2 += lam * 0.5 * np.sign(t2 - 2.0)
        t0_new = t0 - lr * g0
        t2_new = t2 - lr * g2
        moved = max(abs(t0_new - t0), abs(t2_new - t2))
        t0, t2 = t0_new, t2_new
        trajectory.append((t0, t2))
        if moved < tol:
            return t0, t2
    raise ConvergenceError(
        f"no convergence after {max_iters} iterations (lam={lam})", trajectory
    )


def _as_sampler(data, seed_seq) -> Distribution:
    if isinstance(data, Distribution):
        return data.substream("fit", int(seed_seq.generate_state(1)[0]))
    return DiscreteAtoms(as_batch(data, name="samples"), seed=seed_seq)


def _resolve_cost(cost, dim_in, dim_out, seed):
    if isinstance(cost, CostFn):
        return cost
    if isinstance(cost, str):
        if dim_in == dim_out:
            return cost_by_name(cost, dim=dim_out, seed=child(seed, "cost"))
        if dim_out % dim_in == 0:
            base = cost_by_name(cost, dim=dim_out, seed=child(seed, "cost"))
            return CompositeUpsample(base, Upsampler("linear", dim_out // dim_in))
        raise ConfigError(
            f"cannot build {cost!r} cost between dims {dim_in} and {dim_out}; "
            "pass a CostFn instance"
        )
    raise ConfigError(f"cost must be a name or a CostFn, got {type(cost).__name__}")


class _SolverMixin(TransformerMixin, BaseEstimator):
    def _sampler_pair(self, X, Y):
        P = _as_sampler(X, child(self.seed, "P"))
        Q = _as_sampler(Y, child(self.seed, "Q"))
        return P, Q

    def transform(self, X):
        """Apply the learned map to a batch of source samples."""
        if not hasattr(self, "map_net_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")
        X = as_batch(X, dim=self.map_net_.dim_in, name="X")
        return self.map_net_.predict(X)

    def predict(self, X):
        return self.transform(X)


class OTSolver(_SolverMixin):
    """Unbiased transport-map estimator trained by saddle-point alternation.

    Parameters
    ----------
    cost : str or CostFn, default "mse"
        Transport cost; cross-dimension fits wrap a named cost with a
        linear upsampler automatically.
    potential_iters : int
        Outer (potential) iterations.
    map_iters_per_potential : int
        Inner map steps per potential step.
    hidden_dims : tuple of int
        Hidden widths shared by both networks.
    residual : bool or "auto"
        Map network as identity + correction (equal dims only).
    cost_refresh_every : int or None
        Replace the cost's frozen lift with the current map at this cadence.

    After ``fit(X, Y)`` (X, Y unpaired sample batches or Distributions),
    ``transform``/``predict`` apply the learned map.
    """

    def __init__(
        self,
        cost="mse",
        potential_iters=2000,
        map_iters_per_potential=10,
        lr_potential=1e-4,
        lr_map=1e-4,
        lr_schedule="constant",
        batch_size=64,
        hidden_dims=(128, 128, 128),
        residual="auto",
        cost_refresh_every=None,
        divergence_limit=1e8,
        seed=0,
    ):
        self.cost = cost
        self.potential_iters = potential_iters
        self.map_iters_per_potential = map_iters_per_potential
        self.lr_potential = lr_potential
        self.lr_map = lr_map
        self.lr_schedule = lr_schedule
        self.batch_size = batch_size
        self.hidden_dims = hidden_dims
        self.residual = residual
        self.cost_refresh_every = cost_refresh_every
        self.divergence_limit = divergence_limit
        self.seed = seed

    def fit(self, X, Y):
        P, Q = self._sampler_pair(X, Y)
        residual = P.dim == Q.dim if self.residual == "auto" else bool(self.residual)
        map_net = Mlp(
            [P.dim, *self.hidden_dims, Q.dim],
            residual=residual,
            seed=child(self.seed, "map-init"),
        )
        potential = Mlp([Q.dim, *self.hidden_dims, 1], seed=child(self.seed, "potential-init"))
        cfg = OtsConfig(
            cost=_resolve_cost(self.cost, P.dim, Q.dim, self.seed),
            potential_iters=self.potential_iters,
            map_iters_per_potential=self.map_iters_per_potential,
            lr_potential=self.lr_potential,
            lr_map=self.lr_map,
            lr_schedule=self.lr_schedule,
            batch_size=self.batch_size,
            cost_refresh_every=self.cost_refresh_every,
            divergence_limit=self.divergence_limit,
        )
        self.map_net_, self.potential_net_, self.trace_ = train_ots(P, Q, potential, map_net, cfg)
        self.n_features_in_ = P.dim
        return self


class GANSolver(_SolverMixin):
    """Content-regularized adversarial baseline (Wasserstein-1 critic + GP).

    Same fit/transform surface as OTSolver, plus the two knobs the
    adversarial formulation cannot avoid: ``content_weight`` balancing the
    content cost against the critic, and ``gp_weight`` for the Lipschitz
    penalty.
    """

    def __init__(
        self,
        content_weight=1.0,
        content_cost="mse",
        gp_weight=10.0,
        disc_iters_per_gen=10,
        generator_iters=2000,
        lr=1e-4,
        adam_beta1=0.5,
        adam_beta2=0.999,
        batch_size=64,
        hidden_dims=(128, 128, 128),
        residual="auto",
        divergence_limit=1e8,
        seed=0,
    ):
        self.content_weight = content_weight
        self.content_cost = content_cost
        self.gp_weight = gp_weight
        self.disc_iters_per_gen = disc_iters_per_gen
        self.generator_iters = generator_iters
        self.lr = lr
        self.adam_beta1 = adam_beta1
        self.adam_beta2 = adam_beta2
        self.batch_size = batch_size
        self.hidden_dims = hidden_dims
        self.residual = residual
        self.divergence_limit = divergence_limit
        self.seed = seed

    def fit(self, X, Y):
        P, Q = self._sampler_pair(X, Y)
        residual = P.dim == Q.dim if self.residual == "auto" else bool(self.residual)
        gen = Mlp(
            [P.dim, *self.hidden_dims, Q.dim],
            residual=residual,
            seed=child(self.seed, "gen-init"),
        )
        disc = Mlp([Q.dim, *self.hidden_dims, 1], seed=child(self.seed, "disc-init"))
        cfg = GanConfig(
            content_weight=self.content_weight,
            gp_weight=self.gp_weight,
            disc_iters_per_gen=self.disc_iters_per_gen,
            lr=self.lr,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            batch_size=self.batch_size,
            generator_iters=self.generator_iters,
            divergence_limit=self.divergence_limit,
            seed=int(child(self.seed, "gan-train").generate_state(1)[0]),
        )
        content = _resolve_cost(self.content_cost, P.dim, Q.dim, self.seed)
        self.map_net_, self.trace_ = train_gan(P, Q, gen, disc, cfg, content)
        self.critic_net_ = disc
        self.n_features_in_ = P.dim
        return self
