"""Named experiment runners: reproducible end-to-end pipelines emitting one
JSON report plus CSV tables/traces per run.

Every random quantity derives from the run seed through named substreams,
so a rerun from the same config reproduces all metric values and CSV bodies
bit-exactly (wall-clock lives in separate fields). Sweep cells (one cell
per method/weight combination) are pure functions of their payload and can
execute in a process pool; report assembly happens after the join.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ExperimentConfig
from .costs import CompositeUpsample, Mse, Quadratic, RandomFeatureCost, Upsampler, cost_by_name
from .distributions import Degradation, DiscreteAtoms, Gaussian, make_sr_pair
from .exceptions import ConfigError, DivergenceError, NumericError
from .metrics import (
    MetricReport,
    RbfKernel,
    fv_slope,
    l2_uvp,
    median_bandwidth,
    mmd2,
    palette_variance_spread,
    transport_cost_estimate,
)
from .nn import Mlp
from .oracles import bures_wasserstein_cost, discrete_ot, example1_solution, gaussian_ot_map
from .seeding import child, rng_from
from .solvers import GanConfig, OtsConfig, solve_example1, train_gan, train_ots


def config_hash(config: dict) -> str:
    """Content hash of the experiment identity (where it runs is excluded)."""
    identity = {k: v for k, v in config.items() if k not in ("out_dir", "workers")}
    canonical = json.dumps(identity, sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunReport:
    experiment: str
    seed: int
    config: dict
    config_hash: str
    metrics: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    traces: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def add_metric(self, name, value, n_samples=0, seed=0, tolerance=None):
        self.metrics.append(
            MetricReport(
                name=name,
                value=float(value),
                n_samples=int(n_samples),
                seed=int(seed),
                tolerance_used=tolerance,
            )
        )

    def metric(self, name) -> float:
        for m in self.metrics:
            if m.name == name:
                return m.value
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
            "config_hash": self.config_hash,
            "metrics": [m.to_dict() for m in self.metrics],
            "tables": self.tables,
            "traces": self.traces,
            "wall_clock_s": self.wall_clock_s,
        }

    def save(self, out_dir) -> str:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _write_table(out_dir, filename, columns, rows):
    path = os.path.join(out_dir, filename)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# columns: " + ",".join(columns) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell_str(v) for v in row) + "\n")
    return path


def _cell_str(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _run_cells(cells, worker, n_workers):
    if n_workers <= 1:
        return [worker(c) for c in cells]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, cells))


def _build_nets(seed_seq, dim_in, dim_out, hidden, residual):
    map_net = Mlp([dim_in, *hidden, dim_out], residual=residual, seed=child(seed_seq, "map"))
    potential = Mlp([dim_out, *hidden, 1], seed=child(seed_seq, "potential"))
    return potential, map_net


# ---------------------------------------------------------------------------
# bench-gaussian (alias: bias-sweep): transport solver vs regularized
# adversarial baseline across content weights, judged by exact oracles
# ---------------------------------------------------------------------------


def _bench_pair(pair_cfg):
    if pair_cfg["kind"] != "explicit":
        raise ConfigError(f"unknown pair kind {pair_cfg['kind']!r} (use 'explicit')")
    mean_p = np.asarray(pair_cfg["mean_p"], dtype=float)
    cov_p = np.asarray(pair_cfg["cov_p"], dtype=float)
    mean_q = np.asarray(pair_cfg["mean_q"], dtype=float)
    cov_q = np.asarray(pair_cfg["cov_q"], dtype=float)
    if mean_p.shape[0] != pair_cfg["dim"]:
        raise ConfigError(f"pair.dim {pair_cfg['dim']} does not match mean_p {mean_p.shape}")
    return mean_p, cov_p, mean_q, cov_q


def _bench_cell(payload: dict) -> dict:
    """One sweep cell: train a map, judge it against the oracle."""
    mean_p, cov_p, mean_q, cov_q = payload["pair"]
    seed = payload["cell_seed"]
    p = Gaussian(mean_p, cov_p, seed=child(seed, "P"))
    q = Gaussian(mean_q, cov_q, seed=child(seed, "Q"))
    t_star = gaussian_ot_map(mean_p, cov_p, mean_q, cov_q)
    residual = p.dim == q.dim
    status = "ok"
    trace = None
    try:
        if payload["method"] == "ots":
            o = payload["ots"]
            potential, map_net = _build_nets(seed, p.dim, q.dim, o["hidden"], residual)
            cfg = OtsConfig(
                cost=cost_by_name(o["cost"], dim=q.dim, seed=child(seed, "cost")),
                potential_iters=o["potential_iters"],
                map_iters_per_potential=o["map_iters_per_potential"],
                lr_potential=o["lr_potential"],
                lr_map=o["lr_map"],
                lr_schedule=o["lr_schedule"],
                batch_size=o["batch_size"],
            )
            map_net, _, trace = train_ots(p, q, potential, map_net, cfg)
        else:
            g = payload["gan"]
            disc = Mlp([q.dim, *g["hidden"], 1], seed=child(seed, "disc"))
            gen = Mlp([p.dim, *g["hidden"], q.dim], residual=residual, seed=child(seed, "gen"))
            cfg = GanConfig(
                content_weight=payload["content_weight"],
                gp_weight=g["gp_weight"],
                disc_iters_per_gen=g["disc_iters_per_gen"],
                lr=g["lr"],
                adam_beta1=g["adam_beta1"],
                adam_beta2=g["adam_beta2"],
                batch_size=g["batch_size"],
                generator_iters=g["generator_iters"],
                seed=int(child(seed, "gan-train").generate_state(1)[0]),
            )
            content = cost_by_name(g["content_cost"], dim=q.dim, seed=child(seed, "cost"))
            map_net, trace = train_gan(p, q, gen, disc, cfg, content)
    except (DivergenceError, NumericError) as exc:
        return {
            "method": payload["method"],
            "content_weight": payload.get("content_weight"),
            "status": f"diverged({type(exc).__name__})",
            "l2_uvp": None,
            "mmd2": None,
            "transport_cost": None,
            "trace": getattr(exc, "trace", None),
            "map_points": None,
        }

    xs_eval = payload["xs_eval"]
    qs_eval = payload["qs_eval"]
    push = map_net.predict(xs_eval)
    kernel = RbfKernel(payload["bandwidth"])
    uvp = l2_uvp(map_net.predict, t_star, p, q, n=payload["uvp_samples"], seed=0)
    cost_val = transport_cost_estimate(
        map_net.predict, p, Quadratic(), n=payload["uvp_samples"], seed=0
    )
    return {
        "method": payload["method"],
        "content_weight": payload.get("content_weight"),
        "status": status,
        "l2_uvp": uvp,
        "mmd2": mmd2(push, qs_eval, kernel),
        "transport_cost": cost_val,
        "trace": trace,
        "map_points": map_net.predict(xs_eval[:128]),
    }


def run_bench_gaussian(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    start = time.perf_counter()
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    pair = _bench_pair(cfg.section("pair"))
    mcfg = cfg.section("metrics")
    root = child(cfg.seed, "bench")

    eval_p = Gaussian(pair[0], pair[1], seed=child(root, "eval", "P"))
    eval_q = Gaussian(pair[2], pair[3], seed=child(root, "eval", "Q"))
    xs_eval = eval_p.sample(mcfg["mmd_samples"])
    qs_eval = eval_q.sample(mcfg["mmd_samples"])
    bandwidth = mcfg["bandwidth"] if mcfg["bandwidth"] > 0 else median_bandwidth(qs_eval)

    common = {
        "pair": pair,
        "xs_eval": xs_eval,
        "qs_eval": qs_eval,
        "bandwidth": bandwidth,
        "uvp_samples": mcfg["uvp_samples"],
        "ots": cfg.section("ots"),
        "gan": cfg.section("gan"),
    }
    cells = [dict(common, method="ots", cell_seed=child(root, "ots"))]
    for i, lam in enumerate(cfg.section("gan")["lambdas"]):
        cells.append(
            dict(common, method="gan", content_weight=float(lam), cell_seed=child(root, "gan", i))
        )
    results = _run_cells(cells, _bench_cell, cfg.workers)

    report = RunReport(
        experiment=cfg.experiment,
        seed=cfg.seed,
        config=cfg.to_dict(),
        config_hash=config_hash(cfg.to_dict()),
    )
    rows = []
    for i, res in enumerate(results):
        lam_str = "N/A" if res["method"] == "ots" else repr(float(res["content_weight"]))
        if res["trace"] is not None:
            trace_name = "trace_ots.csv" if res["method"] == "ots" else f"trace_gan_{i - 1:02d}.csv"
            res["trace"].write_csv(os.path.join(out_dir, trace_name))
            report.traces.append(trace_name)
        rows.append(
            (
                res["method"],
                lam_str,
                "" if res["l2_uvp"] is None else res["l2_uvp"],
                "" if res["mmd2"] is None else res["mmd2"],
                "" if res["transport_cost"] is None else res["transport_cost"],
                res["status"],
            )
        )
    report.tables["bench"] = "table_bench.csv"
    _write_table(
        out_dir,
        "table_bench.csv",
        ("method", "lambda", "l2_uvp_percent", "mmd2", "transport_cost", "status"),
        rows,
    )

    ots_res = results[0]
    gan_res = [r for r in results[1:] if r["status"] == "ok"]
    report.add_metric("bures_value", bures_wasserstein_cost(*pair))
    report.add_metric("kernel_bandwidth", bandwidth, n_samples=mcfg["mmd_samples"])
    if ots_res["status"] == "ok":
        report.add_metric("ots_l2_uvp", ots_res["l2_uvp"], n_samples=mcfg["uvp_samples"])
        report.add_metric("ots_mmd2", ots_res["mmd2"], n_samples=mcfg["mmd_samples"])
        report.add_metric("ots_transport_cost", ots_res["transport_cost"], n_samples=mcfg["uvp_samples"])
    if gan_res:
        best = min(gan_res, key=lambda r: r["l2_uvp"])
        report.add_metric("best_gan_lambda", best["content_weight"])
        report.add_metric("best_gan_l2_uvp", best["l2_uvp"], n_samples=mcfg["uvp_samples"])
        positive = [r for r in gan_res if r["content_weight"] > 0]
        if positive:
            report.add_metric("min_gan_mmd2_positive_lambda", min(r["mmd2"] for r in positive))
            extreme = max(positive, key=lambda r: r["content_weight"])
            report.add_metric("extreme_lambda_l2_uvp", extreme["l2_uvp"])
    report.wall_clock_s = time.perf_counter() - start
    report.save(out_dir)
    # in-memory only: trained-map probes for programmatic callers
    report.cell_results = results
    report.eval_points = xs_eval
    return report


# ---------------------------------------------------------------------------
# example1: two-atom closed form vs direct minimizer vs trained map
# ---------------------------------------------------------------------------


def run_example1(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    start = time.perf_counter()
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    root = child(cfg.seed, "example1")
    lambdas = [float(l) for l in cfg.section("grid")["lambdas"]]
    for lam in lambdas:
        if not 0.0 < lam < 2.0:
            raise ConfigError(f"grid lambda {lam} outside the validity window (0, 2)")
    scfg = cfg.section("solver")

    rows = []
    max_err = 0.0
    for lam in lambdas:
        t0_hat, t2_hat = solve_example1(lam, lr=scfg["lr"], max_iters=scfg["max_iters"], tol=scfg["tol"])
        t0, t2 = example1_solution(lam)
        err = max(abs(t0_hat - t0), abs(t2_hat - t2))
        max_err = max(max_err, err)
        rows.append((lam, t0_hat, t2_hat, t0, t2, err))

    report = RunReport(
        experiment=cfg.experiment,
        seed=cfg.seed,
        config=cfg.to_dict(),
        config_hash=config_hash(cfg.to_dict()),
    )
    report.tables["example1"] = "table_example1.csv"
    _write_table(
        out_dir,
        "table_example1.csv",
        ("lambda", "solver_t0", "solver_t2", "analytic_t0", "analytic_t2", "abs_err"),
        rows,
    )
    report.add_metric("example1_max_abs_err", max_err, tolerance=1e-3)

    # transport solver on the same atoms: unbiased endpoint (1, 3)
    o = cfg.section("ots")
    p = DiscreteAtoms([0.0, 2.0], seed=child(root, "atoms", "P"))
    q = DiscreteAtoms([1.0, 3.0], seed=child(root, "atoms", "Q"))
    potential, map_net = _build_nets(child(root, "nets"), 1, 1, o["hidden"], residual=True)
    ots_cfg = OtsConfig(
        cost=cost_by_name(o["cost"], dim=1, seed=child(root, "cost")),
        potential_iters=o["potential_iters"],
        map_iters_per_potential=o["map_iters_per_potential"],
        lr_potential=o["lr_potential"],
        lr_map=o["lr_map"],
        lr_schedule=o["lr_schedule"],
        batch_size=o["batch_size"],
    )
    map_net, _, trace = train_ots(p, q, potential, map_net, ots_cfg)
    trace.write_csv(os.path.join(out_dir, "trace_ots.csv"))
    report.traces.append("trace_ots.csv")
    vals = map_net.predict(np.array([[0.0], [2.0]])).ravel()
    plan = discrete_ot(np.array([[0.0], [2.0]]), np.array([[1.0], [3.0]]), ots_cfg.cost)
    report.add_metric("ots_t0", vals[0], tolerance=0.05)
    report.add_metric("ots_t2", vals[1], tolerance=0.05)
    report.add_metric("oracle_assignment_is_monotone", float(np.array_equal(plan.assignment, [0, 1])))
    report.wall_clock_s = time.perf_counter() - start
    report.save(out_dir)
    return report


# ---------------------------------------------------------------------------
# toy-sr: synthetic signal super-resolution with upsample-composite cost
# ---------------------------------------------------------------------------


def run_toy_sr(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    start = time.perf_counter()
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    root = child(cfg.seed, "toy-sr")
    sig = cfg.section("signal")
    ccfg = cfg.section("cost")
    o = cfg.section("ots")
    mcfg = cfg.section("metrics")

    degradation = Degradation(np.ones(sig["blur_width"]), sig["stride"])
    lr_dist, hr_dist = make_sr_pair(sig["dim"], degradation, seed=child(root, "pair"))
    upsampler = Upsampler(ccfg["upsampler"], sig["stride"])
    if ccfg["kind"] == "mse":
        base = Mse()
    elif ccfg["kind"] == "perceptual":
        base = RandomFeatureCost(sig["dim"], seed=child(root, "features"))
    else:
        raise ConfigError(f"unknown toy-sr cost kind {ccfg['kind']!r}")
    cost = CompositeUpsample(base, upsampler)

    potential = Mlp([sig["dim"], *o["hidden"], 1], seed=child(root, "potential"))
    map_net = Mlp([lr_dist.dim, *o["hidden"], sig["dim"]], seed=child(root, "map"))
    ots_cfg = OtsConfig(
        cost=cost,
        potential_iters=o["potential_iters"],
        map_iters_per_potential=o["map_iters_per_potential"],
        lr_potential=o["lr_potential"],
        lr_map=o["lr_map"],
        lr_schedule=o["lr_schedule"],
        batch_size=o["batch_size"],
        cost_refresh_every=ccfg["refresh_every"] or None,
    )
    map_net, _, trace = train_ots(lr_dist, hr_dist, potential, map_net, ots_cfg)
    trace.write_csv(os.path.join(out_dir, "trace_ots.csv"))

    n_eval = mcfg["eval_samples"]
    hr_eval = hr_dist.substream("eval").sample(n_eval)
    hr_heldout = hr_dist.substream("heldout").sample(n_eval)
    lr_eval = lr_dist.substream("eval").sample(n_eval)
    push = map_net.predict(lr_eval)
    baseline = upsampler.apply(lr_eval)
    bandwidth = mcfg["bandwidth"] if mcfg["bandwidth"] > 0 else median_bandwidth(hr_eval)
    kernel = RbfKernel(bandwidth)

    def palette(samples):
        return palette_variance_spread(
            samples, n_points=mcfg["palette_points"], repeats=mcfg["palette_repeats"], seed=0
        )

    pv_hr = palette(hr_eval)
    pv_push = palette(push)
    pv_base = palette(baseline)
    cost_push = float(np.mean(cost.per_sample(lr_eval, push).data))
    cost_base = float(np.mean(cost.per_sample(lr_eval, baseline).data))
    m2_hr = mmd2(hr_heldout[: mcfg["mmd_samples"]], hr_eval[: mcfg["mmd_samples"]], kernel)
    m2_push = mmd2(push[: mcfg["mmd_samples"]], hr_eval[: mcfg["mmd_samples"]], kernel)
    m2_base = mmd2(baseline[: mcfg["mmd_samples"]], hr_eval[: mcfg["mmd_samples"]], kernel)

    report = RunReport(
        experiment=cfg.experiment,
        seed=cfg.seed,
        config=cfg.to_dict(),
        config_hash=config_hash(cfg.to_dict()),
    )
    report.tables["toysr"] = "table_toysr.csv"
    _write_table(
        out_dir,
        "table_toysr.csv",
        ("method", "mmd2_to_hr", "transport_cost", "palette_mean", "palette_std"),
        [
            ("hr-heldout", m2_hr, "", pv_hr[0], pv_hr[1]),
            ("upsample-baseline", m2_base, cost_base, pv_base[0], pv_base[1]),
            ("ots", m2_push, cost_push, pv_push[0], pv_push[1]),
        ],
    )
    report.traces.append("trace_ots.csv")
    report.add_metric("mmd2_ots", m2_push, n_samples=mcfg["mmd_samples"])
    report.add_metric("mmd2_baseline", m2_base, n_samples=mcfg["mmd_samples"])
    report.add_metric("palette_hr", pv_hr[0], n_samples=n_eval)
    report.add_metric("palette_ots", pv_push[0], n_samples=n_eval)
    report.add_metric("palette_baseline", pv_base[0], n_samples=n_eval)
    report.add_metric("palette_gap_ots", abs(pv_push[0] - pv_hr[0]))
    report.add_metric("palette_gap_baseline", abs(pv_base[0] - pv_hr[0]))
    report.add_metric("transport_cost_ots", cost_push, n_samples=n_eval)
    report.wall_clock_s = time.perf_counter() - start
    report.save(out_dir)
    return report


# ---------------------------------------------------------------------------
# fv-check: scaling exponents of discrepancies along mixture paths
# ---------------------------------------------------------------------------


def run_fv_check(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    start = time.perf_counter()
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    fv = cfg.section("fv")
    if fv["support_size"] > 64:
        raise ConfigError(f"support_size capped at 64, got {fv['support_size']}")
    eps_grid = np.logspace(np.log10(fv["eps_min"]), np.log10(fv["eps_max"]), fv["n_eps"])
    kinds = list(fv["kinds"])
    rows = []
    slopes = {k: [] for k in kinds}
    def random_weights(rng, n):
        # bounded away from zero so the eps grid stays inside the quadratic
        # Taylor regime of the discrepancies
        w = 1.0 + rng.random(n)
        return w / w.sum()

    for inst in range(fv["n_instances"]):
        rng = rng_from(cfg.seed, "fv", inst)
        points = rng.standard_normal((fv["support_size"], fv["dim"]))
        q = DiscreteAtoms(points, random_weights(rng, fv["support_size"]), seed=0)
        p = DiscreteAtoms(points, random_weights(rng, fv["support_size"]), seed=0)
        for kind in kinds:
            res = fv_slope(kind, q, p, eps_grid)
            slopes[kind].append(res.slope)
            rows.append((inst, kind, res.slope, len(res.eps_used)))

    report = RunReport(
        experiment=cfg.experiment,
        seed=cfg.seed,
        config=cfg.to_dict(),
        config_hash=config_hash(cfg.to_dict()),
    )
    report.tables["fv"] = "table_fv.csv"
    _write_table(out_dir, "table_fv.csv", ("instance", "kind", "slope", "points_used"), rows)
    for kind in kinds:
        vals = np.array(slopes[kind])
        report.add_metric(f"min_slope_{kind}", vals.min(), n_samples=fv["n_instances"])
        report.add_metric(f"mean_slope_{kind}", vals.mean(), n_samples=fv["n_instances"])
    report.wall_clock_s = time.perf_counter() - start
    report.save(out_dir)
    return report


_RUNNERS = {
    "bench-gaussian": run_bench_gaussian,
    "bias-sweep": run_bench_gaussian,
    "example1": run_example1,
    "toy-sr": run_toy_sr,
    "fv-check": run_fv_check,
}


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> RunReport:
    return _RUNNERS[cfg.experiment](cfg, out_dir=out_dir)
