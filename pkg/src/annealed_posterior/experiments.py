"""Seeded, scripted experiments that write a CSV table plus a JSON manifest.

Each experiment declares a parameter schema (key -> default) used for config
validation.  The CSV body depends only on the parameters and the seed; the
manifest additionally records ``git describe`` and the wall time.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from .config import apply_schema
from .errors import ConfigError, SamplerError
from .evaluation import GaussianSummary, energy_test, gaussian_posterior_closed_form
from .langevin import ChainState, StepPolicy, euler_maruyama_run, posterior_drift, variance_curve, variance_minimizer
from .measurement import MeasurementModel, simulate_measurement
from .priors import IsotropicGaussian, RingPrior
from .rng import ChainStreams, make_rng, seed_sequence
from .samplers import RunConfig, compressed_sensing, gaussian_sampler, posterior_sampler
from .schedule import ScheduleParams, build_admissible_schedule, rung_count_bound, validate_schedule
from .scores import ExactOracle, ShellPerturbation, ShellPerturbedOracle, ring_hessian_eigs

RING_RADII = (1e-4, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
              0.7, 0.8, 0.9, 0.95, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    params: Mapping = field(default_factory=dict)
    seed: int = 0
    out_dir: Path | None = None

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {', '.join(sorted(EXPERIMENTS))}")


@dataclass
class ExperimentResult:
    name: str
    columns: list
    rows: list
    summary: dict
    params: dict
    seed: int
    wall_time: float = 0.0

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def column(self, name) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([row[k] for row in self.rows], dtype=float)

    def manifest(self, csv_name: str) -> dict:
        return {
            "experiment": self.name,
            "seed": self.seed,
            "parameters": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "summary": {k: _jsonable(v) for k, v in self.summary.items()},
            "csv": csv_name,
            "git_describe": git_describe(),
            "wall_time_s": self.wall_time,
        }

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.name}.csv"
        csv_path.write_text(self.csv_text())
        man_path = out / f"{self.name}.json"
        man_path.write_text(json.dumps(self.manifest(csv_path.name), indent=2, sort_keys=True) + "\n")
        return csv_path, man_path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True, timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def _random_operator(rng, m, d, norm):
    A = rng.standard_normal((m, d))
    return A * (norm / np.linalg.norm(A, 2))


def _seeds(seed, k):
    """``k`` integer seeds derived from ``seed``."""
    return [int(s.generate_state(1)[0]) for s in seed_sequence(seed).spawn(k)]


# ---------------------------------------------------------------- variance-curve

VARIANCE_CURVE = {"eta_sq": 0.1, "n_chains": 20000, "h": 1e-4, "n_grid": 50, "star_index": 5}


def variance_curve_experiment(p, seed):
    """Plain posterior Langevin in 1-D (prior N(0,1), A = 1) with ``y`` drawn
    from its marginal per chain; the variance across chains is tracked on a
    grid ``t_k = k t* / star_index`` so that ``t*`` is a grid point."""
    eta_sq = p["eta_sq"]
    if not 0 < p["star_index"] < p["n_grid"]:
        raise ConfigError("star_index must lie inside the grid")
    t_star = variance_minimizer(eta_sq)
    dt = t_star / p["star_index"]
    grid = dt * np.arange(p["n_grid"])
    prior = IsotropicGaussian.standard(1)
    model = MeasurementModel(np.ones((1, 1)), math.sqrt(eta_sq))
    streams = ChainStreams.from_seed(seed, p["n_chains"])
    state = ChainState.from_prior(prior, streams)
    y = np.array([g.standard_normal(1) for g in streams.init_generators]) * math.sqrt(1.0 + eta_sq)
    drift = posterior_drift(prior, model, y)
    policy = StepPolicy(h=p["h"])
    rows = []
    for k, t in enumerate(grid):
        if k > 0:
            euler_maruyama_run(state, drift, t - grid[k - 1], policy)
        x = state.x[:, 0]
        c = x - x.mean()
        var = float(np.mean(c * c) * len(x) / (len(x) - 1))
        m4 = float(np.mean(c ** 4))
        se = math.sqrt(max(m4 - var * var, 0.0) / len(x))
        rows.append([k, float(t), variance_curve(t, eta_sq), var, se])
    emp = np.array([r[3] for r in rows])
    k_min = int(np.argmin(emp))
    star = rows[p["star_index"]]
    summary = {
        "t_star": t_star,
        "grid_step": dt,
        "analytic_min": 1.0 - 1.0 / (2.0 * (1.0 + eta_sq)),
        "empirical_var_at_t_star": star[3],
        "stderr_at_t_star": star[4],
        "empirical_argmin_t": rows[k_min][1],
        "analytic_argmin_t": rows[int(np.argmin([r[2] for r in rows]))][1],
    }
    return ["index", "t", "analytic_var", "empirical_var", "mc_stderr"], rows, summary


# ------------------------------------------------------- gaussian posterior / rungs

GAUSSIAN_POSTERIOR = {
    "d": 8, "m": 3, "a_norm": 1.0, "eta": 0.5, "n_chains": 10000, "h": 0.01,
    "alpha": 1.0, "lam": 10.0, "eps": 0.1, "locality_radius": 1.0, "C": 1.0,
}


def gaussian_testbed(p, seed):
    """Random ``A`` with the requested norm, ``x ~ N(0, I)`` and ``y``."""
    problem_seed, run_seed = _seeds(seed, 2)
    rng = make_rng(problem_seed)
    A = _random_operator(rng, p["m"], p["d"], p["a_norm"])
    model = MeasurementModel(A, p["eta"])
    prior = IsotropicGaussian.standard(p["d"])
    x = prior.sample(rng, 1)[0]
    y = simulate_measurement(x, model, rng)
    params = ScheduleParams(alpha=p["alpha"], d=p["d"], m=p["m"], lam=p["lam"], eps=p["eps"],
                            R=p["locality_radius"], C=p["C"])
    return prior, model, x, y, params, run_seed


def _moment_rows(k, eta, samples, target):
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(samples, rowvar=False))
    frob = float(np.linalg.norm(cov - target.cov) / np.linalg.norm(target.cov))
    rows = []
    for j in range(samples.shape[1]):
        se = math.sqrt(target.cov[j, j] / n)
        rows.append([k, float(eta), j + 1, float(target.mean[j]), float(mean[j]),
                     float((mean[j] - target.mean[j]) / se), float(target.cov[j, j]), float(cov[j, j]), frob])
    return rows


MOMENT_COLUMNS = ["rung", "eta", "coord", "target_mean", "sample_mean", "z_mean", "target_var", "sample_var",
                  "cov_frobenius_rel"]


def _annealed_gaussian(p, seed, all_rungs):
    prior, model, x, y, params, run_seed = gaussian_testbed(p, seed)
    cfg = RunConfig(params, StepPolicy(h=p["h"]), n_chains=p["n_chains"], seed=run_seed, snapshots=all_rungs)
    art = posterior_sampler(prior, None, y, model, cfg)
    ladder = art.ladder
    prior_summary = GaussianSummary.of_prior(prior)
    rows = []
    rungs = range(1, ladder.N) if all_rungs else [ladder.N - 1]
    for k in rungs:
        target = gaussian_posterior_closed_form(prior_summary, MeasurementModel(model.A, ladder.etas[k]),
                                                art.observations.ys[k])
        samples = art.snapshots[k] if all_rungs else art.samples
        rows.extend(_moment_rows(k, ladder.etas[k], samples, target))
    z = np.array([r[5] for r in rows])
    frob = np.array([r[8] for r in rows])
    summary = {
        "N": ladder.N,
        "total_time": ladder.total_time,
        "steps": art.steps,
        "max_abs_z": float(np.max(np.abs(z))),
        "max_cov_frobenius_rel": float(np.max(frob)),
        "final_max_abs_z": float(np.max(np.abs(z[-p["d"]:]))),
        "final_cov_frobenius_rel": float(frob[-1]),
        "op_norm": model.op_norm,
        "sampler_wall_time_s": art.wall_time,
    }
    return MOMENT_COLUMNS, rows, summary


def gaussian_posterior_experiment(p, seed):
    return _annealed_gaussian(p, seed, all_rungs=False)


def rung_stability_experiment(p, seed):
    return _annealed_gaussian(p, seed, all_rungs=True)


# ------------------------------------------------------------------------- ring

RING = {"width": 0.1, "radii": RING_RADII, "fd_step": 1e-4, "n_theta": 4096}


def ring_log_density_quadrature(x, width, n_theta=4096):
    """``log p(x)`` of the ring prior by the periodic trapezoidal rule over the angle."""
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    sq = np.sum((x[:, None, :] - u) ** 2, axis=-1)
    w2 = width ** 2
    out = logsumexp(-0.5 * sq / w2, axis=-1) - math.log(n_theta) - math.log(2.0 * math.pi * w2)
    return float(out[0]) if single else out


def ring_fd_eigs(r, width, step, n_theta=4096):
    """Central second differences of the quadrature log density at ``(r, 0)``:
    radial along the first axis, tangential along the second."""
    pts = np.array([[r, 0.0], [r + step, 0.0], [r - step, 0.0], [r, step], [r, -step]])
    f0, fr1, fr2, ft1, ft2 = ring_log_density_quadrature(pts, width, n_theta)
    return (fr1 - 2 * f0 + fr2) / step ** 2, (ft1 - 2 * f0 + ft2) / step ** 2


def ring_experiment(p, seed):
    w = p["width"]
    rows = []
    for r in p["radii"]:
        lr, lt = ring_hessian_eigs(w, r)
        fr, ft = ring_fd_eigs(r, w, p["fd_step"], p["n_theta"])
        rows.append([float(r), lr, lt, float(fr), float(ft), abs(fr / lr - 1.0), abs(ft / lt - 1.0)])
    lt_small = ring_hessian_eigs(w, min(p["radii"]))[1]
    summary = {
        "center_limit": -1.0 / w ** 2 + 1.0 / (2.0 * w ** 4),
        "tangential_at_smallest_radius": lt_small,
        "max_rel_residual_radial": max(r[5] for r in rows),
        "max_rel_residual_tangential": max(r[6] for r in rows),
        "max_radial": max(r[1] for r in rows),
        "min_eigenvalue": min(min(r[1], r[2]) for r in rows),
    }
    cols = ["r", "lambda_radial", "lambda_tangential", "fd_radial", "fd_tangential",
            "rel_residual_radial", "rel_residual_tangential"]
    return cols, rows, summary


RING_POSTERIOR = {"width": 0.1, "sigma": 0.05, "eta": 0.1, "n_chains": 1000, "h": 1e-4, "alpha": 200.0,
                  "lam": 10.0, "eps": 0.1, "locality_radius": 0.2, "C": 1.0, "n_oracle": 1000,
                  "n_permutations": 999}


def ring_posterior_rejection(rng, n, prior: RingPrior, model: MeasurementModel, x0, sigma, y):
    """Exact draws from ``p(x | x0, y)`` for the ring prior.

    Proposal: the Gaussian proportional to ``N(x; x0, sigma^2 I) N(y; A x, eta^2)``;
    acceptance ``p(x) / max p``, where the ring density peaks on a circle whose
    radius is found on a fine radial grid.
    """
    prec = np.eye(2) / sigma ** 2 + model.A.T @ model.A / model.eta ** 2
    cov = np.linalg.inv(prec)
    mean = cov @ (np.asarray(x0) / sigma ** 2 + model.A.T @ np.atleast_1d(y) / model.eta ** 2)
    L = np.linalg.cholesky(cov)
    radii = np.linspace(0.0, 2.0, 200001)
    log_max = float(np.max(prior.log_density(np.stack([radii, np.zeros_like(radii)], axis=-1))))
    out = []
    count = 0
    while count < n:
        prop = mean + rng.standard_normal((4 * n, 2)) @ L.T
        keep = np.log(rng.uniform(size=4 * n)) <= prior.log_density(prop) - log_max - 1e-12
        out.append(prop[keep])
        count += int(keep.sum())
    return np.concatenate(out)[:n]


def ring_posterior_experiment(p, seed):
    """Conditioned annealed sampling on the ring prior versus exact rejection draws.

    Truth ``x = (1, 0)``; ``x0 = x + N(0, sigma^2 I)`` and ``y = x_1 + N(0, eta^2)``.
    """
    problem_seed, run_seed, oracle_seed, perm_seed = _seeds(seed, 4)
    rng = make_rng(problem_seed)
    prior = RingPrior(p["width"])
    model = MeasurementModel(np.array([[1.0, 0.0]]), p["eta"])
    x = np.array([1.0, 0.0])
    x0 = x + p["sigma"] * rng.standard_normal(2)
    y = simulate_measurement(x, model, rng)
    params = ScheduleParams(alpha=p["alpha"], d=2, m=1, lam=p["lam"], eps=p["eps"], R=p["locality_radius"], C=p["C"])
    cfg = RunConfig(params, StepPolicy(h=p["h"]), n_chains=p["n_chains"], seed=run_seed)
    art = gaussian_sampler(prior, None, x0, y, model, p["sigma"], cfg)
    s = art.samples
    ref = ring_posterior_rejection(make_rng(oracle_seed), p["n_oracle"], prior, model, x0, p["sigma"], y)
    test = energy_test(s, ref, n_permutations=p["n_permutations"], seed=perm_seed)
    radius = np.linalg.norm(s, axis=1)
    in_band = np.abs(radius - 1.0) <= 4.0 * p["width"]
    same_side = (s @ x0) > 0
    rows = [[i, float(a), float(b), bool(c), bool(e)] for i, ((a, b), c, e) in enumerate(zip(s, in_band, same_side))]
    summary = {
        "x0": [float(v) for v in x0], "y": float(y[0]), "N": art.ladder.N,
        "band_fraction": float(np.mean(in_band)), "same_side_fraction": float(np.mean(same_side)),
        "band_and_side_fraction": float(np.mean(in_band & same_side)),
        "energy_statistic": test.statistic, "energy_p_value": test.p_value,
        "energy_null_q99": test.null_quantile_99,
    }
    return ["chain", "x_1", "x_2", "in_band", "same_side"], rows, summary


# ---------------------------------------------------------------- amplification

AMPLIFICATION = {"d": 100, "k": 4.0, "eps": 0.1, "rho": 0.3, "n_draws": 100000,
                 "eta_sq": 0.1, "n_chains": 2000, "h": 1e-4}


def amplification_experiment(p, seed):
    """Shell-supported score error: small in ``L^k`` under ``N(0, I)``, of size
    ``M`` with high probability under the contracted law ``N(0, (6/11) I)`` that
    plain posterior Langevin passes through at ``t*``."""
    d = p["d"]
    sigma_sq = 1.0 - 1.0 / (2.0 * (1.0 + p["eta_sq"]))
    spec = ShellPerturbation.along_first_axis(d, p["rho"], p["k"], p["eps"], sigma_sq=sigma_sq)
    draw_seed, run_seed = _seeds(seed, 2)
    rng = make_rng(draw_seed)
    M = spec.magnitude
    rows = []
    # moment under the prior, estimated in batches to bound memory
    vals = []
    contracted = []
    batch = 10000
    for start in range(0, p["n_draws"], batch):
        n = min(batch, p["n_draws"] - start)
        z = rng.standard_normal((n, d))
        vals.append(np.linalg.norm(spec.error(z), axis=1) ** p["k"])
        contracted.append(np.linalg.norm(spec.error(math.sqrt(sigma_sq) * rng.standard_normal((n, d))), axis=1))
    vals = np.concatenate(vals)
    contracted = np.concatenate(contracted)
    moment = float(vals.mean())
    moment_rel_se = float(vals.std(ddof=1) / math.sqrt(len(vals)) / moment) if moment > 0 else math.inf
    frac = float(np.mean(contracted >= M * (1 - 1e-12)))
    rows.append(["prior_moment_k", moment, p["eps"] ** p["k"], moment_rel_se])
    rows.append(["contracted_prob_error_ge_M", frac, 1.0 - 2.0 * math.exp(-p["rho"] ** 2 * d / 8.0),
                 math.sqrt(frac * (1 - frac) / len(contracted))])
    rows.append(["magnitude_M", M, p["eps"], 0.0])
    rows.append(["shell_mass", spec.shell_mass, float("nan"), 0.0])

    # plain posterior Langevin (A = I) run to t*: fraction of chains inside the shell
    model = MeasurementModel(np.eye(d), math.sqrt(p["eta_sq"]))
    prior = IsotropicGaussian.standard(d)
    streams = ChainStreams.from_seed(run_seed, p["n_chains"])
    state = ChainState.from_prior(prior, streams)
    y = np.stack([g.standard_normal(d) for g in streams.init_generators]) * math.sqrt(1.0 + p["eta_sq"])
    oracle = ShellPerturbedOracle(ExactOracle(prior), spec)
    euler_maruyama_run(state, posterior_drift(oracle, model, y), variance_minimizer(p["eta_sq"]), StepPolicy(h=p["h"]))
    inside = float(np.mean(spec.indicator(state.x)))
    rows.append(["langevin_in_shell_fraction_at_t_star", inside, float("nan"),
                 math.sqrt(inside * (1 - inside) / p["n_chains"])])
    summary = {
        "M": M, "M_over_eps": M / p["eps"], "shell_mass": spec.shell_mass, "sigma_sq": sigma_sq,
        "prior_moment_k": moment, "prior_moment_rel_se": moment_rel_se, "eps_pow_k": p["eps"] ** p["k"],
        "contracted_prob_error_ge_M": frac,
        "prob_lower_bound": 1.0 - 2.0 * math.exp(-p["rho"] ** 2 * d / 8.0),
        "langevin_in_shell_fraction": inside,
    }
    return ["quantity", "value", "reference", "mc_stderr"], rows, summary


# ---------------------------------------------------------- compressed sensing

COMPRESSED_SENSING = {
    "d": 8, "m": 3, "a_norm": 1.0, "eta": 0.5, "trials": 500, "delta": 0.05, "warm_radius": 1.0,
    "h": 0.01, "alpha": 1.0, "lam": 2.0, "eps": 0.5, "locality_radius": 1.0, "C": 1.0,
    "posterior_draws": 200,
}


def compressed_sensing_experiment(p, seed):
    """Warm-started reconstruction on the Gaussian testbed, one annealed run
    per trial; ``r_opt`` is the ``1 - delta`` quantile of ``|x_post - x|`` over
    exact posterior draws given the same ``(x0', y)``."""
    problem_seed, trial_seed = _seeds(seed, 2)
    rng = make_rng(problem_seed)
    d, m = p["d"], p["m"]
    A = _random_operator(rng, m, d, p["a_norm"])
    model = MeasurementModel(A, p["eta"])
    prior = IsotropicGaussian.standard(d)
    params = ScheduleParams(alpha=p["alpha"], d=d, m=m, lam=p["lam"], eps=p["eps"], R=p["locality_radius"], C=p["C"])
    policy = StepPolicy(h=p["h"])
    prior_summary = GaussianSummary.of_prior(prior)
    trial_seeds = _seeds(trial_seed, p["trials"])
    errors, post_errors, rows = [], [], []
    for t, ts in enumerate(trial_seeds):
        trng = make_rng(ts)
        x = prior.sample(trng, 1)[0]
        y = simulate_measurement(x, model, trng)
        direction = trng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        x0 = x + p["warm_radius"] * trng.uniform() ** (1.0 / d) * direction
        cfg = RunConfig(params, policy, n_chains=1, seed=int(trng.integers(2 ** 63)))
        xhat, art = compressed_sensing(prior, None, x0, y, model, p["warm_radius"], p["delta"], cfg)
        # posterior given x0' and y: x0' acts as a measurement with identity operator
        stacked = MeasurementModel(np.vstack([A / p["eta"], np.eye(d) / art.extra["sigma"]]), 1.0)
        target = gaussian_posterior_closed_form(
            prior_summary, stacked, np.concatenate([y / p["eta"], np.asarray(art.extra["x0"]) / art.extra["sigma"]]))
        L = np.linalg.cholesky(target.cov)
        draws = target.mean + trng.standard_normal((p["posterior_draws"], d)) @ L.T
        post_errors.append(np.linalg.norm(draws - x, axis=1))
        err = float(np.linalg.norm(xhat - x))
        errors.append(err)
        rows.append([t, err, float(np.linalg.norm(x0 - x)), float(np.linalg.norm(target.mean - x)), art.steps])
    r_opt = float(np.quantile(np.concatenate(post_errors), 1.0 - p["delta"]))
    errors = np.array(errors)
    failures = int(np.sum(errors > 2.0 * r_opt))
    summary = {
        "r_opt": r_opt,
        "failures": failures,
        "failure_rate": failures / len(errors),
        "allowed_failure_rate": 5.0 * p["delta"],
        "median_error": float(np.median(errors)),
        "sigma": p["warm_radius"] / p["delta"],
    }
    return ["trial", "error", "warm_start_error", "posterior_mean_error", "steps"], rows, summary


# --------------------------------------------------------------- schedule report

SCHEDULE_REPORT = {"d": 4, "m": 2, "a_norm": 1.0, "eta": 1.0, "alpha": 1.0, "lam": 10.0, "eps": 0.1,
                   "locality_radius": 10.0, "C": 10.0}


def schedule_problem(p, seed):
    (problem_seed,) = _seeds(seed, 1)
    A = _random_operator(make_rng(problem_seed), p["m"], p["d"], p["a_norm"])
    model = MeasurementModel(A, p["eta"])
    params = ScheduleParams(alpha=p["alpha"], d=p["d"], m=p["m"], lam=p["lam"], eps=p["eps"],
                            R=p["locality_radius"], C=p["C"])
    return model, params


def schedule_report_experiment(p, seed):
    model, params = schedule_problem(p, seed)
    ladder = build_admissible_schedule(model, params)
    report = validate_schedule(ladder)
    rows = [list(r) for r in ladder.rows()]
    summary = {"N": ladder.N, "total_time": ladder.total_time, "rung_count_bound": rung_count_bound(params, model),
               "valid": report.passed}
    summary.update({f"slack[{c.name}]": c.slack for c in report.clauses})
    return ["index", "eta", "gamma", "T", "cumulative_T"], rows, summary


# ------------------------------------------------------------------- registry

EXPERIMENTS: dict[str, tuple[dict, Callable]] = {
    "variance-curve": (VARIANCE_CURVE, variance_curve_experiment),
    "gaussian-posterior": (GAUSSIAN_POSTERIOR, gaussian_posterior_experiment),
    "rung-stability": (GAUSSIAN_POSTERIOR, rung_stability_experiment),
    "ring": (RING, ring_experiment),
    "ring-posterior": (RING_POSTERIOR, ring_posterior_experiment),
    "amplification": (AMPLIFICATION, amplification_experiment),
    "compressed-sensing": (COMPRESSED_SENSING, compressed_sensing_experiment),
    "schedule-report": (SCHEDULE_REPORT, schedule_report_experiment),
}


def experiment_schema(name) -> dict:
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(sorted(EXPERIMENTS))}")
    return dict(EXPERIMENTS[name][0])


def resolve_params(name, params: Mapping) -> dict:
    """Defaults overridden by ``params``; values may be typed or raw strings."""
    schema = experiment_schema(name)
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(schema))}")
    raw = {k: v for k, v in params.items() if isinstance(v, str) and not isinstance(schema[k], str)}
    values = apply_schema(raw, schema, name)
    for k, v in params.items():
        if k not in raw:
            values[k] = type(schema[k])(v) if not isinstance(schema[k], tuple) else tuple(float(x) for x in v)
    return values


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run ``spec`` and, if ``spec.out_dir`` is set, write ``<name>.csv`` and ``<name>.json``."""
    params = resolve_params(spec.name, spec.params)
    body = EXPERIMENTS[spec.name][1]
    start = time.perf_counter()
    try:
        columns, rows, summary = body(params, spec.seed)
    except (SamplerError, ValueError) as exc:
        exc.args = (f"experiment {spec.name} (seed {spec.seed}): {exc}",) + exc.args[1:]
        raise
    result = ExperimentResult(spec.name, columns, rows, summary, params, spec.seed, time.perf_counter() - start)
    if spec.out_dir is not None:
        result.write(spec.out_dir)
    return result
