"""Annealed posterior sampling, its Gaussian-conditioned variant, and the
compressed-sensing wrapper built on it."""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import RejectedInputError
from .langevin import (ChainState, StepPolicy, auto_step_size, euler_maruyama_run, posterior_drift,
                       reverse_diffusion_init, write_trajectory_csv)
from .measurement import CoupledObservations, MeasurementModel, build_coupled_ladder
from .rng import ChainStreams, make_rng, seed_sequence
from .schedule import NoiseLadder, ScheduleParams, build_admissible_schedule
from .scores import ConditionedOracle, ShellPerturbation, ShellPerturbedOracle, as_oracle

INITIALIZERS = ("exact", "reverse-diffusion")
ORACLES = ("exact", "shell-perturbed")


@dataclass(frozen=True)
class RunConfig:
    """Everything a sampler run needs besides the problem itself.

    ``chain_seeds`` overrides the per-chain seeds that are otherwise spawned
    from ``seed``; chain ``k`` then draws its initial point and its noise only
    from ``chain_seeds[k]``.
    """

    params: ScheduleParams
    policy: StepPolicy = StepPolicy()
    n_chains: int = 1
    seed: int = 0
    initializer: str = "exact"
    oracle: str = "exact"
    perturbation: Optional[ShellPerturbation] = None
    snapshots: bool = False
    reverse_time: float = 5.0
    chain_seeds: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.n_chains < 1:
            raise RejectedInputError("n_chains must be >= 1")
        if self.initializer not in INITIALIZERS:
            raise RejectedInputError(f"initializer must be one of {INITIALIZERS}")
        if self.oracle not in ORACLES:
            raise RejectedInputError(f"oracle must be one of {ORACLES}")
        if self.oracle == "shell-perturbed" and self.perturbation is None:
            raise RejectedInputError("shell-perturbed oracle needs a ShellPerturbation")
        if self.chain_seeds is not None and len(self.chain_seeds) != self.n_chains:
            raise RejectedInputError("chain_seeds must have one entry per chain")

    def with_seed(self, seed) -> "RunConfig":
        return replace(self, seed=seed)


@dataclass
class RunArtifact:
    """Result of a sampler run: one sample per chain plus provenance."""

    samples: np.ndarray
    ladder: NoiseLadder
    observations: CoupledObservations
    seeds: dict
    wall_time: float
    steps: int
    step_size: float
    initializer: str
    oracle: str
    snapshots: Optional[list] = None
    trajectory: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.samples.shape[0] < 1:
            raise RejectedInputError("an artifact needs at least one sample")

    @property
    def n_chains(self) -> int:
        return self.samples.shape[0]

    def to_json(self, samples_path: str) -> dict:
        p = self.ladder.params_ref
        return {
            "seeds": self.seeds,
            "ladder": [
                {"index": i, "eta": eta, "gamma": None if math.isnan(g) else g, "T": t, "cumulative_T": c}
                for i, eta, g, t, c in self.ladder.rows()
            ],
            "schedule_params": {"alpha": p.alpha, "d": p.d, "m": p.m, "lambda": p.lam, "eps": p.eps, "R": p.R, "C": p.C},
            "samples_path": samples_path,
            "n_chains": self.n_chains,
            "step_size": self.step_size,
            "steps": self.steps,
            "initializer": self.initializer,
            "oracle": self.oracle,
            "wall_time_s": self.wall_time,
            **self.extra,
        }

    def save(self, out_dir, stem: str = "run") -> Path:
        """Write ``<stem>_samples.csv`` and ``<stem>.json`` (plus
        ``<stem>_trajectory.csv`` when a trajectory was recorded); returns the JSON path."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        samples_name = f"{stem}_samples.csv"
        write_samples_csv(out / samples_name, self.samples)
        doc = self.to_json(samples_name)
        if self.trajectory:
            traj_name = f"{stem}_trajectory.csv"
            write_trajectory_csv(out / traj_name, self.trajectory)
            doc["trajectory_path"] = traj_name
        path = out / f"{stem}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        return path


def write_samples_csv(path, samples) -> None:
    samples = np.asarray(samples, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain_id"] + [f"x_{k + 1}" for k in range(samples.shape[1])])
        for i, row in enumerate(samples):
            w.writerow([i] + [repr(float(v)) for v in row])


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]])


def _streams(cfg: RunConfig):
    """(ladder generator, chain streams, seed record) for ``cfg``."""
    root = seed_sequence(cfg.seed)
    ladder_seq, chain_seq = root.spawn(2)
    if cfg.chain_seeds is None:
        streams = ChainStreams(chain_seq.spawn(cfg.n_chains))
        chain_record = "spawned"
    else:
        streams = ChainStreams(list(cfg.chain_seeds))
        chain_record = [int(s) for s in cfg.chain_seeds]
    record = {"root": cfg.seed, "ladder_stream": list(ladder_seq.spawn_key), "chain_seeds": chain_record}
    return make_rng(ladder_seq), streams, record


def _select_oracle(prior, oracle, cfg: RunConfig):
    if oracle is not None:
        return as_oracle(oracle)
    base = as_oracle(prior)
    if cfg.oracle == "shell-perturbed":
        return ShellPerturbedOracle(base, cfg.perturbation)
    return base


def posterior_sampler(prior, oracle, y, model: MeasurementModel, cfg: RunConfig) -> RunArtifact:
    """Annealed Langevin sampling of ``p(x | y)``.

    Builds the admissible ladder and the coupled observations ``y_1..y_N``,
    draws ``X ~ p`` and then, rung by rung, runs Langevin on
    ``p(x | y_{i+1})`` for time ``T_i`` with drift
    ``s(x) + A^T (y_{i+1} - A x) / eta_{i+1}^2`` frozen over each step.
    ``oracle = None`` picks the score oracle described by ``cfg``.
    """
    start = time.perf_counter()
    oracle = _select_oracle(prior, oracle, cfg)
    if oracle.dim != model.d:
        raise RejectedInputError(f"oracle dimension {oracle.dim} does not match d={model.d}")
    y = model.check_observation(y)
    if y.ndim != 1:
        raise RejectedInputError("y must be a single observation vector")
    ladder = build_admissible_schedule(model, cfg.params)
    ladder_rng, streams, seeds = _streams(cfg)
    obs = build_coupled_ladder(y, ladder, ladder_rng)
    h = auto_step_size(cfg.params, model) if cfg.policy.is_auto else float(cfg.policy.h)
    policy = cfg.policy.resolved(h)

    if cfg.initializer == "exact":
        state = ChainState.from_prior(prior, streams)
    else:
        state = reverse_diffusion_init(oracle, model.d, cfg.reverse_time, policy, streams)
        state.elapsed, state.steps = 0.0, 0

    snapshots = [state.x.copy()] if cfg.snapshots else None
    for k in range(ladder.N - 1):
        drift = posterior_drift(oracle, model, obs.ys[k + 1], eta=ladder.etas[k + 1])
        euler_maruyama_run(state, drift, float(ladder.times[k]), policy, rung=k + 1)
        if snapshots is not None:
            snapshots.append(state.x.copy())

    return RunArtifact(
        samples=state.x,
        ladder=ladder,
        observations=obs,
        seeds=seeds,
        wall_time=time.perf_counter() - start,
        steps=state.steps,
        step_size=h,
        initializer=cfg.initializer,
        oracle=getattr(oracle, "error_budget", "exact"),
        snapshots=snapshots,
        trajectory=state.trajectory,
    )


def gaussian_sampler(prior, oracle, x0, y, model: MeasurementModel, sigma: float, cfg: RunConfig) -> RunArtifact:
    """Sample ``p(x | x0, y)`` where ``x0 = x + N(0, sigma^2 I)`` is an extra measurement.

    The prior is replaced by ``p_{x0}(x) ∝ p(x) exp(-|x - x0|^2 / (2 sigma^2))``,
    whose smoothed scores come from the base oracle alone; analytic priors are
    initialised by exact draws from ``p_{x0}``.
    """
    if not (sigma > 0):
        raise RejectedInputError("sigma must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (model.d,):
        raise RejectedInputError(f"x0 must have shape ({model.d},)")
    sigma_sq = float(sigma) ** 2
    base = _select_oracle(prior, oracle, cfg)
    cond_oracle = ConditionedOracle(base, x0, sigma_sq)
    cond_prior = prior.conditioned(x0, sigma_sq)
    art = posterior_sampler(cond_prior, cond_oracle, y, model, cfg)
    art.extra["sigma"] = float(sigma)
    art.extra["x0"] = [float(v) for v in x0]
    return art


def compressed_sensing(prior, oracle, x0, y, model: MeasurementModel, R: float, delta: float, cfg: RunConfig):
    """Reconstruct from ``y`` given a warm start ``x0`` with ``|x0 - x| <= R``.

    Sets ``sigma = R / delta``, perturbs ``x0' = x0 + N(0, sigma^2 I)`` and
    returns the first chain's posterior sample under ``p(x | x0', y)``.
    """
    if not R > 0:
        raise RejectedInputError("R must be positive")
    if not 0 < delta < 1:
        raise RejectedInputError("delta must lie in (0, 1)")
    sigma = R / delta
    rng = make_rng(seed_sequence(cfg.seed).spawn(3)[2])
    x0p = np.asarray(x0, dtype=float) + sigma * rng.standard_normal(model.d)
    art = gaussian_sampler(prior, oracle, x0p, y, model, sigma, cfg)
    art.extra["R"] = float(R)
    art.extra["delta"] = float(delta)
    return art.samples[0].copy(), art
