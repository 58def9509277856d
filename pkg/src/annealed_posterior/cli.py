"""Command line entry point ``sampler``.

``sampler schedule|run|experiment [name] --config PATH --seed N --out DIR [--threads K]``

Exit codes: 0 success, 2 invalid input or failed validation, 3 divergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError, DivergenceError, SamplerError
from .experiments import EXPERIMENTS, ExperimentSpec, experiment_schema, run_experiment, schedule_problem
from .langevin import StepPolicy
from .measurement import MeasurementModel, simulate_measurement
from .priors import GaussianMixture, IsotropicGaussian, RingPrior
from .rng import make_rng, seed_sequence
from .samplers import RunConfig, compressed_sensing, gaussian_sampler, posterior_sampler
from .schedule import NoiseLadder, ScheduleParams, build_admissible_schedule, validate_schedule
from .scores import ShellPerturbation

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 2, 3

SCHEDULE_SCHEMA = dict(experiment_schema("schedule-report"), a_file="")

RUN_SCHEMA = {
    "prior": "gaussian",
    "prior_var": 1.0,
    "ring_width": 0.1,
    "mixture_separation": 3.0,
    "d": 8,
    "m": 3,
    "a_norm": 1.0,
    "a_file": "",
    "y_file": "",
    "eta": 0.5,
    "n_chains": 1000,
    "h": "0.01",
    "max_steps": 10 ** 8,
    "record_stride": 0,
    "guard": 1e6,
    "initializer": "exact",
    "reverse_time": 5.0,
    "oracle": "exact",
    "shell_rho": 0.3,
    "shell_k": 4.0,
    "shell_eps": 0.1,
    "alpha": 1.0,
    "lam": 10.0,
    "eps": 0.1,
    "locality_radius": 1.0,
    "C": 1.0,
    "sigma": 1.0,
    "x0": (),
    "warm_radius": 1.0,
    "delta": 0.05,
    "snapshots": False,
}

ALGORITHMS = ("posterior", "gaussian", "compressed-sensing")


def _load_matrix(path) -> np.ndarray:
    try:
        return np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read matrix from {path}: {exc}") from None


def _operator(cfg, rng):
    if cfg["a_file"]:
        return _load_matrix(cfg["a_file"])
    A = rng.standard_normal((cfg["m"], cfg["d"]))
    return A * (cfg["a_norm"] / np.linalg.norm(A, 2))


def _prior(cfg, d):
    kind = cfg["prior"]
    if kind == "gaussian":
        return IsotropicGaussian(np.zeros(d), cfg["prior_var"])
    if kind == "ring":
        if d != 2:
            raise ConfigError("the ring prior lives in d = 2")
        return RingPrior(cfg["ring_width"])
    if kind == "mixture":
        c = cfg["mixture_separation"] * np.ones(d)
        return GaussianMixture([0.5, 0.5], np.stack([c, -c]), cfg["prior_var"])
    raise ConfigError(f"prior must be gaussian, ring or mixture, got {kind!r}")


def _step(cfg):
    text = cfg["h"].strip()
    if text == "auto":
        h = "auto"
    else:
        try:
            h = float(text)
        except ValueError:
            raise ConfigError(f"h: expected a number or 'auto', got {text!r}") from None
    return StepPolicy(h=h, max_steps=cfg["max_steps"], record_stride=cfg["record_stride"], guard=cfg["guard"])


def write_schedule_csv(stream, ladder: NoiseLadder) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["index", "eta", "gamma", "T", "cumulative_T"])
    for i, eta, g, t, c in ladder.rows():
        w.writerow([i, repr(eta), "" if g != g else repr(g), repr(t), repr(c)])


def cmd_schedule(args) -> int:
    cfg = load_config(args.config, SCHEDULE_SCHEMA, "schedule")
    if cfg["a_file"]:
        A = _load_matrix(cfg["a_file"])
        model = MeasurementModel(A, cfg["eta"])
        params = ScheduleParams(alpha=cfg["alpha"], d=model.d, m=model.m, lam=cfg["lam"], eps=cfg["eps"],
                                R=cfg["locality_radius"], C=cfg["C"])
    else:
        model, params = schedule_problem(cfg, args.seed)
    ladder = build_admissible_schedule(model, params)
    report = validate_schedule(ladder)
    write_schedule_csv(sys.stdout, ladder)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "schedule.csv", "w", newline="") as fh:
            write_schedule_csv(fh, ladder)
        doc = {
            "seed": args.seed,
            "N": ladder.N,
            "valid": report.passed,
            "clauses": [{"name": c.name, "passed": bool(c.passed),
                         "slack": float(c.slack) if math.isfinite(c.slack) else str(c.slack)} for c in report.clauses],
            "A": model.A.tolist(),
            "eta": model.eta,
        }
        (out / "schedule.json").write_text(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_run(args) -> int:
    algorithm = args.name or "posterior"
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"run: algorithm must be one of {', '.join(ALGORITHMS)}")
    cfg = load_config(args.config, RUN_SCHEMA, "run")
    problem_seq, run_seq = seed_sequence(args.seed).spawn(2)
    rng = make_rng(problem_seq)
    A = _operator(cfg, rng)
    model = MeasurementModel(A, cfg["eta"])
    prior = _prior(cfg, model.d)
    truth = None
    if cfg["y_file"]:
        y = _load_matrix(cfg["y_file"]).ravel()
    else:
        truth = prior.sample(rng, 1)[0]
        y = simulate_measurement(truth, model, rng)
    perturbation = None
    if cfg["oracle"] == "shell-perturbed":
        perturbation = ShellPerturbation.along_first_axis(model.d, cfg["shell_rho"], cfg["shell_k"], cfg["shell_eps"])
    params = ScheduleParams(alpha=cfg["alpha"], d=model.d, m=model.m, lam=cfg["lam"], eps=cfg["eps"],
                            R=cfg["locality_radius"], C=cfg["C"])
    run_cfg = RunConfig(params, _step(cfg), n_chains=cfg["n_chains"], seed=int(run_seq.generate_state(1)[0]),
                        initializer=cfg["initializer"], oracle=cfg["oracle"], perturbation=perturbation,
                        snapshots=cfg["snapshots"], reverse_time=cfg["reverse_time"])
    if algorithm != "posterior":
        if cfg["x0"]:
            x0 = np.array(cfg["x0"])
        elif truth is not None:
            x0 = truth + cfg["warm_radius"] * make_rng(problem_seq.spawn(1)[0]).uniform(-1, 1, model.d) / np.sqrt(model.d)
        else:
            raise ConfigError("x0 is required when y comes from a file")
    if algorithm == "posterior":
        art = posterior_sampler(prior, None, y, model, run_cfg)
    elif algorithm == "gaussian":
        art = gaussian_sampler(prior, None, x0, y, model, cfg["sigma"], run_cfg)
    else:
        xhat, art = compressed_sensing(prior, None, x0, y, model, cfg["warm_radius"], cfg["delta"], run_cfg)
        art.extra["reconstruction"] = [float(v) for v in xhat]
    art.extra["algorithm"] = algorithm
    art.extra["cli_seed"] = args.seed
    art.extra["y"] = [float(v) for v in y]
    if truth is not None:
        art.extra["truth"] = [float(v) for v in truth]
    out = Path(args.out or ".")
    path = art.save(out)
    print(path)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if not args.name:
        raise ConfigError(f"experiment name required; choose from {', '.join(sorted(EXPERIMENTS))}")
    schema = experiment_schema(args.name)
    params = load_config(args.config, schema, args.name)
    spec = ExperimentSpec(args.name, params, args.seed, Path(args.out or "."))
    result = run_experiment(spec)
    print(json.dumps({k: v for k, v in result.manifest(f"{args.name}.csv").items() if k != "parameters"},
                     indent=2, default=str))
    return EXIT_OK


COMMANDS = {"schedule": cmd_schedule, "run": cmd_run, "experiment": cmd_experiment}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sampler", description="Annealed Langevin posterior sampling toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("name", nargs="?", help="experiment name, or algorithm for 'run'")
    parser.add_argument("--config", help="flat 'key = value' config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if args.threads is not None:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=args.threads)
    else:
        limiter = nullcontext()
    try:
        with limiter:
            return COMMANDS[args.command](args)
    except BrokenPipeError:
        # downstream reader closed early (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (SamplerError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
