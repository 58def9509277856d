"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed to the
terminal even under output capture) or directly with
``python3 tests/test_acceptance.py``.  Heavy experiments run once per session
and are shared between criteria.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

sys.path.insert(0, str(Path(__file__).resolve().parent))

from annealed_posterior import (ExperimentSpec, MeasurementModel, build_admissible_schedule,  # noqa: E402
                                gaussian_mgf_bound, laurent_massart_tail, mi_tv_bound, run_experiment,
                                validate_schedule)
from annealed_posterior.evaluation import scalar_gaussian_tv  # noqa: E402
from annealed_posterior.schedule import quadratic_sequence_bound, quadratic_sequence_length  # noqa: E402
from test_schedule import SEQUENCE_CONSTANT, random_problem, rung_counts_over_m  # noqa: E402

SEED = 0  # fixed before any run; never tuned

# ------------------------------------------------------------------ pinned tolerances
C1_Z, C1_RUNTIME = 3.0, 120.0
C2_Z, C2_COV, C2_NORM, C2_RUNTIME = 3.0, 0.10, 2.0, 600.0
C4_SETS = 200
C5_CENTER_REL, C5_FD_REL, C5_RUNTIME = 0.01, 1e-4, 60.0
C6_SIGMA, C6_RATIO, C6_RUNTIME = 3.0, 10.0, 60.0
C7_FRACTION, C7_LEVEL, C7_RUNTIME = 0.99, 0.01, 600.0
C8_FACTOR, C8_RUNTIME = 5.0, 600.0
C9_DRAWS = 10 ** 5


def emit(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    print(line, flush=True)
    return passed


@functools.lru_cache(maxsize=None)
def experiment(name):
    return run_experiment(ExperimentSpec(name, {}, SEED))


# ------------------------------------------------------------------ criteria

def criterion_1():
    res = experiment("variance-curve")
    s = res.summary
    z = abs(s["empirical_var_at_t_star"] - 6.0 / 11.0) / s["stderr_at_t_star"]
    argmin_ok = abs(s["empirical_argmin_t"] - s["t_star"]) <= s["grid_step"] * (1 + 1e-9)
    ok = z <= C1_Z and argmin_ok and res.wall_time <= C1_RUNTIME
    return emit(1, ok, f"Var(t*)={s['empirical_var_at_t_star']:.5f} vs 6/11 ({z:.2f} SE, need <= {C1_Z}); "
                       f"empirical argmin {s['empirical_argmin_t']:.4f} vs t*={s['t_star']:.4f} "
                       f"(cell {s['grid_step']:.4f}); {res.wall_time:.1f}s <= {C1_RUNTIME:.0f}s")


def criterion_2():
    res = experiment("rung-stability")  # the final rung of this run is the end-to-end check
    s = res.summary
    ok = (s["final_max_abs_z"] <= C2_Z and s["final_cov_frobenius_rel"] <= C2_COV and s["op_norm"] <= C2_NORM
          and res.wall_time <= C2_RUNTIME)
    return emit(2, ok, f"d=8 m=3 |A|={s['op_norm']:.3f} N={s['N']}: final max|z|={s['final_max_abs_z']:.2f} "
                       f"(<= {C2_Z}), cov rel={s['final_cov_frobenius_rel']:.4f} (<= {C2_COV}); "
                       f"{res.wall_time:.1f}s <= {C2_RUNTIME:.0f}s")


def criterion_3():
    res = experiment("rung-stability")
    s = res.summary
    z = np.abs(res.column("z_mean"))
    rung = res.column("rung")
    worst = int(rung[np.argmax(z)])
    ok = s["max_abs_z"] <= C2_Z and s["max_cov_frobenius_rel"] <= C2_COV
    return emit(3, ok, f"all {s['N'] - 1} rungs: max|z|={s['max_abs_z']:.2f} at rung {worst} (<= {C2_Z}; "
                       f"{int(np.sum(z > C2_Z))} of {z.size} coordinate tests exceed), "
                       f"max cov rel={s['max_cov_frobenius_rel']:.4f} (<= {C2_COV})")


def criterion_4():
    rng = np.random.default_rng(2024)
    valid = 0
    for _ in range(C4_SETS):
        model, params = random_problem(rng)
        ladder = build_admissible_schedule(model, params)
        good = validate_schedule(ladder).passed and np.all(np.diff(ladder.etas) < 0) and \
            np.all((ladder.gammas > 0) & (ladder.gammas <= 1))
        valid += int(good)
    mono_rng = np.random.default_rng(77)
    broken = {"eps": 0, "lam": 0, "R": 0, "m": 0}
    sweeps = 25
    for _ in range(sweeps):
        model, params = random_problem(mono_rng)

        def counts(key, values):
            return [build_admissible_schedule(model, replace(params, **{key: v})).N for v in values]

        n_eps = counts("eps", (0.05, 0.1, 0.2, 0.4, 0.8))
        broken["eps"] += any(a < b for a, b in zip(n_eps, n_eps[1:]))
        for key, values in (("lam", (1.5, 3.0, 6.0, 12.0, 24.0)), ("R", (0.1, 0.3, 1.0, 3.0))):
            n = counts(key, values)
            broken[key] += any(a > b for a, b in zip(n, n[1:]))
        n_m = rung_counts_over_m(model, params)
        broken["m"] += any(a > b for a, b in zip(n_m, n_m[1:]))
    ratios = [quadratic_sequence_length(a, b, x0, B) / quadratic_sequence_bound(a, b, x0, B)
              for a in np.logspace(-2, 2, 5) for b in np.logspace(-2, 2, 5)
              for x0 in np.logspace(-2, 1, 4) for B in np.logspace(0, 4, 3) if B > x0]
    seq_ok = max(ratios) <= SEQUENCE_CONSTANT
    ok = valid == C4_SETS and not any(broken.values()) and seq_ok
    viol = ", ".join(f"{k}: {v}/{sweeps}" for k, v in broken.items())
    return emit(4, ok, f"{valid}/{C4_SETS} fuzzed ladders admissible; monotonicity violations [{viol}]; "
                       f"sequence k/bound max={max(ratios):.3f} (recorded constant {SEQUENCE_CONSTANT})")


def criterion_5():
    res = experiment("ring")
    s = res.summary
    w = res.params["width"]
    center_rel = abs(s["tangential_at_smallest_radius"] / s["center_limit"] - 1.0)
    fd = max(s["max_rel_residual_radial"], s["max_rel_residual_tangential"])
    radial_ok = s["max_radial"] <= -1.0 / w ** 2
    ok = center_rel <= C5_CENTER_REL and fd <= C5_FD_REL and radial_ok and res.wall_time <= C5_RUNTIME
    return emit(5, ok, f"lambda_t(1e-4)={s['tangential_at_smallest_radius']:.2f} vs {s['center_limit']:.0f} "
                       f"(rel {center_rel:.1e} <= {C5_CENTER_REL}); FD residual max {fd:.1e} (<= {C5_FD_REL}); "
                       f"max lambda_r={s['max_radial']:.1f} vs required <= {-1.0 / w ** 2:.0f} "
                       f"[{'ok' if radial_ok else 'violated'}]; {res.wall_time:.1f}s")


def criterion_6():
    res = experiment("amplification")
    s = res.summary
    moment_ok = s["prior_moment_k"] <= s["eps_pow_k"] * (1.0 + C6_SIGMA * s["prior_moment_rel_se"])
    prob_ok = s["contracted_prob_error_ge_M"] >= s["prob_lower_bound"]
    ratio_ok = s["M_over_eps"] >= C6_RATIO
    ok = moment_ok and prob_ok and ratio_ok and res.wall_time <= C6_RUNTIME
    return emit(6, ok, f"E|e|^4={s['prior_moment_k']:.3e} vs eps^4={s['eps_pow_k']:.1e} "
                       f"[{'ok' if moment_ok else 'violated'}]; Pr[|e|>=M]={s['contracted_prob_error_ge_M']:.4f} "
                       f">= {s['prob_lower_bound']:.4f} [{'ok' if prob_ok else 'violated'}]; "
                       f"M/eps={s['M_over_eps']:.3f} vs >= {C6_RATIO} [{'ok' if ratio_ok else 'violated'}]; "
                       f"{res.wall_time:.1f}s")


def criterion_7():
    res = experiment("ring-posterior")
    s = res.summary
    ok = (s["band_fraction"] >= C7_FRACTION and s["same_side_fraction"] >= C7_FRACTION
          and s["energy_p_value"] > C7_LEVEL and res.wall_time <= C7_RUNTIME)
    return emit(7, ok, f"band {s['band_fraction']:.3f}, x0 side {s['same_side_fraction']:.3f} (>= {C7_FRACTION}); "
                       f"energy test p={s['energy_p_value']:.3f} (> {C7_LEVEL}); {res.wall_time:.1f}s")


def criterion_8():
    res = experiment("compressed-sensing")
    s = res.summary
    delta = res.params["delta"]
    ok = s["failure_rate"] <= C8_FACTOR * delta and res.wall_time <= C8_RUNTIME
    return emit(8, ok, f"{res.params['trials']} trials: failure rate {s['failure_rate']:.3f} "
                       f"(<= {C8_FACTOR * delta:.2f}), r_opt={s['r_opt']:.3f}; {res.wall_time:.1f}s")


def gaussian_tv_exact(mu1, v1, mu2, v2):
    """TV between scalar Gaussians from the crossing points of the two densities."""
    mu1 = np.asarray(mu1, dtype=float)
    if v1 == v2:
        return 2 * stats.norm.cdf(np.abs(mu1 - mu2) / (2 * math.sqrt(v1))) - 1
    s1, s2 = math.sqrt(v1), math.sqrt(v2)
    # log p1 - log p2 = 0 is a quadratic a x^2 + b x + c = 0
    a = 0.5 / v2 - 0.5 / v1
    b = mu1 / v1 - mu2 / v2
    c = 0.5 * mu2 ** 2 / v2 - 0.5 * mu1 ** 2 / v1 + math.log(s2 / s1)
    disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
    r1, r2 = np.sort(np.stack([(-b - disc) / (2 * a), (-b + disc) / (2 * a)]), axis=0)

    def mass(lo, hi, mu, s):
        return stats.norm.cdf((hi - mu) / s) - stats.norm.cdf((lo - mu) / s)

    inner = mass(r1, r2, mu1, s1) - mass(r1, r2, mu2, s2)
    return np.abs(inner)


def criterion_9():
    rng = np.random.default_rng(9)
    violations = {"laurent_massart": 0, "mgf": 0, "mi_tv": 0}
    checks = {k: 0 for k in violations}
    for _ in range(10):
        m = int(rng.integers(1, 30))
        t = float(rng.uniform(0.05, 5.0))
        hi, lo = laurent_massart_tail(m, t)
        v = stats.chi2.rvs(m, size=C9_DRAWS, random_state=rng)
        for frac in (np.mean(v >= hi), np.mean(v <= lo)):
            checks["laurent_massart"] += 1
            violations["laurent_massart"] += frac > math.exp(-t)
    for _ in range(10):
        d = int(rng.integers(1, 10))
        alpha = float(rng.uniform(-0.5, 0.3))
        gamma = float(rng.uniform(0.01, 0.5 - alpha - 0.01)) if alpha < 0.49 else 0.005
        beta = float(rng.uniform(-1.5, 1.5))
        z = np.linalg.norm(rng.standard_normal((C9_DRAWS, d)), axis=1)
        mc = np.mean(np.exp(alpha * z ** 2 + beta * z))
        checks["mgf"] += 1
        violations["mgf"] += mc > gaussian_mgf_bound(alpha, beta, gamma, d)
    for _ in range(10):
        a = float(rng.uniform(0.1, 3.0))
        v = float(rng.uniform(0.2, 4.0))
        eta1 = float(rng.uniform(0.5, 20.0))
        model = MeasurementModel(np.array([[a]]), eta1)
        x = rng.normal(0.0, math.sqrt(v), C9_DRAWS)
        y = a * x + eta1 * rng.standard_normal(C9_DRAWS)
        post_var = 1.0 / (1.0 / v + a * a / eta1 ** 2)
        post_mean = post_var * a * y / eta1 ** 2
        tv = gaussian_tv_exact(post_mean, post_var, 0.0, v)
        # spot-check the closed form against trapezoidal integration
        assert abs(tv[0] - scalar_gaussian_tv(post_mean[0], post_var, 0.0, v)) < 1e-6
        checks["mi_tv"] += 1
        violations["mi_tv"] += float(np.mean(tv)) > mi_tv_bound(model, math.sqrt(v), eta1)
    ok = not any(violations.values())
    detail = ", ".join(f"{k}: {violations[k]}/{checks[k]} violations" for k in violations)
    return emit(9, ok, f"{C9_DRAWS} draws per grid point; {detail}")


def criterion_10():
    emit_line = ("NOT-REPRODUCIBLE criterion 10: image-domain FID / L2 results need pretrained networks and GPUs; "
                 "covered by the property-based criteria 1-9 instead")
    print(emit_line, flush=True)
    return None


# ------------------------------------------------------------------ pytest entry points

@pytest.mark.slow
def test_criterion_1_variance_curve(capsys):
    with capsys.disabled():
        ok = criterion_1()
    assert ok


@pytest.mark.slow
def test_criterion_2_gaussian_conjugacy(capsys):
    with capsys.disabled():
        ok = criterion_2()
    assert ok


@pytest.mark.slow
def test_criterion_3_rung_stability(capsys):
    with capsys.disabled():
        ok = criterion_3()
    assert ok


def test_criterion_4_schedule_admissibility(capsys):
    with capsys.disabled():
        ok = criterion_4()
    assert ok


def test_criterion_5_ring_hessian(capsys):
    with capsys.disabled():
        ok = criterion_5()
    assert ok


def test_criterion_6_amplification(capsys):
    with capsys.disabled():
        ok = criterion_6()
    assert ok


@pytest.mark.slow
def test_criterion_7_ring_posterior(capsys):
    with capsys.disabled():
        ok = criterion_7()
    assert ok


@pytest.mark.slow
def test_criterion_8_compressed_sensing(capsys):
    with capsys.disabled():
        ok = criterion_8()
    assert ok


def test_criterion_9_bound_domination(capsys):
    with capsys.disabled():
        ok = criterion_9()
    assert ok


def test_criterion_10_not_reproducible(capsys):
    with capsys.disabled():
        criterion_10()
    pytest.skip("image-domain results are out of scope at desk scale")


if __name__ == "__main__":
    start = time.perf_counter()
    results = [fn() for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                               criterion_7, criterion_8, criterion_9, criterion_10)]
    failed = [i + 1 for i, r in enumerate(results) if r is False]
    print(f"{10 - len(failed) - 1} passed, {len(failed)} failed {failed}, 1 not reproducible "
          f"({time.perf_counter() - start:.0f}s)")
    sys.exit(1 if failed else 0)
