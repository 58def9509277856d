"""Closed-form Gaussian oracles, divergences, two-sample statistics and
concentration bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import RejectedInputError
from .measurement import MeasurementModel
from .rng import make_rng

_SYM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """Mean vector and covariance matrix of a Gaussian."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float)).copy()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float)).copy()
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise RejectedInputError(f"mean shape {mean.shape} and cov shape {cov.shape} disagree")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise RejectedInputError("non-finite moments")
        scale = max(1.0, float(np.max(np.abs(cov))))
        if np.max(np.abs(cov - cov.T)) > _SYM_TOL * scale:
            raise RejectedInputError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.min(np.linalg.eigvalsh(cov)) < -_SYM_TOL * scale:
            raise RejectedInputError("covariance is not positive semi-definite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def of_samples(cls, samples) -> "GaussianSummary":
        samples = np.asarray(samples, dtype=float)
        return cls(samples.mean(axis=0), np.atleast_2d(np.cov(samples, rowvar=False)))

    @classmethod
    def of_prior(cls, prior) -> "GaussianSummary":
        """Moments of an analytic Gaussian prior."""
        return cls(np.broadcast_to(prior.mean, (prior.dim,)), prior.cov)


def _inv_spd(M, what):
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise RejectedInputError(f"{what} is not positive definite") from None
    Li = np.linalg.solve(L, np.eye(M.shape[0]))
    return Li.T @ Li, 2.0 * float(np.sum(np.log(np.diag(L))))


def gaussian_posterior_closed_form(prior: GaussianSummary, model: MeasurementModel, y) -> GaussianSummary:
    """``p(x | y)`` for prior ``N(mu, S)``: precision ``S^-1 + A^T A / eta^2`` and
    mean ``S_post (S^-1 mu + A^T y / eta^2)``."""
    if prior.d != model.d:
        raise RejectedInputError("prior dimension does not match A")
    y = model.check_observation(y)
    prec0, _ = _inv_spd(prior.cov, "prior covariance")
    A, e2 = model.A, model.eta ** 2
    prec = prec0 + A.T @ A / e2
    rhs = prec0 @ prior.mean + A.T @ y / e2
    L = np.linalg.cholesky(prec)
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    Li = np.linalg.solve(L, np.eye(model.d))
    return GaussianSummary(mean, Li.T @ Li)


def chi_square_gaussians(p: GaussianSummary, q: GaussianSummary) -> float:
    """``chi^2(p || q) = E_q[(p/q)^2] - 1`` in closed form; ``math.inf`` if divergent.

    The integral converges iff ``L = 2 S_p^-1 - S_q^-1`` is positive definite,
    and then equals
    ``|S_q|^{1/2} / (|S_p| |L|^{1/2}) exp(b^T L^-1 b / 2 - mu_p^T S_p^-1 mu_p
    + mu_q^T S_q^-1 mu_q / 2) - 1`` with ``b = 2 S_p^-1 mu_p - S_q^-1 mu_q``.
    """
    if p.d != q.d:
        raise RejectedInputError("dimension mismatch")
    Pp, logdet_p = _inv_spd(p.cov, "covariance of p")
    Pq, logdet_q = _inv_spd(q.cov, "covariance of q")
    Lam = 2.0 * Pp - Pq
    Lam = 0.5 * (Lam + Lam.T)
    if np.min(np.linalg.eigvalsh(Lam)) <= 0:
        return math.inf
    Lam_inv, logdet_L = _inv_spd(Lam, "integrability matrix")
    b = 2.0 * Pp @ p.mean - Pq @ q.mean
    expo = 0.5 * b @ Lam_inv @ b - p.mean @ Pp @ p.mean + 0.5 * q.mean @ Pq @ q.mean
    log_val = -logdet_p + 0.5 * logdet_q - 0.5 * logdet_L + expo
    if log_val > 700:
        return math.inf
    return max(math.expm1(log_val), 0.0)


def kl_gaussians(p: GaussianSummary, q: GaussianSummary) -> float:
    """``KL(p || q)`` for Gaussians."""
    if p.d != q.d:
        raise RejectedInputError("dimension mismatch")
    _, logdet_p = _inv_spd(p.cov, "covariance of p")
    Pq, logdet_q = _inv_spd(q.cov, "covariance of q")
    diff = q.mean - p.mean
    val = 0.5 * (np.trace(Pq @ p.cov) + diff @ Pq @ diff - p.d + logdet_q - logdet_p)
    return max(float(val), 0.0)


def tv_upper_bounds(p: GaussianSummary, q: GaussianSummary) -> float:
    """``min(sqrt(KL/2), sqrt(chi^2)/2)``, both upper bounds on ``TV(p, q)``."""
    pinsker = math.sqrt(kl_gaussians(p, q) / 2.0)
    chi = chi_square_gaussians(p, q)
    return min(pinsker, 0.5 * math.sqrt(chi), 1.0)


def _pairwise_mean(D) -> float:
    # row sums then a sorted total, so the result does not depend on sample order
    return float(math.fsum(np.sort(D.sum(axis=1)))) / D.size


def energy_distance(samples_a, samples_b) -> float:
    """Energy distance ``2 E|X - Y| - E|X - X'| - E|Y - Y'|`` (V-statistic)."""
    a, b = _as_samples(samples_a), _as_samples(samples_b)
    if a.shape[1] != b.shape[1]:
        raise RejectedInputError("samples have different dimensions")
    return max(2.0 * _pairwise_mean(cdist(a, b)) - _pairwise_mean(cdist(a, a)) - _pairwise_mean(cdist(b, b)), 0.0)


def _as_samples(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise RejectedInputError("samples must be a non-empty (n, d) matrix")
    return x


@dataclass(frozen=True)
class EnergyTest:
    statistic: float
    p_value: float
    null_quantile_99: float
    n_permutations: int

    def passes(self, level: float = 0.01) -> bool:
        """True when equality of laws is not rejected at ``level``."""
        return self.p_value > level


def energy_test(samples_a, samples_b, n_permutations: int = 999, seed=0) -> EnergyTest:
    """Permutation test of equal laws using the energy distance.

    The pooled distance matrix is computed once.  For a labelling with
    indicator ``a`` (and ``b = 1 - a``) the within/between sums are quadratic
    forms ``a^T D a``, ``b^T D b``, ``a^T D b``, evaluated for a batch of
    permutations with one matrix product.
    """
    a, b = _as_samples(samples_a), _as_samples(samples_b)
    n, k = a.shape[0], b.shape[0]
    pooled = np.vstack([a, b])
    D = cdist(pooled, pooled)
    rng = make_rng(seed)
    labels = np.zeros((n_permutations + 1, n + k))
    labels[0, :n] = 1.0
    for i in range(1, n_permutations + 1):
        labels[i, rng.permutation(n + k)[:n]] = 1.0
    Da = labels @ D
    total = float(D.sum())
    s_aa = np.einsum("ij,ij->i", Da, labels)
    s_ab = Da.sum(axis=1) - s_aa
    s_bb = total - s_aa - 2.0 * s_ab
    stats = 2.0 * s_ab / (n * k) - s_aa / n ** 2 - s_bb / k ** 2
    observed, null = stats[0], stats[1:]
    p = (1.0 + np.sum(null >= observed)) / (n_permutations + 1.0)
    return EnergyTest(float(max(observed, 0.0)), float(p), float(np.quantile(null, 0.99)), n_permutations)


def laurent_massart_tail(m: int, t: float):
    """Thresholds ``(m + 2 sqrt(mt) + 2t, m - 2 sqrt(mt))``; a chi-square with ``m``
    degrees of freedom exceeds the first, or falls below the second, with
    probability at most ``e^{-t}`` each."""
    if m < 1 or int(m) != m:
        raise RejectedInputError("m must be a positive integer")
    if t < 0:
        raise RejectedInputError("t must be >= 0")
    root = 2.0 * math.sqrt(m * t)
    return m + root + 2.0 * t, m - root


def gaussian_mgf_bound(alpha: float, beta: float, gamma: float, d: int) -> float:
    """Upper bound ``exp(beta^2 / (4 gamma)) (1 - 2(alpha + gamma))^{-d/2}`` on
    ``E exp(alpha |Z|^2 + beta |Z|)`` for ``Z ~ N(0, I_d)``."""
    if not gamma > 0:
        raise RejectedInputError("gamma must be positive")
    if not alpha + gamma < 0.5:
        raise RejectedInputError("need alpha + gamma < 1/2")
    if d < 1:
        raise RejectedInputError("d must be positive")
    return math.exp(beta ** 2 / (4.0 * gamma) - 0.5 * d * math.log1p(-2.0 * (alpha + gamma)))


def mi_tv_bound(model: MeasurementModel, m2: float, eta1: float) -> float:
    """``|A| m2 / (2 eta1)``, bounding ``E_y TV(p(x | y_1), p(x))`` when
    ``m2^2 = E|x - E x|^2`` under the prior."""
    if m2 < 0:
        raise RejectedInputError("m2 must be >= 0")
    if not eta1 > 0:
        raise RejectedInputError("eta1 must be positive")
    return model.op_norm * m2 / (2.0 * eta1)


def scalar_gaussian_tv(mu1, var1, mu2, var2, n_grid: int = 20001) -> float:
    """TV between two scalar Gaussians by trapezoidal integration of ``|p - q| / 2``."""
    s = max(math.sqrt(var1), math.sqrt(var2))
    lo = min(mu1, mu2) - 12 * s
    hi = max(mu1, mu2) + 12 * s
    x = np.linspace(lo, hi, n_grid)
    p = np.exp(-0.5 * (x - mu1) ** 2 / var1) / math.sqrt(2 * math.pi * var1)
    q = np.exp(-0.5 * (x - mu2) ** 2 / var2) / math.sqrt(2 * math.pi * var2)
    return 0.5 * float(np.trapezoid(np.abs(p - q), x))
