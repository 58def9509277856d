"""Special-function helpers that stay finite for large arguments."""

from __future__ import annotations

import numpy as np
from scipy import special, stats


def log_i0(z):
    """``log I_0(z)`` for ``z >= 0`` via the exponentially scaled Bessel function."""
    z = np.asarray(z, dtype=float)
    return np.log(special.i0e(z)) + z


def bessel_ratio(z):
    """``I_1(z) / I_0(z)``; the scaling factors ``e^{-z}`` cancel."""
    z = np.asarray(z, dtype=float)
    return special.i1e(z) / special.i0e(z)


def von_mises_cos_variance(z):
    """``Var(cos theta)`` for ``theta ~ vonMises(0, z)``: ``(1 + I_2/I_0)/2 - (I_1/I_0)^2``.

    With ``I_2 = I_0 - (2/z) I_1`` this is ``1 - r^2 - r/z`` for ``r = I_1/I_0``;
    it lies in ``[0, 1/2]``.  Near ``z = 0`` the series
    ``1/2 - 3z^2/16 + 5z^4/96`` replaces the ``0/0`` quotient.
    """
    z = np.asarray(z, dtype=float)
    r = bessel_ratio(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (1.0 - r) * (1.0 + r) - r / z
    z2 = z * z
    series = 0.5 + z2 * (-3.0 / 16.0 + z2 * (5.0 / 96.0))
    return np.where(z < 1e-3, series, direct)


def chi2_interval_mass(d: int, lo: float, hi: float) -> float:
    """``P[lo <= chi2_d <= hi]`` from the regularized incomplete gamma function."""
    lo = max(lo, 0.0)
    if hi <= lo:
        return 0.0
    # difference of survival functions keeps precision when both tails are tiny
    if lo > d:
        return float(stats.chi2.sf(lo, d) - stats.chi2.sf(hi, d))
    return float(stats.chi2.cdf(hi, d) - stats.chi2.cdf(lo, d))
