"""Closed-form population sub-dimensional Mardia measures.

Covers Gaussian, spherical (Student-t, exponential power), skew-normal,
skew-t and the composite simulation models. Every family here is closed
under taking coordinate margins, so the per-subset value only needs the
marginal parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, log, pi, sqrt
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .core import Subset, SubsetCatalog, check_subset, enumerate_subsets
from .families import (
    CompositeModel,
    ExponentialPower,
    Gaussian,
    ParameterError,
    SkewNormal,
    SkewT,
    StudentT,
)

SQRT_2_OVER_PI = sqrt(2.0 / pi)


class MomentNonexistenceError(ValueError):
    pass


@dataclass(frozen=True)
class TheoreticalMeasures:
    beta1: float
    beta2: float  # NaN when the fourth moment does not exist
    subset: Subset | None = None


def gaussian_measures(q: int, subset: Subset | None = None) -> TheoreticalMeasures:
    return TheoreticalMeasures(0.0, float(q * (q + 2)), subset)


def spherical_measures(q: int, kappa: float, subset: Subset | None = None) -> TheoreticalMeasures:
    """Measures of a spherical law with kurtosis parameter ``kappa``.

    ``kappa`` is a third of the univariate excess kurtosis, so that
    ``beta2 = q(q + 2)(1 + kappa)``.
    """
    if not kappa > -1:
        raise ParameterError(f"kappa must exceed -1, got {kappa}")
    return TheoreticalMeasures(0.0, q * (q + 2) * (kappa + 1.0), subset)


def t_excess_kurtosis(nu: float) -> float:
    if not nu > 4:
        raise MomentNonexistenceError(f"Student-t kurtosis needs nu > 4, got {nu}")
    return 2.0 / (nu - 4.0)


def ep_excess_kurtosis(p: int, nu: float) -> float:
    """Kurtosis parameter ``kappa`` of the ``p``-variate exponential power law.

    ``beta2 = q(q + 2)(1 + kappa)`` on every ``q``-dimensional margin. It
    depends on the joint dimension ``p`` and is shared by all margins.
    """
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    if not nu > 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    a = 2.0 * nu
    log_ratio = gammaln((p + 4) / a) + gammaln(p / a) - 2.0 * gammaln((p + 2) / a)
    return p / (p + 2.0) * exp(log_ratio) - 1.0


def marginal_slant(omega, slant, s: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Slant vector and scale block of the margin on subset ``s``.

    Shared by the skew-normal and skew-t families.
    """
    omega = np.asarray(omega, dtype=float)
    slant = np.asarray(slant, dtype=float)
    p = omega.shape[0]
    s = check_subset(s, p)
    keep = np.asarray(s) - 1
    drop = np.setdiff1d(np.arange(p), keep)
    o_qq = omega[np.ix_(keep, keep)]
    if drop.size == 0:
        return slant.copy(), o_qq
    o_qr = omega[np.ix_(keep, drop)]
    o_rr = omega[np.ix_(drop, drop)]
    try:
        chol = np.linalg.cholesky(o_qq)
    except np.linalg.LinAlgError:
        raise ParameterError(f"scale block for subset {s} is singular") from None
    solve = lambda b: np.linalg.solve(chol.T, np.linalg.solve(chol, b))
    l_r = slant[drop]
    schur = o_rr - o_qr.T @ solve(o_qr)
    num = slant[keep] + solve(o_qr @ l_r)
    return num / sqrt(1.0 + float(l_r @ schur @ l_r)), o_qq


def sn_marginal_lambda(spec: SkewNormal, s: Sequence[int]) -> float:
    """Summary (canonical) slant of the skew-normal margin on ``s``."""
    lam, o_qq = marginal_slant(spec.omega, spec.slant, s)
    return sqrt(max(float(lam @ o_qq @ lam), 0.0))


def sn_measures(lambda_star: float, q: int, subset: Subset | None = None) -> TheoreticalMeasures:
    if lambda_star < 0:
        raise ParameterError(f"lambda_star must be >= 0, got {lambda_star}")
    b = SQRT_2_OVER_PI
    l2 = lambda_star ** 2
    g = l2 / (1.0 + (1.0 - b * b) * l2)
    gamma1 = b * (2 * b * b - 1) * g ** 1.5
    gamma2 = 2 * b * b * (2 - 3 * b * b) * g * g
    return TheoreticalMeasures(gamma1 ** 2, gamma2 + q * (q + 2), subset)


def st_marginal_alpha(spec: SkewT, s: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    return marginal_slant(spec.omega, spec.slant, s)


def _log_b_nu(nu: float) -> float:
    return 0.5 * log(nu) + gammaln((nu - 1) / 2) - 0.5 * log(pi) - gammaln(nu / 2)


def st_measures(alpha, omega, nu: float, q: int | None = None,
                subset: Subset | None = None) -> TheoreticalMeasures:
    """Mardia measures of a ``q``-variate skew-t with slant ``alpha`` and scale ``omega``.

    Skewness needs ``nu > 3`` and kurtosis ``nu > 4``; for ``3 < nu <= 4``
    only ``beta1`` is returned (``beta2`` is NaN).
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    omega = np.atleast_2d(np.asarray(omega, dtype=float))
    q = alpha.size if q is None else q
    if not nu > 3:
        raise MomentNonexistenceError(f"skew-t skewness needs nu > 3, got {nu}")
    a2 = float(alpha @ omega @ alpha)
    d2 = a2 / (1.0 + a2)
    mu = exp(_log_b_nu(nu)) * sqrt(d2)
    mu2 = mu * mu
    s2 = nu / (nu - 2.0) - mu2
    bracket = nu * (3 - d2) / (nu - 3) - 3 * nu / (nu - 2) + 2 * mu2
    # third standardized moment of the slanted canonical coordinate, squared
    beta1_star = mu2 * bracket ** 2 / s2 ** 3
    # coupling through the shared mixing variable: E[Z0 W_k^2] = mu / (sigma (nu - 3))
    beta1 = beta1_star + 3 * (q - 1) * mu2 / ((nu - 3) ** 2 * s2)
    if not nu > 4:
        return TheoreticalMeasures(beta1, float("nan"), subset)
    beta2_star = (
        3 * nu ** 2 / ((nu - 2) * (nu - 4))
        - 4 * mu2 * nu * (3 - d2) / (nu - 3)
        + 6 * mu2 * nu / (nu - 2)
        - 3 * mu2 * mu2
    ) / s2 ** 2
    beta2 = (
        beta2_star
        + (q * q - 1) * (nu - 2) / (nu - 4)
        + 2 * (q - 1) / s2 * (nu / (nu - 4) - (nu - 1) * mu2 / (nu - 3))
    )
    return TheoreticalMeasures(beta1, beta2, subset)


def _block_measures(spec, s: Subset) -> TheoreticalMeasures:
    q = len(s)
    if isinstance(spec, Gaussian):
        return gaussian_measures(q, s)
    if isinstance(spec, StudentT):
        return spherical_measures(q, t_excess_kurtosis(spec.nu), s)
    if isinstance(spec, ExponentialPower):
        return spherical_measures(q, ep_excess_kurtosis(spec.p, spec.nu), s)
    if isinstance(spec, SkewNormal):
        return sn_measures(sn_marginal_lambda(spec, s), q, s)
    if isinstance(spec, SkewT):
        alpha, o_qq = st_marginal_alpha(spec, s)
        return st_measures(alpha, o_qq, spec.nu, q, s)
    raise TypeError(f"unsupported family {type(spec).__name__}")


def _composite_measures(model: CompositeModel, s: Subset) -> TheoreticalMeasures:
    inner = tuple(i for i in s if i <= model.q)
    q_out = len(s) - len(inner)
    if not inner:
        return gaussian_measures(len(s), s)
    m = _block_measures(model.block, inner)
    q_in = len(inner)
    # independent blocks: skewness adds, kurtosis picks up 2 E[m_a] E[m_b]
    beta2 = m.beta2 + 2 * q_in * q_out + q_out * (q_out + 2)
    return TheoreticalMeasures(m.beta1, beta2, s)


def subdimensional_theory(spec, catalog: SubsetCatalog | None = None) -> list[TheoreticalMeasures]:
    """Population ``(beta1, beta2)`` for every subset in ``catalog`` (all subsets by default)."""
    catalog = enumerate_subsets(spec.p) if catalog is None else catalog
    if catalog.p != spec.p:
        raise ParameterError(f"catalog dimension {catalog.p} != family dimension {spec.p}")
    if isinstance(spec, CompositeModel):
        return [_composite_measures(spec, s) for s in catalog]
    return [_block_measures(spec, s) for s in catalog]
