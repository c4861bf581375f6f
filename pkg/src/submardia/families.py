"""Parametric families used by both the closed-form theory and the samplers.

Skewed families use the slant on the unstandardized scale: a skew-normal
with scale ``omega`` and slant ``slant`` has density
``2 phi_p(x - xi; omega) Phi(slant' (x - xi))``. For unit-diagonal ``omega``
this coincides with the usual ``alpha`` parameterization. A skew-t is a
skew-normal divided by an independent ``sqrt(chi2_nu / nu)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    pass


def equicorrelation(p: int, rho: float = 0.5) -> np.ndarray:
    """``sigma_ij = rho + (1 - rho) 1(i == j)``."""
    return np.full((p, p), rho) + (1.0 - rho) * np.eye(p)


def _spd(m, name: str = "scale matrix") -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ParameterError(f"{name} must be square, got {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12):
        raise ParameterError(f"{name} must be symmetric")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ParameterError(f"{name} must be positive definite") from None
    return m


def _vector(v, p: int, name: str) -> np.ndarray:
    if v is None:
        return np.zeros(p)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (p,):
        raise ParameterError(f"{name} must have length {p}, got {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class Gaussian:
    cov: np.ndarray
    mean: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "cov", _spd(self.cov, "cov"))
        object.__setattr__(self, "mean", _vector(self.mean, self.p, "mean"))

    @property
    def p(self) -> int:
        return self.cov.shape[0]


@dataclass(frozen=True, eq=False)
class StudentT:
    omega: np.ndarray
    nu: float
    xi: np.ndarray | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "omega", _spd(self.omega))
        object.__setattr__(self, "xi", _vector(self.xi, self.p, "xi"))

    @property
    def p(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True, eq=False)
class ExponentialPower:
    """Density proportional to ``exp(-{(x - xi)' omega^-1 (x - xi)}^nu / 2)``."""

    omega: np.ndarray
    nu: float
    xi: np.ndarray | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "omega", _spd(self.omega))
        object.__setattr__(self, "xi", _vector(self.xi, self.p, "xi"))

    @property
    def p(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True, eq=False)
class SkewNormal:
    omega: np.ndarray
    slant: np.ndarray
    xi: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "omega", _spd(self.omega))
        object.__setattr__(self, "slant", _vector(self.slant, self.p, "slant"))
        object.__setattr__(self, "xi", _vector(self.xi, self.p, "xi"))

    @property
    def p(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True, eq=False)
class SkewT:
    omega: np.ndarray
    slant: np.ndarray
    nu: float
    xi: np.ndarray | None = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ParameterError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "omega", _spd(self.omega))
        object.__setattr__(self, "slant", _vector(self.slant, self.p, "slant"))
        object.__setattr__(self, "xi", _vector(self.xi, self.p, "xi"))

    @property
    def p(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True)
class CompositeModel:
    """Non-Gaussian block on the first ``q`` coordinates, independent
    ``N(0, Sigma)`` on the remaining ``p - q``.

    Model 1: skew-normal block with slant ``alpha * 1_q``.
    Model 2: Student-t block with ``nu`` degrees of freedom.
    Model 3: skew-t block with ``nu`` degrees of freedom and slant
    ``(1 / nu) * 1_q`` (``alpha`` is ignored).
    Both blocks use the equicorrelation matrix with off-diagonal ``rho``.
    """

    model: int
    p: int = 5
    q: int = 2
    alpha: float | None = None
    nu: float | None = None
    rho: float = 0.5

    def __post_init__(self):
        if self.model not in (1, 2, 3):
            raise ParameterError(f"model must be 1, 2 or 3, got {self.model}")
        if not 1 <= self.q <= self.p:
            raise ParameterError(f"need 1 <= q <= p, got q={self.q}, p={self.p}")
        if self.model == 1 and self.alpha is None:
            raise ParameterError("model 1 needs alpha")
        if self.model in (2, 3) and self.nu is None:
            raise ParameterError(f"model {self.model} needs nu")

    @property
    def block(self) -> SkewNormal | StudentT | SkewT:
        sigma = equicorrelation(self.q, self.rho)
        ones = np.ones(self.q)
        if self.model == 1:
            return SkewNormal(sigma, self.alpha * ones)
        if self.model == 2:
            return StudentT(sigma, self.nu)
        return SkewT(sigma, ones / self.nu, self.nu)

    @property
    def rest(self) -> Gaussian | None:
        if self.q == self.p:
            return None
        return Gaussian(equicorrelation(self.p - self.q, self.rho))

    @property
    def slant_alpha(self) -> float | None:
        if self.model == 1:
            return self.alpha
        if self.model == 3:
            return 1.0 / self.nu
        return None
