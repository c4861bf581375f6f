"""Asymptotic null distributions of the max skewness and max kurtosis statistics.

Skewness: ``n b1`` for a subset is linearized as ``|sqrt(n) mean(u_j)|^2``
where ``u_j`` stacks ``sqrt(6) f_k(x_j)`` over the ``K(q)`` eigenfunctions
of the degenerate kernel. The eigenfunctions are estimated from the
leading eigenvectors of the ``n x n`` plug-in kernel matrix. Stacking the
features of all subsets and taking their sample covariance gives the
dispersion of the limiting Gaussian vector ``W``; the MaxS null is the
law of ``G(W)``.

Kurtosis: ``b2`` is linearized by the per-observation score
``m^2 - 2(q + 2) m`` (``m`` the squared Mahalanobis norm). Their
correlation matrix across subsets is the dispersion of ``W`` and the MaxK
null is the law of ``max |W|``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial
from typing import Sequence

import numpy as np

from .core import InsufficientSampleError, Subset, as_data, check_subset, sym_eigen_topk, whiten

NULL_EIGENVALUE = 6.0
CLIP_RTOL = 1e-10
INVALID_RTOL = 1e-6
DEFAULT_REPS = 1000


class ModelInvalidError(ValueError):
    pass


def K_of_q(q: int) -> int:
    """Number of nonzero eigenvalues of the skewness kernel in dimension ``q``."""
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if q == 1:
        return 1
    return q + q * (q - 1) * (q + 4) // 6


def elliptical_kernel_eigenvalues(m4: float, m6: float, q: int):
    """The two distinct nonzero kernel eigenvalues for an elliptical law.

    ``m4`` and ``m6`` are the second and third moments of the squared
    Mahalanobis norm. Returns ``(gamma1, gamma2, (mult1, mult2))``.
    """
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    gamma1 = (3.0 / q) * (m6 / (q + 2) - 2 * m4 + (q + 2) * q)
    gamma2 = 6.0 * m6 / (q * (q + 2) * (q + 4))
    return gamma1, gamma2, (q, q * (q - 1) * (q + 4) // 6)


def _kernel_from_whitened(y: np.ndarray) -> np.ndarray:
    q = y.shape[1]
    g = y @ y.T
    d = np.diag(g).copy()
    h = g ** 3 + 3 * (q + 2) * g - 3 * (d[:, None] + d[None, :]) * g
    return (h + h.T) / 2


def kernel_matrix(x) -> np.ndarray:
    """Plug-in skewness kernel evaluated at all pairs of observations.

    Needs at least two columns; the univariate score is handled in closed form.
    """
    x = as_data(x)
    if x.shape[1] < 2:
        raise ValueError("kernel matrix is defined for q >= 2 only")
    return _kernel_from_whitened(whiten(x))


def _cubic_features(y: np.ndarray) -> np.ndarray:
    # (y . z)^3 = sum over multisets {a,b,c} of w_abc (y_a y_b y_c)(z_a z_b z_c)
    q = y.shape[1]
    cols = []
    for a, b, c in combinations_with_replacement(range(q), 3):
        counts = np.bincount([a, b, c], minlength=q)
        w = factorial(3) / np.prod([factorial(k) for k in counts])
        cols.append(np.sqrt(w) * y[:, a] * y[:, b] * y[:, c])
    return np.column_stack(cols)


def _topk_lowrank(y: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` eigenpairs of the kernel matrix without forming it.

    The kernel matrix lies in the span of the cubic and linear monomial
    features, so it is compressed onto an orthonormal basis of that span.
    """
    q = y.shape[1]
    t = _cubic_features(y)
    c = np.einsum("ja,ja->j", y, y)[:, None] * y
    basis, _ = np.linalg.qr(np.hstack([t, y]))
    tq, yq, cq = basis.T @ t, basis.T @ y, basis.T @ c
    small = tq @ tq.T + 3 * (q + 2) * (yq @ yq.T) - 3 * (cq @ yq.T + yq @ cq.T)
    vals, vecs = sym_eigen_topk((small + small.T) / 2, k)
    return vals, basis @ vecs


def _univariate_score(y: np.ndarray) -> np.ndarray:
    u = y[:, 0] ** 3 - 3 * y[:, 0]
    return (np.sqrt(NULL_EIGENVALUE) / u.std(ddof=1) * u)[:, None]


def _u_from_whitened(y: np.ndarray, method: str = "auto") -> np.ndarray:
    n, q = y.shape
    if q == 1:
        return _univariate_score(y)
    k = K_of_q(q)
    if n <= k:
        raise InsufficientSampleError(f"need n > K(q) = {k}, got n={n}")
    width = q * (q + 1) * (q + 2) // 6 + q
    if method == "auto":
        method = "lowrank" if n > width else "dense"
    if method == "lowrank":
        _, vecs = _topk_lowrank(y, k)
    elif method == "dense":
        _, vecs = sym_eigen_topk(_kernel_from_whitened(y), k)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.sqrt(NULL_EIGENVALUE * n) * vecs


def u_features(x, method: str = "auto") -> np.ndarray:
    """Estimated linearizing features of ``n b1`` for one subset, ``n x K(q)``.

    ``method`` is ``"dense"`` (eigendecompose the full kernel matrix),
    ``"lowrank"`` (the same eigenvectors through a compressed basis) or
    ``"auto"``.
    """
    return _u_from_whitened(whiten(as_data(x)), method)


def y_kurt(x) -> np.ndarray:
    """Raw Gaussian-null kurtosis score ``m^2 - 2(q + 2) m`` per observation."""
    return _y_from_whitened(whiten(as_data(x)))


def _y_from_whitened(y: np.ndarray) -> np.ndarray:
    q = y.shape[1]
    m = np.einsum("ja,ja->j", y, y)
    return m * m - 2 * (q + 2) * m


@dataclass(frozen=True)
class Block:
    subset: Subset
    offset: int
    width: int

    @property
    def q(self) -> int:
        return len(self.subset)


def _layout(subsets: Sequence[Subset], widths: Sequence[int]) -> tuple[Block, ...]:
    blocks, off = [], 0
    for s, w in zip(subsets, widths):
        blocks.append(Block(tuple(s), off, w))
        off += w
    return tuple(blocks)


@dataclass(frozen=True, eq=False)
class SkewNullModel:
    blocks: tuple[Block, ...]
    omega_hat: np.ndarray
    u_hat: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.omega_hat.shape[0]

    def restrict(self, subsets: Sequence[Subset]) -> SkewNullModel:
        """Sub-model on ``subsets``: the matching blocks of ``omega_hat``."""
        wanted = {tuple(s) for s in subsets}
        keep = [b for b in self.blocks if b.subset in wanted]
        idx = np.concatenate([np.arange(b.offset, b.offset + b.width) for b in keep])
        u = None if self.u_hat is None else self.u_hat[:, idx]
        layout = _layout([b.subset for b in keep], [b.width for b in keep])
        return SkewNullModel(layout, self.omega_hat[np.ix_(idx, idx)], u)


@dataclass(frozen=True, eq=False)
class KurtNullModel:
    subsets: tuple[Subset, ...]
    gamma_hat: np.ndarray
    y_tilde: np.ndarray | None = None

    def restrict(self, subsets: Sequence[Subset]) -> KurtNullModel:
        wanted = {tuple(s) for s in subsets}
        idx = [i for i, s in enumerate(self.subsets) if s in wanted]
        y = None if self.y_tilde is None else self.y_tilde[:, idx]
        return KurtNullModel(tuple(self.subsets[i] for i in idx),
                             self.gamma_hat[np.ix_(idx, idx)], y)


@dataclass(frozen=True, eq=False)
class NullDraws:
    values: np.ndarray
    seed: object = None

    @property
    def reps(self) -> int:
        return self.values.size

    def p_value(self, statistic: float) -> float:
        """Proportion of draws strictly larger than ``statistic``."""
        return float(np.mean(self.values > statistic))


def _whitened_blocks(x: np.ndarray, subsets: Sequence[Subset]):
    p = x.shape[1]
    for s in subsets:
        s = check_subset(s, p)
        yield s, whiten(x[:, np.asarray(s) - 1], s)


def skew_null_from_whitened(pairs, method: str = "auto") -> SkewNullModel:
    subsets, feats = [], []
    for s, y in pairs:
        subsets.append(s)
        feats.append(_u_from_whitened(y, method))
    u = np.hstack(feats)
    layout = _layout(subsets, [f.shape[1] for f in feats])
    return SkewNullModel(layout, np.atleast_2d(np.cov(u, rowvar=False, ddof=1)), u)


def build_skew_null(x, subsets: Sequence[Subset], method: str = "auto") -> SkewNullModel:
    x = as_data(x)
    return skew_null_from_whitened(_whitened_blocks(x, subsets), method)


def kurt_null_from_whitened(pairs) -> KurtNullModel:
    subsets, cols = [], []
    for s, y in pairs:
        subsets.append(s)
        raw = _y_from_whitened(y)
        cols.append((raw - raw.mean()) / np.sqrt(8.0 * y.shape[1] * (y.shape[1] + 2)))
    yt = np.column_stack(cols)
    sd = yt.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise ModelInvalidError("a kurtosis score column is constant")
    gamma = np.atleast_2d(np.corrcoef(yt, rowvar=False))
    gamma = np.clip((gamma + gamma.T) / 2, -1.0, 1.0)
    np.fill_diagonal(gamma, 1.0)
    return KurtNullModel(tuple(subsets), gamma, yt)


def build_kurt_null(x, subsets: Sequence[Subset]) -> KurtNullModel:
    x = as_data(x)
    return kurt_null_from_whitened(_whitened_blocks(x, subsets))


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """``F`` with ``F @ F.T == cov`` after clipping tiny negative eigenvalues."""
    cov = np.asarray(cov, dtype=float)
    vals, vecs = np.linalg.eigh((cov + cov.T) / 2)
    trace = max(float(np.trace(cov)), np.finfo(float).tiny)
    if vals.min() < -INVALID_RTOL * trace:
        raise ModelInvalidError(f"dispersion matrix is indefinite (min eigenvalue {vals.min():.3g})")
    vals = np.where(vals > CLIP_RTOL * trace, vals, 0.0)
    return vecs * np.sqrt(vals)


def G_statistic(w, blocks: Sequence[Block]) -> np.ndarray:
    """Max over blocks of ``(|w_block|^2 - q(q+1)(q+2)) / sqrt(12 q(q+1)(q+2))``.

    ``w`` may be one vector or a matrix with one draw per row.
    """
    w = np.asarray(w, dtype=float)
    single = w.ndim == 1
    w2 = np.atleast_2d(w) ** 2
    starts = np.array([b.offset for b in blocks])
    # blocks are contiguous and cover every column
    norms = np.add.reduceat(w2, starts, axis=1)
    c = np.array([b.q * (b.q + 1) * (b.q + 2) for b in blocks], dtype=float)
    g = ((norms - c) / np.sqrt(12 * c)).max(axis=1)
    return g[0] if single else g


def _check_reps(reps: int) -> int:
    if int(reps) != reps or reps < 1:
        raise ValueError(f"reps must be a positive integer, got {reps}")
    return int(reps)


def sample_skew_null(model: SkewNullModel, reps: int = DEFAULT_REPS, seed=None) -> NullDraws:
    reps = _check_reps(reps)
    rng = np.random.default_rng(seed)
    f = psd_factor(model.omega_hat)
    w = rng.standard_normal((reps, f.shape[1])) @ f.T
    return NullDraws(G_statistic(w, model.blocks), seed)


def sample_kurt_null(model: KurtNullModel, reps: int = DEFAULT_REPS, seed=None) -> NullDraws:
    reps = _check_reps(reps)
    rng = np.random.default_rng(seed)
    f = psd_factor(model.gamma_hat)
    w = rng.standard_normal((reps, f.shape[1])) @ f.T
    return NullDraws(np.abs(w).max(axis=1), seed)
