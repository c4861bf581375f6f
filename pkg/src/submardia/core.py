"""Data model, subset catalog and the small linear-algebra kernels.

Subsets are plain tuples of 1-based, strictly increasing column indices.
The catalog orders them by cardinality first and lexicographically within
a cardinality, so for ``p = 5`` the pair ``(1, 2)`` has index 6 and the full
set has index 31.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterator, Sequence

import numpy as np
from scipy import linalg

MAX_DIMENSION = 20
PIVOT_RTOL = 1e-12

Subset = tuple[int, ...]


class InvalidDimensionError(ValueError):
    pass


class InvalidSubsetError(ValueError):
    pass


class DegenerateDataError(ValueError):
    """Raised when a (sub)sample covariance is singular or not positive definite."""

    def __init__(self, message: str, subset: Subset | None = None):
        if subset is not None:
            message = f"{message} (subset {format_subset(subset)})"
        super().__init__(message)
        self.subset = subset


class InsufficientSampleError(ValueError):
    pass


def format_subset(s: Sequence[int]) -> str:
    return "(" + ", ".join(str(i) for i in s) + ")"


def as_data(x, name: str = "data") -> np.ndarray:
    """Validate ``x`` as an ``n x p`` finite float matrix (1-d input is one column)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {arr.shape}")
    n, p = arr.shape
    if n < 2:
        raise ValueError(f"{name} needs at least 2 rows, got {n}")
    if p < 1:
        raise ValueError(f"{name} needs at least 1 column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_subset(s: Sequence[int], p: int) -> Subset:
    s = tuple(int(i) for i in s)
    if not s:
        raise InvalidSubsetError("subset must be non-empty")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise InvalidSubsetError(f"subset indices must be strictly increasing: {s}")
    if s[0] < 1 or s[-1] > p:
        raise InvalidSubsetError(f"subset {format_subset(s)} out of range [1, {p}]")
    return s


@dataclass(frozen=True)
class SubsetCatalog:
    p: int
    entries: tuple[Subset, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[Subset]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> Subset:
        """Subset at 1-based catalog ``index``."""
        if not 1 <= index <= len(self.entries):
            raise IndexError(f"catalog index {index} out of range [1, {len(self.entries)}]")
        return self.entries[index - 1]

    def index(self, s: Sequence[int]) -> int:
        return _index_table(self.p)[check_subset(s, self.p)]

    def of_size(self, q: int) -> tuple[Subset, ...]:
        if not 1 <= q <= self.p:
            raise InvalidDimensionError(f"q must lie in [1, {self.p}], got {q}")
        start = sum(comb(self.p, r) for r in range(1, q))
        return self.entries[start:start + comb(self.p, q)]


def _check_dimension(p: int) -> int:
    if int(p) != p or p < 1 or p > MAX_DIMENSION:
        raise InvalidDimensionError(
            f"dimension must be an integer in [1, {MAX_DIMENSION}], got {p}"
        )
    return int(p)


@lru_cache(maxsize=None)
def enumerate_subsets(p: int) -> SubsetCatalog:
    p = _check_dimension(p)
    entries = tuple(
        s for q in range(1, p + 1) for s in combinations(range(1, p + 1), q)
    )
    return SubsetCatalog(p, entries)


@lru_cache(maxsize=None)
def _index_table(p: int) -> dict[Subset, int]:
    return {s: i for i, s in enumerate(enumerate_subsets(p).entries, start=1)}


def subset_index(s: Sequence[int], p: int) -> int:
    """1-based catalog index of ``s`` among all subsets of ``{1..p}``."""
    return enumerate_subsets(p).index(s)


def project(x, s: Sequence[int]) -> np.ndarray:
    x = as_data(x)
    s = check_subset(s, x.shape[1])
    return x[:, np.asarray(s) - 1]


@dataclass(frozen=True, eq=False)
class MomentSummary:
    mean: np.ndarray
    cov: np.ndarray
    cov_inverse: np.ndarray
    chol: np.ndarray  # lower Cholesky factor of cov


def _cholesky(cov: np.ndarray, subset: Subset | None) -> np.ndarray:
    d = np.diag(cov)
    scale = d.max() if d.size else 0.0
    if not scale > 0:
        raise DegenerateDataError("zero-variance data", subset)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise DegenerateDataError("covariance is not positive definite", subset) from None
    if np.min(np.diag(chol)) ** 2 < PIVOT_RTOL * scale:
        raise DegenerateDataError("covariance is numerically singular", subset)
    return chol


def moments(x, subset: Subset | None = None) -> MomentSummary:
    """Sample mean and covariance (divisor ``n - 1``) with a Cholesky-based inverse.

    ``subset`` is only used to label errors.
    """
    x = as_data(x)
    n, q = x.shape
    if n < q + 2:
        raise InsufficientSampleError(f"need n >= q + 2, got n={n}, q={q}")
    mean = x.mean(axis=0)
    c = x - mean
    cov = c.T @ c / (n - 1)
    chol = _cholesky(cov, subset)
    inv = linalg.cho_solve((chol, True), np.eye(q))
    return MomentSummary(mean, cov, (inv + inv.T) / 2, chol)


def whiten(x, subset: Subset | None = None) -> np.ndarray:
    """Centered data mapped by ``L^{-1}`` so that ``Y @ Y.T == C S^{-1} C.T``."""
    x = as_data(x)
    m = moments(x, subset)
    return linalg.solve_triangular(m.chol, (x - m.mean).T, lower=True).T


def sym_eigen_topk(m, k: int, atol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """The ``k`` eigenpairs of largest absolute eigenvalue, in descending ``|lambda|``."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= k <= m.shape[0]:
        raise ValueError(f"k must lie in [1, {m.shape[0]}], got {k}")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > atol * scale:
        raise ValueError("matrix is not symmetric")
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    order = np.argsort(-np.abs(vals), kind="stable")[:k]
    return vals[order], vecs[:, order]
