"""Sample sub-dimensional Mardia skewness and kurtosis.

For a whitened sample ``Y`` (rows ``y_j``), skewness is
``n^-2 sum_jk (y_j . y_k)^3``, which equals the squared Frobenius norm of the
third-moment tensor ``n^-1 sum_j y_j (x) y_j (x) y_j``. The tensor form costs
``O(n q^3)`` and never materialises the ``n x n`` Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DegenerateDataError,
    InvalidDimensionError,
    Subset,
    SubsetCatalog,
    as_data,
    enumerate_subsets,
    whiten,
)

B1_FLOOR = -1e-10


class ConsistencyError(RuntimeError):
    pass


def _b1_whitened(y: np.ndarray) -> float:
    n = y.shape[0]
    t = np.einsum("ja,jb,jc->abc", y, y, y, optimize=True) / n
    b1 = float(np.sum(t * t))
    if b1 < 0:
        if b1 < B1_FLOOR:
            raise ConsistencyError(f"negative skewness {b1}")
        b1 = 0.0
    return b1


def _b2_whitened(y: np.ndarray) -> float:
    d = np.einsum("ja,ja->j", y, y)
    return float(np.mean(d * d))


def b1_sample(x) -> float:
    return _b1_whitened(whiten(x))


def b2_sample(x) -> float:
    return _b2_whitened(whiten(x))


def standardize_b1(b1, n: int, q: int):
    c = q * (q + 1) * (q + 2)
    return (n * np.asarray(b1) - c) / np.sqrt(12.0 * c)


def standardize_b2(b2, n: int, q: int):
    c = q * (q + 2)
    return (np.asarray(b2) - c) / np.sqrt(8.0 * c / n)


@dataclass(frozen=True)
class MaxStatistic:
    value: float
    subset: Subset
    index: int  # 1-based catalog index


@dataclass(frozen=True)
class MaxStatistics:
    max_s: MaxStatistic
    max_k: MaxStatistic


@dataclass(frozen=True, eq=False)
class MeasureReport:
    """All sub-dimensional measures of a sample, in catalog order.

    Entries for subsets listed in ``degenerate`` are NaN.
    """

    n: int
    p: int
    catalog: SubsetCatalog
    b1: np.ndarray
    b2: np.ndarray
    tilde_b1: np.ndarray
    tilde_b2: np.ndarray
    degenerate: tuple[Subset, ...] = field(default=())

    @property
    def q(self) -> np.ndarray:
        return np.array([len(s) for s in self.catalog])

    def pairs(self):
        return [
            {"subset": s, "index": i, "q": len(s), "b1": self.b1[i - 1],
             "b2": self.b2[i - 1], "tilde_b1": self.tilde_b1[i - 1],
             "tilde_b2": self.tilde_b2[i - 1]}
            for i, s in enumerate(self.catalog, start=1)
        ]

    @property
    def max_s(self) -> MaxStatistic:
        return max_statistics(self).max_s

    @property
    def max_k_abs(self) -> MaxStatistic:
        return max_statistics(self).max_k

    def per_q_max(self) -> dict[int, MaxStatistics]:
        return {q: max_statistics(self, q) for q in range(1, self.p + 1)}


def measure_report(x, strict: bool = True) -> MeasureReport:
    """Compute ``b1``, ``b2`` and their Gaussian-standardized versions for every subset.

    With ``strict=False`` degenerate subsets are recorded and left as NaN
    instead of raising.
    """
    x = as_data(x)
    n, p = x.shape
    catalog = enumerate_subsets(p)
    b1 = np.full(len(catalog), np.nan)
    b2 = np.full(len(catalog), np.nan)
    bad = []
    for i, s in enumerate(catalog):
        try:
            y = whiten(x[:, np.asarray(s) - 1], s)
        except DegenerateDataError as exc:
            if strict:
                raise
            bad.append(exc.subset or s)
            continue
        b1[i] = _b1_whitened(y)
        b2[i] = _b2_whitened(y)
    return _assemble(n, p, catalog, b1, b2, tuple(bad))


def _assemble(n, p, catalog, b1, b2, bad=()) -> MeasureReport:
    q = np.array([len(s) for s in catalog])
    return MeasureReport(
        n=n, p=p, catalog=catalog, b1=b1, b2=b2,
        tilde_b1=standardize_b1(b1, n, q), tilde_b2=standardize_b2(b2, n, q),
        degenerate=bad,
    )


def _argmax(values: np.ndarray, positions: Sequence[int], catalog) -> MaxStatistic:
    v = np.asarray(values)[list(positions)]
    if np.all(np.isnan(v)):
        raise DegenerateDataError("no computable subset")
    # nanargmax returns the first maximum, i.e. the smallest catalog index
    k = int(np.nanargmax(v))
    pos = positions[k]
    return MaxStatistic(float(v[k]), catalog.entries[pos], pos + 1)


def max_statistics(report: MeasureReport, q0: int | None = None) -> MaxStatistics:
    """MaxS (max of standardized skewness) and MaxK (max of |standardized kurtosis|).

    With ``q0`` the maxima run over subsets of that cardinality only. Ties go
    to the smallest catalog index.
    """
    if q0 is None:
        positions = list(range(len(report.catalog)))
    else:
        if not 1 <= q0 <= report.p:
            raise InvalidDimensionError(f"q0 must lie in [1, {report.p}], got {q0}")
        positions = [i for i, s in enumerate(report.catalog) if len(s) == q0]
    return MaxStatistics(
        _argmax(report.tilde_b1, positions, report.catalog),
        _argmax(np.abs(report.tilde_b2), positions, report.catalog),
    )
