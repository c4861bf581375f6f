"""MaxS, MaxK and MaxSK tests, Mardia's baseline tests and sub-dimension detection.

The max tests compare the largest standardized sub-dimensional measure
with Monte Carlo draws from its estimated asymptotic null. The composite
MaxSK test rejects when either component p-value is below ``level / 2``
and reports the Bonferroni-adjusted p-value ``min(1, 2 min(pS, pK))``.

Seeds: the skewness null draws use ``default_rng([seed, 0])`` and the
kurtosis ones ``default_rng([seed, 1])``, so MaxSK reproduces its two
components exactly. ``seed=None`` draws fresh entropy, which is echoed in
the report.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .core import (
    InvalidDimensionError,
    Subset,
    SubsetCatalog,
    as_data,
    enumerate_subsets,
    whiten,
)
from .measures import MeasureReport, _assemble, _b1_whitened, _b2_whitened
from .nulldist import (
    DEFAULT_REPS,
    G_statistic,
    NullDraws,
    kurt_null_from_whitened,
    psd_factor,
    skew_null_from_whitened,
)

DEFAULT_LEVEL = 0.05
SKEW_STREAM, KURT_STREAM = 0, 1
PROCEDURES = ("s", "k", "sk")


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    p_value: float
    reps: int
    level: float
    rejected: bool
    subset: Subset
    index: int  # 1-based catalog index of ``subset`` in the data's catalog
    seed: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def mc_se(self) -> float:
        """Monte Carlo standard error of ``p_value`` (0 for closed-form tests)."""
        if self.reps == 0:
            return 0.0
        return float(np.sqrt(self.p_value * (1 - self.p_value) / self.reps))


@dataclass(frozen=True)
class DetectionReport:
    triggered: bool
    skew_subset: Subset | None
    kurt_subset: Subset | None
    union_subset: Subset | None
    p_values: tuple[float, float]  # (maxS, maxK)
    procedure: str = "sk"
    seed: int | None = None

    def detected_index(self, p: int) -> int | None:
        if self.union_subset is None:
            return None
        return enumerate_subsets(p).index(self.union_subset)


def resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return seed


def _check_level(level: float) -> float:
    if not 0 < level < 1:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return float(level)


@dataclass(frozen=True, eq=False)
class _Pass:
    """One pass over the data: whitened subsamples and the measure report."""

    x: np.ndarray
    catalog: SubsetCatalog
    whitened: tuple[np.ndarray, ...]
    report: MeasureReport

    def positions(self, q0: int | None) -> list[int]:
        if q0 is None:
            return list(range(len(self.catalog)))
        if int(q0) != q0 or not 1 <= q0 <= self.catalog.p:
            raise InvalidDimensionError(f"q0 must lie in [1, {self.catalog.p}], got {q0}")
        return [i for i, s in enumerate(self.catalog) if len(s) == q0]

    def pairs(self, positions: Sequence[int]):
        return [(self.catalog.entries[i], self.whitened[i]) for i in positions]


def _data_pass(x) -> _Pass:
    x = as_data(x)
    n, p = x.shape
    catalog = enumerate_subsets(p)
    ys = tuple(whiten(x[:, np.asarray(s) - 1], s) for s in catalog)
    b1 = np.array([_b1_whitened(y) for y in ys])
    b2 = np.array([_b2_whitened(y) for y in ys])
    return _Pass(x, catalog, ys, _assemble(n, p, catalog, b1, b2))


def _argmax(values: np.ndarray, positions: Sequence[int]) -> tuple[float, int]:
    v = values[list(positions)]
    k = int(np.argmax(v))  # first maximum = smallest catalog index
    return float(v[k]), positions[k]


def _name(base: str, q0: int | None) -> str:
    return base if q0 is None else f"{base}_{q0}"


def _skew(dp: _Pass, q0, reps, seed, level) -> TestReport:
    pos = dp.positions(q0)
    stat, at = _argmax(dp.report.tilde_b1, pos)
    model = skew_null_from_whitened(dp.pairs(pos))
    rng = np.random.default_rng([seed, SKEW_STREAM])
    f = psd_factor(model.omega_hat)
    draws = NullDraws(G_statistic(rng.standard_normal((reps, f.shape[1])) @ f.T, model.blocks), seed)
    pv = draws.p_value(stat)
    return TestReport(_name("MaxS", q0), stat, pv, reps, level, pv < level,
                      dp.catalog.entries[at], at + 1, seed)


def _kurt(dp: _Pass, q0, reps, seed, level) -> TestReport:
    pos = dp.positions(q0)
    stat, at = _argmax(np.abs(dp.report.tilde_b2), pos)
    model = kurt_null_from_whitened(dp.pairs(pos))
    rng = np.random.default_rng([seed, KURT_STREAM])
    f = psd_factor(model.gamma_hat)
    draws = NullDraws(np.abs(rng.standard_normal((reps, f.shape[1])) @ f.T).max(axis=1), seed)
    pv = draws.p_value(stat)
    return TestReport(_name("MaxK", q0), stat, pv, reps, level, pv < level,
                      dp.catalog.entries[at], at + 1, seed)


def _combine(s: TestReport, k: TestReport, q0, level) -> TestReport:
    smaller = s if s.p_value <= k.p_value else k
    pv = min(1.0, 2 * smaller.p_value)
    rejected = min(s.p_value, k.p_value) < level / 2
    return TestReport(
        _name("MaxSK", q0), smaller.statistic, pv, s.reps, level, rejected,
        smaller.subset, smaller.index, s.seed,
        {"MaxS": s.p_value, "MaxK": k.p_value, "p_value_rule": "min(1, 2*min(pS, pK))"},
    )


def _run(x, which: str, q0, reps, seed, level):
    if int(reps) != reps or reps < 1:
        raise ValueError(f"reps must be a positive integer, got {reps}")
    level = _check_level(level)
    seed = resolve_seed(seed)
    dp = _data_pass(x)
    dp.positions(q0)  # validate q0 before any sampling
    reps = int(reps)
    if which == "s":
        return _skew(dp, q0, reps, seed, level)
    if which == "k":
        return _kurt(dp, q0, reps, seed, level)
    s = _skew(dp, q0, reps, seed, level)
    k = _kurt(dp, q0, reps, seed, level)
    return _combine(s, k, q0, level), s, k


def max_s_test(x, reps: int = DEFAULT_REPS, seed=None, level: float = DEFAULT_LEVEL) -> TestReport:
    """Skewness in any sub-dimension: max over all subsets of the standardized ``b1``."""
    return _run(x, "s", None, reps, seed, level)


def max_s_q_test(x, q0: int, reps: int = DEFAULT_REPS, seed=None,
                 level: float = DEFAULT_LEVEL) -> TestReport:
    return _run(x, "s", q0, reps, seed, level)


def max_k_test(x, reps: int = DEFAULT_REPS, seed=None, level: float = DEFAULT_LEVEL) -> TestReport:
    """Kurtosis in any sub-dimension: max over all subsets of ``|standardized b2|``."""
    return _run(x, "k", None, reps, seed, level)


def max_k_q_test(x, q0: int, reps: int = DEFAULT_REPS, seed=None,
                 level: float = DEFAULT_LEVEL) -> TestReport:
    return _run(x, "k", q0, reps, seed, level)


def max_sk_test(x, reps: int = DEFAULT_REPS, seed=None, level: float = DEFAULT_LEVEL) -> TestReport:
    return _run(x, "sk", None, reps, seed, level)[0]


def max_sk_q_test(x, q0: int, reps: int = DEFAULT_REPS, seed=None,
                  level: float = DEFAULT_LEVEL) -> TestReport:
    return _run(x, "sk", q0, reps, seed, level)[0]


def mardia_skewness_test(x, level: float = DEFAULT_LEVEL) -> TestReport:
    """``n b1 / 6`` against chi-square with ``p(p+1)(p+2)/6`` degrees of freedom."""
    level = _check_level(level)
    x = as_data(x)
    n, p = x.shape
    b1 = _b1_whitened(whiten(x))
    stat = n * b1 / 6
    pv = float(stats.chi2.sf(stat, p * (p + 1) * (p + 2) / 6))
    full = tuple(range(1, p + 1))
    return TestReport("Mardia-S", stat, pv, 0, level, pv < level, full, 2 ** p - 1)


def mardia_kurtosis_test(x, level: float = DEFAULT_LEVEL) -> TestReport:
    """Two-sided normal test of ``(b2 - p(p+2)) / sqrt(8 p(p+2) / n)``."""
    level = _check_level(level)
    x = as_data(x)
    n, p = x.shape
    b2 = _b2_whitened(whiten(x))
    z = (b2 - p * (p + 2)) / np.sqrt(8.0 * p * (p + 2) / n)
    pv = float(min(1.0, 2 * stats.norm.sf(abs(z))))
    full = tuple(range(1, p + 1))
    return TestReport("Mardia-K", float(z), pv, 0, level, pv < level, full, 2 ** p - 1)


def _union(*subsets: Subset | None) -> Subset | None:
    present = [s for s in subsets if s is not None]
    if not present:
        return None
    return tuple(sorted(set().union(*present)))


@dataclass(frozen=True)
class TestPanel:
    """All global and fixed-q max tests of one dataset from a single set of null draws.

    Restricting one draw of ``W`` to the blocks of a cardinality gives an
    exact draw from that cardinality's null, so every variant shares the
    draws.
    """

    __test__ = False

    reports: dict
    seed: int

    def __getitem__(self, name: str) -> TestReport:
        return self.reports[name]


def run_panel(x, reps: int = DEFAULT_REPS, seed=None, level: float = DEFAULT_LEVEL) -> TestPanel:
    level = _check_level(level)
    seed = resolve_seed(seed)
    dp = _data_pass(x)
    everything = dp.positions(None)
    q_of = np.array([len(s) for s in dp.catalog])

    skew = skew_null_from_whitened(dp.pairs(everything))
    f = psd_factor(skew.omega_hat)
    w = np.random.default_rng([seed, SKEW_STREAM]).standard_normal((reps, f.shape[1])) @ f.T
    starts = np.array([b.offset for b in skew.blocks])
    c = (q_of * (q_of + 1) * (q_of + 2)).astype(float)
    s_draws = (np.add.reduceat(w * w, starts, axis=1) - c) / np.sqrt(12 * c)

    kurt = kurt_null_from_whitened(dp.pairs(everything))
    f = psd_factor(kurt.gamma_hat)
    k_draws = np.abs(np.random.default_rng([seed, KURT_STREAM]).standard_normal((reps, f.shape[1])) @ f.T)

    reports = {}
    for q0 in [None, *range(1, dp.catalog.p + 1)]:
        pos = dp.positions(q0)
        out = []
        for base, values, draws in (("MaxS", dp.report.tilde_b1, s_draws),
                                    ("MaxK", np.abs(dp.report.tilde_b2), k_draws)):
            stat, at = _argmax(values, pos)
            pv = float(np.mean(draws[:, pos].max(axis=1) > stat))
            out.append(TestReport(_name(base, q0), stat, pv, reps, level, pv < level,
                                  dp.catalog.entries[at], at + 1, seed))
        combined = _combine(*out, q0, level)
        for r in (*out, combined):
            reports[r.name] = r
    return TestPanel(reports, seed)


def detect_subdimension(x, reps: int = DEFAULT_REPS, seed=None, level: float = DEFAULT_LEVEL,
                        procedure: str = "sk") -> DetectionReport:
    """Locate the sub-dimension that carries the non-Gaussian feature.

    ``procedure="sk"`` runs MaxSK and records the MaxS argmax if
    ``pS < level / 2`` and the MaxK argmax if ``pK < level / 2``.
    ``"s"`` and ``"k"`` use a single test at the full level. The detected
    subset is the union of the recorded ones.
    """
    if procedure not in PROCEDURES:
        raise ValueError(f"procedure must be one of {PROCEDURES}, got {procedure!r}")
    if procedure == "sk":
        _, s, k = _run(x, "sk", None, reps, seed, level)
    else:
        r = _run(x, procedure, None, reps, seed, level)
        s, k = (r, None) if procedure == "s" else (None, r)
    cut = level / 2 if procedure == "sk" else level
    skew = s.subset if s is not None and s.p_value < cut else None
    kurt = k.subset if k is not None and k.p_value < cut else None
    nan = float("nan")
    return DetectionReport(
        triggered=skew is not None or kurt is not None,
        skew_subset=skew, kurt_subset=kurt, union_subset=_union(skew, kurt),
        p_values=(s.p_value if s else nan, k.p_value if k else nan),
        procedure=procedure, seed=(s or k).seed,
    )
