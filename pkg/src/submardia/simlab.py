"""Random variates for every family and the size, power and detection harness.

Each replicate owns a child of ``SeedSequence(seed)``: the child seeds the
data generator and also yields the integer seed of the null draws. Results
are aggregated in replicate order, so they do not depend on ``workers``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import enumerate_subsets
from .families import (
    CompositeModel,
    ExponentialPower,
    Gaussian,
    ParameterError,
    SkewNormal,
    SkewT,
    StudentT,
)
from .maxtests import DEFAULT_LEVEL, PROCEDURES, detect_subdimension, run_panel
from .nulldist import DEFAULT_REPS


def _gauss(rng, cov: np.ndarray, n: int) -> np.ndarray:
    return rng.standard_normal((n, cov.shape[0])) @ np.linalg.cholesky(cov).T


def _chi_scale(rng, nu: float, n: int) -> np.ndarray:
    return np.sqrt(rng.chisquare(nu, n) / nu)[:, None]


def _skew_normal(rng, omega, slant, n):
    z = _gauss(rng, omega, n)
    w = rng.standard_normal(n)
    return np.where((w <= z @ slant)[:, None], z, -z)


def _draw(spec, n: int, rng) -> np.ndarray:
    if isinstance(spec, Gaussian):
        return spec.mean + _gauss(rng, spec.cov, n)
    if isinstance(spec, StudentT):
        return spec.xi + _gauss(rng, spec.omega, n) / _chi_scale(rng, spec.nu, n)
    if isinstance(spec, ExponentialPower):
        p = spec.p
        v = rng.gamma(p / (2 * spec.nu), 2.0, n)
        u = rng.standard_normal((n, p))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        r = v ** (1 / (2 * spec.nu))
        return spec.xi + (r[:, None] * u) @ np.linalg.cholesky(spec.omega).T
    if isinstance(spec, SkewNormal):
        return spec.xi + _skew_normal(rng, spec.omega, spec.slant, n)
    if isinstance(spec, SkewT):
        return spec.xi + _skew_normal(rng, spec.omega, spec.slant, n) / _chi_scale(rng, spec.nu, n)
    if isinstance(spec, CompositeModel):
        head = _draw(spec.block, n, rng)
        if spec.rest is None:
            return head
        return np.hstack([head, _draw(spec.rest, n, rng)])
    raise TypeError(f"unsupported family {type(spec).__name__}")


def sample(spec, n: int, seed=None) -> np.ndarray:
    """``n`` draws from ``spec``; identical ``(spec, n, seed)`` gives identical output."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _draw(spec, int(n), rng)


@dataclass(frozen=True)
class ExperimentResult:
    test_name: str
    nominal_level: float
    rejection_rate: float
    replicates: int
    detection_histogram: dict[int, float] | None = None
    q_histogram: dict[int, float] | None = None

    @property
    def mc_se(self) -> float:
        r = self.rejection_rate
        return float(np.sqrt(r * (1 - r) / self.replicates))


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of a size, power or detection experiment."""

    spec: object
    n: int
    replicates: int = 1000
    tests: tuple[str, ...] = ("MaxS", "MaxK", "MaxSK")
    reps: int = DEFAULT_REPS
    level: float = DEFAULT_LEVEL
    seed: int = 0
    procedure: str = "sk"
    workers: int = 1

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ParameterError(f"replicates must be a positive integer, got {self.replicates}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ParameterError(f"reps must be a positive integer, got {self.reps}")
        if not 0 < self.level < 1:
            raise ParameterError(f"level must lie in (0, 1), got {self.level}")
        if self.procedure not in PROCEDURES:
            raise ParameterError(f"procedure must be one of {PROCEDURES}")
        if int(self.workers) != self.workers or self.workers < 1:
            raise ParameterError(f"workers must be a positive integer, got {self.workers}")


def _streams(seed: int, replicates: int):
    for child in np.random.SeedSequence(seed).spawn(replicates):
        yield child, int(child.generate_state(1)[0])


def _rejections(args) -> list[bool]:
    spec, n, tests, reps, level, child, null_seed = args
    panel = run_panel(sample(spec, n, np.random.default_rng(child)), reps, null_seed, level)
    return [panel[t].rejected for t in tests]


def _detection(args) -> int | None:
    spec, n, reps, level, procedure, child, null_seed = args
    x = sample(spec, n, np.random.default_rng(child))
    return detect_subdimension(x, reps, null_seed, level, procedure).detected_index(x.shape[1])


def _map(fn, jobs, workers: int) -> list:
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def rejection_rates(config: ExperimentConfig) -> dict[str, ExperimentResult]:
    """Rejection rate of every test in ``config.tests`` over independent replicates.

    Test names are ``MaxS``, ``MaxK``, ``MaxSK`` and their fixed-cardinality
    versions such as ``MaxK_3``.
    """
    p = config.spec.p
    valid = {f"{b}{'' if q is None else f'_{q}'}" for b in ("MaxS", "MaxK", "MaxSK")
             for q in [None, *range(1, p + 1)]}
    unknown = [t for t in config.tests if t not in valid]
    if unknown:
        raise ParameterError(f"unknown tests {unknown}")
    jobs = [(config.spec, config.n, tuple(config.tests), config.reps, config.level, c, s)
            for c, s in _streams(config.seed, config.replicates)]
    hits = np.array(_map(_rejections, jobs, config.workers), dtype=bool)
    return {
        t: ExperimentResult(t, config.level, float(hits[:, j].mean()), config.replicates)
        for j, t in enumerate(config.tests)
    }


def estimate_size(config: ExperimentConfig) -> dict[str, ExperimentResult]:
    if not isinstance(config.spec, Gaussian):
        raise ParameterError("size studies need a Gaussian spec")
    return rejection_rates(config)


def estimate_power(config: ExperimentConfig) -> dict[str, ExperimentResult]:
    return rejection_rates(config)


def detection_study(config: ExperimentConfig) -> ExperimentResult:
    """Trigger rate and histograms of the detected subset.

    Histogram entries are proportions of all replicates, so each histogram
    sums to the trigger rate.
    """
    p = config.spec.p
    jobs = [(config.spec, config.n, config.reps, config.level, config.procedure, c, s)
            for c, s in _streams(config.seed, config.replicates)]
    found = _map(_detection, jobs, config.workers)
    catalog = enumerate_subsets(p)
    r = config.replicates
    by_index = {i: 0 for i in range(1, len(catalog) + 1)}
    by_q = {q: 0 for q in range(1, p + 1)}
    for i in found:
        if i is not None:
            by_index[i] += 1
            by_q[len(catalog[i])] += 1
    return ExperimentResult(
        f"detect-{config.procedure}", config.level,
        sum(i is not None for i in found) / r, r,
        {i: c / r for i, c in by_index.items()}, {q: c / r for q, c in by_q.items()},
    )


def modal(histogram: dict[int, float]) -> int:
    """Key with the largest proportion (smallest key on ties)."""
    return min(histogram, key=lambda k: (-histogram[k], k))
