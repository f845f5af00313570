"""Closed-form flow statistics under the Poisson model and Monte-Carlo checks.

For a flow with per-window counts n ~ Poisson(lambda) over i windows:

    E[f] = i*lambda                 VAR[f] = i*lambda
    E[p] = i*(1 - e^-lambda)        VAR[p] = i*e^-lambda*(1 - e^-lambda)
    E[d] = lambda / (1 - e^-lambda)

E[d] is the mean of the zero-truncated Poisson: the average count of the
windows a flow actually appears in. Density converges to it, not to lambda;
the two agree only as lambda grows.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy.stats import norm, poisson

from flows.errors import InvalidParameterError
from flows.hashing import derive_seed

# Counts matrices are simulated in chunks of about this many cells
_CHUNK_CELLS = 2_000_000

MIN_CONVERGENCE_LAMBDA = 0.01


@dataclass(frozen=True)
class TheoryStats:
    lam: float
    windows: int
    e_f: float
    e_p: float
    e_d: float
    var_f: float
    var_p: float
    var_d_bound: float

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _check(lam: float, windows: int) -> None:
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if windows < 1:
        raise InvalidParameterError(f"windows must be >= 1, got {windows}")


def theory_stats(lam: float, windows: int) -> TheoryStats:
    """Closed-form expectations and variances for one flow.

    Raises:
        InvalidParameterError: If lam <= 0 or windows < 1
    """
    _check(lam, windows)
    q = -math.expm1(-lam)  # 1 - e^-lambda without cancellation
    return TheoryStats(
        lam=lam,
        windows=windows,
        e_f=windows * lam,
        e_p=windows * q,
        e_d=lam / q,
        var_f=windows * lam,
        var_p=windows * math.exp(-lam) * q,
        var_d_bound=lam**2 / q**2 + (lam + lam**2) / q,
    )


def poisson_pmf(lam: float, tolerance: float = 1e-17) -> np.ndarray:
    """Poisson pmf from k=0 up to the first k whose upper tail is below tolerance."""
    k_max = poisson.isf(tolerance, lam)
    if not np.isfinite(k_max):
        k_max = math.ceil(lam + 40 * math.sqrt(lam) + 40)
    return poisson.pmf(np.arange(int(k_max) + 1), lam)


def numeric_theory_stats(lam: float, windows: int) -> TheoryStats:
    """Same quantities as theory_stats, by summing the Poisson pmf."""
    _check(lam, windows)
    pmf = poisson_pmf(lam)
    k = np.arange(pmf.size, dtype=float)

    p0 = float(poisson.pmf(0, lam))
    q = float(poisson.sf(0, lam))
    mean = float((k * pmf).sum())
    second = float((k * k * pmf).sum())
    truncated_mean = mean / q
    truncated_second = second / q

    return TheoryStats(
        lam=lam,
        windows=windows,
        e_f=windows * mean,
        e_p=windows * q,
        e_d=truncated_mean,
        var_f=windows * (second - mean * mean),
        var_p=windows * p0 * q,
        var_d_bound=truncated_mean**2 + truncated_second,
    )


# ----------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------


def _chunks(trials: int, windows: int):
    size = max(1, _CHUNK_CELLS // windows)
    for start in range(0, trials, size):
        yield min(size, trials - start)


def _mean_and_se(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        return float(values.mean()) if values.size else math.nan, math.inf
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


@dataclass(frozen=True)
class SampledStats:
    """Monte-Carlo means and standard errors of f, p and d."""

    mean_f: float
    se_f: float
    mean_p: float
    se_p: float
    mean_d: float
    se_d: float
    trials: int

    def within(self, expected: TheoryStats, sigmas: float = 3.0) -> dict[str, bool]:
        return {
            "E[f]": abs(self.mean_f - expected.e_f) <= sigmas * self.se_f,
            "E[p]": abs(self.mean_p - expected.e_p) <= sigmas * self.se_p,
            "E[d]": abs(self.mean_d - expected.e_d) <= sigmas * self.se_d,
        }


def sample_flow_stats(lam: float, windows: int, trials: int, seed: int) -> SampledStats:
    """Simulate trials independent flows and summarize f, p and d.

    Trials where the flow never appears have no density and are left out of
    the d summary only.
    """
    _check(lam, windows)
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(derive_seed(seed, 0))
    fs, ps = [], []
    for size in _chunks(trials, windows):
        counts = rng.poisson(lam, size=(size, windows))
        fs.append(counts.sum(axis=1))
        ps.append((counts > 0).sum(axis=1))
    f = np.concatenate(fs).astype(float)
    p = np.concatenate(ps).astype(float)
    seen = p > 0
    d = f[seen] / p[seen]

    mean_f, se_f = _mean_and_se(f)
    mean_p, se_p = _mean_and_se(p)
    mean_d, se_d = _mean_and_se(d)
    return SampledStats(mean_f, se_f, mean_p, se_p, mean_d, se_d, trials)


@dataclass(frozen=True)
class ConvergenceRung:
    windows: int
    mse: float
    stderr: float
    used_trials: int


@dataclass(frozen=True)
class ConvergenceReport:
    """Mean-square deviation of d from E[d] along a ladder of window counts."""

    lam: float
    target: float
    trials: int
    seed: int
    tolerance: float
    rungs: list[ConvergenceRung] = field(default_factory=list)

    @property
    def decreasing(self) -> bool:
        """Each rung's MSE is at most the previous one plus one standard error."""
        for prev, cur in zip(self.rungs, self.rungs[1:], strict=False):
            if cur.mse > prev.mse + max(prev.stderr, cur.stderr):
                return False
        return True

    @property
    def converged(self) -> bool:
        return bool(self.rungs) and self.rungs[-1].mse < self.tolerance

    @property
    def passed(self) -> bool:
        return self.decreasing and self.converged

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameters": {
                "lambda": self.lam,
                "trials": self.trials,
                "seed": self.seed,
                "tolerance": self.tolerance,
            },
            "target": self.target,
            "rungs": [asdict(r) for r in self.rungs],
            "decreasing": self.decreasing,
            "converged": self.converged,
            "passed": self.passed,
        }


def validate_convergence(
    lam: float,
    max_windows: int = 1000,
    trials: int = 10_000,
    seed: int = 0,
    tolerance: float = 0.05,
    base: int = 10,
) -> ConvergenceReport:
    """Estimate E[(d_i - E[d])^2] at i = base, base^2, ... up to max_windows.

    Raises:
        InvalidParameterError: If trials < 1, lam < 0.01 or max_windows < base
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if lam < MIN_CONVERGENCE_LAMBDA:
        raise InvalidParameterError(f"lambda must be >= {MIN_CONVERGENCE_LAMBDA}, got {lam}")
    if max_windows < base:
        raise InvalidParameterError(f"max_windows must be >= {base}, got {max_windows}")

    target = theory_stats(lam, 1).e_d
    ladder = []
    windows = base
    while windows <= max_windows:
        ladder.append(windows)
        windows *= base

    rungs = []
    for index, windows in enumerate(ladder):
        rng = np.random.default_rng(derive_seed(seed, index))
        errors = []
        for size in _chunks(trials, windows):
            counts = rng.poisson(lam, size=(size, windows))
            f = counts.sum(axis=1)
            p = (counts > 0).sum(axis=1)
            seen = p > 0
            errors.append((f[seen] / p[seen] - target) ** 2)
        sq = np.concatenate(errors)
        mse, se = _mean_and_se(sq)
        rungs.append(ConvergenceRung(windows, mse, se, int(sq.size)))

    return ConvergenceReport(lam, target, trials, seed, tolerance, rungs)


@dataclass(frozen=True)
class EjectionReport:
    """Mean of (density after the last ejection) - (full density)."""

    lam: float
    windows: int
    trials: int
    seed: int
    confidence: float
    mean: float
    stderr: float
    ci_low: float
    ci_high: float
    used_trials: int

    @property
    def passed(self) -> bool:
        return self.ci_low <= 0.0 <= self.ci_high

    def to_dict(self) -> dict[str, Any]:
        return {
            "parameters": {
                "lambda": self.lam,
                "windows": self.windows,
                "trials": self.trials,
                "seed": self.seed,
                "confidence": self.confidence,
            },
            "mean": self.mean,
            "stderr": self.stderr,
            "interval": [self.ci_low, self.ci_high],
            "used_trials": self.used_trials,
            "passed": self.passed,
        }


def ejection_experiment(
    lam: float, windows: int, trials: int, seed: int = 0, confidence: float = 0.99
) -> EjectionReport:
    """Check that density measured after an ejection is unbiased.

    Each trial simulates windows Poisson counts, draws the last ejection
    window t uniformly from 0..windows-1 and compares the density of windows
    t..windows-1 with the density over all windows. t = 0 means never
    ejected, so both densities match. Trials where either density is
    undefined are dropped.

    Raises:
        InvalidParameterError: If windows < 2 or trials < 1
    """
    if windows < 2:
        raise InvalidParameterError(f"windows must be >= 2, got {windows}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    _check(lam, windows)

    rng = np.random.default_rng(derive_seed(seed, 0))
    column = np.arange(windows)
    diffs = []
    for size in _chunks(trials, windows):
        counts = rng.poisson(lam, size=(size, windows))
        t = rng.integers(0, windows, size=size)
        after = column[None, :] >= t[:, None]

        f = counts.sum(axis=1)
        p = (counts > 0).sum(axis=1)
        f_hat = (counts * after).sum(axis=1)
        p_hat = ((counts > 0) & after).sum(axis=1)

        ok = (p > 0) & (p_hat > 0)
        diffs.append(f_hat[ok] / p_hat[ok] - f[ok] / p[ok])

    diff = np.concatenate(diffs)
    mean, se = _mean_and_se(diff)
    z = float(norm.ppf(0.5 + confidence / 2))
    return EjectionReport(
        lam, windows, trials, seed, confidence, mean, se, mean - z * se, mean + z * se, diff.size
    )
