"""Uniformity statistics for per-cell histograms.

Everything here works on in-range draws only. Out-of-range and unparsable
answers are carried along in the :class:`Histogram` counters so they can be
reported, but they never enter the mean, the spread, chi-square or entropy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import EmptyCellError, InvalidTemperatureError

EntropyBase = Literal["observed", "range"]

_EPS = 1e-16
_MAX_ITER = 10_000


def _log_q_series(a: float, x: float, log_pref: float) -> float:
    # P(a, x) by the power series; only called for x < a + 1, where P < ~0.6
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    p = math.exp(log_pref) * total
    return math.log1p(-p) if p < 1.0 else -math.inf


def _log_q_contfrac(a: float, x: float, log_pref: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return log_pref + math.log(h)


def log_gammaincc(a: float, x: float) -> float:
    """Natural log of the regularized upper incomplete gamma ``Q(a, x)``."""
    if a <= 0:
        raise ValueError("shape parameter must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0
    log_pref = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        return _log_q_series(a, x, log_pref)
    return _log_q_contfrac(a, x, log_pref)


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x)``.

    Stays accurate in relative terms far into the tail: the prefactor is
    carried in log space, so values down to the smallest normal double are
    returned instead of underflowing early.
    """
    return math.exp(log_gammaincc(a, x))


def chi2_sf(x: float, dof: int) -> float:
    """Survival function of the chi-square distribution."""
    return gammaincc(dof / 2.0, x / 2.0)


@dataclass
class Histogram:
    """Counts of in-range values ``1..upper`` for one cell."""

    upper: int
    counts: np.ndarray
    n_out_of_range: int = 0
    n_unparsable: int = 0
    n_error: int = 0

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.upper < 2:
            raise ValueError("range upper bound must be >= 2")
        if self.counts.shape != (self.upper,):
            raise ValueError(f"expected {self.upper} bins, got shape {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("counts must be non-negative")

    lower = 1

    @property
    def k(self) -> int:
        return self.upper

    @property
    def n_ok(self) -> int:
        return int(self.counts.sum())

    @property
    def unique_count(self) -> int:
        return int(np.count_nonzero(self.counts))

    @classmethod
    def from_values(cls, values: Iterable[int], upper: int, *, n_unparsable: int = 0,
                    n_error: int = 0) -> "Histogram":
        """Bin raw integers; values outside ``[1, upper]`` are tallied, not binned."""
        counts = np.zeros(upper, dtype=np.int64)
        out = 0
        for v in values:
            if 1 <= v <= upper:
                counts[v - 1] += 1
            else:
                out += 1
        return cls(upper, counts, n_out_of_range=out, n_unparsable=n_unparsable, n_error=n_error)

    def values(self) -> np.ndarray:
        return np.repeat(np.arange(1, self.upper + 1), self.counts)


def _require_data(hist: Histogram) -> int:
    n = hist.n_ok
    if n == 0:
        raise EmptyCellError("histogram has no in-range values")
    return n


def chi_square_uniform(hist: Histogram) -> tuple[float, int, float]:
    """Goodness-of-fit against the discrete uniform on ``1..k``.

    Returns ``(chi2, dof, p_value)``; empty bins take part in the sum.
    """
    n = _require_data(hist)
    k = hist.k
    expected = n / k
    chi2 = float(np.sum((hist.counts - expected) ** 2) / expected)
    dof = k - 1
    return chi2, dof, chi2_sf(chi2, dof)


def cramers_v(chi2: float, n: int, k: int) -> float:
    """One-way Cramér's V, ``sqrt(chi2 / (n (k - 1)))`` clipped to [0, 1]."""
    if chi2 < 0:
        raise ValueError("chi2 must be non-negative")
    if n <= 0 or k < 2:
        raise ValueError("need n > 0 and k >= 2")
    return min(1.0, math.sqrt(chi2 / (n * (k - 1))))


def shannon_entropy_norm(hist: Histogram, base: EntropyBase = "observed") -> float:
    """Shannon entropy in bits divided by its maximum.

    With ``base="observed"`` (default) the maximum is ``log2`` of the number
    of distinct values seen, so the score measures evenness among chosen
    values. ``base="range"`` normalises by ``log2(k)`` instead.
    """
    if base not in ("observed", "range"):
        raise ValueError(f"base must be 'observed' or 'range', got {base!r}")
    n = _require_data(hist)
    nz = hist.counts[hist.counts > 0]
    n_states = len(nz) if base == "observed" else hist.k
    if len(nz) <= 1 or n_states <= 1:
        return 0.0
    if n_states == len(nz) and (nz == nz[0]).all():
        return 1.0  # exact, where the float sum could land an ulp short
    p = nz / n
    h = float(-np.sum(p * np.log2(p)))
    # uneven counts stay strictly below 1 even when rounding says otherwise
    return min(math.nextafter(1.0, 0.0), max(0.0, h / math.log2(n_states)))


def _moments(hist: Histogram) -> tuple[float, float]:
    n = hist.n_ok
    v = np.arange(1, hist.k + 1, dtype=float)
    mu = float(np.dot(v, hist.counts) / n)
    var = float(np.dot(hist.counts, (v - mu) ** 2) / n)
    return mu, math.sqrt(var)


def randomness_index(hist: Histogram, temperature: float, base: EntropyBase = "observed") -> float:
    """Composite randomness score.

    ``RI = R* · σ* · H_norm / (ln(k) · sqrt(T))`` where R* is the fraction of
    the range that was hit, σ* the coefficient of variation (population σ)
    and H_norm the normalised entropy. Zero when at most one value appears.
    """
    if not temperature > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {temperature!r}")
    _require_data(hist)
    return _ri_parts(hist, temperature, base)[-1]


def _ri_parts(hist: Histogram, temperature: float, base: EntropyBase):
    mu, sigma = _moments(hist)
    unique = hist.unique_count
    r_star = unique / hist.k
    sigma_star = sigma / mu
    h_norm = shannon_entropy_norm(hist, base)
    if unique <= 1:
        ri = 0.0
    else:
        ri = r_star * sigma_star * h_norm / (math.log(hist.k) * math.sqrt(temperature))
    return mu, sigma, unique, r_star, sigma_star, h_norm, ri


STATS_COLUMNS = [
    "provider", "language", "range_upper", "temperature", "n_ok", "n_out_of_range",
    "n_unparsable", "unique_count", "mean", "std", "r_star", "sigma_star", "h_norm",
    "chi2", "dof", "p_value", "cramers_v", "randomness_index",
]
_METRICS = ("unique_count", "mean", "std", "r_star", "sigma_star", "h_norm", "chi2", "dof",
            "p_value", "cramers_v", "randomness_index")


@dataclass
class CellStats:
    provider: str
    language: str
    range_upper: int
    temperature: float
    n_ok: int
    n_out_of_range: int = 0
    n_unparsable: int = 0
    n_error: int = 0
    unique_count: int | None = None
    mean: float = math.nan
    std: float = math.nan
    r_star: float = math.nan
    sigma_star: float = math.nan
    h_norm: float = math.nan
    chi2: float = math.nan
    dof: int | None = None
    p_value: float = math.nan
    cramers_v: float = math.nan
    randomness_index: float = math.nan
    present: bool = True

    # short metric aliases
    @property
    def ri(self) -> float:
        return self.randomness_index

    def metric(self, name: str) -> float:
        name = {"ri": "randomness_index", "p": "p_value", "v": "cramers_v"}.get(name, name)
        if name not in _METRICS:
            raise KeyError(f"unknown metric {name!r}")
        value = getattr(self, name)
        return math.nan if value is None else float(value)

    def to_row(self) -> dict:
        row = {c: getattr(self, c) for c in STATS_COLUMNS}
        if not self.present:
            for m in _METRICS:
                row[m] = ""
        return row

    @classmethod
    def from_row(cls, row: dict) -> "CellStats":
        def num(key, conv=float):
            v = row.get(key, "")
            return None if v in ("", None) else conv(v)

        present = row.get("randomness_index", "") not in ("", None)
        kw = dict(
            provider=row["provider"], language=row["language"],
            range_upper=int(row["range_upper"]), temperature=float(row["temperature"]),
            n_ok=int(row["n_ok"]), n_out_of_range=int(row.get("n_out_of_range") or 0),
            n_unparsable=int(row.get("n_unparsable") or 0), present=present,
        )
        if present:
            for m in _METRICS:
                kw[m] = num(m, int if m in ("unique_count", "dof") else float)
        return cls(**kw)


def absent_stats(hist: Histogram, temperature: float, provider: str = "", language: str = "") -> CellStats:
    return CellStats(provider, language, hist.upper, temperature, hist.n_ok,
                     hist.n_out_of_range, hist.n_unparsable, hist.n_error, present=False)


def cell_stats(hist: Histogram, temperature: float, provider: str = "", language: str = "",
               base: EntropyBase = "observed") -> CellStats:
    """Run the whole battery on one histogram."""
    if not temperature > 0:
        raise InvalidTemperatureError(f"temperature must be > 0, got {temperature!r}")
    n = _require_data(hist)
    chi2, dof, p = chi_square_uniform(hist)
    mu, sigma, unique, r_star, sigma_star, h_norm, ri = _ri_parts(hist, temperature, base)
    return CellStats(
        provider=provider, language=language, range_upper=hist.upper, temperature=temperature,
        n_ok=n, n_out_of_range=hist.n_out_of_range, n_unparsable=hist.n_unparsable,
        n_error=hist.n_error, unique_count=unique, mean=mu, std=sigma, r_star=r_star,
        sigma_star=sigma_star, h_norm=h_norm, chi2=chi2, dof=dof, p_value=p,
        cramers_v=cramers_v(chi2, n, hist.k), randomness_index=ri,
    )


def baseline_uniform_runs(k: int, n_samples: int, n_runs: int, seed: int | None = None,
                          base: EntropyBase = "observed") -> list[CellStats]:
    """Stats for ``n_runs`` pseudo-random uniform samples, scored at T = 1.

    Each run draws from its own child stream of ``SeedSequence(seed)``, so
    a run's result does not depend on how many other runs are requested.
    """
    children = np.random.SeedSequence(seed).spawn(n_runs)
    out = []
    for i, child in enumerate(children):
        draws = np.random.default_rng(child).integers(1, k + 1, size=n_samples)
        hist = Histogram(k, np.bincount(draws, minlength=k + 1)[1:])
        out.append(cell_stats(hist, 1.0, provider="randint", language=f"run{i}", base=base))
    return out


@dataclass
class BaselineSummary:
    n_runs: int
    mean_p: float
    std_p: float
    mean_v: float
    std_v: float
    mean_ri: float
    std_ri: float


def summarize_runs(stats: Sequence[CellStats]) -> BaselineSummary:
    p = np.array([s.p_value for s in stats])
    v = np.array([s.cramers_v for s in stats])
    ri = np.array([s.randomness_index for s in stats])
    return BaselineSummary(len(stats), float(p.mean()), float(p.std()), float(v.mean()),
                           float(v.std()), float(ri.mean()), float(ri.std()))


def uniform_ri(k: int) -> float:
    """RI of an exactly uniform histogram over ``1..k`` at T = 1."""
    mu = (k + 1) / 2
    sigma = math.sqrt((k * k - 1) / 12)
    return (sigma / mu) / math.log(k)


__all__ = [
    "Histogram", "CellStats", "STATS_COLUMNS", "chi_square_uniform", "cramers_v",
    "shannon_entropy_norm", "randomness_index", "cell_stats", "absent_stats",
    "baseline_uniform_runs", "summarize_runs", "BaselineSummary", "uniform_ri",
    "gammaincc", "log_gammaincc", "chi2_sf",
]
