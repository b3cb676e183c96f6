"""Tables and figure data built from a record store."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import EmptySelectionError, StorageError
from .parsing import COUNTED_STATUSES, Status
from .plan import Cell
from .stats import STATS_COLUMNS, CellStats, EntropyBase, Histogram, absent_stats, cell_stats
from .store import CallRecord, Store

MIN_VALID = 50
ABSENT = "--"


def histogram_from_records(records: Iterable[CallRecord], upper: int) -> Histogram:
    counts = np.zeros(upper, dtype=np.int64)
    n_out = n_unp = n_err = 0
    for r in records:
        if r.status in COUNTED_STATUSES:
            counts[r.parsed_value - 1] += 1
        elif r.status is Status.OUT_OF_RANGE:
            n_out += 1
        elif r.status is Status.UNPARSABLE:
            n_unp += 1
        else:
            n_err += 1
    return Histogram(upper, counts, n_out, n_unp, n_err)


def summarize_store(store_path: str | Path, min_valid: int = MIN_VALID,
                    base: EntropyBase = "observed") -> list[CellStats]:
    """One :class:`CellStats` per cell in the store.

    Cells with fewer than ``min_valid`` in-range answers are returned with
    ``present=False`` and no metrics, so tables can print them as absent.
    """
    out = []
    for cell, records in Store(store_path).iter_records():
        hist = histogram_from_records(records, cell.upper)
        if hist.n_ok < max(1, min_valid):
            out.append(absent_stats(hist, cell.temperature, cell.provider, cell.language))
        else:
            out.append(cell_stats(hist, cell.temperature, cell.provider, cell.language, base))
    return out


def write_stats_csv(stats: Sequence[CellStats], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=STATS_COLUMNS, lineterminator="\n")
        w.writeheader()
        for s in stats:
            w.writerow(s.to_row())


def read_stats_csv(path: str | Path) -> list[CellStats]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return [CellStats.from_row(row) for row in csv.DictReader(fh)]
    except OSError as exc:
        raise StorageError(f"cannot read stats file {path}: {exc}") from exc


# ---------------------------------------------------------------- table ----

def format_value(x: float | None) -> str:
    """Two decimals from 0.01 up, three below; absent values as ``--``.

    Matches the mixed style of the published tables: 0.0614 -> ``0.06``,
    0.009 -> ``0.009``, 0.0002 -> ``0.000``.
    """
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ABSENT
    if abs(x) >= 0.01:
        return f"{x:.2f}"
    return f"{x:.3f}"


@dataclass
class AggregateTable:
    rows: list[str]
    columns: list[str]
    values: dict[tuple[str, str], float | None]
    row_avg: dict[str, float | None]
    col_avg: dict[str, float | None]
    overall: float | None
    metric: str = "ri"

    def value(self, row: str, col: str) -> float | None:
        return self.values.get((row, col))

    def to_records(self) -> list[list[str]]:
        header = ["provider", *self.columns, "row_avg"]
        body = [[r, *(format_value(self.value(r, c)) for c in self.columns),
                 format_value(self.row_avg[r])] for r in self.rows]
        footer = ["col_avg", *(format_value(self.col_avg[c]) for c in self.columns),
                  format_value(self.overall)]
        return [header, *body, footer]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.to_records())

    def to_markdown(self) -> str:
        recs = self.to_records()
        lines = ["| " + " | ".join(recs[0]) + " |", "|" + "---|" * len(recs[0])]
        lines += ["| " + " | ".join(r) + " |" for r in recs[1:]]
        return "\n".join(lines) + "\n"


def _mean(xs: list[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def aggregate_table(stats: Sequence[CellStats], metric: str = "ri") -> AggregateTable:
    """Provider × language table of a metric averaged over temperatures.

    Averages only use present cells; a (provider, language) pair with no
    present cell stays ``None`` and prints as ``--``. Row, column and overall
    averages are taken over the present table entries.
    """
    if not stats:
        raise EmptySelectionError("no stats to aggregate")
    per_pair: dict[tuple[str, str], list[float]] = defaultdict(list)
    rows, cols = set(), set()
    for s in stats:
        rows.add(s.provider)
        cols.add(s.language)
        if s.present:
            v = s.metric(metric)
            if not math.isnan(v):
                per_pair[(s.provider, s.language)].append(v)
    rows_l, cols_l = sorted(rows), sorted(cols)
    values = {(r, c): _mean(per_pair.get((r, c), [])) for r in rows_l for c in cols_l}
    row_avg = {r: _mean([values[(r, c)] for c in cols_l if values[(r, c)] is not None]) for r in rows_l}
    col_avg = {c: _mean([values[(r, c)] for r in rows_l if values[(r, c)] is not None]) for c in cols_l}
    overall = _mean([v for v in values.values() if v is not None])
    return AggregateTable(rows_l, cols_l, values, row_avg, col_avg, overall, metric)


# -------------------------------------------------------------- heatmap ----

Norm = Literal["abs", "rowmax"]


@dataclass
class HeatmapMatrix:
    """Value frequencies: one row per temperature, one column per value ``1..k``."""

    x: list[int]
    y: list[float]
    counts: np.ndarray
    title: str = ""

    def normalized(self, norm: Norm = "abs") -> np.ndarray:
        c = self.counts.astype(float)
        if norm == "abs":
            return c
        if norm == "rowmax":
            peak = c.max(axis=1, keepdims=True)
            return np.divide(c, peak, out=np.zeros_like(c), where=peak > 0)
        raise ValueError(f"unknown normalisation {norm!r}")

    def to_csv(self, path: str | Path, norm: Norm = "abs") -> None:
        m = self.normalized(norm)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["temperature", *self.x])
            for t, row in zip(self.y, m):
                w.writerow([repr(t), *(int(v) if norm == "abs" else round(float(v), 6) for v in row)])


def heatmap_matrix(store_path: str | Path, provider: str, language: str, upper: int) -> HeatmapMatrix:
    store = Store(store_path)
    cells = [c for c in store.cells()
             if c.provider == provider and c.language == language.upper() and c.upper == upper]
    if not cells:
        raise EmptySelectionError(f"no cells for {provider}/{language}/1-{upper}")
    cells.sort(key=lambda c: c.temperature)
    rows = [histogram_from_records(store.cell_file(c).read(), upper).counts for c in cells]
    return HeatmapMatrix(list(range(1, upper + 1)), [c.temperature for c in cells],
                         np.vstack(rows), f"{provider} {language} 1-{upper}")


# ------------------------------------------------------------ box/violin ----

@dataclass
class DistributionSummary:
    group: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    outliers: list[float]


SUMMARY_COLUMNS = ["group", "n", "min", "q1", "median", "q3", "max", "mean", "n_outliers", "outliers"]


def summarize_values(values: Sequence[float], group: str = "") -> DistributionSummary:
    """Five-number summary with linearly interpolated quartiles.

    Outliers are points beyond 1.5 IQR from the quartiles.
    """
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        raise EmptySelectionError(f"group {group!r} is empty")
    q1, med, q3 = np.percentile(a, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    outliers = sorted(float(v) for v in a[(a < lo) | (a > hi)])
    return DistributionSummary(group, int(a.size), float(a.min()), float(q1), float(med),
                               float(q3), float(a.max()), float(a.mean()), outliers)


GROUP_KEYS = ("provider", "language", "range", "temperature", "cell")


def _group_key(cell: Cell, by: str) -> str:
    return {
        "provider": cell.provider,
        "language": cell.language,
        "range": f"1-{cell.upper}",
        "temperature": repr(cell.temperature),
        "cell": cell.key,
    }[by]


def distribution_summary(store_path: str | Path, group_by: str = "provider") -> list[DistributionSummary]:
    """Box-plot data of in-range values, grouped by one cell attribute."""
    if group_by not in GROUP_KEYS:
        raise ValueError(f"group_by must be one of {GROUP_KEYS}")
    groups: dict[str, list[int]] = defaultdict(list)
    for cell, records in Store(store_path).iter_records():
        groups[_group_key(cell, group_by)].extend(
            r.parsed_value for r in records if r.status in COUNTED_STATUSES)
    if not groups:
        raise EmptySelectionError("store holds no cells")
    return [summarize_values(v, g) for g, v in sorted(groups.items()) if v]


def write_summary_csv(summaries: Sequence[DistributionSummary], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow([s.group, s.n, s.min, s.q1, s.median, s.q3, s.max, round(s.mean, 6),
                        len(s.outliers), ";".join(f"{o:g}" for o in s.outliers)])


# ------------------------------------------------------------------ svg ----

# sequential white -> navy ramp
PALETTE_LOW = (255, 255, 255)
PALETTE_HIGH = (8, 48, 107)
CELL_W, CELL_H = 24, 20
_LEFT, _TOP, _BAR_GAP, _BAR_W = 56, 28, 16, 14


def color_for(value: float, vmax: float) -> str:
    f = 0.0 if vmax <= 0 else min(1.0, max(0.0, value / vmax))
    rgb = (round(lo + (hi - lo) * f) for lo, hi in zip(PALETTE_LOW, PALETTE_HIGH))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_heatmap_svg(matrix: HeatmapMatrix, norm: Norm = "abs", vmax: float | None = None) -> str:
    """Deterministic SVG heatmap with axis labels and a colour bar.

    The colour scale is fixed to ``[0, 100]`` for absolute counts and to
    ``[0, 1]`` for row-max normalisation unless ``vmax`` is given.
    """
    data = matrix.normalized(norm)
    if data.size == 0:
        raise EmptySelectionError("empty matrix")
    if vmax is None:
        vmax = 100.0 if norm == "abs" else 1.0
    n_rows, n_cols = data.shape
    cw = CELL_W if n_cols <= 20 else max(4, 480 // n_cols)
    width = _LEFT + n_cols * cw + _BAR_GAP + _BAR_W + 48
    height = _TOP + n_rows * CELL_H + 44
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<title>{_esc(matrix.title)}</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for i, t in enumerate(matrix.y):
        y = _TOP + i * CELL_H
        out.append(f'<text x="{_LEFT - 4}" y="{y + CELL_H * 0.7:.1f}" text-anchor="end">T={t:g}</text>')
        for j in range(n_cols):
            v = float(data[i, j])
            out.append(f'<rect class="cell" x="{_LEFT + j * cw}" y="{y}" width="{cw}" height="{CELL_H}" '
                       f'fill="{color_for(v, vmax)}" data-value="{v:g}"/>')
    step = 1 if n_cols <= 20 else 10
    for j, xv in enumerate(matrix.x):
        if xv == 1 or xv % step == 0:
            out.append(f'<text x="{_LEFT + j * cw + cw / 2:.1f}" y="{_TOP + n_rows * CELL_H + 12}" '
                       f'text-anchor="middle">{xv}</text>')
    out.append(f'<text x="{_LEFT + n_cols * cw / 2:.1f}" y="{height - 8}" text-anchor="middle">value</text>')
    out.append(f'<text x="12" y="{_TOP + n_rows * CELL_H / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 12 {_TOP + n_rows * CELL_H / 2:.1f})">temperature</text>')
    # colour bar, 20 steps from vmax (top) to 0 (bottom)
    bx = _LEFT + n_cols * cw + _BAR_GAP
    bar_h = n_rows * CELL_H
    steps = 20
    for s in range(steps):
        frac = 1 - (s + 0.5) / steps
        out.append(f'<rect class="colorbar" x="{bx}" y="{_TOP + s * bar_h / steps:.2f}" width="{_BAR_W}" '
                   f'height="{bar_h / steps:.2f}" fill="{color_for(frac * vmax, vmax)}"/>')
    out.append(f'<text x="{bx + _BAR_W + 3}" y="{_TOP + 8}">{vmax:g}</text>')
    out.append(f'<text x="{bx + _BAR_W + 3}" y="{_TOP + bar_h}">0</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
