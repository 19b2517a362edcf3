"""Distributional and cyclic diagnostics for a snapshot corpus.

Covers the exploratory side of the artifact: exact popularity histograms
and power-law exponent fits, platform-wide totals with their daily and
weekend cycles, and per-game change-event summaries.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .detector import ChangeEvent
from .model import Snapshot


class MissingStreamDetail(ValueError):
    pass


class InsufficientTail(ValueError):
    pass


class DomainError(ValueError):
    pass


AXES = ("viewers-per-game", "streamers-per-game", "viewers-per-stream")


@dataclass(frozen=True)
class Histogram:
    bins: tuple[tuple[float, int], ...]  # (value, count), sorted ascending
    value_label: str = "value"
    count_label: str = "count"

    def total(self) -> int:
        return sum(c for _, c in self.bins)


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: float
    n_tail: int


def population_histogram(s: Snapshot, axis: str) -> Histogram:
    """Exact integer histogram of one popularity axis of a snapshot."""
    if axis not in AXES:
        raise DomainError(f"unknown axis {axis!r}")
    if axis == "viewers-per-game":
        values = [g.viewers for g in s.games]
        labels = ("viewers", "games")
    elif axis == "streamers-per-game":
        values = [g.streamers for g in s.games]
        labels = ("streamers", "games")
    else:
        values = []
        for g in s.games:
            if g.stream_viewers is None:
                raise MissingStreamDetail(
                    f"snapshot lacks stream_viewers for {g.name!r}"
                )
            values.extend(g.stream_viewers)
        labels = ("viewers", "streams")
    counts = Counter(values)
    bins = tuple(sorted(counts.items()))
    return Histogram(bins=bins, value_label=labels[0], count_label=labels[1])


def fit_power_law(samples, xmin: float = 1.0) -> PowerLawFit:
    """Continuous MLE for the tail exponent: alpha = 1 + n / sum(ln(x/xmin)).

    xmin is caller-supplied; samples below it are ignored. Continuous MLE
    is used even for integer data (documented approximation).
    """
    if xmin <= 0:
        raise DomainError("xmin must be positive")
    tail = np.asarray([x for x in samples if x >= xmin], dtype=float)
    if tail.size < 2:
        raise InsufficientTail(f"need >= 2 samples >= xmin, got {tail.size}")
    log_sum = float(np.sum(np.log(tail / xmin)))
    if log_sum <= 0.0:
        raise InsufficientTail("all tail samples equal xmin; exponent diverges")
    alpha = 1.0 + tail.size / log_sum
    return PowerLawFit(alpha=alpha, xmin=float(xmin), n_tail=int(tail.size))


def totals_series(
    snapshots: list[Snapshot],
) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Per-snapshot (ts, total viewers) and (ts, total streamers)."""
    viewers = [(s.ts, sum(g.viewers for g in s.games)) for s in snapshots]
    streamers = [(s.ts, sum(g.streamers for g in s.games)) for s in snapshots]
    return viewers, streamers


def autocorrelation(series, lag: int) -> float:
    """Sample autocorrelation at one lag: Pearson correlation of the
    lag-offset pairs (x_t, x_{t+lag}), so a pure periodic signal evaluates
    to exactly +/-1 at (anti)phase lags."""
    x = np.asarray(series, dtype=float)
    if lag < 1 or lag >= x.size:
        raise DomainError(f"lag must be in [1, len); got {lag} for length {x.size}")
    a = x[:-lag]
    b = x[lag:]
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def events_per_game(
    events: Iterable[ChangeEvent], top_k: int = 10
) -> tuple[Histogram, list[tuple[str, int]]]:
    """Per-game event-count histogram plus the top-K most volatile games.

    Top-K sorted by count descending, ties broken by game name ascending.
    """
    per_game = Counter(e.game for e in events)
    hist_counts = Counter(per_game.values())
    hist = Histogram(
        bins=tuple(sorted(hist_counts.items())),
        value_label="events",
        count_label="games",
    )
    top = sorted(per_game.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return hist, top


def weekend_uplift(totals: list[tuple[int, int]]) -> float:
    """Mean weekend total over mean weekday total (UTC days).

    Reporting aid for the cyclic diagnostics; returns NaN if either side
    is empty.
    """
    weekend, weekday = [], []
    for ts, value in totals:
        # epoch day 0 (1970-01-01) was a Thursday; days 2 and 3 mod 7 are Sat/Sun
        day = (ts // 86400 + 4) % 7
        (weekend if day >= 5 else weekday).append(value)
    if not weekend or not weekday:
        return math.nan
    return float(np.mean(weekend) / np.mean(weekday))


def loglog_slope(hist: Histogram, n_bins: int = 12) -> float:
    """Power-law diagnostic slope of a count histogram.

    Rebins the exact histogram into logarithmically spaced bins, converts
    to density (count / bin width), and least-squares fits log density vs
    log bin center. For a clean power-law population the slope
    approximates the negated exponent. Values <= 0 are ignored.
    """
    pts = [(v, c) for v, c in hist.bins if v > 0 and c > 0]
    if len(pts) < 2:
        raise InsufficientTail("need >= 2 usable bins for a slope")
    values = np.array([v for v, _ in pts], dtype=float)
    counts = np.array([c for _, c in pts], dtype=float)
    edges = np.logspace(
        np.log10(values.min()), np.log10(values.max() * (1 + 1e-9)), n_bins + 1
    )
    which = np.clip(np.searchsorted(edges, values, side="right") - 1, 0, n_bins - 1)
    binned = np.zeros(n_bins)
    np.add.at(binned, which, counts)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    mask = binned > 0
    if mask.sum() < 2:
        raise InsufficientTail("log-binned histogram too sparse for a slope")
    slope, _ = np.polyfit(np.log(centers[mask]), np.log(binned[mask] / widths[mask]), 1)
    return float(slope)


def write_tsv(path: str | Path, header: tuple[str, str], rows) -> None:
    """Two-column plot-ready TSV with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_histogram_tsv(hist: Histogram, path: str | Path) -> None:
    write_tsv(path, (hist.value_label, hist.count_label), hist.bins)


def write_top_games_csv(top: list[tuple[str, int]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game", "events"])
        writer.writerows(top)
