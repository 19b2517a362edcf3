"""Sliding two-window change detection over per-game viewer series.

For each game stream: fill W1 with the first k gap-free values, W2 with
the next k, then test W1 against W2. On a significant rejection the event
is reported, W1 takes over W2's values, and W2 refills from the stream;
otherwise W2 slides forward by one value (W1 stays fixed). Any point with
a gap before it purges both windows and filling restarts there. Partial
windows are never tested.
"""

from __future__ import annotations

import csv
import json
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .kstest import ks_pvalue
from .model import DEFAULT_TICK, GameSeries

DEFAULT_WINDOW_SAMPLES = (96, 192, 288, 672)  # 1, 2, 3, 7 days at 15-min ticks


@dataclass(frozen=True)
class DetectorConfig:
    window_samples: int
    alpha: float = 0.05
    tick: int = DEFAULT_TICK

    def __post_init__(self):
        if self.window_samples < 1:
            raise ValueError("window_samples must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must be in (0, 1)")


@dataclass(frozen=True)
class ChangeEvent:
    game: str
    window_samples: int
    t_detect: int
    d: float
    p: float


def _ks_d_presorted(w1_sorted: np.ndarray, w2: np.ndarray) -> float:
    # same statistic as kstest.ks_statistic, skipping the re-sort of W1
    w2_sorted = np.sort(w2)
    pts = np.concatenate([w1_sorted, w2_sorted])
    cdf1 = np.searchsorted(w1_sorted, pts, side="right") / w1_sorted.size
    cdf2 = np.searchsorted(w2_sorted, pts, side="right") / w2_sorted.size
    return float(np.max(np.abs(cdf1 - cdf2)))


def detect_changes(
    series: GameSeries,
    cfg: DetectorConfig,
    on_test: Callable[[list[int], list[int]], None] | None = None,
) -> list[ChangeEvent]:
    """Run the two-window detector over one game series.

    on_test, when given, is called with the W1 and W2 sample timestamps
    before every test (instrumentation hook for purge auditing).
    """
    k = cfg.window_samples
    events: list[ChangeEvent] = []
    w1: list[tuple[int, int]] = []  # (ts, viewers)
    w2: deque[tuple[int, int]] = deque()
    w1_sorted: np.ndarray | None = None

    for point in series.points:
        if point.gap_before:
            w1.clear()
            w2.clear()
            w1_sorted = None
        if len(w1) < k:
            w1.append((point.ts, point.viewers))
            if len(w1) == k:
                w1_sorted = np.sort(np.array([v for _, v in w1], dtype=float))
            continue
        w2.append((point.ts, point.viewers))
        if len(w2) < k:
            continue
        if on_test is not None:
            on_test([ts for ts, _ in w1], [ts for ts, _ in w2])
        w2_vals = np.array([v for _, v in w2], dtype=float)
        assert w1_sorted is not None
        d = _ks_d_presorted(w1_sorted, w2_vals)
        p = ks_pvalue(d, k, k)
        if p <= cfg.alpha:
            events.append(
                ChangeEvent(
                    game=series.game,
                    window_samples=k,
                    t_detect=point.ts,
                    d=d,
                    p=p,
                )
            )
            w1 = list(w2)
            w1_sorted = np.sort(w2_vals)
            w2.clear()
        else:
            w2.popleft()
    return events


def detect_corpus(
    series_map: dict[str, GameSeries], configs: Iterable[DetectorConfig]
) -> list[ChangeEvent]:
    """Detector over every game x config, merged into a deterministic order."""
    configs = list(configs)
    seen_k = [c.window_samples for c in configs]
    if len(set(seen_k)) != len(seen_k):
        raise ValueError("configs must be distinct in window_samples")
    events: list[ChangeEvent] = []
    for name in sorted(series_map):
        for cfg in configs:
            events.extend(detect_changes(series_map[name], cfg))
    events.sort(key=lambda e: (e.t_detect, e.game, e.window_samples))
    return events


def events_by_window(events: Iterable[ChangeEvent]) -> dict[int, int]:
    """Per-window-size event totals."""
    counts = Counter(e.window_samples for e in events)
    return dict(sorted(counts.items()))


def write_events_jsonl(events: Iterable[ChangeEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(
                json.dumps(
                    {
                        "game": e.game,
                        "window_samples": e.window_samples,
                        "t_detect": e.t_detect,
                        "d": e.d,
                        "p": e.p,
                    }
                )
                + "\n"
            )


def read_events_jsonl(path: str | Path) -> list[ChangeEvent]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            events.append(
                ChangeEvent(
                    game=obj["game"],
                    window_samples=int(obj["window_samples"]),
                    t_detect=int(obj["t_detect"]),
                    d=float(obj["d"]),
                    p=float(obj["p"]),
                )
            )
    return events


def write_window_summary_csv(events: Iterable[ChangeEvent], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_samples", "events"])
        for k, n in events_by_window(events).items():
            writer.writerow([k, n])
