"""Game debuts and change-event attribution.

A game debuts at the first valid snapshot where it appears with at least
one streamer. Debuts inside the first day of the corpus are excluded
(the shortest detection window spans a full day, so nothing can be
attributed to them). A debut is impactful when at least one change event
on *another* game lands in the post-debut horizon.
"""

from __future__ import annotations

import bisect
import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .detector import ChangeEvent
from .model import Snapshot

FIRST_DAY_SNAPSHOTS = 96
DEFAULT_HORIZON = 1800  # 30 minutes


@dataclass(frozen=True)
class DebutRecord:
    game: str
    t_debut: int
    excluded: bool
    exclusion_reason: str | None = None


@dataclass(frozen=True)
class ImpactLabel:
    game: str
    t_debut: int
    coincident_events: int
    impactful: bool


def find_debuts(
    snapshots: list[Snapshot], first_day_snapshots: int = FIRST_DAY_SNAPSHOTS
) -> list[DebutRecord]:
    """First appearance (streamers >= 1) of every game, in (t_debut, game) order."""
    first_seen: dict[str, int] = {}
    first_index: dict[str, int] = {}
    for idx, s in enumerate(snapshots):
        for g in s.games:
            if g.streamers >= 1 and g.name not in first_seen:
                first_seen[g.name] = s.ts
                first_index[g.name] = idx
    records = []
    for name, ts in first_seen.items():
        early = first_index[name] < first_day_snapshots
        records.append(
            DebutRecord(
                game=name,
                t_debut=ts,
                excluded=early,
                exclusion_reason="debuted in first day of corpus" if early else None,
            )
        )
    records.sort(key=lambda r: (r.t_debut, r.game))
    return records


def attribute_events(
    debuts: list[DebutRecord],
    events: Iterable[ChangeEvent],
    horizon: int = DEFAULT_HORIZON,
) -> tuple[list[ImpactLabel], dict]:
    """Count change events in (t_debut, t_debut + horizon] for every
    non-excluded debut.

    Events on the debuting game itself are not counted: its own series
    necessarily shifts at debut, which would label every debut impactful.
    All window sizes are pooled; distinct (game, window, t) events count
    separately.
    """
    events = sorted(events, key=lambda e: e.t_detect)
    times = [e.t_detect for e in events]
    labels = []
    for debut in debuts:
        if debut.excluded:
            continue
        lo = bisect.bisect_right(times, debut.t_debut)
        hi = bisect.bisect_right(times, debut.t_debut + horizon)
        n = sum(1 for e in events[lo:hi] if e.game != debut.game)
        labels.append(
            ImpactLabel(
                game=debut.game,
                t_debut=debut.t_debut,
                coincident_events=n,
                impactful=n >= 1,
            )
        )
    with_events = sum(1 for l in labels if l.impactful)
    without = len(labels) - with_events
    total = len(labels)
    summary = {
        "debuts_labeled": total,
        "debuts_excluded": sum(1 for d in debuts if d.excluded),
        "with_events": with_events,
        "without_events": without,
        "with_fraction": with_events / total if total else 0.0,
        "without_fraction": without / total if total else 0.0,
        "horizon_seconds": horizon,
    }
    return labels, summary


def write_labels_csv(labels: list[ImpactLabel], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game", "t_debut", "coincident_events", "impactful"])
        for l in labels:
            writer.writerow([l.game, l.t_debut, l.coincident_events, int(l.impactful)])


def read_labels_csv(path: str | Path) -> list[ImpactLabel]:
    labels = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            labels.append(
                ImpactLabel(
                    game=row["game"],
                    t_debut=int(row["t_debut"]),
                    coincident_events=int(row["coincident_events"]),
                    impactful=bool(int(row["impactful"])),
                )
            )
    return labels


def write_summary_json(summary: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
