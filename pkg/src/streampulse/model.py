"""Snapshot parsing, validation, and per-game series assembly.

A corpus is a JSONL file of platform snapshots taken at a fixed cadence
(one line per snapshot). Snapshots that fail validation are discarded;
the gap they leave is marked on the next surviving point of every game
series so downstream window logic can purge across it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_TICK = 900  # 15-minute cadence, in seconds


class ParseError(ValueError):
    """Raised when a snapshot line cannot be parsed into a Snapshot."""


class EmptyCorpus(ValueError):
    """Raised when an operation needs at least one valid snapshot."""


@dataclass(frozen=True)
class GameObservation:
    name: str
    streamers: int
    viewers: int
    stream_viewers: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Snapshot:
    ts: int
    games: tuple[GameObservation, ...]


@dataclass(frozen=True)
class SeriesPoint:
    ts: int
    viewers: int
    gap_before: bool


@dataclass
class GameSeries:
    game: str
    points: list[SeriesPoint] = field(default_factory=list)

    def viewer_values(self) -> list[int]:
        return [p.viewers for p in self.points]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str | None = None


def _require_int(value, what: str) -> int:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def parse_snapshot_line(line: str) -> Snapshot:
    """Parse one JSONL record into a Snapshot.

    Unknown fields are ignored. Raises ParseError on malformed JSON,
    missing required fields, or non-integer counts.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("snapshot record must be a JSON object")
    if "ts" not in obj or "games" not in obj:
        raise ParseError("snapshot record needs 'ts' and 'games'")
    ts = _require_int(obj["ts"], "ts")
    if ts <= 0:
        raise ParseError(f"ts must be strictly positive, got {ts}")
    raw_games = obj["games"]
    if not isinstance(raw_games, list):
        raise ParseError("'games' must be a list")
    games = []
    for g in raw_games:
        if not isinstance(g, dict):
            raise ParseError("game observation must be a JSON object")
        if "name" not in g or "streamers" not in g or "viewers" not in g:
            raise ParseError("game observation needs 'name', 'streamers', 'viewers'")
        name = g["name"]
        if not isinstance(name, str) or not name:
            raise ParseError("game name must be a non-empty string")
        streamers = _require_int(g["streamers"], "streamers")
        viewers = _require_int(g["viewers"], "viewers")
        if streamers < 0 or viewers < 0:
            raise ParseError("counts must be nonnegative")
        sv = None
        if g.get("stream_viewers") is not None:
            raw_sv = g["stream_viewers"]
            if not isinstance(raw_sv, list):
                raise ParseError("stream_viewers must be a list")
            sv = tuple(_require_int(v, "stream_viewers entry") for v in raw_sv)
            if any(v < 0 for v in sv):
                raise ParseError("stream_viewers entries must be nonnegative")
        games.append(GameObservation(name, streamers, viewers, sv))
    return Snapshot(ts=ts, games=tuple(games))


def validate_snapshot(s: Snapshot, prev_ts: int | None = None) -> Verdict:
    """Structural completeness check for one parsed snapshot.

    prev_ts is the timestamp of the previously *accepted* snapshot; the
    caller threads it through to enforce strict ordering.
    """
    seen = set()
    for g in s.games:
        if g.name in seen:
            return Verdict(False, f"duplicate game name {g.name!r}")
        seen.add(g.name)
        if g.streamers < 0 or g.viewers < 0:
            return Verdict(False, f"negative count for {g.name!r}")
        if g.stream_viewers is not None:
            if len(g.stream_viewers) != g.streamers:
                return Verdict(
                    False, f"stream_viewers length mismatch for {g.name!r}"
                )
            if sum(g.stream_viewers) != g.viewers:
                return Verdict(False, f"stream_viewers sum mismatch for {g.name!r}")
    if prev_ts is not None and s.ts <= prev_ts:
        return Verdict(False, f"ts {s.ts} not after previous {prev_ts}")
    return Verdict(True)


def build_series(snapshots: list[Snapshot], tick: int = DEFAULT_TICK) -> dict[str, GameSeries]:
    """Assemble one GameSeries per game ever observed.

    A game absent from a valid snapshot contributes viewers=0 at that ts.
    When consecutive valid snapshots are more than one tick apart (invalid
    snapshots were discarded between them), the later point carries
    gap_before=True in every series.
    """
    if not snapshots:
        raise EmptyCorpus("no valid snapshots")
    names: set[str] = set()
    for s in snapshots:
        names.update(g.name for g in s.games)
    series = {name: GameSeries(game=name) for name in sorted(names)}
    prev_ts = None
    for s in snapshots:
        gap = prev_ts is not None and (s.ts - prev_ts) > tick
        viewers_here = {g.name: g.viewers for g in s.games}
        for name, gs in series.items():
            gs.points.append(
                SeriesPoint(ts=s.ts, viewers=viewers_here.get(name, 0), gap_before=gap)
            )
        prev_ts = s.ts
    return series


def load_corpus(path: str | Path) -> tuple[list[Snapshot], list[tuple[int, str]]]:
    """Read a snapshot JSONL file, keeping only valid, strictly ordered records.

    Returns (valid snapshots, discarded) where discarded holds
    (line number, reason) pairs for parse failures and invalid snapshots.
    """
    valid: list[Snapshot] = []
    discarded: list[tuple[int, str]] = []
    prev_ts = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                snap = parse_snapshot_line(line)
            except ParseError as exc:
                discarded.append((lineno, str(exc)))
                continue
            verdict = validate_snapshot(snap, prev_ts)
            if not verdict.ok:
                discarded.append((lineno, verdict.reason or "invalid"))
                continue
            valid.append(snap)
            prev_ts = snap.ts
    return valid, discarded


def write_snapshots(snapshots: list[Snapshot], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in snapshots:
            rec = {
                "ts": s.ts,
                "games": [
                    {
                        "name": g.name,
                        "streamers": g.streamers,
                        "viewers": g.viewers,
                        **(
                            {"stream_viewers": list(g.stream_viewers)}
                            if g.stream_viewers is not None
                            else {}
                        ),
                    }
                    for g in s.games
                ],
            }
            fh.write(json.dumps(rec) + "\n")


def write_manifest(path: str | Path, tick: int, t_start: int, t_end: int) -> None:
    """Sidecar manifest: plain-text key=value with tick and time bounds."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"tick={tick}\n")
        fh.write(f"t_start={t_start}\n")
        fh.write(f"t_end={t_end}\n")


def read_manifest(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = int(value.strip())
    return out
