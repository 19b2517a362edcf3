"""Seeded generator of snapshot corpora with known ground truth.

Per game, mean viewership = base popularity (power-law sample) x diurnal
curve x weekend factor x any active shift multipliers; observed viewers
are Poisson draws around that mean (or the rounded mean when noise is
"none", which makes every downstream detection deterministic).

Impact coupling: an "impactful" debut is backed by a step shift on one or
more helper games. The two-window KS detector cannot reject until the
sliding window holds enough post-shift samples, so the step is scheduled
that many ticks *before* the debut, placing the resulting detection
timestamp inside the post-debut attribution horizon.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kstest import ks_pvalue
from .metadata import normalize_name
from .model import (
    DEFAULT_TICK,
    GameObservation,
    Snapshot,
    write_manifest,
    write_snapshots,
)

DAY_SECONDS = 86400


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ShiftSpec:
    game: str
    index: int  # snapshot index at which the new mean takes effect
    multiplier: float


@dataclass(frozen=True)
class DebutSpec:
    game: str
    index: int
    impactful: bool
    level: float | None = None  # post-debut mean viewers; drawn if None


@dataclass
class SynthConfig:
    n_games: int = 20
    n_snapshots: int = 1000
    tick: int = DEFAULT_TICK
    start_ts: int = 1_600_000_000
    popularity_exponent: float = 2.5
    popularity_xmin: float = 20.0
    daily_amplitude: float = 0.0  # diurnal factor = 1 + a*sin(2*pi*t/day)
    weekend_uplift: float = 1.0
    shifts: list[ShiftSpec] = field(default_factory=list)
    debuts: list[DebutSpec] = field(default_factory=list)
    noise: str = "poisson"  # "poisson" | "none"
    seed: int = 0
    invalid_indices: list[int] = field(default_factory=list)
    emit_stream_viewers: bool = False
    # impact-coupling knobs
    couple_window: int = 96
    couple_alpha: float = 0.05
    helpers_per_impact: int = 1
    couple_multiplier: float = 4.0
    # planted metadata signal (primary: description length, secondary: user reviews)
    desc_len_impactful: tuple[int, int] = (800, 1200)
    desc_len_inert: tuple[int, int] = (100, 300)
    reviews_impactful: tuple[int, int] = (20, 60)
    reviews_inert: tuple[int, int] = (0, 39)


@dataclass
class GroundTruth:
    shifts: list[dict]  # {game, index, ts, multiplier}
    debuts: list[dict]  # {game, index, ts, impactful}
    metadata_signal: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "shifts": self.shifts,
                "debuts": self.debuts,
                "metadata_signal": self.metadata_signal,
            },
            indent=2,
        )


def min_detectable_lag(k: int, alpha: float) -> int:
    """Smallest number of cleanly separated post-shift samples in the
    sliding window that makes the KS test reject at the given alpha."""
    for m in range(1, k + 1):
        if ks_pvalue(m / k, k, k) <= alpha:
            return m
    raise ConfigError(f"no detectable lag for k={k}, alpha={alpha}")


def _validate(cfg: SynthConfig) -> None:
    if cfg.noise not in ("poisson", "none"):
        raise ConfigError(f"unknown noise law {cfg.noise!r}")
    if cfg.popularity_exponent <= 1.0:
        raise ConfigError("popularity exponent must be > 1")
    if not (0.0 <= cfg.daily_amplitude < 1.0):
        raise ConfigError("daily amplitude must be in [0, 1)")
    if not (1 <= cfg.helpers_per_impact <= 3):
        raise ConfigError("helpers_per_impact must be 1..3")
    for sh in cfg.shifts:
        if not (0 <= sh.index < cfg.n_snapshots):
            raise ConfigError(f"shift index {sh.index} out of corpus bounds")
        if sh.multiplier <= 0:
            raise ConfigError("shift multipliers must be > 0")
    lag = min_detectable_lag(cfg.couple_window, cfg.couple_alpha)
    for d in cfg.debuts:
        if not (0 <= d.index < cfg.n_snapshots):
            raise ConfigError(f"debut index {d.index} out of corpus bounds")
        if d.impactful and d.index < 2 * cfg.couple_window + lag:
            raise ConfigError(
                f"impactful debut at index {d.index} is too early for coupling "
                f"(need >= {2 * cfg.couple_window + lag})"
            )
    names = [d.game for d in cfg.debuts]
    if len(set(names)) != len(names):
        raise ConfigError("duplicate game in debut schedule")


def _cycle_factor(cfg: SynthConfig, ts: int) -> float:
    f = 1.0 + cfg.daily_amplitude * np.sin(2.0 * np.pi * (ts % DAY_SECONDS) / DAY_SECONDS)
    day = (ts // DAY_SECONDS + 4) % 7
    if day >= 5:
        f *= cfg.weekend_uplift
    return float(f)


def generate_snapshots(cfg: SynthConfig) -> tuple[list[Snapshot], GroundTruth]:
    """Generate the valid snapshots of a corpus plus its ground truth.

    Scheduled invalid indices are simply skipped here (the file writer
    emits a broken record in their place); skipping creates the same gap
    the validator would.
    """
    _validate(cfg)
    rng = np.random.default_rng(cfg.seed)
    lag = min_detectable_lag(cfg.couple_window, cfg.couple_alpha)

    # base levels: ambient games draw from a Pareto tail
    u = rng.random(cfg.n_games)
    bases = {
        f"game_{i:04d}": float(
            cfg.popularity_xmin * (1.0 - u[i]) ** (-1.0 / (cfg.popularity_exponent - 1.0))
        )
        for i in range(cfg.n_games)
    }

    shift_schedule: dict[str, list[ShiftSpec]] = {}
    truth_shifts: list[dict] = []

    def add_shift(spec: ShiftSpec) -> None:
        shift_schedule.setdefault(spec.game, []).append(spec)
        truth_shifts.append(
            {
                "game": spec.game,
                "index": spec.index,
                "ts": cfg.start_ts + spec.index * cfg.tick,
                "multiplier": spec.multiplier,
            }
        )

    for sh in cfg.shifts:
        if sh.game not in bases:
            raise ConfigError(f"shift references unknown game {sh.game!r}")
        add_shift(sh)

    # debut games and coupling helpers
    debut_levels: dict[str, float] = {}
    debut_index: dict[str, int] = {}
    truth_debuts: list[dict] = []
    for d in cfg.debuts:
        if d.game in bases:
            raise ConfigError(f"debut game {d.game!r} collides with an ambient game")
        level = d.level if d.level is not None else float(rng.uniform(30.0, 120.0))
        debut_levels[d.game] = level
        debut_index[d.game] = d.index
        truth_debuts.append(
            {
                "game": d.game,
                "index": d.index,
                "ts": cfg.start_ts + d.index * cfg.tick,
                "impactful": d.impactful,
            }
        )
        if d.impactful:
            n_helpers = 1 + int(rng.integers(0, cfg.helpers_per_impact))
            for j in range(n_helpers):
                helper = f"helper_{d.game}_{j}"
                bases[helper] = float(rng.uniform(40.0, 90.0))
                # detection fires `lag` samples after onset; aim it at
                # one tick past the debut so t_detect is strictly inside
                # (t_debut, t_debut + 30min]
                onset = d.index + 2 - lag
                add_shift(ShiftSpec(game=helper, index=onset, multiplier=cfg.couple_multiplier))

    ambient_names = sorted(bases)
    debut_names = sorted(debut_levels)
    invalid = set(cfg.invalid_indices)

    snapshots: list[Snapshot] = []
    for i in range(cfg.n_snapshots):
        if i in invalid:
            continue
        ts = cfg.start_ts + i * cfg.tick
        cycle = _cycle_factor(cfg, ts)
        games = []
        for name in ambient_names:
            mean = bases[name] * cycle
            for sh in shift_schedule.get(name, ()):
                if i >= sh.index:
                    mean *= sh.multiplier
            games.append(_observe(name, mean, cfg, rng))
        for name in debut_names:
            if i < debut_index[name]:
                continue
            games.append(_observe(name, debut_levels[name] * cycle, cfg, rng))
        snapshots.append(Snapshot(ts=ts, games=tuple(games)))

    truth = GroundTruth(
        shifts=sorted(truth_shifts, key=lambda s: (s["index"], s["game"])),
        debuts=sorted(truth_debuts, key=lambda d: (d["index"], d["game"])),
        metadata_signal={
            "primary_feature": "description_len",
            "secondary_feature": "user_reviews",
            "desc_len_impactful": list(cfg.desc_len_impactful),
            "desc_len_inert": list(cfg.desc_len_inert),
            "reviews_impactful": list(cfg.reviews_impactful),
            "reviews_inert": list(cfg.reviews_inert),
        },
    )
    return snapshots, truth


def _observe(name: str, mean: float, cfg: SynthConfig, rng) -> GameObservation:
    if cfg.noise == "poisson":
        viewers = int(rng.poisson(mean))
    else:
        viewers = int(round(mean))
    streamers = max(1, viewers // 25 + 1)
    sv = None
    if cfg.emit_stream_viewers:
        counts = [viewers // streamers] * streamers
        counts[0] += viewers - sum(counts)
        sv = tuple(counts)
    return GameObservation(name=name, streamers=streamers, viewers=viewers, stream_viewers=sv)


_WORDS = ("stream", "arena", "quest", "pixel", "guild", "relay", "switch", "vista")


def _make_description(rng, length: int) -> str:
    out = []
    total = -1  # the join has one fewer separator than words
    while total < length:
        w = _WORDS[int(rng.integers(0, len(_WORDS)))]
        out.append(w)
        total += len(w) + 1
    return " ".join(out)[:length]


_PLATFORM_POOL = ["PC", "PS4", "XBoxOne", "Switch", "Mac", "Linux", "Mobile"]
_GENRE_POOL = ["action", "strategy", "rpg", "simulation", "sports", "puzzle"]
_THEME_POOL = ["fantasy", "scifi", "horror", "modern", "historic"]
_COMPANY_POOL = [f"studio_{c}" for c in "abcdefghij"]
_RATING_POOL = ["E", "T", "M", None]


def generate_metadata_fixtures(
    cfg: SynthConfig, truth: GroundTruth, fixture_dir: str | Path
) -> dict[str, dict]:
    """Write one metadata fixture JSON per debut game.

    Impactful games get systematically longer descriptions (primary
    planted signal) and more user reviews (secondary signal); everything
    else is seeded noise.
    """
    fixture_dir = Path(fixture_dir)
    fixture_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed + 1)
    fixtures: dict[str, dict] = {}
    for d in truth.debuts:
        impactful = d["impactful"]
        lo, hi = cfg.desc_len_impactful if impactful else cfg.desc_len_inert
        desc_len = int(rng.integers(lo, hi + 1))
        rlo, rhi = cfg.reviews_impactful if impactful else cfg.reviews_inert
        release = int(rng.integers(12000, 16000))
        added = release + int(rng.integers(0, 1000))
        doc = {
            "name": d["game"],
            "aliases": [f"{d['game']}_alias"] if rng.random() < 0.5 else [],
            "platforms": list(
                rng.choice(_PLATFORM_POOL, size=int(rng.integers(1, 4)), replace=False)
            ),
            "publishers": [str(rng.choice(_COMPANY_POOL))],
            "developers": [str(rng.choice(_COMPANY_POOL))],
            "franchises": [],
            "genres": [str(rng.choice(_GENRE_POOL))],
            "themes": [str(rng.choice(_THEME_POOL))],
            "rating": _RATING_POOL[int(rng.integers(0, len(_RATING_POOL)))],
            "description": _make_description(rng, desc_len),
            "short_description": _make_description(rng, int(rng.integers(40, 120))),
            "characters": int(rng.integers(0, 20)),
            "concepts": int(rng.integers(0, 15)),
            "locations": int(rng.integers(0, 10)),
            "objects": int(rng.integers(0, 25)),
            "people": int(rng.integers(0, 30)),
            "videos": int(rng.integers(0, 8)),
            "images": int(rng.integers(0, 40)),
            "has_main_image": bool(rng.random() < 0.9),
            "user_reviews": int(rng.integers(rlo, rhi + 1)),
            "staff_reviews": int(rng.integers(0, 3)),
            "killed_characters": int(rng.integers(0, 5)),
            "debuted_characters": int(rng.integers(0, 5)),
            "debuted_objects": int(rng.integers(0, 5)),
            "debuted_locations": int(rng.integers(0, 5)),
            "debuted_concepts": int(rng.integers(0, 5)),
            "debuted_people": int(rng.integers(0, 5)),
            "similar_games": int(rng.integers(0, 10)),
            "rereleases": int(rng.integers(0, 3)),
            "date_added": added,
            "date_last_updated": added + int(rng.integers(0, 500)),
            "original_release_date": release,
            "expected_release_date": release - int(rng.integers(0, 100)),
        }
        fixtures[d["game"]] = doc
        with open(fixture_dir / f"{normalize_name(d['game'])}.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
    return fixtures


def generate_corpus(cfg: SynthConfig, out_dir: str | Path) -> tuple[list[Snapshot], GroundTruth]:
    """Write a full corpus: snapshots.jsonl, manifest.txt, ground_truth.json,
    and metadata fixtures. Returns the valid snapshots and ground truth."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshots, truth = generate_snapshots(cfg)

    snap_path = out_dir / "snapshots.jsonl"
    if cfg.invalid_indices:
        # splice broken records at scheduled indices so ingestion has to
        # discard them (duplicate game name => Invalid)
        invalid = set(cfg.invalid_indices)
        by_ts = {s.ts: s for s in snapshots}
        with open(snap_path, "w", encoding="utf-8") as fh:
            for i in range(cfg.n_snapshots):
                ts = cfg.start_ts + i * cfg.tick
                if i in invalid:
                    rec = {
                        "ts": ts,
                        "games": [
                            {"name": "dup", "streamers": 1, "viewers": 1},
                            {"name": "dup", "streamers": 1, "viewers": 1},
                        ],
                    }
                    fh.write(json.dumps(rec) + "\n")
                elif ts in by_ts:
                    _append_snapshot(fh, by_ts[ts])
    else:
        write_snapshots(snapshots, snap_path)

    write_manifest(
        out_dir / "manifest.txt",
        tick=cfg.tick,
        t_start=snapshots[0].ts if snapshots else cfg.start_ts,
        t_end=snapshots[-1].ts if snapshots else cfg.start_ts,
    )
    with open(out_dir / "ground_truth.json", "w", encoding="utf-8") as fh:
        fh.write(truth.to_json() + "\n")
    generate_metadata_fixtures(cfg, truth, out_dir / "metadata_fixtures")
    return snapshots, truth


def _append_snapshot(fh, s: Snapshot) -> None:
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


def load_ground_truth(path: str | Path) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return GroundTruth(
        shifts=obj["shifts"], debuts=obj["debuts"], metadata_signal=obj["metadata_signal"]
    )
