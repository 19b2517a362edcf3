"""Game metadata: GiantBomb-compatible HTTP client and feature encoding.

The client does a search-then-detail request pair, honors a requests-per-
second limit, and caches raw responses on disk keyed by normalized game
name. A fixture directory (same one-JSON-file-per-name format as the
cache) is the default source in tests; live mode needs an explicit flag
and API key.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np

from .dataset import Dataset, EmptyDataset


class NotFoundError(LookupError):
    pass


class UnresolvableError(LookupError):
    """Multiple equally ranked matches; the name cannot be resolved."""


class TransportError(RuntimeError):
    pass


class AuthError(RuntimeError):
    pass


class SchemaMismatch(ValueError):
    pass


COUNT_FIELDS = (
    "characters",
    "concepts",
    "locations",
    "objects",
    "people",
    "videos",
    "images",
    "user_reviews",
    "staff_reviews",
    "killed_characters",
    "debuted_characters",
    "debuted_objects",
    "debuted_locations",
    "debuted_concepts",
    "debuted_people",
    "similar_games",
    "rereleases",
)

VOCAB_FIELDS = ("platforms", "publishers", "developers", "franchises", "genres", "themes")

DATE_FIELDS = (
    "date_added",
    "date_last_updated",
    "original_release_date",
    "expected_release_date",
)


def normalize_name(name: str) -> str:
    """Cache/fixture key: lowercase, non-alphanumerics collapsed to '_'."""
    key = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    return key or "_"


@dataclass
class GameMetadata:
    name: str
    aliases: list[str] = field(default_factory=list)
    platforms: list[str] = field(default_factory=list)
    publishers: list[str] = field(default_factory=list)
    developers: list[str] = field(default_factory=list)
    franchises: list[str] = field(default_factory=list)
    genres: list[str] = field(default_factory=list)
    themes: list[str] = field(default_factory=list)
    rating: str | None = None
    description: str | None = None
    short_description: str | None = None
    counts: dict[str, int] = field(default_factory=dict)
    has_main_image: bool = False
    dates: dict[str, int | None] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "GameMetadata":
        name = doc.get("name")
        if not name:
            raise SchemaMismatch("metadata document has no name")

        def as_list(key):
            value = doc.get(key) or []
            if not isinstance(value, list):
                raise SchemaMismatch(f"{key} must be a list")
            return [str(v) for v in value]

        counts = {}
        for key in COUNT_FIELDS:
            value = doc.get(key, 0)
            if isinstance(value, list):
                value = len(value)
            value = int(value or 0)
            if value < 0:
                raise SchemaMismatch(f"count {key} must be nonnegative")
            counts[key] = value
        dates = {}
        for key in DATE_FIELDS:
            value = doc.get(key)
            if value is not None:
                value = int(value)
                # epoch days, must land in [1970, 2100)
                if not (0 <= value < (2100 - 1970) * 366):
                    raise SchemaMismatch(f"date {key}={value} out of range")
            dates[key] = value
        return cls(
            name=str(name),
            aliases=as_list("aliases"),
            platforms=as_list("platforms"),
            publishers=as_list("publishers"),
            developers=as_list("developers"),
            franchises=as_list("franchises"),
            genres=as_list("genres"),
            themes=as_list("themes"),
            rating=doc.get("rating"),
            description=doc.get("description"),
            short_description=doc.get("short_description"),
            counts=counts,
            has_main_image=bool(doc.get("has_main_image") or doc.get("main_image")),
            dates=dates,
        )


@dataclass
class ClientConfig:
    base_url: str = "https://www.giantbomb.com/api"
    api_key: str = ""
    rate_limit: float = 1.0  # requests per second
    cache_dir: str | Path = ".metadata_cache"
    fixture_dir: str | Path | None = None
    live: bool = False


class RateLimiter:
    """Minimum-interval limiter: at most `rate` acquisitions per second."""

    def __init__(self, rate: float, time_fn=time.monotonic, sleep_fn=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._time = time_fn
        self._sleep = sleep_fn
        self._next_ok = None

    def acquire(self) -> None:
        now = self._time()
        if self._next_ok is not None and now < self._next_ok:
            self._sleep(self._next_ok - now)
            now = self._next_ok
        self._next_ok = now + self.interval


class GiantBombClient:
    """Search-then-detail metadata fetcher with on-disk cache and fixtures."""

    def __init__(self, config: ClientConfig, transport: httpx.BaseTransport | None = None,
                 time_fn=time.monotonic, sleep_fn=time.sleep):
        self.config = config
        self.limiter = RateLimiter(config.rate_limit, time_fn=time_fn, sleep_fn=sleep_fn)
        self._client = httpx.Client(transport=transport) if (config.live or transport) else None
        self.request_count = 0
        Path(config.cache_dir).mkdir(parents=True, exist_ok=True)

    def fetch_game(self, name: str) -> GameMetadata:
        key = normalize_name(name)
        cached = self._read_store(Path(self.config.cache_dir) / f"{key}.json")
        if cached is not None:
            return cached
        if self.config.fixture_dir is not None:
            fixture = self._read_store(Path(self.config.fixture_dir) / f"{key}.json")
            if fixture is not None:
                return fixture
        if not self.config.live:
            raise NotFoundError(f"{name!r} not in cache or fixtures (live mode off)")
        doc = self._fetch_live(name)
        cache_path = Path(self.config.cache_dir) / f"{key}.json"
        with open(cache_path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        return GameMetadata.from_dict(doc)

    def _read_store(self, path: Path) -> GameMetadata | None:
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if isinstance(doc, list):
            # a stored list means the name resolved to several candidates
            if len(doc) == 0:
                raise NotFoundError(path.stem)
            if len(doc) > 1:
                raise UnresolvableError(path.stem)
            doc = doc[0]
        return GameMetadata.from_dict(doc)

    def _get(self, url: str, params: dict) -> dict:
        self.limiter.acquire()
        self.request_count += 1
        try:
            resp = self._client.get(url, params=params)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"HTTP {resp.status_code} from {url}")
        if resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code} from {url}")
        if resp.status_code != 200:
            raise TransportError(f"unexpected HTTP {resp.status_code} from {url}")
        return resp.json()

    def _fetch_live(self, name: str) -> dict:
        base = self.config.base_url.rstrip("/")
        search = self._get(
            f"{base}/search/",
            {
                "api_key": self.config.api_key,
                "format": "json",
                "resources": "game",
                "query": name,
            },
        )
        results = search.get("results") or []
        exact = [r for r in results if str(r.get("name", "")).lower() == name.lower()]
        if len(exact) > 1:
            raise UnresolvableError(name)
        if not exact:
            if not results:
                raise NotFoundError(name)
            exact = results[:1]
        guid = exact[0].get("guid") or exact[0].get("id")
        detail = self._get(
            f"{base}/game/{guid}/",
            {"api_key": self.config.api_key, "format": "json"},
        )
        doc = detail.get("results")
        if not doc:
            raise NotFoundError(name)
        return doc


# ---------------------------------------------------------------------------
# feature encoding
# ---------------------------------------------------------------------------

OTHER_BUCKET = "__other__"


@dataclass
class FeatureSchema:
    vocabs: dict[str, list[str]]  # per multi-valued field: top-K values
    rating_vocab: list[str]
    vocab_cap: int
    reference_time: int  # epoch seconds

    def feature_names(self) -> list[str]:
        names = [
            "description_len",
            "description_missing",
            "short_description_len",
            "short_description_missing",
            "alias_count",
        ]
        names.extend(COUNT_FIELDS)
        names.append("has_main_image")
        names.extend(
            [
                "game_age_days",
                "game_age_missing",
                "added_minus_updated",
                "added_minus_updated_missing",
                "added_minus_release",
                "added_minus_release_missing",
                "release_minus_expected",
                "release_minus_expected_missing",
            ]
        )
        for value in self.rating_vocab:
            names.append(f"rating={value}")
        names.append("rating_missing")
        for fld in VOCAB_FIELDS:
            for value in self.vocabs[fld]:
                names.append(f"{fld}={value}")
            names.append(f"{fld}={OTHER_BUCKET}")
        return names

    def to_dict(self) -> dict:
        return {
            "vocabs": self.vocabs,
            "rating_vocab": self.rating_vocab,
            "vocab_cap": self.vocab_cap,
            "reference_time": self.reference_time,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FeatureSchema":
        return cls(
            vocabs={k: list(v) for k, v in doc["vocabs"].items()},
            rating_vocab=list(doc["rating_vocab"]),
            vocab_cap=int(doc["vocab_cap"]),
            reference_time=int(doc["reference_time"]),
        )


@dataclass
class FeatureVector:
    numeric: list[float]
    names: list[str]
    label: bool | None = None


def build_schema(
    metadatas: list[GameMetadata], vocab_cap: int = 50, reference_time: int = 0
) -> FeatureSchema:
    """Vocabularies from a training set: per multi-valued field, the top-K
    values by frequency (ties by name) plus an implicit "other" bucket."""
    vocabs: dict[str, list[str]] = {}
    for fld in VOCAB_FIELDS:
        freq: dict[str, int] = {}
        for m in metadatas:
            for value in getattr(m, fld):
                freq[value] = freq.get(value, 0) + 1
        ranked = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        vocabs[fld] = [v for v, _ in ranked[:vocab_cap]]
    ratings = sorted({m.rating for m in metadatas if m.rating is not None})
    return FeatureSchema(
        vocabs=vocabs,
        rating_vocab=ratings,
        vocab_cap=vocab_cap,
        reference_time=reference_time,
    )


def extract_features(m: GameMetadata, schema: FeatureSchema) -> FeatureVector:
    """Encode one game into the schema's fixed numeric order.

    Absent optional fields contribute 0 plus a companion missing
    indicator set to 1.
    """
    values: list[float] = []

    def optional_len(text):
        if text is None:
            values.extend([0.0, 1.0])
        else:
            values.extend([float(len(text)), 0.0])

    optional_len(m.description)
    optional_len(m.short_description)
    values.append(float(len(m.aliases)))
    for key in COUNT_FIELDS:
        if key not in m.counts:
            raise SchemaMismatch(f"metadata missing count field {key}")
        values.append(float(m.counts[key]))
    values.append(1.0 if m.has_main_image else 0.0)

    ref_days = schema.reference_time // 86400
    added = m.dates.get("date_added")
    updated = m.dates.get("date_last_updated")
    release = m.dates.get("original_release_date")
    expected = m.dates.get("expected_release_date")

    def delta(a, b):
        if a is None or b is None:
            values.extend([0.0, 1.0])
        else:
            values.extend([float(a - b), 0.0])

    delta(ref_days, release)  # game age
    delta(added, updated)
    delta(added, release)
    delta(release, expected)

    for value in schema.rating_vocab:
        values.append(1.0 if m.rating == value else 0.0)
    values.append(1.0 if m.rating is None else 0.0)

    for fld in VOCAB_FIELDS:
        vocab = schema.vocabs.get(fld)
        if vocab is None:
            raise SchemaMismatch(f"schema lacks vocabulary for {fld}")
        present = set(getattr(m, fld))
        for v in vocab:
            values.append(1.0 if v in present else 0.0)
        values.append(1.0 if present.difference(vocab) else 0.0)

    names = schema.feature_names()
    if len(names) != len(values):
        raise SchemaMismatch("encoded vector does not match schema arity")
    return FeatureVector(numeric=values, names=names)


def build_dataset(
    labels,
    metadata_map: dict[str, GameMetadata],
    schema: FeatureSchema | None = None,
    vocab_cap: int = 50,
    reference_time: int = 0,
) -> tuple[Dataset, FeatureSchema, list[tuple[str, str]]]:
    """Encode labeled debuts into a matrix.

    Rows are emitted only for games with resolvable metadata; the drop
    report lists the rest with reasons. Feature order is fixed by the
    schema (built from the matched games when not supplied).
    """
    matched = [l for l in labels if l.game in metadata_map]
    dropped = [(l.game, "no metadata") for l in labels if l.game not in metadata_map]
    if not matched:
        raise EmptyDataset("no labeled game has metadata")
    if schema is None:
        schema = build_schema(
            [metadata_map[l.game] for l in matched],
            vocab_cap=vocab_cap,
            reference_time=reference_time,
        )
    rows = []
    y = []
    for l in matched:
        fv = extract_features(metadata_map[l.game], schema)
        rows.append(fv.numeric)
        y.append(1 if l.impactful else 0)
    ds = Dataset(X=np.array(rows), y=np.array(y), feature_names=schema.feature_names())
    return ds, schema, dropped


def load_fixture_dir(fixture_dir: str | Path) -> dict[str, GameMetadata]:
    """Read every metadata JSON in a fixture/cache directory, keyed by game name."""
    out: dict[str, GameMetadata] = {}
    for path in sorted(Path(fixture_dir).glob("*.json")):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        if isinstance(doc, list):
            if len(doc) != 1:
                continue  # ambiguous or empty entries are unresolvable
            doc = doc[0]
        m = GameMetadata.from_dict(doc)
        out[m.name] = m
    return out
