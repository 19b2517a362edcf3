"""Batch pipeline driver.

Every stage is a subcommand: synth, detect, stats, debuts,
fetch-metadata, features, train, report. A plain-text key=value config
file supplies defaults; flags override. Each subcommand prints a
one-line summary and exits 0 on success; 1 on usage errors, 2 on
input/validation errors, 3 on internal errors. The metadata API key
comes only from the STREAMPULSE_API_KEY environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import debut as debut_mod
from . import detector as det
from . import metadata as meta
from . import ml
from . import model
from . import netstats
from . import synth as synth_mod
from .dataset import EmptyDataset, UnknownFeature, ablate, read_dataset_csv, write_dataset_csv

USAGE_ERROR = 1
INPUT_ERROR = 2
INTERNAL_ERROR = 3

API_KEY_ENV = "STREAMPULSE_API_KEY"

INPUT_ERRORS = (
    model.ParseError,
    model.EmptyCorpus,
    synth_mod.ConfigError,
    netstats.MissingStreamDetail,
    netstats.InsufficientTail,
    netstats.DomainError,
    EmptyDataset,
    UnknownFeature,
    ml.InsufficientRows,
    meta.NotFoundError,
    meta.UnresolvableError,
    meta.SchemaMismatch,
    meta.AuthError,
    meta.TransportError,
    FileNotFoundError,
    ValueError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_duration(text: str, tick: int | None = None) -> int:
    """'Nd'/'Nh'/'Nm'/'Ns' or plain seconds -> seconds."""
    text = text.strip().lower()
    units = {"d": 86400, "h": 3600, "m": 60, "s": 1}
    if text and text[-1] in units:
        value = int(text[:-1]) * units[text[-1]]
    else:
        value = int(text)
    if value <= 0:
        raise UsageError(f"duration must be positive: {text!r}")
    return value


def duration_to_samples(text: str, tick: int) -> int:
    seconds = parse_duration(text)
    if seconds % tick != 0:
        raise UsageError(
            f"window {text!r} ({seconds}s) is not a whole number of {tick}s ticks"
        )
    return seconds // tick


def load_config_file(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    cfg: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, _, value = line.partition("=")
            cfg[key.strip()] = value.strip()
    return cfg


def setting(args, cfg: dict[str, str], key: str, default, cast=str):
    """Flag value if given, else config-file value, else default."""
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if key in cfg:
        return cast(cfg[key])
    return default


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_synth(args, cfg):
    out_dir = Path(setting(args, cfg, "out", "corpus"))
    seed = setting(args, cfg, "seed", 0, int)
    n_impactful = setting(args, cfg, "impactful", 0, int)
    n_inert = setting(args, cfg, "inert", 0, int)
    n_snapshots = setting(args, cfg, "snapshots", 1000, int)

    debuts = []
    start_index = setting(args, cfg, "debut-start", 260, int)
    spacing = setting(args, cfg, "debut-spacing", 35, int)
    flags = [True] * n_impactful + [False] * n_inert
    # interleave so both classes span the corpus
    interleaved = []
    a, b = flags[:n_impactful], flags[n_impactful:]
    while a or b:
        if a:
            interleaved.append(a.pop(0))
        if b:
            interleaved.append(b.pop(0))
    for i, impactful in enumerate(interleaved):
        debuts.append(
            synth_mod.DebutSpec(
                game=f"debut_{i:04d}", index=start_index + i * spacing, impactful=impactful
            )
        )

    shifts = []
    for spec in args.shift or []:
        game, index, mult = spec.split(":")
        shifts.append(synth_mod.ShiftSpec(game=game, index=int(index), multiplier=float(mult)))

    config = synth_mod.SynthConfig(
        n_games=setting(args, cfg, "games", 20, int),
        n_snapshots=n_snapshots,
        tick=setting(args, cfg, "tick", model.DEFAULT_TICK, int),
        seed=seed,
        noise=setting(args, cfg, "noise", "poisson"),
        daily_amplitude=setting(args, cfg, "amplitude", 0.0, float),
        weekend_uplift=setting(args, cfg, "weekend-uplift", 1.0, float),
        popularity_exponent=setting(args, cfg, "exponent", 2.5, float),
        shifts=shifts,
        debuts=debuts,
        invalid_indices=[int(i) for i in (args.invalid_index or [])],
        emit_stream_viewers=bool(args.stream_viewers),
    )
    snapshots, truth = synth_mod.generate_corpus(config, out_dir)
    print(
        f"synth: wrote {len(snapshots)} valid snapshots, "
        f"{len(truth.debuts)} debuts, {len(truth.shifts)} shifts -> {out_dir}"
    )
    return 0


def _load_corpus_arg(args, cfg):
    path = setting(args, cfg, "snapshots", None)
    if path is None:
        raise UsageError("--snapshots is required")
    snapshots, discarded = model.load_corpus(path)
    manifest_path = Path(path).with_name("manifest.txt")
    tick = model.DEFAULT_TICK
    if manifest_path.exists():
        tick = model.read_manifest(manifest_path).get("tick", tick)
    tick = setting(args, cfg, "tick", tick, int)
    return snapshots, discarded, tick


def cmd_detect(args, cfg):
    snapshots, discarded, tick = _load_corpus_arg(args, cfg)
    alpha = setting(args, cfg, "alpha", 0.05, float)
    windows = setting(args, cfg, "windows", "1d,2d,3d,7d")
    configs = [
        det.DetectorConfig(window_samples=duration_to_samples(w, tick), alpha=alpha, tick=tick)
        for w in windows.split(",")
    ]
    series = model.build_series(snapshots, tick=tick)
    events = det.detect_corpus(series, configs)
    out = setting(args, cfg, "out", "events.jsonl")
    det.write_events_jsonl(events, out)
    summary = setting(args, cfg, "summary", "events_by_window.csv")
    det.write_window_summary_csv(events, summary)
    print(
        f"detect: {len(events)} events over {len(series)} games "
        f"({len(discarded)} snapshots discarded) -> {out}"
    )
    return 0


def cmd_stats(args, cfg):
    snapshots, _, tick = _load_corpus_arg(args, cfg)
    outdir = Path(setting(args, cfg, "outdir", "reports"))
    outdir.mkdir(parents=True, exist_ok=True)
    idx = setting(args, cfg, "snapshot-index", 0, int)
    snap = snapshots[idx]

    for axis, stem in (
        ("viewers-per-game", "viewers_per_game"),
        ("streamers-per-game", "streamers_per_game"),
        ("viewers-per-stream", "viewers_per_stream"),
    ):
        try:
            hist = netstats.population_histogram(snap, axis)
        except netstats.MissingStreamDetail:
            continue
        netstats.write_histogram_tsv(hist, outdir / f"{stem}.tsv")
        tail = [v for v, c in hist.bins if v >= 1 for _ in range(c)]
        note = ""
        try:
            fit = netstats.fit_power_law(tail, xmin=1.0)
            note = f"alpha={fit.alpha:.3f} n_tail={fit.n_tail}"
        except netstats.InsufficientTail as exc:
            note = f"no fit ({exc})"
        with open(outdir / f"{stem}_powerlaw.txt", "w", encoding="utf-8") as fh:
            fh.write(note + "\n")

    viewers, streamers = netstats.totals_series(snapshots)
    netstats.write_tsv(outdir / "total_viewers.tsv", ("ts", "viewers"), viewers)
    netstats.write_tsv(outdir / "total_streamers.tsv", ("ts", "streamers"), streamers)

    lag = max(1, 86400 // tick)
    values = [v for _, v in viewers]
    diag = {}
    if len(values) > lag:
        diag["daily_autocorrelation"] = netstats.autocorrelation(values, lag)
    diag["weekend_uplift"] = netstats.weekend_uplift(viewers)
    with open(outdir / "cycle_diagnostics.json", "w", encoding="utf-8") as fh:
        json.dump(diag, fh, indent=2)

    events_path = setting(args, cfg, "events", None)
    if events_path:
        events = det.read_events_jsonl(events_path)
        hist, top = netstats.events_per_game(events)
        netstats.write_histogram_tsv(hist, outdir / "events_per_game_hist.tsv")
        netstats.write_top_games_csv(top, outdir / "top_volatile_games.csv")
        note = outdir / "events_per_game_powerlaw.txt"
        try:
            fit = netstats.fit_power_law([v for v, c in hist.bins for _ in range(c)], xmin=1.0)
            note.write_text(
                f"alpha={fit.alpha:.3f} n_tail={fit.n_tail} "
                "(diagnostic only; event counts need not be power-law)\n"
            )
        except netstats.InsufficientTail as exc:
            note.write_text(f"no fit ({exc})\n")
    print(f"stats: wrote diagnostics for {len(snapshots)} snapshots -> {outdir}")
    return 0


def cmd_debuts(args, cfg):
    snapshots, _, tick = _load_corpus_arg(args, cfg)
    events_path = setting(args, cfg, "events", None)
    if events_path is None:
        raise UsageError("--events is required")
    events = det.read_events_jsonl(events_path)
    horizon = parse_duration(setting(args, cfg, "horizon", "30m"))
    first_day = max(1, 86400 // tick)
    debuts = debut_mod.find_debuts(snapshots, first_day_snapshots=first_day)
    labels, summary = debut_mod.attribute_events(debuts, events, horizon=horizon)
    labels_path = setting(args, cfg, "labels", "labels.csv")
    debut_mod.write_labels_csv(labels, labels_path)
    summary_path = setting(args, cfg, "summary", "debut_summary.json")
    debut_mod.write_summary_json(summary, summary_path)
    print(
        f"debuts: {summary['debuts_labeled']} labeled "
        f"({summary['with_events']} impactful, {summary['without_events']} not, "
        f"{summary['debuts_excluded']} excluded) -> {labels_path}"
    )
    return 0


def cmd_fetch_metadata(args, cfg):
    labels_path = setting(args, cfg, "labels", None)
    if labels_path is None:
        raise UsageError("--labels is required")
    labels = debut_mod.read_labels_csv(labels_path)
    client_config = meta.ClientConfig(
        base_url=setting(args, cfg, "base-url", "https://www.giantbomb.com/api"),
        api_key=os.environ.get(API_KEY_ENV, ""),
        rate_limit=setting(args, cfg, "rate-limit", 1.0, float),
        cache_dir=setting(args, cfg, "cache", ".metadata_cache"),
        fixture_dir=setting(args, cfg, "fixtures", None),
        live=bool(args.live),
    )
    if client_config.live and not client_config.api_key:
        raise UsageError(f"live mode needs {API_KEY_ENV} in the environment")
    client = meta.GiantBombClient(client_config)
    fetched, drops = 0, []
    for label in labels:
        try:
            client.fetch_game(label.game)
            fetched += 1
        except (meta.NotFoundError, meta.UnresolvableError) as exc:
            drops.append((label.game, type(exc).__name__))
    report_path = setting(args, cfg, "drop-report", "metadata_drops.csv")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write("game,reason\n")
        for game, reason in drops:
            fh.write(f"{game},{reason}\n")
    print(
        f"fetch-metadata: {fetched} resolved, {len(drops)} dropped "
        f"({client.request_count} HTTP requests) -> {client_config.cache_dir}"
    )
    return 0


def cmd_features(args, cfg):
    labels_path = setting(args, cfg, "labels", None)
    metadata_dir = setting(args, cfg, "metadata-dir", None)
    if labels_path is None or metadata_dir is None:
        raise UsageError("--labels and --metadata-dir are required")
    labels = debut_mod.read_labels_csv(labels_path)
    metadata_map = meta.load_fixture_dir(metadata_dir)
    ds, schema, dropped = meta.build_dataset(
        labels,
        metadata_map,
        vocab_cap=setting(args, cfg, "vocab-cap", 50, int),
        reference_time=setting(args, cfg, "reference-time", 0, int),
    )
    out = setting(args, cfg, "out", "dataset.csv")
    write_dataset_csv(ds, out)
    schema_path = setting(args, cfg, "schema", "schema.json")
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_dict(), fh, indent=2)
    print(
        f"features: {ds.n_rows} rows x {ds.n_features} features "
        f"({len(dropped)} dropped) -> {out}"
    )
    return 0


def cmd_train(args, cfg):
    dataset_path = setting(args, cfg, "dataset", None)
    if dataset_path is None:
        raise UsageError("--dataset is required")
    ds = read_dataset_csv(dataset_path)
    ablated = setting(args, cfg, "ablate", None)
    if ablated:
        ds = ablate(ds, ablated)
    kind = setting(args, cfg, "model", "dt")
    seed = setting(args, cfg, "seed", 0, int)
    folds = setting(args, cfg, "folds", 10, int)
    spec = {"model": kind, "seed": seed}
    if kind in ("dt", "rf"):
        spec["max_depth"] = setting(args, cfg, "max-depth", 5, int)
    if kind == "rf":
        spec["n_trees"] = setting(args, cfg, "n-trees", 100, int)
    if kind == "ocsvm":
        spec["nu"] = setting(args, cfg, "nu", 0.5, float)
    report = ml.cross_validate(spec, ds, folds=folds, seed=seed)
    out = setting(args, cfg, "out", "cv_report.json")
    report.to_json(out)

    importance_path = setting(args, cfg, "importance", None)
    if importance_path and kind in ("dt", "rf"):
        if kind == "dt":
            m = ml.train_tree(ds, max_depth=spec["max_depth"])
        else:
            m = ml.train_forest(ds, n_trees=spec["n_trees"], max_depth=spec["max_depth"], seed=seed)
        ranking = ml.feature_importance(m, feature_names=ds.feature_names)
        with open(importance_path, "w", encoding="utf-8") as fh:
            json.dump([{"feature": f, "importance": v} for f, v in ranking], fh, indent=2)
    model_path = setting(args, cfg, "model-out", None)
    if model_path:
        if kind == "dt":
            ml.save_model(ml.train_tree(ds, max_depth=spec.get("max_depth", 5)), model_path)
        elif kind == "rf":
            ml.save_model(
                ml.train_forest(
                    ds, n_trees=spec["n_trees"], max_depth=spec["max_depth"], seed=seed
                ),
                model_path,
            )
        else:
            ml.save_model(ml.train_ocsvm(ds.X[ds.y == 1], nu=spec["nu"]), model_path)
    print(
        f"train: {kind} {folds}-fold seed={seed} "
        f"accuracy={report.mean('accuracy'):.3f} f1={report.mean('f1'):.3f} -> {out}"
    )
    return 0


def cmd_report(args, cfg):
    """Emit every figure/table analogue from already-computed stage outputs."""
    outdir = Path(setting(args, cfg, "outdir", "reports"))
    outdir.mkdir(parents=True, exist_ok=True)
    rc = cmd_stats(args, cfg)
    if rc != 0:
        return rc
    summary_path = setting(args, cfg, "debut-summary", None)
    if summary_path and Path(summary_path).exists():
        with open(summary_path, encoding="utf-8") as fh:
            summary = json.load(fh)
        with open(outdir / "debut_impact_table.json", "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
    for name in ("cv-report", "ablation-report"):
        path = setting(args, cfg, name, None)
        if path and Path(path).exists():
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
            with open(outdir / f"{name.replace('-', '_')}.json", "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=2)
    print(f"report: analogue files written -> {outdir}")
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="streampulse", description=__doc__)
    parser.add_argument("--config", help="key=value config file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--out")
    p.add_argument("--games", type=int)
    p.add_argument("--snapshots", type=int)
    p.add_argument("--tick", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", choices=["poisson", "none"])
    p.add_argument("--amplitude", type=float)
    p.add_argument("--weekend-uplift", type=float)
    p.add_argument("--exponent", type=float)
    p.add_argument("--impactful", type=int)
    p.add_argument("--inert", type=int)
    p.add_argument("--debut-start", type=int)
    p.add_argument("--debut-spacing", type=int)
    p.add_argument("--shift", action="append", metavar="GAME:INDEX:MULT")
    p.add_argument("--invalid-index", action="append")
    p.add_argument("--stream-viewers", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("detect", help="run the change detector over a corpus")
    p.add_argument("--snapshots")
    p.add_argument("--tick", type=int)
    p.add_argument("--windows")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("stats", help="distributional and cyclic diagnostics")
    p.add_argument("--snapshots")
    p.add_argument("--tick", type=int)
    p.add_argument("--events")
    p.add_argument("--snapshot-index", type=int)
    p.add_argument("--outdir")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("debuts", help="find debuts and attribute change events")
    p.add_argument("--snapshots")
    p.add_argument("--tick", type=int)
    p.add_argument("--events")
    p.add_argument("--horizon")
    p.add_argument("--labels")
    p.add_argument("--summary")
    p.set_defaults(func=cmd_debuts)

    p = sub.add_parser("fetch-metadata", help="resolve game metadata into the cache")
    p.add_argument("--labels")
    p.add_argument("--fixtures")
    p.add_argument("--cache")
    p.add_argument("--base-url")
    p.add_argument("--rate-limit", type=float)
    p.add_argument("--live", action="store_true")
    p.add_argument("--drop-report")
    p.set_defaults(func=cmd_fetch_metadata)

    p = sub.add_parser("features", help="encode labeled games into a dataset CSV")
    p.add_argument("--labels")
    p.add_argument("--metadata-dir")
    p.add_argument("--out")
    p.add_argument("--schema")
    p.add_argument("--vocab-cap", type=int)
    p.add_argument("--reference-time", type=int)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="cross-validate a classifier on a dataset")
    p.add_argument("--dataset")
    p.add_argument("--model", choices=["dt", "rf", "ocsvm"])
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--n-trees", type=int)
    p.add_argument("--nu", type=float)
    p.add_argument("--ablate")
    p.add_argument("--out")
    p.add_argument("--importance")
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("report", help="emit figure/table analogue files")
    p.add_argument("--snapshots")
    p.add_argument("--tick", type=int)
    p.add_argument("--events")
    p.add_argument("--snapshot-index", type=int)
    p.add_argument("--outdir")
    p.add_argument("--debut-summary")
    p.add_argument("--cv-report")
    p.add_argument("--ablation-report")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config_file(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except Exception as exc:  # noqa: BLE001 - boundary of the process
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
