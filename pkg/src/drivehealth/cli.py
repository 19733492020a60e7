"""``drivehealth`` command line: ingest, dataset, train, evaluate, export, synth, replay.

Parameters resolve as flags > ``--config`` JSON > built-in defaults. Every
command records the resolved parameters, input and output digests in
``<out-dir>/<command>.manifest.json``; ``drivehealth replay`` re-runs a
manifest and checks that every output is reproduced byte for byte.

All randomness derives from ``--seed`` via :func:`derive_seed` with one
purpose string per consumer: ``synth``, ``split``, ``train`` and ``cp-valid``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from collections.abc import Callable
from dataclasses import replace
from datetime import date, datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text, derive_seed, file_digest
from .dataset import (
    CLASSIFY,
    SURVIVAL,
    ClassSample,
    DatasetMeta,
    build_survival_dataset,
    build_timelines,
    default_catalog,
    horizon_label,
    read_dataset,
    split_by_serial,
    write_dataset,
)
from .errors import DriveHealthError, EmptyDataset, InvalidHorizon, InvalidSpec, InvalidWindow, UnknownFormat
from .evaluation import (
    DEFAULT_HORIZONS,
    DEFAULT_THRESHOLD,
    OCT,
    EvalReport,
    classification_scores,
    eval_row,
    evaluate_table,
    roc_csv,
    roc_curve,
)
from .synth import FleetSpec, generate_fleet, reference_rule_spec
from .telemetry import RowError, read_snapshot_file, validate_header, write_snapshots
from .trees import ClassificationData, SurvivalData, TrainConfig, fit, loads, select_cp, variable_importance
from .trees.export import km_tables, to_dot
from .trees.model import dumps

logger = logging.getLogger("drivehealth")

MANIFEST_SCHEMA = "drivehealth.manifest"
EXPORT_FORMATS = ("dot", "km-csv")


class Outputs:
    """Collects files written by one command (paths relative to ``out_dir``)."""

    def __init__(self, out_dir: Path) -> None:
        self.out_dir = out_dir
        self.names: list[str] = []

    def write(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        atomic_write_text(path, text)
        self.names.append(name)
        return path

    def add(self, name: str) -> None:
        self.names.append(name)

    def digests(self) -> dict[str, str]:
        return {n: file_digest(self.out_dir / n) for n in sorted(set(self.names))}


# -- commands ----------------------------------------------------------------


def _input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return p


MAX_LOGGED_REJECTS = 20


def run_ingest(p: dict, out: Outputs) -> dict:
    snapshots = []
    rejects: list[tuple[str, RowError]] = []
    for path in p["paths"]:
        errors: list[RowError] = []
        try:
            for snap in read_snapshot_file(_input(path), max_bad_fraction=p["max_bad_fraction"], errors=errors):
                if p["model"] is None or snap.model == p["model"]:
                    snapshots.append(snap)
        except DriveHealthError as exc:
            raise DriveHealthError(f"{path}: {type(exc).__name__}: {exc}") from exc
        rejects.extend((Path(path).name, e) for e in errors)
        for e in errors[:MAX_LOGGED_REJECTS]:
            logger.warning("%s:%d: %s", path, e.line, e.cause)
        if len(errors) > MAX_LOGGED_REJECTS:
            logger.warning("%s: %d more rejected rows, see ingest_rejects.csv", path, len(errors) - MAX_LOGGED_REJECTS)
    snapshots.sort(key=lambda s: (s.date, s.serial))
    keys = {k for s in snapshots for k in s.smart_values}
    buf = io.StringIO()
    write_snapshots(buf, snapshots, keys)
    out.write(p["output"], buf.getvalue())
    rej = io.StringIO()
    w = csv.writer(rej, lineterminator="\n")
    w.writerow(["file", "line", "cause"])
    for name, e in rejects:
        w.writerow([name, e.line, e.cause])
    out.write("ingest_rejects.csv", rej.getvalue())
    summary = {
        "rows": len(snapshots),
        "drives": len({s.serial for s in snapshots}),
        "failures": sum(s.failed for s in snapshots),
        "rejected_rows": len(rejects),
    }
    logger.info("ingested %(rows)d rows from %(drives)d drives, %(failures)d failures, %(rejected_rows)d rejected", summary)
    return summary


def _parse_day(value, name: str) -> date | None:
    if value is None or isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise InvalidWindow(f"{name} must be an ISO date (YYYY-MM-DD), got {value!r}") from None


def run_dataset(p: dict, out: Outputs) -> dict:
    mode = p["mode"]
    if mode not in (SURVIVAL, CLASSIFY):
        raise ValueError(f"--mode must be 'survival' or 'classify', got {mode!r}")
    cache = _input(p["cache"])
    with open(cache, encoding="utf-8", newline="") as fh:
        header = next(csv.reader([fh.readline()]))
    schema = validate_header(header)
    snapshots = list(read_snapshot_file(cache, max_bad_fraction=0.0))
    if not snapshots:
        raise EmptyDataset(f"{cache} holds no snapshots")
    attrs = p["attrs"] if p["attrs"] is not None else sorted({k.attr for _, k in schema.smart})
    catalog = default_catalog(attrs)
    start = _parse_day(p["window_start"], "--window-start") or min(s.date for s in snapshots)
    end = _parse_day(p["window_end"], "--window-end") or max(s.date for s in snapshots)
    horizon = p["horizon"]
    if mode == CLASSIFY:
        if horizon is None or int(horizon) != horizon or horizon < 1:
            raise InvalidHorizon(f"classify mode needs a positive whole --horizon in days, got {horizon!r}")
    timelines = build_timelines(snapshots)
    survival = build_survival_dataset(timelines, start, end, catalog, failing_only=p["failing_only"])
    if mode == CLASSIFY:
        samples = []
        for s in survival:
            label = horizon_label(s.duration_days, s.event, horizon)
            if label is not None:
                samples.append(ClassSample(s.features, label, s.serial, s.snapshot_date))
    else:
        samples = survival
    source = {"cache": cache.name, "sha256": file_digest(cache)}
    meta_args = dict(mode=mode, catalog=catalog, window_start=start, window_end=end,
                     horizon_days=horizon if mode == CLASSIFY else None, failing_only=p["failing_only"],
                     seed=p["seed"], source=source)
    frac = p["test_fraction"]
    summary: dict = {"samples": len(samples), "features": len(catalog.names)}
    if frac == 0:
        write_dataset(out.out_dir / "all.csv", samples, DatasetMeta(**meta_args, part="all"))
        out.add("all.csv")
        out.add("all.csv.json")
        return summary
    # the serial partition comes from every in-window drive, so survival and
    # classify datasets built with the same seed share it
    train_s, test_s = split_by_serial(survival, frac, derive_seed(p["seed"], "split"))
    test_serials = {s.serial for s in test_s}
    train = [s for s in samples if s.serial not in test_serials]
    test = [s for s in samples if s.serial in test_serials]
    for part, rows in (("train", train), ("test", test)):
        write_dataset(out.out_dir / f"{part}.csv", rows, DatasetMeta(**meta_args, test_fraction=frac, part=part))
        out.add(f"{part}.csv")
        out.add(f"{part}.csv.json")
    summary.update(train=len(train), test=len(test), test_drives=len(test_serials))
    return summary


def _learning_data(samples, meta: DatasetMeta):
    if meta.mode == SURVIVAL:
        return SurvivalData.from_samples(samples, meta.catalog.names)
    return ClassificationData.from_samples(samples, meta.catalog.names)


def run_train(p: dict, out: Outputs) -> dict:
    samples, meta = read_dataset(_input(p["dataset"]))
    if not samples:
        raise EmptyDataset(f"{p['dataset']} holds no samples")
    config = TrainConfig(
        max_depth=p["max_depth"], min_samples_leaf=p["min_samples_leaf"], cp=p["cp"],
        local_search_rounds=p["local_search_rounds"], seed=derive_seed(p["seed"], "train"), n_jobs=p["n_jobs"],
    )
    # follow-up may run past the snapshot window (censoring sits at each
    # drive's last observed day), so the horizon limit covers it too
    window_days = meta.window_days
    if meta.mode == SURVIVAL:
        window_days = max(window_days, max(s.duration_days for s in samples) + 1)
    if p["select_cp"]:
        fit_s, valid_s = split_by_serial(samples, p["valid_fraction"], derive_seed(p["seed"], "cp-valid"))
        cp, _ = select_cp(_learning_data(fit_s, meta), _learning_data(valid_s, meta), config, window_days=window_days)
        config = replace(config, cp=cp)
    data = _learning_data(samples, meta)
    tree = fit(data, config, window_days=window_days)
    stem = p["output"] or ("oct" if meta.mode == CLASSIFY else "ost")
    out.write(f"{stem}.json", dumps(tree))
    imp = variable_importance(tree, data)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "feature", "importance"])
    for i, name in enumerate(imp.ranked_features(), start=1):
        w.writerow([i, name, repr(imp.by_feature[name])])
    out.write(f"{stem}_importance.csv", buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "smart_id", "importance"])
    for i, attr in enumerate(imp.ranked_attrs(), start=1):
        w.writerow([i, attr, repr(imp.by_attr[attr])])
    out.write(f"{stem}_importance_by_id.csv", buf.getvalue())
    return {"splits": tree.n_splits(), "depth": tree.depth(), "cp": config.cp, "top_ids": imp.ranked_attrs()[:3]}


def _horizons(value) -> list[int]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        hs = [int(v) for v in value]
    except (TypeError, ValueError):
        raise InvalidHorizon(f"horizons must be whole days, got {value!r}") from None
    if not hs or min(hs) < 1:
        raise InvalidHorizon(f"horizons must be positive, got {hs}")
    return hs


def _load_tree(path: str | None):
    return None if path is None else loads(_input(path).read_text(encoding="utf-8"))


def run_evaluate(p: dict, out: Outputs) -> dict:
    samples, meta = read_dataset(_input(p["test"]))
    class_tree = _load_tree(p["class_tree"])
    survival_tree = _load_tree(p["survival_tree"])
    if class_tree is None and survival_tree is None:
        raise ValueError("give --class-tree and/or --survival-tree")
    for tree in (class_tree, survival_tree):
        if tree is not None and list(tree.feature_names) != meta.catalog.names:
            raise ValueError("tree features do not match the test dataset catalog")
    threshold = p["threshold"]
    if meta.mode == SURVIVAL:
        report = evaluate_table(class_tree, survival_tree, samples, _horizons(p["horizons"]), threshold)
    else:
        if survival_tree is not None:
            raise ValueError("survival trees need a survival-mode test dataset (durations and events)")
        scored = classification_scores(class_tree, samples)
        row = eval_row(OCT, meta.horizon_days, scored, threshold)
        report = EvalReport((row,), threshold, roc={row.column: roc_curve(scored)})
    out.write("report.csv", report.to_csv())
    out.write("report.json", report.to_json())
    out.write("summary.csv", report.summary_csv())
    out.write("summary.txt", report.summary_text())
    for column, points in report.roc.items():
        out.write(f"roc_{column}.csv", roc_csv(points))
    if survival_tree is not None:
        for leaf_id, text in km_tables(survival_tree).items():
            out.write(f"km_leaf_{leaf_id}.csv", text)
    sys.stdout.write(report.summary_text())
    return {r.column: {"auc": r.auc, "sensitivity": r.sensitivity, "false_alarm_rate": r.false_alarm_rate}
            for r in report.rows}


def run_export(p: dict, out: Outputs) -> dict:
    fmt = p["format"]
    if fmt not in EXPORT_FORMATS:
        raise UnknownFormat(f"unknown export format {fmt!r}; choose one of {', '.join(EXPORT_FORMATS)}")
    tree_path = _input(p["tree"])
    tree = loads(tree_path.read_text(encoding="utf-8"))
    stem = p["output"] or tree_path.stem
    if fmt == "dot":
        out.write(f"{stem}.dot", to_dot(tree, stem))
        return {"nodes": len(tree.nodes())}
    tables = km_tables(tree)
    for leaf_id, text in tables.items():
        out.write(f"{stem}_km_leaf_{leaf_id}.csv", text)
    return {"leaves": len(tables)}


def run_synth(p: dict, out: Outputs) -> dict:
    if (p["spec"] is None) == (not p["reference"]):
        raise InvalidSpec("give exactly one of --spec FILE or --reference")
    if p["reference"]:
        spec = reference_rule_spec(derive_seed(p["seed"], "synth"), p["n_drives"], p["days"])
    else:
        try:
            doc = json.loads(_input(p["spec"]).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{p['spec']} is not valid JSON: {exc}") from None
        spec = FleetSpec.from_dict(doc)
        if p["seed_from_flag"]:
            spec = replace(spec, seed=derive_seed(p["seed"], "synth"))
    snapshots, truth = generate_fleet(spec, n_jobs=p["n_jobs"])
    buf = io.StringIO()
    write_snapshots(buf, snapshots, [fp.key for fp in spec.features])
    out.write(p["output"], buf.getvalue())
    out.write("truth.json", json.dumps(truth.to_dict(), indent=2, sort_keys=True) + "\n")
    out.write("fleet_spec.json", spec.dumps())
    return {"rows": len(snapshots), "drives": spec.n_drives, "failures": sum(s.failed for s in snapshots)}


# -- argument handling -------------------------------------------------------

DEFAULTS: dict[str, dict] = {
    "ingest": {"paths": None, "model": None, "max_bad_fraction": 0.01, "output": "snapshots.csv"},
    "dataset": {
        "cache": None, "mode": None, "window_start": None, "window_end": None, "horizon": None,
        "failing_only": False, "test_fraction": 0.3, "attrs": None,
    },
    "train": {
        "dataset": None, "max_depth": 5, "min_samples_leaf": 100, "cp": 0.0, "local_search_rounds": 20,
        "n_jobs": 1, "select_cp": False, "valid_fraction": 0.2, "output": None,
    },
    "evaluate": {
        "test": None, "class_tree": None, "survival_tree": None,
        "horizons": ",".join(str(h) for h in DEFAULT_HORIZONS), "threshold": DEFAULT_THRESHOLD,
    },
    "export": {"tree": None, "format": None, "output": None},
    "synth": {"spec": None, "reference": False, "n_drives": 1000, "days": 90, "output": "fleet.csv", "n_jobs": 1},
}
REQUIRED = {"ingest": ("paths",), "dataset": ("cache", "mode"), "train": ("dataset",), "evaluate": ("test",),
            "export": ("tree", "format")}
INPUTS = {"ingest": ("paths",), "dataset": ("cache",), "train": ("dataset",),
          "evaluate": ("test", "class_tree", "survival_tree"), "export": ("tree",), "synth": ("spec",)}
RUNNERS: dict[str, Callable[[dict, Outputs], dict]] = {
    "ingest": run_ingest, "dataset": run_dataset, "train": run_train,
    "evaluate": run_evaluate, "export": run_export, "synth": run_synth,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--config", default=None, help="JSON file of parameters; flags override it")
    p.add_argument("--out-dir", default=None, help="output directory (default: current directory)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")


def _csv_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drivehealth", description="Interpretable drive-failure trees from SMART telemetry.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse daily SMART CSVs into one filtered snapshot cache")
    p.add_argument("paths", nargs="*", default=None, help="daily CSV files (.csv or .csv.gz)")
    p.add_argument("--model", default=None, help="keep only this drive model")
    p.add_argument("--max-bad-fraction", type=float, default=None, help="abort above this rejected-row fraction")
    p.add_argument("--output", default=None, help="cache file name inside --out-dir")
    _common(p)

    p = sub.add_parser("dataset", help="build survival or classification samples with a serial split")
    p.add_argument("cache", nargs="?", default=None, help="snapshot cache written by ingest")
    p.add_argument("--mode", default=None, help="survival or classify")
    p.add_argument("--window-start", default=None, help="first snapshot day (ISO date)")
    p.add_argument("--window-end", default=None, help="last snapshot day (ISO date)")
    p.add_argument("--horizon", type=int, default=None, help="classification horizon in days")
    p.add_argument("--failing-only", action="store_true", default=None, help="drop drives that never fail")
    p.add_argument("--test-fraction", type=float, default=None, help="share of serials held out (0 = no split)")
    p.add_argument("--attrs", type=_csv_ints, default=None, help="comma-separated SMART ids to use")
    _common(p)

    p = sub.add_parser("train", help="fit a classification or survival tree")
    p.add_argument("dataset", nargs="?", default=None, help="dataset CSV with its .json sidecar")
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-leaf", type=int, default=None)
    p.add_argument("--cp", type=float, default=None, help="complexity penalty per split")
    p.add_argument("--local-search-rounds", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=None, help="threads for split search")
    p.add_argument("--select-cp", action="store_true", default=None, help="pick cp on a validation split")
    p.add_argument("--valid-fraction", type=float, default=None)
    p.add_argument("--output", default=None, help="output stem (default oct or ost)")
    _common(p)

    p = sub.add_parser("evaluate", help="score trees on a test dataset (metric-by-model summary table)")
    p.add_argument("test", nargs="?", default=None, help="test dataset CSV")
    p.add_argument("--class-tree", default=None)
    p.add_argument("--survival-tree", default=None)
    p.add_argument("--horizons", default=None, help="comma-separated survival horizons in days")
    p.add_argument("--threshold", type=float, default=None, help="reporting threshold (default 0.05)")
    _common(p)

    p = sub.add_parser("export", help="render a tree as DOT or per-leaf KM CSVs")
    p.add_argument("tree", nargs="?", default=None)
    p.add_argument("--format", default=None, help="dot or km-csv")
    p.add_argument("--output", default=None, help="output stem (default: tree file stem)")
    _common(p)

    p = sub.add_parser("synth", help="generate a synthetic fleet with planted hazard rules")
    p.add_argument("--spec", default=None, help="FleetSpec JSON")
    p.add_argument("--reference", action="store_true", default=None, help="use the reference planted-rule fleet")
    p.add_argument("--n-drives", type=int, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--n-jobs", type=int, default=None)
    p.add_argument("--output", default=None, help="fleet CSV name inside --out-dir")
    _common(p)

    p = sub.add_parser("replay", help="re-run a manifest and verify outputs byte for byte")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None, help="where to write (default: the manifest's directory)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    merged = {k: v for k, v in doc.items() if not isinstance(v, dict) or k not in RUNNERS}
    section = doc.get(command)
    if isinstance(section, dict):
        merged.update(section)
    return merged


def resolve_params(command: str, args: argparse.Namespace) -> dict:
    """Flags > config file > defaults; input paths become absolute."""
    config = _load_config(args.config, command)
    known = DEFAULTS[command]
    unknown = sorted(set(config) - set(known) - {"seed"} - set(RUNNERS))
    if unknown:
        logger.warning("ignoring unknown config keys: %s", ", ".join(unknown))
    params = dict(known)
    params.update({k: v for k, v in config.items() if k in known})
    flags = {k: v for k, v in vars(args).items() if k in known and v is not None and v != []}
    params.update(flags)
    seed_flag = args.seed is not None
    seed = args.seed if seed_flag else config.get("seed", 0)
    params["seed"] = int(seed)
    if command == "synth":
        params["seed_from_flag"] = seed_flag or "seed" in config
    for key in REQUIRED.get(command, ()):
        if params[key] in (None, []):
            raise ValueError(f"{command}: missing required parameter {key!r}")
    for key in INPUTS.get(command, ()):
        v = params.get(key)
        if isinstance(v, list):
            params[key] = [str(Path(x).resolve()) for x in v]
        elif v is not None:
            params[key] = str(Path(v).resolve())
    return params


def _input_paths(command: str, params: dict) -> list[str]:
    paths: list[str] = []
    for key in INPUTS.get(command, ()):
        v = params.get(key)
        if isinstance(v, list):
            paths.extend(v)
        elif v is not None:
            paths.append(v)
    if command == "dataset" or command == "train" or command == "evaluate":
        for key in ("dataset", "test"):
            if params.get(key):
                side = params[key] + ".json"
                if Path(side).is_file():
                    paths.append(side)
    return paths


def execute(command: str, params: dict, out_dir: Path) -> dict:
    """Run one command and write its manifest; returns the manifest document."""
    out_dir.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    inputs = {}
    for path in _input_paths(command, params):
        try:
            inputs[path] = file_digest(path)
        except FileNotFoundError:
            raise FileNotFoundError(f"input file not found: {path}") from None
    out = Outputs(out_dir)
    summary = RUNNERS[command](params, out)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "version": 1,
        "command": command,
        "params": params,
        "seed": params["seed"],
        "inputs": inputs,
        "outputs": out.digests(),
        "summary": summary,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    atomic_write_text(out_dir / f"{command}.manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest


def replay(manifest_path: Path, out_dir: Path | None) -> list[str]:
    """Re-run a manifest; returns the outputs whose digests differ (empty when reproduced)."""
    doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"{manifest_path} is not a run manifest")
    command = doc["command"]
    if command not in RUNNERS:
        raise ValueError(f"unknown command {command!r} in manifest")
    for path, digest in doc["inputs"].items():
        if file_digest(path) != digest:
            raise ValueError(f"input {path} changed since the manifest was written")
    out_dir = out_dir or manifest_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    out = Outputs(out_dir)
    RUNNERS[command](doc["params"], out)
    got = out.digests()
    want = doc["outputs"]
    return sorted(n for n in set(want) | set(got) if want.get(n) != got.get(n))


_HINTS = {
    InvalidWindow: "hint: pass --window-start/--window-end as YYYY-MM-DD with start <= end",
    InvalidHorizon: "hint: --horizon takes a positive whole number of days, e.g. --horizon 30",
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        if args.command == "replay":
            out_dir = Path(args.out_dir) if args.out_dir else None
            bad = replay(Path(args.manifest), out_dir)
            if bad:
                print(f"error: replay differs for {', '.join(bad)}", file=sys.stderr)
                return 1
            print("replay reproduced every output", file=sys.stderr)
            return 0
        params = resolve_params(args.command, args)
        execute(args.command, params, Path(args.out_dir or "."))
    except (DriveHealthError, OSError, ValueError, KeyError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing field {exc}"
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        for kind, hint in _HINTS.items():
            if isinstance(exc, kind):
                print(hint, file=sys.stderr)
        return 1
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
