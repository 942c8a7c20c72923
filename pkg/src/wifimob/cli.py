"""Command-line interface: ``wifimob {synth,features,train,eval,infer}``.

Settings resolve as defaults < ``--config`` JSON file < command-line flags.
The resolved configuration (minus output location and parallelism, which
must not affect results) is embedded in every output file.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import classify, features, ingest, modelio, pipeline, regress, synth
from .evaluate import (
    evaluate,
    split_half,
    stability_speed_correlation,
    write_comparison,
    write_metrics,
    write_report,
)
from .trace import LABELS, TraceError, build_timeline

log = logging.getLogger("wifimob")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "seed": 42,
    "delimiter": ",",
    "user_id": None,
    "synth": synth.SynthConfig().to_dict(),
    "columns": {"wifi": None, "gps": None, "activity": None},
    "code_table": {str(k): v.value for k, v in ingest.DEFAULT_CODE_TABLE.items()},
    "filters": {"drop_cell_provider": True, "max_accuracy_m": None, "drop_unknown_activity": True},
    "features": {
        "window_s": features.DEFAULT_WINDOW_S,
        "hop_s": features.DEFAULT_HOP_S,
        "stability_max_gap_s": features.DEFAULT_STABILITY_MAX_GAP_S,
        "speed_max_gap_s": features.DEFAULT_SPEED_MAX_GAP_S,
        "prefer_reported": True,
    },
    "gpr": {
        "signal_variance": [1e-2, 1e2, 9],
        "length_scale": [1e-2, 3.0, 9],
        "noise_variance": [1e-4, 1.0, 7],
        "refine_tol": 1e-4,
    },
    "classifier": "all",
    "classifier_features": list(features.DEFAULT_CLASSIFIER_FEATURES),
    "tree": {"min_leaf": 5, "max_depth": 20},
    "forest": {"n_trees": 100, "features_per_split": None, "min_leaf": 1, "max_depth": 20, "bootstrap": True},
    "split": "random",
    "stratified": False,
    "pooled": False,
    "jobs": 1,
}

# Keys excluded from the embedded config: they cannot change results.
NON_RESULT_KEYS = ("jobs",)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _JsonLogFormatter(logging.Formatter):
    _skip = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}

    def format(self, record):
        doc = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        doc.update({k: v for k, v in vars(record).items() if k not in self._skip})
        return json.dumps(doc, sort_keys=True, default=str)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in out:
            raise UsageError(f"unknown config key {path + key!r}")
        if isinstance(out[key], dict) and isinstance(value, dict) and key not in ("columns", "code_table"):
            out[key] = _merge(out[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = _merge(cfg, file_cfg)
    flags = {
        "seed": "seed",
        "window_s": ("features", "window_s"),
        "hop_s": ("features", "hop_s"),
        "classifier": "classifier",
        "split": "split",
        "jobs": "jobs",
        "duration_s": ("synth", "duration_s"),
        "gps_dropout_prob": ("synth", "gps_dropout_prob"),
        "rssi_noise_std": ("synth", "rssi_noise_std"),
        "user_id": "user_id",
    }
    for attr, key in flags.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        if isinstance(key, tuple):
            cfg[key[0]][key[1]] = value
        else:
            cfg[key] = value
    if getattr(args, "pooled", None) is not None:
        cfg["pooled"] = args.pooled
    if getattr(args, "stratified", False):
        cfg["stratified"] = True
    if cfg["split"] == "chronological":
        cfg["split"] = "chrono"
    if cfg["split"] not in ("random", "chrono"):
        raise UsageError(f"split must be random or chrono, got {cfg['split']!r}")
    if cfg["classifier"] not in ("all",) + pipeline.CLASSIFIERS:
        raise UsageError(f"unknown classifier {cfg['classifier']!r}")
    return cfg


def _echo(cfg: dict, inputs: dict | None = None) -> dict:
    out = {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS}
    if inputs:
        out["inputs"] = inputs
    return out


def _input_digest(path) -> dict:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return {"name": os.path.basename(path), "sha256": h.hexdigest()}


def _classifiers(cfg) -> tuple[str, ...]:
    return pipeline.CLASSIFIERS if cfg["classifier"] == "all" else (cfg["classifier"],)


def _pipeline_config(cfg) -> pipeline.PipelineConfig:
    g = cfg["gpr"]
    f = cfg["forest"]
    try:
        return pipeline.PipelineConfig(
            classifiers=_classifiers(cfg),
            feature_names=tuple(cfg["classifier_features"]),
            tree=classify.TreeConfig(**cfg["tree"]),
            forest=classify.ForestConfig(seed=int(cfg["seed"]), **f),
            search=regress.SearchConfig(
                signal_variance=tuple(g["signal_variance"]),
                length_scale=tuple(g["length_scale"]),
                noise_variance=tuple(g["noise_variance"]),
                refine_tol=g["refine_tol"],
            ),
            n_jobs=int(cfg["jobs"]),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid classifier/GP settings: {exc}") from None


def _atomic_write(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- subcommands --------------------------------------------------------------


def cmd_synth(args, cfg) -> int:
    try:
        sc = synth.SynthConfig.from_dict({**cfg["synth"], "seed": int(cfg["seed"])})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid synth config: {exc}") from None
    cfg["synth"] = sc.to_dict()
    timeline, truth = synth.generate(sc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(dir=out, prefix=".synth-"))
    try:
        paths = synth.write_corpus(staging, timeline, truth, {"config": {"seed": cfg["seed"], "synth": cfg["synth"]}})
        for stream, tmp in paths.items():
            os.replace(tmp, out / synth.CORPUS_FILES[stream])
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    print(
        f"wrote {len(timeline.scans)} scans, {len(timeline.fixes)} fixes, "
        f"{len(timeline.activities)} activity samples to {out}"
    )
    return EXIT_OK


def _mapping(cfg, stream):
    cols = cfg["columns"].get(stream)
    if not cols:
        return None
    try:
        return ingest.ColumnMapping(stream, cols)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _parse_stream(kind, path, cfg):
    if path is None:
        return ingest.ParseResult(records=[])
    delim = cfg["delimiter"]
    try:
        if kind == "wifi":
            return ingest.parse_wifi(path, _mapping(cfg, "wifi"), delim)
        if kind == "gps":
            return ingest.parse_gps(path, _mapping(cfg, "gps"), delim)
        table = {int(k): v for k, v in cfg["code_table"].items()}
        return ingest.parse_activity(path, _mapping(cfg, "activity"), table, delim)
    except OSError as exc:
        raise DataError(f"cannot read {kind} file: {exc}") from None
    except ingest.IngestError as exc:
        raise DataError(str(exc)) from None


def cmd_features(args, cfg) -> int:
    if not args.wifi:
        raise UsageError("features needs --wifi")
    parsed = {k: _parse_stream(k, getattr(args, k), cfg) for k in ("wifi", "gps", "activity")}
    user = cfg["user_id"] or Path(args.wifi).resolve().parent.name or "user"
    try:
        timeline = build_timeline(user, parsed["wifi"].records, parsed["gps"].records, parsed["activity"].records)
        filt = ingest.FilterConfig(**cfg["filters"])
    except TraceError as exc:
        raise DataError(str(exc)) from None
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid filters: {exc}") from None
    timeline, removed = ingest.apply_filters(timeline, filt)
    fc = cfg["features"]
    try:
        records = features.extract_features(
            timeline,
            window_s=fc["window_s"],
            hop_s=fc["hop_s"],
            stability_max_gap_s=fc["stability_max_gap_s"],
            speed_max_gap_s=fc["speed_max_gap_s"],
            prefer_reported=fc["prefer_reported"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not records:
        log.warning("no windows produced: the wifi stream is empty")
    inputs = {k: _input_digest(getattr(args, k)) for k in ("wifi", "gps", "activity") if getattr(args, k)}
    meta = {"config": _echo(cfg, inputs), "user_id": user}
    out = Path(args.out) / "features.csv"
    _atomic_write(out, lambda fh: features.write_features(fh, records, meta, cfg["delimiter"]))
    skipped = {k: p.skipped for k, p in parsed.items()}
    print(
        f"windows={len(records)} missing_speed_fraction={features.missing_speed_fraction(records):.4f} "
        f"skipped_rows={json.dumps(skipped, sort_keys=True)} removed={json.dumps(removed, sort_keys=True)}"
    )
    return EXIT_OK


def _load_features(paths, cfg) -> list[tuple[str, list, dict]]:
    out = []
    for p in paths:
        try:
            records, meta = features.read_features(p, cfg["delimiter"])
        except OSError as exc:
            raise DataError(f"cannot read features file: {exc}") from None
        except ValueError as exc:
            raise DataError(f"{p}: {exc}") from None
        user = str(meta.get("user_id") or Path(p).stem)
        out.append((user, records, meta))
    users = [u for u, _, _ in out]
    if len(set(users)) != len(users):
        # Same user id twice: fall back to file stems.
        out = [(Path(p).stem + f"-{i}", r, m) for i, (p, (_, r, m)) in enumerate(zip(paths, out))]
    return out


def _fit_gprs(groups, cfg, pc) -> dict[str, regress.GprModel]:
    """GP per user, or one pooled GP keyed by '*'."""
    if cfg["pooled"] or len(groups) == 1:
        key = "*" if cfg["pooled"] and len(groups) > 1 else groups[0][0]
        pool = [r for _, recs, _ in groups for r in recs]
        return {key: _fit_gpr(pool, pc, key)}
    return {user: _fit_gpr(recs, pc, user) for user, recs, _ in groups}


def _fit_gpr(records, pc, user) -> regress.GprModel:
    x, _ = regress.training_pairs(records)
    if len(x) < 2:
        raise DataError(f"user {user}: {len(x)} complete rows (stability and observed speed); the GP needs at least 2")
    return regress.fit_records(records, pc.search)


def _gpr_for(gprs, user):
    return gprs.get(user) or gprs.get("*") or next(iter(gprs.values()))


def _check_labels(records, strict: bool = True):
    present = {r.label for r in records if r.label is not None}
    if not present:
        raise DataError("features carry no activity labels")
    absent = [lab.value for lab in LABELS if lab not in present]
    if absent and strict:
        raise DataError(f"classes absent from training data: {absent}")
    if absent:
        log.warning("classes absent from the training half", extra={"absent": absent})


def _train_classifiers(records, pc) -> dict[str, classify.Model]:
    data = classify.Dataset.from_records(records, pc.feature_names)
    return {name: pipeline.train_classifier(name, data, pc) for name in pc.classifiers}


def _gpr_filename(user, gprs) -> str:
    return "gpr.json" if len(gprs) == 1 else f"gpr_{user}.json"


def cmd_train(args, cfg) -> int:
    if not args.features:
        raise UsageError("train needs --features")
    pc = _pipeline_config(cfg)
    groups = _load_features(args.features, cfg)
    _check_labels([r for _, recs, _ in groups for r in recs])
    gprs = _fit_gprs(groups, cfg, pc)
    prepared = [r for user, recs, _ in groups for r in regress.impute_speeds(recs, _gpr_for(gprs, user))]
    models = _train_classifiers(prepared, pc)
    inputs = [_input_digest(p) for p in args.features]
    echo = _echo(cfg, inputs)
    out = Path(args.out)
    for user, gpr in gprs.items():
        text = regress.dumps_model(gpr, {**echo, "user_id": user})
        _atomic_write(out / _gpr_filename(user, gprs), lambda fh: fh.write(text))
    for name, model in models.items():
        text = classify.dumps_model(model, echo)
        _atomic_write(out / f"{name}.json", lambda fh: fh.write(text))
    print(f"trained {', '.join(models)} on {len(prepared)} windows; {len(gprs)} GP model(s) in {out}")
    return EXIT_OK


def _load_models(models_dir: Path, names):
    gprs, clfs = {}, {}
    try:
        for p in sorted(models_dir.glob("gpr*.json")):
            model = regress.loads_model(p.read_text(encoding="utf-8"))
            key = "*" if p.name == "gpr.json" else p.stem[len("gpr_"):]
            gprs[key] = model
        for name in names:
            p = models_dir / f"{name}.json"
            if p.exists():
                clfs[name] = classify.loads_model(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read models: {exc}") from None
    except modelio.ModelFormatError as exc:
        raise DataError(f"bad model file: {exc}") from None
    if not clfs:
        raise DataError(f"no classifier models ({', '.join(names)}) found in {models_dir}")
    return gprs, clfs


def _check_schema(model, columns, name):
    missing = [f for f in model.feature_names if f not in columns]
    if missing:
        raise DataError(
            f"{name} model schema ({', '.join(model.feature_names)}) does not match the features "
            f"file schema ({', '.join(columns)}); missing {missing}"
        )


def _write_series(out: Path, groups, gprs, meta) -> None:
    def stability(fh):
        ingest.write_metadata(fh, meta)
        fh.write("user_id,window_start,window_end,stability_mean,stability_min\n")
        for user, recs, _ in groups:
            for r in recs:
                fh.write(
                    f"{user},{ingest.format_float(r.window_start)},{ingest.format_float(r.window_end)},"
                    f"{ingest.format_float(r.stability_mean)},{ingest.format_float(r.stability_min)}\n"
                )

    def speed(fh):
        ingest.write_metadata(fh, meta)
        fh.write("user_id,window_start,window_end,speed,speed_provenance,label\n")
        for user, recs, _ in groups:
            for r in recs:
                fh.write(
                    f"{user},{ingest.format_float(r.window_start)},{ingest.format_float(r.window_end)},"
                    f"{ingest.format_float(r.speed)},{r.speed_provenance.value},"
                    f"{'' if r.label is None else r.label.value}\n"
                )

    def gp_curve(fh):
        ingest.write_metadata(fh, meta)
        fh.write("user_id,stability,mean,variance\n")
        for user, gpr in gprs.items():
            xs, mu, var = regress.curve(gpr)
            for x, m, v in zip(xs, mu, var):
                fh.write(f"{user},{ingest.format_float(x)},{ingest.format_float(m)},{ingest.format_float(v)}\n")

    _atomic_write(out / "stability_series.csv", stability)
    _atomic_write(out / "speed_series.csv", speed)
    _atomic_write(out / "gpr_curve.csv", gp_curve)


def cmd_eval(args, cfg) -> int:
    if not args.features:
        raise UsageError("eval needs --features")
    pc = _pipeline_config(cfg)
    groups = _load_features(args.features, cfg)
    split = {"mode": cfg["split"], "seed": int(cfg["seed"]), "stratified": bool(cfg["stratified"])}

    if args.models:
        gprs, clfs = _load_models(Path(args.models), pc.classifiers)
        test = [r for u, recs, _ in groups for r in (regress.impute_speeds(recs, _gpr_for(gprs, u)) if gprs else recs)]
        train_n = None
        split = {"mode": "none", "note": "pre-trained models evaluated on every labeled window"}
        columns = groups[0][2].get("columns", list(features.FEATURE_COLUMNS))
        for name, m in clfs.items():
            _check_schema(m, columns, name)
    else:
        halves = []
        for user, recs, _ in groups:
            labeled = [r for r in recs if r.label is not None]
            try:
                halves.append((user,) + split_half(labeled, split["mode"], split["seed"], split["stratified"]))
            except ValueError as exc:
                raise DataError(f"user {user}: {exc}") from None
        _check_labels([r for _, tr, _ in halves for r in tr], strict=False)
        gprs = _fit_gprs([(u, tr, {}) for u, tr, _ in halves], cfg, pc)
        train = [r for u, tr, _ in halves for r in regress.impute_speeds(tr, _gpr_for(gprs, u))]
        test = [r for u, _, te in halves for r in regress.impute_speeds(te, _gpr_for(gprs, u))]
        clfs = _train_classifiers(train, pc)
        train_n = len(train)

    test_data = classify.Dataset.from_records(test, pc.feature_names)
    if len(test_data) == 0:
        raise DataError("no labeled windows to evaluate")
    reports = {
        name: evaluate(model, test_data, n_train=train_n, split=split, classifier={"name": name})
        for name, model in clfs.items()
    }
    all_records = [r for _, recs, _ in groups for r in recs]
    try:
        pearson, spearman = stability_speed_correlation(all_records)
        corr = {"pearson": pearson, "spearman": spearman}
    except ValueError as exc:
        corr = {"pearson": None, "spearman": None, "error": str(exc)}
    gp_info = {
        u: {
            "signal_variance": g.hyperparams.signal_variance,
            "length_scale": g.hyperparams.length_scale,
            "noise_variance": g.hyperparams.noise_variance,
            "log_marginal_likelihood": g.log_likelihood,
            "n_train": int(len(g.train_x)),
        }
        for u, g in gprs.items()
    }
    echo = _echo(cfg, [_input_digest(p) for p in args.features])
    meta = {"config": echo}
    out = Path(args.out)
    _atomic_write(
        out / "report.json",
        lambda fh: write_report(fh, reports, {"correlation": corr, "gpr": gp_info}, echo),
    )

    def comparison(fh):
        ingest.write_metadata(fh, meta)
        write_comparison(fh, reports)

    def metrics(fh):
        ingest.write_metadata(fh, meta)
        write_metrics(fh, reports)

    _atomic_write(out / "comparison.csv", comparison)
    _atomic_write(out / "metrics.csv", metrics)
    _write_series(out, groups, gprs, meta)
    for name, r in reports.items():
        print(f"{name:8s} accuracy={r.accuracy:.4f} n_test={r.n_test}")
    if corr.get("spearman") is not None:
        print(f"stability/speed correlation: pearson={corr['pearson']:.4f} spearman={corr['spearman']:.4f}")
    return EXIT_OK


def cmd_infer(args, cfg) -> int:
    if not args.features or not args.models:
        raise UsageError("infer needs --features and --models")
    pc = _pipeline_config(cfg)
    groups = _load_features(args.features, cfg)
    gprs, clfs = _load_models(Path(args.models), pc.classifiers)
    for user, _, meta in groups:
        for name, m in clfs.items():
            _check_schema(m, meta.get("columns", []), name)
    echo = _echo(cfg, [_input_digest(p) for p in args.features])
    out = Path(args.out)
    prepared = [
        (user, regress.impute_speeds(recs, _gpr_for(gprs, user)) if gprs else recs) for user, recs, _ in groups
    ]
    for name, model in clfs.items():

        def write(fh, model=model):
            ingest.write_metadata(fh, {"config": echo, "classifier": name})
            fh.write(
                "user_id,window_start,window_end,speed,speed_provenance,label,"
                + ",".join(f"score_{lab.value}" for lab in LABELS)
                + "\n"
            )
            for user, recs in prepared:
                for r in recs:
                    try:
                        label, scores = classify.predict_label(model, r.vector(model.feature_names))
                    except classify.ArityError as exc:
                        raise DataError(str(exc)) from None
                    fh.write(
                        f"{user},{ingest.format_float(r.window_start)},{ingest.format_float(r.window_end)},"
                        f"{ingest.format_float(r.speed)},{r.speed_provenance.value},{label.value},"
                        + ",".join(repr(scores[lab]) for lab in LABELS)
                        + "\n"
                    )

        _atomic_write(out / f"predictions_{name}.csv", write)
    n = sum(len(r) for _, r in prepared)
    print(f"labeled {n} windows with {', '.join(clfs)} into {out}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "features": cmd_features,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wifimob", description="Wi-Fi stability based mobility activity inference")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON settings file (overrides defaults)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--wifi", help="wifi scan file")
    common.add_argument("--gps", help="location file")
    common.add_argument("--activity", help="activity inference file")
    common.add_argument("--features", nargs="+", help="features file(s), one per user")
    common.add_argument("--models", help="directory holding model files")
    common.add_argument("--window-s", dest="window_s", type=float)
    common.add_argument("--hop-s", dest="hop_s", type=float)
    common.add_argument("--classifier", choices=("tree", "nb", "forest", "all"))
    common.add_argument("--split", choices=("random", "chrono"))
    common.add_argument("--stratified", action="store_true", help="stratify the 50/50 split by label")
    grp = common.add_mutually_exclusive_group()
    grp.add_argument("--per-user", dest="pooled", action="store_false", default=None, help="one GP per user (default)")
    grp.add_argument("--pooled", dest="pooled", action="store_true", default=None, help="one GP over all users")
    common.add_argument("--jobs", type=int, help="worker threads for forest training")
    common.add_argument("--user-id", dest="user_id")
    common.add_argument("--duration-s", dest="duration_s", type=int, help="synth: simulated seconds")
    common.add_argument("--gps-dropout-prob", dest="gps_dropout_prob", type=float, help="synth: GPS fix loss rate")
    common.add_argument("--rssi-noise-std", dest="rssi_noise_std", type=float, help="synth: RSSI noise (dB)")
    common.add_argument("-v", "--verbose", action="store_true")
    helps = {
        "synth": "generate a labeled synthetic corpus",
        "features": "parse traces and write windowed features",
        "train": "fit the GP and activity classifiers",
        "eval": "50/50 evaluation, comparison table and plot data",
        "infer": "label feature windows with trained models",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLogFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO if args.verbose else logging.WARNING)
    np.seterr(all="ignore")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"wifimob {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"wifimob {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (regress.NumericalError, np.linalg.LinAlgError) as exc:
        print(f"wifimob {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
