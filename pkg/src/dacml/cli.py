"""Single executable exposing the pipeline as subcommands.

Every run writes its outputs atomically plus a RunManifest JSON next to the
first output: subcommand, fully resolved configuration, input digests, seed,
tool version, output list.  Re-running a subcommand with
`--config <manifest>.json` reproduces its outputs byte-identically.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, automl, features, ingest, report, scoring, synth
from .errors import DataError
from .manifest import load_income_bins, load_indicator_names
from .models import (
    FAMILIES,
    ModelSpec,
    feature_importance,
    predict as predict_model,
    train as train_model,
)
from .models.serialize import load_model, save_model
from .util import atomic_write_text, format_number, sha256_file, write_csv

log = logging.getLogger("dacml")

SUBCOMMANDS = (
    "ingest", "score", "features", "train", "predict", "automl", "evaluate",
    "importance", "diagnose", "infer", "trend", "synth", "report",
)


class _Manifest:
    """Collects inputs/outputs during a run and writes the manifest."""

    def __init__(self, subcommand: str, args: argparse.Namespace):
        self.subcommand = subcommand
        self.config = {k: v for k, v in sorted(vars(args).items())
                       if k not in ("func", "config")}
        self.inputs: list[str] = []
        self.outputs: list[str] = []

    def add_input(self, path) -> Path:
        if path is not None:
            self.inputs.append(str(path))
        return Path(path) if path is not None else None

    def add_output(self, path) -> Path:
        if path is not None:
            self.outputs.append(str(path))
        return Path(path) if path is not None else None

    def write(self) -> None:
        if not self.outputs:
            return
        doc = {
            "subcommand": self.subcommand,
            "config": _jsonable(self.config),
            "inputs": {p: sha256_file(p) for p in sorted(set(self.inputs)) if Path(p).exists()},
            "seed": self.config.get("seed"),
            "version": __version__,
            "outputs": sorted(set(self.outputs)),
        }
        path = Path(self.outputs[0]).with_suffix(Path(self.outputs[0]).suffix + ".manifest.json")
        atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _parse_years(text: str) -> tuple[int, ...]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, _, hi = text.partition("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(t) for t in text.split(",") if t.strip())


def _parse_kv_params(pairs) -> dict:
    params = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise DataError(f"--param expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        params[key.strip()] = automl._parse_grid_value(value)
    return params


def _parse_year_paths(pairs) -> dict[int, Path]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise DataError(f"expected YEAR=PATH, got {pair!r}")
        year, _, path = pair.partition("=")
        out[int(year)] = Path(path)
    return out


def _require_file(path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{what} file not found: {path}")
    return path


def _load_matrix(manifest: _Manifest, path, variant: str = "", year: int = 0):
    return features.read_matrix_csv(
        manifest.add_input(_require_file(path, "matrix")), variant=variant, year=year)


def _load_labels(manifest: _Manifest, path) -> dict[str, bool]:
    """Labels from either a DAC CSV or a labeled matrix CSV."""
    path = _require_file(path, "labels")
    manifest.add_input(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if header[:2] == ["tract", "dac_flag"]:
        return {r.tract: r.dac_flag for r in ingest.read_dac_csv(path)}
    matrix = features.read_matrix_csv(path)
    if matrix.labels is None:
        raise DataError(f"{path} carries no labels")
    return {t: bool(v) for t, v in zip(matrix.tract_ids, matrix.labels)}


def _write_predictions_csv(path, preds, year: int | None = None) -> None:
    header = ["tract_id", "year", "dac_prob", "dac_pred"]
    rows = [[t, "" if year is None else str(year), format_number(p), "1" if l else "0"]
            for t, p, l in zip(preds.tract_ids, preds.prob, preds.label)]
    write_csv(path, header, rows)


def _read_predictions_csv(path) -> dict[str, bool]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:1] != ["tract_id"] or "dac_pred" not in header:
            raise DataError(f"{path} is not a predictions CSV")
        pred_col = header.index("dac_pred")
        return {row[0]: row[pred_col] == "1" for row in reader if row}


# --- subcommand implementations ---------------------------------------------


def cmd_synth(args, manifest: _Manifest) -> None:
    config = synth.SynthConfig(
        n_tracts=args.tracts,
        years=_parse_years(args.years),
        dac_fraction=args.dac_fraction,
        noise_scale=args.noise,
        housing_age_dac_fraction=args.housing_age_fraction,
        workplace_signal=args.workplace_signal,
        income_drift_per_year=args.income_drift,
        seed=args.seed,
    )
    corpus = synth.generate(config)
    for path in synth.write_corpus_csvs(corpus, args.out_dir):
        manifest.add_output(path)
    log.info("wrote synthetic corpus: %d tracts, years %s, %d DACs",
             config.n_tracts, config.years, sum(corpus.labels.values()))


def cmd_ingest(args, manifest: _Manifest) -> None:
    kind = args.kind.upper()
    source = manifest.add_input(_require_file(args.input, "input"))
    cmap = (ingest.load_column_map(manifest.add_input(_require_file(args.map, "column map")), kind)
            if args.map else ingest.default_column_map(kind))
    delimiter = {"comma": ",", "tab": "\t"}.get(args.delimiter)
    if kind in ("RAC", "WAC"):
        records = ingest.parse_lodes(source, cmap, kind, delimiter=delimiter,
                                     strict_sums=args.strict_sums)
        tracts = ingest.aggregate_to_tract(records)
        ingest.write_lodes_csv(manifest.add_output(args.out), tracts, kind)
    elif kind == "ACS":
        records = ingest.parse_acs(source, cmap, delimiter=delimiter,
                                   strict_sums=args.strict_sums)
        ingest.write_acs_csv(manifest.add_output(args.out), ingest.aggregate_to_tract(records))
    elif kind == "DAC":
        records = ingest.parse_dac(source, cmap, delimiter=delimiter)
        ingest.write_dac_csv(manifest.add_output(args.out), records)
    else:
        raise DataError(f"unknown kind {args.kind!r}")
    log.info("ingested %d %s record(s)", len(records), kind)


def cmd_score(args, manifest: _Manifest) -> None:
    records = ingest.read_dac_csv(manifest.add_input(_require_file(args.dac, "DAC")))
    scored = scoring.attach_percentiles(records)
    rows = [[r.tract, "1" if r.dac_flag else "0", format_number(r.score)] for r in scored]
    write_csv(manifest.add_output(args.out_scores), ["tract", "dac_flag", "score"], rows)
    sep = scoring.rank_separation(scored)
    rank_of = {name: i + 1 for i, name in enumerate(sep.ranking)}
    sep_rows = [[row.indicator, format_number(row.median_dac), format_number(row.median_nondac),
                 format_number(row.separation), str(rank_of[row.indicator])]
                for row in sep.rows]
    write_csv(manifest.add_output(args.out_separation),
              ["indicator", "median_dac", "median_nondac", "separation", "rank"], sep_rows)


def _build_matrix_from_sources(args, manifest: _Manifest, variant: str, year: int):
    rac = wac = acs_records = None
    if args.rac:
        rac = ingest.read_lodes_csv(manifest.add_input(_require_file(args.rac, "RAC")), "RAC")
    if args.wac:
        wac = ingest.read_lodes_csv(manifest.add_input(_require_file(args.wac, "WAC")), "WAC")
    if args.acs:
        acs_records = ingest.read_acs_csv(manifest.add_input(_require_file(args.acs, "ACS")))
    labels = _load_labels(manifest, args.dac) if args.dac else None
    return features.build_variant(variant, rac, wac, acs_records, labels, year=year)


def cmd_features(args, manifest: _Manifest) -> None:
    matrix = _build_matrix_from_sources(args, manifest, args.variant, args.year)
    features.write_matrix_csv(manifest.add_output(args.out), matrix)
    log.info("variant %s: %d tracts x %d features", args.variant, matrix.n_rows,
             len(matrix.feature_names))


def cmd_train(args, manifest: _Manifest) -> None:
    matrix = _load_matrix(manifest, args.matrix)
    if matrix.labels is None:
        raise DataError("training matrix carries no labels")
    train_m, test_m = features.split(matrix, args.ratio, args.seed,
                                     stratify=not args.no_stratify)
    train_s, test_s, stats = features.standardize(train_m, test_m)
    spec = ModelSpec(args.family.upper(), _parse_kv_params(args.param), seed=args.seed)
    model = train_model(spec, train_s, stats=stats)
    save_model(model, manifest.add_output(args.out))
    preds = predict_model(model, test_s, threshold=args.threshold)
    eval_report = analysis.evaluate(
        preds.as_mapping(), {t: bool(v) for t, v in zip(test_s.tract_ids, test_s.labels)})
    log.info("%s: test F1 %.4f accuracy %.4f", spec.describe(), eval_report.f1,
             eval_report.accuracy)
    if args.metrics_out:
        _write_eval_csv(manifest.add_output(args.metrics_out), eval_report)


def _write_eval_csv(path, ev: analysis.EvalReport) -> None:
    write_csv(path, ["tp", "fp", "fn", "tn", "precision", "recall", "f1", "accuracy"],
              [[ev.tp, ev.fp, ev.fn, ev.tn, format_number(ev.precision),
                format_number(ev.recall), format_number(ev.f1), format_number(ev.accuracy)]])


def cmd_predict(args, manifest: _Manifest) -> None:
    model = load_model(manifest.add_input(_require_file(args.model, "model")))
    matrix = _load_matrix(manifest, args.matrix)
    if model.stats is not None:
        matrix = features.apply_standardization(matrix, model.stats)
    preds = predict_model(model, matrix, threshold=args.threshold)
    _write_predictions_csv(manifest.add_output(args.out), preds)
    log.info("predicted %d/%d tracts positive", preds.positive_count, matrix.n_rows)


def cmd_automl(args, manifest: _Manifest) -> None:
    space = (automl.parse_search_space(
        manifest.add_input(_require_file(args.space, "search space")).read_text("utf-8"),
        budget=args.budget)
        if args.space else automl.SearchSpace(budget=args.budget))
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    candidates = automl.enumerate_candidates(space, args.seed)

    boards: list[automl.Leaderboard] = []
    cells: dict[tuple[str, str], automl.Leaderboard] = {}
    best_entry = None
    best_matrices = None
    for variant in variants:
        if args.matrix:
            matrix = _load_matrix(manifest, args.matrix, variant=variant)
        else:
            matrix = _build_matrix_from_sources(args, manifest, variant, args.year)
        if matrix.labels is None:
            raise DataError("automl needs labels; pass --dac (or a labeled --matrix)")
        train_m, test_m = features.split(matrix, args.ratio, args.seed,
                                         stratify=not args.no_stratify)
        train_s, test_s, stats = features.standardize(train_m, test_m)
        board = automl.run_search(candidates, train_s, test_s, variant=variant,
                                  seed=args.seed, workers=args.workers)
        boards.append(board)
        cells.update({(variant, fam): b for fam, b in automl.split_by_family(board).items()})
        head = board.entries[0]
        if head.f1 is not None and (best_entry is None or
                                    (head.f1, head.accuracy) > (best_entry.f1, best_entry.accuracy)):
            best_entry = head
            best_matrices = (train_s, stats)
        log.info("variant %s best: %s F1=%s", variant, head.spec.describe(),
                 format_number(head.f1))

    automl.write_leaderboard_csv(manifest.add_output(args.out), boards)
    if args.table1:
        grid = automl.best_per_cell(cells, variants=variants)
        automl.write_grid_csv(manifest.add_output(args.table1), grid)
    if args.best_model_out:
        if best_entry is None:
            raise DataError("no successful candidate to save")
        train_s, stats = best_matrices
        model = train_model(best_entry.spec, train_s, stats=stats)
        save_model(model, manifest.add_output(args.best_model_out))


def cmd_evaluate(args, manifest: _Manifest) -> None:
    predictions = _read_predictions_csv(manifest.add_input(_require_file(args.pred, "predictions")))
    labels = _load_labels(manifest, args.truth)
    ev = analysis.evaluate(predictions, labels)
    _write_eval_csv(manifest.add_output(args.out), ev)
    if args.outcomes_out:
        rows = [[t, o] for t, o in sorted(ev.outcome_by_tract.items())]
        write_csv(manifest.add_output(args.outcomes_out), ["tract_id", "outcome"], rows)
    log.info("F1 %.4f accuracy %.4f (TP=%d FP=%d FN=%d TN=%d)",
             ev.f1, ev.accuracy, ev.tp, ev.fp, ev.fn, ev.tn)


def cmd_importance(args, manifest: _Manifest) -> None:
    model = load_model(manifest.add_input(_require_file(args.model, "model")))
    rep = feature_importance(model)
    rows = [[name, format_number(raw), format_number(rel), str(rank)]
            for rank, (name, raw, rel) in enumerate(rep.ranked(), 1)]
    write_csv(manifest.add_output(args.out),
              ["feature", "raw_importance", "relative_importance", "rank"], rows)
    log.info("importance method %s; top feature %s", rep.method, rep.ranked()[0][0])


def cmd_diagnose(args, manifest: _Manifest) -> None:
    predictions = _read_predictions_csv(manifest.add_input(_require_file(args.pred, "predictions")))
    records = ingest.read_dac_csv(manifest.add_input(_require_file(args.dac, "DAC")))
    labels = {r.tract: r.dac_flag for r in records}
    shared = set(predictions) & set(labels)
    if len(shared) < len(predictions):
        raise DataError("predictions cover tracts missing from the DAC file")
    ev = analysis.evaluate(predictions, {t: labels[t] for t in predictions})
    diag = analysis.diagnose_errors(ev, [r for r in records if r.tract in shared])
    rows = []
    for group in ("FN", "FP"):
        by_name = {d.indicator: d for d in diag.deltas.get(group, ())}
        for rank, name in enumerate(diag.ranking.get(group, ()), 1):
            d = by_name[name]
            rows.append([group, str(rank), name, format_number(d.group_median),
                         format_number(d.reference_median), format_number(d.delta)])
    write_csv(manifest.add_output(args.out),
              ["group", "rank", "indicator", "group_median_pct", "tp_median_pct", "delta"],
              rows)


def _attach_geojson(args, manifest: _Manifest, year: int, preds) -> None:
    source = json.loads(Path(args.geojson).read_text("utf-8"))
    by_tract = {t: (float(p), bool(l))
                for t, p, l in zip(preds.tract_ids, preds.prob, preds.label)}
    for feature in source.get("features", []):
        props = feature.setdefault("properties", {})
        tract = str(props.get(args.geo_id_property, ""))
        if tract in by_tract:
            prob, label = by_tract[tract]
            props["dac_prob"] = prob
            props["dac_pred"] = label
            props["year"] = year
    out = Path(args.out_dir) / f"predictions_{year}.geojson"
    atomic_write_text(manifest.add_output(out), json.dumps(source, sort_keys=True) + "\n")


def cmd_infer(args, manifest: _Manifest) -> None:
    model = load_model(manifest.add_input(_require_file(args.model, "model")))
    year_paths = _parse_year_paths(args.matrix)
    if args.geojson:
        manifest.add_input(_require_file(args.geojson, "geometry"))
    matrices = {year: _load_matrix(manifest, path, year=year)
                for year, path in year_paths.items()}
    predictions, counts = analysis.infer_years(model, matrices, threshold=args.threshold)
    out_dir = Path(args.out_dir)
    for year in sorted(predictions):
        _write_predictions_csv(manifest.add_output(out_dir / f"predictions_{year}.csv"),
                               predictions[year], year=year)
        if args.geojson:
            _attach_geojson(args, manifest, year, predictions[year])
    write_csv(manifest.add_output(out_dir / "counts.csv"), ["year", "dac_count"],
              [[str(y), str(counts[y])] for y in sorted(counts)])
    log.info("inferred %d year(s): %s", len(counts),
             ", ".join(f"{y}={counts[y]}" for y in sorted(counts)))


def cmd_trend(args, manifest: _Manifest) -> None:
    counts: dict[int, int] = {}
    with open(manifest.add_input(_require_file(args.counts, "counts")), newline="",
              encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["year", "dac_count"]:
            raise DataError(f"{args.counts} is not a counts CSV")
        for row in reader:
            if row:
                counts[int(row[0])] = int(row[1])

    matrices = {year: _load_matrix(manifest, path, year=year)
                for year, path in _parse_year_paths(args.matrix).items()}
    if args.features:
        selected = [f.strip() for f in args.features.split(",") if f.strip()]
    elif args.importance:
        with open(manifest.add_input(_require_file(args.importance, "importance")),
                  newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader, None)
            selected = [row[0] for row in reader if row][:args.top]
    else:
        raise DataError("pass --features or --importance to choose trend features")

    weights = None
    if not args.unweighted:
        weights = {}
        for year, path in _parse_year_paths(args.weights).items():
            acs_records = ingest.read_acs_csv(manifest.add_input(_require_file(path, "ACS")))
            weights[year] = {r.geocode: float(r.total_population) for r in acs_records}
        if not weights:
            log.info("no --weights given; using unweighted means")
            weights = None

    means = analysis.feature_year_means(matrices, selected, weights)
    trend = analysis.correlate_trends(counts, means, selected,
                                      method="spearman" if args.spearman else "pearson")
    header = ["feature", "correlation"] + [f"mean_{y}" for y in trend.years]
    rows = [["dac_count", ""] + [str(c) for c in trend.counts]]
    for feature in selected:
        r = trend.correlations[feature]
        rows.append([feature, format_number(r)]
                    + [format_number(v) for v in trend.feature_means[feature]])
    write_csv(manifest.add_output(args.out), header, rows)


def cmd_report(args, manifest: _Manifest) -> None:
    grid = None
    if args.grid:
        grid = automl.read_grid_csv(manifest.add_input(_require_file(args.grid, "grid")))
    boards = None
    if args.leaderboard:
        boards = automl.read_leaderboard_csv(
            manifest.add_input(_require_file(args.leaderboard, "leaderboard")))
    sections = [f"# Community classification report", ""]
    body = report.emit_report(grid=grid, leaderboards=boards,
                              eval_report=_read_eval_csv(manifest, args.eval) if args.eval else None,
                              importances=_read_importance_csv(manifest, args.importance)
                              if args.importance else None,
                              trend=_read_trend_csv(manifest, args.trend) if args.trend else None)
    atomic_write_text(manifest.add_output(args.out), body)
    log.info("wrote report to %s", args.out)


def _read_eval_csv(manifest: _Manifest, path) -> analysis.EvalReport:
    with open(manifest.add_input(_require_file(path, "eval")), newline="",
              encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        row = next(iter(reader), None)
    if row is None:
        raise DataError(f"{path} is empty")
    return analysis.EvalReport(
        tp=int(row["tp"]), fp=int(row["fp"]), fn=int(row["fn"]), tn=int(row["tn"]),
        precision=float(row["precision"]), recall=float(row["recall"]),
        f1=float(row["f1"]), accuracy=float(row["accuracy"]), outcome_by_tract={})


def _read_importance_csv(manifest: _Manifest, path):
    from .models.importance import ImportanceReport

    with open(manifest.add_input(_require_file(path, "importance")), newline="",
              encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    names = tuple(r["feature"] for r in rows)
    raw = tuple(float(r["raw_importance"]) for r in rows)
    rel = tuple(float(r["relative_importance"]) for r in rows)
    return {"model": ImportanceReport("from_file", names, raw, rel)}


def _read_trend_csv(manifest: _Manifest, path) -> analysis.TrendReport:
    with open(manifest.add_input(_require_file(path, "trend")), newline="",
              encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["feature", "correlation"]:
            raise DataError(f"{path} is not a trend CSV")
        years = tuple(int(h.removeprefix("mean_")) for h in header[2:])
        counts: tuple[int, ...] = ()
        means = {}
        corr = {}
        for row in reader:
            if not row:
                continue
            if row[0] == "dac_count":
                counts = tuple(int(v) for v in row[2:])
            else:
                means[row[0]] = tuple(float(v) for v in row[2:])
                corr[row[0]] = float(row[1]) if row[1] else None
    return analysis.TrendReport(years, counts, means, corr)


# --- argument wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dacml",
        description="Classify disadvantaged-community status from census "
                    "employment/income data and project it across years.",
        allow_abbrev=False,
    )
    parser.add_argument("--version", action="version", version=f"dacml {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    def cmd(name, func, help_text):
        p = sub.add_parser(name, help=help_text, allow_abbrev=False)
        p.set_defaults(func=func)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config (or a prior run's manifest); flags override it")
        p.add_argument("--seed", type=int, default=0, help="master seed for all randomness")
        return p

    p = cmd("synth", cmd_synth, "generate a deterministic synthetic corpus")
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--tracts", type=int, default=2000)
    p.add_argument("--years", default="2013-2018", help="range 2013-2018 or comma list")
    p.add_argument("--dac-fraction", type=float, default=0.17)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--housing-age-fraction", type=float, default=0.05)
    p.add_argument("--workplace-signal", type=float, default=0.15)
    p.add_argument("--income-drift", type=float, default=0.025)

    p = cmd("ingest", cmd_ingest, "parse source files and aggregate to tracts")
    p.add_argument("--kind", required=True, choices=["rac", "wac", "acs", "dac",
                                                     "RAC", "WAC", "ACS", "DAC"])
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--map", type=Path, default=None, help="column map config")
    p.add_argument("--delimiter", choices=["auto", "comma", "tab"], default="auto")
    p.add_argument("--strict-sums", action="store_true",
                   help="fail on bin-sum mismatches instead of warning")

    p = cmd("score", cmd_score, "percentile-rank indicators, score tracts, rank separation")
    p.add_argument("--dac", required=True, type=Path)
    p.add_argument("--out-scores", required=True, type=Path)
    p.add_argument("--out-separation", required=True, type=Path)

    p = cmd("features", cmd_features, "build one feature variant matrix")
    p.add_argument("--variant", required=True, choices=list(features.VARIANTS))
    p.add_argument("--rac", type=Path)
    p.add_argument("--wac", type=Path)
    p.add_argument("--acs", type=Path)
    p.add_argument("--dac", type=Path, help="labels source (optional)")
    p.add_argument("--year", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)

    p = cmd("train", cmd_train, "split, standardize, and train one model")
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--family", required=True,
                   choices=list(FAMILIES) + [f.lower() for f in FAMILIES])
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--ratio", type=float, default=0.67)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--metrics-out", type=Path)

    p = cmd("predict", cmd_predict, "apply a trained model to a matrix")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--matrix", required=True, type=Path)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", required=True, type=Path)

    p = cmd("automl", cmd_automl, "grid-search all families over variants")
    p.add_argument("--variants", default="v2b", help="comma list, e.g. v1a,v2b")
    p.add_argument("--rac", type=Path)
    p.add_argument("--wac", type=Path)
    p.add_argument("--acs", type=Path)
    p.add_argument("--dac", type=Path)
    p.add_argument("--matrix", type=Path, help="pre-built labeled matrix (single variant)")
    p.add_argument("--year", type=int, default=0)
    p.add_argument("--budget", type=int, default=automl.DEFAULT_BUDGET)
    p.add_argument("--space", type=Path, help="grid config file")
    p.add_argument("--ratio", type=float, default=0.67)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, type=Path, help="leaderboard CSV")
    p.add_argument("--table1", type=Path, help="best-F1 grid CSV")
    p.add_argument("--best-model-out", type=Path)

    p = cmd("evaluate", cmd_evaluate, "confusion metrics for predictions vs labels")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--truth", required=True, type=Path, help="DAC CSV or labeled matrix")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--outcomes-out", type=Path)

    p = cmd("importance", cmd_importance, "feature importance of a trained model")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = cmd("diagnose", cmd_diagnose, "explain FP/FN groups against indicators")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--dac", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)

    p = cmd("infer", cmd_infer, "project labels onto historical years")
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--matrix", action="append", required=True, metavar="YEAR=PATH")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out-dir", required=True, type=Path)
    p.add_argument("--geojson", type=Path, help="tract geometry to annotate")
    p.add_argument("--geo-id-property", default="GEOID")

    p = cmd("trend", cmd_trend, "correlate yearly counts with feature means")
    p.add_argument("--counts", required=True, type=Path)
    p.add_argument("--matrix", action="append", required=True, metavar="YEAR=PATH")
    p.add_argument("--features", help="comma list of feature names")
    p.add_argument("--importance", type=Path, help="importance CSV to pick top features")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--weights", action="append", metavar="YEAR=ACS_CSV",
                   help="population weights per year")
    p.add_argument("--unweighted", action="store_true")
    p.add_argument("--spearman", action="store_true")
    p.add_argument("--out", required=True, type=Path)

    p = cmd("report", cmd_report, "assemble the markdown report bundle")
    p.add_argument("--grid", dest="grid", type=Path, help="F1 grid CSV (--from)")
    p.add_argument("--from", dest="grid", type=Path, help="alias of --grid")
    p.add_argument("--leaderboard", type=Path)
    p.add_argument("--eval", type=Path)
    p.add_argument("--importance", type=Path)
    p.add_argument("--trend", type=Path)
    p.add_argument("--out", required=True, type=Path)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pre-scan --config and install its values as subparser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = Path(argv[idx + 1])
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    doc = json.loads(path.read_text("utf-8"))
    if "config" in doc and "subcommand" in doc:  # a RunManifest
        doc = doc["config"]
    sub_actions = [a for a in parser._actions if isinstance(a, argparse._SubParsersAction)]
    subparser = sub_actions[0].choices.get(argv[0]) if argv else None
    if subparser is None:
        return argv
    known = {a.dest for a in subparser._actions}
    defaults = {}
    for key, value in doc.items():
        if key in known and key != "config":
            defaults[key] = value
    subparser.set_defaults(**defaults)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    if argv and not argv[0].startswith("-") and argv[0] not in SUBCOMMANDS:
        hint = difflib.get_close_matches(argv[0], SUBCOMMANDS, n=1)
        suffix = f"; did you mean {hint[0]!r}?" if hint else ""
        print(f"dacml: unknown subcommand {argv[0]!r}{suffix}", file=sys.stderr)
        return 2
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        manifest = _Manifest(args.subcommand, args)
        args.func(args, manifest)
        manifest.write()
        return 0
    except DataError as exc:
        print(f"dacml: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
