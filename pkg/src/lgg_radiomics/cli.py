"""Command-line driver.

    lgg-radiomics extract  --manifest M.csv --config C.json --out F.csv
    lgg-radiomics train    --features F.csv --config C.json --model-out M.json --report-out R.json
    lgg-radiomics evaluate --model M.json --features T.csv --report-out R.json
    lgg-radiomics phantoms --outdir DIR

Exit codes: 0 success, 1 invalid input or failed stage, 2 extraction
finished with some cases skipped.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import extract_all
from .pipeline import (
    ConfigError,
    FeatureNameMismatch,
    ModelVersionMismatch,
    PipelineConfig,
    PipelineModel,
    StageError,
    evaluate_table,
    fit_pipeline,
    timestamp,
    write_json,
    REPORT_FORMAT,
)
from .phantoms import write_phantom_suite
from .report import render_figures, render_text
from .roi import BinSpec
from .tabular import FeatureTable, TableError, read_table_csv, write_table_csv
from .volume_io import read_mask, read_volume

logger = logging.getLogger("lgg_radiomics")

MANIFEST_COLUMNS = ("case_id", "image_path", "mask_path", "roi_label", "class_label")


class ManifestParseError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestRow:
    case_id: str
    image_path: Path
    mask_path: Path
    roi_label: int
    class_label: int


def read_manifest(path) -> list[ManifestRow]:
    """Parse the manifest; relative paths resolve against the manifest's directory."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ManifestParseError(f"{path}: missing columns {missing}")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                try:
                    row = ManifestRow(
                        rec["case_id"].strip(),
                        path.parent / rec["image_path"].strip(),
                        path.parent / rec["mask_path"].strip(),
                        int(rec["roi_label"]),
                        int(rec["class_label"]),
                    )
                except (TypeError, ValueError, AttributeError) as exc:
                    raise ManifestParseError(f"{path}:{lineno}: {exc}") from exc
                if row.class_label not in (0, 1):
                    raise ManifestParseError(f"{path}:{lineno}: class_label must be 0 or 1")
                rows.append(row)
    except OSError as exc:
        raise ManifestParseError(str(exc)) from exc
    if not rows:
        raise ManifestParseError(f"{path}: manifest has no cases")
    ids = [r.case_id for r in rows]
    if len(set(ids)) != len(ids):
        raise ManifestParseError(f"{path}: duplicate case_id values")
    return rows


def _extract_case(row: ManifestRow, spec: BinSpec):
    img = read_volume(row.image_path)
    mask = read_mask(row.mask_path)
    return extract_all(img, mask, row.roi_label, spec)


def _extract_case_safe(args):
    row, spec = args
    try:
        return row, _extract_case(row, spec), None
    except Exception as exc:  # per-case failures are reported, not fatal
        return row, None, f"{type(exc).__name__}: {exc}"


def cmd_extract(manifest, config, out_csv, jobs: int = 1) -> int:
    try:
        rows = read_manifest(manifest)
        cfg = PipelineConfig.load(config)
    except (ManifestParseError, ConfigError) as exc:
        logger.error("extract: %s", exc)
        return 1

    work = [(row, cfg.bin_spec) for row in rows]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_case_safe, work))
    else:
        results = [_extract_case_safe(w) for w in work]

    ok = []
    for row, fv, err in results:
        if err is not None:
            logger.error("case %s skipped: %s", row.case_id, err)
        else:
            ok.append((row, fv))
    if not ok:
        logger.error("extract: no case could be processed")
        return 2

    ok.sort(key=lambda item: item[0].case_id)
    names = ok[0][1].names
    table = FeatureTable(
        tuple(r.case_id for r, _ in ok),
        names,
        np.array([fv.values for _, fv in ok], dtype=np.float64),
        np.array([r.class_label for r, _ in ok]),
    )
    write_table_csv(table, out_csv)
    logger.info("wrote %d cases x %d features to %s", len(table), len(names), out_csv)
    return 0 if len(ok) == len(rows) else 2


def _text_path(report_out) -> Path:
    return Path(report_out).with_suffix(".txt")


def _fail(stage: str, exc) -> int:
    logger.error("stage %s failed: %s", stage, exc)
    print(f"error: stage {stage}: {exc}", file=sys.stderr)
    return 1


def cmd_train(features_csv, config, model_out, report_out, figures_dir=None) -> int:
    try:
        table = read_table_csv(features_csv)
    except (OSError, TableError) as exc:
        return _fail("csv-parse", exc)
    try:
        cfg = PipelineConfig.load(config)
    except ConfigError as exc:
        return _fail("config", exc)
    try:
        model, report = fit_pipeline(table, cfg)
    except StageError as exc:
        return _fail(exc.stage, exc)
    try:
        model.save(model_out)
        write_json(report_out, report)
        _text_path(report_out).write_text(render_text(report))
        if figures_dir:
            render_figures(report, figures_dir)
    except OSError as exc:
        return _fail("write", exc)
    test = report["metrics"]["test"]["rates"]
    logger.info("test sensitivity=%s specificity=%s accuracy=%s",
                test["sensitivity"], test["specificity"], test["accuracy"])
    return 0


def cmd_evaluate(model_json, features_csv, report_out, figures_dir=None) -> int:
    try:
        model = PipelineModel.load(model_json)
    except ModelVersionMismatch as exc:
        return _fail("model-load", exc)
    except (OSError, KeyError, ValueError) as exc:
        return _fail("model-load", exc)
    try:
        table = read_table_csv(features_csv)
    except (OSError, TableError) as exc:
        return _fail("csv-parse", exc)
    try:
        result = evaluate_table(model, table)
    except FeatureNameMismatch as exc:
        return _fail("schema", exc)
    report = {
        "format_version": REPORT_FORMAT,
        "generated_at": timestamp(),
        "command": "evaluate",
        "metrics": result,
    }
    try:
        write_json(report_out, report)
        _text_path(report_out).write_text(render_text(report))
        if figures_dir:
            render_figures(report, figures_dir)
    except OSError as exc:
        return _fail("write", exc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lgg-radiomics", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract 120 radiomic features per manifest case")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("train", help="split, standardize, PCA, SMOTE, train and report")
    p.add_argument("--features", required=True)
    p.add_argument("--config")
    p.add_argument("--model-out", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--figures-dir", help="also render PNG figures and the history CSV here")

    p = sub.add_parser("evaluate", help="apply a stored model to a feature table")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--figures-dir")

    p = sub.add_parser("phantoms", help="write a synthetic phantom suite with a manifest")
    p.add_argument("--outdir", required=True)
    p.add_argument("--positive", type=int, default=14)
    p.add_argument("--negative", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "extract":
        return cmd_extract(args.manifest, args.config, args.out, args.jobs)
    if args.command == "train":
        return cmd_train(args.features, args.config, args.model_out, args.report_out, args.figures_dir)
    if args.command == "evaluate":
        return cmd_evaluate(args.model, args.features, args.report_out, args.figures_dir)
    manifest = write_phantom_suite(args.outdir, args.positive, args.negative, args.seed)
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
