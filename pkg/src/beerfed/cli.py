"""Command-line surface: simulate / analyze / eval-recs.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 data
validation error, 5 strict-mode evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import glob as globmod
import json
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

from . import __version__
from .errors import (
    ConfigurationError,
    DegenerateRowError,
    IngestError,
    InsufficientDataError,
)
from .io import (
    canonical_json,
    load_dataset,
    load_session_config,
    parse_profiles_json,
    write_session_outputs,
)
from .model import Severity, load_style_families, validate_dataset
from .protocol import run_session
from .receval import DEFAULT_K, evaluate_model, load_recommendations, normalize_name
from .reports import analyze_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_STRICT_EVAL = 5


class Diagnostics:
    """Stderr reporter; emits JSON lines instead of text when requested."""

    def __init__(self, json_mode: bool):
        self.json_mode = json_mode

    def emit(self, level: str, message: str, code: str | None = None) -> None:
        if self.json_mode:
            record = {"level": level, "message": message}
            if code is not None:
                record["code"] = code
            print(json.dumps(record, sort_keys=True), file=sys.stderr)
        else:
            prefix = f"{level}: " if level != "info" else ""
            print(f"{prefix}{message}", file=sys.stderr)

    def error(self, message: str, code: str | None = None) -> None:
        self.emit("error", message, code)

    def warning(self, message: str, code: str | None = None) -> None:
        self.emit("warning", message, code)


def _load_families(path: str | None):
    return load_style_families(path) if path else None


def cmd_simulate(args, diag: Diagnostics) -> int:
    try:
        families = _load_families(args.families)
        config = load_session_config(args.config, families)
        if args.seed is not None:
            config.seed = args.seed
            config.validate()
    except ConfigurationError as exc:
        diag.error(str(exc), code="CONFIG")
        return EXIT_CONFIG
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO

    result = run_session(config)
    try:
        paths = write_session_outputs(result, args.out)
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO
    diag.emit(
        "info",
        f"simulated {len(result.rounds)} rounds "
        f"({len(result.skips)} skipped), outputs in {Path(args.out)}",
    )
    for p in paths.values():
        diag.emit("info", f"wrote {p}")
    return EXIT_OK


def cmd_analyze(args, diag: Diagnostics) -> int:
    try:
        families = _load_families(args.families)
        dataset = load_dataset(args.beverages, args.scorecards, families)
    except ConfigurationError as exc:
        diag.error(str(exc), code="CONFIG")
        return EXIT_CONFIG
    except IngestError as exc:
        diag.error(str(exc), code="INGEST")
        return EXIT_VALIDATION
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO

    violations = validate_dataset(dataset)
    for v in violations:
        level = "warning" if (args.lenient or v.severity is Severity.WARNING) else "error"
        diag.emit(level, f"{v.subject}: {v.message}", code=v.code)
    blocking = [v for v in violations if v.severity is Severity.ERROR]
    if blocking and not args.lenient:
        codes = sorted({v.code for v in blocking})
        diag.error(f"dataset validation failed: {', '.join(codes)}", code="VALIDATION")
        return EXIT_VALIDATION

    try:
        _, paths = analyze_dataset(
            dataset,
            args.out_dir,
            families=families,
            lenient=args.lenient,
            agreement_method=args.agreement,
            norm_method=args.norm,
        )
    except (DegenerateRowError, InsufficientDataError) as exc:
        diag.error(str(exc), code="DEGENERATE")
        return EXIT_VALIDATION
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO
    diag.emit("info", f"wrote {len(paths)} report files to {Path(args.out_dir)}")
    return EXIT_OK


def _display(value: float | None) -> str:
    if value is None:
        return "NA"
    return str(Decimal(repr(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN))


def cmd_eval_recs(args, diag: Diagnostics) -> int:
    try:
        families = _load_families(args.families)
        dataset = load_dataset(args.beverages, args.scorecards, families)
        if args.profiles:
            parse_profiles_json(args.profiles)
    except ConfigurationError as exc:
        diag.error(str(exc), code="CONFIG")
        return EXIT_CONFIG
    except IngestError as exc:
        diag.error(str(exc), code="INGEST")
        return EXIT_VALIDATION
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO

    beverage_names = {b.name for b in dataset.beverages}
    by_id = dataset.beverage_index()
    scorecards: dict[str, dict[str, float]] = {j: {} for j in dataset.judges}
    for review in dataset.reviews:
        beverage = by_id.get(review.beverage_id)
        if beverage is None:
            diag.warning(
                f"scorecard references unknown beverage {review.beverage_id!r}; row ignored",
                code="DANGLING_REF",
            )
            continue
        card = scorecards.setdefault(review.judge_id, {})
        card.setdefault(normalize_name(beverage.name), review.raw_score)

    if args.normalized:
        for judge, card in scorecards.items():
            tenths = {n: round(s * 10) for n, s in card.items()}
            if not tenths:
                continue
            lo, hi = min(tenths.values()), max(tenths.values())
            scorecards[judge] = {
                n: ((t - lo) / (hi - lo) if hi > lo else 0.5) for n, t in tenths.items()
            }

    paths = sorted(globmod.glob(args.recs_glob))
    if not paths:
        diag.warning(f"no recommendation files match {args.recs_glob!r}")
    rows = []
    for path in paths:
        try:
            recs = load_recommendations(path)
        except (IngestError, OSError) as exc:
            if args.strict:
                diag.error(f"{path}: {exc}", code="EVAL")
                return EXIT_STRICT_EVAL
            diag.warning(f"skipping {path}: {exc}", code="EVAL")
            continue
        known = set(scorecards)
        for extra in sorted(set(recs.sets) - known):
            diag.warning(
                f"{path}: profile {extra!r} has no scorecard; ignored", code="EVAL"
            )
        report = evaluate_model(
            {pid: s for pid, s in recs.sets.items() if pid in known},
            scorecards,
            beverage_names,
            k=args.k,
            model_id=recs.model_id,
            tie_mode=args.hit_ties,
        )
        rows.append(report)

    rows.sort(
        key=lambda r: (
            -(r.mean_rating if r.mean_rating is not None else float("-inf")),
            r.model_id,
        )
    )

    header = [
        "Model",
        "Mean rating",
        "Mean percentile",
        f"Hit@{args.k}",
        f"nDCG@{args.k}",
        "Coverage",
    ]
    out_path = Path(args.out)
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for r in rows:
                writer.writerow(
                    [
                        r.model_id,
                        _display(r.mean_rating),
                        _display(r.mean_percentile),
                        _display(r.hit_rate),
                        _display(r.ndcg),
                        _display(r.coverage),
                    ]
                )
        json_path = out_path.with_suffix(".json")
        json_path.write_text(
            canonical_json(
                [
                    {
                        "model": r.model_id,
                        "mean_rating": r.mean_rating,
                        "mean_percentile": r.mean_percentile,
                        f"hit_at_{args.k}": r.hit_rate,
                        f"ndcg_at_{args.k}": r.ndcg,
                        "coverage": r.coverage,
                    }
                    for r in rows
                ]
            ),
            encoding="utf-8",
        )
    except OSError as exc:
        diag.error(str(exc), code="IO")
        return EXIT_IO
    diag.emit("info", f"evaluated {len(rows)} model(s) -> {out_path}, {json_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beerfed",
        description=(
            "Simulate collaborative tasting sessions, analyze scorecards, "
            "and evaluate recommendation lists."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--json-errors",
        action="store_true",
        help="emit machine-readable diagnostics on stderr as JSON lines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a seeded tasting session")
    p_sim.add_argument("config", help="session config JSON")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed (64-bit unsigned)")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--families", default=None, help="style family config JSON")
    p_sim.set_defaults(func=cmd_simulate)

    p_an = sub.add_parser("analyze", help="build the report tables from scorecards")
    p_an.add_argument("scorecards", help="scorecard CSV")
    p_an.add_argument("beverages", help="beverage list CSV")
    p_an.add_argument("--out-dir", required=True, help="directory for the report tables")
    p_an.add_argument("--lenient", action="store_true",
                      help="downgrade validation errors and degenerate rows to warnings")
    p_an.add_argument("--families", default=None, help="style family config JSON")
    p_an.add_argument("--agreement", choices=("spearman", "kendall"), default="spearman")
    p_an.add_argument("--norm", choices=("minmax", "zscore"), default="minmax")
    p_an.set_defaults(func=cmd_analyze)

    p_ev = sub.add_parser("eval-recs", help="score recommendation files against scorecards")
    p_ev.add_argument("recs_glob", help="glob for recommendation JSON files")
    p_ev.add_argument("scorecards", help="scorecard CSV")
    p_ev.add_argument("beverages", help="beverage list CSV")
    p_ev.add_argument("--out", required=True, help="metric table CSV path (JSON written alongside)")
    p_ev.add_argument("--k", type=int, default=DEFAULT_K, help="recommendation list size")
    p_ev.add_argument("--strict", action="store_true",
                      help="fail (exit 5) on unreadable recommendation files")
    p_ev.add_argument("--profiles", default=None, help="consumer profile JSON (validated only)")
    p_ev.add_argument("--families", default=None, help="style family config JSON")
    p_ev.add_argument("--normalized", action="store_true",
                      help="evaluate against per-judge min-max normalized scores")
    p_ev.add_argument("--hit-ties", choices=("fixed", "threshold"), default="fixed",
                      help="top-k tie handling for Hit@k")
    p_ev.set_defaults(func=cmd_eval_recs)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    diag = Diagnostics(args.json_errors)
    return args.func(args, diag)


if __name__ == "__main__":
    sys.exit(main())
