"""Plot-ready report tables derived from a validated dataset.

Eight CSV tables (style_counts, abv_bands, judge_stats, agreement, top10,
bottom10, per_style, divisive) plus a combined report.json carrying the
same content at full precision together with the complete ranking, the
real-vs-artificial tag comparison and any validation findings.
"""

from __future__ import annotations

import csv
from collections import Counter
from pathlib import Path

import numpy as np

from .io import canonical_json
from .model import (
    ABV_BAND_EDGES,
    DEFAULT_STYLE_FAMILIES,
    Dataset,
    StyleFamily,
    Violation,
    classify_abv,
    validate_dataset,
)
from .scoring import (
    agreement,
    aggregate,
    build_score_matrix,
    divisiveness,
    judge_stats,
    normalize,
    per_style_distribution,
    tag_report,
)

TABLE_NAMES = (
    "style_counts",
    "abv_bands",
    "judge_stats",
    "agreement",
    "top10",
    "bottom10",
    "per_style",
    "divisive",
)

TOP_N = 10


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if np.isnan(value):
            return ""
        return repr(value)
    return str(value)


def build_analysis_report(
    dataset: Dataset,
    families: list[StyleFamily] | None = None,
    lenient: bool = False,
    agreement_method: str = "spearman",
    norm_method: str = "minmax",
    top_n: int = TOP_N,
) -> dict:
    """Compute every report table from a dataset.

    ``lenient`` maps degenerate judge rows to 0.5 during normalization and
    drops judges with fewer than two scores from the stats table instead
    of failing.
    """
    families = families if families is not None else DEFAULT_STYLE_FAMILIES
    family_order = [f.name for f in families]
    names = {b.id: b.name for b in dataset.beverages}

    matrix = build_score_matrix(dataset)
    norm = normalize(matrix, lenient=lenient, method=norm_method)

    raw_ranking = aggregate(matrix, names)
    norm_ranking = aggregate(norm, names)

    stats_rows = judge_stats(matrix, lenient=lenient)
    agree = agreement(matrix, method=agreement_method)

    style_counter = Counter(b.style_family for b in dataset.beverages)
    style_counts = [
        {"family": name, "count": style_counter.get(name, 0)} for name in family_order
    ]
    for extra in sorted(set(style_counter) - set(family_order)):
        style_counts.append({"family": extra, "count": style_counter[extra]})

    band_counter = Counter(classify_abv(b.abv).value for b in dataset.beverages)
    abv_bands = [
        {"band": band.value, "count": band_counter.get(band.value, 0)}
        for band, _, _ in ABV_BAND_EDGES
    ]

    per_style = per_style_distribution(norm, dataset, family_order)
    divisive = divisiveness(matrix, names=names)
    tags = tag_report(dataset)

    ranking_rows = [
        {
            "rank": i + 1,
            "beverage": e.name,
            "score": e.score,
            "reviews": e.review_count,
        }
        for i, e in enumerate(norm_ranking.entries)
    ]

    return {
        "meta": {
            "beverages": len(dataset.beverages),
            "reviews": len(dataset.reviews),
            "judges": list(dataset.judges),
            "agreement_method": agreement_method,
            "norm_method": norm_method,
            "lenient": lenient,
        },
        "style_counts": style_counts,
        "abv_bands": abv_bands,
        "judge_stats": [
            {"judge": s.judge_id, "mean": s.mean, "sd": s.sd, "count": s.count}
            for s in stats_rows
        ],
        "agreement": {
            "judges": agree.judges,
            "values": [
                [None if np.isnan(v) else float(v) for v in row]
                for row in agree.values
            ],
        },
        "ranking": ranking_rows,
        "top10": ranking_rows[:top_n],
        "bottom10": ranking_rows[-top_n:][::-1],
        "per_style": {
            family: scores for family, scores in per_style.items()
        },
        "per_style_rows": [
            {"family": family, "score": score}
            for family, scores in per_style.items()
            for score in scores
        ],
        "divisive": [
            {
                "beverage": d.name,
                "sd": d.sd,
                "range": d.score_range,
                "reviews": d.review_count,
            }
            for d in divisive
        ],
        "raw_ranking": [
            {
                "rank": i + 1,
                "beverage": e.name,
                "score": e.score,
                "reviews": e.review_count,
            }
            for i, e in enumerate(raw_ranking.entries)
        ],
        "tag_report": [
            {
                "family": t.family,
                "real_mean": t.real_mean,
                "artificial_mean": t.artificial_mean,
                "real_count": t.real_count,
                "artificial_count": t.artificial_count,
                "comparable": t.comparable,
                "real_at_least_artificial": t.real_at_least_artificial,
            }
            for t in tags
        ],
    }


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_report_tables(
    report: dict, out_dir: str | Path, violations: list[Violation] | None = None
) -> dict[str, Path]:
    """Write the eight CSV tables plus report.json; returns paths by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    def table(name: str, header: list[str], rows: list[list]) -> None:
        paths[name] = out / f"{name}.csv"
        _write_csv(paths[name], header, rows)

    table(
        "style_counts",
        ["family", "count"],
        [[r["family"], r["count"]] for r in report["style_counts"]],
    )
    table(
        "abv_bands",
        ["band", "count"],
        [[r["band"], r["count"]] for r in report["abv_bands"]],
    )
    table(
        "judge_stats",
        ["judge", "mean", "sd", "count"],
        [[r["judge"], r["mean"], r["sd"], r["count"]] for r in report["judge_stats"]],
    )
    judges = report["agreement"]["judges"]
    table(
        "agreement",
        ["judge", *judges],
        [
            [judge, *row]
            for judge, row in zip(judges, report["agreement"]["values"])
        ],
    )
    rank_header = ["rank", "beverage", "score", "reviews"]
    table(
        "top10",
        rank_header,
        [[r["rank"], r["beverage"], r["score"], r["reviews"]] for r in report["top10"]],
    )
    table(
        "bottom10",
        rank_header,
        [[r["rank"], r["beverage"], r["score"], r["reviews"]] for r in report["bottom10"]],
    )
    table(
        "per_style",
        ["family", "score"],
        [[r["family"], r["score"]] for r in report["per_style_rows"]],
    )
    table(
        "divisive",
        ["beverage", "sd", "range", "reviews"],
        [[r["beverage"], r["sd"], r["range"], r["reviews"]] for r in report["divisive"]],
    )

    payload = dict(report)
    payload["violations"] = [
        {"code": v.code, "severity": v.severity.value, "subject": v.subject, "message": v.message}
        for v in (violations or [])
    ]
    paths["report"] = out / "report.json"
    paths["report"].write_text(canonical_json(payload), encoding="utf-8")
    return paths


def analyze_dataset(
    dataset: Dataset,
    out_dir: str | Path,
    families: list[StyleFamily] | None = None,
    lenient: bool = False,
    agreement_method: str = "spearman",
    norm_method: str = "minmax",
) -> tuple[list[Violation], dict[str, Path]]:
    """Validate, build and write the full report; the caller decides what
    to do about the returned violations."""
    violations = validate_dataset(dataset)
    report = build_analysis_report(
        dataset,
        families=families,
        lenient=lenient,
        agreement_method=agreement_method,
        norm_method=norm_method,
    )
    paths = write_report_tables(report, out_dir, violations)
    return violations, paths
