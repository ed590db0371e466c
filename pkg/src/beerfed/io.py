"""File ingestion and canonical serialization.

Formats:

* beverage list CSV: brewery, beer_name, beer_style, abv_percent plus
  optional ingredients / tags columns (semicolon-joined values);
* scorecard CSV: judge_id, beer_name, raw_score plus optional tags / note;
* session config JSON (pool inline or referenced as a CSV path);
* session outputs: beverages.csv, scorecards.csv, session_log.jsonl (one
  round record per line) and session_summary.json.

Beverage name is the join key between scorecards and beverage lists,
matched case-insensitively with collapsed whitespace. Serializers emit a
canonical form (fixed column order, LF line endings, trailing newline,
sorted JSON keys) so parse -> serialize round-trips byte-identically.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigurationError, IngestError
from .model import (
    Beverage,
    Dataset,
    NoteTag,
    Review,
    StyleFamily,
    bucket_style,
    derive_note_tags,
)
from .protocol import CostParams, ParticipantProfile, SessionConfig, SessionResult
from .receval import normalize_name

BEVERAGE_COLUMNS = ("brewery", "beer_name", "beer_style", "abv_percent")
BEVERAGE_OPTIONAL = ("ingredients", "tags")
SCORECARD_COLUMNS = ("judge_id", "beer_name", "raw_score")
SCORECARD_OPTIONAL = ("tags", "note")

_SCORE_RE = re.compile(r"^[0-9]+(\.[0-9])?$")


def beverage_id_for(producer: str, name: str) -> str:
    return f"{normalize_name(producer)}::{normalize_name(name)}"


def _parse_tags(raw: str, row: int, column: str) -> frozenset[NoteTag]:
    tags = set()
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        try:
            tags.add(NoteTag(part))
        except ValueError:
            valid = ", ".join(t.value for t in NoteTag)
            raise IngestError(
                f"unknown tag {part!r} (expected one of: {valid})",
                row=row,
                column=column,
            ) from None
    return frozenset(tags)


def _check_header(
    header: Sequence[str], required: Sequence[str], optional: Sequence[str]
) -> None:
    seen = [h.strip() for h in header]
    if len(set(seen)) != len(seen):
        raise IngestError("duplicate column names in header", row=1)
    missing = [c for c in required if c not in seen]
    if missing:
        raise IngestError(f"missing required column(s): {', '.join(missing)}", row=1)
    unknown = [c for c in seen if c not in required and c not in optional]
    if unknown:
        raise IngestError(f"unknown column(s): {', '.join(unknown)}", row=1)


def _beverage_from_fields(
    producer: str,
    name: str,
    raw_style: str,
    abv_raw,
    ingredients_raw: str,
    tags_raw: str,
    families: list[StyleFamily] | None,
    row: int,
) -> Beverage:
    if not producer.strip():
        raise IngestError("brewery must not be empty", row=row, column="brewery")
    if not name.strip():
        raise IngestError("beer_name must not be empty", row=row, column="beer_name")
    try:
        abv = float(abv_raw)
    except (TypeError, ValueError):
        raise IngestError(
            f"abv_percent {abv_raw!r} is not a decimal", row=row, column="abv_percent"
        ) from None
    if not (0.0 < abv <= 100.0):
        raise IngestError(
            f"abv_percent must lie in (0, 100], got {abv!r}", row=row, column="abv_percent"
        )
    ingredients = frozenset(
        p.strip() for p in ingredients_raw.split(";") if p.strip()
    ) or None
    return Beverage(
        id=beverage_id_for(producer, name),
        producer=producer.strip(),
        name=" ".join(name.split()),
        raw_style=raw_style.strip(),
        style_family=bucket_style(raw_style, families).name,
        abv=abv,
        ingredients=ingredients,
        note_tags=_parse_tags(tags_raw, row, "tags"),
    )


def parse_beverages_csv(
    path: str | Path, families: list[StyleFamily] | None = None
) -> list[Beverage]:
    """Ingest a beverage list: rows come back style-bucketed and ready to
    band, with errors reported by file line and column."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("file is empty (expected a header row)", row=1) from None
        _check_header(header, BEVERAGE_COLUMNS, BEVERAGE_OPTIONAL)
        idx = {h.strip(): i for i, h in enumerate(header)}
        beverages = []
        seen: set[tuple[str, str]] = set()
        for record in reader:
            if not record or all(not c.strip() for c in record):
                continue
            row = reader.line_num
            if len(record) != len(header):
                raise IngestError(
                    f"expected {len(header)} fields, found {len(record)}", row=row
                )

            def cell(column: str, default: str = "") -> str:
                return record[idx[column]] if column in idx else default

            beverage = _beverage_from_fields(
                cell("brewery"),
                cell("beer_name"),
                cell("beer_style"),
                cell("abv_percent"),
                cell("ingredients"),
                cell("tags"),
                families,
                row,
            )
            key = (normalize_name(beverage.producer), normalize_name(beverage.name))
            if key in seen:
                raise IngestError(
                    f"duplicate beverage {beverage.name!r} for {beverage.producer!r}",
                    row=row,
                    column="beer_name",
                )
            seen.add(key)
            beverages.append(beverage)
    return beverages


def _format_abv(abv: float) -> str:
    return repr(float(abv))


def _format_score(score: float) -> str:
    tenths = round(score * 10)
    return f"{tenths // 10}.{tenths % 10}"


def write_beverages_csv(beverages: Iterable[Beverage], path: str | Path) -> None:
    beverages = list(beverages)
    with_ingredients = any(b.ingredients for b in beverages)
    with_tags = any(b.note_tags for b in beverages)
    header = list(BEVERAGE_COLUMNS)
    if with_ingredients:
        header.append("ingredients")
    if with_tags:
        header.append("tags")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for b in beverages:
            record = [b.producer, b.name, b.raw_style, _format_abv(b.abv)]
            if with_ingredients:
                record.append(";".join(sorted(b.ingredients or ())))
            if with_tags:
                record.append(";".join(sorted(t.value for t in b.note_tags)))
            writer.writerow(record)


@dataclass(frozen=True)
class ScorecardRow:
    judge_id: str
    beer_name: str
    raw_score: float
    tags: frozenset[NoteTag]
    note: str | None
    line: int


def parse_scorecards_csv(path: str | Path) -> list[ScorecardRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("file is empty (expected a header row)", row=1) from None
        _check_header(header, SCORECARD_COLUMNS, SCORECARD_OPTIONAL)
        idx = {h.strip(): i for i, h in enumerate(header)}
        rows = []
        for record in reader:
            if not record or all(not c.strip() for c in record):
                continue
            line = reader.line_num
            if len(record) != len(header):
                raise IngestError(
                    f"expected {len(header)} fields, found {len(record)}", row=line
                )

            def cell(column: str, default: str = "") -> str:
                return record[idx[column]] if column in idx else default

            judge_id = cell("judge_id").strip()
            if not judge_id:
                raise IngestError("judge_id must not be empty", row=line, column="judge_id")
            name = cell("beer_name")
            if not name.strip():
                raise IngestError("beer_name must not be empty", row=line, column="beer_name")
            score_raw = cell("raw_score").strip()
            if not _SCORE_RE.match(score_raw):
                raise IngestError(
                    f"raw_score {score_raw!r} must be a number with at most one decimal",
                    row=line,
                    column="raw_score",
                )
            score = float(score_raw)
            if not (1.0 <= score <= 5.0):
                raise IngestError(
                    f"raw_score must lie in [1, 5], got {score_raw}",
                    row=line,
                    column="raw_score",
                )
            note = cell("note").strip() or None
            rows.append(
                ScorecardRow(
                    judge_id=judge_id,
                    beer_name=" ".join(name.split()),
                    raw_score=score,
                    tags=_parse_tags(cell("tags"), line, "tags"),
                    note=note,
                    line=line,
                )
            )
    return rows


def write_scorecards_csv(dataset: Dataset, path: str | Path) -> None:
    by_id = dataset.beverage_index()
    with_tags = any(r.note_tags for r in dataset.reviews)
    with_notes = any(r.note_text for r in dataset.reviews)
    header = list(SCORECARD_COLUMNS)
    if with_tags:
        header.append("tags")
    if with_notes:
        header.append("note")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in dataset.reviews:
            beverage = by_id.get(r.beverage_id)
            name = beverage.name if beverage else r.beverage_id
            record = [r.judge_id, name, _format_score(r.raw_score)]
            if with_tags:
                record.append(";".join(sorted(t.value for t in r.note_tags)))
            if with_notes:
                record.append(r.note_text or "")
            writer.writerow(record)


def build_dataset(beverages: list[Beverage], rows: list[ScorecardRow]) -> Dataset:
    """Join scorecard rows onto a beverage list by normalized name.

    Rows naming a beverage that is not on the list keep the unmatched name
    as their reference so validation can flag them (DANGLING_REF) instead
    of dropping data silently. Ambiguous names (same normalized name from
    two producers) are a hard ingest error.
    """
    by_name: dict[str, list[Beverage]] = {}
    for b in beverages:
        by_name.setdefault(normalize_name(b.name), []).append(b)

    reviews = []
    for row in rows:
        key = normalize_name(row.beer_name)
        matches = by_name.get(key, [])
        if len(matches) > 1:
            producers = ", ".join(sorted(b.producer for b in matches))
            raise IngestError(
                f"beverage name {row.beer_name!r} is ambiguous (produced by {producers})",
                row=row.line,
                column="beer_name",
            )
        beverage_id = matches[0].id if matches else key
        tags = row.tags if row.tags else derive_note_tags(row.note)
        reviews.append(
            Review(
                judge_id=row.judge_id,
                beverage_id=beverage_id,
                raw_score=row.raw_score,
                note_tags=tags,
                note_text=row.note,
            )
        )
    judges = sorted({r.judge_id for r in rows})
    return Dataset(beverages=beverages, reviews=reviews, judges=judges)


def load_dataset(
    beverages_path: str | Path,
    scorecards_path: str | Path,
    families: list[StyleFamily] | None = None,
) -> Dataset:
    beverages = parse_beverages_csv(beverages_path, families)
    rows = parse_scorecards_csv(scorecards_path)
    return build_dataset(beverages, rows)


def parse_profiles_json(path: str | Path) -> list[dict]:
    """Consumer profile file: a JSON array of objects with unique
    profile_id; the remaining fields are free-form description."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise IngestError(f"invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise IngestError("profile file must be a JSON array")
    seen = set()
    for i, entry in enumerate(raw):
        if not isinstance(entry, dict) or "profile_id" not in entry:
            raise IngestError(f"profile entry {i} must be an object with a profile_id")
        pid = str(entry["profile_id"])
        if pid in seen:
            raise IngestError(f"duplicate profile_id {pid!r}")
        seen.add(pid)
    return raw


_PROFILE_KEYS = {
    "id",
    "is_expert",
    "leader_probability",
    "freeload_probability",
    "availability_probability",
    "score_bias",
    "score_noise_sd",
    "score_floor_affinity",
}

_CONFIG_KEYS = {
    "seed",
    "federation",
    "pool",
    "pool_csv",
    "clock_start",
    "clock_end",
    "round_duration",
    "blackout_windows",
    "cost_params",
    "base_quality_range",
    "include_amateurs",
}


def _profile_from_dict(entry: dict) -> ParticipantProfile:
    if not isinstance(entry, dict) or "id" not in entry:
        raise ConfigurationError("each federation entry must be an object with an id")
    unknown = set(entry) - _PROFILE_KEYS
    if unknown:
        raise ConfigurationError(
            f"participant {entry.get('id')!r}: unknown key(s) {sorted(unknown)}"
        )
    try:
        return ParticipantProfile(
            id=str(entry["id"]),
            is_expert=bool(entry.get("is_expert", False)),
            leader_probability=float(entry.get("leader_probability", 0.0)),
            freeload_probability=float(entry.get("freeload_probability", 0.0)),
            availability_probability=float(entry.get("availability_probability", 1.0)),
            score_bias=dict(entry.get("score_bias", {})),
            score_noise_sd=float(entry.get("score_noise_sd", 0.0)),
            score_floor_affinity=float(entry.get("score_floor_affinity", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"participant {entry.get('id')!r}: {exc}") from None


def load_session_config(
    path: str | Path, families: list[StyleFamily] | None = None
) -> SessionConfig:
    """Load a session config file; a pool_csv path is resolved relative to
    the config file's directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: session config must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"{path}: unknown key(s) {sorted(unknown)}")
    if "seed" not in raw or "federation" not in raw:
        raise ConfigurationError(f"{path}: seed and federation are required")

    federation = [_profile_from_dict(e) for e in raw["federation"]]

    if ("pool" in raw) == ("pool_csv" in raw):
        raise ConfigurationError(f"{path}: exactly one of pool / pool_csv is required")
    if "pool_csv" in raw:
        pool_path = (path.parent / raw["pool_csv"]).resolve()
        try:
            pool = parse_beverages_csv(pool_path, families)
        except IngestError as exc:
            raise ConfigurationError(f"{path}: pool_csv: {exc}") from None
    else:
        pool = []
        for i, entry in enumerate(raw["pool"]):
            if not isinstance(entry, dict):
                raise ConfigurationError(f"{path}: pool entry {i} must be an object")
            try:
                pool.append(
                    _beverage_from_fields(
                        str(entry.get("brewery", "")),
                        str(entry.get("beer_name", "")),
                        str(entry.get("beer_style", "")),
                        entry.get("abv_percent"),
                        str(entry.get("ingredients", "") or ""),
                        str(entry.get("tags", "") or ""),
                        families,
                        i,
                    )
                )
            except IngestError as exc:
                raise ConfigurationError(f"{path}: pool entry {i}: {exc}") from None

    try:
        cost_params = CostParams(**raw.get("cost_params", {}))
    except TypeError as exc:
        raise ConfigurationError(f"{path}: cost_params: {exc}") from None

    try:
        config = SessionConfig(
            federation=federation,
            pool=pool,
            seed=raw["seed"],
            clock_start=int(raw.get("clock_start", 17 * 60)),
            clock_end=int(raw.get("clock_end", 23 * 60)),
            round_duration=int(raw.get("round_duration", 5)),
            blackout_windows=[tuple(w) for w in raw.get("blackout_windows", [])],
            cost_params=cost_params,
            base_quality_range=tuple(raw.get("base_quality_range", (2.5, 4.8))),
            include_amateurs=bool(raw.get("include_amateurs", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    config.validate()
    return config


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def round_log_lines(result: SessionResult) -> list[str]:
    return [json.dumps(r.to_json_dict(), sort_keys=True) for r in result.rounds]


def write_session_outputs(result: SessionResult, out_dir: str | Path) -> dict[str, Path]:
    """Write beverages.csv, scorecards.csv, session_log.jsonl and
    session_summary.json into out_dir; returns the paths by name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "beverages": out / "beverages.csv",
        "scorecards": out / "scorecards.csv",
        "session_log": out / "session_log.jsonl",
        "session_summary": out / "session_summary.json",
    }
    write_beverages_csv(result.sampled_beverages(), paths["beverages"])
    write_scorecards_csv(result.dataset, paths["scorecards"])
    paths["session_log"].write_text(
        "".join(line + "\n" for line in round_log_lines(result)), encoding="utf-8"
    )
    # per-round total cost over time: the two costs move in opposite
    # directions, whether they balance is left for the reader to judge
    per_round_total = [r.broadcast_cost + r.comprehension_cost for r in result.rounds]
    summary = {
        "seed": result.config.seed,
        "clock_start": result.config.clock_start,
        "clock_end": result.config.clock_end,
        "round_duration": result.config.round_duration,
        "rounds": len(result.rounds),
        "beverages_sampled": len(result.rounds),
        "skips": [{"clock": s.clock, "reason": s.reason} for s in result.skips],
        "judges": result.dataset.judges,
        "costs": {
            "broadcast_total": sum(r.broadcast_cost for r in result.rounds),
            "comprehension_total": sum(r.comprehension_cost for r in result.rounds),
            "per_round_total": per_round_total,
        },
    }
    paths["session_summary"].write_text(canonical_json(summary), encoding="utf-8")
    return paths
