"""Validation and scoring of model-produced recommendation lists against
judges' own scorecards.

A model submits one ranked 5-slot recommendation set per consumer profile.
Slots are validated (in-list, non-duplicate, well-ranked, present) and the
five quality metrics are computed from the raw, unnormalised scores:

  mean rating      mean of the owning judge's score over valid slots
  mean percentile  position of each valid slot within the judge's own
                   ranking (mid-rank ties), averaged per judge then across
                   judges
  hit@k            valid slots landing in the judge's top-k set / (J*K)
  nDCG@k           rank-discounted relevance vs the judge's ideal ordering,
                   averaged across judges
  coverage         valid slots / (J*K)
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from .errors import IngestError

DEFAULT_K = 5


def normalize_name(name: str) -> str:
    """Join key for beverage names: casefolded, whitespace collapsed."""
    return " ".join(name.split()).casefold()


@dataclass(frozen=True)
class RecommendationSlot:
    beverage_name: str
    rank: int | None = None
    justification: str = ""


@dataclass
class RecommendationSet:
    model_id: str
    profile_id: str
    slots: list[RecommendationSlot] = field(default_factory=list)


class VerdictReason(str, Enum):
    OK = "OK"
    NOT_IN_LIST = "NOT_IN_LIST"
    DUPLICATE = "DUPLICATE"
    BAD_RANK = "BAD_RANK"
    MISSING = "MISSING"


@dataclass(frozen=True)
class SlotVerdict:
    slot_index: int
    valid: bool
    reason: VerdictReason
    beverage_name: str = ""


def validate_recs(
    recs: RecommendationSet,
    beverage_names: set[str],
    k: int = DEFAULT_K,
) -> list[SlotVerdict]:
    """Judge every slot of a recommendation set, never repairing it.

    Produces max(k, len(slots)) verdicts; sets shorter than k are padded
    with MISSING. A slot is valid iff its name matches the master list
    (case-insensitive, whitespace-normalized), has not appeared in an
    earlier slot, and carries an integer rank in 1..k not used before.
    When several rules are broken, the reported reason follows that order.
    """
    known = {normalize_name(n) for n in beverage_names}
    seen_names: set[str] = set()
    seen_ranks: set[int] = set()
    verdicts = []
    for i, slot in enumerate(recs.slots):
        name = normalize_name(slot.beverage_name)
        if not name or name not in known:
            reason = VerdictReason.NOT_IN_LIST
        elif name in seen_names:
            reason = VerdictReason.DUPLICATE
        elif (
            not isinstance(slot.rank, int)
            or isinstance(slot.rank, bool)
            or not (1 <= slot.rank <= k)
            or slot.rank in seen_ranks
        ):
            reason = VerdictReason.BAD_RANK
        else:
            reason = VerdictReason.OK
            seen_ranks.add(slot.rank)
        seen_names.add(name)
        verdicts.append(
            SlotVerdict(i, reason is VerdictReason.OK, reason, slot.beverage_name)
        )
    for i in range(len(recs.slots), k):
        verdicts.append(SlotVerdict(i, False, VerdictReason.MISSING))
    return verdicts


Scorecard = Mapping[str, float]  # normalized beverage name -> raw score
Scorecards = Mapping[str, Scorecard]  # judge id -> scorecard
RecsByProfile = Mapping[str, RecommendationSet]


def _valid_slots(
    recs_by_profile: RecsByProfile,
    judge_ids: list[str],
    beverage_names: set[str],
    k: int,
) -> dict[str, list[tuple[int, str]]]:
    """Per judge: (rank, normalized name) for each valid slot."""
    out: dict[str, list[tuple[int, str]]] = {}
    for judge in judge_ids:
        recs = recs_by_profile.get(judge)
        picks: list[tuple[int, str]] = []
        if recs is not None:
            verdicts = validate_recs(recs, beverage_names, k)
            for verdict in verdicts:
                if verdict.valid:
                    slot = recs.slots[verdict.slot_index]
                    picks.append((slot.rank, normalize_name(slot.beverage_name)))
        out[judge] = picks
    return out


def top_k_set(scorecard: Scorecard, k: int) -> set[str]:
    """The judge's fixed top-k beverage set: score descending, ties at the
    cut resolved by name ascending."""
    ordered = sorted(scorecard.items(), key=lambda kv: (-kv[1], kv[0]))
    return {name for name, _ in ordered[:k]}


def _require_judges(scorecards: Scorecards) -> list[str]:
    if not scorecards:
        raise ValueError("at least one scorecard is required")
    return sorted(scorecards)


def coverage_of_verdicts(verdicts, n_profiles: int, k: int = DEFAULT_K) -> float:
    """Coverage from pre-computed verdicts: valid slots / (J*K)."""
    if n_profiles <= 0 or k <= 0:
        raise ValueError("n_profiles and k must be positive")
    return sum(1 for v in verdicts if v.valid) / (n_profiles * k)


def coverage(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
) -> float:
    """Fraction of the J*K recommendation slots that are valid."""
    judges = _require_judges(scorecards)
    slots = _valid_slots(recs_by_profile, judges, beverage_names, k)
    valid = sum(len(v) for v in slots.values())
    return valid / (len(judges) * k)


def mean_rating(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
) -> float | None:
    """Mean of the owning judge's raw score over all valid slots; None when
    no valid slot has a score (undefined, not zero)."""
    judges = sorted(scorecards)
    slots = _valid_slots(recs_by_profile, judges, beverage_names, k)
    ratings = [
        scorecards[judge][name]
        for judge in judges
        for _, name in slots[judge]
        if name in scorecards[judge]
    ]
    return sum(ratings) / len(ratings) if ratings else None


def _percentile_within(scorecard: Scorecard, name: str) -> float | None:
    n = len(scorecard)
    if n < 2 or name not in scorecard:
        return None
    score = scorecard[name]
    lower = sum(1 for s in scorecard.values() if s < score)
    equal_others = sum(1 for other, s in scorecard.items() if s == score and other != name)
    return (lower + 0.5 * equal_others) / (n - 1)


def mean_percentile(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
) -> float | None:
    """Where valid slots sit within each judge's own ranking (1.0 = the
    judge's unique favourite, 0.0 = their unique least favourite; ties
    mid-ranked), averaged per judge and then across judges."""
    judges = sorted(scorecards)
    slots = _valid_slots(recs_by_profile, judges, beverage_names, k)
    per_judge = []
    for judge in judges:
        values = [
            p
            for _, name in slots[judge]
            if (p := _percentile_within(scorecards[judge], name)) is not None
        ]
        if values:
            per_judge.append(sum(values) / len(values))
    return sum(per_judge) / len(per_judge) if per_judge else None


def hit_at_k(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
    tie_mode: str = "fixed",
) -> float:
    """Valid slots whose beverage lands in the judge's top-k, over J*K.

    ``tie_mode`` "fixed" uses the deterministic k-sized set (ties at the
    cut broken by name); "threshold" counts anything scoring at least the
    k-th best score as a hit.
    """
    if tie_mode not in ("fixed", "threshold"):
        raise ValueError(f"unknown tie_mode {tie_mode!r}")
    judges = _require_judges(scorecards)
    slots = _valid_slots(recs_by_profile, judges, beverage_names, k)
    hits = 0
    for judge in judges:
        card = scorecards[judge]
        if tie_mode == "fixed":
            top = top_k_set(card, k)
            hits += sum(1 for _, name in slots[judge] if name in top)
        else:
            cutoff = sorted(card.values(), reverse=True)[: k][-1] if card else math.inf
            hits += sum(
                1 for _, name in slots[judge] if card.get(name, -math.inf) >= cutoff
            )
    return hits / (len(judges) * k)


def ndcg_at_k(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
) -> float:
    """Mean over judges of DCG/IDCG, with the judge's raw score as the
    relevance of each valid slot (0 for invalid or unscored slots) and the
    judge's k best scores as the ideal."""
    judges = sorted(scorecards)
    slots = _valid_slots(recs_by_profile, judges, beverage_names, k)
    per_judge = []
    for judge in judges:
        card = scorecards[judge]
        relevance = {rank: card.get(name, 0.0) for rank, name in slots[judge]}
        dcg = sum(relevance.get(i, 0.0) / math.log2(i + 1) for i in range(1, k + 1))
        ideal = sorted(card.values(), reverse=True)[:k]
        idcg = sum(rel / math.log2(i + 1) for i, rel in enumerate(ideal, start=1))
        per_judge.append(dcg / idcg if idcg > 0 else 0.0)
    return sum(per_judge) / len(per_judge) if per_judge else 0.0


QUANTIZATION_TOL = 1e-9


@dataclass(frozen=True)
class MetricReport:
    model_id: str
    mean_rating: float | None
    mean_percentile: float | None
    hit_rate: float | None
    ndcg: float | None
    coverage: float
    n_profiles: int
    k: int

    def __post_init__(self):
        # hit and coverage count slots, so they must be exact multiples of
        # 1/(J*K); anything else indicates corrupted slot accounting.
        denom = self.n_profiles * self.k
        for label, value in (("coverage", self.coverage), ("hit rate", self.hit_rate)):
            if value is None:
                continue
            if abs(value * denom - round(value * denom)) > QUANTIZATION_TOL:
                raise ValueError(
                    f"{label} {value!r} is not a multiple of 1/{denom}"
                )


def evaluate_model(
    recs_by_profile: RecsByProfile,
    scorecards: Scorecards,
    beverage_names: set[str],
    k: int = DEFAULT_K,
    model_id: str | None = None,
    tie_mode: str = "fixed",
) -> MetricReport:
    """Compose the five metrics for one model across all profiles.

    With zero valid slots only coverage (0.0) is defined; the other four
    report as None rather than a misleading zero.
    """
    if model_id is None:
        model_id = next(
            (r.model_id for r in recs_by_profile.values() if r.model_id), "unknown"
        )
    cov = coverage(recs_by_profile, scorecards, beverage_names, k)
    if cov == 0.0:
        return MetricReport(model_id, None, None, None, None, 0.0,
                            len(scorecards), k)
    return MetricReport(
        model_id=model_id,
        mean_rating=mean_rating(recs_by_profile, scorecards, beverage_names, k),
        mean_percentile=mean_percentile(recs_by_profile, scorecards, beverage_names, k),
        hit_rate=hit_at_k(recs_by_profile, scorecards, beverage_names, k, tie_mode),
        ndcg=ndcg_at_k(recs_by_profile, scorecards, beverage_names, k),
        coverage=cov,
        n_profiles=len(scorecards),
        k=k,
    )


@dataclass
class ModelRecommendations:
    model_id: str
    sets: dict[str, RecommendationSet] = field(default_factory=dict)


def parse_recommendations_json(text: str, source: str = "<memory>") -> ModelRecommendations:
    """Parse a recommendation file body into per-profile sets.

    Schema: {"model_id": ..., "profiles": [{"profile_id": ...,
    "recommendations": [{"beverage_name", "rank", "justification"}]}]}.
    Structural problems raise IngestError; content problems (bad names,
    ranks, duplicates) are preserved for validate_recs to flag.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{source}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict) or "model_id" not in raw or "profiles" not in raw:
        raise IngestError(f"{source}: expected an object with model_id and profiles")
    model_id = str(raw["model_id"])
    profiles = raw["profiles"]
    if not isinstance(profiles, list):
        raise IngestError(f"{source}: profiles must be a list")
    out = ModelRecommendations(model_id)
    for entry in profiles:
        if not isinstance(entry, dict) or "profile_id" not in entry:
            raise IngestError(f"{source}: each profile needs a profile_id")
        profile_id = str(entry["profile_id"])
        if profile_id in out.sets:
            raise IngestError(f"{source}: duplicate profile_id {profile_id!r}")
        slots = []
        for item in entry.get("recommendations", []):
            if not isinstance(item, dict):
                raise IngestError(f"{source}: recommendations must be objects")
            rank = item.get("rank")
            if isinstance(rank, float) and rank.is_integer():
                rank = int(rank)
            if not isinstance(rank, int) or isinstance(rank, bool):
                rank = None
            slots.append(
                RecommendationSlot(
                    beverage_name=str(item.get("beverage_name", "")),
                    rank=rank,
                    justification=str(item.get("justification", "")),
                )
            )
        out.sets[profile_id] = RecommendationSet(model_id, profile_id, slots)
    return out


def load_recommendations(path: str | Path) -> ModelRecommendations:
    with open(path, encoding="utf-8") as fh:
        return parse_recommendations_json(fh.read(), source=str(path))


def recommendations_to_json(recs: ModelRecommendations) -> str:
    """Canonical serialization (sorted keys, two-space indent, trailing
    newline) so parse -> serialize round-trips byte-identically."""
    payload = {
        "model_id": recs.model_id,
        "profiles": [
            {
                "profile_id": pid,
                "recommendations": [
                    {
                        "beverage_name": s.beverage_name,
                        "justification": s.justification,
                        "rank": s.rank,
                    }
                    for s in recs.sets[pid].slots
                ],
            }
            for pid in sorted(recs.sets)
        ],
    }
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
