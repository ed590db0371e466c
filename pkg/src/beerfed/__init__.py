"""beerfed: a seeded simulator for collaborative beer-tasting sessions plus
the analytics and recommendation-evaluation pipeline built on top of it."""

__version__ = "0.1.0"

from .model import (
    AbvBand,
    Beverage,
    Dataset,
    NoteTag,
    Review,
    StyleFamily,
    Violation,
    bucket_style,
    check_reinheitsgebot,
    classify_abv,
    validate_dataset,
)
from .protocol import (
    CostParams,
    ParticipantProfile,
    RoundRecord,
    SessionConfig,
    SessionExhausted,
    communication_costs,
    elect_leader,
    generate_score,
    run_round,
    run_session,
)
from .receval import (
    MetricReport,
    RecommendationSet,
    RecommendationSlot,
    SlotVerdict,
    coverage,
    coverage_of_verdicts,
    evaluate_model,
    hit_at_k,
    mean_percentile,
    mean_rating,
    ndcg_at_k,
    validate_recs,
)
from .scoring import (
    AggregateRanking,
    NormalizedMatrix,
    ScoreMatrix,
    agreement,
    aggregate,
    build_score_matrix,
    divisiveness,
    judge_stats,
    normalize,
    per_style_distribution,
    tag_report,
)

__all__ = [
    "__version__",
    "AbvBand",
    "AggregateRanking",
    "Beverage",
    "CostParams",
    "Dataset",
    "MetricReport",
    "NormalizedMatrix",
    "NoteTag",
    "ParticipantProfile",
    "RecommendationSet",
    "RecommendationSlot",
    "Review",
    "RoundRecord",
    "ScoreMatrix",
    "SessionConfig",
    "SessionExhausted",
    "SlotVerdict",
    "StyleFamily",
    "Violation",
    "agreement",
    "aggregate",
    "bucket_style",
    "build_score_matrix",
    "check_reinheitsgebot",
    "classify_abv",
    "communication_costs",
    "coverage",
    "coverage_of_verdicts",
    "divisiveness",
    "elect_leader",
    "evaluate_model",
    "generate_score",
    "hit_at_k",
    "judge_stats",
    "mean_percentile",
    "mean_rating",
    "ndcg_at_k",
    "normalize",
    "per_style_distribution",
    "run_round",
    "run_session",
    "tag_report",
    "validate_dataset",
    "validate_recs",
]
