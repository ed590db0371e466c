"""Score analytics: normalization, aggregate rankings, judge statistics,
inter-judge agreement, divisiveness, and the real-vs-artificial tag report.

Matrices are judges x beverages with NaN for missing cells; every statistic
runs over filled cells only (no imputation). Raw scores sit on a 0.1 grid,
so min-max normalization is done on integer tenths and stays exact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import stats as _scipy_stats

from .errors import DegenerateRowError, InsufficientDataError
from .model import Dataset, NoteTag


@dataclass
class ScoreMatrix:
    """Raw 1-5 scores; rows follow the judge list, columns the beverage list."""

    judges: list[str]
    beverages: list[str]
    cells: np.ndarray

    def filled(self) -> np.ndarray:
        return ~np.isnan(self.cells)


@dataclass
class NormalizedMatrix:
    """Per-judge rescaled scores, same shape conventions. Min-max cells lie
    in [0, 1]; the z-score variant is unbounded by design (not clipped)."""

    judges: list[str]
    beverages: list[str]
    cells: np.ndarray

    def filled(self) -> np.ndarray:
        return ~np.isnan(self.cells)


def build_score_matrix(dataset: Dataset) -> ScoreMatrix:
    """Arrange a dataset's reviews into a judges x beverages matrix.

    Assumes a validated dataset: reviews with unknown references are
    ignored, and the first review wins for duplicated (judge, beverage)
    pairs.
    """
    judges = list(dataset.judges)
    beverages = [b.id for b in dataset.beverages]
    jdx = {j: i for i, j in enumerate(judges)}
    bdx = {b: i for i, b in enumerate(beverages)}
    cells = np.full((len(judges), len(beverages)), np.nan)
    for review in dataset.reviews:
        j = jdx.get(review.judge_id)
        b = bdx.get(review.beverage_id)
        if j is None or b is None:
            continue
        if np.isnan(cells[j, b]):
            cells[j, b] = review.raw_score
    return ScoreMatrix(judges, beverages, cells)


def normalize(
    matrix: ScoreMatrix, lenient: bool = False, method: str = "minmax"
) -> NormalizedMatrix:
    """Per-judge normalization of raw scores.

    The default min-max rescales each judge's filled cells by that judge's
    own observed min/max onto [0, 1], so every non-degenerate row attains
    exactly 0 and 1 and the per-judge ordering of beverages is unchanged.
    ``method="zscore"`` centres each row by its mean and sample standard
    deviation instead (unbounded, no clipping). Judges whose filled scores
    are all equal (or fewer than two) have no defined scale: that raises
    DegenerateRowError unless ``lenient``, in which case the whole row
    maps to 0.5 (min-max) or 0.0 (z-score).
    """
    if method not in ("minmax", "zscore"):
        raise ValueError(f"unknown normalization method {method!r}")
    out = np.full_like(matrix.cells, np.nan)
    degenerate: list[str] = []
    for i, judge in enumerate(matrix.judges):
        row = matrix.cells[i]
        mask = ~np.isnan(row)
        if not mask.any():
            continue
        tenths = np.rint(row[mask] * 10).astype(np.int64)
        lo, hi = int(tenths.min()), int(tenths.max())
        if hi == lo:
            if lenient:
                out[i, mask] = 0.5 if method == "minmax" else 0.0
            else:
                degenerate.append(judge)
            continue
        if method == "minmax":
            out[i, mask] = (tenths - lo) / (hi - lo)
        else:
            vals = row[mask]
            out[i, mask] = (vals - vals.mean()) / vals.std(ddof=1)
    if degenerate:
        raise DegenerateRowError(degenerate)
    return NormalizedMatrix(list(matrix.judges), list(matrix.beverages), out)


@dataclass(frozen=True)
class RankedBeverage:
    beverage_id: str
    name: str
    score: float
    review_count: int


@dataclass
class AggregateRanking:
    entries: list[RankedBeverage]

    def top(self, n: int) -> list[RankedBeverage]:
        return self.entries[:n]

    def bottom(self, n: int) -> list[RankedBeverage]:
        return self.entries[-n:]


def aggregate(
    matrix: ScoreMatrix | NormalizedMatrix,
    names: Mapping[str, str] | None = None,
) -> AggregateRanking:
    """Mean score per beverage over filled cells, sorted descending
    (ties broken by beverage name ascending)."""
    names = names or {}
    entries = []
    for b, beverage_id in enumerate(matrix.beverages):
        col = matrix.cells[:, b]
        vals = col[~np.isnan(col)]
        if vals.size == 0:
            continue
        entries.append(
            RankedBeverage(
                beverage_id=beverage_id,
                name=names.get(beverage_id, beverage_id),
                score=float(vals.mean()),
                review_count=int(vals.size),
            )
        )
    entries.sort(key=lambda e: (-e.score, e.name))
    return AggregateRanking(entries)


@dataclass(frozen=True)
class JudgeStats:
    judge_id: str
    mean: float
    sd: float
    count: int


def judge_stats(matrix: ScoreMatrix, lenient: bool = False) -> list[JudgeStats]:
    """Per-judge mean and unbiased sample standard deviation of raw scores.

    Judges with fewer than two scores raise InsufficientDataError, or are
    silently dropped when ``lenient``.
    """
    out = []
    for i, judge in enumerate(matrix.judges):
        row = matrix.cells[i]
        vals = row[~np.isnan(row)]
        if vals.size < 2:
            if lenient:
                continue
            raise InsufficientDataError(
                f"judge {judge!r} has {vals.size} score(s); need at least 2"
            )
        out.append(
            JudgeStats(judge, float(vals.mean()), float(vals.std(ddof=1)), int(vals.size))
        )
    return out


@dataclass
class AgreementMatrix:
    judges: list[str]
    values: np.ndarray  # symmetric, unit diagonal; NaN where undefined

    def pair(self, a: str, b: str) -> float:
        i, j = self.judges.index(a), self.judges.index(b)
        return float(self.values[i, j])


MIN_COMMON_BEVERAGES = 3


def agreement(
    matrix: ScoreMatrix,
    method: str = "spearman",
    min_common: int = MIN_COMMON_BEVERAGES,
) -> AgreementMatrix:
    """Pairwise rank correlation between judges over commonly scored
    beverages (ties mid-ranked). Pairs sharing fewer than ``min_common``
    beverages are undefined (NaN). ``method`` is "spearman" or "kendall".
    """
    if method not in ("spearman", "kendall"):
        raise ValueError(f"unknown agreement method {method!r}")
    n = len(matrix.judges)
    values = np.full((n, n), np.nan)
    filled = matrix.filled()
    for i in range(n):
        values[i, i] = 1.0
        for j in range(i + 1, n):
            common = filled[i] & filled[j]
            if common.sum() < min_common:
                continue
            x = matrix.cells[i, common]
            y = matrix.cells[j, common]
            # a constant row over the common subset has no defined rank
            # correlation; keep NaN without scipy's warning chatter
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                if method == "spearman":
                    rho = _scipy_stats.spearmanr(x, y)[0]
                else:
                    rho = _scipy_stats.kendalltau(x, y)[0]
            values[i, j] = values[j, i] = float(rho)
    return AgreementMatrix(list(matrix.judges), values)


def per_style_distribution(
    norm: NormalizedMatrix,
    dataset: Dataset,
    family_order: list[str] | None = None,
) -> dict[str, list[float]]:
    """Aggregate (mean normalized) scores grouped by style family.

    Keys follow ``family_order`` (families without beverages keep empty
    lists); scores within a family are sorted descending. Families present
    in the dataset but missing from the order are appended.
    """
    ranking = aggregate(norm)
    family_of = {b.id: b.style_family for b in dataset.beverages}
    if family_order is None:
        from .model import DEFAULT_STYLE_FAMILIES

        family_order = [f.name for f in DEFAULT_STYLE_FAMILIES]
    groups: dict[str, list[float]] = {name: [] for name in family_order}
    for entry in ranking.entries:
        family = family_of.get(entry.beverage_id)
        if family is None:
            continue
        groups.setdefault(family, []).append(entry.score)
    return groups


@dataclass(frozen=True)
class DivisiveEntry:
    beverage_id: str
    name: str
    sd: float
    score_range: float
    review_count: int


def divisiveness(
    matrix: ScoreMatrix,
    top_n: int | None = None,
    names: Mapping[str, str] | None = None,
) -> list[DivisiveEntry]:
    """Beverages ranked by sample standard deviation of their raw scores,
    descending (ties by name); max-min range is carried alongside for
    reference. Beverages with fewer than two scores are skipped."""
    names = names or {}
    entries = []
    for b, beverage_id in enumerate(matrix.beverages):
        col = matrix.cells[:, b]
        vals = col[~np.isnan(col)]
        if vals.size < 2:
            continue
        entries.append(
            DivisiveEntry(
                beverage_id=beverage_id,
                name=names.get(beverage_id, beverage_id),
                sd=float(vals.std(ddof=1)),
                score_range=float(vals.max() - vals.min()),
                review_count=int(vals.size),
            )
        )
    entries.sort(key=lambda e: (-e.sd, e.name))
    return entries[:top_n] if top_n is not None else entries


@dataclass(frozen=True)
class TagFamilyComparison:
    family: str
    real_mean: float | None
    artificial_mean: float | None
    real_count: int
    artificial_count: int
    comparable: bool
    real_at_least_artificial: bool | None


def tag_report(dataset: Dataset) -> list[TagFamilyComparison]:
    """Compare mean raw scores of real-flavour vs artificial-flavour tagged
    reviews within each style family.

    Only families with at least one tagged review appear; a family lacking
    one of the two tags is marked not comparable. The flag records the
    finding check real_mean >= artificial_mean; it is reported, never
    enforced.
    """
    family_of = {b.id: b.style_family for b in dataset.beverages}
    real: dict[str, list[float]] = {}
    artificial: dict[str, list[float]] = {}
    for review in dataset.reviews:
        family = family_of.get(review.beverage_id)
        if family is None:
            continue
        if NoteTag.REAL_FLAVOUR in review.note_tags:
            real.setdefault(family, []).append(review.raw_score)
        if NoteTag.ARTIFICIAL_FLAVOUR in review.note_tags:
            artificial.setdefault(family, []).append(review.raw_score)

    report = []
    for family in sorted(set(real) | set(artificial)):
        r = real.get(family, [])
        a = artificial.get(family, [])
        r_mean = float(np.mean(r)) if r else None
        a_mean = float(np.mean(a)) if a else None
        comparable = bool(r and a)
        report.append(
            TagFamilyComparison(
                family=family,
                real_mean=r_mean,
                artificial_mean=a_mean,
                real_count=len(r),
                artificial_count=len(a),
                comparable=comparable,
                real_at_least_artificial=(r_mean >= a_mean) if comparable else None,
            )
        )
    return report
