import numpy as np
import pytest
from hypothesis import given, strategies as st

from beerfed.errors import DegenerateRowError, InsufficientDataError
from beerfed.model import Beverage, Dataset, NoteTag, Review
from beerfed.scoring import (
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
from genutil import random_dataset
from oracles import (
    oracle_aggregate,
    oracle_normalize,
    oracle_sample_sd,
    oracle_spearman,
)


def matrix_from_rows(rows, judges=None, beverages=None):
    cells = np.array(rows, dtype=float)
    judges = judges or [f"J{i}" for i in range(cells.shape[0])]
    beverages = beverages or [f"b{i}" for i in range(cells.shape[1])]
    return ScoreMatrix(judges, beverages, cells)


nan = float("nan")


class TestNormalize:
    def test_endpoints_map_to_zero_and_one(self):
        m = matrix_from_rows([[1.0, 5.0, 3.8]])
        n = normalize(m)
        assert n.cells[0, 0] == 0.0
        assert n.cells[0, 1] == 1.0

    def test_known_value_is_exact(self):
        m = matrix_from_rows([[1.0, 5.0, 3.8]])
        assert normalize(m).cells[0, 2] == 0.7

    def test_uses_each_judges_own_scale(self):
        m = matrix_from_rows([[2.0, 4.0], [1.0, 5.0]])
        n = normalize(m)
        assert n.cells[0].tolist() == [0.0, 1.0]
        assert n.cells[1].tolist() == [0.0, 1.0]

    def test_degenerate_row_raises(self):
        m = matrix_from_rows([[4.0, 4.0, 4.0]])
        with pytest.raises(DegenerateRowError) as exc:
            normalize(m)
        assert exc.value.judges == ["J0"]

    def test_degenerate_row_lenient_maps_to_half(self):
        m = matrix_from_rows([[4.0, 4.0, 4.0]])
        n = normalize(m, lenient=True)
        assert n.cells[0].tolist() == [0.5, 0.5, 0.5]

    def test_missing_cells_stay_missing(self):
        m = matrix_from_rows([[1.0, nan, 5.0]])
        n = normalize(m)
        assert np.isnan(n.cells[0, 1])

    def test_zscore_variant(self):
        m = matrix_from_rows([[3.0, 4.0, 5.0]])
        n = normalize(m, method="zscore")
        assert n.cells[0].tolist() == [-1.0, 0.0, 1.0]

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            normalize(matrix_from_rows([[1.0, 2.0]]), method="robust")

    @given(
        st.lists(
            st.integers(min_value=10, max_value=50), min_size=2, max_size=12
        ).filter(lambda xs: len(set(xs)) >= 2)
    )
    def test_order_preserved_and_range_attained(self, tenths):
        raw = [t / 10 for t in tenths]
        m = matrix_from_rows([raw])
        n = normalize(m)
        out = n.cells[0]
        for i in range(len(raw)):
            for j in range(len(raw)):
                assert np.sign(raw[i] - raw[j]) == np.sign(out[i] - out[j])
        assert out.min() == 0.0
        assert out.max() == 1.0
        assert ((0.0 <= out) & (out <= 1.0)).all()


class TestAggregate:
    def test_unanimous_top_score(self):
        m = matrix_from_rows([[1.0], [1.0], [1.0]])
        # on a normalized matrix 1.0 everywhere stays 1.0
        agg = aggregate(matrix_from_rows([[1.0, 0.2], [1.0, 0.4]]))
        assert agg.entries[0].score == 1.0

    def test_unnormalised_mean_matches_hand_arithmetic(self):
        m = matrix_from_rows([[4.0], [4.1], [2.5]], beverages=["parfait"])
        agg = aggregate(m)
        assert agg.entries[0].score == pytest.approx(10.6 / 3, abs=1e-12)

    def test_missing_cell_means_over_remaining(self):
        m = matrix_from_rows([[0.5, 0.2], [nan, 0.4], [0.7, 0.9]])
        agg = aggregate(m)
        by_id = {e.beverage_id: e for e in agg.entries}
        assert by_id["b0"].score == pytest.approx(0.6)
        assert by_id["b0"].review_count == 2

    def test_ties_break_by_name_ascending(self):
        m = matrix_from_rows([[0.5, 0.5, 0.1]], beverages=["x", "a", "m"])
        names = {"x": "Zephyr", "a": "Anthem", "m": "Mirage"}
        agg = aggregate(m, names)
        assert [e.name for e in agg.entries] == ["Anthem", "Zephyr", "Mirage"]

    def test_aggregate_within_judge_bounds(self, rng):
        ds = random_dataset(rng, n_judges=4, n_beverages=10, missing_rate=0.2)
        m = build_score_matrix(ds)
        n = normalize(m, lenient=True)
        for e in aggregate(n).entries:
            col = n.cells[:, n.beverages.index(e.beverage_id)]
            vals = col[~np.isnan(col)]
            assert vals.min() - 1e-12 <= e.score <= vals.max() + 1e-12


class TestJudgeStats:
    def test_hand_case(self):
        m = matrix_from_rows([[3.0, 4.0, 5.0]])
        (s,) = judge_stats(m)
        assert s.mean == 4.0
        assert s.sd == 1.0

    def test_constant_row_has_zero_sd(self):
        m = matrix_from_rows([[4.0, 4.0, 4.0]])
        (s,) = judge_stats(m)
        assert (s.mean, s.sd) == (4.0, 0.0)

    def test_insufficient_data_raises(self):
        m = matrix_from_rows([[4.0, nan, nan]])
        with pytest.raises(InsufficientDataError):
            judge_stats(m)
        assert judge_stats(m, lenient=True) == []


class TestAgreement:
    def test_unit_diagonal(self):
        m = matrix_from_rows([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0]])
        a = agreement(m)
        assert a.values[0, 0] == 1.0 and a.values[1, 1] == 1.0

    def test_reversed_rankings_give_minus_one(self):
        m = matrix_from_rows([[1.0, 2.0, 3.0, 4.0, 5.0], [5.0, 4.0, 3.0, 2.0, 1.0]])
        assert agreement(m).pair("J0", "J1") == pytest.approx(-1.0)

    def test_one_swap_gives_point_nine(self):
        m = matrix_from_rows([[1.0, 2.0, 3.0, 4.0, 5.0], [1.0, 2.0, 3.0, 5.0, 4.0]])
        assert agreement(m).pair("J0", "J1") == pytest.approx(0.9, abs=1e-12)

    def test_matches_independent_formula_with_ties(self, rng):
        for _ in range(20):
            x = [int(v) / 10 for v in rng.integers(10, 51, size=9)]
            y = [int(v) / 10 for v in rng.integers(10, 51, size=9)]
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            m = matrix_from_rows([x, y])
            assert agreement(m).pair("J0", "J1") == pytest.approx(
                oracle_spearman(x, y), abs=1e-12
            )

    def test_too_few_common_beverages_undefined(self):
        m = matrix_from_rows([[1.0, 2.0, nan, nan], [nan, nan, 3.0, 4.0]])
        assert np.isnan(agreement(m).pair("J0", "J1"))

    def test_symmetric_and_permutation_invariant(self, rng):
        ds = random_dataset(rng, n_judges=4, n_beverages=9)
        m = build_score_matrix(ds)
        a = agreement(m)
        assert np.allclose(a.values, a.values.T, equal_nan=True)
        perm = rng.permutation(len(m.beverages))
        shuffled = ScoreMatrix(m.judges, [m.beverages[i] for i in perm], m.cells[:, perm])
        assert np.allclose(agreement(shuffled).values, a.values, equal_nan=True)

    def test_kendall_flag(self):
        m = matrix_from_rows([[1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]])
        assert agreement(m, method="kendall").pair("J0", "J1") == pytest.approx(1.0)


class TestPerStyleDistribution:
    def test_grouping_and_order(self, tiny_dataset):
        m = build_score_matrix(tiny_dataset)
        n = normalize(m)
        groups = per_style_distribution(n, tiny_dataset)
        assert len(groups["Stout & porter"]) == 2
        assert groups["Stout & porter"] == sorted(groups["Stout & porter"], reverse=True)
        assert groups["Gose"] == []
        assert len(groups["Saison & farmhouse"]) == 1

    def test_stouts_rank_first_in_fixture(self, tiny_dataset):
        # cross-checked with an independent group-by over the oracle pipeline
        m = build_score_matrix(tiny_dataset)
        cells = {
            j: {
                b: m.cells[i, k]
                for k, b in enumerate(m.beverages)
                if not np.isnan(m.cells[i, k])
            }
            for i, j in enumerate(m.judges)
        }
        o_agg = oracle_aggregate(oracle_normalize(cells))
        fam = {b.id: b.style_family for b in tiny_dataset.beverages}
        fam_means = {}
        for b, v in o_agg.items():
            fam_means.setdefault(fam[b], []).append(v)
        fam_means = {f: sum(v) / len(v) for f, v in fam_means.items()}
        assert max(fam_means, key=fam_means.get) == "Stout & porter"

        groups = per_style_distribution(normalize(m), tiny_dataset)
        means = {f: sum(v) / len(v) for f, v in groups.items() if v}
        assert max(means, key=means.get) == "Stout & porter"


class TestDivisiveness:
    def test_hand_values(self):
        m = matrix_from_rows([[4.0, 1.0], [4.1, 5.0], [2.5, nan]])
        entries = divisiveness(m)
        by_id = {e.beverage_id: e for e in entries}
        assert by_id["b0"].sd == pytest.approx(0.8963, abs=5e-4)
        assert by_id["b0"].sd == pytest.approx(oracle_sample_sd([4.0, 4.1, 2.5]), abs=1e-12)
        assert by_id["b1"].sd == pytest.approx(2.8284, abs=5e-4)
        assert entries[0].beverage_id == "b1"  # max spread ranks first
        assert by_id["b1"].score_range == pytest.approx(4.0)

    def test_identical_scores_rank_last(self):
        m = matrix_from_rows([[4.0, 3.0], [4.0, 5.0]])
        entries = divisiveness(m)
        assert entries[-1].beverage_id == "b0"
        assert entries[-1].sd == 0.0

    def test_top_n_slice(self):
        m = matrix_from_rows([[1.0, 2.0, 3.0], [5.0, 3.0, 3.2]])
        assert len(divisiveness(m, top_n=2)) == 2

    def test_permutation_invariant(self, rng):
        ds = random_dataset(rng, n_judges=3, n_beverages=8)
        m = build_score_matrix(ds)
        base = divisiveness(m)
        perm = rng.permutation(len(m.beverages))
        shuffled = ScoreMatrix(m.judges, [m.beverages[i] for i in perm], m.cells[:, perm])
        assert divisiveness(shuffled) == base


class TestTagReport:
    def test_empty_without_tags(self):
        ds = Dataset(
            beverages=[Beverage("b", "P", "B", "IPA", "Pale ale & IPA", 5.0)],
            reviews=[Review("A", "b", 3.0), Review("B", "b", 4.0)],
            judges=["A", "B"],
        )
        assert tag_report(ds) == []

    def test_real_vs_artificial_flag(self, tiny_dataset):
        report = tag_report(tiny_dataset)
        by_family = {t.family: t for t in report}
        sour = by_family["Sour & wild ale"]
        assert sour.real_mean == pytest.approx(4.8)
        assert sour.artificial_mean == pytest.approx(2.9)
        assert sour.comparable
        assert sour.real_at_least_artificial is True

    def test_equal_means_flag_true(self):
        ds = Dataset(
            beverages=[Beverage("b", "P", "B", "Sour", "Sour & wild ale", 5.0)],
            reviews=[
                Review("A", "b", 4.0, note_tags=frozenset({NoteTag.REAL_FLAVOUR})),
                Review("B", "b", 4.0, note_tags=frozenset({NoteTag.ARTIFICIAL_FLAVOUR})),
            ],
            judges=["A", "B"],
        )
        (row,) = tag_report(ds)
        assert row.real_at_least_artificial is True

    def test_one_sided_family_not_comparable(self):
        ds = Dataset(
            beverages=[Beverage("b", "P", "B", "Gose", "Gose", 4.5)],
            reviews=[
                Review("A", "b", 4.0, note_tags=frozenset({NoteTag.REAL_FLAVOUR})),
                Review("B", "b", 3.0),
            ],
            judges=["A", "B"],
        )
        (row,) = tag_report(ds)
        assert not row.comparable
        assert row.real_at_least_artificial is None
        assert row.artificial_mean is None


class TestSmallInstanceOracle:
    def test_normalize_aggregate_matches_brute_force(self, rng):
        for _ in range(50):
            ds = random_dataset(
                rng,
                n_judges=int(rng.integers(2, 6)),
                n_beverages=int(rng.integers(2, 9)),
                missing_rate=0.25,
            )
            m = build_score_matrix(ds)
            cells = {
                j: {
                    b: float(m.cells[i, k])
                    for k, b in enumerate(m.beverages)
                    if not np.isnan(m.cells[i, k])
                }
                for i, j in enumerate(m.judges)
            }
            try:
                expected = oracle_aggregate(oracle_normalize(cells))
            except ValueError:
                with pytest.raises(DegenerateRowError):
                    normalize(m)
                continue
            got = {e.beverage_id: e.score for e in aggregate(normalize(m)).entries}
            assert got.keys() == expected.keys()
            for b in expected:
                assert got[b] == pytest.approx(expected[b], abs=1e-12)
