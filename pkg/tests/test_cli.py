import csv
import json
import os
import stat

import pytest

from beerfed import cli
from beerfed.receval import ModelRecommendations, RecommendationSet, RecommendationSlot, recommendations_to_json

CONFIG = {
    "seed": 42,
    "clock_start": 600,
    "clock_end": 1200,
    "round_duration": 5,
    "federation": [
        {"id": "A", "is_expert": True, "leader_probability": 0.1, "score_noise_sd": 0.4},
        {"id": "B", "is_expert": True, "leader_probability": 0.8, "score_noise_sd": 0.9},
        {"id": "C", "is_expert": True, "leader_probability": 0.1, "score_noise_sd": 0.5},
    ],
    "pool": [
        {
            "brewery": f"Producer {i % 6}",
            "beer_name": f"Batch {i:02d}",
            "beer_style": style,
            "abv_percent": abv,
        }
        for i, (style, abv) in enumerate(
            [
                ("West Coast IPA", 6.5),
                ("Hazy IPA", 6.0),
                ("Fruited Sour", 4.4),
                ("Gose", 4.2),
                ("Imperial Stout", 11.0),
                ("Dry Stout", 4.3),
                ("Pilsner", 4.9),
                ("Saison", 5.9),
                ("Witbier", 5.1),
                ("Belgian Tripel", 9.0),
                ("Iron Brew", 6.6),
                ("Raspberry Saison", 5.2),
                ("Pastry Stout", 10.2),
                ("Helles Lager", 4.8),
                ("Wild Ale", 6.1),
                ("Double IPA", 8.2),
                ("Cherry Ale", 5.0),
                ("Barrel Aged", 9.8),
                ("Berliner Weisse", 3.4),
                ("Oatmeal Stout", 5.4),
            ]
        )
    ],
}


def write_config(tmp_path, **overrides):
    body = dict(CONFIG)
    body.update(overrides)
    path = tmp_path / "session.json"
    path.write_text(json.dumps(body), encoding="utf-8")
    return path


def read_all(path):
    return path.read_bytes()


@pytest.fixture
def sim_outputs(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "sim"
    assert cli.main(["simulate", str(config), "--out", str(out)]) == 0
    return out


class TestSimulate:
    def test_exit_zero_and_files_present(self, sim_outputs):
        for name in ("beverages.csv", "scorecards.csv", "session_log.jsonl", "session_summary.json"):
            assert (sim_outputs / name).exists()

    def test_summary_reports_costs_over_time(self, sim_outputs):
        summary = json.loads((sim_outputs / "session_summary.json").read_text(encoding="utf-8"))
        totals = summary["costs"]["per_round_total"]
        assert len(totals) == summary["rounds"]
        assert summary["costs"]["broadcast_total"] > 0

    def test_seed_makes_runs_identical(self, tmp_path):
        config = write_config(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert cli.main(["simulate", str(config), "--seed", "7", "--out", str(out1)]) == 0
        assert cli.main(["simulate", str(config), "--seed", "7", "--out", str(out2)]) == 0
        for name in ("beverages.csv", "scorecards.csv", "session_log.jsonl", "session_summary.json"):
            assert read_all(out1 / name) == read_all(out2 / name)

    def test_seed_flag_overrides_config_seed(self, tmp_path):
        config = write_config(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        cli.main(["simulate", str(config), "--out", str(out1)])
        cli.main(["simulate", str(config), "--seed", "99", "--out", str(out2)])
        assert read_all(out1 / "session_log.jsonl") != read_all(out2 / "session_log.jsonl")

    def test_bad_probability_sum_exits_2(self, tmp_path, capsys):
        cfg = dict(CONFIG)
        cfg["federation"] = [
            {"id": "A", "is_expert": True, "leader_probability": 0.5},
            {"id": "B", "is_expert": True, "leader_probability": 0.6},
        ]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        assert cli.main(["simulate", str(path), "--out", str(tmp_path / "x")]) == 2
        assert "sum to 1" in capsys.readouterr().err

    def test_missing_config_exits_3(self, tmp_path):
        assert cli.main(["simulate", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 3

    def test_unwritable_out_exits_3(self, tmp_path):
        config = write_config(tmp_path)
        blocked = tmp_path / "blocked"
        blocked.mkdir()
        blocked.chmod(stat.S_IRUSR | stat.S_IXUSR)
        try:
            rc = cli.main(["simulate", str(config), "--out", str(blocked / "sub")])
        finally:
            blocked.chmod(0o755)
        if os.geteuid() == 0:
            pytest.skip("running as root, permission bits are not enforced")
        assert rc == 3

    def test_json_errors_mode(self, tmp_path, capsys):
        cfg = dict(CONFIG)
        cfg["federation"] = [{"id": "A", "is_expert": True, "leader_probability": 0.9}]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(cfg), encoding="utf-8")
        assert cli.main(["--json-errors", "simulate", str(path), "--out", str(tmp_path / "x")]) == 2
        line = capsys.readouterr().err.strip().splitlines()[0]
        record = json.loads(line)
        assert record["level"] == "error"
        assert record["code"] == "CONFIG"


class TestAnalyze:
    def test_eight_tables_and_report(self, sim_outputs, tmp_path):
        out = tmp_path / "rep"
        rc = cli.main(
            ["analyze", str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"), "--out-dir", str(out)]
        )
        assert rc == 0
        expected = {
            "style_counts.csv", "abv_bands.csv", "judge_stats.csv", "agreement.csv",
            "top10.csv", "bottom10.csv", "per_style.csv", "divisive.csv", "report.json",
        }
        assert {p.name for p in out.iterdir()} == expected

    def test_single_review_beverage_exits_4(self, sim_outputs, tmp_path, capsys):
        scorecards = (sim_outputs / "scorecards.csv").read_text(encoding="utf-8")
        lines = scorecards.strip().splitlines()
        victim = lines[1].split(",")[1]
        kept = [lines[0]] + [l for l in lines[1:] if l.split(",")[1] != victim]
        kept.append(f"A,{victim},3.5")
        trimmed = tmp_path / "trimmed.csv"
        trimmed.write_text("\n".join(kept) + "\n", encoding="utf-8")
        rc = cli.main(
            ["analyze", str(trimmed), str(sim_outputs / "beverages.csv"), "--out-dir", str(tmp_path / "rep")]
        )
        assert rc == 4
        assert "MISSING_REVIEWS" in capsys.readouterr().err

    def test_lenient_downgrades_to_exit_zero(self, sim_outputs, tmp_path):
        scorecards = (sim_outputs / "scorecards.csv").read_text(encoding="utf-8")
        lines = scorecards.strip().splitlines()
        victim = lines[1].split(",")[1]
        kept = [lines[0]] + [l for l in lines[1:] if l.split(",")[1] != victim]
        kept.append(f"A,{victim},3.5")
        trimmed = tmp_path / "trimmed.csv"
        trimmed.write_text("\n".join(kept) + "\n", encoding="utf-8")
        rc = cli.main(
            [
                "analyze", str(trimmed), str(sim_outputs / "beverages.csv"),
                "--out-dir", str(tmp_path / "rep"), "--lenient",
            ]
        )
        assert rc == 0
        assert (tmp_path / "rep" / "report.json").exists()

    def test_analyze_deterministic(self, sim_outputs, tmp_path):
        a, b = tmp_path / "rep_a", tmp_path / "rep_b"
        for out in (a, b):
            assert cli.main(
                ["analyze", str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"), "--out-dir", str(out)]
            ) == 0
        for name in ("report.json", "top10.csv", "agreement.csv"):
            assert read_all(a / name) == read_all(b / name)

    def test_kendall_flag(self, sim_outputs, tmp_path):
        rc = cli.main(
            [
                "analyze", str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out-dir", str(tmp_path / "rep"), "--agreement", "kendall",
            ]
        )
        assert rc == 0
        report = json.loads((tmp_path / "rep" / "report.json").read_text(encoding="utf-8"))
        assert report["meta"]["agreement_method"] == "kendall"


def make_rec_file(tmp_path, model_id, picks_by_judge):
    sets = {
        judge: RecommendationSet(
            model_id, judge, [RecommendationSlot(n, i + 1) for i, n in enumerate(picks)]
        )
        for judge, picks in picks_by_judge.items()
    }
    path = tmp_path / f"{model_id}.json"
    path.write_text(
        recommendations_to_json(ModelRecommendations(model_id, sets)), encoding="utf-8"
    )
    return path


def top_names(scorecards_csv, judge, n=5):
    rows = [r for r in csv.DictReader(scorecards_csv.read_text(encoding="utf-8").splitlines()) if r["judge_id"] == judge]
    rows.sort(key=lambda r: (-float(r["raw_score"]), r["beer_name"]))
    return [r["beer_name"] for r in rows[:n]]


class TestEvalRecs:
    @pytest.fixture
    def eval_env(self, sim_outputs, tmp_path):
        recdir = tmp_path / "recs"
        recdir.mkdir()
        judges = ["A", "B", "C"]
        tops = {j: top_names(sim_outputs / "scorecards.csv", j) for j in judges}
        make_rec_file(recdir, "model-perfect", tops)
        make_rec_file(recdir, "model-short", {j: tops[j][:4] for j in judges})
        make_rec_file(
            recdir,
            "model-dupe",
            {j: tops[j][:4] + [tops[j][0]] for j in judges},
        )
        make_rec_file(
            recdir,
            "model-offlist",
            {j: tops[j][:4] + ["Imaginary Pils"] for j in judges},
        )
        return recdir

    def test_table_shape_and_order(self, sim_outputs, tmp_path, eval_env):
        out = tmp_path / "table.csv"
        rc = cli.main(
            [
                "eval-recs", str(eval_env / "*.json"),
                str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        rows = list(csv.reader(out.read_text(encoding="utf-8").splitlines()))
        assert rows[0] == ["Model", "Mean rating", "Mean percentile", "Hit@5", "nDCG@5", "Coverage"]
        assert len(rows) == 5
        ratings = [float(r[1]) for r in rows[1:]]
        assert ratings == sorted(ratings, reverse=True)
        by_model = {r[0]: r for r in rows[1:]}
        assert by_model["model-perfect"][5] == "1.000"
        assert by_model["model-perfect"][3] == "1.000"
        assert by_model["model-short"][5] == "0.800"
        json_rows = json.loads(out.with_suffix(".json").read_text(encoding="utf-8"))
        perfect = next(r for r in json_rows if r["model"] == "model-perfect")
        assert perfect["coverage"] == 1.0

    def test_empty_glob_warns_and_exits_zero(self, sim_outputs, tmp_path, capsys):
        out = tmp_path / "table.csv"
        rc = cli.main(
            [
                "eval-recs", str(tmp_path / "nothing" / "*.json"),
                str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert "no recommendation files match" in capsys.readouterr().err
        rows = out.read_text(encoding="utf-8").splitlines()
        assert len(rows) == 1  # header only

    def test_unreadable_file_skipped_unless_strict(self, sim_outputs, tmp_path, eval_env, capsys):
        (eval_env / "broken.json").write_text("{nope", encoding="utf-8")
        out = tmp_path / "table.csv"
        rc = cli.main(
            [
                "eval-recs", str(eval_env / "*.json"),
                str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert "skipping" in capsys.readouterr().err
        assert len(out.read_text(encoding="utf-8").splitlines()) == 5

        rc = cli.main(
            [
                "eval-recs", str(eval_env / "*.json"),
                str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out", str(out), "--strict",
            ]
        )
        assert rc == 5

    def test_normalized_flag_changes_rating_scale(self, sim_outputs, tmp_path, eval_env):
        out = tmp_path / "table.csv"
        rc = cli.main(
            [
                "eval-recs", str(eval_env / "model-perfect.json"),
                str(sim_outputs / "scorecards.csv"), str(sim_outputs / "beverages.csv"),
                "--out", str(out), "--normalized",
            ]
        )
        assert rc == 0
        row = list(csv.reader(out.read_text(encoding="utf-8").splitlines()))[1]
        assert float(row[1]) <= 1.0  # ratings now on the normalized scale
