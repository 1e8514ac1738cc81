import json
import logging

import numpy as np
import pytest

from vmtd import harness
from vmtd.config import ExperimentConfig
from vmtd.exceptions import ConfigError
from vmtd.harness import CurveSummary
from vmtd.prediction import rate_at


def evaluation_config(**kwargs):
    data = {
        "kind": "evaluation",
        "mode": "on",
        "algorithms": ("TD", "VMTD"),
        "schedule": {"kind": "constant", "alpha0": 0.1},
        "runs": 3,
        "horizon": 50,
        "theta0": [1.0],
    }
    data.update(kwargs)
    return ExperimentConfig(**data)


def first_below(summary, threshold):
    return int(np.argmax(summary.mean < threshold))


class TestEvaluation:
    def test_theta_error_is_parameter_norm(self):
        config = evaluation_config()
        record = harness.evaluation_run(config, config.algorithms[0], 0)
        assert record.series.shape == (50,)
        assert record.series[-1] == pytest.approx(
            np.linalg.norm(record.learner.theta)
        )

    def test_runs_use_different_streams(self):
        records = harness.execute_runs(evaluation_config(algorithms=["TD"]))
        assert [r.seed for r in records] == [0, 1, 2]
        assert not np.array_equal(records[0].series, records[1].series)

    def test_aggregation_matches_two_pass_recomputation(self):
        records = harness.execute_runs(evaluation_config())
        summaries = harness.aggregate(records)
        assert [s.algorithm for s in summaries] == ["TD", "VMTD"]
        for summary in summaries:
            runs = [
                r.series
                for r in records
                if r.algorithm == summary.algorithm
            ]
            n = len(runs)
            mean = sum(runs) / n
            std = np.sqrt(sum((x - mean) ** 2 for x in runs) / n)
            assert summary.n_runs == n == 3
            assert np.allclose(summary.mean, mean)
            assert np.allclose(summary.std, std)

    def test_aggregate_ignores_record_order(self):
        records = harness.execute_runs(evaluation_config())
        a = harness.aggregate(records)
        b = harness.aggregate(list(reversed(records)))
        for x, y in zip(a, b):
            assert np.array_equal(x.mean, y.mean)

    def test_singular_fixed_point_falls_back_to_rmsve(self, caplog):
        config = evaluation_config(
            algorithms=["VMTD"],
            runs=1,
            setting={
                "mdp": {
                    "transition": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
                    "gamma": 0.9,
                },
                "features": {"kind": "tabular", "n_states": 2},
                "behavior": {"probs": [[0.5, 0.5], [0.5, 0.5]]},
            },
            theta0=[1.0, 2.0],
        )
        with caplog.at_level(logging.WARNING, logger="vmtd.harness"):
            record = harness.evaluation_run(config, config.algorithms[0], 0)
        assert "rmsve" in caplog.text
        theta = record.learner.theta
        assert record.series[-1] == pytest.approx(
            np.sqrt(0.5 * theta[0] ** 2 + 0.5 * theta[1] ** 2)
        )

    def test_off_policy_td_diverges(self):
        config = evaluation_config(
            mode="off", algorithms=["TD"], runs=5, horizon=2000
        )
        (summary,) = harness.run_evaluation(config)
        assert summary.mean[-1] > 1.0

    def test_wrong_kind(self):
        with pytest.raises(ConfigError):
            harness.run_control(evaluation_config())


@pytest.mark.slow
class TestEvaluationConvergence:
    def test_speed_follows_minimum_eigenvalue(self):
        # Minimum eigenvalues: TD 0.475 > VMTD 0.25 > TDC 0.09 > VMTDC 0.025.
        config = evaluation_config(
            algorithms=["TD", "VMTD", "TDC", "VMTDC"],
            runs=20,
            horizon=1500,
        )
        steps = {
            s.algorithm: first_below(s, 0.1)
            for s in harness.run_evaluation(config)
        }
        assert 0 < steps["TD"] < steps["VMTD"] < steps["TDC"] < steps["VMTDC"]

    def test_off_policy_split_at_default_ratios(self):
        config = evaluation_config(
            mode="off",
            algorithms=["TD", "TDC", "ETD", "VMTD", "VMTDC", "VMETD"],
            runs=20,
            horizon=20_000,
        )
        final = {
            s.algorithm: s.mean[-1] for s in harness.run_evaluation(config)
        }
        for name in ("TDC", "ETD", "VMTD"):
            assert final[name] < 0.05, name
        for name in ("TD", "VMTDC", "VMETD"):
            assert final[name] == np.inf, name

    def test_off_policy_vmetd_converges_with_frozen_omega(self):
        config = evaluation_config(
            mode="off",
            algorithms=["VMETD"],
            schedule={"kind": "constant", "alpha0": 0.1, "beta0": 0.0},
            runs=20,
            horizon=20_000,
        )
        (summary,) = harness.run_evaluation(config)
        assert summary.mean[-1] < 0.05

    def test_on_policy_emphatic_converge(self):
        config = evaluation_config(
            algorithms=["ETD", "VMETD"],
            schedule={"kind": "constant", "alpha0": 0.01},
            horizon=8000,
        )
        for summary in harness.run_evaluation(config):
            assert summary.mean[-1] < 0.05, summary.algorithm


class TestControl:
    def config(self, **kwargs):
        data = {
            "kind": "control",
            "env": "cliffwalking",
            "algorithms": ("Q", "VMQ"),
            "schedules": {"VMQ": {"kind": "constant", "beta0": 0.0}},
            "runs": 2,
            "horizon": 20,
        }
        data.update(kwargs)
        return ExperimentConfig(**data)

    def test_vmq_without_omega_reproduces_q(self):
        records = harness.execute_runs(self.config())
        by_key = {(r.algorithm, r.seed): r for r in records}
        for seed in range(2):
            q, vmq = by_key["Q", seed], by_key["VMQ", seed]
            assert np.array_equal(q.series, vmq.series)
            assert np.array_equal(q.learner.theta, vmq.learner.theta)

    def test_episode_steps_metric(self):
        config = self.config(
            algorithms=["Q"], metric="episode_steps", runs=1, horizon=5
        )
        (record,) = harness.execute_runs(config)
        assert record.series.shape == (5,)
        assert np.all(record.series >= 13)

    def test_linear_decay_counts_episodes(self, monkeypatch):
        indices = []

        def recording_rate_at(schedule, k):
            indices.append(k)
            return rate_at(schedule, k)

        monkeypatch.setattr(harness, "rate_at", recording_rate_at)
        config = self.config(
            algorithms=["Q"],
            schedule={"kind": "linear-decay", "alpha0": 0.1},
            schedules={},
            runs=1,
            horizon=3,
        )
        assert config.schedule_for("Q").total_steps == 3
        (record,) = harness.execute_runs(config)
        assert indices == [0, 1, 2]
        # The last episode still learns.
        assert rate_at(config.schedule_for("Q"), indices[-1]).alpha > 0
        assert record.learner.theta.min() < 0

    def test_function_approximation_smoke(self):
        config = self.config(
            env="mountaincar",
            env_params={"max_steps": 30},
            algorithms=["VMSarsa", "VMGQ"],
            schedules={},
            runs=1,
            horizon=2,
            metric="episode_steps",
        )
        for summary in harness.run_control(config):
            assert summary.mean.tolist() == [30.0, 30.0]


class TestDeterminism:
    def test_repeated_runs_write_identical_csv(self, tmp_path):
        config = evaluation_config(mode="off")
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            harness.write_csv(harness.run_evaluation(config), path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_parallel_matches_serial(self):
        serial = harness.run_evaluation(evaluation_config())
        parallel = harness.run_evaluation(evaluation_config(workers=2))
        for a, b in zip(serial, parallel):
            assert a.algorithm == b.algorithm
            assert np.array_equal(a.mean, b.mean)
            assert np.array_equal(a.std, b.std)


class TestPersistence:
    def summary(self, name, values):
        values = np.asarray(values, dtype=float)
        return CurveSummary(name, values, values / 7, 4)

    def test_single_curve_lines(self, tmp_path):
        path = tmp_path / "curve.csv"
        harness.write_csv([self.summary("TD", [1.0, 0.5, 0.25])], path)
        text = path.read_bytes().decode("utf-8")
        lines = text.split("\n")
        assert lines[0] == "algorithm,index,mean,std,n_runs"
        assert len(text.splitlines()) == 4
        assert "\r" not in text

    def test_two_curves_round_trip(self, tmp_path, rng):
        path = tmp_path / "out" / "curves.csv"
        summaries = [
            self.summary("VMTD", rng.normal(size=6)),
            self.summary("TD", rng.normal(size=6)),
        ]
        harness.write_csv(summaries, path)
        assert len(path.read_text(encoding="utf-8").splitlines()) == 13
        restored = harness.read_csv(path)
        assert [s.algorithm for s in restored] == ["VMTD", "TD"]
        for a, b in zip(summaries, restored):
            assert np.array_equal(a.mean, b.mean)
            assert np.array_equal(a.std, b.std)
            assert a.n_runs == b.n_runs

    def test_infinite_values_round_trip(self, tmp_path):
        path = tmp_path / "curves.csv"
        harness.write_csv([self.summary("TD", [1.0, np.inf])], path)
        (restored,) = harness.read_csv(path)
        assert restored.mean[-1] == np.inf

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("", encoding="utf-8")
        path = blocker / "curves.csv"
        with pytest.raises(OSError) as info:
            harness.write_csv([self.summary("TD", [1.0])], path)
        assert str(path) in str(info.value)

    def test_nothing_to_write(self, tmp_path):
        with pytest.raises(ConfigError):
            harness.write_csv([], tmp_path / "curves.csv")

    def test_plot_data(self, tmp_path):
        summaries = [
            self.summary("TD", [3.0, 2.0]),
            self.summary("VMTD", [3.0, 1.0]),
        ]
        written = harness.emit_plot_data(summaries, tmp_path, metric="err")
        assert [p.rsplit("/", 1)[-1] for p in written] == [
            "TD.csv",
            "VMTD.csv",
            "manifest.json",
        ]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["metric"] == "err"
        assert [s["file"] for s in manifest["series"]] == [
            "TD.csv",
            "VMTD.csv",
        ]
        lines = (tmp_path / "VMTD.csv").read_text().splitlines()
        assert lines[0] == "index,mean,std"
        assert len(lines) == 3


class TestAnalyze:
    def test_two_state_table(self):
        table = harness.run_analyze(ExperimentConfig(kind="analyze"))
        assert len(table) == 12
        assert list(table.columns[:4]) == [
            "algorithm",
            "policy_mode",
            "min_sym_eig",
            "fixed_point_norm",
        ]
        assert list(table["policy_mode"].unique()) == ["on", "off"]
        values = {
            (row.policy_mode, row.algorithm): row.min_sym_eig
            for row in table.itertuples()
        }
        assert values["on", "VMETD"] == pytest.approx(2.5, abs=1e-10)
        assert values["off", "TD"] == pytest.approx(-0.2, abs=1e-10)
        assert {float(x) for x in table["fixed_point"]} == {0.0}
        assert np.all(table["fixed_point_norm"] == 0.0)

    def test_single_mode(self):
        table = harness.run_analyze(
            ExperimentConfig(kind="analyze"), modes=["off"]
        )
        assert list(table["algorithm"]) == [
            "TD",
            "TDC",
            "ETD",
            "VMTD",
            "VMTDC",
            "VMETD",
        ]

    def test_rank_deficient_rows(self):
        config = ExperimentConfig.from_dict(
            {
                "kind": "analyze",
                "algorithms": ["TD", "TDC"],
                "setting": {
                    "mdp": {
                        "transition": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]],
                        "gamma": 0.9,
                    },
                    "features": {
                        "kind": "explicit-matrix",
                        "phi": [[1, 1], [2, 2]],
                    },
                    "behavior": {"probs": [[0.5, 0.5], [0.5, 0.5]]},
                },
            }
        )
        table = harness.run_analyze(config)
        notes = dict(zip(table["algorithm"], table["note"]))
        norms = dict(zip(table["algorithm"], table["fixed_point_norm"]))
        assert np.isnan(norms["TD"]) and np.isnan(norms["TDC"])
        assert notes["TD"] == "rank-deficient no fixed point"
        assert notes["TDC"] == "singular C"

    def test_format_table(self):
        text = harness.format_table(
            harness.run_analyze(ExperimentConfig(kind="analyze"))
        )
        assert "0.09025" in text
        assert "VMETD" in text
