import io
import json
import os

import pytest

from oraclebo import harness
from oraclebo.harness import (
    AggregateResult,
    ConfigError,
    ExperimentConfig,
    ModeAggregate,
    audio_sim_config_from_dict,
    cli_main,
    emit_csv,
    experiment_config_from_dict,
    run_experiment,
)

TINY = dict(
    objective="P1",
    n_high=16,
    n_low=2,
    f_evals=6,
    r_init=3,
    q=2,
    n_mc=24,
    n_raw=24,
    l_count=2,
    modes=("oraclebo", "alebo_plain"),
    n_repeats=2,
    base_seed=0,
)


def tiny_config(**kw):
    cfg = dict(TINY)
    cfg.update(kw)
    return ExperimentConfig(**cfg)


class TestExperimentConfig:
    def test_unknown_objective_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(objective="P7")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ConfigError):
            tiny_config(modes=("oraclebo", "random_search"))

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            experiment_config_from_dict({"objective": "P1", "zeal": 11})

    def test_missing_objective_rejected(self):
        with pytest.raises(ConfigError):
            experiment_config_from_dict({"n_high": 10})

    def test_lists_coerced(self):
        cfg = experiment_config_from_dict({"objective": "P1", "modes": ["oraclebo"], "l_selection": [1, 2]})
        assert cfg.modes == ("oraclebo",)
        assert cfg.l_selection == (1, 2)


class TestRunExperiment:
    def test_single_repeat_equals_trace(self):
        cfg = tiny_config(modes=("oraclebo",), n_repeats=1)
        result = run_experiment(cfg)
        agg = result.mode("oraclebo")
        assert agg.iterations == list(range(1, 7))
        assert agg.median_regret == agg.mean_regret
        assert agg.q25 == agg.q75 == agg.median_regret
        assert agg.failures == 0
        assert len(agg.final_regrets) == 1

    def test_medians_bounded_by_traces(self):
        result = run_experiment(tiny_config())
        for agg in result.modes:
            for i in range(len(agg.iterations)):
                assert agg.q25[i] <= agg.median_regret[i] <= agg.q75[i]

    def test_equal_total_budget_across_modes(self):
        result = run_experiment(tiny_config())
        hybrid = result.mode("oraclebo")
        plain = result.mode("alebo_plain")
        assert hybrid.qf_used[-1] + hybrid.qd_used[-1] == plain.qf_used[-1] + plain.qd_used[-1]
        assert len(plain.iterations) == len(hybrid.iterations) + TINY["l_count"]

    def test_median_regret_nonincreasing(self):
        result = run_experiment(tiny_config(n_repeats=3))
        for agg in result.modes:
            assert all(b <= a + 1e-12 for a, b in zip(agg.median_regret, agg.median_regret[1:]))

    def test_parallel_matches_serial(self):
        cfg = tiny_config()
        old = os.environ.get("ORACLEBO_THREADS")
        try:
            os.environ["ORACLEBO_THREADS"] = "1"
            serial = io.StringIO()
            emit_csv(run_experiment(cfg), serial)
            os.environ["ORACLEBO_THREADS"] = "2"
            parallel = io.StringIO()
            emit_csv(run_experiment(cfg), parallel)
        finally:
            if old is None:
                os.environ.pop("ORACLEBO_THREADS", None)
            else:
                os.environ["ORACLEBO_THREADS"] = old
        assert serial.getvalue() == parallel.getvalue()


class TestEmitCsv:
    def test_empty_result_header_only(self):
        buf = io.StringIO()
        emit_csv(AggregateResult(tiny_config(), []), buf)
        assert buf.getvalue() == harness.CSV_HEADER + "\n"

    def test_one_row(self):
        agg = ModeAggregate("oraclebo", [1], [0.5], [0.5], [0.25], [0.75], [1], [2], [0.5])
        buf = io.StringIO()
        emit_csv(AggregateResult(tiny_config(), [agg]), buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2
        assert lines[1] == "1,oraclebo,0.5,0.5,0.25,0.75,1,2"

    def test_regret_round_trips(self):
        values = [0.397887, 0.123456789, 83.0, 0.000123456]
        agg = ModeAggregate(
            "oraclebo",
            list(range(1, len(values) + 1)),
            values,
            values,
            values,
            values,
            [1] * len(values),
            [0] * len(values),
            values,
        )
        buf = io.StringIO()
        emit_csv(AggregateResult(tiny_config(), [agg]), buf)
        for line, expected in zip(buf.getvalue().splitlines()[1:], values):
            parsed = float(line.split(",")[2])
            assert abs(parsed - expected) <= 1e-6 * max(1.0, abs(expected))

    def test_lf_endings(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_csv(AggregateResult(tiny_config(), []), path)
        assert b"\r" not in path.read_bytes()

    def test_byte_identical_across_runs(self):
        cfg = tiny_config()
        a, b = io.StringIO(), io.StringIO()
        emit_csv(run_experiment(cfg), a)
        emit_csv(run_experiment(cfg), b)
        assert a.getvalue() == b.getvalue()


class TestAudioSimConfig:
    def test_defaults(self):
        cfg = audio_sim_config_from_dict({})
        assert cfg.scene.budget == 30
        assert cfg.n_repeats == 5

    def test_unknown_scene_key_rejected(self):
        with pytest.raises(ConfigError):
            audio_sim_config_from_dict({"scene": {"loudness": 3}})

    def test_budget_below_l_rejected(self):
        with pytest.raises(ConfigError):
            audio_sim_config_from_dict({"scene": {"budget": 3, "l_count": 5}})

    def test_missing_profile_rejected(self):
        with pytest.raises(ConfigError, match="not found"):
            audio_sim_config_from_dict(
                {"scene": {"corruption_kind": "profile", "profile_path": "/nope/x.txt"}}
            )


class TestCli:
    def _write_cfg(self, tmp_path, payload):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(payload))
        return str(path)

    def test_bench_produces_csv(self, tmp_path):
        cfg_path = self._write_cfg(tmp_path, dict(TINY, modes=["oraclebo"]))
        code = cli_main(["bench", "--config", cfg_path, "--out-dir", str(tmp_path / "out")])
        assert code == 0
        assert (tmp_path / "out" / "regret.csv").exists()

    def test_seed_changes_output(self, tmp_path):
        cfg_path = self._write_cfg(tmp_path, dict(TINY, modes=["oraclebo"], n_repeats=1))
        assert cli_main(["bench", "--config", cfg_path, "--seed", "1", "--out-dir", str(tmp_path / "a")]) == 0
        assert cli_main(["bench", "--config", cfg_path, "--seed", "2", "--out-dir", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "regret.csv").read_text()
        b = (tmp_path / "b" / "regret.csv").read_text()
        assert a != b

    def test_unknown_flag_exits_2(self, capsys):
        assert cli_main(["bench", "--frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err.lower()

    def test_unknown_command_exits_2(self):
        assert cli_main(["dance"]) == 2

    def test_missing_config_exits_2(self, tmp_path, capsys):
        assert cli_main(["bench", "--config", str(tmp_path / "nope.json")]) == 2

    def test_bad_config_exits_2(self, tmp_path):
        cfg_path = self._write_cfg(tmp_path, {"objective": "P9"})
        assert cli_main(["bench", "--config", cfg_path]) == 2

    def test_mode_flag_overrides_config(self, tmp_path):
        cfg_path = self._write_cfg(tmp_path, dict(TINY, n_repeats=1))
        out = tmp_path / "out"
        assert cli_main(["bench", "--config", cfg_path, "--mode", "oraclebo", "--out-dir", str(out)]) == 0
        body = (out / "regret.csv").read_text()
        assert "alebo_plain" not in body
        assert "oraclebo" in body

    def test_profile_check_ok(self):
        assert cli_main(["profile-check", "profiles/mild_sloping.txt"]) == 0

    def test_profile_check_names_missing_frequency(self, tmp_path, capsys):
        path = tmp_path / "short.txt"
        path.write_text("500,-10\n1000,-10\n2000,-10\n3000,-10\n4000,-10\n6000,-10\n")
        assert cli_main(["profile-check", str(path)]) == 2
        assert "8000" in capsys.readouterr().err

    def test_audio_sim_small(self, tmp_path):
        cfg_path = self._write_cfg(
            tmp_path,
            {
                "scene": {
                    "n_bins": 40,
                    "budget": 7,
                    "l_count": 2,
                    "n_low": 2,
                    "q": 2,
                    "n_mc": 16,
                    "n_raw": 16,
                    "r_init": 2,
                },
                "n_repeats": 1,
            },
        )
        code = cli_main(["audio-sim", "--config", cfg_path, "--out-dir", str(tmp_path / "out")])
        assert code == 0
        results = json.loads((tmp_path / "out" / "audio_sim.json").read_text())
        assert len(results["per_seed"]) == 1
        assert (tmp_path / "out" / "audio_sim.csv").exists()

    def test_emit_replay(self, tmp_path):
        cfg_path = self._write_cfg(
            tmp_path,
            {
                "scene": {
                    "n_bins": 40,
                    "budget": 6,
                    "l_count": 2,
                    "n_low": 2,
                    "q": 2,
                    "n_mc": 16,
                    "n_raw": 16,
                    "r_init": 2,
                },
                "n_repeats": 1,
            },
        )
        replay_path = tmp_path / "replay.json"
        assert cli_main(["audio-sim", "--config", cfg_path, "--emit-replay", str(replay_path)]) == 0
        fixture = json.loads(replay_path.read_text())
        assert len(fixture["scores"]) == 4
        assert fixture["scene"]["budget"] == 6
        assert len(fixture["facts"]) == 2
