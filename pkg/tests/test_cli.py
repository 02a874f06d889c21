import csv
import io
import json

import pytest
from click.testing import CliRunner

from copbalance.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, *args):
    return runner.invoke(main, [str(a) for a in args])


class TestAnalyzeCommand:
    def test_full_artifact_set(self, runner, tmp_path, ellipse_fixture):
        trial = tmp_path / "trial.txt"
        trial.write_text(ellipse_fixture.text)
        out = tmp_path / "out"
        result = run(runner, "--out", out, "--filter-cutoff", "none",
                     "analyze", trial)
        assert result.exit_code == 0, result.output
        for name in ("trajectory.csv", "poincare.json", "conic.json",
                     "distances.csv", "occupancy.json", "occupancy.csv",
                     "analysis.json"):
            assert (out / name).is_file(), name
        assert "occupancy" in result.output
        conic = json.loads((out / "conic.json").read_text())
        expected = ellipse_fixture.conic.coeffs
        assert max(abs(conic[k] - v) for k, v in zip("abcdef", expected)) < 1e-6
        occ = json.loads((out / "occupancy.json").read_text())
        assert occ["HP"] == 1.0

    def test_distance_csv_row_count(self, runner, tmp_path, quiet_text):
        trial = tmp_path / "quiet.txt"
        trial.write_text(quiet_text)
        out = tmp_path / "out"
        result = run(runner, "--out", out, "analyze", trial)
        assert result.exit_code == 0, result.output
        rows = (out / "distances.csv").read_text().splitlines()
        assert len(rows) == 6001  # header + one per sample

    def test_missing_file_exits_2_and_names_path(self, runner, tmp_path):
        result = run(runner, "analyze", tmp_path / "nope.txt")
        assert result.exit_code == 2
        assert "nope.txt" in result.output

    def test_malformed_trial_exits_3(self, runner, tmp_path):
        trial = tmp_path / "bad.txt"
        trial.write_text("# id: X\n0.0 0 0 700 0 0 0\n0.01 0 0\n")
        result = run(runner, "--out", tmp_path / "o", "analyze", trial)
        assert result.exit_code == 3
        assert "RowArity" in result.output

    def test_physionet_format_wrench_only(self, runner, tmp_path):
        import math

        rows = ["# id: USER0BDS"]
        for i in range(600):
            t = i / 100
            mx = 7.0 * math.sin(2 * math.pi * 0.13 * t + 0.4)
            my = -7.0 * math.cos(2 * math.pi * 0.07 * t)
            rows.append(f"{t} 0.0 0.0 700.0 {mx} {my} 0.0")
        trial = tmp_path / "user.txt"
        trial.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        result = run(runner, "--out", out, "analyze", trial)
        assert result.exit_code == 0, result.output
        assert (out / "occupancy.json").is_file()

    def test_multiple_trials_get_subdirectories(self, runner, tmp_path,
                                                ellipse_fixture, quiet_text):
        a = tmp_path / "first.txt"
        a.write_text(ellipse_fixture.text)
        b = tmp_path / "second.txt"
        b.write_text(quiet_text)
        out = tmp_path / "out"
        result = run(runner, "--out", out, "analyze", a, b)
        assert result.exit_code == 0, result.output
        assert (out / "first" / "conic.json").is_file()
        assert (out / "second" / "occupancy.json").is_file()

    def test_emitted_csvs_parse(self, runner, tmp_path, ellipse_fixture):
        trial = tmp_path / "trial.txt"
        trial.write_text(ellipse_fixture.text)
        out = tmp_path / "out"
        assert run(runner, "--out", out, "analyze", trial).exit_code == 0
        for name in ("trajectory.csv", "distances.csv", "occupancy.csv"):
            rows = list(csv.DictReader(io.StringIO((out / name).read_text())))
            assert rows
            for row in rows[:5]:
                for key, value in row.items():
                    if key not in ("zone",):
                        float(value)


class TestSimulateCommand:
    def test_byte_identical_reruns(self, runner, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        for out in (out_a, out_b):
            result = run(runner, "--out", out, "--seed", 7, "simulate",
                         "--duration", 12.0)
            assert result.exit_code == 0, result.output
        assert (out_a / "trace.csv").read_bytes() == \
            (out_b / "trace.csv").read_bytes()
        assert (out_a / "simulation.json").read_bytes() == \
            (out_b / "simulation.json").read_bytes()

    def test_summary_fields(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run(runner, "--out", out, "simulate")
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "simulation.json").read_text())
        assert summary["episode_count"] >= 1
        assert 5.2 <= summary["first_activation_s"] <= 5.7
        assert "activation episodes" in result.output

    def test_zero_duration_exits_2(self, runner, tmp_path):
        result = run(runner, "--out", tmp_path, "simulate", "--duration", 0)
        assert result.exit_code == 2

    def test_uncontrolled_fall_exits_4(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run(runner, "--out", out, "simulate", "--uncontrolled")
        assert result.exit_code == 4
        assert "FELL" in result.output
        summary = json.loads((out / "simulation.json").read_text())
        assert summary["fell"] is True

    def test_trace_json_with_format_json(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run(runner, "--out", out, "--format", "json", "simulate",
                     "--duration", 8.0)
        assert result.exit_code == 0, result.output
        data = json.loads((out / "trace.json").read_text())
        assert set(data) == {"t", "copx", "copy", "d", "active", "u", "zone"}
        assert len(data["t"]) == 800

    def test_short_run_with_default_pulse_is_config_error(self, runner,
                                                          tmp_path):
        # the default pulse at t=5 s does not fit inside a 3 s run
        result = run(runner, "--out", tmp_path, "simulate", "--duration", 3.0)
        assert result.exit_code == 2


class TestControllerOverrides:
    def test_zero_gains_never_stimulate(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run(runner, "--out", out, "simulate", "--duration", 12.0,
                     "--kp", 0, "--ki", 0, "--kd", 0)
        summary = json.loads((out / "simulation.json").read_text())
        assert summary["u_peak"] == 0.0
        # with zero gains the pulse goes uncorrected and the stance falls
        assert summary["fell"] is True
        assert result.exit_code == 4

    def test_threshold_flag_flows_through(self, runner, tmp_path):
        # an unreachable threshold keeps the gate shut; the pulse then
        # fells the plant exactly like an uncontrolled run
        out = tmp_path / "out"
        result = run(runner, "--out", out, "--threshold", 0.99, "simulate")
        assert result.exit_code == 4
        summary = json.loads((out / "simulation.json").read_text())
        assert summary["episode_count"] == 0 and summary["fell"] is True

    def test_sidecar_merges(self, runner, tmp_path, quiet_text):
        trial = tmp_path / "quiet.txt"
        trial.write_text(quiet_text)
        meta = tmp_path / "meta.txt"
        meta.write_text("Age: 62\nIllness: none\n")
        out = tmp_path / "out"
        result = run(runner, "--out", out, "analyze", trial, "--meta", meta)
        assert result.exit_code == 0, result.output


class TestTuneCommand:
    def test_paper_preset(self, runner, tmp_path):
        out = tmp_path / "out"
        result = run(runner, "--out", out, "tune", "--preset", "paper")
        assert result.exit_code == 0, result.output
        gains = json.loads((out / "gains.json").read_text())
        assert (gains["kp"], gains["ki"], gains["kd"]) == (0.87, 1.0, 0.93)
        assert gains["source"] == "preset:paper"

    def test_first_order_exits_4(self, runner, tmp_path):
        result = run(runner, "--out", tmp_path, "tune", "--plant",
                     "first-order")
        assert result.exit_code == 4
        assert "NoUltimateGain" in result.output


class TestReportCommand:
    def test_consolidates_artifacts(self, runner, tmp_path, quiet_text):
        trial = tmp_path / "quiet.txt"
        trial.write_text(quiet_text)
        out = tmp_path / "out"
        assert run(runner, "--out", out, "analyze", trial).exit_code == 0
        assert run(runner, "--out", out, "simulate", "--duration",
                   8.0).exit_code == 0
        assert run(runner, "--out", out, "tune", "--preset",
                   "paper").exit_code == 0
        result = run(runner, "--out", out, "report")
        assert result.exit_code == 0, result.output
        assert (out / "report.txt").is_file()
        for section in ("== analysis ==", "== simulation ==", "== tuning =="):
            assert section in result.output

    def test_empty_dir_exits_2(self, runner, tmp_path):
        result = run(runner, "--out", tmp_path / "empty", "report")
        assert result.exit_code == 2


class TestConfigHandling:
    def test_config_file_drives_simulation(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "sim.seed = 3\n"
            "sim.duration_s = 6\n"
            "sim.pulses = 2.0:0.2:15.0\n"
            "# comment line\n"
            "pid.kp = 0.87\n"
        )
        out_cfg = tmp_path / "by_config"
        result = run(runner, "--config", cfg, "--out", out_cfg, "simulate")
        assert result.exit_code == 0, result.output
        summary = json.loads((out_cfg / "simulation.json").read_text())
        assert summary["duration_s"] == pytest.approx(5.99)

    def test_flag_overrides_config(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sim.seed = 3\nsim.duration_s = 6\n"
                       "sim.pulses = 5.0:0.2:15.0\n")
        out_flag = tmp_path / "flagged"
        result = run(runner, "--config", cfg, "--seed", 11, "--out", out_flag,
                     "simulate")
        assert result.exit_code == 0, result.output
        out_direct = tmp_path / "direct"
        result = run(runner, "--seed", 11, "--out", out_direct, "simulate",
                     "--duration", 6.0)
        assert result.exit_code == 0, result.output
        assert (out_flag / "trace.csv").read_bytes() == \
            (out_direct / "trace.csv").read_bytes()

    def test_unknown_key_exits_2(self, runner, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sim.velocity = 9\n")
        result = run(runner, "--config", cfg, "simulate")
        assert result.exit_code == 2
        assert "sim.velocity" in result.output

    def test_missing_config_exits_2(self, runner, tmp_path):
        result = run(runner, "--config", tmp_path / "none.cfg", "simulate")
        assert result.exit_code == 2


class TestFixturesCommand:
    def test_writes_bundled_trials(self, runner, tmp_path):
        out = tmp_path / "fx"
        result = run(runner, "--out", out, "fixtures")
        assert result.exit_code == 0
        assert (out / "ellipse_trial.txt").is_file()
        assert (out / "quiet_stance_trial.txt").is_file()
