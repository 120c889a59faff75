"""End-to-end command-line behavior via the click test runner."""

import json
import os

import pytest
from click.testing import CliRunner

from scugrid.cli import main


@pytest.fixture
def runner():
    return CliRunner()


class TestGenData:
    def test_writes_series(self, runner, tmp_path):
        out = tmp_path / "series.csv"
        result = runner.invoke(main, ["gen-data", "--seed", "3", "--days", "2",
                                      "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "2880 rows" in result.output
        assert out.read_text().splitlines()[0] == "minute,demand_kw,wind_avail_kw"

    def test_deterministic(self, runner, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            runner.invoke(main, ["gen-data", "--seed", "3", "--out", str(p)])
        assert a.read_bytes() == b.read_bytes()


class TestRunUsage:
    def test_missing_policy(self, runner):
        result = runner.invoke(main, ["run", "--synth-seed", "0"])
        assert result.exit_code == 2

    def test_missing_data_source(self, runner):
        result = runner.invoke(main, ["run", "--policy", "heuristic"])
        assert result.exit_code == 2
        assert "--data or --synth-seed" in result.output

    def test_unsafe_required_to_drop_device_shields(self, runner):
        result = runner.invoke(
            main, ["run", "--policy", "heuristic", "--synth-seed", "0",
                   "--no-device-shield"]
        )
        assert result.exit_code == 2
        assert "--unsafe" in result.output

    def test_bad_seeds(self, runner):
        result = runner.invoke(
            main, ["run", "--policy", "heuristic", "--synth-seed", "0",
                   "--seeds", "1,x"]
        )
        assert result.exit_code == 2


class TestRunAndAudit:
    def test_run_produces_clean_outputs(self, runner, tmp_path):
        result = runner.invoke(
            main, ["run", "--policy", "heuristic", "--synth-seed", "0",
                   "--seeds", "0", "--out", str(tmp_path)]
        )
        assert result.exit_code == 0, result.output
        csv_path = tmp_path / "heuristic_seed0.csv"
        summary_path = tmp_path / "heuristic_summary.json"
        assert csv_path.exists() and summary_path.exists()
        summary = json.loads(summary_path.read_text())
        assert summary["total"]["neg_balance_steps"] == 0
        assert summary["total"]["pos_balance_kwh"] == 0.0
        assert "0" in summary["per_seed"]

        audit = runner.invoke(main, ["audit", str(csv_path)])
        assert audit.exit_code == 0, audit.output
        assert "total violations: 0" in audit.output

    def test_run_deterministic_byte_identical(self, runner, tmp_path):
        outputs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            result = runner.invoke(
                main, ["run", "--policy", "random", "--synth-seed", "1",
                       "--seeds", "1", "--out", str(out)]
            )
            assert result.exit_code == 0, result.output
            outputs.append((out / "random_seed1.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_audit_flags_tampered_file(self, runner, tmp_path):
        runner.invoke(
            main, ["run", "--policy", "battery-greedy", "--synth-seed", "0",
                   "--seeds", "0", "--out", str(tmp_path)]
        )
        csv_path = tmp_path / "battery-greedy_seed0.csv"
        lines = csv_path.read_text().splitlines()
        parts = lines[40].split(",")
        parts[13] = "-50.0"  # balance column
        lines[40] = ",".join(parts)
        csv_path.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["audit", str(csv_path)])
        assert result.exit_code == 1
        assert "balance_zero: 1" in result.output

    def test_audit_parse_error(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("not,a,trajectory\n1,2,3\n")
        result = runner.invoke(main, ["audit", str(bad)])
        assert result.exit_code == 2

    def test_figures_flag_renders(self, runner, tmp_path):
        result = runner.invoke(
            main, ["run", "--policy", "battery-greedy", "--synth-seed", "0",
                   "--seeds", "0", "--out", str(tmp_path), "--figures"]
        )
        assert result.exit_code == 0, result.output
        pngs = [p for p in os.listdir(tmp_path) if p.endswith(".png")]
        assert len(pngs) == 3


class TestRainflow:
    def test_totals_and_gap(self, runner, tmp_path):
        import numpy as np

        rng = np.random.default_rng(0)
        v, soc = 0.0, 0.5
        values = [soc]
        for _ in range(1439):
            v = 0.9 * v + rng.normal(0.0, 0.004)
            soc = min(0.9, max(0.1, soc + v))
            values.append(soc)
        trace = tmp_path / "trace.txt"
        trace.write_text("\n".join(repr(x) for x in values) + "\n")
        result = runner.invoke(main, ["rainflow", str(trace)])
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        online = float(lines[0].split()[-1])
        offline = float(lines[1].split()[-1])
        gap = float(lines[2].split()[-1])
        assert online > 0 and offline > 0
        assert gap <= 0.05
        assert gap == pytest.approx(abs(online - offline) / offline, abs=1e-6)

    def test_empty_trace(self, runner, tmp_path):
        trace = tmp_path / "empty.txt"
        trace.write_text("")
        result = runner.invoke(main, ["rainflow", str(trace)])
        assert result.exit_code == 2


class TestConfig:
    def test_print_config_round_trips(self, runner, tmp_path):
        result = runner.invoke(main, ["print-config"])
        assert result.exit_code == 0
        assert "[degradation]" in result.output
        cfg = tmp_path / "config.ini"
        cfg.write_text(result.output)
        run = runner.invoke(
            main, ["run", "--policy", "battery-greedy", "--synth-seed", "0",
                   "--seeds", "0", "--config", str(cfg), "--out", str(tmp_path)]
        )
        assert run.exit_code == 0, run.output

    def test_custom_scenario_applied(self, runner, tmp_path):
        cfg = tmp_path / "config.ini"
        cfg.write_text("[systems]\ndemand_high = 540.0\ndemand_low = 180.0\n"
                       "demand_ramp = 10.0\nwind_ramp = 20.0\nwind_low = 0.0\n"
                       "demand_drop = 10.0\n")
        run = runner.invoke(
            main, ["run", "--policy", "battery-greedy", "--synth-seed", "0",
                   "--seeds", "0", "--config", str(cfg), "--out", str(tmp_path)]
        )
        assert run.exit_code == 0, run.output
