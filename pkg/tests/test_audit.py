"""Independent trajectory auditor: clean runs report zero violations and
injected faults are pinned to the right constraint."""

import pytest

from scugrid.audit import CONSTRAINTS, audit_file, audit_rows
from scugrid.env import EpisodeConfig, MicrogridEnv, run_episode, write_trajectory
from scugrid.exogenous import synth_series
from scugrid.policies import make_policy


def clean_rows(seed=0, length=240, policy="random"):
    env = MicrogridEnv(synth_series(seed, 1), EpisodeConfig(length=length, seed=seed))
    env.reset()
    _, rows = run_episode(make_policy(policy, seed), env)
    return rows


def to_dicts(rows):
    from scugrid.env import TRAJECTORY_HEADER

    return [dict(zip(TRAJECTORY_HEADER, map(str, row))) for row in rows]


class TestCleanTrajectories:
    @pytest.mark.parametrize("policy", ["random", "battery-greedy", "fuel-greedy"])
    def test_zero_violations(self, policy):
        report = audit_rows(to_dicts(clean_rows(policy=policy)))
        assert report.total_violations == 0
        assert report.rows == 240

    def test_header_only_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        from scugrid.env import TRAJECTORY_HEADER

        path.write_text(",".join(TRAJECTORY_HEADER) + "\n")
        report = audit_file(path)
        assert report.rows == 0 and report.total_violations == 0

    def test_report_lines_format(self):
        report = audit_rows(to_dicts(clean_rows(length=30)))
        lines = list(report.lines())
        assert lines[0] == "rows audited: 30"
        assert lines[-1] == "total violations: 0"
        assert len(lines) == len(CONSTRAINTS) + 2


class TestInjectedFaults:
    def _audit_with(self, mutate):
        rows = to_dicts(clean_rows(length=120))
        mutate(rows)
        return audit_rows(rows)

    def test_soc_above_ceiling(self):
        def mutate(rows):
            rows[50]["soc"] = "0.95"

        report = self._audit_with(mutate)
        assert report.violations["soc_bounds"] == 1
        assert "soc_bounds" in report.first_bad_row

    def test_soc_below_floor_without_reserve_flag(self):
        def mutate(rows):
            rows[50]["soc"] = "0.08"
            rows[50]["intervention"] = "0"

        assert self._audit_with(mutate).violations["soc_bounds"] == 1

    def test_soc_below_floor_with_reserve_flag_is_legal(self):
        def mutate(rows):
            rows[50]["soc"] = "0.08"
            rows[50]["intervention"] = "2"

        assert self._audit_with(mutate).violations["soc_bounds"] == 0

    def test_nonzero_balance(self):
        def mutate(rows):
            rows[10]["balance"] = "-25.0"

        assert self._audit_with(mutate).violations["balance_zero"] == 1

    def test_warmup_power_must_be_routine(self):
        def mutate(rows):
            rows[20]["status1"] = "WarmUp(3)"
            rows[20]["p_gen1"] = "250.0"

        report = self._audit_with(mutate)
        assert report.violations["genset_routine_power"] >= 1

    def test_on_power_outside_band(self):
        def mutate(rows):
            for row in rows:
                if row["status1"].startswith("On"):
                    row["p_gen1"] = "80.0"
                    break

        assert self._audit_with(mutate).violations["genset_power_band"] == 1

    def test_overload_band_only_with_flag(self):
        def set_power(rows, flag):
            for row in rows:
                if row["status1"].startswith("On"):
                    row["p_gen1"] = "430.0"
                    row["intervention"] = flag
                    break

        bad = self._audit_with(lambda rows: set_power(rows, "0"))
        ok = self._audit_with(lambda rows: set_power(rows, "4"))
        assert bad.violations["genset_power_band"] == 1
        assert ok.violations["genset_power_band"] == 0

    def test_priority_order(self):
        def mutate(rows):
            rows[30]["status1"] = "Off"
            rows[30]["p_gen1"] = "0.0"
            rows[30]["status2"] = "On(5)"
            rows[30]["p_gen2"] = "200.0"

        assert self._audit_with(mutate).violations["priority_order"] >= 1

    def test_unequal_power_fraction(self):
        def mutate(rows):
            rows[30]["status1"] = "On(40)"
            rows[30]["status2"] = "On(35)"
            rows[30]["p_gen1"] = "200.0"
            rows[30]["p_gen2"] = "210.0"

        assert self._audit_with(mutate).violations["equal_power_fraction"] == 1

    def test_unparseable_status(self):
        rows = to_dicts(clean_rows(length=10))
        rows[3]["status1"] = "Running"
        with pytest.raises(ValueError, match="unparseable"):
            audit_rows(rows)


class TestStatusMachine:
    def _rows(self, labels, minutes=None):
        base = to_dicts(clean_rows(length=len(labels), policy="battery-greedy"))
        for row, label in zip(base, labels):
            row["status1"] = label
            row["p_gen1"] = (
                "100.0" if label.startswith("WarmUp")
                else "0.0" if label in ("Off",) or label.startswith("CoolDown")
                else "200.0"
            )
        return base

    def test_warmup_sequence_legal(self):
        labels = ["Off", "WarmUp(3)", "WarmUp(2)", "WarmUp(1)", "On(0)", "On(1)"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_status_machine"] == 0

    def test_restart_after_cooldown_legal(self):
        labels = ["CoolDown(2)", "CoolDown(1)", "WarmUp(3)", "WarmUp(2)"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_status_machine"] == 0

    def test_skipped_warmup_minute_flagged(self):
        labels = ["Off", "WarmUp(3)", "WarmUp(1)"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_status_machine"] == 1

    def test_on_to_off_without_cooldown_flagged(self):
        labels = ["On(40)", "Off"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_status_machine"] >= 1

    def test_early_stop_flagged(self):
        labels = ["On(10)", "CoolDown(5)"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_min_runtime"] == 1

    def test_min_runtime_stop_legal(self):
        labels = ["On(29)", "CoolDown(5)"]
        report = audit_rows(self._rows(labels))
        assert report.violations["genset_min_runtime"] == 0
