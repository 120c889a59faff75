"""Independent constraint audit over trajectory CSV files.

Deliberately reimplements every constraint check from the logged rows
alone, sharing no code with the shields or device models, so simulator
bugs cannot hide behind their own accounting.  Constants are restated
here on purpose.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

_BALANCE_TOL = 1e-6
_SOC_LOW = 0.10
_SOC_EMERGENCY = 0.05
_SOC_HIGH = 0.90
_GEN_MIN = 120.0
_GEN_NOMINAL = 400.0
_GEN_MAX = 440.0
_WARMUP_KW = 100.0
_MIN_RUNTIME = 30
_AVG_WINDOW = 2880
_AVG_CAP = 280.0
_EQUAL_FRACTION_TOL = 1e-9
_POWER_TOL = 1e-6

_FLAG_BATTERY_RESERVE = 2
_FLAG_GENSET_OVERLOAD = 4

_STATUS_RE = re.compile(r"^(Off|On|WarmUp|CoolDown)(?:\((\d+)\))?$")

CONSTRAINTS = [
    "balance_zero",
    "soc_bounds",
    "genset_routine_power",
    "genset_power_band",
    "genset_min_runtime",
    "genset_status_machine",
    "genset_avg_48h",
    "priority_order",
    "equal_power_fraction",
]


@dataclass
class AuditReport:
    rows: int = 0
    violations: dict = field(default_factory=lambda: {name: 0 for name in CONSTRAINTS})
    first_bad_row: dict = field(default_factory=dict)

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())

    def flag(self, name: str, row_minute) -> None:
        self.violations[name] += 1
        self.first_bad_row.setdefault(name, row_minute)

    def lines(self):
        yield f"rows audited: {self.rows}"
        for name in CONSTRAINTS:
            count = self.violations[name]
            suffix = ""
            if count:
                suffix = f"  (first at minute {self.first_bad_row[name]})"
            yield f"{name}: {count}{suffix}"
        yield f"total violations: {self.total_violations}"


def _parse_status(text: str):
    m = _STATUS_RE.match(text)
    if not m:
        raise ValueError(f"unparseable status {text!r}")
    return m.group(1), int(m.group(2) or 0)


class _GensetAudit:
    """Row-by-row checker for one genset column pair."""

    def __init__(self):
        self.prev = None  # (status, counter)
        self.samples = []  # rolling on-operation power window

    def check(self, report, minute, status, counter, p, overload_ok):
        if status == "WarmUp":
            if abs(p - _WARMUP_KW) > _POWER_TOL:
                report.flag("genset_routine_power", minute)
        elif status in ("CoolDown", "Off"):
            if abs(p) > _POWER_TOL:
                report.flag("genset_routine_power", minute)
        else:  # On
            hi = _GEN_MAX if overload_ok else _GEN_NOMINAL
            if p < _GEN_MIN - _POWER_TOL or p > hi + _POWER_TOL:
                report.flag("genset_power_band", minute)

        if self.prev is not None:
            ps, pc = self.prev
            legal = _legal_transition(ps, pc, status, counter)
            if not legal:
                report.flag("genset_status_machine", minute)
            if ps == "On" and status == "CoolDown":
                # runtime label counts completed On minutes at minute start
                if pc + 1 < _MIN_RUNTIME:
                    report.flag("genset_min_runtime", minute)
            if ps == "On" and status == "Off":
                report.flag("genset_status_machine", minute)
        self.prev = (status, counter)

        if status != "Off":
            self.samples.append(p)
            if len(self.samples) > _AVG_WINDOW:
                self.samples.pop(0)
            avg = sum(self.samples) / len(self.samples)
            if avg > _AVG_CAP + _POWER_TOL:
                report.flag("genset_avg_48h", minute)


def _legal_transition(ps, pc, status, counter) -> bool:
    if ps == "Off":
        return (status, counter) in (("Off", 0),) or (status == "WarmUp" and counter == 3)
    if ps == "WarmUp":
        if pc > 1:
            return status == "WarmUp" and counter == pc - 1
        return status == "On" and counter == 0  # runtime starts at 0 after warm-up
    if ps == "On":
        if status == "On":
            return counter == pc + 1
        return status == "CoolDown" and counter == 5
    if ps == "CoolDown":
        if pc > 1:
            return status == "CoolDown" and counter == pc - 1
        # cool-down finishes at minute end; a restart is legal right away
        return status == "Off" or (status == "WarmUp" and counter == 3)
    return False


def audit_rows(rows) -> AuditReport:
    report = AuditReport()
    g1 = _GensetAudit()
    g2 = _GensetAudit()
    for row in rows:
        minute = row["minute"]
        report.rows += 1
        flags = int(row["intervention"])
        reserve_ok = bool(flags & _FLAG_BATTERY_RESERVE)
        overload_ok = bool(flags & _FLAG_GENSET_OVERLOAD)

        if abs(float(row["balance"])) > _BALANCE_TOL:
            report.flag("balance_zero", minute)

        soc = float(row["soc"])
        floor = _SOC_EMERGENCY if reserve_ok else _SOC_LOW
        if soc < floor - 1e-9 or soc > _SOC_HIGH + 1e-9:
            report.flag("soc_bounds", minute)

        s1, c1 = _parse_status(row["status1"])
        s2, c2 = _parse_status(row["status2"])
        p1 = float(row["p_gen1"])
        p2 = float(row["p_gen2"])
        g1.check(report, minute, s1, c1, p1, overload_ok)
        g2.check(report, minute, s2, c2, p2, overload_ok)

        if s2 in ("On", "WarmUp") and s1 == "Off":
            report.flag("priority_order", minute)

        if s1 == "On" and s2 == "On":
            if abs(p1 / _GEN_NOMINAL - p2 / _GEN_NOMINAL) > _EQUAL_FRACTION_TOL:
                report.flag("equal_power_fraction", minute)
    return report


def audit_file(path) -> AuditReport:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return audit_rows(reader)
