"""
Simulation harness: runs compiled cases against the golden model, reports results
and records the stimulus/response trace
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .alu import DEFAULT_WIDTH, FLAG_NAMES, AluResponse, evaluate
from .compiler import TestCase
from .exceptions import NoCasesError
from .vcd import VcdChange, VcdSignal, VcdTrace, to_bits, vcd_codes

logger = logging.getLogger(__name__)

STEP_NS = 10
SETTLE_NS = 5
OPCODE_BITS = 4
INPUT_SIGNALS = ("op", "A", "B")
OUTPUT_SIGNALS = ("result",) + FLAG_NAMES


class ReportFormat(str, Enum):
    HUMAN = "Human"
    MACHINE = "Machine"


class Check(BaseModel):
    model_config = ConfigDict(frozen=True)

    field: str
    expected: int
    actual: int
    ok: bool


class CaseResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    checks: Tuple[Check, ...] = ()

    @model_validator(mode="after")
    def check_passed(self):
        if self.passed != all(check.ok for check in self.checks):
            raise ValueError(f"case {self.name!r}: passed must equal every check being ok")
        return self


class TestReport(BaseModel):
    """Ordered case results of one run"""

    __test__ = False
    model_config = ConfigDict(frozen=True)

    feature_name: str = ""
    results: Tuple[CaseResult, ...] = ()
    passed_count: int = Field(0, ge=0)
    failed_count: int = Field(0, ge=0)

    @model_validator(mode="after")
    def check_counts(self):
        passed = sum(1 for r in self.results if r.passed)
        if (self.passed_count, self.failed_count) != (passed, len(self.results) - passed):
            raise ValueError("passed_count and failed_count must match the results")
        return self

    @classmethod
    def from_results(cls, feature_name: str, results: Sequence[CaseResult]) -> "TestReport":
        passed = sum(1 for r in results if r.passed)
        return cls(
            feature_name=feature_name,
            results=tuple(results),
            passed_count=passed,
            failed_count=len(results) - passed,
        )

    @property
    def all_passed(self) -> bool:
        return self.failed_count == 0


def check_case(case: TestCase, response: AluResponse) -> CaseResult:
    checks = [
        Check(field=name, expected=expected, actual=response.field(name), ok=expected == response.field(name))
        for name, expected in case.expect.present().items()
    ]
    return CaseResult(name=case.name, passed=all(c.ok for c in checks), checks=checks)


def case_width(cases: Sequence[TestCase]) -> int:
    """The single word width shared by ``cases``

    Raises:
        NoCasesError: If there are no cases or they mix widths
    """
    widths = {case.stimulus.width for case in cases}
    if not widths:
        raise NoCasesError()
    if len(widths) > 1:
        raise NoCasesError(f"cases mix word widths {sorted(widths)}")
    return widths.pop()


def trace_signals(width: int) -> List[VcdSignal]:
    widths = {"op": OPCODE_BITS, "A": width, "B": width, "result": width}
    names = INPUT_SIGNALS + OUTPUT_SIGNALS
    return [VcdSignal(name=name, width=widths.get(name, 1), id=code) for name, code in zip(names, vcd_codes())]


def run_cases(
    cases: Sequence[TestCase], feature_name: str = "", workers: int = 1
) -> Tuple[TestReport, VcdTrace]:
    """Evaluate every case and record inputs at ``10k`` ns and outputs at ``10k + 5`` ns

    Results and trace changes are always in case order, whatever ``workers`` is.
    """
    if not cases:
        return TestReport.from_results(feature_name, []), VcdTrace(signals=trace_signals(DEFAULT_WIDTH))

    width = case_width(cases)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            responses = list(pool.map(lambda case: evaluate(case.stimulus), cases))
    else:
        responses = [evaluate(case.stimulus) for case in cases]

    signals = trace_signals(width)
    ids = {signal.name: signal.id for signal in signals}
    results = []
    changes = []
    for k, (case, response) in enumerate(zip(cases, responses)):
        stimulus = case.stimulus
        t = STEP_NS * k
        changes.append(VcdChange(time=t, id=ids["op"], value=to_bits(int(stimulus.op), OPCODE_BITS)))
        changes.append(VcdChange(time=t, id=ids["A"], value=to_bits(stimulus.a, width)))
        changes.append(VcdChange(time=t, id=ids["B"], value=to_bits(stimulus.b, width)))
        changes.append(VcdChange(time=t + SETTLE_NS, id=ids["result"], value=to_bits(response.result, width)))
        for flag in FLAG_NAMES:
            changes.append(VcdChange(time=t + SETTLE_NS, id=ids[flag], value=str(response.field(flag))))
        results.append(check_case(case, response))

    report = TestReport.from_results(feature_name, results)
    trace = VcdTrace(signals=signals, changes=changes, end_time=STEP_NS * len(cases))
    logger.info(f"Ran {len(cases)} case(s): {report.passed_count} passed, {report.failed_count} failed")
    return report, trace


def report_document(report: TestReport) -> Dict[str, Any]:
    return {
        "feature": report.feature_name,
        "passed": report.passed_count,
        "failed": report.failed_count,
        "cases": [
            {
                "name": result.name,
                "passed": result.passed,
                "checks": [
                    {"field": c.field, "expected": c.expected, "actual": c.actual, "ok": c.ok} for c in result.checks
                ],
            }
            for result in report.results
        ],
    }


def render_report(report: TestReport, format: ReportFormat = ReportFormat.HUMAN) -> str:
    """Render a report as human-readable text or as the machine JSON document"""
    if ReportFormat(format) == ReportFormat.MACHINE:
        return json.dumps(report_document(report), indent=2, ensure_ascii=False) + "\n"

    lines = [f"Feature: {report.feature_name}"] if report.feature_name else []
    for result in report.results:
        lines.append(f"  {'✓' if result.passed else '✗'} {result.name}")
        for check in result.checks:
            if not check.ok:
                lines.append(f"      {check.field}: expected {check.expected}, got {check.actual}")
    lines.append(f"{report.passed_count} passed, {report.failed_count} failed")
    return "\n".join(lines) + "\n"
