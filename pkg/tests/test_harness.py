"""
Tests for the simulation harness and its reports
"""

import json

import pytest

from gherkin_hdl.compiler import compile_feature
from gherkin_hdl.exceptions import NoCasesError
from gherkin_hdl.forge import parse_prompt, render_feature_text
from gherkin_hdl.gherkin import ExamplesTable, parse_feature
from gherkin_hdl.harness import (
    CaseResult,
    Check,
    ReportFormat,
    TestReport,
    render_report,
    report_document,
    run_cases,
)
from gherkin_hdl.vcd import read_vcd_minimal, to_bits, write_vcd


@pytest.fixture
def add_cases(add_outline_source):
    return compile_feature(parse_feature(add_outline_source), 16)


@pytest.fixture
def wrong_cases(wrong_sum_source):
    return compile_feature(parse_feature(wrong_sum_source), 16)


class TestRunCases:
    """Test case evaluation and trace recording"""

    def test_all_pass(self, add_cases):
        report, trace = run_cases(add_cases, "16-bit ALU ADD operation")
        assert (report.passed_count, report.failed_count) == (3, 0)
        assert report.all_passed
        assert trace.timestamps() == [0, 5, 10, 15, 20, 25]
        assert trace.end_time == 30

    def test_inputs_then_outputs(self, add_cases):
        _, trace = run_cases(add_cases)
        ids = {signal.name: signal.id for signal in trace.signals}
        for k, case in enumerate(add_cases):
            at_input = {c.id: c.value for c in trace.changes if c.time == 10 * k}
            at_output = {c.id: c.value for c in trace.changes if c.time == 10 * k + 5}
            assert set(at_input) == {ids["op"], ids["A"], ids["B"]}
            assert at_input[ids["A"]] == to_bits(case.stimulus.a, 16)
            assert at_input[ids["B"]] == to_bits(case.stimulus.b, 16)
            assert set(at_output) == {ids[n] for n in ("result", "carry", "zero", "overflow", "negative")}

    def test_signal_declarations(self, add_cases):
        _, trace = run_cases(add_cases)
        assert [(s.name, s.width, s.id) for s in trace.signals] == [
            ("op", 4, "!"),
            ("A", 16, '"'),
            ("B", 16, "#"),
            ("result", 16, "$"),
            ("carry", 1, "%"),
            ("zero", 1, "&"),
            ("overflow", 1, "'"),
            ("negative", 1, "("),
        ]

    def test_wrong_expectation(self, wrong_cases):
        report, _ = run_cases(wrong_cases)
        assert (report.passed_count, report.failed_count) == (0, 1)
        assert report.results[0].checks == (Check(field="result", expected=11, actual=10, ok=False),)

    def test_empty_run(self):
        report, trace = run_cases([], "Nothing")
        assert (report.passed_count, report.failed_count) == (0, 0)
        assert trace.changes == ()
        assert trace.end_time is None
        assert b"#" not in write_vcd(trace)

    def test_workers_do_not_change_output(self):
        ast = parse_feature(render_feature_text(parse_prompt("Create XOR scenario, 60 examples."), seed=9))
        cases = compile_feature(ast, 16)
        assert run_cases(cases, workers=4) == run_cases(cases, workers=1)

    def test_mixed_widths(self, add_cases, wrong_sum_source):
        narrow = compile_feature(parse_feature(wrong_sum_source), 8)
        with pytest.raises(NoCasesError):
            run_cases(add_cases + narrow)

    def test_report_agrees_with_trace(self, wrong_cases, add_cases):
        cases = add_cases + wrong_cases
        report, trace = run_cases(cases)
        result_id = trace.signal("result").id
        for k, result in enumerate(report.results):
            (value,) = [c.value for c in trace.changes if c.time == 10 * k + 5 and c.id == result_id]
            check = next(c for c in result.checks if c.field == "result")
            assert int(value, 2) == check.actual

    def test_single_wrong_cell_fails_one_check(self, generated_feature_text):
        ast = parse_feature(generated_feature_text)
        outline = ast.scenarios[0]
        columns = outline.examples.columns
        for index, column in enumerate(columns):
            if column in ("A", "B"):
                continue
            for row in range(len(outline.examples.rows)):
                rows = [list(r) for r in outline.examples.rows]
                value = int(rows[row][index], 0)
                rows[row][index] = f"0x{(value + 1) % 0x10000:04X}" if column == "result" else str(1 - value)
                examples = ExamplesTable(columns=columns, rows=rows)
                mutated = ast.model_copy(update={"scenarios": (outline.model_copy(update={"examples": examples}),)})

                report, trace = run_cases(compile_feature(mutated, 16))

                failing = [check for result in report.results for check in result.checks if not check.ok]
                assert [check.field for check in failing] == [column]
                assert read_vcd_minimal(write_vcd(trace)) == trace

    def test_trace_survives_vcd(self, add_cases):
        _, trace = run_cases(add_cases)
        assert read_vcd_minimal(write_vcd(trace)) == trace


class TestReportModels:
    """Test report invariants"""

    def test_passed_must_match_checks(self):
        with pytest.raises(ValueError):
            CaseResult(name="c", passed=True, checks=[Check(field="result", expected=1, actual=2, ok=False)])

    def test_counts_must_match_results(self):
        with pytest.raises(ValueError):
            TestReport(results=[CaseResult(name="c", passed=True)], passed_count=0, failed_count=1)


class TestRenderReport:
    """Test human and machine report rendering"""

    def test_human_summary(self, add_cases):
        report, _ = run_cases(add_cases, "16-bit ALU ADD operation")
        text = render_report(report)
        assert text.splitlines()[0] == "Feature: 16-bit ALU ADD operation"
        assert "  ✓ ADD behaves per specification [1]" in text
        assert text.endswith("3 passed, 0 failed\n")

    def test_human_failure_detail(self, wrong_cases):
        report, _ = run_cases(wrong_cases)
        lines = render_report(report, ReportFormat.HUMAN).splitlines()
        assert lines == ["  ✗ five plus five", "      result: expected 11, got 10", "0 passed, 1 failed"]

    def test_empty_report(self):
        report, _ = run_cases([])
        assert render_report(report) == "0 passed, 0 failed\n"

    def test_machine_document(self, wrong_cases):
        report, _ = run_cases(wrong_cases, "Broken adder expectations")
        document = json.loads(render_report(report, ReportFormat.MACHINE))

        assert list(document) == ["feature", "passed", "failed", "cases"]
        assert document["cases"] == [
            {
                "name": "five plus five",
                "passed": False,
                "checks": [{"field": "result", "expected": 11, "actual": 10, "ok": False}],
            }
        ]
        assert document == report_document(report)

    def test_machine_format_accepts_value(self, add_cases):
        report, _ = run_cases(add_cases)
        assert json.loads(render_report(report, "Machine"))["passed"] == 3
