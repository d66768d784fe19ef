"""
Tests for the scenario forge: prompts, constraint solving, generation and oracle repair
"""

import json
import logging
import re

import httpx
import pytest

from gherkin_hdl.ai.protocol import GenerationMode, GenerationRequest, ProviderKind
from gherkin_hdl.ai.providers import RemoteProvider, StubProvider
from gherkin_hdl.alu import AluOp, AluVector, evaluate
from gherkin_hdl.compiler import STEP_GRAMMAR, compile_feature
from gherkin_hdl.exceptions import (
    NonParseableOutput,
    OracleMismatch,
    PromptSyntaxError,
    ProviderError,
    UnknownOperation,
    Unsatisfiable,
)
from gherkin_hdl.forge import (
    EqualOperands,
    FixedA,
    FixedB,
    FlagGoal,
    GenerationRecord,
    PromptSpec,
    build_request,
    edge_values,
    forge_feature,
    format_like,
    generate_with_provider,
    generate_with_templates,
    parse_prompt,
    render_feature_text,
    repair_feature,
    solve_constraints,
    validate_against_oracle,
)
from gherkin_hdl.gherkin import ExamplesTable, FeatureAst, parse_feature, print_feature
from gherkin_hdl.settings import ProviderSettings

DETERMINISM_PROMPTS = [
    "Create ADD scenario with A = B, 3 examples.",
    "Create SUB scenario with zero, 2 examples.",
    "Create ADD scenario with overflow, 2 examples.",
    "Create SHL scenario with carry, 2 examples.",
]


def corrupt(ast: FeatureAst, row: int = 0, column: str = "result") -> FeatureAst:
    """Return ``ast`` with one expectation cell of its first outline made wrong"""
    scenario = ast.scenarios[0]
    index = scenario.examples.columns.index(column)
    rows = [list(r) for r in scenario.examples.rows]
    value = int(rows[row][index], 0)
    rows[row][index] = f"0x{(value + 1) % 0x10000:04X}" if column == "result" else str(1 - value)
    examples = ExamplesTable(columns=scenario.examples.columns, rows=rows)
    return FeatureAst(
        name=ast.name,
        description=ast.description,
        scenarios=[scenario.model_copy(update={"examples": examples})] + list(ast.scenarios[1:]),
    )


def stub_for(spec: PromptSpec, text: str) -> StubProvider:
    return StubProvider(responses={build_request(spec).prompt: text})


class TestParsePrompt:
    """Test the prompt language"""

    def test_reference_prompt(self, add_prompt):
        spec = parse_prompt(add_prompt)
        assert spec.op is AluOp.ADD
        assert spec.constraints == (EqualOperands(),)
        assert spec.count == 3

    def test_flag_words_and_case(self):
        spec = parse_prompt("create add scenarios with carry, no overflow, 4 examples")
        assert spec.constraints == (FlagGoal(flag="carry", value=1), FlagGoal(flag="overflow", value=0))
        assert spec.count == 4

    def test_literals_and_reversed_equality(self):
        spec = parse_prompt("Create ADD scenario with B = A, A = 0x10, 1 example.")
        assert spec.constraints == (EqualOperands(), FixedA(value=16))

    def test_no_constraints(self):
        assert parse_prompt("Create XOR scenario, 2 examples.") == PromptSpec(op=AluOp.XOR, count=2)

    def test_unknown_operation(self):
        with pytest.raises(UnknownOperation) as exc_info:
            parse_prompt("Create FOO scenario, 1 example.")
        assert exc_info.value.name == "FOO"

    @pytest.mark.parametrize(
        "prompt,token",
        [
            ("Make ADD scenario, 1 example.", "Make"),
            ("Create ADD thing, 1 example.", "thing"),
            ("Create ADD scenario with wibble, 2 examples.", "wibble"),
            ("Create ADD scenario with A = B", "B"),
            ("Create ADD scenario, zero examples.", "zero"),
            ("Create ADD scenario, 0 examples.", "0"),
            ("Create ADD scenario with A = 70000, 1 example.", "70000"),
        ],
    )
    def test_syntax_errors_name_the_token(self, prompt, token):
        with pytest.raises(PromptSyntaxError) as exc_info:
            parse_prompt(prompt)
        assert exc_info.value.token == token

    def test_empty_prompt(self):
        with pytest.raises(PromptSyntaxError):
            parse_prompt("   ")

    @pytest.mark.parametrize(
        "spec",
        [
            PromptSpec(op=AluOp.ADD, constraints=(EqualOperands(),), count=3),
            PromptSpec(op=AluOp.SUB, constraints=(FlagGoal(flag="zero"),), count=1),
            PromptSpec(op=AluOp.AND, constraints=(FixedA(value=3), FixedB(value=12)), count=2),
            PromptSpec(op=AluOp.SHR, constraints=(FlagGoal(flag="carry", value=0),), count=5),
        ],
    )
    def test_render_parses_back(self, spec):
        assert parse_prompt(spec.render()) == spec

    def test_render_text(self, add_prompt):
        assert parse_prompt(add_prompt).render() == add_prompt


class TestSolveConstraints:
    """Test the seeded constraint solver"""

    def test_equal_operands(self, add_prompt):
        pairs = solve_constraints(parse_prompt(add_prompt), seed=42)
        assert len(pairs) == 3
        assert all(a == b for a, b in pairs)

    def test_same_seed_same_pairs(self, add_prompt):
        spec = parse_prompt(add_prompt)
        assert solve_constraints(spec, seed=7) == solve_constraints(spec, seed=7)

    def test_sub_to_zero(self):
        pairs = solve_constraints(parse_prompt("Create SUB scenario with zero, 2 examples."), seed=1)
        assert all(a == b for a, b in pairs)

    def test_add_overflow(self):
        pairs = solve_constraints(parse_prompt("Create ADD scenario with overflow, 5 examples."), seed=3)
        for a, b in pairs:
            assert evaluate(AluVector(op=AluOp.ADD, a=a, b=b)).flags.overflow == 1

    def test_add_overflow_with_equal_operands_at_width_4(self):
        spec = parse_prompt("Create ADD scenario with A = B, overflow, 3 examples.", width=4)
        for a, b in solve_constraints(spec, seed=11, width=4):
            assert a == b
            assert evaluate(AluVector(op=AluOp.ADD, a=a, b=b, width=4)).flags.overflow == 1

    def test_fixed_operands(self):
        spec = parse_prompt("Create ADD scenario with A = 3, B = 4, 2 examples.")
        assert solve_constraints(spec, seed=0) == [(3, 4), (3, 4)]

    def test_and_cannot_overflow(self):
        with pytest.raises(Unsatisfiable) as exc_info:
            solve_constraints(parse_prompt("Create AND scenario with overflow, 1 example."), seed=0)
        assert exc_info.value.debug_info["operation"] == "AND"
        assert "Suggestions" in str(exc_info.value)

    def test_add_carry_from_zero_is_unsatisfiable(self):
        with pytest.raises(Unsatisfiable):
            solve_constraints(parse_prompt("Create ADD scenario with A = 0, carry, 1 example."), seed=0)

    def test_fixed_operands_that_miss_the_flag(self):
        with pytest.raises(Unsatisfiable):
            solve_constraints(parse_prompt("Create ADD scenario with A = 3, B = 4, zero, 1 example."), seed=0)

    def test_negative_seed_is_rejected(self, add_prompt):
        with pytest.raises(ValueError):
            solve_constraints(parse_prompt(add_prompt), seed=-1)

    @pytest.mark.parametrize("prompt", DETERMINISM_PROMPTS + ["Create XOR scenario with no zero, 4 examples."])
    def test_every_row_satisfies_every_constraint(self, prompt):
        spec = parse_prompt(prompt)
        for seed in range(20):
            for a, b in solve_constraints(spec, seed):
                assert all(c.holds(a, b, spec.op, 16) for c in spec.constraints)

    def test_boundary_values_are_drawn(self):
        pairs = solve_constraints(PromptSpec(op=AluOp.ADD, count=200), seed=7)
        edges = set(edge_values(16))
        assert any(a in edges or b in edges for a, b in pairs)

    def test_edge_values(self):
        assert edge_values(8) == (0, 1, 0x7F, 0x80, 0xFE, 0xFF)


class TestTemplateEngine:
    """Test template-engine generation"""

    def test_reference_prompt_structure(self, add_prompt):
        ast = generate_with_templates(parse_prompt(add_prompt), seed=42)
        assert ast.name == "16-bit ALU ADD operation"
        assert ast.description == f"Generated from: {add_prompt}"
        assert len(ast.scenarios) == 1

        outline = ast.scenarios[0]
        assert outline.name == "ADD behaves per specification"
        assert outline.examples.columns == ("A", "B", "result", "carry", "zero", "overflow")
        assert len(outline.examples.rows) == 3
        for row in outline.examples.rows:
            assert row[0] == row[1]
            assert all(re.fullmatch(r"0x[0-9A-F]{4}", cell) for cell in row[:3])

    def test_rendered_text_has_generator_comment(self, generated_feature_text):
        assert generated_feature_text.startswith("# Generated by gherkin-hdl (template engine, seed 42)")

    def test_sub_to_zero_expectations(self):
        ast = generate_with_templates(parse_prompt("Create SUB scenario with zero, 1 example."), seed=5)
        row = ast.scenarios[0].examples.row_values(0)
        assert row["result"] == "0x0000"
        assert row["zero"] == "1"

    @pytest.mark.parametrize("width,digits", [(4, 1), (8, 2), (12, 3), (32, 8)])
    def test_digit_count_follows_width(self, width, digits):
        ast = generate_with_templates(parse_prompt("Create OR scenario, 2 examples.", width), seed=0, width=width)
        assert ast.name == f"{width}-bit ALU OR operation"
        for row in ast.scenarios[0].examples.rows:
            assert len(row[0]) == 2 + digits

    @pytest.mark.parametrize("prompt", DETERMINISM_PROMPTS)
    def test_deterministic_and_oracle_clean(self, prompt):
        spec = parse_prompt(prompt)
        for seed in range(100):
            text = render_feature_text(spec, seed)
            assert render_feature_text(spec, seed) == text
            ast = parse_feature(text)
            report = validate_against_oracle(ast)
            assert report.clean
            assert report.total_rows == spec.count

    def test_forge_feature_record(self, add_prompt):
        ast, record = forge_feature(parse_prompt(add_prompt), seed=42)
        assert record.provider == ProviderKind.TEMPLATE
        assert record.corrections == 0
        assert record.prompt_text == add_prompt
        assert record.feature_text == print_feature(ast)
        assert record.summary() == "provider=Template seed=42 corrections=0"

    def test_template_records_cannot_carry_corrections(self):
        with pytest.raises(ValueError):
            GenerationRecord(prompt_text="p", seed=0, provider=ProviderKind.TEMPLATE, corrections=1, feature_text="")

    def test_cases_compile(self, generated_feature_text):
        cases = compile_feature(parse_feature(generated_feature_text), 16)
        assert [c.name for c in cases] == [f"ADD behaves per specification [{k}]" for k in (1, 2, 3)]


class TestValidateAgainstOracle:
    """Test oracle validation"""

    def test_hand_written_outline_is_clean(self, add_outline_source):
        report = validate_against_oracle(parse_feature(add_outline_source))
        assert report.clean
        assert report.total_rows == 3

    def test_wrong_sum(self, wrong_sum_source):
        report = validate_against_oracle(parse_feature(wrong_sum_source))
        assert report.total_rows == 1
        assert len(report.mismatches) == 1
        mismatch = report.mismatches[0]
        assert (mismatch.scenario, mismatch.field, mismatch.found, mismatch.oracle) == ("five plus five", "result", 11, 10)

    def test_empty_feature(self):
        report = validate_against_oracle(parse_feature("Feature: Nothing\n"))
        assert report.total_rows == 0
        assert report.clean

    def test_mismatch_rows_are_indexed(self, generated_feature_text):
        report = validate_against_oracle(corrupt(parse_feature(generated_feature_text), row=2, column="carry"))
        assert [(m.row, m.field) for m in report.mismatches] == [(2, "carry")]


class TestRepairFeature:
    """Test oracle repair"""

    def test_plain_scenario_literal(self, wrong_sum_source):
        repaired, corrections = repair_feature(parse_feature(wrong_sum_source))
        assert corrections == 1
        assert repaired.scenarios[0].steps[-1].text == "the result should be 10"
        assert validate_against_oracle(repaired).clean

    def test_outline_placeholder_cell(self, generated_feature_text):
        original = parse_feature(generated_feature_text)
        repaired, corrections = repair_feature(corrupt(original, row=1))
        assert corrections == 1
        assert repaired == original

    def test_outline_literal_gets_its_own_column(self):
        source = (
            "Feature: Literal carry\n"
            "  Scenario Outline: carry literal\n"
            "    Given the operands are A = <A> and B = <B>\n"
            "    When the operation ADD is performed\n"
            "    Then the result should be <result>\n"
            "    And the carry flag should be 1\n"
            "\n"
            "    Examples:\n"
            "      | A      | B      | result |\n"
            "      | 5      | 5      | 10     |\n"
            "      | 0xFFFF | 0x0001 | 0      |\n"
        )
        repaired, corrections = repair_feature(parse_feature(source))
        outline = repaired.scenarios[0]

        assert corrections == 1
        assert outline.steps[-1].text == "the carry flag should be <carry>"
        assert outline.examples.columns == ("A", "B", "result", "carry")
        assert [row[3] for row in outline.examples.rows] == ["0", "1"]
        assert validate_against_oracle(repaired).clean

    def test_shared_placeholder_is_split(self):
        source = (
            "Feature: Identity\n"
            "  Scenario Outline: adding zero\n"
            "    Given the operands are A = <A> and B = <B>\n"
            "    When the operation ADD is performed\n"
            "    Then the result should be <A>\n"
            "\n"
            "    Examples:\n"
            "      | A | B |\n"
            "      | 5 | 0 |\n"
            "      | 3 | 1 |\n"
        )
        repaired, corrections = repair_feature(parse_feature(source))
        outline = repaired.scenarios[0]

        assert corrections == 1
        assert outline.examples.columns == ("A", "B", "result")
        assert outline.examples.rows == (("5", "0", "5"), ("3", "1", "4"))
        assert validate_against_oracle(repaired).clean

    def test_clean_feature_is_untouched(self, add_outline_source):
        ast = parse_feature(add_outline_source)
        assert repair_feature(ast) == (ast, 0)

    @pytest.mark.parametrize(
        "found,value,expected",
        [("0x000B", 10, "0x000A"), ("0x00ff", 255 - 1, "0x00fe"), ("0b0011", 2, "0b0010"), ("-3", 0xFFFE, "-2"), ("11", 10, "10")],
    )
    def test_format_like(self, found, value, expected):
        assert format_like(found, value, 16) == expected


class TestGenerateWithProvider:
    """Test provider-backed generation through the offline stub"""

    def test_correct_output_needs_no_corrections(self, add_prompt, generated_feature_text):
        spec = parse_prompt(add_prompt)
        ast, record = generate_with_provider(spec, stub_for(spec, generated_feature_text), seed=42)

        assert ast == parse_feature(generated_feature_text)
        assert record.provider == ProviderKind.REMOTE
        assert record.corrections == 0
        assert record.feature_text == print_feature(ast)

    def test_repair_mode_fixes_one_cell(self, add_prompt, generated_feature_text):
        spec = parse_prompt(add_prompt)
        wrong = print_feature(corrupt(parse_feature(generated_feature_text)))

        ast, record = generate_with_provider(spec, stub_for(spec, wrong), mode=GenerationMode.REPAIR)

        assert record.corrections == 1
        assert validate_against_oracle(ast).clean

    def test_strict_mode_rejects_mismatches(self, add_prompt, generated_feature_text):
        spec = parse_prompt(add_prompt)
        wrong = print_feature(corrupt(parse_feature(generated_feature_text)))

        with pytest.raises(OracleMismatch) as exc_info:
            generate_with_provider(spec, stub_for(spec, wrong), mode=GenerationMode.STRICT)
        assert exc_info.value.exit_code == 1
        assert [m.field for m in exc_info.value.report.mismatches] == ["result"]

    def test_prose_is_not_parseable(self, add_prompt):
        spec = parse_prompt(add_prompt)
        prose = "Sure! Here are three scenarios for your adder."
        with pytest.raises(NonParseableOutput) as exc_info:
            generate_with_provider(spec, stub_for(spec, prose))
        assert exc_info.value.text == prose

    def test_uncompilable_feature_is_not_parseable(self, add_prompt):
        spec = parse_prompt(add_prompt)
        text = (
            "Feature: Vague\n"
            "  Scenario: adds\n"
            "    Given the operands are A = 1 and B = 1\n"
            "    When the operation ADD is performed\n"
            "    Then the sum looks fine\n"
        )
        with pytest.raises(NonParseableOutput):
            generate_with_provider(spec, stub_for(spec, text))

    def test_row_count_mismatch_is_logged(self, generated_feature_text, caplog):
        spec = parse_prompt("Create ADD scenario with A = B, 2 examples.")
        with caplog.at_level(logging.WARNING, logger="gherkin_hdl.forge"):
            generate_with_provider(spec, stub_for(spec, generated_feature_text))
        assert "3 case(s), 2 requested" in caplog.text

    def test_request_content(self, add_prompt):
        request = build_request(parse_prompt(add_prompt))
        assert add_prompt in request.prompt
        assert "16-bit" in request.prompt
        assert request.grammar == STEP_GRAMMAR
        assert request.count == 3


class TestStubProvider:
    """Test the offline stub provider"""

    def test_saved_responses_are_loaded(self, tmp_path):
        request = GenerationRequest(prompt="Create ADD scenario, 1 example.", grammar="g", count=1)
        path = StubProvider.save(tmp_path, request, "Feature: Saved\n")

        assert path.parent == tmp_path
        assert json.loads(path.read_text()) == {"feature": "Feature: Saved\n"}
        assert StubProvider(directory=tmp_path).generate(request) == "Feature: Saved\n"

    def test_missing_response(self, tmp_path):
        provider = StubProvider(directory=tmp_path)
        request = GenerationRequest(prompt="unknown prompt", grammar="g", count=1)
        with pytest.raises(ProviderError) as exc_info:
            provider.generate(request)
        assert StubProvider.prompt_key("unknown prompt") in str(exc_info.value)
        assert provider.get_stats() == {"name": "stub", "kind": "Remote", "request_count": 1, "error_count": 1}

    def test_malformed_response_file(self, tmp_path):
        request = GenerationRequest(prompt="p", grammar="g", count=1)
        StubProvider.response_path(tmp_path, "p").write_text('{"text": "nope"}', encoding="utf-8")
        with pytest.raises(ProviderError):
            StubProvider(directory=tmp_path).generate(request)


class TestRemoteProvider:
    """Test the HTTP provider against a mock transport"""

    @pytest.fixture
    def request_body(self):
        return GenerationRequest(prompt="Create ADD scenario, 1 example.", grammar="grammar", count=1)

    def test_success(self, request_body):
        seen = []

        def handler(request):
            seen.append((json.loads(request.content), request.headers.get("authorization")))
            return httpx.Response(200, json={"feature": "Feature: Remote\n"})

        provider = RemoteProvider("https://llm.example/generate", api_key="k", transport=httpx.MockTransport(handler))

        assert provider.generate(request_body) == "Feature: Remote\n"
        assert seen == [({"prompt": "Create ADD scenario, 1 example.", "grammar": "grammar", "count": 1}, "Bearer k")]
        assert provider.get_stats()["request_count"] == 1

    def test_no_key_no_authorization_header(self, request_body):
        def handler(request):
            assert "authorization" not in request.headers
            return httpx.Response(200, json={"feature": "Feature: Open\n"})

        provider = RemoteProvider("https://llm.example/generate", transport=httpx.MockTransport(handler))
        assert provider.generate(request_body) == "Feature: Open\n"

    def test_server_error(self, request_body):
        provider = RemoteProvider(
            "https://llm.example/generate", transport=httpx.MockTransport(lambda request: httpx.Response(500))
        )
        with pytest.raises(ProviderError):
            provider.generate(request_body)
        assert provider.error_count == 1

    def test_timeout(self, request_body):
        def handler(request):
            raise httpx.ReadTimeout("slow", request=request)

        provider = RemoteProvider("https://llm.example/generate", timeout=2, transport=httpx.MockTransport(handler))
        with pytest.raises(ProviderError) as exc_info:
            provider.generate(request_body)
        assert "timed out after 2s" in str(exc_info.value)

    def test_bad_body(self, request_body):
        provider = RemoteProvider(
            "https://llm.example/generate",
            transport=httpx.MockTransport(lambda request: httpx.Response(200, text="not json")),
        )
        with pytest.raises(ProviderError):
            provider.generate(request_body)

    def test_from_settings(self):
        provider = RemoteProvider.from_settings(ProviderSettings(endpoint="https://llm.example", api_key="k", timeout=5))
        assert (provider.endpoint, provider.api_key, provider.timeout) == ("https://llm.example", "k", 5)

    def test_from_settings_without_endpoint(self):
        with pytest.raises(ProviderError):
            RemoteProvider.from_settings(ProviderSettings(endpoint=None))
