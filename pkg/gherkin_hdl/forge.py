"""
Scenario forge: prompt language, constraint solver, template engine and oracle checks

Generation is hybrid: the local template engine is the primary path and a
remote provider is optional. Expected values are always computed (template
engine) or verified and optionally repaired (provider) against the golden
model, never trusted.
"""

import logging
import re
from typing import Annotated, Callable, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .ai.protocol import GenerationMode, GenerationRequest, ProviderKind
from .ai.providers import GenerationProvider
from .alu import DEFAULT_WIDTH, AluOp, AluVector, check_width, evaluate, signed_view, word_mask
from .compiler import STEP_GRAMMAR, CompiledCase, compile_origins, match_phrase, parse_int_literal
from .exceptions import (
    CompilationError,
    FeatureSyntaxError,
    LiteralFormatError,
    LiteralRangeError,
    NonParseableOutput,
    OracleMismatch,
    PromptSyntaxError,
    Unsatisfiable,
)
from .gherkin import (
    PLACEHOLDER,
    ExamplesTable,
    FeatureAst,
    ScenarioKind,
    ScenarioNode,
    Step,
    parse_feature,
    print_feature,
)
from .prng import SplitMix64, check_seed
from .templating import render_template

logger = logging.getLogger(__name__)

MAX_DRAWS_PER_ROW = 10_000
TEMPLATE_FLAGS = ("carry", "zero", "overflow")


class EqualOperands(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["equal_operands"] = "equal_operands"

    def describe(self) -> str:
        return "A = B"

    def holds(self, a: int, b: int, op: AluOp, width: int) -> bool:
        return a == b


class FixedA(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["fixed_a"] = "fixed_a"
    value: int = Field(..., ge=0)

    def describe(self) -> str:
        return f"A = {self.value}"

    def holds(self, a: int, b: int, op: AluOp, width: int) -> bool:
        return a == self.value


class FixedB(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["fixed_b"] = "fixed_b"
    value: int = Field(..., ge=0)

    def describe(self) -> str:
        return f"B = {self.value}"

    def holds(self, a: int, b: int, op: AluOp, width: int) -> bool:
        return b == self.value


class FlagGoal(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["flag_goal"] = "flag_goal"
    flag: Literal["carry", "zero", "overflow"]
    value: Literal[0, 1] = 1

    def describe(self) -> str:
        return self.flag if self.value else f"no {self.flag}"

    def holds(self, a: int, b: int, op: AluOp, width: int) -> bool:
        response = evaluate(AluVector(op=op, a=a, b=b, width=width))
        return getattr(response.flags, self.flag) == self.value


Constraint = Annotated[Union[EqualOperands, FixedA, FixedB, FlagGoal], Field(discriminator="kind")]


class PromptSpec(BaseModel):
    """Parsed form of a generation prompt"""

    model_config = ConfigDict(frozen=True)

    op: AluOp
    constraints: Tuple[Constraint, ...] = ()
    count: int = Field(..., ge=1)

    def render(self) -> str:
        """Canonical prompt text that parses back to this value"""
        noun = "example" if self.count == 1 else "examples"
        if self.constraints:
            with_part = " with " + ", ".join(c.describe() for c in self.constraints)
        else:
            with_part = ""
        return f"Create {self.op.name} scenario{with_part}, {self.count} {noun}."


class GenerationRecord(BaseModel):
    """Audit record of one generation run"""

    model_config = ConfigDict(frozen=True)

    prompt_text: str
    seed: int = Field(..., ge=0)
    provider: ProviderKind
    corrections: int = Field(0, ge=0)
    feature_text: str

    @model_validator(mode="after")
    def check_corrections(self):
        if self.provider == ProviderKind.TEMPLATE and self.corrections:
            raise ValueError("template-engine output is never corrected")
        return self

    def summary(self) -> str:
        return f"provider={self.provider.value} seed={self.seed} corrections={self.corrections}"


class Mismatch(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: str
    row: int
    field: str
    found: int
    oracle: int


class ValidationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    total_rows: int = 0
    mismatches: Tuple[Mismatch, ...] = ()

    @property
    def clean(self) -> bool:
        return not self.mismatches


# Prompt language


_COUNT = re.compile(r"(\d+)\s+examples?", re.IGNORECASE)
_ASSIGNMENT = re.compile(r"([AB])\s*=\s*(\S+)", re.IGNORECASE)
_FLAG_WORDS = {
    "carry": ("carry", 1),
    "no carry": ("carry", 0),
    "overflow": ("overflow", 1),
    "no overflow": ("overflow", 0),
    "zero": ("zero", 1),
    "no zero": ("zero", 0),
}


def _parse_constraint(text: str, width: int):
    normalized = " ".join(text.split())
    if not normalized:
        raise PromptSyntaxError(",", "has an empty constraint before")

    assignment = _ASSIGNMENT.fullmatch(normalized)
    if assignment:
        lhs, rhs = assignment.group(1).upper(), assignment.group(2)
        if rhs.upper() in ("A", "B"):
            if rhs.upper() == lhs:
                raise PromptSyntaxError(rhs, "compares an operand with itself")
            return EqualOperands()
        try:
            value = parse_int_literal(rhs, width)
        except LiteralFormatError:
            raise PromptSyntaxError(rhs, "expects a literal")
        except LiteralRangeError:
            raise PromptSyntaxError(rhs, f"literal does not fit in {width} bits")
        return FixedA(value=value) if lhs == "A" else FixedB(value=value)

    flag = _FLAG_WORDS.get(normalized.lower())
    if flag is not None:
        return FlagGoal(flag=flag[0], value=flag[1])
    raise PromptSyntaxError(normalized, "has an unknown constraint")


def parse_prompt(text: str, width: int = DEFAULT_WIDTH) -> PromptSpec:
    """Parse ``Create <OP> scenario [with <constraint>{, <constraint>}], <N> example[s].``

    Raises:
        PromptSyntaxError: With the offending token
        UnknownOperation: If ``<OP>`` is not an ALU operation
    """
    body = text.strip()
    if not body:
        raise PromptSyntaxError("", "is empty")
    if body.endswith("."):
        body = body[:-1].rstrip()

    parts = [part.strip() for part in body.split(",")]
    if len(parts) < 2:
        raise PromptSyntaxError(body.split()[-1], "must end with ', <N> examples'")
    head, middle, tail = parts[0], parts[1:-1], parts[-1]

    tokens = head.split()
    if not tokens:
        raise PromptSyntaxError(",", "must start with 'Create'")
    if tokens[0].lower() != "create":
        raise PromptSyntaxError(tokens[0], "must start with 'Create'")
    if len(tokens) < 3 or tokens[2].lower() not in ("scenario", "scenarios"):
        raise PromptSyntaxError(tokens[2] if len(tokens) > 2 else tokens[-1], "expects 'scenario' after the operation")

    constraint_texts = list(middle)
    if len(tokens) > 3:
        if tokens[3].lower() != "with":
            raise PromptSyntaxError(tokens[3])
        if len(tokens) == 4:
            raise PromptSyntaxError(tokens[3], "has no constraint after")
        constraint_texts.insert(0, " ".join(tokens[4:]))
    elif middle:
        raise PromptSyntaxError(middle[0], "lists constraints without 'with'")

    count_match = _COUNT.fullmatch(" ".join(tail.split()))
    if not count_match:
        raise PromptSyntaxError(tail.split()[0] if tail else ",", "expects '<N> examples'")
    count = int(count_match.group(1))
    if count < 1:
        raise PromptSyntaxError(count_match.group(1), "needs at least one example")

    op = AluOp.from_name(tokens[1])
    constraints = tuple(_parse_constraint(c, width) for c in constraint_texts)
    return PromptSpec(op=op, constraints=constraints, count=count)


# Constraint solving


def edge_values(width: int) -> Tuple[int, ...]:
    half = 1 << (width - 1)
    mask = word_mask(width)
    return (0, 1, half - 1, half, mask - 1, mask)


def _draw_operand(rng: SplitMix64, width: int) -> int:
    # one draw in four comes from the boundary pool
    if rng.below(4) == 0:
        return rng.choice(edge_values(width))
    return rng.below(1 << width)


def satisfies(spec: PromptSpec, a: int, b: int, width: int) -> bool:
    return all(c.holds(a, b, spec.op, width) for c in spec.constraints)


def _overflow_partner(rng: SplitMix64, x: int, width: int) -> Optional[int]:
    half = 1 << (width - 1)
    sx = signed_view(x, width)
    if sx > 0:
        return rng.randint(half - sx, half - 1)
    if sx < 0:
        return rng.randint(-half, -half - 1 - sx) % (1 << width)
    return None


def _carry_partner(rng: SplitMix64, x: int, width: int) -> Optional[int]:
    if x == 0:
        return None
    return rng.randint((1 << width) - x, word_mask(width))


def _paired(
    partner: Callable[[SplitMix64, int, int], Optional[int]],
    self_pair: Callable[[SplitMix64, int], int],
):
    """Build a constructive sampler from a partner rule and an equal-operand rule"""

    def sample(rng, width, fixed_a, fixed_b, equal):
        if equal:
            a = self_pair(rng, width)
            return a, a
        if fixed_a is not None and fixed_b is not None:
            return fixed_a, fixed_b
        if fixed_a is not None:
            b = partner(rng, fixed_a, width)
            return None if b is None else (fixed_a, b)
        if fixed_b is not None:
            a = partner(rng, fixed_b, width)
            return None if a is None else (a, fixed_b)
        a = rng.randint(1, word_mask(width))
        return a, partner(rng, a, width)

    return sample


def _overflow_self(rng: SplitMix64, width: int) -> int:
    half, quarter = 1 << (width - 1), 1 << (width - 2)
    if rng.below(2):
        return rng.randint(quarter, half - 1)
    return rng.randint(half, half + quarter - 1)


def _carry_self(rng: SplitMix64, width: int) -> int:
    return rng.randint(1 << (width - 1), word_mask(width))


def _sub_to_zero(rng, width, fixed_a, fixed_b, equal):
    if fixed_a is not None and fixed_b is not None:
        return fixed_a, fixed_b
    value = fixed_a if fixed_a is not None else fixed_b
    if value is None:
        value = _draw_operand(rng, width)
    return value, value


CONSTRUCTIVE_RULES = {
    (AluOp.ADD, "overflow"): _paired(_overflow_partner, _overflow_self),
    (AluOp.ADD, "carry"): _paired(_carry_partner, _carry_self),
    (AluOp.SUB, "zero"): _sub_to_zero,
}


def _solve_row(spec: PromptSpec, rng: SplitMix64, width: int, row: int) -> Tuple[int, int]:
    fixed_a = next((c.value for c in spec.constraints if isinstance(c, FixedA)), None)
    fixed_b = next((c.value for c in spec.constraints if isinstance(c, FixedB)), None)
    equal = any(isinstance(c, EqualOperands) for c in spec.constraints)
    described = [c.describe() for c in spec.constraints]

    for value in (fixed_a, fixed_b):
        if value is not None and value > word_mask(width):
            raise Unsatisfiable(spec.op.name, described, row)

    # fully determined pairs need a single check
    if fixed_a is not None and (fixed_b is not None or equal) or fixed_b is not None and equal:
        a = fixed_a if fixed_a is not None else fixed_b
        b = fixed_b if fixed_b is not None else a
        if satisfies(spec, a, b, width):
            return a, b
        raise Unsatisfiable(spec.op.name, described, row)

    for _ in range(MAX_DRAWS_PER_ROW):
        a = fixed_a if fixed_a is not None else _draw_operand(rng, width)
        b = fixed_b if fixed_b is not None else (a if equal else _draw_operand(rng, width))
        if satisfies(spec, a, b, width):
            return a, b

    for goal in spec.constraints:
        if not isinstance(goal, FlagGoal) or goal.value != 1:
            continue
        rule = CONSTRUCTIVE_RULES.get((spec.op, goal.flag))
        if rule is None:
            continue
        logger.debug(f"Rejection cap reached for {spec.op.name}; constructing {goal.flag} operands")
        for _ in range(MAX_DRAWS_PER_ROW):
            pair = rule(rng, width, fixed_a, fixed_b, equal)
            if pair is None:
                break
            if satisfies(spec, *pair, width):
                return pair

    raise Unsatisfiable(spec.op.name, described, row)


def solve_constraints(spec: PromptSpec, seed: int, width: int = DEFAULT_WIDTH) -> List[Tuple[int, int]]:
    """Draw ``spec.count`` operand pairs satisfying every constraint

    Raises:
        Unsatisfiable: If a row cannot be satisfied by sampling or construction
    """
    check_width(width)
    rng = SplitMix64(check_seed(seed))
    return [_solve_row(spec, rng, width, row) for row in range(spec.count)]


# Generation


def format_word(value: int, width: int) -> str:
    return f"0x{value:0{(width + 3) // 4}X}"


def outline_name(op: AluOp) -> str:
    return f"{op.name} behaves per specification"


def template_flags(spec: PromptSpec) -> List[str]:
    flags = list(TEMPLATE_FLAGS)
    for c in spec.constraints:
        if isinstance(c, FlagGoal) and c.flag not in flags:
            flags.append(c.flag)
    return flags


def render_feature_text(spec: PromptSpec, seed: int, width: int = DEFAULT_WIDTH) -> str:
    """Render the template engine's feature text (before canonical printing)"""
    flags = template_flags(spec)
    rows = []
    for a, b in solve_constraints(spec, seed, width):
        response = evaluate(AluVector(op=spec.op, a=a, b=b, width=width))
        cells = [format_word(a, width), format_word(b, width), format_word(response.result, width)]
        cells.extend(str(getattr(response.flags, flag)) for flag in flags)
        rows.append(cells)

    return render_template(
        "feature.j2",
        seed=seed,
        feature_name=f"{width}-bit ALU {spec.op.name} operation",
        description=[f"Generated from: {spec.render()}"],
        outline_name=outline_name(spec.op),
        op=spec.op.name,
        flags=flags,
        columns=["A", "B", "result"] + flags,
        rows=rows,
    )


def generate_with_templates(spec: PromptSpec, seed: int, width: int = DEFAULT_WIDTH) -> FeatureAst:
    """Generate an oracle-filled Scenario Outline with the local template engine"""
    ast = parse_feature(render_feature_text(spec, seed, width))
    logger.info(f"Template engine generated {spec.count} example(s) for {spec.op.name} (seed {seed})")
    return ast


def build_request(spec: PromptSpec, width: int = DEFAULT_WIDTH) -> GenerationRequest:
    prompt = render_template(
        "provider_prompt.j2",
        prompt=spec.render(),
        width=width,
        op=spec.op.name,
        count=spec.count,
        constraints=[c.describe() for c in spec.constraints],
    )
    return GenerationRequest(prompt=prompt, grammar=STEP_GRAMMAR, count=spec.count)


def generate_with_provider(
    spec: PromptSpec,
    provider: GenerationProvider,
    mode: GenerationMode = GenerationMode.STRICT,
    width: int = DEFAULT_WIDTH,
    seed: int = 0,
) -> Tuple[FeatureAst, GenerationRecord]:
    """Ask a provider for a feature, then parse, compile and oracle-check it

    Raises:
        ProviderError: Transport failures
        NonParseableOutput: Provider text that does not parse or compile
        OracleMismatch: Wrong expectations in Strict mode
    """
    check_seed(seed)
    request = build_request(spec, width)
    text = provider.generate(request)

    try:
        ast = parse_feature(text)
    except FeatureSyntaxError as e:
        raise NonParseableOutput(str(e), text) from e
    try:
        report = validate_against_oracle(ast, width)
    except CompilationError as e:
        raise NonParseableOutput(str(e), text) from e

    if report.total_rows != spec.count:
        logger.warning(f"Provider returned {report.total_rows} case(s), {spec.count} requested")

    corrections = 0
    if report.mismatches:
        if mode == GenerationMode.STRICT:
            raise OracleMismatch(report)
        ast, corrections = repair_feature(ast, width)
        logger.warning(f"Repaired {corrections} expectation cell(s) from the golden model")

    record = GenerationRecord(
        prompt_text=request.prompt,
        seed=seed,
        provider=provider.kind,
        corrections=corrections,
        feature_text=print_feature(ast),
    )
    return ast, record


def forge_feature(
    spec: PromptSpec,
    seed: int = 0,
    width: int = DEFAULT_WIDTH,
    provider: Optional[GenerationProvider] = None,
    mode: GenerationMode = GenerationMode.STRICT,
) -> Tuple[FeatureAst, GenerationRecord]:
    """Template engine by default, provider when one is given"""
    if provider is not None:
        return generate_with_provider(spec, provider, mode=mode, width=width, seed=seed)
    ast = generate_with_templates(spec, seed, width)
    record = GenerationRecord(
        prompt_text=spec.render(),
        seed=seed,
        provider=ProviderKind.TEMPLATE,
        corrections=0,
        feature_text=print_feature(ast),
    )
    return ast, record


# Oracle validation and repair


def _mismatches(compiled: List[CompiledCase]) -> List[Mismatch]:
    found = []
    for item in compiled:
        response = evaluate(item.case.stimulus)
        for name, expected in item.case.expect.present().items():
            actual = response.field(name)
            if expected != actual:
                found.append(
                    Mismatch(scenario=item.origin.name, row=item.row, field=name, found=expected, oracle=actual)
                )
    return found


def validate_against_oracle(ast: FeatureAst, width: int = DEFAULT_WIDTH) -> ValidationReport:
    """Compare every present expectation with the golden model

    Raises:
        CompilationError: If the feature does not compile
    """
    compiled = compile_origins(ast, width)
    return ValidationReport(total_rows=len(compiled), mismatches=tuple(_mismatches(compiled)))


def format_like(found: str, value: int, width: int) -> str:
    """Render ``value`` in the radix and digit count of the literal it replaces"""
    text = found.strip()
    prefix = text[:2]
    if prefix.lower() == "0x":
        digits = text[2:]
        rendered = f"{value:0{len(digits)}X}"
        return prefix + (rendered.lower() if digits and digits == digits.lower() and not digits.isdigit() else rendered)
    if prefix.lower() == "0b":
        return prefix + f"{value:0{len(text) - 2}b}"
    if text.startswith("-"):
        return str(signed_view(value, width))
    return str(value)


def _expectation_step(scenario: ScenarioNode, field: str):
    for index, step in enumerate(scenario.steps):
        match = match_phrase(step.resolved_keyword, step.text)
        if match is not None and match.field == field:
            return index, match
    raise LookupError(f"no step of {scenario.name!r} binds {field}")


def _rewrite_step(step: Step, match, replacement: str) -> Step:
    start, end = match.spans[match.value_group]
    text = match.text[:start] + replacement + match.text[end:]
    return Step(keyword=step.keyword, text=text, resolved_keyword=step.resolved_keyword, line=step.line)


def _fresh_column(name: str, columns: List[str]) -> str:
    candidate, n = name, 1
    while candidate in columns:
        candidate = f"{name}_{n}"
        n += 1
    return candidate


def _repair_scenario(scenario: ScenarioNode, fixes: List[Mismatch], width: int) -> Tuple[ScenarioNode, int]:
    steps = list(scenario.steps)
    corrections = 0

    if scenario.kind == ScenarioKind.PLAIN:
        for fix in fixes:
            index, match = _expectation_step(scenario, fix.field)
            found = match.groups[match.value_group]
            steps[index] = _rewrite_step(steps[index], match, format_like(found, fix.oracle, width))
            corrections += 1
        return scenario.model_copy(update={"steps": tuple(steps)}), corrections

    columns = list(scenario.examples.columns)
    rows = [list(row) for row in scenario.examples.rows]
    for field in dict.fromkeys(fix.field for fix in fixes):
        index, match = _expectation_step(scenario, field)
        raw = match.groups[match.value_group]
        placeholder = PLACEHOLDER.fullmatch(raw)
        uses = sum(s.text.count(raw) for s in steps) if placeholder else 0

        if placeholder and uses == 1:
            column = columns.index(placeholder.group(1))
        else:
            # literal (or shared placeholder) in the outline: give the field its own column
            new_name = _fresh_column(field, columns)
            for row in rows:
                row.append(row[columns.index(placeholder.group(1))] if placeholder else raw)
            columns.append(new_name)
            column = len(columns) - 1
            steps[index] = _rewrite_step(steps[index], match, f"<{new_name}>")

        for fix in fixes:
            if fix.field == field:
                rows[fix.row][column] = format_like(rows[fix.row][column], fix.oracle, width)
                corrections += 1

    repaired = ScenarioNode(
        name=scenario.name,
        kind=scenario.kind,
        steps=steps,
        examples=ExamplesTable(columns=columns, rows=rows),
        line=scenario.line,
    )
    return repaired, corrections


def repair_feature(ast: FeatureAst, width: int = DEFAULT_WIDTH) -> Tuple[FeatureAst, int]:
    """Replace every expectation that disagrees with the golden model by the oracle value

    Returns:
        The repaired AST and the number of cells replaced
    """
    mismatches = _mismatches(compile_origins(ast, width))
    by_scenario: Dict[str, List[Mismatch]] = {}
    for mismatch in mismatches:
        by_scenario.setdefault(mismatch.scenario, []).append(mismatch)

    scenarios = []
    corrections = 0
    for scenario in ast.scenarios:
        fixes = by_scenario.get(scenario.name)
        if not fixes:
            scenarios.append(scenario)
            continue
        repaired, count = _repair_scenario(scenario, fixes, width)
        scenarios.append(repaired)
        corrections += count
    return FeatureAst(name=ast.name, description=ast.description, scenarios=scenarios), corrections
