"""
Step compiler: binds hardware step phrases to ALU stimulus and expectations

Step grammar (keywords case-insensitive, whitespace-normalized)::

    Given the ALU is reset
    Given the operands are A = <lit> and B = <lit>
    When  the operation <OPNAME> is performed
    When  the operation is <OPNAME>
    Then  the result should be <lit>
    Then  the <carry|zero|overflow|negative> flag should be <0|1>

Literals are decimal (optionally negative), ``0x`` hexadecimal or ``0b`` binary.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

from .alu import FLAG_NAMES, AluOp, AluVector, check_width
from .exceptions import (
    CompilationError,
    DuplicateBinding,
    LiteralFormatError,
    LiteralRangeError,
    MissingStimulus,
    StepBindingError,
    UnknownOperation,
    UnknownStep,
)
from .gherkin import FeatureAst, ScenarioKind, ScenarioNode, StepKeyword, expand_scenario

EXPECTATION_FIELDS = ("result",) + FLAG_NAMES

_LITERAL = re.compile(r"(-?)(0[xX][0-9A-Fa-f]+|0[bB][01]+|[0-9]+)")
_OPNAMES = "|".join(op.name for op in AluOp)
_VALUE = r"\S+"

# (keyword class, kind, pattern)
_PHRASES: List[Tuple[StepKeyword, str, "re.Pattern[str]"]] = [
    (StepKeyword.GIVEN, "reset", re.compile(r"the alu is reset", re.IGNORECASE)),
    (
        StepKeyword.GIVEN,
        "operands",
        re.compile(rf"(?:the )?operands (?:are )?A ?= ?(?P<a>{_VALUE}) and B ?= ?(?P<b>{_VALUE})", re.IGNORECASE),
    ),
    (StepKeyword.WHEN, "operation", re.compile(rf"the operation (?P<op>{_OPNAMES}) is performed", re.IGNORECASE)),
    (StepKeyword.WHEN, "operation", re.compile(rf"the operation is (?P<op>{_OPNAMES})", re.IGNORECASE)),
    (StepKeyword.THEN, "result", re.compile(rf"the result should be (?P<result>{_VALUE})", re.IGNORECASE)),
    (
        StepKeyword.THEN,
        "flag",
        re.compile(r"the (?P<flag>carry|zero|overflow|negative) flag should be (?P<value>[01]|<\w+>)", re.IGNORECASE),
    ),
]

STEP_GRAMMAR = """\
Given the ALU is reset
Given the operands are A = <lit> and B = <lit>
When the operation <OPNAME> is performed
When the operation is <OPNAME>
Then the result should be <lit>
Then the <carry|zero|overflow|negative> flag should be <0|1>
<OPNAME>: ADD, SUB, AND, OR, XOR, NOT, SHL, SHR
<lit>: decimal (optionally negative), 0x hexadecimal or 0b binary
"""


def parse_int_literal(cell: str, width: int) -> int:
    """Convert a cell or phrase literal to an unsigned word of ``width`` bits

    Negative decimals are stored in two's complement.

    Raises:
        LiteralFormatError: If the text is not a literal
        LiteralRangeError: If the value does not fit in ``width`` bits
    """
    text = cell.strip()
    match = _LITERAL.fullmatch(text)
    if not match:
        raise LiteralFormatError(cell)
    negative, body = match.groups()
    prefix = body[:2].lower()
    if prefix == "0x":
        value = int(body[2:], 16)
    elif prefix == "0b":
        value = int(body[2:], 2)
    else:
        value = int(body, 10)

    if negative:
        if prefix in ("0x", "0b"):
            raise LiteralFormatError(cell)
        if value > 1 << (width - 1):
            raise LiteralRangeError(text, width)
        return (-value) % (1 << width)
    if value >= 1 << width:
        raise LiteralRangeError(text, width)
    return value


@dataclass(frozen=True, slots=True)
class ExpectationSet:
    """Expected result word and flags; ``None`` means unchecked"""

    result: Optional[int] = None
    carry: Optional[int] = None
    zero: Optional[int] = None
    overflow: Optional[int] = None
    negative: Optional[int] = None

    def present(self) -> Dict[str, int]:
        """Fields that are checked, in canonical order"""
        return {name: getattr(self, name) for name in EXPECTATION_FIELDS if getattr(self, name) is not None}


@dataclass(frozen=True, slots=True)
class TestCase:
    """A compiled scenario instance: one stimulus and its expectations"""

    __test__ = False

    name: str
    stimulus: AluVector
    expect: ExpectationSet
    source_lines: Tuple[int, ...] = field(default_factory=tuple)


class PhraseMatch(NamedTuple):
    kind: str
    groups: Dict[str, str]
    # span of each group inside ``text``
    spans: Dict[str, Tuple[int, int]]
    text: str

    @property
    def field(self) -> Optional[str]:
        if self.kind == "result":
            return "result"
        if self.kind == "flag":
            return self.groups["flag"].lower()
        return None

    @property
    def value_group(self) -> Optional[str]:
        return {"result": "result", "flag": "value"}.get(self.kind)


def normalize_phrase(text: str) -> str:
    return " ".join(text.split())


def match_phrase(keyword: StepKeyword, text: str) -> Optional[PhraseMatch]:
    """Match a step phrase of the given keyword class against the step grammar"""
    normalized = normalize_phrase(text)
    for phrase_keyword, kind, pattern in _PHRASES:
        if phrase_keyword != keyword:
            continue
        match = pattern.fullmatch(normalized)
        if match:
            groups = {k: v for k, v in match.groupdict().items() if v is not None}
            spans = {k: match.span(k) for k in groups}
            return PhraseMatch(kind, groups, spans, normalized)
    return None


def bind_scenario(scenario: ScenarioNode, width: int) -> TestCase:
    """Bind a plain scenario's steps to a TestCase

    Raises:
        UnknownStep: If a phrase matches no grammar entry
        MissingStimulus: If operands, operation or every expectation is missing
        DuplicateBinding: If a field is assigned twice
    """
    check_width(width)
    if scenario.kind != ScenarioKind.PLAIN:
        raise StepBindingError(f"Scenario Outline {scenario.name!r} must be expanded before binding")

    operands: Optional[Tuple[int, int]] = None
    op: Optional[AluOp] = None
    expected: Dict[str, int] = {}
    lines = []

    for step in scenario.steps:
        match = match_phrase(step.resolved_keyword, step.text)
        if match is None:
            raise UnknownStep(step.text, step.line)
        lines.append(step.line)

        if match.kind == "operands":
            if operands is not None:
                raise DuplicateBinding("operands", step.line)
            operands = (parse_int_literal(match.groups["a"], width), parse_int_literal(match.groups["b"], width))
        elif match.kind == "operation":
            if op is not None:
                raise DuplicateBinding("operation", step.line)
            op = AluOp.from_name(match.groups["op"])
        elif match.kind in ("result", "flag"):
            name = match.field
            if name in expected:
                raise DuplicateBinding(name, step.line)
            raw = match.groups[match.value_group]
            if match.kind == "flag":
                if raw not in ("0", "1"):
                    raise UnknownStep(step.text, step.line)
                expected[name] = int(raw)
            else:
                expected[name] = parse_int_literal(raw, width)

    if operands is None:
        raise MissingStimulus(f"scenario {scenario.name!r} has no operands step")
    if op is None:
        raise MissingStimulus(f"scenario {scenario.name!r} has no operation step")
    if not expected:
        raise MissingStimulus(f"scenario {scenario.name!r} checks nothing")

    return TestCase(
        name=scenario.name,
        stimulus=AluVector(op=op, a=operands[0], b=operands[1], width=width),
        expect=ExpectationSet(**expected),
        source_lines=tuple(lines),
    )


class CompiledCase(NamedTuple):
    """A TestCase together with the scenario and Examples row it came from"""

    origin: ScenarioNode
    row: int
    case: TestCase


def compile_origins(ast: FeatureAst, width: int) -> List[CompiledCase]:
    """Compile every scenario, keeping track of origin scenario and row index

    Raises:
        CompilationError: Listing every scenario that failed, by name
    """
    check_width(width)
    compiled: List[CompiledCase] = []
    failures = []
    for origin in ast.scenarios:
        for row, scenario in enumerate(expand_scenario(origin)):
            try:
                compiled.append(CompiledCase(origin, row, bind_scenario(scenario, width)))
            except (StepBindingError, LiteralFormatError, LiteralRangeError, UnknownOperation) as e:
                failures.append((scenario.name, e))
    if failures:
        raise CompilationError(failures)
    return compiled


def compile_feature(ast: FeatureAst, width: int) -> List[TestCase]:
    """Compile every (expanded) scenario of a feature, in order"""
    return [item.case for item in compile_origins(ast, width)]
