"""
Parser, canonical printer and outline expander for the hardware Gherkin subset

Supported: ``Feature``, ``Scenario``, ``Scenario Outline``, ``Examples``,
``Given``/``When``/``Then``/``And``/``But`` and ``#`` comments.
"""

import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import FeatureSyntaxError

PLACEHOLDER = re.compile(r"<([A-Za-z_][A-Za-z0-9_]*)>")

_STEP_LINE = re.compile(r"^(Given|When|Then|And|But)\b[ \t]*(.*)$")
_LINE_BREAK = re.compile(r"\r?\n")
_INDENT = "  "
_UNSUPPORTED = ("Background:", "Rule:", "Scenario Template:", "Example:", "Scenarios:", "@", '"""', "```")
_RESERVED = ("Feature:", "Scenario Outline:", "Scenario:", "Examples:", "|", "#") + _UNSUPPORTED


class StepKeyword(str, Enum):
    GIVEN = "Given"
    WHEN = "When"
    THEN = "Then"
    AND = "And"
    BUT = "But"


class ScenarioKind(str, Enum):
    PLAIN = "Plain"
    OUTLINE = "Outline"


_CLASS_ORDER = {StepKeyword.GIVEN: 0, StepKeyword.WHEN: 1, StepKeyword.THEN: 2}


class _Node(BaseModel):
    """Immutable AST node; equality ignores source line numbers"""

    model_config = ConfigDict(frozen=True, str_strip_whitespace=True, extra="forbid")

    def __eq__(self, other: object) -> bool:
        if type(self) is not type(other):
            return NotImplemented
        return self.model_dump() == other.model_dump()

    __hash__ = None  # type: ignore[assignment]


class Step(_Node):
    keyword: StepKeyword
    text: str
    resolved_keyword: StepKeyword
    line: int = Field(default=0, exclude=True)

    @model_validator(mode="after")
    def _check_resolution(self):
        if self.resolved_keyword not in _CLASS_ORDER:
            raise ValueError("resolved keyword must be Given, When or Then")
        if self.keyword in _CLASS_ORDER and self.keyword != self.resolved_keyword:
            raise ValueError(f"{self.keyword.value} step cannot resolve to {self.resolved_keyword.value}")
        return self

    def placeholders(self) -> List[str]:
        return PLACEHOLDER.findall(self.text)


class ExamplesTable(_Node):
    columns: Tuple[str, ...]
    rows: Tuple[Tuple[str, ...], ...]

    @model_validator(mode="after")
    def _check_shape(self):
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        if not self.rows:
            raise ValueError("an Examples table needs at least one row")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(f"row {list(row)} does not match {len(self.columns)} columns")
        return self

    def row_values(self, index: int) -> Dict[str, str]:
        return dict(zip(self.columns, self.rows[index]))


class ScenarioNode(_Node):
    name: str
    kind: ScenarioKind = ScenarioKind.PLAIN
    steps: Tuple[Step, ...]
    examples: Optional[ExamplesTable] = None
    line: int = Field(default=0, exclude=True)

    @model_validator(mode="after")
    def _check_structure(self):
        if not self.steps:
            raise ValueError(f"scenario {self.name!r} has no steps")
        if self.steps[0].keyword not in _CLASS_ORDER:
            raise ValueError(f"scenario {self.name!r} starts with {self.steps[0].keyword.value}")
        if self.steps[0].resolved_keyword == StepKeyword.THEN:
            raise ValueError(f"scenario {self.name!r} starts with a Then step")
        order = [_CLASS_ORDER[step.resolved_keyword] for step in self.steps]
        if order != sorted(order):
            raise ValueError(f"steps of {self.name!r} are not in Given/When/Then order")
        classes = {step.resolved_keyword for step in self.steps}
        for required in (StepKeyword.WHEN, StepKeyword.THEN):
            if required not in classes:
                raise ValueError(f"scenario {self.name!r} has no '{required.value}' step")
        if (self.kind == ScenarioKind.OUTLINE) != (self.examples is not None):
            raise ValueError("Examples are required for, and only for, a Scenario Outline")
        if self.examples is not None:
            missing = {p for step in self.steps for p in step.placeholders()} - set(self.examples.columns)
            if missing:
                raise ValueError(f"placeholders without a column: {sorted(missing)}")
        return self

    def expanded_names(self) -> List[str]:
        """Names this scenario takes after outline expansion"""
        if self.examples is None:
            return [self.name]
        return [f"{self.name} [{k}]" for k in range(1, len(self.examples.rows) + 1)]


class FeatureAst(_Node):
    name: str = Field(min_length=1)
    description: Optional[str] = None
    scenarios: Tuple[ScenarioNode, ...] = ()

    @field_validator("description")
    @classmethod
    def _normalize_description(cls, v):
        if v is None:
            return None
        lines = [line.strip() for line in _LINE_BREAK.split(v) if line.strip()]
        for line in lines:
            if line.startswith(_RESERVED) or _STEP_LINE.match(line):
                raise ValueError(f"description line {line!r} would parse as a keyword")
        return "\n".join(lines) or None

    @model_validator(mode="after")
    def _check_unique_names(self):
        seen = set()
        for scenario in self.scenarios:
            if scenario.name in seen:
                raise ValueError(f"duplicate scenario name {scenario.name!r}")
            seen.add(scenario.name)
        expanded = set()
        for scenario in self.scenarios:
            for name in scenario.expanded_names():
                if name in expanded:
                    raise ValueError(f"expanded scenario name {name!r} is not unique")
                expanded.add(name)
        return self


def structurally_equal(left: FeatureAst, right: FeatureAst) -> bool:
    """Compare two ASTs ignoring source line numbers"""
    return left.model_dump() == right.model_dump()


class _ScenarioBuilder:
    def __init__(self, name: str, kind: ScenarioKind, line: int):
        self.name = name
        self.kind = kind
        self.line = line
        self.steps: List[Step] = []
        # (step, column where the step text starts)
        self.text_columns: List[int] = []
        self.columns: Optional[List[str]] = None
        self.rows: List[List[str]] = []
        self.examples_line: Optional[int] = None


class _FeatureParser:
    """Line-oriented parser; every error carries the offending line and column"""

    def __init__(self, source: str):
        self.lines = _LINE_BREAK.split(source.lstrip("\ufeff"))
        self.feature_name: Optional[str] = None
        self.feature_line = 0
        self.description: List[str] = []
        self.scenarios: List[ScenarioNode] = []
        self.current: Optional[_ScenarioBuilder] = None

    def parse(self) -> FeatureAst:
        for lineno, raw in enumerate(self.lines, 1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            column = len(raw) - len(raw.lstrip()) + 1
            self._parse_line(raw, stripped, lineno, column)

        if self.feature_name is None:
            raise FeatureSyntaxError("expected a 'Feature:' header", line=max(len(self.lines), 1))
        self._close_scenario()
        return FeatureAst(
            name=self.feature_name,
            description="\n".join(self.description) or None,
            scenarios=self.scenarios,
        )

    def _parse_line(self, raw: str, stripped: str, lineno: int, column: int) -> None:
        if stripped.startswith("Feature:"):
            if self.feature_name is not None:
                raise FeatureSyntaxError("duplicate 'Feature:' header", lineno, column)
            name = stripped[len("Feature:") :].strip()
            if not name:
                raise FeatureSyntaxError("feature name is empty", lineno, column)
            self.feature_name = name
            self.feature_line = lineno
            return

        if self.feature_name is None:
            raise FeatureSyntaxError("expected a 'Feature:' header", lineno, column)

        if stripped.startswith(_UNSUPPORTED):
            raise FeatureSyntaxError(f"unsupported construct {stripped.split()[0]!r}", lineno, column)
        if stripped.startswith("Scenario Outline:"):
            self._open_scenario(stripped[len("Scenario Outline:") :], ScenarioKind.OUTLINE, lineno, column)
        elif stripped.startswith("Scenario:"):
            self._open_scenario(stripped[len("Scenario:") :], ScenarioKind.PLAIN, lineno, column)
        elif stripped.startswith("Examples:"):
            self._open_examples(lineno, column)
        elif stripped.startswith("|"):
            self._table_row(stripped, lineno, column)
        else:
            match = _STEP_LINE.match(stripped)
            if match:
                text_column = column + match.start(2)
                self._step(StepKeyword(match.group(1)), match.group(2).strip(), lineno, column, text_column)
            elif self.current is None and not self.scenarios:
                self.description.append(stripped)
            else:
                keyword = stripped.split()[0]
                raise FeatureSyntaxError(f"unknown keyword {keyword!r}", lineno, column)

    def _open_scenario(self, name: str, kind: ScenarioKind, lineno: int, column: int) -> None:
        self._close_scenario()
        name = name.strip()
        if not name:
            raise FeatureSyntaxError("scenario name is empty", lineno, column)
        if any(s.name == name for s in self.scenarios):
            raise FeatureSyntaxError(f"duplicate scenario name {name!r}", lineno, column)
        self.current = _ScenarioBuilder(name, kind, lineno)

    def _open_examples(self, lineno: int, column: int) -> None:
        current = self.current
        if current is None:
            raise FeatureSyntaxError("'Examples:' outside a scenario", lineno, column)
        if current.kind != ScenarioKind.OUTLINE:
            raise FeatureSyntaxError("'Examples:' is only allowed in a Scenario Outline", lineno, column)
        if current.examples_line is not None:
            raise FeatureSyntaxError("only one 'Examples:' block per outline is supported", lineno, column)
        current.examples_line = lineno

    def _table_row(self, stripped: str, lineno: int, column: int) -> None:
        current = self.current
        if current is None or current.examples_line is None:
            raise FeatureSyntaxError("table row outside 'Examples:'", lineno, column)
        cells = split_table_row(stripped[1:])
        if len(cells) < 2 or cells[-1] != "":
            raise FeatureSyntaxError("malformed table row: missing closing '|'", lineno, column + len(stripped) - 1)
        cells = cells[:-1]
        if current.columns is None:
            for offset, name in enumerate(cells):
                if not name:
                    raise FeatureSyntaxError(f"column {offset + 1} has an empty name", lineno, column)
                if name in cells[:offset]:
                    raise FeatureSyntaxError(f"duplicate column {name!r}", lineno, column)
            current.columns = cells
            return
        if len(cells) != len(current.columns):
            raise FeatureSyntaxError(
                f"malformed table row: {len(cells)} cells, expected {len(current.columns)}", lineno, column
            )
        current.rows.append(cells)

    def _step(self, keyword: StepKeyword, text: str, lineno: int, column: int, text_column: int) -> None:
        current = self.current
        if current is None:
            raise FeatureSyntaxError(f"'{keyword.value}' step outside a scenario", lineno, column)
        if current.examples_line is not None:
            raise FeatureSyntaxError(f"'{keyword.value}' step after 'Examples:'", lineno, column)
        if not text:
            raise FeatureSyntaxError(f"'{keyword.value}' step has no text", lineno, column)

        if keyword in _CLASS_ORDER:
            resolved = keyword
        elif current.steps:
            resolved = current.steps[-1].resolved_keyword
        else:
            raise FeatureSyntaxError(f"scenario cannot start with '{keyword.value}'", lineno, column)

        if current.steps:
            previous = current.steps[-1].resolved_keyword
            if _CLASS_ORDER[resolved] < _CLASS_ORDER[previous]:
                raise FeatureSyntaxError(f"'{keyword.value}' step after '{previous.value}'", lineno, column)
        elif resolved == StepKeyword.THEN:
            raise FeatureSyntaxError("scenario cannot start with 'Then'", lineno, column)

        current.steps.append(Step(keyword=keyword, text=text, resolved_keyword=resolved, line=lineno))
        current.text_columns.append(text_column)

    def _close_scenario(self) -> None:
        current = self.current
        if current is None:
            return
        self.current = None

        classes = {step.resolved_keyword for step in current.steps}
        if StepKeyword.WHEN not in classes:
            raise FeatureSyntaxError(f"scenario {current.name!r} has no 'When' step", current.line)
        if StepKeyword.THEN not in classes:
            raise FeatureSyntaxError(f"scenario {current.name!r} has no 'Then' step", current.line)

        examples = None
        if current.kind == ScenarioKind.OUTLINE:
            if current.examples_line is None:
                raise FeatureSyntaxError(f"Scenario Outline {current.name!r} has no 'Examples:'", current.line)
            if current.columns is None or not current.rows:
                raise FeatureSyntaxError("'Examples:' table has no rows", current.examples_line)
            for step, text_column in zip(current.steps, current.text_columns):
                for match in PLACEHOLDER.finditer(step.text):
                    if match.group(1) not in current.columns:
                        raise FeatureSyntaxError(
                            f"placeholder <{match.group(1)}> has no matching column",
                            step.line,
                            text_column + match.start(),
                        )
            examples = ExamplesTable(columns=current.columns, rows=current.rows)

        node = ScenarioNode(
            name=current.name,
            kind=current.kind,
            steps=current.steps,
            examples=examples,
            line=current.line,
        )
        taken = {name for s in self.scenarios for name in s.expanded_names()}
        for name in node.expanded_names():
            if name in taken:
                raise FeatureSyntaxError(f"expanded scenario name {name!r} is not unique", current.line)
        self.scenarios.append(node)


def split_table_row(inner: str) -> List[str]:
    """Split the text between a row's outer pipes into trimmed, unescaped cells"""
    cells: List[str] = []
    buffer: List[str] = []
    chars = iter(inner)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, "")
            if nxt == "|":
                buffer.append("|")
            elif nxt == "\\":
                buffer.append("\\")
            elif nxt == "n":
                buffer.append("\n")
            else:
                buffer.append(ch + nxt)
        elif ch == "|":
            cells.append("".join(buffer).strip())
            buffer = []
        else:
            buffer.append(ch)
    cells.append("".join(buffer).strip())
    return cells


def parse_feature(source: str) -> FeatureAst:
    """Parse feature text into a FeatureAst

    Raises:
        FeatureSyntaxError: With line and column of the first offending construct
    """
    return _FeatureParser(source).parse()


def _escape_cell(cell: str) -> str:
    return cell.replace("\\", "\\\\").replace("|", "\\|").replace("\n", "\\n")


def format_table(columns: Tuple[str, ...], rows: Tuple[Tuple[str, ...], ...]) -> List[str]:
    """Render table rows with pipes aligned per column"""
    grid = [[_escape_cell(c) for c in columns]] + [[_escape_cell(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in grid) for i in range(len(columns))]
    return ["| " + " | ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) + " |" for row in grid]


def print_feature(ast: FeatureAst) -> str:
    """Serialize an AST in canonical form (two-space indents, aligned tables, LF endings)"""
    out = [f"Feature: {ast.name}"]
    if ast.description:
        out.extend(f"{_INDENT}{line}" for line in ast.description.split("\n"))

    for scenario in ast.scenarios:
        header = "Scenario Outline" if scenario.kind == ScenarioKind.OUTLINE else "Scenario"
        out.append("")
        out.append(f"{_INDENT}{header}: {scenario.name}")
        out.extend(f"{_INDENT * 2}{step.keyword.value} {step.text}" for step in scenario.steps)
        if scenario.examples is not None:
            out.append("")
            out.append(f"{_INDENT * 2}Examples:")
            out.extend(
                f"{_INDENT * 3}{row}" for row in format_table(scenario.examples.columns, scenario.examples.rows)
            )
    return "\n".join(out) + "\n"


def substitute(text: str, values: Dict[str, str]) -> str:
    return PLACEHOLDER.sub(lambda m: values.get(m.group(1), m.group(0)), text)


def expand_scenario(scenario: ScenarioNode) -> List[ScenarioNode]:
    """Expand one outline into plain scenarios named ``"<name> [k]"``; plain scenarios pass through"""
    if scenario.kind == ScenarioKind.PLAIN:
        return [scenario]

    expanded = []
    for index in range(len(scenario.examples.rows)):
        values = scenario.examples.row_values(index)
        steps = [
            Step(
                keyword=step.keyword,
                text=substitute(step.text, values),
                resolved_keyword=step.resolved_keyword,
                line=step.line,
            )
            for step in scenario.steps
        ]
        expanded.append(
            ScenarioNode(name=f"{scenario.name} [{index + 1}]", kind=ScenarioKind.PLAIN, steps=steps, line=scenario.line)
        )
    return expanded


def expand_outlines(ast: FeatureAst) -> FeatureAst:
    """Replace every Scenario Outline by one plain scenario per Examples row"""
    if all(s.kind == ScenarioKind.PLAIN for s in ast.scenarios):
        return ast
    scenarios = [node for scenario in ast.scenarios for node in expand_scenario(scenario)]
    return FeatureAst(name=ast.name, description=ast.description, scenarios=scenarios)
