"""
Custom exceptions for gherkin-hdl
"""

from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

if TYPE_CHECKING:
    from .forge import ValidationReport


class GherkinHdlError(Exception):
    """Base exception for gherkin-hdl

    ``exit_code`` is what the CLI exits with when the error escapes a command.
    """

    def __init__(
        self,
        message: str,
        exit_code: int = 2,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(message)


class DeveloperFriendlyError(GherkinHdlError):
    """Base class for errors with helpful debugging information."""

    def __init__(self, message: str, debug_info: dict = None, suggestions: list = None, exit_code: int = 2):
        self.debug_info = debug_info or {}
        self.suggestions = suggestions or []

        full_message = f"{message}\n"

        if self.debug_info:
            full_message += "\nDebug Information:\n"
            for key, value in self.debug_info.items():
                full_message += f"  {key}: {value}\n"

        if self.suggestions:
            full_message += "\nSuggestions:\n"
            for i, suggestion in enumerate(self.suggestions, 1):
                full_message += f"  {i}. {suggestion}\n"

        super().__init__(full_message, exit_code=exit_code, details=self.debug_info)
        self.summary = message


class ConfigurationError(GherkinHdlError):
    """Raised when command-line or environment configuration is invalid"""


class FeatureSyntaxError(GherkinHdlError):
    """Raised when a feature file does not follow the supported Gherkin subset"""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"line {line}, column {column}: {message}", details={"line": line, "column": column})


class LiteralFormatError(GherkinHdlError):
    """Raised when a cell or phrase value is not an integer literal"""

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"Not an integer literal: {text!r}")


class LiteralRangeError(GherkinHdlError):
    """Raised when a literal does not fit the configured word width"""

    def __init__(self, text: str, width: int):
        self.text = text
        self.width = width
        super().__init__(f"Literal {text!r} does not fit in {width} bits")


class StepBindingError(GherkinHdlError):
    """Base class for errors raised while binding steps to stimulus"""


class UnknownStep(StepBindingError):
    """Raised when a step phrase matches no entry of the step grammar"""

    def __init__(self, phrase: str, line: Optional[int] = None):
        self.phrase = phrase
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"Unknown step{where}: {phrase!r}")


class MissingStimulus(StepBindingError):
    """Raised when a scenario lacks its operands or operation step"""


class DuplicateBinding(StepBindingError):
    """Raised when two steps assign the same stimulus or expectation field"""

    def __init__(self, field: str, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = f" at line {line}" if line else ""
        super().__init__(f"'{field}' is bound more than once{where}")


class CompilationError(GherkinHdlError):
    """Aggregate of per-scenario binding failures"""

    def __init__(self, failures: List[Tuple[str, Exception]]):
        self.failures = failures
        lines = [f"{len(failures)} scenario(s) failed to compile:"]
        lines.extend(f"  {name}: {error}" for name, error in failures)
        super().__init__("\n".join(lines), details={"scenarios": [name for name, _ in failures]})


class PromptSyntaxError(GherkinHdlError):
    """Raised when a generation prompt does not follow the prompt language"""

    def __init__(self, token: str, reason: str = "unexpected token"):
        self.token = token
        super().__init__(f"Prompt {reason}: {token!r}", details={"token": token})


class UnknownOperation(GherkinHdlError):
    """Raised when a prompt or step names an operation the ALU does not have"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown ALU operation: {name!r}")


class Unsatisfiable(DeveloperFriendlyError):
    """Raised when no operand pair satisfies a prompt's constraints"""

    def __init__(self, op: str, constraints: List[str], row: int):
        super().__init__(
            message=f"Constraints for {op} could not be satisfied for example {row + 1}",
            debug_info={"operation": op, "constraints": ", ".join(constraints) or "none"},
            suggestions=[
                "Check that the requested flag can be raised by this operation",
                "Remove conflicting constraints such as 'carry' together with 'no carry'",
            ],
        )


class ProviderError(GherkinHdlError):
    """Raised when the generation provider cannot be reached or answers badly"""


class NonParseableOutput(GherkinHdlError):
    """Raised when provider output is not a compilable feature"""

    def __init__(self, reason: str, text: str):
        self.text = text
        super().__init__(f"Provider output rejected: {reason}", details={"text": text})


class OracleMismatch(GherkinHdlError):
    """Raised in strict generation when expectations disagree with the golden model"""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__(
            f"{len(report.mismatches)} expectation(s) disagree with the golden model",
            exit_code=1,
            details={"mismatches": len(report.mismatches)},
        )


class VcdFormatError(GherkinHdlError):
    """Raised when a VCD document cannot be read"""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} at byte {offset}", details={"offset": offset})


class NoCasesError(GherkinHdlError):
    """Raised when an operation needs at least one compiled case"""

    def __init__(self, message: str = "no cases"):
        super().__init__(message)
