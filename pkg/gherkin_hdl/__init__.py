"""
gherkin-hdl - behavior-driven verification toolkit for hardware blocks
"""

from .alu import AluOp, AluResponse, AluVector, FlagSet, evaluate
from .compiler import ExpectationSet, TestCase, bind_scenario, compile_feature, parse_int_literal
from .exceptions import (
    CompilationError,
    DeveloperFriendlyError,
    FeatureSyntaxError,
    GherkinHdlError,
    NonParseableOutput,
    OracleMismatch,
    PromptSyntaxError,
    ProviderError,
    Unsatisfiable,
    VcdFormatError,
)
from .forge import (
    GenerationRecord,
    PromptSpec,
    ValidationReport,
    forge_feature,
    generate_with_provider,
    generate_with_templates,
    parse_prompt,
    repair_feature,
    solve_constraints,
    validate_against_oracle,
)
from .gherkin import FeatureAst, expand_outlines, parse_feature, print_feature, structurally_equal
from .harness import ReportFormat, TestReport, render_report, run_cases
from .testbench import emit_testbench
from .vcd import VcdTrace, read_vcd_minimal, write_vcd

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # Golden model
    "AluOp",
    "AluVector",
    "AluResponse",
    "FlagSet",
    "evaluate",
    # Gherkin
    "FeatureAst",
    "parse_feature",
    "print_feature",
    "expand_outlines",
    "structurally_equal",
    # Compiler
    "ExpectationSet",
    "TestCase",
    "bind_scenario",
    "compile_feature",
    "parse_int_literal",
    # Forge
    "PromptSpec",
    "GenerationRecord",
    "ValidationReport",
    "parse_prompt",
    "solve_constraints",
    "generate_with_templates",
    "generate_with_provider",
    "forge_feature",
    "validate_against_oracle",
    "repair_feature",
    # Harness
    "TestReport",
    "ReportFormat",
    "run_cases",
    "render_report",
    "emit_testbench",
    "VcdTrace",
    "write_vcd",
    "read_vcd_minimal",
    # Exceptions
    "GherkinHdlError",
    "DeveloperFriendlyError",
    "FeatureSyntaxError",
    "CompilationError",
    "PromptSyntaxError",
    "Unsatisfiable",
    "ProviderError",
    "NonParseableOutput",
    "OracleMismatch",
    "VcdFormatError",
]
