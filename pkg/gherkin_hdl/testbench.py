"""
Verilog-2001 testbench emitter for compiled cases
"""

import logging
import re
from typing import Dict, List, Sequence

from .compiler import TestCase
from .exceptions import ConfigurationError
from .harness import case_width
from .templating import render_template

logger = logging.getLogger(__name__)

DEFAULT_DUT = "alu"
_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")


def verilog_literal(value: int, width: int) -> str:
    return f"{width}'h{value:0{(width + 3) // 4}X}"


def _string_literal(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("%", "%%")


def _condition(case: TestCase, width: int) -> str:
    terms = []
    for name, expected in case.expect.present().items():
        literal = verilog_literal(expected, width) if name == "result" else f"1'b{expected}"
        terms.append(f"{name} === {literal}")
    return " && ".join(terms)


def _case_context(case: TestCase, width: int) -> Dict[str, object]:
    stimulus = case.stimulus
    return {
        "name": case.name.replace("\n", " "),
        "label": _string_literal(case.name.replace("\n", " ")),
        "op": stimulus.op.name,
        "opcode": int(stimulus.op),
        "a": verilog_literal(stimulus.a, width),
        "b": verilog_literal(stimulus.b, width),
        "condition": _condition(case, width),
    }


def emit_testbench(cases: Sequence[TestCase], dut_name: str = DEFAULT_DUT) -> str:
    """Emit a self-contained testbench driving ``<dut_name> dut(...)`` with every case

    Each case is applied at 10 ns intervals and checked 5 ns later.

    Raises:
        NoCasesError: If ``cases`` is empty or mixes word widths
        ConfigurationError: If ``dut_name`` is not a Verilog identifier
    """
    width = case_width(cases)
    dut = dut_name.strip() or DEFAULT_DUT
    if not _IDENTIFIER.fullmatch(dut):
        raise ConfigurationError(f"DUT name {dut!r} is not a Verilog identifier")

    contexts: List[Dict[str, object]] = [_case_context(case, width) for case in cases]
    text = render_template("testbench.v.j2", dut=dut, width=width, cases=contexts)
    logger.info(f"Emitted testbench for {dut} with {len(cases)} case(s)")
    return text
