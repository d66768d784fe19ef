"""
Bit-accurate golden model of the case-study ALU
"""

from dataclasses import dataclass
from enum import IntEnum

DEFAULT_WIDTH = 16
MIN_WIDTH = 4
MAX_WIDTH = 64


class AluOp(IntEnum):
    """ALU operations with their 4-bit opcode encodings"""

    ADD = 0
    SUB = 1
    AND = 2
    OR = 3
    XOR = 4
    NOT = 5
    SHL = 6
    SHR = 7

    @classmethod
    def from_name(cls, name: str) -> "AluOp":
        """Look up an operation by case-insensitive mnemonic

        Raises:
            UnknownOperation: If the mnemonic is not an ALU operation
        """
        try:
            return cls[name.strip().upper()]
        except KeyError:
            from .exceptions import UnknownOperation

            raise UnknownOperation(name)


FLAG_NAMES = ("carry", "zero", "overflow", "negative")


def check_width(width: int) -> int:
    if not MIN_WIDTH <= width <= MAX_WIDTH:
        raise ValueError(f"width must be between {MIN_WIDTH} and {MAX_WIDTH}, got {width}")
    return width


def word_mask(width: int) -> int:
    return (1 << width) - 1


def signed_view(word: int, width: int) -> int:
    """Reinterpret an unsigned word as a two's complement integer"""
    if word < (1 << (width - 1)):
        return word
    return word - (1 << width)


@dataclass(frozen=True, slots=True)
class AluVector:
    """One stimulus applied to the ALU"""

    op: AluOp
    a: int
    b: int
    width: int = DEFAULT_WIDTH

    def __post_init__(self):
        check_width(self.width)
        limit = 1 << self.width
        if not 0 <= self.a < limit:
            raise ValueError(f"operand A={self.a} out of range for width {self.width}")
        if not 0 <= self.b < limit:
            raise ValueError(f"operand B={self.b} out of range for width {self.width}")
        if not isinstance(self.op, AluOp):
            object.__setattr__(self, "op", AluOp(self.op))


@dataclass(frozen=True, slots=True)
class FlagSet:
    carry: int = 0
    zero: int = 0
    overflow: int = 0
    negative: int = 0

    def __post_init__(self):
        for name in FLAG_NAMES:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"flag {name} must be 0 or 1")


@dataclass(frozen=True, slots=True)
class AluResponse:
    """Result word and status flags produced for one vector"""

    result: int
    flags: FlagSet

    def field(self, name: str) -> int:
        """Return ``result`` or a flag by name"""
        if name == "result":
            return self.result
        return getattr(self.flags, name)


def _shift_amount(b: int, width: int) -> int:
    return b % width


def evaluate(v: AluVector) -> AluResponse:
    """Compute the result word and the carry/zero/overflow/negative flags of a vector"""
    w = v.width
    mask = word_mask(w)
    sign = 1 << (w - 1)
    a, b = v.a, v.b
    carry = 0
    overflow = 0

    if v.op is AluOp.ADD:
        total = a + b
        result = total & mask
        carry = int(total > mask)
        # same-sign operands, result sign flipped
        overflow = int(not ((a ^ b) & sign) and bool((a ^ result) & sign))
    elif v.op is AluOp.SUB:
        result = (a - b) & mask
        carry = int(a >= b)
        # operand signs differ, result takes the sign of B
        overflow = int(bool((a ^ b) & sign) and not ((result ^ b) & sign))
    elif v.op is AluOp.AND:
        result = a & b
    elif v.op is AluOp.OR:
        result = a | b
    elif v.op is AluOp.XOR:
        result = a ^ b
    elif v.op is AluOp.NOT:
        result = ~a & mask
    elif v.op is AluOp.SHL:
        s = _shift_amount(b, w)
        result = (a << s) & mask
        if s:
            carry = (a >> (w - s)) & 1
    elif v.op is AluOp.SHR:
        s = _shift_amount(b, w)
        result = a >> s
        if s:
            carry = (a >> (s - 1)) & 1
    else:  # pragma: no cover
        raise ValueError(f"Unsupported operation {v.op!r}")

    flags = FlagSet(
        carry=carry,
        zero=int(result == 0),
        overflow=overflow,
        negative=(result >> (w - 1)) & 1,
    )
    return AluResponse(result=result, flags=flags)
