"""
Value Change Dump (VCD) writer and minimal reader

Only the subset written here is read back: one module scope, ``wire``
variables, ``$dumpvars`` initial values and ``#<t>`` change sections.
"""

import re
from itertools import count
from typing import Dict, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import VcdFormatError

VALUE_CHARS = frozenset("01xz")


def vcd_codes() -> Iterator[str]:
    """Identifier codes in declaration order: ``!``, ``"``, ... ``~``, ``"!``, ..."""
    codechars = [chr(i) for i in range(33, 127)]
    for n in count():
        q, r = divmod(n, len(codechars))
        code = codechars[r]
        while q > 0:
            q, r = divmod(q, len(codechars))
            code = codechars[r] + code
        yield code


class VcdSignal(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = Field(..., min_length=1, pattern=r"^\S+$")
    width: int = Field(..., ge=1)
    id: str = Field(..., min_length=1, pattern=r"^[!-~]+$")
    initial: str

    @model_validator(mode="before")
    @classmethod
    def default_initial(cls, data):
        if isinstance(data, dict) and data.get("initial") is None and isinstance(data.get("width"), int):
            data = {**data, "initial": "x" * data["width"]}
        return data

    @model_validator(mode="after")
    def check_initial(self):
        _check_value(self.initial, self.width, self.name)
        return self


class VcdChange(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: int = Field(..., ge=0)
    id: str
    # full-width bit string, most significant bit first
    value: str

    @field_validator("value")
    @classmethod
    def lower_value(cls, v: str) -> str:
        return v.lower()


class VcdTrace(BaseModel):
    """Signal declarations plus a time-ordered list of value changes"""

    model_config = ConfigDict(frozen=True)

    signals: Tuple[VcdSignal, ...] = ()
    changes: Tuple[VcdChange, ...] = ()
    scope: str = Field("alu_tb", min_length=1, pattern=r"^\S+$")
    date: str = ""
    end_time: Optional[int] = Field(None, ge=0)

    @model_validator(mode="before")
    @classmethod
    def default_end_time(cls, data):
        if isinstance(data, dict) and data.get("end_time") is None and data.get("changes"):
            last = data["changes"][-1]
            data = {**data, "end_time": last.time if isinstance(last, VcdChange) else last["time"]}
        return data

    @field_validator("date")
    @classmethod
    def normalize_date(cls, v: str) -> str:
        return " ".join(v.split())

    @model_validator(mode="after")
    def check_trace(self):
        widths: Dict[str, int] = {}
        for signal in self.signals:
            if signal.id in widths:
                raise ValueError(f"duplicate signal id {signal.id!r}")
            widths[signal.id] = signal.width

        previous = 0
        for change in self.changes:
            if change.time < previous:
                raise ValueError(f"timestamp {change.time} follows {previous}")
            previous = change.time
            if change.id not in widths:
                raise ValueError(f"change references undeclared id {change.id!r}")
            _check_value(change.value, widths[change.id], change.id)

        if self.changes and self.end_time < previous:
            raise ValueError(f"end_time {self.end_time} precedes the last change at {previous}")
        return self

    def signal(self, name: str) -> VcdSignal:
        for signal in self.signals:
            if signal.name == name:
                return signal
        raise KeyError(name)

    def timestamps(self) -> List[int]:
        return sorted({change.time for change in self.changes})


def _check_value(value: str, width: int, owner: str):
    if len(value) != width:
        raise ValueError(f"value {value!r} of {owner} is not {width} bits wide")
    if not set(value.lower()) <= VALUE_CHARS:
        raise ValueError(f"value {value!r} of {owner} has characters outside 0/1/x/z")


def to_bits(value: int, width: int) -> str:
    return format(value, f"0{width}b")


# Writer


def _pad_char(first: str) -> str:
    return "0" if first in "01" else first


def _compress(bits: str) -> str:
    # drop leading characters that left-extension restores
    while len(bits) > 1 and bits[0] != "1" and _pad_char(bits[1]) == bits[0]:
        bits = bits[1:]
    return bits


def _value_line(value: str, width: int, code: str) -> str:
    if width == 1:
        return f"{value}{code}"
    return f"b{_compress(value)} {code}"


def _var_line(signal: VcdSignal) -> str:
    if signal.width == 1:
        return f"$var wire 1 {signal.id} {signal.name} $end"
    return f"$var wire {signal.width} {signal.id} {signal.name} [{signal.width - 1}:0] $end"


def write_vcd(trace: VcdTrace, module_name: Optional[str] = None) -> bytes:
    """Serialize a trace; ``module_name`` defaults to the trace scope"""
    from . import __version__

    widths = {signal.id: signal.width for signal in trace.signals}
    lines = [
        f"$date {trace.date} $end" if trace.date else "$date $end",
        f"$version gherkin-hdl {__version__} $end",
        "$timescale 1ns $end",
        f"$scope module {module_name or trace.scope} $end",
    ]
    lines.extend(_var_line(signal) for signal in trace.signals)
    lines.extend(["$upscope $end", "$enddefinitions $end", "$dumpvars"])
    lines.extend(_value_line(signal.initial, signal.width, signal.id) for signal in trace.signals)
    lines.append("$end")

    current: Optional[int] = None
    for change in trace.changes:
        if change.time != current:
            current = change.time
            lines.append(f"#{current}")
        lines.append(_value_line(change.value, widths[change.id], change.id))

    if trace.end_time is not None and (current is None or trace.end_time > current):
        lines.append(f"#{trace.end_time}")
    return ("\n".join(lines) + "\n").encode("ascii")


# Reader


_TOKEN = re.compile(r"\S+")


class _Tokens:
    def __init__(self, text: str):
        self.tokens = [(m.group(0), m.start()) for m in _TOKEN.finditer(text)]
        self.end = len(text)
        self.pos = 0

    @property
    def offset(self) -> int:
        return self.tokens[self.pos][1] if self.pos < len(self.tokens) else self.end

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def next(self, what: str) -> Tuple[str, int]:
        if self.at_end():
            raise VcdFormatError(f"Unexpected end of input, expected {what}", self.end)
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, keyword: str):
        token, offset = self.next(keyword)
        if token != keyword:
            raise VcdFormatError(f"Expected {keyword}, found {token!r}", offset)

    def until_end(self, what: str) -> List[str]:
        words = []
        while True:
            token, _ = self.next(f"$end closing {what}")
            if token == "$end":
                return words
            words.append(token)


def _expand(bits: str, width: int, offset: int) -> str:
    bits = bits.lower()
    if not bits or not set(bits) <= VALUE_CHARS:
        raise VcdFormatError(f"Invalid vector value {bits!r}", offset)
    if len(bits) > width:
        raise VcdFormatError(f"Vector value {bits!r} wider than {width} bits", offset)
    return _pad_char(bits[0]) * (width - len(bits)) + bits


def _read_value(tokens: _Tokens, widths: Dict[str, int]) -> Tuple[str, str]:
    token, offset = tokens.next("value change")
    if token[0] in "bB":
        code, code_offset = tokens.next("identifier code")
        if code not in widths:
            raise VcdFormatError(f"Change on undeclared id {code!r}", code_offset)
        return code, _expand(token[1:], widths[code], offset)

    value, code = token[0].lower(), token[1:]
    if value not in VALUE_CHARS:
        raise VcdFormatError(f"Unsupported value change {token!r}", offset)
    if code not in widths:
        raise VcdFormatError(f"Change on undeclared id {code!r}", offset)
    if widths[code] != 1:
        raise VcdFormatError(f"Scalar change on {widths[code]}-bit id {code!r}", offset)
    return code, value


def read_vcd_minimal(data: bytes) -> VcdTrace:
    """Parse a document in the subset produced by :func:`write_vcd`

    Raises:
        VcdFormatError: With the byte offset of the first problem
    """
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as e:
        raise VcdFormatError("Non-ASCII byte", e.start)

    tokens = _Tokens(text)
    date = ""
    scope: Optional[str] = None
    declared: List[Tuple[str, int, str]] = []

    # declarations
    while True:
        token, offset = tokens.next("$enddefinitions")
        if token == "$date":
            date = " ".join(tokens.until_end("$date"))
        elif token in ("$version", "$timescale", "$comment"):
            tokens.until_end(token)
        elif token == "$scope":
            words = tokens.until_end("$scope")
            if scope is not None or len(words) != 2 or words[0] != "module":
                raise VcdFormatError("Only a single module scope is supported", offset)
            scope = words[1]
        elif token == "$var":
            words = tokens.until_end("$var")
            if len(words) not in (4, 5) or not words[1].isdigit():
                raise VcdFormatError(f"Malformed $var declaration {' '.join(words)!r}", offset)
            declared.append((words[3], int(words[1]), words[2]))
        elif token == "$upscope":
            tokens.until_end("$upscope")
        elif token == "$enddefinitions":
            tokens.expect("$end")
            break
        else:
            raise VcdFormatError(f"Unexpected token {token!r} in header", offset)

    if scope is None:
        raise VcdFormatError("Missing $scope", tokens.offset)
    widths = {code: width for _, width, code in declared}
    initial: Dict[str, str] = {}
    changes = []
    end_time: Optional[int] = None

    while not tokens.at_end():
        offset = tokens.offset
        token = tokens.tokens[tokens.pos][0]
        if token == "$dumpvars":
            tokens.pos += 1
            while not tokens.at_end() and tokens.tokens[tokens.pos][0] != "$end":
                code, value = _read_value(tokens, widths)
                initial[code] = value
            tokens.expect("$end")
        elif token.startswith("#"):
            tokens.pos += 1
            if not token[1:].isdigit():
                raise VcdFormatError(f"Malformed timestamp {token!r}", offset)
            time = int(token[1:])
            if end_time is not None and time < end_time:
                raise VcdFormatError(f"Timestamp {time} goes backwards", offset)
            end_time = time
        else:
            if end_time is None:
                raise VcdFormatError("Value change before the first timestamp", offset)
            code, value = _read_value(tokens, widths)
            changes.append(VcdChange(time=end_time, id=code, value=value))

    try:
        signals = [
            VcdSignal(name=name, width=width, id=code, initial=initial.get(code)) for name, width, code in declared
        ]
        return VcdTrace(signals=signals, changes=changes, scope=scope, date=date, end_time=end_time)
    except ValueError as e:
        raise VcdFormatError(f"Invalid trace: {e}", len(text))
