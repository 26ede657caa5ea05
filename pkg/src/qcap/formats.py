"""Text import/export: matrix literals, import files, solver output files.

The grammar is documented in FORMAT.md. Matrix literals look like
{{0.1,0.3+0.5I},{0.3-0.5I,0.6}} with the imaginary unit strictly upper-case
and at the end of an entry; serialization uses repr() floats so every value
survives a round trip exactly and identical inputs give identical bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    HeaderMissing,
    LowercaseImaginaryUnit,
    ParseError,
    RaggedRows,
    WrongMatrixCount,
)

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_UNSIGNED_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")

_HEADER_FIELDS = ("D", "N", "J", "K", "M", "C")


class _Scanner:
    """Single-line character scanner with 1-based column error reporting."""

    def __init__(self, text: str, line: int | None = None):
        self.text = text
        self.pos = 0
        self.line = line

    def error(self, message: str, cls=ParseError) -> ParseError:
        return cls(message, line=self.line, column=self.pos + 1)

    def skip_space(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str) -> None:
        self.skip_space()
        if self.peek() != char:
            raise self.error(f"expected '{char}', found {self.peek()!r}")
        self.pos += 1

    def match_number(self, pattern) -> float | None:
        m = pattern.match(self.text, self.pos)
        if m is None:
            return None
        self.pos = m.end()
        return float(m.group())


def _parse_entry(s: _Scanner) -> complex:
    s.skip_space()
    if s.peek() == "i":
        raise s.error("imaginary unit must be upper-case 'I'", LowercaseImaginaryUnit)
    first = s.match_number(_NUMBER)
    if first is None:
        raise s.error(f"expected a number, found {s.peek()!r}")
    ch = s.peek()
    if ch == "I":
        s.pos += 1
        return complex(0.0, first)
    if ch == "i":
        raise s.error("imaginary unit must be upper-case 'I'", LowercaseImaginaryUnit)
    if ch in "+-":
        sign = 1.0 if ch == "+" else -1.0
        s.pos += 1
        second = s.match_number(_UNSIGNED_NUMBER)
        if second is None:
            raise s.error(f"expected a number after '{ch}', found {s.peek()!r}")
        if s.peek() == "i":
            raise s.error("imaginary unit must be upper-case 'I'", LowercaseImaginaryUnit)
        if s.peek() != "I":
            raise s.error("imaginary part must end with 'I'")
        s.pos += 1
        return complex(first, sign * second)
    return complex(first, 0.0)


def parse_matrix_literal(text: str, line: int | None = None) -> np.ndarray:
    """Parse one {{...},{...}} literal into a complex matrix."""
    s = _Scanner(text, line=line)
    s.expect("{")
    rows: list[list[complex]] = []
    while True:
        s.expect("{")
        row = [_parse_entry(s)]
        s.skip_space()
        while s.peek() == ",":
            s.pos += 1
            row.append(_parse_entry(s))
            s.skip_space()
        s.expect("}")
        rows.append(row)
        s.skip_space()
        if s.peek() == ",":
            s.pos += 1
            continue
        break
    s.expect("}")
    s.skip_space()
    if s.pos != len(s.text):
        raise s.error(f"unexpected trailing characters {s.text[s.pos:]!r}")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise RaggedRows("matrix rows have different lengths", line=line)
    return np.array(rows, dtype=complex)


@dataclass(frozen=True, eq=False)
class ImportFile:
    """Parsed import file: six header integers and C channels of M operators."""

    dim_out: int  # D, rows of each Kraus operator
    dim_in: int  # N, columns of each Kraus operator
    num_states: int  # J
    num_outcomes: int  # K
    num_kraus: int  # M, operators per channel
    num_channels: int  # C
    channels: tuple[tuple[np.ndarray, ...], ...]


def parse_import(text: str) -> ImportFile:
    """Parse an import file: header lines D, N, J, K, M, C then C*M operators.

    Only the integer after the first '=' of each header line matters; the
    label text before it is free-form. Every operator sits alone on its line.
    """
    lines = [
        (number, raw) for number, raw in enumerate(text.splitlines(), start=1) if raw.strip()
    ]
    if len(lines) < len(_HEADER_FIELDS):
        missing = _HEADER_FIELDS[len(lines)]
        raise HeaderMissing(missing)
    values = {}
    for field_name, (number, raw) in zip(_HEADER_FIELDS, lines):
        if "=" not in raw:
            raise HeaderMissing(field_name, line=number)
        after = raw.split("=", 1)[1].strip()
        try:
            value = int(after)
        except ValueError:
            raise ParseError(
                f"expected an integer for '{field_name}', found {after!r}", line=number
            ) from None
        if value < 1:
            raise ParseError(f"'{field_name}' must be positive, found {value}", line=number)
        values[field_name] = value

    d, n = values["D"], values["N"]
    matrix_lines = lines[len(_HEADER_FIELDS) :]
    expected = values["C"] * values["M"]
    if len(matrix_lines) != expected:
        raise WrongMatrixCount(expected, len(matrix_lines))

    operators = []
    for number, raw in matrix_lines:
        matrix = parse_matrix_literal(raw.strip(), line=number)
        if matrix.shape != (d, n):
            raise DimensionMismatch(
                f"line {number}: operator shape {matrix.shape} does not match (D, N) = ({d}, {n})"
            )
        operators.append(matrix)
    channels = tuple(
        tuple(operators[c * values["M"] : (c + 1) * values["M"]])
        for c in range(values["C"])
    )
    return ImportFile(
        dim_out=d,
        dim_in=n,
        num_states=values["J"],
        num_outcomes=values["K"],
        num_kraus=values["M"],
        num_channels=values["C"],
        channels=channels,
    )


def _format_complex(z: complex) -> str:
    re_part, im_part = float(z.real), float(z.imag)
    if im_part == 0.0:
        return repr(re_part)
    if re_part == 0.0:
        return f"{im_part!r}I"
    sign = "+" if im_part > 0.0 else "-"
    return f"{re_part!r}{sign}{abs(im_part)!r}I"


def serialize_matrix_literal(matrix) -> str:
    """Render a matrix as a single-line literal that reparses exactly."""
    m = np.asarray(matrix, dtype=complex)
    rows = ("{" + ",".join(_format_complex(z) for z in row) + "}" for row in m)
    return "{" + ",".join(rows) + "}"


def serialize_import(imp: ImportFile) -> str:
    lines = [
        f"D = {imp.dim_out}",
        f"N = {imp.dim_in}",
        f"J = {imp.num_states}",
        f"K = {imp.num_outcomes}",
        f"M = {imp.num_kraus}",
        f"C = {imp.num_channels}",
    ]
    for channel in imp.channels:
        lines.extend(serialize_matrix_literal(k) for k in channel)
    return "\n".join(lines) + "\n"


def serialize_output(report) -> str:
    """Render a run report as the plain-text output file.

    Layout: eight header lines (J, K, N, M, C, D, tolerance, seed), a blank
    line, one AI line per recorded iteration, then the five operator blocks
    (Kraus, initial states, optimized states, optimal POVM, reduced POVM),
    each introduced by a label line and separated by blank lines.
    """
    channel = report.channel
    lines = [
        f"J = {report.initial_ensemble.num_states}",
        f"K = {report.final_povm.num_outcomes}",
        f"N = {channel.input_dim}",
        f"M = {channel.num_operators}",
        f"C = {report.channel_count}",
        f"D = {channel.output_dim}",
        f"tolerance = {report.config.tolerance!r}",
        f"seed = {report.config.seed}",
        "",
    ]
    for record in report.trace:
        lines.append(f"AI[{record.index}]={record.mutual_information:.12f}")
    blocks = [
        ("Kraus operators:", channel.kraus_ops),
        ("Initial statistical operators:", report.initial_ensemble.states),
        ("Optimized statistical operators:", report.final_ensemble.states),
        ("Optimal POVM:", report.final_povm.outcomes),
        ("Reduced POVM:", report.reduced_povm.outcomes),
    ]
    for label, matrices in blocks:
        lines.append("")
        lines.append(label)
        lines.extend(serialize_matrix_literal(m) for m in matrices)
    return "\n".join(lines) + "\n"
