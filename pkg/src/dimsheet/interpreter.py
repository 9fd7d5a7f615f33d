"""Interpreter for the spreadsheet formula dialect the code generator emits.

Supported: numbers, strings, A1 and ``$``-absolute references, whole-row
references (``8:8``), sheet-qualified references, workbook names with
implicit intersection, the operators ``+ - * / ^ & = <> < > <= >=`` and the
functions INDEX (vector form), MATCH (exact), SUMIF, SUM, COUNTA, ADDRESS
and IF.  Cells are evaluated on demand and memoised, so every cell is
computed after the cells it reads; a cell reached again while it is being
computed evaluates to a cycle error.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass
from functools import lru_cache

from .keygen import column_index, column_letters


@dataclass(frozen=True)
class CellError:
    code: str

    def __str__(self) -> str:
        return self.code


NAME_ERROR = CellError("#NAME?")
MATCH_FAILED = CellError("#N/A")
CYCLE = CellError("#CYCLE!")
DIV0 = CellError("#DIV/0!")
VALUE_ERROR = CellError("#VALUE!")
REF_ERROR = CellError("#REF!")
NUM_ERROR = CellError("#NUM!")

ERRORS = {e.code: e for e in (NAME_ERROR, MATCH_FAILED, CYCLE, DIV0, VALUE_ERROR, REF_ERROR, NUM_ERROR)}


class FormulaSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Ref:
    sheet: str | None
    r1: int
    c1: int | None  # None: whole rows
    r2: int
    c2: int | None

    @property
    def whole_rows(self) -> bool:
        return self.c1 is None

    @property
    def is_cell(self) -> bool:
        return self.c1 is not None and self.r1 == self.r2 and self.c1 == self.c2


# -- parsing ------------------------------------------------------------------------------

_SHEET = r"(?:'(?:[^']|'')+'|[A-Za-z_][A-Za-z0-9_.]*)"
_CELL = r"\$?[A-Za-z]{1,3}\$?\d+"
_TOKEN_RE = re.compile(
    rf"""
    (?P<ws>\s+)
  | (?P<string>"(?:[^"]|"")*")
  | (?P<ref>(?:{_SHEET}!)?(?:\$?\d+:\$?\d+|{_CELL}(?::{_CELL})?)(?![A-Za-z0-9_.(!]))
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<func>[A-Za-z_][A-Za-z0-9_.]*(?=\s*\())
  | (?P<name>[A-Za-z_\\][A-Za-z0-9_.]*)
  | (?P<op><>|<=|>=|[-+*/^&=<>(),])
    """,
    re.VERBOSE,
)
_CELL_PARTS = re.compile(r"\$?([A-Za-z]{1,3})\$?(\d+)")


def parse_reference(text: str) -> Ref:
    """``'Sheet name'!$3:$3`` / ``C5`` / ``A1:B4`` -> Ref."""
    sheet = None
    if "!" in text:
        sheet, text = text.rsplit("!", 1)
        if sheet.startswith("'"):
            sheet = sheet[1:-1].replace("''", "'")
    parts = text.replace("$", "").split(":")
    if all(p.isdigit() for p in parts):
        r1 = int(parts[0])
        r2 = int(parts[-1])
        return Ref(sheet, min(r1, r2), None, max(r1, r2), None)
    coords = []
    for p in parts:
        m = _CELL_PARTS.fullmatch(p)
        if m is None:
            raise FormulaSyntaxError(f"bad reference {text!r}")
        coords.append((int(m.group(2)), column_index(m.group(1))))
    (r1, c1), (r2, c2) = coords[0], coords[-1]
    return Ref(sheet, min(r1, r2), min(c1, c2), max(r1, r2), max(c1, c2))


def _tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected {text[pos:pos + 10]!r} in formula {text!r}")
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group()))
        pos = m.end()
    out.append(("eof", ""))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> None:
        kind, t = self.take()
        if t != text:
            raise FormulaSyntaxError(f"expected {text!r} in {self.text!r}")

    def parse(self):
        node = self.compare()
        if self.peek()[0] != "eof":
            raise FormulaSyntaxError(f"trailing {self.peek()[1]!r} in {self.text!r}")
        return node

    def compare(self):
        node = self.concat()
        while self.peek()[1] in ("=", "<>", "<", ">", "<=", ">="):
            op = self.take()[1]
            node = ("bin", op, node, self.concat())
        return node

    def concat(self):
        node = self.add()
        while self.peek()[1] == "&":
            self.take()
            node = ("bin", "&", node, self.add())
        return node

    def add(self):
        node = self.mul()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = ("bin", op, node, self.mul())
        return node

    def mul(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        # unary minus binds looser than ^, so -2^2 is -4
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return ("neg", self.unary())
        if self.peek()[1] == "+" and self.peek()[0] == "op":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        node = self.primary()
        while self.peek()[1] == "^":
            self.take()
            node = ("bin", "^", node, self.power_operand())
        return node

    def power_operand(self):
        if self.peek()[1] == "-":
            self.take()
            return ("neg", self.power_operand())
        if self.peek()[1] == "+":
            self.take()
            return self.power_operand()
        return self.primary()

    def primary(self):
        kind, text = self.take()
        if kind == "number":
            return ("num", float(text))
        if kind == "string":
            return ("str", text[1:-1].replace('""', '"'))
        if kind == "ref":
            return ("ref", parse_reference(text))
        if kind == "name":
            upper = text.upper()
            if upper in ("TRUE", "FALSE"):
                return ("bool", upper == "TRUE")
            return ("name", text)
        if kind == "func":
            self.expect("(")
            args = []
            if self.peek()[1] != ")":
                args.append(self.compare())
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.compare())
            self.expect(")")
            return ("func", text.upper(), tuple(args))
        if text == "(":
            node = self.compare()
            self.expect(")")
            return node
        raise FormulaSyntaxError(f"unexpected {text or 'end of formula'!r} in {self.text!r}")


@lru_cache(maxsize=None)
def parse_cell_formula(text: str):
    """Parse formula text (with or without the leading ``=``) into a tuple AST."""
    body = text[1:] if text.startswith("=") else text
    return _Parser(body).parse()


def formula_names(text: str) -> list[str]:
    """Workbook names a formula refers to."""
    out: list[str] = []

    def walk(node) -> None:
        tag = node[0]
        if tag == "name":
            if node[1] not in out:
                out.append(node[1])
        elif tag == "neg":
            walk(node[1])
        elif tag == "bin":
            walk(node[2])
            walk(node[3])
        elif tag == "func":
            for a in node[2]:
                walk(a)

    walk(parse_cell_formula(text))
    return out


# -- values -------------------------------------------------------------------------------


def _number(v):
    """Coerce a scalar for arithmetic; returns a float or a CellError."""
    if v is None:
        return 0.0
    if isinstance(v, bool):
        return float(v)
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, CellError):
        return v
    try:
        return float(v)
    except ValueError:
        return VALUE_ERROR


def _text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)
    return str(v)


def _key(v):
    """Lookup key used by MATCH and SUMIF: numbers numerically, text exactly."""
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, (int, float)):
        return ("n", float(v))
    return ("s", v)


def _arith(op: str, a: float, b: float):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return DIV0 if b == 0 else a / b
    # ^
    if a == 0 and b < 0:
        return DIV0
    if a < 0 and not float(b).is_integer():
        return NUM_ERROR
    try:
        result = math.pow(a, b)
    except (OverflowError, ValueError):
        return NUM_ERROR
    return result


def _compare(op: str, a, b):
    if isinstance(a, CellError):
        return a
    if isinstance(b, CellError):
        return b
    if a is None:
        a = "" if isinstance(b, str) else 0.0
    if b is None:
        b = "" if isinstance(a, str) else 0.0

    def rank(x):
        if isinstance(x, bool):
            return 2
        if isinstance(x, str):
            return 1
        return 0

    ka, kb = rank(a), rank(b)
    if ka != kb:
        left, right = ka, kb
    elif ka == 1:
        left, right = a.casefold(), b.casefold()
    else:
        left, right = float(a), float(b)
    return {
        "=": left == right,
        "<>": left != right,
        "<": left < right,
        ">": left > right,
        "<=": left <= right,
        ">=": left >= right,
    }[op]


class Interpreter:
    """Evaluates every cell of a Workbook on demand."""

    def __init__(self, workbook):
        self.workbook = workbook
        self.sheets = {s.name: s for s in workbook.sheets}
        self.names = {}
        for n in workbook.names.values():
            self.names[n.name.casefold()] = parse_reference(n.target)
        self.values: dict[tuple[str, int, int], object] = {}
        self._active: set[tuple[str, int, int]] = set()
        self._row_cols: dict[tuple[str, int], list[int]] = {}
        for s in workbook.sheets:
            for r, c in s.cells:
                self._row_cols.setdefault((s.name, r), []).append(c)
        for cols in self._row_cols.values():
            cols.sort()
        self._match_cache: dict = {}
        self._sumif_cache: dict = {}

    # cells -------------------------------------------------------------------

    def value(self, sheet: str, row: int, col: int):
        key = (sheet, row, col)
        if key in self.values:
            return self.values[key]
        s = self.sheets.get(sheet)
        if s is None:
            return REF_ERROR
        cell = s.cells.get((row, col))
        if cell is None:
            return None
        if cell.formula is None:
            self.values[key] = cell.value
            return cell.value
        if key in self._active:
            return CYCLE
        self._active.add(key)
        try:
            try:
                node = parse_cell_formula(cell.formula)
            except FormulaSyntaxError:
                result = NAME_ERROR
            else:
                result = self._scalar(self._eval(node, sheet, row, col), sheet, row, col)
        finally:
            self._active.discard(key)
        self.values[key] = result
        return result

    def evaluate_all(self) -> dict[tuple[str, int, int], object]:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 50_000))
        try:
            for s in self.workbook.sheets:
                for (r, c) in sorted(s.cells):
                    self.value(s.name, r, c)
        finally:
            sys.setrecursionlimit(limit)
        return self.values

    def evaluate_formula(self, text: str, sheet: str, row: int, col: int):
        """Evaluate ``text`` as if it were written in the given cell."""
        return self._scalar(self._eval(parse_cell_formula(text), sheet, row, col), sheet, row, col)

    # references --------------------------------------------------------------------

    def _resolve(self, ref: Ref, sheet: str) -> Ref:
        return ref if ref.sheet is not None else Ref(sheet, ref.r1, ref.c1, ref.r2, ref.c2)

    def _cells_in(self, ref: Ref) -> list[tuple[int, int]]:
        """Occupied cells of a range, row by row, left to right."""
        out = []
        for r in range(ref.r1, ref.r2 + 1):
            cols = self._row_cols.get((ref.sheet, r), ())
            if ref.whole_rows:
                out.extend((r, c) for c in cols)
            else:
                out.extend((r, c) for c in cols if ref.c1 <= c <= ref.c2)
        return out

    def _intersect(self, ref: Ref, row: int, col: int):
        """Single value of a reference used where a scalar is expected."""
        if ref.is_cell:
            return self.value(ref.sheet, ref.r1, ref.c1)
        if ref.r1 == ref.r2 and (ref.whole_rows or ref.c1 <= col <= ref.c2):
            return self.value(ref.sheet, ref.r1, col)
        if not ref.whole_rows and ref.c1 == ref.c2 and ref.r1 <= row <= ref.r2:
            return self.value(ref.sheet, row, ref.c1)
        return VALUE_ERROR

    def _scalar(self, v, sheet: str, row: int, col: int):
        if isinstance(v, Ref):
            return self._intersect(v, row, col)
        return v

    # evaluation ---------------------------------------------------------------------------

    def _eval(self, node, sheet: str, row: int, col: int):
        tag = node[0]
        if tag in ("num", "str", "bool"):
            return node[1]
        if tag == "ref":
            return self._resolve(node[1], sheet)
        if tag == "name":
            ref = self.names.get(node[1].casefold())
            return NAME_ERROR if ref is None else ref
        if tag == "neg":
            v = _number(self._scalar(self._eval(node[1], sheet, row, col), sheet, row, col))
            return v if isinstance(v, CellError) else -v
        if tag == "bin":
            op = node[1]
            a = self._scalar(self._eval(node[2], sheet, row, col), sheet, row, col)
            b = self._scalar(self._eval(node[3], sheet, row, col), sheet, row, col)
            if op == "&":
                for v in (a, b):
                    if isinstance(v, CellError):
                        return v
                return _text(a) + _text(b)
            if op in ("+", "-", "*", "/", "^"):
                a, b = _number(a), _number(b)
                if isinstance(a, CellError):
                    return a
                if isinstance(b, CellError):
                    return b
                return _arith(op, a, b)
            return _compare(op, a, b)
        if tag == "func":
            fn = getattr(self, "_fn_" + node[1], None)
            if fn is None:
                return NAME_ERROR
            return fn(node[2], sheet, row, col)
        raise AssertionError(tag)

    def _arg(self, node, sheet, row, col):
        return self._scalar(self._eval(node, sheet, row, col), sheet, row, col)

    # functions ----------------------------------------------------------------------------

    def _fn_IF(self, args, sheet, row, col):
        if len(args) not in (2, 3):
            return VALUE_ERROR
        cond = self._arg(args[0], sheet, row, col)
        if isinstance(cond, CellError):
            return cond
        if isinstance(cond, str):
            return VALUE_ERROR
        truthy = bool(cond) if cond is not None else False
        if truthy:
            return self._eval(args[1], sheet, row, col)
        return self._eval(args[2], sheet, row, col) if len(args) == 3 else False

    def _fn_SUM(self, args, sheet, row, col):
        total = 0.0
        for a in args:
            v = self._eval(a, sheet, row, col)
            if isinstance(v, Ref):
                for r, c in self._cells_in(v):
                    x = self.value(v.sheet, r, c)
                    if isinstance(x, CellError):
                        return x
                    if isinstance(x, (int, float)) and not isinstance(x, bool):
                        total += x
            else:
                x = _number(v)
                if isinstance(x, CellError):
                    return x
                total += x
        return total

    def _fn_COUNTA(self, args, sheet, row, col):
        count = 0
        for a in args:
            v = self._eval(a, sheet, row, col)
            if isinstance(v, Ref):
                for r, c in self._cells_in(v):
                    if self.value(v.sheet, r, c) is not None:
                        count += 1
            elif v is not None:
                count += 1
        return float(count)

    def _fn_ADDRESS(self, args, sheet, row, col):
        if len(args) not in (2, 3):
            return VALUE_ERROR
        vals = [_number(self._arg(a, sheet, row, col)) for a in args]
        for v in vals:
            if isinstance(v, CellError):
                return v
        r, c = int(vals[0]), int(vals[1])
        mode = int(vals[2]) if len(vals) == 3 else 1
        if r < 1 or c < 1 or mode not in (1, 2, 3, 4):
            return VALUE_ERROR
        letters = column_letters(c)
        return {
            1: f"${letters}${r}",
            2: f"{letters}${r}",
            3: f"${letters}{r}",
            4: f"{letters}{r}",
        }[mode]

    def _fn_INDEX(self, args, sheet, row, col):
        if len(args) != 2:
            return VALUE_ERROR
        ref = self._eval(args[0], sheet, row, col)
        if isinstance(ref, CellError):
            return ref
        if not isinstance(ref, Ref):
            return VALUE_ERROR
        n = _number(self._arg(args[1], sheet, row, col))
        if isinstance(n, CellError):
            return n
        n = int(n)
        if n < 1:
            return VALUE_ERROR
        if ref.r1 == ref.r2:
            first = 1 if ref.whole_rows else ref.c1
            if not ref.whole_rows and first + n - 1 > ref.c2:
                return REF_ERROR
            return self.value(ref.sheet, ref.r1, first + n - 1)
        if not ref.whole_rows and ref.c1 == ref.c2:
            if ref.r1 + n - 1 > ref.r2:
                return REF_ERROR
            return self.value(ref.sheet, ref.r1 + n - 1, ref.c1)
        return REF_ERROR

    def _fn_MATCH(self, args, sheet, row, col):
        if len(args) != 3:
            return VALUE_ERROR
        needle = self._arg(args[0], sheet, row, col)
        if isinstance(needle, CellError):
            return needle
        mode = _number(self._arg(args[2], sheet, row, col))
        if mode != 0:
            return VALUE_ERROR  # only exact matching is supported
        ref = self._eval(args[1], sheet, row, col)
        if isinstance(ref, CellError):
            return ref
        if not isinstance(ref, Ref):
            return VALUE_ERROR
        if ref.r1 != ref.r2 and (ref.whole_rows or ref.c1 != ref.c2):
            return MATCH_FAILED
        index = self._match_cache.get(ref)
        if index is None:
            index = {}
            horizontal = ref.r1 == ref.r2
            origin = (1 if ref.whole_rows else ref.c1) if horizontal else ref.r1
            for r, c in self._cells_in(ref):
                v = self.value(ref.sheet, r, c)
                if v is None or isinstance(v, CellError):
                    continue
                index.setdefault(_key(v), (c if horizontal else r) - origin + 1)
            self._match_cache[ref] = index
        if needle is None:
            return MATCH_FAILED
        pos = index.get(_key(needle))
        return MATCH_FAILED if pos is None else float(pos)

    def _fn_SUMIF(self, args, sheet, row, col):
        if len(args) not in (2, 3):
            return VALUE_ERROR
        crit_ref = self._eval(args[0], sheet, row, col)
        sum_ref = self._eval(args[2], sheet, row, col) if len(args) == 3 else crit_ref
        for r in (crit_ref, sum_ref):
            if isinstance(r, CellError):
                return r
            if not isinstance(r, Ref):
                return VALUE_ERROR
        criterion = self._arg(args[1], sheet, row, col)
        if isinstance(criterion, CellError):
            return criterion
        cache_key = (crit_ref, sum_ref)
        groups = self._sumif_cache.get(cache_key)
        if groups is None:
            groups = {}
            dr = sum_ref.r1 - crit_ref.r1
            dc = 0 if crit_ref.whole_rows else (sum_ref.c1 or 1) - crit_ref.c1
            for r, c in self._cells_in(crit_ref):
                k = self.value(crit_ref.sheet, r, c)
                if k is None or isinstance(k, CellError):
                    continue
                x = self.value(sum_ref.sheet, r + dr, c + dc)
                key = _key(k)
                acc = groups.get(key, 0.0)
                if isinstance(acc, CellError):
                    continue
                if isinstance(x, CellError):
                    groups[key] = x
                elif isinstance(x, (int, float)) and not isinstance(x, bool):
                    groups[key] = acc + x
                else:
                    groups[key] = acc
            self._sumif_cache[cache_key] = groups
        if criterion is None:
            return 0.0
        return groups.get(_key(criterion), 0.0)


def interpret_workbook(workbook) -> Interpreter:
    """Evaluate every cell; the returned interpreter holds the values."""
    interp = Interpreter(workbook)
    interp.evaluate_all()
    return interp


def display(value) -> str:
    if isinstance(value, CellError):
        return value.code
    return _text(value)
