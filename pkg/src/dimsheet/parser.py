"""Model definition language and CSV data tables.

A model file is line oriented::

    # comment
    dimension Sector initial S { G "Government" M "Military" }
    table "sector.csv"
    input "Base Price" format currency = 140
    data "Rebate Percentage" over Sector format percent
    calc "Sector Price Factor" over Sector = 1 - [Rebate Percentage]
    output "Total Profit" format currency = SUM([Monthly Profit])

Dimension blocks may span several lines; every other statement ends at
the end of its line.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, replace
from typing import Sequence

from .diagnostics import Diagnostic, ModelError, SourceSpan
from .model import (
    EMPTY,
    BinOp,
    DataTable,
    Dimension,
    DimensionSet,
    Expression,
    Literal,
    Member,
    Model,
    Neg,
    Sum,
    Variable,
    VariableKind,
    VarRef,
    render_formula,
    validate_references,
)
from .keygen import enumerate_tuples

NUMBER_FORMATS = ("currency", "percent", "decimal", "integer")
VARIABLE_KEYWORDS = {k.value: k for k in VariableKind}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\n)
  | (?P<string>"[^"\n]*")
  | (?P<ref>\[[^\]\n]*\])
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?%?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^=(){},])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    @property
    def value(self) -> str:
        if self.kind in ("string", "ref"):
            return self.text[1:-1]
        return self.text


class ParseError(Exception):
    def __init__(self, message: str, token: Token | None = None, code: str = "syntax"):
        super().__init__(message)
        self.token = token
        self.code = code


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            bad = Token("error", source[pos], line, col)
            raise ParseError(f"unexpected character {source[pos]!r}", bad)
        kind = m.lastgroup
        text = m.group()
        if kind == "newline":
            tokens.append(Token("newline", text, line, col))
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def parse_number(text: str) -> float:
    """``"9%"`` -> 0.09; plain decimal text otherwise."""
    text = text.strip()
    if text.endswith("%"):
        return float(text[:-1]) / 100
    return float(text)


# -- formulas ------------------------------------------------------------------


class _FormulaParser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.take()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of formula'!r}", tok)
        return tok

    def at_end(self) -> bool:
        return self.peek().kind in ("eof", "newline")

    def formula(self) -> Expression:
        tok = self.peek()
        if tok.kind == "ident" and tok.text.upper() == "SUM":
            self.take()
            self.expect("(")
            ref = self.take()
            if ref.kind != "ref":
                raise ParseError("SUM takes a single [variable]", ref)
            self.expect(")")
            node: Expression = Sum(VarRef(ref.value.strip()))
        else:
            node = self.expr()
        if not self.at_end():
            raise ParseError(f"unexpected {self.peek().text!r}", self.peek())
        return node

    def expr(self) -> Expression:
        node = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expression:
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expression:
        if self.peek().text == "-":
            self.take()
            return Neg(self.unary())
        if self.peek().text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.primary()
        if self.peek().text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Expression:
        tok = self.take()
        if tok.kind == "number":
            return Literal(parse_number(tok.text))
        if tok.kind == "ref":
            name = tok.value.strip()
            if not name:
                raise ParseError("empty variable reference", tok)
            return VarRef(name)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident" and tok.text.upper() == "SUM":
            raise ParseError("SUM must be the whole formula", tok, code="nested-aggregate")
        raise ParseError(f"unexpected {tok.text or 'end of formula'!r}", tok)


def parse_formula(text: str) -> Expression:
    """Parse a formula body such as ``[DemParB] / [Sector Base Price] ^ [DemParA]``."""
    tokens = [t for t in tokenize(text) if t.kind != "newline"]
    return _FormulaParser(tokens).formula()


# -- model statements ---------------------------------------------------------


@dataclass
class _Pending:
    name: str
    kind: VariableKind
    dims: list[str]
    formula: Expression | None
    number_format: str | None
    span: SourceSpan


class _ModelParser:
    def __init__(self, source: str, filename: str):
        self.filename = filename
        self.tokens = tokenize(source)
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        self.dimensions: list[Dimension] = []
        self.pending: list[_Pending] = []
        self.tables: list[str] = []
        self.inline: dict[str, float] = {}

    def span(self, tok: Token) -> SourceSpan:
        return SourceSpan(self.filename, tok.line, tok.column)

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_kind(self, kind: str, what: str) -> Token:
        tok = self.take()
        if tok.kind != kind:
            raise ParseError(f"expected {what}, found {tok.text or 'end of line'!r}", tok)
        return tok

    def expect_word(self, word: str) -> Token:
        tok = self.take()
        if tok.text != word:
            raise ParseError(f"expected {word!r}, found {tok.text or 'end of line'!r}", tok)
        return tok

    def end_statement(self) -> None:
        tok = self.peek()
        if tok.kind not in ("newline", "eof"):
            raise ParseError(f"unexpected {tok.text!r}", tok)

    def skip_line(self) -> None:
        depth = 0
        while self.peek().kind != "eof":
            tok = self.take()
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                depth -= 1
            elif tok.kind == "newline" and depth <= 0:
                return

    def error(self, code: str, message: str, tok: Token) -> None:
        self.diagnostics.append(Diagnostic.error(code, message, self.span(tok)))

    def run(self) -> None:
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                break
            if tok.kind == "newline":
                self.take()
                continue
            try:
                if tok.text == "dimension":
                    self.dimension()
                elif tok.text == "table":
                    self.take()
                    self.tables.append(self.expect_kind("string", "a quoted file name").value)
                    self.end_statement()
                elif tok.text in VARIABLE_KEYWORDS:
                    self.variable()
                else:
                    raise ParseError(f"unknown statement {tok.text!r}", tok)
            except ParseError as exc:
                where = exc.token or tok
                self.error(exc.code, str(exc), where)
                self.skip_line()

    def dimension(self) -> None:
        start = self.take()
        name = self.expect_kind("ident", "a dimension name")
        self.expect_word("initial")
        initial = self.expect_kind("ident", "a dimension initial")
        if not re.fullmatch(r"[A-Z]", initial.text):
            raise ParseError("a dimension initial is a single uppercase letter", initial)
        self.expect_word("{")
        members: list[Member] = []
        codes: set[str] = set()
        while True:
            tok = self.take()
            if tok.kind == "newline":
                continue
            if tok.text == "}":
                break
            if tok.kind not in ("ident", "number") or tok.text.endswith("%"):
                if tok.text == "-":
                    raise ParseError("member codes may not contain '-'", tok)
                raise ParseError(f"expected a member code, found {tok.text or 'end of file'!r}", tok)
            label = None
            if self.peek().kind == "string":
                label = self.take().value
            if self.peek().text == "-":
                raise ParseError("member codes may not contain '-'", self.peek())
            # spreadsheet lookups ignore case, so S and s would be the same key
            if tok.text.casefold() in codes:
                raise ParseError(f"duplicate member {tok.text!r} in {name.text}", tok, "duplicate-member")
            codes.add(tok.text.casefold())
            members.append(Member(tok.text, label))
        self.end_statement()
        if not members:
            raise ParseError(f"dimension {name.text} has no members", start, "empty-dimension")
        for d in self.dimensions:
            if d.name == name.text:
                raise ParseError(f"duplicate dimension {name.text}", name, "duplicate-dimension")
            if d.initial == initial.text:
                raise ParseError(
                    f"initial {initial.text} of {name.text} already used by {d.name}", initial, "duplicate-initial")
        self.dimensions.append(Dimension(name.text, initial.text, tuple(members), len(self.dimensions)))

    def variable(self) -> None:
        kw = self.take()
        kind = VARIABLE_KEYWORDS[kw.text]
        name_tok = self.expect_kind("string", "a quoted variable name")
        name = name_tok.value.strip()
        if not name:
            raise ParseError("variable name is empty", name_tok)
        dims: list[str] = []
        fmt = None
        if self.peek().text == "over":
            self.take()
            dims.append(self.expect_kind("ident", "a dimension name").text)
            while self.peek().text == "-":
                self.take()
                dims.append(self.expect_kind("ident", "a dimension name").text)
        if self.peek().text == "format":
            self.take()
            fmt_tok = self.expect_kind("ident", "a number format")
            if fmt_tok.text not in NUMBER_FORMATS:
                raise ParseError(f"unknown number format {fmt_tok.text!r}", fmt_tok)
            fmt = fmt_tok.text
        formula = None
        if self.peek().text == "=":
            eq = self.take()
            start = self.pos
            while self.peek().kind not in ("newline", "eof"):
                self.take()
            body = self.tokens[start:self.pos] + [Token("eof", "", eq.line, eq.column)]
            if len(body) == 1:
                raise ParseError("missing formula after '='", eq)
            formula = _FormulaParser(body).formula()
        self.end_statement()
        span = self.span(name_tok)
        if kind.has_formula and formula is None:
            raise ParseError(f"{kw.text} variable {name!r} needs a formula", name_tok, "missing-formula")
        if not kind.has_formula and formula is not None:
            value = _literal_value(formula)
            if value is None:
                raise ParseError(f"{kw.text} variable {name!r} takes a number, not a formula", name_tok)
            if dims:
                raise ParseError(
                    f"inline values are only allowed for dimensionless variables ({name!r})", name_tok)
            self.inline[name] = value
            formula = None
        self.pending.append(_Pending(name, kind, dims, formula, fmt, span))

    def build(self) -> Model:
        by_name = {d.name: d for d in self.dimensions}
        variables: list[Variable] = []
        seen: dict[str, Variable] = {}
        for p in self.pending:
            unknown = [d for d in p.dims if d not in by_name]
            if unknown:
                self.diagnostics.append(Diagnostic.error(
                    "unknown-dimension", f"unknown dimension {unknown[0]} in [{p.name}]", p.span))
                continue
            if len(set(p.dims)) != len(p.dims):
                self.diagnostics.append(Diagnostic.error(
                    "duplicate-dimension", f"dimension repeated in the set of [{p.name}]", p.span))
                continue
            key = p.name.casefold()
            if key in seen:
                self.diagnostics.append(Diagnostic.error(
                    "duplicate-variable", f"variable [{p.name}] declared twice", p.span))
                continue
            v = Variable(
                name=p.name,
                kind=p.kind,
                dimset=DimensionSet.of(by_name[d] for d in p.dims),
                formula=p.formula,
                number_format=p.number_format,
                number=len(variables) + 1,
                span=p.span,
            )
            seen[key] = v
            variables.append(v)
        model = Model(tuple(self.dimensions), tuple(variables), tables=tuple(self.tables))
        self.diagnostics.extend(validate_references(model))
        warnings = [d for d in self.diagnostics if not d.is_error]
        if not self.dimensions and not variables and not self.diagnostics:
            warnings.append(Diagnostic.warning("empty-model", "empty model", SourceSpan(self.filename, 1, 1)))
        data = ()
        if self.inline:
            table = DataTable(EMPTY, {n: {(): v} for n, v in self.inline.items()})
            data = (table,)
        return replace(model, warnings=tuple(warnings), data=data)


def _literal_value(expr: Expression) -> float | None:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Neg) and isinstance(expr.operand, Literal):
        return -expr.operand.value
    return None


def parse_model(source: str, filename: str = "<model>") -> Model:
    """Parse model text into a Model with no table data bound yet.

    Raises ModelError listing every error found; warnings ride along on
    ``Model.warnings``.
    """
    try:
        parser = _ModelParser(source, filename)
    except ParseError as exc:
        tok = exc.token
        span = SourceSpan(filename, tok.line, tok.column) if tok else None
        raise ModelError(Diagnostic.error(exc.code, str(exc), span)) from None
    parser.run()
    model = parser.build()
    errors = [d for d in parser.diagnostics if d.is_error]
    if errors:
        raise ModelError(errors)
    return model


# -- data tables -----------------------------------------------------------------


def load_data(model: Model, tables: Sequence[str | tuple[str, str]]) -> Model:
    """Bind CSV tables (text, or ``(filename, text)`` pairs) to ``model``.

    Each table is matched to a dimension set by the dimension columns in its
    header; all other columns must be data or input variables of that set.
    Tables must be dense.  Raises ModelError on any problem.
    """
    diags: list[Diagnostic] = []
    columns: dict[DimensionSet, dict[str, dict]] = {}
    for t in model.data:
        columns.setdefault(t.dimset, {}).update({k: dict(v) for k, v in t.columns.items()})
    dim_names = {d.name for d in model.dimensions}

    for i, doc in enumerate(tables):
        fname, text = doc if isinstance(doc, tuple) else (f"<table {i + 1}>", doc)
        _read_table(model, fname, text, dim_names, columns, diags)

    for v in model.variables:
        if v.kind.has_formula:
            continue
        if v.name not in columns.get(v.dimset, {}):
            diags.append(Diagnostic.error(
                "missing-data", f"{v.kind.value} variable [{v.name}] has no values in any table", v.span))

    if any(d.is_error for d in diags):
        raise ModelError([d for d in diags if d.is_error])

    order = model.used_dimsets()
    bound = [DataTable(ds, columns[ds]) for ds in order if ds in columns]
    return replace(model, data=tuple(bound))


def _read_table(model, fname, text, dim_names, columns, diags) -> None:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        diags.append(Diagnostic.error("empty-table", "table has no header row", SourceSpan(fname, 1)))
        return
    header = [h.strip() for h in rows[0]]
    dim_cols = [(j, h) for j, h in enumerate(header) if h in dim_names]
    var_cols = [(j, h) for j, h in enumerate(header) if h not in dim_names]
    dimset = model.dimset(h for _, h in dim_cols)
    if len(dim_cols) != len(dimset):
        diags.append(Diagnostic.error("duplicate-column", "dimension column repeated", SourceSpan(fname, 1)))
        return
    ok = True
    for j, h in var_cols:
        if not model.has_variable(h):
            diags.append(Diagnostic.error("unknown-column", f"column {h!r} is neither a dimension nor a variable",
                                          SourceSpan(fname, 1, j + 1)))
            ok = False
            continue
        v = model.variable(h)
        if v.kind.has_formula:
            diags.append(Diagnostic.error("not-data", f"[{h}] is a {v.kind.value} variable and cannot take data",
                                          SourceSpan(fname, 1, j + 1)))
            ok = False
        elif v.dimset != dimset:
            diags.append(Diagnostic.error(
                "dimset-mismatch", f"[{h}] is declared over {v.dimset!r} but the table is over {dimset!r}",
                SourceSpan(fname, 1, j + 1)))
            ok = False
        elif h in columns.get(dimset, {}):
            diags.append(Diagnostic.error("duplicate-column", f"[{h}] already has values",
                                          SourceSpan(fname, 1, j + 1)))
            ok = False
    if not ok:
        return

    # dimension columns in canonical order
    order = {d.name: k for k, d in enumerate(dimset.dims)}
    dim_cols.sort(key=lambda jc: order[jc[1]])
    valid_codes = [set(d.codes) for d in dimset.dims]
    values: dict[str, dict] = {h: {} for _, h in var_cols}
    for lineno, row in enumerate(rows[1:], start=2):
        row = row + [""] * (len(header) - len(row))
        t = tuple(row[j].strip() for j, _ in dim_cols)
        bad = [(code, d) for code, d, ok_codes in zip(t, dimset.dims, valid_codes) if code not in ok_codes]
        if bad:
            code, d = bad[0]
            diags.append(Diagnostic.error("unknown-member", f"{code!r} is not a member of {d.name}",
                                          SourceSpan(fname, lineno)))
            continue
        for j, h in var_cols:
            if t in values[h]:
                diags.append(Diagnostic.error("duplicate-tuple", f"tuple {'-'.join(t) or '()'} appears twice",
                                              SourceSpan(fname, lineno)))
                break
            try:
                values[h][t] = parse_number(row[j])
            except ValueError:
                diags.append(Diagnostic.error(
                    "not-numeric", f"value {row[j]!r} for [{h}] is not a number", SourceSpan(fname, lineno, j + 1)))
    for h in values:
        for t in enumerate_tuples(dimset):
            if t not in values[h]:
                diags.append(Diagnostic.error(
                    "missing-tuple", f"missing tuple {'-'.join(t)} for [{h}]", SourceSpan(fname, 1)))
                break
    columns.setdefault(dimset, {}).update(values)


def render_variable(v: Variable) -> str:
    """One model-language statement for ``v`` (inline values are not shown)."""
    parts = [v.kind.value, f'"{v.name}"']
    if len(v.dimset):
        parts.append("over " + v.dimset.full_name)
    if v.number_format:
        parts.append("format " + v.number_format)
    if v.formula is not None:
        parts.append("= " + render_formula(v.formula))
    return " ".join(parts)



def load_model_file(path) -> Model:
    """Parse a model file and bind the tables it names, resolved next to it."""
    from pathlib import Path

    path = Path(path)
    model = parse_model(path.read_text(encoding="utf-8"), str(path))
    docs = []
    for name in model.tables:
        table_path = path.parent / name
        try:
            docs.append((str(table_path), table_path.read_text(encoding="utf-8")))
        except OSError as exc:
            raise ModelError(Diagnostic.error("missing-table", f"cannot read table {name!r}: {exc.strerror}",
                                              SourceSpan(str(path), 1))) from None
    return load_data(model, docs)
