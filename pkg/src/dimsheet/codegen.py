"""Workbook generation.

Every sheet holds the definitions of one dimension set.  Row 1 names the
sheet and shows its last column, row 3 is the primary key, foreign keys
owned by the set follow, and variable blocks come after a blank row.
Every key row and every variable row is a workbook-scope name covering the
whole sheet row, so a bare name in a formula reads the cell of the same
column (implicit intersection) and widening a dimension never touches a
formula.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .analyzer import (
    KeyPlan,
    SheetPlan,
    WorksheetPlan,
    assign_worksheets,
    check_model,
    derive_keys,
)
from .diagnostics import Diagnostic, ModelError
from .keygen import FIRST_DATA_COLUMN, column_letters, enumerate_tuples, foreign_key_row, primary_key_row
from .model import DimensionSet, Model, Sum, Variable, dimset_is_subset, render_formula

SCALAR_SET_NAME = "Scalar"


class CodegenError(Exception):
    pass


@dataclass
class Cell:
    value: float | str | None = None
    formula: str | None = None
    number_format: str | None = None

    def __post_init__(self) -> None:
        if self.formula is not None and not self.formula.startswith("="):
            raise ValueError(f"formula must start with '=': {self.formula!r}")

    @property
    def content(self) -> float | str | None:
        return self.formula if self.formula is not None else self.value


Row = dict  # column -> Cell


@dataclass
class Sheet:
    name: str
    cells: dict[tuple[int, int], Cell] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.name) > 31:
            raise ValueError(f"sheet name longer than 31 characters: {self.name!r}")

    def set(self, row: int, col: int, cell: Cell) -> None:
        if row < 1 or col < 1:
            raise ValueError(f"cell ({row}, {col}) is outside the sheet")
        self.cells[(row, col)] = cell

    def get(self, row: int, col: int) -> Cell | None:
        return self.cells.get((row, col))

    def put_row(self, row: int, cells: Row) -> None:
        for col, cell in cells.items():
            self.set(row, col, cell)

    def row(self, row: int) -> dict[int, Cell]:
        return {c: cell for (r, c), cell in sorted(self.cells.items()) if r == row}

    @property
    def max_row(self) -> int:
        return max((r for r, _ in self.cells), default=0)

    @property
    def max_col(self) -> int:
        return max((c for _, c in self.cells), default=0)


def quote_sheet(name: str) -> str:
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        return name
    return "'" + name.replace("'", "''") + "'"


@dataclass(frozen=True)
class NamedRange:
    name: str
    sheet: str
    ref: str  # "$3:$3" for a whole row, "$C$5" for a single cell

    @property
    def target(self) -> str:
        return f"{quote_sheet(self.sheet)}!{self.ref}"


@dataclass(frozen=True)
class VarLocation:
    variable: str
    sheet: str
    row: int
    dimset: DimensionSet

    def column_of(self, index: int) -> int:
        return FIRST_DATA_COLUMN + index


@dataclass(frozen=True)
class Block:
    sheet: str
    first_row: int
    last_row: int
    number: int
    variable: str
    kind: str  # data, formula, aggregate, sum


@dataclass(frozen=True)
class ManagementRow:
    dimset_name: str
    row: int


@dataclass(frozen=True)
class InterfaceCell:
    sheet: str
    row: int
    col: int
    variable: str
    tuple: tuple[str, ...]


@dataclass
class Workbook:
    sheets: list[Sheet] = field(default_factory=list)
    names: dict[str, NamedRange] = field(default_factory=dict)
    layout: dict[str, VarLocation] = field(default_factory=dict)
    management: list[ManagementRow] = field(default_factory=list)
    management_sheet: str | None = None
    interface_cells: list[InterfaceCell] = field(default_factory=list)
    blocks: list[Block] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def sheet(self, name: str) -> Sheet:
        for s in self.sheets:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def sheet_names(self) -> list[str]:
        return [s.name for s in self.sheets]

    def define(self, name: str, sheet: str, ref: str) -> None:
        key = name.casefold()
        if any(n.casefold() == key for n in self.names):
            raise CodegenError(f"name {name} defined twice")
        self.names[name] = NamedRange(name, sheet, ref)

    def formulas(self):
        for s in self.sheets:
            for (r, c), cell in sorted(s.cells.items()):
                if cell.formula is not None:
                    yield s.name, r, c, cell.formula


# -- naming ------------------------------------------------------------------------

_CELL_LIKE = re.compile(r"^(?:[A-Za-z]{1,3}\d+|[RrCc]|[Rr]\d*[Cc]\d*|TRUE|FALSE)$", re.IGNORECASE)


def mangle_name(kind: str, context) -> str:
    """Workbook-global name for a variable, key or management cell.

    ``kind`` is one of ``variable`` (context: variable name), ``pk``
    (context: DimensionSet), ``fk`` (context: (referenced, host)) or
    ``last`` (context: DimensionSet).
    """
    if kind == "variable":
        name = re.sub(r"[^A-Za-z0-9_]", "_", context.strip())
        return "_" + name if name[:1].isdigit() else name
    if kind == "pk":
        if len(context) == 1:
            return f"{context.dims[0].name}_Code"
        return context.initials
    if kind == "fk":
        referenced, host = context
        return f"{referenced.initials}_in_{host.initials}"
    if kind == "last":
        return f"Last_{set_label(context)}_column"
    raise ValueError(f"unknown name kind {kind!r}")


def set_label(dimset: DimensionSet) -> str:
    """Short label of a set: the dimension name alone, otherwise its initials."""
    if not len(dimset):
        return SCALAR_SET_NAME
    if len(dimset) == 1:
        return dimset.dims[0].name
    return dimset.initials


def pk_label(dimset: DimensionSet) -> str:
    return f"{dimset.dims[0].name} Code" if len(dimset) == 1 else dimset.initials


def fk_label(referenced: DimensionSet, host: DimensionSet) -> str:
    return f"{referenced.initials} in {host.initials}"


class NameTable:
    """Mangled names for everything the workbook defines, checked for collisions."""

    def __init__(self, model: Model, keys: KeyPlan, dimsets: list[DimensionSet]):
        self.model = model
        self.keys = keys
        self.variables = {v.name: mangle_name("variable", v.name) for v in model.variables}
        self.pks = {ds: mangle_name("pk", ds) for ds in keys.primary_keys}
        self.fks = {(fk.referenced, fk.host): mangle_name("fk", (fk.referenced, fk.host)) for fk in keys.foreign_keys}
        self.lasts = {ds: mangle_name("last", ds) for ds in dimsets}
        self.used: set[str] = set()
        diags = []
        owners: dict[str, str] = {}
        everything = (
            [(n, f"variable [{v}]") for v, n in self.variables.items()]
            + [(n, f"primary key of {ds!r}") for ds, n in self.pks.items()]
            + [(n, f"foreign key {r!r} in {h!r}") for (r, h), n in self.fks.items()]
            + [(n, f"last column of {ds!r}") for ds, n in self.lasts.items()]
        )
        for name, owner in everything:
            key = name.casefold()
            if _CELL_LIKE.match(name) or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                diags.append(Diagnostic.error("invalid-name", f"{owner} mangles to {name!r}, which is not a legal name"))
            elif key in owners:
                diags.append(Diagnostic.error(
                    "name-collision", f"{owner} and {owners[key]} both mangle to {name!r}"))
            else:
                owners[key] = owner
        if diags:
            raise ModelError(diags)

    def var(self, name: str) -> str:
        return self._use(self.variables[name])

    def pk(self, dimset: DimensionSet) -> str:
        if dimset not in self.pks:
            raise CodegenError(f"no primary key planned for {dimset!r}")
        return self._use(self.pks[dimset])

    def fk(self, referenced: DimensionSet, host: DimensionSet) -> str:
        if (referenced, host) not in self.fks:
            raise CodegenError(f"no foreign key planned for {referenced!r} in {host!r}")
        return self._use(self.fks[(referenced, host)])

    def last(self, dimset: DimensionSet) -> str:
        return self._use(self.lasts[dimset])

    def _use(self, name: str) -> str:
        self.used.add(name)
        return name


# -- blocks ---------------------------------------------------------------------------


def _columns(dimset: DimensionSet) -> range:
    return range(FIRST_DATA_COLUMN, FIRST_DATA_COLUMN + dimset.cardinality)


def _fmt(v: Variable) -> str:
    return v.number_format or "decimal"


def emit_reference_formula(model: Model, operand: str, host: DimensionSet, names: NameTable) -> str:
    """Formula that reads ``operand`` in a column of a ``host`` sheet."""
    opset = model.variable(operand).dimset
    if not dimset_is_subset(opset, host):
        raise CodegenError(f"[{operand}] over {opset!r} cannot be referenced from {host!r}")
    if opset == host or not len(opset):
        return f"={names.var(operand)}"
    return f"=INDEX({names.var(operand)},MATCH({names.fk(opset, host)},{names.pk(opset)},0))"


def emit_nonaggregate_block(model: Model, v: Variable, start_row: int, names: NameTable) -> list[Row]:
    """Reference rows for each operand, then the result row computed from the cells above."""
    if v.formula is None or isinstance(v.formula, Sum):
        raise CodegenError(f"[{v.name}] has no plain formula")
    rows: list[Row] = []
    row_of: dict[str, int] = {}
    cols = _columns(v.dimset)
    for i, op in enumerate(v.operands):
        formula = emit_reference_formula(model, op, v.dimset, names)
        fmt = _fmt(model.variable(op))
        row: Row = {1: Cell(op)}
        row.update({c: Cell(formula=formula, number_format=fmt) for c in cols})
        rows.append(row)
        row_of[op] = start_row + i
    result: Row = {1: Cell(v.name)}
    for c in cols:
        letters = column_letters(c)
        body = render_formula(v.formula, leaf=lambda ref: f"{letters}{row_of[ref.name]}", spreadsheet=True)
        result[c] = Cell(formula="=" + body, number_format=_fmt(v))
    rows.append(result)
    return rows


def emit_aggregate_block(model: Model, v: Variable, start_row: int, names: NameTable) -> list[Row]:
    """Six-row SUMIF block; a dimensionless result gets a plain SUM over the source row."""
    if not isinstance(v.formula, Sum):
        raise CodegenError(f"[{v.name}] is not an aggregate")
    src = model.variable(v.formula.operand.name)
    src_cols = _columns(src.dimset)
    host_cols = _columns(v.dimset)
    r_pk, r_values, r_fk, r_host = start_row + 1, start_row + 2, start_row + 3, start_row + 4

    rows: list[Row] = [{1: Cell(f"Last {set_label(src.dimset)} column"),
                        2: Cell(formula=f"={names.last(src.dimset)}")}]
    pk = names.pk(src.dimset)
    rows.append({1: Cell(pk_label(src.dimset)), **{c: Cell(formula=f"={pk}") for c in src_cols}})
    sv = names.var(src.name)
    rows.append({1: Cell(src.name), **{c: Cell(formula=f"={sv}", number_format=_fmt(src)) for c in src_cols}})
    if not len(v.dimset):
        rows.append({1: Cell(v.name), FIRST_DATA_COLUMN: Cell(formula=f"=SUM({r_values}:{r_values})",
                                                               number_format=_fmt(v))})
        return rows
    fk = names.fk(v.dimset, src.dimset)
    rows.append({1: Cell(fk_label(v.dimset, src.dimset)), **{c: Cell(formula=f"={fk}") for c in src_cols}})
    hpk = names.pk(v.dimset)
    rows.append({1: Cell(pk_label(v.dimset)), **{c: Cell(formula=f"={hpk}") for c in host_cols}})
    sumif = f"=SUMIF({r_fk}:{r_fk},{r_host}:{r_host},{r_values}:{r_values})"
    rows.append({1: Cell(v.name), **{c: Cell(formula=sumif, number_format=_fmt(v)) for c in host_cols}})
    return rows


# -- sheets ----------------------------------------------------------------------------


class _Builder:
    def __init__(self, model: Model, plan: WorksheetPlan, keys: KeyPlan):
        self.model = model
        self.plan = plan
        self.keys = keys
        dimsets = [ds for ds in model.used_dimsets()]
        dimsets += [ds for ds in keys.primary_keys if ds not in dimsets]
        self.dimsets = dimsets
        self.names = NameTable(model, keys, dimsets)
        self.wb = Workbook()
        self.key_home: dict[DimensionSet, str] = {}
        for ds in keys.primary_keys:
            home = plan.data_sheet_for(ds) or plan.model_sheet_for(ds)
            if home is not None:
                self.key_home[ds] = home.name

    def define_row(self, name: str, sheet: str, row: int, dimset: DimensionSet) -> None:
        ref = f"${column_letters(FIRST_DATA_COLUMN)}${row}" if not len(dimset) else f"${row}:${row}"
        self.wb.define(name, sheet, ref)

    def header(self, sheet: Sheet, dimset: DimensionSet) -> int:
        """Rows 1-3 plus owned key rows; returns the next free row."""
        sheet.set(1, 1, Cell(sheet.name))
        sheet.set(1, 2, Cell(formula=f"={self.names.last(dimset)}"))
        if not len(dimset):
            return 3
        cols = _columns(dimset)
        if self.key_home.get(dimset) == sheet.name:
            pk = primary_key_row(dimset)
            sheet.put_row(3, {1: Cell(pk_label(dimset)), **{c: Cell(k) for c, k in zip(cols, pk.values)}})
            self.define_row(self.names.pks[dimset], sheet.name, 3, dimset)
            row = 4
            for fk in self.keys.hosted_by(dimset):
                values = foreign_key_row(dimset, fk.referenced).values
                sheet.put_row(row, {1: Cell(fk_label(fk.referenced, dimset)),
                                    **{c: Cell(k) for c, k in zip(cols, values)}})
                self.define_row(self.names.fks[(fk.referenced, dimset)], sheet.name, row, dimset)
                row += 1
        else:
            pk = self.names.pk(dimset)
            sheet.put_row(3, {1: Cell(pk_label(dimset)), **{c: Cell(formula=f"={pk}") for c in cols}})
            row = 4
        return row + 1

    def data_sheet(self, sp: SheetPlan) -> Sheet:
        sheet = Sheet(sp.name)
        row = self.header(sheet, sp.dimset)
        table = self.model.table_for(sp.dimset)
        tuples = enumerate_tuples(sp.dimset)
        for name in sp.variables:
            v = self.model.variable(name)
            values = table.columns[name] if table is not None else {}
            cells: Row = {1: Cell(name)}
            for c, t in zip(_columns(sp.dimset), tuples):
                cells[c] = Cell(values[t], number_format=_fmt(v))
            sheet.put_row(row, cells)
            self.define_row(self.names.variables[name], sheet.name, row, sp.dimset)
            self.wb.layout[name] = VarLocation(name, sheet.name, row, sp.dimset)
            self.wb.blocks.append(Block(sheet.name, row, row, v.number, name, "data"))
            row += 1
        return sheet

    def model_sheet(self, sp: SheetPlan) -> Sheet:
        sheet = Sheet(sp.name)
        row = self.header(sheet, sp.dimset)
        for name in sp.variables:
            v = self.model.variable(name)
            if isinstance(v.formula, Sum):
                rows = emit_aggregate_block(self.model, v, row, self.names)
                kind = "aggregate" if len(v.dimset) else "sum"
                if kind == "sum":
                    self.wb.notes.append(
                        f"{sheet.name}: [{name}] is dimensionless, so its block uses SUM over the source "
                        f"row instead of SUMIF")
            else:
                rows = emit_nonaggregate_block(self.model, v, row, self.names)
                kind = "formula"
            for i, cells in enumerate(rows):
                sheet.put_row(row + i, cells)
            result_row = row + len(rows) - 1
            self.define_row(self.names.variables[name], sheet.name, result_row, sp.dimset)
            self.wb.layout[name] = VarLocation(name, sheet.name, result_row, sp.dimset)
            self.wb.blocks.append(Block(sheet.name, row, result_row, v.number, name, kind))
            row = result_row + 2
        return sheet

    def management_sheet(self) -> Sheet:
        sheet = Sheet(self.plan.management)
        sheet.set(1, 1, Cell(sheet.name))
        for c, title in enumerate(["Dimension set", "Expected columns", "Actual columns", "Check", "Last column"], 1):
            sheet.set(3, c, Cell(title))
        row = 4
        for ds in self.dimsets:
            sheet.set(row, 1, Cell(ds.full_name or SCALAR_SET_NAME))
            if len(ds):
                expected = "*".join(f"(COUNTA({self.names.pk(DimensionSet((d,)))})-1)" for d in ds.dims)
                actual = f"=COUNTA({self.names.pk(ds)})-1"
            else:
                expected, actual = "1", "=1"
            sheet.set(row, 2, Cell(formula="=" + expected))
            sheet.set(row, 3, Cell(formula=actual))
            sheet.set(row, 4, Cell(formula=f'=IF(C{row}=B{row},"OK","ERROR")'))
            sheet.set(row, 5, Cell(formula=f"=ADDRESS(1,B{row}+2,4)"))
            self.wb.define(self.names.lasts[ds], sheet.name, f"$E${row}")
            self.wb.management.append(ManagementRow(ds.full_name or SCALAR_SET_NAME, row))
            row += 1
        # base keys with no worksheet of their own
        orphans = [ds for ds in self.keys.primary_keys if ds not in self.key_home]
        if orphans:
            row += 1
            sheet.set(row, 1, Cell("Keys"))
            row += 1
            for ds in orphans:
                cols = _columns(ds)
                pk = primary_key_row(ds)
                sheet.put_row(row, {1: Cell(pk_label(ds)), **{c: Cell(k) for c, k in zip(cols, pk.values)}})
                self.define_row(self.names.pks[ds], sheet.name, row, ds)
                row += 1
        self.wb.management_sheet = sheet.name
        return sheet

    def build(self) -> Workbook:
        for sp in self.plan.data_sheets:
            self.wb.sheets.append(self.data_sheet(sp))
        for sp in self.plan.model_sheets:
            self.wb.sheets.append(self.model_sheet(sp))
        self.wb.sheets.append(self.management_sheet())
        return self.wb


def check_names_defined(wb: Workbook) -> list[str]:
    """Names used by some formula but never defined (should be empty)."""
    from .interpreter import formula_names

    defined = {n.casefold() for n in wb.names}
    missing = set()
    for _, _, _, text in wb.formulas():
        for n in formula_names(text):
            if n.casefold() not in defined:
                missing.add(n)
    return sorted(missing)


def compile_workbook(model: Model, reports=None) -> Workbook:
    """Model -> Workbook (data sheets, model sheets, Management, and Interface when ``reports`` is given).

    Raises ModelError when the model fails the analyzer checks.
    """
    errors = [d for d in check_model(model) if d.is_error]
    if errors:
        raise ModelError(errors)
    plan = assign_worksheets(model)
    keys = derive_keys(model)
    builder = _Builder(model, plan, keys)
    wb = builder.build()
    if reports is not None:
        from .interface import emit_interface_sheet

        wb.sheets.append(emit_interface_sheet(model, reports, builder.names, wb, plan.interface))
    missing = check_names_defined(wb)
    if missing:
        raise CodegenError("formulas use undefined names: " + ", ".join(missing))
    return wb


__all__ = [
    "Block",
    "Cell",
    "CodegenError",
    "NameTable",
    "NamedRange",
    "Sheet",
    "VarLocation",
    "Workbook",
    "compile_workbook",
    "emit_aggregate_block",
    "emit_nonaggregate_block",
    "emit_reference_formula",
    "mangle_name",
]
