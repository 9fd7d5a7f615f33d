"""Interface sheet: output variables laid out for reading.

Each report places one variable's dimensions on rows, columns and blocks.
A preparation area rebuilds the variable's primary key for every cell by
concatenating dimension codes with "-"; the presentation area looks each
key up with INDEX/MATCH.  A dimensionless variable is a plain reference.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass

from .codegen import Cell, InterfaceCell, NameTable, Sheet, Workbook
from .keygen import FIRST_DATA_COLUMN, KEY_SEPARATOR, column_letters
from .model import Model

ROLES = ("rows", "columns", "blocks")
REPORT_FILE = "reports.txt"


class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class Report:
    variable: str
    rows: str | None = None
    columns: str | None = None
    blocks: str | None = None

    def render(self) -> str:
        parts = [f'report "{self.variable}"']
        parts += [f"{role}={getattr(self, role)}" for role in ROLES if getattr(self, role)]
        return " ".join(parts)


def parse_reports(text: str, source: str = "<reports>") -> list[Report]:
    """``report "Var" [rows=Dim] [columns=Dim] [blocks=Dim]``, one per line; ``#`` starts a comment."""
    reports = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            words = shlex.split(line)
        except ValueError as exc:
            raise ReportError(f"{source}:{lineno}: {exc}") from None
        if len(words) < 2 or words[0] != "report":
            raise ReportError(f"{source}:{lineno}: expected 'report \"Variable\" ...'")
        roles: dict[str, str] = {}
        for w in words[2:]:
            m = re.fullmatch(r"(\w+)=(.+)", w)
            if not m or m.group(1) not in ROLES:
                raise ReportError(f"{source}:{lineno}: bad assignment {w!r}")
            if m.group(1) in roles:
                raise ReportError(f"{source}:{lineno}: {m.group(1)} assigned twice")
            roles[m.group(1)] = m.group(2)
        reports.append(Report(words[1], **roles))
    return reports


def default_reports(model: Model) -> list[Report]:
    """One report per output variable."""
    return [Report(v.name) for v in model.variables if v.kind.value == "output"]


def resolve_report(model: Model, report: Report) -> Report:
    """Fill unassigned roles: columns get the largest dimension, blocks the smallest.

    Raises ReportError for an unknown variable, an unknown or misplaced
    dimension, or a variable with more than three dimensions.
    """
    if not model.has_variable(report.variable):
        raise ReportError(f"unknown variable [{report.variable}] in report")
    v = model.variable(report.variable)
    dims = [d.name for d in v.dimset.dims]
    if len(dims) > 3:
        raise ReportError(f"[{v.name}] has {len(dims)} dimensions; a report shows at most 3")
    given = {role: getattr(report, role) for role in ROLES if getattr(report, role)}
    for role, dim in given.items():
        if dim not in dims:
            raise ReportError(f"{role}={dim}: [{v.name}] does not vary over {dim}")
    if len(set(given.values())) != len(given):
        raise ReportError(f"report on [{v.name}] uses a dimension twice")
    free = sorted((d for d in dims if d not in given.values()), key=lambda n: len(model.dimension(n)))
    if len(dims) == 3 and "blocks" not in given and free:
        given["blocks"] = free.pop(0)
    if "columns" not in given and free:
        given["columns"] = free.pop()
    if "rows" not in given and free:
        given["rows"] = free.pop()
    if free:
        raise ReportError(f"report on [{v.name}] leaves {', '.join(free)} unplaced")
    return Report(v.name, **given)


def emit_interface_sheet(model: Model, reports: list[Report], names: NameTable, wb: Workbook,
                         sheet_name: str = "Interface") -> Sheet:
    sheet = Sheet(sheet_name)
    sheet.set(1, 1, Cell(sheet_name))
    row = 3
    for report in reports:
        row = _emit_report(model, resolve_report(model, report), names, wb, sheet, row) + 1
    return sheet


def _emit_report(model: Model, report: Report, names: NameTable, wb: Workbook, sheet: Sheet, row: int) -> int:
    """Write one report starting at ``row``; returns the first row after it."""
    v = model.variable(report.variable)
    fmt = v.number_format or "decimal"
    sheet.set(row, 1, Cell(v.name))
    if not len(v.dimset):
        sheet.set(row, FIRST_DATA_COLUMN, Cell(formula=f"={names.var(v.name)}", number_format=fmt))
        wb.interface_cells.append(InterfaceCell(sheet.name, row, FIRST_DATA_COLUMN, v.name, ()))
        return row + 1

    dim = {role: (model.dimension(getattr(report, role)) if getattr(report, role) else None) for role in ROLES}
    col_codes = dim["columns"].codes if dim["columns"] else [None]
    row_codes = dim["rows"].codes if dim["rows"] else [None]
    block_codes = dim["blocks"].codes if dim["blocks"] else [None]
    cols = [FIRST_DATA_COLUMN + i for i in range(len(col_codes))]
    order = [d.name for d in v.dimset.dims]
    var_name, pk = names.var(v.name), names.pk(v.dimset)

    row += 1
    for b in block_codes:
        # block header: block code in B, column codes across
        header = row
        if dim["blocks"]:
            sheet.set(header, 1, Cell(dim["blocks"].name))
            sheet.set(header, 2, Cell(b))
        if dim["columns"]:
            for c, code in zip(cols, col_codes):
                sheet.set(header, c, Cell(code))
        presentation = header + 1
        preparation = presentation + len(row_codes) + 1
        sheet.set(preparation - 1, 1, Cell("Key"))
        for i, r in enumerate(row_codes):
            pres_row, prep_row = presentation + i, preparation + i
            if dim["rows"]:
                sheet.set(pres_row, 2, Cell(r))
                sheet.set(prep_row, 2, Cell(formula=f"=B{pres_row}"))
            for c, code in zip(cols, col_codes):
                letters = column_letters(c)
                parts = {}
                if dim["blocks"]:
                    parts[dim["blocks"].name] = f"$B${header}"
                if dim["rows"]:
                    parts[dim["rows"].name] = f"$B{pres_row}"
                if dim["columns"]:
                    parts[dim["columns"].name] = f"{letters}${header}"
                key = f'&"{KEY_SEPARATOR}"&'.join(parts[n] for n in order)
                sheet.set(prep_row, c, Cell(formula="=" + key))
                sheet.set(pres_row, c, Cell(formula=f"=INDEX({var_name},MATCH({letters}{prep_row},{pk},0))",
                                            number_format=fmt))
                t = {dim[role].name: code_ for role, code_ in
                     (("blocks", b), ("rows", r), ("columns", code)) if dim[role]}
                wb.interface_cells.append(InterfaceCell(sheet.name, pres_row, c, v.name,
                                                        tuple(t[n] for n in order)))
        row = preparation + len(row_codes) + 1
    return row
