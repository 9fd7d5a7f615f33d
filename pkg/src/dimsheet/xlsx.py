"""XLSX writer: formulas, workbook-scope names and cached values."""

from __future__ import annotations

import datetime

import xlsxwriter

from .codegen import Workbook
from .interpreter import CellError, Interpreter

NUMBER_FORMATS = {
    "currency": "$#,##0.00",
    "percent": "0%",
    "decimal": "0.00",
    "integer": "0",
}

# fixed so that repeated compiles give identical files
CREATED = datetime.datetime(2000, 1, 1)


def write_xlsx(wb: Workbook, path, interpreter: Interpreter | None = None) -> None:
    """Write ``wb`` to ``path``; values from ``interpreter`` are cached in formula cells."""
    book = xlsxwriter.Workbook(str(path), {"strings_to_numbers": False, "strings_to_formulas": False})
    book.set_properties({"created": CREATED})
    formats = {key: book.add_format({"num_format": code}) for key, code in NUMBER_FORMATS.items()}
    try:
        for sheet in wb.sheets:
            ws = book.add_worksheet(sheet.name)
            ws.set_column(0, 0, 34)
            for (r, c), cell in sorted(sheet.cells.items()):
                fmt = formats.get(cell.number_format) if cell.number_format else None
                if cell.formula is not None:
                    cached = interpreter.values.get((sheet.name, r, c)) if interpreter else None
                    if isinstance(cached, CellError):
                        cached = cached.code
                    elif cached is None:
                        cached = 0
                    ws.write_formula(r - 1, c - 1, cell.formula, fmt, cached)
                elif isinstance(cell.value, str):
                    ws.write_string(r - 1, c - 1, cell.value, fmt)
                elif cell.value is not None:
                    ws.write_number(r - 1, c - 1, cell.value, fmt)
        for n in wb.names.values():
            book.define_name(n.name, "=" + n.target)
    finally:
        book.close()
