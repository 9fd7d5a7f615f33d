"""Plain-text dump of a workbook's raw cell contents, and its reader.

One ``[Sheet <name>]`` section per worksheet lists occupied rows as
``row<TAB>A<TAB>B...``: formulas as written, numbers in their shortest
exact form, and text that could be mistaken for either prefixed with
``'``.  Trailing sections record the names, the variable layout, the
management and interface cells and generator notes, so a loaded view can
be verified like a freshly compiled workbook.  Number formats are not kept.
"""

from __future__ import annotations

import re

from .codegen import Block, Cell, InterfaceCell, ManagementRow, NamedRange, Sheet, VarLocation, Workbook
from .model import Model, format_number

_NUMERIC = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:inf|nan)", re.IGNORECASE)


class FormulaViewError(ValueError):
    pass


def _cell_text(cell: Cell) -> str:
    if cell.formula is not None:
        text = cell.formula
    elif cell.value is None:
        return ""
    elif isinstance(cell.value, (int, float)) and not isinstance(cell.value, bool):
        return format_number(cell.value)
    else:
        text = str(cell.value)
        if not text or text.startswith(("=", "'")) or _NUMERIC.fullmatch(text):
            text = "'" + text
    if "\t" in text or "\n" in text:
        raise FormulaViewError(f"cell content {text!r} contains a tab or newline")
    return text


def _parse_cell(text: str) -> Cell | None:
    if text == "":
        return None
    if text.startswith("'"):
        return Cell(text[1:])
    if text.startswith("="):
        return Cell(formula=text)
    if _NUMERIC.fullmatch(text):
        return Cell(float(text))
    return Cell(text)


def render_sheet(sheet: Sheet) -> list[str]:
    lines = [f"[Sheet {sheet.name}]"]
    rows: dict[int, dict[int, Cell]] = {}
    for (r, c), cell in sheet.cells.items():
        rows.setdefault(r, {})[c] = cell
    for r in sorted(rows):
        cells = rows[r]
        width = max(cells)
        lines.append("\t".join([str(r)] + [_cell_text(cells[c]) if c in cells else "" for c in range(1, width + 1)]))
    return lines


def render_formula_view(wb: Workbook) -> str:
    lines: list[str] = []
    for sheet in wb.sheets:
        lines.extend(render_sheet(sheet))
        lines.append("")
    lines.append("[Names]")
    lines.extend(f"{n.name}\t{n.target}" for n in sorted(wb.names.values(), key=lambda n: n.name.casefold()))
    lines.append("")
    lines.append("[Layout]")
    lines.extend(f"{loc.variable}\t{loc.sheet}\t{loc.row}" for loc in wb.layout.values())
    lines.append("")
    lines.append("[Blocks]")
    lines.extend(f"{b.sheet}\t{b.first_row}\t{b.last_row}\t{b.number}\t{b.variable}\t{b.kind}" for b in wb.blocks)
    lines.append("")
    lines.append("[Management]")
    lines.extend(f"{wb.management_sheet}\t{m.row}\t{m.dimset_name}" for m in wb.management)
    lines.append("")
    if wb.interface_cells:
        lines.append("[Interface]")
        lines.extend(f"{ic.sheet}\t{ic.row}\t{ic.col}\t{ic.variable}\t{'-'.join(ic.tuple)}"
                     for ic in wb.interface_cells)
        lines.append("")
    lines.append("[Notes]")
    lines.extend(wb.notes)
    return "\n".join(lines) + "\n"


def sheet_section(view: str, sheet: str) -> str:
    """The lines of one sheet's section, without its header."""
    out, inside = [], False
    for line in view.splitlines():
        if line.startswith("["):
            inside = line == f"[Sheet {sheet}]"
            continue
        if inside and line:
            out.append(line)
    return "\n".join(out)


def parse_formula_view(text: str, model: Model) -> Workbook:
    """Rebuild a Workbook from a formula view; ``model`` supplies the dimension sets of the layout."""
    wb = Workbook()
    section = None
    sheet: Sheet | None = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section.startswith("Sheet "):
                sheet = Sheet(section[6:])
                wb.sheets.append(sheet)
                section = "Sheet"
            continue
        if not line and section != "Notes":
            continue
        fields = line.split("\t")
        try:
            if section == "Sheet":
                r = int(fields[0])
                for c, content in enumerate(fields[1:], 1):
                    cell = _parse_cell(content)
                    if cell is not None:
                        sheet.set(r, c, cell)
            elif section == "Names":
                name, target = fields
                sheet_part, ref = target.rsplit("!", 1)
                if sheet_part.startswith("'"):
                    sheet_part = sheet_part[1:-1].replace("''", "'")
                wb.names[name] = NamedRange(name, sheet_part, ref)
            elif section == "Layout":
                name, sheet_name, row = fields
                wb.layout[name] = VarLocation(name, sheet_name, int(row), model.variable(name).dimset)
            elif section == "Blocks":
                s, first, last, number, name, kind = fields
                wb.blocks.append(Block(s, int(first), int(last), int(number), name, kind))
            elif section == "Management":
                s, row, name = fields
                wb.management_sheet = s
                wb.management.append(ManagementRow(name, int(row)))
            elif section == "Interface":
                s, row, col, name, key = fields
                t = tuple(key.split("-")) if key else ()
                wb.interface_cells.append(InterfaceCell(s, int(row), int(col), name, t))
            elif section == "Notes":
                if line:
                    wb.notes.append(line)
            else:
                raise FormulaViewError(f"line {lineno}: content outside any section")
        except (ValueError, KeyError) as exc:
            if isinstance(exc, FormulaViewError):
                raise
            raise FormulaViewError(f"line {lineno}: malformed {section} entry: {line!r}") from None
    return wb
