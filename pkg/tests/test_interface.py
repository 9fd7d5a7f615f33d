import pytest

from dimsheet.codegen import compile_workbook
from dimsheet.interface import Report, ReportError, default_reports, parse_reports, resolve_report
from dimsheet.parser import load_data, parse_model


def test_parse_reports():
    reports = parse_reports('# c\nreport "MPR Unit Sales" rows=Region columns=Month blocks=Product\n\n'
                            'report "Total Profit"\n')
    assert reports == [Report("MPR Unit Sales", "Region", "Month", "Product"), Report("Total Profit")]
    assert reports[0].render() == 'report "MPR Unit Sales" rows=Region columns=Month blocks=Product'


@pytest.mark.parametrize("text", ['chart "X"', 'report "X" rows', 'report "X" size=3',
                                  'report "X" rows=A rows=B', 'report "X'])
def test_parse_errors(text):
    with pytest.raises(ReportError):
        parse_reports(text)


def test_defaults_pick_blocks_and_columns(acme):
    r = resolve_report(acme, Report("MPR Unit Sales"))
    assert (r.blocks, r.columns, r.rows) == ("Product", "Month", "Region")
    r = resolve_report(acme, Report("MP Unit Sales"))
    assert (r.columns, r.rows, r.blocks) == ("Month", "Product", None)
    assert resolve_report(acme, Report("Monthly Profit")).columns == "Month"


@pytest.mark.parametrize("report", [
    Report("Nope"), Report("MSPR Unit Sales"), Report("MP Unit Sales", rows="Region"),
    Report("MP Unit Sales", rows="Month", columns="Month"),
])
def test_resolve_errors(acme, report):
    with pytest.raises(ReportError):
        resolve_report(acme, report)


def test_default_reports_cover_outputs(acme):
    assert [r.variable for r in default_reports(acme)] == [
        "Monthly Unit Sales", "MPR Unit Sales", "MP Unit Sales", "MP Sales Amount", "Total Profit"]


def test_mpr_report_layout(acme_wb, acme_interp, acme_store):
    cells = [c for c in acme_wb.interface_cells if c.variable == "MPR Unit Sales"]
    assert len(cells) == 12 * 2 * 5
    assert len({(c.row, c.col) for c in cells}) == len(cells)
    sheet = acme_wb.sheet("Interface")
    blocks = [c for c in cells if c.col == 3 and c.tuple[2] == "N"]
    assert [c.tuple[1] for c in blocks] == ["S", "D"]
    first = cells[0]
    formula = sheet.get(first.row, first.col).formula
    assert formula.startswith("=INDEX(MPR_Unit_Sales,MATCH(") and formula.endswith(",MPR,0))")
    for c in cells:
        assert acme_interp.value(c.sheet, c.row, c.col) == acme_store[c.variable, c.tuple]


def test_key_preparation_concatenates_in_canonical_order(acme_wb, acme_interp):
    first = next(c for c in acme_wb.interface_cells if c.variable == "MPR Unit Sales")
    sheet = acme_wb.sheet("Interface")
    formula = sheet.get(first.row, first.col).formula
    prep = formula[formula.index("MATCH(") + 6:formula.index(",MPR")]
    from dimsheet.keygen import column_index

    col = column_index("".join(ch for ch in prep if ch.isalpha()))
    row = int("".join(ch for ch in prep if ch.isdigit()))
    assert '&"-"&' in sheet.get(row, col).formula
    assert acme_interp.value("Interface", row, col) == "Jan-S-N"


def test_dimensionless_report_is_a_reference(acme_wb):
    cell = next(c for c in acme_wb.interface_cells if c.variable == "Total Profit")
    assert acme_wb.sheet("Interface").get(cell.row, cell.col).formula == "=Total_Profit"


def test_one_dimension_strip(acme_wb):
    cells = [c for c in acme_wb.interface_cells if c.variable == "Monthly Profit"]
    assert len(cells) == 12 and len({c.row for c in cells}) == 1


def test_report_without_output_dimension_error():
    m = load_data(parse_model('dimension S initial S { a b }\ninput "X" over S\n'), ["S,X\na,1\nb,2\n"])
    wb = compile_workbook(m, [Report("X", rows="S")])
    assert len(wb.interface_cells) == 2
