import openpyxl
import pytest

from dimsheet.xlsx import write_xlsx


@pytest.fixture(scope="module")
def xlsx_path(tmp_path_factory, acme_wb, acme_interp):
    path = tmp_path_factory.mktemp("x") / "acme.xlsx"
    write_xlsx(acme_wb, path, acme_interp)
    return path


def test_sheets_and_names(xlsx_path, acme_wb):
    book = openpyxl.load_workbook(xlsx_path)
    assert book.sheetnames == acme_wb.sheet_names
    assert set(book.defined_names) == set(acme_wb.names)
    for name, rng in acme_wb.names.items():
        assert book.defined_names[name].attr_text == rng.target


def test_formulas_stored_as_text(xlsx_path):
    ws = openpyxl.load_workbook(xlsx_path)["Month-Product"]
    assert ws["C10"].value == "=SUMIF(8:8,9:9,7:7)"
    assert ws["B1"].value == "=Last_MP_column"


def test_cached_values(xlsx_path, acme_store):
    ws = openpyxl.load_workbook(xlsx_path, data_only=True)["Month-Product"]
    assert ws["C10"].value == pytest.approx(acme_store["MP Unit Sales", ("Jan", "S")])
    assert ws["B1"].value == "Z1"
    mgmt = openpyxl.load_workbook(xlsx_path, data_only=True)["Management"]
    assert {mgmt.cell(r, 4).value for r in range(4, 17)} == {"OK"}


def test_number_formats(xlsx_path):
    ws = openpyxl.load_workbook(xlsx_path)["Sector-Product"]
    assert ws["C11"].number_format == "$#,##0.00"
    assert ws["C6"].number_format == "0%"


def test_deterministic_bytes(tmp_path, acme_wb, acme_interp):
    a, b = tmp_path / "a.xlsx", tmp_path / "b.xlsx"
    write_xlsx(acme_wb, a, acme_interp)
    write_xlsx(acme_wb, b, acme_interp)
    assert a.read_bytes() == b.read_bytes()
