import json

from dimsheet.codegen import Cell, compile_workbook
from dimsheet.interpreter import DIV0
from dimsheet.parser import load_data, parse_model
from dimsheet.verify import cross_check


def test_acme_passes(acme, acme_wb, acme_interp, acme_store):
    report = cross_check(acme, acme_wb, interpreter=acme_interp, store=acme_store)
    assert report.passed
    assert report.worst.rel_dev <= 1e-9
    assert len(report.flags) == 13 and all(f.ok for f in report.flags)
    assert json.loads(report.dumps())["passed"] is True
    assert report.to_text().endswith("PASS")


def test_corrupt_foreign_key_is_detected(acme, acme_reports):
    wb = compile_workbook(acme, acme_reports)
    fk_row = int(wb.names["MP_in_MSP"].ref.split(":")[0].strip("$"))
    sheet = wb.sheet(wb.names["MP_in_MSP"].sheet)
    assert sheet.get(fk_row, 3).value == "Jan-S"
    sheet.set(fk_row, 3, Cell("Feb-S"))
    report = cross_check(acme, wb)
    assert not report.passed
    failing = {(d.variable, d.key) for d in report.failures}
    assert {v for v, _ in failing} == {"MP Unit Sales", "MP Sales Amount"}
    assert {k for _, k in failing} == {"Jan-S", "Feb-S"}


def test_corrupt_primary_key_trips_a_flag(acme):
    wb = compile_workbook(acme)
    sheet = wb.sheet(wb.names["Sector_Code"].sheet)
    row = int(wb.names["Sector_Code"].ref.split(":")[0].strip("$"))
    sheet.set(row, 7, Cell("X"))  # one column too many
    report = cross_check(acme, wb)
    assert not report.passed
    # the Sector count itself balances; every larger set now expects more columns
    failing = {f.dimset for f in report.flags if not f.ok}
    assert failing == {ds.full_name for ds in acme.used_dimsets() if "Sector" in ds and len(ds) > 1}


def test_missing_mapping_fails(acme):
    wb = compile_workbook(acme)
    del wb.layout["Price"]
    report = cross_check(acme, wb)
    assert not report.passed and report.missing


def test_empty_model_passes_trivially():
    m = load_data(parse_model(""), [])
    report = cross_check(m, compile_workbook(m))
    assert report.passed and report.compared == 0


def test_matching_errors_count_as_agreement():
    m = load_data(parse_model('input "Z" = 0\ncalc "Inv" = 1 / [Z]\n'), [])
    report = cross_check(m, compile_workbook(m))
    assert report.passed
    assert report.deviations[-1].actual == DIV0
