import pytest
from hypothesis import given

from dimsheet.diagnostics import ModelError
from dimsheet.model import BinOp, Literal, Neg, Sum, VarRef, render_formula
from dimsheet.parser import ParseError, load_data, parse_formula, parse_model, parse_number, render_variable

from .strategies import expressions

HEADER = """
dimension Sector initial S { G M }
dimension Product initial P { S D }
"""


def codes(exc_info):
    return [d.code for d in exc_info.value.diagnostics]


def test_acme_counts(acme):
    assert [d.name for d in acme.dimensions] == ["Month", "Sector", "Product", "Region"]
    assert [len(d) for d in acme.dimensions] == [12, 4, 2, 5]
    assert len(acme.variables) == 31
    kinds = [v.kind.value for v in acme.variables]
    assert kinds.count("output") == 5
    assert acme.variable("Total Profit").number == 31
    assert acme.variable("MSP Unit Sales").dimset.initials == "MSP"


def test_acme_data_bound(acme):
    assert acme.table_for(acme.variable("Base Price").dimset).columns["Base Price"][()] == 140
    assert acme.table_for(acme.dimset(["Sector"])).columns["Rebate Percentage"][("G",)] == pytest.approx(0.4)


@pytest.mark.parametrize("text,expected", [
    ("1 + 2 * 3", BinOp("+", Literal(1), BinOp("*", Literal(2), Literal(3)))),
    ("(1 + 2) * 3", BinOp("*", BinOp("+", Literal(1), Literal(2)), Literal(3))),
    ("1 - 2 - 3", BinOp("-", BinOp("-", Literal(1), Literal(2)), Literal(3))),
    ("2 ^ 3 ^ 2", BinOp("^", Literal(2), BinOp("^", Literal(3), Literal(2)))),
    ("-2 ^ 2", Neg(BinOp("^", Literal(2), Literal(2)))),
    ("2 ^ -1", BinOp("^", Literal(2), Neg(Literal(1)))),
    ("[B] / [C] ^ [A]", BinOp("/", VarRef("B"), BinOp("^", VarRef("C"), VarRef("A")))),
    ("SUM([X])", Sum(VarRef("X"))),
    ("40%", Literal(0.4)),
])
def test_formula_precedence(text, expected):
    assert parse_formula(text) == expected


@pytest.mark.parametrize("text,code", [
    ("1 + SUM([X])", "nested-aggregate"),
    ("SUM(1)", "syntax"),
    ("1 +", "syntax"),
    ("[]", "syntax"),
    ("(1", "syntax"),
])
def test_formula_errors(text, code):
    with pytest.raises(ParseError) as exc:
        parse_formula(text)
    assert exc.value.code == code


@given(expressions)
def test_render_parse_round_trip(expr):
    assert parse_formula(render_formula(expr)) == expr


def test_parse_number():
    assert parse_number("9%") == pytest.approx(0.09)
    assert parse_number(" 1.5e3 ") == 1500


def test_render_variable():
    m = parse_model(HEADER + 'data "Mult" over Product\ncalc "Y" over Sector-Product = [Mult] * 2\n')
    assert render_variable(m.variable("Y")) == 'calc "Y" over Sector-Product = [Mult] * 2'


@pytest.mark.parametrize("source,code", [
    ("dimension A initial A { x x }", "duplicate-member"),
    ("dimension A initial A { S s }", "duplicate-member"),
    ("dimension A initial A { }", "empty-dimension"),
    ("dimension A initial A { x }\ndimension A initial B { y }", "duplicate-dimension"),
    ("dimension A initial Q { x }\ndimension B initial Q { y }", "duplicate-initial"),
    ('data "V" over Nope', "unknown-dimension"),
    ('input "V" = 1\ninput "v" = 2', "duplicate-variable"),
    ('calc "V"', "missing-formula"),
    ('calc "V" = [W] + 1', "unresolved-reference"),
    ("bogus statement", "syntax"),
    ('calc "V" = 1 + SUM([W])', "nested-aggregate"),
])
def test_model_diagnostics(source, code):
    with pytest.raises(ModelError) as exc:
        parse_model(source, "m.dsm")
    assert code in codes(exc)
    assert all(d.span is None or d.span.file == "m.dsm" for d in exc.value.diagnostics)


def test_diagnostic_has_line_number():
    with pytest.raises(ModelError) as exc:
        parse_model(HEADER + 'calc "V" over Sector = [Nope]\n', "m.dsm")
    assert exc.value.diagnostics[0].span.line == 4


def test_empty_model_warns():
    m = parse_model("", "e.dsm")
    assert [d.code for d in m.warnings] == ["empty-model"]


def test_member_codes_keep_their_case():
    m = parse_model("dimension A initial A { x Y z }")
    assert m.dimension("A").codes == ("x", "Y", "z")


MODEL = HEADER + 'data "Share" over Sector-Product\ndata "Rate" over Sector\n'


def test_load_data_reorders_columns():
    m = load_data(parse_model(MODEL), [
        "Product,Sector,Share\nS,G,10%\nD,G,0.9\nS,M,1\nD,M,0\n",
        ("rate.csv", "Sector,Rate\nG,1\nM,2\n"),
    ])
    assert m.table_for(m.variable("Share").dimset).columns["Share"][("G", "S")] == pytest.approx(0.1)


@pytest.mark.parametrize("tables,code", [
    (["", "Sector,Rate\nG,1\nM,2"], "empty-table"),
    (["Sector,Bogus\nG,1"], "unknown-column"),
    (["Sector,Share\nG,1\nM,2"], "dimset-mismatch"),
    (["Sector,Rate\nG,1\nQ,2"], "unknown-member"),
    (["Sector,Rate\nG,1\nG,2\nM,3"], "duplicate-tuple"),
    (["Sector,Rate\nG,abc\nM,2"], "not-numeric"),
    (["Sector,Rate\nG,1"], "missing-tuple"),
    (["Sector,Rate\nG,1\nM,2"], "missing-data"),
    (["Sector,Rate\nG,1\nM,2", "Sector,Rate\nG,1\nM,2"], "duplicate-column"),
])
def test_table_diagnostics(tables, code):
    with pytest.raises(ModelError) as exc:
        load_data(parse_model(MODEL), tables)
    assert code in codes(exc)


def test_calc_variable_cannot_take_data():
    m = parse_model(HEADER + 'input "R" over Sector\ncalc "C" over Sector = [R]\n')
    with pytest.raises(ModelError) as exc:
        load_data(m, ["Sector,R,C\nG,1,1\nM,2,2\n"])
    assert "not-data" in codes(exc)
