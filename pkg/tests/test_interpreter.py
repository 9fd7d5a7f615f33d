import math

import pytest
from hypothesis import given, settings

from dimsheet.codegen import Cell, Sheet, Workbook
from dimsheet.interpreter import (
    CYCLE,
    DIV0,
    MATCH_FAILED,
    NAME_ERROR,
    NUM_ERROR,
    CellError,
    FormulaSyntaxError,
    Interpreter,
    parse_cell_formula,
    parse_reference,
)
from dimsheet.model import BinOp, Literal, Neg, VarRef, render_formula, var_refs

from .strategies import NAMES, expressions


def sheet(name, rows):
    s = Sheet(name)
    for r, values in rows.items():
        for c, v in enumerate(values, 1):
            if v is None:
                continue
            s.set(r, c, Cell(formula=v) if isinstance(v, str) and v.startswith("=") else Cell(v))
    return s


def scratch(formula):
    wb = Workbook([Sheet("S")])
    wb.sheets[0].set(1, 1, Cell(formula=formula))
    return Interpreter(wb).value("S", 1, 1)


@pytest.fixture
def client_order():
    order = sheet("Order", {
        1: ["Order"],
        3: ["Order ID", 25, 26, 27, 28],
        4: ["Client ID in Order", 2, 1, 2, 3],
        6: ["Client Name"] + ["=INDEX(Client_Name,MATCH(Client_ID_in_Order,Client_ID,0))"] * 4,
    })
    client = sheet("Client", {
        1: ["Client"],
        3: ["Client ID", 1, 2, 3],
        4: ["Client Name", "Roger", "Maria", "José"],
    })
    wb = Workbook([order, client])
    wb.define("Client_ID_in_Order", "Order", "$4:$4")
    wb.define("Client_ID", "Client", "$3:$3")
    wb.define("Client_Name", "Client", "$4:$4")
    return Interpreter(wb)


def test_client_order_foreign_key_lookup(client_order):
    assert client_order.value("Order", 6, 2) == "Maria"
    assert [client_order.value("Order", 6, c) for c in range(2, 6)] == ["Maria", "Roger", "Maria", "José"]


def test_sumif_over_month_product_rows():
    msp = [159.01, 85.62, 35.74, 107.22, 221.05, 331.57, 224.96, 56.24, 176.67, 95.13]
    fk = ["Jan-S", "Jan-D"] * 4 + ["Feb-S", "Feb-D"]
    mp = ["Jan-S", "Jan-D", "Feb-S", "Feb-D", "Mar-S", "Mar-D", "Apr-S", "Apr-D", "May-S", "May-D"]
    s = sheet("Month-Product", {
        7: ["MSP Unit Sales", None] + msp,
        8: ["MP in MSP", None] + fk,
        9: ["MP", None] + mp,
        10: ["MP Unit Sales", None] + ["=SUMIF(8:8,9:9,7:7)"] * 10,
    })
    interp = Interpreter(Workbook([s]))
    assert interp.value("Month-Product", 10, 3) == pytest.approx(640.76, abs=1e-9)
    assert interp.value("Month-Product", 10, 4) == pytest.approx(580.65, abs=1e-9)
    # Feb-S only has one source column in this excerpt
    assert interp.value("Month-Product", 10, 5) == pytest.approx(176.67)
    assert interp.value("Month-Product", 10, 7) == 0


@pytest.mark.parametrize("formula,expected", [
    ("=1-0", 1),
    ("=2+3*4", 14),
    ("=(2+3)*4", 20),
    ("=-2^2", -4),
    ("=2^3^2", 64),
    ("=10/4", 2.5),
    ('="a"&"-"&"b"', "a-b"),
    ('=IF(1=1,"OK","ERROR")', "OK"),
    ('=IF(2=1,"OK","ERROR")', "ERROR"),
    ("=ADDRESS(1,98,4)", "CT1"),
    ("=ADDRESS(1,26)", "$Z$1"),
    ("=SUM(1,2,3)", 6),
    ("=1/0", DIV0),
    ("=0^-1", DIV0),
    ("=(-8)^0.5", NUM_ERROR),
    ("=Nowhere", NAME_ERROR),
    ("=NOSUCHFN(1)", NAME_ERROR),
])
def test_scalar_formulas(formula, expected):
    assert scratch(formula) == expected


def test_match_is_exact():
    s = sheet("K", {1: ["Key", "a-1", "a-2", "b-1"], 2: ['=MATCH("a-2",1:1,0)', '=MATCH("a",1:1,0)']})
    interp = Interpreter(Workbook([s]))
    assert interp.value("K", 2, 1) == 3
    assert interp.value("K", 2, 2) == MATCH_FAILED


def test_match_failure_propagates_through_index():
    s = sheet("K", {1: ["k", "x"], 2: ["v", 5], 3: ['=INDEX(2:2,MATCH("y",1:1,0))*2']})
    assert Interpreter(Workbook([s])).value("K", 3, 1) == MATCH_FAILED


def test_implicit_intersection_reads_own_column():
    s = sheet("Row", {3: ["V", None, 10, 20, 30], 5: [None, None, "=V", "=V", "=V"]})
    wb = Workbook([s])
    wb.define("V", "Row", "$3:$3")
    interp = Interpreter(wb)
    for c in (3, 4, 5):
        assert interp.value("Row", 5, c) == interp.value("Row", 3, c)


def test_cycle_detected():
    s = sheet("C", {1: ["=A2+1"], 2: ["=A1*2"]})
    interp = Interpreter(Workbook([s]))
    interp.evaluate_all()
    assert CYCLE in interp.values.values()


def test_sheet_qualified_references():
    a = sheet("First Sheet", {1: [4]})
    b = sheet("B", {1: ["='First Sheet'!A1*2"]})
    assert Interpreter(Workbook([a, b])).value("B", 1, 1) == 8


def test_counta_skips_blanks():
    s = sheet("C", {1: ["label", None, "a", "b", None, "c"], 2: ["=COUNTA(1:1)-1"]})
    assert Interpreter(Workbook([s])).value("C", 2, 1) == 3


def test_reference_parsing():
    assert parse_reference("'It''s'!$3:$3").sheet == "It's"
    assert parse_reference("$3:$3").whole_rows
    ref = parse_reference("B2:D2")
    assert (ref.r1, ref.c1, ref.r2, ref.c2) == (2, 2, 2, 4)
    with pytest.raises(FormulaSyntaxError):
        parse_cell_formula("=1+")


def _direct(expr, env):
    """Reference evaluation of an expression with spreadsheet error rules."""
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VarRef):
        return env[expr.name]
    if isinstance(expr, Neg):
        x = _direct(expr.operand, env)
        return x if isinstance(x, CellError) else -x
    a, b = _direct(expr.left, env), _direct(expr.right, env)
    for x in (a, b):
        if isinstance(x, CellError):
            return x
    if expr.op == "+":
        return a + b
    if expr.op == "-":
        return a - b
    if expr.op == "*":
        return a * b
    if expr.op == "/":
        return DIV0 if b == 0 else a / b
    if a == 0 and b < 0:
        return DIV0
    if a < 0 and b != math.floor(b):
        return NUM_ERROR
    try:
        return a ** b
    except OverflowError:
        return NUM_ERROR


@settings(max_examples=300)
@given(expressions)
def test_spreadsheet_rendering_evaluates_like_the_ast(expr):
    env = {"A": 2.0, "Beta": -3.0, "Gamma Delta": 0.5, "X1": 0.0}
    rows = {n: i + 1 for i, n in enumerate(NAMES)}
    s = Sheet("E")
    for n, r in rows.items():
        s.set(r, 3, Cell(env[n]))
    body = render_formula(expr, leaf=lambda ref: f"C{rows[ref.name]}", spreadsheet=True)
    s.set(10, 3, Cell(formula="=" + body))
    got = Interpreter(Workbook([s])).value("E", 10, 3)
    want = _direct(expr, env)
    if isinstance(want, CellError) or isinstance(got, CellError):
        assert got == want
    elif isinstance(want, complex) or not math.isfinite(want):
        return
    else:
        assert got == want
    assert set(var_refs(expr)) <= set(NAMES)


def test_spreadsheet_rendering_parenthesises_power_operands():
    expr = BinOp("^", Neg(Literal(2)), Literal(2))
    assert render_formula(expr, spreadsheet=True) == "(-2)^2"
    assert render_formula(Neg(BinOp("^", Literal(2), Literal(2))), spreadsheet=True) == "-(2^2)"
