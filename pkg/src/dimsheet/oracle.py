"""Direct evaluation of a model, independent of any workbook."""

from __future__ import annotations

import csv
import io
import math

from .analyzer import build_graph
from .interpreter import DIV0, NUM_ERROR, CellError
from .keygen import enumerate_tuples, render_key
from .model import BinOp, Literal, Model, Neg, Sum, Tuple, VarRef, projection_indices


class ValueStore:
    """(variable, tuple) -> number, or a CellError where arithmetic failed."""

    def __init__(self) -> None:
        self._data: dict[str, dict[Tuple, float | CellError]] = {}

    def __getitem__(self, key: tuple[str, Tuple]):
        name, t = key
        return self._data[name][t]

    def __contains__(self, name: str) -> bool:
        return name in self._data

    def set_variable(self, name: str, values: dict[Tuple, float | CellError]) -> None:
        self._data[name] = values

    def values(self, name: str) -> dict[Tuple, float | CellError]:
        return self._data[name]

    def variables(self) -> list[str]:
        return list(self._data)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ValueStore) and self._data == other._data

    def to_csv(self, model: Model, name: str) -> str:
        v = model.variable(name)
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(v.dimset.names) + [name])
        for t, x in self._data[name].items():
            writer.writerow(list(t) + [x.code if isinstance(x, CellError) else repr(x)])
        return out.getvalue()


def _apply(op: str, a, b):
    if isinstance(a, CellError):
        return a
    if isinstance(b, CellError):
        return b
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return DIV0 if b == 0 else a / b
    if a == 0 and b < 0:
        return DIV0
    if a < 0 and b != math.floor(b):
        return NUM_ERROR
    try:
        return a ** b
    except OverflowError:
        return NUM_ERROR


def evaluate_model(model: Model) -> ValueStore:
    """Evaluate every variable at every tuple of its dimension set.

    A plain formula is evaluated per result tuple with each operand read at
    the projection of that tuple; ``SUM(v)`` adds every tuple of ``v`` whose
    projection is the result tuple, in enumeration order.
    """
    store = ValueStore()
    graph = build_graph(model)
    for name in graph.order:
        v = model.variable(name)
        tuples = enumerate_tuples(v.dimset)
        if v.formula is None:
            table = model.table_for(v.dimset)
            if table is None or name not in table.columns:
                raise ValueError(f"no data bound for [{name}]")
            column = table.columns[name]
            store.set_variable(name, {t: float(column[t]) for t in tuples})
        elif isinstance(v.formula, Sum):
            src = model.variable(v.formula.operand.name)
            idx = projection_indices(src.dimset, v.dimset)
            sums: dict[Tuple, float | CellError] = {t: 0.0 for t in tuples}
            for s, x in store.values(src.name).items():
                key = tuple(s[i] for i in idx)
                acc = sums[key]
                if isinstance(acc, CellError):
                    continue
                sums[key] = x if isinstance(x, CellError) else acc + x
            store.set_variable(name, sums)
        else:
            readers = {}
            for op in v.operands:
                ds = model.variable(op).dimset
                readers[op] = (projection_indices(v.dimset, ds), store.values(op))

            def ev(node, t):
                if isinstance(node, Literal):
                    return node.value
                if isinstance(node, VarRef):
                    idx, values = readers[node.name]
                    return values[tuple(t[i] for i in idx)]
                if isinstance(node, Neg):
                    x = ev(node.operand, t)
                    return x if isinstance(x, CellError) else -x
                if isinstance(node, BinOp):
                    return _apply(node.op, ev(node.left, t), ev(node.right, t))
                raise TypeError(node)

            store.set_variable(name, {t: ev(v.formula, t) for t in tuples})
    return store


def value_table(model: Model, store: ValueStore, name: str) -> list[tuple[str, float | CellError]]:
    """(key text, value) pairs for a variable, in column order."""
    return [(render_key(t), x) for t, x in store.values(name).items()]
