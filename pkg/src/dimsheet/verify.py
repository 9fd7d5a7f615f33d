"""Cross-check of an emitted workbook against the model oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .codegen import Workbook
from .interpreter import CellError, Interpreter, display, interpret_workbook
from .keygen import column_letters, render_key
from .model import Model
from .oracle import ValueStore, evaluate_model

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Deviation:
    variable: str
    key: str
    sheet: str
    cell: str
    expected: object
    actual: object
    abs_dev: float
    rel_dev: float

    def to_json(self) -> dict:
        return {
            "variable": self.variable, "key": self.key, "sheet": self.sheet, "cell": self.cell,
            "expected": _jsonable(self.expected), "actual": _jsonable(self.actual),
            "abs_dev": _jsonable(self.abs_dev), "rel_dev": _jsonable(self.rel_dev),
        }


@dataclass(frozen=True)
class FlagResult:
    dimset: str
    cell: str
    value: object

    @property
    def ok(self) -> bool:
        return self.value == "OK"


def _jsonable(x):
    if isinstance(x, CellError):
        return x.code
    if isinstance(x, float) and x != x:
        return None
    if x == float("inf"):
        return "inf"
    return x


@dataclass
class CheckReport:
    tolerance: float
    compared: int = 0
    deviations: list[Deviation] = field(default_factory=list)
    worst: Deviation | None = None
    flags: list[FlagResult] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)

    @property
    def failures(self) -> list[Deviation]:
        return [d for d in self.deviations if not d.rel_dev <= self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures and not self.missing and all(f.ok for f in self.flags)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "compared": self.compared,
            "worst": self.worst.to_json() if self.worst else None,
            "failures": [d.to_json() for d in self.failures],
            "management": [{"set": f.dimset, "cell": f.cell, "value": display(f.value)} for f in self.flags],
            "missing": self.missing,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def to_text(self) -> str:
        lines = [f"compared {self.compared} values at relative tolerance {self.tolerance:g}"]
        if self.worst is not None:
            w = self.worst
            lines.append(f"worst deviation {w.rel_dev:.3g} at [{w.variable}] {w.key} ({w.sheet}!{w.cell})")
        for d in self.failures[:50]:
            lines.append(f"  DEVIATION [{d.variable}] {d.key} {d.sheet}!{d.cell}: "
                         f"expected {display(d.expected)}, got {display(d.actual)}")
        if len(self.failures) > 50:
            lines.append(f"  ... {len(self.failures) - 50} more")
        bad = [f for f in self.flags if not f.ok]
        lines.append(f"management checks: {len(self.flags) - len(bad)}/{len(self.flags)} OK")
        lines.extend(f"  {f.dimset}: {display(f.value)} ({f.cell})" for f in bad)
        lines.extend(f"  MISSING {m}" for m in self.missing)
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _compare(expected, actual) -> tuple[float, float]:
    if isinstance(expected, CellError) or isinstance(actual, CellError):
        same = isinstance(expected, CellError) and isinstance(actual, CellError) and expected.code == actual.code
        return (0.0, 0.0) if same else (float("inf"), float("inf"))
    if not isinstance(actual, (int, float)) or isinstance(actual, bool):
        return float("inf"), float("inf")
    diff = abs(actual - expected)
    scale = max(abs(expected), abs(actual))
    return diff, (diff / scale if scale else 0.0)


def cross_check(model: Model, workbook: Workbook, tolerance: float = DEFAULT_TOLERANCE,
                store: ValueStore | None = None, interpreter: Interpreter | None = None) -> CheckReport:
    """Compare every (variable, tuple) cell, every interface cell and every management flag."""
    store = store or evaluate_model(model)
    interp = interpreter or interpret_workbook(workbook)
    report = CheckReport(tolerance)

    def check(variable: str, t: tuple, sheet: str, row: int, col: int) -> None:
        expected = store[variable, t]
        actual = interp.value(sheet, row, col)
        abs_dev, rel_dev = _compare(expected, actual)
        dev = Deviation(variable, render_key(t) or "()", sheet, f"{column_letters(col)}{row}",
                        expected, actual, abs_dev, rel_dev)
        report.compared += 1
        report.deviations.append(dev)
        if report.worst is None or not rel_dev <= report.worst.rel_dev:
            report.worst = dev

    for v in model.variables:
        loc = workbook.layout.get(v.name)
        if loc is None:
            report.missing.append(f"[{v.name}] has no cell mapping")
            continue
        for i, t in enumerate(store.values(v.name)):
            check(v.name, t, loc.sheet, loc.row, loc.column_of(i))
    for ic in workbook.interface_cells:
        check(ic.variable, ic.tuple, ic.sheet, ic.row, ic.col)
    for m in workbook.management:
        report.flags.append(FlagResult(m.dimset_name, f"{workbook.management_sheet}!D{m.row}",
                                       interp.value(workbook.management_sheet, m.row, 4)))
    return report
