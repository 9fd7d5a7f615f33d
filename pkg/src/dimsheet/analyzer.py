"""Dependency graph, dimension checks, worksheet plan, key plan, impact analysis."""

from __future__ import annotations

import graphlib
import json
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, ModelError
from .model import (
    DimensionSet,
    Model,
    Sum,
    dimset_is_subset,
    infer_dimset,
    validate_references,
)

SHEET_NAME_LIMIT = 31
DATA_SHEET = "Data"
MODEL_SHEET = "Model"
MANAGEMENT_SHEET = "Management"
INTERFACE_SHEET = "Interface"


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]  # (used, user)
    order: tuple[str, ...]

    def dependents(self, name: str) -> set[str]:
        return {v for u, v in self.edges if u == name}

    def dependencies(self, name: str) -> set[str]:
        return {u for u, v in self.edges if v == name}

    def upstream(self, name: str) -> set[str]:
        """Every variable ``name`` depends on, directly or not."""
        seen: set[str] = set()
        stack = [name]
        while stack:
            for u in self.dependencies(stack.pop()):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen


def build_graph(model: Model) -> DependencyGraph:
    """Variables as nodes, an edge from every operand to the variable using it.

    The cached order is topological and, among ready variables, follows the
    model's declaration order.  Raises ModelError on a cycle.
    """
    diags = validate_references(model)
    if diags:
        raise ModelError(diags)
    number = {v.name: v.number for v in model.variables}
    edges = {(u, v.name) for v in model.variables for u in v.operands}
    sorter = graphlib.TopologicalSorter({v.name: set(v.operands) for v in model.variables})
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        cycle = list(dict.fromkeys(exc.args[1]))
        span = model.variable(cycle[0]).span
        raise ModelError(Diagnostic.error(
            "cycle", "circular definition: " + " -> ".join(f"[{n}]" for n in exc.args[1]), span)) from None
    order: list[str] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=number.__getitem__)
        order.extend(ready)
        sorter.done(*ready)
    return DependencyGraph(tuple(v.name for v in model.variables), frozenset(edges), tuple(order))


def check_dimensions(model: Model) -> list[Diagnostic]:
    """Declared dimension sets against the sets implied by the formulas."""
    diags: list[Diagnostic] = []
    for v in model.variables:
        if v.formula is None:
            continue
        inferred, aggregate = infer_dimset(v.formula, model)
        if aggregate:
            if not (dimset_is_subset(v.dimset, inferred) and v.dimset != inferred):
                diags.append(Diagnostic.error(
                    "aggregate-dimset",
                    f"[{v.name}] is declared over {v.dimset!r}; aggregate result must be a proper subset "
                    f"of the operand's set {inferred!r}", v.span))
        elif inferred != v.dimset:
            diags.append(Diagnostic.error(
                "dimset-mismatch",
                f"[{v.name}] is declared over {v.dimset!r} but its formula implies {inferred!r}", v.span))
    return diags


def sheet_base_name(dimset: DimensionSet) -> str:
    """Worksheet name for a dimension set, before any ``Data`` suffix.

    Long sets (four or more dimensions, or names past the sheet-name limit)
    fall back to their initials, as in ``MSPR``.
    """
    if not len(dimset):
        return ""
    full = dimset.full_name
    if len(dimset) >= 4 or len(full) + len(DATA_SHEET) > SHEET_NAME_LIMIT:
        return dimset.initials
    return full


def data_sheet_name(dimset: DimensionSet) -> str:
    return sheet_base_name(dimset) + DATA_SHEET


def model_sheet_name(dimset: DimensionSet) -> str:
    return sheet_base_name(dimset) or MODEL_SHEET


@dataclass(frozen=True)
class SheetPlan:
    name: str
    dimset: DimensionSet
    variables: tuple[str, ...]
    role: str  # "data" or "model"


@dataclass(frozen=True)
class WorksheetPlan:
    data_sheets: tuple[SheetPlan, ...]
    model_sheets: tuple[SheetPlan, ...]
    management: str = MANAGEMENT_SHEET
    interface: str = INTERFACE_SHEET

    @property
    def sheets(self) -> tuple[SheetPlan, ...]:
        return self.data_sheets + self.model_sheets

    def sheet_of(self, variable: str) -> SheetPlan:
        for s in self.sheets:
            if variable in s.variables:
                return s
        raise KeyError(variable)

    def data_sheet_for(self, dimset: DimensionSet) -> SheetPlan | None:
        return next((s for s in self.data_sheets if s.dimset == dimset), None)

    def model_sheet_for(self, dimset: DimensionSet) -> SheetPlan | None:
        return next((s for s in self.model_sheets if s.dimset == dimset), None)


def assign_worksheets(model: Model) -> WorksheetPlan:
    data: dict[DimensionSet, list[str]] = {}
    calc: dict[DimensionSet, list[str]] = {}
    for v in model.variables:
        target = calc if v.kind.has_formula else data
        target.setdefault(v.dimset, []).append(v.name)
    data_sheets = tuple(SheetPlan(data_sheet_name(ds), ds, tuple(names), "data") for ds, names in data.items())
    model_sheets = tuple(SheetPlan(model_sheet_name(ds), ds, tuple(names), "model") for ds, names in calc.items())
    return WorksheetPlan(data_sheets, model_sheets)


def check_sheet_order(model: Model, plan: WorksheetPlan | None = None) -> list[Diagnostic]:
    """A variable may only use same-sheet variables defined above it."""
    plan = plan or assign_worksheets(model)
    diags = []
    for sheet in plan.model_sheets:
        position = {n: i for i, n in enumerate(sheet.variables)}
        for name in sheet.variables:
            v = model.variable(name)
            for op in v.operands:
                if op in position and position[op] >= position[name]:
                    diags.append(Diagnostic.error(
                        "forward-reference",
                        f"[{name}] uses [{op}], which is defined below it on sheet {sheet.name}", v.span))
    names = [s.name for s in plan.sheets] + [plan.management, plan.interface]
    for n in sorted(set(names)):
        if names.count(n) > 1:
            diags.append(Diagnostic.error("sheet-name-collision", f"two worksheets would be named {n!r}"))
    return diags


def check_model(model: Model) -> list[Diagnostic]:
    """Every analyzer check; an empty list means the model compiles."""
    diags = list(model.warnings)
    diags.extend(validate_references(model))
    if any(d.is_error for d in diags):
        return diags
    try:
        build_graph(model)
    except ModelError as exc:
        diags.extend(exc.diagnostics)
        return diags
    diags.extend(check_dimensions(model))
    diags.extend(check_sheet_order(model))
    return diags


# -- keys ------------------------------------------------------------------------


@dataclass(frozen=True)
class ForeignKey:
    referenced: DimensionSet
    host: DimensionSet
    aggregate_vars: tuple[int, ...] = ()
    formula_vars: tuple[int, ...] = ()

    @property
    def variables(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.aggregate_vars + self.formula_vars)))

    def label(self) -> str:
        return f"{self.referenced.initials} in {self.host.initials}"


@dataclass(frozen=True)
class KeyPlan:
    primary_keys: tuple[DimensionSet, ...]
    foreign_keys: tuple[ForeignKey, ...]

    def hosted_by(self, host: DimensionSet) -> list[ForeignKey]:
        return [fk for fk in self.foreign_keys if fk.host == host]

    def find(self, referenced: DimensionSet, host: DimensionSet) -> ForeignKey | None:
        for fk in self.foreign_keys:
            if fk.referenced == referenced and fk.host == host:
                return fk
        return None

    @property
    def aggregate_keys(self) -> list[ForeignKey]:
        return [fk for fk in self.foreign_keys if fk.aggregate_vars]

    @property
    def formula_keys(self) -> list[ForeignKey]:
        return [fk for fk in self.foreign_keys if fk.formula_vars]


def derive_keys(model: Model) -> KeyPlan:
    """Primary keys for every used dimension set, foreign keys for every cross-set reference.

    An aggregate ``SUM(v)`` needs its result set keyed inside the operand's
    set; a plain formula needs each operand set that is a proper, nonempty
    subset of the result keyed inside the result set.  Keys are merged on
    (referenced, host).
    """
    pks: list[DimensionSet] = [ds for ds in model.used_dimsets() if len(ds)]
    for ds in list(pks):
        for d in ds.dims:
            single = DimensionSet((d,))
            if single not in pks:
                pks.append(single)

    found: dict[tuple[DimensionSet, DimensionSet], dict[str, list[int]]] = {}

    def add(referenced: DimensionSet, host: DimensionSet, number: int, aggregate: bool) -> None:
        entry = found.setdefault((referenced, host), {"agg": [], "formula": []})
        entry["agg" if aggregate else "formula"].append(number)

    for v in model.variables:
        if isinstance(v.formula, Sum):
            source = model.variable(v.formula.operand.name).dimset
            if len(v.dimset):
                add(v.dimset, source, v.number, True)
        elif v.formula is not None:
            for name in v.operands:
                ds = model.variable(name).dimset
                if len(ds) and ds != v.dimset and dimset_is_subset(ds, v.dimset):
                    add(ds, v.dimset, v.number, False)
    fks = tuple(ForeignKey(r, h, tuple(e["agg"]), tuple(e["formula"])) for (r, h), e in found.items())
    return KeyPlan(tuple(pks), fks)


# -- impact of changing a dimension's membership --------------------------------------


@dataclass(frozen=True)
class SheetImpact:
    sheet: str
    old_cols: int
    new_cols: int


@dataclass(frozen=True)
class ImpactReport:
    dimension: str
    old_members: int
    new_members: int
    sheets: tuple[SheetImpact, ...]
    widened_aggregates: tuple[str, ...]
    column_counts: dict = field(default_factory=dict)  # set name -> (old, new)

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "old_members": self.old_members,
            "new_members": self.new_members,
            "sheets": [{"sheet": s.sheet, "old_cols": s.old_cols, "new_cols": s.new_cols} for s in self.sheets],
            "widened_aggregates": list(self.widened_aggregates),
        }

    def to_text(self) -> str:
        lines = [f"Changing {self.dimension} from {self.old_members} to {self.new_members} members"]
        if not self.sheets:
            lines.append("No worksheet uses this dimension.")
        for s in self.sheets:
            delta = s.new_cols - s.old_cols
            lines.append(f"  {s.sheet}: {s.old_cols} -> {s.new_cols} columns ({delta:+d})")
        if self.widened_aggregates:
            lines.append("Aggregation blocks whose source rows change width:")
            lines.extend(f"  {name}" for name in self.widened_aggregates)
            lines.append("There is no need to change the formulas.")
        return "\n".join(lines)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def impact_of_member_change(model: Model, dimension: str, new_member_count: int) -> ImpactReport:
    try:
        dim = model.dimension(dimension)
    except KeyError:
        raise ValueError(f"unknown dimension {dimension!r}") from None
    if new_member_count < 1:
        raise ValueError("a dimension needs at least one member")
    old = len(dim)

    def count(ds: DimensionSet, members: int) -> int:
        n = 1
        for d in ds.dims:
            n *= members if d.name == dimension else len(d)
        return n

    plan = assign_worksheets(model)
    sheets = tuple(
        SheetImpact(s.name, count(s.dimset, old), count(s.dimset, new_member_count))
        for s in plan.sheets if dimension in s.dimset
    )
    widened = tuple(
        v.name for v in model.variables
        if isinstance(v.formula, Sum)
        and dimension in model.variable(v.formula.operand.name).dimset
        and dimension not in v.dimset
    )
    counts = {ds.full_name: (count(ds, old), count(ds, new_member_count))
              for ds in model.used_dimsets() if dimension in ds}
    return ImpactReport(dimension, old, new_member_count, sheets, widened, counts)

