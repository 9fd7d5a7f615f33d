"""Model intermediate representation and dimension-set algebra.

A model is a list of dimensions, a list of variables typed by the set of
dimensions they vary over, and dense data tables for the data/input
variables.  Everything here is immutable once the parser has built it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Union

from .diagnostics import Diagnostic, ModelError, SourceSpan

Tuple = tuple[str, ...]


@dataclass(frozen=True)
class Member:
    code: str
    label: str | None = None


@dataclass(frozen=True)
class Dimension:
    name: str
    initial: str
    members: tuple[Member, ...]
    order: int = 0

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(m.code for m in self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return f"Dimension({self.name!r})"


@dataclass(frozen=True)
class DimensionSet:
    """Set of dimensions, always held in model declaration order."""

    dims: tuple[Dimension, ...] = ()

    @classmethod
    def of(cls, dims: Iterable[Dimension]) -> "DimensionSet":
        unique = {d.name: d for d in dims}
        return cls(tuple(sorted(unique.values(), key=lambda d: d.order)))

    def __iter__(self) -> Iterator[Dimension]:
        return iter(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __contains__(self, dim: object) -> bool:
        if isinstance(dim, str):
            return any(d.name == dim for d in self.dims)
        return dim in self.dims

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.dims)

    @property
    def full_name(self) -> str:
        return "-".join(self.names)

    @property
    def initials(self) -> str:
        return "".join(d.initial for d in self.dims)

    @property
    def cardinality(self) -> int:
        n = 1
        for d in self.dims:
            n *= len(d)
        return n

    def __repr__(self) -> str:
        return "{" + ", ".join(self.names) + "}"


EMPTY = DimensionSet()


def dimset_union(a: DimensionSet, b: DimensionSet) -> DimensionSet:
    return DimensionSet.of(a.dims + b.dims)


def dimset_is_subset(a: DimensionSet, b: DimensionSet) -> bool:
    names = set(b.names)
    return all(d.name in names for d in a.dims)


def project_tuple(t: Tuple, source: DimensionSet, target: DimensionSet) -> Tuple:
    """Keep the member codes of ``t`` (a tuple of ``source``) that belong to ``target``."""
    if not dimset_is_subset(target, source):
        raise ValueError(f"{target!r} is not a subset of {source!r}")
    if len(t) != len(source):
        raise ValueError(f"tuple {t!r} does not match {source!r}")
    keep = set(target.names)
    return tuple(code for code, d in zip(t, source.dims) if d.name in keep)


def projection_indices(source: DimensionSet, target: DimensionSet) -> tuple[int, ...]:
    """Positions in a ``source`` tuple that make up the ``target`` projection."""
    if not dimset_is_subset(target, source):
        raise ValueError(f"{target!r} is not a subset of {source!r}")
    keep = set(target.names)
    return tuple(i for i, d in enumerate(source.dims) if d.name in keep)


# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Sum:
    operand: VarRef


Expression = Union[Literal, VarRef, Neg, BinOp, Sum]

BINARY_OPS = ("+", "-", "*", "/", "^")
PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def var_refs(expr: Expression) -> list[str]:
    """Distinct variable names referenced by ``expr``, in order of first appearance."""
    seen: list[str] = []

    def walk(node: Expression) -> None:
        if isinstance(node, VarRef):
            if node.name not in seen:
                seen.append(node.name)
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Sum):
            walk(node.operand)

    walk(expr)
    return seen


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def render_formula(expr: Expression, leaf=None, spreadsheet: bool = False) -> str:
    """Render ``expr`` with the fewest parentheses that still parse back to it.

    ``leaf`` maps a VarRef to its text (defaults to ``[Name]``).  In
    ``spreadsheet`` mode spaces are dropped and every compound operand of
    ``^`` or of unary minus gets parentheses, because spreadsheet
    applications bind unary minus tighter than ``^`` and associate ``^``
    to the left.
    """
    if leaf is None:
        leaf = lambda ref: f"[{ref.name}]"  # noqa: E731

    def compound(node: Expression) -> bool:
        return isinstance(node, (BinOp, Neg)) or (isinstance(node, Literal) and node.value < 0)

    def go(node: Expression) -> str:
        if isinstance(node, Literal):
            text = format_number(node.value)
            return f"({text})" if node.value < 0 else text
        if isinstance(node, VarRef):
            return leaf(node)
        if isinstance(node, Sum):
            return f"SUM({leaf(node.operand)})"
        if isinstance(node, Neg):
            inner = go(node.operand)
            op = node.operand
            if isinstance(op, BinOp) and (spreadsheet or PRECEDENCE[op.op] < 3):
                inner = f"({inner})"
            return f"-{inner}"
        prec = PRECEDENCE[node.op]
        left, right = go(node.left), go(node.right)
        if node.op == "^":
            if compound(node.left) and not isinstance(node.left, Literal):
                left = f"({left})"
            if isinstance(node.right, BinOp) and (spreadsheet or PRECEDENCE[node.right.op] < 3):
                right = f"({right})"
            elif isinstance(node.right, Neg) and spreadsheet:
                right = f"({right})"
            return f"{left}^{right}"
        if isinstance(node.left, BinOp) and PRECEDENCE[node.left.op] < prec:
            left = f"({left})"
        if isinstance(node.right, BinOp) and PRECEDENCE[node.right.op] <= prec:
            right = f"({right})"
        if spreadsheet:
            return f"{left}{node.op}{right}"
        return f"{left} {node.op} {right}"

    return go(expr)


# -- variables and model -------------------------------------------------------


class VariableKind(str, Enum):
    INPUT = "input"
    DATA = "data"
    CALCULATED = "calc"
    OUTPUT = "output"

    @property
    def has_formula(self) -> bool:
        return self in (VariableKind.CALCULATED, VariableKind.OUTPUT)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: VariableKind
    dimset: DimensionSet
    formula: Expression | None = None
    number_format: str | None = None
    number: int = 0
    span: SourceSpan | None = None

    @property
    def is_aggregate(self) -> bool:
        return isinstance(self.formula, Sum)

    @property
    def operands(self) -> list[str]:
        return var_refs(self.formula) if self.formula is not None else []


@dataclass(frozen=True)
class DataTable:
    dimset: DimensionSet
    columns: Mapping[str, Mapping[Tuple, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class Model:
    dimensions: tuple[Dimension, ...] = ()
    variables: tuple[Variable, ...] = ()
    data: tuple[DataTable, ...] = ()
    warnings: tuple[Diagnostic, ...] = ()
    tables: tuple[str, ...] = ()  # data file paths named by the model source

    def dimension(self, name: str) -> Dimension:
        for d in self.dimensions:
            if d.name == name:
                return d
        raise KeyError(name)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def has_variable(self, name: str) -> bool:
        return any(v.name == name for v in self.variables)

    def dimset(self, names: Iterable[str]) -> DimensionSet:
        return DimensionSet.of(self.dimension(n) for n in names)

    def table_for(self, dimset: DimensionSet) -> DataTable | None:
        for t in self.data:
            if t.dimset == dimset:
                return t
        return None

    def used_dimsets(self) -> list[DimensionSet]:
        """Distinct variable dimension sets, in order of first appearance."""
        out: list[DimensionSet] = []
        for v in self.variables:
            if v.dimset not in out:
                out.append(v.dimset)
        return out


def infer_dimset(expr: Expression, model: Model) -> tuple[DimensionSet, bool]:
    """Dimension set implied by a formula, and whether it is an aggregate.

    For ``SUM(v)`` the result set cannot be read off the formula, so the
    operand's set is returned with the aggregate flag raised; the caller
    checks that the declared set is a proper subset of it.
    """
    names = var_refs(expr)
    for n in names:
        if not model.has_variable(n):
            raise ModelError(Diagnostic.error("unresolved-reference", f"unknown variable [{n}]"))
    result = EMPTY
    for n in names:
        result = dimset_union(result, model.variable(n).dimset)
    return result, isinstance(expr, Sum)


def validate_references(model: Model) -> list[Diagnostic]:
    diags = []
    for v in model.variables:
        for n in v.operands:
            if not model.has_variable(n):
                diags.append(Diagnostic.error(
                    "unresolved-reference", f"[{v.name}] references undeclared variable [{n}]", v.span))
    return diags
