"""Tuple enumeration, key rendering and column arithmetic."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import DimensionSet, Tuple, dimset_is_subset, projection_indices

KEY_SEPARATOR = "-"
FIRST_DATA_COLUMN = 3  # column A holds labels, column B management values


@dataclass(frozen=True)
class KeyRow:
    dimset: DimensionSet
    values: tuple[str, ...]


def enumerate_tuples(dimset: DimensionSet) -> list[Tuple]:
    """All tuples of ``dimset``; the last dimension varies fastest."""
    return list(itertools.product(*(d.codes for d in dimset.dims)))


def render_key(t: Tuple) -> str:
    return KEY_SEPARATOR.join(t)


def primary_key_row(dimset: DimensionSet) -> KeyRow:
    return KeyRow(dimset, tuple(render_key(t) for t in enumerate_tuples(dimset)))


def foreign_key_row(host: DimensionSet, referenced: DimensionSet) -> KeyRow:
    if not dimset_is_subset(referenced, host):
        raise ValueError(f"{referenced!r} is not a subset of {host!r}")
    idx = projection_indices(host, referenced)
    values = tuple(render_key(tuple(t[i] for i in idx)) for t in enumerate_tuples(host))
    return KeyRow(host, values)


def column_count(dimset: DimensionSet) -> int:
    return dimset.cardinality


def column_letters(index: int) -> str:
    """1 -> A, 26 -> Z, 27 -> AA (bijective base 26)."""
    if index < 1:
        raise ValueError(f"column index must be >= 1, got {index}")
    letters = []
    while index:
        index, rem = divmod(index - 1, 26)
        letters.append(chr(ord("A") + rem))
    return "".join(reversed(letters))


def column_index(letters: str) -> int:
    if not letters or not letters.isalpha():
        raise ValueError(f"not a column name: {letters!r}")
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


def last_column_letters(dimset: DimensionSet, first_data_column: int = FIRST_DATA_COLUMN) -> str:
    return column_letters(first_data_column - 1 + column_count(dimset))
