import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dimsheet.model import (
    EMPTY,
    Dimension,
    DimensionSet,
    Member,
    dimset_is_subset,
    dimset_union,
    project_tuple,
    projection_indices,
)

DIMS = [
    Dimension("Month", "M", tuple(Member(c) for c in ("Jan", "Feb", "Mar")), 0),
    Dimension("Sector", "S", tuple(Member(c) for c in "GMPE"), 1),
    Dimension("Product", "P", tuple(Member(c) for c in "SD"), 2),
    Dimension("Region", "R", tuple(Member(c) for c in ("N", "SE", "W")), 3),
]
ALL_SETS = [DimensionSet.of(c) for k in range(5) for c in itertools.combinations(DIMS, k)]
dimsets = st.sampled_from(ALL_SETS)


def test_sixteen_subsets():
    assert len(ALL_SETS) == 16
    assert len(set(ALL_SETS)) == 16


def test_canonical_order_ignores_input_order():
    assert DimensionSet.of(reversed(DIMS)).names == ("Month", "Sector", "Product", "Region")
    assert DimensionSet.of(reversed(DIMS)).initials == "MSPR"


@given(dimsets, dimsets)
def test_union_commutative(a, b):
    assert dimset_union(a, b) == dimset_union(b, a)


@given(dimsets, dimsets, dimsets)
def test_union_associative(a, b, c):
    assert dimset_union(dimset_union(a, b), c) == dimset_union(a, dimset_union(b, c))


@given(dimsets)
def test_union_idempotent_and_identity(a):
    assert dimset_union(a, a) == a
    assert dimset_union(a, EMPTY) == a


@given(dimsets, dimsets)
def test_union_is_least_upper_bound(a, b):
    u = dimset_union(a, b)
    assert dimset_is_subset(a, u) and dimset_is_subset(b, u)
    assert len(u) == len(set(a.names) | set(b.names))


@given(dimsets, dimsets)
def test_subset_matches_name_sets(a, b):
    assert dimset_is_subset(a, b) == (set(a.names) <= set(b.names))


@st.composite
def chains(draw):
    """(s, m, t) with t <= m <= s, plus a tuple of s."""
    s = draw(dimsets)
    m = DimensionSet.of(d for d in s.dims if draw(st.booleans()))
    t = DimensionSet.of(d for d in m.dims if draw(st.booleans()))
    tup = tuple(draw(st.sampled_from(d.codes)) for d in s.dims)
    return s, m, t, tup


@given(chains())
def test_projection_composes(chain):
    s, m, t, tup = chain
    assert project_tuple(project_tuple(tup, s, m), m, t) == project_tuple(tup, s, t)


@given(chains())
def test_projection_to_self_and_empty(chain):
    s, _, _, tup = chain
    assert project_tuple(tup, s, s) == tup
    assert project_tuple(tup, s, EMPTY) == ()


@given(chains())
def test_projection_indices_agree(chain):
    s, m, _, tup = chain
    idx = projection_indices(s, m)
    assert tuple(tup[i] for i in idx) == project_tuple(tup, s, m)


def test_projection_rejects_non_subset():
    s = DimensionSet.of(DIMS[:1])
    with pytest.raises(ValueError):
        project_tuple(("Jan",), s, DimensionSet.of(DIMS[1:2]))
    with pytest.raises(ValueError):
        project_tuple(("Jan", "G"), s, s)


def test_cardinality():
    assert DimensionSet.of(DIMS).cardinality == 3 * 4 * 2 * 3
    assert EMPTY.cardinality == 1
