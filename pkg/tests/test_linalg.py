from fractions import Fraction

import pytest
from flint import fmpq
from hypothesis import given, strategies as st

import oracles
from nilic.linalg import (DimensionMismatch, LinMap, PreconditionError, Quotient, Subspace, as_q,
                          induced_map, intersect, mat, qstr, reduce_span, sum_spaces)
from nilic.filtration import monodromy_filtration
from nilic.pmts import jordan_block


def vecs(n, max_rows=5):
    return st.lists(st.lists(st.integers(-3, 3), min_size=n, max_size=n), max_size=max_rows)


def test_scalar_strings():
    assert qstr(as_q("6/4")) == "3/2"
    assert qstr(as_q("-4/2")) == "-2"
    assert as_q("2/-4") == fmpq(-1, 2)
    x = as_q("-10/4")
    assert x.q > 0 and x == fmpq(-5, 2)


def test_reduce_span_examples():
    assert reduce_span([], 3).dim == 0
    S = reduce_span([[1, 0], [2, 0]], 2)
    assert S.dim == 1 and S.rows() == [[1, 0]]
    vs = [[1, 1, 0], [0, 1, 1], [1, 0, -1], [2, 2, 0]]
    assert reduce_span(vs, 3).dim == 2 == oracles.rank(oracles.F(vs))


def test_reduce_span_rejects_bad_lengths():
    with pytest.raises(DimensionMismatch):
        reduce_span([[1, 0], [1, 0, 0]], 2)


def test_intersect_examples():
    A = reduce_span([[1, 0], [0, 0]], 2)
    assert intersect(A, A) == A
    assert intersect(reduce_span([[1, 0]], 2), reduce_span([[0, 1]], 2)).dim == 0
    got = intersect(reduce_span([[1, 1, 0], [0, 0, 1]], 3), reduce_span([[0, 1, 0], [0, 0, 1]], 3))
    assert got == reduce_span([[0, 0, 1]], 3)


def test_intersect_rejects_ambient_mismatch():
    with pytest.raises(DimensionMismatch):
        intersect(Subspace.full(2), Subspace.full(3))


def test_induced_map_examples():
    N = jordan_block(2)
    im = Subspace.full(2).image(N)
    r = induced_map(N, im, im, "restrict")
    assert (r.domain_dim, r.codomain_dim) == (1, 1) and r.matrix[0, 0] == 0
    q = induced_map(N, Subspace.full(2), im, "quotient")
    assert (q.domain_dim, q.codomain_dim) == (1, 1) and q.matrix[0, 0] == 0
    N3 = jordan_block(3)
    W0 = monodromy_filtration(N3)[0]
    assert W0.dim == 2
    assert induced_map(N3, W0, W0, "restrict").matrix.rank() == 1


def test_induced_map_precondition_witness():
    N = jordan_block(2)
    line = reduce_span([[0, 1]], 2)
    with pytest.raises(PreconditionError) as e:
        induced_map(N, line, line, "restrict")
    assert e.value.witness == ["0", "1"]


def test_linmap_call_and_compose():
    A = LinMap([[0, 1], [0, 0]])
    assert A([3, 5]) == [5, 0]
    assert (A @ A).matrix == mat([[0, 0], [0, 0]])


def test_quotient_coordinates():
    big = Subspace.full(3)
    small = reduce_span([[1, 1, 0]], 3)
    Q = Quotient(big, small)
    assert Q.dim == 2
    c = Q.coords(mat([[1, 1, 0]]))
    assert all(x == 0 for x in c.entries())


@given(vecs(4))
def test_reduce_span_idempotent_and_order_free(rows):
    S = reduce_span(rows, 4)
    assert reduce_span(S.rows(), 4) == S
    assert reduce_span(list(reversed(rows)), 4) == S
    assert S.dim == oracles.rank(oracles.F(rows))


@given(vecs(4), vecs(4))
def test_modular_law(a, b):
    A, B = reduce_span(a, 4), reduce_span(b, 4)
    assert A.dim + B.dim == (A + B).dim + A.intersect(B).dim
    assert A.intersect(B) == B.intersect(A)
    assert A.intersect(B) <= A and A <= A + B
    ref = oracles.intersect(oracles.F(A.rows()), oracles.F(B.rows()), 4) if A.dim and B.dim else []
    assert A.intersect(B).dim == len(ref)


@given(vecs(3, 3), st.lists(st.lists(st.integers(-2, 2), min_size=3, max_size=3), min_size=3, max_size=3))
def test_restrict_then_include_is_f(src_rows, f_rows):
    f = mat(f_rows)
    src = reduce_span(src_rows, 3)
    dst = src.image(f)
    r = induced_map(f, src, dst, "restrict")
    if src.dim == 0:
        return
    # dst.basis^T r == f src.basis^T
    lhs = dst.basis.transpose() * r.matrix if dst.dim else mat([[0] * src.dim] * 3)
    assert lhs == f * src.basis.transpose()


@given(vecs(4), vecs(4))
def test_sum_and_preimage(a, b):
    A, B = reduce_span(a, 4), reduce_span(b, 4)
    assert sum_spaces([A, B], 4) == A + B
    N = mat([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    P = A.preimage(N)
    assert P.image(N) <= A
    assert P.dim == (A.intersect(Subspace.full(4).image(N))).dim + (4 - N.rank())
