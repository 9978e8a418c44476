import pytest
from flint import fmpq_mat
from hypothesis import given, strategies as st

import oracles
from nilic.complexes import (ComplexMap, FilteredComplex, SignError, cohomology, cohomology_dims, cone,
                             direct_sum, identity_map, is_acyclic, is_quasi_iso, nonzero_dims, shift,
                             total, weight_truncation, zero_complex, zero_map, inclusion_by_blocks)
from nilic.filtration import Filtration
from nilic.linalg import SMat, Subspace, mat, nullspace
from nilic.nilcomplex import build_ic, build_icc, icc_to_ic, ic_punc, strictness_report
from nilic.pmts import generate, jordan_block, random_commuting_tuple


def two_term(M, lo=-1):
    n = M.ncols()
    return FilteredComplex({lo: n, lo + 1: M.nrows()}, {lo: SMat.from_dense(M)})


def random_complex(draw_rows, dims):
    """A complex with d^{k+1} d^k = 0, built by composing with left-null spaces."""
    d = {}
    prev = None
    for k in range(len(dims) - 1):
        src, tgt = dims[k], dims[k + 1]
        Y = mat(draw_rows(tgt, src if prev is None else None) or [[0] * src] * tgt, src) \
            if prev is None else None
        if prev is None:
            D = Y
        else:
            # rows killing Im(prev): nullspace of prev^T
            K = nullspace(prev.transpose())
            if K.nrows() == 0:
                D = fmpq_mat(tgt, src)
            else:
                R = mat(draw_rows(tgt, K.nrows()), K.nrows())
                D = R * K
        d[k] = SMat.from_dense(D)
        prev = D
    return FilteredComplex(dict(enumerate(dims)), d)


@st.composite
def complexes(draw):
    dims = draw(st.lists(st.integers(0, 4), min_size=2, max_size=4))

    def rows(r, c):
        return [[draw(st.integers(-2, 2)) for _ in range(c)] for _ in range(r)]

    return random_complex(rows, dims)


def test_zero_complex():
    assert nonzero_dims(cohomology_dims(zero_complex())) == {}


def test_j2_two_term():
    C = two_term(jordan_block(2))
    assert cohomology_dims(C) == {-1: 1, 0: 1}


def test_j2j2_ic(j2j2):
    C = build_ic(j2j2)
    assert cohomology_dims(C) == {-2: 1, -1: 0, 0: 0}
    fs = [oracles.from_flint(f) for f in j2j2.fs]
    assert oracles.ic_cohomology(fs) == {-2: 1, -1: 0, 0: 0}


def test_cone_of_identity_is_acyclic(j2j2):
    C = build_ic(j2j2)
    assert is_acyclic(cone(identity_map(C)))
    assert is_quasi_iso(identity_map(C))


def test_cone_of_zero_map(j2, j2j2):
    A, B = build_ic(j2j2), build_icc(j2)
    got = cohomology_dims(cone(zero_map(A, B)))
    hA, hB = cohomology_dims(A), cohomology_dims(B)
    for k, v in got.items():
        assert v == hA.get(k + 1, 0) + hB.get(k, 0)


def test_cone_icc_to_ic_j2(j2):
    C = cone(icc_to_ic(j2))
    assert nonzero_dims(cohomology_dims(C)) == {-1: 1, 0: 1}
    rep = is_quasi_iso(icc_to_ic(j2))
    assert not rep and rep.first_failure == -1


def test_weight_truncation_is_quasi_iso_j2(j2):
    ic = build_ic(j2)
    W = weight_truncation(ic, j2.w + j2.n - 1)
    assert [b.space.rows() for b in W.blocks[-1]] == [[[1, 0]]]
    assert [b.space.dim for b in W.blocks[0]] == [0]
    assert is_quasi_iso(inclusion_by_blocks(W, ic))


def test_single_column_total(j2):
    C = build_ic(j2)
    T, _ = total({0: C}, {})
    assert cohomology_dims(T) == cohomology_dims(C)


def test_cech_single_level(j2):
    P = ic_punc(j2)
    assert [P.tot.dim(k) for k in (-1, 0)] == [2, 2]
    assert nonzero_dims(cohomology_dims(P.tot)) == {-1: 1, 0: 1}


def test_cech_total_j2j2(j2j2):
    P = ic_punc(j2j2)
    assert nonzero_dims(cohomology_dims(P.tot)) == {-2: 1, 1: 1}


def test_total_rejects_noncommuting_squares():
    col = FilteredComplex({0: 1, 1: 1}, {0: SMat.from_dense(mat([[1]]))})
    h = {0: SMat.from_dense(mat([[1]])), 1: SMat.from_dense(mat([[2]]))}
    with pytest.raises(SignError):
        total({0: col, 1: col}, {0: h})


def test_shift_examples(j2):
    C = build_ic(j2)
    assert cohomology_dims(shift(C, 0)) == cohomology_dims(C)
    single = FilteredComplex({-1: 3}, {})
    assert shift(single, -1).dims == {0: 3}
    for n in (-2, -1, 1, 3):
        H, Hs = cohomology_dims(C), cohomology_dims(shift(C, n))
        assert all(Hs.get(k, 0) == H.get(k + n, 0) for k in range(-5, 5))


def test_dd_guard():
    d = {0: SMat.from_dense(mat([[1]])), 1: SMat.from_dense(mat([[1]]))}
    with pytest.raises(SignError):
        FilteredComplex({0: 1, 1: 1, 2: 1}, d)


def test_map_must_commute():
    A = FilteredComplex({0: 1, 1: 1}, {0: SMat.from_dense(mat([[1]]))})
    with pytest.raises(SignError):
        ComplexMap(A, A, {0: SMat.from_dense(mat([[1]]))})


def test_weights_on_cohomology(j2):
    H = cohomology(build_ic(j2))
    # H^{-1} = Ker N = span{e1}, weight -1 under W(N) centered at 0
    assert H[-1].dim == 1 and H[-1].weights == {-1: 1}


def test_json_round_trip(j2j2):
    C = build_ic(j2j2)
    data = C.to_json()
    back = FilteredComplex.from_json(data)
    assert cohomology_dims(back) == cohomology_dims(C)
    assert {k: h.weights for k, h in cohomology(back).items()} == {k: h.weights for k, h in cohomology(C).items()}


@given(complexes())
def test_euler_characteristic(C):
    H = cohomology_dims(C)
    assert C.euler() == sum((-1) ** (k % 2) * v for k, v in H.items())


@given(complexes())
def test_random_complexes_match_oracle(C):
    diffs = {k: oracles.from_flint(D.dense()) for k, D in C.d.items() if D.nrows and D.ncols}
    ref = oracles.complex_cohomology(C.dims, diffs)
    got = cohomology_dims(C)
    assert all(got.get(k, 0) == v for k, v in ref.items())


@given(complexes(), complexes())
def test_cone_long_exact_bound(A, B):
    phi = zero_map(A, B)
    Cn = cohomology_dims(cone(phi))
    hA, hB = cohomology_dims(A), cohomology_dims(B)
    for k, v in Cn.items():
        assert v <= hA.get(k + 1, 0) + hB.get(k, 0)


@given(st.integers(0, 5000), st.integers(1, 6), st.integers(1, 3))
def test_cone_sequence_bookkeeping(seed, dim, labels):
    """dim H^k(cone) = cok(H^k A -> H^k B) + ker(H^{k+1} A -> H^{k+1} B)."""
    inst = random_commuting_tuple(dim, labels, seed)
    phi = icc_to_ic(inst)
    Cn = cohomology_dims(cone(phi))
    hA, hB = cohomology_dims(phi.source), cohomology_dims(phi.target)
    ranks = {}
    for k in set(hA) | set(hB):
        ranks[k] = _induced_rank(phi, k)
    for k, v in Cn.items():
        cok = hB.get(k, 0) - ranks.get(k, 0)
        ker = hA.get(k + 1, 0) - ranks.get(k + 1, 0)
        assert v == cok + ker


def _induced_rank(phi, k):
    """Rank of H^k(A) -> H^k(B) as rank[phi(Z^k A) + B^k B] - rank B^k B."""
    from nilic.linalg import Subspace
    A, B = phi.source, phi.target
    if A.dim(k) == 0 or B.dim(k) == 0:
        return 0
    Dk = A.diff(k).dense()
    Z = Subspace.span(nullspace(Dk), A.dim(k)) if Dk.nrows() else Subspace.full(A.dim(k))
    if Z.dim == 0:
        return 0
    img = Z.image(phi.component(k).dense())
    prev = B.d.get(k - 1)
    bd = Subspace.span(prev.dense().transpose(), B.dim(k)) if prev is not None else Subspace(B.dim(k))
    return (img + bd).dim - bd.dim


@given(st.integers(0, 5000), st.integers(1, 6), st.integers(1, 3))
def test_ic_and_icc_match_oracle(seed, dim, labels):
    inst = random_commuting_tuple(dim, labels, seed)
    fs = [oracles.from_flint(f) for f in inst.fs]
    assert oracles.nonzero(cohomology_dims(build_ic(inst))) == oracles.nonzero(oracles.ic_cohomology(fs))
    assert oracles.nonzero(cohomology_dims(build_icc(inst))) == oracles.nonzero(oracles.icc_cohomology(fs))
    lam0 = inst.all[:1]
    assert (oracles.nonzero(cohomology_dims(build_ic(inst, lam0)))
            == oracles.nonzero(oracles.ic_cohomology(fs, lam0)))


@given(st.sampled_from(["tensor(jordan(2, 0, '1'), jordan(3, 0, '2'))",
                        "sum(jordan(3, 0, '1'), tate(jordan(1, 2, '1'), 1))",
                        "diag(jordan(3, 0, '1'), ['1', '2'])",
                        "tensor(tensor(jordan(2, 0, '1'), jordan(2, 0, '2')), jordan(2, 0, '3'))"]))
def test_strictness_on_polarizable(expr):
    inst = generate(expr)
    for C in (build_ic(inst), build_icc(inst)):
        assert strictness_report(C)["pass"]


def test_direct_sum_dims(j2, j2j2):
    S, offs = direct_sum([build_ic(j2j2), build_ic(j2j2)])
    assert S.dims == {k: 2 * v for k, v in build_ic(j2j2).dims.items()}
    assert offs[1][-2] == 4
