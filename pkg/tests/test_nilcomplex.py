import pytest
from hypothesis import given, strategies as st

import oracles
from nilic.complexes import (FiltrationEscape, cohomology_dims, inclusion_by_blocks, is_acyclic,
                             is_quasi_iso, nonzero_dims)
from nilic.instance import NilInstance
from nilic.linalg import Subspace
from nilic.nilcomplex import (FL_decomposition_report, admissible_truncations, build_cech_family, build_ic,
                              build_icc, build_sbar_functor, icc_punc, icc_to_ic, ic_punc, purity_report,
                              tot_sbar, truncate, verify_cone_prop, verify_thm_g, verify_truncations,
                              verify_vanishing_cycles)
from nilic.pmts import generate, random_commuting_tuple
from nilic.toric import constant_functor, sbar_fan


def dims(C, lo, hi):
    return tuple(C.dim(k) for k in range(lo, hi + 1))


def test_ic_of_zero_map():
    inst = NilInstance(["1"], {"1": [[0, 0], [0, 0]]})
    C = build_ic(inst)
    assert dims(C, -1, 0) == (2, 0)
    assert nonzero_dims(cohomology_dims(C)) == {-1: 2}


def test_ic_j2(j2):
    C = build_ic(j2)
    assert dims(C, -1, 0) == (2, 1)
    assert cohomology_dims(C) == {-1: 1, 0: 0}


def test_ic_j2j2_localized(j2j2):
    C = build_ic(j2j2, (0,))
    assert dims(C, -2, 0) == (4, 6, 2)
    fs = [oracles.from_flint(f) for f in j2j2.fs]
    assert nonzero_dims(cohomology_dims(C)) == oracles.nonzero(oracles.ic_cohomology(fs, (0,)))


def test_icc_examples(j2):
    C = build_icc(j2)
    assert dims(C, 0, 1) == (1, 2)
    assert cohomology_dims(C) == {0: 0, 1: 1}
    zero = NilInstance(["1"], {"1": [[0, 0], [0, 0]]})
    assert nonzero_dims(cohomology_dims(build_icc(zero))) == {1: 2}


@pytest.mark.parametrize("expr", ["jordan(3, 0, '1')", "tensor(jordan(2, 0, '1'), jordan(3, 0, '2'))",
                                  "diag(jordan(2, 0, '1'), ['1', '2', '3'])"])
def test_localized_icc_is_acyclic(expr):
    inst = generate(expr)
    for r in range(1, inst.n + 1):
        for lam0 in [inst.all[:r], inst.all[-r:]]:
            assert is_acyclic(build_icc(inst, lam0))


def test_icc_to_ic_examples(j2):
    phi = icc_to_ic(j2)
    assert phi.component(0).dense().tolist() == [[1]]
    assert not is_quasi_iso(phi)
    zero = NilInstance(["1"], {"1": [[0, 0], [0, 0]]})
    assert icc_to_ic(zero).component(0).is_zero()


def test_punctured_complexes(j2, j2j2):
    P = ic_punc(j2)
    assert dims(P.tot, -1, 0) == (2, 2)
    assert nonzero_dims(cohomology_dims(P.tot)) == {-1: 1, 0: 1}
    assert nonzero_dims(cohomology_dims(ic_punc(j2j2).tot)) == {-2: 1, 1: 1}
    for inst in (j2, j2j2):
        assert is_acyclic(icc_punc(inst).tot)


def test_cech_family_functoriality_violation(j2j2):
    # a family that ignores the localization set is fine; one that shrinks is not
    def shrinking(s):
        return build_icc(j2j2, s) if len(s) == 1 else build_ic(j2j2, s)

    with pytest.raises(FiltrationEscape):
        build_cech_family(j2j2, shrinking)


def test_cone_prop_examples(j2, j2j2, zero_pair):
    r = verify_cone_prop(j2)
    assert r["pass"] and r["per_degree"]["cone"] == {"-1": 1, "0": 1}
    assert verify_cone_prop(j2j2)["pass"]
    assert verify_cone_prop(zero_pair)["pass"]


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 3))
def test_cone_prop_on_random_tuples(seed, dim, labels):
    inst = random_commuting_tuple(dim, labels, seed)
    r = verify_cone_prop(inst)
    assert r["pass"], r


def test_truncation_examples(j2, j2j2):
    ic = build_ic(j2)
    T = truncate(j2, "ic", (), None, [(0,)], [j2.n - 1])
    assert [b.space.rows() for b in T.blocks[-1]] == [[[1, 0]]]
    assert sum(b.space.dim for b in T.blocks[0]) == 0
    assert is_quasi_iso(inclusion_by_blocks(T, ic))
    T2 = truncate(j2j2, "ic", (), None, [(0,)], [0])
    assert is_quasi_iso(inclusion_by_blocks(T2, build_ic(j2j2)))


def test_truncation_escape_is_reported():
    # f1 + f2 = 0, so the tuple weight of {1, 2} is pure while f1 is not zero
    J3 = [[0, 1, 0], [0, 0, 1], [0, 0, 0]]
    inst = NilInstance(["1", "2"], {"1": J3, "2": [[-x for x in r] for r in J3]})
    escaped = False
    for K, lam1, lam0 in admissible_truncations(inst):
        try:
            truncate(inst, "ic", lam0, lam1, K)
        except FiltrationEscape as e:
            escaped = True
            assert e.witness is not None
    assert escaped


def test_truncation_kind_guard(j2):
    with pytest.raises(ValueError):
        truncate(j2, "icc", (), None, [(0,)])


@pytest.mark.parametrize("expr", ["tensor(jordan(2, 0, '1'), jordan(2, 0, '2'))",
                                  "tensor(jordan(3, 0, '1'), jordan(2, 0, '2'))",
                                  "diag(jordan(3, 0, '1'), ['1', '2'])"])
def test_FL_grading_decomposes(expr):
    inst = generate(expr)
    for K, lam1, lam0 in admissible_truncations(inst):
        L = tuple(i for i in lam1 if i in set(K[-1]))
        r = FL_decomposition_report(inst, lam0, lam1, K, tuple(len(k) - 1 for k in K), L)
        assert r["pass"], (K, lam1, lam0, r)


@pytest.mark.parametrize("expr", ["jordan(4, 0, '1')", "tensor(jordan(2, 0, '1'), jordan(2, 0, '2'))",
                                  "sum(jordan(3, 2, '1'), tate(jordan(1, 4, '1'), 1))",
                                  "tensor(tensor(jordan(2, 0, '1'), jordan(1, 0, '2')), jordan(2, 0, '3'))"])
def test_purity_truncations_vanishing_cycles(expr):
    inst = generate(expr)
    assert purity_report(inst)["pass"]
    r = verify_truncations(inst)
    assert r["pass"] and r["W_IC_to_IC"] and r["W_ICc_acyclic"] and r["W_IC_to_W_IC_punc"]
    assert verify_vanishing_cycles(inst)["pass"]


def test_purity_detects_corrupted_weights(j2j2):
    shifted = NilInstance(["1", "2"], {"1": j2j2.fs[0], "2": j2j2.fs[1]}, w=0, W=j2j2.W.shifted(-5))
    r = purity_report(shifted)
    assert not r["pass"]
    v = r["violations"][0]
    assert set(v) == {"complex", "m", "k", "dim"}


def test_sbar_functor_examples(j2, j2j2):
    F13 = build_sbar_functor(j2, 13)
    assert F13.fan.cones == [()]
    assert cohomology_dims(F13(())) == cohomology_dims(build_ic(j2))
    F12 = build_sbar_functor(j2j2, 12)
    assert len(F12.fan.cones) == 3
    assert F12.functoriality_defect() is None
    F10, F11 = build_sbar_functor(j2j2, 10), build_sbar_functor(j2j2, 11)
    assert F10(()).blocks == F11(()).blocks or all(
        [b.space for b in F10(()).blocks[k]] == [b.space for b in F11(()).blocks[k]] for k in F10(()).blocks)


def test_tot_sbar_examples(j2, j2j2):
    T = tot_sbar(build_sbar_functor(j2, 12))[0]
    assert cohomology_dims(T) == cohomology_dims(build_sbar_functor(j2, 12)(()))
    const = constant_functor(sbar_fan(2))
    assert nonzero_dims(cohomology_dims(tot_sbar(const)[0])) == {-1: 1}
    T13 = tot_sbar(build_sbar_functor(j2j2, 13))[0]
    # constant IC on a segment: Tot = IC ⊗ (Q^2 -> Q) has the cohomology of IC shifted by one
    ic = cohomology_dims(build_ic(j2j2))
    assert nonzero_dims(cohomology_dims(T13)) == {k - 1: v for k, v in nonzero_dims(ic).items()}


def test_thm_g_examples(j2, j2j2, diag_j2):
    for inst in (j2, j2j2, diag_j2):
        r = verify_thm_g(inst)
        assert r["pass"], r
        assert set(r["verdicts"]) == {"g1", "g2", "g3"} and len(r["tables"]) == 4
    assert all(t == {"-3": 1} for t in verify_thm_g(j2j2)["tables"].values())
