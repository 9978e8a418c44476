"""Reference computations over fractions.Fraction, sharing no code with nilic.

Matrices are lists of rows.  Linear maps act on column vectors, so a matrix
with r rows and c columns maps Q^c to Q^r.  Subspaces are lists of spanning
row vectors.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations


def F(M):
    return [[x if isinstance(x, Fraction) else Fraction(str(x)) for x in row] for row in M]


def from_flint(M):
    return F(M.tolist())


def matmul(A, B):
    if not A or not B:
        return [[Fraction(0)] * (len(B[0]) if B else 0) for _ in A]
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), Fraction(0)) for j in range(len(B[0]))]
            for i in range(len(A))]


def identity(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def power(A, k):
    P = identity(len(A))
    for _ in range(k):
        P = matmul(P, A)
    return P


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols or 0)]
    return [list(r) for r in zip(*A)]


def echelon(rows):
    """Row echelon form by plain Gaussian elimination; returns the nonzero rows."""
    R = [list(r) for r in rows]
    out = []
    if not R:
        return out
    ncols = len(R[0])
    col = 0
    while R and col < ncols:
        piv = next((r for r in R if r[col] != 0), None)
        if piv is None:
            col += 1
            continue
        R.remove(piv)
        piv = [x / piv[col] for x in piv]
        R = [[a - r[col] * b for a, b in zip(r, piv)] for r in R]
        out.append(piv)
        col += 1
    return out


def rank(rows):
    return len(echelon(rows))


def nullspace(A, ncols):
    """Basis of {x : A x = 0} as row vectors."""
    R = []
    for r in echelon(A):
        R.append(r)
    # reduce fully
    pivots = []
    for i, r in enumerate(R):
        p = next(j for j, x in enumerate(r) if x != 0)
        pivots.append(p)
        for k in range(len(R)):
            if k != i and R[k][p] != 0:
                c = R[k][p]
                R[k] = [a - c * b for a, b in zip(R[k], r)]
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * ncols
        v[fcol] = Fraction(1)
        for r, p in zip(R, pivots):
            v[p] = -r[fcol]
        basis.append(v)
    return basis


def column_space(A, nrows):
    return echelon(transpose(A)) if A and A[0] else []


def kernel(A, n):
    return nullspace(A, n)


def intersect(U, V, n):
    if not U or not V:
        return []
    # a U = b V  <=>  [U; -V]^T (a, b) = 0
    stacked = [list(r) for r in U] + [[-x for x in r] for r in V]
    sols = nullspace(transpose(stacked), len(stacked))
    vecs = [[sum((s[i] * U[i][j] for i in range(len(U))), Fraction(0)) for j in range(n)] for s in sols]
    return echelon(vecs)


def image_of(U, A):
    """A applied to the rows of U."""
    return echelon([[sum((A[i][k] * u[k] for k in range(len(u))), Fraction(0)) for i in range(len(A))]
                    for u in U])


def weight_dims_formula(N, center=0):
    """dim W_k for the weight filtration of N by the kernel-image formula

    W_{c+k} = sum over j >= max(0, -k) of Ker N^{k+j+1} ∩ Im N^j.
    """
    n = len(N)
    if n == 0:
        return {}
    nil = 0
    while any(any(x for x in r) for r in power(N, nil)):
        nil += 1
    out = {}
    for k in range(-nil, nil + 1):
        parts = []
        for j in range(max(0, -k), nil + 1):
            if k + j + 1 < 0:
                continue
            ker = kernel(power(N, k + j + 1), n)
            im = column_space(power(N, j), n)
            parts.extend(intersect(ker, im, n))
        out[center + k] = rank(parts)
    return out


def weight_jumps(dims):
    """Keep only the indices where the dimension grows."""
    out, prev = {}, 0
    for k in sorted(dims):
        if dims[k] != prev:
            out[k] = dims[k]
            prev = dims[k]
    return out


def sl2_weights(m):
    return [m - 1 - 2 * i for i in range(m)]


def tensor_weight_jumps(sizes):
    """Weight jumps of Σ N_i on a tensor product of Jordan blocks (convolution of sl2 weights)."""
    weights = [0]
    for m in sizes:
        weights = [a + b for a in weights for b in sl2_weights(m)]
    counts = {}
    for x in weights:
        counts[x] = counts.get(x, 0) + 1
    out, acc = {}, 0
    for k in sorted(counts):
        acc += counts[k]
        out[k] = acc
    return out


# ---------------------------------------------------------------- complexes

def complex_cohomology(dims, diffs):
    """dims: {k: dim}; diffs: {k: matrix C^k -> C^{k+1}}.  Returns {k: dim H^k}."""
    rk = {k: rank(M) if M and M[0] else 0 for k, M in diffs.items()}
    return {k: dims[k] - rk.get(k, 0) - rk.get(k - 1, 0) for k in dims}


def _prod(fs, J, n):
    P = identity(n)
    for j in J:
        P = matmul(P, fs[j])
    return P


def _koszul_sign(i, J):
    return -1 if sum(1 for j in J if j < i) % 2 else 1


def ic_cohomology(fs, lam0=(), n=None):
    """H(IC(V, f; *Λ0)) via the ambient Koszul complex restricted to the terms Im f_{J∖Λ0}."""
    labels = list(range(len(fs)))
    n = n if n is not None else len(fs[0])
    L = len(labels)
    terms = {}
    for k in range(-L, 1):
        terms[k] = [(J, column_space(_prod(fs, [j for j in J if j not in lam0], n), n))
                    for J in combinations(labels, L + k)]
    return _subcomplex_cohomology(terms, lambda J: [(tuple(sorted(J + (i,))), _koszul_sign(i, J), fs[i])
                                                    for i in labels if i not in J], n)


def icc_cohomology(fs, lam0=(), n=None):
    labels = list(range(len(fs)))
    n = n if n is not None else len(fs[0])
    L = len(labels)
    terms = {}
    for k in range(0, L + 1):
        terms[k] = [(J, column_space(_prod(fs, [j for j in J if j not in lam0], n), n))
                    for J in combinations(labels, L - k)]
    return _subcomplex_cohomology(terms, lambda J: [(tuple(j for j in J if j != i), _koszul_sign(i, J), None)
                                                    for i in J], n)


def _subcomplex_cohomology(terms, arrows, n):
    """Rank bookkeeping for a subcomplex of ⊕_J V; each term is (key, spanning rows)."""
    dims = {k: sum(len(S) for _, S in t) for k, t in terms.items()}
    ranks = {}
    for k, t in terms.items():
        if k + 1 not in terms:
            continue
        tgt_off, o = {}, 0
        for J, _ in terms[k + 1]:
            tgt_off[J] = o
            o += n
        total = o
        images = []
        for J, S in t:
            for v in S:
                row = [Fraction(0)] * total
                for J2, s, f in arrows(J):
                    w = v if f is None else [sum((f[i][j] * v[j] for j in range(n)), Fraction(0))
                                             for i in range(n)]
                    base = tgt_off[J2]
                    for i in range(n):
                        row[base + i] += s * w[i]
                images.append(row)
        ranks[k] = rank(images) if images and total else 0
    return {k: dims[k] - ranks.get(k, 0) - ranks.get(k - 1, 0) for k in terms}


def nonzero(d):
    return {k: v for k, v in sorted(d.items()) if v}
