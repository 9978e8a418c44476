"""Polarizable instances built from Jordan blocks, and polarization / Lefschetz checks.

Generator expressions are small trees::

    jordan(m, w, label)     one m-dimensional Jordan block, weight center w
    tensor(a, b)            tensor product, labels disjoint, weights add
    sum(a, b)               direct sum, same labels and weight
    tate(a, n)              weight center shifted by -2n
    diag(a, labels)         the single nilpotent of ``a`` repeated on several labels

They are written either as nested JSON lists ``["tensor", A, B]`` or as
Python-style call strings.
"""
from __future__ import annotations

import ast
import random

from flint import fmpq, fmpq_mat

from .filtration import Filtration, monodromy_filtration
from .instance import InstanceError, NilInstance, label_key
from .linalg import (Quotient, Subspace, identity, is_nilpotent, is_zero, mat, nullspace,
                     qstr, rank, rows_of, select_cols)


class ExprError(ValueError):
    pass


# ---------------------------------------------------------------- matrices

def kron(A: fmpq_mat, B: fmpq_mat) -> fmpq_mat:
    ra, ca, rb, cb = A.nrows(), A.ncols(), B.nrows(), B.ncols()
    M = fmpq_mat(ra * rb, ca * cb)
    for i in range(ra):
        for j in range(ca):
            a = A[i, j]
            if a == 0:
                continue
            for k in range(rb):
                for l in range(cb):
                    b = B[k, l]
                    if b != 0:
                        M[i * rb + k, j * cb + l] = a * b
    return M


def block_diag(A: fmpq_mat, B: fmpq_mat) -> fmpq_mat:
    M = fmpq_mat(A.nrows() + B.nrows(), A.ncols() + B.ncols())
    for i in range(A.nrows()):
        for j in range(A.ncols()):
            M[i, j] = A[i, j]
    for i in range(B.nrows()):
        for j in range(B.ncols()):
            M[A.nrows() + i, A.ncols() + j] = B[i, j]
    return M


def jordan_block(m: int) -> fmpq_mat:
    """N e_{a+1} = e_a."""
    N = fmpq_mat(m, m)
    for a in range(m - 1):
        N[a, a + 1] = 1
    return N


def jordan_pairing(m: int) -> fmpq_mat:
    """S(e_a, e_{m+1-a}) = (-1)^{a+1} (1-based), so N is skew for S."""
    S = fmpq_mat(m, m)
    for a in range(1, m + 1):
        S[a - 1, m - a] = (-1) ** (a + 1)
    return S


# ---------------------------------------------------------------- expression trees

def parse_expr(text: str):
    """Parse a call-style expression into the nested-list form."""
    try:
        node = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as e:
        raise ExprError(f"cannot parse generator expression: {e}") from e
    return _from_ast(node)


def _from_ast(node):
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        return [node.func.id] + [_from_ast(a) for a in node.args]
    if isinstance(node, ast.Constant):
        return node.value
    if isinstance(node, (ast.List, ast.Tuple, ast.Set)):
        return [_from_ast(e) for e in node.elts]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_from_ast(node.operand)
    raise ExprError(f"unsupported expression element: {ast.dump(node)}")


def expr_str(tree) -> str:
    if isinstance(tree, list) and tree and isinstance(tree[0], str) and tree[0] in _OPS:
        return f"{tree[0]}(" + ", ".join(expr_str(a) for a in tree[1:]) + ")"
    if isinstance(tree, list):
        return "[" + ", ".join(expr_str(a) for a in tree) + "]"
    return repr(tree) if isinstance(tree, str) else str(tree)


class _Piece:
    __slots__ = ("labels", "f", "w", "S", "dim")

    def __init__(self, labels, f, w, S):
        self.labels = labels
        self.f = f
        self.w = w
        self.S = S
        self.dim = S.nrows()


def _eval(tree) -> _Piece:
    if not (isinstance(tree, list) and tree and tree[0] in _OPS):
        raise ExprError(f"not a generator expression: {tree!r}")
    return _OPS[tree[0]](*tree[1:])


def _jordan(m, w=0, label="1"):
    m, w = int(m), int(w)
    if m < 1:
        raise ExprError("jordan block size must be positive")
    return _Piece((str(label),), {str(label): jordan_block(m)}, w, jordan_pairing(m))


def _tensor(a, b):
    A, B = _eval(a), _eval(b)
    if set(A.labels) & set(B.labels):
        raise ExprError(f"label collision in tensor: {sorted(set(A.labels) & set(B.labels))}")
    f = {l: kron(M, identity(B.dim)) for l, M in A.f.items()}
    f.update({l: kron(identity(A.dim), M) for l, M in B.f.items()})
    return _Piece(A.labels + B.labels, f, A.w + B.w, kron(A.S, B.S))


def _sum(a, b):
    A, B = _eval(a), _eval(b)
    if set(A.labels) != set(B.labels):
        raise ExprError("sum needs the same labels on both sides")
    if A.w != B.w:
        raise ExprError("sum needs the same weight on both sides")
    f = {l: block_diag(A.f[l], B.f[l]) for l in A.labels}
    return _Piece(A.labels, f, A.w, block_diag(A.S, B.S))


def _tate(a, n):
    A = _eval(a)
    return _Piece(A.labels, A.f, A.w - 2 * int(n), A.S)


def _diag(a, labels):
    A = _eval(a)
    if len(A.labels) != 1:
        raise ExprError("diag needs a single-label source")
    labels = [str(l) for l in labels]
    if len(set(labels)) != len(labels) or not labels:
        raise ExprError("diag needs distinct labels")
    N = A.f[A.labels[0]]
    return _Piece(tuple(labels), {l: N for l in labels}, A.w, A.S)


_OPS = {"jordan": _jordan, "tensor": _tensor, "sum": _sum, "tate": _tate, "diag": _diag,
        "diag_pullback": _diag}


def generate(expr, name: str | None = None) -> NilInstance:
    """Build a polarizable instance from a generator expression (string or nested list)."""
    tree = parse_expr(expr) if isinstance(expr, str) else expr
    P = _eval(tree)
    inst = NilInstance(P.labels, P.f, P.w, None, P.S, polarizable=True,
                       name=name or expr_str(tree), origin=tree)
    return inst


# ---------------------------------------------------------------- checks

def _leading_minors(G: fmpq_mat) -> list[fmpq]:
    out = []
    for r in range(1, G.nrows() + 1):
        sub = fmpq_mat(r, r, [G[i, j] for i in range(r) for j in range(r)])
        out.append(sub.det())
    return out


def graded_pieces(inst: NilInstance, W: Filtration | None = None):
    """Gr^W_m as quotients, keyed by m."""
    W = W or inst.W
    return {m: Quotient(W[m], W[m - 1]) for m in W.keys}


def polarization_check(inst: NilInstance, coefficient_vectors=None) -> dict:
    """Invariance of S under every f_i, coefficient independence of W(Σ a_i f_i), and
    positivity of (-1)^k S(x, f^k y) on the primitive part of Gr_{w+k}."""
    S = inst.pairing
    if S is None:
        raise InstanceError("instance has no pairing")
    out = {"check": "polarization", "pass": True, "failures": []}
    for l, A in zip(inst.labels, inst.fs):
        if not is_zero(A.transpose() * S + S * A):
            out["pass"] = False
            out["failures"].append({"invariance": l})
    n = inst.n
    if coefficient_vectors is None:
        coefficient_vectors = [[1] * n, [i + 1 for i in range(n)], [n - i + fmpq(1, 2) for i in range(n)]]
    w = inst.w
    for a in coefficient_vectors:
        a = [fmpq(x) if not isinstance(x, fmpq) else x for x in a]
        f = fmpq_mat(inst.dim, inst.dim)
        for ai, A in zip(a, inst.fs):
            f = f + A * ai
        Wa = monodromy_filtration(f, 0, validate=False).shifted(w)
        if Wa != inst.W:
            out["pass"] = False
            out["failures"].append({"coefficients": [qstr(x) for x in a], "issue": "W(sum a f) differs"})
            continue
        forms = []
        kmax = max(abs(inst.W.hi - w), abs(inst.W.lo - w)) if inst.W.keys else 0
        fk = identity(inst.dim)
        for k in range(0, kmax + 1):
            if k:
                fk = fk * f
            fk1 = fk * f
            top, below = inst.W[w + k], inst.W[w + k - 1]
            prim = top.intersect(inst.W[w - k - 3].preimage(fk1))
            Q = Quotient(prim + below, below)
            if Q.dim == 0:
                continue
            R = Q.reps
            G = R * S * fk * R.transpose()
            if k % 2:
                G = -G
            sym = G == G.transpose()
            minors = _leading_minors(G)
            good = sym and all(x > 0 for x in minors)
            forms.append({"k": k, "dim": Q.dim, "symmetric": sym,
                          "minors": [qstr(x) for x in minors]})
            if not good:
                out["pass"] = False
                bad = next((i for i, x in enumerate(minors) if x <= 0), None)
                out["failures"].append({"coefficients": [qstr(x) for x in a], "k": k,
                                        "symmetric": sym, "nonpositive_minor": bad,
                                        "minor_value": qstr(minors[bad]) if bad is not None else None})
        out.setdefault("forms", forms)
    return out


def lefschetz_check(graded, L: fmpq_mat, eps: int = 1, w: int = 0) -> dict:
    """L^j : T_{w+j} -> T_{w-j} bijective for all j >= 0.

    ``graded`` is a list of (degree, dim) in the order the coordinates of L
    are laid out; L must map degree i into degree i-2.  ``eps`` is recorded
    only.
    """
    offs, pos = {}, 0
    for deg, d in graded:
        offs[deg] = (pos, d)
        pos += d
    if L.nrows() != pos or L.ncols() != pos:
        raise ValueError("L does not match the graded dimensions")
    for deg, (o, d) in offs.items():
        for deg2, (o2, d2) in offs.items():
            if deg2 == deg - 2:
                continue
            for i in range(d2):
                for j in range(d):
                    if L[o2 + i, o + j] != 0:
                        raise ValueError("L is not of degree -2")
    dims = {deg: d for deg, d in graded}
    out = {"check": "lefschetz", "pass": True, "type": eps, "weight": w, "failures": [],
           "primitive_dims": {}}
    top = max((abs(deg - w) for deg in dims), default=0)
    Lp = identity(pos)
    for j in range(0, top + 1):
        if j:
            Lp = Lp * L
        a, b = dims.get(w + j, 0), dims.get(w - j, 0)
        if a != b:
            out["pass"] = False
            out["failures"].append({"j": j, "dims": [a, b]})
            continue
        if a == 0:
            continue
        oa, ob = offs[w + j][0], offs[w - j][0]
        blk = fmpq_mat(b, a, [Lp[ob + i, oa + k] for i in range(b) for k in range(a)])
        if rank(blk) != a:
            out["pass"] = False
            out["failures"].append({"j": j, "rank": rank(blk), "dim": a})
    for j in range(0, top + 1):
        p = dims.get(w + j, 0) - dims.get(w + j + 2, 0)
        if dims.get(w + j, 0) or p:
            out["primitive_dims"][str(j)] = p
    out["primitive_nonnegative"] = all(v >= 0 for v in out["primitive_dims"].values())
    if not out["primitive_nonnegative"]:
        out["pass"] = False
    return out


def graded_lefschetz_data(inst: NilInstance, coeffs=None):
    """(graded, L) for Gr^W with L induced by Σ a_i f_i."""
    f = fmpq_mat(inst.dim, inst.dim)
    coeffs = coeffs or [1] * inst.n
    for c, A in zip(coeffs, inst.fs):
        f = f + A * c
    pieces = graded_pieces(inst)
    order = sorted(pieces)
    graded = [(m, pieces[m].dim) for m in order]
    offs, pos = {}, 0
    for m in order:
        offs[m] = pos
        pos += pieces[m].dim
    L = fmpq_mat(pos, pos)
    for m in order:
        if m - 2 not in pieces:
            continue
        Q, T = pieces[m], pieces[m - 2]
        img = Q.reps * f.transpose()
        if not T.big.contains_rows(img):
            raise ValueError("f does not lower the weight by two")
        C = T.coords(img)
        for i in range(C.nrows()):
            for j in range(C.ncols()):
                if C[i, j] != 0:
                    L[offs[m - 2] + j, offs[m] + i] = C[i, j]
    return graded, L


def inst_lefschetz(inst: NilInstance) -> dict:
    graded, L = graded_lefschetz_data(inst)
    return lefschetz_check(graded, L, (-1) ** (inst.w % 2), inst.w)


# ---------------------------------------------------------------- random tuples

def _unimodular(n: int, rng: random.Random) -> tuple[fmpq_mat, fmpq_mat]:
    P = identity(n)
    for _ in range(2 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i == j:
            continue
        c = rng.choice([-2, -1, 1, 2])
        E = identity(n)
        E[i, j] = c
        P = P * E
    return P, P.inv()


def _random_partition(n: int, rng: random.Random) -> list[int]:
    parts = []
    while n > 0:
        p = rng.randint(1, n)
        parts.append(p)
        n -= p
    return parts


def _jordan_form(parts) -> fmpq_mat:
    n = sum(parts)
    M = fmpq_mat(n, n)
    o = 0
    for p in parts:
        for a in range(p - 1):
            M[o + a, o + a + 1] = 1
        o += p
    return M


def _random_nilpotent(n: int, rng: random.Random) -> fmpq_mat:
    P, Pi = _unimodular(n, rng)
    return P * _jordan_form(_random_partition(n, rng)) * Pi


def _poly(N: fmpq_mat, rng: random.Random, n: int) -> fmpq_mat:
    out = fmpq_mat(n, n)
    P = identity(n)
    for d in range(1, n):
        P = P * N
        c = rng.randint(-2, 2)
        if c:
            out = out + P * c
    return out


def random_commuting_tuple(dim: int, nlabels: int, seed: int) -> NilInstance:
    """A seeded commuting nilpotent tuple; the method is chosen from the seed."""
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = random.Random(seed)
    method = seed % 3
    labels = [str(i + 1) for i in range(nlabels)]
    if method == 0:
        N = _random_nilpotent(dim, rng)
        fs = [_poly(N, rng, dim) for _ in labels]
        if nlabels:
            fs[0] = N if rng.random() < 0.5 else fs[0]
    elif method == 1:
        sizes, prod = [], 1
        for _ in labels:
            s = rng.randint(1, max(1, min(3, dim // prod)))
            sizes.append(s)
            prod *= s
        pad = dim - prod
        fs = []
        for i, _ in enumerate(labels):
            M = identity(1)
            for j, s in enumerate(sizes):
                M = kron(M, jordan_block(s) if i == j else identity(s))
            fs.append(block_diag(M, _jordan_form([pad])) if pad else M)
        P, Pi = _unimodular(dim, rng)
        fs = [P * A * Pi for A in fs]
        if nlabels > 1 and rng.random() < 0.5:
            fs[0] = fs[0] + fs[0] * fs[1]
    else:
        N = _random_nilpotent(dim, rng)
        # centralizer of N: X N = N X, a linear system in dim^2 unknowns
        n2 = dim * dim
        eqs = fmpq_mat(n2, n2)
        for i in range(dim):
            for j in range(dim):
                r = i * dim + j
                for k in range(dim):
                    eqs[r, i * dim + k] += N[k, j]
                    eqs[r, k * dim + j] -= N[i, k]
        basis = rows_of(nullspace(eqs))
        X = fmpq_mat(dim, dim)
        for b in basis:
            c = rng.randint(-1, 1)
            if c:
                for idx, v in enumerate(b):
                    if v != 0:
                        X[idx // dim, idx % dim] += c * v
        f2 = X * N
        fs = [N, f2]
        while len(fs) < nlabels:
            fs.append(fs[-1] * N + fs[0] * fs[-1] if rng.random() < 0.5 else f2 * f2 + N * N)
        fs = fs[:nlabels]
    f = {l: A for l, A in zip(labels, fs)}
    inst = NilInstance(labels, f, 0, None, None, polarizable=False,
                       name=f"random(dim={dim},labels={nlabels},seed={seed})",
                       origin={"random": [dim, nlabels, seed]})
    for A in fs:
        assert is_nilpotent(A)
    return inst


# ---------------------------------------------------------------- corpora

def polarizable_corpus(max_dim: int = 81, max_labels: int = 3) -> list[str]:
    """Generator expressions enumerating Jordan-block combinations within the bounds."""
    out = []

    def J(m, l, w=0):
        return f"jordan({m}, {w}, '{l}')"

    def add(expr, dim, nl):
        if dim <= max_dim and nl <= max_labels:
            out.append(expr)

    for m in range(1, 10):
        add(J(m, 1), m, 1)
    add(f"tate({J(3, 1)}, 1)", 3, 1)
    add(f"tate({J(2, 1, 1)}, -1)", 2, 1)
    for a, b in [(1, 2), (2, 2), (2, 3), (1, 4), (3, 5)]:
        add(f"sum({J(a, 1)}, {J(b, 1)})", a + b, 1)
    for a in range(1, 10):
        for b in range(a, 10):
            add(f"tensor({J(a, 1)}, {J(b, 2)})", a * b, 2)
    for m in range(2, 6):
        add(f"diag({J(m, 1)}, ['1', '2'])", m, 2)
    add(f"tensor(sum({J(1, 1)}, {J(3, 1)}), {J(2, 2)})", 8, 2)
    add(f"sum(tensor({J(2, 1)}, {J(2, 2)}), tensor({J(3, 1)}, {J(1, 2)}))", 7, 2)
    add(f"tate(tensor({J(2, 1)}, {J(3, 2)}), 1)", 6, 2)
    add(f"tensor({J(2, 1, 1)}, {J(2, 2, -1)})", 4, 2)
    add(f"sum(diag({J(3, 1)}, ['1', '2']), tensor({J(2, 1)}, {J(2, 2)}))", 7, 2)
    for a, b, c in [(1, 1, 2), (2, 2, 2), (2, 2, 3), (2, 3, 3), (3, 3, 3), (2, 2, 4), (3, 3, 9),
                    (2, 4, 5), (3, 3, 5), (1, 3, 9), (4, 4, 5)]:
        add(f"tensor(tensor({J(a, 1)}, {J(b, 2)}), {J(c, 3)})", a * b * c, 3)
    for m in range(2, 5):
        add(f"diag({J(m, 1)}, ['1', '2', '3'])", m, 3)
    add(f"tensor(diag({J(2, 1)}, ['1', '2']), {J(3, 3)})", 6, 3)
    add(f"tensor(diag({J(3, 1)}, ['1', '2']), {J(3, 3)})", 9, 3)
    add(f"sum(tensor(tensor({J(2, 1)}, {J(2, 2)}), {J(2, 3)}), diag({J(3, 1)}, ['1', '2', '3']))", 11, 3)
    add(f"tate(tensor(tensor({J(2, 1)}, {J(1, 2)}), {J(3, 3)}), 2)", 6, 3)
    return out
