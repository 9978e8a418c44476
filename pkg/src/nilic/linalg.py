"""Exact rational linear algebra on top of flint.

Dense work uses ``fmpq_mat``; ranks are taken over the integers after clearing
denominators, which is much faster than rational elimination.  ``SMat`` is a
small dict-of-rows sparse matrix used for differentials of large complexes.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from flint import fmpq, fmpq_mat, fmpz, fmpz_mat

ZERO = fmpq(0)
ONE = fmpq(1)


class DimensionMismatch(ValueError):
    pass


class PreconditionError(ValueError):
    """Raised when a map fails a containment precondition; carries a witness."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------- scalars

def as_q(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    if isinstance(x, (int, fmpz)):
        return fmpq(x)
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if "/" in s:
            p, q = s.split("/")
            q = int(q)
            if q == 0:
                raise ValueError(f"zero denominator in {x!r}")
            return fmpq(int(p), q)
        return fmpq(int(s))
    raise TypeError(f"cannot read {x!r} as a rational")


def qstr(x) -> str:
    x = as_q(x)
    return str(int(x.p)) if x.q == 1 else f"{int(x.p)}/{int(x.q)}"


# ---------------------------------------------------------------- dense helpers

def mat(rows: Sequence[Sequence], ncols: int | None = None) -> fmpq_mat:
    rows = list(rows)
    if not rows:
        return fmpq_mat(0, ncols or 0)
    n = len(rows[0]) if ncols is None else ncols
    flat = []
    for r in rows:
        if len(r) != n:
            raise DimensionMismatch(f"row of length {len(r)} in a {n}-column matrix")
        flat.extend(as_q(v) for v in r)
    return fmpq_mat(len(rows), n, flat)


def zeros(r: int, c: int) -> fmpq_mat:
    return fmpq_mat(r, c)


def identity(n: int) -> fmpq_mat:
    m = fmpq_mat(n, n)
    for i in range(n):
        m[i, i] = 1
    return m


def rows_of(M: fmpq_mat) -> list[list[fmpq]]:
    if M.nrows() == 0:
        return []
    return M.tolist()


def is_zero(M: fmpq_mat) -> bool:
    return M.nrows() == 0 or M.ncols() == 0 or M == fmpq_mat(M.nrows(), M.ncols())


def vstack(mats: Sequence[fmpq_mat], ncols: int) -> fmpq_mat:
    total = 0
    for m in mats:
        if m.ncols() != ncols:
            raise DimensionMismatch("column counts differ")
        total += m.nrows()
    out = fmpq_mat(total, ncols)
    off = 0
    for m in mats:
        r = m.nrows()
        if r:
            out += _placement(total, off, r) * m
        off += r
    return out


def _placement(total: int, off: int, r: int) -> fmpq_mat:
    P = fmpq_mat(total, r)
    for i in range(r):
        P[off + i, i] = 1
    return P


def select_cols(M: fmpq_mat, cols: Sequence[int]) -> fmpq_mat:
    P = fmpq_mat(M.ncols(), len(cols))
    for j, c in enumerate(cols):
        P[c, j] = 1
    return M * P


def select_rows(M: fmpq_mat, idx: Sequence[int]) -> fmpq_mat:
    P = fmpq_mat(len(idx), M.nrows())
    for i, r in enumerate(idx):
        P[i, r] = 1
    return P * M


def _int_rows(M: fmpq_mat) -> fmpz_mat:
    num, _ = M.numer_denom()
    return num


def rank(M: fmpq_mat) -> int:
    if M.nrows() == 0 or M.ncols() == 0:
        return 0
    return _int_rows(M).rank()


def rref(M: fmpq_mat) -> tuple[fmpq_mat, tuple[int, ...]]:
    """Reduced row-echelon form with zero rows dropped, plus pivot columns."""
    n = M.ncols()
    if M.nrows() == 0 or n == 0:
        return fmpq_mat(0, n), ()
    R, r = M.rref()
    if r == 0:
        return fmpq_mat(0, n), ()
    pivots = []
    j = 0
    for i in range(r):
        while R[i, j] == 0:
            j += 1
        pivots.append(j)
        j += 1
    if r < M.nrows():
        R = select_rows(R, range(r))
    return R, tuple(pivots)


def nullspace(M: fmpq_mat) -> fmpq_mat:
    """Rows spanning {x : M x = 0}, in RREF."""
    n = M.ncols()
    if M.nrows() == 0:
        return identity(n)
    R, piv = rref(M)
    free = [j for j in range(n) if j not in set(piv)]
    out = fmpq_mat(len(free), n)
    for a, fj in enumerate(free):
        out[a, fj] = 1
        for i, pj in enumerate(piv):
            v = R[i, fj]
            if v != 0:
                out[a, pj] = -v
    # the rows above are already independent; put them in canonical form
    return rref(out)[0]


def solve_left(A: fmpq_mat, B: fmpq_mat) -> fmpq_mat | None:
    """Some X with X A = B, or None when B's rows are not in A's row space."""
    k = A.nrows()
    if B.nrows() == 0:
        return fmpq_mat(0, k)
    if k == 0:
        return None if not is_zero(B) else fmpq_mat(B.nrows(), 0)
    # solve A^T X^T = B^T via rref of the augmented system
    aug = fmpq_mat(A.ncols(), k + B.nrows())
    for i in range(A.ncols()):
        for j in range(k):
            aug[i, j] = A[j, i]
        for j in range(B.nrows()):
            aug[i, k + j] = B[j, i]
    R, piv = rref(aug)
    if any(p >= k for p in piv):
        return None
    X = fmpq_mat(B.nrows(), k)
    for i, p in enumerate(piv):
        for j in range(B.nrows()):
            X[j, p] = R[i, k + j]
    return X


# ---------------------------------------------------------------- subspaces

class Subspace:
    """A subspace of Q^n held as its unique reduced row-echelon basis."""

    __slots__ = ("ambient_dim", "basis", "pivots", "_key")

    def __init__(self, ambient_dim: int, basis: fmpq_mat | None = None,
                 pivots: tuple[int, ...] | None = None):
        # trusted constructor: ``basis`` must already be in RREF
        self.ambient_dim = ambient_dim
        self.basis = basis if basis is not None else fmpq_mat(0, ambient_dim)
        self.pivots = tuple(pivots or ())
        self._key = None

    @classmethod
    def span(cls, vectors, ambient_dim: int) -> "Subspace":
        if isinstance(vectors, fmpq_mat):
            if vectors.ncols() != ambient_dim:
                raise DimensionMismatch(f"vectors of length {vectors.ncols()} in Q^{ambient_dim}")
            M = vectors
        else:
            vectors = list(vectors)
            for v in vectors:
                if len(v) != ambient_dim:
                    raise DimensionMismatch(f"vector of length {len(v)} in Q^{ambient_dim}")
            M = mat(vectors, ambient_dim)
        R, piv = rref(M)
        return cls(ambient_dim, R, piv)

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, identity(n), tuple(range(n)))

    @property
    def dim(self) -> int:
        return len(self.pivots)

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def rows(self) -> list[list[fmpq]]:
        return rows_of(self.basis)

    def key(self):
        return self

    def __eq__(self, other):
        return (isinstance(other, Subspace) and self.ambient_dim == other.ambient_dim
                and self.pivots == other.pivots and self.basis == other.basis)

    def __hash__(self):
        return hash((self.ambient_dim, self.pivots))

    def __repr__(self):
        return f"Subspace(dim={self.dim} in Q^{self.ambient_dim})"

    def _check(self, other: "Subspace"):
        if self.ambient_dim != other.ambient_dim:
            raise DimensionMismatch(
                f"ambient dimensions {self.ambient_dim} and {other.ambient_dim}")

    # coordinates -----------------------------------------------------
    def coords(self, M: fmpq_mat) -> fmpq_mat:
        """Coordinates of the rows of M in this basis (assumes membership)."""
        return select_cols(M, self.pivots)

    def residual(self, M: fmpq_mat) -> fmpq_mat:
        if self.dim == 0:
            return M
        return M - self.coords(M) * self.basis

    def first_outside(self, M: fmpq_mat):
        """Index of the first row of M not in the subspace, or None."""
        res = self.residual(M)
        if is_zero(res):
            return None
        for i in range(res.nrows()):
            for j in range(res.ncols()):
                if res[i, j] != 0:
                    return i
        return None

    def contains_rows(self, M: fmpq_mat) -> bool:
        if M.nrows() == 0:
            return True
        return is_zero(self.residual(M))

    def contains(self, v: Sequence) -> bool:
        return self.contains_rows(mat([v], self.ambient_dim))

    def __le__(self, other: "Subspace") -> bool:
        self._check(other)
        return self.dim <= other.dim and other.contains_rows(self.basis)

    # lattice ---------------------------------------------------------
    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if other.dim == 0:
            return self
        if self.dim == 0:
            return other
        return Subspace.span(vstack([self.basis, other.basis], self.ambient_dim),
                             self.ambient_dim)

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace(self.ambient_dim)
        if self.is_full():
            return other
        if other.is_full():
            return self
        # x = a A = b B  <=>  (a, -b) in the left kernel of [A; B]
        stacked = vstack([self.basis, other.basis], self.ambient_dim)
        K = nullspace(stacked.transpose())
        if K.nrows() == 0:
            return Subspace(self.ambient_dim)
        a = select_cols_range(K, 0, self.dim)
        return Subspace.span(a * self.basis, self.ambient_dim)

    def annihilator(self) -> fmpq_mat:
        """Rows spanning the linear forms vanishing on the subspace."""
        if self.dim == 0:
            return identity(self.ambient_dim)
        return nullspace(self.basis)

    # maps ------------------------------------------------------------
    def image(self, A: fmpq_mat) -> "Subspace":
        """A(self) for A acting on column vectors."""
        if A.ncols() != self.ambient_dim:
            raise DimensionMismatch("map domain does not match ambient")
        if self.dim == 0:
            return Subspace(A.nrows())
        return Subspace.span(self.basis * A.transpose(), A.nrows())

    def preimage(self, A: fmpq_mat) -> "Subspace":
        """A^{-1}(self) for A acting on column vectors."""
        if A.nrows() != self.ambient_dim:
            raise DimensionMismatch("map codomain does not match ambient")
        ann = self.annihilator()
        if ann.nrows() == 0:
            return Subspace.full(A.ncols())
        return Subspace.span(nullspace(ann * A), A.ncols())

    def to_json(self):
        return [[qstr(v) for v in r] for r in self.rows()]


def select_cols_range(M: fmpq_mat, a: int, b: int) -> fmpq_mat:
    return select_cols(M, list(range(a, b)))


def reduce_span(vectors, ambient_dim: int) -> Subspace:
    return Subspace.span(vectors, ambient_dim)


def intersect(A: Subspace, B: Subspace) -> Subspace:
    return A.intersect(B)


def sum_spaces(spaces: Iterable[Subspace], ambient_dim: int) -> Subspace:
    mats = [s.basis for s in spaces if s.dim]
    if not mats:
        return Subspace(ambient_dim)
    return Subspace.span(vstack(mats, ambient_dim), ambient_dim)


def kernel(A: fmpq_mat) -> Subspace:
    N = nullspace(A)
    return Subspace.span(N, A.ncols())


def image(A: fmpq_mat) -> Subspace:
    return Subspace.full(A.ncols()).image(A)


def complement_in(base: Subspace, big: Subspace) -> fmpq_mat:
    """Rows from big's basis that extend base to a basis of base + big."""
    n = base.ambient_dim
    stacked = vstack([base.basis, big.basis], n)
    if stacked.nrows() == 0:
        return fmpq_mat(0, n)
    _, piv = rref(stacked.transpose())
    chosen = [p - base.dim for p in piv if p >= base.dim]
    return select_rows(big.basis, chosen)


# ---------------------------------------------------------------- maps

class LinMap:
    """A linear map Q^domain -> Q^codomain; the matrix acts on columns."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        self.matrix = matrix if isinstance(matrix, fmpq_mat) else mat(matrix)

    @property
    def domain_dim(self) -> int:
        return self.matrix.ncols()

    @property
    def codomain_dim(self) -> int:
        return self.matrix.nrows()

    def __call__(self, v: Sequence) -> list[fmpq]:
        col = fmpq_mat(len(v), 1, [as_q(x) for x in v])
        return [x for x in (self.matrix * col).entries()]

    def __matmul__(self, other: "LinMap") -> "LinMap":
        return LinMap(self.matrix * other.matrix)

    def __eq__(self, other):
        return isinstance(other, LinMap) and self.matrix == other.matrix

    def __repr__(self):
        return f"LinMap({self.codomain_dim}x{self.domain_dim})"


def _m(f) -> fmpq_mat:
    return f.matrix if isinstance(f, LinMap) else f


class Quotient:
    """The quotient ``big / small`` with a fixed basis of representatives."""

    def __init__(self, big: Subspace, small: Subspace):
        if not small <= big:
            raise PreconditionError("quotient of a space by a non-subspace")
        self.big = big
        self.small = small
        # small in big-coordinates, reduced; free columns give the quotient basis
        self.red, self.red_piv = rref(big.coords(small.basis)) if small.dim else \
            (fmpq_mat(0, big.dim), ())
        self.free = tuple(j for j in range(big.dim) if j not in set(self.red_piv))
        self.reps = select_rows(big.basis, self.free)

    @property
    def dim(self) -> int:
        return len(self.free)

    def coords(self, M: fmpq_mat) -> fmpq_mat:
        """Quotient coordinates of rows of M (which must lie in big)."""
        c = self.big.coords(M)
        if self.red.nrows():
            c = c - select_cols(c, self.red_piv) * self.red
        return select_cols(c, self.free)


def induced_map(f, src: Subspace, dst: Subspace, mode: str = "restrict") -> LinMap:
    """Matrix of f on canonical bases.

    restrict: f(src) must lie in dst; returns the map src -> dst.
    quotient: f must preserve src and dst (dst inside src); returns the map on src/dst.
    """
    A = _m(f)
    if mode == "restrict":
        if A.ncols() != src.ambient_dim or A.nrows() != dst.ambient_dim:
            raise DimensionMismatch("map shape does not match the subspaces")
        imgs = src.basis * A.transpose()
        bad = dst.first_outside(imgs)
        if bad is not None:
            raise PreconditionError("f(src) is not contained in dst",
                                    witness=[qstr(v) for v in rows_of(src.basis)[bad]])
        return LinMap(dst.coords(imgs).transpose())
    if mode == "quotient":
        if A.ncols() != A.nrows() or A.ncols() != src.ambient_dim:
            raise DimensionMismatch("quotient mode needs an endomorphism")
        for S in (src, dst):
            imgs = S.basis * A.transpose()
            bad = S.first_outside(imgs)
            if bad is not None:
                raise PreconditionError("f does not preserve a subspace",
                                        witness=[qstr(v) for v in rows_of(S.basis)[bad]])
        Qt = Quotient(src, dst)
        imgs = Qt.reps * A.transpose()
        return LinMap(Qt.coords(imgs).transpose())
    raise ValueError(f"unknown mode {mode!r}")


def is_nilpotent(A: fmpq_mat) -> bool:
    n = A.nrows()
    if n == 0:
        return True
    P = A
    k = 1
    while k < n:
        P = P * P
        k *= 2
    return is_zero(P)


def nilpotency_index(A: fmpq_mat) -> int:
    """Smallest s with A^s = 0."""
    n = A.nrows()
    P = identity(n)
    for s in range(n + 1):
        if is_zero(P):
            return s
        P = P * A
    raise ValueError("matrix is not nilpotent")


# ---------------------------------------------------------------- sparse

class SMat:
    """Sparse rational matrix stored as {row: {col: value}}."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: dict | None = None):
        self.nrows = nrows
        self.ncols = ncols
        self.rows = rows if rows is not None else {}

    @classmethod
    def from_dense(cls, M: fmpq_mat, row_off: int = 0, col_off: int = 0,
                   nrows: int | None = None, ncols: int | None = None) -> "SMat":
        out = cls(nrows if nrows is not None else M.nrows(),
                  ncols if ncols is not None else M.ncols())
        out.add_dense(M, row_off, col_off)
        return out

    def add_dense(self, M: fmpq_mat, row_off: int = 0, col_off: int = 0, sign: int = 1):
        if M.nrows() == 0 or M.ncols() == 0:
            return
        for i, row in enumerate(M.tolist()):
            for j, v in enumerate(row):
                if v != 0:
                    self.add(row_off + i, col_off + j, v if sign == 1 else -v)

    def add(self, i: int, j: int, v):
        r = self.rows.setdefault(i, {})
        nv = r.get(j, ZERO) + v
        if nv == 0:
            r.pop(j, None)
            if not r:
                del self.rows[i]
        else:
            r[j] = nv

    def add_smat(self, S: "SMat", row_off: int = 0, col_off: int = 0, sign: int = 1):
        for i, r in S.rows.items():
            for j, v in r.items():
                self.add(row_off + i, col_off + j, v if sign == 1 else -v)

    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def is_zero(self) -> bool:
        return not self.rows

    def dense(self) -> fmpq_mat:
        M = fmpq_mat(self.nrows, self.ncols)
        for i, r in self.rows.items():
            for j, v in r.items():
                M[i, j] = v
        return M

    def transpose(self) -> "SMat":
        out = SMat(self.ncols, self.nrows)
        for i, r in self.rows.items():
            for j, v in r.items():
                out.rows.setdefault(j, {})[i] = v
        return out

    def __mul__(self, other: "SMat") -> "SMat":
        if self.ncols != other.nrows:
            raise DimensionMismatch("sparse product shape mismatch")
        out = SMat(self.nrows, other.ncols)
        orows = other.rows
        for i, r in self.rows.items():
            acc: dict = {}
            for k, a in r.items():
                ok = orows.get(k)
                if ok:
                    for j, b in ok.items():
                        acc[j] = acc.get(j, ZERO) + a * b
            acc = {j: v for j, v in acc.items() if v != 0}
            if acc:
                out.rows[i] = acc
        return out

    def __neg__(self) -> "SMat":
        return SMat(self.nrows, self.ncols,
                    {i: {j: -v for j, v in r.items()} for i, r in self.rows.items()})

    def __sub__(self, other: "SMat") -> "SMat":
        out = self.copy()
        out.add_smat(other, sign=-1)
        return out

    def __add__(self, other: "SMat") -> "SMat":
        out = self.copy()
        out.add_smat(other)
        return out

    def __eq__(self, other):
        return (isinstance(other, SMat) and self.nrows == other.nrows
                and self.ncols == other.ncols and self.rows == other.rows)

    def copy(self) -> "SMat":
        return SMat(self.nrows, self.ncols, {i: dict(r) for i, r in self.rows.items()})

    def first_nonzero(self):
        for i in sorted(self.rows):
            j = min(self.rows[i])
            return i, j, self.rows[i][j]
        return None

    def rank(self) -> int:
        if not self.rows:
            return 0
        return smat_rank(self)

    def times_dense_rows(self, M: fmpq_mat) -> fmpq_mat:
        """(self * M^T)^T, i.e. the images of the rows of M as rows."""
        out = fmpq_mat(M.nrows(), self.nrows)
        if M.nrows() == 0:
            return out
        rowsM = M.tolist()
        for i, r in self.rows.items():
            for a, vec in enumerate(rowsM):
                s = ZERO
                for j, v in r.items():
                    x = vec[j]
                    if x != 0:
                        s += v * x
                if s != 0:
                    out[a, i] = s
        return out


def smat_rank(S: SMat, extra_rows: Sequence[dict] = ()) -> int:
    """Rank over Q, computed from an integer matrix with cleared denominators."""
    rows = list(S.rows.values()) + list(extra_rows)
    rows = [r for r in rows if r]
    if not rows:
        return 0
    ncols = S.ncols
    # keep only the columns that occur, rank is unaffected
    cols = sorted({j for r in rows for j in r})
    cidx = {c: k for k, c in enumerate(cols)}
    Z = fmpz_mat(len(rows), len(cols))
    for i, r in enumerate(rows):
        den = 1
        for v in r.values():
            q = int(v.q)
            if q != 1:
                den = den * q // _gcd(den, q)
        for j, v in r.items():
            Z[i, cidx[j]] = int(v.p) * (den // int(v.q))
    del ncols
    return Z.rank()


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def vstack_sparse(parts: Sequence[SMat]) -> SMat:
    ncols = parts[0].ncols
    out = SMat(sum(p.nrows for p in parts), ncols)
    off = 0
    for p in parts:
        for i, r in p.rows.items():
            out.rows[off + i] = dict(r)
        off += p.nrows
    return out


def dense_to_smat_rows(M: fmpq_mat) -> SMat:
    return SMat.from_dense(M)
