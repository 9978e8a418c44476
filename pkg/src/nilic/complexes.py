"""Bounded filtered cochain complexes over Q and maps between them.

Terms are coordinate spaces Q^{dim_k}; differentials are sparse matrices
acting on columns.  Complexes assembled from "blocks" (subspaces of a common
space V indexed by a key) remember that structure so that inclusions and
weight truncations can be formed block by block.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from flint import fmpq_mat

from .filtration import Filtration
from .linalg import (ONE, DimensionMismatch, SMat, Subspace, as_q, complement_in, mat,
                     nullspace, qstr, rows_of, smat_rank)


class SignError(AssertionError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class FiltrationEscape(ValueError):
    """A differential or map leaves the prescribed subspace."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class Block:
    """One summand of a term: a subspace of V with its bookkeeping.

    The weight filtration on the block is W_m = space ∩ W_{m - wshift}(V).
    """
    key: object
    space: Subspace
    twist: int = 0
    wshift: int = 0


def stack_subspaces(parts: Sequence[tuple[Subspace, int]], total: int) -> Subspace:
    """Direct sum of subspaces placed at column offsets (already in RREF)."""
    rows, piv = [], []
    for S, off in parts:
        if S.dim == 0:
            continue
        for r, p in zip(rows_of(S.basis), S.pivots):
            row = [0] * total
            row[off:off + S.ambient_dim] = r
            rows.append(row)
            piv.append(off + p)
    if not rows:
        return Subspace(total)
    return Subspace(total, mat(rows, total), tuple(piv))


def _smat_rows(M: fmpq_mat) -> list[dict]:
    out = []
    if M.nrows() == 0:
        return out
    for r in M.tolist():
        d = {j: v for j, v in enumerate(r) if v != 0}
        out.append(d)
    return out


class FilteredComplex:
    """A bounded complex with optional per-degree filtrations and blocks."""

    def __init__(self, dims: dict[int, int], d: dict[int, SMat] | None = None,
                 filt=None, blocks: dict[int, list[Block]] | None = None,
                 name: str = "", check: bool = True):
        self.dims = {k: v for k, v in dims.items()}
        self.d = d or {}
        self._filt_src = filt
        self._filt_cache: dict = {}
        self.blocks = blocks
        self.name = name
        self._rank: dict = {}
        self._wrank: dict = {}
        self.arrows = None
        self.ambient_W = None
        for k, D in self.d.items():
            if (D.nrows, D.ncols) != (self.dim(k + 1), self.dim(k)):
                raise DimensionMismatch(f"differential in degree {k} has shape "
                                        f"{D.nrows}x{D.ncols}, expected "
                                        f"{self.dim(k + 1)}x{self.dim(k)}")
        if check:
            w = self.dd_defect()
            if w is not None:
                raise SignError("d∘d is not zero", w)

    # basic data -----------------------------------------------------------
    def dim(self, k: int) -> int:
        return self.dims.get(k, 0)

    @property
    def degrees(self) -> list[int]:
        ks = [k for k, v in self.dims.items() if v]
        return list(range(min(ks), max(ks) + 1)) if ks else []

    @property
    def span(self) -> tuple[int, int]:
        ks = list(self.dims)
        return (min(ks), max(ks)) if ks else (0, -1)

    def diff(self, k: int) -> SMat:
        D = self.d.get(k)
        if D is None:
            D = SMat(self.dim(k + 1), self.dim(k))
        return D

    def rank_d(self, k: int) -> int:
        if k not in self._rank:
            D = self.d.get(k)
            self._rank[k] = 0 if D is None else D.rank()
        return self._rank[k]

    def euler(self) -> int:
        return sum((-1) ** (k % 2) * v for k, v in self.dims.items())

    def dd_defect(self):
        for k in sorted(self.d):
            nxt = self.d.get(k + 1)
            if nxt is None:
                continue
            P = nxt * self.d[k]
            if not P.is_zero():
                i, j, v = P.first_nonzero()
                return {"degree": k, "row": i, "col": j, "value": qstr(v)}
        return None

    def filtration(self, k: int) -> Filtration | None:
        if self._filt_src is None:
            return None
        if k not in self._filt_cache:
            src = self._filt_src
            F = src(k) if callable(src) else src.get(k)
            if F is None and self.dim(k) == 0:
                F = Filtration(0, {})
            self._filt_cache[k] = F
        return self._filt_cache[k]

    @property
    def filtered(self) -> bool:
        return self._filt_src is not None

    def weight_keys(self) -> list[int]:
        ks = set()
        for k in self.degrees:
            F = self.filtration(k)
            if F is not None:
                ks.update(F.keys)
        return sorted(ks)

    def block_offsets(self, k: int) -> list[tuple[Block, int]]:
        out, off = [], 0
        for b in (self.blocks or {}).get(k, []):
            out.append((b, off))
            off += b.space.dim
        return out

    def block_index(self, k: int) -> dict:
        return {b.key: (b, off) for b, off in self.block_offsets(k)}

    def twists(self, k: int) -> list[int]:
        return [b.twist for b in (self.blocks or {}).get(k, [])]

    def filtered_defect(self):
        """First (degree, m) where d(W_m) is not inside W_m, or None."""
        if not self.filtered:
            return None
        for k in self.degrees:
            D = self.d.get(k)
            if D is None or D.is_zero():
                continue
            F0, F1 = self.filtration(k), self.filtration(k + 1)
            for m in F0.keys:
                img = D.times_dense_rows(F0[m].basis)
                if not F1[m].contains_rows(img):
                    return {"degree": k, "m": m}
        return None

    def to_json(self, with_filtration: bool = True) -> dict:
        lo, hi = self.span
        terms = []
        for k in range(lo, hi + 1):
            t = {"degree": k, "dim": self.dim(k)}
            if self.blocks:
                t["twist"] = self.twists(k)
            F = self.filtration(k) if with_filtration else None
            if F is not None:
                t["filtration"] = F.jumps()
                t["filtration_basis"] = F.to_json()["jumps"]
            terms.append(t)
        diffs = []
        for k in range(lo, hi):
            D = self.diff(k)
            diffs.append({"degree": k, "entries": [[i, j, qstr(v)] for i in sorted(D.rows)
                                                   for j, v in sorted(D.rows[i].items())]})
        return {"degrees": [lo, hi], "terms": terms, "differentials": diffs}

    @classmethod
    def from_json(cls, data: dict) -> "FilteredComplex":
        lo, hi = data["degrees"]
        dims = {t["degree"]: int(t["dim"]) for t in data["terms"]}
        for k in range(lo, hi + 1):
            dims.setdefault(k, 0)
        d = {}
        for item in data.get("differentials", []):
            k = int(item["degree"])
            D = SMat(dims.get(k + 1, 0), dims.get(k, 0))
            if "matrix" in item:
                D.add_dense(mat(item["matrix"], dims.get(k, 0)) if item["matrix"]
                            else fmpq_mat(0, dims.get(k, 0)))
            for i, j, v in item.get("entries", []):
                D.add(int(i), int(j), as_q(v))
            d[k] = D
        filt = None
        if any("filtration_basis" in t for t in data["terms"]):
            filt = {}
            for t in data["terms"]:
                n = int(t["dim"])
                fb = t.get("filtration_basis")
                if fb is None:
                    filt[t["degree"]] = Filtration.trivial(Subspace.full(n))
                else:
                    filt[t["degree"]] = Filtration(
                        n, {int(m): Subspace.span(v, n) for m, v in fb.items()})
        return cls(dims, d, filt)

    def __repr__(self):
        lo, hi = self.span
        return f"FilteredComplex({self.name or '?'}, dims={[self.dim(k) for k in range(lo, hi + 1)]} from {lo})"


class ComplexMap:
    """Degreewise maps source^k -> target^k (sparse, acting on columns)."""

    def __init__(self, source: FilteredComplex, target: FilteredComplex,
                 maps: dict[int, SMat], name: str = "", check: bool = True):
        self.source = source
        self.target = target
        self.maps = maps
        self.name = name
        for k, M in maps.items():
            if (M.nrows, M.ncols) != (target.dim(k), source.dim(k)):
                raise DimensionMismatch(f"map component in degree {k} has the wrong shape")
        if check:
            w = self.chain_defect()
            if w is not None:
                raise SignError("map does not commute with the differentials", w)

    def component(self, k: int) -> SMat:
        M = self.maps.get(k)
        if M is None:
            M = SMat(self.target.dim(k), self.source.dim(k))
        return M

    def chain_defect(self):
        ks = set(self.maps) | set(self.source.d) | set(self.target.d)
        for k in sorted(ks):
            lhs = self.target.diff(k) * self.component(k)
            rhs = self.component(k + 1) * self.source.diff(k)
            diff = lhs - rhs
            if not diff.is_zero():
                i, j, v = diff.first_nonzero()
                return {"degree": k, "row": i, "col": j, "value": qstr(v)}
        return None

    def filtered_defect(self):
        if not (self.source.filtered and self.target.filtered):
            return None
        for k in self.source.degrees:
            M = self.maps.get(k)
            if M is None or M.is_zero():
                continue
            F0, F1 = self.source.filtration(k), self.target.filtration(k)
            for m in F0.keys:
                if not F1[m].contains_rows(M.times_dense_rows(F0[m].basis)):
                    return {"degree": k, "m": m}
        return None

    def __matmul__(self, other: "ComplexMap") -> "ComplexMap":
        """self ∘ other."""
        ks = set(self.maps) & set(other.maps)
        return ComplexMap(other.source, self.target,
                          {k: self.maps[k] * other.maps[k] for k in ks}, check=False)

    def equals(self, other: "ComplexMap") -> bool:
        ks = set(self.maps) | set(other.maps)
        return all(self.component(k) == other.component(k) for k in ks)


# ---------------------------------------------------------------- cohomology

@dataclass
class CohomologyDegree:
    dim: int
    weights: dict[int, int] = field(default_factory=dict)
    basis: list | None = None

    def to_json(self):
        out = {"dim": self.dim}
        if self.weights:
            out["weight_dims"] = {str(m): v for m, v in sorted(self.weights.items())}
        if self.basis is not None:
            out["basis"] = self.basis
        return out


def _weight_subrank(C: FilteredComplex, k: int, m: int) -> int:
    """rank of d^k restricted to W_m C^k."""
    key = (k, m)
    if key not in C._wrank:
        F = C.filtration(k)
        D = C.d.get(k)
        if D is None or F is None or F[m].dim == 0:
            C._wrank[key] = 0
        else:
            imgs = D.times_dense_rows(F[m].basis)
            C._wrank[key] = smat_rank(SMat(imgs.nrows(), imgs.ncols(), {
                i: r for i, r in enumerate(_smat_rows(imgs)) if r}))
        return C._wrank[key]
    return C._wrank[key]


def cohomology(C: FilteredComplex, weights: bool = True, reps: bool = False) -> dict[int, CohomologyDegree]:
    """dim H^k, the dims of Gr_m of the induced filtration, and optional representatives.

    The induced filtration is W_m H = image of (W_m ∩ Ker d); its dimension is
    rank[W_m ; Im d^{k-1}] - rank d^{k-1} - rank(d^k on W_m).
    """
    out = {}
    for k in C.degrees:
        h = C.dim(k) - C.rank_d(k) - C.rank_d(k - 1)
        deg = CohomologyDegree(h)
        if weights and h and C.filtered:
            F = C.filtration(k)
            prev_d = C.d.get(k - 1)
            img_rows = list(prev_d.transpose().rows.values()) if prev_d is not None else []
            rk_prev = C.rank_d(k - 1)
            wd, last = {}, 0
            for m in F.keys:
                S = F[m]
                stacked = SMat(S.dim, C.dim(k), {i: r for i, r in enumerate(_smat_rows(S.basis)) if r})
                val = smat_rank(stacked, img_rows) - rk_prev - _weight_subrank(C, k, m)
                if val != last:
                    wd[m] = val - last
                last = val
            deg.weights = wd
        if reps and h:
            deg.basis = [[qstr(v) for v in r] for r in rows_of(cohomology_reps(C, k))]
        out[k] = deg
    return out


def cohomology_reps(C: FilteredComplex, k: int) -> fmpq_mat:
    n = C.dim(k)
    Dk = C.diff(k).dense()
    ker = Subspace.span(nullspace(Dk), n) if Dk.nrows() else Subspace.full(n)
    prev = C.d.get(k - 1)
    im = Subspace.span(prev.dense().transpose(), n) if prev is not None and prev.ncols else Subspace(n)
    return complement_in(im, ker)


def cohomology_dims(C: FilteredComplex) -> dict[int, int]:
    return {k: C.dim(k) - C.rank_d(k) - C.rank_d(k - 1) for k in C.degrees}


def nonzero_dims(dims: dict[int, int]) -> dict[int, int]:
    return {k: v for k, v in sorted(dims.items()) if v}


def weight_piece_cohomology(C: FilteredComplex, m: int) -> dict[int, int]:
    """dim H^k(W_m C) from ranks of d on the filtration steps."""
    out = {}
    for k in C.degrees:
        F = C.filtration(k)
        dk = F[m].dim if F is not None else 0
        out[k] = dk - _weight_subrank(C, k, m) - _weight_subrank(C, k - 1, m)
    return out


def induced_weight_dims(C: FilteredComplex, m: int) -> dict[int, int]:
    """dim W_m H^k, the induced filtration on cohomology."""
    out = {}
    for k in C.degrees:
        F = C.filtration(k)
        S = F[m]
        prev_d = C.d.get(k - 1)
        img_rows = list(prev_d.transpose().rows.values()) if prev_d is not None else []
        stacked = SMat(S.dim, C.dim(k), {i: r for i, r in enumerate(_smat_rows(S.basis)) if r})
        out[k] = smat_rank(stacked, img_rows) - C.rank_d(k - 1) - _weight_subrank(C, k, m)
    return out


# ---------------------------------------------------------------- constructions

def zero_complex() -> FilteredComplex:
    return FilteredComplex({}, {}, {})


def shift(C: FilteredComplex, n: int) -> FilteredComplex:
    """C[n]^k = C^{k+n} with differential multiplied by (-1)^n."""
    sgn = -1 if n % 2 else 1
    dims = {k - n: v for k, v in C.dims.items()}
    d = {k - n: (D if sgn == 1 else -D) for k, D in C.d.items()}
    filt = None
    if C.filtered:
        filt = lambda k, C=C, n=n: C.filtration(k + n)
    blocks = {k - n: b for k, b in C.blocks.items()} if C.blocks else None
    out = FilteredComplex(dims, d, filt, blocks, name=f"{C.name}[{n}]", check=False)
    out._rank = {k - n: v for k, v in C._rank.items()}
    return out


def shift_map(phi: ComplexMap, n: int, source=None, target=None) -> ComplexMap:
    source = source or shift(phi.source, n)
    target = target or shift(phi.target, n)
    return ComplexMap(source, target, {k - n: M for k, M in phi.maps.items()}, check=False)


def _sum_filtration(parts: Sequence[tuple[FilteredComplex, int, int]], total: int) -> Filtration:
    """Direct-sum filtration; parts are (complex, degree, offset)."""
    keys = set()
    fs = []
    for C, k, off in parts:
        F = C.filtration(k)
        fs.append((F, off))
        keys.update(F.keys)
    steps = {m: stack_subspaces([(F[m], off) for F, off in fs], total) for m in sorted(keys)}
    if not steps:
        return Filtration(total, {}) if total == 0 else Filtration.trivial(Subspace.full(total))
    return Filtration(total, steps)


def direct_sum(parts: Sequence[FilteredComplex], name: str = "") -> tuple[FilteredComplex, list[dict[int, int]]]:
    degs = set()
    for C in parts:
        degs.update(C.dims)
    offsets = [dict() for _ in parts]
    dims = {}
    for k in sorted(degs):
        off = 0
        for i, C in enumerate(parts):
            offsets[i][k] = off
            off += C.dim(k)
        dims[k] = off
    d = {}
    for k in sorted(degs):
        D = SMat(dims.get(k + 1, 0), dims[k])
        for i, C in enumerate(parts):
            if k in C.d:
                D.add_smat(C.d[k], offsets[i].get(k + 1, 0), offsets[i][k])
        if not D.is_zero():
            d[k] = D
    filt = None
    if parts and all(C.filtered for C in parts):
        filt = lambda k: _sum_filtration([(C, k, offsets[i].get(k, 0)) for i, C in enumerate(parts)],
                                         dims.get(k, 0))
    blocks = None
    if parts and all(C.blocks is not None for C in parts):
        blocks = {k: [Block((i, b.key), b.space, b.twist, b.wshift)
                      for i, C in enumerate(parts) for b in C.blocks.get(k, [])] for k in dims}
    return FilteredComplex(dims, d, filt, blocks, name=name, check=False), offsets


def cone(phi: ComplexMap, name: str = "") -> FilteredComplex:
    """Cone^k = A^{k+1} ⊕ B^k, D(a, b) = (-d a, phi(a) + d b)."""
    A, B = phi.source, phi.target
    degs = {k - 1 for k in A.dims} | set(B.dims)
    dims = {k: A.dim(k + 1) + B.dim(k) for k in degs}
    d = {}
    for k in sorted(degs):
        a1, b0 = A.dim(k + 1), B.dim(k)
        a2 = A.dim(k + 2)
        D = SMat(a2 + B.dim(k + 1), a1 + b0)
        if k + 1 in A.d:
            D.add_smat(A.d[k + 1], 0, 0, sign=-1)
        if k + 1 in phi.maps:
            D.add_smat(phi.maps[k + 1], a2, 0)
        if k in B.d:
            D.add_smat(B.d[k], a2, a1)
        if not D.is_zero():
            d[k] = D
    filt = None
    if A.filtered and B.filtered:
        filt = lambda k: _sum_filtration([(A, k + 1, 0), (B, k, A.dim(k + 1))], dims.get(k, 0))
    return FilteredComplex(dims, d, filt, None, name=name or f"Cone({phi.name})", check=False)


def cone_map(alpha: ComplexMap, beta: ComplexMap, src_cone: FilteredComplex,
             tgt_cone: FilteredComplex) -> ComplexMap:
    """The map Cone(phi) -> Cone(phi') induced by a commutative square (alpha, beta)."""
    maps = {}
    for k in src_cone.dims:
        M = SMat(tgt_cone.dim(k), src_cone.dim(k))
        a_t = alpha.target.dim(k + 1)
        a_s = alpha.source.dim(k + 1)
        if k + 1 in alpha.maps:
            M.add_smat(alpha.maps[k + 1], 0, 0)
        if k in beta.maps:
            M.add_smat(beta.maps[k], a_t, a_s)
        maps[k] = M
    return ComplexMap(src_cone, tgt_cone, maps, check=True)


def identity_map(C: FilteredComplex) -> ComplexMap:
    maps = {}
    for k, n in C.dims.items():
        M = SMat(n, n)
        for i in range(n):
            M.rows[i] = {i: ONE}
        maps[k] = M
    return ComplexMap(C, C, maps, check=False)


def zero_map(A: FilteredComplex, B: FilteredComplex) -> ComplexMap:
    return ComplexMap(A, B, {}, check=False)


@dataclass
class QuasiIsoReport:
    quasi_iso: bool
    first_failure: int | None
    cone_dims: dict[int, int]
    source_dims: dict[int, int]
    target_dims: dict[int, int]

    def __bool__(self):
        return self.quasi_iso

    def to_json(self):
        return {"quasi_iso": self.quasi_iso, "first_failure": self.first_failure,
                "cone_dims": {str(k): v for k, v in sorted(self.cone_dims.items()) if v},
                "source_dims": {str(k): v for k, v in sorted(self.source_dims.items()) if v},
                "target_dims": {str(k): v for k, v in sorted(self.target_dims.items()) if v}}


def is_quasi_iso(phi: ComplexMap) -> QuasiIsoReport:
    """True iff cone(phi) is acyclic; reports the first degree with cohomology."""
    Cn = cone(phi)
    dims = cohomology_dims(Cn)
    bad = [k for k, v in sorted(dims.items()) if v]
    return QuasiIsoReport(not bad, bad[0] if bad else None, dims,
                          cohomology_dims(phi.source), cohomology_dims(phi.target))


def is_acyclic(C: FilteredComplex) -> bool:
    return not any(cohomology_dims(C).values())


def total(columns: dict[int, FilteredComplex], horizontal: dict[int, dict[int, SMat]],
          name: str = "", check: bool = True) -> tuple[FilteredComplex, dict]:
    """Total complex of a double complex.

    ``columns[p]`` is the p-th column (its own differential in q); the
    horizontal map ``horizontal[p][q]`` goes from column p to column p+1 in
    degree q.  Tot^n = ⊕_{p+q=n} and D = δ + (-1)^p d.
    """
    ps = sorted(columns)
    if check:
        for p in ps:
            for q, h in horizontal.get(p, {}).items():
                nxt = columns.get(p + 1)
                if nxt is None:
                    raise DimensionMismatch(f"horizontal map out of the last column {p}")
                if (h.nrows, h.ncols) != (nxt.dim(q), columns[p].dim(q)):
                    raise DimensionMismatch(f"horizontal map at ({p},{q}) has the wrong shape")
                dq = nxt.diff(q) * h - horizontal[p].get(q + 1, SMat(nxt.dim(q + 1), columns[p].dim(q + 1))) * columns[p].diff(q)
                if not dq.is_zero():
                    raise SignError("horizontal and vertical differentials do not commute",
                                    {"p": p, "q": q})
                h2 = horizontal.get(p + 1, {}).get(q)
                if h2 is not None and not (h2 * h).is_zero():
                    raise SignError("horizontal differential does not square to zero",
                                    {"p": p, "q": q})
    offsets: dict[tuple[int, int], int] = {}
    dims: dict[int, int] = {}
    ns = set()
    for p in ps:
        for q in columns[p].dims:
            ns.add(p + q)
    for n in sorted(ns):
        off = 0
        for p in ps:
            q = n - p
            if q in columns[p].dims:
                offsets[(p, q)] = off
                off += columns[p].dim(q)
        dims[n] = off
    d = {}
    for n in sorted(ns):
        D = SMat(dims.get(n + 1, 0), dims[n])
        for p in ps:
            q = n - p
            if (p, q) not in offsets:
                continue
            src = offsets[(p, q)]
            C = columns[p]
            if q in C.d and (p, q + 1) in offsets:
                D.add_smat(C.d[q], offsets[(p, q + 1)], src, sign=-1 if p % 2 else 1)
            h = horizontal.get(p, {}).get(q)
            if h is not None and (p + 1, q) in offsets:
                D.add_smat(h, offsets[(p + 1, q)], src)
        if not D.is_zero():
            d[n] = D
    filt = None
    if all(columns[p].filtered for p in ps):
        def filt(n):
            parts = [(columns[p], n - p, offsets[(p, n - p)]) for p in ps if (p, n - p) in offsets]
            return _sum_filtration(parts, dims.get(n, 0))
    Tot = FilteredComplex(dims, d, filt, None, name=name, check=check)
    return Tot, offsets


def total_map(src_cols: dict[int, FilteredComplex], tgt_cols: dict[int, FilteredComplex],
              col_maps: dict[int, ComplexMap], src_tot: FilteredComplex, src_off: dict,
              tgt_tot: FilteredComplex, tgt_off: dict, check: bool = True) -> ComplexMap:
    """Map of totals induced by column maps that commute with both differentials."""
    maps = {}
    for n in src_tot.dims:
        M = SMat(tgt_tot.dim(n), src_tot.dim(n))
        for p, phi in col_maps.items():
            q = n - p
            if (p, q) in src_off and (p, q) in tgt_off and q in phi.maps:
                M.add_smat(phi.maps[q], tgt_off[(p, q)], src_off[(p, q)])
        maps[n] = M
    return ComplexMap(src_tot, tgt_tot, maps, check=check)


def direct_sum_map(maps: Sequence[ComplexMap], src: FilteredComplex, src_off, tgt: FilteredComplex,
                   tgt_off) -> ComplexMap:
    out = {}
    for k in src.dims:
        M = SMat(tgt.dim(k), src.dim(k))
        for i, phi in enumerate(maps):
            if k in phi.maps:
                M.add_smat(phi.maps[k], tgt_off[i].get(k, 0), src_off[i].get(k, 0))
        out[k] = M
    return ComplexMap(src, tgt, out, check=False)


# ---------------------------------------------------------------- block complexes

Arrow = tuple  # (target key, sign, operator matrix on V or None for identity)


def block_complex(terms: dict[int, list[Block]], arrows: Callable[[int, object], Iterable[Arrow]],
                  ambient_W: Filtration | None, name: str = "") -> FilteredComplex:
    """Complex whose terms are direct sums of blocks and whose differential
    sends block ``key`` to block ``tgt`` by ``sign * op`` restricted.

    Raises FiltrationEscape when an arrow leaves its target block.
    """
    dims = {k: sum(b.space.dim for b in bl) for k, bl in terms.items()}
    index = {}
    for k, bl in terms.items():
        off = 0
        for b in bl:
            index[(k, b.key)] = (b, off)
            off += b.space.dim
    d = {}
    for k, bl in terms.items():
        if k + 1 not in terms:
            continue
        D = SMat(dims[k + 1], dims[k])
        for b in bl:
            b_off = index[(k, b.key)][1]
            if b.space.dim == 0:
                continue
            for tgt_key, sign, op in arrows(k, b.key):
                tgt = index.get((k + 1, tgt_key))
                if tgt is None:
                    continue
                tb, t_off = tgt
                imgs = b.space.basis if op is None else b.space.basis * op.transpose()
                bad = tb.space.first_outside(imgs)
                if bad is not None:
                    raise FiltrationEscape(
                        f"differential leaves the target term (degree {k}, {b.key} -> {tgt_key})",
                        {"degree": k, "source": str(b.key), "target": str(tgt_key),
                         "vector": [qstr(v) for v in rows_of(b.space.basis)[bad]]})
                if tb.space.dim == 0:
                    continue
                coords = tb.space.coords(imgs)
                D.add_dense(coords.transpose(), t_off, b_off, sign)
        if not D.is_zero():
            d[k] = D
    filt = None
    if ambient_W is not None:
        cache = {}

        def filt(k):
            bl = terms.get(k, [])
            parts = []
            for b in bl:
                ck = b.space.key()
                if ck not in cache:
                    cache[ck] = ambient_W.in_coords(b.space)
                parts.append((cache[ck], b.wshift, index[(k, b.key)][1]))
            keys = sorted({m + s for F, s, _ in parts for m in F.keys})
            n = dims.get(k, 0)
            if not keys:
                return Filtration(n, {}) if n == 0 else Filtration.trivial(Subspace.full(n))
            steps = {m: stack_subspaces([(F[m - s], off) for F, s, off in parts], n) for m in keys}
            return Filtration(n, steps)
    C = FilteredComplex(dims, d, filt, terms, name=name, check=True)
    C.arrows = arrows
    C.ambient_W = ambient_W
    return C


def restrict_blocks(C: FilteredComplex, spaces: Callable[[int, Block], Subspace], name: str = "") -> FilteredComplex:
    """Sub-block complex with block spaces replaced (must be sub-spaces, closure checked)."""
    terms = {k: [Block(b.key, spaces(k, b), b.twist, b.wshift) for b in bl]
             for k, bl in C.blocks.items()}
    return block_complex(terms, C.arrows, C.ambient_W, name=name)


def inclusion_by_blocks(sub: FilteredComplex, sup: FilteredComplex, check: bool = True,
                        key_map: Callable | None = None) -> ComplexMap:
    """Map that includes each block of ``sub`` into the block of ``sup`` with the same key."""
    maps = {}
    for k in sub.dims:
        M = SMat(sup.dim(k), sub.dim(k))
        idx = sup.block_index(k)
        for b, off in sub.block_offsets(k):
            if b.space.dim == 0:
                continue
            key = key_map(b.key) if key_map else b.key
            if key not in idx:
                raise FiltrationEscape(f"no block {key} in the target (degree {k})")
            tb, t_off = idx[key]
            bad = tb.space.first_outside(b.space.basis)
            if bad is not None:
                raise FiltrationEscape(f"block {key} is not contained in the target (degree {k})",
                                       {"degree": k, "key": str(key),
                                        "vector": [qstr(v) for v in rows_of(b.space.basis)[bad]]})
            M.add_dense(tb.space.coords(b.space.basis).transpose(), t_off, off)
        maps[k] = M
    return ComplexMap(sub, sup, maps, check=check)


def weight_truncation(C: FilteredComplex, m: int, name: str = "") -> FilteredComplex:
    """The block subcomplex W_m C."""
    W = C.ambient_W
    return restrict_blocks(C, lambda k, b: b.space.intersect(W[m - b.wshift]),
                           name=name or f"W_{m}{C.name}")


def block_dims(C: FilteredComplex) -> dict[int, int]:
    return {k: C.dim(k) for k in C.degrees}
