"""Fans built from chains of subsets, functors on their cone posets, and push-forwards.

A cone is a sorted tuple of rays.  A functor assigns a complex to every cone
and a map F(σ) -> F(τ) whenever τ is a face of σ.
"""
from __future__ import annotations

import random
from itertools import combinations
from typing import Callable, Sequence

from flint import fmpq_mat

from .complexes import (ComplexMap, FilteredComplex, cohomology_dims, cone as mapping_cone,
                        direct_sum, nonzero_dims, shift, total)
from .linalg import (SMat, Subspace, Quotient, identity, mat, rank, rows_of, sum_spaces)


class BoundExceeded(ValueError):
    pass


DEFAULT_BOUND = 6


# ---------------------------------------------------------------- chains

def nonempty_subsets(n: int) -> list[tuple[int, ...]]:
    return [c for r in range(1, n + 1) for c in combinations(range(n), r)]


def _chains_from(subs, start=()):
    out = [start]
    for S in subs:
        if not start or set(start[-1]) < set(S):
            out.extend(_chains_from(subs, start + (S,)))
    return out


def enumerate_sequences(n: int, mode: str = "all", refining=None,
                        bound: int = DEFAULT_BOUND) -> list[tuple]:
    """Chains J_1 ⊊ ... ⊊ J_m of nonempty subsets of {0..n-1}.

    mode ``all`` includes the empty chain; ``ending_at_Λ`` keeps chains whose
    last member is everything; ``refining`` keeps chains containing ``refining``.
    """
    if n > bound:
        raise BoundExceeded(f"|Λ|={n} exceeds the bound {bound}")
    subs = sorted(nonempty_subsets(n), key=lambda s: (len(s), s))
    chains = _chains_from(subs)
    full = tuple(range(n))
    if mode == "all":
        out = chains
    elif mode == "ending_at_Λ":
        out = [c for c in chains if c and c[-1] == full]
    elif mode == "refining":
        base = set(refining)
        out = [c for c in chains if base <= set(c)]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return sorted(out, key=lambda c: (len(c), c))


def closure_contains(J1, J2) -> bool:
    """O(J1) lies in the closure of O(J2) iff J2 ⊆ J1 as sets of subsets."""
    return set(J2) <= set(J1)


def refinement_edges(chains) -> list[tuple]:
    """Pairs (finer, coarser) differing by exactly one member."""
    cs = set(chains)
    return [(c, d) for c in chains for d in (tuple(x for x in c if x != J) for J in c) if d in cs]


# ---------------------------------------------------------------- fans

class Fan:
    """A simplicial fan given by its cones (sorted tuples of rays)."""

    def __init__(self, cones, ray_order: Sequence, name: str = ""):
        self.rank = {r: i for i, r in enumerate(ray_order)}
        self.rays = list(ray_order)
        norm = {self.norm(c) for c in cones}
        self.cones = sorted(norm, key=lambda c: (len(c), [self.rank[r] for r in c]))
        self.cone_set = set(self.cones)
        self.name = name
        for c in self.cones:
            for f in self.facets(c):
                if f not in self.cone_set:
                    raise ValueError(f"face {f} of {c} missing from the fan")

    def norm(self, c) -> tuple:
        return tuple(sorted(c, key=lambda r: self.rank[r]))

    @property
    def dim(self) -> int:
        return max(len(c) for c in self.cones)

    def facets(self, c) -> list[tuple]:
        return [c[:i] + c[i + 1:] for i in range(len(c))]

    def of_dim(self, d: int) -> list[tuple]:
        return [c for c in self.cones if len(c) == d]

    def faces(self, c) -> list[tuple]:
        return [f for f in self.cones if set(f) <= set(c)]

    def is_complete(self) -> bool:
        """Pure of top dimension d, and every (d-1)-cone lies in exactly two d-cones."""
        d = self.dim
        if d == 0:
            return self.cones == [()]
        top = self.of_dim(d)
        for c in self.cones:
            if not any(set(c) <= set(t) for t in top):
                return False
        count = {f: 0 for f in self.of_dim(d - 1)}
        for t in top:
            for f in self.facets(t):
                count[f] += 1
        return all(v == 2 for v in count.values())


def sigma_fan(n: int, bound: int = DEFAULT_BOUND) -> Fan:
    """Σ(Λ): rays are nonempty subsets, cones are chains (including the empty one)."""
    rays = sorted(nonempty_subsets(n), key=lambda s: (len(s), s))
    return Fan(enumerate_sequences(n, "all", bound=bound), rays, f"Sigma({n})")


def sbar_fan(n: int, bound: int = DEFAULT_BOUND) -> Fan:
    """Σ̄(Λ): chains ending at Λ; the rays of a chain are its members other than Λ."""
    full = tuple(range(n))
    rays = sorted([s for s in nonempty_subsets(n) if s != full], key=lambda s: (len(s), s))
    cones = [c[:-1] for c in enumerate_sequences(n, "ending_at_Λ", bound=bound)]
    return Fan(cones, rays, f"Sigmabar({n})")


def ybar_fan(n: int) -> Fan:
    """The fan of proper subsets J ⊊ Λ, the cone of J spanned by its elements."""
    rays = list(range(n))
    cones = [c for r in range(n) for c in combinations(range(n), r)]
    return Fan(cones, rays, f"Ybar({n})")


def product_fan(fans: Sequence[Fan]) -> Fan:
    rays = [(i, r) for i, F in enumerate(fans) for r in F.rays]
    cones = [()]
    for i, F in enumerate(fans):
        cones = [c + tuple((i, r) for r in s) for c in cones for s in F.cones]
    return Fan(cones, rays, "x".join(F.name for F in fans))


def chain_of(cone, n: int) -> tuple:
    return tuple(cone) + (tuple(range(n)),)


def cone_of(chain) -> tuple:
    return tuple(chain[:-1])


def shipped_fans(max_labels: int = 3) -> list[Fan]:
    fans = [sbar_fan(n) for n in range(1, max_labels + 1)]
    fans += [ybar_fan(n) for n in range(1, max_labels + 1)]
    fans.append(product_fan([sbar_fan(2), sbar_fan(2)]))
    fans.append(product_fan([sbar_fan(2), sbar_fan(3)]))
    return fans


# ---------------------------------------------------------------- functors

class PosetFunctor:
    """Complexes on the cones of a fan with maps F(σ) -> F(τ) for faces τ ⊆ σ."""

    def __init__(self, fan: Fan, values: dict, trans: Callable, name: str = ""):
        self.fan = fan
        self.values = values
        self._trans = trans
        self._cache: dict = {}
        self.name = name

    def __call__(self, c) -> FilteredComplex:
        return self.values[c]

    def trans(self, big, small) -> ComplexMap:
        key = (big, small)
        if key not in self._cache:
            if big == small:
                from .complexes import identity_map
                self._cache[key] = identity_map(self.values[big])
            else:
                self._cache[key] = self._trans(big, small)
        return self._cache[key]

    def functoriality_defect(self):
        """First triple (σ3, σ2, σ1) where the transitions fail to compose."""
        for c3 in self.fan.cones:
            for c2 in self.fan.facets(c3):
                for c1 in self.fan.facets(c2):
                    a = self.trans(c2, c1) @ self.trans(c3, c2)
                    b = self.trans(c3, c1)
                    if not a.equals(b):
                        return (c3, c2, c1)
        return None


def point_complex(n: int) -> FilteredComplex:
    return FilteredComplex({0: n}, {}, None)


def vector_functor(fan: Fan, dims: dict, mats: Callable, name: str = "") -> PosetFunctor:
    """Functor of vector spaces (degree-0 complexes); ``mats(big, small)`` is a dense matrix."""
    values = {c: point_complex(dims[c]) for c in fan.cones}

    def trans(big, small):
        M = mats(big, small)
        return ComplexMap(values[big], values[small],
                          {0: SMat.from_dense(M, nrows=dims[small], ncols=dims[big])}, check=False)

    return PosetFunctor(fan, values, trans, name)


def constant_functor(fan: Fan, n: int = 1) -> PosetFunctor:
    return vector_functor(fan, {c: n for c in fan.cones}, lambda a, b: identity(n), f"const{n}")


def zero_functor(fan: Fan) -> PosetFunctor:
    return vector_functor(fan, {c: 0 for c in fan.cones}, lambda a, b: fmpq_mat(0, 0), "zero")


def indicator_functor(fan: Fan, members: set, name: str = "") -> PosetFunctor:
    """Q on the cones in ``members`` (an up-set or down-set), identity between members."""
    dims = {c: (1 if c in members else 0) for c in fan.cones}
    return vector_functor(fan, dims, lambda a, b: fmpq_mat(dims[b], dims[a], [1] * (dims[a] * dims[b])),
                          name or "indicator")


def skyscraper(fan: Fan, c) -> PosetFunctor:
    return indicator_functor(fan, {c}, f"skyscraper{c}")


def up_closure(fan: Fan, seeds) -> set:
    return {c for c in fan.cones if any(set(s) <= set(c) for s in seeds)}


def down_closure(fan: Fan, seeds) -> set:
    return {c for c in fan.cones if any(set(c) <= set(s) for s in seeds)}


def sum_functor(parts: Sequence[PosetFunctor]) -> PosetFunctor:
    fan = parts[0].fan
    dims = {c: sum(P(c).dim(0) for P in parts) for c in fan.cones}

    def mats(big, small):
        M = fmpq_mat(dims[small], dims[big])
        ro = co = 0
        for P in parts:
            T = P.trans(big, small).component(0).dense()
            for i in range(T.nrows()):
                for j in range(T.ncols()):
                    M[ro + i, co + j] = T[i, j]
            ro += T.nrows()
            co += T.ncols()
        return M

    return vector_functor(fan, dims, mats, "+".join(P.name for P in parts))


def _rand_subspace(rng: random.Random, n: int, d: int) -> Subspace:
    rows = [[rng.randint(-2, 2) for _ in range(n)] for _ in range(d)]
    return Subspace.span(rows, n)


def subspace_functor(fan: Fan, n: int, rng: random.Random) -> PosetFunctor:
    """F(σ) = intersection of random subspaces B_ρ over the rays of σ, with inclusions."""
    B = {r: _rand_subspace(rng, n, rng.randint(0, n)) for r in fan.rays}
    spaces = {}
    for c in fan.cones:
        S = Subspace.full(n)
        for r in c:
            S = S.intersect(B[r])
        spaces[c] = S
    dims = {c: spaces[c].dim for c in fan.cones}

    def mats(big, small):
        return spaces[small].coords(spaces[big].basis).transpose()

    return vector_functor(fan, dims, mats, "subspace")


def quotient_functor(fan: Fan, n: int, rng: random.Random) -> PosetFunctor:
    """F(σ) = V / (sum of B_ρ over rays not in σ), with projections."""
    B = {r: _rand_subspace(rng, n, rng.randint(0, max(1, n // 2))) for r in fan.rays}
    full = Subspace.full(n)
    quots = {}
    for c in fan.cones:
        U = sum_spaces([B[r] for r in fan.rays if r not in c], n)
        quots[c] = Quotient(full, U)
    dims = {c: quots[c].dim for c in fan.cones}

    def mats(big, small):
        return quots[small].coords(quots[big].reps).transpose()

    return vector_functor(fan, dims, mats, "quotient")


def random_functor(fan: Fan, seed: int) -> PosetFunctor:
    rng = random.Random(seed)
    kind = seed % 5
    n = rng.randint(1, 3)
    if kind == 0:
        return subspace_functor(fan, n, rng)
    if kind == 1:
        return quotient_functor(fan, n, rng)
    if kind == 2:
        seeds = rng.sample(fan.cones, k=min(len(fan.cones), rng.randint(1, 2)))
        return indicator_functor(fan, up_closure(fan, seeds), "up")
    if kind == 3:
        seeds = rng.sample(fan.cones, k=min(len(fan.cones), rng.randint(1, 2)))
        return indicator_functor(fan, down_closure(fan, seeds), "down")
    return sum_functor([subspace_functor(fan, n, rng), quotient_functor(fan, n, rng)])


# ---------------------------------------------------------------- totals

def fan_total(F: PosetFunctor, name: str = "") -> tuple[FilteredComplex, dict, dict, dict]:
    """Total complex with column -dim σ holding F(σ) and the face-removal differential.

    Returns (Tot, offsets in Tot, columns, per-cone offsets inside its column).
    """
    fan = F.fan
    columns, col_off = {}, {}
    for d in range(fan.dim + 1):
        cs = fan.of_dim(d)
        col, offs = direct_sum([F(c) for c in cs])
        columns[-d] = col
        col_off[-d] = {c: offs[i] for i, c in enumerate(cs)}
    horizontal: dict = {}
    for d in range(fan.dim, 0, -1):
        p = -d
        src, tgt = columns[p], columns[p + 1]
        h = {}
        for q in src.dims:
            M = SMat(tgt.dim(q), src.dim(q))
            for c in fan.of_dim(d):
                for pos, f in enumerate(fan.facets(c)):
                    # facet i drops the ray at position i
                    phi = F.trans(c, f)
                    if q in phi.maps:
                        M.add_smat(phi.maps[q], col_off[p + 1][f].get(q, 0), col_off[p][c].get(q, 0),
                                   sign=-1 if pos % 2 else 1)
            h[q] = M
        horizontal[p] = h
    Tot, offsets = total(columns, horizontal, name=name)
    return Tot, offsets, columns, col_off


def pushforward_complete(F: PosetFunctor) -> FilteredComplex:
    if not F.fan.is_complete():
        raise ValueError(f"fan {F.fan.name} is not complete")
    Tot = fan_total(F)[0]
    return shift(Tot, -F.fan.dim)


def pushforward_xbar(F: PosetFunctor) -> FilteredComplex:
    """Push-forward over S̄(Λ): the Čech total shifted by -(|Λ|-1)."""
    return shift(fan_total(F)[0], -F.fan.dim)


# ---------------------------------------------------------------- Ȳ pull-back

def pullback_ybar(F: PosetFunctor, n: int) -> PosetFunctor:
    """From functors on proper subsets J ⊊ Λ to S̄(Λ): the chain takes F(J_{m-1})."""
    S = sbar_fan(n)

    def last(c):
        return c[-1] if c else ()

    values = {c: F(last(c)) for c in S.cones}

    def trans(big, small):
        phi = F.trans(last(big), last(small))
        return ComplexMap(values[big], values[small], phi.maps, check=False)

    return PosetFunctor(S, values, trans, f"pullback({F.name})")


# ---------------------------------------------------------------- resolution

def resolution_check(F: PosetFunctor) -> dict:
    """At each cone ρ, F(ρ) -> Tot C^{•,•} restricted to the faces of ρ is a quasi-isomorphism.

    The double complex sits on pairs σ1 ⊆ σ2 ⊆ ρ with value F(σ1) in bidegree
    (-dim σ1, dim σ2).  The first differential drops a ray from σ1, the
    second adds a ray of ρ to σ2.
    """
    fan = F.fan
    results = []
    ok = True
    for rho in fan.cones:
        faces = [c for c in fan.cones if set(c) <= set(rho)]
        pairs = [(a, b) for a in faces for b in faces if set(a) <= set(b)]
        degs = {}
        for a, b in pairs:
            degs.setdefault(len(b) - len(a), []).append((a, b))
        for k in degs:
            degs[k].sort(key=lambda ab: (len(ab[0]), [fan.rank[r] for r in ab[0]],
                                         len(ab[1]), [fan.rank[r] for r in ab[1]]))
        off, dims = {}, {}
        for k, lst in degs.items():
            o = 0
            for ab in lst:
                off[ab] = o
                o += F(ab[0]).dim(0)
            dims[k] = o
        d = {}
        for k, lst in degs.items():
            if k + 1 not in dims:
                continue
            D = SMat(dims[k + 1], dims[k])
            for a, b in lst:
                for pos, r in enumerate(a):
                    a2 = a[:pos] + a[pos + 1:]
                    M = F.trans(a, a2).component(0)
                    D.add_smat(M, off[(a2, b)], off[(a, b)], sign=-1 if pos % 2 else 1)
                kk = -len(a)
                for r in rho:
                    if r in b:
                        continue
                    b2 = fan.norm(b + (r,))
                    before = sum(1 for x in b if fan.rank[x] < fan.rank[r])
                    s = (-1) ** before * (-1) ** (kk % 2)
                    n = F(a).dim(0)
                    for i in range(n):
                        D.add(off[(a, b2)] + i, off[(a, b)] + i, s)
            d[k] = D
        C = FilteredComplex(dims, d, None, None, check=False)
        dd = C.dd_defect()
        stalk = point_complex(F(rho).dim(0))
        aug = SMat(dims.get(0, 0), F(rho).dim(0))
        for s in faces:
            e = (-1) ** (len(s) * (len(s) + 1) // 2)
            M = F.trans(rho, s).component(0)
            aug.add_smat(M, off[(s, s)], 0, sign=e)
        phi = ComplexMap(stalk, C, {0: aug}, check=False)
        chain = phi.chain_defect()
        cone_h = nonzero_dims(cohomology_dims(mapping_cone(phi))) if dd is None and chain is None else None
        good = dd is None and chain is None and not cone_h
        ok = ok and good
        results.append({"orbit": [list(map(str, r)) if isinstance(r, tuple) else r for r in rho],
                         "pass": good,
                         "stalk_dim": F(rho).dim(0),
                         "total_dims": nonzero_dims(cohomology_dims(C)) if dd is None else None})
    return {"pass": ok, "orbits": results}


# ---------------------------------------------------------------- closed unions

def closed_union_functor(chains, n: int) -> PosetFunctor:
    """Constant Q on the union of the closures of the listed orbits of X̄(Λ)."""
    S = sbar_fan(n)
    members = set()
    for ch in chains:
        base = set(cone_of(ch))
        for c in S.cones:
            if base <= set(c):
                members.add(c)
    return indicator_functor(S, members, "closed-union")


def closed_union_cohomology(chains, n: int) -> dict[int, int]:
    return nonzero_dims(cohomology_dims(pushforward_xbar(closed_union_functor(chains, n))))


def contractibility_instances(n: int) -> list[list[tuple]]:
    """Unions closure(O(J·Λ)) ∪ closure(O(J'^Λ))... for all proper Λ₀, all J in S̄(Λ₀)
    and every set of refinements J' of J.

    J·Λ appends Λ after Λ₀; J'^Λ replaces Λ₀ by Λ.
    """
    full = tuple(range(n))
    out = []
    for r in range(1, n):
        for lam0 in combinations(range(n), r):
            sub = _chains_in(lam0)
            for J in [c for c in sub if c and c[-1] == lam0]:
                refs = [c for c in sub if c and c[-1] == lam0 and set(J) <= set(c)]
                for k in range(len(refs) + 1):
                    for pick in combinations(refs, k):
                        union = [J + (full,)] + [c[:-1] + (full,) for c in pick]
                        out.append(union)
    return out


def _chains_in(lam0) -> list[tuple]:
    m = len(lam0)
    base = enumerate_sequences(m, "all")
    return [tuple(tuple(lam0[i] for i in S) for S in c) for c in base]


# ---------------------------------------------------------------- independent oracle

def poset_cohomology(F: PosetFunctor) -> dict[int, int]:
    """Cohomology of the functor over the cone poset via strictly decreasing chains.

    C^p is the product over chains σ0 ⊋ ... ⊋ σp of F(σp); the last coface
    pushes F(σp) -> F(σ_{p+1}).  This is the derived limit, i.e. the sheaf
    cohomology of the non-negative part, computed without the fan's orientation.
    """
    fan = F.fan
    by_len: dict[int, list] = {}

    def extend(ch):
        by_len.setdefault(len(ch) - 1, []).append(ch)
        last = set(ch[-1])
        for c in fan.cones:
            if set(c) < last:
                extend(ch + (c,))

    for c in fan.cones:
        extend((c,))
    offs, dims = {}, {}
    for p, lst in by_len.items():
        o = 0
        for ch in lst:
            offs[ch] = o
            o += F(ch[-1]).dim(0)
        dims[p] = o
    d = {}
    for p, lst in by_len.items():
        if p + 1 not in by_len:
            continue
        D = SMat(dims[p + 1], dims[p])
        for ch in by_len[p + 1]:
            for i in range(p + 2):
                face = ch[:i] + ch[i + 1:]
                s = -1 if i % 2 else 1
                n_in = F(face[-1]).dim(0)
                if n_in == 0 or F(ch[-1]).dim(0) == 0:
                    continue
                if i == p + 1:
                    M = F.trans(ch[-2], ch[-1]).component(0)
                    D.add_smat(M, offs[ch], offs[face], sign=s)
                else:
                    for j in range(n_in):
                        D.add(offs[ch] + j, offs[face] + j, s)
        d[p] = D
    C = FilteredComplex(dims, d, None, None, check=True)
    return nonzero_dims(cohomology_dims(C))
