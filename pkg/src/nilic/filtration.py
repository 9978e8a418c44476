"""Increasing filtrations, monodromy weight filtrations and relative monodromy."""
from __future__ import annotations

from bisect import bisect_right
from typing import Mapping

from flint import fmpq_mat

from .linalg import (DimensionMismatch, PreconditionError, Quotient, Subspace,
                     complement_in, identity, induced_map, is_nilpotent, is_zero,
                     kernel, mat, qstr, rows_of, solve_left, sum_spaces, vstack)


class Filtration:
    """Exhaustive increasing filtration of ``space`` (default: all of Q^n).

    Only jumps are stored: ``W_k`` is the last stored step with index <= k,
    and zero below the first one.
    """

    __slots__ = ("ambient_dim", "center", "space", "keys", "spaces")

    def __init__(self, ambient_dim: int, steps: Mapping[int, Subspace], center: int = 0,
                 space: Subspace | None = None):
        self.ambient_dim = ambient_dim
        self.center = center
        self.space = space if space is not None else Subspace.full(ambient_dim)
        keys, spaces = [], []
        prev = Subspace(ambient_dim)
        for k in sorted(steps):
            S = steps[k]
            if S.ambient_dim != ambient_dim:
                raise DimensionMismatch("filtration step in a different ambient space")
            if S == prev:
                continue
            if not prev <= S:
                raise ValueError(f"filtration is not increasing at index {k}")
            keys.append(k)
            spaces.append(S)
            prev = S
        if prev != self.space:
            raise ValueError("filtration does not exhaust its space")
        self.keys = tuple(keys)
        self.spaces = tuple(spaces)

    @classmethod
    def trivial(cls, space: Subspace, at: int = 0, center: int = 0) -> "Filtration":
        return cls(space.ambient_dim, {at: space}, center, space)

    def __getitem__(self, k: int) -> Subspace:
        i = bisect_right(self.keys, k) - 1
        if i < 0:
            return Subspace(self.ambient_dim)
        return self.spaces[i]

    @property
    def lo(self) -> int:
        return self.keys[0] if self.keys else self.center

    @property
    def hi(self) -> int:
        return self.keys[-1] if self.keys else self.center

    def jumps(self) -> dict[int, int]:
        return {k: S.dim for k, S in zip(self.keys, self.spaces)}

    def graded_dims(self) -> dict[int, int]:
        out, prev = {}, 0
        for k, S in zip(self.keys, self.spaces):
            out[k] = S.dim - prev
            prev = S.dim
        return out

    def shifted(self, s: int) -> "Filtration":
        """The filtration W' with W'_{k+s} = W_k."""
        return Filtration(self.ambient_dim, {k + s: S for k, S in zip(self.keys, self.spaces)},
                          self.center + s, self.space)

    def restrict(self, S: Subspace) -> "Filtration":
        """Steps intersected with S, still in ambient coordinates."""
        return Filtration(self.ambient_dim, {k: W.intersect(S) for k, W in zip(self.keys, self.spaces)},
                          self.center, self.space.intersect(S))

    def in_coords(self, S: Subspace) -> "Filtration":
        """Steps W_k ∩ S written in the coordinates of S's basis."""
        steps = {}
        for k, W in zip(self.keys, self.spaces):
            X = W.intersect(S)
            steps[k] = Subspace.span(S.coords(X.basis), S.dim) if X.dim else Subspace(S.dim)
        top = self.space.intersect(S)
        topc = Subspace.span(S.coords(top.basis), S.dim) if top.dim else Subspace(S.dim)
        return Filtration(S.dim, steps, self.center, topc)

    def same_steps(self, other: "Filtration") -> bool:
        return self.keys == other.keys and self.spaces == other.spaces

    def __eq__(self, other):
        return (isinstance(other, Filtration) and self.ambient_dim == other.ambient_dim
                and self.same_steps(other))

    def __hash__(self):
        return hash((self.ambient_dim, self.keys, self.spaces))

    def __repr__(self):
        return f"Filtration(jumps={self.jumps()}, center={self.center})"

    def to_json(self):
        return {"center": self.center,
                "jumps": {str(k): S.to_json() for k, S in zip(self.keys, self.spaces)}}

    @classmethod
    def from_json(cls, data, ambient_dim: int) -> "Filtration":
        steps = {int(k): Subspace.span(v, ambient_dim) for k, v in data["jumps"].items()}
        return cls(ambient_dim, steps, int(data.get("center", 0)))


def _mat(N):
    return N.matrix if hasattr(N, "matrix") else N


def jordan_chains(N) -> list[fmpq_mat]:
    """Jordan chains of a nilpotent N, longest first.

    Each chain is returned as the matrix with rows v, Nv, ..., N^{s-1} v.
    """
    N = _mat(N)
    n = N.nrows()
    if n == 0:
        return []
    if not is_nilpotent(N):
        raise ValueError("map is not nilpotent")
    powers = [identity(n)]
    while not is_zero(powers[-1]):
        powers.append(powers[-1] * N)
    ell = len(powers) - 1
    kers = [kernel(P) for P in powers]
    Nt = N.transpose()
    chains = []
    for s in range(ell, 0, -1):
        above = kers[min(s + 1, ell)]
        base = kers[s - 1] + above.image(N)
        tops = complement_in(base, kers[s])
        for v in rows_of(tops):
            rows = [v]
            cur = mat([v])
            for _ in range(s - 1):
                cur = cur * Nt
                rows.append(cur.tolist()[0])
            chains.append(mat(rows, n))
    return chains


def _chain_filtration(chains, n: int, center: int) -> Filtration:
    by_weight: dict[int, list] = {}
    for ch in chains:
        s = ch.nrows()
        for j, v in enumerate(rows_of(ch)):
            by_weight.setdefault(center + (s - 1) - 2 * j, []).append(v)
    steps, acc = {}, []
    for k in sorted(by_weight):
        acc.extend(by_weight[k])
        steps[k] = Subspace.span(mat(acc, n), n)
    return Filtration(n, steps, center)


def monodromy_filtration(N, center: int = 0, validate: bool = True) -> Filtration:
    """The weight filtration of a nilpotent N, centered at ``center``."""
    N = _mat(N)
    n = N.nrows()
    if not is_nilpotent(N):
        raise ValueError("map is not nilpotent")
    if n == 0:
        return Filtration(0, {}, center)
    W = _chain_filtration(jordan_chains(N), n, center)
    if validate:
        bad = monodromy_defects(N, W, center)
        if bad:
            raise AssertionError(f"weight filtration failed its axioms: {bad[0]}")
    return W


def monodromy_on(N, S: Subspace, center: int = 0, validate: bool = False) -> Filtration:
    """Weight filtration of N restricted to an invariant subspace S (ambient coordinates)."""
    N = _mat(N)
    if S.is_full():
        return monodromy_filtration(N, center, validate)
    if S.dim == 0:
        return Filtration(S.ambient_dim, {}, center, S)
    Nc = induced_map(N, S, S, "restrict").matrix
    chains = jordan_chains(Nc)
    by_weight: dict[int, list] = {}
    for ch in chains:
        s = ch.nrows()
        for j, v in enumerate(rows_of(ch)):
            by_weight.setdefault(center + (s - 1) - 2 * j, []).append(v)
    steps, acc = {}, []
    for k in sorted(by_weight):
        acc.extend(by_weight[k])
        steps[k] = Subspace.span(mat(acc, S.dim) * S.basis, S.ambient_dim)
    W = Filtration(S.ambient_dim, steps, center, S)
    if validate:
        bad = monodromy_defects(N, W, center)
        if bad:
            raise AssertionError(f"weight filtration failed its axioms: {bad[0]}")
    return W


def monodromy_defects(N, W: Filtration, center: int) -> list[dict]:
    """Violations of the weight filtration axioms (empty list when none).

    Checks N W_k ⊆ W_{k-2}, and that N^k maps Gr_{c+k} onto Gr_{c-k} with
    equal dimensions, which together make N^k bijective on graded pieces.
    """
    N = _mat(N)
    out = []
    if not W.keys:
        return out
    for k in range(W.lo, W.hi + 1):
        img = W[k].image(N)
        if not img <= W[k - 2]:
            bad = W[k - 2].first_outside(img.basis)
            out.append({"axiom": "N W_k in W_{k-2}", "k": k,
                        "witness": [qstr(v) for v in img.rows()[bad]]})
    g = W.graded_dims()
    span = max(abs(W.lo - center), abs(W.hi - center))
    P = identity(N.nrows())
    for k in range(1, span + 1):
        P = P * N
        a, b = g.get(center + k, 0), g.get(center - k, 0)
        if a != b:
            out.append({"axiom": "dim Gr symmetric", "k": k, "dims": [a, b]})
            continue
        if a == 0:
            continue
        lhs = W[center + k].image(P) + W[center - k - 1]
        if lhs != W[center - k]:
            out.append({"axiom": "N^k onto Gr_{c-k}", "k": k})
    return out


def restrict_filtration(W: Filtration, S: Subspace) -> Filtration:
    """W_k ∩ S, reindexed in the coordinates of S."""
    if W.ambient_dim != S.ambient_dim:
        raise DimensionMismatch("filtration and subspace live in different spaces")
    return W.in_coords(S)


def tuple_weight(inst, K, on: Subspace) -> Filtration:
    """Weight filtration (centered at 0) of the sum of f_j, j in K, on the subspace ``on``."""
    return inst.tuple_weight(tuple(K), on)


def _sub_of_quotient(Qt: Quotient, X: Subspace) -> Subspace:
    """Image of X (a subspace of Qt.big) in quotient coordinates."""
    if X.dim == 0:
        return Subspace(Qt.dim)
    return Subspace.span(Qt.coords(X.basis), Qt.dim)


def relative_monodromy(N, L: Filtration) -> Filtration | None:
    """The relative monodromy filtration M(N; L), or None when it does not exist.

    Built jump by jump along L: on each new graded piece the Jordan chains of
    the induced map are lifted so that N^{k+1} of the lifted top lands in the
    right step of the filtration already built.  The result is then checked
    against the defining conditions.
    """
    N = _mat(N)
    n = N.nrows()
    for k, S in zip(L.keys, L.spaces):
        if not S.image(N) <= S:
            raise PreconditionError(f"N does not preserve L_{k}")
    if not L.keys:
        return Filtration(n, {}, L.center, L.space)
    Nt = N.transpose()
    M = monodromy_on(N, L.spaces[0], L.keys[0])
    for idx in range(1, len(L.keys)):
        U, top, hi = L.spaces[idx - 1], L.spaces[idx], L.keys[idx]
        Qt = Quotient(top, U)
        Nbar = induced_map(N, top, U, "quotient").matrix
        extra: dict[int, list] = {}
        for ch in jordan_chains(Nbar):
            k = ch.nrows() - 1
            v0 = mat([rows_of(ch)[0]], Qt.dim) * Qt.reps
            P = v0
            for _ in range(k + 1):
                P = P * Nt
            # find u in U with N^{k+1}(v0 + u) in M_{hi-k-2}
            Uimg = U.basis
            for _ in range(k + 1):
                Uimg = Uimg * Nt
            target = M[hi - k - 2]
            system = vstack([Uimg, target.basis], n)
            x = solve_left(system, -P) if system.nrows() else (None if not is_zero(P) else fmpq_mat(1, 0))
            if x is None:
                return None
            u = fmpq_mat(1, n)
            if U.dim:
                coeff = fmpq_mat(1, U.dim, [x[0, j] for j in range(U.dim)])
                u = coeff * U.basis
            v = v0 + u
            for i in range(k + 1):
                extra.setdefault(hi + k - 2 * i, []).append(v.tolist()[0])
                v = v * Nt
        keys = sorted(set(M.keys) | set(extra))
        steps, acc = {}, []
        for j in keys:
            acc.extend(extra.get(j, []))
            extra_sp = Subspace.span(mat(acc, n), n) if acc else Subspace(n)
            steps[j] = M[j] + extra_sp
        steps[max(keys) if keys else hi] = top
        try:
            M = Filtration(n, steps, L.center, top)
        except ValueError:
            return None
    if not relative_monodromy_holds(N, L, M):
        return None
    return M


def relative_monodromy_holds(N, L: Filtration, M: Filtration) -> bool:
    """Check the defining conditions of M(N; L)."""
    N = _mat(N)
    if M.space != L.space:
        return False
    if M.keys:
        for j in range(M.lo, M.hi + 1):
            if not M[j].image(N) <= M[j - 2]:
                return False
    prev = Subspace(L.ambient_dim)
    for ell, S in zip(L.keys, L.spaces):
        Qt = Quotient(S, prev)
        Nbar = induced_map(N, S, prev, "quotient").matrix
        steps = {j: _sub_of_quotient(Qt, M[j].intersect(S)) for j in (M.keys or (ell,))}
        steps[max(steps) + 1] = Subspace.full(Qt.dim)
        G = Filtration(Qt.dim, steps, ell)
        if monodromy_defects(Nbar, G, ell):
            return False
        prev = S
    return True
