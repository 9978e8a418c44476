"""Commuting nilpotent tuples with a weight filtration."""
from __future__ import annotations

from itertools import combinations

from flint import fmpq_mat

from .filtration import Filtration, monodromy_filtration, monodromy_on
from .linalg import Subspace, identity, is_nilpotent, is_zero, mat, qstr, rows_of


class InstanceError(ValueError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


def label_key(s: str):
    return (0, int(s), s) if s.lstrip("-").isdigit() else (1, 0, s)


def subsets(idx, size=None):
    idx = tuple(idx)
    sizes = range(len(idx) + 1) if size is None else [size]
    for r in sizes:
        yield from combinations(idx, r)


class NilInstance:
    """V = Q^dim with commuting nilpotents f_i, weight center w and filtration W.

    Labels are kept in sorted order and referred to internally by position;
    subsets of labels are sorted tuples of positions.
    """

    def __init__(self, labels, f, w: int = 0, W: Filtration | None = None,
                 pairing: fmpq_mat | None = None, polarizable: bool = False,
                 name: str = "", origin=None):
        labels = sorted((str(x) for x in labels), key=label_key)
        if len(set(labels)) != len(labels):
            raise InstanceError("duplicate labels")
        self.labels = tuple(labels)
        mats = [f[l] if isinstance(f[l], fmpq_mat) else mat(f[l]) for l in labels]
        dims = {m.nrows() for m in mats} | {m.ncols() for m in mats}
        if len(dims) != 1:
            raise InstanceError("nilpotents of different sizes")
        self.dim = dims.pop()
        self.fs = mats
        self.w = w
        if W is None:
            # the automatic W needs a nilpotent sum, so check the tuple first
            bad = self._tuple_violations()
            if bad:
                raise InstanceError(f"instance invariant violated: {bad[0]['check']}", witness=bad[0])
        self.W = W if W is not None else self.sum_weight().shifted(w)
        self.pairing = pairing
        self.polarizable = polarizable
        self.name = name
        self.origin = origin
        self._prod: dict = {}
        self._img: dict = {}
        self._tw: dict = {}

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def all(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def label_set(self, J) -> list[str]:
        return [self.labels[i] for i in J]

    def f_prod(self, J) -> fmpq_mat:
        J = tuple(sorted(J))
        if J not in self._prod:
            if not J:
                self._prod[J] = identity(self.dim)
            else:
                self._prod[J] = self.f_prod(J[:-1]) * self.fs[J[-1]]
        return self._prod[J]

    def image(self, J) -> Subspace:
        J = tuple(sorted(J))
        if J not in self._img:
            self._img[J] = Subspace.full(self.dim) if not J else \
                Subspace.full(self.dim).image(self.f_prod(J))
        return self._img[J]

    def sum_f(self, K) -> fmpq_mat:
        S = fmpq_mat(self.dim, self.dim)
        for i in K:
            S = S + self.fs[i]
        return S

    def sum_weight(self) -> Filtration:
        return monodromy_filtration(self.sum_f(self.all), 0, validate=False)

    def tuple_weight(self, K, on: Subspace) -> Filtration:
        """Weight filtration centered at 0 of the sum of f_j (j in K) restricted to ``on``."""
        K = tuple(sorted(K))
        key = (K, on.key())
        if key not in self._tw:
            if not K:
                self._tw[key] = Filtration(self.dim, {0: on}, 0, on)
            else:
                self._tw[key] = monodromy_on(self.sum_f(K), on, 0)
        return self._tw[key]

    # checks -------------------------------------------------------------
    def _tuple_violations(self) -> list[dict]:
        out = []
        for i, A in enumerate(self.fs):
            if not is_nilpotent(A):
                out.append({"check": "nilpotent", "label": self.labels[i]})
        for i, j in combinations(range(self.n), 2):
            C = self.fs[i] * self.fs[j] - self.fs[j] * self.fs[i]
            if not is_zero(C):
                out.append({"check": "commute", "labels": [self.labels[i], self.labels[j]],
                            "commutator": [[qstr(v) for v in r] for r in rows_of(C)]})
        return out

    def violations(self) -> list[dict]:
        out = self._tuple_violations()
        if out:
            return out
        N = self.sum_f(self.all)
        checks = [("sum", N)]
        if self.polarizable:
            checks += list(zip(self.labels, self.fs))
        for label, A in checks:
            for k in self.W.keys:
                if not self.W[k].image(A) <= self.W[k - 2]:
                    out.append({"check": "f W_k in W_{k-2}", "label": label, "k": k})
                    break
        return out

    def weight_defects(self) -> list[dict]:
        """Differences between W and the shifted weight filtration of the sum."""
        auto = self.sum_weight().shifted(self.w)
        if self.W == auto:
            return []
        return [{"check": "W is the shifted weight filtration of the sum",
                 "given": self.W.jumps(), "expected": auto.jumps()}]

    def validate(self):
        bad = self.violations()
        if bad:
            raise InstanceError(f"instance invariant violated: {bad[0]['check']}", witness=bad[0])
        return self

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "labels": list(self.labels),
            "nilpotents": {l: [[qstr(v) for v in r] for r in rows_of(A)]
                           for l, A in zip(self.labels, self.fs)},
            "w": self.w,
            "weight_filtration": self.W.to_json()["jumps"],
            "polarizable": self.polarizable,
        }
        if self.pairing is not None:
            out["pairing"] = [[qstr(v) for v in r] for r in rows_of(self.pairing)]
        if self.name:
            out["name"] = self.name
        if self.origin is not None:
            out["origin"] = self.origin
        return out

    @classmethod
    def from_json(cls, data: dict) -> "NilInstance":
        dim = int(data["dim"])
        labels = [str(l) for l in data["labels"]]
        f = {}
        for l in labels:
            rows = data["nilpotents"][l]
            if len(rows) != dim or any(len(r) != dim for r in rows):
                raise InstanceError(f"nilpotent {l} is not {dim}x{dim}")
            f[l] = mat(rows, dim) if dim else fmpq_mat(0, 0)
        w = int(data.get("w", 0))
        wf = data.get("weight_filtration", "auto")
        W = None
        if wf != "auto" and wf is not None:
            W = Filtration(dim, {int(k): Subspace.span(v, dim) for k, v in wf.items()}, w)
        pairing = data.get("pairing")
        if pairing is not None:
            pairing = mat(pairing, dim)
        return cls(labels, f, w, W, pairing, bool(data.get("polarizable", False)),
                   data.get("name", ""), data.get("origin"))

    def __repr__(self):
        return f"NilInstance({self.name or '?'}, dim={self.dim}, labels={list(self.labels)}, w={self.w})"

