"""Two-variable complexes C0..C3, their weight truncations, and the zigzag
connecting C0 with the fiber of (W1∩W0')C1 ⊕ (W1∩W0'')C1 -> W1 C1.

Every variant is a truncated IC complex: Ci localizes at a subset of the
labels (C0 nothing, C1 both, C2 the second, C3 the first) and the W1 / W0'
/ W0'' prefixes intersect with ^Λ W_1 and ^{1} W_0 or ^{2} W_0.
"""
from __future__ import annotations

from .complexes import (ComplexMap, FilteredComplex, FiltrationEscape, cohomology_dims, cone, cone_map,
                        direct_sum, identity_map, inclusion_by_blocks, is_quasi_iso, nonzero_dims, shift,
                        shift_map)
from .instance import InstanceError, NilInstance
from .linalg import SMat
from .nilcomplex import build_ic, truncate

VARIANTS = ("C0", "C1", "C2", "C3", "W1C0", "W1C1", "W1C2", "W1C3",
            "W1W0pC0", "W1W0ppC0", "W1W0pC1", "W1W0ppC1", "W1W0pC2", "W1W0ppC3")

# positions: label 1 -> 0, label 2 -> 1
_LOCALIZED = {"C0": (), "C1": (0, 1), "C2": (1,), "C3": (0,)}


def _parse(tag: str):
    if tag not in VARIANTS:
        raise ValueError(f"unknown variant {tag!r}")
    base = tag[-2:]
    prefix = tag[:-2]
    extra = {"": None, "W1": None, "W1W0p": (0,), "W1W0pp": (1,)}[prefix]
    return base, prefix != "", extra


def build_kk(tag: str, inst: NilInstance) -> FilteredComplex:
    if inst.n != 2:
        raise InstanceError("two-variable complexes need exactly two labels")
    base, truncated, extra = _parse(tag)
    if extra is not None and not inst.polarizable:
        raise InstanceError(f"{tag} needs a polarizable instance")
    lam0 = _LOCALIZED[base]
    parent = build_ic(inst, lam0)
    if not truncated:
        parent.name = tag
        return parent
    K, m = [(0, 1)], [1]
    if extra is not None:
        K, m = [extra, (0, 1)], [0, 1]
    C = truncate(inst, "ic", lam0, None, K, m, parent=parent)
    C.name = tag
    return C


def fiber(alpha: ComplexMap, beta: ComplexMap, name: str = ""):
    """Cone(A ⊕ B -> C)[-1] for the map (a, b) -> alpha(a) - beta(b).

    Returns (fiber, the map on the sum, the sum, its offsets)."""
    A, B, C = alpha.source, beta.source, alpha.target
    S, offs = direct_sum([A, B], name=f"{A.name}+{B.name}")
    maps = {}
    for k in S.dims:
        M = SMat(C.dim(k), S.dim(k))
        if k in alpha.maps:
            M.add_smat(alpha.maps[k], 0, offs[0][k])
        if k in beta.maps:
            M.add_smat(beta.maps[k], 0, offs[1][k], sign=-1)
        maps[k] = M
    phi = ComplexMap(S, C, maps, check=True)
    cn = cone(phi)
    return shift(cn, -1), cn, phi, S, offs


class Fiber:
    def __init__(self, a: FilteredComplex, b: FilteredComplex, c: FilteredComplex, name: str):
        self.parts = (a, b, c)
        self.alpha = inclusion_by_blocks(a, c)
        self.beta = inclusion_by_blocks(b, c)
        self.tot, self.cone, self.phi, self.sum, self.offs = fiber(self.alpha, self.beta)
        self.tot.name = name
        self.name = name

    def map_to(self, other: "Fiber") -> ComplexMap:
        """Induced by block inclusions of the three parts."""
        ia = inclusion_by_blocks(self.parts[0], other.parts[0])
        ib = inclusion_by_blocks(self.parts[1], other.parts[1])
        ic = inclusion_by_blocks(self.parts[2], other.parts[2])
        maps = {}
        for k in self.sum.dims:
            M = SMat(other.sum.dim(k), self.sum.dim(k))
            if k in ia.maps:
                M.add_smat(ia.maps[k], other.offs[0].get(k, 0), self.offs[0][k])
            if k in ib.maps:
                M.add_smat(ib.maps[k], other.offs[1].get(k, 0), self.offs[1][k])
            maps[k] = M
        on_sum = ComplexMap(self.sum, other.sum, maps, check=True)
        cm = cone_map(on_sum, ic, self.cone, other.cone)
        return shift_map(cm, -1, self.tot, other.tot)


def diagonal_into(C: FilteredComplex, F: Fiber) -> ComplexMap:
    """x -> (x, x, 0) from C into the fiber of C ⊕ C -> C."""
    maps = {}
    for k in C.dims:
        n = C.dim(k)
        M = SMat(F.tot.dim(k), n)
        for i in range(n):
            M.rows.setdefault(F.offs[0][k] + i, {})[i] = 1
            M.rows.setdefault(F.offs[1][k] + i, {})[i] = 1
        maps[k] = M
    return ComplexMap(C, F.tot, maps, check=True)


def _dims(C):
    d = cohomology_dims(C)
    return {str(k): d.get(k, 0) for k in (-2, -1, 0)} | {str(k): v for k, v in sorted(d.items()) if v}


def verify_kk_chain(inst: NilInstance) -> dict:
    """Certify every arrow of the zigzag from C0 to the fiber of C1 truncations."""
    out = {"check": "kk", "instance_id": inst.name, "pass": True, "steps": [], "trace": []}

    def step(name, ok, expect=True, **info):
        rec = {"step": name, "pass": bool(ok) == expect, **info}
        out["steps"].append(rec)
        if not rec["pass"]:
            out["pass"] = False
        return rec

    def arrow(name, phi: ComplexMap, expect=True):
        rep = is_quasi_iso(phi)
        out["trace"].append({"variant": phi.target.name, "arrow": name, "source": phi.source.name,
                             "cone_acyclic": rep.quasi_iso})
        return step(name, rep.quasi_iso, expect, report=rep.to_json())

    try:
        V = {t: build_kk(t, inst) for t in VARIANTS}
    except (FiltrationEscape, InstanceError) as e:
        out["pass"] = False
        out["error"] = str(e)
        out["witness"] = getattr(e, "witness", None)
        return out

    C0 = V["C0"]
    for name, t in (("a1", "W1W0pC0"), ("a2", "W1W0ppC0"), ("a3", "W1C0")):
        arrow(name, inclusion_by_blocks(V[t], C0))

    left = Fiber(V["W1W0pC0"], V["W1W0ppC0"], V["W1C0"], "Fib(W1W0pC0+W1W0ppC0->W1C0)")
    full0 = Fiber(C0, C0, C0, "Fib(C0+C0->C0)")
    arrow("diagonal", diagonal_into(C0, full0))
    arrow("cone-replacement", left.map_to(full0))

    right1 = Fiber(V["W1W0pC1"], V["W1W0ppC1"], V["W1C1"], "Fib(W1W0pC1+W1W0ppC1->W1C1)")
    arrow("fiber comparison C0 -> C1", left.map_to(right1))

    loc = Fiber(V["C2"], V["C3"], V["C1"], "Fib(C2+C3->C1)")
    rep = is_quasi_iso(full0.map_to(loc))
    out["trace"].append({"variant": loc.name, "arrow": "not necessarily quasi-iso",
                         "source": full0.name, "cone_acyclic": rep.quasi_iso})
    out["non_quasi_iso_arrow"] = rep.to_json()

    w1 = Fiber(V["W1C0"], V["W1C0"], V["W1C0"], "Fib(W1C0+W1C0->W1C0)")
    w1loc = Fiber(V["W1C2"], V["W1C3"], V["W1C1"], "Fib(W1C2+W1C3->W1C1)")
    bottom = w1.map_to(w1loc)
    arrow("W1 comparison", bottom)
    mixed = Fiber(V["W1W0pC2"], V["W1W0ppC3"], V["W1C1"], "Fib(W1W0pC2+W1W0ppC3->W1C1)")
    top = left.map_to(mixed)
    left_v = left.map_to(w1)
    right_v = mixed.map_to(w1loc)
    arrow("square left", left_v)
    arrow("square right", right_v)
    arrow("square top", top)
    step("square commutes", (right_v @ top).equals(bottom @ left_v))

    ids = []
    for k in V["W1W0pC2"].dims:
        for a, b in (("W1W0pC2", "W1W0pC1"), ("W1W0ppC3", "W1W0ppC1")):
            ia, ib = V[a].block_index(k), V[b].block_index(k)
            for key, (blk, _) in ia.items():
                ok = key in ib and blk.space == ib[key][0].space
                ids.append({"degree": k, "term": str(key), "pair": [a, b], "equal": ok})
    step("term identifications", all(r["equal"] for r in ids),
         failures=[r for r in ids if not r["equal"]])
    shift_ok = []
    for i in (0, 1):
        S = inst.image((i,))
        Wi = lambda on: inst.tuple_weight((i,), on)
        a = Wi(S)[-1]
        b = Wi(_full(inst))[0].image(inst.fs[i])
        c = S.intersect(Wi(_full(inst))[-2])
        shift_ok.append(a == b == c)
    step("single-nilpotent shift", all(shift_ok))

    final_left, final_right = _dims(C0), _dims(right1.tot)
    step("final cohomology", nonzero_dims(cohomology_dims(C0)) == nonzero_dims(cohomology_dims(right1.tot)),
         left=final_left, right=final_right)
    out["final_dims"] = final_left
    out["zigzag"] = ["C0", full0.name, left.name, mixed.name, right1.name]
    return out


def _full(inst):
    from .linalg import Subspace
    return Subspace.full(inst.dim)


def non_quasi_iso_witness(inst: NilInstance) -> bool:
    """True when the map Fib(C0+C0->C0) -> Fib(C2+C3->C1) fails to be a quasi-isomorphism."""
    C0 = build_kk("C0", inst)
    full0 = Fiber(C0, C0, C0, "full")
    loc = Fiber(build_kk("C2", inst), build_kk("C3", inst), build_kk("C1", inst), "loc")
    return not is_quasi_iso(full0.map_to(loc)).quasi_iso
