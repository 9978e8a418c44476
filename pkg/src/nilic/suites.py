"""Suites: a corpus of items and one verifier per item.

Items are plain JSON-compatible dicts so they can cross process boundaries;
results come back in input order.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

from .complexes import cohomology_dims, nonzero_dims
from .filtration import (Filtration, monodromy_defects, relative_monodromy)
from .instance import InstanceError, NilInstance
from .kk2d import verify_kk_chain
from .linalg import Subspace, mat
from .nilcomplex import (build_ic, build_icc, purity_report, strictness_report, verify_cone_prop,
                         verify_thm_g, verify_truncations, verify_vanishing_cycles)
from .pmts import (generate, inst_lefschetz, polarizable_corpus, polarization_check,
                   random_commuting_tuple)
from .toric import (contractibility_instances, closed_union_cohomology, poset_cohomology,
                    pullback_ybar, pushforward_complete, pushforward_xbar, random_functor,
                    resolution_check, shipped_fans, sigma_fan, ybar_fan)

SUITES = ("cone", "purity", "truncation", "thm-g", "kk", "toric", "filtration-axioms", "lefschetz")


class CorpusError(ValueError):
    pass


@dataclass
class SuiteConfig:
    suite: str
    corpus_file: str | None = None
    gen: tuple[int, int, int, int] | None = None  # seed, size, dim bound, |Λ| bound
    out: str | None = None
    jobs: int = 1
    items: list = field(default_factory=list)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise CorpusError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.gen is not None and (self.gen[1] < 0 or self.gen[2] < 1 or self.gen[3] < 1):
            raise CorpusError("generator bounds must be positive")
        if self.jobs < 1:
            raise CorpusError("jobs must be positive")

    def describe(self) -> dict:
        src = {"file": self.corpus_file} if self.corpus_file else {"gen": list(self.gen or default_gen(self.suite))}
        return {"suite": self.suite, "corpus": src}


# ---------------------------------------------------------------- corpora

def default_gen(suite: str) -> tuple[int, int, int, int]:
    if suite == "cone":
        return (0, 200, 8, 3)
    if suite == "toric":
        return (0, 20, 0, 3)
    if suite == "kk":
        return (0, 0, 81, 2)
    return (0, 0, 81, 3)


def random_items(seed: int, size: int, dim: int, labels: int) -> list[dict]:
    out = []
    for s in range(seed, seed + size):
        d = 1 + s % dim
        n = 1 + (s // dim) % labels
        out.append({"id": f"random-{s}", "random": [d, n, s]})
    return out


def polarizable_items(dim: int, labels: int, size: int = 0, exact_labels: int | None = None) -> list[dict]:
    exprs = polarizable_corpus(dim, labels)
    out = []
    for e in exprs:
        inst = generate(e)
        if exact_labels is not None and inst.n != exact_labels:
            continue
        out.append({"id": e, "expr": e})
    return out[:size] if size else out


def toric_items(seed: int, size: int, labels: int) -> list[dict]:
    out = []
    for fan in shipped_fans(labels):
        for s in range(seed, seed + size):
            out.append({"id": f"{fan.name}/seed-{s}", "fan": fan.name, "seed": s})
    for n in range(1, labels + 1):
        for s in range(seed, seed + size):
            out.append({"id": f"Sigma({n})/seed-{s}", "sigma": n, "seed": s})
    for n in range(2, labels + 1):
        for s in range(seed, seed + size):
            out.append({"id": f"Ybar-pullback({n})/seed-{s}", "ybar": n, "seed": s})
    if labels >= 3:
        out.append({"id": "closed-unions(3)", "closed_unions": 3})
    return out


def corpus_items(cfg: SuiteConfig) -> list[dict]:
    if cfg.items:
        return cfg.items
    if cfg.corpus_file:
        return file_items(cfg.corpus_file)
    seed, size, dim, labels = cfg.gen or default_gen(cfg.suite)
    if cfg.suite == "cone":
        return random_items(seed, size, dim, labels)
    if cfg.suite == "toric":
        return toric_items(seed, size or 20, labels)
    if cfg.suite == "kk":
        return polarizable_items(dim, 2, size, exact_labels=2)
    items = polarizable_items(dim, labels, size)
    if cfg.suite == "filtration-axioms":
        items += random_items(seed, size or 40, min(dim, 8), labels)
    return items


def file_items(path: str) -> list[dict]:
    import json
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise CorpusError("corpus file must hold an instance or a list of instances")
    out = []
    for i, d in enumerate(data):
        if isinstance(d, str):
            out.append({"id": d, "expr": d})
        elif isinstance(d, dict) and "nilpotents" in d:
            parse_instance_data(d)
            out.append({"id": d.get("name") or f"instance-{i}", "instance": d})
        elif isinstance(d, dict) and ("expr" in d or "random" in d):
            out.append({"id": d.get("id") or f"instance-{i}", **d})
        else:
            raise CorpusError(f"corpus entry {i} is not an instance")
    return out


def parse_instance_data(data: dict) -> NilInstance:
    """Schema check (CorpusError) and invariant check (InstanceError)."""
    if not isinstance(data, dict):
        raise CorpusError("instance must be a JSON object")
    for key in ("dim", "labels", "nilpotents"):
        if key not in data:
            raise CorpusError(f"instance is missing {key!r}")
    if not isinstance(data["labels"], list) or not all(isinstance(l, str) for l in data["labels"]):
        raise CorpusError("labels must be a list of strings")
    if set(data["nilpotents"]) != set(data["labels"]):
        raise CorpusError("nilpotents must be given for exactly the listed labels")
    try:
        inst = NilInstance.from_json(data)
    except InstanceError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusError(f"malformed instance: {e}") from e
    inst.validate()
    return inst


def item_instance(item: dict) -> NilInstance:
    if "expr" in item:
        return generate(item["expr"])
    if "random" in item:
        d, n, s = item["random"]
        return random_commuting_tuple(d, n, s)
    return parse_instance_data(item["instance"])


# ---------------------------------------------------------------- per-item verifiers

def _cone(item):
    inst = item_instance(item)
    r = verify_cone_prop(inst)
    return r["pass"], r["per_degree"], [] if r["pass"] else [r], {"square_commutes": r["square_commutes"],
                                                                   "punc_c_acyclic": r["punc_c_acyclic"]}


def _purity(item):
    inst = item_instance(item)
    r = purity_report(inst)
    return r["pass"], r["per_degree"], r["violations"], {}


def _truncation(item):
    inst = item_instance(item)
    r = verify_truncations(inst)
    vc = verify_vanishing_cycles(inst)
    extra = {k: r[k] for k in ("counts", "W_IC_to_IC", "W_ICc_acyclic", "W_IC_to_W_IC_punc")}
    extra["vanishing_cycles"] = {"pass": vc["pass"], "count": vc["count"]}
    return r["pass"] and vc["pass"], {}, r["failures"] + vc["failures"], extra


def _thm_g(item):
    inst = item_instance(item)
    if not inst.polarizable:
        return False, {}, [{"error": "thm-g needs a polarizable instance"}], {}
    r = verify_thm_g(inst)
    fails = [] if r["pass"] else [{"escape": r["escape"]} if "escape" in r else r["verdicts"]]
    return r["pass"], r.get("tables", {}), fails, {"verdicts": r.get("verdicts", {})}


def _kk(item):
    inst = item_instance(item)
    if inst.n != 2:
        return False, {}, [{"error": "kk needs exactly two labels"}], {}
    r = verify_kk_chain(inst)
    fails = [s for s in r["steps"] if not s["pass"]]
    if "error" in r:
        fails.append({"error": r["error"], "witness": r.get("witness")})
    non_qi = r.get("non_quasi_iso_arrow", {}).get("quasi_iso") is False
    extra = {"trace": r["trace"], "non_quasi_iso_confirmed": non_qi}
    return r["pass"], {"C0": r.get("final_dims", {})}, fails, extra


def _lefschetz(item):
    inst = item_instance(item)
    lf = inst_lefschetz(inst)
    fails = list(lf["failures"])
    ok = lf["pass"]
    extra = {"primitive_dims": lf["primitive_dims"]}
    if inst.pairing is not None:
        pol = polarization_check(inst)
        ok = ok and pol["pass"]
        fails += pol["failures"]
        extra["polarization"] = pol["pass"]
    return ok, {}, fails, extra


def _filtration_axioms(item):
    inst = item_instance(item)
    V = Subspace.full(inst.dim)
    fails, count = [], 0
    for r in range(1, inst.n + 1):
        for K in combinations(inst.all, r):
            W = inst.tuple_weight(K, V)
            count += 1
            for d in monodromy_defects(inst.sum_f(K), W, 0):
                fails.append({"K": inst.label_set(K), **d})
    extra = {"filtrations": count}
    if inst.polarizable:
        rel = 0
        for r in range(2, inst.n + 1):
            for K in combinations(inst.all, r):
                for s in range(1, r):
                    for K1 in combinations(K, s):
                        rest = tuple(i for i in K if i not in K1)
                        L = inst.tuple_weight(K1, V)
                        M = relative_monodromy(inst.sum_f(rest), L)
                        rel += 1
                        if M is None or M != inst.tuple_weight(K, V):
                            fails.append({"relative": inst.label_set(K1), "within": inst.label_set(K),
                                          "exists": M is not None})
        extra["relative_checks"] = rel
        for tag, C in (("IC", build_ic(inst)), ("ICc", build_icc(inst))):
            s = strictness_report(C)
            if not s["pass"]:
                fails.append({"strictness": tag, "mismatches": s["mismatches"][:5]})
        extra["strictness"] = True if not any("strictness" in f for f in fails) else False
    return not fails, {}, fails, extra


def _toric(item):
    if "closed_unions" in item:
        n = item["closed_unions"]
        bad = []
        insts = contractibility_instances(n)
        for u in insts:
            h = closed_union_cohomology(u, n)
            if h != {0: 1}:
                bad.append({"union": [[list(s) for s in ch] for ch in u], "dims": _dj(h)})
        return not bad, {}, bad, {"unions": len(insts)}
    if "ybar" in item:
        n = item["ybar"]
        G = random_functor(ybar_fan(n), item["seed"])
        a = nonzero_dims(cohomology_dims(pushforward_xbar(pullback_ybar(G, n))))
        b = nonzero_dims(cohomology_dims(pushforward_complete(G)))
        c = poset_cohomology(G)
        ok = a == b == c
        return ok, {"blowup": _dj(a), "Ybar": _dj(b), "oracle": _dj(c)}, \
            [] if ok else [{"dims": [_dj(a), _dj(b), _dj(c)]}], {}
    if "sigma" in item:
        # Σ(Λ) is not complete: only the stalkwise resolution is checked there
        res = resolution_check(random_functor(sigma_fan(item["sigma"]), item["seed"]))
        bad = [{"orbit": o["orbit"]} for o in res["orbits"] if not o["pass"]]
        return not bad, {}, bad, {"orbits": len(res["orbits"])}
    fan = next(f for f in shipped_fans(3) if f.name == item["fan"])
    F = random_functor(fan, item["seed"])
    a = nonzero_dims(cohomology_dims(pushforward_complete(F)))
    b = poset_cohomology(F)
    res = resolution_check(F)
    fails = []
    if a != b:
        fails.append({"pushforward": _dj(a), "oracle": _dj(b)})
    bad_orbits = [o for o in res["orbits"] if not o["pass"]]
    fails += [{"orbit": o["orbit"]} for o in bad_orbits]
    return not fails, {"pushforward": _dj(a), "oracle": _dj(b)}, fails, {"orbits": len(res["orbits"])}


def _dj(d):
    return {str(k): v for k, v in sorted(d.items())}


RUNNERS = {
    "cone": _cone, "purity": _purity, "truncation": _truncation, "thm-g": _thm_g, "kk": _kk,
    "toric": _toric, "filtration-axioms": _filtration_axioms, "lefschetz": _lefschetz,
}


def run_item(suite: str, item: dict) -> dict:
    try:
        ok, per_degree, witnesses, extra = RUNNERS[suite](item)
    except InstanceError as e:
        ok, per_degree, witnesses, extra = False, {}, [{"instance_error": str(e), "witness": e.witness}], {}
    return {"instance_id": item["id"], "check_name": suite, "pass": bool(ok),
            "per_degree": per_degree, "witnesses": witnesses, **extra}


def _run_star(args):
    return run_item(*args)


def suite_checks(suite: str, results: list[dict]) -> list[dict]:
    """Checks that look across the whole corpus."""
    out = []
    if suite == "kk" and results:
        out.append({"check": "non-quasi-iso arrow confirmed on some instance",
                    "pass": any(r.get("non_quasi_iso_confirmed") for r in results)})
    if suite == "filtration-axioms":
        out.append(relative_monodromy_nonexistence())
    return out


def relative_monodromy_nonexistence() -> dict:
    """N = J_2 with L_0 = span(e1), L_1 = V has no relative monodromy filtration."""
    N = mat([[0, 1], [0, 0]])
    L = Filtration(2, {0: Subspace.span([[1, 0]], 2), 1: Subspace.full(2)})
    M = relative_monodromy(N, L)
    return {"check": "relative monodromy of J2 over a two-step L does not exist", "pass": M is None}


def run_suite(cfg: SuiteConfig) -> dict:
    items = corpus_items(cfg)
    args = [(cfg.suite, it) for it in items]
    if cfg.jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            results = list(ex.map(_run_star, args, chunksize=1))
    else:
        results = [_run_star(a) for a in args]
    extra = suite_checks(cfg.suite, results)
    ok = all(r["pass"] for r in results) and all(c["pass"] for c in extra)
    return {"suite": cfg.suite, "config": cfg.describe(), "pass": ok, "count": len(results),
            "failures": sum(1 for r in results if not r["pass"]) + sum(1 for c in extra if not c["pass"]),
            "suite_checks": extra, "results": results}
