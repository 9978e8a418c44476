"""End-to-end criteria, one printed PASS/FAIL line each.

Every criterion runs a full suite at its default corpus. The lines are
repeated in the terminal summary by conftest.
"""
import time

import pytest

from nilic.nilcomplex import verify_vanishing_cycles
from nilic.pmts import generate
from nilic.report import dumps
from nilic.suites import SUITES, SuiteConfig, polarizable_items, run_suite

LINES = []
REPORTS = {}  # default-corpus reports at jobs=1, reused by the determinism check


def record(n, name, ok, detail=""):
    line = f"criterion {n:>2} {name:<28} {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return ok


def timed(cfg):
    t = time.monotonic()
    rep = run_suite(cfg)
    REPORTS[cfg.suite] = dumps(rep)
    return rep, time.monotonic() - t


def failed_ids(rep):
    return [r["instance_id"] for r in rep["results"] if not r["pass"]][:5]


def test_01_cone_quasi_isomorphism():
    rep, secs = timed(SuiteConfig("cone"))
    ok = rep["pass"] and rep["count"] >= 200 and secs < 120
    for r in rep["results"]:
        ok = ok and r["square_commutes"] and r["punc_c_acyclic"]
    assert record(1, "cone", ok, f"{rep['count']} tuples in {secs:.1f}s {failed_ids(rep)}"), rep["failures"]


def test_02_purity():
    rep, secs = timed(SuiteConfig("purity"))
    ok = rep["pass"] and secs < 300
    assert record(2, "purity / dual purity", ok, f"{rep['count']} instances in {secs:.1f}s {failed_ids(rep)}")


def test_03_truncation():
    rep, secs = timed(SuiteConfig("truncation"))
    ok = rep["pass"] and all(r["W_IC_to_IC"] and r["W_ICc_acyclic"] for r in rep["results"])
    assert record(3, "truncation quasi-isos", ok, f"{rep['count']} instances in {secs:.1f}s {failed_ids(rep)}")


def test_04_thm_g():
    rep, secs = timed(SuiteConfig("thm-g"))
    ok = rep["pass"] and all(len(r["per_degree"]) == 4 and len(r["verdicts"]) == 3 for r in rep["results"])
    assert record(4, "S-bar functor g-chain", ok, f"{rep['count']} instances in {secs:.1f}s {failed_ids(rep)}")


def test_05_kk_zigzag():
    rep, secs = timed(SuiteConfig("kk"))
    by_id = {r["instance_id"]: r for r in rep["results"]}
    j2j2 = by_id.get("tensor(jordan(2, 0, '1'), jordan(2, 0, '2'))", {}).get("per_degree", {}).get("C0")
    diag = by_id.get("diag(jordan(2, 0, '1'), ['1', '2'])", {}).get("per_degree", {}).get("C0")
    ok = (rep["pass"] and secs < 60 and j2j2 == {"-2": 1, "-1": 0, "0": 0}
          and diag == {"-2": 1, "-1": 1, "0": 0}
          and any(r["non_quasi_iso_confirmed"] for r in rep["results"]))
    assert record(5, "zigzag chain", ok, f"{rep['count']} instances in {secs:.1f}s J2xJ2={j2j2} diag={diag}")


def test_06_vanishing_cycles():
    bad, count = [], 0
    for item in polarizable_items(81, 3):
        r = verify_vanishing_cycles(generate(item["expr"]))
        count += r["count"]
        if not r["pass"]:
            bad.append(item["id"])
    assert record(6, "vanishing-cycle identities", not bad, f"{count} subspace identities {bad[:5]}")


def test_07_filtration_axioms():
    rep, secs = timed(SuiteConfig("filtration-axioms"))
    nonexist = [c for c in rep["suite_checks"] if "does not exist" in c["check"]]
    strict = all(r.get("strictness", True) for r in rep["results"])
    ok = rep["pass"] and nonexist and nonexist[0]["pass"] and strict
    assert record(7, "filtration axioms", ok, f"{rep['count']} instances in {secs:.1f}s {failed_ids(rep)}")


def test_08_toric():
    rep, secs = timed(SuiteConfig("toric"))
    unions = [r for r in rep["results"] if r["instance_id"].startswith("closed-unions")]
    ok = rep["pass"] and unions and unions[0]["pass"]
    assert record(8, "toric push-forward", ok, f"{rep['count']} items in {secs:.1f}s {failed_ids(rep)}")


def test_09_lefschetz():
    rep, secs = timed(SuiteConfig("lefschetz"))
    nonneg = all(v >= 0 for r in rep["results"] for v in r["primitive_dims"].values())
    ok = rep["pass"] and nonneg
    assert record(9, "graded Lefschetz", ok, f"{rep['count']} instances in {secs:.1f}s {failed_ids(rep)}")


@pytest.mark.parametrize("suite", SUITES)
def test_10_determinism(suite):
    a = REPORTS.get(suite) or dumps(run_suite(SuiteConfig(suite)))
    b = dumps(run_suite(SuiteConfig(suite, jobs=2)))
    assert record(10, f"determinism [{suite}]", a == b, f"{len(a)} bytes, jobs 1 vs 2")
