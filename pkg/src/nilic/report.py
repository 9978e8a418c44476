"""Report serialization and plain-text tables."""
from __future__ import annotations

import json

from .complexes import CohomologyDegree


def dumps(report) -> str:
    """Deterministic JSON: insertion order kept, fixed indentation, trailing newline."""
    return json.dumps(report, indent=2, ensure_ascii=False, default=str) + "\n"


def empty_report(suite: str = "") -> dict:
    return {"suite": suite, "config": {}, "pass": True, "count": 0, "failures": 0,
            "suite_checks": [], "results": []}


def cohomology_table(H: dict[int, CohomologyDegree] | dict, degrees=None) -> str:
    """One row per degree: dimension and the weight-graded dimensions."""
    rows = []
    keys = sorted(H) if degrees is None else list(degrees)
    for k in keys:
        h = H.get(k)
        if h is None:
            dim, weights = 0, {}
        elif isinstance(h, CohomologyDegree):
            dim, weights = h.dim, h.weights
        elif isinstance(h, dict):
            dim, weights = h.get("dim", 0), h.get("weight_dims", {})
        else:
            dim, weights = int(h), {}
        w = " ".join(f"{m}:{v}" for m, v in sorted(weights.items(), key=lambda kv: int(kv[0])))
        rows.append(f"{k:>6}  {dim:>5}  {w}")
    head = f"{'degree':>6}  {'dim':>5}  weights"
    return "\n".join([head] + rows)


def suite_table(report: dict) -> str:
    lines = [f"suite {report['suite']}: {report['count']} items, "
             f"{report['failures']} failures -> {'PASS' if report['pass'] else 'FAIL'}"]
    width = max([len(r["instance_id"]) for r in report["results"]] + [10])
    for r in report["results"]:
        lines.append(f"  {r['instance_id']:<{width}}  {'pass' if r['pass'] else 'FAIL'}")
        tables = r.get("per_degree") or {}
        if r["check_name"] in ("thm-g", "cone") and tables:
            for name, t in tables.items():
                lines.append(f"    {name}: " + ", ".join(f"H^{k}={v}" for k, v in t.items()))
        if r["check_name"] == "thm-g":
            for g, v in (r.get("verdicts") or {}).items():
                lines.append(f"    {g}: {'quasi-iso' if v.get('quasi_iso') else 'NOT quasi-iso'}")
    for c in report.get("suite_checks", []):
        lines.append(f"  [{'pass' if c['pass'] else 'FAIL'}] {c['check']}")
    return "\n".join(lines)
