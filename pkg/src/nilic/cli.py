"""Command-line front end.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage / schema / I/O
error, 3 an instance violates its invariants.
"""
from __future__ import annotations

import argparse
import json
import sys

from .complexes import FilteredComplex, cohomology, cone
from .instance import InstanceError
from .nilcomplex import build_ic, build_icc, ic_punc, icc_punc, icc_to_ic
from .pmts import ExprError, generate, parse_expr, polarizable_corpus, random_commuting_tuple
from .report import cohomology_table, dumps, suite_table
from .suites import SUITES, CorpusError, SuiteConfig, parse_instance_data, random_items, run_suite

EXIT_OK, EXIT_FINDING, EXIT_USAGE, EXIT_INSTANCE = 0, 1, 2, 3


def _gen_tuple(text: str):
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected seed,size,dim,labels")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected seed,size,dim,labels")
    return parts


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilic", description="Exact checks on linearized intersection complexes.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification suite over a corpus")
    v.add_argument("suite", choices=SUITES)
    src = v.add_mutually_exclusive_group()
    src.add_argument("--corpus", metavar="FILE", help="JSON instance, list of instances or generator expressions")
    src.add_argument("--gen", type=_gen_tuple, metavar="SEED,SIZE,DIM,LABELS",
                     help="generated corpus (size 0 means the whole polarizable enumeration)")
    v.add_argument("--out", metavar="PATH", help="write the JSON report here")
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--json", action="store_true", help="print the JSON report instead of the table")

    c = sub.add_parser("cohomology", help="cohomology table of a complex or of a complex built from an instance")
    c.add_argument("source", help="JSON file: a complex, or an instance")
    c.add_argument("--kind", choices=["ic", "icc", "ic-punc", "icc-punc", "cone"], default="ic")
    c.add_argument("--lam0", nargs="*", default=[], metavar="LABEL", help="localized labels for ic / icc")
    c.add_argument("--out", metavar="PATH")

    g = sub.add_parser("gen", help="write an instance or a corpus")
    g.add_argument("expr", nargs="?", help="generator expression, e.g. \"tensor(jordan(2,0,'1'), jordan(2,0,'2'))\"")
    g.add_argument("--random", type=lambda t: tuple(int(x) for x in t.split(",")), metavar="DIM,LABELS,SEED")
    g.add_argument("--corpus", choices=["polarizable", "random"])
    g.add_argument("--dim", type=int, default=81)
    g.add_argument("--labels", type=int, default=3)
    g.add_argument("--size", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", metavar="PATH", required=True)
    return p


def _write(path: str | None, text: str):
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    cfg = SuiteConfig(args.suite, args.corpus, args.gen, args.out, args.jobs)
    report = run_suite(cfg)
    _write(args.out, dumps(report))
    print(dumps(report) if args.json else suite_table(report), end="" if args.json else "\n")
    return EXIT_OK if report["pass"] else EXIT_FINDING


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def cmd_cohomology(args) -> int:
    data = _load_json(args.source)
    if isinstance(data, dict) and "nilpotents" in data:
        inst = parse_instance_data(data)
        idx = {l: i for i, l in enumerate(inst.labels)}
        try:
            lam0 = tuple(idx[l] for l in args.lam0)
        except KeyError as e:
            raise CorpusError(f"unknown label {e}") from e
        if args.kind == "ic":
            C = build_ic(inst, lam0)
        elif args.kind == "icc":
            C = build_icc(inst, lam0)
        elif args.kind == "ic-punc":
            C = ic_punc(inst).tot
        elif args.kind == "icc-punc":
            C = icc_punc(inst).tot
        else:
            C = cone(icc_to_ic(inst))
        name = f"{args.kind} of {inst.name or args.source}"
    elif isinstance(data, dict) and "degrees" in data and "terms" in data:
        try:
            C = FilteredComplex.from_json(data)
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusError(f"malformed complex: {e}") from e
        name = args.source
    else:
        raise CorpusError("expected a complex {degrees, terms, differentials} or an instance")
    H = cohomology(C)
    lo, hi = C.span
    print(name)
    print(cohomology_table(H, range(lo, hi + 1)))
    _write(args.out, dumps({"complex": name, "cohomology": {str(k): H[k].to_json() for k in sorted(H)}}))
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.corpus == "polarizable":
        out = [{"id": e, "expr": parse_expr(e), "text": e}
               for e in polarizable_corpus(args.dim, args.labels)]
        for o in out:
            o["expr"] = o.pop("text")
        text = dumps(out)
    elif args.corpus == "random":
        items = random_items(args.seed, args.size, min(args.dim, 8), args.labels)
        text = dumps([{"id": it["id"], "random": it["random"]} for it in items])
    elif args.random:
        if len(args.random) != 3:
            raise CorpusError("--random expects DIM,LABELS,SEED")
        text = dumps(random_commuting_tuple(*args.random).to_json())
    elif args.expr:
        text = dumps(generate(args.expr).to_json())
    else:
        raise CorpusError("gen needs an expression, --random or --corpus")
    _write(args.out, text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {"verify": cmd_verify, "cohomology": cmd_cohomology, "gen": cmd_gen}[args.command](args)
    except InstanceError as e:
        print(f"error: {e}", file=sys.stderr)
        if e.witness is not None:
            print(json.dumps(e.witness, default=str), file=sys.stderr)
        return EXIT_INSTANCE
    except (CorpusError, ExprError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
