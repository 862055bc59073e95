"""Command-line front end.

Exit codes: 0 Einstein nilradical (or success), 1 not an Einstein
nilradical (or a failed check), 2 undecided, 64 and up for bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import twostep
from .algebra import AlgebraError, LieAlgebra, load_algebra, parse_algebra
from .classify import classify
from .corpus import (basis_matrix, corpus_ids, gram_from_orthonormal_basis, named_algebra, named_algebras,
                     table_entries)
from .flow import FlowOptions, Tag, run_flow
from .nice import NotApplicable, Verdict, nice_test
from .preeinstein import UnsupportedBasis, ad_phi_spectrum, pre_einstein_diagonal
from .ricci import MetricError, nilsoliton_verify

EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66
EX_UNSUPPORTED = 67


class InputError(Exception):
    def __init__(self, msg: str, code: int = EX_DATAERR):
        super().__init__(msg)
        self.code = code


def _emit(obj, as_json: bool, text: str | None = None) -> None:
    if as_json or text is None:
        print(json.dumps(obj, indent=2, default=str))
    else:
        print(text)


def _read_algebra(path: str) -> LieAlgebra:
    if path == "-":
        return parse_algebra(sys.stdin.read())
    if path.startswith("corpus:"):
        key = path.split(":", 1)[1]
        if key not in corpus_ids():
            raise InputError(f"no corpus algebra named {key!r}", EX_NOINPUT)
        return named_algebra(key)
    try:
        return load_algebra(path)
    except FileNotFoundError:
        raise InputError(f"cannot open {path!r}", EX_NOINPUT) from None


def _number(x):
    if isinstance(x, str):
        return Fraction(x)
    return x


def read_metric(path: str, L: LieAlgebra):
    """A Gram matrix, from JSON ``{"gram": ...}`` / ``{"basis": ...}`` or a whitespace table.

    Basis entries are either coordinate lists or expressions such as
    ``"1/sqrt(2)*(X1+X2)"``; the metric makes them orthonormal.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise InputError(f"cannot open {path!r}", EX_NOINPUT) from None
    text = text.strip()
    if text.startswith("{"):
        doc = json.loads(text)
        if "gram" in doc:
            rows = [[_number(x) for x in r] for r in doc["gram"]]
            exact_input = all(isinstance(x, (int, Fraction)) for r in rows for x in r)
            return rows if exact_input else np.array(rows, dtype=float)
        if "basis" in doc:
            vecs = doc["basis"]
            if all(isinstance(v, str) for v in vecs):
                B = basis_matrix(vecs, L)
            else:
                B = np.array([[float(_number(x)) for x in v] for v in vecs]).T
            return gram_from_orthonormal_basis(B)
        raise InputError("metric JSON needs a 'gram' or a 'basis' key")
    rows = [[_number(x) if "/" in x else float(x) for x in line.split()] for line in text.splitlines() if line.strip()]
    if all(isinstance(x, Fraction) or float(x).is_integer() for r in rows for x in r):
        return [[Fraction(x) for x in r] for r in rows]
    return np.array(rows, dtype=float)


def _flow_opts(args) -> FlowOptions:
    kw = {}
    if getattr(args, "max_iter", None) is not None:
        kw["max_iter"] = args.max_iter
    if getattr(args, "tol", None) is not None:
        kw["tol_residual"] = args.tol
    if getattr(args, "trace", None):
        kw["trace"] = args.trace
    return FlowOptions(**kw)


# -- subcommands -------------------------------------------------------------


def cmd_pre_einstein(args) -> int:
    L = _read_algebra(args.algebra)
    pre = pre_einstein_diagonal(L)
    sp = ad_phi_spectrum(L, pre.phi, pre.der_basis)
    doc = {
        "phi_diagonal": [str(x) for x in pre.phi],
        "eigenvalue_type": [[str(lam), m] for lam, m in pre.eigenvalue_type],
        "positivity": {
            "phi_positive": sp.phi_positive,
            "ad_phi_nonneg": sp.ad_phi_nonneg,
            "witness": None if sp.witness is None else [[str(x) for x in r] for r in sp.witness.as_list()],
        },
        "ad_phi_spectrum": [[str(lam), d] for lam, d in sp.pairs],
    }
    text = "phi = diag(" + ", ".join(map(str, pre.phi)) + ")\n" + (
        "gate: pass" if sp.gate_passed else f"gate: FAIL (min ad_phi eigenvalue {sp.min_eigenvalue})")
    _emit(doc, args.json, text)
    return 0 if sp.gate_passed else 1


def cmd_nice_check(args) -> int:
    L = _read_algebra(args.algebra)
    try:
        cert = nice_test(L)
    except NotApplicable as exc:
        raise InputError(str(exc), EX_UNSUPPORTED) from None
    doc = cert.as_dict()
    _emit(doc, args.json, f"{cert.verdict.value} (m = {cert.m}, rank Y = {cert.rank_Y})")
    return {Verdict.EINSTEIN: 0, Verdict.NOT_EINSTEIN: 1, Verdict.NOT_NICE: EX_UNSUPPORTED}.get(cert.verdict, 2)


def cmd_nilsoliton_verify(args) -> int:
    L = _read_algebra(args.algebra)
    G = read_metric(args.metric, L)
    pre = pre_einstein_diagonal(L)
    try:
        rep = nilsoliton_verify(L, G, pre.phi, tol=args.tol if args.tol is not None else 1e-9)
    except MetricError as exc:
        raise InputError(str(exc)) from None
    _emit(rep.as_dict(), True)
    return 0 if rep.passed or rep.flat else 1


def cmd_flow(args) -> int:
    L = _read_algebra(args.algebra)
    out = run_flow(L, None, _flow_opts(args))
    doc = out.as_dict()
    text = f"{out.tag.value} after {doc['iterations']} iterations, residual {doc['residual']}"
    _emit(doc, args.json, text)
    return {Tag.CONVERGED: 0, Tag.DEGENERATED: 1, Tag.REJECTED: 1}.get(out.tag, 2)


def cmd_classify(args) -> int:
    L = _read_algebra(args.algebra)
    rep = classify(L, args.algebra, _flow_opts(args), tol=args.tol if args.tol is not None else 1e-8)
    doc = rep.as_dict()
    text = f"{rep.verdict.value} via {rep.path}"
    if rep.check is not None:
        text += f", c = {rep.check.c:.12g}, residual {rep.check.residual_rel:.3g}"
    if rep.evidence:
        text += f" [{rep.evidence}]"
    _emit(doc, args.json, text)
    return rep.exit_code


def _read_tuple(path: str) -> twostep.JTuple:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{"):
        doc = json.loads(stripped)
        if "J" in doc:
            return twostep.JTuple.of(int(doc["q"]), doc["J"])
    return twostep.to_j_tuple(parse_algebra(text))


def cmd_two_step(args) -> int:
    if args.action == "sample":
        t = twostep.sample_random(args.p, args.q, args.seed if args.seed is not None else 0)
        doc = {"tuple": t.to_json(), "algebra": twostep.from_j_tuple(t).to_json() if t.independent else None}
        _emit(doc, True)
        return 0
    if args.action == "dual":
        if not args.algebra:
            raise InputError("two-step dual needs an input file", EX_USAGE)
        d = twostep.dual(_read_tuple(args.algebra))
        _emit({"tuple": d.to_json(), "algebra": twostep.from_j_tuple(d).to_json()}, True)
        return 0
    stats = twostep.survey(args.p, args.q, args.n, args.seed if args.seed is not None else 0,
                           _flow_opts(args), workers=args.workers)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(stats.csv_rows())
    else:
        csv.writer(sys.stdout).writerows(stats.csv_rows())
    print(json.dumps(stats.summary(), indent=2), file=sys.stdout if args.csv else sys.stderr)
    return 0


def _corpus_entry(item):
    key, L, tol = item
    try:
        rep = classify(L, key, tol=tol)
        return key, rep.as_dict()
    except UnsupportedBasis as exc:
        return key, {"id": key, "verdict": Verdict.UNDECIDED.value, "error": str(exc)}


def cmd_corpus(args) -> int:
    corpus = named_algebras()
    if args.action == "list":
        doc = [{"id": k, "dim": L.dim, "brackets": len(L.structure)} for k, L in corpus.items()]
        _emit(doc, args.json, "\n".join(f"{d['id']}\t{d['dim']}\t{d['brackets']}" for d in doc))
        return 0
    tol = args.tol if args.tol is not None else 1e-8
    items = [(k, L, tol) for k, L in corpus.items()]
    if args.workers and args.workers > 1:
        with ThreadPoolExecutor(args.workers) as pool:
            reports = dict(pool.map(_corpus_entry, items))
    else:
        reports = dict(map(_corpus_entry, items))
    tables = []
    for e in table_entries():
        rep = nilsoliton_verify(e.algebra, e.gram(), pre_einstein_diagonal(e.algebra).phi, tol=1e-9)
        tables.append({"id": e.id, "pass": rep.passed, "c": rep.c, "residual_rel": rep.residual_rel})
    doc = {
        "reports": [reports[k] for k in corpus],
        "printed_bases": tables,
        "printed_bases_passing": sum(t["pass"] for t in tables),
    }
    lines = [f"{r['id']:<12} {r['verdict']}" for r in doc["reports"]]
    lines += [f"printed basis {t['id']:<4} {'pass' if t['pass'] else 'FAIL'}  residual {t['residual_rel']:.3g}"
              for t in tables]
    _emit(doc, args.json, "\n".join(lines))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nilsoliton", description="Einstein nilradicals and nilsoliton metrics")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--max-iter", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--trace", default=None, help="CSV file for (iteration, f, residual) rows")
    sub = ap.add_subparsers(dest="command", required=True)

    def algebra_cmd(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("algebra", help="relation-code or JSON file, '-' for stdin, or corpus:<id>")
        p.set_defaults(func=fn)
        return p

    algebra_cmd("pre-einstein", cmd_pre_einstein, "diagonal pre-Einstein derivation and the positivity gate")
    algebra_cmd("nice-check", cmd_nice_check, "nice-basis test with exact LP certificate")
    algebra_cmd("nilsoliton-verify", cmd_nilsoliton_verify, "check ric = c(id - phi)").add_argument(
        "--metric", required=True, help="Gram or orthonormal-basis file")
    algebra_cmd("flow", cmd_flow, "gradient flow over G_phi")
    algebra_cmd("classify", cmd_classify, "full decision pipeline")

    ts = sub.add_parser("two-step", parents=[common], help="two-step algebras from skew matrix tuples")
    ts.add_argument("action", choices=["sample", "dual", "survey"])
    ts.add_argument("algebra", nargs="?", help="input for 'dual': a J-tuple JSON or an algebra file")
    ts.add_argument("--p", type=int, default=3)
    ts.add_argument("--q", type=int, default=5)
    ts.add_argument("--n", type=int, default=100, help="survey size")
    ts.add_argument("--workers", type=int, default=None)
    ts.add_argument("--csv", default=None, help="write per-sample rows here instead of stdout")
    ts.set_defaults(func=cmd_two_step)

    cp = sub.add_parser("corpus", parents=[common], help="bundled algebras")
    cp.add_argument("action", choices=["list", "run"])
    cp.add_argument("--workers", type=int, default=None)
    cp.set_defaults(func=cmd_corpus)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EX_USAGE if exc.code else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except UnsupportedBasis as exc:
        print(f"unsupported-basis: {exc}", file=sys.stderr)
        return EX_UNSUPPORTED
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except (AlgebraError, MetricError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
