"""Command-line front end.

Documents are JSON objects::

    {"p": 3, "rank": 1, "level": 1, "kind": "stratified" | "loglattice",
     "matrices": [[[ [[exp, coeff], ...], ... ], ...], ...], "meta": {...}}

Commands that produce a document print it on stdout, or write it to
``--output`` and print the report instead.  Reports go to stdout as JSON;
wall time is printed to stderr.  Exit codes: 0 success, 1 mathematical
failure or negative verdict, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import covers, loglat, strat
from .errors import ParseError, StratError
from .laurent import Matrix
from .loglat import LogLattice
from .strat import StratifiedBundle

KINDS = ("stratified", "loglattice")


class CommandFailed(Exception):
    """Negative mathematical outcome; carries the report to print."""

    def __init__(self, report: dict):
        super().__init__(report.get("error", "failed"))
        self.report = report


# ---------------------------------------------------------------------------
# documents


def to_document(obj: Union[StratifiedBundle, LogLattice], meta: Optional[dict] = None) -> dict:
    if isinstance(obj, LogLattice):
        kind, mats = "loglattice", obj.L
    else:
        kind, mats = "stratified", obj.D
    meta = dict(meta or {})
    if obj.name and "name" not in meta:
        meta["name"] = obj.name
    return {
        "p": obj.p,
        "rank": obj.rank,
        "level": obj.level,
        "kind": kind,
        "matrices": [m.to_json() for m in mats],
        "meta": meta,
    }


def from_document(doc) -> Union[StratifiedBundle, LogLattice]:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    for key in ("p", "rank", "level", "kind", "matrices"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}")
    p, rank, level, kind = doc["p"], doc["rank"], doc["level"], doc["kind"]
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in (p, rank, level)):
        raise ParseError("p, rank and level must be integers")
    if kind not in KINDS:
        raise ParseError(f"kind must be one of {KINDS}")
    mats = doc["matrices"]
    if not isinstance(mats, list) or len(mats) != level + 1:
        raise ParseError(f"expected {level + 1} matrices")
    try:
        parsed = [Matrix.from_json(m, p) for m in mats]
    except (ValueError, TypeError, KeyError) as exc:
        raise ParseError(f"bad matrix entry: {exc}") from exc
    for i, m in enumerate(parsed):
        if m.shape != (rank, rank):
            raise ParseError(f"matrix {i} has shape {m.shape}, expected {(rank, rank)}")
    name = (doc.get("meta") or {}).get("name", "")
    try:
        if kind == "loglattice":
            return LogLattice(p, parsed, name=name)
        return StratifiedBundle(p, parsed, name=name)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def read_document(path: str) -> Union[StratifiedBundle, LogLattice]:
    try:
        text = sys.stdin.read() if path == "-" else open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON: {exc}") from exc
    return from_document(doc)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ParseError(f"window must look like LO..HI, got {text!r}") from None
    if lo > hi:
        raise ParseError("window lower end exceeds upper end")
    return lo, hi


def _as_bundle(obj) -> StratifiedBundle:
    return obj.bundle() if isinstance(obj, LogLattice) else obj


def _need_lattice(obj) -> LogLattice:
    if not isinstance(obj, LogLattice):
        raise ParseError("this command needs a loglattice document")
    return obj


def _section_json(s) -> list:
    return [f.to_pairs() for f in s]


# ---------------------------------------------------------------------------
# commands; each returns (report, document-or-None)


def cmd_validate(args):
    obj = read_document(args.file)
    if isinstance(obj, LogLattice):
        problems = obj.check()
        report = {"command": "validate", "kind": "loglattice", "passed": not problems, "failures": problems}
    else:
        window = parse_window(args.window) if args.window else strat.validation_window(obj)
        rep = strat.validate(obj, window)
        report = {"command": "validate", "kind": "stratified", **rep.to_json()}
    if not report["passed"]:
        raise CommandFailed(report)
    return report, None


def cmd_exponents(args):
    L = _need_lattice(read_document(args.file))
    rep = loglat.exponents(L, args.denom_bound)
    return {"command": "exponents", **rep.to_json()}, None


def _load_tau(spec: str, p: int) -> loglat.TauSection:
    if spec == "canonical":
        return loglat.TauSection.canonical()
    try:
        mapping = json.load(open(spec, encoding="utf-8"))
        return loglat.TauSection.from_mapping({Fraction(k): Fraction(v) for k, v in mapping.items()}, p)
    except (OSError, ValueError, AttributeError) as exc:
        raise ParseError(f"bad tau file {spec}: {exc}") from exc


def cmd_tau_extend(args):
    L = _need_lattice(read_document(args.file))
    tau = _load_tau(args.tau, L.p)
    bound = args.denom_bound or loglat.default_denom_bound(L.p, L.level)
    out = loglat.tau_extend(L, tau, bound)
    report = {
        "command": "tau-extend",
        "tau": args.tau,
        "denom_bound": bound,
        "exponents": loglat.exponents(out, bound).to_json(),
    }
    return report, to_document(out, {"provenance": f"tau-extend {args.tau}"})


def cmd_rs_test(args):
    E = _as_bundle(read_document(args.file))
    rep = loglat.rs_verdict(E, args.levels, max_pole=args.max_pole, max_iter=args.max_iter,
                            denom_bound=args.denom_bound)
    report = {"command": "rs-test", **rep.to_json()}
    if rep.verdict != loglat.RS:
        raise CommandFailed(report)
    return report, None


def cmd_cover(args):
    if args.kind == "kummer":
        try:
            e = int(args.data)
        except ValueError:
            raise ParseError(f"Kummer degree must be an integer, got {args.data!r}") from None
        spec = covers.CoverSpec.kummer(e, args.p)
        obj = covers.kummer_pushforward(e, args.p, args.level)
    else:
        spec = covers.CoverSpec.artin_schreier(args.data, args.p)
        obj = covers.artin_schreier_pushforward(spec.g, args.p, args.level)
    meta = {"provenance": "cover", "cover": spec.to_json()}
    report = {"command": "cover", "cover": spec.to_json(), "level": args.level, "rank": obj.rank}
    return report, to_document(obj, meta)


def cmd_pullback(args):
    obj = read_document(args.file)
    out = covers.pullback_kummer(obj, args.kummer)
    report = {"command": "pullback", "kummer": args.kummer, "kind": "loglattice" if isinstance(out, LogLattice) else "stratified"}
    return report, to_document(out, {"provenance": f"pullback kummer {args.kummer}"})


def cmd_descend(args):
    E = _as_bundle(read_document(args.file))
    window = parse_window(args.window) if args.window else E.default_window()
    try:
        d = strat.cartier_descend(E, window)
    except StratError as exc:
        raise CommandFailed({"command": "descend", "window": list(window), "error": str(exc)}) from exc
    report = {"command": "descend", "window": list(window), "frame": d.frame.to_json()}
    return report, to_document(d.bundle, {"provenance": "cartier descent"})


def cmd_horizontal(args):
    E = _as_bundle(read_document(args.file))
    window = parse_window(args.window) if args.window else E.default_window()
    basis = strat.horizontal_sections(E, window)
    report = {
        "command": "horizontal",
        "window": list(window),
        "dimension": len(basis),
        "basis": [_section_json(s) for s in basis],
    }
    return report, None


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stratlab", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def doc_cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("file", help="document path, or - for stdin")
        sp.set_defaults(fn=fn)
        return sp

    def out_opt(sp):
        sp.add_argument("-o", "--output", help="write the document here and print the report")

    sp = doc_cmd("validate", cmd_validate, "check operator identities or lattice invariants")
    sp.add_argument("--window", help="exponent window LO..HI for monomial sections")

    sp = doc_cmd("exponents", cmd_exponents, "exponent table of a log lattice")
    sp.add_argument("--denom-bound", type=int, default=None,
                    help="largest |numerator| and denominator (default: largest allowed by the level)")

    sp = doc_cmd("tau-extend", cmd_tau_extend, "move exponents into the image of a section tau")
    sp.add_argument("--tau", default="canonical", help="'canonical' or a JSON file mapping class to representative")
    sp.add_argument("--denom-bound", type=int, default=None)
    out_opt(sp)

    sp = doc_cmd("rs-test", cmd_rs_test, "regular-singularity evidence by lattice saturation")
    sp.add_argument("--levels", type=int, default=None, help="top level (default: document level)")
    sp.add_argument("--max-pole", type=int, default=None, help="default: 2*rank*p^(level+1)")
    sp.add_argument("--max-iter", type=int, default=64)
    sp.add_argument("--denom-bound", type=int, default=None)

    sp = sub.add_parser("cover", help="pushforward of a Kummer or Artin-Schreier cover")
    sp.add_argument("kind", choices=("kummer", "artin-schreier"))
    sp.add_argument("data", help="degree e, or g as a Laurent polynomial such as 'x^-1'")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--level", type=int, default=1)
    sp.set_defaults(fn=cmd_cover)
    out_opt(sp)

    sp = doc_cmd("pullback", cmd_pullback, "pull back along x = y^e")
    sp.add_argument("--kummer", type=int, required=True)
    out_opt(sp)

    sp = doc_cmd("descend", cmd_descend, "Cartier descent through a flat frame")
    sp.add_argument("--window", help="exponent window LO..HI; write --window=-5..5 for negative LO (default: +-rank*(pole+1)*p^level)")
    out_opt(sp)

    sp = doc_cmd("horizontal", cmd_horizontal, "horizontal sections within a window")
    sp.add_argument("--window", help="exponent window LO..HI; write --window=-5..5 for negative LO (default: +-rank*(pole+1)*p^level)")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    start = time.perf_counter()
    code = 0
    try:
        report, doc = args.fn(args)
        output = getattr(args, "output", None)
        if doc is None:
            print(dumps(report))
        elif output:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(dumps(doc) + "\n")
            print(dumps(report))
        else:
            print(dumps(doc))
            print(dumps(report), file=sys.stderr)
    except CommandFailed as exc:
        print(dumps(exc.report))
        code = 1
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    except StratError as exc:
        print(dumps({"command": args.command, "error": f"{type(exc).__name__}: {exc}"}))
        code = 1
    print(f"wall-time: {time.perf_counter() - start:.3f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
