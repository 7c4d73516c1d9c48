"""``systolattice`` command line.

Every subcommand prints records, one per line: JSON with ``--json`` (keys
sorted, so equal runs give equal bytes), aligned text otherwise.  Records
carry ``schema_version`` and, unless ``--deterministic``, a ``timestamp``.

Exit codes: 0 all PASS / HEURISTIC-PASS, 1 any FAIL, 2 usage or input
error (including ERROR certificates from violated preconditions), 3 any
HEURISTIC-INCONCLUSIVE or an exhausted enumeration budget.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from math import comb

import numpy as np

from . import __version__
from .errors import BudgetExceededError, LatticeFormatError, SystolatticeError
from .exterior import exterior_power_lattice, index_table
from .lattice import Lattice, dual, lll_transform, load_lattice, random_lattice
from .minima import ENUM_CAP, successive_minima
from .norms import DEFAULT_OPTIONS, NormSpec, OptimizerOptions
from .torus import FlatTorus, codim1_systole, conformal_systole, stable_systole
from .verifiers import (
    ERROR,
    FAIL,
    HEURISTIC_INCONCLUSIVE,
    SearchOptions,
    search_dual_critical,
    verify_banaszczyk_general,
    verify_corollary_c,
    verify_corollary_d,
    verify_hermite,
    verify_minkowski,
    verify_theorem_81,
    verify_theorem_a,
    verify_theorem_b,
    verify_theorem_e,
    verify_transference,
)

SCHEMA_VERSION = "1.0"

INEQ_CHOICES = ("thm-a", "cor-c", "thm-b", "cor-d", "thm-81", "thm-e", "transference", "banaszczyk", "minkowski", "hermite")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- schema -------------------------------------------------------------------

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}
_COMMON = {
    "schema_version": {"const": SCHEMA_VERSION},
    "timestamp": {"type": "string"},
}


def _record(name, props, required):
    return {
        "type": "object",
        "properties": {"record": {"const": name}, **_COMMON, **props},
        "required": ["record", "schema_version", *required],
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "systolattice record",
    "oneOf": [
        _record("lattice", {"dim": {"type": "integer"}, "basis": _MAT, "covolume": _NUM,
                            "transform": {"type": "array"}}, ["dim", "basis", "covolume"]),
        _record(
            "minima",
            {"norm": {"type": "string"}, "values": _VEC, "lower": _VEC, "upper": _VEC,
             "heuristic": {"type": "boolean"}, "vectors": _MAT, "coefficients": {"type": "array"}},
            ["norm", "values", "heuristic", "vectors"],
        ),
        _record(
            "systole",
            {"kind": {"enum": ["stable", "codim1", "conformal"]}, "n": {"type": "integer"},
             "p": {"type": "integer"}, "value": _NUM, "volume": _NUM, "heuristic": {"type": "boolean"},
             "bounds": {"type": ["array", "null"]}, "assumptions": {"type": "array"},
             "witness": _VEC, "coefficients": {"type": "array"}},
            ["kind", "n", "p", "value", "volume", "heuristic"],
        ),
        _record(
            "certificate",
            {"inequality_id": {"type": "string"}, "params": {"type": "object"}, "lhs": _NUM, "rhs": _NUM,
             "ratio": _NUM, "witnesses": {"type": "object"},
             "status": {"enum": ["PASS", "FAIL", "HEURISTIC-PASS", "HEURISTIC-INCONCLUSIVE", "ERROR"]},
             "heuristic": {"type": "boolean"}, "message": {"type": "string"}, "input": {"type": "object"}},
            ["inequality_id", "lhs", "rhs", "ratio", "status"],
        ),
        _record(
            "search",
            {"b": {"type": "integer"}, "objective": _NUM, "basis": _MAT, "start": {"type": "integer"},
             "seed": {"type": "integer"}, "iterations": {"type": "integer"}},
            ["b", "objective", "basis"],
        ),
        _record(
            "summary",
            {"inequality_id": {"type": "string"}, "count": {"type": "integer"}, "statuses": {"type": "object"},
             "ratio_min": _NUM, "ratio_median": _NUM, "ratio_max": _NUM, "dim": {"type": "integer"}},
            ["inequality_id", "count", "statuses"],
        ),
        _record("index", {"n": {"type": "integer"}, "p": {"type": "integer"},
                          "labels": {"type": "array", "items": {"type": "string"}}}, ["n", "p", "labels"]),
        _record("error", {"kind": {"type": "string"}, "message": {"type": "string"},
                          "partial": {}}, ["kind", "message"]),
    ],
}


# -- argument validation ------------------------------------------------------


def _ranged(kind, lo=None, hi=None, name="value"):
    def parse(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}") from None
        if (lo is not None and x < lo) or (hi is not None and x > hi):
            lo_s = "-inf" if lo is None else lo
            hi_s = "inf" if hi is None else hi
            raise argparse.ArgumentTypeError(f"{x} outside [{lo_s}, {hi_s}]")
        return x

    return parse


_pos_int = _ranged(int, 1)
_nonneg_int = _ranged(int, 0)
_pos_float = _ranged(float, 1e-300)


def _norm_arg(text):
    try:
        return NormSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON lines")
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp field")
    common.add_argument("--threads", type=_ranged(int, 1, 256), default=1, help="worker threads for batches")
    common.add_argument("--cap", type=_pos_int, default=ENUM_CAP, help="enumeration budget (nodes)")
    common.add_argument("--ascent-starts", type=_pos_int, default=DEFAULT_OPTIONS.starts, help="comass ascent starts")
    common.add_argument("--opt-seed", type=_nonneg_int, default=0, help="optimizer seed")
    common.add_argument("--tol", type=_ranged(float, 1e-15, 1e-2), default=DEFAULT_OPTIONS.tol,
                        help="optimizer tolerance")

    parser = argparse.ArgumentParser(prog="systolattice", description="Systoles and successive minima of flat tori.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--schema", action="store_true", help="print the JSON record schema and exit")
    sub = parser.add_subparsers(dest="command")

    def lattice_source(p, batch=False):
        p.add_argument("--lattice", metavar="FILE", help="lattice JSON file")
        if batch:
            p.add_argument("--random", type=_pos_int, metavar="COUNT", help="run on COUNT seeded random lattices")
            p.add_argument("--dim", type=_ranged(int, 1, 40), help="dimension for --random")
            p.add_argument("--seed", type=_nonneg_int, default=0, help="first seed for --random")

    p = sub.add_parser("dual", parents=[common], help="dual lattice")
    lattice_source(p)
    p = sub.add_parser("reduce", parents=[common], help="LLL-reduced basis")
    lattice_source(p)
    p.add_argument("--delta", type=_ranged(float, 0.2500001, 0.9999999), default=0.99)

    p = sub.add_parser("minima", parents=[common], help="successive minima")
    lattice_source(p, batch=True)
    p.add_argument("--norm", type=_norm_arg, default=NormSpec("euclidean"), help="euclidean | mass:P | comass:P")
    p.add_argument("--count", type=_pos_int, help="number of minima (default: all)")

    p = sub.add_parser("systole", parents=[common], help="systoles of the flat torus R^n / L")
    lattice_source(p, batch=True)
    p.add_argument("--p", type=_pos_int, required=True, help="degree")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--conformal", action="store_true", help="conformal systole (n = 2p)")
    g.add_argument("--codim1", action="store_true", help="codimension-1 systole via the dual lattice")

    p = sub.add_parser("verify", parents=[common], help="check an inequality and emit certificates")
    lattice_source(p, batch=True)
    p.add_argument("--ineq", choices=INEQ_CHOICES, required=True)
    p.add_argument("--p", type=_pos_int, help="degree p")
    p.add_argument("--q", type=_pos_int, help="degree q (thm-b; default n - p)")
    p.add_argument("--D", type=_pos_float, help="Minkowski parameter (default 1/lambda_1)")
    p.add_argument("--degrees", type=_pos_int, nargs="+", metavar="K", help="thm-a: factor degrees k_1 .. k_m")

    p = sub.add_parser("search-bm", parents=[common], help="search for dual-critical lattices")
    p.add_argument("--b", type=_ranged(int, 1, 12), required=True)
    p.add_argument("--starts", dest="search_starts", type=_pos_int, default=8, help="independent search starts")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--iters", type=_pos_int, default=400)
    p.add_argument("--method", choices=("lp", "random"), default="lp")

    p = sub.add_parser("report", parents=[common], help="ensemble summary of all applicable inequalities")
    p.add_argument("--count", type=_pos_int, default=10)
    p.add_argument("--dim", type=_ranged(int, 2, 8), required=True)
    p.add_argument("--degrees", type=_pos_int, nargs="*", help="degrees p for degree-dependent checks (default 1 2)")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--certificates", action="store_true", help="also emit every certificate")

    p = sub.add_parser("index", parents=[common], help="print the wedge coordinate order")
    p.add_argument("--n", type=_ranged(int, 1, 12), required=True)
    p.add_argument("--p", type=_ranged(int, 0, 12), required=True)
    return parser


# -- output -------------------------------------------------------------------


class Emitter:
    def __init__(self, json_mode, deterministic, stream=None):
        self.json = json_mode
        self.deterministic = deterministic
        self.stream = stream or sys.stdout
        self.stamp = None if deterministic else datetime.now(timezone.utc).isoformat()

    def __call__(self, kind, body):
        rec = {"record": kind, "schema_version": SCHEMA_VERSION, **body}
        if self.stamp is not None:
            rec["timestamp"] = self.stamp
        if self.json:
            print(json.dumps(rec, sort_keys=True), file=self.stream)
        else:
            print(_render(rec), file=self.stream)
        return rec


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.10g}"
    if isinstance(x, list):
        if x and isinstance(x[0], list):
            return "\n".join("    " + "  ".join(f"{v:>12.6g}" for v in row) for row in x)
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if isinstance(x, dict):
        return ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(x.items()))
    return str(x)


def _render(rec):
    kind = rec["record"]
    skip = {"record", "schema_version", "timestamp"}
    if kind == "certificate":
        return (
            f"{rec['inequality_id']:<14} {rec['status']:<22} lhs={rec['lhs']:<14.8g} "
            f"rhs={rec['rhs']:<14.8g} ratio={rec['ratio']:.6g}  {_fmt(rec['params'])}"
        )
    if kind == "summary":
        return (
            f"{rec['inequality_id']:<14} n={rec['count']:<5} ratio min/median/max = "
            f"{rec.get('ratio_min', float('nan')):.6g} / {rec.get('ratio_median', float('nan')):.6g} / "
            f"{rec.get('ratio_max', float('nan')):.6g}  {_fmt(rec['statuses'])}"
        )
    if kind == "minima":
        lines = [f"minima under {rec['norm']}" + ("  (heuristic)" if rec["heuristic"] else "")]
        lines.append(f"  {'i':>3}  {'value':>14}  {'lower':>14}  {'upper':>14}  coefficients")
        for i, (v, lo, hi, c) in enumerate(zip(rec["values"], rec["lower"], rec["upper"], rec["coefficients"]), 1):
            lines.append(f"  {i:>3}  {v:>14.10g}  {lo:>14.10g}  {hi:>14.10g}  {c}")
        return "\n".join(lines)
    width = max(len(k) for k in rec if k not in skip)
    lines = [f"[{kind}]"]
    for k in sorted(rec):
        if k in skip:
            continue
        v = _fmt(rec[k])
        lines.append(f"  {k:<{width}}  {v}" if "\n" not in v else f"  {k}\n{v}")
    return "\n".join(lines)


# -- commands -----------------------------------------------------------------


def _opts(args) -> OptimizerOptions:
    return OptimizerOptions(starts=args.ascent_starts, seed=args.opt_seed, tol=args.tol)


def _inputs(args):
    """(input descriptor, Lattice) pairs from --lattice or --random."""
    if getattr(args, "random", None):
        if args.lattice:
            raise UsageError("--lattice and --random are mutually exclusive")
        if not args.dim:
            raise UsageError("--random needs --dim")
        return [({"seed": args.seed + i, "dim": args.dim}, random_lattice(args.dim, args.seed + i))
                for i in range(args.random)]
    if not args.lattice:
        raise UsageError("--lattice FILE is required" + (" (or --random COUNT --dim B)" if hasattr(args, "random") else ""))
    try:
        return [({"file": args.lattice}, load_lattice(args.lattice))]
    except OSError as exc:
        raise UsageError(f"--lattice: cannot read {args.lattice}: {exc.strerror}") from None
    except LatticeFormatError as exc:
        raise UsageError(f"--lattice {args.lattice}: {exc}") from None


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map keeps input order


def _lattice_body(L: Lattice, **extra):
    return {"dim": L.dim, "basis": L.basis.tolist(), "covolume": L.covolume, **extra}


def cmd_dual(args, emit):
    (_, L), = _inputs(args)
    emit("lattice", _lattice_body(dual(L)))
    return EXIT_OK


def cmd_reduce(args, emit):
    (_, L), = _inputs(args)
    B, U = lll_transform(L.basis, args.delta)
    emit("lattice", _lattice_body(Lattice(B), transform=U.tolist()))
    return EXIT_OK


def _norm_lattice(L, norm: NormSpec, opts):
    """For mass:P / comass:P the input is the base lattice and the norm lives on Lambda^P."""
    if norm.kind in ("mass", "comass"):
        if norm.p > L.dim:
            raise UsageError(f"--norm {norm}: degree exceeds lattice dimension {L.dim}")
        return exterior_power_lattice(L, norm.p), NormSpec(norm.kind, p=norm.p, n=L.dim, opts=opts)
    return L, norm


def cmd_minima(args, emit):
    items = _inputs(args)
    opts = _opts(args)

    def run(item):
        desc, L = item
        E, norm = _norm_lattice(L, args.norm, opts)
        k = args.count
        if k is not None and k > E.dim:
            raise UsageError(f"--count {k} exceeds lattice rank {E.dim}")
        return desc, successive_minima(E, norm, k, args.cap)

    for desc, prof in _pmap(run, items, args.threads):
        emit("minima", {**prof.to_json(), "input": desc})
    return EXIT_OK


def cmd_systole(args, emit):
    items = _inputs(args)
    opts = _opts(args)

    def run(item):
        desc, L = item
        T = FlatTorus(L)
        if args.p > T.n:
            raise UsageError(f"--p {args.p} exceeds dimension {T.n}")
        if args.conformal:
            if T.n != 2 * args.p:
                raise UsageError(f"--conformal needs n = 2p, got n={T.n}, p={args.p}")
            return desc, conformal_systole(T, args.p, opts, args.cap)
        if args.codim1:
            if args.p != T.n - 1:
                raise UsageError(f"--codim1 needs p = n - 1 = {T.n - 1}")
            return desc, codim1_systole(T, args.cap)
        return desc, stable_systole(T, args.p, opts, args.cap)

    code = EXIT_OK
    for desc, rep in _pmap(run, items, args.threads):
        emit("systole", {**rep.to_json(), "input": desc})
    return code


def _verify_one(ineq, L, args, opts, cap):
    T = FlatTorus(L)
    n = L.dim
    p = getattr(args, "p", None)
    if ineq == "transference":
        return verify_transference(L, cap)
    if ineq == "minkowski":
        return [verify_minkowski(L, getattr(args, "D", None), cap)]
    if ineq == "hermite":
        return [verify_hermite(L, cap)]
    if ineq == "thm-a":
        degrees = getattr(args, "degrees", None)
        if not degrees:
            raise UsageError("thm-a needs --degrees K1 K2 ...")
        if sum(degrees) > n:
            raise UsageError(f"--degrees must sum to at most n = {n}, got {sum(degrees)}")
        return [verify_theorem_a(T, degrees, opts, cap)]
    if ineq == "cor-c":
        return [verify_corollary_c(T, cap=cap)]
    if ineq == "cor-d":
        if n % 2:
            raise UsageError(f"cor-d needs even n, got {n}")
        return [verify_corollary_d(T, opts, cap)]
    if ineq == "banaszczyk":
        p = p or 1
        if p > n:
            raise UsageError(f"--p {p} exceeds dimension {n}")
        return verify_banaszczyk_general(L, p, opts, cap)
    if ineq == "thm-b":
        if p is None:
            raise UsageError("thm-b needs --p")
        q = args.q if getattr(args, "q", None) else n - p
        if p + q != n:
            raise UsageError(f"thm-b needs p + q = n = {n}")
        return [verify_theorem_b(T, p, q, opts=opts, cap=cap)]
    if ineq == "thm-81":
        p = p or n // 3
        if n != 3 * p:
            raise UsageError(f"thm-81 needs n = 3p, got n={n}, p={p}")
        return [verify_theorem_81(T, p, opts, cap)]
    if ineq == "thm-e":
        if p is None:
            raise UsageError("thm-e needs --p")
        if n % p:
            raise UsageError(f"thm-e needs p | n, got n={n}, p={p}")
        return [verify_theorem_e(T, p, opts, cap)]
    raise UsageError(f"unknown inequality {ineq}")


def _exit_for(statuses):
    statuses = set(statuses)
    if FAIL in statuses:
        return EXIT_FAIL
    if ERROR in statuses:
        return EXIT_USAGE
    if HEURISTIC_INCONCLUSIVE in statuses:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_verify(args, emit):
    items = _inputs(args)
    opts = _opts(args)
    results = _pmap(lambda it: (it[0], _verify_one(args.ineq, it[1], args, opts, args.cap)), items, args.threads)
    statuses = []
    for desc, certs in results:
        for c in certs:
            emit("certificate", {**c.to_json(), "input": desc})
            statuses.append(c.status)
    return _exit_for(statuses)


def cmd_search(args, emit):
    res = search_dual_critical(
        args.b, SearchOptions(starts=args.search_starts, seed=args.seed, iters=args.iters, method=args.method)
    )
    emit("search", res.to_json())
    return EXIT_OK


def _report_plan(n, degrees):
    plan = [("transference", None), ("minkowski", None), ("hermite", None), ("cor-c", None)]
    for p in degrees:
        if p + 1 <= n:
            plan.append(("thm-a", (1, p)))
        if 1 <= p < n:
            plan.append(("thm-b", p))
            plan.append(("banaszczyk", p))
        if n % p == 0:
            plan.append(("thm-e", p))
    if n % 2 == 0:
        plan.append(("cor-d", None))
    if n % 3 == 0:
        plan.append(("thm-81", n // 3))
    return plan


def cmd_report(args, emit):
    n = args.dim
    degrees = args.degrees or [p for p in (1, 2) if p < n]
    plan = _report_plan(n, degrees)
    opts = _opts(args)

    def run(i):
        L = random_lattice(n, args.seed + i)
        out = []
        for ineq, p in plan:
            if ineq == "thm-a":
                ns = argparse.Namespace(p=None, q=None, D=None, degrees=list(p))
            else:
                ns = argparse.Namespace(p=p, q=None, D=None, degrees=None)
            for c in _verify_one(ineq, L, ns, opts, args.cap):
                out.append(({"seed": args.seed + i, "dim": n}, c))
        return out

    rows = [r for chunk in _pmap(run, list(range(args.count)), args.threads) for r in chunk]
    if args.certificates:
        for desc, c in rows:
            emit("certificate", {**c.to_json(), "input": desc})
    by_id = {}
    for _, c in rows:
        by_id.setdefault(c.inequality_id, []).append(c)
    for iid in sorted(by_id):
        certs = by_id[iid]
        ratios = [c.ratio for c in certs if c.status != ERROR]
        statuses = {}
        for c in certs:
            statuses[c.status] = statuses.get(c.status, 0) + 1
        body = {"inequality_id": iid, "count": len(certs), "statuses": statuses, "dim": n}
        if ratios:
            body.update(ratio_min=min(ratios), ratio_median=statistics.median(ratios), ratio_max=max(ratios))
        emit("summary", body)
    return _exit_for(c.status for _, c in rows)


def cmd_index(args, emit):
    if args.p > args.n:
        raise UsageError(f"--p {args.p} exceeds --n {args.n}")
    emit("index", {"n": args.n, "p": args.p, "labels": index_table(args.n, args.p)})
    return EXIT_OK


COMMANDS = {
    "dual": cmd_dual,
    "reduce": cmd_reduce,
    "minima": cmd_minima,
    "systole": cmd_systole,
    "verify": cmd_verify,
    "search-bm": cmd_search,
    "report": cmd_report,
    "index": cmd_index,
}


def main(argv=None, stream=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the diagnostic
        return EXIT_USAGE if exc.code else EXIT_OK
    out = stream or sys.stdout
    if args.schema:
        print(json.dumps(SCHEMA, indent=2, sort_keys=True), file=out)
        return EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        print("systolattice: error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    emit = Emitter(args.json, args.deterministic, out)
    try:
        return COMMANDS[args.command](args, emit)
    except UsageError as exc:
        print(f"systolattice {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceededError as exc:
        emit("error", {"kind": "budget", "message": str(exc), "partial": exc.partial})
        print(f"systolattice {args.command}: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (SystolatticeError, ValueError) as exc:
        print(f"systolattice {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
