"""Command-line front end.

Every command writes one JSON document (or a CSV stream) to stdout and any
diagnostics to stderr.  Floats are printed with 17 significant digits so a
value survives a round trip exactly.  Exit codes: 0 success, 1 a verify
suite failed, 2 precondition violation, 3 expression error, 4 schema or
I/O error, 5 convergence failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

from .convexity import ModulusQuery, SearchConfig, Variant, modulus_estimate
from .errors import RandConvexError, SchemaError
from .expr import parse_expr
from .ivt import LocalFunction, solve_ivt
from .lp import lp_modulus_report, uniform_convexity_audit
from .measure import FiniteProbSpace, L0Real, load_json
from .module import ModuleElement, RnModuleSpec, random_norm
from .suites import SUITES


@dataclass
class CommandResult:
    exit_code: int
    payload: str
    diagnostics: list[str] = field(default_factory=list)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits; non-finite floats become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format(obj, ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _values(x: L0Real) -> dict:
    return {a: float(v) for a, v in zip(x.space.atom_ids, x.values)}


def _load_module(path: str) -> RnModuleSpec:
    return RnModuleSpec.from_json(load_json(path))


def _load_l0(space: FiniteProbSpace, path: str) -> L0Real:
    return L0Real.from_json(space, load_json(path))


# ------------------------------------------------------------------ commands


def cmd_space_validate(args) -> CommandResult:
    doc = load_json(args.file)
    space = FiniteProbSpace.from_json(doc)
    out = {"valid": True, "atoms": len(space), "ids": list(space.atom_ids), "weights": list(space.weights)}
    if all(isinstance(e, dict) and "dim" in e for e in doc["atoms"]):
        spec = RnModuleSpec.from_json(doc)
        out["dims"] = list(spec.dims)
        out["support"] = spec.support().ordered()
    return CommandResult(0, dumps(out))


def cmd_norm(args) -> CommandResult:
    spec = _load_module(args.space)
    x = ModuleElement.from_json(spec, load_json(args.element))
    return CommandResult(0, dumps({"norm": _values(random_norm(x))}))


def cmd_modulus(args) -> CommandResult:
    spec = _load_module(args.space)
    space = spec.space
    ids = [s.strip() for s in args.set.split(",") if s.strip()]
    for a in ids:
        space.index(a)
    D = space.event(ids)
    eps = _load_l0(space, args.eps_file) if args.eps_file else L0Real.constant(space, args.eps)
    cfg = SearchConfig(args.grid, args.restarts, args.refine, args.seed)
    variant = Variant(args.variant)
    diagnostics: list[str] = []
    est = modulus_estimate(spec, ModulusQuery(D, eps, variant), cfg, diagnostics)
    rows = [(a, float(eps[a]), variant.value, float(est[a])) for a in D.ordered()]
    if args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["atom_id", "eps", "variant", "estimate"])
        for a, e, v, m in rows:
            w.writerow([a, format(e, ".17g"), v, format(m, ".17g")])
        if args.csv == "-":
            return CommandResult(0, buf.getvalue().rstrip("\n"), diagnostics)
        try:
            with open(args.csv, "w", newline="") as fh:
                fh.write(buf.getvalue())
        except OSError as exc:
            raise SchemaError(f"cannot write {args.csv}: {exc}") from exc
    payload = {
        "variant": variant.value,
        "seed": args.seed,
        "D": D.ordered(),
        "eps": {a: e for a, e, _, _ in rows},
        "estimate": {a: m for a, _, _, m in rows},
        "diagnostics": diagnostics,
    }
    return CommandResult(0, dumps(payload), diagnostics)


def cmd_ivt(args) -> CommandResult:
    space = FiniteProbSpace.from_json(load_json(args.space))
    ast = parse_expr(args.f)
    bindings = {}
    for item in args.bind:
        name, sep, path = item.partition("=")
        if not sep or not name:
            raise SchemaError(f"--bind expects NAME=FILE, got {item!r}")
        bindings[name] = _load_l0(space, path)
    f = LocalFunction.from_expr(space, ast, bindings)
    y1, y2, xi = (_load_l0(space, p) for p in (args.y1, args.y2, args.xi))
    eta = solve_ivt(f, y1, y2, xi, args.tol)
    resid = abs(f(eta) - xi)
    return CommandResult(0, dumps({"eta": _values(eta), "residual": _values(resid)}))


def cmd_verify(args) -> CommandResult:
    report = SUITES[args.suite](args.seed)
    lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in report.checks]
    diagnostics = [f"suite {report.suite}: {report.title}"] + lines
    return CommandResult(0 if report.passed else 1, dumps(report.to_json()), diagnostics)


def cmd_lp_modulus(args) -> CommandResult:
    spec = _load_module(args.space)
    report = uniform_convexity_audit(spec, args.p, args.eps, args.samples, args.seed)
    cfg = SearchConfig(random_restarts=args.restarts, refine_iters=args.refine, seed=args.seed)
    est = lp_modulus_report(spec, args.p, args.eps, cfg)
    report["lp_modulus"] = {k: est[k] for k in ("estimate", "doubled_budget_estimate", "budget_delta")}
    return CommandResult(0, dumps(report))


# -------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="randconvex", description="Random normed modules on finite probability spaces.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("space", help="probability space files")
    spsub = sp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    v = spsub.add_parser("validate", help="check a space or module file")
    v.add_argument("file")
    v.set_defaults(func=cmd_space_validate)

    n = sub.add_parser("norm", help="random norm of an element")
    n.add_argument("--space", required=True)
    n.add_argument("--element", required=True)
    n.set_defaults(func=cmd_norm)

    m = sub.add_parser("modulus", help="estimate the modulus of random convexity")
    m.add_argument("--space", required=True)
    m.add_argument("--set", required=True, help="comma-separated atom ids forming D")
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--eps", type=float)
    g.add_argument("--eps-file")
    m.add_argument("--variant", choices=[x.value for x in Variant], default=Variant.GEQ_SPHERE.value)
    m.add_argument("--grid", type=_positive_int, default=SearchConfig.grid_points)
    m.add_argument("--restarts", type=_positive_int, default=SearchConfig.random_restarts)
    m.add_argument("--refine", type=_positive_int, default=SearchConfig.refine_iters)
    m.add_argument("--seed", type=_seed, required=True)
    m.add_argument("--csv", help="write atom_id,eps,variant,estimate rows here ('-' for stdout)")
    m.set_defaults(func=cmd_modulus)

    i = sub.add_parser("ivt", help="solve f(eta) = xi atomwise between two brackets")
    i.add_argument("--space", required=True)
    i.add_argument("--f", required=True, help="expression in x and bound constants")
    i.add_argument("--bind", action="append", default=[], metavar="NAME=FILE")
    i.add_argument("--y1", required=True)
    i.add_argument("--y2", required=True)
    i.add_argument("--xi", required=True)
    i.add_argument("--tol", type=float, default=1e-12)
    i.set_defaults(func=cmd_ivt)

    ve = sub.add_parser("verify", help="run a seeded self-check suite")
    ve.add_argument("--suite", required=True, choices=sorted(SUITES))
    ve.add_argument("--seed", type=_seed, required=True)
    ve.set_defaults(func=cmd_verify)

    lp = sub.add_parser("lp-modulus", help="uniform convexity audit of L^p(S)")
    lp.add_argument("--space", required=True)
    lp.add_argument("--p", type=float, required=True)
    lp.add_argument("--eps", type=float, required=True)
    lp.add_argument("--samples", type=_positive_int, required=True)
    lp.add_argument("--seed", type=_seed, required=True)
    lp.add_argument("--restarts", type=_positive_int, default=2000)
    lp.add_argument("--refine", type=_positive_int, default=SearchConfig.refine_iters)
    lp.set_defaults(func=cmd_lp_modulus)
    return p


def run(argv: list[str]) -> CommandResult:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        return CommandResult(2, "", [f"usage error: {exc}"])
    except SystemExit as exc:  # --help
        return CommandResult(int(exc.code or 0), "")
    try:
        return args.func(args)
    except RandConvexError as exc:
        return CommandResult(exc.exit_code, "", [f"error: {exc}"])
    except (ValueError, OverflowError) as exc:
        return CommandResult(2, "", [f"error: {exc}"])


def main(argv: list[str] | None = None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    if result.payload:
        sys.stdout.write(result.payload + "\n")
    for line in result.diagnostics:
        sys.stderr.write(line + "\n")
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
