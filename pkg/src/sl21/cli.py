"""Command line: ``sl21 {info,verify,invariant,sprime,mdim}``.

Common flags ``--ell --tol --precision --seed --out --jobs`` may also be set
through ``SL21_ELL``, ``SL21_TOL`` and so on; flags win over the environment.
Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .modularity import DegreeError
from .mtrace import TraceError, module_modified_dim, modified_dim, sprime_diagrammatic, sprime_formula
from .repmod import (
    ModuleError,
    MorphismError,
    Weight,
    is_typical,
    module_from_descriptor,
    typical_module,
)
from .scalar import CORRUPTIONS, Context, ScalarError, fraction_str, scalar_to_json
from .tangle import Diagram, DiagramError, evaluate, evaluate_renormalized
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (ModuleError, DiagramError, DegreeError, TraceError, MorphismError, ScalarError, ValueError,
                KeyError, OSError, json.JSONDecodeError)


class InputError(Exception):
    """Bad command-line input; reported with exit code 2."""


def _env(name: str, default: Any, conv: Callable[[str], Any]) -> Any:
    raw = os.environ.get(f"SL21_{name.upper()}")
    if raw is None:
        return default
    try:
        return conv(raw)
    except ValueError as exc:
        raise InputError(f"bad value for SL21_{name.upper()}: {raw!r}") from exc


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("context")
    g.add_argument("--ell", type=int, default=None, help="odd root-of-unity order >= 3 (default 3)")
    g.add_argument("--tol", type=float, default=None,
                   help="tolerance (default 1e-20, or 1e-8 at 53-bit precision)")
    g.add_argument("--precision", type=int, default=None, help="bits; 53 selects complex128 (default 106)")
    g.add_argument("--seed", type=int, default=None, help="seed for all randomness (default 0)")
    g.add_argument("--out", type=Path, default=None, help="also write the JSON result to this file")
    g.add_argument("--jobs", type=int, default=None, help="worker processes for Kirby sums (default 1)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="sl21", description="Ribbon and relative modular structure of "
                                     "unrolled quantum sl(2|1) at odd roots of unity.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("info", parents=[common], help="dimension, degree, weights and parities of a module")
    p.add_argument("module", help="JSON descriptor or shorthand: 'typical:1/5,2/7', 'eps:1,0,0', 'unit', "
                                  "optionally suffixed with '*' for the dual")

    p = sub.add_parser("verify", parents=[common], help="run a property suite and report pass/fail per check")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--corrupt", choices=sorted(c for c in CORRUPTIONS if c), default=None,
                   help="use a deliberately wrong convention (negative control)")

    p = sub.add_parser("invariant", parents=[common], help="evaluate a diagram JSON file")
    p.add_argument("diagram", type=Path)
    p.add_argument("--cut", default=None, help="LEVEL,POSITION of a typical edge; gives F' instead of F")

    p = sub.add_parser("sprime", parents=[common], help="S'(V_mu, V_mu') by formula and by diagram")
    p.add_argument("mu")
    p.add_argument("mu_prime")

    p = sub.add_parser("mdim", parents=[common], help="modified dimension d(mu)")
    p.add_argument("mu")
    return parser


def make_context(args: argparse.Namespace) -> Context:
    ell = args.ell if args.ell is not None else _env("ell", 3, int)
    precision = args.precision if args.precision is not None else _env("precision", 106, int)
    tol = args.tol if args.tol is not None else _env("tol", 1e-8 if precision == 53 else 1e-20, float)
    seed = args.seed if args.seed is not None else _env("seed", 0, int)
    corrupt = getattr(args, "corrupt", None) or ""
    try:
        return Context(ell, tol=tol, precision=precision, seed=seed, corrupt=corrupt)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _jobs(args: argparse.Namespace) -> int:
    jobs = args.jobs if args.jobs is not None else _env("jobs", 1, int)
    if jobs < 1:
        raise InputError("--jobs must be >= 1")
    return jobs


def _out_path(args: argparse.Namespace) -> Path | None:
    if args.out is not None:
        return args.out
    raw = os.environ.get("SL21_OUT")
    return Path(raw) if raw else None


def scalar_json(z: Any) -> dict:
    c = complex(z)
    return {"exact": scalar_to_json(z), "re": float(f"{c.real:.15e}"), "im": float(f"{c.imag:.15e}")}


def parse_module(ctx: Context, text: str) -> tuple[Any, dict]:
    """Module from a JSON descriptor or a shorthand; atypical typical weights are allowed."""
    text = text.strip()
    if text.startswith("{"):
        desc = json.loads(text)
    else:
        dual = text.endswith("*")
        body = text[:-1] if dual else text
        form, _, rest = body.partition(":")
        if form == "typical":
            desc = {"form": "typical", "mu": rest.split(",")}
        elif form == "eps":
            desc = {"form": "eps", "t": [int(x) for x in rest.split(",")]}
        elif form == "unit":
            desc = {"form": "unit"}
        else:
            raise InputError(f"cannot parse module {text!r}")
        if dual:
            desc = {"form": "dual", "of": desc}
    inner = desc
    while inner.get("form") == "dual":
        inner = inner["of"]
    if inner.get("form") != "typical":
        return module_from_descriptor(ctx, desc), {}
    mu = Weight.parse(inner["mu"])
    if not is_typical(ctx, mu):
        if inner is not desc:
            raise InputError("duals of atypical weights are not supported")
        return typical_module(ctx, mu, allow_atypical=True), {"typical": False}
    return module_from_descriptor(ctx, desc), {"typical": True}


def cmd_info(args: argparse.Namespace, ctx: Context) -> tuple[dict, int]:
    M, extra = parse_module(ctx, args.module)
    typical = extra.get("typical")
    out = {
        "ell": ctx.ell,
        "module": args.module,
        "form": M.form,
        "dim": M.dim,
        "gdegree": [fraction_str(x) for x in M.gdegree],
        "weights": [[fraction_str(x) for x in w] for w in M.hweights],
        "parities": [int(p) for p in M.parity],
    }
    if typical is not None:
        out["typical"] = bool(typical)
    return out, EXIT_OK


def cmd_verify(args: argparse.Namespace, ctx: Context) -> tuple[dict, int]:
    rep = run_suite(args.suite, ctx, jobs=_jobs(args), tol=args.tol)
    out = rep.to_json()
    if ctx.corrupt:
        out["corrupt"] = ctx.corrupt
    return out, EXIT_OK if rep.passed else EXIT_FAIL


def cmd_invariant(args: argparse.Namespace, ctx: Context) -> tuple[dict, int]:
    D = Diagram.loads(ctx, args.diagram.read_text())
    out: dict[str, Any] = {"ell": ctx.ell, "diagram": str(args.diagram)}
    if args.cut is not None:
        try:
            level, pos = (int(x) for x in args.cut.split(","))
        except ValueError as exc:
            raise InputError(f"--cut must be LEVEL,POSITION, got {args.cut!r}") from exc
        out["cut"] = [level, pos]
        out["F_prime"] = scalar_json(evaluate_renormalized(D, (level, pos)))
    else:
        f = evaluate(D)
        if f.dom.dim == 1 and f.cod.dim == 1:
            out["F"] = scalar_json(f.op.trace())
        else:
            out["F"] = f.to_json()
    return out, EXIT_OK


def cmd_sprime(args: argparse.Namespace, ctx: Context) -> tuple[dict, int]:
    mu, mup = Weight.parse(args.mu), Weight.parse(args.mu_prime)
    V, W = typical_module(ctx, mu), typical_module(ctx, mup)
    sf = sprime_formula(ctx, mu, mup)
    sd = sprime_diagrammatic(V, W)
    rel = float(abs(sd - sf)) / max(1.0, float(abs(sf)))
    return {"ell": ctx.ell, "mu": mu.to_json(), "mu_prime": mup.to_json(), "formula": scalar_json(sf),
            "diagrammatic": scalar_json(sd), "relative_difference": float(f"{rel:.6e}")}, EXIT_OK


def cmd_mdim(args: argparse.Namespace, ctx: Context) -> tuple[dict, int]:
    mu = Weight.parse(args.mu)
    d = modified_dim(ctx, mu)
    out = {"ell": ctx.ell, "mu": mu.to_json(), "d": scalar_json(d)}
    if is_typical(ctx, mu):
        out["d_module"] = scalar_json(module_modified_dim(typical_module(ctx, mu)))
    return out, EXIT_OK


COMMANDS = {"info": cmd_info, "verify": cmd_verify, "invariant": cmd_invariant, "sprime": cmd_sprime,
            "mdim": cmd_mdim}


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        ctx = make_context(args)
        out, code = COMMANDS[args.command](args, ctx)
        text = dumps(out)
        path = _out_path(args)
        if path is not None:
            path.write_text(text)
    except InputError as exc:
        print(f"sl21: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        print(f"sl21: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
