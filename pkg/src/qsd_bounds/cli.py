"""
Command-line front end.

Exit codes: 0 success, 1 numerical failure (non-converged oracle,
inconsistent internal POVM), 2 input error (unreadable or invalid file,
bad arguments).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiment import run_experiment, to_csv
from .inconclusive import ContractError, IncParams, pcuip
from .io import SchemaError, load_state_set, save_povm
from .minerr import ConsistencyError, minerr_bounds
from .oracle import OracleNotConverged, inc_oracle, minerr_oracle
from .states import StateSetError, validate

EXIT_OK, EXIT_NUMERIC, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _load(path: str):
    try:
        states = load_state_set(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except (SchemaError, StateSetError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    diag = validate(states)
    if not diag.ok:
        lines = "\n".join(f"  {c.name}: {c.magnitude:.3e} {c.detail}".rstrip() for c in diag.failures())
        raise InputError(f"{path}: invalid state set\n{lines}")
    return states


def _oracle_call(fn, *args, **kwargs):
    """Run an oracle; on non-convergence keep the loose certificate and flag it."""
    try:
        return fn(*args, **kwargs), True
    except OracleNotConverged as exc:
        print(f"warning: {exc}", file=sys.stderr)
        return exc.certificate, False


def _write_json(path: str | None, doc: dict) -> None:
    if path:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def cmd_validate(args) -> int:
    try:
        states = load_state_set(args.file)
    except OSError as exc:
        raise InputError(f"{args.file}: {exc.strerror or exc}") from exc
    except (SchemaError, StateSetError) as exc:
        raise InputError(f"{args.file}: {exc}") from exc
    diag = validate(states)
    print(diag)
    print(f"M={states.size} N={states.dim}: {'valid' if diag.ok else 'INVALID'}")
    return EXIT_OK if diag.ok else EXIT_INPUT


def cmd_bounds_me(args) -> int:
    states = _load(args.file)
    rep = minerr_bounds(states)
    cert, ok = _oracle_call(minerr_oracle, states, tol=args.tol, max_iters=args.max_iters)
    print(f"pcup        {rep.pcup:.12f}")
    print(f"pcup_prime  {rep.pcup_prime:.12f}  (k={rep.pcup_prime_index})")
    print(f"qiu         {rep.qiu:.12f}")
    print(f"pclp        {rep.pclp:.12f}")
    print(f"srm         {rep.srm_value:.12f}")
    print(f"oracle      {cert.primal_value:.12f} .. {cert.dual_value:.12f}  (gap {cert.gap:.2e})")
    print(f"pcup - pclp {rep.gap:.3e}  attained={rep.attained}")
    if rep.pcup_exceeds_one:
        print("note: pcup exceeds 1 (the bound is vacuous here)")
    doc = rep.as_dict() | {"oracle": cert.as_dict(), "oracle_converged": ok}
    _write_json(args.json, doc)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_bounds_inc(args) -> int:
    states = _load(args.file)
    rep = pcuip(states, IncParams(args.p, args.iters))
    cert, ok = _oracle_call(inc_oracle, states, args.p, tol=args.tol, max_iters=args.max_iters)
    print(f"p       {args.p}")
    print(f"J       {args.iters}")
    print(f"pcuip   {rep.pcuip:.12f}")
    print(f"pclip   {rep.pclip:.12f}")
    print(f"oracle  {cert.primal_value:.12f} .. {cert.dual_value:.12f}  (gap {cert.gap:.2e})")
    print(f"bracket [{rep.bracket[0]:.12g}, {rep.bracket[1]:.12g}]")
    print("s(a) trace:")
    for e in rep.s_evaluations:
        print(f"  a={e.a:<20.12g} s={e.s:<16.12f} tau={e.tau:<14.10f} tau+={e.tau_plus:.10f}")
    doc = rep.as_dict() | {"oracle": cert.as_dict(), "oracle_converged": ok}
    _write_json(args.json, doc)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_oracle(args) -> int:
    states = _load(args.file)
    if args.kind == "inc":
        if args.p is None:
            raise InputError("oracle inc requires --p")
        cert, ok = _oracle_call(inc_oracle, states, args.p, tol=args.tol, max_iters=args.max_iters)
    else:
        cert, ok = _oracle_call(minerr_oracle, states, tol=args.tol, max_iters=args.max_iters)
    print(f"primal      {cert.primal_value:.12f}")
    print(f"dual        {cert.dual_value:.12f}")
    print(f"gap         {cert.gap:.3e}")
    if args.kind == "inc":
        print(f"a           {cert.dual_scalar:.12g}")
    print(f"iterations  {cert.iterations}")
    if args.povm_out:
        save_povm(cert.povm, args.povm_out)
    _write_json(args.json, cert.as_dict() | {"converged": ok})
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_experiment(args) -> int:
    try:
        cells = run_experiment(
            args.M,
            args.R,
            n=args.N,
            jobs=args.jobs,
            trials=args.trials,
            seed=args.seed,
            p_range=(args.p_lo, args.p_hi),
            J=args.iters,
            max_iters=args.max_iters,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    text = to_csv(cells, timing=args.timing)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for c in cells:
        if c.excluded:
            print(f"M={c.config.M} R={c.config.R}: {c.excluded} trial(s) excluded (oracle not converged)", file=sys.stderr)
    violations = sum(c.violations for c in cells)
    if violations:
        print(f"error: {violations} inequality violation(s)", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsd-bounds", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a state-set file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bounds", help="compute bounds for a state-set file")
    bsub = p.add_subparsers(dest="kind", required=True)
    me = bsub.add_parser("me", help="minimum-error bounds")
    me.add_argument("file")
    me.add_argument("--json", metavar="OUT", help="also write a JSON report")
    me.add_argument("--tol", type=float, default=1e-8, help="oracle gap tolerance")
    me.add_argument("--max-iters", type=int, default=20000)
    me.set_defaults(func=cmd_bounds_me)
    inc = bsub.add_parser("inc", help="bounds at a fixed inconclusive rate")
    inc.add_argument("file")
    inc.add_argument("--p", type=float, required=True, help="inconclusive probability")
    inc.add_argument("--iters", type=int, default=3, help="search rounds J")
    inc.add_argument("--json", metavar="OUT")
    inc.add_argument("--tol", type=float, default=1e-6)
    inc.add_argument("--max-iters", type=int, default=20000)
    inc.set_defaults(func=cmd_bounds_inc)

    p = sub.add_parser("oracle", help="certified optimum")
    p.add_argument("kind", choices=("me", "inc"))
    p.add_argument("file")
    p.add_argument("--p", type=float)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=20000)
    p.add_argument("--json", metavar="OUT")
    p.add_argument("--povm-out", metavar="OUT", help="write the primal POVM")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="randomized comparison, CSV output")
    p.add_argument("--M", type=int, nargs="+", required=True)
    p.add_argument("--R", type=int, nargs="+", required=True)
    p.add_argument("--N", type=int, default=None, help="dimension (default max(M, R+1) per cell)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-lo", type=float, default=0.0)
    p.add_argument("--p-hi", type=float, default=0.2)
    p.add_argument("--iters", type=int, default=3, help="search rounds J")
    p.add_argument("--max-iters", type=int, default=20000, help="oracle iteration cap")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="append a wall-clock column")
    p.add_argument("--out", metavar="CSV")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConsistencyError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
