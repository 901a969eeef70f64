"""``nobacktrack`` command line.

Every subcommand reads or writes the chain JSON format, takes ``--seed``
(default 0) for anything random, and exits 0 when all checks in its report
pass, 1 when a check fails and 2 on usage, input or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import examples as ex
from . import reproduce as rp
from .chain import (
    TOL_LINEAR,
    check_detailed_balance,
    check_invariant,
    check_irreducible,
    period,
    stationary_distribution,
)
from .errors import ChainError, NotReversible, ParseError
from .jsonio import chain_to_dict, dump_json, expanded_to_dict, load_chain
from .no_backtrack import build_nobacktrack, identity_kernel, lift_function, liu_kernel, verify_update_conditions
from .peskun import block_statistics, delta_coupled_simulate, elementary_pair, segment_blocks
from .variance import exact_asymptotic_variance, replicated_variance

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(report: dict, args, csv_rows=None) -> None:
    if args.format == "csv" and csv_rows is not None:
        text = _to_csv(csv_rows)
        if args.out:
            _write(args.out, text)
        else:
            sys.stdout.write(text)
    else:
        text = dump_json(report, args.out) if args.out else dump_json(report)
        if not args.out:
            sys.stdout.write(text)


def _write(path, text: str) -> None:
    dump_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(dump_dir, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _to_csv(rows: list) -> str:
    buf = io.StringIO()
    cols = []
    for r in rows:
        cols += [k for k in r if k not in cols]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (list, dict)):
        return dump_json(v).strip().replace("\n", "").replace("  ", "")
    if isinstance(v, float):
        return repr(v)
    return v


def _pi_for(chain, pi):
    return stationary_distribution(chain) if pi is None else pi


def cmd_analyze(args) -> int:
    chain, pi, _ = load_chain(args.chain, tol=args.tol_stochastic)
    irreducible = check_irreducible(chain)
    pi = _pi_for(chain, pi) if irreducible or pi is not None else None
    report = {
        "file": args.chain,
        "n_states": chain.n,
        "stochastic": True,
        "irreducible": irreducible,
        "period": period(chain) if irreducible else None,
        "pi": pi,
        "invariant": check_invariant(chain, pi, args.tol) if pi is not None else None,
        "reversible": check_detailed_balance(chain, pi, args.tol) if pi is not None else False,
    }
    print(f"reversible: {str(report['reversible']).lower()}, irreducible: {str(irreducible).lower()}",
          file=sys.stderr)
    _emit(report, args, [{"state": s, "pi": None if pi is None else float(p)}
                         for s, p in zip(chain.states, pi if pi is not None else [None] * chain.n)])
    return EXIT_PASS


def cmd_lift(args) -> int:
    chain, pi, f = load_chain(args.chain, tol=args.tol_stochastic)
    pi = _pi_for(chain, pi)
    if not check_detailed_balance(chain, pi, args.tol):
        raise NotReversible("input chain is not reversible for its stationary distribution")
    kernel = liu_kernel(chain) if args.kernel == "liu" else identity_kernel(chain)
    violations = verify_update_conditions(chain, kernel, args.tol)
    expanded = build_nobacktrack(chain, kernel, args.tol)
    lifted_f = lift_function(f, expanded) if f is not None else None
    reversible = check_detailed_balance(expanded.chain, expanded.lifted_dist, args.tol)
    if reversible and chain.n == 2:
        rev_label = "reversible (two-state exemption)"
    else:
        rev_label = "reversible" if reversible else "not reversible"
    checks = {
        "update_conditions": not violations,
        "irreducible": check_irreducible(expanded.chain),
        "invariant": check_invariant(expanded.chain, expanded.lifted_dist, args.tol),
    }
    out = expanded_to_dict(expanded, lifted_f)
    out["report"] = {"kernel": args.kernel, "n_pair_states": expanded.chain.n, "reversibility": rev_label,
                     "checks": checks, "violations": [v._asdict() for v in violations], "pass": all(checks.values())}
    if args.format == "csv":
        rows = [{"state": s, **{t: float(p) for t, p in zip(expanded.chain.states, row)}}
                for s, row in zip(expanded.chain.states, expanded.chain.T)]
        _emit(out, args, rows)
    else:
        _emit(out, args)
    print(f"{args.kernel}: {expanded.chain.n} pair-states, {rev_label}", file=sys.stderr)
    return EXIT_PASS if all(checks.values()) else EXIT_FAIL


def _parse_f(text, chain, f_file):
    if text is None:
        if f_file is None:
            raise ParseError("no function given and the chain file has no 'f'")
        return f_file
    if text == "x":
        try:
            return np.array([float(s) for s in chain.states])
        except ValueError as exc:
            raise ParseError("f=x needs numeric state labels") from exc
    try:
        vals = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ParseError(f"cannot parse f {text!r}") from exc
    if len(vals) != chain.n:
        raise ParseError(f"f has {len(vals)} values, expected {chain.n}")
    return vals


def cmd_compare(args) -> int:
    chain, pi, f_file = load_chain(args.chain, tol=args.tol_stochastic)
    f = _parse_f(args.f, chain, f_file)
    pi = _pi_for(chain, pi)
    if not check_detailed_balance(chain, pi, args.tol):
        raise NotReversible("input chain is not reversible for its stationary distribution")
    nb = build_nobacktrack(chain, liu_kernel(chain), args.tol)
    ff = lift_function(f, nb)
    base = replicated_variance(chain, f, args.n, args.reps, seed=rp._derive(args.seed, 0))
    mod = replicated_variance(nb.chain, ff, args.n, args.reps, seed=rp._derive(args.seed, 1))
    ratio = base.exact / mod.exact if mod.exact > 0 else (float("inf") if base.exact > 0 else float("nan"))
    passed = mod.exact <= base.exact + 1e-9
    report = {"original": base.to_dict(), "modified": mod.to_dict(), "ratio": ratio,
              "checks": {"modified_not_worse": passed}, "pass": passed, "seed": args.seed}
    rows = [{"chain": "original", **base.to_dict()}, {"chain": "modified", **mod.to_dict()}]
    _emit(report, args, rows)
    return EXIT_PASS if passed else EXIT_FAIL


def _load_pair(spec: str):
    """'counterexample', 'random:SEED' or 'OLD.json,NEW.json' -> (PeskunPair, f)."""
    if spec == "counterexample":
        old, new = ex.peskun_counterexample()
        return elementary_pair(old.chain, new.chain, old.dist), old.f
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ParseError(f"bad pair spec {spec!r}") from exc
        old, new = ex.random_dominated_pair(5, seed=seed)
        return elementary_pair(old.chain, new.chain, old.dist), old.f
    parts = spec.split(",")
    if len(parts) != 2:
        raise ParseError(f"bad pair spec {spec!r}; use counterexample, random:SEED or OLD.json,NEW.json")
    old, pi, f = load_chain(parts[0])
    new, _, _ = load_chain(parts[1])
    if f is None:
        raise ParseError(f"{parts[0]} has no 'f'")
    return elementary_pair(old, new, pi), f


def cmd_blocks(args) -> int:
    pair, f = _load_pair(args.pair)
    old_traj, new_traj = delta_coupled_simulate(pair, args.n, seed=args.seed)
    report = {"pair": args.pair, "n": args.n, "seed": args.seed, "A": pair.old.states[pair.roles.a_from],
              "B": pair.old.states[pair.roles.b_from], "delta_A": pair.delta_A, "delta_B": pair.delta_B}
    checks = {}
    rows = []
    for name, traj in (("old", old_traj), ("new", new_traj)):
        trace = segment_blocks(traj, f, pair, source=name)
        stats = block_statistics(trace)
        report[name] = stats
        for t in ("AA", "AB", "BA", "BB"):
            rows.append({"source": name, "type": t, **stats[t]})
        for key in ("AA-BB", "AB-BA"):
            d = stats[key]
            checks[f"{name}_{key}_within_3se"] = abs(d["diff"]) <= 3 * d["stderr"]
        if name == "new":
            checks["new_stratified"] = abs(stats["AA-BB"]["count_diff"]) <= 1
        elif pair.roles.a_from == pair.roles.a_to:
            m = np.flatnonzero(traj.marks)
            checks["old_boundary_state_kept"] = bool(np.all(traj.states[m] == traj.states[m + 1]))
    report["checks"] = checks
    report["pass"] = all(checks.values())
    _emit(report, args, rows)
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def cmd_reproduce(args) -> int:
    kw = {}
    if args.target in ("lemma1", "lemma2"):
        if args.n is not None:
            kw["n"] = args.n
        if args.reps is not None:
            kw["reps"] = args.reps
    report = rp.run(args.target, seed=args.seed, **kw)
    d = report.to_dict()
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    stem = os.path.join(outdir, args.target)
    dump_json(d, stem + ".json")
    _write(stem + ".csv", _to_csv(report.rows))
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {args.target}: {name}")
    for key in ("slope_f_x_over_N", "slope_f_x"):
        if key in d:
            print(f"info {key} = {d[key]:.4f}")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _example(name: str):
    kind, _, arg = name.partition(":")
    try:
        if kind == "line":
            return ex.line_walk(int(arg or 5))
        if kind == "rectangle":
            N, M = (int(v) for v in (arg or "4,3").split(","))
            return ex.rectangle(N, M)
        if kind in ("counterexample-old", "counterexample-new"):
            old, new = ex.peskun_counterexample(float(arg) if arg else 0.5)
            return old if kind.endswith("old") else new
        if kind == "random":
            n, seed = (int(v) for v in (arg or "5,0").split(","))
            return ex.random_reversible(n, seed=seed)
    except ValueError as exc:
        raise ParseError(f"bad example spec {name!r}: {exc}") from exc
    raise ParseError(f"unknown example {name!r}; use line:N, rectangle:N,M, "
                     "counterexample-old, counterexample-new or random:N,SEED")


def cmd_export(args) -> int:
    spec = _example(args.name)
    _emit(chain_to_dict(spec.chain, spec.dist, spec.f), args)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s) % 2**64, default=0, help="master seed (u64)")
    common.add_argument("--tol", type=float, default=TOL_LINEAR, help="balance/invariance tolerance")
    common.add_argument("--tol-stochastic", type=float, default=1e-9, help="row-sum tolerance on input")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="output path (directory for reproduce)")

    p = argparse.ArgumentParser(prog="nobacktrack", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("analyze", parents=[common], help="stochasticity, irreducibility, pi, reversibility")
    s.add_argument("chain")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("lift", parents=[common], help="build the no-backtracking chain on pair-states")
    s.add_argument("chain")
    s.add_argument("--kernel", choices=("liu", "identity"), default="liu")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("compare", parents=[common], help="exact and empirical variance, base vs modified")
    s.add_argument("chain")
    s.add_argument("f", nargs="?", help="comma-separated values, 'x' for numeric labels, or omit to use the file's f")
    s.add_argument("--n", type=int, default=10_000)
    s.add_argument("--reps", type=int, default=200)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("blocks", parents=[common], help="delta-coupled block statistics")
    s.add_argument("pair", help="counterexample, random:SEED or OLD.json,NEW.json")
    s.add_argument("--n", type=int, default=100_000)
    s.set_defaults(func=cmd_blocks)

    s = sub.add_parser("reproduce", parents=[common], help="regenerate a worked example with verdicts")
    s.add_argument("target", help="|".join(rp.TARGETS))
    s.add_argument("--n", type=int)
    s.add_argument("--reps", type=int)
    s.set_defaults(func=cmd_reproduce)

    s = sub.add_parser("export-example", parents=[common], help="write an example chain as JSON")
    s.add_argument("name", help="line:N, rectangle:N,M, counterexample-old, counterexample-new, random:N,SEED")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (ChainError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
