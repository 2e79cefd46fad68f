"""Command-line interface: ``avmac analyze | region | simulate | oracle-check``.

Exit codes: 0 success, 1 usage or parse error, 2 oracle failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import coding, io
from .capacity import (EnsembleSearch, RateRegion, deterministic_region, dispatch_case,
                       divided_randomness_region, random_code_region)
from .channel import ConstraintSpec, InputEnsemble
from .examples import (BUILTINS, bsmac_corner, bsmac_deterministic_region, bsmac_thresholds,
                       builtin, gaussian_deterministic_case, gaussian_random_region)
from .lp import LPFailure
from .symmetrizability import (SymmetryKind, check_symmetrizable, min_symmetrizing_cost,
                               thresholds)

EXIT_OK, EXIT_USAGE, EXIT_ORACLE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# -- channel loading ------------------------------------------------------------------

def load_channel(args):
    """(spec, costs, constraints, name) from --builtin/--spec plus constraint overrides."""
    if bool(args.builtin) == bool(args.spec):
        raise UsageError("give exactly one of --builtin NAME or --spec FILE")
    if args.builtin:
        params = {"gamma1": args.gamma1, "gamma2": args.gamma2, "lam": args.lam,
                  "sigma2": args.sigma2, "r": args.r, "input_grid": args.input_grid,
                  "output_grid": args.output_grid}
        try:
            b = builtin(args.builtin, **params)
        except ValueError as e:
            raise UsageError(str(e)) from None
        spec, costs, cons = b.spec, b.costs, b.constraints
        name = args.builtin
    else:
        spec, costs, cons = io.read_channel(args.spec)
        name = Path(args.spec).stem
    cons = ConstraintSpec(cons.gamma1 if args.gamma1 is None else args.gamma1,
                          cons.gamma2 if args.gamma2 is None else args.gamma2,
                          cons.lam if args.lam is None else args.lam)
    return spec, costs, cons, name


def _channel_args(p):
    g = p.add_argument_group("channel")
    g.add_argument("--builtin", choices=sorted(BUILTINS), help="built-in channel name")
    g.add_argument("--spec", help="channel-spec JSON file")
    g.add_argument("--gamma1", type=float, help="input-1 cost constraint")
    g.add_argument("--gamma2", type=float, help="input-2 cost constraint")
    g.add_argument("--lambda", dest="lam", type=float, help="state cost constraint")
    g.add_argument("--sigma2", type=float, help="gaussian noise variance")
    g.add_argument("--r", type=int, help="erasure-adder input alphabet size")
    g.add_argument("--input-grid", type=int, help="gaussian input lattice points")
    g.add_argument("--output-grid", type=int, help="gaussian output bins")


def _out(args, text: str) -> None:
    if getattr(args, "output", None):
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    return "inf" if v == np.inf else f"{v:.6f}"


# -- analyze --------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    spec, costs, cons, name = load_channel(args)
    if args.export_spec:
        io.write_channel(args.export_spec, spec, costs, cons)
    p1 = args.p1 if args.p1 is not None else np.full(spec.n1, 1 / spec.n1)
    p2 = args.p2 if args.p2 is not None else np.full(spec.n2, 1 / spec.n2)
    if p1.size != spec.n1 or p2.size != spec.n2:
        raise UsageError("--p1/--p2 lengths must match the input alphabets")
    report = {"channel": name, "sizes": list(spec.sizes), "gamma1": cons.gamma1,
              "gamma2": cons.gamma2, "lambda": cons.lam, "symmetrizability": {}, "psi": {}}
    laws = {SymmetryKind.JOINT: np.outer(p1, p2), SymmetryKind.COND1: p1, SymmetryKind.COND2: p2}
    for kind in SymmetryKind:
        w = check_symmetrizable(spec, kind)
        report["symmetrizability"][kind.label] = {
            "symmetrizable": w is not None,
            "residual": None if w is None else w.residual,
            "witness": None if w is None else np.round(w.J, 12),
            "zero_one": None if w is None else w.is_zero_one()}
        report["psi"][kind.label] = min_symmetrizing_cost(spec, costs, kind, laws[kind]).value
    th = thresholds(spec, costs, cons)
    case, undetermined = dispatch_case(th, cons.lam)
    report.update({"thresholds": {"L": th.L, "L1": th.L1, "L2": th.L2}, "case": case,
                   "boundary_undetermined": undetermined, "psi_input_laws": [p1, p2]})
    if args.json:
        _out(args, io.to_json(report, indent=2) + "\n")
        return EXIT_OK
    lines = [f"channel {name}  sizes {tuple(spec.sizes)}  gamma=({cons.gamma1:g}, {cons.gamma2:g})"
             f"  lambda={cons.lam:g}", ""]
    for kind in SymmetryKind:
        r = report["symmetrizability"][kind.label]
        verdict = "SYMMETRIZABLE" if r["symmetrizable"] else "NOT symmetrizable"
        extra = f"  residual {r['residual']:.1e}  0-1 witness: {r['zero_one']}" if r["symmetrizable"] else ""
        lines.append(f"  {kind.label:6s} {verdict}{extra}")
        if r["symmetrizable"] and args.witness:
            lines += ["      " + " ".join(f"{v:.4f}" for v in row) for row in np.atleast_2d(r["witness"])]
    lines.append("")
    lines.append("  Psi at input laws p1=%s p2=%s" % (np.round(p1, 4).tolist(), np.round(p2, 4).tolist()))
    for kind in SymmetryKind:
        lines.append(f"    {kind.label:6s} {_fmt(report['psi'][kind.label])}")
    lines.append(f"  thresholds  L*={_fmt(th.L)}  L1*={_fmt(th.L1)}  L2*={_fmt(th.L2)}")
    lines.append(f"  case {case}" + ("  (a threshold equals lambda: boundary undetermined)" if undetermined else ""))
    _out(args, "\n".join(lines) + "\n")
    return EXIT_OK


# -- region ---------------------------------------------------------------------------

def nesting_ok(inner: RateRegion, outer: RateRegion, slack: float = 1e-6, directions: int = 64) -> bool:
    """Support-function containment over sampled nonnegative directions."""
    if inner.undetermined or outer.undetermined:
        return True
    for t in np.linspace(0.0, np.pi / 2, directions):
        w1, w2 = float(np.cos(t)), float(np.sin(t))
        if inner.support(w1, w2) > outer.support(w1, w2) + slack:
            return False
    return True


def cmd_region(args) -> int:
    spec, costs, cons, name = load_channel(args)
    search = EnsembleSearch(spec, costs, cons.clamped(costs), args.resolution, budget=args.budget)
    modes = ["random", "divided", "deterministic"] if args.mode == "all" else [args.mode]
    regions = {}
    for m in modes:
        if m == "random":
            regions[m] = random_code_region(spec, costs, cons, args.resolution, search=search)
        elif m == "divided":
            regions[m] = divided_randomness_region(spec, costs, cons, args.resolution,
                                                   budget=args.budget, search=search)
        else:
            regions[m] = deterministic_region(spec, costs, cons, args.resolution,
                                              budget=args.budget, search=search)
    extra = {"channel": name, "resolution": args.resolution}
    if args.mode == "all":
        extra["nesting_verified"] = bool(nesting_ok(regions["deterministic"], regions["divided"])
                                         and nesting_ok(regions["divided"], regions["random"]))
    if args.output:
        base = Path(args.output)
        for m, reg in regions.items():
            path = base if len(regions) == 1 else base.with_name(f"{base.stem}_{m}{base.suffix or '.csv'}")
            io.write_region(path, reg, extra)
    else:
        for m, reg in regions.items():
            tag = f"# mode={m}"
            if reg.case_label:
                tag += f" case={reg.case_label}"
            if reg.undetermined:
                tag += " undetermined"
            print(tag)
            print("r1,r2")
            for r1, r2 in reg.boundary:
                print(f"{r1!r},{r2!r}")
        if "nesting_verified" in extra:
            print(f"# nesting_verified={extra['nesting_verified']}")
    return EXIT_OK


# -- simulate -------------------------------------------------------------------------

def _strategy(args, spec, costs, cons):
    kind = args.strategy
    if kind == "iid":
        q = args.q if args.q is not None else np.eye(spec.ns)[int(np.argmin(costs.l))]
        if q.size != spec.ns:
            raise UsageError("--q length must match the state alphabet")
        return coding.IIDState(q / q.sum())
    if kind == "fixed":
        return coding.FixedSequence(np.full(args.n, int(np.argmin(costs.l))))
    k = {"sym-joint": SymmetryKind.JOINT, "sym-cond1": SymmetryKind.COND1,
         "sym-cond2": SymmetryKind.COND2}[kind]
    w = check_symmetrizable(spec, k)
    if w is None:
        raise UsageError(f"channel is not {k.label}-symmetrizable; no witness for {kind}")
    return coding.strategy_from_witness(w, spec, int(np.argmin(costs.l)))


def cmd_simulate(args) -> int:
    spec, costs, cons, name = load_channel(args)
    p1 = args.p1 if args.p1 is not None else np.full(spec.n1, 1 / spec.n1)
    p2 = args.p2 if args.p2 is not None else np.full(spec.n2, 1 / spec.n2)
    ens = InputEnsemble.product(p1, p2)
    code = coding.build_codebook(spec, costs, cons, args.n, args.M1, args.M2, ens,
                                 args.codebook_seed, max_pair_info=args.max_pair_info)
    if args.decoder == "type":
        dec = coding.TypeDecoder(args.eta, args.eta1, args.eta2)
    else:
        q = args.q if args.q is not None else np.full(spec.ns, 1 / spec.ns)
        dec = coding.MaxLikelihoodWorstQ(q / q.sum())
    strat = _strategy(args, spec, costs, cons)
    scenario = {"channel": name, "gamma1": cons.gamma1, "gamma2": cons.gamma2,
                "lambda": cons.lam, "n": args.n, "M1": args.M1, "M2": args.M2,
                "p1": p1, "p2": p2, "decoder": args.decoder, "eta": [args.eta, args.eta1, args.eta2],
                "strategy": args.strategy, "q": args.q, "trials": args.trials, "seed": args.seed,
                "codebook_seed": args.codebook_seed}
    reports = {"deterministic": coding.simulate(spec, code, dec, strat, costs, cons,
                                                args.trials, args.seed, random_permutation=False)}
    if args.compare_permutation:
        reports["permutation"] = coding.simulate(spec, code, dec, strat, costs, cons,
                                                 args.trials, args.seed, random_permutation=True)
    if args.json:
        _out(args, io.to_json({"scenario": scenario,
                               "reports": {k: r.to_dict() for k, r in reports.items()}},
                              indent=2) + "\n")
    else:
        lines = ["scenario: " + io.to_json(scenario), "",
                 f"{'code':14s} {'trials':>7s} {'errors':>7s} {'estimate':>9s}  {'wilson95':>19s}"
                 f"  {'max l^n':>8s} {'fallbacks':>9s}  audits"]
        for k, r in reports.items():
            lines.append(f"{k:14s} {r.trials:7d} {r.errors:7d} {r.estimate:9.4f}  "
                         f"[{r.interval[0]:.4f}, {r.interval[1]:.4f}]  {r.max_state_cost:8.4f} "
                         f"{r.fallback_count:9d}  {'ok' if r.input_audit_ok and r.state_audit_ok else 'FAIL'}")
        _out(args, "\n".join(lines) + "\n")
    ok = all(r.input_audit_ok and r.state_audit_ok for r in reports.values())
    return EXIT_OK if ok else EXIT_NUMERIC


# -- oracle-check ---------------------------------------------------------------------

def _check(rows, label, got, want, tol):
    if isinstance(want, str) or isinstance(want, bool):
        ok = got == want
    else:
        ok = abs(got - want) <= tol if np.isfinite(want) else got == want
    rows.append((label, got, want, tol, ok))


def oracle_rows(name: str, args) -> list:
    """Closed-form comparisons for one built-in channel."""
    rows: list = []
    if name in ("adder2", "adder3", "ahlswede-cai"):
        b = builtin(name)
        want = {"adder3": (True, True, True), "adder2": (False, True, True),
                "ahlswede-cai": (True, False, False)}[name]
        for kind, w in zip(SymmetryKind, want):
            _check(rows, f"{kind.label} symmetrizable", check_symmetrizable(b.spec, kind) is not None, w, 0)
    elif name == "bsmac":
        g1 = 1.0 if args.gamma1 is None else args.gamma1
        g2 = 1.0 if args.gamma2 is None else args.gamma2
        lam = 0.1 if args.lam is None else args.lam
        b = builtin("bsmac", gamma1=g1, gamma2=g2, lam=lam)
        th = thresholds(b.spec, b.costs, b.constraints)
        for got, want, lab in zip(th.as_tuple(), bsmac_thresholds(g1, g2).value, ("L*", "L1*", "L2*")):
            _check(rows, lab, got, want, args.tol_threshold)
        reg = random_code_region(b.spec, b.costs, b.constraints, args.resolution)
        _check(rows, "random R1 corner", reg.max_r1, bsmac_corner(g1, lam), args.tol_rate)
        _check(rows, "random R2 corner", reg.max_r2, bsmac_corner(g2, lam), args.tol_rate)
        case, corner = bsmac_deterministic_region(g1, g2, lam).value
        det = deterministic_region(b.spec, b.costs, b.constraints, args.resolution,
                                   threshold_values=th)
        _check(rows, "deterministic case", det.case_label, case, 0)
        _check(rows, "deterministic R1", det.max_r1, corner[0], args.tol_rate)
        _check(rows, "deterministic R2", det.max_r2, corner[1], args.tol_rate)
    elif name == "gaussian":
        g1 = 1.0 if args.gamma1 is None else args.gamma1
        g2 = 1.0 if args.gamma2 is None else args.gamma2
        lam = 0.5 if args.lam is None else args.lam
        s2 = 0.5 if args.sigma2 is None else args.sigma2
        b = builtin("gaussian", gamma1=g1, gamma2=g2, lam=lam, sigma2=s2)
        a1, a2, _ = gaussian_random_region(g1, g2, lam, s2).value
        case = gaussian_deterministic_case(g1, g2, lam)
        det = deterministic_region(b.spec, b.costs, b.constraints, args.resolution)
        _check(rows, "deterministic case", det.case_label, case, 0)
        if case == "A":
            reg = random_code_region(b.spec, b.costs, b.constraints, args.resolution)
            _check(rows, "random R1 corner", reg.max_r1, a1, args.tol_gaussian)
            _check(rows, "random R2 corner", reg.max_r2, a2, args.tol_gaussian)
        if case == "B":
            _check(rows, "case-B segment R2", det.max_r2, 0.5 * np.log2(1 + g2 / s2), args.tol_gaussian)
        if case == "C":
            _check(rows, "case-C segment R1", det.max_r1, 0.5 * np.log2(1 + g1 / s2), args.tol_gaussian)
    elif name == "erasure":
        lam = 1.0 if args.lam is None else args.lam
        b = builtin("erasure", r=args.r or 2, lam=lam)
        det = deterministic_region(b.spec, b.costs, b.constraints, args.resolution)
        _check(rows, "deterministic max R1", det.max_r1, 0.0, args.tol_rate)
        _check(rows, "deterministic max R2", det.max_r2, 0.0, args.tol_rate)
    return rows


def cmd_oracle_check(args) -> int:
    if args.spec or not args.builtin:
        raise UsageError("oracle-check needs --builtin NAME")
    rows = oracle_rows(args.builtin, args)
    lines = [f"{'check':24s} {'computed':>12s} {'expected':>12s} {'tol':>8s}  result"]
    for label, got, want, tol, ok in rows:
        g = got if isinstance(got, (str, bool)) else _fmt(got)
        w = want if isinstance(want, (str, bool)) else _fmt(want)
        lines.append(f"{label:24s} {str(g):>12s} {str(w):>12s} {tol:8.0e}  {'PASS' if ok else 'FAIL'}")
    _out(args, "\n".join(lines) + "\n")
    return EXIT_OK if all(r[-1] for r in rows) else EXIT_ORACLE


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="avmac", description="Arbitrarily varying MAC toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="symmetrizability verdicts, Psi, thresholds, case label")
    _channel_args(a)
    a.add_argument("--p1", type=_floats, help="input-1 law for Psi (default uniform)")
    a.add_argument("--p2", type=_floats, help="input-2 law for Psi (default uniform)")
    a.add_argument("--witness", action="store_true", help="print witness matrices")
    a.add_argument("--export-spec", help="also write the channel as a spec document")
    a.add_argument("--json", action="store_true")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("region", help="compute and export capacity-region boundaries")
    _channel_args(r)
    r.add_argument("--mode", choices=["random", "divided", "deterministic", "all"], default="random")
    r.add_argument("--resolution", type=int, default=1)
    r.add_argument("--budget", choices=["average", "per_u"], default="average",
                   help="state-cost budget across time-sharing letters (divided mode)")
    r.add_argument("-o", "--output", help="CSV path; metadata goes to the .json sibling")
    r.set_defaults(func=cmd_region)

    s = sub.add_parser("simulate", help="Monte-Carlo error of a constant-composition code")
    _channel_args(s)
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--M1", type=int, default=2)
    s.add_argument("--M2", type=int, default=2)
    s.add_argument("--p1", type=_floats)
    s.add_argument("--p2", type=_floats)
    s.add_argument("--decoder", choices=["type", "ml"], default="type")
    s.add_argument("--eta", type=float, default=0.05)
    s.add_argument("--eta1", type=float, default=0.05)
    s.add_argument("--eta2", type=float, default=0.05)
    s.add_argument("--q", type=_floats, help="state law for --strategy iid / --decoder ml")
    s.add_argument("--strategy", default="sym-joint",
                   choices=["iid", "fixed", "sym-joint", "sym-cond1", "sym-cond2"])
    s.add_argument("--max-pair-info", type=float, default=None)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--codebook-seed", type=int, default=0)
    s.add_argument("--compare-permutation", action="store_true",
                   help="also run the permutation code on the same seeds")
    s.add_argument("--json", action="store_true")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle-check", help="compare built-in channels against closed forms")
    _channel_args(o)
    o.add_argument("--resolution", type=int, default=1)
    o.add_argument("--tol-threshold", type=float, default=1e-3)
    o.add_argument("--tol-rate", type=float, default=5e-3)
    o.add_argument("--tol-gaussian", type=float, default=0.05)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, io.SpecParseError, FileNotFoundError) as e:
        print(f"avmac: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (LPFailure, coding.CapacityError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"avmac: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"avmac: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
