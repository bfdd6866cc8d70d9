"""Command-line front end for jlab.

Verbs:

    modpoly N [--verify] [--refresh]     print / check / rewrite Phi_N
    synth DOC                            D-special synthesis report
    analyze DOC [--normality]            atypicality of the V, T, S sections
    explore DOC [--n-max K]              small D-special candidates against V
    deriv DOC OP [--rank R]              derivation spaces, Lambda bound, Ax-Schanuel check
    oracle jet|sample|validate ...       numeric j-jets and containment checks

DOC is a variety document (see special_geometry). Reports are JSON with
the schema string ``jlab-report/1`` and sorted keys, so identical inputs
give byte-identical output. Timing and run metadata go to the event log
only.

Exit codes: 0 success, 1 failed check (golden mismatch, dimension
invariant, validation residual), 2 unsupported, 3 invalid input,
4 domain error, 5 budget exceeded.
"""

import argparse
import json
import sys
from pathlib import Path

import mpmath

import atypicality
import derivation_lab
import errors
import modular_j
import qseries_oracle
import special_geometry
from polycore import Budget, Ideal, rat

try:
    import eventlog
except Exception:
    eventlog = None


REPORT_SCHEMA = "jlab-report/1"
DEFAULT_TOL = 1e-10
EXIT_CHECK_FAILED = 1

DEBUG_CLI = False

_HINTS = {
    "unsupported-level": "Golden files exist for the levels in lib/golden; run 'modpoly N --refresh' to add one.",
    "invalid-geodesic": "Every cycle of geodesic matrices must compose to the identity up to scaling.",
    "invalid-input": "Check the document: 'n', the edge lists and the polynomial strings.",
    "out-of-domain": "The oracle only evaluates at Im(tau) >= 0.8; move tau into that strip.",
    "computation-aborted": "Raise --max-basis / --max-degree, or split the problem into blocks.",
    "needs-decomposition": "The point lies on several components; pass a more specific ideal.",
}


def _d(*args):
    if DEBUG_CLI:
        print("[jcli]", *args, file=sys.stderr)


def _log(message):
    if eventlog is not None:
        try:
            eventlog.log_event(message)
        except Exception:
            pass


def _explain_error(exc):
    """One or two lines for stderr: the error and, when known, what to try."""
    lines = ["error: " + exc.describe()]
    hint = _HINTS.get(exc.kind)
    if hint:
        lines.append("hint: " + hint)
    return "\n".join(lines)


def _emit(args, command, result):
    payload = {"schema": REPORT_SCHEMA, "command": command, "result": result}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
    print(text)


def _budget(args):
    return Budget(max_basis=args.max_basis, max_degree=args.max_degree)


def _ctx(args):
    return qseries_oracle.PrecisionCtx(bits=args.bits)


def _num(value, digits=25):
    value = mpmath.mpmathify(value)
    if mpmath.im(value) == 0:
        return mpmath.nstr(mpmath.re(value), digits)
    return [mpmath.nstr(mpmath.re(value), digits), mpmath.nstr(mpmath.im(value), digits)]


def _parse_point(text, variables):
    """``"y1=3, dy1=1/2"`` -> exact assignment."""
    point = {}
    for part in text.split(","):
        if not part.strip():
            continue
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in variables:
            raise errors.InvalidArgument("bad point entry {!r}".format(part.strip()))
        point[name] = rat(value)
    return point


def _section(doc, key, fallback=None):
    if key in doc.sections:
        return doc.ideal(key)
    if fallback is not None:
        return fallback
    raise errors.InvalidInput("document has no '{}' section".format(key))


# ---------------------------------------------------------------------------
# Commands


def cmd_modpoly(args):
    directory = args.golden_dir
    if args.refresh:
        ctx = qseries_oracle.PrecisionCtx(bits=max(args.bits, qseries_oracle.INTERPOLATION_BITS))
        phi = qseries_oracle.interpolate_modular_polynomial(args.level, ctx)
        path = modular_j.write_golden(phi, directory)
        print("wrote {}".format(path))
    phi = modular_j.modular_polynomial(args.level, directory)
    if args.verify:
        ctx = qseries_oracle.PrecisionCtx(bits=max(args.bits, qseries_oracle.INTERPOLATION_BITS))
        diff = modular_j.verify_golden(args.level, ctx, directory)
        if diff:
            print("golden differs from oracle:")
            for line in diff:
                print("  " + line)
            return EXIT_CHECK_FAILED
        print("golden matches oracle")
        return 0
    if args.json:
        _emit(args, "modpoly", {
            "level": phi.level,
            "symmetric": phi.is_symmetric(),
            "degree": phi.degree(),
            "poly": str(phi),
        })
    else:
        print(phi)
    return 0


def cmd_synth(args):
    doc = special_geometry.load_document(args.doc)
    variety = special_geometry.synthesize_dspecial(doc.jspec, doc.geo, _budget(args), args.golden_dir)
    result = variety.to_report()
    result["document"] = special_geometry.dump_document(variety)
    _emit(args, "synth", result)
    return 0 if variety.invariants_hold else EXIT_CHECK_FAILED


def cmd_analyze(args):
    doc = special_geometry.load_document(args.doc)
    V = _section(doc, "V")
    T = _section(doc, "T", Ideal(doc.variables, []))
    S = _section(doc, "S", Ideal(doc.variables, []))
    W = doc.ideal("W") if "W" in doc.sections else None
    report = atypicality.atypicality_verdict(V, T, S, component=W)
    result = report.to_report()
    if args.normality:
        full = V if set(V.variables) == set(modular_j.full_variables(doc.n)) else special_geometry.product_with_affine(V)
        result["normality"] = {
            "normal": special_geometry.normality(full, "normal").to_report(),
            "strongly_normal": special_geometry.normality(full, "strongly-normal").to_report(),
        }
    _emit(args, "analyze", result)
    return 0


def cmd_explore(args):
    doc = special_geometry.load_document(args.doc)
    S = special_geometry.synthesize_dspecial(doc.jspec, doc.geo, _budget(args), args.golden_dir)
    V = _section(doc, "V")
    explored = atypicality.weak_mzp_explore(
        V, S, n_max=args.n_max, budget=_budget(args), directory=args.golden_dir
    )
    _emit(args, "explore", explored.to_report())
    return 0


def cmd_deriv(args):
    doc = special_geometry.load_document(args.doc)
    ideal = _section(doc, "W", doc.ideal())
    op = args.op
    if op == "space":
        result = derivation_lab.derivation_space(ideal).to_report()
    elif op == "lambda":
        space = derivation_lab.lambda_subspace(derivation_lab.derivation_space(ideal))
        result = space.to_report()
        result["lie_closed"] = derivation_lab.is_lie_closed(space)
        result["moves_every_coordinate"] = derivation_lab.moves_every_coordinate(space) if space.basis else False
    elif op == "bound":
        variety = special_geometry.synthesize_dspecial(doc.jspec, doc.geo, _budget(args), args.golden_dir)
        result = derivation_lab.lambda_bound_report(ideal, variety).to_report()
    elif op == "ax-schanuel":
        check = derivation_lab.ax_schanuel_check(ideal, rank=args.rank, directory=args.golden_dir)
        _emit(args, "deriv " + op, check.to_report())
        return 0 if check.holds else EXIT_CHECK_FAILED
    elif op == "stabilize":
        if not args.point:
            raise errors.InvalidArgument("stabilize needs --point")
        point = _parse_point(args.point, ideal.variables)
        oracle = derivation_lab.exact_point_oracle(point)
        result = derivation_lab.minor_stabilize(ideal, oracle).to_report()
    else:
        raise errors.InvalidArgument("unknown derivation operation {!r}".format(op))
    _emit(args, "deriv " + op, result)
    return 0


def cmd_oracle(args):
    ctx = _ctx(args)
    if args.action == "jet":
        jet = qseries_oracle.eval_j_jet(args.tau, ctx)
        with ctx.workprec():
            critical = abs(jet.j1) < ctx.tolerance() * max(1, abs(jet.j))
            residual = None if critical else mpmath.nstr(jet.ode_residual(), 5)
        _emit(args, "oracle jet", {
            "tau": _num(jet.tau),
            "j": _num(jet.j),
            "j1": _num(jet.j1),
            "j2": _num(jet.j2),
            "j3": _num(jet.j3),
            "ode_residual": residual,
            "critical_point": critical,
            "bits": jet.bits,
        })
        return 0
    if not args.doc:
        raise errors.InvalidArgument("oracle {} needs --doc".format(args.action))
    doc = special_geometry.load_document(args.doc)
    samples = qseries_oracle.sample_E_points(doc.geo, args.tau, ctx, count=args.count, seed=args.seed)
    if args.action == "sample":
        _emit(args, "oracle sample", {
            "bits": ctx.bits,
            "samples": [
                {"z": [_num(z) for z in s.zs], "jets": [[_num(v) for v in (j.j, j.j1, j.j2, j.j3)] for j in s.jets]}
                for s in samples
            ],
        })
        return 0
    variety = special_geometry.synthesize_dspecial(doc.jspec, doc.geo, _budget(args), args.golden_dir)
    worst = mpmath.mpf(0)
    ok = True
    with ctx.workprec():
        for sample in samples:
            point = sample.point()
            for g in variety.ideal.generators:
                vanishes, residual = qseries_oracle.numeric_vanish(g, point, args.tol, scale=True)
                ok = ok and vanishes
                worst = max(worst, residual)
    _log("oracle validate: {} samples, max scaled residual {}".format(len(samples), mpmath.nstr(worst, 5)))
    _emit(args, "oracle validate", {
        "bits": ctx.bits,
        "samples": len(samples),
        "generators": len(variety.ideal.generators),
        "max_residual": mpmath.nstr(worst, 5),
        "tolerance": args.tol,
        "ok": ok,
    })
    return 0 if ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# Parser


def _add_common(parser, budget=False):
    parser.add_argument("--out", help="also write the JSON report to this file")
    parser.add_argument("--golden-dir", default=None, help="directory of phi_<N>.txt files")
    if budget:
        parser.add_argument("--max-basis", type=int, default=Budget.max_basis)
        parser.add_argument("--max-degree", type=int, default=Budget.max_degree)


def build_parser():
    parser = argparse.ArgumentParser(prog="jlab", description="Differential algebra of the j-function.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("modpoly", help="print, verify or refresh a modular polynomial")
    p.add_argument("level", type=int)
    p.add_argument("--verify", action="store_true", help="re-derive with the oracle and diff")
    p.add_argument("--refresh", action="store_true", help="re-derive and rewrite the golden file")
    p.add_argument("--bits", type=int, default=qseries_oracle.INTERPOLATION_BITS)
    p.add_argument("--json", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_modpoly)

    p = sub.add_parser("synth", help="synthesize the D-special variety of a document")
    p.add_argument("doc")
    _add_common(p, budget=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="atypicality verdict for the V, T, S sections")
    p.add_argument("doc")
    p.add_argument("--normality", action="store_true", help="add the projection table")
    _add_common(p, budget=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("explore", help="search small D-special candidates for atypical meets")
    p.add_argument("doc")
    p.add_argument("--n-max", type=int, default=1)
    _add_common(p, budget=True)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("deriv", help="derivation spaces and their refinements")
    p.add_argument("doc")
    p.add_argument("op", choices=["space", "lambda", "bound", "ax-schanuel", "stabilize"])
    p.add_argument("--rank", type=int, default=1, help="z-Jacobian rank for ax-schanuel")
    p.add_argument("--point", help="exact point for stabilize, e.g. 'y1=3,dy1=3,ddy1=3'")
    _add_common(p, budget=True)
    p.set_defaults(func=cmd_deriv)

    p = sub.add_parser("oracle", help="numeric j-jets and containment checks")
    p.add_argument("action", choices=["jet", "sample", "validate"])
    p.add_argument("--tau", default="1.1i", help="evaluation point, or base point for samples")
    p.add_argument("--doc")
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", type=int, default=qseries_oracle.DEFAULT_BITS)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    _add_common(p, budget=True)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _d("command", args.command)
    try:
        return args.func(args)
    except errors.JLabError as exc:
        _log("{} failed: {}".format(args.command, exc.describe()))
        print(_explain_error(exc), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print("error: invalid-input: {}".format(exc), file=sys.stderr)
        return errors.InvalidInput.exit_code


if __name__ == "__main__":
    sys.exit(main())
