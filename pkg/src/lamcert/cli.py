"""``lamcert`` command-line driver.

Exit codes: 0 verified, 1 property violated, 2 invalid input, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import discs, documents, fuzz, pfcore, pushaway
from .errors import (
    EnumerationCapExceeded,
    InvariantViolation,
    LamcertError,
    LemmaViolation,
    NotIrreducible,
    NotSeparable,
    PreconditionFailed,
    SchemaError,
    UnknownSuite,
    VersionUnsupported,
)
from .report import Report, emit_report, interval


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "usage error")
        raise _HelpExit(message)


class _HelpExit(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lamcert", description="Exact-rational growth-rate certificates.")
    p.add_argument("--format", choices=("text", "machine"), default="text",
                   help="report rendering (machine = stable JSON)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("perron", help="bracket the spectral radius of a matrix document")
    s.add_argument("file")
    s.add_argument("--max-iterations", type=_positive_int, default=pfcore.DEFAULT_MAX_ITERATIONS)
    s.add_argument("--width", default="1/1000000000", help="target width as p/q")

    s = sub.add_parser("certify", help="subinvariance, power and submatrix checks")
    s.add_argument("file")

    s = sub.add_parser("tighten", help="enlargement -> Mbar, Mhat, schedule and SCC certificates")
    s.add_argument("file")
    s.add_argument("--p-max", type=_positive_int, default=None)

    s = sub.add_parser("layers", help="layered family -> W, T0..T3 and certificates")
    s.add_argument("file")
    s.add_argument("--p-max", type=_positive_int, default=None)

    s = sub.add_parser("pushaway", help="push S away from a disc")
    s.add_argument("file")
    s.add_argument("--enumerate-all", action="store_true")
    s.add_argument("--cap", type=_positive_int, default=100_000)
    s.add_argument("--order", default=None, help="comma-separated priority order of curves")

    s = sub.add_parser("stabilize", help="check a stabilization trace")
    s.add_argument("file")

    s = sub.add_parser("fuzz", help="seeded randomized suites")
    s.add_argument("suite")
    s.add_argument("--trials", type=_positive_int, default=100)
    s.add_argument("--seed", type=int, default=None,
                   help="defaults to $LAMCERT_SEED, else 0")
    return p


def _load(path, kinds):
    try:
        with open(path, "rb") as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError([("$", f"cannot read {path}: {exc.strerror}")]) from exc
    env = documents.parse(text)
    if env.kind not in kinds:
        raise SchemaError([("kind", f"expected one of {list(kinds)}, got {env.kind!r}")])
    return env


def _one_based(schedule):
    return {str(j + 1): p for j, p in sorted(schedule.items())}


# -- subcommands -------------------------------------------------------------


def _perron(args, report):
    env = _load(args.file, ("matrix", "disc-system"))
    m = env.payload if env.kind == "matrix" else discs.incidence_matrix(env.payload)
    cert = pfcore.perron_bounds(m, args.max_iterations, pfcore.rational(args.width))
    report.certificates.append({"kind": "perron", "matrix": m.tolist(), **interval(cert),
                                "width": str(cert.width)})
    if not cert.converged:
        report.verdict = "inconclusive"
        report.note("perron", args.file, f"width {cert.width} not reached after "
                    f"{cert.iterations} iterations")


def _certify(args, report):
    case = _load(args.file, ("subinvariance-case",)).payload
    m, v, lam = case.matrix, case.v, case.lam
    sub = pfcore.check_subinvariance(m, v, lam)
    report.certificates.append({
        "kind": "subinvariance",
        "holds": sub.holds,
        "strict_indices": [i + 1 for i in sub.strict_indices],
        "violated_indices": [i + 1 for i in sub.violated_indices],
    })
    if not sub.holds:
        report.verdict = "violated"
        report.note("certify", f"{args.file}: rows {[i + 1 for i in sub.violated_indices]}",
                    "M v <= lambda v fails")
        return
    if not pfcore.is_irreducible(m):
        raise NotIrreducible("matrix is not irreducible")
    start = pfcore.perron_bounds(m, max_iterations=0, start=v)
    entry = {"kind": "perron-bound", "lambda": str(lam), **interval(start)}
    if sub.strict_indices:
        below = pfcore.certify_below(m, lam, start=v)
        if below is None:
            report.verdict = "inconclusive"
            report.note("certify", args.file, "upper bound did not drop below lambda")
        else:
            entry.update(interval(below))
            entry["strict"] = True
    report.certificates.append(entry)
    if case.power is not None:
        rep = pfcore.power_subinvariance(m, v, lam, case.power)
        report.certificates.append({"kind": "power", "p": case.power, "holds": rep.holds,
                                    "strict_indices": [i + 1 for i in rep.strict_indices]})
    if case.dominated is not None:
        rep = pfcore.dominated_power_check(case.dominated, m, v, lam, case.power or 1)
        report.certificates.append({
            "kind": "dominated-power", "p": case.power or 1,
            "strict_indices": [i + 1 for i in rep.strict_indices],
            "dominated_strict": [i + 1 for i in rep.dominated_strict],
        })
    if case.submatrix is not None:
        p_max = case.p_max or m.n * (m.n + 1)
        drop = pfcore.submatrix_strict_drop(m, case.submatrix, v, lam, p_max)
        entry = {"kind": "submatrix", "indices": [i + 1 for i in case.submatrix],
                 "drop": None if drop is None else {"p": drop[0], "index": drop[1] + 1}}
        n_mat = pfcore.submatrix(m, case.submatrix)
        cert = pfcore.certify_below(n_mat, lam, start=pfcore.extract(v, case.submatrix))
        if cert is not None:
            entry.update(interval(cert))
        report.certificates.append(entry)
        if drop is None or cert is None:
            report.verdict = "inconclusive"
            report.note("certify", f"{args.file}: submatrix",
                        "no strict drop found" if drop is None else
                        "interval did not separate below lambda")


def _scc_entries(cert):
    return [
        {"indices": [i + 1 for i in r.indices], "separated": r.separated,
         **interval(r.certificate)}
        for r in cert.sccs
    ]


def _tightening(cert, report, where):
    report.certificates.append({
        "kind": "tightening",
        "schedule": _one_based(cert.strict_schedule),
        "missing": [i + 1 for i in cert.missing],
        "p_max": cert.p_max,
        "before": interval(cert.before),
        "after": interval(cert.after),
        "scc_used": [i + 1 for i in cert.scc_used],
        "after_upper_below_before_lower": cert.after.upper < cert.before.lower,
        "sccs": _scc_entries(cert),
        "verdict": cert.verdict,
    })
    if cert.verdict:
        return
    if any(r.separated is False for r in cert.sccs):
        report.verdict = "violated"
        report.note(where[0], where[1], "a component is not below the base growth rate")
    else:
        report.verdict = "inconclusive"
        report.note(where[0], where[1],
                    f"no strict power within p_max at rows {[i + 1 for i in cert.missing]}"
                    if cert.missing else "intervals did not separate")


def _tighten(args, report):
    e = _load(args.file, ("enlargement",)).payload
    res = discs.tighten(e, p_max=args.p_max)
    report.certificates.append({"kind": "matrices", "Mbar": res.mbar.tolist(),
                                "Mhat": res.mhat.tolist()})
    _tightening(res.certificate, report, ("tighten", args.file))


def _layers(args, report):
    case = _load(args.file, ("layered-family",)).payload
    res = discs.pipeline(case.family, case.d_update, u=case.u_vector(), lam=case.lam,
                         p_max=args.p_max)
    report.certificates.append({
        "kind": "matrices", "W": res.W.tolist(), "T0": res.T0.tolist(), "T1": res.T1.tolist(),
        "T2": res.T2.tolist(), "T3": res.T3.tolist(), "kept": [i + 1 for i in res.kept],
    })
    problems = fuzz.pipeline_failures(case, res)
    structural = [p for p in problems if not p.startswith(("no strict", "spectral"))]
    for p in structural:
        report.note("layers", args.file, p)
    _tightening(res.certificate, report, ("layers", args.file))
    if structural:
        report.verdict = "violated"


def _pushaway(args, report):
    pat = _load(args.file, ("pattern",)).payload
    strategy = args.order.split(",") if args.order else "lowest-id"
    res = pushaway.push_away(pat, strategy)
    fmt = documents.fmt
    report.certificates.append({
        "kind": "push-away",
        "glued": sorted(res.glued),
        "removed": sorted(res.removed),
        "discarded": sorted(res.discarded),
        "final_weights": {str(k): fmt(x) for k, x in res.final_weights.items()},
        "weight_delta": {str(k): str(x) for k, x in pushaway.weight_delta(pat, res).items()},
        "events": [e.curve for e in res.events],
    })
    if args.enumerate_all:
        try:
            results = pushaway.enumerate_all_orders(pat, cap=args.cap)
        except EnumerationCapExceeded as exc:
            report.verdict = "inconclusive"
            report.note("pushaway", args.file, str(exc))
            return
        report.certificates.append({
            "kind": "confluence",
            "sequences": pushaway.count_sequences(pat),
            "distinct_results": len(results),
            "results": [{"glued": list(g), "gone": list(r),
                         "final_weights": {str(k): fmt(x) for k, x in w}}
                        for g, r, w in sorted(results)],
        })
        if len(results) != 1:
            report.verdict = "violated"
            report.note("pushaway", args.file, "surgery orders disagree")


def _stabilize(args, report):
    trace = _load(args.file, ("trace",)).payload
    res = discs.validate_stabilization(trace)
    report.certificates.append({"kind": "stabilization", "ok": res.ok, "J": res.J})
    if not res:
        report.verdict = "violated"
        for d in res.diagnostics:
            report.note("stabilize", args.file, d)


COMMANDS = {
    "perron": _perron,
    "certify": _certify,
    "tighten": _tighten,
    "layers": _layers,
    "pushaway": _pushaway,
    "stabilize": _stabilize,
}


def default_seed() -> int:
    text = os.environ.get("LAMCERT_SEED")
    if text is None:
        return 0
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"LAMCERT_SEED must be an integer, got {text!r}") from None


def run_command(argv) -> tuple:
    """Run one command. Returns (exit code, Report); never raises on bad input."""
    argv = list(argv)
    command = next((a for a in argv if a in COMMANDS or a == "fuzz"), "lamcert")
    try:
        args = build_parser().parse_args(argv)
    except _HelpExit:
        return 0, Report(command="help")
    except (UsageError, ValueError) as exc:
        report = Report(command=command, verdict="invalid-input")
        report.note("argv", "argv", str(exc))
        return report.exit_code, report
    if args.command == "fuzz":
        try:
            seed = args.seed if args.seed is not None else default_seed()
            report = fuzz.fuzz_suite(args.suite, args.trials, seed)
        except (UnknownSuite, UsageError) as exc:
            report = Report(command=f"fuzz {args.suite}", verdict="invalid-input")
            report.note("fuzz", "suite", str(exc))
        return report.exit_code, report
    report = Report(command=args.command)
    try:
        COMMANDS[args.command](args, report)
    except SchemaError as exc:
        report.verdict = "invalid-input"
        for path, msg in exc.errors:
            report.note(args.command, f"{args.file}: {path}", msg)
    except VersionUnsupported as exc:
        report.verdict = "invalid-input"
        report.note(args.command, f"{args.file}: format_version", str(exc))
    except LemmaViolation as exc:
        report.verdict = "violated"
        report.note(args.command, args.file, f"defect: {exc}")
    except NotSeparable as exc:
        report.verdict = "inconclusive"
        report.note(args.command, args.file, str(exc))
    except (InvariantViolation, PreconditionFailed, NotIrreducible, LamcertError) as exc:
        report.verdict = "invalid-input"
        where = getattr(exc, "row", None)
        loc = f"{args.file}: {where}" if where is not None else args.file
        report.note(args.command, loc, f"{type(exc).__name__}: {exc}")
    except (ValueError, ZeroDivisionError) as exc:
        report.verdict = "invalid-input"
        report.note(args.command, args.file, f"{type(exc).__name__}: {exc}")
    return report.exit_code, report


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    code, report = run_command(argv)
    if report.command == "help":
        return 0  # argparse has already printed the help text
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--format", default="text")
    mode = pre.parse_known_args(argv)[0].format
    sys.stdout.write(emit_report(report, mode if mode == "machine" else "text"))
    return code


if __name__ == "__main__":
    sys.exit(main())
