"""Command-line front end.

    qriccati check --criterion thm31 problem.cfg
    qriccati integrate problem.cfg --samples 201
    qriccati verify --criterion thm41 problem.cfg
    qriccati nonconj problem.cfg --phi0 1,0,0,0
    qriccati selftest

Exit codes: 0 success, 1 verdict or assertion failed, 2 input error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .coeffexpr.config import load_problem_config
from .criteria import CHECKERS, integrate_problem, verify_conclusion
from .criteria.verdict import format_value
from .errors import InputError, NumericalError, QRiccatiError
from .integrator import NumericPolicy

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3
STRICT_CRITERIA = ("thm32", "thm34", "thm35")
SWEEP_KEYS = ("gamma0", "gamma1", "gamma2", "gamma3", "epsilon")
TRAJ_HEADER = "t,q0,q1,q2,q3,status"
NONCONJ_HEADER = "t,phi1,phi2,phi3,phi4,psi1,psi2,psi3,psi4"


class UsageError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    # route argparse failures through the common diagnostic and exit code
    def error(self, message):
        raise UsageError(message)


def _vector(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four comma-separated numbers, got {text!r}")
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected four finite comma-separated numbers, got {text!r}")
    return vals


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if n < 2:
        raise argparse.ArgumentTypeError("at least 2 required")
    return n


def parse_sweep(text: str) -> tuple[str, list[float]]:
    """``key=v1,v2,...`` or ``key=start:stop:n`` (n evenly spaced values)."""
    key, sep, values = text.partition("=")
    key = key.strip()
    if not sep or key not in SWEEP_KEYS:
        raise UsageError(f"--sweep expects KEY=VALUES with KEY in {', '.join(SWEEP_KEYS)}")
    try:
        if ":" in values:
            start, stop, n = values.split(":")
            points = np.linspace(float(start), float(stop), int(n)).tolist()
        else:
            points = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --sweep values {values!r}")
    if not points:
        raise UsageError("--sweep needs at least one value")
    return key, points


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qriccati", description="Global solvability criteria for quaternionic Riccati equations.")
    sub = p.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True

    def common(sp, criterion=True):
        sp.add_argument("config", help="problem configuration file")
        if criterion:
            sp.add_argument("--criterion", required=True, choices=sorted(CHECKERS))
            sp.add_argument("--strict-source", action="store_true",
                            help="literal-text variants of the fiver and envelope conditions")
            sp.add_argument("--grid", type=_positive_int, default=None, help="grid points per window")
            sp.add_argument("--sweep", default=None, help="KEY=v1,v2,... or KEY=start:stop:n")
            sp.add_argument("--jobs", type=int, default=1, help="worker threads for --sweep")

    sp = sub.add_parser("check", help="evaluate a criterion and print its verdict")
    common(sp)

    sp = sub.add_parser("integrate", help="integrate the problem and print a CSV trajectory")
    common(sp, criterion=False)
    sp.add_argument("--samples", type=_positive_int, default=1001)
    sp.add_argument("--csv", default=None, help="write the CSV here instead of stdout")
    sp.add_argument("--gamma", type=_vector, default=None, help="initial state q0,q1,q2,q3")

    sp = sub.add_parser("verify", help="check a criterion, then verify its conclusion numerically")
    common(sp)
    sp.add_argument("--gamma", type=_vector, default=None, help="initial state q0,q1,q2,q3")

    sp = sub.add_parser("nonconj", help="run the non-conjugation harness on the linear system")
    common(sp, criterion=False)
    sp.add_argument("--phi0", type=_vector, required=True)
    sp.add_argument("--gamma", type=_vector, default=None)
    sp.add_argument("--T", dest="T", type=float, default=None, help="window end (default: horizon)")
    sp.add_argument("--mode", choices=("thm31", "thm32"), default="thm31")
    sp.add_argument("--recheck", action="store_true", help="re-run the criterion first")
    sp.add_argument("--samples", type=_positive_int, default=1001)
    sp.add_argument("--csv", default=None, help="write the (phi, psi) CSV here")

    sub.add_parser("selftest", help="run the closed-form oracles")
    return p


def csv_text(header: str, ts, rows, tail=None) -> str:
    out = io.StringIO()
    out.write(header + "\n")
    for t, row in zip(ts, rows):
        fields = [format_value(float(t))] + [format_value(float(v)) for v in row]
        if tail is not None:
            fields.append(tail)
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def _emit(text: str, path: str | None, out) -> None:
    if path is None:
        out.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"I/O error: {exc}") from exc


def _check_kwargs(args) -> dict:
    kw = {"grid": args.grid}
    if args.strict_source:
        if args.criterion not in STRICT_CRITERIA:
            raise UsageError(f"--strict-source applies to {', '.join(STRICT_CRITERIA)} only")
        kw["strict_source"] = True
    return kw


def _apply_sweep(ps, key, value):
    if key == "epsilon":
        return ps.replace(epsilon=value)
    g = list(ps.gamma)
    g[int(key[-1])] = value
    return ps.replace(gamma=tuple(g))


def _check_one(ps, args) -> tuple[int, str]:
    verdict = CHECKERS[args.criterion](ps, **_check_kwargs(args))
    return (EXIT_OK if verdict.holds else EXIT_FAIL), verdict.to_report()


def _verify_one(ps, args) -> tuple[int, str]:
    verdict = CHECKERS[args.criterion](ps, **_check_kwargs(args))
    text = verdict.to_report()
    if not verdict.holds:
        return EXIT_FAIL, text
    report = verify_conclusion(ps, verdict, init=args.gamma, policy=NumericPolicy.from_spec(ps))
    return (EXIT_OK if report.verified else EXIT_FAIL), text + "\n" + report.to_report()


def _run_criterion(job, ps, args, out) -> int:
    if args.sweep is None:
        code, text = job(ps, args)
        out.write(text)
        return code
    key, values = parse_sweep(args.sweep)
    problems = [_apply_sweep(ps, key, v) for v in values]

    def task(p):
        # errors are reported per sweep entry; the run itself carries on
        try:
            return job(p, args)
        except InputError as exc:
            return EXIT_INPUT, f"error = {exc}\n"
        except QRiccatiError as exc:
            return EXIT_NUMERICAL, f"error = {exc}\n"

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(task, problems))
    for i, (v, (_, text)) in enumerate(zip(values, results)):
        if i:
            out.write("\n")
        out.write(f"sweep_index = {i}\nsweep.{key} = {format_value(v)}\n")
        out.write(text)
    return max(code for code, _ in results)


def _integrate(args, out) -> int:
    ps = load_problem_config(args.config)
    traj = integrate_problem(ps, NumericPolicy.from_spec(ps), args.gamma)
    ts, ys = traj.sample(args.samples)
    _emit(csv_text(TRAJ_HEADER, ts, ys, traj.status), args.csv, out)
    return EXIT_OK if traj.status != "step_collapse" else EXIT_NUMERICAL


def _nonconj(args, out) -> int:
    from .nonconj import NonconjInput, run_nonconj

    ps = load_problem_config(args.config)
    T = ps.horizon if args.T is None else args.T
    gamma = ps.gamma if args.gamma is None else args.gamma
    inp = NonconjInput(ps, args.phi0, gamma, T, args.mode)
    rep = run_nonconj(inp, NumericPolicy.from_spec(ps), recheck=args.recheck)
    out.write(rep.to_report())
    if args.csv is not None:
        ts, ys = rep.trajectory.sample(args.samples)
        _emit(csv_text(NONCONJ_HEADER, ts, ys), args.csv, out)
    return EXIT_OK if rep.ok else EXIT_FAIL


def _selftest(out) -> int:
    from .selftest import run_selftests

    results = run_selftests()
    for name, ok, detail in results:
        out.write(f"selftest.{name} = {'pass' if ok else 'fail'} ({detail})\n")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


def run_command(argv=None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        args = build_parser().parse_args(argv)
        if args.verb == "check":
            return _run_criterion(_check_one, load_problem_config(args.config), args, out)
        if args.verb == "verify":
            return _run_criterion(_verify_one, load_problem_config(args.config), args, out)
        if args.verb == "integrate":
            return _integrate(args, out)
        if args.verb == "nonconj":
            return _nonconj(args, out)
        return _selftest(out)
    except InputError as exc:
        err.write(f"qriccati: {exc}\n")
        return EXIT_INPUT
    except (NumericalError, QRiccatiError) as exc:
        err.write(f"qriccati: {exc}\n")
        return EXIT_NUMERICAL


def main(argv=None) -> int:
    sys.exit(run_command(argv))
