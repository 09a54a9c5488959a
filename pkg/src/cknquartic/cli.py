"""Command-line front end: ``params``, ``jconst`` and ``verify``.

Output is JSON (or CSV for ``jconst``) on stdout with 15 significant
digits. Exit codes: 0 all checks passed, 1 a check failed or was skipped,
2 bad usage or parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import energies as en
from .params import ParameterError, classify, critical_exponent, fs_params
from .suites import DEFAULT_TOLERANCES, SUITES, Check, run_suite

CSV_FIELDS = ("q", "d", "J", "J_tilde", "series_sum", "E0", "E2", "B")


def _fmt(x):
    """Round floats to 15 significant digits, recursively."""
    if isinstance(x, (bool, type(None), str)):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.15g}")
    if isinstance(x, dict):
        return {str(k): _fmt(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_fmt(v) for v in x]
    return str(x)


def _report(command, inputs, outputs, checks, started, timing) -> dict:
    rep = {
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "checks": [c.as_dict() for c in checks],
    }
    if timing:
        rep["elapsed_ms"] = int((time.perf_counter() - started) * 1000)
    return _fmt(rep)


def _emit(rep: dict) -> None:
    sys.stdout.write(json.dumps(rep, indent=2) + "\n")


def _exit_code(checks: list[Check], allow_skip: bool) -> int:
    for c in checks:
        if c.skipped:
            if not allow_skip:
                return 1
        elif not c.passed:
            return 1
    return 0


def _complain(checks: list[Check]) -> None:
    for c in checks:
        if c.skipped or not c.passed:
            print(f"{c.name}: {'skipped' if c.skipped else 'FAILED'} {c.note}".rstrip(), file=sys.stderr)


def _parse_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_range(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi or lo)


def _parse_tols(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or key not in DEFAULT_TOLERANCES:
            raise ParameterError(f"unknown tolerance override {item!r}; known: {', '.join(DEFAULT_TOLERANCES)}")
        out[key] = float(val)
    return out


def cmd_params(args) -> int:
    started = time.perf_counter()
    if args.q is not None:
        if args.a is not None or args.b is not None:
            print("give either --q/--d or --a/--b/--d", file=sys.stderr)
            return 2
        p = fs_params(args.q, args.d)
        rep = _report("params", {"q": args.q, "d": args.d}, p.as_dict(), [], started, args.timing)
        _emit(rep)
        return 0
    if args.a is None or args.b is None:
        print("give either --q/--d or --a/--b/--d", file=sys.stderr)
        return 2
    c = classify(args.a, args.b, args.d)
    rep = _report("params", {"a": args.a, "b": args.b, "d": args.d}, c.as_dict(), [], started, args.timing)
    _emit(rep)
    if not c.admissible:
        print("parameter pair violates: " + "; ".join(c.violations), file=sys.stderr)
        return 2
    return 0


def _q_values(args) -> list[float]:
    if args.q:
        return _parse_list(args.q)
    lo, hi = _parse_range(args.q_range)
    n = int(math.floor((hi - lo) / args.step + 1e-9))
    return [round(lo + i * args.step, 12) for i in range(n + 1)]


def _d_values(text: str) -> list[int]:
    if ":" in text:
        lo, hi = _parse_range(text)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in _parse_list(text)]


def cmd_jconst(args) -> int:
    started = time.perf_counter()
    rows, checks = [], []
    for d in sorted(_d_values(args.d)):
        for q in sorted(_q_values(args)):
            if not (2 < q < critical_exponent(d)):
                checks.append(Check(f"J(q={q:g},d={d})", None, note="outside 2 < q < 2*"))
                continue
            p = fs_params(q, d)
            e2, ss = en.e2_series(p)
            row = {
                "q": q, "d": d, "J": en.j_constant(p, ss.value), "J_tilde": en.j_tilde(p, ss.value),
                "series_sum": ss.value, "E0": en.e0_closed_form(p), "E2": e2, "B": en.b_term(p),
            }
            rows.append(row)
            checks.append(Check(f"J(q={q:g},d={d})>0", row["J"] > 0, row["J"], 0.0))
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in rows:
            w.writerow([r["d"] if k == "d" else f"{r[k]:.15g}" for k in CSV_FIELDS])
        sys.stdout.write(buf.getvalue())
    else:
        inputs = {"d": args.d, "q": args.q or args.q_range, "step": None if args.q else args.step}
        _emit(_report("jconst", inputs, {"rows": rows}, checks, started, args.timing))
    _complain(checks)
    return _exit_code(checks, args.allow_skip)


def cmd_verify(args) -> int:
    started = time.perf_counter()
    tols = _parse_tols(args.tol)
    p = None if args.suite == "identities" else fs_params(args.q, args.d)
    kw = {}
    if args.suite == "quartic":
        kw["mus"] = tuple(_parse_list(args.mu))
    if args.suite == "convexity":
        kw["expect_any"] = args.expect_any
    res = run_suite(args.suite, p, tols, **kw)
    inputs = {"suite": args.suite, "q": args.q, "d": args.d}
    if "mus" in kw:
        inputs["mu"] = list(kw["mus"])
    _emit(_report("verify", inputs, res.outputs, res.checks, started, args.timing))
    _complain(res.checks)
    return _exit_code(res.checks, args.allow_skip)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cknquartic", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--timing", action="store_true", help="include elapsed_ms in the report")
        sp.add_argument("--allow-skip", action="store_true", help="do not fail on skipped checks")

    sp = sub.add_parser("params", help="FS-curve scalars at (q, d) or classification of (a, b, d)")
    sp.add_argument("--q", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--d", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("jconst", help="table of J(q, d) and the energies")
    sp.add_argument("--q", help="comma-separated q values")
    sp.add_argument("--q-range", default="2.2:5.8", help="LO:HI, inclusive")
    sp.add_argument("--step", type=float, default=0.2)
    sp.add_argument("--d", default="3", help="comma list or LO:HI")
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    common(sp)
    sp.set_defaults(func=cmd_jconst)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("suite", choices=sorted(SUITES))
    sp.add_argument("--q", type=float, default=4.0)
    sp.add_argument("--d", type=float, default=3.0)
    sp.add_argument("--mu", default="0.1,0.05,0.025", help="comma-separated mu values (quartic)")
    sp.add_argument("--expect-any", action="store_true", help="report the convexity outcome without failing")
    sp.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a default tolerance")
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
