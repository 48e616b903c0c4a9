"""Command-line front end.

Exit codes: 0 success, 2 bad input or usage, 1 internal error, 3 when
``suite`` ran cleanly but at least one criterion failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import estimate, levy, renewal, specialfn, stats, suite
from .dist import family, parse_distribution, size_bias
from .streams import DEFAULT_SEED, stream

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_FAILED = 0, 1, 2, 3

NU_PRESETS = {
    "point": levy.LevyMeasure.point,
    "geometric": levy.LevyMeasure.geometric,
    "exponential": levy.LevyMeasure.exponential,
    "uniform": levy.LevyMeasure.uniform,
}


class UsageError(ValueError):
    pass


def _read_literal(text: str) -> str:
    if text.startswith("@"):
        path = Path(text[1:])
        try:
            return path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return text


def _parse_dist(text: str):
    return parse_distribution(_read_literal(text))


def _parse_nu(text: str) -> levy.LevyMeasure:
    raw = _read_literal(text)
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed Levy literal at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(obj, dict) and "preset" in obj:
        name = obj.pop("preset")
        if name not in NU_PRESETS:
            raise UsageError(f"field 'preset': unknown {name!r}; choose from {sorted(NU_PRESETS)}")
        try:
            return NU_PRESETS[name](**obj)
        except TypeError as exc:
            raise UsageError(f"preset {name!r}: {exc}") from None
    return levy.LevyMeasure.from_dict(obj)


def _clean(obj):
    """Plain JSON types with non-finite floats spelled out."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _render(payload, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n"
    rows = payload if isinstance(payload, list) else [payload]
    rows = [_flatten(r) for r in rows]
    cols = list(rows[0]) if rows else []
    for r in rows[1:]:
        cols += [c for c in r if c not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _fmt_cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return json.dumps(_clean(v))
    return v


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


# ---------------------------------------------------------------- subcommands


def cmd_bias(args) -> int:
    d = _parse_dist(args.dist)
    star = size_bias(d)
    if args.format == "json":
        payload = {"input": d.describe(), "size_biased": star.describe(), "mean": d.mean}
        try:
            payload["literal"] = star.to_dict()
        except NotImplementedError:
            pass
        _emit(_render(payload, "json"), args.out)
    else:
        _emit(star.describe() + "\n", args.out)
    return EXIT_OK


def cmd_levy(args) -> int:
    nu = _parse_nu(args.nu)
    rng = stream(args.seed, "cli.levy")
    rep = levy.verify_steutel(nu, args.n, rng, trunc_eps=args.eps)
    payload = {"nu": nu.describe(), "a": nu.total_mass, "compound_poisson": nu.is_compound_poisson,
               "steutel": rep.to_dict()}
    _emit(_render(payload, args.format), args.out)
    return EXIT_OK


def cmd_deconv(args) -> int:
    d = _parse_dist(args.dist)
    res = levy.deconvolution_check(d)
    _emit(_render({"dist": d.describe(), **res.to_dict()}, args.format), args.out)
    return EXIT_OK


def cmd_renewal(args) -> int:
    d = _parse_dist(args.dist) if args.dist else family("exponential", alpha=1.0)
    a = d.mean
    if args.experiment == "waiting":
        ts = [float(t) * a for t in args.times]
        rows = renewal.waiting_table(d, ts, args.n, stream(args.seed, "cli.renewal.wait"))
        for r in rows:
            r["ratio"] = r["mean_W"] / a
            r["ratio_theory"] = d.moment(2) / (2 * a * a)
        _emit(_render(rows, args.format), args.out)
    elif args.experiment == "dart":
        rng = stream(args.seed, "cli.renewal.dart")
        res = renewal.dart_interval(d, args.horizon * a, args.n, rng)
        oracle = stats.weighted_star_sample(d, args.n, rng)
        ks = stats.ks_two_sample(res.lengths, oracle)
        payload = {"interarrival": d.describe(), "horizon": args.horizon * a,
                   "mean_length": float(res.lengths.mean()), "size_biased_mean": d.moment(2) / a,
                   "rejection_rate": res.rejection_rate, "ks_vs_oracle": ks.to_dict()}
        _emit(_render(payload, args.format), args.out)
    else:
        rep = renewal.exponential_split_test(args.n, stream(args.seed, "cli.renewal.split"))
        _emit(_render(rep.to_dict(), args.format), args.out)
    return EXIT_OK


def cmd_midzuno(args) -> int:
    pop = estimate.Population.from_csv(_read_literal(args.pop))
    m = args.m
    rng = stream(args.seed, "cli.midzuno")
    rows = []
    for scheme in ("midzuno", "srs") if args.scheme == "both" else (args.scheme,):
        rep = estimate.monte_carlo_report(pop, m, args.n, rng, scheme)
        try:
            rep["exact_mean"] = estimate.exact_expectation(pop, m, scheme)
        except ValueError:
            rep["exact_mean"] = None
        rows.append(rep)
    _emit(_render(rows if len(rows) > 1 else rows[0], args.format), args.out)
    return EXIT_OK


def _table_or_eval(g, args) -> int:
    if args.eval:
        vals = [{"x": float(x), "value": float(g(float(x)))} for x in args.eval]
        if args.format == "json":
            _emit(_render(vals, "json"), args.out)
        else:
            _emit("".join(f"{v['value']:.10f}\n" for v in vals), args.out)
    elif args.format == "json":
        _emit(_render(g.to_dict(), "json"), args.out)
    else:
        _emit(g.to_csv(), args.out)
    return EXIT_OK


def cmd_dickman(args) -> int:
    if args.a is None:
        g = specialfn.dickman_rho(args.umax, args.h)
    else:
        g = specialfn.dickman_conv_power(args.a, args.umax, args.h)
    return _table_or_eval(g, args)


def cmd_buchstab(args) -> int:
    return _table_or_eval(specialfn.buchstab_omega(args.umax, args.h), args)


def cmd_primes(args) -> int:
    table = specialfn.SieveTable(args.nmax)
    rows = [specialfn.prime_factor_empirics(args.nmax, u, table).to_dict() for u in args.u]
    for r in rows:
        r["rho_u"] = float(specialfn.dickman_rho(max(r["u"], 1.0), 1e-3)(r["u"])) if r["u"] >= 1 else 1.0
        if r["u"] >= 2:
            om = specialfn.buchstab_omega(r["u"] + 0.01, 1e-3)
            r["omega_u"] = float(om(r["u"]))
            r["rough_scaled"] = r["rough"]["fraction"] * math.log(args.nmax) / r["u"]
    _emit(_render(rows if len(rows) > 1 else rows[0], args.format), args.out)
    return EXIT_OK


def cmd_suite(args) -> int:
    only = set(args.only) if args.only else None
    results = suite.run_suite(args.seed, args.n, only)
    width = max(len(r.name) for r in results)
    lines = [f"{r.number:>2}  {r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}" for r in results]
    sys.stdout.write("\n".join(lines) + "\n")
    for r in results:
        print(f"criterion {r.number}: {r.seconds:.2f} s", file=sys.stderr)
    if args.out:
        payload = {"seed": args.seed, "n": args.n,
                   "results": [{k: v for k, v in r.to_dict().items() if k != "seconds"} for r in results]}
        _emit(_render(payload, "json"), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--n", type=int, default=100_000, help="sample size or replications (default 1e5)")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="sizebias", description="Size-biased distributions and their applications.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    s = sub.add_parser("bias", parents=[common], help="size bias a distribution literal")
    s.add_argument("--dist", required=True, help="JSON literal or @file")
    s.set_defaults(func=cmd_bias)

    s = sub.add_parser("levy", parents=[common], help="build from a Levy measure and verify X* = X + Y")
    s.add_argument("--nu", required=True, help='JSON literal, @file, or {"preset": ..., params}')
    s.add_argument("--eps", type=float, default=0.0, help="drop jumps below eps (needed for infinite rates)")
    s.set_defaults(func=cmd_levy)

    s = sub.add_parser("deconv", parents=[common], help="non-divisibility certificate")
    s.add_argument("--dist", required=True)
    s.set_defaults(func=cmd_deconv)

    s = sub.add_parser("renewal", parents=[common], help="waiting-time experiments")
    s.add_argument("--dist", help="interarrival law (default Exp(1))")
    s.add_argument("--experiment", choices=("waiting", "dart", "split"), default="waiting")
    s.add_argument("--times", type=float, nargs="+", default=[0.0, 0.37, 3.1],
                   help="clock times in units of the mean interarrival")
    s.add_argument("--horizon", type=float, default=1e4, help="dart horizon in units of the mean")
    s.set_defaults(func=cmd_renewal)

    s = sub.add_parser("midzuno", parents=[common], help="ratio estimation experiment")
    s.add_argument("--pop", required=True, help="CSV text x,y or @file")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--scheme", choices=("midzuno", "srs", "both"), default="both")
    s.set_defaults(func=cmd_midzuno)

    for name, func, umax in (("dickman", cmd_dickman, 10.0), ("buchstab", cmd_buchstab, 6.0)):
        s = sub.add_parser(name, parents=[common], help=f"tabulate the {name} function")
        s.add_argument("--umax", type=float, default=umax)
        s.add_argument("--h", type=float, default=1e-3)
        s.add_argument("--eval", type=float, nargs="+", help="print values at these points")
        if name == "dickman":
            s.add_argument("--a", type=float, help="tabulate the normalized convolution power g_a instead")
        s.set_defaults(func=func)

    s = sub.add_parser("primes", parents=[common], help="sieve statistics against rho and omega")
    s.add_argument("--nmax", type=int, default=10**6)
    s.add_argument("--u", type=float, nargs="+", default=[2.0])
    s.set_defaults(func=cmd_primes)

    s = sub.add_parser("suite", parents=[common], help="run every acceptance check")
    s.add_argument("--only", type=int, nargs="+", help="criterion numbers to run")
    s.set_defaults(func=cmd_suite)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"sizebias {args.command}: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"sizebias {args.command}: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
