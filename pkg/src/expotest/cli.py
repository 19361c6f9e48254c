"""Command-line interface.

Subcommands: ``test``, ``critvals``, ``power``, ``efficiency``, ``demo``.
Exit status is 0 on success and 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from expotest import efficiency as eff
from expotest.alternatives import FamilyError, parse_family
from expotest.nullmc import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    NullCache,
    TestReport,
    critical_table,
    run_test,
)
from expotest.power import ROSTER, power, power_table, to_csv, to_markdown
from expotest.vstat import SortedSample

FIXTURES = ("aircraft",)
DEFAULT_EFFICIENCY_FAMILIES = ("weibull", "makeham", "emnw:3", "ged", "ee")


class ValidationError(ValueError):
    """Bad user input; reported on stderr with exit status 2."""


# -- data input -------------------------------------------------------------------


def parse_data(text: str, source: str = "<data>") -> list[float]:
    """Whitespace-separated decimal literals; lines starting with '#' are comments."""
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        for token in stripped.split():
            try:
                v = float(token)
            except ValueError:
                raise ValidationError(
                    f"{source}:{lineno}: cannot parse {token!r} as a number"
                ) from None
            if not np.isfinite(v):
                raise ValidationError(f"{source}:{lineno}: non-finite value {token!r}")
            if v < 0:
                raise ValidationError(f"{source}:{lineno}: negative value {token!r}")
            values.append(v)
    if not values:
        raise ValidationError(f"{source}: no observations found")
    return values


def load_fixture(name: str) -> list[float]:
    if name not in FIXTURES:
        raise ValidationError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    text = resources.files("expotest").joinpath("data", f"{name}.txt").read_text()
    return parse_data(text, f"{name}.txt")


def load_data(path: str) -> list[float]:
    if path in FIXTURES:
        return load_fixture(path)
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"data file not found: {path}")
    return parse_data(p.read_text(), path)


# -- rendering ------------------------------------------------------------------


def _csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c) for c in columns})
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def render_test_report(report: TestReport, fmt: str) -> str:
    if fmt == "json":
        return _json(report.to_dict())
    stats = [k for k, v in (("I", report.i_value), ("K", report.k_value)) if v is not None]
    rows = []
    for k in stats:
        value = report.i_value if k == "I" else report.k_value
        p = report.p_i if k == "I" else report.p_k
        decisions = report.reject_i if k == "I" else report.reject_k
        row = {"statistic": k, "value": value, "p_value": p}
        row["p_asymptotic"] = report.p_i_asymptotic if k == "I" else ""
        for a, rej in decisions.items():
            row[f"reject@{a}"] = rej
        rows.append(row)
    if fmt == "csv":
        return _csv(rows, list(rows[0]))
    lines = [
        f"n = {report.n}, Monte Carlo reps = {report.reps}, seed = {report.seed}",
        "",
        "| statistic | value | p-value | asymptotic p | "
        + " | ".join(f"reject at {a}" for a in report.reject_i or report.reject_k)
        + " |",
        "|---|---|---|---|" + "---|" * len(report.alphas),
    ]
    for row in rows:
        decisions = [("yes" if v else "no") for key, v in row.items() if key.startswith("reject@")]
        asym = f"{row['p_asymptotic']:.4f}" if row["p_asymptotic"] != "" else "-"
        lines.append(
            f"| {row['statistic']} | {row['value']:.4f} | {row['p_value']:.4f} | {asym} | "
            + " | ".join(decisions)
            + " |"
        )
    if report.i_value is not None:
        lines += [
            "",
            "The asymptotic p-value for I uses the normal limit and ignores the",
            "finite-sample bias of the V-statistic; prefer the Monte Carlo p-value.",
        ]
    return "\n".join(lines) + "\n"


def render_critical_table(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return _json(rows)
    if fmt == "csv":
        return _csv(rows, ("kind", "n", "reps", "seed", "alpha", "critical_value"))
    alphas = sorted({r["alpha"] for r in rows}, reverse=True)
    lines = []
    for kind in dict.fromkeys(r["kind"] for r in rows):
        lines += [
            f"Critical values for {kind}_n",
            "",
            "| n | " + " | ".join(f"alpha={a:g}" for a in alphas) + " |",
            "|---|" + "---|" * len(alphas),
        ]
        for n in dict.fromkeys(r["n"] for r in rows if r["kind"] == kind):
            cells = {r["alpha"]: r["critical_value"] for r in rows if r["kind"] == kind and r["n"] == n}
            lines.append(f"| {n} | " + " | ".join(f"{cells[a]:.2f}" for a in alphas) + " |")
        lines.append("")
    return "\n".join(lines)


def characterization_distance(
    fam_spec: str, count: int, seed: int
) -> float:
    """Two-sample Kolmogorov distance between X0 + med(X1,X2,X3) and max(X1,X2,X3).

    Each side uses its own ``count`` independent quadruples.
    """
    fam, theta = parse_family(fam_spec)
    rng = np.random.default_rng(seed)
    left = fam.sample(theta, 4 * count, rng).reshape(count, 4)
    right = fam.sample(theta, 3 * count, rng).reshape(count, 3)
    a = np.sort(left[:, 0] + np.median(left[:, 1:], axis=1))
    b = np.sort(right.max(axis=1))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / count
    fb = np.searchsorted(b, grid, side="right") / count
    return float(np.max(np.abs(fa - fb)))


# -- subcommands ------------------------------------------------------------------


def _kinds(stat: str) -> tuple[str, ...]:
    return ("I", "K") if stat == "both" else (stat,)


def cmd_test(args) -> str:
    if args.reps < 100:
        raise ValidationError("--reps must be at least 100 for the test subcommand")
    data = load_data(args.data)
    report = run_test(
        SortedSample(data),
        reps=args.reps,
        seed=args.seed,
        alphas=args.alpha,
        workers=args.workers,
        i_alternative="two-sided" if args.two_sided else "greater",
        kinds=_kinds(args.stat),
    )
    return render_test_report(report, args.format)


def cmd_critvals(args) -> str:
    kinds = ("K",) if args.stat is None else _kinds(args.stat)
    cache = NullCache(args.cache) if args.cache else None
    rows = critical_table(args.n, args.alpha, args.reps, args.seed, kinds, args.workers, cache)
    return render_critical_table(rows, args.format)


def cmd_power(args) -> str:
    if len(args.n) != 1 or len(args.alpha) != 1:
        raise ValidationError("power takes a single --n and a single --alpha")
    n, alpha = args.n[0], args.alpha[0]
    kinds = _kinds(args.stat)
    if args.family:
        cells = []
        for spec in args.family:
            fam, theta = parse_family(spec)
            for kind in kinds:
                cells.append(
                    power(fam, theta, n, alpha, args.reps, args.seed, kind, label=spec)
                )
    else:
        cells = power_table(n, alpha, args.reps, args.seed, ROSTER, kinds)
    if args.format == "json":
        return _json([c.as_row() for c in cells])
    if args.format == "csv":
        return to_csv(cells)
    return to_markdown(cells)


def _curves_csv(families: Sequence[str]) -> str:
    grid = np.round(np.arange(0.0, eff.T_GRID_MAX + 1e-9, eff.T_GRID_STEP), 10)
    columns = ["t", "sigma2_k"]
    series = [eff.sigma2_k(grid)]
    for spec in families:
        fam, _ = parse_family(spec)
        if fam.h is None:
            continue
        columns.append(f"a_prime[{spec}]")
        series.append(np.array([4.0 * eff.xi_h_integral(fam, t) for t in grid]))
    rows = [dict(zip(columns, [t, *(s[i] for s in series)])) for i, t in enumerate(grid)]
    return _csv(rows, columns)


def cmd_efficiency(args) -> str:
    specs = args.family or list(DEFAULT_EFFICIENCY_FAMILIES)
    reports = []
    for spec in specs:
        fam, _ = parse_family(spec)
        for kind in _kinds(args.stat):
            reports.append(eff.efficiency(fam, kind, args.method))
    if args.curves:
        Path(args.curves).write_text(_curves_csv(specs))
    if args.format == "json":
        return _json([{**r.as_row(), "integrals": r.integrals} for r in reports])
    if args.format == "csv":
        return eff.reports_to_csv(reports)
    return eff.reports_to_markdown(reports)


def cmd_demo(args) -> str:
    rows = [
        {
            "family": spec,
            "quadruples": args.quadruples,
            "seed": args.seed,
            "kolmogorov_distance": characterization_distance(spec, args.quadruples, args.seed),
        }
        for spec in ["exp", *args.family]
    ]
    if args.format == "json":
        return _json(rows)
    if args.format == "csv":
        return _csv(rows, list(rows[0]))
    lines = [
        "Distance between the laws of X0 + med(X1,X2,X3) and max(X1,X2,X3)",
        "",
        "| family | quadruples | distance |",
        "|---|---|---|",
    ]
    lines += [f"| {r['family']} | {r['quadruples']} | {r['kolmogorov_distance']:.4f} |" for r in rows]
    return "\n".join(lines) + "\n"


# -- argument parsing -----------------------------------------------------------------


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1), got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expotest",
        description="Characterization-based tests for exponentiality (I_n and K_n).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "md"), default="md")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--reps", type=_positive_int, default=DEFAULT_REPS)
    mc.add_argument("--workers", type=_positive_int, default=1)

    p = sub.add_parser("test", parents=[common, mc], help="test a data file for exponentiality")
    p.add_argument("--data", required=True, help="path to a data file, or 'aircraft'")
    p.add_argument("--stat", choices=("I", "K", "both"), default="both")
    p.add_argument("--alpha", type=_probability, action="append")
    p.add_argument("--two-sided", action="store_true", help="two-sided p-value for I")
    p.set_defaults(func=cmd_test, default_alpha=[0.05])

    p = sub.add_parser("critvals", parents=[common, mc], help="Monte Carlo critical values")
    p.add_argument("--n", type=_positive_int, action="append")
    p.add_argument("--alpha", type=_probability, action="append")
    p.add_argument("--stat", choices=("I", "K", "both"), default=None)
    p.add_argument("--cache", help="directory for cached raw null values")
    p.set_defaults(
        func=cmd_critvals, default_n=[10, 20, 30, 40, 50, 100], default_alpha=[0.1, 0.05, 0.025, 0.01]
    )

    p = sub.add_parser("power", parents=[common, mc], help="Monte Carlo power study")
    p.add_argument("--n", type=_positive_int, action="append")
    p.add_argument("--alpha", type=_probability, action="append")
    p.add_argument("--stat", choices=("I", "K", "both"), default="both")
    p.add_argument("--family", action="append", help="e.g. weibull:0.4 (default: full roster)")
    p.set_defaults(func=cmd_power, default_n=[20], default_alpha=[0.05])

    p = sub.add_parser("efficiency", parents=[common], help="local Bahadur efficiencies")
    p.add_argument("--family", action="append", help="e.g. weibull, emnw:3")
    p.add_argument("--stat", choices=("I", "K", "both"), default="both")
    p.add_argument("--method", choices=("adaptive", "fixed"), default="adaptive")
    p.add_argument("--curves", help="also write sigma2_k(t) and a'(t,0) curves as CSV")
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("demo", parents=[common], help="simulate the characterizing identity")
    p.add_argument("--quadruples", type=_positive_int, default=100_000)
    p.add_argument("--family", action="append", help="alternative(s) to contrast (default: uniform)")
    p.set_defaults(func=cmd_demo)
    return parser


def _apply_defaults(args) -> None:
    # append-actions cannot carry defaults without accumulating onto them
    for name in ("n", "alpha"):
        if hasattr(args, name) and getattr(args, name) is None:
            setattr(args, name, getattr(args, f"default_{name}", None))
    if getattr(args, "command", None) == "demo" and not args.family:
        args.family = ["uniform"]


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_defaults(args)
    try:
        if not 0 <= args.seed < 2**64:
            raise ValidationError("--seed must be a 64-bit unsigned integer")
        if getattr(args, "family", None):
            for spec in args.family:
                parse_family(spec)
        output = args.func(args)
    except (ValidationError, FamilyError, ValueError) as exc:
        print(f"expotest: error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        Path(args.out).write_text(output)
    else:
        sys.stdout.write(output)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
