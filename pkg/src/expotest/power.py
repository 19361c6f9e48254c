"""Monte Carlo power of the I_n and K_n tests against fixed alternatives."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from expotest.alternatives import AlternativeFamily, family
from expotest.nullmc import (
    DEFAULT_REPS,
    DEFAULT_SEED,
    NullDistribution,
    critical_value,
    evaluate,
    simulate_null,
)

CSV_COLUMNS = ("family", "theta", "n", "alpha", "kind", "reps", "power", "se")

# (row label, family name, shape params, theta)
ROSTER: tuple[tuple[str, str, tuple[float, ...], float | None], ...] = (
    ("W(1.4)", "weibull", (), 0.4),
    ("Γ(2)", "gamma", (), 2.0),
    ("LN(0.8)", "lognormal", (), 0.8),
    ("HN", "halfnormal", (), None),
    ("U", "uniform", (), None),
    ("CH(0.5)", "chen", (), 0.5),
    ("CH(1.0)", "chen", (), 1.0),
    ("CH(1.5)", "chen", (), 1.5),
    ("LF(2.0)", "lfr", (), 2.0),
    ("LF(4.0)", "lfr", (), 4.0),
    ("EW(0.5)", "expexp", (), 0.5),
    ("EW(1.5)", "expexp", (), 1.5),
)


@dataclass(frozen=True)
class PowerCell:
    family: str
    theta: float | None
    n: int
    alpha: float
    kind: str
    reps: int
    power: float
    se: float
    critical_value: float

    def as_row(self) -> dict:
        row = asdict(self)
        return {c: row[c] for c in CSV_COLUMNS}


def cell_seed(master: int, label: str, n: int, alpha: float, kind: str) -> np.random.SeedSequence:
    """Per-cell stream, stable across runs and independent of cell order."""
    key = f"{label}|{n}|{alpha!r}|{kind}".encode()
    digest = int.from_bytes(hashlib.sha256(key).digest()[:8], "little")
    return np.random.SeedSequence([int(master), digest])


@lru_cache(maxsize=64)
def _calibration(kind: str, n: int, reps: int, seed: int) -> NullDistribution:
    return simulate_null(kind, n, reps, seed)


def power(
    fam: AlternativeFamily,
    theta: float | None,
    n: int,
    alpha: float,
    reps: int,
    seed: int,
    kind: str,
    *,
    label: str | None = None,
    calibration_reps: int = DEFAULT_REPS,
    calibration_seed: int = DEFAULT_SEED,
    null: NullDistribution | None = None,
) -> PowerCell:
    """Rejection rate of the ``kind`` test at level ``alpha`` under ``fam(theta)``.

    The test rejects when the statistic exceeds the Monte Carlo critical value
    computed from ``calibration_reps`` null replications.
    """
    theta = fam.check_theta(theta)
    if null is None:
        null = _calibration(kind, n, calibration_reps, calibration_seed)
    crit = critical_value(null, alpha)
    label = label or _default_label(fam, theta)
    rng = np.random.default_rng(cell_seed(seed, label, n, alpha, kind))
    draws = fam.sample(theta, reps * n, rng).reshape(reps, n)
    rejections = sum(evaluate(kind, row) > crit for row in draws)
    p = rejections / reps
    return PowerCell(
        family=label,
        theta=theta,
        n=n,
        alpha=alpha,
        kind=kind,
        reps=reps,
        power=p,
        se=math.sqrt(p * (1.0 - p) / reps),
        critical_value=crit,
    )


def _default_label(fam: AlternativeFamily, theta: float | None) -> str:
    return fam.label if theta is None else f"{fam.label}:{theta:g}"


def power_table(
    n: int,
    alpha: float,
    reps: int,
    seed: int,
    roster: Iterable[tuple[str, str, tuple[float, ...], float | None]] = ROSTER,
    kinds: Sequence[str] = ("I", "K"),
    calibration_reps: int = DEFAULT_REPS,
    calibration_seed: int = DEFAULT_SEED,
) -> list[PowerCell]:
    cells = []
    for label, name, params, theta in roster:
        fam = family(name, *params)
        for kind in kinds:
            cells.append(
                power(
                    fam,
                    theta,
                    n,
                    alpha,
                    reps,
                    seed,
                    kind,
                    label=label,
                    calibration_reps=calibration_reps,
                    calibration_seed=calibration_seed,
                )
            )
    return cells


def to_csv(cells: Iterable[PowerCell]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for cell in cells:
        writer.writerow(cell.as_row())
    return buf.getvalue()


def to_markdown(cells: Sequence[PowerCell]) -> str:
    """One row per family, one percentage column per statistic."""
    kinds = list(dict.fromkeys(c.kind for c in cells))
    rows: dict[str, dict[str, float]] = {}
    for c in cells:
        rows.setdefault(c.family, {})[c.kind] = c.power
    if not cells:
        return ""
    n, alpha = cells[0].n, cells[0].alpha
    lines = [
        f"Percentage of significant samples, n={n}, alpha={alpha:g}",
        "",
        "| Alternative | " + " | ".join(kinds) + " |",
        "|---|" + "---|" * len(kinds),
    ]
    for fam, vals in rows.items():
        cols = " | ".join(
            f"{round(100 * vals[k]):d}" if k in vals else "" for k in kinds
        )
        lines.append(f"| {fam} | {cols} |")
    return "\n".join(lines) + "\n"
