"""Monte Carlo calibration of the null laws of I_n and K_n.

Both statistics are scale-free, so Exp(1) samples calibrate the whole
exponential family.  Replication ``r`` draws from its own stream derived
from ``(seed, r)``, which makes every table independent of the number of
worker processes and of execution order.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.stats import norm

from expotest.vstat import SortedSample, statistic_i, statistic_k

Kind = Literal["I", "K"]
KINDS: tuple[str, ...] = ("I", "K")

DEFAULT_SEED = 20170419
DEFAULT_REPS = 10_000
DEFAULT_BUDGET = 2 * 10**9  # n * reps

# variance of sqrt(n) I_n under the null: 25 * 29/42000
ASYMPTOTIC_VAR_I = 29.0 / 1680.0

TABLE_COLUMNS = ("kind", "n", "reps", "seed", "alpha", "critical_value")


class BudgetError(ValueError):
    """Requested simulation exceeds the configured n * reps budget."""


@dataclass(frozen=True)
class NullDistribution:
    kind: str
    n: int
    reps: int
    seed: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.sort(np.asarray(self.values, dtype=np.float64))
        if vals.size != self.reps:
            raise ValueError("number of values must equal reps")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def _check_kind(kind: str) -> str:
    if kind not in KINDS:
        raise ValueError(f"unknown statistic kind {kind!r}; expected one of {KINDS}")
    return kind


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return seed


def replication_rng(seed: int, r: int) -> np.random.Generator:
    """Independent generator for replication ``r`` of a run seeded with ``seed``.

    Identical to ``SeedSequence(seed).spawn(r + 1)[r]`` but built directly.
    """
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(r,)))
    )


def evaluate(kind: str, sample) -> float:
    s = sample if isinstance(sample, SortedSample) else SortedSample(sample)
    if kind == "I":
        return statistic_i(s)
    return statistic_k(s)[0]


def _simulate_block(kinds: Sequence[str], n: int, seed: int, start: int, stop: int):
    out = {k: np.empty(stop - start) for k in kinds}
    for j, r in enumerate(range(start, stop)):
        s = SortedSample(replication_rng(seed, r).standard_exponential(n))
        for k in kinds:
            out[k][j] = evaluate(k, s)
    return out


def _blocks(reps: int, workers: int) -> list[tuple[int, int]]:
    nblocks = max(1, min(reps, 4 * workers))
    edges = np.linspace(0, reps, nblocks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate_nulls(
    n: int,
    reps: int,
    seed: int = DEFAULT_SEED,
    kinds: Iterable[str] = KINDS,
    workers: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> dict[str, NullDistribution]:
    """Simulate the null laws of several statistics from shared samples."""
    kinds = tuple(_check_kind(k) for k in kinds)
    seed = _check_seed(seed)
    if n < 1 or reps < 1:
        raise ValueError("n and reps must be >= 1")
    if n * reps > budget:
        raise BudgetError(f"n*reps = {n * reps} exceeds budget {budget}")
    blocks = _blocks(reps, workers)
    if workers <= 1:
        parts = [_simulate_block(kinds, n, seed, a, b) for a, b in blocks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_block, kinds, n, seed, a, b) for a, b in blocks
            ]
            parts = [f.result() for f in futures]
    return {
        k: NullDistribution(
            kind=k,
            n=n,
            reps=reps,
            seed=seed,
            values=np.concatenate([p[k] for p in parts]),
        )
        for k in kinds
    }


def simulate_null(
    kind: str,
    n: int,
    reps: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> NullDistribution:
    return simulate_nulls(n, reps, seed, (kind,), workers, budget)[kind]


def critical_value(d: NullDistribution, alpha: float) -> float:
    """Upper-``alpha`` empirical quantile: order statistic ``ceil((1-alpha) reps)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if d.reps < 1:
        raise ValueError("empty null distribution")
    # the 1e-9 guards against (1 - alpha) * reps landing just above an integer
    idx = math.ceil((1.0 - alpha) * d.reps - 1e-9)
    idx = min(max(idx, 1), d.reps)
    return float(d.values[idx - 1])


def p_value(d: NullDistribution, observed: float, alternative: str = "greater") -> float:
    """Add-one Monte Carlo p-value.

    ``alternative="two-sided"`` doubles the smaller tail (capped at 1); only
    meaningful for I_n.
    """
    upper = d.reps - np.searchsorted(d.values, observed, side="left")
    p_up = (1.0 + upper) / (d.reps + 1.0)
    if alternative == "greater":
        return float(p_up)
    if alternative == "two-sided":
        lower = np.searchsorted(d.values, observed, side="right")
        p_low = (1.0 + lower) / (d.reps + 1.0)
        return float(min(1.0, 2.0 * min(p_up, p_low)))
    raise ValueError(f"unknown alternative {alternative!r}")


def asymptotic_p_i(i_value: float, n: int) -> float:
    """Upper-tail p-value from the limit law sqrt(n) I_n ~ N(0, 29/1680).

    Reference only: ignores the O(1/n) bias of the V-statistic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(norm.sf(math.sqrt(n) * i_value / math.sqrt(ASYMPTOTIC_VAR_I)))


@dataclass
class TestReport:
    """Outcome of the I and/or K test on one sample.

    Fields of a statistic that was not requested are ``None``.
    """

    n: int
    reps: int
    seed: int
    alphas: list[float]
    i_value: float | None = None
    k_value: float | None = None
    k_argmax: float | None = None
    p_i: float | None = None
    p_k: float | None = None
    p_i_asymptotic: float | None = None
    reject_i: dict[str, bool] | None = None
    reject_k: dict[str, bool] | None = None
    i_alternative: str = "greater"

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TestReport":
        return cls(**data)


def run_test(
    sample,
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    alphas: Sequence[float] = (0.05,),
    workers: int = 1,
    i_alternative: str = "greater",
    kinds: Sequence[str] = KINDS,
    nulls: dict[str, NullDistribution] | None = None,
) -> TestReport:
    """Run the requested tests on one sample, calibrated at the sample's size."""
    s = sample if isinstance(sample, SortedSample) else SortedSample(sample)
    kinds = tuple(_check_kind(k) for k in kinds)
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
    if nulls is None:
        nulls = simulate_nulls(s.n, reps, seed, kinds, workers)
    first = nulls[kinds[0]]
    report = TestReport(
        n=s.n,
        reps=first.reps,
        seed=first.seed,
        alphas=[float(a) for a in alphas],
        i_alternative=i_alternative,
    )
    if "I" in kinds:
        report.i_value = statistic_i(s)
        report.p_i = p_value(nulls["I"], report.i_value, i_alternative)
        report.p_i_asymptotic = asymptotic_p_i(report.i_value, s.n)
        report.reject_i = {str(a): report.p_i < a for a in alphas}
    if "K" in kinds:
        report.k_value, report.k_argmax = statistic_k(s)
        report.p_k = p_value(nulls["K"], report.k_value)
        report.reject_k = {str(a): report.p_k < a for a in alphas}
    return report


# -- persistence --------------------------------------------------------------


def critical_table(
    ns: Sequence[int],
    alphas: Sequence[float],
    reps: int = DEFAULT_REPS,
    seed: int = DEFAULT_SEED,
    kinds: Sequence[str] = ("K",),
    workers: int = 1,
    cache: "NullCache | None" = None,
) -> list[dict]:
    rows = []
    for n in ns:
        if cache is not None:
            nulls = {k: cache.get(k, n, reps, seed, workers) for k in kinds}
        else:
            nulls = simulate_nulls(n, reps, seed, kinds, workers)
        for k in kinds:
            for a in alphas:
                rows.append(
                    {
                        "kind": k,
                        "n": n,
                        "reps": reps,
                        "seed": seed,
                        "alpha": float(a),
                        "critical_value": critical_value(nulls[k], a),
                    }
                )
    return rows


def write_critical_table(rows: Iterable[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in TABLE_COLUMNS})


def read_critical_table(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {
                "kind": row["kind"],
                "n": int(row["n"]),
                "reps": int(row["reps"]),
                "seed": int(row["seed"]),
                "alpha": float(row["alpha"]),
                "critical_value": float(row["critical_value"]),
            }
            for row in csv.DictReader(fh)
        ]


class NullCache:
    """On-disk cache of raw null values keyed by (kind, n, reps, seed)."""

    def __init__(self, directory) -> None:
        self.directory = Path(directory)

    def path(self, kind: str, n: int, reps: int, seed: int) -> Path:
        return self.directory / f"{kind}_n{n}_reps{reps}_seed{seed}.npy"

    def load(self, kind: str, n: int, reps: int, seed: int) -> NullDistribution | None:
        p = self.path(kind, n, reps, seed)
        if not p.exists():
            return None
        return NullDistribution(kind, n, reps, seed, np.load(p))

    def store(self, d: NullDistribution) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.path(d.kind, d.n, d.reps, d.seed)
        tmp = p.with_suffix(".tmp.npy")
        np.save(tmp, d.values)
        os.replace(tmp, p)
        return p

    def get(
        self, kind: str, n: int, reps: int, seed: int, workers: int = 1
    ) -> NullDistribution:
        d = self.load(kind, n, reps, seed)
        if d is None:
            d = simulate_null(kind, n, reps, seed, workers)
            self.store(d)
        return d
