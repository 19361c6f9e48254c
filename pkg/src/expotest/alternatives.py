"""Registry of alternative distribution families on [0, inf).

Efficiency families (weibull, makeham, emnw, ged, ee) are indexed by a
perturbation size ``theta >= 0`` with ``theta = 0`` giving Exp(1), and carry
``h(x) = d/dtheta g(x, theta)`` at ``theta = 0``.  Power-study families
(gamma, lognormal, halfnormal, uniform, chen, lfr, expexp) use the
parameterizations customary in power comparisons of exponentiality tests.

Families are addressed from the command line as ``name[:param...][:theta]``,
e.g. ``weibull:0.4`` or ``emnw:3:0.5``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

__all__ = [
    "AlternativeFamily",
    "FamilyError",
    "family",
    "family_names",
    "parse_family",
    "sample",
]

ROOT_TOL = 1e-12


class FamilyError(ValueError):
    """Unknown family or parameter outside its admissible range."""


@dataclass(frozen=True)
class AlternativeFamily:
    name: str
    params: tuple[float, ...]
    theta_range: tuple[float, float] | None
    density_fn: Callable[[np.ndarray, float], np.ndarray] = field(repr=False)
    cdf_fn: Callable[[np.ndarray, float], np.ndarray] = field(repr=False)
    sampler_fn: Callable[[float, np.random.Generator, int], np.ndarray] = field(
        repr=False
    )
    h: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    null_theta: float | None = None
    # points where h (and the density) jump; quadrature splits there
    h_breaks: tuple[float, ...] = ()

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        return f"{self.name}({','.join(f'{p:g}' for p in self.params)})"

    @property
    def has_theta(self) -> bool:
        return self.theta_range is not None

    def check_theta(self, theta: float | None) -> float | None:
        if self.theta_range is None:
            return None
        if theta is None:
            raise FamilyError(f"{self.label} requires a parameter theta")
        lo, hi = self.theta_range
        if not lo <= theta <= hi:
            raise FamilyError(
                f"theta={theta} outside admissible range [{lo}, {hi}] for {self.label}"
            )
        return float(theta)

    def density(self, x, theta: float | None = None) -> np.ndarray:
        theta = self.check_theta(theta)
        return self.density_fn(np.asarray(x, dtype=np.float64), theta)

    def cdf(self, x, theta: float | None = None) -> np.ndarray:
        theta = self.check_theta(theta)
        x = np.asarray(x, dtype=np.float64)
        return np.where(x <= 0, 0.0, self.cdf_fn(np.maximum(x, 0.0), theta))

    def sample(
        self, theta: float | None, count: int, rng: np.random.Generator
    ) -> np.ndarray:
        theta = self.check_theta(theta)
        return self.sampler_fn(theta, rng, int(count))


# -- efficiency families -------------------------------------------------------


def _xlogx(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _exp_family() -> AlternativeFamily:
    return AlternativeFamily(
        name="exp",
        params=(),
        theta_range=None,
        density_fn=lambda x, th: np.exp(-x),
        cdf_fn=lambda x, th: -np.expm1(-x),
        sampler_fn=lambda th, rng, k: rng.standard_exponential(k),
    )


def _weibull_density(x, th):
    k = 1.0 + th
    with np.errstate(divide="ignore"):
        return k * np.power(x, th) * np.exp(-np.power(x, k))


def _weibull_h(x):
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(x)
    return np.exp(-x) * (1.0 + logx) - np.exp(-x) * _xlogx(x)


def _weibull() -> AlternativeFamily:
    # shape 1 + theta
    return AlternativeFamily(
        name="weibull",
        params=(),
        theta_range=(0.0, math.inf),
        density_fn=_weibull_density,
        cdf_fn=lambda x, th: -np.expm1(-np.power(x, 1.0 + th)),
        sampler_fn=lambda th, rng, k: rng.standard_exponential(k) ** (1.0 / (1.0 + th)),
        h=_weibull_h,
        null_theta=0.0,
    )


def _makeham_cum_hazard(x, th):
    return x + th * (np.exp(-x) - 1.0 + x)


def _makeham_sampler(th, rng, k):
    # invert the cumulative hazard: x + th (e^-x - 1 + x) = E, E ~ Exp(1)
    e = rng.standard_exponential(k)
    lo = e / (1.0 + th)
    hi = e.copy()
    while True:
        mid = 0.5 * (lo + hi)
        below = _makeham_cum_hazard(mid, th) < e
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= ROOT_TOL * np.maximum(1.0, hi)):
            return 0.5 * (lo + hi)


def _makeham_h(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x) * (2.0 - 2.0 * np.exp(-x) - x)


def _makeham() -> AlternativeFamily:
    return AlternativeFamily(
        name="makeham",
        params=(),
        theta_range=(0.0, math.inf),
        density_fn=lambda x, th: (1.0 + th * (1.0 - np.exp(-x)))
        * np.exp(-_makeham_cum_hazard(x, th)),
        cdf_fn=lambda x, th: -np.expm1(-_makeham_cum_hazard(x, th)),
        sampler_fn=_makeham_sampler,
        h=_makeham_h,
        null_theta=0.0,
    )


def _emnw(beta: float) -> AlternativeFamily:
    """Exponential mixture with negative weight: (1+t) e^-x - beta t e^(-beta x)."""
    if not beta > 1.0:
        raise FamilyError("emnw requires beta > 1")

    def density(x, th):
        return (1.0 + th) * np.exp(-x) - beta * th * np.exp(-beta * x)

    def cdf(x, th):
        return (1.0 + th) * -np.expm1(-x) - th * -np.expm1(-beta * x)

    def sampler(th, rng, k):
        # rejection from (1+th) e^-x; acceptance probability 1/(1+th)
        out = np.empty(0)
        while out.size < k:
            y = rng.standard_exponential(2 * (k - out.size) + 16)
            u = rng.random(y.size)
            keep = u * (1.0 + th) <= 1.0 + th - beta * th * np.exp(-(beta - 1.0) * y)
            out = np.concatenate([out, y[keep]])
        return out[:k]

    return AlternativeFamily(
        name="emnw",
        params=(float(beta),),
        theta_range=(0.0, 1.0 / (beta - 1.0)),
        density_fn=density,
        cdf_fn=cdf,
        sampler_fn=sampler,
        h=lambda x: np.exp(-np.asarray(x)) - beta * np.exp(-beta * np.asarray(x)),
        null_theta=0.0,
    )


def _ged_h(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x) * (1.0 - x * np.log1p(x))


def _ged() -> AlternativeFamily:
    return AlternativeFamily(
        name="ged",
        params=(),
        theta_range=(0.0, math.inf),
        density_fn=lambda x, th: (1.0 + th)
        * np.power(1.0 + x, th)
        * np.exp(1.0 - np.power(1.0 + x, 1.0 + th)),
        cdf_fn=lambda x, th: -np.expm1(1.0 - np.power(1.0 + x, 1.0 + th)),
        sampler_fn=lambda th, rng, k: np.power(
            1.0 + rng.standard_exponential(k), 1.0 / (1.0 + th)
        )
        - 1.0,
        h=_ged_h,
        null_theta=0.0,
    )


def _ee() -> AlternativeFamily:
    def sampler(th, rng, k):
        # Exp(1) w.p. 1/(1+th), Gamma(2) w.p. th/(1+th)
        second = rng.random(k) < th / (1.0 + th)
        x = rng.standard_exponential(k)
        x[second] += rng.standard_exponential(int(second.sum()))
        return x

    return AlternativeFamily(
        name="ee",
        params=(),
        theta_range=(0.0, math.inf),
        density_fn=lambda x, th: (1.0 + th * x) * np.exp(-x) / (1.0 + th),
        cdf_fn=lambda x, th: 1.0 - np.exp(-x) * (1.0 + th + th * x) / (1.0 + th),
        sampler_fn=sampler,
        h=lambda x: np.exp(-np.asarray(x)) * (np.asarray(x) - 1.0),
        null_theta=0.0,
    )


# -- power-study families ------------------------------------------------------


def _gamma() -> AlternativeFamily:
    return AlternativeFamily(
        name="gamma",
        params=(),
        theta_range=(1e-9, math.inf),
        density_fn=lambda x, th: stats.gamma.pdf(x, th),
        cdf_fn=lambda x, th: stats.gamma.cdf(x, th),
        sampler_fn=lambda th, rng, k: rng.standard_gamma(th, k),
        null_theta=1.0,
    )


def _lognormal() -> AlternativeFamily:
    # log-mean 0, log-sd theta
    return AlternativeFamily(
        name="lognormal",
        params=(),
        theta_range=(1e-9, math.inf),
        density_fn=lambda x, th: stats.lognorm.pdf(x, th),
        cdf_fn=lambda x, th: stats.lognorm.cdf(x, th),
        sampler_fn=lambda th, rng, k: np.exp(th * rng.standard_normal(k)),
    )


def _halfnormal() -> AlternativeFamily:
    return AlternativeFamily(
        name="halfnormal",
        params=(),
        theta_range=None,
        density_fn=lambda x, th: stats.halfnorm.pdf(x),
        cdf_fn=lambda x, th: stats.halfnorm.cdf(x),
        sampler_fn=lambda th, rng, k: np.abs(rng.standard_normal(k)),
    )


def _uniform() -> AlternativeFamily:
    return AlternativeFamily(
        name="uniform",
        params=(),
        theta_range=None,
        density_fn=lambda x, th: np.where((x >= 0) & (x <= 1), 1.0, 0.0),
        cdf_fn=lambda x, th: np.clip(x, 0.0, 1.0),
        sampler_fn=lambda th, rng, k: rng.random(k),
    )


def _chen() -> AlternativeFamily:
    # F(x) = 1 - exp(2 (1 - exp(x^theta)))
    def density(x, th):
        with np.errstate(divide="ignore", over="ignore"):
            xt = np.power(x, th)
            return 2.0 * th * np.power(x, th - 1.0) * np.exp(xt + 2.0 * (1.0 - np.exp(xt)))

    def cdf(x, th):
        with np.errstate(over="ignore"):
            return -np.expm1(2.0 * (1.0 - np.exp(np.power(x, th))))

    return AlternativeFamily(
        name="chen",
        params=(),
        theta_range=(1e-9, math.inf),
        density_fn=density,
        cdf_fn=cdf,
        sampler_fn=lambda th, rng, k: np.power(
            np.log1p(0.5 * rng.standard_exponential(k)), 1.0 / th
        ),
    )


def _lfr() -> AlternativeFamily:
    # linear failure rate: F(x) = 1 - exp(-x - theta x^2 / 2)
    def sampler(th, rng, k):
        e = rng.standard_exponential(k)
        if th == 0.0:
            return e
        return 2.0 * e / (1.0 + np.sqrt(1.0 + 2.0 * th * e))

    return AlternativeFamily(
        name="lfr",
        params=(),
        theta_range=(0.0, math.inf),
        density_fn=lambda x, th: (1.0 + th * x) * np.exp(-x - 0.5 * th * x * x),
        cdf_fn=lambda x, th: -np.expm1(-x - 0.5 * th * x * x),
        sampler_fn=sampler,
        null_theta=0.0,
    )


def _expexp() -> AlternativeFamily:
    # exponentiated exponential: F(x) = (1 - e^-x)^theta
    def density(x, th):
        with np.errstate(divide="ignore"):
            return th * np.power(-np.expm1(-x), th - 1.0) * np.exp(-x)

    return AlternativeFamily(
        name="expexp",
        params=(),
        theta_range=(1e-9, math.inf),
        density_fn=density,
        cdf_fn=lambda x, th: np.power(-np.expm1(-x), th),
        sampler_fn=lambda th, rng, k: -np.log1p(-np.power(rng.random(k), 1.0 / th)),
        null_theta=1.0,
    )


_REGISTRY: dict[str, tuple[int, Callable[..., AlternativeFamily]]] = {
    "exp": (0, _exp_family),
    "weibull": (0, _weibull),
    "makeham": (0, _makeham),
    "emnw": (1, _emnw),
    "ged": (0, _ged),
    "ee": (0, _ee),
    "gamma": (0, _gamma),
    "lognormal": (0, _lognormal),
    "halfnormal": (0, _halfnormal),
    "uniform": (0, _uniform),
    "chen": (0, _chen),
    "lfr": (0, _lfr),
    "expexp": (0, _expexp),
}

EFFICIENCY_FAMILIES = ("weibull", "makeham", "emnw", "ged", "ee")


def family_names() -> list[str]:
    return list(_REGISTRY)


def family(name: str, *params: float) -> AlternativeFamily:
    try:
        nparams, build = _REGISTRY[name]
    except KeyError:
        raise FamilyError(
            f"unknown family {name!r}; known: {', '.join(_REGISTRY)}"
        ) from None
    if len(params) != nparams:
        raise FamilyError(f"{name} takes {nparams} shape parameter(s), got {len(params)}")
    return build(*(float(p) for p in params))


def parse_family(text: str) -> tuple[AlternativeFamily, float | None]:
    """Parse ``name[:param...][:theta]`` into a family and its theta."""
    name, *rest = text.strip().split(":")
    if name not in _REGISTRY:
        raise FamilyError(f"unknown family {name!r}; known: {', '.join(_REGISTRY)}")
    nparams = _REGISTRY[name][0]
    try:
        nums = [float(v) for v in rest]
    except ValueError:
        raise FamilyError(f"malformed family specification {text!r}") from None
    fam = family(name, *nums[:nparams])
    extra = nums[nparams:]
    if len(extra) > 1 or (extra and not fam.has_theta):
        raise FamilyError(f"too many parameters in {text!r}")
    theta = extra[0] if extra else None
    if theta is not None:
        fam.check_theta(theta)
    return fam, theta


def sample(
    fam: AlternativeFamily, theta: float | None, count: int, stream: np.random.Generator
) -> np.ndarray:
    return fam.sample(theta, count, stream)
