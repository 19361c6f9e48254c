"""Local Bahadur efficiency of the I_n and K_n tests.

For an alternative ``g(x, theta)`` with ``g(x, 0) = exp(-x)`` and
``h = dg/dtheta`` at 0, the local efficiency of a statistic with limit in
probability ``b(theta)`` and large-deviation rate ``f(e) = c e^2`` is

    lim 2 f(b(theta)) / (2 KL(theta))

where ``KL`` is the Kullback-Leibler divergence from the alternative to the
exponential family.  First-order families use the closed forms below;
families whose first derivative is absorbed by a rescaling (e.g. ``ee``)
go through the population functionals at small theta and a polynomial
extrapolation to theta -> 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from expotest.alternatives import AlternativeFamily, FamilyError
from expotest.quadrature import QuadratureError, integrate, tanh_sinh

__all__ = [
    "SIGMA2_I",
    "LD_COEFFICIENT_I",
    "EfficiencyReport",
    "psi",
    "xi",
    "sigma2_k",
    "maximize_sigma2_k",
    "ld_coefficient_k",
    "psi_h_integral",
    "xi_h_integral",
    "slope_i",
    "slope_k",
    "kl_curvature",
    "kl_exact",
    "kl_quartic_coefficient",
    "population_b_i",
    "population_a",
    "second_order_slope_i",
    "second_order_slope_k",
    "efficiency",
    "locally_optimal_density",
]

SIGMA2_I = 29.0 / 42000.0
# f_I(e) = e^2 / (2 * 25 * sigma2_I) = 840/29 e^2
LD_COEFFICIENT_I = 1.0 / (50.0 * SIGMA2_I)

T_GRID_STEP = 0.05
T_GRID_MAX = 15.0
SMALL_THETAS = (0.005, 0.01, 0.02, 0.04)
DEGENERATE_TOL = 1e-9


@dataclass
class EfficiencyReport:
    family: str
    kind: str
    order: int
    slope_coefficient: float
    kl_curvature: float
    ld_coefficient: float
    efficiency: float
    argmax_t: float | None = None
    integrals: dict[str, float] = field(default_factory=dict)

    def as_row(self) -> dict:
        row = asdict(self)
        row.pop("integrals")
        return row


# -- projections --------------------------------------------------------------


def psi(s):
    """Projection of the I_n kernel onto one argument under Exp(1)."""
    s = np.asarray(s, dtype=np.float64)
    return -1.0 / 20.0 + 0.4 * np.exp(-3.0 * s) - 0.9 * np.exp(-2.0 * s) + 0.5 * np.exp(-s)


def xi(s, t):
    """Projection of the K_n kernel at level ``t`` onto one argument.

    Jumps by ``-(3/4) (1 - e^-t)^2`` as ``s`` crosses ``t`` from below.
    """
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    sl = np.minimum(s, t)
    below = 0.25 * (
        -np.exp(-3.0 * t)
        - 2.0 * np.exp(3.0 * (sl - t))
        + 6.0 * np.exp(-sl - t)
        + 3.0 * np.exp(-2.0 * t)
        + 3.0 * np.exp(2.0 * (sl - t))
        - np.exp(-t) * (9.0 - 6.0 * sl)
    )
    above = 0.25 * (-np.exp(-3.0 * t) + 6.0 * np.exp(-2.0 * t) - 2.0 - np.exp(-t) * (3.0 - 6.0 * t))
    return np.where(s < t, below, above)


def sigma2_k(t):
    """Null variance of ``xi(X, t)``."""
    t = np.asarray(t, dtype=np.float64)
    return (
        -9.0 / 80.0 * np.exp(-6.0 * t)
        + 3.0 / 8.0 * np.exp(-5.0 * t)
        + 3.0 / 8.0 * np.exp(-4.0 * t)
        + 9.0 / 8.0 * np.exp(-3.0 * t)
        + 9.0 / 4.0 * t * np.exp(-3.0 * t)
        - 33.0 / 16.0 * np.exp(-2.0 * t)
        + 3.0 / 10.0 * np.exp(-t)
    )


def _grid_argmax(f, lo: float, hi: float, step: float, scan=None) -> tuple[float, float]:
    """Maximize a scalar function: grid scan, then bounded Brent refinement.

    ``scan`` (defaults to ``f``) evaluates the grid; it may be a cheaper
    approximation of ``f`` since only the location of the peak is used.
    """
    grid = np.arange(lo, hi + step / 2, step)
    vals = np.array([(scan or f)(t) for t in grid])
    k = int(np.argmax(vals))
    vals[k] = f(grid[k])
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda t: -f(t), bounds=(a, b), method="bounded", options={"xatol": 1e-10}
    )
    if -res.fun >= vals[k]:
        return float(res.x), float(-res.fun)
    return float(grid[k]), float(vals[k])


def maximize_sigma2_k() -> tuple[float, float]:
    """``(t0, sup_t sigma2_k(t))`` over [0, 20]."""
    return _grid_argmax(lambda t: float(sigma2_k(t)), 0.0, 20.0, T_GRID_STEP)


def ld_coefficient_k(sigma2: float | None = None) -> float:
    if sigma2 is None:
        sigma2 = maximize_sigma2_k()[1]
    return 1.0 / (32.0 * sigma2)


# -- first-order quantities ---------------------------------------------------


def _require_h(fam: AlternativeFamily):
    if fam.h is None:
        raise FamilyError(f"family {fam.label} has no perturbation function h")
    return fam.h


def psi_h_integral(fam: AlternativeFamily, method: str = "adaptive") -> float:
    h = _require_h(fam)
    return integrate(lambda x: psi(x) * h(x), points=fam.h_breaks, method=method)


def slope_i(fam: AlternativeFamily, method: str = "adaptive") -> float:
    """Coefficient of theta in the limit in probability of I_n."""
    return 5.0 * psi_h_integral(fam, method)


def xi_h_integral(fam: AlternativeFamily, t: float, method: str = "adaptive") -> float:
    h = _require_h(fam)
    pts = tuple(sorted({t, *fam.h_breaks} - {0.0}))
    return integrate(lambda x: xi(x, t) * h(x), points=pts, method=method)


def slope_k(fam: AlternativeFamily, method: str = "adaptive") -> tuple[float, float]:
    """``(4 sup_t |int xi(x,t) h(x) dx|, argmax t)``."""
    t1, val = _grid_argmax(
        lambda t: abs(xi_h_integral(fam, t, method)),
        0.0,
        T_GRID_MAX,
        T_GRID_STEP,
        scan=lambda t: abs(xi_h_integral(fam, t, "fixed")),
    )
    return 4.0 * val, t1


def kl_curvature(fam: AlternativeFamily, method: str = "adaptive") -> float:
    """Coefficient of theta^2 in twice the KL divergence to the exponential family."""
    h = _require_h(fam)
    pts = fam.h_breaks
    energy = integrate(lambda x: h(x) * (h(x) * np.exp(x)), points=pts, method=method)
    first = integrate(lambda x: x * h(x), points=pts, method=method)
    return energy - first * first


def _rlogr_term(r):
    # r log r - r + 1, stable near r = 1
    d = r - 1.0
    small = np.abs(d) < 1e-4
    series = d * d * (0.5 - d / 6.0 + d * d / 12.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.where(r > 0, r * np.log(np.where(r > 0, r, 1.0)), 0.0) - d
    return np.where(small, series, direct)


def kl_exact(fam: AlternativeFamily, theta: float, method: str = "adaptive") -> float:
    """KL divergence from ``g(., theta)`` to the closest exponential density.

    The optimal rate is ``1 / mean``, so the divergence equals
    ``int q (r log r - r + 1)`` with ``q`` the fitted exponential density and
    ``r = g / q``; the integrand is nonnegative and free of cancellation.
    """
    theta = fam.check_theta(theta)
    if theta == fam.null_theta:
        return 0.0
    mean = integrate(lambda x: x * fam.density_fn(x, theta), points=fam.h_breaks, method=method)
    lam = 1.0 / mean

    def integrand(x):
        q = lam * np.exp(-lam * x)
        g = fam.density_fn(x, theta)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            r = g / q
        return np.where(q > 0, q * _rlogr_term(r), 0.0)

    val = integrate(integrand, points=fam.h_breaks, method=method)
    if not math.isfinite(val):
        raise QuadratureError("non-finite entropy integral")
    return val


def _extrapolate_to_zero(thetas: Sequence[float], values: Sequence[float]) -> float:
    # polynomial through (theta_i, value_i), evaluated at 0
    coeffs = np.polyfit(np.asarray(thetas), np.asarray(values), len(thetas) - 1)
    return float(coeffs[-1])


def kl_quartic_coefficient(
    fam: AlternativeFamily, thetas: Sequence[float] = SMALL_THETAS, method: str = "adaptive"
) -> float:
    """Limit of ``2 KL(theta) / theta^4`` as theta -> 0."""
    vals = [2.0 * kl_exact(fam, th, method) / th**4 for th in thetas]
    return _extrapolate_to_zero(thetas, vals)


# -- population functionals (second-order path) --------------------------------


def _de_nodes_halfline(step: float = 1.0 / 16.0):
    u = np.arange(-4.5, 4.0, step)
    off = np.exp(0.5 * math.pi * np.sinh(u))
    keep = off <= 200.0
    u, off = u[keep], off[keep]
    return off, step * 0.5 * math.pi * np.cosh(u) * off


def population_b_i(fam: AlternativeFamily, theta: float, method: str = "fixed") -> float:
    """Limit in probability of I_n under ``fam(theta)``.

    ``1/4 - P(X1 + med(X2,X3,X4) < X5)``; the probability is
    ``int int g(x) 6 G(y) (1 - G(y)) g(y) (1 - G(x + y)) dy dx``.
    """
    theta = fam.check_theta(theta)
    g = lambda x: fam.density_fn(x, theta)  # noqa: E731
    G = lambda x: fam.cdf_fn(x, theta)  # noqa: E731

    def inner(y, x):
        gy = G(y)
        return 6.0 * gy * (1.0 - gy) * g(y) * (1.0 - G(x + y))

    if method == "fixed":
        x, wx = _de_nodes_halfline()
        X, Y = np.meshgrid(x, x, indexing="ij")
        prob = float(np.einsum("i,j,ij->", wx * g(x), wx, inner(Y, X)))
    elif method == "adaptive":
        from scipy.integrate import dblquad

        prob, err = dblquad(
            lambda y, x: float(g(np.float64(x)) * inner(np.float64(y), np.float64(x))),
            0.0,
            60.0,
            0.0,
            60.0,
            epsabs=1e-13,
            epsrel=1e-11,
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return 0.25 - prob


def population_a(fam: AlternativeFamily, t, theta: float) -> np.ndarray:
    """``P(max(X2,X3,X4) < t) - P(X1 + med(X2,X3,X4) < t)`` under ``fam(theta)``.

    The median of a triple falls below ``u`` with probability
    ``3 G(u)^2 - 2 G(u)^3``, which collapses the triple integral to one
    dimension.
    """
    theta = fam.check_theta(theta)
    ts = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.empty_like(ts)
    for k, tk in enumerate(ts):
        if tk <= 0:
            out[k] = 0.0
            continue
        Gt = fam.cdf_fn(np.float64(tk), theta)

        def f(x, tk=tk):
            q = fam.cdf_fn(tk - x, theta)
            return fam.density_fn(x, theta) * (3.0 * q * q - 2.0 * q**3)

        out[k] = Gt**3 - tanh_sinh(f, 0.0, tk)
    return out if np.ndim(t) else out[0]


def second_order_slope_i(
    fam: AlternativeFamily, thetas: Sequence[float] = SMALL_THETAS, method: str = "fixed"
) -> float:
    """Limit of ``b_I(theta) / theta^2`` as theta -> 0."""
    vals = [population_b_i(fam, th, method) / th**2 for th in thetas]
    return _extrapolate_to_zero(thetas, vals)


def second_order_slope_k(
    fam: AlternativeFamily, thetas: Sequence[float] = SMALL_THETAS
) -> tuple[float, float]:
    """``(sup_t |a2(t)|, argmax)`` with ``a2(t) = lim a(t, theta) / theta^2``."""

    def a2(t):
        vals = [float(population_a(fam, t, th)) / th**2 for th in thetas]
        return abs(_extrapolate_to_zero(thetas, vals))

    t2, val = _grid_argmax(a2, 0.0, T_GRID_MAX, T_GRID_STEP)
    return val, t2


# -- efficiency -----------------------------------------------------------------


def efficiency(
    fam: AlternativeFamily, kind: str, method: str = "adaptive"
) -> EfficiencyReport:
    """Local Bahadur efficiency of the ``kind`` test against ``fam``."""
    if kind not in ("I", "K"):
        raise ValueError("kind must be 'I' or 'K'")
    _require_h(fam)
    curvature = kl_curvature(fam, method)
    if kind == "I":
        proj = psi_h_integral(fam, method)
        integrals = {"psi_h": proj, "sigma2": SIGMA2_I}
        ld = LD_COEFFICIENT_I
        if abs(proj) > DEGENERATE_TOL and curvature > DEGENERATE_TOL:
            return EfficiencyReport(
                family=fam.label,
                kind=kind,
                order=1,
                slope_coefficient=5.0 * proj,
                kl_curvature=curvature,
                ld_coefficient=ld,
                efficiency=proj * proj / (SIGMA2_I * curvature),
                integrals=integrals,
            )
    else:
        t0, s2 = maximize_sigma2_k()
        ld = ld_coefficient_k(s2)
        slope, t1 = slope_k(fam, method)
        integrals = {"xi_h_sup": slope / 4.0, "sigma2": s2, "t0": t0}
        if slope > DEGENERATE_TOL and curvature > DEGENERATE_TOL:
            return EfficiencyReport(
                family=fam.label,
                kind=kind,
                order=1,
                slope_coefficient=slope,
                kl_curvature=curvature,
                ld_coefficient=ld,
                efficiency=(slope / 4.0) ** 2 / (s2 * curvature),
                argmax_t=t1,
                integrals=integrals,
            )
    if not (abs(curvature) <= DEGENERATE_TOL):
        raise FamilyError(
            f"{fam.label}: slope vanishes but KL curvature does not; efficiency is 0 "
            "to first order and no second-order path applies"
        )
    # second order: b ~ b2 theta^2, 2 KL ~ k4 theta^4
    quartic = kl_quartic_coefficient(fam)
    integrals["kl_first_order"] = curvature
    if kind == "I":
        b2 = second_order_slope_i(fam)
        t_arg = None
    else:
        b2, t_arg = second_order_slope_k(fam)
    return EfficiencyReport(
        family=fam.label,
        kind=kind,
        order=2,
        slope_coefficient=b2,
        kl_curvature=quartic,
        ld_coefficient=ld,
        efficiency=2.0 * ld * b2 * b2 / quartic,
        argmax_t=t_arg,
        integrals=integrals,
    )


# -- locally optimal alternatives -------------------------------------------


def _psi_tail_integral(x):
    # int_0^x exp(-s) psi(s) ds
    x = np.asarray(x, dtype=np.float64)
    return (
        -(-np.expm1(-x)) / 20.0
        + (-np.expm1(-4.0 * x)) / 10.0
        - 3.0 * (-np.expm1(-3.0 * x)) / 10.0
        + (-np.expm1(-2.0 * x)) / 4.0
    )


def locally_optimal_density(
    kind: str, C: float, D: float, t0: float | None = None
) -> AlternativeFamily:
    """Alternative ``e^-x (1 + theta (C core(x) + D (x - 1)))`` with efficiency 1.

    ``core`` is ``psi`` for the I test and ``xi(., t0)`` for the K test
    (``t0`` defaults to the maximizer of ``sigma2_k``).  ``theta`` ranges over
    ``[0, theta_max]`` where the density stays nonnegative; with ``D < 0`` the
    perturbation is unbounded below and only ``theta = 0`` is a density, but
    ``h`` is still well defined for the efficiency computation.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    if kind == "I":
        core = psi
        core_cdf = _psi_tail_integral
        breaks: tuple[float, ...] = ()
        name = f"lo_I(C={C:g},D={D:g})"
    elif kind == "K":
        if t0 is None:
            t0 = maximize_sigma2_k()[0]
        t_opt = float(t0)
        core = lambda x: xi(x, t_opt)  # noqa: E731

        def core_cdf(x):
            shape = np.shape(x)
            x = np.atleast_1d(np.asarray(x, dtype=np.float64)).ravel()
            f = lambda s: np.exp(-s) * xi(s, t_opt)  # noqa: E731
            out = np.array(
                [
                    tanh_sinh(f, 0.0, min(v, t_opt))
                    + (tanh_sinh(f, t_opt, v) if v > t_opt else 0.0)
                    for v in x
                ]
            )
            return out.reshape(shape)

        breaks = (t_opt,)
        name = f"lo_K(C={C:g},D={D:g},t0={t_opt:.4f})"
    else:
        raise ValueError("kind must be 'I' or 'K'")

    def m(x):
        return C * core(x) + D * (np.asarray(x, dtype=np.float64) - 1.0)

    if D < 0:
        theta_max = 0.0
    else:
        grid = np.concatenate([np.linspace(0.0, 60.0, 12001), np.asarray(breaks)])
        lowest = float(np.min(m(grid)))
        theta_max = math.inf if lowest >= 0 else -1.0 / lowest
    bound_core = float(np.max(np.abs(core(np.linspace(0.0, 60.0, 12001)))))

    def density(x, th):
        return np.exp(-x) * (1.0 + th * m(x))

    def cdf(x, th):
        # int_0^x e^-s (s - 1) ds = -x e^-x
        return -np.expm1(-x) + th * (C * core_cdf(x) - D * x * np.exp(-x))

    def sampler(th, rng, k):
        # envelope e^-x (A + B x): mixture of Exp(1) and Gamma(2)
        A = 1.0 + th * (C * bound_core + abs(D))
        B = th * abs(D)
        out = np.empty(0)
        while out.size < k:
            size = 2 * (k - out.size) + 16
            y = rng.standard_exponential(size)
            second = rng.random(size) < B / (A + B)
            y[second] += rng.standard_exponential(int(second.sum()))
            accept = rng.random(size) * (A + B * y) <= 1.0 + th * m(y)
            out = np.concatenate([out, y[accept]])
        return out[:k]

    return AlternativeFamily(
        name=name,
        params=(),
        theta_range=(0.0, theta_max),
        density_fn=density,
        cdf_fn=cdf,
        sampler_fn=sampler,
        h=lambda x: np.exp(-np.asarray(x, dtype=np.float64)) * m(x),
        null_theta=0.0,
        h_breaks=breaks,
    )


# -- reporting ------------------------------------------------------------------

REPORT_COLUMNS = (
    "family",
    "kind",
    "order",
    "slope_coefficient",
    "kl_curvature",
    "ld_coefficient",
    "efficiency",
    "argmax_t",
)


def reports_to_csv(reports: Sequence[EfficiencyReport]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.as_row())
    return buf.getvalue()


def reports_to_markdown(reports: Sequence[EfficiencyReport]) -> str:
    kinds = list(dict.fromkeys(r.kind for r in reports))
    table: dict[str, dict[str, float]] = {}
    for r in reports:
        table.setdefault(r.family, {})[r.kind] = r.efficiency
    lines = [
        "| Alternative | " + " | ".join(f"e({k})" for k in kinds) + " |",
        "|---|" + "---|" * len(kinds),
    ]
    for fam, vals in table.items():
        lines.append(
            f"| {fam} | "
            + " | ".join(f"{vals[k]:.3f}" if k in vals else "" for k in kinds)
            + " |"
        )
    return "\n".join(lines) + "\n"
