"""Sums over zero ordinates: x^{i gamma} partial sums, the truncated explicit
formula for psi(x) - x, and the large-sum height sets T_x used to pick a
common height for many x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from psilab.intervals import IntervalUnion
from psilab.numerics import compensated_cumsum_complex, compensated_sum, unit_phases
from psilab.psi import mangoldt
from psilab.zeros import OutOfRangeError, ZeroTable, _check_t

DEFAULT_THRESHOLD_COEFF = 8 * math.pi
PROOF_THRESHOLD_COEFF = 0.1  # eps*beta/10 form used when the height set feeds the partition step
LOG_TWO_PI = math.log(2 * math.pi)


class TableTooShortError(ValueError):
    def __init__(self, required_lo: float, required_hi: float, t_max: float):
        self.required = (required_lo, required_hi)
        super().__init__(
            f"zero table (t_max={t_max:.6g}) does not reach the height window "
            f"[{required_lo:.6g}, {required_hi:.6g}]; supply a longer table"
        )


@dataclass(frozen=True)
class ExpSumSeries:
    """Partial sums S(x, gamma_i) = sum_{j <= i} x^{i gamma_j}."""

    x: float
    ordinates: np.ndarray
    partial: np.ndarray

    def at(self, t: float) -> complex:
        n = int(np.searchsorted(self.ordinates, t, side="right"))
        return complex(self.partial[n - 1]) if n else 0j

    def counts(self) -> np.ndarray:
        return np.arange(1, self.ordinates.size + 1)


def exp_sum_series(table: ZeroTable, x: float, t: float) -> ExpSumSeries:
    if x < 1:
        raise ValueError(f"x must be >= 1, got {x} (use the 1/x symmetry)")
    _check_t(table, t)
    g = table.upto(t)
    if x == 1:
        partial = np.arange(1, g.size + 1).astype(complex)
    else:
        partial = compensated_cumsum_complex(unit_phases(g, x))
    return ExpSumSeries(float(x), g, partial)


def exp_sum(table: ZeroTable, x: float, t: float) -> complex:
    """sum_{0 < gamma <= t} x^{i gamma}."""
    return exp_sum_series(table, x, t).at(t)


# -- truncated explicit formula ---------------------------------------------


@dataclass(frozen=True)
class ExplicitValue:
    x: float
    t_cut: float
    value: float
    truncation_bound: float
    zeros_used: int
    empty_sum: bool
    near_prime_power: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _zero_terms(g: np.ndarray, x: float) -> np.ndarray:
    """x^{i gamma} / (1/2 + i gamma)."""
    return unit_phases(g, x) / (0.5 + 1j * g)


def _near_prime_power(x: float, tol: float = 1e-6) -> bool:
    n = int(round(x))
    return n >= 2 and abs(x - n) <= tol and mangoldt(n) > 0


def truncated_psi_error(table: ZeroTable, x: float, t_cut: float) -> ExplicitValue:
    """-2 x^{1/2} Re sum_{0<gamma<=T} x^{i gamma}/(1/2+i gamma) - log 2pi - log(1-x^-2)/2."""
    if x < 2:
        raise ValueError(f"x must be >= 2, got {x}")
    _check_t(table, t_cut)
    g = table.upto(t_cut)
    const = -LOG_TWO_PI - 0.5 * math.log1p(-(x**-2.0))
    zsum = compensated_sum(_zero_terms(g, x).real) if g.size else 0.0
    bound = math.sqrt(x) * math.log(x * t_cut) ** 2 / t_cut if t_cut > 1 else math.inf
    return ExplicitValue(
        x=float(x),
        t_cut=float(t_cut),
        value=-2.0 * math.sqrt(x) * zsum + const,
        truncation_bound=bound,
        zeros_used=int(g.size),
        empty_sum=g.size == 0,
        near_prime_power=_near_prime_power(x),
    )


def symmetric_zero_sum(table: ZeroTable, x: float, t: float) -> complex:
    """sum_{|gamma| <= t} x^{i gamma}/(1/2 + i gamma), conjugate terms paired."""
    _check_t(table, t)
    g = table.upto(t)
    w = _zero_terms(g, x)
    paired = w + np.conj(w)  # term at -gamma is the conjugate of the term at gamma
    return complex(compensated_sum(paired.real), compensated_sum(paired.imag))


# -- large-sum height sets ---------------------------------------------------


def delta_ab(alpha: float, beta: float) -> float:
    return 1.0 - alpha * alpha - beta


def height_window(big_x: float, eps: float, alpha: float) -> tuple[float, float]:
    lo = big_x ** (alpha * math.sqrt(2 * math.pi * eps))
    hi = math.log(big_x) * math.sqrt(big_x)
    return lo, hi


def _clipped_window(table: ZeroTable, big_x: float, eps: float, alpha: float) -> tuple[float, float]:
    lo, hi = height_window(big_x, eps, alpha)
    top = min(hi, table.t_max)
    if not lo < top:
        raise TableTooShortError(lo, hi, table.t_max)
    return lo, top


@dataclass(frozen=True)
class TxReport:
    x: float
    eps: float
    alpha: float
    beta: float
    t_set: IntervalUnion
    log_integral: float
    rhs: float
    big_x: float = math.nan
    threshold_coeff: float = DEFAULT_THRESHOLD_COEFF
    window: tuple = field(default=(math.nan, math.nan))

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "eps": self.eps,
            "alpha": self.alpha,
            "beta": self.beta,
            "t_set": self.t_set.to_dict(),
            "log_integral": self.log_integral,
            "rhs": self.rhs,
            "big_x": self.big_x,
            "threshold_coeff": self.threshold_coeff,
            "window": list(self.window),
            "lhs_ge_rhs": bool(self.log_integral >= self.rhs),
        }


def _tx_set(table: ZeroTable, x: float, lo: float, hi: float, coeff: float, eps: float, beta: float) -> IntervalUnion:
    g = table.ordinates
    i0 = int(np.searchsorted(g, lo, side="right"))
    i1 = int(np.searchsorted(g, hi, side="left"))
    edges = np.concatenate([[lo], g[i0:i1], [hi]])
    if x == 1:
        partial = np.arange(1, i1 + 1, dtype=float)
    else:
        partial = np.abs(compensated_cumsum_complex(unit_phases(g[:i1], x)))
    # segment j = [edges[j], edges[j+1]) carries N = i0 + j
    n = i0 + np.arange(edges.size - 1)
    s = np.where(n > 0, partial[np.maximum(n - 1, 0)] if partial.size else 0.0, 0.0)
    keep = s >= coeff * eps * beta * n
    return IntervalUnion.from_bounds(edges[:-1][keep], edges[1:][keep])


def detect_Tx(
    table: ZeroTable,
    x: float,
    big_x: float,
    eps: float,
    alpha: float,
    beta: float,
    threshold_coeff: float = DEFAULT_THRESHOLD_COEFF,
) -> TxReport:
    """Heights t in the window where |sum_{gamma<=t} x^{i gamma}| >= coeff*eps*beta*N(t).

    Both sides are constant between consecutive ordinates, so the set is a
    union of ordinate-grid intervals and is exact.
    """
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError("alpha and beta must lie in (0, 1)")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if x < 1:
        raise ValueError("x must be >= 1")
    lo, hi = _clipped_window(table, big_x, eps, alpha)
    tset = _tx_set(table, x, lo, hi, threshold_coeff, eps, beta)
    return TxReport(
        x=float(x),
        eps=float(eps),
        alpha=float(alpha),
        beta=float(beta),
        t_set=tset,
        log_integral=tset.log_measure(),
        rhs=2 * math.pi * eps * delta_ab(alpha, beta) * math.log(big_x),
        big_x=float(big_x),
        threshold_coeff=float(threshold_coeff),
        window=(lo, hi),
    )


@dataclass(frozen=True)
class PigeonholeResult:
    t_star: float
    x0: list
    counts: np.ndarray
    grid: np.ndarray
    fraction: float
    benchmarks: dict
    threshold_coeff: float

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "x0": list(self.x0),
            "x0_count": len(self.x0),
            "grid_size": int(self.grid.size),
            "max_count": int(self.counts.max()) if self.counts.size else 0,
            "fraction": self.fraction,
            "benchmarks": dict(self.benchmarks),
            "threshold_coeff": self.threshold_coeff,
        }


def pigeonhole_T(
    table: ZeroTable,
    xs,
    big_x: float,
    eps: float,
    alpha: float,
    beta: float,
    grid_points: int = 1000,
    threshold_coeff: float = DEFAULT_THRESHOLD_COEFF,
) -> PigeonholeResult:
    """Height shared by the most T_x, scanning a log-uniform grid (ties -> smallest t)."""
    xs = [float(v) for v in xs]
    if not xs:
        raise ValueError("xs must be nonempty")
    grid_points = max(int(grid_points), 1000)
    lo, hi = _clipped_window(table, big_x, eps, alpha)
    grid = np.geomspace(lo, hi, grid_points)
    sets = [detect_Tx(table, x, big_x, eps, alpha, beta, threshold_coeff).t_set for x in xs]
    hits = np.array([s.contains(grid) for s in sets])
    counts = hits.sum(axis=0)
    j = int(np.argmax(counts))
    t_star = float(grid[j])
    x0 = [x for x, h in zip(xs, hits[:, j]) if h]
    d = delta_ab(alpha, beta)
    return PigeonholeResult(
        t_star=t_star,
        x0=x0,
        counts=counts,
        grid=grid,
        fraction=len(x0) / len(xs),
        benchmarks={"eps_delta": eps * d, "eps_delta_over_100": eps * d / 100},
        threshold_coeff=float(threshold_coeff),
    )


__all__ = [
    "ExpSumSeries",
    "ExplicitValue",
    "OutOfRangeError",
    "PigeonholeResult",
    "TableTooShortError",
    "TxReport",
    "delta_ab",
    "detect_Tx",
    "exp_sum",
    "exp_sum_series",
    "height_window",
    "pigeonhole_T",
    "symmetric_zero_sum",
    "truncated_psi_error",
]
