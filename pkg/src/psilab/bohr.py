"""Rank-k Bohr sets: membership, exact truncated measure, counting, and the
two measured experiments (interval extension and average measure)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from psilab.intervals import IntervalUnion, intersect_all
from psilab.numerics import dist_to_int
from psilab.zeros import max_points_in_window

MAX_RANK = 8


class BohrSpecError(ValueError):
    pass


@dataclass(frozen=True)
class BohrSpec:
    """{x : ||freqs[l] x + phases[l]|| <= radius for all l}, optionally cut to [0, t_trunc]."""

    freqs: tuple
    phases: tuple
    radius: float
    t_trunc: float | None = None

    def __post_init__(self):
        freqs = tuple(float(f) for f in np.atleast_1d(self.freqs))
        phases = tuple(float(b) for b in np.atleast_1d(self.phases))
        if not freqs:
            raise BohrSpecError("rank must be at least 1")
        if len(freqs) != len(phases):
            raise BohrSpecError(f"{len(freqs)} frequencies but {len(phases)} phases")
        if not 0 < self.radius < 0.5:
            raise BohrSpecError(f"radius must lie in (0, 1/2), got {self.radius}")
        if self.t_trunc is not None and self.t_trunc <= 0:
            raise BohrSpecError("t_trunc must be positive")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "phases", phases)

    @property
    def rank(self) -> int:
        return len(self.freqs)

    def with_radius(self, radius: float) -> "BohrSpec":
        return replace(self, radius=radius)


def member_mask(spec: BohrSpec, points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    ok = np.ones(x.shape, dtype=bool)
    for a, b in zip(spec.freqs, spec.phases):
        ok &= dist_to_int(a * x + b) <= spec.radius
    return ok


def contains(spec: BohrSpec, x: float) -> bool:
    return bool(member_mask(spec, np.array([x]))[0])


def count_members(spec: BohrSpec, points) -> int:
    return int(np.count_nonzero(member_mask(spec, points)))


def constraint_intervals(freq: float, phase: float, radius: float, t: float) -> IntervalUnion:
    """{x in [0, t] : ||freq x + phase|| <= radius} as exact intervals."""
    if freq == 0:
        raise BohrSpecError("frequency must be nonzero")
    if not 0 < radius < 0.5:
        raise BohrSpecError(f"radius must lie in (0, 1/2), got {radius}")
    if t <= 0:
        raise BohrSpecError("t must be positive")
    if freq < 0:
        # ||v|| = ||-v||
        freq, phase = -freq, -phase
    u_lo, u_hi = phase, freq * t + phase
    n = np.arange(math.ceil(u_lo - radius), math.floor(u_hi + radius) + 1, dtype=float)
    lo = np.maximum((n - phase - radius) / freq, 0.0)
    hi = np.minimum((n - phase + radius) / freq, t)
    return IntervalUnion.from_bounds(lo, hi)


def _require_truncated(spec: BohrSpec) -> float:
    if spec.t_trunc is None:
        raise BohrSpecError("spec has no truncation height")
    for a in spec.freqs:
        if a == 0:
            raise BohrSpecError("all frequencies must be nonzero")
    return spec.t_trunc


def decomposition(spec: BohrSpec) -> IntervalUnion:
    t = _require_truncated(spec)
    return intersect_all(constraint_intervals(a, b, spec.radius, t) for a, b in zip(spec.freqs, spec.phases))


def truncated_measure(spec: BohrSpec) -> tuple[float, IntervalUnion]:
    """Exact Lebesgue measure of the truncated Bohr set, with its components."""
    dec = decomposition(spec)
    return dec.total_measure, dec


@dataclass(frozen=True)
class ExtensionReport:
    lhs: int
    window_length: float
    window_max: int
    extended_measure: float
    rhs: float
    ratio: float | None

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "window_length": self.window_length,
            "window_max": self.window_max,
            "extended_measure": self.extended_measure,
            "rhs": self.rhs,
            "ratio": self.ratio,
        }


def interval_extension_check(spec: BohrSpec, points, eta: float, a_const: float) -> ExtensionReport:
    """Measure the implied constant in |A cap B| << (A log T / eta rho) * max_I |A cap I| * mu(B_{rho(1+eta)}).

    The extended measure is taken at the same phases.
    """
    t = _require_truncated(spec)
    if eta <= 0:
        raise BohrSpecError("eta must be positive")
    if t <= 1:
        raise BohrSpecError("t_trunc must exceed 1 (log T > 0)")
    cap = a_const * math.log(t)
    for a in spec.freqs:
        if abs(a) > cap:
            raise BohrSpecError(f"frequency {a} exceeds A log T = {cap}")
    ext_radius = spec.radius * (1 + eta)
    if ext_radius >= 0.5:
        raise BohrSpecError("radius*(1+eta) must stay below 1/2")
    pts = np.asarray(points, dtype=float)
    lhs = count_members(spec, pts)
    w = 2 * eta * spec.radius / cap
    wmax = max_points_in_window(pts, w)
    ext, _ = truncated_measure(spec.with_radius(ext_radius))
    rhs = (cap / (eta * spec.radius)) * wmax * ext
    if rhs > 0:
        ratio = lhs / rhs
    else:
        ratio = 0.0 if lhs == 0 else None
    return ExtensionReport(lhs, w, wmax, ext, rhs, ratio)


def check_spacing(pool, t: float) -> None:
    s = np.sort(np.asarray(pool, dtype=float))
    gaps = np.diff(s)
    bad = np.flatnonzero(gaps < 1.0 / t)
    if bad.size:
        pairs = ", ".join(f"({float(s[i])!r}, {float(s[i + 1])!r})" for i in bad[:5])
        raise BohrSpecError(f"frequencies closer than 1/T={1.0 / t}: {pairs}")


def _tuples(pool_size: int, k: int, trials: int, seed: int):
    if pool_size**k <= trials:
        return list(itertools.product(range(pool_size), repeat=k)), True
    out = []
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        out.append(tuple(int(j) for j in rng.integers(0, pool_size, size=k)))
    return out, False


def grid_max_measure(freqs, radius: float, t: float, beta_grid: int) -> tuple[float, int]:
    """Max of the truncated measure over a beta_grid^k phase grid (a lower bound for the true max)."""
    k = len(freqs)
    phases = np.arange(beta_grid) / beta_grid
    best, best_comp = -1.0, 0
    per_axis = [[constraint_intervals(a, b, radius, t) for b in phases] for a in freqs]
    for combo in itertools.product(range(beta_grid), repeat=k):
        dec = intersect_all(per_axis[j][combo[j]] for j in range(k))
        m = dec.total_measure
        if m > best:
            best, best_comp = m, dec.component_count
    return best, best_comp


def average_measure_experiment(
    freq_pool,
    k: int,
    radius: float,
    eta: float,
    t: float,
    trials: int,
    beta_grid: int,
    seed: int = 0,
    r: int = 2,
) -> dict:
    """Average over k-tuples from the pool of max-over-phases truncated measure.

    Each tuple is bracketed: a phase-grid maximum from below, the smooth
    majorant bound from above.
    """
    from psilab.majorant import majorant_measure_bound

    pool = [float(a) for a in freq_pool]
    if not 1 <= k <= MAX_RANK:
        raise BohrSpecError(f"k must lie in [1, {MAX_RANK}]")
    if beta_grid < 4:
        raise BohrSpecError("beta_grid must be >= 4")
    if any(a == 0 for a in pool):
        raise BohrSpecError("frequencies must be nonzero")
    check_spacing(pool, t)
    tuples, exhaustive = _tuples(len(pool), k, trials, seed)
    per_trial = []
    for tup in tuples:
        freqs = [pool[j] for j in tup]
        gmax, comps = grid_max_measure(freqs, radius, t, beta_grid)
        raw = majorant_measure_bound(freqs, radius, eta, t, r=r)
        ub = min(raw, t)  # the measure never exceeds T
        per_trial.append(
            {
                "tuple": freqs,
                "grid_max": gmax,
                "majorant_bound": ub,
                "majorant_bound_raw": raw,
                "measure_components": comps,
            }
        )
    avg_lo = float(np.mean([p["grid_max"] for p in per_trial]))
    avg_hi = float(np.mean([p["majorant_bound"] for p in per_trial]))
    main = (2 * radius) ** k * (1 + eta) ** k
    log_term = math.log(1.0 / (radius * eta))
    excess = avg_lo / t - main
    c_fit = (excess * len(pool)) ** (1.0 / k) / log_term if excess > 0 else 0.0
    return {
        "params": {
            "pool_size": len(pool),
            "k": k,
            "radius": radius,
            "eta": eta,
            "t": t,
            "trials": trials,
            "beta_grid": beta_grid,
            "seed": seed,
            "r": r,
            "exhaustive": exhaustive,
        },
        "per_trial": per_trial,
        "aggregate": {
            "avg_grid_max": avg_lo,
            "avg_majorant_bound": avg_hi,
            "grid_max_is_lower_bound": True,
            "main_term": main * t,
            "heuristic_2rho_k_T": (2 * radius) ** k * t,
            "fitted_C": c_fit,
            "ratio_to_main_term": avg_lo / (main * t),
        },
    }
