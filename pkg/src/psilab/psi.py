"""Exact Chebyshev function psi(x) and statistics of psi(x) - x.

psi is a right-continuous step function jumping by log p at every prime power
p^k, so every integral or measure below is evaluated piece by piece between
consecutive jumps, in closed form or by bisection on monotone pieces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from psilab.intervals import IntervalUnion
from psilab.numerics import compensated_cumsum, compensated_sum

DEFAULT_SEGMENT = 1 << 18
DEFAULT_MEMORY_BUDGET = 2 << 30  # bytes
BISECT_TOL = 1e-9

# Reference constants for the large-values estimate; asymptotic, never asserted.
WINTNER_C = 2.0 / math.pi
PROP1_C_PRIME = 2.0 * math.exp(-WINTNER_C / 2.0 - 1.0)


class ResourceBudgetError(RuntimeError):
    pass


class PsiCacheMismatch(ValueError):
    pass


def mangoldt(n: int) -> float:
    """Von Mangoldt function by trial division."""
    n = int(n)
    if n < 1:
        raise ValueError(f"mangoldt is defined for n >= 1, got {n}")
    if n == 1:
        return 0.0
    p = 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            return math.log(p) if n == 1 else 0.0
        p += 1 if p == 2 else 2
    return math.log(n)


def small_primes(limit: int) -> np.ndarray:
    """Primes <= limit by a plain sieve."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def segmented_primes(limit: int, segment_size: int = DEFAULT_SEGMENT) -> np.ndarray:
    """All primes <= limit, sieving [lo, lo + segment_size) windows in order."""
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    base = small_primes(math.isqrt(limit))
    chunks = []
    for lo in range(2, limit + 1, segment_size):
        hi = min(lo + segment_size, limit + 1)
        mark = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            mark[start - lo :: p] = False
        chunks.append(np.flatnonzero(mark).astype(np.int64) + lo)
    return np.concatenate(chunks)


@dataclass(frozen=True)
class ErrorSample:
    x: float
    psi_x: float
    err: float
    normalized: float

    @property
    def schoenfeld_ratio(self) -> float:
        """|psi(x) - x| * 8 pi / (x^{1/2} (log x)^2); < 1 is Schoenfeld's bound."""
        return 8.0 * math.pi * abs(self.normalized)

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "psi_x": self.psi_x,
            "err": self.err,
            "normalized": self.normalized,
            "schoenfeld_ratio": self.schoenfeld_ratio,
        }


@dataclass(frozen=True)
class PsiSeries:
    """psi on [1, limit_x], stored at its jump points.

    ``cumulative[i]`` is psi(jump_points[i]); psi(x) for other x is the value
    at the last jump <= floor(x).
    """

    limit_x: int
    jump_points: np.ndarray
    jump_values: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        for name in ("jump_points", "jump_values", "cumulative"):
            getattr(self, name).setflags(write=False)

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x > self.limit_x + 1 - 1e-12) and np.any(np.floor(x) > self.limit_x):
            raise ValueError(f"x beyond series limit {self.limit_x}")
        i = np.searchsorted(self.jump_points, np.floor(x), side="right")
        vals = np.where(i > 0, self.cumulative[np.maximum(i - 1, 0)], 0.0)
        return vals if vals.ndim else float(vals)

    def psi_at_int(self, n: int) -> float:
        return float(self.psi(float(n)))

    def checkpoints(self) -> int:
        return int(self.jump_points.size)


def _estimate_bytes(limit_x: int, segment_size: int) -> int:
    n_jumps = 1.1 * limit_x / max(math.log(limit_x), 1.0)
    return int(n_jumps * 40 + segment_size * 9)


def build_psi_series(
    limit_x: int,
    segment_size: int = DEFAULT_SEGMENT,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> PsiSeries:
    """Sieve all prime powers up to ``limit_x`` and accumulate psi exactly.

    Output is independent of ``segment_size``: jumps are sorted before the
    (fixed-order, compensated) prefix summation.
    """
    limit_x = int(limit_x)
    if limit_x < 1:
        raise ValueError("limit_x must be >= 1")
    need = _estimate_bytes(limit_x, segment_size)
    if need > memory_budget:
        raise ResourceBudgetError(
            f"limit_x={limit_x} needs about {need / 2**20:.0f} MiB, over the "
            f"{memory_budget / 2**20:.0f} MiB budget; lower the limit or raise the budget"
        )
    primes = segmented_primes(limit_x, segment_size)
    points = [primes]
    bases = [primes]
    for p in primes[: np.searchsorted(primes, math.isqrt(limit_x), side="right")]:
        p = int(p)
        q = p * p
        pw = []
        while q <= limit_x:
            pw.append(q)
            q *= p
        points.append(np.array(pw, dtype=np.int64))
        bases.append(np.full(len(pw), p, dtype=np.int64))
    jp = np.concatenate(points)
    jb = np.concatenate(bases)
    order = np.argsort(jp, kind="stable")
    jp, jb = jp[order], jb[order]
    jv = np.log(jb.astype(float))
    return PsiSeries(limit_x, jp, jv, compensated_cumsum(jv))


def _check_x(series: PsiSeries, x: float, lo: float = 2.0) -> None:
    if not lo <= x <= series.limit_x:
        raise ValueError(f"x={x} outside [{lo}, {series.limit_x}]")


def _sample(series: PsiSeries, x: float) -> ErrorSample:
    p = float(series.psi(x))
    err = p - x
    return ErrorSample(x=float(x), psi_x=p, err=err, normalized=err / (math.sqrt(x) * math.log(x) ** 2))


def error_term(series: PsiSeries, x: float) -> ErrorSample:
    _check_x(series, x)
    return _sample(series, x)


# -- piecewise scans ---------------------------------------------------------


def _pieces(series: PsiSeries, x_lo: float, x_hi: float, breaks=()):
    """Subintervals [u, v] of [x_lo, x_hi] on which psi is constant (value P)."""
    jp = series.jump_points.astype(float)
    inner = jp[(jp > x_lo) & (jp < x_hi)]
    extra = np.array([b for b in breaks if x_lo < b < x_hi], dtype=float)
    edges = np.unique(np.concatenate([[x_lo], inner, extra, [x_hi]]))
    u, v = edges[:-1], edges[1:]
    P = np.asarray(series.psi(u), dtype=float)
    return u, v, P


def _bisect(f, lo: np.ndarray, hi: np.ndarray, target: np.ndarray, increasing: np.ndarray) -> np.ndarray:
    """Vectorised bisection for f(x) = target on monotone brackets."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(200):
        if lo.size == 0 or np.max(hi - lo) <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        below = (f(mid) < target) == increasing
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _turning_points(gprime, x_lo: float, x_hi: float) -> list:
    """Points where x - g(x) changes monotonicity (g'(x) = 1)."""
    xs = np.geomspace(max(x_lo, 1.0 + 1e-9), x_hi, 4096)
    d = gprime(xs) - 1.0
    idx = np.flatnonzero(np.sign(d[:-1]) != np.sign(d[1:]))
    return [optimize.brentq(lambda s: gprime(s) - 1.0, xs[i], xs[i + 1], xtol=1e-12) for i in idx]


def _exceptional_set(series: PsiSeries, x_lo: float, x_hi: float, g, gprime) -> IntervalUnion:
    """{x in [x_lo, x_hi] : |psi(x) - x| >= g(x)} for increasing thresholds g."""
    breaks = _turning_points(gprime, x_lo, x_hi)
    u, v, P = _pieces(series, x_lo, x_hi, breaks)
    pieces_lo, pieces_hi = [], []

    # psi - x >= g  <=>  x + g(x) <= P, with x + g increasing
    f1 = lambda s: s + g(s)  # noqa: E731
    fu, fv = f1(u), f1(v)
    whole = fv <= P
    part = (fu <= P) & ~whole
    pieces_lo += [u[whole], u[part]]
    pieces_hi += [v[whole], _bisect(f1, u[part], v[part], P[part], np.ones(part.sum(), bool))]

    # x - psi >= g  <=>  x - g(x) >= P, x - g monotone on each piece
    h = lambda s: s - g(s)  # noqa: E731
    hu, hv = h(u), h(v)
    whole = (hu >= P) & (hv >= P)
    inc = (hu < P) & (hv >= P)
    dec = (hu >= P) & (hv < P)
    pieces_lo += [u[whole], _bisect(h, u[inc], v[inc], P[inc], np.ones(inc.sum(), bool)), u[dec]]
    pieces_hi += [v[whole], v[inc], _bisect(h, u[dec], v[dec], P[dec], np.zeros(dec.sum(), bool))]
    return IntervalUnion.from_bounds(np.concatenate(pieces_lo), np.concatenate(pieces_hi))


def _large_value_threshold(eps: float):
    def g(x):
        L = np.log(x)
        return eps * np.sqrt(x) * L * L

    def gprime(x):
        L = np.log(x)
        return eps * (0.5 * L * L + 2.0 * L) / np.sqrt(x)

    return g, gprime


def greedy_separated(xs, gap: float) -> list:
    """Left-to-right greedy subset with consecutive elements >= gap apart."""
    out = []
    for x in sorted(xs):
        if not out or x - out[-1] >= gap:
            out.append(x)
    return out


@dataclass
class LargeValueScan:
    x_lo: float
    x_hi: float
    eps: float
    sep_exponent: float
    measure_estimate: float
    components: IntervalUnion
    witnesses: list = field(default_factory=list)
    separated_subset: list = field(default_factory=list)

    @property
    def separation(self) -> float:
        return self.x_hi**self.sep_exponent

    def to_dict(self, max_witnesses: int | None = None) -> dict:
        w = self.witnesses if max_witnesses is None else self.witnesses[:max_witnesses]
        return {
            "x_lo": self.x_lo,
            "x_hi": self.x_hi,
            "eps": self.eps,
            "sep_exponent": self.sep_exponent,
            "separation": self.separation,
            "measure_estimate": self.measure_estimate,
            "component_count": self.components.component_count,
            "witness_count": len(self.witnesses),
            "witnesses": [s.to_dict() for s in w],
            "separated_subset": list(self.separated_subset),
        }


def large_value_scan(
    series: PsiSeries, x_lo: float, x_hi: float, eps: float, sep_exponent: float
) -> LargeValueScan:
    """Exact measure of {x : |psi(x) - x| >= eps x^{1/2} (log x)^2} in [x_lo, x_hi].

    Witnesses are the midpoints of the components of that set; the separated
    subset is the greedy left-to-right x_hi^sep_exponent-separated subset.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if not 0 <= sep_exponent <= 1:
        raise ValueError("sep_exponent must lie in [0, 1]")
    if not 2 <= x_lo < x_hi <= series.limit_x:
        raise ValueError(f"need 2 <= x_lo < x_hi <= {series.limit_x}")
    if eps == 0:
        comps = IntervalUnion.from_bounds([x_lo], [x_hi])
    else:
        g, gp = _large_value_threshold(eps)
        comps = _exceptional_set(series, x_lo, x_hi, g, gp)
    witnesses = [_sample(series, float(m)) for m in comps.midpoints()]
    sep = greedy_separated([w.x for w in witnesses], x_hi**sep_exponent)
    return LargeValueScan(
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        eps=float(eps),
        sep_exponent=float(sep_exponent),
        measure_estimate=comps.total_measure,
        components=comps,
        witnesses=witnesses,
        separated_subset=sep,
    )


@dataclass(frozen=True)
class WintnerMoment:
    limit_x: float
    k: int
    moment: float
    bound: float
    ratio: float
    log_bound: float

    def to_dict(self) -> dict:
        return {
            "limit_x": self.limit_x,
            "k": self.k,
            "moment": self.moment,
            "bound": self.bound,
            "log_bound": self.log_bound,
            "ratio": self.ratio,
            "normalized_moment": self.moment / self.limit_x ** (self.k / 2 + 1) if self.limit_x else None,
        }


def _power_difference(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """a^n - b^n without cancellation when a and b share a sign."""
    same = a * b >= 0
    direct = a**n - b**n
    s = np.zeros_like(a)
    for i in range(n):
        s += a**i * b ** (n - 1 - i)
    return np.where(same, (a - b) * s, direct)


def wintner_moment(series: PsiSeries, limit_x: float, k: int) -> WintnerMoment:
    """Integral over [2, X] of |psi(x) - x|^k, against (2k^2/pi)^k X^{k+1}."""
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    if not 2 < limit_x <= series.limit_x:
        raise ValueError(f"limit_x must lie in (2, {series.limit_x}]")
    u, v, P = _pieces(series, 2.0, float(limit_x))
    parts = _power_difference(v - P, u - P, k + 1) / (k + 1)
    moment = compensated_sum(parts)
    log_bound = k * math.log(WINTNER_C * k * k) + (k + 1) * math.log(limit_x)
    bound = math.exp(log_bound) if log_bound < 700 else math.inf
    ratio = math.exp(math.log(moment) - log_bound) if moment > 0 else 0.0
    return WintnerMoment(float(limit_x), k, moment, bound, ratio, log_bound)


def log_measure_exceptional(series: PsiSeries, limit_x: float, c: float) -> float:
    """Integral of dx/x over {x in [16, X] : |psi(x) - x| >= c x^{1/2} (log log x)^2}."""
    if limit_x < 16 or limit_x > series.limit_x:
        raise ValueError(f"limit_x must lie in [16, {series.limit_x}]")
    if c < 0:
        raise ValueError("c must be nonnegative")
    if c == 0:
        return math.log(limit_x) - math.log(16.0)

    def g(x):
        LL = np.log(np.log(x))
        return c * np.sqrt(x) * LL * LL

    def gp(x):
        L = np.log(x)
        LL = np.log(L)
        return c * (0.5 * LL * LL + 2.0 * LL / L) / np.sqrt(x)

    comps = _exceptional_set(series, 16.0, float(limit_x), g, gp)
    return comps.log_measure()


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    grid_points: int
    grid_density: float
    u_min: float
    u_max: float

    def bin_of(self, value: float) -> int:
        i = int(np.searchsorted(self.edges, value, side="right") - 1)
        return min(max(i, 0), self.mass.size - 1)

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "mass": self.mass.tolist(),
            "grid_points": self.grid_points,
            "grid_density": self.grid_density,
            "u_min": self.u_min,
            "u_max": self.u_max,
        }


def normalized_error_at_log(series: PsiSeries, u):
    """(psi(e^u) - e^u) / e^{u/2}."""
    x = np.exp(np.asarray(u, dtype=float))
    return (np.asarray(series.psi(x)) - x) / np.sqrt(x)


def empirical_distribution(series: PsiSeries, u_max: float, bins: int, grid_points: int = 10_000) -> Histogram:
    """Histogram (total mass 1) of (psi(e^u) - e^u)/e^{u/2} on a uniform u-grid."""
    u_min = math.log(2.0)
    if u_max <= u_min:
        raise ValueError("u_max must exceed log 2")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if math.exp(u_max) > series.limit_x + 1e-9 * series.limit_x:
        raise ValueError("exp(u_max) exceeds the series limit")
    grid_points = max(int(grid_points), 10_000)
    u = np.linspace(u_min, u_max, grid_points)
    vals = normalized_error_at_log(series, u)
    counts, edges = np.histogram(vals, bins=bins)
    return Histogram(
        edges=edges,
        mass=counts / grid_points,
        grid_points=grid_points,
        grid_density=(grid_points - 1) / (u_max - u_min),
        u_min=u_min,
        u_max=float(u_max),
    )


# -- checkpoint cache --------------------------------------------------------


def save_psi_cache(series: PsiSeries, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        fh.write(f"# limit_x={series.limit_x}\n")
        fh.write("x,psi\n")
        for x, p in zip(series.jump_points.tolist(), series.cumulative.tolist()):
            fh.write(f"{x},{p!r}\n")
    return path


def load_psi_cache(path, limit_x: int | None = None) -> PsiSeries:
    """Read an ``x,psi`` checkpoint file; raise PsiCacheMismatch if stale."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header.startswith("# limit_x="):
            raise PsiCacheMismatch(f"{path}: missing limit header")
        stored = int(header.split("=", 1)[1])
        if limit_x is not None and stored != int(limit_x):
            raise PsiCacheMismatch(f"{path}: cached limit {stored} != requested {limit_x}")
        if fh.readline().strip() != "x,psi":
            raise PsiCacheMismatch(f"{path}: bad column header")
        data = np.loadtxt(fh, delimiter=",", dtype=float, ndmin=2)
    xs = data[:, 0].astype(np.int64)
    psi_vals = data[:, 1]
    # recover log p from the base prime of each prime power
    base = xs.copy()
    for p in small_primes(math.isqrt(max(stored, 1))):
        hit = (base == xs) & (xs % p == 0)
        base[hit] = p
    jv = np.log(base.astype(float))
    cum = compensated_cumsum(jv)
    if not np.array_equal(cum, psi_vals):
        raise PsiCacheMismatch(f"{path}: stored psi values do not match recomputation")
    return PsiSeries(stored, xs, jv, cum)


def load_or_build(path, limit_x: int) -> tuple[PsiSeries, bool]:
    """Load a cache if it matches ``limit_x``, otherwise rebuild and rewrite it."""
    path = Path(path)
    if path.exists():
        try:
            return load_psi_cache(path, limit_x), False
        except (PsiCacheMismatch, ValueError):
            pass
    series = build_psi_series(limit_x)
    save_psi_cache(series, path)
    return series, True
