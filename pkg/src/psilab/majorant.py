"""Smooth periodic majorants for arcs and Bohr sets.

The single-arc bump is the indicator of [a, b] convolved with r uniform
kernels of width Delta/r each, then made 1-periodic.  Both the time-domain
value (an Irwin-Hall CDF difference) and the Fourier coefficients

    a_m = e(-m c) * (b - a) sinc(m (b - a)) * sinc(m Delta / r)^r,  c = (a + b)/2,

are closed forms, so coefficient bounds and truncation errors are checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from psilab.numerics import compensated_sum, dist_to_int

CUTOFF_MIN = (2.0 / math.pi) ** 2


class MajorantError(ValueError):
    pass


@dataclass(frozen=True)
class VinogradovParams:
    a: float
    b: float
    delta: float
    r: int = 2

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise MajorantError(f"smoothing order r must be a positive integer, got {self.r}")
        if not 0 < self.delta < 0.5:
            raise MajorantError(f"need 0 < Delta < 1/2, got Delta={self.delta}")
        width = self.b - self.a
        if width < self.delta:
            raise MajorantError(f"need Delta <= b - a, got b - a={width}, Delta={self.delta}")
        if width > 1 - self.delta:
            raise MajorantError(f"need b - a <= 1 - Delta, got b - a={width}, Delta={self.delta}")

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def center(self) -> float:
        return 0.5 * (self.a + self.b)


def _irwin_hall_cdf(s: np.ndarray, r: int) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for j in range(r + 1):
        d = s - j
        out += np.where(d > 0, (-1) ** j * math.comb(r, j) * d**r, 0.0)
    out /= math.factorial(r)
    return np.clip(np.where(s >= r, 1.0, np.where(s <= 0, 0.0, out)), 0.0, 1.0)


class VinogradovBump:
    """1-periodic bump: 1 on [a + D/2, b - D/2], 0 on [b + D/2, 1 + a - D/2]."""

    def __init__(self, params: VinogradovParams):
        self.params = params
        self._h = params.delta / (2 * params.r)

    @property
    def r(self) -> int:
        return self.params.r

    def _kernel_cdf(self, u):
        r = self.params.r
        return _irwin_hall_cdf((np.asarray(u) + r * self._h) / (2 * self._h), r)

    def __call__(self, x):
        p = self.params
        x = np.asarray(x, dtype=float)
        d = dist_to_int(x - p.center)  # distance from the arc centre on the circle
        half = 0.5 * p.width
        inner = half - 0.5 * p.delta
        outer = half + 0.5 * p.delta
        # d is in [0, 1/2]; evaluate the unperiodised bump at centre + d (it is even)
        val = self._kernel_cdf(d + half) - self._kernel_cdf(d - half)
        val = np.where(d <= inner, 1.0, np.where(d >= outer, 0.0, val))
        return np.clip(val, 0.0, 1.0) if val.ndim else float(np.clip(val, 0.0, 1.0))

    def coefficient(self, m):
        """Fourier coefficient a_m (complex)."""
        p = self.params
        m = np.asarray(m, dtype=float)
        mag = p.width * np.sinc(m * p.width) * np.sinc(m * p.delta / p.r) ** p.r
        return mag * np.exp(-2j * math.pi * m * p.center)

    def coefficient_bounds(self, m) -> np.ndarray:
        """min(2(b-a), 2/(pi|m|), (2/(pi|m|)) (r/(pi|m| Delta))^r) for m != 0."""
        p = self.params
        m = np.abs(np.asarray(m, dtype=float))
        with np.errstate(divide="ignore"):
            b2 = 2.0 / (math.pi * m)
            b3 = b2 * (p.r / (math.pi * m * p.delta)) ** p.r
        return np.minimum(np.minimum(2 * p.width, b2), b3)

    def tail_bound(self, order: int) -> float:
        """Certified bound on sum_{|m| > M} |a_m| by integral comparison."""
        p = self.params
        if order < 1:
            return math.inf
        return (4.0 / math.pi) * (p.r / (math.pi * p.delta)) ** p.r / (p.r * order**p.r)

    def order_for_tail(self, tol: float) -> int:
        p = self.params
        m = ((4.0 / math.pi) * (p.r / (math.pi * p.delta)) ** p.r / (p.r * tol)) ** (1.0 / p.r)
        return max(1, math.ceil(m))

    def series(self, x, order: int, chunk: int = 2048):
        """Truncated Fourier series sum_{|m| <= order} a_m e(m x).

        Split m = q*B + s so that e(m x) = e(qBx) e(sx); the inner sums over s
        become one matrix product per chunk of x.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        block = max(1, math.isqrt(order))
        nq = order // block + 1
        m = np.arange(nq * block)
        am = np.where((m >= 1) & (m <= order), self.coefficient(m), 0.0).reshape(nq, block)
        s_idx = np.arange(block)
        q_idx = np.arange(nq) * block
        out = np.empty(x.size)
        for lo in range(0, x.size, chunk):
            xc = x[lo : lo + chunk]
            es = np.exp(2j * math.pi * np.mod(np.outer(s_idx, xc), 1.0))
            eq = np.exp(2j * math.pi * np.mod(np.outer(q_idx, xc), 1.0))
            inner = am @ es
            out[lo : lo + chunk] = self.params.width + 2.0 * np.real(np.sum(inner * eq, axis=0))
        return out

    def dump(self, order: int) -> list[tuple[int, float, float]]:
        ms = np.arange(-order, order + 1)
        c = self.coefficient(ms)
        return [(int(m), float(z.real), float(z.imag)) for m, z in zip(ms, c)]


def vinogradov_bump(params: VinogradovParams) -> VinogradovBump:
    return VinogradovBump(params)


class BohrMajorant:
    """Product of arc bumps, equal to 1 on B(alpha, beta; rho) and in [0, 1] everywhere."""

    def __init__(self, freqs, phases, radius: float, eta: float, r: int = 2):
        self.freqs = tuple(float(f) for f in np.atleast_1d(freqs))
        self.phases = tuple(float(b) for b in np.atleast_1d(phases))
        if len(self.freqs) != len(self.phases):
            raise MajorantError("freqs and phases differ in length")
        if radius <= 0 or eta <= 0:
            raise MajorantError("radius and eta must be positive")
        self.radius = float(radius)
        self.eta = float(eta)
        a = -radius * (1 + eta)
        b = radius * (1 + eta)
        delta = 2 * radius * eta
        try:
            params = VinogradovParams(a, b, delta, r)
        except MajorantError as exc:
            raise MajorantError(f"radius={radius}, eta={eta} violate the arc hypotheses: {exc}") from None
        self.bump = VinogradovBump(params)

    @property
    def r(self) -> int:
        return self.bump.r

    @property
    def rank(self) -> int:
        return len(self.freqs)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape)
        for a, b in zip(self.freqs, self.phases):
            out = out * self.bump(a * x + b)
        return out if out.ndim else float(out)

    def coefficient(self, m):
        return self.bump.coefficient(m)

    def a_prime(self, m) -> np.ndarray:
        """min{4 rho(1+eta), 2/(pi|m|), (2/(pi|m|)) (r/(pi|m| rho eta))^r}."""
        m = np.abs(np.asarray(m, dtype=float))
        with np.errstate(divide="ignore"):
            b2 = 2.0 / (math.pi * m)
            b3 = b2 * (self.r / (math.pi * m * self.radius * self.eta)) ** self.r
        return np.minimum(np.minimum(4 * self.radius * (1 + self.eta), b2), b3)


def bohr_majorant(freqs, phases, radius: float, eta: float, r: int = 2) -> BohrMajorant:
    return BohrMajorant(freqs, phases, radius, eta, r)


def cutoff_kernel(x):
    """f(x) = (sin(pi x / 2) / (pi x / 2))^2, f(0) = 1."""
    return np.sinc(np.asarray(x, dtype=float) / 2.0) ** 2


def cutoff_transform(xi):
    """Fourier transform int f(x) e(-x xi) dx = 2 max(0, 1 - 2|xi|)."""
    return 2.0 * np.maximum(0.0, 1.0 - 2.0 * np.abs(np.asarray(xi, dtype=float)))


def _resonant_tuples(freqs, order: int, width: float) -> np.ndarray:
    """Rows m in [-order, order]^k with |m . freqs| < width (the zero row included)."""
    freqs = np.asarray(freqs, dtype=float)
    k = freqs.size
    last = freqs[-1]
    rng = np.arange(-order, order + 1)
    if k > 1:
        head = np.stack(np.meshgrid(*([rng] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
        s = head @ freqs[:-1]
    else:
        head = np.zeros((1, 0), dtype=int)
        s = np.zeros(1)
    span = math.ceil(width / abs(last)) + 1
    rows = []
    base = np.rint(-s / last).astype(np.int64)
    for off in range(-span, span + 1):
        mk = base + off
        ok = (np.abs(mk) <= order) & (np.abs(s + mk * last) < width)
        if ok.any():
            rows.append(np.column_stack([head[ok], mk[ok]]))
    if not rows:
        return np.zeros((0, k), dtype=np.int64)
    out = np.unique(np.concatenate(rows).astype(np.int64), axis=0)
    return out


@dataclass(frozen=True)
class MajorizedCount:
    point_sum: float
    integral: float
    main_term: float
    remainder: float
    remainder_bound: float
    truncation_bound: float
    measure_upper_bound: float
    order: int

    def to_dict(self) -> dict:
        return {k: (int(v) if k == "order" else float(v)) for k, v in self.__dict__.items()}


def majorized_count(points, majorant: BohrMajorant, t: float, order: int | None = None) -> MajorizedCount:
    """Smoothed point count and the smoothed measure integral.

    ``point_sum`` = sum of the majorant over the points.  ``integral`` is
    int_R f(s/T) Psi(s) ds evaluated coefficientwise; only frequency vectors
    with |m . alpha| < 1/(2T) survive the band-limited cutoff, split into the
    m = 0 main term and the remainder (bounded via the a'_m minima).
    ``measure_upper_bound`` = (pi/2)^2 (integral + truncation_bound) bounds
    the truncated Bohr-set measure, since f(s/T) >= (2/pi)^2 on [0, T].
    """
    pts = np.asarray(points, dtype=float)
    if pts.size and (pts.min() < 0 or pts.max() > t):
        raise MajorantError("points must lie in [0, t]")
    point_sum = compensated_sum(majorant(pts)) if pts.size else 0.0
    k = majorant.rank
    if order is None:
        order = 10**6 if k == 1 else max(4, int((2e6 ** (1.0 / (k - 1)) - 1) // 2))
    width = 1.0 / (2.0 * t)
    tuples = _resonant_tuples(majorant.freqs, order, width)
    tuples = tuples[np.any(tuples != 0, axis=1)].astype(float)
    a0 = majorant.coefficient(0).real
    main = t * cutoff_transform(0.0) * a0**k
    beta = np.array(majorant.phases)
    alpha = np.array(majorant.freqs)
    if tuples.shape[0]:
        coef = np.prod(majorant.coefficient(tuples), axis=1)
        phase = np.exp(2j * math.pi * np.mod(tuples @ beta, 1.0))
        fh = cutoff_transform((tuples @ alpha) * t)
        remainder = compensated_sum(t * (coef * phase * fh).real)
        rem_bound = compensated_sum(t * cutoff_transform(0.0) * np.prod(majorant.a_prime(tuples), axis=1))
    else:
        remainder = rem_bound = 0.0
    ms = np.arange(-order, order + 1)
    s_box = float(np.sum(np.abs(majorant.coefficient(ms))))
    tail = majorant.bump.tail_bound(order)
    trunc = t * cutoff_transform(0.0) * ((s_box + tail) ** k - s_box**k)
    integral = main + remainder
    return MajorizedCount(
        point_sum=point_sum,
        integral=integral,
        main_term=main,
        remainder=remainder,
        remainder_bound=rem_bound,
        truncation_bound=trunc,
        measure_upper_bound=(math.pi / 2) ** 2 * (integral + trunc),
        order=order,
    )


def majorant_measure_bound(freqs, radius: float, eta: float, t: float, r: int = 2, budget: int = 2_000_000) -> float:
    """Phase-uniform upper bound on mu(B(alpha, beta, T; rho)).

    int_0^T Psi_{alpha,beta} <= sum_m prod|a_m| min(T, 1/(pi |m . alpha|)),
    summed over a box |m_l| <= M with a certified tail.
    """
    freqs = np.asarray(freqs, dtype=float)
    k = freqs.size
    maj = BohrMajorant(freqs, np.zeros(k), radius, eta, r)
    order = max(1, int((budget ** (1.0 / k) - 1) // 2))
    ms = np.arange(-order, order + 1, dtype=float)
    absa = np.abs(maj.coefficient(ms))
    grids = np.meshgrid(*([ms] * k), indexing="ij", sparse=True)
    lam = sum(g * a for g, a in zip(grids, freqs))
    weight = np.ones(())
    for j in range(k):
        shape = [1] * k
        shape[j] = ms.size
        weight = weight * absa.reshape(shape)
    with np.errstate(divide="ignore"):
        integ = np.minimum(t, 1.0 / (math.pi * np.abs(lam)))
    total = compensated_sum((weight * integ).ravel())
    s_box = float(absa.sum())
    tail = maj.bump.tail_bound(order)
    return total + t * ((s_box + tail) ** k - s_box**k)
