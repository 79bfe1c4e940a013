import bisect
import itertools
import math

import numpy as np
import pytest

from psilab import psi, zeros
from psilab.amplifier import ConcentrationInstance

# first ordinates, independently known to 9 decimals
FIRST_ZEROS = [
    14.134725142, 21.022039639, 25.010857580, 30.424876126, 32.935061588,
    37.586178159, 40.918719012, 43.327073281, 48.005150881, 49.773832478,
]


@pytest.fixture(scope="session")
def table() -> zeros.ZeroTable:
    return zeros.load_zero_table(zeros.bundled_table_path())


@pytest.fixture(scope="session")
def series_1e6() -> psi.PsiSeries:
    return psi.build_psi_series(10**6)


@pytest.fixture(scope="session")
def series_2e6() -> psi.PsiSeries:
    return psi.build_psi_series(2 * 10**6)


@pytest.fixture(scope="session")
def synthetic_table() -> zeros.ZeroTable:
    """1000 ordinates with GUE-free, mean-spacing-matched jitter: a stand-in table."""
    rng = np.random.default_rng(7)
    n = np.arange(1, 1001)
    # invert the smooth count t/2pi log(t/2pi e) + 7/8 roughly, then jitter
    t = 2 * math.pi * (n - 7 / 8) / np.log(np.maximum(n, 2))
    for _ in range(50):
        u = t / (2 * math.pi)
        f = u * np.log(u) - u + 7 / 8 - (n - 0.5)
        t = t - f / (np.log(u) / (2 * math.pi))
    t = t + rng.uniform(-0.1, 0.1, t.size)
    t = np.sort(t)
    t[0] = max(t[0], 14.13)
    return zeros.ZeroTable(t, "synthetic")


class NaivePsi:
    """Plain Eratosthenes sieve and exactly rounded sums; shares no code with psilab."""

    def __init__(self, limit: int):
        flags = bytearray([1]) * (limit + 1)
        flags[0:2] = b"\x00\x00"
        for p in range(2, math.isqrt(limit) + 1):
            if flags[p]:
                flags[p * p :: p] = bytearray(len(flags[p * p :: p]))
        items = []
        for p in range(2, limit + 1):
            if flags[p]:
                pk = p
                while pk <= limit:
                    items.append((pk, math.log(p)))
                    pk *= p
        items.sort()
        self.points = [n for n, _ in items]
        self.logs = [v for _, v in items]

    def __call__(self, x: float) -> float:
        k = bisect.bisect_right(self.points, x)
        return math.fsum(self.logs[:k])


@pytest.fixture(scope="session")
def naive_psi() -> NaivePsi:
    return NaivePsi(10**5)


def clustered_instance(seed: int, n: int = 1000, share: float = 0.6) -> ConcentrationInstance:
    """share*n points with ||x|| <= eps/2 at alpha = 1, the rest uniform."""
    rng = np.random.default_rng(seed)
    eps, delta, t = 0.004, 0.5, 1000.0
    k = int(share * n)
    base = rng.integers(0, int(t) - 1, n).astype(float)
    frac = np.concatenate([rng.uniform(-eps / 2, eps / 2, k), rng.uniform(0, 1, n - k)])
    pts = np.clip(base + frac, 0, t)
    return ConcentrationInstance(pts, t, 1.0, delta, eps)


def cosine_instance(seed: int, n: int = 20_000) -> ConcentrationInstance:
    """Fractional parts drawn from density 1 + 2c cos 2pi(u - u0), at a random frequency."""
    rng = np.random.default_rng(seed)
    delta, eps, t = 0.3, 0.0025, 5000.0
    c = 0.45
    u0 = rng.uniform()
    out = []
    while len(out) < n:
        u = rng.uniform(size=2 * n)
        keep = rng.uniform(size=u.size) * (1 + 2 * c) <= 1 + 2 * c * np.cos(2 * np.pi * (u - u0))
        out.extend(u[keep].tolist())
    u = np.array(out[:n])
    alpha = rng.uniform(0.5, 2.0)
    m = rng.integers(0, int(alpha * t) - 1, n)
    return ConcentrationInstance((m + u) / alpha, t, float(alpha), delta, eps)


def arc_distance(v: float) -> float:
    f = v - math.floor(v)
    return min(f, 1 - f)


def synthetic_fixture():
    """Five witnesses, phases and 400 stand-in ordinates."""
    rng = np.random.default_rng(5)
    xs = [1003.5, 1187.5, 1422.5, 1650.5, 1911.5]
    betas = rng.uniform(0, 1, 5).tolist()
    g = np.sort(rng.uniform(14, 500, 400))
    return xs, betas, g


def holder_oracle(xs, betas, g, rho, k):
    """Sum over all k-tuples of joint membership counts, in plain Python."""
    f = [math.log(x) / (2 * math.pi) for x in xs]
    total = 0
    for tup in itertools.product(range(len(xs)), repeat=k):
        for v in g.tolist():
            if all(arc_distance(f[i] * v + betas[i]) <= rho for i in tup):
                total += 1
    return total
