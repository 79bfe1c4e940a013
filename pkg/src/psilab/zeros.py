"""Zeta-zero ordinate tables: loading, counting, spacing statistics, partitions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import integrate

BUNDLED_TABLE = "zeros_100k.txt"

# The form factor written with (sin(pi u)/u)^2 in one common rendering of the
# pair-correlation conjecture is not a density (it is negative near u = 0);
# the standard (sin(pi u)/(pi u))^2 is used and the other form is noted.
SINC_NOTE = (
    "form factor 1-(sin(pi u)/(pi u))^2 (standard normalisation); "
    "literal variant 1-(sin(pi u)/u)^2 not used"
)


class ZeroTableError(ValueError):
    """Malformed zero-table file."""


class OutOfRangeError(ValueError):
    """Query height beyond what the table can answer."""


def bundled_table_path() -> Path:
    return Path(str(resources.files("psilab") / "data" / BUNDLED_TABLE))


@dataclass(frozen=True)
class ZeroTable:
    ordinates: np.ndarray
    source_id: str = "memory"

    def __post_init__(self):
        arr = np.array(self.ordinates, dtype=float).ravel()
        if arr.size == 0:
            raise ZeroTableError("no ordinates")
        if arr[0] <= 0:
            raise ZeroTableError("ordinates must be positive")
        bad = np.flatnonzero(np.diff(arr) <= 0)
        if bad.size:
            raise ZeroTableError(f"not ascending at index {bad[0] + 1}")
        arr.setflags(write=False)
        object.__setattr__(self, "ordinates", arr)

    @property
    def t_max(self) -> float:
        return float(self.ordinates[-1])

    def __len__(self) -> int:
        return int(self.ordinates.size)

    def upto(self, t: float) -> np.ndarray:
        return self.ordinates[: np.searchsorted(self.ordinates, t, side="right")]


def load_zero_table(path, strict: bool = True) -> ZeroTable:
    """Parse a one-ordinate-per-line text table.

    ``strict`` additionally requires the first ordinate to lie in (14.0, 14.3),
    i.e. that the file starts at the first zeta zero.
    """
    path = Path(path)
    values = []
    prev = -math.inf
    with path.open("r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if line.startswith("#"):
                continue
            if not line:
                raise ZeroTableError(f"blank line at line {lineno}")
            try:
                v = float(line)
            except ValueError:
                raise ZeroTableError(f"non-numeric ordinate {line!r} at line {lineno}") from None
            if not math.isfinite(v) or v <= 0:
                raise ZeroTableError(f"ordinate must be positive and finite at line {lineno}")
            if v <= prev:
                raise ZeroTableError(f"not ascending at line {lineno}")
            prev = v
            values.append(v)
    if not values:
        raise ZeroTableError(f"no ordinates in {path}")
    if strict and not 14.0 < values[0] < 14.3:
        raise ZeroTableError(f"first ordinate {values[0]} is not the first zeta zero")
    return ZeroTable(np.array(values), source_id=path.name)


def _check_t(table: ZeroTable, t: float) -> None:
    if t < 0:
        raise OutOfRangeError(f"t={t} is negative")
    if t > table.t_max:
        raise OutOfRangeError(f"t={t} exceeds table t_max={table.t_max}")


def count_zeros(table: ZeroTable, t: float) -> int:
    """N(t): number of ordinates <= t."""
    _check_t(table, t)
    return int(np.searchsorted(table.ordinates, t, side="right"))


def riemann_von_mangoldt(t: float, refined: bool = False) -> float:
    """Smooth zero-counting function.

    Asymptotic form ``t log t / 2pi``, or the refined
    ``(t/2pi) log(t/2pi) - t/2pi + 7/8`` used as the desk-scale comparison.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    if not refined:
        if t <= 1:
            raise ValueError("asymptotic form needs t > 1")
        return t * math.log(t) / (2 * math.pi)
    u = t / (2 * math.pi)
    return u * math.log(u) - u + 7.0 / 8.0


def form_factor(u):
    """Montgomery density 1 - (sin pi u / pi u)^2."""
    return 1.0 - np.sinc(u) ** 2


def form_factor_integral(a: float, b: float) -> float:
    val, _ = integrate.quad(lambda u: 1.0 - np.sinc(u) ** 2, a, b, epsabs=0.0, epsrel=1e-10, limit=200)
    return float(val)


def _pairs_in_window(g: np.ndarray, lo, hi) -> int:
    """Ordered pairs (i, j) with lo <= g[i] - g[j] <= hi; lo, hi may be per-i arrays."""
    left = np.searchsorted(g, g - hi, side="left")
    right = np.searchsorted(g, g - lo, side="right")
    return int(np.sum(right - left))


@dataclass(frozen=True)
class PairCorrelation:
    t: float
    a: float
    b: float
    observed: int
    predicted: float
    form_integral: float
    observed_symmetric: int
    unfolded_observed: int
    unfolded_predicted: float

    @property
    def ratio(self) -> float:
        """Literal ratio: conjugate-doubled count over (integral) * t log t / pi."""
        return self.observed_symmetric / self.predicted

    @property
    def unfolded_ratio(self) -> float:
        return self.unfolded_observed / self.unfolded_predicted

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "a": self.a,
            "b": self.b,
            "observed": self.observed,
            "observed_symmetric": self.observed_symmetric,
            "predicted": self.predicted,
            "ratio": self.ratio,
            "form_integral": self.form_integral,
            "unfolded_observed": self.unfolded_observed,
            "unfolded_predicted": self.unfolded_predicted,
            "unfolded_ratio": self.unfolded_ratio,
            "note": SINC_NOTE,
        }


def pair_correlation(table: ZeroTable, t: float, a: float, b: float) -> PairCorrelation:
    """Count ordered pairs with gamma - gamma' in [2 pi a / log t, 2 pi b / log t].

    ``observed`` counts pairs of positive ordinates only.  Counting over
    |gamma|, |gamma'| <= t also picks up the mirrored pairs (-gamma', -gamma),
    so ``observed_symmetric = 2 * observed`` is what compares with
    ``predicted = integral * t log t / pi``.

    The ``unfolded_*`` fields give the desk-scale version: each pair is scaled
    by the local mean spacing 2pi/log(gamma/2pi) at the upper ordinate and the
    prediction uses the refined zero count, 2 N_refined(t) * integral.
    """
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    if a <= 0:
        raise ValueError("need a > 0")
    _check_t(table, t)
    if t <= 1:
        raise ValueError("t must exceed 1")
    g = table.upto(t)
    L = math.log(t)
    observed = _pairs_in_window(g, 2 * math.pi * a / L, 2 * math.pi * b / L)
    fint = form_factor_integral(a, b)
    predicted = fint * t * L / math.pi
    local = np.log(g / (2 * math.pi))
    unf = _pairs_in_window(g, 2 * math.pi * a / local, 2 * math.pi * b / local) if g.size else 0
    return PairCorrelation(
        t=float(t),
        a=float(a),
        b=float(b),
        observed=observed,
        predicted=predicted,
        form_integral=fint,
        observed_symmetric=2 * observed,
        unfolded_observed=2 * unf,
        unfolded_predicted=2 * riemann_von_mangoldt(t, refined=True) * fint,
    )


def close_pair_count(table: ZeroTable, t: float, w: float) -> int:
    """Ordered pairs (diagonal included) with |gamma - gamma'| <= w / log t."""
    if w <= 0:
        raise ValueError("w must be positive")
    _check_t(table, t)
    g = table.upto(t)
    h = w / math.log(t)
    left = np.searchsorted(g, g - h, side="left")
    right = np.searchsorted(g, g + h, side="right")
    return int(np.sum(right - left))


@dataclass(frozen=True)
class ZeroPartition:
    """Split of the ordinates in [0, t] into a regular part n1 and a crowded part n2.

    ``n1``/``n2`` are index arrays into the table's ordinates.
    """

    n1: np.ndarray
    n2: np.ndarray
    interval_length: float
    k_param: float
    c_param: float
    t: float
    n_total: int

    @property
    def threshold(self) -> float:
        return self.c_param * self.k_param

    @property
    def n2_fraction(self) -> float:
        return self.n2.size / self.n_total if self.n_total else 0.0

    @property
    def n2_small(self) -> bool:
        """|n2| <= N(t) / (200 K)."""
        return self.n2.size <= self.n_total / (200.0 * self.k_param)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "interval_length": self.interval_length,
            "k_param": self.k_param,
            "c_param": self.c_param,
            "n_total": self.n_total,
            "n1_size": int(self.n1.size),
            "n2_size": int(self.n2.size),
            "n2_fraction": self.n2_fraction,
            "n2_small": self.n2_small,
        }


def window_index(heights, interval_length: float) -> np.ndarray:
    return np.floor(np.asarray(heights, dtype=float) / interval_length).astype(np.int64)


def partition_zeros(table: ZeroTable, t: float, k_param: float, c_param: float) -> ZeroPartition:
    """Grid [j/log t, (j+1)/log t) windows; crowded windows (> C*K zeros) go to n2."""
    if t < 10:
        raise ValueError("t must be at least 10")
    if k_param < 1 or c_param < 1:
        raise ValueError("k_param and c_param must be >= 1")
    _check_t(table, t)
    g = table.upto(t)
    length = 1.0 / math.log(t)
    w = window_index(g, length)
    _, inverse, counts = np.unique(w, return_inverse=True, return_counts=True)
    crowded = counts[inverse] > c_param * k_param
    idx = np.arange(g.size)
    return ZeroPartition(
        n1=idx[~crowded],
        n2=idx[crowded],
        interval_length=length,
        k_param=float(k_param),
        c_param=float(c_param),
        t=float(t),
        n_total=int(g.size),
    )


def max_points_in_window(points, length: float) -> int:
    """Largest number of points in any closed interval of the given length."""
    p = np.sort(np.asarray(points, dtype=float))
    if p.size == 0:
        return 0
    right = np.searchsorted(p, p + length, side="right")
    return int(np.max(right - np.arange(p.size)))
