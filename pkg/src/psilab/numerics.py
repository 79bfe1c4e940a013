"""Compensated summation and extended-precision phase helpers."""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
_TWO_PI_LD = np.longdouble("6.28318530717958647692528676655900577")
_BLOCK = 64


class NeumaierSum:
    """Running compensated sum (Neumaier's variant of Kahan summation)."""

    __slots__ = ("_s", "_c")

    def __init__(self, value: float = 0.0):
        self._s = float(value)
        self._c = 0.0

    def add(self, value: float) -> None:
        value = float(value)
        t = self._s + value
        if abs(self._s) >= abs(value):
            self._c += (self._s - t) + value
        else:
            self._c += (value - t) + self._s
        self._s = t

    @property
    def value(self) -> float:
        return self._s + self._c


def compensated_sum(values) -> float:
    """Correctly rounded sum of a real sequence (``math.fsum``)."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def compensated_cumsum(values) -> np.ndarray:
    """Inclusive prefix sums with block-compensated accumulation.

    Values are split into fixed blocks of 64; block totals are exactly rounded
    and chained with a Neumaier accumulator, then each block's local prefix is
    added on.  The reduction order depends only on the input length, so the
    result is bit-reproducible.
    """
    v = np.asarray(values, dtype=float).ravel()
    n = v.size
    if n == 0:
        return v.copy()
    nb = -(-n // _BLOCK)
    padded = np.zeros(nb * _BLOCK)
    padded[:n] = v
    blocks = padded.reshape(nb, _BLOCK)
    local = np.cumsum(blocks, axis=1)
    offsets = np.empty(nb)
    acc = NeumaierSum()
    for i in range(nb):
        offsets[i] = acc.value
        acc.add(math.fsum(blocks[i].tolist()))
    return (offsets[:, None] + local).ravel()[:n]


def compensated_cumsum_complex(values) -> np.ndarray:
    v = np.asarray(values, dtype=complex)
    return compensated_cumsum(v.real) + 1j * compensated_cumsum(v.imag)


def reduced_phase(heights, log_x) -> np.ndarray:
    """``heights * log_x`` reduced into [0, 2pi) using long-double products."""
    h = np.asarray(heights, dtype=np.longdouble)
    lx = log_x if isinstance(log_x, np.longdouble) else np.longdouble(log_x)
    return np.mod(h * lx, _TWO_PI_LD).astype(float)


def log_ld(x: float) -> np.longdouble:
    return np.log(np.longdouble(x))


def unit_phases(heights, x: float) -> np.ndarray:
    """x^{i*gamma} = exp(i*gamma*log x) for every height, phase-reduced first."""
    ph = reduced_phase(heights, log_ld(x))
    return np.cos(ph) + 1j * np.sin(ph)


def dist_to_int(v):
    """Distance to the nearest integer, ||v||."""
    v = np.asarray(v, dtype=float)
    return np.abs(v - np.round(v))
