#!/usr/bin/env python3
"""Generate the bundled table of zeta-zero ordinates.

Zeros below ``--mp-cutoff`` are taken from mpmath's ``zetazero``; above it a
vectorised Riemann-Siegel evaluation of Z(t) (main sum plus the C0..C4
remainder terms) is used.  Sign changes of Z are bracketed on a grid of 16
points per Gram interval, refined by bisection, and the resulting count is
checked against theta(t)/pi + 1 (Turing-style drift check) before writing.

Usage:
    python tools/make_zero_table.py --count 100000 --out src/psilab/data/zeros_100k.txt
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import mpmath
import numpy as np

np.pi_ld = np.longdouble("3.14159265358979323846264338327950288")

TWO_PI = 2.0 * math.pi


def _psi_series(degree: int = 90) -> list:
    """Taylor coefficients of cos(2pi(p^2-p-1/16))/cos(2pi p) about p = 1/2."""
    mpmath.mp.dps = 80
    two_pi = 2 * mpmath.pi
    c5, s5 = mpmath.cos(5 * mpmath.pi / 8), mpmath.sin(5 * mpmath.pi / 8)
    num = [mpmath.mpf(0)] * (degree + 1)
    # cos(2pi z^2 - 5pi/8) = cos(2pi z^2) c5 + sin(2pi z^2) s5
    for j in range(0, degree // 2 + 1):
        if 2 * j > degree:
            break
        term = two_pi**j / mpmath.factorial(j)
        # z^(2j) coefficient of cos/sin(2pi z^2)
        if j % 4 == 0:
            num[2 * j] += term * c5
        elif j % 4 == 1:
            num[2 * j] += term * s5
        elif j % 4 == 2:
            num[2 * j] -= term * c5
        else:
            num[2 * j] -= term * s5
    den = [mpmath.mpf(0)] * (degree + 1)
    for j in range(0, degree // 2 + 1):
        den[2 * j] = (-1) ** (j + 1) * two_pi ** (2 * j) / mpmath.factorial(2 * j)
    out = [mpmath.mpf(0)] * (degree + 1)
    for n in range(degree + 1):
        acc = num[n]
        for m in range(1, n + 1):
            acc -= den[m] * out[n - m]
        out[n] = acc / den[0]
    return out


def _derivative(coeffs: list, order: int) -> list:
    res = list(coeffs)
    for _ in range(order):
        res = [res[i] * i for i in range(1, len(res))]
    return res


def _remainder_polys() -> list[np.ndarray]:
    ps = _psi_series()
    pi = mpmath.pi
    d = {k: _derivative(ps, k) for k in range(13)}

    def comb(*terms):
        n = max(len(d[k]) for _, k in terms)
        out = [mpmath.mpf(0)] * n
        for w, k in terms:
            for i, c in enumerate(d[k]):
                out[i] += w * c
        # numpy polyval wants highest degree first
        return np.array([float(c) for c in reversed(out)])

    c0 = comb((1, 0))
    c1 = comb((-1 / (96 * pi**2), 3))
    c2 = comb((1 / (64 * pi**2), 2), (1 / (18432 * pi**4), 6))
    c3 = comb((-1 / (64 * pi**2), 1), (-1 / (3840 * pi**4), 5), (-1 / (5308416 * pi**6), 9))
    c4 = comb(
        (1 / (128 * pi**2), 0),
        (mpmath.mpf(19) / (24576 * pi**4), 4),
        (mpmath.mpf(11) / (5898240 * pi**6), 8),
        (1 / (2038431744 * pi**8), 12),
    )
    return [c0, c1, c2, c3, c4]


_POLYS = None


def theta(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    if t.dtype != np.longdouble:
        t = t.astype(float)
    pi = np.pi_ld if t.dtype == np.longdouble else math.pi
    return (t / 2) * np.log(t / (2 * pi)) - t / 2 - pi / 8 + 1 / (48 * t) + 7 / (5760 * t**3)


def siegel_z(t: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """Riemann-Siegel Z(t) in binary64, valid for t above a few hundred."""
    global _POLYS
    if _POLYS is None:
        _POLYS = _remainder_polys()
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    for lo in range(0, t.size, chunk):
        tc = t[lo : lo + chunk]
        a = np.sqrt(tc / TWO_PI)
        nmax = np.floor(a).astype(int)
        big = int(nmax.max())
        n = np.arange(1, big + 1, dtype=float)
        # phase in extended precision: theta ~ 1e5 and t log n ~ 1e6 at the top of the table
        tl = tc.astype(np.longdouble)
        th = theta(tl)
        phase = th[:, None] - tl[:, None] * np.log(n.astype(np.longdouble))[None, :]
        phase = np.mod(phase, np.longdouble(2) * np.pi_ld).astype(float)
        terms = np.cos(phase) / np.sqrt(n)[None, :]
        mask = n[None, :] <= nmax[:, None]
        main = 2.0 * np.sum(np.where(mask, terms, 0.0), axis=1)
        z = a - nmax - 0.5
        inv = 1.0 / a
        rem = np.zeros_like(tc)
        for k in range(4, -1, -1):
            rem = rem * inv + np.polyval(_POLYS[k], z)
        sign = np.where(nmax % 2 == 1, 1.0, -1.0)
        out[lo : lo + chunk] = main + sign * a**-0.5 * rem
    return out


def gram_points(n_lo: int, n_hi: int) -> np.ndarray:
    n = np.arange(n_lo, n_hi + 1, dtype=float)
    target = n * math.pi
    g = np.maximum(2 * math.pi * np.exp(1 + np.real(_lambertw((8 * n + 1) / (8 * math.e)))), 10.0)
    for _ in range(30):
        g -= (theta(g) - target) / (0.5 * np.log(g / TWO_PI))
    return g


def _lambertw(x):
    from scipy.special import lambertw

    return lambertw(x)


def bisect_roots(f, lo: np.ndarray, hi: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    flo = f(lo)
    lo, hi = lo.copy(), hi.copy()
    # stop at the tolerance or at float64 resolution, whichever is coarser
    floor = 4 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
    for _ in range(200):
        if np.all(hi - lo <= np.maximum(tol, floor)):
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        same = np.sign(fm) == np.sign(flo)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100_000)
    ap.add_argument("--out", required=True)
    ap.add_argument("--mp-cutoff", type=float, default=1000.0)
    ap.add_argument("--sub", type=int, default=16, help="grid points per Gram interval")
    ap.add_argument("--fine", type=int, default=256, help="resampling points around a suspicious extremum")
    ap.add_argument("--low-cache", help="optional .npy cache for the mpmath zeros")
    args = ap.parse_args(argv)
    t0 = time.time()

    n_gram = args.count + 200
    g = gram_points(-1, n_gram)
    grid = np.concatenate(
        [np.linspace(g[i], g[i + 1], args.sub, endpoint=False) for i in range(g.size - 1)] + [g[-1:]]
    )
    grid = grid[grid >= args.mp_cutoff]
    zs = siegel_z(grid)
    idx = np.nonzero(np.sign(zs[:-1]) != np.sign(zs[1:]))[0]
    high = bisect_roots(siegel_z, grid[idx], grid[idx + 1])
    print(f"high range: {high.size} sign changes in {time.time() - t0:.1f}s", file=sys.stderr)

    # A close pair inside one grid step shows up as a wrong-signed extremum
    # (positive local min or negative local max); resample those finely.
    mid = zs[1:-1]
    same = (np.sign(zs[:-2]) == np.sign(mid)) & (np.sign(zs[2:]) == np.sign(mid))
    wrong = same & (np.abs(mid) <= np.abs(zs[:-2])) & (np.abs(mid) <= np.abs(zs[2:]))
    cand = np.nonzero(wrong)[0] + 1
    fine = np.concatenate([np.linspace(grid[i - 1], grid[i + 1], args.fine + 1) for i in cand]) if cand.size else np.zeros(0)
    extra = np.zeros(0)
    if fine.size:
        fz = siegel_z(fine).reshape(cand.size, args.fine + 1)
        fg = fine.reshape(cand.size, args.fine + 1)
        r, c = np.nonzero(np.sign(fz[:, :-1]) != np.sign(fz[:, 1:]))
        if r.size:
            extra = bisect_roots(siegel_z, fg[r, c], fg[r, c + 1])
    high = np.sort(np.concatenate([high, extra]))
    print(f"refined {cand.size} suspicious extrema, {extra.size} extra zeros", file=sys.stderr)

    if args.low_cache and os.path.exists(args.low_cache):
        low = np.load(args.low_cache)
    else:
        mpmath.mp.dps = 20
        low = []
        n = 1
        while True:
            gamma = float(mpmath.zetazero(n).imag)
            if gamma >= args.mp_cutoff:
                break
            low.append(gamma)
            n += 1
        low = np.array(low)
        if args.low_cache:
            np.save(args.low_cache, low)
    print(f"low range: {low.size} zeros via mpmath, {time.time() - t0:.1f}s", file=sys.stderr)
    zeros = np.concatenate([low, high])
    assert np.all(np.diff(zeros) > 0)

    # Turing-style check: found count vs smooth count at Gram points has no drift.
    gg = g[(g > 20) & (g < zeros[args.count - 1] if zeros.size >= args.count else g > 20)]
    found = np.searchsorted(zeros, gg, side="right")
    smooth = theta(gg) / math.pi + 1
    s = found - smooth
    window = 500
    drift = [s[i : i + window].mean() for i in range(0, s.size - window, window)]
    print(f"S at Gram points: min={s.min():.3f} max={s.max():.3f}; "
          f"window means in [{min(drift):.3f}, {max(drift):.3f}]", file=sys.stderr)
    if max(abs(d) for d in drift) > 0.5:
        print("drift detected: missed zeros; increase --sub", file=sys.stderr)
        return 1
    if zeros.size < args.count:
        print("not enough zeros located", file=sys.stderr)
        return 1

    zeros = zeros[: args.count]
    with open(args.out, "w") as fh:
        fh.write(f"# first {args.count} positive ordinates of nontrivial zeta zeros\n")
        fh.write("# generated by tools/make_zero_table.py (Riemann-Siegel Z, sign-change bracketing)\n")
        for z in zeros:
            fh.write(f"{z:.9f}\n")
    print(f"wrote {zeros.size} ordinates, t_max={zeros[-1]:.9f}, {time.time() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
