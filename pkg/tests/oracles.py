"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def bisect(f, a: float, b: float, iters: int = 200) -> float:
    fa = f(a)
    if fa * f(b) > 0:
        raise ValueError("root not bracketed")
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0 or b - a <= 4 * np.finfo(float).eps * max(1.0, abs(m)):
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def dispersion_roots(gamma: float, g: float, h: float, k: float) -> tuple[float, float]:
    """Both roots of lam^2 k coth(kh) + gamma lam - g by bisection, split at the vertex."""
    c = k / math.tanh(k * h)

    def f(lam):
        return lam * lam * c + gamma * lam - g

    vertex = -gamma / (2 * c)
    hi = vertex + 1.0
    while f(hi) < 0:
        hi = vertex + 2 * (hi - vertex)
    lo = vertex - 1.0
    while f(lo) < 0:
        lo = vertex - 2 * (vertex - lo)
    return bisect(f, vertex, hi), bisect(f, lo, vertex)


def periodic_dn_fft(samples: np.ndarray, h: float) -> np.ndarray:
    """Strip DN map of 2 pi-periodic samples via the discrete Fourier transform."""
    n = samples.size
    c = np.fft.rfft(samples)
    k = np.arange(c.size, dtype=float)
    mult = np.empty_like(k)
    mult[0] = 1.0 / h
    mult[1:] = k[1:] / np.tanh(k[1:] * h)
    return np.fft.irfft(c * mult, n)


def brute_force_modes(generators, cos_parities, sin_parities, coeff_bound, cutoff):
    """(freq, vec, kind) for every lattice vector, canonical by positive frequency."""
    out = []
    d = len(generators)
    for v in itertools.product(range(-coeff_bound, coeff_bound + 1), repeat=d):
        f = sum(c * g for c, g in zip(v, generators))
        if not 0 < f <= cutoff:
            continue
        par = tuple(c % 2 for c in v)
        if par in cos_parities:
            out.append((f, v, "cos"))
        elif par in sin_parities:
            out.append((f, v, "sin"))
    out.sort()
    return out


def long_window_mean(fun, X: float, freq_max: float, pts_per_wave: int = 24) -> float:
    """(1/2X) * integral_{-X}^{X} fun by the composite Simpson rule."""
    from scipy.integrate import simpson

    n = int(2 * X * freq_max / (2 * math.pi) * pts_per_wave) | 1
    xs = np.linspace(-X, X, n)
    return float(simpson(fun(xs), x=xs) / (2 * X))


def parity_group_ok(cos: set, sin: set, d: int) -> bool:
    """Group/coset laws checked directly on {0,1}^d."""
    zero = (0,) * d

    def xor(p, q):
        return tuple((a + b) % 2 for a, b in zip(p, q))

    if zero not in cos:
        return False
    if any(xor(p, q) not in cos for p in cos for q in cos):
        return False
    if cos & sin:
        return False
    if sin:
        if any(xor(p, q) not in cos for p in sin for q in sin):
            return False
        if any(xor(p, q) not in sin for p in cos for q in sin):
            return False
        rep = next(iter(sin))
        if {xor(rep, c) for c in cos} != set(sin):
            return False
    return True
