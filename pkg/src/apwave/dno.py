"""Dirichlet-Neumann operator and harmonic extension for the strip -h < y < 0."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trig import TrigSum


@dataclass(frozen=True)
class StripGeometry:
    h: float

    def __post_init__(self):
        if not np.isfinite(self.h) or self.h <= 0:
            raise ValueError(f"h: strip depth must be positive, got {self.h}")


def _depth(h) -> float:
    if isinstance(h, StripGeometry):
        return h.h
    return StripGeometry(float(h)).h


def dn_multiplier(h, k):
    """``k coth(kh)``, continued by ``1/h`` at ``k = 0``.  Accepts arrays."""
    h = _depth(h)
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("dn_multiplier: frequency must be non-negative")
    x = k * h
    small = x < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, (1.0 + x * x / 3.0) / h, k / np.tanh(np.where(small, 1.0, x)))
    return float(out) if out.ndim == 0 else out


def dn_apply(h, w: TrigSum) -> TrigSum:
    """Normal derivative at y = 0 of the harmonic extension vanishing at y = -h."""
    h = _depth(h)
    c = {v: a * dn_multiplier(h, w.freq(v)) for v, a in w.cos.items()}
    s = {v: b * dn_multiplier(h, w.freq(v)) for v, b in w.sin.items()}
    return TrigSum._canonical(w.basis, w.mean / h, c, s, w.truncation)


def _ratios(k: float, h: float, ys: np.ndarray):
    """sinh(k(y+h))/sinh(kh) and cosh(k(y+h))/sinh(kh) without overflow."""
    lead = np.exp(k * ys)
    den = -np.expm1(-2.0 * k * h)
    tail = np.exp(-2.0 * k * (ys + h))
    return lead * (1.0 - tail) / den, lead * (1.0 + tail) / den


def _check_y(h: float, ys: np.ndarray):
    tol = 1e-12 * max(1.0, h)
    if np.any(ys < -h - tol) or np.any(ys > tol):
        raise ValueError(f"y must lie in [-h, 0] = [{-h}, 0]")


def harmonic_fields(h, w: TrigSum, xs, ys) -> dict[str, np.ndarray]:
    """V = extension of ``w``, U = its conjugate, and their first derivatives.

    Arrays have shape ``(len(ys), len(xs))``.  ``U - (mean(w)/h) x`` is
    almost periodic with zero mean, and (U, V) satisfy Cauchy-Riemann.
    """
    h = _depth(h)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    _check_y(h, ys)
    X, Y = np.meshgrid(xs, ys)
    q = w.mean / h
    out = {
        "V": q * (Y + h), "Vx": np.zeros_like(X), "Vy": np.full_like(X, q),
        "U": q * X, "Ux": np.full_like(X, q), "Uy": np.zeros_like(X),
    }
    vecs = sorted(set(w.cos) | set(w.sin), key=lambda v: (w.freq(v), v))
    if not vecs:
        return out
    k = np.array([w.freq(v) for v in vecs])
    a = np.array([w.cos.get(v, 0.0) for v in vecs])
    b = np.array([w.sin.get(v, 0.0) for v in vecs])
    S = np.empty((ys.size, k.size))
    C = np.empty_like(S)
    for j, kj in enumerate(k):
        S[:, j], C[:, j] = _ratios(kj, h, ys)
    kx = np.outer(k, xs)
    cx, sx = np.cos(kx), np.sin(kx)
    A = a[:, None] * cx + b[:, None] * sx       # a cos + b sin
    B = a[:, None] * sx - b[:, None] * cx       # its conjugate partner
    out["V"] += S @ A
    out["Vx"] -= (S * k) @ B
    out["Vy"] += (C * k) @ A
    out["U"] += C @ B
    out["Ux"] += (C * k) @ A
    out["Uy"] += (S * k) @ B
    return out


def extend_grid(h, w: TrigSum, xs, ys) -> np.ndarray:
    return harmonic_fields(h, w, xs, ys)["V"]


def extend(h, w: TrigSum, x: float, y: float) -> float:
    return float(extend_grid(h, w, [x], [y])[0, 0])


def conjugate_extend_grid(h, w: TrigSum, xs, ys) -> np.ndarray:
    return harmonic_fields(h, w, xs, ys)["U"]


def conjugate_extend(h, w: TrigSum, x: float, y: float) -> float:
    return float(conjugate_extend_grid(h, w, [x], [y])[0, 0])
