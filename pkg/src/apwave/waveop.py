"""The steady-wave functional F(lambda, (mu, w)) and its analysis at w = 0.

With ``G`` the strip Dirichlet-Neumann operator,

    F = {lam + gam (G(w^2/2) - w - w G(w))}^2
        - (lam^2 + mu - 2 g w) (w'^2 + G(w)^2 + 2 G(w) + 1).

Writing ``P = G(w^2/2) - w - w G(w)`` and ``D = w'^2 + G(w)^2 + 2 G(w)`` this
is evaluated as ``2 lam gam P + gam^2 P^2 - lam^2 D - (mu - 2 g w)(1 + D)``,
which has no O(lam^2) cancellation at small amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import trig
from .dno import dn_apply, dn_multiplier
from .freqset import AdmissiblePair, ModeId, enumerate_modes
from .trig import TrigSum


@dataclass(frozen=True)
class WaveParams:
    """Vorticity ``gamma`` (1/s), gravity ``g`` (m/s^2), conformal mean depth ``h`` (m)."""

    gamma: float = 0.0
    g: float = 9.8
    h: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "g", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name}: must be finite")
        if self.g <= 0:
            raise ValueError(f"g: must be positive, got {self.g}")
        if self.h <= 0:
            raise ValueError(f"h: must be positive, got {self.h}")

    def to_dict(self) -> dict:
        return {"gamma": self.gamma, "g": self.g, "h": self.h}


@dataclass(frozen=True)
class TrialState:
    lam: float
    mu: float
    w: TrigSum


class SurfaceError(ValueError):
    """The free surface touches or crosses the bed (w <= -h somewhere)."""


def surface_window(generators: Sequence[float]) -> float:
    """Length of the representative x-window, 2 pi over the smallest generator."""
    return 2.0 * math.pi / min(generators)


def min_surface(p: WaveParams, w: TrigSum, n: int = 4096) -> float:
    """Minimum of ``h + w`` on an ``n``-point grid over the representative window."""
    xs = np.linspace(0.0, surface_window(w.generators), n, endpoint=False)
    return float(p.h + np.min(trig.eval_grid(w, xs))) if not w.is_zero() else p.h


def check_surface(p: WaveParams, w: TrigSum, n: int = 4096) -> None:
    amp = sum(abs(a) for a in w.cos.values()) + sum(abs(b) for b in w.sin.values())
    if abs(w.mean) + amp < p.h:
        return
    low = min_surface(p, w, n)
    if low <= 0:
        raise SurfaceError(f"surface below bed: min(h + w) = {low:.6g} on the {n}-point grid")


def _max_freq(w: TrigSum) -> float:
    return max((w.freq(m.vec) for m in w.support()), default=0.0)


def residual_F(p: WaveParams, s: TrialState, cutoff: float | None = None) -> TrigSum:
    """F(lam, (mu, w)) as an exact trigonometric sum.

    Intermediate products keep every frequency up to four times ``cutoff``
    (default: the largest frequency in ``w``), which is lossless for the
    quartic structure of F; the result is not projected.
    """
    w = s.w
    if abs(w.mean) > 1e-12:
        raise ValueError(f"w must have zero mean, got {w.mean}")
    check_surface(p, w)
    lam, mu, gam, g, h = s.lam, s.mu, p.gamma, p.g, p.h
    band = cutoff if cutoff is not None else _max_freq(w)
    work = 4.0 * band * (1 + 1e-12) if band > 0 else None

    def mul(u, v):
        return trig.mul(u, v, work)

    Gw = dn_apply(h, w)
    wx = trig.derivative(w)
    P = dn_apply(h, 0.5 * mul(w, w)) - w - mul(w, Gw)
    D = mul(wx, wx) + mul(Gw, Gw) + 2.0 * Gw
    F = (2.0 * lam * gam) * P + (gam * gam) * mul(P, P) - (lam * lam) * D
    F = F - mu * (1.0 + D) + (2.0 * g) * (w + mul(w, D))
    return F


def linearized_multiplier(p: WaveParams, lam: float, k: float) -> float:
    """Diagonal action of dF/d(mu, w) at w = 0 on a cos/sin mode of frequency ``k``."""
    if k < 0:
        raise ValueError("frequency must be non-negative")
    return 2.0 * ((p.g - lam * p.gamma) - lam * lam * dn_multiplier(p.h, k))


def dispersion_residual(p: WaveParams, lam: float, k: float) -> float:
    if k <= 0:
        raise ValueError("frequency must be positive")
    return lam * lam * dn_multiplier(p.h, k) + lam * p.gamma - p.g


def bifurcation_lambdas(p: WaveParams, k: float) -> tuple[float, float]:
    """Roots (lam_plus, lam_minus) of lam^2 k coth(kh) + gamma lam - g = 0."""
    if not k > 0:
        raise ValueError(f"frequency must be positive, got {k}")
    t = 1.0 / dn_multiplier(p.h, k)          # tanh(kh)/k
    half_b = 0.5 * p.gamma * t
    disc = math.sqrt(half_b * half_b + p.g * t)
    if half_b == 0:
        return disc, -disc
    # the root without cancellation first, the other from the product g t
    if half_b > 0:
        lam_minus = -half_b - disc
        lam_plus = -p.g * t / lam_minus
    else:
        lam_plus = -half_b + disc
        lam_minus = -p.g * t / lam_plus
    return lam_plus, lam_minus


def transversality(p: WaveParams, lam_star: float, k0: float) -> float:
    """Mixed derivative d^2F/(dlam dw)(lam*, 0) applied to the kernel mode, as a scalar."""
    if lam_star == 0:
        raise ValueError("transversality is undefined at lam* = 0")
    return -2.0 * lam_star * (dn_multiplier(p.h, k0) + p.g / lam_star ** 2)


def mode_frequency(pair: AdmissiblePair, mode: ModeId) -> float:
    return math.fsum(c * g for c, g in zip(mode.vec, pair.basis.generators))


def resonance_scan(p: WaveParams, lam_star: float, pair: AdmissiblePair,
                   tol: float = 1e-8) -> list[ModeId]:
    """Retained modes whose linearized multiplier at ``lam_star`` is below ``tol``."""
    hits = []
    for m in enumerate_modes(pair)[1:]:
        if abs(linearized_multiplier(p, lam_star, mode_frequency(pair, m))) < tol:
            hits.append(m)
    return hits


def derived_constants(p: WaveParams, lam: float, mu: float) -> tuple[float, float]:
    """Mass flux m and Bernoulli constant Q."""
    m = p.h * (lam + 0.5 * p.gamma * p.h)
    Q = mu + lam * lam + 2.0 * p.g * p.h
    return m, Q


def flow_parameters(p: WaveParams, m: float, Q: float) -> tuple[float, float]:
    """Inverse of :func:`derived_constants`."""
    lam = m / p.h - 0.5 * p.gamma * p.h
    return lam, Q - 2.0 * p.g * p.h - lam * lam


def stagnation_indicator(p: WaveParams, lam: float) -> bool:
    return lam * (lam + p.gamma * p.h) <= 0


# -- finite-dimensional views -------------------------------------------------

@dataclass
class GalerkinJacobian:
    """Jacobian of the projected F with respect to (mu, w-coefficients)."""

    matrix: np.ndarray
    rows: list[ModeId]
    cols: list[str | ModeId] = field(default_factory=list)

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.matrix, compute_uv=False)


def _projected(F: TrigSum, rows: Sequence[ModeId]) -> np.ndarray:
    return trig.coefficients(F, rows)


def galerkin_jacobian(p: WaveParams, lam: float, pair: AdmissiblePair, mu: float = 0.0,
                      w: TrigSum | None = None, step: float = 1e-6,
                      scheme: str = "central") -> GalerkinJacobian:
    """Finite-difference Jacobian of F projected onto the pair's retained modes.

    Built from :func:`residual_F` column by column; ``scheme`` is
    ``"central"`` or ``"forward"``.
    """
    modes = enumerate_modes(pair)
    basis = pair.basis
    if w is None:
        w = TrigSum.zero(basis)
    cutoff = basis.cutoff

    def R(mu_, w_):
        return _projected(residual_F(p, TrialState(lam, mu_, w_), cutoff), modes)

    base = R(mu, w) if scheme == "forward" else None
    cols = []
    for j, c in enumerate(["mu"] + modes[1:]):
        if c == "mu":
            x0 = mu
            hj = step * max(1.0, abs(x0))

            def at(x):
                return R(x, w)
        else:
            x0 = w.coefficient(c)
            hj = step * max(1.0, abs(x0))

            def at(x, c=c, x0=x0):
                return R(mu, w + TrigSum.mode(basis, c, x - x0))
        if scheme == "central":
            cols.append((at(x0 + hj) - at(x0 - hj)) / (2 * hj))
        elif scheme == "forward":
            cols.append((at(x0 + hj) - base) / hj)
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
    return GalerkinJacobian(np.column_stack(cols), modes, ["mu"] + modes[1:])


def analytic_jacobian_at_zero(p: WaveParams, lam: float, pair: AdmissiblePair) -> np.ndarray:
    """Diagonal multipliers plus the -1 entry of the mu column on the Mean row."""
    modes = enumerate_modes(pair)
    J = np.zeros((len(modes), len(modes)))
    J[0, 0] = -1.0
    for i, m in enumerate(modes[1:], start=1):
        J[i, i] = linearized_multiplier(p, lam, mode_frequency(pair, m))
    return J


@dataclass(frozen=True)
class KernelCertificate:
    singular_values: tuple[float, ...]
    n_small: int
    gap: float
    kernel_mode: ModeId | None
    transversality: float | None
    zero_tol: float
    gap_min: float

    @property
    def ok(self) -> bool:
        return (self.n_small == 1 and self.gap >= self.gap_min
                and self.transversality is not None and self.transversality != 0)


def kernel_certificate(p: WaveParams, lam_star: float, pair: AdmissiblePair,
                       zero_tol: float = 1e-8, gap_min: float = 1e3,
                       step: float = 1e-6) -> KernelCertificate:
    """Numerical check that dF/d(mu, w) at (lam*, 0) has a one-dimensional kernel."""
    jac = galerkin_jacobian(p, lam_star, pair, step=step)
    _, sv, vt = np.linalg.svd(jac.matrix)
    order = np.argsort(sv)
    sv_sorted = sv[order]
    n_small = int(np.sum(sv_sorted < zero_tol))
    gap = float(sv_sorted[1] / max(sv_sorted[0], np.finfo(float).tiny)) if sv.size > 1 else math.inf
    kernel = None
    tv = None
    if n_small >= 1:
        vec = vt[order[0]]
        j = int(np.argmax(np.abs(vec)))
        col = jac.cols[j]
        if isinstance(col, ModeId):
            kernel = col
            tv = transversality(p, lam_star, mode_frequency(pair, col))
    return KernelCertificate(tuple(float(x) for x in sv_sorted), n_small, gap, kernel, tv,
                             zero_tol, gap_min)


def dispersion_table(p: WaveParams, pair: AdmissiblePair) -> list[dict]:
    """One row per retained positive frequency: both roots and their diagnostics."""
    rows = []
    seen = set()
    for m in enumerate_modes(pair)[1:]:
        k = mode_frequency(pair, m)
        if m.vec in seen:
            continue
        seen.add(m.vec)
        lp, lm = bifurcation_lambdas(p, k)
        rows.append({
            "k": k,
            "mode": str(m),
            "lambda_plus": lp,
            "lambda_minus": lm,
            "residual_plus": dispersion_residual(p, lp, k),
            "residual_minus": dispersion_residual(p, lm, k),
            "transversality_plus": transversality(p, lp, k),
            "transversality_minus": transversality(p, lm, k),
            "stagnation_plus": stagnation_indicator(p, lp),
            "stagnation_minus": stagnation_indicator(p, lm),
        })
    return rows

