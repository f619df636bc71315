"""Local bifurcation branches by amplitude-pinned Newton continuation.

The unknowns are (lam, mu, w) with the coefficient of ``w`` on the kernel
mode ``k0`` fixed to the amplitude ``s``; the equations are the Galerkin
projections of F onto Mean and every retained mode.  This square system is
solved by damped Newton with a forward-difference Jacobian for
s = ds, 2 ds, ..., s_max.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import trig
from .freqset import (AdmissiblePair, Kind, ModeId, enumerate_modes, even_periodic_pair,
                      interleaved_pair, mode_from_text, pair_from_dict, pair_to_dict,
                      two_generator_pair)
from .galerkin import GalerkinSystem
from .trig import TrigSum
from .waveop import (TrialState, WaveParams, bifurcation_lambdas,
                     dispersion_residual, min_surface, mode_frequency, resonance_scan,
                     stagnation_indicator, transversality)

log = logging.getLogger(__name__)

_REFRESH_RATE = 1e-2


class ResonanceError(RuntimeError):
    """The kernel at lam* is not spanned by k0 alone, or the Jacobian is singular."""

    def __init__(self, message: str, modes: Sequence[ModeId] = ()):
        super().__init__(message)
        self.modes = list(modes)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last_point: BranchPoint | None = None):
        super().__init__(message)
        self.last_point = last_point


@dataclass(frozen=True)
class BranchConfig:
    pair: AdmissiblePair
    k0: ModeId
    root_sign: int = 1
    s_max: float = 1e-2
    n_steps: int = 20
    newton_tol: float = 1e-11
    newton_max_iter: int = 25
    cutoff: float | None = None
    both_signs: bool = False
    resonance_tol: float = 1e-8

    def __post_init__(self):
        if self.root_sign not in (1, -1):
            raise ValueError("root_sign: must be +1 or -1")
        if not self.s_max >= 0:
            raise ValueError("s_max: must be non-negative")
        if self.n_steps < 1:
            raise ValueError("n_steps: must be at least 1")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol: must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter: must be at least 1")
        if self.k0 not in enumerate_modes(self.working_pair):
            raise ValueError(f"k0: {self.k0} is not a retained mode of the pair")

    @property
    def working_pair(self) -> AdmissiblePair:
        if self.cutoff is None:
            return self.pair
        return self.pair.with_truncation(cutoff=self.cutoff)

    def to_dict(self) -> dict:
        return {
            "pair": pair_to_dict(self.working_pair),
            "k0": f"{self.k0.kind.value}:{','.join(str(c) for c in self.k0.vec)}",
            "root_sign": self.root_sign,
            "s_max": self.s_max,
            "n_steps": self.n_steps,
            "newton_tol": self.newton_tol,
            "newton_max_iter": self.newton_max_iter,
            "both_signs": self.both_signs,
            "resonance_tol": self.resonance_tol,
        }

    @classmethod
    def from_dict(cls, data: dict) -> BranchConfig:
        pair = pair_from_dict(data["pair"])
        return cls(pair=pair, k0=mode_from_text(data["k0"], pair.basis.dim),
                   root_sign=int(data.get("root_sign", 1)), s_max=float(data.get("s_max", 1e-2)),
                   n_steps=int(data.get("n_steps", 20)),
                   newton_tol=float(data.get("newton_tol", 1e-11)),
                   newton_max_iter=int(data.get("newton_max_iter", 25)),
                   both_signs=bool(data.get("both_signs", False)),
                   resonance_tol=float(data.get("resonance_tol", 1e-8)))


@dataclass(frozen=True)
class BranchPoint:
    s: float
    lam: float
    mu: float
    w: TrigSum
    residual_norm: float
    newton_iters: int = 0
    truncation_mass: float = 0.0
    min_surface: float = math.nan

    @property
    def state(self) -> TrialState:
        return TrialState(self.lam, self.mu, self.w)

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "lambda": self.lam,
            "mu": self.mu,
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "truncation_mass": self.truncation_mass,
            "min_surface": self.min_surface,
            "w": trig.to_dict(self.w),
        }

    @classmethod
    def from_dict(cls, basis, data: dict) -> BranchPoint:
        return cls(s=float(data["s"]), lam=float(data["lambda"]), mu=float(data["mu"]),
                   w=trig.from_dict(basis, data["w"]),
                   residual_norm=float(data["residual_norm"]),
                   newton_iters=int(data.get("newton_iters", 0)),
                   truncation_mass=float(data.get("truncation_mass", 0.0)),
                   min_surface=float(data.get("min_surface", math.nan)))


# -- solver -------------------------------------------------------------------

class _Solver:
    """Galerkin system bound to one (params, config) pair."""

    def __init__(self, p: WaveParams, cfg: BranchConfig):
        self.p = p
        self.cfg = cfg
        self.pair = cfg.working_pair
        self.modes = enumerate_modes(self.pair)[1:]
        self.system = GalerkinSystem(p, self.pair.basis, self.modes)
        self.j0 = self.modes.index(cfg.k0)
        self.free = np.array([j for j in range(len(self.modes)) if j != self.j0], dtype=int)
        self._J = None

    def point(self, s, lam, mu, coeffs, iters) -> BranchPoint:
        r, tail = self.system.residual(lam, mu, coeffs)
        w = trig.from_coefficients(self.pair.basis, self.modes, coeffs)
        return BranchPoint(s=float(s), lam=float(lam), mu=float(mu), w=w,
                           residual_norm=GalerkinSystem.b2_norm(r), newton_iters=iters,
                           truncation_mass=tail, min_surface=min_surface(self.p, w))

    def correct(self, s: float, lam: float, mu: float, coeffs: np.ndarray) -> BranchPoint:
        """Damped Newton on the pinned system.

        The Jacobian is kept between iterations (and between continuation
        steps) while each step contracts the residual by at least
        ``_REFRESH_RATE``; otherwise it is rebuilt.
        """
        cfg = self.cfg
        coeffs = np.array(coeffs, dtype=float)
        coeffs[self.j0] = s
        r, _ = self.system.residual(lam, mu, coeffs)
        norm = GalerkinSystem.b2_norm(r)
        it = 0
        while norm > cfg.newton_tol:
            if it >= cfg.newton_max_iter:
                raise ConvergenceError(f"Newton did not converge at s={s:g}: |F|={norm:.3e} "
                                       f"after {it} iterations")
            fresh = self._J is None
            if fresh:
                self._J, _ = self.system.jacobian(lam, mu, coeffs, self.free)
            step = self._damped_step(lam, mu, coeffs, r, norm)
            if step is None and not fresh:
                self._J, _ = self.system.jacobian(lam, mu, coeffs, self.free)
                step = self._damped_step(lam, mu, coeffs, r, norm)
            if step is None:
                raise ConvergenceError(f"damped Newton stalled at s={s:g}: |F|={norm:.3e}")
            lam, mu, coeffs, r, norm_new = step
            if norm_new > _REFRESH_RATE * norm:
                self._J = None
            norm = norm_new
            it += 1
        return self.point(s, lam, mu, coeffs, it)

    def _damped_step(self, lam, mu, coeffs, r, norm):
        try:
            delta = np.linalg.solve(self._J, -r)
        except np.linalg.LinAlgError as exc:
            raise ResonanceError("singular Galerkin Jacobian") from exc
        if not np.all(np.isfinite(delta)):
            raise ResonanceError("singular Galerkin Jacobian")
        t = 1.0
        for _ in range(7):
            c_t = coeffs.copy()
            c_t[self.free] += t * delta[2:]
            lam_t, mu_t = lam + t * delta[0], mu + t * delta[1]
            r_t, _ = self.system.residual(lam_t, mu_t, c_t)
            norm_t = GalerkinSystem.b2_norm(r_t)
            if norm_t < norm:
                return lam_t, mu_t, c_t, r_t, norm_t
            t *= 0.5
        return None

    def coeffs_of(self, pt: BranchPoint) -> np.ndarray:
        return trig.coefficients(pt.w, self.modes)


def lambda_star(p: WaveParams, cfg: BranchConfig) -> float:
    lp, lm = bifurcation_lambdas(p, mode_frequency(cfg.pair, cfg.k0))
    return lp if cfg.root_sign > 0 else lm


def seed(p: WaveParams, cfg: BranchConfig) -> BranchPoint:
    """Laminar point (s=0, lam*, mu=0, w=0) after certifying a simple kernel."""
    lam = lambda_star(p, cfg)
    hits = resonance_scan(p, lam, cfg.working_pair, cfg.resonance_tol)
    if hits != [cfg.k0]:
        raise ResonanceError(f"kernel at lambda*={lam:.12g} is spanned by {[str(m) for m in hits]}, "
                             f"expected exactly {cfg.k0}", hits)
    w = TrigSum.zero(cfg.working_pair.basis)
    return BranchPoint(0.0, lam, 0.0, w, 0.0, 0, 0.0, p.h)


def newton_correct(p: WaveParams, cfg: BranchConfig, guess: TrialState, s: float,
                   _solver: _Solver | None = None) -> BranchPoint:
    solver = _solver or _Solver(p, cfg)
    return solver.correct(s, guess.lam, guess.mu, trig.coefficients(guess.w, solver.modes))


def _march(solver: _Solver, start: BranchPoint, direction: int) -> list[BranchPoint]:
    cfg = solver.cfg
    ds0 = cfg.s_max / cfg.n_steps
    ds_min = ds0 / 64
    targets = [direction * ds0 * i for i in range(1, cfg.n_steps + 1)]
    targets[-1] = direction * cfg.s_max
    pts = [start]
    z_hist = [(start.s, start.lam, start.mu, solver.coeffs_of(start))]
    for target in targets:
        while abs(pts[-1].s) < abs(target) * (1 - 1e-12):
            s_prev = pts[-1].s
            ds = target - s_prev
            while True:
                s_new = s_prev + ds
                if len(z_hist) >= 2:
                    (s0, l0, m0, c0), (s1, l1, m1, c1) = z_hist[-2], z_hist[-1]
                    f = (s_new - s1) / (s1 - s0)
                    lam_g, mu_g, c_g = l1 + f * (l1 - l0), m1 + f * (m1 - m0), c1 + f * (c1 - c0)
                else:
                    _, lam_g, mu_g, c_g = z_hist[-1]
                try:
                    pt = solver.correct(s_new, lam_g, mu_g, c_g)
                    break
                except ConvergenceError as exc:
                    if abs(ds) / 2 < ds_min:
                        raise ConvergenceError(str(exc), pts[-1]) from exc
                    ds /= 2
                    log.info("step rejected at s=%g, halving to ds=%g", s_new, ds)
            if pt.min_surface <= 0:
                raise ConvergenceError(f"surface touches the bed at s={pt.s:g}", pts[-1])
            pts.append(pt)
            z_hist.append((pt.s, pt.lam, pt.mu, solver.coeffs_of(pt)))
    return pts


def continue_branch(p: WaveParams, cfg: BranchConfig) -> list[BranchPoint]:
    """Seed plus the corrected points up to ``s_max`` (and down to ``-s_max`` if requested)."""
    start = seed(p, cfg)
    if cfg.s_max == 0:
        return [start]
    solver = _Solver(p, cfg)
    pts = _march(solver, start, +1)
    if cfg.both_signs:
        neg = _march(solver, start, -1)
        pts = list(reversed(neg[1:])) + pts
    return pts


def pinned_mode_function(cfg: BranchConfig) -> TrigSum:
    return TrigSum.mode(cfg.working_pair.basis, cfg.k0, 1.0)


def asymptotic_ratios(p: WaveParams, cfg: BranchConfig, s_values: Sequence[float],
                      branch: Sequence[BranchPoint] | None = None) -> list[dict]:
    """``||w(s) - s phi||_B2 / s^2`` at the requested amplitudes.

    Each amplitude is corrected from the nearest branch point (the branch is
    computed if not supplied).
    """
    if branch is None:
        branch = continue_branch(p, cfg)
    solver = _Solver(p, cfg)
    phi = pinned_mode_function(cfg)
    rows = []
    for s in s_values:
        near = min(branch, key=lambda q: abs(q.s - s))
        pt = near if near.s == s else solver.correct(s, near.lam, near.mu, solver.coeffs_of(near))
        dev = trig.norm_b2(trig.add(pt.w, trig.scale(-s, phi)))
        rows.append({"s": s, "ratio": dev / s ** 2, "lambda": pt.lam, "residual_norm": pt.residual_norm})
    return rows


# -- serialisation --------------------------------------------------------------

def branch_to_dict(p: WaveParams, cfg: BranchConfig, points: Sequence[BranchPoint]) -> dict:
    lam = lambda_star(p, cfg)
    return {
        "params": p.to_dict(),
        "config": cfg.to_dict(),
        "lambda_star": lam,
        "transversality": transversality(p, lam, mode_frequency(cfg.pair, cfg.k0)),
        "points": [q.to_dict() for q in points],
    }


def branch_from_dict(data: dict) -> tuple[WaveParams, BranchConfig, list[BranchPoint]]:
    p = WaveParams(**data["params"])
    cfg = BranchConfig.from_dict(data["config"])
    basis = cfg.working_pair.basis
    return p, cfg, [BranchPoint.from_dict(basis, q) for q in data["points"]]


def branch_csv_rows(p: WaveParams, points: Sequence[BranchPoint]) -> list[dict]:
    return [{
        "s": q.s, "lambda": q.lam, "mu": q.mu, "residual": q.residual_norm,
        "min_surface": q.min_surface, "stagnation_flag": int(stagnation_indicator(p, q.lam)),
    } for q in points]


# -- demonstrations -------------------------------------------------------------

def sin_mass(w: TrigSum) -> float:
    """B^2 norm of the sine part of ``w`` (zero for even profiles)."""
    return math.sqrt(math.fsum(0.5 * b * b for b in w.sin.values()))


def nonuniqueness_demo(p: WaveParams, s_max: float = 1e-2, n_steps: int = 10,
                       cutoff: float = 16.5) -> dict:
    """Two distinct branches through the same lambda*: an even cosine wave on
    the periodic pair and an odd-started wave on the interleaved pair."""
    cfg_a = BranchConfig(even_periodic_pair(cutoff), ModeId((1,), Kind.COS), -1, s_max, n_steps)
    cfg_b = BranchConfig(interleaved_pair(cutoff), ModeId((1,), Kind.SIN), -1, s_max, n_steps)
    a = continue_branch(p, cfg_a)
    b = continue_branch(p, cfg_b)
    rows = []
    for pa, pb in zip(a, b):
        rows.append({
            "s": pa.s,
            "lambda_cos": pa.lam,
            "lambda_sin": pb.lam,
            "b2_distance": trig.norm_b2(trig.add(pa.w, trig.scale(-1.0, pb.w))),
            "evenness_defect_cos": sin_mass(pa.w),
            "evenness_defect_sin": sin_mass(pb.w),
            "residual_cos": pa.residual_norm,
            "residual_sin": pb.residual_norm,
        })
    return {
        "params": p.to_dict(),
        "lambda_star_cos": lambda_star(p, cfg_a),
        "lambda_star_sin": lambda_star(p, cfg_b),
        "configs": {"cos": cfg_a.to_dict(), "sin": cfg_b.to_dict()},
        "rows": rows,
        "branches": {"cos": a, "sin": b},
    }


def integer_rank(vectors: Sequence[Sequence[int]]) -> int:
    """Rank over the rationals, by exact fraction elimination."""
    rows = [[Fraction(c) for c in v] for v in vectors if any(v)]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / rows[rank][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _sum_diff_closure(vecs: Sequence[tuple[int, ...]]) -> set[tuple[int, ...]]:
    out = set(vecs)
    for u in vecs:
        for v in vecs:
            out.add(tuple(a + b for a, b in zip(u, v)))
            out.add(tuple(a - b for a, b in zip(u, v)))
    if vecs:
        out.discard((0,) * len(vecs[0]))
    return out


def almost_periodic_demo(p: WaveParams, s_max: float = 1e-2, n_steps: int = 20,
                         coeff_bound: int = 18, cutoff: float | None = None,
                         root_sign: int = 1) -> dict:
    """Branch from cos(2 sqrt(5) x) over generators (1, sqrt 5) and certify
    non-periodicity by exact integer rank of lattice supports."""
    if cutoff is None:
        cutoff = coeff_bound * math.sqrt(5.0) + 0.1
    pair = two_generator_pair(1.0, math.sqrt(5.0), coeff_bound, cutoff)
    k0 = ModeId((0, 2), Kind.COS)
    cfg = BranchConfig(pair, k0, root_sign, s_max, n_steps)
    pts = continue_branch(p, cfg)
    w = pts[-1].w
    support = [m.vec for m in w.support()]
    closure = sorted(_sum_diff_closure(support))
    frequency_set = [m.vec for m in enumerate_modes(pair)[1:]]
    support_rank = integer_rank(support)
    closure_rank = integer_rank(closure)
    freq_rank = integer_rank(frequency_set)
    if support_rank >= 2:
        level = "support"
    elif closure_rank >= 2:
        level = "closure"
    elif freq_rank >= 2:
        level = "frequency-set"
    else:
        level = "none"
    k = mode_frequency(pair, k0)
    lam = lambda_star(p, cfg)
    return {
        "params": p.to_dict(),
        "config": cfg.to_dict(),
        "lambda_star": lam,
        "k0_frequency": k,
        "dispersion_residual": dispersion_residual(p, lam, k),
        "support": [list(v) for v in support],
        "support_rank": support_rank,
        "closure_rank": closure_rank,
        "frequency_set_rank": freq_rank,
        "certified_level": level,
        "second_harmonic": w.coefficient(ModeId((0, 4), Kind.COS)),
        "branch": pts,
    }

