"""Batched evaluation of the projected wave functional on a torus grid.

A sum over lattice frequencies ``n . g`` is the restriction to the line
``theta = g x`` of a trigonometric polynomial on the d-torus, so products
can be formed pointwise on a torus grid.  The grid is sized so that every
product in F (degree four in ``w``) is alias free, which makes the result
equal to the exact product-to-sum expansion up to rounding.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .dno import dn_multiplier
from .freqset import GeneratorBasis, Kind, ModeId
from .waveop import WaveParams

_CHUNK_POINTS = 1 << 21


class GalerkinSystem:
    """F(lam, (mu, w)) projected onto Mean and a fixed list of modes.

    ``w`` is given by its coefficients on ``modes`` (Mean excluded).  The
    projected residual is returned as ``[mean, c_1, ..., c_N]`` with ``c_j``
    the cos or sin coefficient of mode j.
    """

    def __init__(self, params: WaveParams, basis: GeneratorBasis, modes: Sequence[ModeId]):
        self.params = params
        self.basis = basis
        self.modes = [m for m in modes if m.kind is not Kind.MEAN]
        if not self.modes:
            raise ValueError("GalerkinSystem needs at least one oscillatory mode")
        d = basis.dim
        vecs = np.array([m.vec for m in self.modes], dtype=np.int64).reshape(-1, d)
        bound = np.maximum(np.abs(vecs).max(axis=0), 1)
        self.shape = tuple(int(sfft.next_fast_len(int(8 * b + 1))) for b in bound)
        self.size = int(np.prod(self.shape))
        self.axes = tuple(range(1, d + 1))

        self._pos = tuple((vecs[:, i] % self.shape[i]) for i in range(d))
        self._neg = tuple((-vecs[:, i] % self.shape[i]) for i in range(d))
        self.is_sin = np.array([m.kind is Kind.SIN for m in self.modes])

        ints = np.meshgrid(*[np.rint(sfft.fftfreq(M) * M) for M in self.shape], indexing="ij")
        omega = sum(n * g for n, g in zip(ints, basis.generators))
        self._ik = 1j * omega
        self._G = dn_multiplier(params.h, np.abs(omega))
        self._retained = np.zeros(self.shape, dtype=bool)
        self._retained[self._pos] = True
        self._retained[self._neg] = True
        self._retained[(0,) * d] = True

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def _spectrum(self, coeffs: np.ndarray) -> np.ndarray:
        B = coeffs.shape[0]
        half = np.where(self.is_sin, -0.5j, 0.5) * coeffs
        conj = np.where(self.is_sin, 0.5j, 0.5) * coeffs
        c = np.zeros((B,) + self.shape, dtype=complex)
        idx_b = np.arange(B)[:, None]
        c[(idx_b,) + tuple(ix[None, :] for ix in self._pos)] = half
        c[(idx_b,) + tuple(ix[None, :] for ix in self._neg)] += conj
        return c

    def _grid(self, c: np.ndarray) -> np.ndarray:
        return sfft.ifftn(c, axes=self.axes).real * self.size

    def _spec(self, f: np.ndarray) -> np.ndarray:
        return sfft.fftn(f, axes=self.axes) / self.size

    def _evaluate(self, lam, mu, coeffs):
        p = self.params
        gam, g = p.gamma, p.g
        c = self._spectrum(coeffs)
        w = self._grid(c)
        wx = self._grid(self._ik * c)
        Gw = self._grid(self._G * c)
        Gw2h = self._grid(self._G * self._spec(0.5 * w * w))
        P = Gw2h - w - w * Gw
        D = wx * wx + Gw * Gw + 2.0 * Gw
        sh = (-1,) + (1,) * len(self.shape)
        lam = lam.reshape(sh)
        mu = mu.reshape(sh)
        F = 2.0 * lam * gam * P + gam * gam * P * P - lam * lam * D - (mu - 2.0 * g * w) * (1.0 + D)
        return self._spec(F)

    def _project(self, cF: np.ndarray) -> np.ndarray:
        B = cF.shape[0]
        idx_b = np.arange(B)[:, None]
        cn = cF[(idx_b,) + tuple(ix[None, :] for ix in self._pos)]
        vals = np.where(self.is_sin, -2.0 * cn.imag, 2.0 * cn.real)
        return np.concatenate([cF[(slice(None),) + (0,) * len(self.shape)].real[:, None], vals], axis=1)

    def residual_batch(self, lam, mu, coeffs) -> tuple[np.ndarray, np.ndarray]:
        """Projected residuals ``[B, N+1]`` and out-of-band B^2 norms ``[B]``."""
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        B = coeffs.shape[0]
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (B,))
        mu = np.broadcast_to(np.asarray(mu, dtype=float), (B,))
        chunk = max(1, _CHUNK_POINTS // self.size)
        res, tails = [], []
        for a in range(0, B, chunk):
            b = min(B, a + chunk)
            cF = self._evaluate(lam[a:b], mu[a:b], coeffs[a:b])
            res.append(self._project(cF))
            out = np.where(self._retained, 0.0, np.abs(cF) ** 2)
            tails.append(np.sqrt(out.reshape(b - a, -1).sum(axis=1)))
        return np.concatenate(res), np.concatenate(tails)

    def residual(self, lam: float, mu: float, coeffs) -> tuple[np.ndarray, float]:
        r, t = self.residual_batch(lam, mu, np.asarray(coeffs, dtype=float)[None, :])
        return r[0], float(t[0])

    @staticmethod
    def b2_norm(r: np.ndarray) -> float:
        """B^2 norm of a projected residual ``[mean, c_1, ...]``."""
        return math.sqrt(r[0] ** 2 + 0.5 * float(np.dot(r[1:], r[1:])))

    def jacobian(self, lam: float, mu: float, coeffs, free: np.ndarray,
                 rel_step: float = 1e-7) -> tuple[np.ndarray, np.ndarray]:
        """Forward-difference Jacobian in (lam, mu, coeffs[free]) and the base residual."""
        coeffs = np.asarray(coeffs, dtype=float)
        z0 = np.concatenate([[lam, mu], coeffs[free]])
        steps = np.maximum(rel_step, rel_step * np.abs(z0))
        n = z0.size
        lam_b = np.full(n + 1, lam)
        mu_b = np.full(n + 1, mu)
        c_b = np.repeat(coeffs[None, :], n + 1, axis=0)
        lam_b[1] += steps[0]
        mu_b[2] += steps[1]
        rows = np.arange(3, n + 1)
        c_b[rows, free] += steps[2:]
        r, _ = self.residual_batch(lam_b, mu_b, c_b)
        base = r[0]
        J = (r[1:] - base[None, :]).T / steps[None, :]
        return J, base
