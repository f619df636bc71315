"""Finite trigonometric sums over an integer frequency lattice.

A :class:`TrigSum` is ``mean + sum a_n cos((n.g) x) + sum b_n sin((n.g) x)``
with every key ``n`` a canonical lattice vector (positive embedded
frequency).  Products are expanded exactly with the product-to-sum rules;
nothing is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .freqset import AdmissiblePair, GeneratorBasis, Kind, ModeId, Vec, classify, fold

DROP_TOL = 1e-14


def _freq(generators: Sequence[float], v: Sequence[int]) -> float:
    return math.fsum(c * g for c, g in zip(v, generators))


@dataclass(frozen=True, eq=False)
class TrigSum:
    """Canonical finite trigonometric sum.

    Construct through :meth:`from_terms` (or the helpers below) so that keys
    are folded, merged and sparsified.  ``truncation`` is the accumulated
    B^2 mass discarded by products computed with a cutoff.
    """

    basis: GeneratorBasis
    mean: float = 0.0
    cos: Mapping[Vec, float] = field(default_factory=dict)
    sin: Mapping[Vec, float] = field(default_factory=dict)
    truncation: float = 0.0

    @classmethod
    def from_terms(cls, basis: GeneratorBasis, mean: float = 0.0,
                   cos: Iterable[tuple[Sequence[int], float]] = (),
                   sin: Iterable[tuple[Sequence[int], float]] = (),
                   truncation: float = 0.0) -> TrigSum:
        gens = basis.generators
        m = float(mean)
        c: dict[Vec, float] = {}
        s: dict[Vec, float] = {}
        if isinstance(cos, Mapping):
            cos = cos.items()
        if isinstance(sin, Mapping):
            sin = sin.items()
        for v, a in cos:
            key, _ = fold(v, gens)
            if not any(key):
                m += a
            else:
                c[key] = c.get(key, 0.0) + a
        for v, b in sin:
            key, sign = fold(v, gens)
            if any(key):
                s[key] = s.get(key, 0.0) + sign * b
        return cls._canonical(basis, m, c, s, truncation)

    @classmethod
    def _canonical(cls, basis, mean, c, s, truncation=0.0) -> TrigSum:
        gens = basis.generators
        c = {k: float(v) for k, v in sorted(c.items(), key=lambda kv: (_freq(gens, kv[0]), kv[0]))
             if abs(v) >= DROP_TOL}
        s = {k: float(v) for k, v in sorted(s.items(), key=lambda kv: (_freq(gens, kv[0]), kv[0]))
             if abs(v) >= DROP_TOL}
        mean = float(mean) if abs(mean) >= DROP_TOL else 0.0
        return cls(basis, mean, c, s, float(truncation))

    @classmethod
    def zero(cls, basis: GeneratorBasis) -> TrigSum:
        return cls(basis)

    @classmethod
    def constant(cls, basis: GeneratorBasis, value: float) -> TrigSum:
        return cls._canonical(basis, value, {}, {})

    @classmethod
    def mode(cls, basis: GeneratorBasis, mode: ModeId, value: float = 1.0) -> TrigSum:
        if mode.kind is Kind.MEAN:
            return cls.constant(basis, value)
        if mode.kind is Kind.COS:
            return cls.from_terms(basis, cos=[(mode.vec, value)])
        if mode.kind is Kind.SIN:
            return cls.from_terms(basis, sin=[(mode.vec, value)])
        raise ValueError(f"cannot build a term for mode kind {mode.kind}")

    # -- inspection --------------------------------------------------------

    @property
    def generators(self) -> tuple[float, ...]:
        return self.basis.generators

    def freq(self, v: Sequence[int]) -> float:
        return _freq(self.generators, v)

    def coefficient(self, mode: ModeId) -> float:
        if mode.kind is Kind.MEAN:
            return self.mean
        table = self.cos if mode.kind is Kind.COS else self.sin
        return table.get(tuple(mode.vec), 0.0)

    def support(self) -> list[ModeId]:
        out = [ModeId(k, Kind.COS) for k in self.cos] + [ModeId(k, Kind.SIN) for k in self.sin]
        out.sort(key=lambda m: (self.freq(m.vec), m.vec, m.kind.value))
        return out

    def is_zero(self) -> bool:
        return self.mean == 0.0 and not self.cos and not self.sin

    def __repr__(self):
        terms = [f"{self.mean:.6g}"] if self.mean else []
        for m in self.support():
            terms.append(f"{self.coefficient(m):+.6g}*{m}")
        return f"TrigSum({' '.join(terms) or '0'})"

    def __eq__(self, other):
        if not isinstance(other, TrigSum):
            return NotImplemented
        return (self.generators == other.generators and self.mean == other.mean
                and dict(self.cos) == dict(other.cos) and dict(self.sin) == dict(other.sin))

    __hash__ = None

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = TrigSum.constant(self.basis, other)
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return scale(-1.0, self)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = TrigSum.constant(self.basis, other)
        return add(self, scale(-1.0, other))

    def __rsub__(self, other):
        return scale(-1.0, self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(other, self)
        return mul(self, other)

    __rmul__ = __mul__


def _check_basis(u: TrigSum, v: TrigSum):
    if u.generators != v.generators:
        raise ValueError(f"basis mismatch: {u.generators} vs {v.generators}")


def add(u: TrigSum, v: TrigSum) -> TrigSum:
    _check_basis(u, v)
    c = dict(u.cos)
    for k, a in v.cos.items():
        c[k] = c.get(k, 0.0) + a
    s = dict(u.sin)
    for k, b in v.sin.items():
        s[k] = s.get(k, 0.0) + b
    return TrigSum._canonical(u.basis, u.mean + v.mean, c, s, u.truncation + v.truncation)


def scale(c: float, u: TrigSum) -> TrigSum:
    c = float(c)
    return TrigSum._canonical(u.basis, c * u.mean, {k: c * a for k, a in u.cos.items()},
                              {k: c * b for k, b in u.sin.items()}, abs(c) * u.truncation)


def _exponential_form(u: TrigSum) -> tuple[np.ndarray, np.ndarray]:
    """Lattice vectors (both signs) and complex exponential coefficients."""
    d = u.basis.dim
    vecs = [(0,) * d]
    coefs = [complex(u.mean)]
    for k, a in u.cos.items():
        vecs += [k, tuple(-c for c in k)]
        coefs += [a / 2, a / 2]
    for k, b in u.sin.items():
        vecs += [k, tuple(-c for c in k)]
        coefs += [-0.5j * b, 0.5j * b]
    return np.array(vecs, dtype=np.int64).reshape(-1, d), np.array(coefs, dtype=complex)


def mul(u: TrigSum, v: TrigSum, cutoff: float | None = None) -> TrigSum:
    """Exact product.  Modes above ``cutoff`` are discarded and receipted."""
    _check_basis(u, v)
    gens = np.asarray(u.generators)
    va, ca = _exponential_form(u)
    vb, cb = _exponential_form(v)
    vecs = (va[:, None, :] + vb[None, :, :]).reshape(-1, va.shape[1])
    coefs = (ca[:, None] * cb[None, :]).ravel()
    span = int(np.abs(vecs).max(initial=0))
    radix = 2 * span + 1
    keys = ((vecs + span) * radix ** np.arange(vecs.shape[1])).sum(axis=1)
    uniq, inverse = np.unique(keys, return_inverse=True)
    re = np.bincount(inverse, weights=coefs.real, minlength=uniq.size)
    im = np.bincount(inverse, weights=coefs.imag, minlength=uniq.size)
    first = np.zeros(uniq.size, dtype=np.int64)
    first[inverse[::-1]] = np.arange(inverse.size)[::-1]
    out_vecs = vecs[first]
    freqs = out_vecs @ gens

    mean = 0.0
    c: dict[Vec, float] = {}
    s: dict[Vec, float] = {}
    dropped = 0.0
    for vec, f, a2, b2 in zip(out_vecs, freqs, re, im):
        if not vec.any():
            mean = a2
            continue
        if f < 0:
            continue
        key = tuple(int(x) for x in vec)
        a, b = 2.0 * a2, -2.0 * b2
        if cutoff is not None and f > cutoff:
            dropped += 0.5 * (a * a + b * b)
            continue
        c[key] = a
        s[key] = b
    receipt = u.truncation + v.truncation + math.sqrt(dropped)
    return TrigSum._canonical(u.basis, mean, c, s, receipt)


def derivative(u: TrigSum) -> TrigSum:
    c = {k: u.freq(k) * b for k, b in u.sin.items()}
    s = {k: -u.freq(k) * a for k, a in u.cos.items()}
    return TrigSum._canonical(u.basis, 0.0, c, s, u.truncation)


def mean(u: TrigSum) -> float:
    return u.mean


def inner(u: TrigSum, v: TrigSum) -> float:
    """B^2 inner product, normalised so that <1, 1> = 1 and <cos, cos> = 1/2."""
    _check_basis(u, v)
    acc = [u.mean * v.mean]
    acc += [0.5 * a * v.cos[k] for k, a in u.cos.items() if k in v.cos]
    acc += [0.5 * b * v.sin[k] for k, b in u.sin.items() if k in v.sin]
    return math.fsum(acc)


def norm_b2(u: TrigSum) -> float:
    return math.sqrt(max(inner(u, u), 0.0))


def eval_grid(u: TrigSum, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    out = np.full(xs.shape, u.mean)
    for m in u.support():
        w = u.freq(m.vec)
        if m.kind is Kind.COS:
            out = out + u.cos[m.vec] * np.cos(w * xs)
        else:
            out = out + u.sin[m.vec] * np.sin(w * xs)
    return out


def eval(u: TrigSum, x: float) -> float:  # noqa: A001 - mirrors the mathematical name
    return float(eval_grid(u, np.array([x]))[0])


def project_E0(u: TrigSum, pair: AdmissiblePair) -> tuple[TrigSum, float]:
    """Drop the mean and every term outside the pair's families; return the dropped B^2 norm."""
    lost = [u.mean ** 2]
    c, s = {}, {}
    for k, a in u.cos.items():
        if classify(pair, k) is Kind.COS:
            c[k] = a
        else:
            lost.append(0.5 * a * a)
    for k, b in u.sin.items():
        if classify(pair, k) is Kind.SIN:
            s[k] = b
        else:
            lost.append(0.5 * b * b)
    return TrigSum._canonical(u.basis, 0.0, c, s, u.truncation), math.sqrt(math.fsum(lost))


def galerkin_project(u: TrigSum, modes: Sequence[ModeId]) -> tuple[TrigSum, float]:
    """Keep exactly the listed modes (Mean included if listed); return the dropped B^2 norm."""
    keep = set(modes)
    d = u.basis.dim
    lost = []
    keep_mean = ModeId((0,) * d, Kind.MEAN) in keep
    m = u.mean if keep_mean else 0.0
    if not keep_mean:
        lost.append(u.mean ** 2)
    c, s = {}, {}
    for k, a in u.cos.items():
        if ModeId(k, Kind.COS) in keep:
            c[k] = a
        else:
            lost.append(0.5 * a * a)
    for k, b in u.sin.items():
        if ModeId(k, Kind.SIN) in keep:
            s[k] = b
        else:
            lost.append(0.5 * b * b)
    return TrigSum._canonical(u.basis, m, c, s, u.truncation), math.sqrt(math.fsum(lost))


def coefficients(u: TrigSum, modes: Sequence[ModeId]) -> np.ndarray:
    return np.array([u.coefficient(m) for m in modes], dtype=float)


def from_coefficients(basis: GeneratorBasis, modes: Sequence[ModeId], values) -> TrigSum:
    mean = 0.0
    c, s = {}, {}
    for m, x in zip(modes, values):
        if m.kind is Kind.MEAN:
            mean += float(x)
        elif m.kind is Kind.COS:
            c[m.vec] = c.get(m.vec, 0.0) + float(x)
        elif m.kind is Kind.SIN:
            s[m.vec] = s.get(m.vec, 0.0) + float(x)
    return TrigSum._canonical(basis, mean, c, s)


def to_dict(u: TrigSum) -> dict:
    terms = []
    for m in u.support():
        terms.append({"coeffs": list(m.vec), "kind": m.kind.value, "value": u.coefficient(m)})
    return {"mean": u.mean, "terms": terms}


def from_dict(basis: GeneratorBasis, data: Mapping) -> TrigSum:
    c, s = [], []
    for t in data.get("terms", []):
        kind = Kind(t["kind"])
        (c if kind is Kind.COS else s).append((tuple(t["coeffs"]), float(t["value"])))
    return TrigSum.from_terms(basis, float(data.get("mean", 0.0)), c, s)


def max_abs_diff(u: TrigSum, v: TrigSum) -> float:
    """Largest coefficient difference (sup over the union of supports)."""
    _check_basis(u, v)
    vals = [abs(u.mean - v.mean)]
    vals += [abs(u.cos.get(k, 0.0) - v.cos.get(k, 0.0)) for k in set(u.cos) | set(v.cos)]
    vals += [abs(u.sin.get(k, 0.0) - v.sin.get(k, 0.0)) for k in set(u.sin) | set(v.sin)]
    return max(vals)
