"""Frequency lattices and admissible (cos, sin) frequency pairs.

Frequencies are stored exactly as integer vectors ``n`` over a list of real
generators ``g``; the real frequency is ``n . g``.  A pair of frequency
families (the cosine family and the sine family) is described by parity
classes of ``n`` modulo 2, which turns the sum/difference closure of the two
families into a finite group-law check.
"""

from __future__ import annotations

import ast
import enum
import itertools
import math
import operator
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

COLLISION_TOL = 1e-9
MAX_DIM = 4

Vec = tuple[int, ...]


class Kind(str, enum.Enum):
    MEAN = "mean"
    COS = "cos"
    SIN = "sin"
    EXCLUDED = "excluded"


@dataclass(frozen=True)
class GeneratorBasis:
    """Real generators (rad/m) plus the truncation of the integer lattice.

    ``coeff_bound`` limits every integer coordinate, ``cutoff`` limits the
    embedded real frequency.
    """

    generators: tuple[float, ...]
    coeff_bound: int = 8
    cutoff: float = 8.0

    def __post_init__(self):
        gens = tuple(float(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValueError("generators: at least one generator is required")
        if len(gens) > MAX_DIM:
            raise ValueError(f"generators: at most {MAX_DIM} generators are supported")
        if any(not math.isfinite(g) or g <= 0 for g in gens):
            raise ValueError("generators: every generator must be a positive finite real")
        if any(b <= a for a, b in zip(gens, gens[1:])):
            raise ValueError("generators: must be strictly increasing")
        if int(self.coeff_bound) != self.coeff_bound or self.coeff_bound < 0:
            raise ValueError("coeff_bound: must be a non-negative integer")
        object.__setattr__(self, "coeff_bound", int(self.coeff_bound))
        if not math.isfinite(self.cutoff) or self.cutoff < 0:
            raise ValueError("cutoff: must be a non-negative finite real")
        object.__setattr__(self, "cutoff", float(self.cutoff))

    @property
    def dim(self) -> int:
        return len(self.generators)

    def box(self) -> np.ndarray:
        """All integer vectors with coordinates in [-coeff_bound, coeff_bound]."""
        r = np.arange(-self.coeff_bound, self.coeff_bound + 1)
        grids = np.meshgrid(*([r] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def collisions(self, tol: float = COLLISION_TOL) -> list[tuple[Vec, Vec]]:
        """Distinct box vectors whose embeddings lie closer than ``tol``."""
        vecs = self.box()
        freqs = vecs @ np.asarray(self.generators)
        order = np.argsort(freqs, kind="stable")
        gaps = np.diff(freqs[order])
        hits = np.nonzero(gaps < tol)[0]
        return [
            (tuple(int(c) for c in vecs[order[i]]), tuple(int(c) for c in vecs[order[i + 1]]))
            for i in hits
        ]


def embed(basis: GeneratorBasis, v: Sequence[int]) -> float:
    """Real frequency of the lattice vector ``v``."""
    if len(v) != basis.dim:
        raise ValueError(f"vector {tuple(v)} has length {len(v)}, basis has dimension {basis.dim}")
    if any(abs(c) > basis.coeff_bound for c in v):
        raise ValueError(f"vector {tuple(v)} exceeds coeff_bound={basis.coeff_bound}")
    return math.fsum(c * g for c, g in zip(v, basis.generators))


def fold(v: Sequence[int], generators: Sequence[float]) -> tuple[Vec, int]:
    """Canonical representative of ``{v, -v}`` and the sign used.

    The canonical vector is the one with positive embedded frequency (the
    zero vector maps to itself).  Cosine coefficients are unchanged under
    folding; sine coefficients pick up the returned sign.
    """
    v = tuple(int(c) for c in v)
    f = math.fsum(c * g for c, g in zip(v, generators))
    if f < 0:
        return tuple(-c for c in v), -1
    if f == 0 and any(v):
        # Only reachable for rationally dependent generators; fall back to
        # the first-nonzero-positive rule so folding stays well defined.
        first = next(c for c in v if c)
        if first < 0:
            return tuple(-c for c in v), -1
    return v, 1


def parity(v: Sequence[int]) -> Vec:
    return tuple(int(c) % 2 for c in v)


def _xor(p: Vec, q: Vec) -> Vec:
    return tuple(a ^ b for a, b in zip(p, q))


@dataclass(frozen=True, order=True)
class ModeId:
    vec: Vec
    kind: Kind

    def __str__(self):
        if self.kind is Kind.MEAN:
            return "Mean"
        return f"{self.kind.value.capitalize()}{self.vec}"


def mean_mode(dim: int) -> ModeId:
    return ModeId((0,) * dim, Kind.MEAN)


def _parity_set(items: Iterable[Sequence[int]], dim: int, name: str) -> frozenset[Vec]:
    out = set()
    for p in items:
        p = tuple(int(c) for c in p)
        if len(p) != dim or any(c not in (0, 1) for c in p):
            raise ValueError(f"{name}: {p} is not a 0/1 vector of length {dim}")
        out.add(p)
    return frozenset(out)


@dataclass(frozen=True)
class AdmissiblePair:
    """Cosine and sine frequency families as parity classes over a basis."""

    basis: GeneratorBasis
    cos_parities: frozenset[Vec]
    sin_parities: frozenset[Vec] = field(default_factory=frozenset)

    def __post_init__(self):
        d = self.basis.dim
        object.__setattr__(self, "cos_parities", _parity_set(self.cos_parities, d, "cos_parities"))
        object.__setattr__(self, "sin_parities", _parity_set(self.sin_parities, d, "sin_parities"))

    def with_truncation(self, coeff_bound: int | None = None, cutoff: float | None = None) -> AdmissiblePair:
        kw = {}
        if coeff_bound is not None:
            kw["coeff_bound"] = coeff_bound
        if cutoff is not None:
            kw["cutoff"] = cutoff
        return replace(self, basis=replace(self.basis, **kw))


def classify(pair: AdmissiblePair, v: Sequence[int]) -> Kind:
    """Family of the canonical vector ``v``: Cos, Sin, Mean or Excluded."""
    v = tuple(v)
    if not any(v):
        return Kind.MEAN
    if math.fsum(c * g for c, g in zip(v, pair.basis.generators)) <= 0:
        return Kind.EXCLUDED
    p = parity(v)
    if p in pair.cos_parities:
        return Kind.COS
    if p in pair.sin_parities:
        return Kind.SIN
    return Kind.EXCLUDED


@dataclass(frozen=True)
class Violation:
    law: str
    witness: tuple

    def __str__(self):
        return f"{self.law}: witness {self.witness}"


@dataclass(frozen=True)
class AdmissibilityReport:
    violations: tuple[Violation, ...]
    n_cos: int
    n_sin: int
    distinct_cos_witness: ModeId | None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "n_cos": self.n_cos,
            "n_sin": self.n_sin,
            "distinct_cos_witness": None if self.distinct_cos_witness is None
            else list(self.distinct_cos_witness.vec),
            "violations": [{"law": v.law, "witness": _jsonable(v.witness)} for v in self.violations],
        }


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(y) for y in x]
    return x


def check_admissible(pair: AdmissiblePair, tol: float = COLLISION_TOL) -> AdmissibilityReport:
    """Exhaustively check the group laws, condition (i) and injectivity."""
    d = pair.basis.dim
    cos, sin = pair.cos_parities, pair.sin_parities
    zero = (0,) * d
    bad: list[Violation] = []

    if zero not in cos:
        bad.append(Violation("cos_parities must contain the zero vector", (zero,)))
    for p, q in itertools.product(sorted(cos), repeat=2):
        if _xor(p, q) not in cos:
            bad.append(Violation("cos (+) cos must lie in cos_parities", (p, q, _xor(p, q))))
    for p, q in itertools.product(sorted(sin), repeat=2):
        if _xor(p, q) not in cos:
            bad.append(Violation("sin (+) sin must lie in cos_parities", (p, q, _xor(p, q))))
    for p, q in itertools.product(sorted(cos), sorted(sin)):
        if _xor(p, q) not in sin:
            bad.append(Violation("cos (+) sin must lie in sin_parities", (p, q, _xor(p, q))))
    if sin:
        rep = min(sin)
        coset = {_xor(rep, c) for c in cos}
        if coset != set(sin):
            bad.append(Violation("sin_parities must be a single coset of cos_parities",
                                 (rep, tuple(sorted(coset)), tuple(sorted(sin)))))
    for p in sorted(cos & sin):
        bad.append(Violation("cos_parities and sin_parities must be disjoint", (p,)))

    for a, b in pair.basis.collisions(tol):
        bad.append(Violation("embedding collision within coeff_bound", (a, b)))

    modes = _enumerate(pair)
    cos_modes = [m for m in modes if m.kind is Kind.COS]
    sin_freqs = np.array([embed(pair.basis, m.vec) for m in modes if m.kind is Kind.SIN])
    witness = None
    for m in cos_modes:
        f = embed(pair.basis, m.vec)
        if sin_freqs.size == 0 or np.min(np.abs(sin_freqs - f)) >= tol:
            witness = m
            break
    if witness is None:
        bad.append(Violation("no cosine frequency distinct from every sine frequency within cutoff",
                             (pair.basis.cutoff,)))
    return AdmissibilityReport(tuple(bad), len(cos_modes), int(sin_freqs.size), witness)


def _enumerate(pair: AdmissiblePair) -> list[ModeId]:
    basis = pair.basis
    vecs = basis.box()
    freqs = vecs @ np.asarray(basis.generators)
    keep = (freqs > 0) & (freqs <= basis.cutoff)
    rows = []
    for v, f in zip(vecs[keep], freqs[keep]):
        v = tuple(int(c) for c in v)
        kind = classify(pair, v)
        if kind in (Kind.COS, Kind.SIN):
            rows.append((float(f), v, kind))
    rows.sort(key=operator.itemgetter(0, 1))
    return [mean_mode(basis.dim)] + [ModeId(v, k) for _, v, k in rows]


def enumerate_modes(pair: AdmissiblePair, tol: float = COLLISION_TOL) -> list[ModeId]:
    """Mean mode followed by every retained Cos/Sin mode, by increasing frequency."""
    hits = pair.basis.collisions(tol)
    if hits:
        raise ValueError(f"embedding collision within coeff_bound: {hits[0]}")
    return _enumerate(pair)


# -- presets -----------------------------------------------------------------

def even_periodic_pair(cutoff: float = 20.5, generator: float = 1.0,
                       coeff_bound: int | None = None) -> AdmissiblePair:
    """Cosines on every multiple of ``generator``, no sines."""
    if coeff_bound is None:
        coeff_bound = int(math.floor(cutoff / generator))
    return AdmissiblePair(GeneratorBasis((generator,), coeff_bound, cutoff),
                          frozenset({(0,), (1,)}), frozenset())


def interleaved_pair(cutoff: float = 20.5, generator: float = 1.0,
                     coeff_bound: int | None = None) -> AdmissiblePair:
    """Cosines on even multiples of ``generator``, sines on odd multiples."""
    if coeff_bound is None:
        coeff_bound = int(math.floor(cutoff / generator))
    return AdmissiblePair(GeneratorBasis((generator,), coeff_bound, cutoff),
                          frozenset({(0,)}), frozenset({(1,)}))


def two_generator_pair(a: float = 1.0, b: float = math.sqrt(5.0), coeff_bound: int = 4,
                       cutoff: float = 10.0) -> AdmissiblePair:
    """Cosines on ``2nA + 2lB``, sines on ``(2n+1)A + (2l+1)B``."""
    return AdmissiblePair(GeneratorBasis((a, b), coeff_bound, cutoff),
                          frozenset({(0, 0)}), frozenset({(1, 1)}))


# -- definition files --------------------------------------------------------

_FUNCS = {"sqrt": math.sqrt}
_CONSTS = {"pi": math.pi}
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def parse_real(text) -> float:
    """Parse a number or a small arithmetic expression such as ``2*sqrt(5)``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            x = ev(node.operand)
            return -x if isinstance(node.op, ast.USub) else x
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression: {text!r}")

    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse real number {text!r}") from exc
    return ev(tree)


def pair_from_dict(data: dict) -> AdmissiblePair:
    missing = [k for k in ("generators", "cos_parities") if k not in data]
    if missing:
        raise ValueError(f"pair definition is missing field(s): {', '.join(missing)}")
    gens = [parse_real(g) for g in data["generators"]]
    basis = GeneratorBasis(tuple(gens), data.get("coeff_bound", 8), parse_real(data.get("cutoff", 8.0)))
    return AdmissiblePair(basis, frozenset(tuple(p) for p in data["cos_parities"]),
                          frozenset(tuple(p) for p in data.get("sin_parities", [])))


def pair_to_dict(pair: AdmissiblePair) -> dict:
    return {
        "generators": list(pair.basis.generators),
        "coeff_bound": pair.basis.coeff_bound,
        "cutoff": pair.basis.cutoff,
        "cos_parities": [list(p) for p in sorted(pair.cos_parities)],
        "sin_parities": [list(p) for p in sorted(pair.sin_parities)],
    }


def mode_from_text(text: str, dim: int) -> ModeId:
    """Parse ``cos:1`` / ``sin:1,1`` / ``cos:0,2`` into a ModeId."""
    try:
        kind, coords = str(text).split(":", 1)
        kind = Kind(kind.strip().lower())
        vec = tuple(int(c) for c in coords.split(","))
    except ValueError as exc:
        raise ValueError(f"cannot parse mode {text!r}; expected e.g. 'cos:1' or 'sin:1,1'") from exc
    if kind not in (Kind.COS, Kind.SIN) or len(vec) != dim:
        raise ValueError(f"mode {text!r} must be cos/sin with {dim} coordinate(s)")
    return ModeId(vec, kind)
