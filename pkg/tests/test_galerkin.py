import math

import numpy as np
import pytest

from apwave import trig
from apwave.freqset import enumerate_modes, even_periodic_pair, interleaved_pair, two_generator_pair
from apwave.galerkin import GalerkinSystem
from apwave.trig import TrigSum
from apwave.waveop import TrialState, WaveParams, galerkin_jacobian, residual_F

P = WaveParams(1.0, 9.8, 1.0)


def _random_state(pair, seed, scale=0.02):
    rng = np.random.default_rng(seed)
    modes = enumerate_modes(pair)[1:]
    vals = scale * rng.normal(size=len(modes)) / (1 + np.arange(len(modes)))
    return modes, vals


@pytest.mark.parametrize("pair", [even_periodic_pair(8.5), interleaved_pair(9.5),
                                  two_generator_pair(1.0, math.sqrt(5.0), 3, 8.0)],
                         ids=["periodic", "interleaved", "two-generator"])
def test_torus_evaluation_matches_exact_residual(pair):
    modes, vals = _random_state(pair, 1)
    lam, mu = -2.3, 0.04
    sysm = GalerkinSystem(P, pair.basis, modes)
    r, tail = sysm.residual(lam, mu, vals)
    w = trig.from_coefficients(pair.basis, modes, vals)
    F = residual_F(P, TrialState(lam, mu, w))
    rows = enumerate_modes(pair)
    ref = trig.coefficients(F, rows)
    assert np.max(np.abs(r - ref)) <= 1e-13
    _, lost = trig.galerkin_project(F, rows)
    assert tail == pytest.approx(lost, rel=1e-9, abs=1e-15)
    assert sysm.b2_norm(r) == pytest.approx(trig.norm_b2(trig.galerkin_project(F, rows)[0]), rel=1e-12)


def test_batch_matches_single():
    pair = even_periodic_pair(6.5)
    modes, vals = _random_state(pair, 2)
    sysm = GalerkinSystem(P, pair.basis, modes)
    batch = np.stack([vals, 2 * vals, -vals])
    R, T = sysm.residual_batch([1.0, 1.5, 2.0], [0.0, 0.1, -0.1], batch)
    for i, (lam, mu) in enumerate([(1.0, 0.0), (1.5, 0.1), (2.0, -0.1)]):
        r, t = sysm.residual(lam, mu, batch[i])
        assert np.array_equal(R[i], r) and T[i] == t


def test_jacobian_matches_exact_route():
    pair = even_periodic_pair(6.5)
    modes, vals = _random_state(pair, 3)
    lam, mu = 2.1, 0.01
    sysm = GalerkinSystem(P, pair.basis, modes)
    free = np.arange(len(modes))
    J, base = sysm.jacobian(lam, mu, vals, free)
    w = trig.from_coefficients(pair.basis, modes, vals)
    ref = galerkin_jacobian(P, lam, pair, mu=mu, w=w).matrix
    # columns: lam, mu, coefficients; the exact route has mu then coefficients
    assert np.max(np.abs(J[:, 1:] - ref)) <= 1e-5 * np.max(np.abs(ref))
    d = 1e-6
    dl = (sysm.residual(lam + d, mu, vals)[0] - sysm.residual(lam - d, mu, vals)[0]) / (2 * d)
    assert np.max(np.abs(J[:, 0] - dl)) <= 1e-5 * max(1.0, np.max(np.abs(dl)))


def test_requires_modes():
    pair = even_periodic_pair(3.5)
    with pytest.raises(ValueError):
        GalerkinSystem(P, pair.basis, enumerate_modes(pair)[:1])
