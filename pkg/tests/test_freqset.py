import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apwave.freqset import (AdmissiblePair, GeneratorBasis, Kind, ModeId, check_admissible,
                            classify, embed, enumerate_modes, even_periodic_pair, fold,
                            interleaved_pair, mode_from_text, pair_from_dict, pair_to_dict,
                            parse_real, two_generator_pair)

from oracles import brute_force_modes, parity_group_ok

SQ5 = math.sqrt(5.0)


def test_embed_examples():
    b = GeneratorBasis((1.0, SQ5), 4, 10)
    assert embed(b, (2, 0)) == 2.0
    assert embed(b, (0, 2)) == pytest.approx(2 * SQ5, abs=1e-15)
    assert embed(GeneratorBasis((1.0,)), (0,)) == 0.0


def test_embed_rejects_out_of_bound():
    b = GeneratorBasis((1.0, SQ5), 2, 10)
    with pytest.raises(ValueError, match="coeff_bound"):
        embed(b, (3, 0))


def test_basis_validation():
    with pytest.raises(ValueError, match="generators"):
        GeneratorBasis(())
    with pytest.raises(ValueError, match="positive"):
        GeneratorBasis((-1.0,))
    with pytest.raises(ValueError, match="increasing"):
        GeneratorBasis((2.0, 1.0))
    with pytest.raises(ValueError, match="at most"):
        GeneratorBasis((1.0, 2.0, 3.0, 4.0, 5.0))


def test_fold_examples():
    g = (1.0, SQ5)
    assert fold((-2, 0), g) == ((2, 0), -1)
    assert fold((0, 3), g) == ((0, 3), 1)
    assert fold((0, 0), g) == ((0, 0), 1)


def test_fold_uses_sign_of_frequency_for_mixed_vectors():
    # (1, -1) embeds to 1 - sqrt(5) < 0, so the canonical vector is (-1, 1)
    assert fold((1, -1), (1.0, SQ5)) == ((-1, 1), -1)


@given(st.lists(st.integers(-20, 20), min_size=2, max_size=2))
def test_fold_idempotent_and_nonnegative(v):
    g = (1.0, SQ5)
    vec, _ = fold(v, g)
    assert fold(vec, g) == (vec, 1)
    assert sum(c * x for c, x in zip(vec, g)) >= 0


def test_classify_examples():
    pair = two_generator_pair()
    assert classify(pair, (0, 2)) is Kind.COS
    assert classify(pair, (1, 1)) is Kind.SIN
    assert classify(pair, (1, 0)) is Kind.EXCLUDED
    assert classify(pair, (0, 0)) is Kind.MEAN


def _pair(gens, cos, sin, cb=4, cutoff=10.0):
    return AdmissiblePair(GeneratorBasis(gens, cb, cutoff), frozenset(cos), frozenset(sin))


def test_check_admissible_known_families():
    assert check_admissible(_pair((0.7,), {(0,)}, set())).ok
    assert check_admissible(_pair((1.0,), {(0,)}, {(1,)})).ok
    assert check_admissible(two_generator_pair()).ok
    assert check_admissible(even_periodic_pair(6.5)).ok


def test_check_admissible_corrupted_coset():
    rep = check_admissible(_pair((1.0, SQ5), {(0, 0), (1, 1)}, {(1, 0)}))
    assert not rep.ok
    laws = [v.law for v in rep.violations]
    assert any("cos (+) sin" in law for law in laws)
    witnesses = [tuple(v.witness) for v in rep.violations if "cos (+) sin" in v.law]
    assert ((1, 1), (1, 0), (0, 1)) in witnesses


def test_check_admissible_detects_collision():
    rep = check_admissible(_pair((1.0, 2.0), {(0, 0), (1, 1), (0, 1), (1, 0)}, set(), cb=2))
    assert any("collision" in v.law for v in rep.violations)


def test_check_admissible_condition_i_needs_a_cosine():
    rep = check_admissible(_pair((1.0,), {(0,)}, {(1,)}, cb=1, cutoff=1.5))
    assert not rep.ok
    assert any("distinct" in v.law for v in rep.violations)


ALL2 = list(itertools.product((0, 1), repeat=2))


@settings(max_examples=200, deadline=None)
@given(st.sets(st.sampled_from(ALL2)), st.sets(st.sampled_from(ALL2)))
def test_random_parity_tables_match_group_oracle(cos, sin):
    pair = _pair((1.0, SQ5), cos, sin, cb=3, cutoff=30.0)
    rep = check_admissible(pair)
    parity_laws = [v for v in rep.violations if "collision" not in v.law and "distinct" not in v.law]
    assert (not parity_laws) == parity_group_ok(set(cos), set(sin), 2)


def test_enumerate_periodic():
    pair = _pair((1.0,), {(0,), (1,)}, set(), cb=3, cutoff=3.5)
    assert [str(m) for m in enumerate_modes(pair)] == ["Mean", "Cos(1,)", "Cos(2,)", "Cos(3,)"]


def test_enumerate_interleaved():
    pair = interleaved_pair(4.5)
    assert [str(m) for m in enumerate_modes(pair)] == [
        "Mean", "Sin(1,)", "Cos(2,)", "Sin(3,)", "Cos(4,)"]


def test_enumerate_two_generator_matches_brute_force():
    pair = two_generator_pair(1.0, SQ5, 2, 5.0)
    got = [(m.vec, m.kind.value) for m in enumerate_modes(pair)[1:]]
    ref = [(v, k) for _, v, k in brute_force_modes((1.0, SQ5), {(0, 0)}, {(1, 1)}, 2, 5.0)]
    assert got == ref
    assert got == [((-1, 1), "sin"), ((2, 0), "cos"), ((-2, 2), "cos"), ((1, 1), "sin"),
                   ((0, 2), "cos")]


@pytest.mark.parametrize("cb,cutoff", [(3, 9.0), (5, 14.0)])
def test_enumerate_sorted_and_unique(cb, cutoff):
    pair = two_generator_pair(1.0, SQ5, cb, cutoff)
    modes = enumerate_modes(pair)
    assert modes[0].kind is Kind.MEAN
    f = [embed(pair.basis, m.vec) for m in modes[1:]]
    assert all(a < b for a, b in zip(f, f[1:]))
    assert len({m.vec for m in modes}) == len(modes)


def test_enumerate_below_smallest_frequency():
    assert enumerate_modes(even_periodic_pair(0.5)) == [ModeId((0,), Kind.MEAN)]


def test_product_images_classify_consistently():
    pair = two_generator_pair(1.0, SQ5, 3, 8.0)
    g = pair.basis.generators
    modes = enumerate_modes(pair)[1:]
    for a, b in itertools.product(modes, repeat=2):
        for w in (tuple(x + y for x, y in zip(a.vec, b.vec)), tuple(x - y for x, y in zip(a.vec, b.vec))):
            vec, _ = fold(w, g)
            kind = classify(pair, vec)
            expected = Kind.COS if a.kind == b.kind else Kind.SIN
            if not any(vec):
                assert kind is Kind.MEAN
            else:
                assert kind is expected


def test_parse_real_and_roundtrip():
    assert parse_real("sqrt(5)") == SQ5
    assert parse_real("2*pi") == 2 * math.pi
    assert parse_real(3) == 3.0
    with pytest.raises(ValueError):
        parse_real("__import__('os')")
    pair = pair_from_dict({"generators": [1, "sqrt(5)"], "cos_parities": [[0, 0]],
                           "sin_parities": [[1, 1]], "coeff_bound": 3, "cutoff": "2*sqrt(5)"})
    assert pair.basis.generators == (1.0, SQ5)
    assert pair_from_dict(pair_to_dict(pair)) == pair


def test_pair_from_dict_names_missing_fields():
    with pytest.raises(ValueError, match="generators"):
        pair_from_dict({"cos_parities": [[0]]})


def test_mode_from_text():
    assert mode_from_text("cos:0,2", 2) == ModeId((0, 2), Kind.COS)
    assert mode_from_text("sin:1", 1) == ModeId((1,), Kind.SIN)
    with pytest.raises(ValueError):
        mode_from_text("tan:1", 1)
    with pytest.raises(ValueError):
        mode_from_text("cos:1", 2)
