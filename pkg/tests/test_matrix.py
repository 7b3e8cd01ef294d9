from __future__ import annotations

import itertools

import numpy as np
import pytest

from keydyn.errors import RosterMismatchError, ShapeMismatchError
from keydyn.features import unigraph_key
from keydyn.matrix import (
    FusionMethod,
    ScoreMatrix,
    ScorerSpec,
    build_matrix_prepared,
    build_score_matrix,
    fuse,
    matrix_from_json,
    matrix_to_csv,
    matrix_to_json,
)
from keydyn.verifiers import SimilarityMode, Verifier, prepare_profile

U = unigraph_key


def profiles(**holds):
    """One-unigraph profile per user from a center hold time."""
    return {user: {U("a"): [center - 5.0, center, center + 5.0]} for user, center in holds.items()}


def test_single_user_matrix():
    enroll = profiles(u1=100.0)
    m = build_score_matrix(enroll, enroll, Verifier.ABSOLUTE)
    assert m.roster == ("u1",)
    assert m.values.shape == (1, 1)
    assert m.values[0, 0] == 1.0


def test_absolute_self_comparison_diagonal_is_one():
    maps = profiles(u1=80.0, u2=150.0, u3=400.0)
    m = build_score_matrix(maps, maps, Verifier.ABSOLUTE)
    assert np.array_equal(np.diag(m.values), np.ones(3))


def test_matrix_orientation_rows_are_probes():
    # enrollment and probe differ so orientation is observable:
    # probe u1 matches enrollment u2's band, not its own
    enroll = {"u1": {U("a"): [100.0, 110.0, 120.0]}, "u2": {U("a"): [300.0, 310.0, 320.0]}}
    probe = {"u1": {U("a"): [310.0]}, "u2": {U("a"): [110.0]}}
    m = build_score_matrix(enroll, probe, Verifier.SIMILARITY, mode=SimilarityMode.CORRECTED)
    # values[i][j] = verifier(enroll[user_j], probe[user_i])
    assert m.values[0, 1] == 1.0  # probe u1 vs enroll u2
    assert m.values[0, 0] == 0.0
    assert m.values[1, 0] == 1.0
    assert m.values[1, 1] == 0.0


def test_roster_mismatch_rejected():
    with pytest.raises(RosterMismatchError):
        build_score_matrix(profiles(u1=100.0), profiles(u2=100.0), Verifier.ITAD)


def test_matrix_shape_validation():
    with pytest.raises(ShapeMismatchError):
        ScoreMatrix(("u1", "u2"), np.zeros((3, 3)))


def test_separated_synthetic_users_dominate_diagonal():
    from keydyn.evaluation import split_same_platform
    from keydyn.synth import SynthSpec, generate_corpus

    corpus = generate_corpus(SynthSpec(seed=5, n_users=3, platforms=("F",), separation=4.0))
    data = split_same_platform(corpus, "F")
    m = build_score_matrix(data.enroll, data.probe, Verifier.ITAD)
    for i in range(3):
        off = [m.values[i, j] for j in range(3) if j != i]
        assert m.values[i, i] > max(off)


def test_parallel_rows_equal_sequential():
    maps_e = profiles(u1=80.0, u2=150.0, u3=230.0, u4=310.0, u5=390.0)
    maps_p = profiles(u1=82.0, u2=155.0, u3=228.0, u4=500.0, u5=391.0)
    enroll = {u: prepare_profile(p) for u, p in maps_e.items()}
    probe = {u: prepare_profile(p) for u, p in maps_p.items()}
    spec = ScorerSpec(Verifier.ITAD)
    seq = build_matrix_prepared(enroll, probe, spec, jobs=1)
    par = build_matrix_prepared(enroll, probe, spec, jobs=3)
    assert np.array_equal(seq.values, par.values)
    assert seq.roster == par.roster


# -- fusion --------------------------------------------------------------------


def matrix_of(values, scorer="x", scenario="s"):
    values = np.asarray(values, dtype=np.float64)
    roster = tuple(f"u{i}" for i in range(values.shape[0]))
    return ScoreMatrix(roster, values, scorer, scenario)


def test_fuse_mean_of_identical_is_identity():
    m = matrix_of([[0.3, 0.7], [0.2, 0.9]])
    fused = fuse([m, m, m], FusionMethod.MEAN)
    np.testing.assert_allclose(fused.values, m.values, rtol=0, atol=1e-15)
    assert fused.scorer == "fmean"
    assert fused.scenario == "s"


@pytest.mark.parametrize(
    "method,expected",
    [
        (FusionMethod.MEAN, 0.5),
        (FusionMethod.MEDIAN, 0.4),
        (FusionMethod.MIN, 0.2),
        (FusionMethod.MAX, 0.9),
    ],
)
def test_fuse_elementwise(method, expected):
    ms = [matrix_of([[v]]) for v in (0.2, 0.4, 0.9)]
    assert fuse(ms, method).values[0, 0] == pytest.approx(expected)


def test_fuse_validation():
    a = matrix_of([[0.1]])
    with pytest.raises(ValueError):
        fuse([a], FusionMethod.MEAN)
    b = ScoreMatrix(("other",), np.zeros((1, 1)))
    with pytest.raises(RosterMismatchError):
        fuse([a, b], FusionMethod.MEAN)


def test_fuse_permutation_invariant_bitwise(rng):
    ms = [matrix_of(rng.uniform(0, 1, (4, 4))) for _ in range(3)]
    for method in FusionMethod:
        reference = fuse(ms, method)
        for perm in itertools.permutations(ms):
            assert np.array_equal(fuse(list(perm), method).values, reference.values)


def test_fuse_stays_in_unit_interval(rng):
    for _ in range(50):
        ms = [matrix_of(rng.uniform(0, 1, (3, 3))) for _ in range(3)]
        for method in FusionMethod:
            fused = fuse(ms, method).values
            assert fused.min() >= 0.0 and fused.max() <= 1.0


# -- serialization ---------------------------------------------------------------


def test_matrix_csv_header_is_roster():
    m = matrix_of([[0.25, 1.0], [0.0, 0.5]], scorer="itad")
    text = matrix_to_csv(m)
    lines = text.strip().split("\n")
    assert lines[0] == "probe,u0,u1"
    assert lines[1] == "u0,0.25,1.0"


def test_matrix_json_round_trip():
    m = matrix_of([[0.25, 1.0], [0.0, 0.5]], scorer="itad", scenario="F")
    back = matrix_from_json(matrix_to_json(m))
    assert back.roster == m.roster
    assert back.scorer == "itad"
    assert back.scenario == "F"
    assert np.array_equal(back.values, m.values)
