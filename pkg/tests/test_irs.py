import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irsched import (Codebook, IrsConfiguration, build_codebook, circular_distance, map_to_codebook,
                     optimal_continuous_config, quantize_config)
from irsched.channel import ChannelSet
from irsched.irs import InsufficientTrainingDataError, codebook_from_points, kmeans_circular

from conftest import tiny_cfg


def _random_channels(rng, n_g=2, n_u=2, n_i=4, K=1, F=1):
    def cn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    w = cn(n_g)
    return ChannelSet(h_gi=cn(F, n_i, n_g), g_ue=cn(K, F, n_u, n_i), w_gnb=w / np.linalg.norm(w))


def _gain(ch, theta, k=0, i=0):
    a = ch.g_ue[k, i] @ (np.exp(1j * np.asarray(theta)) * (ch.h_gi[i] @ ch.w_gnb))
    return np.linalg.norm(a)


# ------------------------------------------------------------ configuration type

def test_configuration_coefficients_unit_modulus():
    c = IrsConfiguration([0, 1, 2, 3], bits=2)
    np.testing.assert_allclose(c.phases, [0, np.pi / 2, np.pi, 3 * np.pi / 2])
    np.testing.assert_allclose(np.abs(c.coefficients), 1.0)


def test_configuration_index_range():
    with pytest.raises(ValueError):
        IrsConfiguration([0, 2], bits=1)


# ------------------------------------------------------------ quantization

@pytest.mark.parametrize("theta, bits, idx", [
    (0.4 * np.pi, 1, 0),
    (1.6 * np.pi, 1, 0),
    (np.pi / 4, 2, 0),
    (0.6 * np.pi, 1, 1),
    (-0.1, 2, 0),
    (2 * np.pi - np.pi / 4, 2, 0),  # tie between 3 and wrapped 0 -> lower index
])
def test_quantize_examples(theta, bits, idx):
    assert quantize_config([theta], bits).phase_idx[0] == idx


@given(st.lists(st.floats(-20, 20), min_size=1, max_size=8), st.integers(1, 4))
def test_quantize_is_nearest_grid_point(theta, bits):
    q = quantize_config(theta, bits)
    grid = 2 * np.pi * np.arange(2**bits) / 2**bits
    for t, j in zip(theta, q.phase_idx):
        dists = [circular_distance([t], [g]) for g in grid]
        assert dists[j] <= min(dists) + 1e-12


# ------------------------------------------------------------ circular distance

def test_circular_distance_examples():
    a = IrsConfiguration([0, 1, 1], 1)
    assert circular_distance(a, a) == 0
    assert circular_distance([0.0], [np.pi]) == pytest.approx(np.pi**2)
    assert circular_distance([0.1], [2 * np.pi - 0.1]) == pytest.approx(0.04)


def test_circular_distance_length_mismatch():
    with pytest.raises(ValueError):
        circular_distance([0.0, 1.0], [0.0])


@given(st.lists(st.tuples(st.floats(0, 6.28), st.floats(0, 6.28)), min_size=1, max_size=6))
def test_circular_distance_symmetric_and_bounded(pairs):
    a, b = map(np.array, zip(*pairs))
    d = circular_distance(a, b)
    assert d == pytest.approx(circular_distance(b, a))
    assert 0 <= d <= len(a) * np.pi**2 + 1e-9


# ------------------------------------------------------------ continuous optimum

def test_single_antenna_closed_form():
    rng = np.random.default_rng(3)
    ch = _random_channels(rng, n_u=1, n_i=6)
    hw = ch.h_gi[0] @ ch.w_gnb
    expect = -np.angle(ch.g_ue[0, 0, 0] * hw)
    got = optimal_continuous_config(ch, 0, 0)
    np.testing.assert_allclose(np.exp(1j * got.phases), np.exp(1j * expect), atol=1e-12)
    assert got.gain == pytest.approx(np.sum(np.abs(ch.g_ue[0, 0, 0] * hw)))


def test_continuous_optimum_beats_random_search():
    rng = np.random.default_rng(4)
    for _ in range(5):
        ch = _random_channels(rng, n_u=2, n_i=2)
        opt = optimal_continuous_config(ch, 0, 0)
        samples = rng.uniform(0, 2 * np.pi, size=(10_000, 2))
        best = max(_gain(ch, t) for t in samples)
        # within the optimiser's 1e-6 relative stopping tolerance
        assert opt.gain >= best * (1 - 1e-6)
        assert opt.gain == pytest.approx(_gain(ch, opt.phases))


def test_zero_channel_is_degenerate():
    rng = np.random.default_rng(5)
    ch = _random_channels(rng)
    ch = ChannelSet(ch.h_gi, np.zeros_like(ch.g_ue), ch.w_gnb)
    res = optimal_continuous_config(ch, 0, 0)
    assert res.degenerate and not res.phases.any() and res.gain == 0


# ------------------------------------------------------------ codebook mapping

def test_map_to_codebook_members_and_singleton():
    cb = Codebook.full_grid(3, 1)
    for c in range(len(cb)):
        assert map_to_codebook(cb[c].phases, cb) == c
        assert map_to_codebook(cb[c], cb) == c
    single = Codebook(np.array([[1, 0, 1]]), 1)
    assert map_to_codebook(np.array([0.3, 2.0, 5.0]), single) == 0


def test_map_to_codebook_matches_linear_scan(rng):
    cb = Codebook(np.unique(rng.integers(0, 4, size=(64, 5)), axis=0)[:16], 2)
    for _ in range(50):
        theta = rng.uniform(0, 2 * np.pi, 5)
        best, best_d = None, np.inf
        for c, entry in enumerate(cb.entries):
            d = 0.0
            for t, p in zip(theta, entry.phases):
                delta = abs(t - p) % (2 * np.pi)
                d += min(delta, 2 * np.pi - delta) ** 2
            if d < best_d:
                best, best_d = c, d
        assert map_to_codebook(theta, cb) == best


def test_codebook_validation():
    with pytest.raises(ValueError):
        Codebook(np.array([[0, 1], [0, 1]]), 1)
    with pytest.raises(ValueError):
        Codebook(np.array([[0, 1], [1, 1], [1, 0]]), 1)


def test_codebook_json_round_trip(tmp_path):
    cb = Codebook.full_grid(2, 2)
    cb.save(tmp_path / "cb.json")
    back = Codebook.load(tmp_path / "cb.json")
    assert np.array_equal(back.indices, cb.indices) and back.b_q == 4 and back.b_irs == 2


# ------------------------------------------------------------ k-means

def test_kmeans_recovers_repeated_points(rng):
    base = np.array([[0, 1, 2, 3], [3, 3, 0, 1], [1, 0, 0, 2], [2, 2, 3, 3]])
    pts = 2 * np.pi * np.repeat(base, 7, axis=0) / 4
    cb, res = codebook_from_points(pts, 2, 2, rng)
    assert {tuple(e) for e in cb.indices} == {tuple(e) for e in base}
    assert res.objective[-1] == 0


def test_exhaustive_codebook_is_full_grid(rng):
    pts = np.pi * np.array(list(itertools.product([0, 1], repeat=2)) * 5)
    cb, _ = codebook_from_points(pts, 2, 1, rng)
    assert {tuple(e) for e in cb.indices} == {(0, 0), (0, 1), (1, 0), (1, 1)}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 4))
def test_kmeans_objective_non_increasing(seed, bits, b_q):
    rng = np.random.default_rng(seed)
    pts = 2 * np.pi * rng.integers(0, 2**bits, size=(60, 6)) / 2**bits + rng.normal(0, 0.3, size=(60, 6))
    res = kmeans_circular(pts, 2**b_q, rng)
    assert all(b <= a + 1e-9 for a, b in zip(res.objective, res.objective[1:]))


def test_duplicate_centroids_made_distinct(rng):
    # 8 codewords but only 2 distinct training vectors
    pts = np.pi * np.array([[0, 0, 0, 0], [1, 1, 1, 1]] * 10, dtype=float)
    cb, _ = codebook_from_points(pts, 3, 1, rng)
    assert len(cb) == 8
    assert len(np.unique(cb.indices, axis=0)) == 8


def test_insufficient_training_data(rng):
    with pytest.raises(InsufficientTrainingDataError):
        kmeans_circular(np.zeros((3, 4)), 4, rng)


def test_build_codebook_from_channels():
    cfg = tiny_cfg()
    cb = build_codebook(cfg, np.random.default_rng(0))
    assert len(cb) == 4 and cb.n_irs == 8 and cb.b_irs == 1
    again = build_codebook(cfg, np.random.default_rng(0))
    assert np.array_equal(cb.indices, again.indices)
