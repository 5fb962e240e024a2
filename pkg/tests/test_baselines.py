import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locsep.baselines import (DegenerateSubspaceError, SubspaceConfig, _hankel_operator, esprit_1d,
                              fit_amplitudes, frequency_rmse, hankel_eigen_histogram, hankel_matrix,
                              music_1d, music_pseudospectrum, signal_subspace)
from locsep.model_synth import NoiseSpec, PointSourceModel, SampleLine, SamplingLine, sample_line


def noiseless(model, n):
    return sample_line(model, SamplingLine.univariate(n))


def test_config_validation():
    assert SubspaceConfig(3).rows_for(2047) == 1023
    with pytest.raises(ValueError):
        SubspaceConfig(3, hankel_rows=3).rows_for(2047)
    with pytest.raises(ValueError):
        SubspaceConfig(3, hankel_rows=2000).rows_for(2047)


def test_hankel_layout():
    H = hankel_matrix(np.arange(7), 3)
    assert H.shape == (3, 5)
    for i in range(3):
        for j in range(5):
            assert H[i, j] == i + j


def test_fft_operator_matches_dense():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(41) + 1j * rng.standard_normal(41)
    H = hankel_matrix(y, 17)
    op = _hankel_operator(y, 17)
    v = rng.standard_normal(25) + 1j * rng.standard_normal(25)
    u = rng.standard_normal(17) + 1j * rng.standard_normal(17)
    np.testing.assert_allclose(op.matvec(v), H @ v, atol=1e-12)
    np.testing.assert_allclose(op.rmatvec(u), H.conj().T @ u, atol=1e-12)


def test_iterative_subspace_matches_dense(three_sources):
    s = sample_line(three_sources, SamplingLine.univariate(1024), NoiseSpec(snr_db=0, seed=1))
    U, sv = signal_subspace(s.values, 1023, 3)
    ref = np.linalg.svd(hankel_matrix(s.values, 1023), compute_uv=False)[:3]
    np.testing.assert_allclose(sv, ref, rtol=1e-9)
    assert U.shape == (1023, 3)


def test_esprit_noiseless_table1(three_sources):
    freqs, amps = esprit_1d(noiseless(three_sources, 64), SubspaceConfig(3))
    np.testing.assert_allclose(freqs, [-3, -1, 2], atol=1e-8)
    np.testing.assert_allclose(amps, [1, -2, 3], atol=1e-8)


def test_music_noiseless_table1(three_sources):
    freqs = music_1d(noiseless(three_sources, 64), SubspaceConfig(3, refine=False))
    np.testing.assert_allclose(freqs, [-3, -1, 2], atol=2 * np.pi / 8192)
    np.testing.assert_allclose(music_1d(noiseless(three_sources, 64), SubspaceConfig(3)), [-3, -1, 2], atol=1e-6)


def test_music_pure_tone():
    s = noiseless(PointSourceModel([1.0], [0.5]), 32)
    assert music_1d(s, SubspaceConfig(1))[0] == pytest.approx(0.5, abs=1e-6)
    x, P = music_pseudospectrum(s, SubspaceConfig(1))
    assert abs(x[np.argmax(P)] - 0.5) <= 2 * np.pi / 8192


def test_music_respects_separation():
    s = noiseless(PointSourceModel([1.0, 1.0], [0.0, 0.05]), 128)
    f = music_1d(s, SubspaceConfig(2, min_separation=0.5))
    assert abs(f[1] - f[0]) > 0.5


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10_000))
def test_noiseless_exactness_random(K, seed):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.choice(np.linspace(-3, 3, 13), K, replace=False))
    amps = rng.uniform(0.5, 2, K) * np.exp(2j * np.pi * rng.random(K))
    s = noiseless(PointSourceModel(amps, lam), 48)
    np.testing.assert_allclose(esprit_1d(s, SubspaceConfig(K))[0], lam, atol=1e-6)
    np.testing.assert_allclose(music_1d(s, SubspaceConfig(K)), lam, atol=1e-6)


@settings(max_examples=10, deadline=None)
@given(st.floats(-np.pi, np.pi))
def test_esprit_global_phase_invariance(theta):
    m = PointSourceModel([1.0, 2.0], [-1.0, 1.2])
    s = sample_line(m, SamplingLine.univariate(64), NoiseSpec(sigma=0.3, seed=2))
    rot = SampleLine(s.line, s.values * np.exp(1j * theta))
    np.testing.assert_allclose(esprit_1d(rot, SubspaceConfig(2))[0], esprit_1d(s, SubspaceConfig(2))[0], atol=1e-9)


def test_fit_amplitudes_exact():
    lam = np.array([-0.4, 1.0])
    s = noiseless(PointSourceModel([2.0, -1j], lam), 20)
    np.testing.assert_allclose(fit_amplitudes(s.values, lam), [2.0, -1j], atol=1e-12)


def test_degenerate_rank():
    s = noiseless(PointSourceModel([1.0], [0.3]), 32)
    with pytest.raises(DegenerateSubspaceError):
        esprit_1d(s, SubspaceConfig(2))
    zero = SampleLine(SamplingLine.univariate(32), np.zeros(63))
    with pytest.raises(DegenerateSubspaceError):
        music_1d(zero, SubspaceConfig(1))


def test_singular_values_rank(three_sources):
    sv = hankel_eigen_histogram(noiseless(three_sources, 64), SubspaceConfig(3))
    assert np.sum(sv > 1e-8 * sv[0]) == 3
    assert np.all(np.diff(sv) <= 1e-12)


def test_singular_values_of_zero():
    zero = SampleLine(SamplingLine.univariate(16), np.zeros(31))
    np.testing.assert_array_equal(hankel_eigen_histogram(zero, SubspaceConfig(1)), 0.0)


def test_singular_values_overlap_at_low_snr(three_sources):
    cfg = SubspaceConfig(3)
    clean = hankel_eigen_histogram(noiseless(three_sources, 1024), cfg)
    noisy = hankel_eigen_histogram(
        sample_line(three_sources, SamplingLine.univariate(1024), NoiseSpec(snr_db=-10, seed=5)), cfg)
    assert np.sum(noisy > clean[3]) > 3


def test_frequency_rmse():
    assert frequency_rmse([1.0, 2.0], [2.0, 1.0]) == 0.0
    assert frequency_rmse([np.pi - 0.01], [-np.pi + 0.01]) == pytest.approx(0.02)
    assert frequency_rmse([], [0.0, 1.0]) == pytest.approx(np.pi)
    assert frequency_rmse([0.0], [0.0, 1.0]) == pytest.approx(np.sqrt(np.pi ** 2 / 2))
