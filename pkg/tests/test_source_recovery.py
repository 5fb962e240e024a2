import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locsep.baselines import frequency_rmse
from locsep.filter_kernel import LowPassFilter, empirical_localization_constant, make_kernel_weights
from locsep.model_synth import (NoiseSpec, PointSourceModel, SampleLine, SamplingLine, sample_line,
                                trial_seed)
from locsep.source_recovery import (RecoveryParams, circular_runs, estimate_sources, find_peaks,
                                    localization_threshold_constant, recover_1d, threshold_set,
                                    verify_theorem_conditions)
from locsep.spectrum import SpectrumGrid, eval_sigma_grid, uniform_grid

H = LowPassFilter()
W16 = make_kernel_weights(H, 16)


def synthetic_grid(values):
    values = np.asarray(values, dtype=complex)
    return SpectrumGrid(n=16, grid_size=values.size, values=values, weights=W16)


def bumps(N, centers, heights, width=0.01):
    x = uniform_grid(N)
    v = np.zeros(N)
    for c, h in zip(centers, heights):
        d = np.angle(np.exp(1j * (x - c)))
        v += h * np.exp(-(d / width) ** 2)
    return v


def test_params_validation():
    with pytest.raises(ValueError):
        RecoveryParams(0.0, 1.0)
    with pytest.raises(ValueError):
        RecoveryParams(1.0, 0.0)
    with pytest.raises(ValueError):
        RecoveryParams(1.0, 7.0)


def test_threshold_set_edge_cases():
    assert threshold_set(synthetic_grid(np.zeros(64)), 1.0).size == 0
    assert threshold_set(synthetic_grid(np.full(64, 2.0)), 2.0).size == 64


def test_threshold_set_single_source_is_localized():
    n = 256
    w = make_kernel_weights(H, n)
    s = sample_line(PointSourceModel([1.0], [0.4]), SamplingLine.univariate(n))
    g = eval_sigma_grid(s, w)
    idx = threshold_set(g, 1.0)
    peak = int(np.argmax(g.modulus))
    C, _ = localization_threshold_constant(w, 1.0, 1.0)
    assert peak in idx
    assert np.all(np.abs(g.x[idx] - 0.4) <= C / n)


def test_circular_runs_wrap():
    mask = np.zeros(10, bool)
    mask[[0, 1, 8, 9, 4]] = True
    assert circular_runs(mask) == [(4, 1), (8, 4)]
    assert circular_runs(np.ones(5, bool)) == [(0, 5)]
    assert circular_runs(np.zeros(5, bool)) == []


def test_peaks_separation_rule():
    N = 4096
    eta = 1.0
    kept = find_peaks(synthetic_grid(bumps(N, [0.0, eta / 2], [1.0, 1.0])), RecoveryParams(1.0, eta))
    assert len(kept) == 2
    close = find_peaks(synthetic_grid(bumps(N, [0.0, eta / 8], [1.0, 0.9], width=0.02)),
                       RecoveryParams(1.0, eta))
    assert len(close) == 1
    assert abs(uniform_grid(N)[close[0].peak_index]) < 1e-2


def test_peak_tie_goes_to_lower_index():
    v = np.zeros(64)
    v[10] = v[12] = 1.0
    v[11] = 0.5
    peaks = find_peaks(synthetic_grid(v), RecoveryParams(1.0, 1.0))
    assert [p.peak_index for p in peaks] == [10]


def test_cluster_wraps_around_pi():
    N = 1024
    g = synthetic_grid(bumps(N, [np.pi], [1.0], width=0.05))
    (c,) = find_peaks(g, RecoveryParams(1.0, 2.0))
    assert 0 in c.members and N - 1 in c.members


def test_table1_noiseless(three_sources, weights_1024):
    s = sample_line(three_sources, SamplingLine.univariate(1024))
    g = eval_sigma_grid(s, weights_1024)
    clusters = find_peaks(g, RecoveryParams(1.0, 2.0))
    assert len(clusters) == 3
    C, _ = localization_threshold_constant(weights_1024, 6.0, 1.0)
    got = np.sort([g.x[c.peak_index] for c in clusters])
    np.testing.assert_allclose(got, [-3, -1, 2], atol=2 * C / 1024)
    # a grid argmax is up to half a step off; |Phi_n| drops by about (n * step / 2)**2 / 4 there
    src = sorted(estimate_sources(g, RecoveryParams(1.0, 2.0)), key=lambda r: r.lambda_hat)
    for r, a in zip(src, [1.0, -2.0, 3.0]):
        assert r.amp_hat == pytest.approx(abs(a), rel=5e-3)
    refined = sorted(estimate_sources(g, RecoveryParams(1.0, 2.0, refine_peak=True)),
                     key=lambda r: r.lambda_hat)
    for r, a in zip(refined, [1.0, -2.0, 3.0]):
        assert r.amp_hat == pytest.approx(abs(a), abs=1e-3)
        assert np.cos(r.phase_hat) == pytest.approx(np.sign(a), abs=1e-3)


def test_single_strong_source(weights_1024):
    s = sample_line(PointSourceModel([3.0], [2.0]), SamplingLine.univariate(1024))
    (r,) = recover_1d(s, weights_1024, RecoveryParams(3.0, 2 * np.pi))
    assert 2.97 <= r.amp_hat <= 3.0 + 1e-12
    assert abs(r.lambda_hat - 2.0) <= 2 * np.pi / 16384


def test_refined_peak_is_closer(weights_1024):
    lam = 0.123456
    s = sample_line(PointSourceModel([1.0], [lam]), SamplingLine.univariate(1024))
    coarse = recover_1d(s, weights_1024, RecoveryParams(1.0, 2.0))[0].lambda_hat
    fine = recover_1d(s, weights_1024, RecoveryParams(1.0, 2.0, refine_peak=True))[0].lambda_hat
    assert abs(fine - lam) < abs(coarse - lam)


def test_noisy_table1_single_trial(three_sources, weights_1024):
    s = sample_line(three_sources, SamplingLine.univariate(1024),
                    NoiseSpec(snr_db=-10, seed=trial_seed(1, 0), reference_power=1.0))
    src = recover_1d(s, weights_1024, RecoveryParams(1.0, 2.0))
    assert len(src) == 3
    assert frequency_rmse([r.lambda_hat for r in src], [-3, -1, 2]) <= 1e-3


def test_empty_cluster_list():
    g = synthetic_grid(np.zeros(64))
    assert estimate_sources(g, RecoveryParams(1.0, 1.0)) == []
    assert estimate_sources(g, RecoveryParams(1.0, 1.0), clusters=[]) == []


def test_determinism(three_sources, weights_1024):
    s = sample_line(three_sources, SamplingLine.univariate(1024), NoiseSpec(snr_db=0, seed=4))
    a = recover_1d(s, weights_1024, RecoveryParams(1.0, 2.0))
    b = recover_1d(s, weights_1024, RecoveryParams(1.0, 2.0))
    assert a == b


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 3.0), st.integers(0, 1000))
def test_raising_threshold_never_adds_sources(m, seed):
    w = make_kernel_weights(H, 128)
    s = sample_line(PointSourceModel([1.0, 2.0, 1.5], [-2.0, 0.0, 1.5]), SamplingLine.univariate(128),
                    NoiseSpec(sigma=0.5, seed=seed))
    g = eval_sigma_grid(s, w)
    assert len(estimate_sources(g, RecoveryParams(m * 1.5, 1.0))) <= len(estimate_sources(g, RecoveryParams(m, 1.0)))


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 20.0))
def test_positive_scaling(c):
    w = make_kernel_weights(H, 128)
    s = sample_line(PointSourceModel([1.0, -2.0], [-1.0, 1.0]), SamplingLine.univariate(128))
    base = recover_1d(s, w, RecoveryParams(1.0, 2.0))
    scaled = recover_1d(SampleLine(s.line, c * s.values), w, RecoveryParams(c, 2.0))
    assert [r.lambda_hat for r in scaled] == [r.lambda_hat for r in base]
    np.testing.assert_allclose([r.amp_hat for r in scaled], [c * r.amp_hat for r in base], rtol=1e-10)


def test_theorem_conditions_noiseless_equal_amplitudes():
    n = 512
    w = make_kernel_weights(H, n)
    m = PointSourceModel([1.0, 1.0, 1.0], [-2.0, 0.0, 2.0])
    g = eval_sigma_grid(sample_line(m, SamplingLine.univariate(n)), w)
    rep = verify_theorem_conditions(g, RecoveryParams(1.0, 2.0), m)
    assert rep.all_hold and rep.grouped_hold and rep.n_lower_bound
    assert rep.components == 3


def test_theorem_grouping_absorbs_sidelobes(three_sources, weights_1024):
    g = eval_sigma_grid(sample_line(three_sources, SamplingLine.univariate(1024)), weights_1024)
    rep = verify_theorem_conditions(g, RecoveryParams(1.0, 2.0), three_sources)
    # sidelobes of the amplitude-3 source cross the m/2 level next to its main lobe
    assert rep.components > 3
    assert rep.groups == 3 and rep.grouped_hold


def test_theorem_flags_close_sources():
    n = 256
    w = make_kernel_weights(H, n)
    m = PointSourceModel([1.0, 1.0], [0.0, 0.02])
    g = eval_sigma_grid(sample_line(m, SamplingLine.univariate(n)), w)
    rep = verify_theorem_conditions(g, RecoveryParams(1.0, 0.02), m)
    assert not rep.n_lower_bound
    assert not rep.all_hold


def test_theorem_single_source_interval_inclusion():
    for n in (16, 64, 300):
        w = make_kernel_weights(H, n)
        m = PointSourceModel([1.0], [0.7])
        g = eval_sigma_grid(sample_line(m, SamplingLine.univariate(n)), w)
        assert verify_theorem_conditions(g, RecoveryParams(1.0, 2 * np.pi), m).interval_inclusion


def test_theorem_requires_univariate():
    m = PointSourceModel([1.0], [[0.0, 0.0]])
    g = SpectrumGrid(16, 256, np.zeros(256, complex), W16)
    with pytest.raises(ValueError):
        verify_theorem_conditions(g, RecoveryParams(1.0, 1.0), m)


def test_localization_constant_positive():
    L = empirical_localization_constant(make_kernel_weights(H, 64))
    C, L2 = localization_threshold_constant(make_kernel_weights(H, 64), 6.0, 1.0, L_emp=L)
    assert L2 == L >= 1.0 and C >= 1.0
