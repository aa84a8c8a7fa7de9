import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bullwhip.demand import DemandModel, generate
from bullwhip.spectral import (
    PolicyParams,
    SpectralError,
    SpectralProfile,
    amplification_rate,
    ar1_profile,
    dft_amplitudes,
    eta_first_layer,
    eta_with_trend,
    layer_bwe_analytical,
    layer_bwe_curve,
    layer_bwe_with_trend,
    layer_transfer_gain,
    layer_variance,
    save_spectrum_csv,
    transfer_gain,
    white_noise_profile,
)

policies = st.builds(PolicyParams, st.integers(1, 12), st.integers(1, 12))


def test_constant_sequence_has_no_amplitude():
    p = dft_amplitudes(np.full(64, 3.0))
    assert np.all(p.amplitudes < 1e-12)
    assert p.mean_component == pytest.approx(3.0)


def test_single_bin_sinusoid():
    T, k = 128, 9
    t = np.arange(1, T + 1)
    p = dft_amplitudes(3 * np.sin(2 * np.pi * k / T * t))
    assert p.amplitudes[k - 1] == pytest.approx(3.0, abs=1e-9)
    assert np.delete(p.amplitudes, k - 1).max() < 1e-9


def test_two_bin_sinusoids():
    T = 256
    t = np.arange(1, T + 1)
    p = dft_amplitudes(np.sin(2 * np.pi * 5 / T * t) + 2 * np.cos(2 * np.pi * 40 / T * t + 0.3))
    assert p.amplitudes[4] == pytest.approx(1.0, abs=1e-9)
    assert p.amplitudes[39] == pytest.approx(2.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(amps=st.lists(st.floats(0, 10), min_size=1, max_size=5), seed=st.integers(0, 999))
def test_parseval_for_bin_sinusoids(amps, seed):
    T = 200
    rng = np.random.default_rng(seed)
    bins = rng.choice(np.arange(1, T // 2), len(amps), replace=False)
    t = np.arange(1, T + 1)
    x = sum(a * np.sin(2 * np.pi * k / T * t + rng.uniform(0, 6)) for a, k in zip(amps, bins))
    x = x + np.zeros(T)
    p = dft_amplitudes(x)
    assert p.variance == pytest.approx(np.var(x), rel=1e-9, abs=1e-9)


def test_dft_length_checks():
    with pytest.raises(SpectralError):
        dft_amplitudes(np.ones(7))
    with pytest.raises(SpectralError):
        dft_amplitudes(np.ones(2))


def test_transfer_gain_examples():
    assert transfer_gain(PolicyParams(4, 2), 0.0) == pytest.approx(1 + 0j)
    assert abs(transfer_gain(PolicyParams(4, 2), np.pi / 2)) == pytest.approx(5.0, abs=1e-12)
    w = np.linspace(0, np.pi, 50)
    np.testing.assert_allclose(np.abs(transfer_gain(PolicyParams(0, 3), w)), 1.0)


@settings(max_examples=60, deadline=None)
@given(p=policies, w=st.floats(0, math.pi))
def test_rate_is_gain_magnitude_and_at_least_one(p, w):
    phi = amplification_rate(p, w)
    assert phi >= 1 - 1e-15
    assert abs(phi - abs(transfer_gain(p, w))) <= 1e-12 * max(1.0, phi)


def test_transfer_gain_is_the_filter_response():
    # frequency response of the FIR taps y(t) = (1 + L/P) d(t-1) - (L/P) d(t-P-1)
    from scipy import signal

    from bullwhip.dynamics import serial_filter

    p = PolicyParams(3, 5)
    w, h = signal.freqz(serial_filter(p.L, p.P), worN=np.linspace(0, np.pi, 33))
    np.testing.assert_allclose(transfer_gain(p, w), h, atol=1e-12)


def test_fig2_rate_ordering():
    p = PolicyParams(4, 2)
    r = amplification_rate(p, 2 * np.pi * np.array([0.25, 0.15, 0.40]))
    assert r[0] == 5.0
    assert r[0] > r[1] > r[2]


def test_layer_transfer_gain():
    a, b = PolicyParams(4, 2), PolicyParams(1, 7)
    w = 0.7
    assert layer_transfer_gain([a], w) == transfer_gain(a, w)
    assert layer_transfer_gain([a] * 3, w) == pytest.approx(3 * transfer_gain(a, w))
    direct = sum((1 + p.L / p.P * (1 - np.exp(-1j * p.P * w))) / np.exp(1j * w) for p in (a, b))
    assert layer_transfer_gain([a, b], w) == pytest.approx(direct, abs=1e-14)
    with pytest.raises(SpectralError):
        layer_transfer_gain([], w)


def test_layer_variance_examples(fig2_demand):
    single = SpectralProfile(np.array([1.0]), np.array([0.3]))
    assert layer_variance(single, np.array([5.0]), 2) == pytest.approx(312.5)
    prof = dft_amplitudes(fig2_demand)
    phi = amplification_rate(PolicyParams(4, 2), prof.frequencies)
    assert layer_variance(prof, phi, 0) == pytest.approx(1.5, abs=1e-9)
    assert layer_variance(prof, phi, 1) == pytest.approx(25.5, abs=1e-9)
    with pytest.raises(SpectralError):
        layer_variance(prof, phi[:-1], 1)


def test_fig2_layer_bwe(fig2_demand):
    prof = dft_amplitudes(fig2_demand)
    phi = amplification_rate(PolicyParams(4, 2), prof.frequencies)
    assert layer_bwe_analytical(prof, phi, 1) == pytest.approx(math.sqrt(17), abs=1e-9)
    curve = layer_bwe_curve(prof, phi, 16)
    assert np.all(np.diff(curve) > 0)
    assert abs(curve[-1] - 5) / 5 < 0.01


def test_single_frequency_is_constant():
    prof = SpectralProfile(np.array([0, 2.0, 0]), np.array([0.1, 0.2, 0.3]))
    phi = np.array([1.5, 3.0, 2.0])
    np.testing.assert_allclose(layer_bwe_curve(prof, phi, 5), 3.0)


@settings(max_examples=50, deadline=None)
@given(
    a=st.lists(st.floats(0.01, 5), min_size=2, max_size=6),
    p=policies,
    seed=st.integers(0, 99),
)
def test_monotone_and_bounded_by_max_rate(a, p, seed):
    n = len(a)
    w = np.random.default_rng(seed).uniform(0.05, np.pi, n)
    phi = amplification_rate(p, w)
    assume(np.ptp(phi) > 1e-3)
    prof = SpectralProfile(np.array(a), w)
    curve = layer_bwe_curve(prof, phi, 8)
    assert np.all(np.diff(curve) > -1e-12)
    assert np.all(curve <= phi.max() + 1e-9)


def test_all_zero_amplitudes():
    prof = SpectralProfile(np.zeros(3), np.array([0.1, 0.2, 0.3]))
    with pytest.raises(SpectralError):
        layer_bwe_analytical(prof, np.ones(3), 1)


def test_per_layer_rates():
    prof = SpectralProfile(np.array([1.0, 1.0]), np.array([0.1, 0.2]))
    phi = np.array([[2.0, 3.0], [1.0, 1.0]])
    # second layer does not amplify
    assert layer_bwe_analytical(prof, phi, 2) == pytest.approx(1.0)
    assert layer_bwe_analytical(prof, phi, 1) == pytest.approx(math.sqrt(13 / 2))
    with pytest.raises(SpectralError):
        layer_bwe_analytical(prof, phi, 3)


def test_trend_augmented(fig2_demand):
    prof = dft_amplitudes(fig2_demand)
    phi = amplification_rate(PolicyParams(4, 2), prof.frequencies)
    assert layer_bwe_with_trend(prof, phi, 3, 0.0) == layer_bwe_analytical(prof, phi, 3)
    # hand value: (25.5 + 25.5) / (1.5 + 25.5)
    assert layer_bwe_with_trend(prof, phi, 1, 25.5, 1) == pytest.approx(math.sqrt(51 / 27), abs=1e-12)
    assert layer_bwe_with_trend(prof, phi, 4, 1e12, 3) == pytest.approx(1.0, abs=1e-6)
    # the trend of n market sequences adds n^2 tau
    assert layer_bwe_with_trend(prof, phi, 1, 25.5 / 4, 2) == pytest.approx(math.sqrt(51 / 27), abs=1e-12)


def test_eta_examples():
    assert eta_first_layer(PolicyParams(4, 4), 0.0) == pytest.approx(5.0)
    assert eta_first_layer(PolicyParams(4, 4), 1 - 1e-9) == pytest.approx(1.0, abs=1e-7)
    assert eta_first_layer(PolicyParams(2, 1), 0.5) == pytest.approx(7.0)
    assert eta_with_trend(PolicyParams(2, 2), 0.0, 2.0) == pytest.approx(7 / 3)
    assert eta_with_trend(PolicyParams(2, 2), 0.3, 0.0) == pytest.approx(eta_first_layer(PolicyParams(2, 2), 0.3))
    assert eta_with_trend(PolicyParams(2, 2), 0.3, 1e12) == pytest.approx(1.0)
    with pytest.raises(SpectralError):
        eta_first_layer(PolicyParams(2, 2), 1.0)


@settings(max_examples=80, deadline=None)
@given(p=policies, a=st.floats(-0.999, 0.999))
def test_eta_above_one(p, a):
    assert eta_first_layer(p, a) > 1 - 1e-12


@pytest.mark.parametrize("phi_ar,P", [(0.0, 2), (0.5, 1), (-0.6, 3), (0.8, 4)])
def test_eta_matches_simulated_ar1(phi_ar, P):
    from bullwhip.dynamics import simulate_serial

    L = 3
    d = generate(DemandModel(kind="Ar1", ar_coeff=phi_ar, noise_sd=1.0, horizon=400_000, seed=11))
    y = simulate_serial(L, P, d)[100:]
    assert np.var(y) / np.var(d[100:]) == pytest.approx(eta_first_layer(PolicyParams(L, P), phi_ar), rel=0.02)


def test_eta_is_spectral_ratio():
    # the closed form equals the ratio of amplified to raw AR(1) spectra
    p, a = PolicyParams(2, 3), 0.4
    prof = ar1_profile(a, 1.0, 1 << 16)
    phi = amplification_rate(p, prof.frequencies)
    assert layer_bwe_analytical(prof, phi, 1) ** 2 == pytest.approx(eta_first_layer(p, a), rel=1e-3)


def test_white_noise_profile_variance():
    assert white_noise_profile(2.0, 1000).variance == pytest.approx(4.0 * 499 / 500)


def test_policy_validation():
    with pytest.raises(SpectralError):
        PolicyParams(-1, 2)
    with pytest.raises(SpectralError):
        PolicyParams(1, 0)


def test_spectrum_csv(tmp_path, fig2_demand):
    save_spectrum_csv(dft_amplitudes(fig2_demand), tmp_path / "s.csv")
    rows = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    assert rows.shape == (499, 3)
    assert rows[149, 2] == pytest.approx(1.0)
