import os

from fractions import Fraction

import numpy as np
import pytest

from shapinglab.utils.xerror_handler import ConfigError, FrameError, ModelError
from shapinglab.modules.constellation import build_qam, standardized_moments
from shapinglab.modules.fiber import LinkConfig, compensate_dispersion, select_channel, ssfm_propagate
from shapinglab.modules.fiber.snr_analysis import GnFit
from shapinglab.modules.pas import SymbolFrame
from shapinglab.modules.selection import am_metric, prepare_kernel, selection_kernel
from shapinglab.modules.perturbation import (
    EgnCalibration,
    EnergySequence,
    PerturbationKernel,
    ccdm_energy_autocorrelation,
    coefficient_set,
    compute_coefficients,
    cpr_filter,
    filter_response,
    fit_overall_filter,
    memory_window,
    multiplicative_phase,
    nlin_variance_from_spectrum,
    phase_noise_nlin,
    predict_snr,
    quantize_kernel,
    quantized_count,
    residual_after_cpr,
    triplet_sum,
    additive_distortion,
    predicted_nlin_variance,
    truncation_gap,
    truncation_memory,
    window_sizes,
    windowed_moments,
)


def _single_channel(**updates):
    return LinkConfig.scaled(n_channels=1, **updates)


def _permuted_blocks(composition, n_blocks, rng, levels=(1, 3, 5, 7)):
    base = np.repeat(np.asarray(levels, dtype=float) ** 2, composition)
    e = rng.permuted(np.tile(base, (n_blocks, 1)), axis=1).ravel()
    return EnergySequence(e / e.mean(), block_length=base.size)


def _toy_kernel(coefficients, memory, gamma=1.0, energy=1.0, dual_pol=False):
    return PerturbationKernel(gamma=gamma, energy=energy, coefficients=np.asarray(coefficients, dtype=complex),
                              memory=memory, dual_pol=dual_pol)


# ---------------------------------------------------------------- windows and lag sets

def test_table1_windows():
    link = LinkConfig.table1()
    assert window_sizes(link) == (111, 460)
    assert memory_window(link) == 123
    assert window_sizes(LinkConfig.table1(span_length_km=1e-6)) == (0, 0)


@pytest.mark.parametrize("w", [0, 1, 5, 25])
def test_full_lag_count(w):
    assert len(coefficient_set(w, "full")) == (w + 1) ** 2 + w ** 2


@pytest.mark.parametrize("w", [1, 2, 7, 111])
def test_selected_lag_count_and_subset(w):
    expected = 4 * sum((w - 1) // k for k in range(1, w + 1)) + 4 * w + 1
    selected = coefficient_set(w, "selected")
    assert len(selected) == expected
    full = {tuple(p) for p in coefficient_set(w, "full")}
    assert {tuple(p) for p in selected} <= full


# ---------------------------------------------------------------- coefficients

def test_zero_dispersion_is_pure_spm():
    link = _single_channel(n_spans=1, dispersion_ps_nm_km=0.0)
    gauss = compute_coefficients(link, w_mem=3, use_cache=False)
    c = gauss.coefficients
    assert c[3, 3].real == pytest.approx(link.effective_length_km / (np.sqrt(2 * np.pi) * 0.5), rel=1e-12)
    assert np.count_nonzero(c) == 1

    rrc = compute_coefficients(link, w_mem=3, pulse="rrc", use_cache=False)
    c00 = rrc.coefficients[3, 3]
    assert abs(c00.imag) < 1e-9 * abs(c00)
    assert 0.6 < c00.real / link.effective_length_km < 0.75
    off = np.abs(rrc.coefficients).copy()
    off[3, 3] = 0.0
    assert off.max() < 0.5 * abs(c00)


def test_gamma_zero_gives_no_nlin(rng):
    kernel = compute_coefficients(_single_channel(gamma=0.0), use_cache=False)
    x = build_qam(16).sample(512, rng)
    assert np.all(triplet_sum(kernel, x) == 0)


@pytest.mark.parametrize("pulse", ["gaussian", "rrc"])
def test_intra_channel_symmetry(pulse):
    kernel = compute_coefficients(_single_channel(n_spans=1), w_mem=6, pulse=pulse, use_cache=False)
    c = kernel.coefficients
    np.testing.assert_allclose(c, c.T, atol=1e-9 * np.abs(c).max())
    lags, h = kernel.taps()
    assert np.isrealobj(h)
    np.testing.assert_allclose(h, h[::-1], atol=1e-9 * np.abs(h).max())


def test_xpm_rows_mirror():
    kernel = compute_coefficients(LinkConfig.scaled(n_spans=1), w_mem=6, use_cache=False)
    assert kernel.channels == [0, -1, 1]
    lags_p, h_p = kernel.taps(1)
    lags_m, h_m = kernel.taps(-1)
    np.testing.assert_array_equal(lags_p, lags_m)
    np.testing.assert_allclose(h_p, h_m[::-1], rtol=1e-6, atol=1e-9 * np.abs(h_p).max())
    with pytest.raises(ModelError):
        kernel.taps(3)


def test_kernel_cache_roundtrip():
    link = LinkConfig.scaled(n_spans=1)
    first = compute_coefficients(link, w_mem=4)
    second = compute_coefficients(link, w_mem=4)
    np.testing.assert_array_equal(first.coefficients, second.coefficients)
    np.testing.assert_array_equal(first.xpm[1], second.xpm[1])
    cache_files = os.listdir(os.environ["SHAPING_LAB_CACHE_DIR"])
    assert any(name.endswith(".slpk") for name in cache_files)


@pytest.mark.slow
def test_first_order_model_tracks_ssfm(rng):
    link = _single_channel(ase_noise=False)
    kernel = compute_coefficients(link, pulse="rrc", power_dbm=-2.0, use_cache=False)
    c = build_qam(16)
    frame = SymbolFrame(c.sample(4096, rng)[None, :], np.zeros(4096, dtype=bool), link.symbol_rate, c)
    rx = ssfm_propagate([frame], link, power_dbm=-2.0)
    y = select_channel(compensate_dispersion(rx, link), link)[0]
    residual = y - frame.x
    model = triplet_sum(kernel, frame.x)[0]
    rho = np.abs(np.vdot(model, residual)) / np.sqrt(np.vdot(model, model).real * np.vdot(residual, residual).real)
    assert rho > 0.9


# ---------------------------------------------------------------- triplet sums

def test_triplet_sum_matches_brute_force(rng):
    w = 1
    c = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    c = c + c.T
    kernel = _toy_kernel(c, w, gamma=0.7, energy=0.3, dual_pol=True)
    x = rng.normal(size=(2, 8)) + 1j * rng.normal(size=(2, 8))
    n_sym = x.shape[1]
    expected = np.zeros_like(x)
    for k in range(n_sym):
        for m, n in coefficient_set(w, "full"):
            pair = sum(x[p, (k + m) % n_sym] * np.conj(x[p, (k + m + n) % n_sym]) for p in range(2))
            expected[:, k] += c[m + w, n + w] * pair * x[:, (k + n) % n_sym]
    expected *= 1j * 0.7 * 0.3
    np.testing.assert_allclose(triplet_sum(kernel, x), expected, atol=1e-12)


def test_additive_part_of_axis_kernel(rng):
    w = 3
    c = np.zeros((7, 7))
    row = rng.uniform(0.1, 1.0, size=7)
    row = row + row[::-1]
    c[w, :] = row
    c[:, w] = row
    kernel = _toy_kernel(c, w, gamma=2.0, energy=0.5)
    x = build_qam(16).sample(64, rng)[None, :]
    expected = -1j * kernel.scale * c[w, w] * np.abs(x) ** 2 * x
    np.testing.assert_allclose(additive_distortion(kernel, x), expected, atol=1e-12)


def test_quantized_kernel():
    kernel = compute_coefficients(_single_channel(), use_cache=False)
    q = quantize_kernel(kernel, seed=3)
    w = kernel.memory
    assert q.rule.value == "quantized"
    active = coefficient_set(w, "selected") + w
    values = q.coefficients[active[:, 0], active[:, 1]]
    assert np.unique(np.round(np.abs(values), 12)).size <= quantized_count(w)
    original = kernel.coefficients[active[:, 0], active[:, 1]]
    np.testing.assert_allclose(np.angle(values), np.angle(original), atol=1e-12)
    mask = np.ones_like(q.coefficients, dtype=bool)
    mask[active[:, 0], active[:, 1]] = False
    assert np.all(q.coefficients[mask] == 0)
    assert quantized_count(111) == 22


# ---------------------------------------------------------------- truncation memory

def test_selected_lags_miss_variance_at_dispersion_memory():
    link = _single_channel()
    kernel = compute_coefficients(link, include_xpm=False, use_cache=False)
    assert kernel.memory == memory_window(link)
    assert truncation_gap(kernel) > 0.03


def test_truncation_memory_meets_tolerance():
    link = _single_channel()
    w = truncation_memory(link, tolerance=0.03)
    assert w > memory_window(link)
    assert truncation_memory(link, tolerance=0.03) == w
    kernel = compute_coefficients(link, w_mem=w, include_xpm=False, use_cache=False)
    full = predicted_nlin_variance(kernel, "full")
    selected = predicted_nlin_variance(kernel, "selected")
    assert full > 0
    assert abs(full - selected) / full <= 0.03
    assert truncation_gap(kernel) == pytest.approx(abs(full - selected) / full, rel=1e-9)
    assert truncation_memory(link, tolerance=0.2) <= w


def test_truncation_memory_rejects_bad_tolerance():
    link = _single_channel()
    for tolerance in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigError):
            truncation_memory(link, tolerance=tolerance)
    with pytest.raises(ModelError):
        truncation_memory(link, tolerance=1e-6)


def test_selected_am_tracks_full_am_at_truncation_memory(rng):
    link = _single_channel(dual_pol=False)
    full = selection_kernel(link, "am")
    assert full.memory == truncation_memory(link)
    selected = prepare_kernel("am-s", full)
    c = build_qam(64)
    frames = [SymbolFrame(c.sample(1024, rng)[None, :], np.zeros(1024, dtype=bool), 32e9, c) for _ in range(4)]
    am_full = sum(am_metric(f, full) for f in frames)
    am_selected = sum(am_metric(f, selected) for f in frames)
    assert am_full > 0
    assert abs(am_full - am_selected) / am_full < 0.05


# ---------------------------------------------------------------- filter model

def test_single_tap_filter_is_flat():
    resp = filter_response(_toy_kernel([[2.0]], 0))
    assert resp.bandwidth == 0.5
    np.testing.assert_allclose(np.abs(resp.response), 2.0)


def test_filter_bandwidth_shrinks_with_length():
    widths = []
    lengths = []
    for n_spans in (2, 4, 8, 16, 20):
        link = LinkConfig.table1(n_channels=1, n_spans=n_spans)
        kernel = compute_coefficients(link, include_xpm=False, use_cache=False)
        widths.append(filter_response(kernel).bandwidth)
        lengths.append(link.total_length_km)
    assert all(a > b for a, b in zip(widths, widths[1:]))
    x, y = np.log(lengths), np.log(widths)
    fit = np.polyfit(x, y, 1)
    r2 = 1.0 - np.sum((y - np.polyval(fit, x)) ** 2) / np.sum((y - y.mean()) ** 2)
    assert r2 > 0.98

    short = compute_coefficients(LinkConfig.table1(n_channels=1, n_spans=1), include_xpm=False, use_cache=False)
    assert widths[-1] < filter_response(short).bandwidth


def test_phase_noise_trivial_inputs():
    kernel = compute_coefficients(_single_channel(), w_mem=3, use_cache=False)
    assert np.all(phase_noise_nlin(kernel, EnergySequence(np.ones(64))) == 0)
    impulse = np.ones(64)
    impulse[0] = 2.0
    d = phase_noise_nlin(kernel, EnergySequence(impulse))
    lags, h = kernel.taps()
    np.testing.assert_allclose(d[lags % 64], kernel.scale * h, rtol=1e-12, atol=1e-15)
    assert np.allclose(np.delete(d, lags % 64), 0.0, atol=1e-12 * np.abs(d).max())


def test_phase_noise_is_linear(rng):
    kernel = compute_coefficients(_single_channel(), w_mem=5, use_cache=False)
    v1, v2 = rng.uniform(0.5, 1.5, size=(2, 256))
    d1 = phase_noise_nlin(kernel, EnergySequence(v1))
    d2 = phase_noise_nlin(kernel, EnergySequence(v2))
    np.testing.assert_allclose(phase_noise_nlin(kernel, EnergySequence(v1 + v2 - 1.0)), d1 + d2, atol=1e-12)
    np.testing.assert_allclose(phase_noise_nlin(kernel, EnergySequence(1.0 + 0.5 * (v1 - 1.0))), 0.5 * d1,
                               atol=1e-12)
    with pytest.raises(FrameError):
        phase_noise_nlin(kernel, [EnergySequence(v1), EnergySequence(v2[:100])], channels=[0, 0])


def test_phase_noise_variance_matches_spectrum(rng):
    kernel = compute_coefficients(_single_channel(), use_cache=False)
    composition = [6, 6, 2, 2]
    e = _permuted_blocks(composition, 2 ** 14, rng)
    d = phase_noise_nlin(kernel, e)
    a2 = np.repeat(np.array([1.0, 9.0, 25.0, 49.0]), composition)
    mu4 = np.mean(a2 ** 2) / np.mean(a2) ** 2
    lags, r = ccdm_energy_autocorrelation(16, mu4, max_lag=20)
    assert np.var(d) == pytest.approx(nlin_variance_from_spectrum(kernel, lags, r), rel=0.05)


def test_cpr_filter_dc_null():
    for n_cpr in (0, 1, 7, 50):
        lags, u = cpr_filter(n_cpr, exact=True)
        assert sum(u) == 0
        assert u[n_cpr] == 1 - Fraction(1, 2 * n_cpr + 1)
    lags, u = cpr_filter(0)
    assert np.all(u == 0)


def test_cpr_residual_window(rng):
    kernel = compute_coefficients(LinkConfig.table1(n_channels=1), include_xpm=False, use_cache=False)
    e = _permuted_blocks([40, 40, 14, 14], 600, rng)
    assert np.all(residual_after_cpr(kernel, e, 0) == 0)
    narrow = np.var(residual_after_cpr(kernel, e, 50))
    wide = np.var(residual_after_cpr(kernel, e, 100))
    assert narrow < wide


def test_learned_filter_recovers_taps(rng):
    taps = rng.normal(size=21)
    e = EnergySequence.from_symbols(build_qam(16).sample(20000, rng))
    lags = np.arange(-10, 11)
    phase = sum(t * np.roll(e.fluctuation, n) for t, n in zip(taps, lags))
    phase = phase + rng.normal(scale=1e-4, size=phase.size)
    learned = fit_overall_filter(phase, e, 10)
    assert np.linalg.norm(learned.taps[0] - taps) / np.linalg.norm(taps) < 1e-2
    assert learned.response().frequency.size == 1024
    with pytest.raises(ModelError):
        fit_overall_filter(phase, EnergySequence(np.ones(phase.size)), 10)


def test_multiplicative_phase_removes_additive_part(rng):
    tx = build_qam(16).sample(100, rng)
    theta = rng.uniform(-0.5, 0.5, size=100)
    additive = 0.01 * (rng.normal(size=100) + 1j * rng.normal(size=100))
    rx = tx * np.exp(1j * theta) + additive
    np.testing.assert_allclose(multiplicative_phase(rx, tx, additive), theta, atol=1e-12)


# ---------------------------------------------------------------- SNR prediction

def test_eta_calibration_and_prediction():
    link = LinkConfig.scaled()
    cal = EgnCalibration.calibrate([(2.0, 300.0), (1.32, 300.0 - 0.68 * 50.0), (1.0, 250.0)], 2e-5, link)
    assert cal.eta1 == pytest.approx(300.0)
    assert cal.eta2 == pytest.approx(50.0)
    assert cal.eta(2.0) == pytest.approx(cal.eta1)
    assert predict_snr(link, 1.32, cal, in_db=False) == pytest.approx(GnFit(2e-5, cal.eta(1.32)).snr_opt)
    assert predict_snr(link, standardized_moments(build_qam(16)), cal) == pytest.approx(predict_snr(link, 1.32, cal))
    report = windowed_moments(EnergySequence(np.ones(100)), 10)
    assert predict_snr(link, report, cal) == pytest.approx(predict_snr(link, 1.0, cal))


def test_prediction_needs_calibration():
    link = LinkConfig.scaled()
    with pytest.raises(ModelError):
        predict_snr(link, 1.32, None)
    cal = EgnCalibration.calibrate([(2.0, 300.0), (1.32, 270.0)], 2e-5, link)
    with pytest.raises(ModelError):
        predict_snr(link.with_updates(n_spans=2), 1.32, cal)
    with pytest.raises(ModelError):
        EgnCalibration.calibrate([(1.32, 300.0), (1.32, 310.0)], 2e-5)


def test_spm_split_weights_windowed_kurtosis():
    multi = EgnCalibration(2e-5, 300.0, 60.0)
    single = EgnCalibration(2e-5, 100.0, 15.0)
    split = multi.with_split(single)
    assert split.spm_fraction == pytest.approx(0.25)
    assert split.effective_mu4(1.2, 1.6) == pytest.approx(0.25 * 1.2 + 0.75 * 1.6)
