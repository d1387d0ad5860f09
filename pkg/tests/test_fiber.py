import numpy as np
import pytest

from shapinglab.utils.xerror_handler import ConfigError, FrameError, ModelError, ReceiverError
from shapinglab.utils.xutils import dbm_to_watt
from shapinglab.modules.constellation import build_qam
from shapinglab.modules.matchers import build_shaper
from shapinglab.modules.pas import SymbolFrame, assemble_frame
from shapinglab.modules.fiber import (
    CprConfig,
    GnFit,
    LinkConfig,
    ase_power,
    fit_gn_model,
    fit_gn_models,
    ign_max_spans,
    ign_snr_bound,
    measure_effective_snr,
    nonlinear_gain,
    nonlinear_step,
    parse_power_grid,
    propagate,
    receiver_dsp,
    recover_phase,
    step_boundaries,
    transmit_waveform,
)
from shapinglab.utils.xconfig import validate_model


def _frames(link, n_blocks=64, seed=0, pilot_rate=0.0):
    shaper = build_shaper("ccdm", 32, [1, 3, 5, 7], 1.5)
    frames = []
    for s in range(link.n_channels):
        _, blocks = shaper.sample(n_blocks, np.random.default_rng(seed + s))
        frames.append(assemble_frame(blocks, "dim1", seed + 100 + s, pilot_rate=pilot_rate,
                                     amplitude_probs=shaper.marginal(), n_pol=link.n_pol,
                                     baud_rate=link.symbol_rate))
    return frames


def _random_frame(n, rng, pilot_rate=0.0):
    c = build_qam(16)
    mask = np.zeros(n, dtype=bool)
    if pilot_rate:
        mask[::int(round(1 / pilot_rate))] = True
    return SymbolFrame(c.sample(n, rng)[None, :], mask, 32e9, c)


# ---------------------------------------------------------------- config

def test_table1_defaults():
    link = LinkConfig.table1()
    assert link.beta2 == pytest.approx(-21.68, abs=0.01)
    assert link.total_length_km == 1600
    assert link.n_channels == 11 and link.center_channel == 5
    assert link.gamma_eff == link.gamma
    assert LinkConfig.table1(dual_pol=True).gamma_eff == pytest.approx(1.37 * 8 / 9)


def test_link_validation_messages():
    with pytest.raises(ConfigError, match="samples_per_symbol"):
        LinkConfig.from_dict({"samples_per_symbol": 8})
    with pytest.raises(ConfigError, match="n_channels"):
        LinkConfig.from_dict({"n_channels": 4, "samples_per_symbol": 8})
    with pytest.raises(ConfigError, match="n_spans"):
        LinkConfig.from_dict({"n_spans": 0})
    with pytest.raises(ConfigError, match="LPA"):
        validate_model({"variant": "LPA", "pilot_rate": 0.0}, CprConfig)


def test_config_hash_tracks_content():
    a, b = LinkConfig.scaled(), LinkConfig.scaled()
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != a.with_updates(n_spans=5).config_hash()


def test_ase_accumulates_over_spans():
    one = ase_power(LinkConfig.scaled(n_spans=1))
    assert one > 0
    assert ase_power(LinkConfig.scaled(n_spans=4)) == pytest.approx(4 * one)
    assert ase_power(LinkConfig.scaled(dual_pol=True)) == pytest.approx(8 * one)
    assert ase_power(LinkConfig.scaled(ase_noise=False)) == 0.0


# ---------------------------------------------------------------- propagation

def test_nonlinear_step_is_phase_only(rng):
    field = rng.normal(size=(2, 256)) + 1j * rng.normal(size=(2, 256))
    out = nonlinear_step(field, 1.37e-3, 5000.0)
    np.testing.assert_allclose(np.abs(out) ** 2, np.abs(field) ** 2, rtol=1e-12)


def test_log_steps_equal_effective_length():
    alpha = 0.2 / (10 * np.log10(np.e)) / 1e3
    z = step_boundaries(80e3, alpha, 10)
    leff = (np.exp(-alpha * z[:-1]) - np.exp(-alpha * z[1:])) / alpha
    np.testing.assert_allclose(leff, leff[0], rtol=1e-9)
    assert z[-1] == 80e3
    np.testing.assert_allclose(step_boundaries(100.0, 0.0, 4), [0, 25, 50, 75, 100])


def test_lossless_noiseless_energy_conservation():
    link = LinkConfig.scaled(n_spans=1, alpha_db_km=0.0, ase_noise=False, span_length_km=20.0)
    tx = transmit_waveform(_frames(link, n_blocks=16), link, power_dbm=6.0)
    rx = propagate(tx, link, seed=0)
    assert rx.energy() == pytest.approx(tx.energy(), rel=1e-9)


def test_linear_roundtrip_evm():
    link = LinkConfig.scaled(gamma=0.0, ase_noise=False)
    frames = _frames(link, n_blocks=32)
    rx = propagate(transmit_waveform(frames, link), link)
    out = receiver_dsp(rx, link, CprConfig(), frames[link.center_channel])
    evm = np.mean(np.abs(out.residuals) ** 2) / np.mean(np.abs(frames[link.center_channel].symbols) ** 2)
    assert 10 * np.log10(evm) < -40
    assert measure_effective_snr(frames[link.center_channel], out.frame).value_db > 40


def test_propagation_is_deterministic():
    link = LinkConfig.scaled(n_spans=1, n_channels=1)
    tx = transmit_waveform(_frames(link, n_blocks=8), link)
    a = propagate(tx, link, seed=3).samples
    b = propagate(tx, link, seed=3).samples
    c = propagate(tx, link, seed=4).samples
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_frame_link_mismatch():
    link = LinkConfig.scaled()
    with pytest.raises(FrameError):
        transmit_waveform(_frames(link, n_blocks=8)[:2], link)


# ---------------------------------------------------------------- receiver

def test_mpr_recovers_constant_phase(rng):
    tx = _random_frame(1000, rng).symbols[0]
    phase = recover_phase(tx * np.exp(0.3j), tx, np.zeros(1000, dtype=bool), CprConfig())
    np.testing.assert_allclose(phase, 0.3, atol=1e-12)


def test_moving_average_zero_window_is_genie(rng):
    tx = _random_frame(500, rng).symbols[0]
    theta = rng.normal(scale=0.1, size=500)
    est = recover_phase(tx * np.exp(1j * theta), tx, np.zeros(500, dtype=bool),
                        CprConfig(variant="MovingAverage", n_cpr=0))
    np.testing.assert_allclose(est, theta, atol=1e-12)


def test_lpa_interpolates_linear_phase(rng):
    frame = _random_frame(1000, rng, pilot_rate=0.025)
    tx = frame.symbols[0]
    ramp = np.linspace(0.0, 0.5, 1000)
    cpr = CprConfig(variant="LPA", pilot_rate=0.025)
    est = recover_phase(tx * np.exp(1j * ramp), tx, frame.pilot_mask, cpr)
    last = frame.pilot_indices[-1]
    np.testing.assert_allclose(est[:last + 1], ramp[:last + 1], atol=1e-12)
    with pytest.raises(ReceiverError):
        recover_phase(tx, tx, np.eye(1, 1000, dtype=bool)[0], cpr)


def test_snr_capped_for_identical_frames(rng):
    frame = _random_frame(200, rng)
    est = measure_effective_snr(frame, frame)
    assert est.capped and est.value_db == 100.0


def test_snr_recovers_injected_noise(rng):
    tx = _random_frame(200000, rng)
    sigma2 = 0.01
    noise = rng.normal(scale=np.sqrt(sigma2 / 2), size=(2, 200000))
    rx = tx.with_symbols(tx.symbols + noise[0] + 1j * noise[1])
    est = measure_effective_snr(tx, rx, n_resamples=50)
    expected = 10 * np.log10(np.mean(np.abs(tx.symbols) ** 2) / sigma2)
    assert est.value_db == pytest.approx(expected, abs=0.05)
    assert est.ci_db[0] < est.value_db < est.ci_db[1]


# ---------------------------------------------------------------- GN analysis

def _synthetic(p_ase, eta, powers_dbm):
    return GnFit(p_ase, eta).snr_db(powers_dbm)


def test_gn_fit_recovers_parameters():
    powers = np.arange(-4.0, 4.5, 0.5)
    fit = fit_gn_model(powers, _synthetic(2e-5, 300.0, powers))
    assert fit.p_ase == pytest.approx(2e-5, rel=1e-6)
    assert fit.eta == pytest.approx(300.0, rel=1e-6)
    assert fit.snr(fit.p_opt) == pytest.approx(fit.snr_opt, rel=1e-12)


def test_gain_three_ways_agree():
    powers = np.arange(-4.0, 4.5, 1.0)
    fits = fit_gn_models({"ref": (powers, _synthetic(2e-5, 300.0, powers)),
                          "sh": (powers, _synthetic(2e-5, 330.0, powers) + 0.01)})
    gains = nonlinear_gain(fits["ref"], fits["sh"])
    assert gains["p_opt"] == pytest.approx(gains["eta"], abs=1e-9)
    assert gains["snr_opt"] == pytest.approx(gains["eta"], abs=1e-9)
    same = nonlinear_gain(fits["ref"], fits["ref"])
    assert same["eta"] == 0.0


def test_gn_fit_errors():
    with pytest.raises(ConfigError):
        fit_gn_model([0.0, 1.0], [10.0, 11.0])
    with pytest.raises(ModelError):
        fit_gn_model([0.0, 1.0, 2.0], [10.0, 8.0, 4.0])


def test_ign_bound():
    p1, eta1 = 1e-6, 10.0
    assert ign_snr_bound(p1, eta1, 20) == pytest.approx((1 / 60) * (4 / (p1 ** 2 * eta1)) ** (1 / 3))
    n = ign_max_spans(p1, eta1, 10 * np.log10(ign_snr_bound(p1, eta1, 20)) - 1e-9)
    assert n == 20


def test_power_grid_parsing():
    grid = parse_power_grid("-4:0.5:4")
    assert grid.size == 17 and grid[0] == -4.0 and grid[-1] == 4.0
    assert parse_power_grid("0,1,2").tolist() == [0.0, 1.0, 2.0]
    with pytest.raises(ConfigError):
        parse_power_grid("a:b")
    assert dbm_to_watt(0.0) == pytest.approx(1e-3)
