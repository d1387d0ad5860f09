import math

import numpy as np
import pytest

from shapinglab.utils.xerror_handler import ConstellationError, FrameError
from shapinglab.modules.constellation import (
    air_bmd,
    air_bmd_quadrature,
    build_qam,
    entropy,
    linear_shaping_gain,
    mb_distribution,
    mb_qam,
    moments_from_samples,
    q_max,
    qam_from_amplitudes,
    standardized_moments,
    system_quality_factor,
    total_shaping_gain,
)


def test_qpsk_is_constant_modulus():
    c = build_qam(4)
    assert c.size == 4
    assert standardized_moments(c).mu4 == pytest.approx(1.0, abs=1e-12)


def test_uniform_16qam_fourth_moment():
    assert standardized_moments(build_qam(16)).mu4 == pytest.approx(1.32, abs=1e-12)


def test_build_qam_normalizes_and_is_symmetric():
    c = build_qam(64)
    assert c.mean_energy == pytest.approx(1.0, abs=1e-12)
    assert abs(c.mean) < 1e-12
    assert np.allclose(np.sort_complex(c.points), np.sort_complex(-c.points))
    assert np.allclose(np.sort_complex(c.points), np.sort_complex(np.conj(c.points)))


def test_build_qam_rejects_unsupported_order():
    with pytest.raises(ConstellationError):
        build_qam(32)


def test_gray_labels_differ_in_one_bit_between_neighbours():
    c = build_qam(16)
    d = np.abs(c.points[:, None] - c.points[None, :])
    dmin = d[d > 0].min()
    for i, j in zip(*np.nonzero(np.isclose(d, dmin))):
        assert bin(int(c.bit_labels[i]) ^ int(c.bit_labels[j])).count("1") == 1


def test_mb_distribution_limits():
    assert np.allclose(mb_distribution([1, 3, 5, 7], 0.0), 0.25)
    p = mb_distribution([1, 3, 5, 7], 1e3)
    assert p[0] == pytest.approx(1.0)
    with pytest.raises(ConstellationError):
        mb_distribution([1, 3], -0.1)


def test_mb_distribution_matches_direct_formula():
    levels = np.arange(-7, 8, 2)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    p = mb_distribution(pts, 0.03)
    w = np.array([math.exp(-0.03 * abs(x) ** 2) for x in pts])
    assert np.allclose(p, w / w.sum(), rtol=1e-12)


def test_mb_qam_is_product_of_pam_distributions():
    c = mb_qam(64, 0.03)
    assert c.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert c.mean_energy == pytest.approx(1.0, abs=1e-12)
    assert entropy(c) < 6.0


def test_entropy_of_uniform_256qam():
    assert entropy(build_qam(256)) == pytest.approx(8.0, abs=1e-12)


def test_shaped_moments_exceed_uniform():
    uni = standardized_moments(build_qam(64))
    mb = standardized_moments(mb_qam(64, 0.03))
    assert mb.mu4 > uni.mu4
    assert mb.mu6 > mb.mu4 >= 1.0


def test_linear_shaping_gain_mb_vs_uniform():
    assert linear_shaping_gain(build_qam(64), build_qam(64)) == pytest.approx(0.0, abs=1e-12)
    assert linear_shaping_gain(mb_qam(64, 0.03), build_qam(64)) == pytest.approx(1.18, abs=0.05)


def test_quality_factor_peaks_at_optimum_power():
    c = build_qam(16)
    p_ase, eta = 1e-5, 1e3
    p_opt = (p_ase / (2 * eta)) ** (1 / 3)
    grid = p_opt * np.array([0.5, 0.8, 1.0, 1.25, 2.0])
    q = system_quality_factor(c, p_ase, eta, grid)
    assert int(np.argmax(q)) == 2
    assert q[2] == pytest.approx(q_max(c, p_ase, eta), rel=1e-9)


def test_total_gain_partition_adds_up():
    g_lin, g_nl, total = total_shaping_gain(mb_qam(64, 0.03), build_qam(64), eta_sh=1.1, eta_ref=1.0)
    assert total == pytest.approx(g_lin + g_nl, abs=1e-12)
    assert g_nl == pytest.approx(10 * math.log10(1 / 1.1) / 3, abs=1e-12)


def test_moments_from_samples_has_ci(rng):
    c = build_qam(16)
    report = moments_from_samples(c.sample(20000, rng), n_resamples=50)
    assert report.mu4_ci[0] <= report.mu4 <= report.mu4_ci[1]
    assert report.mu4 == pytest.approx(1.32, abs=0.02)


def test_air_bmd_matches_quadrature(rng):
    c = build_qam(16)
    sigma2 = 0.1
    x = c.sample(40000, rng)
    y = x + math.sqrt(sigma2 / 2) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    mc = air_bmd(x, y, c, noise_var=sigma2)
    ref = air_bmd_quadrature(c, sigma2)
    assert 0 < ref <= 4.0
    assert abs(mc.value - ref) < 5 * mc.stderr + 0.02


def test_air_bmd_rejects_empty_and_mismatch():
    c = build_qam(4)
    with pytest.raises(FrameError):
        air_bmd(np.array([]), np.array([]), c)
    with pytest.raises(FrameError):
        air_bmd(c.points, c.points[:2], c)


def test_air_bmd_pilot_rate_scales_rate(rng):
    c = build_qam(16)
    x = c.sample(5000, rng)
    full = air_bmd(x, x, c, noise_var=1e-3)
    reduced = air_bmd(x, x, c, noise_var=1e-3, pilot_rate=0.1)
    assert reduced.value == pytest.approx(0.9 * full.value, rel=1e-12)


def test_qam_from_amplitudes_validates_length():
    with pytest.raises(ConstellationError):
        qam_from_amplitudes(64, [0.5, 0.5])


# ---------------------------------------------------------------- invariances

def test_scaling_leaves_shape_figures_unchanged(rng):
    shaped, ref = mb_qam(64, 0.03), build_qam(64)
    base = standardized_moments(shaped)
    gain = linear_shaping_gain(shaped, ref)
    for k in rng.uniform(0.05, 20.0, size=6):
        scaled = shaped.scaled(k)
        report = standardized_moments(scaled)
        assert report.mu4 == pytest.approx(base.mu4, rel=1e-12)
        assert report.mu6 == pytest.approx(base.mu6, rel=1e-12)
        assert entropy(scaled) == pytest.approx(entropy(shaped), rel=1e-12)
        assert linear_shaping_gain(scaled, ref) == pytest.approx(gain, abs=1e-9)
        assert linear_shaping_gain(scaled, ref.scaled(1.0 / k)) == pytest.approx(gain, abs=1e-9)


def test_mb_entropy_and_energy_fall_with_lambda():
    amps = np.array([1.0, 3.0, 5.0, 7.0])
    lams = np.linspace(0.0, 0.3, 31)
    energies = [float(np.sum(mb_distribution(amps, lam) * amps ** 2)) for lam in lams]
    entropies = [entropy(mb_qam(64, lam)) for lam in lams]
    assert np.all(np.diff(energies) <= 1e-12)
    assert np.all(np.diff(entropies) <= 1e-12)
    assert entropies[0] == pytest.approx(6.0, abs=1e-12)
    assert energies[-1] < energies[0]


def test_air_bmd_never_exceeds_entropy(rng):
    for _ in range(5):
        c = build_qam(16, rng.dirichlet(np.ones(16)))
        x = c.sample(2000, rng)
        sigma = rng.uniform(0.01, 1.0)
        y = x + sigma * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
        assert air_bmd(x, y, c).value <= entropy(c) + 1e-12
        assert air_bmd(x, rng.permutation(y), c, noise_var=sigma ** 2).value <= entropy(c) + 1e-12


@pytest.mark.parametrize("M", [16, 64, 256])
def test_pas_qam_has_zero_mean(M, rng):
    m = int(math.isqrt(M))
    for _ in range(4):
        c = qam_from_amplitudes(M, rng.dirichlet(np.ones(m // 2)))
        assert abs(c.mean) < 1e-15
    assert abs(mb_qam(M, 0.05).mean) < 1e-15
