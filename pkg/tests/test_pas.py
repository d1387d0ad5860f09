from fractions import Fraction

import numpy as np
import pytest

from shapinglab.utils.xerror_handler import ConfigError, FrameError
from shapinglab.modules.matchers import build_shaper
from shapinglab.modules.pas import (
    MappingKind,
    SymbolFrame,
    aggregated_energy,
    assemble_frame,
    disassemble_frame,
    map_amplitudes,
    pilot_layout,
    shaping_rate,
)


BLOCKS_D4 = np.array([[1, 3, 5, 7],
                      [3, 3, 1, 1],
                      [5, 1, 1, 5],
                      [7, 7, 7, 1]])


def test_dim1_layout_block_fills_component():
    signs = np.zeros((4, 4), dtype=np.uint8)
    frame = assemble_frame(BLOCKS_D4, "1d", signs, pilot_rate=0.0)
    scale = frame.constellation.scale
    np.testing.assert_allclose(frame.x.real / scale, BLOCKS_D4[0])
    np.testing.assert_allclose(frame.x.imag / scale, BLOCKS_D4[1])
    np.testing.assert_allclose(frame.y.real / scale, BLOCKS_D4[2])
    np.testing.assert_allclose(frame.y.imag / scale, BLOCKS_D4[3])
    assert not frame.pilot_mask.any()
    assert frame.n_symbols == 4 and frame.n_pol == 2


def test_dim2_and_dim4_pairing():
    comps2 = map_amplitudes(BLOCKS_D4, MappingKind.DIM2)
    # x-pol: block 0 then block 1, consecutive (i, q) pairs
    assert comps2[0].tolist() == [1, 5, 3, 1]
    assert comps2[1].tolist() == [3, 7, 3, 1]
    comps4 = map_amplitudes(BLOCKS_D4, MappingKind.DIM4)
    assert comps4[:, 0].tolist() == [1, 3, 5, 7]
    assert comps4[:, 1].tolist() == [3, 3, 1, 1]


@pytest.mark.parametrize("mapping", ["dim1", "dim2", "dim4"])
def test_disassemble_recovers_blocks_and_signs(mapping, rng):
    shaper = build_shaper("ccdm", 16, [1, 3, 5, 7], 1.5)
    _, blocks = shaper.sample(8, rng)
    frame = assemble_frame(blocks, mapping, 11, pilot_rate=0.05, amplitude_probs=shaper.marginal())
    recovered, signs = disassemble_frame(frame)
    np.testing.assert_array_equal(recovered, blocks)
    expected_signs = np.random.default_rng(11).integers(0, 2, size=signs.shape, dtype=np.uint8)
    np.testing.assert_array_equal(signs, expected_signs)


def test_indivisible_block_length_rejected():
    blocks = np.ones((4, 6), dtype=int)
    with pytest.raises(FrameError):
        assemble_frame(blocks, "dim4", 0)
    with pytest.raises(FrameError):
        assemble_frame(np.ones((4, 5), dtype=int), "dim2", 0)
    with pytest.raises(FrameError):
        assemble_frame(blocks, "dim4", 0, n_pol=1)


def test_mapping_aliases():
    assert MappingKind.parse("2d") is MappingKind.DIM2
    with pytest.raises(ConfigError):
        MappingKind.parse("3d")


def test_pilot_grid():
    mask = pilot_layout(400, 0.01)
    assert mask.size == 405
    assert np.flatnonzero(mask).tolist() == [0, 100, 200, 300, 400]
    assert not pilot_layout(50, 0.0).any()
    with pytest.raises(FrameError):
        pilot_layout(100, 0.2)


def test_pilots_drawn_from_frame_constellation(rng):
    shaper = build_shaper("ess", 8, [1, 3, 5, 7], 1.5)
    _, blocks = shaper.sample(40, rng)
    frame = assemble_frame(blocks, "dim1", 3, pilot_rate=0.025, amplitude_probs=shaper.marginal())
    pilots = frame.symbols[:, frame.pilot_mask].ravel()
    assert pilots.size > 0
    dist = np.min(np.abs(pilots[:, None] - frame.constellation.points[None, :]), axis=1)
    assert np.max(dist) < 1e-12
    assert frame.data_symbols().shape == (2, 80)
    assert np.all(np.abs(frame.symbols) > 0)


def test_same_seed_identical_frames(rng):
    shaper = build_shaper("ccdm", 12, [1, 3, 5, 7], 1.5)
    _, blocks = shaper.sample(8, rng)
    a = assemble_frame(blocks, "dim1", 5, pilot_rate=0.05)
    b = assemble_frame(blocks, "dim1", 5, pilot_rate=0.05)
    assert a.to_bytes() == b.to_bytes()
    c = assemble_frame(blocks, "dim1", 6, pilot_rate=0.05)
    assert not np.array_equal(a.symbols, c.symbols)


def test_frame_file_roundtrip(tmp_path, rng):
    shaper = build_shaper("ccdm", 8, [1, 3], 0.5)
    _, blocks = shaper.sample(4, rng)
    frame = assemble_frame(blocks, "dim2", 9, pilot_rate=0.1, baud_rate=16e9)
    path = frame.write(str(tmp_path / "frame.slfr"))
    loaded = SymbolFrame.read(path)
    np.testing.assert_array_equal(loaded.symbols, frame.symbols)
    np.testing.assert_array_equal(loaded.pilot_mask, frame.pilot_mask)
    assert loaded.baud_rate == 16e9
    assert loaded.mapping is MappingKind.DIM2
    np.testing.assert_array_equal(SymbolFrame.from_bytes(frame.to_bytes()).symbols, frame.symbols)


def test_mean_energy_per_polarization(rng):
    shaper = build_shaper("ccdm", 32, [1, 3, 5, 7], 1.5)
    _, blocks = shaper.sample(64, rng)
    frame = assemble_frame(blocks, "dim1", 1, amplitude_probs=shaper.marginal())
    energy = np.mean(np.abs(frame.symbols) ** 2, axis=1)
    np.testing.assert_allclose(energy, 1.0, rtol=1e-9)


def test_shaping_rate_examples():
    assert shaping_rate(434, 2, 180) == Fraction(12, 5)
    assert shaping_rate(90, 0, 60) == Fraction(3, 2)
    assert shaping_rate(7, 7, 4) == 0
    with pytest.raises(ConfigError):
        shaping_rate(4, 5, 8)
    with pytest.raises(ConfigError):
        shaping_rate(4, -1, 8)


def test_aggregated_energy_constant_modulus():
    frame = assemble_frame(np.ones((4, 8), dtype=int), "dim1", 2)
    agg, single = aggregated_energy(frame, pol=0)
    assert not single
    np.testing.assert_allclose(agg.values, 3.0)
    assert len(agg) == frame.n_symbols


def test_aggregated_energy_equal_polarizations(rng):
    shaper = build_shaper("ccdm", 8, [1, 3, 5, 7], 1.5)
    _, half = shaper.sample(2, rng)
    blocks = np.concatenate([half, half])
    frame = assemble_frame(blocks, "dim1", 4)
    agg, _ = aggregated_energy(frame, pol=1)
    ex = np.abs(frame.x) ** 2 / np.mean(np.abs(frame.x) ** 2)
    np.testing.assert_allclose(agg.values, 3.0 * ex)


def test_aggregated_energy_single_pol_flag(rng):
    frame = assemble_frame(BLOCKS_D4[:2], "dim1", 0, n_pol=1)
    agg, single = aggregated_energy(frame)
    assert single
    assert agg.values.mean() == pytest.approx(2.0)
