import numpy as np
import pytest

from scipy.stats import spearmanr

from shapinglab.utils.xerror_handler import ConfigError, FrameError
from shapinglab.modules.constellation import build_qam
from shapinglab.modules.fiber import LinkConfig
from shapinglab.modules.matchers import CcdmShaper, build_shaper, ccdm_spec
from shapinglab.modules.pas import SymbolFrame, assemble_frame
from shapinglab.modules.perturbation import (
    PerturbationKernel, additive_distortion, coefficient_set, compute_coefficients, quantized_count
)
from shapinglab.modules.selection import (
    SelectionConfig,
    complexity_report,
    full_count,
    generate_candidates,
    metric_am,
    metric_edi,
    metric_lsas,
    predict_selection_gain,
    prepare_kernel,
    recover_payload,
    run_selection,
    score_candidates,
    select,
    selected_count,
    shapers_per_block,
)
from shapinglab.modules.others.xregistry import METRIC_REGISTRY


def _shaper():
    return CcdmShaper(ccdm_spec([1, 3, 5, 7], [6, 6, 2, 2]))


def _payload(shaper, config, rng, n_pol=2):
    n = shapers_per_block(shaper.D, config.selection_length, n_pol)
    width = shaper.k_in - config.nu if config.strategy.value == "flip" else shaper.k_in
    return rng.integers(0, 2, size=(n, width), dtype=np.uint8)


def _frame(symbols, constellation=None):
    symbols = np.atleast_2d(symbols)
    return SymbolFrame(symbols, np.zeros(symbols.shape[1], dtype=bool), 32e9, constellation or build_qam(4))


def _kernel(dual_pol=False, gamma=None):
    updates = {"n_channels": 1, "n_spans": 1, "dual_pol": dual_pol}
    if gamma is not None:
        updates["gamma"] = gamma
    return compute_coefficients(LinkConfig.scaled(**updates), w_mem=4, use_cache=False)


# ---------------------------------------------------------------- candidates

def test_single_candidate_is_the_plain_frame(rng):
    shaper = _shaper()
    config = SelectionConfig(nu=2, n_candidates=1, selection_length=16)
    payload = _payload(shaper, config, rng)
    [candidate] = generate_candidates(shaper, payload, config, sign_source=5)
    inputs = np.concatenate([np.zeros((4, 2), dtype=np.uint8), payload], axis=1)
    plain = assemble_frame(shaper.encode_many(inputs), "dim1", 5, amplitude_probs=shaper.marginal(),
                           amplitude_levels=shaper.amplitude_levels)
    assert candidate.index == 0 and candidate.label == 0
    np.testing.assert_array_equal(candidate.frame.symbols, plain.symbols)


def test_flip_bits_give_sixteen_decodable_candidates(rng):
    shaper = _shaper()
    config = SelectionConfig(nu=2, n_candidates=16, selection_length=16)
    payload = _payload(shaper, config, rng)
    candidates = generate_candidates(shaper, payload, config, sign_source=3)
    assert [c.label for c in candidates] == list(range(16))
    symbols = {c.frame.symbols.tobytes() for c in candidates}
    assert len(symbols) == 16
    for c in candidates:
        np.testing.assert_array_equal(recover_payload(c.frame, shaper, config), payload)

    with pytest.raises(ConfigError):
        generate_candidates(shaper, payload, SelectionConfig(nu=2, n_candidates=17, selection_length=16))


def test_flip_candidates_are_deterministic(rng):
    shaper = _shaper()
    config = SelectionConfig(nu=3, n_candidates=5, selection_length=32, seed=11)
    payload = _payload(shaper, config, rng)
    first = generate_candidates(shaper, payload, config, block_seed=2)
    second = generate_candidates(shaper, payload, config, block_seed=2)
    assert [c.label for c in first] == [c.label for c in second]
    assert first[0].label == 0 and len({c.label for c in first}) == 5
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.frame.symbols, b.frame.symbols)


def test_interleaving_permutes_one_multiset(rng):
    shaper = _shaper()
    config = SelectionConfig(strategy="interleave", n_candidates=6, selection_length=16, seed=4)
    payload = _payload(shaper, config, rng)
    candidates = generate_candidates(shaper, payload, config)
    reference = np.sort(candidates[0].frame.symbols.ravel())
    for c in candidates:
        np.testing.assert_array_equal(np.sort(c.frame.symbols.ravel()), reference)
        np.testing.assert_array_equal(recover_payload(c.frame, shaper, config), payload)
    assert len({c.frame.symbols.tobytes() for c in candidates}) == 6


def test_flipping_needs_a_matcher(rng):
    shaper = build_shaper("iid", 16, [1, 3, 5, 7], 1.5)
    with pytest.raises(ConfigError):
        generate_candidates(shaper, np.zeros((4, 0), dtype=np.uint8), SelectionConfig(selection_length=16))


def test_recover_needs_label(rng):
    shaper = _shaper()
    config = SelectionConfig(nu=1, n_candidates=2, selection_length=16)
    candidate = generate_candidates(shaper, _payload(shaper, config, rng), config)[1]
    relabeled = candidate.frame.with_symbols(candidate.frame.symbols, selection_label=0)
    with pytest.raises(FrameError):
        recover_payload(relabeled, shaper, config)
    bare = SymbolFrame(candidate.frame.symbols, candidate.frame.pilot_mask, 32e9, candidate.frame.constellation,
                       {"D": 16, "mapping": "dim1"})
    with pytest.raises(FrameError):
        recover_payload(bare, shaper, config)


# ---------------------------------------------------------------- metrics

def test_metrics_are_registered():
    for name in ("edi", "lsas", "am", "am-s", "am-q"):
        assert name in METRIC_REGISTRY


def test_edi_metric():
    qpsk = build_qam(4)
    assert metric_edi(_frame(qpsk.sample(64, np.random.default_rng(0)), qpsk), window=8) == pytest.approx(0, abs=1e-12)
    low, high = np.sqrt(0.2), np.sqrt(1.8)
    flat = np.tile([low, high], 32)
    burst = np.concatenate([np.full(32, low), np.full(32, high)])
    assert metric_edi(_frame(flat), window=8) == pytest.approx(0, abs=1e-12)
    assert metric_edi(_frame(burst), window=8) > 0.1


def test_lsas_ignores_signs_and_am_does_not(rng):
    kernel = _kernel()
    qpsk = build_qam(4)
    assert metric_lsas(_frame(qpsk.sample(128, rng), qpsk), kernel) == pytest.approx(0, abs=1e-20)

    c = build_qam(16)
    x = c.sample(128, rng)
    flipped = x.copy()
    flipped[5] = -flipped[5]
    assert metric_lsas(_frame(x, c), kernel) == metric_lsas(_frame(flipped, c), kernel)
    assert metric_am(_frame(x, c), kernel) != pytest.approx(metric_am(_frame(flipped, c), kernel), rel=1e-9)


def test_am_metric_trivial_cases(rng):
    c = build_qam(16)
    x = c.sample(64, rng)
    assert metric_am(_frame(x, c), _kernel(gamma=0.0)) == 0.0

    kernel = _kernel()
    qpsk = build_qam(4)
    q = qpsk.sample(64, rng)
    expected = np.sum(np.abs(additive_distortion(kernel, q[None, :])) ** 2)
    assert metric_am(_frame(q, qpsk), kernel) == pytest.approx(expected, rel=1e-9)

    with pytest.raises(FrameError):
        metric_am(_frame(np.stack([x, x]), c), kernel)
    with pytest.raises(ConfigError):
        metric_am(_frame(x, c))


def test_am_metric_matches_brute_force(rng):
    w = 1
    coeffs = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    coeffs = coeffs + coeffs.T
    kernel = PerturbationKernel(gamma=1.3, energy=0.2, coefficients=coeffs, memory=w)
    c = build_qam(16)
    x = c.sample(8, rng)
    n_sym = x.size
    s = kernel.scale
    h = {n: coeffs[w, w - n].real for n in range(-w, w + 1)}
    e = 2.0 * np.abs(x) ** 2
    expected = 0.0
    for k in range(n_sym):
        dx = sum(coeffs[m + w, n + w] * x[(k + m) % n_sym] * np.conj(x[(k + m + n) % n_sym]) * x[(k + n) % n_sym]
                 for m, n in coefficient_set(w, "full"))
        dx = 1j * s * dx
        conv = sum(h[n] * e[(k - n) % n_sym] for n in h)
        conv_fluct = sum(h[n] * (e[(k - n) % n_sym] - 2.0) for n in h)
        additive = dx - 1j * s * x[k] * conv
        expected += abs(1j * s * x[k] * conv_fluct + additive) ** 2
    assert metric_am(_frame(x, c), kernel) == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------- selection

def test_select_picks_minimum_with_lowest_index_ties(rng):
    c = build_qam(16)
    frames = [_frame(c.sample(32, rng), c) for _ in range(5)]
    assert select(frames[:1], "am", _kernel()).index == 0
    assert select(frames, lambda f, kernel=None, window=None: 1.0).index == 0

    values = [3.0, 1.0, 2.0, 1.0, 5.0]
    by_frame = {id(f): v for f, v in zip(frames, values)}

    def metric(frame, kernel=None, window=None):
        return by_frame[id(frame)]

    result = select(frames, metric)
    assert result.index == 1 and result.frame is frames[1]
    assert result.metrics[result.index] <= result.metrics.min()

    early = select(frames, metric, threshold=2.5)
    assert early.index == 1 and early.accepted and np.isnan(early.metrics[2:]).all()
    strict = select(frames, metric, threshold=0.5)
    assert strict.index == 1 and not strict.accepted

    with pytest.raises(ConfigError):
        select([], metric)


def test_selection_gain_prediction():
    assert predict_selection_gain(1.0, 1.0) == 0.0
    assert predict_selection_gain(2.0, 1.0) == pytest.approx(10 * np.log10(2.0) / 3.0)


def test_run_selection_never_worse_than_reference():
    kernel = _kernel(dual_pol=True)
    shaper = _shaper()
    config = SelectionConfig(nu=1, n_candidates=4, metric="am", selection_length=16)
    run = run_selection(shaper, config, n_blocks=6, kernel=kernel, seed=9)
    assert run.metrics.shape == (6, 4)
    assert np.all(run.metrics[np.arange(6), run.indices] <= run.metrics[:, 0])
    assert run.selected.n_symbols == 6 * 16
    for frame, payload in zip(run.blocks, run.payloads):
        np.testing.assert_array_equal(recover_payload(frame, shaper, config), payload)

    single = run_selection(shaper, config.model_copy(update={"n_candidates": 1}), n_blocks=6, kernel=kernel, seed=9)
    np.testing.assert_allclose(single.metrics[:, 0], run.metrics[:, 0])
    assert run.summary()["mean_selected"] <= single.summary()["mean_selected"]


def test_mean_selected_am_falls_with_more_candidates():
    kernel = _kernel(dual_pol=True)
    shaper = _shaper()
    base = SelectionConfig(nu=2, metric="am", selection_length=32)
    for seed in (1, 2, 3):
        means = [run_selection(shaper, base.model_copy(update={"n_candidates": n}), n_blocks=4, kernel=kernel,
                               seed=seed).summary()["mean_selected"] for n in (1, 2, 4, 16)]
        assert np.all(np.diff(means) <= 1e-12 * means[0])
        assert means[-1] < means[0]


def test_quantized_am_ranks_candidates_like_full_am(rng):
    link = LinkConfig.scaled(n_channels=1, dual_pol=True)
    full = compute_coefficients(link, include_xpm=False, use_cache=False)
    quantized = prepare_kernel("am-q", full)
    shaper = _shaper()
    config = SelectionConfig(nu=2, n_candidates=16, selection_length=64)
    exact, approx = [], []
    for b in range(5):
        candidates = generate_candidates(shaper, _payload(shaper, config, rng), config, sign_source=b, block_seed=b)
        exact.append(score_candidates(candidates, "am", full, max_workers=1))
        approx.append(score_candidates(candidates, "am-q", quantized, max_workers=1))
    # pooled over blocks, a single 16-candidate block varies more
    rho, _ = spearmanr(np.concatenate(exact), np.concatenate(approx))
    assert rho > 0.9


# ---------------------------------------------------------------- complexity

def test_complexity_formulas():
    assert full_count(1) == 5
    assert selected_count(2) == 13
    assert quantized_count(111) == 22
    for w in range(0, 13):
        assert full_count(w) == len(coefficient_set(w, "full"))
        assert selected_count(w) == len(coefficient_set(w, "selected"))
    for w in range(0, 501):
        report = complexity_report(w, 16)
        assert report.n_quantized <= report.n_selected <= report.n_full
        assert report.cost("quantized") == 16 * (2 + quantized_count(w))
    with pytest.raises(ConfigError):
        complexity_report(-1)
