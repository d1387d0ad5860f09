"""
Best-of-N sequence selection, optional threshold acceptance, selection
runs over many blocks and the NLIN-power based SNR gain prediction.

@author: rookielittleblack
@date:   2025-09-02
"""
import time
import numpy as np

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, ModelError
from shapinglab.utils.xutils import linear_to_db, run_parallel
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper
from shapinglab.modules.pas.symbol_frame import MappingKind, SymbolFrame
from shapinglab.modules.perturbation.perturbation_kernel import PerturbationKernel
from shapinglab.modules.selection.sequence_candidates import (
    Candidate, SelectionConfig, draw_payload, generate_candidates, shapers_per_block
)
from shapinglab.modules.selection.selection_metrics import am_metric, get_metric, prepare_kernel


CandidateLike = Union[Candidate, SymbolFrame]


@dataclass
class SelectionResult:
    """
    Outcome of one selection.

    Attributes:
        frame: chosen candidate
        index: chosen position in the candidate list
        metrics: metric per candidate (NaN where threshold mode stopped early)
        accepted: threshold met (always True in best-of-N mode)
    """
    frame: SymbolFrame
    index: int
    metrics: np.ndarray
    accepted: bool = True


def _frame(candidate: CandidateLike) -> SymbolFrame:
    return candidate.frame if isinstance(candidate, Candidate) else candidate


def _resolve(metric: Union[str, Callable[..., float]], kernel: Optional[PerturbationKernel]):
    if callable(metric):
        return metric, kernel
    return get_metric(metric), prepare_kernel(metric, kernel)


def score_candidates(candidates: Sequence[CandidateLike],
                     metric: Union[str, Callable[..., float]],
                     kernel: Optional[PerturbationKernel] = None,
                     window: Optional[int] = None,
                     max_workers: Optional[int] = None) -> np.ndarray:
    """Metric of every candidate, evaluated in parallel."""
    func, kernel = _resolve(metric, kernel)
    values = run_parallel(lambda c: func(_frame(c), kernel=kernel, window=window), list(candidates),
                          max_workers=max_workers, desc="candidates")
    return np.asarray(values, dtype=float)


def select(candidates: Sequence[CandidateLike],
           metric: Union[str, Callable[..., float]],
           kernel: Optional[PerturbationKernel] = None,
           window: Optional[int] = None,
           threshold: Optional[float] = None,
           max_workers: Optional[int] = None) -> SelectionResult:
    """
    Pick the candidate with the smallest metric, ties to the lowest index.

    With a threshold, candidates are scored in order and the first one at or
    below it is taken; if none qualifies the best-of-N choice is returned
    with accepted=False.

    Raises:
        ConfigError: empty candidate list or unknown metric name
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigError("selection needs at least one candidate")
    if threshold is None:
        values = score_candidates(candidates, metric, kernel, window, max_workers)
        index = int(np.argmin(values))
        return SelectionResult(_frame(candidates[index]), index, values)

    func, kernel = _resolve(metric, kernel)
    values = np.full(len(candidates), np.nan)
    for i, candidate in enumerate(candidates):
        values[i] = func(_frame(candidate), kernel=kernel, window=window)
        if values[i] <= threshold:
            return SelectionResult(_frame(candidate), i, values)
    index = int(np.argmin(values))
    return SelectionResult(_frame(candidates[index]), index, values, accepted=False)


def predict_selection_gain(p_nlin_ref: float, p_nlin_sel: float) -> float:
    """
    SNR gain in dB at the optimum power from an NLIN power reduction:
    (1/3) (P_ref[dB] - P_sel[dB]).
    """
    if p_nlin_ref <= 0 or p_nlin_sel <= 0:
        raise ModelError(f"NLIN powers must be positive, got {p_nlin_ref} and {p_nlin_sel}")
    return float(linear_to_db(p_nlin_ref) - linear_to_db(p_nlin_sel)) / 3.0


def nlin_power(frames: Sequence[SymbolFrame], kernel: PerturbationKernel) -> float:
    """Mean per-symbol AM distortion power over an ensemble of frames."""
    total = sum(am_metric(f, kernel) for f in frames)
    count = sum(f.n_symbols * f.n_pol for f in frames)
    return float(total / count)


def concatenate_frames(frames: Sequence[SymbolFrame], **metadata: Any) -> SymbolFrame:
    """Join selection blocks in time; constellation and layout come from the first block."""
    first = frames[0]
    meta = {**first.metadata, "n_blocks": int(sum(f.metadata.get("n_blocks", 0) for f in frames)), **metadata}
    for key in ("selection_index", "selection_label"):
        meta.pop(key, None)
    return SymbolFrame(np.concatenate([f.symbols for f in frames], axis=1),
                       np.concatenate([f.pilot_mask for f in frames]), first.baud_rate, first.constellation, meta)


@dataclass
class SelectionRun:
    """
    Selection over consecutive blocks.

    Attributes:
        selected: concatenated chosen candidates
        reference: concatenated candidates 0 (no selection)
        indices: chosen index per block
        labels: chosen label per block
        payloads: payload bits per block
        metrics: (n_blocks, N_t) metric values
        blocks: chosen frames per block (each keeps its selection label)
    """
    selected: SymbolFrame
    reference: SymbolFrame
    indices: np.ndarray
    labels: np.ndarray
    payloads: List[np.ndarray]
    metrics: np.ndarray
    blocks: List[SymbolFrame] = field(default_factory=list)

    def summary(self) -> Dict[str, float]:
        return {"n_blocks": int(self.indices.size), "mean_selected": float(np.nanmean(np.nanmin(self.metrics, 1))),
                "mean_reference": float(np.nanmean(self.metrics[:, 0]))}


def run_selection(shaper: AmplitudeShaper,
                  config: SelectionConfig,
                  n_blocks: int,
                  kernel: Optional[PerturbationKernel] = None,
                  mapping: Union[str, MappingKind] = MappingKind.DIM1,
                  n_pol: int = 2,
                  baud_rate: float = 32e9,
                  seed: int = 0,
                  max_workers: Optional[int] = None) -> SelectionRun:
    """
    Draw payloads, generate candidates, select per block and join the
    chosen blocks. Deterministic per seed.

    Raises:
        ConfigError: invalid selection settings for this shaper
    """
    if n_blocks < 1:
        raise ConfigError(f"n_blocks must be positive, got {n_blocks}")
    start = time.time()
    n_shapers = shapers_per_block(shaper.D, config.selection_length, n_pol)
    prepared = prepare_kernel(config.metric, kernel)
    func = get_metric(config.metric)
    sign_seeds = np.random.default_rng(seed).integers(0, 2 ** 31 - 1, size=n_blocks)
    xlogger.info("selection start", data={"metric": config.metric, "strategy": config.strategy.value,
                                          "n_candidates": config.n_candidates, "n_blocks": n_blocks,
                                          "shapers_per_block": n_shapers})

    def one_block(b: int):
        payload, blocks = draw_payload(shaper, config, n_shapers, np.random.default_rng([seed, b]))
        candidates = generate_candidates(shaper, payload, config, mapping, n_pol,
                                         sign_source=int(sign_seeds[b]), baud_rate=baud_rate,
                                         blocks=blocks, block_seed=b)
        result = select(candidates, func, prepared, config.window, config.threshold, max_workers=1)
        return payload, candidates[0].frame, result, candidates[result.index].label

    outcomes = run_parallel(one_block, range(n_blocks), max_workers=max_workers, desc="selection blocks")
    chosen = [o[2].frame for o in outcomes]
    run = SelectionRun(
        selected=concatenate_frames(chosen, selection_metric=config.metric),
        reference=concatenate_frames([o[1] for o in outcomes]),
        indices=np.array([o[2].index for o in outcomes]),
        labels=np.array([o[3] for o in outcomes]),
        payloads=[o[0] for o in outcomes],
        metrics=np.stack([o[2].metrics for o in outcomes]),
        blocks=chosen,
    )
    xlogger.success("selection done", data={**run.summary(), "seconds": round(time.time() - start, 3)})
    return run
