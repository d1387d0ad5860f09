"""
Candidate generation for sequence selection.

Two strategies produce N_t candidate frames for one selection block:

- `flip`: nu redundant flipping bits are prepended to every shaper input;
  the two shapers of an I/Q pair share one nu-bit pattern, so a selection
  block of S shapers offers 2^(nu * S / 2) patterns. Candidate 0 uses the
  all-zero pattern.
- `interleave`: a fixed pseudo-random symbol permutation per candidate index
  (index 0 is the identity); the payload rides unchanged.

The candidate index travels out of band in the frame metadata.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from enum import Enum
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union
from pydantic import BaseModel, ConfigDict, Field

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, FrameError
from shapinglab.utils.xutils import int_to_bits, bits_to_int
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper
from shapinglab.modules.pas.symbol_frame import MappingKind, SymbolFrame, assemble_frame, disassemble_frame


DEFAULT_SELECTION_LENGTH = 256
MAX_REDRAWS = 64


class CandidateStrategy(str, Enum):
    FLIP = "flip"
    INTERLEAVE = "interleave"


class SelectionConfig(BaseModel):
    """
    Sequence-selection settings.

    Attributes:
        strategy: flip (redundant flipping bits) or interleave (symbol permutations)
        nu: flipping bits per I/Q shaper pair
        n_candidates: N_t
        metric: METRIC_REGISTRY name (edi, lsas, am, am-s, am-q)
        window: EDI window in symbols
        threshold: accept the first candidate at or below this value (best-of-N when None)
        selection_length: symbols per polarization in one selection block
        seed: candidate-pattern and permutation seed
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: CandidateStrategy = CandidateStrategy.FLIP
    nu: int = Field(2, ge=0, le=16)
    n_candidates: int = Field(16, ge=1)
    metric: str = "am"
    window: int = Field(111, ge=1)
    threshold: Optional[float] = None
    selection_length: int = Field(DEFAULT_SELECTION_LENGTH, ge=1)
    seed: int = 0


@dataclass(eq=False)
class Candidate:
    """
    One candidate frame.

    Attributes:
        index: position in the candidate list (the transmitted side information)
        label: flip pattern (flip) or permutation id (interleave)
        frame: candidate symbols
    """
    index: int
    label: int
    frame: SymbolFrame


def groups_per_block(D: int, selection_length: int) -> int:
    """Shaper groups per selection block; each group fills D symbols per polarization."""
    return max(1, int(round(selection_length / D)))


def shapers_per_block(D: int, selection_length: int, n_pol: int) -> int:
    return 2 * n_pol * groups_per_block(D, selection_length)


def candidate_space(config: SelectionConfig, n_shapers: int) -> Optional[int]:
    """Number of distinct flip patterns, None for interleaving."""
    if config.strategy == CandidateStrategy.INTERLEAVE:
        return None
    return 2 ** (config.nu * (n_shapers // 2))


def pair_patterns(label: int, nu: int, n_pairs: int) -> np.ndarray:
    """(n_pairs, nu) flip bits; pair p takes bits nu*p .. nu*p + nu - 1 of the label, MSB first."""
    mask = (1 << nu) - 1
    if nu == 0:
        return np.zeros((n_pairs, 0), dtype=np.uint8)
    return np.stack([int_to_bits((label >> (nu * p)) & mask, nu) for p in range(n_pairs)])


def _draw_label(rng: np.random.Generator, space: int) -> int:
    if space <= 2 ** 62:
        return int(rng.integers(1, space))
    # space is a power of two beyond int64
    return bits_to_int(rng.integers(0, 2, size=space.bit_length() - 1)) or 1


def candidate_labels(config: SelectionConfig, n_shapers: int, block_seed: int = 0) -> List[int]:
    """
    Labels of the N_t candidates, label 0 first.

    Raises:
        ConfigError: N_t exceeds the flip-pattern space
    """
    space = candidate_space(config, n_shapers)
    n = config.n_candidates
    if space is None:
        return list(range(n))
    if n > space:
        raise ConfigError(f"{n} candidates requested but nu={config.nu} over {n_shapers // 2} shaper pairs "
                          f"gives only {space} patterns")
    if n == space:
        return list(range(space))
    rng = np.random.default_rng([config.seed, block_seed])
    chosen = {0}
    while len(chosen) < n:
        chosen.add(_draw_label(rng, space))
    return [0] + sorted(chosen - {0})


def permutation(label: int, n: int, seed: int) -> np.ndarray:
    """Symbol permutation of one interleaving label (identity for label 0)."""
    if label == 0:
        return np.arange(n)
    return np.random.default_rng([seed, label]).permutation(n)


def payload_width(shaper: AmplitudeShaper, config: SelectionConfig) -> int:
    """Payload bits per shaper block once the flipping bits are reserved."""
    if config.strategy == CandidateStrategy.INTERLEAVE:
        return shaper.k_in
    return shaper.k_in - config.nu


def _check_flip_shaper(shaper: AmplitudeShaper, config: SelectionConfig) -> None:
    if shaper.k_in == 0:
        raise ConfigError(f"flipping bits need a matcher shaper; '{shaper.KIND}' carries no payload")
    if config.nu > shaper.k_in:
        raise ConfigError(f"nu={config.nu} exceeds the shaper input length k={shaper.k_in}")


def _frame_kwargs(shaper: AmplitudeShaper) -> Dict[str, Any]:
    return {"amplitude_probs": shaper.marginal(), "amplitude_levels": shaper.amplitude_levels}


def flip_blocks(shaper: AmplitudeShaper, payload: np.ndarray, label: int, nu: int) -> np.ndarray:
    """Shaper blocks with the flip pattern of `label` prepended to every payload row."""
    patterns = pair_patterns(label, nu, payload.shape[0] // 2)
    inputs = np.concatenate([np.repeat(patterns, 2, axis=0), payload], axis=1)
    return shaper.encode_many(inputs)


def generate_candidates(shaper: AmplitudeShaper,
                        payload: np.ndarray,
                        config: SelectionConfig,
                        mapping: Union[str, MappingKind] = MappingKind.DIM1,
                        n_pol: int = 2,
                        sign_source: Union[int, np.ndarray] = 0,
                        baud_rate: float = 32e9,
                        blocks: Optional[np.ndarray] = None,
                        block_seed: int = 0) -> List[Candidate]:
    """
    N_t candidate frames for one selection block.

    Args:
        payload: (S, payload_width) bits, one row per shaper block
        sign_source: sign-bit seed or bits, shared by all candidates
        blocks: amplitude blocks for interleaving a non-matcher (iid) source
        block_seed: selection-block counter mixed into pattern draws

    Raises:
        ConfigError: inconsistent payload shape, unusable shaper, too many candidates
        FrameError: distinct candidates cannot be found
    """
    payload = np.asarray(payload, dtype=np.uint8)
    mapping = MappingKind.parse(mapping)
    if config.strategy == CandidateStrategy.FLIP:
        _check_flip_shaper(shaper, config)
    width = payload_width(shaper, config)
    if payload.ndim != 2 or payload.shape[1] != width:
        raise ConfigError(f"payload must be (n_shapers, {width}) bits, got shape {payload.shape}")
    n_shapers = payload.shape[0] if blocks is None else np.asarray(blocks).shape[0]
    if n_shapers % 2:
        raise ConfigError(f"selection block needs whole I/Q shaper pairs, got {n_shapers} shapers")

    if config.strategy == CandidateStrategy.FLIP:
        candidates = []
        for i, label in enumerate(candidate_labels(config, n_shapers, block_seed)):
            frame = assemble_frame(flip_blocks(shaper, payload, label, config.nu), mapping, sign_source,
                                   n_pol=n_pol, baud_rate=baud_rate, selection_index=i, selection_label=label,
                                   strategy=config.strategy.value, nu=config.nu, **_frame_kwargs(shaper))
            candidates.append(Candidate(i, label, frame))
        return candidates

    if blocks is None:
        blocks = shaper.encode_many(payload)
    base = assemble_frame(np.asarray(blocks), mapping, sign_source, n_pol=n_pol, baud_rate=baud_rate,
                          strategy=config.strategy.value, **_frame_kwargs(shaper))
    n = base.n_symbols
    candidates: List[Candidate] = []
    seen: List[np.ndarray] = []
    label = 0
    for i in range(config.n_candidates):
        for _ in range(MAX_REDRAWS):
            symbols = base.symbols[:, permutation(label, n, config.seed)]
            label += 1
            if not any(np.array_equal(symbols, s) for s in seen):
                break
        else:
            raise FrameError(f"could not draw {config.n_candidates} distinct interleavings "
                             f"after {MAX_REDRAWS} attempts")
        seen.append(symbols)
        candidates.append(Candidate(i, label - 1, base.with_symbols(symbols, selection_index=i,
                                                                    selection_label=label - 1)))
    if label > config.n_candidates:
        xlogger.debug("duplicate interleavings redrawn", data={"redraws": label - config.n_candidates})
    return candidates


def recover_payload(frame: SymbolFrame, shaper: AmplitudeShaper, config: SelectionConfig) -> np.ndarray:
    """
    Payload bits of a selected frame, given its out-of-band selection label.

    Raises:
        FrameError: missing label, or flip bits that disagree with the label
    """
    label = frame.metadata.get("selection_label")
    if label is None:
        raise FrameError("frame carries no selection_label; cannot undo the selection")
    label = int(label)
    if config.strategy == CandidateStrategy.INTERLEAVE:
        inverse = np.argsort(permutation(label, frame.n_symbols, config.seed))
        frame = frame.with_symbols(frame.symbols[:, inverse])
    blocks, _ = disassemble_frame(frame)
    bits = np.stack([shaper.decode(block) for block in blocks])
    if config.strategy == CandidateStrategy.INTERLEAVE:
        return bits
    expected = np.repeat(pair_patterns(label, config.nu, blocks.shape[0] // 2), 2, axis=0)
    if not np.array_equal(bits[:, :config.nu], expected):
        raise FrameError(f"flip bits of the decoded blocks do not match selection label {label}")
    return bits[:, config.nu:]


def split_payload(payload: np.ndarray, n_shapers: int) -> List[np.ndarray]:
    """Cut a (n, width) payload into selection blocks of n_shapers rows."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.shape[0] % n_shapers:
        raise ConfigError(f"{payload.shape[0]} payload rows do not fill blocks of {n_shapers} shapers")
    return [payload[i:i + n_shapers] for i in range(0, payload.shape[0], n_shapers)]


def draw_payload(shaper: AmplitudeShaper, config: SelectionConfig, n_shapers: int,
                 rng: np.random.Generator) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Uniform payload for one selection block; iid sources also return their blocks."""
    width = payload_width(shaper, config)
    if shaper.k_in == 0:
        return np.zeros((n_shapers, 0), dtype=np.uint8), shaper.sample(n_shapers, rng)[1]
    return rng.integers(0, 2, size=(n_shapers, width), dtype=np.uint8), None
