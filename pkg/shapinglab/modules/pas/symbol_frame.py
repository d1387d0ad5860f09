"""
PAS symbol frames: amplitude blocks, uniform sign bits and pilots mapped to
single- or dual-polarization QAM symbol streams.

Four amplitude blocks of length D fill D symbols in x and y:

    dim1  block j -> component j (x_i, x_q, y_i, y_q) for D symbols
    dim2  blocks 0,1 -> x-pol, blocks 2,3 -> y-pol, consecutive (i, q) pairs
    dim4  all four blocks concatenated, consecutive (x_i, x_q, y_i, y_q) quadruples

Single-polarization frames use two blocks per group (dim4 unavailable).

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from enum import Enum
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xconfig import get_config
from shapinglab.utils.xerror_handler import ConfigError, FrameError
from shapinglab.utils.xstorage import FrameCodec
from shapinglab.modules.constellation.qam_constellation import Constellation, qam_from_amplitudes
from shapinglab.modules.pas.energy_sequence import EnergySequence


MAX_PILOT_RATE = 0.1
DEFAULT_PILOT_SEED = 7919


class MappingKind(str, Enum):
    DIM1 = "dim1"
    DIM2 = "dim2"
    DIM4 = "dim4"

    @property
    def dims(self) -> int:
        return {"dim1": 1, "dim2": 2, "dim4": 4}[self.value]

    @classmethod
    def parse(cls, value: Union[str, 'MappingKind']) -> 'MappingKind':
        """Accepts dim1/dim2/dim4 and the short forms 1d/2d/4d."""
        if isinstance(value, cls):
            return value
        text = str(value).lower().strip()
        aliases = {"1d": "dim1", "2d": "dim2", "4d": "dim4", "1": "dim1", "2": "dim2", "4": "dim4"}
        try:
            return cls(aliases.get(text, text))
        except ValueError:
            raise ConfigError(f"unknown mapping '{value}'; expected one of dim1, dim2, dim4 (or 1d, 2d, 4d)")


@dataclass(eq=False)
class SymbolFrame:
    """
    Complex symbols per polarization with a shared pilot mask.

    Attributes:
        symbols: (n_pol, n_symbols) complex array, unit mean energy per polarization
        pilot_mask: True where a pilot sits
        baud_rate: symbol rate in Bd
        constellation: PAS-induced QAM the data and pilots are drawn from
        metadata: shaper, mapping, seeds, block length
    """
    symbols: np.ndarray
    pilot_mask: np.ndarray
    baud_rate: float
    constellation: Constellation
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.symbols = np.atleast_2d(np.asarray(self.symbols, dtype=np.complex128))
        self.pilot_mask = np.asarray(self.pilot_mask, dtype=bool)
        if self.symbols.shape[0] not in (1, 2):
            raise FrameError(f"frames carry one or two polarizations, got {self.symbols.shape[0]}")
        if self.pilot_mask.shape != (self.symbols.shape[1],):
            raise FrameError("pilot mask length differs from the frame length")

    @property
    def n_pol(self) -> int:
        return int(self.symbols.shape[0])

    @property
    def n_symbols(self) -> int:
        return int(self.symbols.shape[1])

    @property
    def x(self) -> np.ndarray:
        return self.symbols[0]

    @property
    def y(self) -> Optional[np.ndarray]:
        return self.symbols[1] if self.n_pol == 2 else None

    @property
    def pilot_rate(self) -> float:
        return float(self.pilot_mask.mean()) if self.n_symbols else 0.0

    @property
    def pilot_indices(self) -> np.ndarray:
        return np.flatnonzero(self.pilot_mask)

    @property
    def mapping(self) -> Optional[MappingKind]:
        value = self.metadata.get("mapping")
        return MappingKind.parse(value) if value else None

    def data_symbols(self, pol: Optional[int] = None) -> np.ndarray:
        """Data (non-pilot) symbols of one polarization, or all polarizations stacked."""
        data = self.symbols[:, ~self.pilot_mask]
        return data if pol is None else data[pol]

    def with_symbols(self, symbols: np.ndarray, **metadata: Any) -> 'SymbolFrame':
        """Same pilots and constellation, new symbol values (e.g. equalized)."""
        return SymbolFrame(symbols, self.pilot_mask.copy(), self.baud_rate, self.constellation,
                           {**self.metadata, **metadata})

    def header(self) -> Dict[str, Any]:
        return {"baud_rate": self.baud_rate, "pilot_indices": self.pilot_indices.tolist(),
                "constellation": self.constellation.to_json(), "metadata": self.metadata}

    def to_bytes(self) -> bytes:
        return FrameCodec.encode(self.header(), list(self.symbols))

    @classmethod
    def from_bytes(cls, blob: bytes) -> 'SymbolFrame':
        header, pols = FrameCodec.decode(blob)
        return cls._from_decoded(header, pols)

    def write(self, path: str) -> str:
        return FrameCodec.write(path, self.header(), list(self.symbols))

    @classmethod
    def read(cls, path: str) -> 'SymbolFrame':
        header, pols = FrameCodec.read(path)
        return cls._from_decoded(header, pols)

    @classmethod
    def _from_decoded(cls, header: Dict[str, Any], pols) -> 'SymbolFrame':
        mask = np.zeros(int(header["n_symbols"]), dtype=bool)
        mask[np.asarray(header.get("pilot_indices", []), dtype=np.int64)] = True
        return cls(np.stack(pols), mask, float(header["baud_rate"]),
                   Constellation.from_json(header["constellation"]), header.get("metadata", {}))


# ---------------------------------------------------------------- construction helpers

def pas_constellation(amplitude_levels: Sequence[int], amplitude_probs: Sequence[float]) -> Constellation:
    """
    Square QAM induced by PAS with the given amplitude marginal.

    Raises:
        FrameError: levels are not the odd-integer grid of a supported square QAM
    """
    levels = [int(a) for a in amplitude_levels]
    L = len(levels)
    if levels != list(range(1, 2 * L, 2)):
        raise FrameError(f"amplitude levels {levels} are not the odd-integer grid 1, 3, ..., {2 * L - 1}")
    return qam_from_amplitudes((2 * L) ** 2, amplitude_probs)


def pilot_layout(n_data: int, pilot_rate: float) -> np.ndarray:
    """
    Periodic pilot mask starting at index 0 with period round(1 / pilot_rate).

    Raises:
        FrameError: pilot rate outside [0, 0.1]
    """
    if not 0.0 <= pilot_rate <= MAX_PILOT_RATE:
        raise FrameError(f"pilot_rate must be within [0, {MAX_PILOT_RATE}], got {pilot_rate}")
    if pilot_rate == 0.0 or n_data == 0:
        return np.zeros(n_data, dtype=bool)
    period = int(round(1.0 / pilot_rate))
    n_pilots = math.ceil(n_data / (period - 1))
    mask = np.zeros(n_data + n_pilots, dtype=bool)
    mask[np.arange(n_pilots) * period] = True
    return mask


def _group_size(n_pol: int) -> int:
    return 2 * n_pol


def _check_layout(D: int, mapping: MappingKind, n_pol: int) -> None:
    if n_pol not in (1, 2):
        raise FrameError(f"n_pol must be 1 or 2, got {n_pol}")
    if mapping == MappingKind.DIM4 and n_pol != 2:
        raise FrameError("dim4 mapping needs a dual-polarization frame")
    if D % mapping.dims:
        raise FrameError(f"block length D={D} is not divisible by {mapping.dims} for {mapping.value} mapping")


def map_amplitudes(blocks: np.ndarray, mapping: MappingKind, n_pol: int = 2) -> np.ndarray:
    """
    Route amplitude blocks to real components.

    Returns:
        (2 * n_pol, n_blocks * D / (2 * n_pol)) array ordered x_i, x_q[, y_i, y_q]
    """
    blocks = np.asarray(blocks)
    n_blocks, D = blocks.shape
    mapping = MappingKind.parse(mapping)
    _check_layout(D, mapping, n_pol)
    G = _group_size(n_pol)
    if n_blocks % G:
        raise FrameError(f"{n_blocks} blocks do not fill whole groups of {G}")
    groups = blocks.reshape(n_blocks // G, G, D)
    if mapping == MappingKind.DIM1:
        return groups.transpose(1, 0, 2).reshape(G, -1)
    if mapping == MappingKind.DIM2:
        comps = []
        for p in range(n_pol):
            pairs = groups[:, 2 * p:2 * p + 2, :].reshape(-1, 2)
            comps.extend([pairs[:, 0], pairs[:, 1]])
        return np.stack(comps)
    return groups.reshape(-1, 4).T


def unmap_amplitudes(components: np.ndarray, mapping: MappingKind, D: int) -> np.ndarray:
    """Inverse of map_amplitudes: (2 * n_pol, n) components back to (n_blocks, D) blocks."""
    components = np.asarray(components)
    G = components.shape[0]
    n_pol = G // 2
    mapping = MappingKind.parse(mapping)
    _check_layout(D, mapping, n_pol)
    if components.shape[1] % D:
        raise FrameError(f"{components.shape[1]} symbols do not hold whole blocks of D={D}")
    n_groups = components.shape[1] // D
    if mapping == MappingKind.DIM1:
        return components.reshape(G, n_groups, D).transpose(1, 0, 2).reshape(-1, D)
    if mapping == MappingKind.DIM2:
        per_pol = []
        for p in range(n_pol):
            pairs = np.stack([components[2 * p], components[2 * p + 1]], axis=1)
            per_pol.append(pairs.reshape(n_groups, 2, D))
        return np.concatenate(per_pol, axis=1).reshape(-1, D)
    return components.T.reshape(n_groups, G, D).reshape(-1, D)


def assemble_frame(blocks: np.ndarray,
                   mapping: Union[str, MappingKind],
                   sign_source: Union[int, np.ndarray],
                   pilot_rate: float = 0.0,
                   amplitude_probs: Optional[Sequence[float]] = None,
                   amplitude_levels: Optional[Sequence[int]] = None,
                   n_pol: int = 2,
                   baud_rate: float = 32e9,
                   pilot_seed: Optional[int] = None,
                   **metadata: Any) -> SymbolFrame:
    """
    Build a PAS frame from amplitude blocks.

    Args:
        blocks: (n_blocks, D) amplitudes from one shaper
        mapping: dim1 | dim2 | dim4
        sign_source: seed of the uniform sign-bit stream, or the sign bits themselves
        pilot_rate: fraction of pilot symbols, periodic grid from index 0
        amplitude_probs: amplitude marginal of the shaper (empirical when None)
        amplitude_levels: levels aligned with amplitude_probs (distinct block values when None)
        n_pol: 1 or 2
        baud_rate: symbol rate in Bd
        pilot_seed: seed for pilot symbols (config `simulation.pilot_seed` when None)

    Raises:
        FrameError: D not divisible per mapping, incomplete groups, bad pilot rate
    """
    blocks = np.asarray(blocks, dtype=np.int64)
    if blocks.ndim != 2 or blocks.size == 0:
        raise FrameError("assemble_frame needs a non-empty (n_blocks, D) array")
    mapping = MappingKind.parse(mapping)
    D = blocks.shape[1]
    comps = map_amplitudes(blocks, mapping, n_pol).astype(float)

    if isinstance(sign_source, (int, np.integer)):
        sign_bits = np.random.default_rng(int(sign_source)).integers(0, 2, size=comps.shape, dtype=np.uint8)
    else:
        sign_bits = np.asarray(sign_source, dtype=np.uint8).reshape(comps.shape)
    signed = comps * (1.0 - 2.0 * sign_bits)

    if amplitude_levels is None:
        top = 2 * len(amplitude_probs) - 1 if amplitude_probs is not None else int(blocks.max())
        amplitude_levels = list(range(1, top + 1, 2))
    if amplitude_probs is None:
        counts = np.array([np.count_nonzero(blocks == a) for a in amplitude_levels], dtype=float)
        amplitude_probs = counts / counts.sum()
    constellation = pas_constellation(amplitude_levels, amplitude_probs)

    data = constellation.scale * (signed[0::2] + 1j * signed[1::2])
    n_data = data.shape[1]
    mask = pilot_layout(n_data, pilot_rate)
    symbols = np.empty((n_pol, mask.size), dtype=np.complex128)
    symbols[:, ~mask] = data
    if mask.any():
        seed = get_config().get("simulation.pilot_seed", DEFAULT_PILOT_SEED) if pilot_seed is None else pilot_seed
        pilot_rng = np.random.default_rng(int(seed))
        symbols[:, mask] = constellation.sample(n_pol * int(mask.sum()), pilot_rng).reshape(n_pol, -1)

    meta = {"mapping": mapping.value, "D": int(D), "n_blocks": int(blocks.shape[0]),
            "sign_seed": int(sign_source) if isinstance(sign_source, (int, np.integer)) else None}
    meta.update(metadata)
    xlogger.debug("frame assembled", data={"n_symbols": int(mask.size), "n_pol": n_pol,
                                           "mapping": mapping.value, "pilots": int(mask.sum())})
    return SymbolFrame(symbols, mask, float(baud_rate), constellation, meta)


def disassemble_frame(frame: SymbolFrame, mapping: Optional[Union[str, MappingKind]] = None,
                      D: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recover amplitude blocks and sign bits from a transmitted frame.

    Returns:
        (blocks (n_blocks, D), sign bits per component)
    """
    mapping = MappingKind.parse(mapping or frame.metadata.get("mapping", "dim1"))
    D = int(D or frame.metadata["D"])
    data = frame.data_symbols() / frame.constellation.scale
    comps = np.empty((2 * frame.n_pol, data.shape[1]))
    comps[0::2], comps[1::2] = data.real, data.imag
    signs = (comps < 0).astype(np.uint8)
    amplitudes = np.rint(np.abs(comps)).astype(np.int64)
    return unmap_amplitudes(amplitudes, mapping, D), signs


def shaping_rate(k: int, nu: int, D: int) -> Fraction:
    """
    (k - nu) / D amplitude bits per amplitude.

    Raises:
        ConfigError: nu outside [0, k] or D < 1
    """
    if D < 1:
        raise ConfigError(f"block length must be positive, got {D}")
    if not 0 <= nu <= k:
        raise ConfigError(f"flipping bits nu={nu} must lie in [0, k={k}]")
    return Fraction(k - nu, D)


def aggregated_energy(frame: SymbolFrame, pol: int = 0, data_only: bool = False) -> Tuple[EnergySequence, bool]:
    """
    e_agg,p = 2 e_p + e_p' with energies normalized per polarization.

    Returns:
        (energy sequence, single-pol flag); single-pol frames return 2 e_p with the flag set
    """
    symbols = frame.data_symbols() if data_only else frame.symbols
    if pol not in range(frame.n_pol):
        raise FrameError(f"polarization {pol} not in frame with {frame.n_pol} polarizations")
    energies = np.abs(symbols) ** 2
    energies = energies / energies.mean(axis=1, keepdims=True)
    block = frame.metadata.get("D")
    if frame.n_pol == 1:
        return EnergySequence(2.0 * energies[0], block, {"pol": pol, "aggregated": True, "baseline": 2.0}), True
    agg = 2.0 * energies[pol] + energies[1 - pol]
    return EnergySequence(agg, block, {"pol": pol, "aggregated": True, "baseline": 3.0}), False


def polarization_energy(frame: SymbolFrame, pol: int = 0, data_only: bool = False) -> EnergySequence:
    """Normalized energy sequence e_p of one polarization."""
    symbols = frame.data_symbols(pol) if data_only else frame.symbols[pol]
    return EnergySequence.from_symbols(symbols, block_length=frame.metadata.get("D"), pol=pol)
