"""
Normalized symbol-energy sequences shared by frames and the NLIN analytics.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from shapinglab.utils.xerror_handler import FrameError


@dataclass(frozen=True)
class EnergySequence:
    """
    Normalized energies e_k = |x_k|^2 / E.

    Attributes:
        values: non-negative energies with sample mean close to the baseline
        block_length: cyclostationarity period when block structured
        source: free-form metadata (shaper, mapping, polarization, baseline)
    """
    values: np.ndarray
    block_length: Optional[int] = None
    source: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise FrameError("energy sequence is empty")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise FrameError("energies must be finite and non-negative")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def baseline(self) -> float:
        """Nominal mean: 1 for e_p, 3 for aggregated dual-pol, 2 for aggregated single-pol."""
        return float(self.source.get("baseline", 1.0))

    @property
    def fluctuation(self) -> np.ndarray:
        """e - baseline."""
        return self.values - self.baseline

    @classmethod
    def from_symbols(cls, symbols: np.ndarray, energy: Optional[float] = None,
                     block_length: Optional[int] = None, **source: Any) -> 'EnergySequence':
        """Normalize |x|^2 by `energy` (sample mean when None)."""
        r2 = np.abs(np.asarray(symbols, dtype=np.complex128).ravel()) ** 2
        energy = float(np.mean(r2)) if energy is None else float(energy)
        if energy <= 0:
            raise FrameError("symbol energy must be positive")
        return cls(r2 / energy, block_length, dict(source))
