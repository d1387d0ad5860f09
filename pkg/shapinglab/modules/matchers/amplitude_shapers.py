"""
Amplitude shapers behind one interface, registered in SHAPER_REGISTRY.

`ccdm`, `ess` and `kess` are bijective fixed-to-fixed matchers; `iid` draws
amplitudes independently from an MB distribution of the same entropy and is
the ideal-shaping reference.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence, Tuple
from scipy.optimize import brentq

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import MatcherError
from shapinglab.utils.xutils import random_bits
from shapinglab.modules.others.xregistry import SHAPER_REGISTRY
from shapinglab.modules.constellation.qam_constellation import mb_distribution
from shapinglab.modules.matchers.shaper_spec import ShaperSpec
from shapinglab.modules.matchers.ccdm_matcher import ccdm_composition, ccdm_decode, ccdm_encode, ccdm_spec
from shapinglab.modules.matchers.ess_matcher import (
    ess_decode, ess_encode, ess_energy_bound, ess_spec, kess_kurtosis_bound
)
from shapinglab.modules.matchers.matcher_analytics import induced_marginal, rate_loss


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def mb_lambda_for_entropy(amplitude_levels: Sequence[float], target_bits: float) -> float:
    """λ of the MB amplitude distribution whose entropy equals `target_bits`."""
    levels = np.asarray(amplitude_levels, dtype=float)
    if target_bits >= math.log2(levels.size) - 1e-12:
        return 0.0
    if target_bits <= 0:
        raise MatcherError(f"target entropy must be positive, got {target_bits}")
    hi = 1.0
    while _entropy_bits(mb_distribution(levels, hi)) > target_bits:
        hi *= 2.0
    return float(brentq(lambda lam: _entropy_bits(mb_distribution(levels, lam)) - target_bits, 0.0, hi,
                        xtol=1e-12))


class AmplitudeShaper(ABC):
    """Maps k_in bits to D amplitudes and back."""

    KIND = ""

    def __init__(self, D: int, amplitude_levels: Sequence[int]):
        self.D = int(D)
        self.amplitude_levels = tuple(int(a) for a in amplitude_levels)

    @property
    @abstractmethod
    def k_in(self) -> int:
        pass

    @property
    def rate(self) -> float:
        """Amplitude bits per amplitude."""
        return self.k_in / self.D

    @abstractmethod
    def encode(self, bits: Sequence[int]) -> np.ndarray:
        pass

    @abstractmethod
    def decode(self, block: Sequence[int]) -> np.ndarray:
        pass

    @abstractmethod
    def marginal(self) -> np.ndarray:
        """Position-averaged amplitude probabilities aligned with amplitude_levels."""
        pass

    def encode_many(self, bits: np.ndarray) -> np.ndarray:
        """Encode a (n, k_in) bit matrix row by row."""
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != self.k_in:
            raise MatcherError(f"expected a (n, {self.k_in}) bit matrix, got shape {bits.shape}")
        if bits.shape[0] == 0:
            return np.empty((0, self.D), dtype=np.int64)
        return np.stack([self.encode(row) for row in bits])

    def sample(self, n_blocks: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        """Uniform payload bits and their blocks: ((n, k_in), (n, D))."""
        bits = random_bits(n_blocks * self.k_in, rng).reshape(n_blocks, self.k_in)
        return bits, self.encode_many(bits)

    def describe(self) -> Dict[str, Any]:
        return {"kind": self.KIND, "D": self.D, "levels": list(self.amplitude_levels),
                "k_in": self.k_in, "rate": self.rate}


class _MatcherShaper(AmplitudeShaper):

    def __init__(self, spec: ShaperSpec):
        super().__init__(spec.D, spec.amplitude_levels)
        self.spec = spec

    @property
    def k_in(self) -> int:
        return self.spec.k_in

    def marginal(self) -> np.ndarray:
        return induced_marginal(self.spec)

    def rate_loss(self) -> float:
        return rate_loss(self.spec)

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update(self.spec.model_dump(mode="json", exclude={"kind", "D", "amplitude_levels", "k_in"}))
        return info


@SHAPER_REGISTRY.register(name="ccdm", metadata={"description": "constant composition distribution matcher"})
class CcdmShaper(_MatcherShaper):
    KIND = "ccdm"

    def encode(self, bits: Sequence[int]) -> np.ndarray:
        return ccdm_encode(self.spec, bits)

    def decode(self, block: Sequence[int]) -> np.ndarray:
        return ccdm_decode(self.spec, block)

    @classmethod
    def from_rate(cls, D: int, amplitude_levels: Sequence[int], rate: float, extra_bits: int = 0,
                  **kwargs: Any) -> 'CcdmShaper':
        composition = ccdm_composition(D, amplitude_levels, rate, extra_bits=extra_bits)
        return cls(ccdm_spec(amplitude_levels, composition))


@SHAPER_REGISTRY.register(name="ess", metadata={"description": "enumerative sphere shaping"})
class EssShaper(_MatcherShaper):
    KIND = "ess"

    def encode(self, bits: Sequence[int]) -> np.ndarray:
        return ess_encode(self.spec, bits)

    def decode(self, block: Sequence[int]) -> np.ndarray:
        return ess_decode(self.spec, block)

    @classmethod
    def from_rate(cls, D: int, amplitude_levels: Sequence[int], rate: float, extra_bits: int = 0,
                  e_max: Optional[int] = None, **kwargs: Any) -> 'EssShaper':
        if e_max is None:
            e_max = ess_energy_bound(D, amplitude_levels, rate, extra_bits=extra_bits)
        return cls(ess_spec(D, amplitude_levels, e_max))


@SHAPER_REGISTRY.register(name="kess", metadata={"description": "kurtosis-limited ESS"})
class KessShaper(EssShaper):
    KIND = "kess"

    @classmethod
    def from_rate(cls, D: int, amplitude_levels: Sequence[int], rate: float, extra_bits: int = 0,
                  e_max: Optional[int] = None, k_max: Optional[int] = None,
                  energy_slack: int = 0, **kwargs: Any) -> 'KessShaper':
        """
        K-ESS at a target rate. Without explicit bounds, E_max is the ESS bound
        plus `energy_slack` and K_max the smallest bound keeping the rate.
        """
        if e_max is None:
            e_max = ess_energy_bound(D, amplitude_levels, rate, extra_bits=extra_bits) + int(energy_slack)
        if k_max is None:
            k_max = kess_kurtosis_bound(D, amplitude_levels, e_max, rate, extra_bits=extra_bits)
        return cls(ess_spec(D, amplitude_levels, e_max, k_max))


@SHAPER_REGISTRY.register(name="iid", metadata={"description": "i.i.d. MB amplitudes (ideal shaping)"})
class IidShaper(AmplitudeShaper):
    """
    Independent MB amplitudes with entropy equal to the target rate.

    Not a matcher: blocks carry no recoverable payload, so k_in is 0.
    """
    KIND = "iid"

    def __init__(self, D: int, amplitude_levels: Sequence[int], probs: Sequence[float]):
        super().__init__(D, amplitude_levels)
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.shape != (len(self.amplitude_levels),) or abs(self.probs.sum() - 1.0) > 1e-9:
            raise MatcherError("iid shaper needs one probability per level summing to 1")

    @property
    def k_in(self) -> int:
        return 0

    @property
    def rate(self) -> float:
        return _entropy_bits(self.probs)

    def encode(self, bits: Sequence[int]) -> np.ndarray:
        raise MatcherError("iid shaper has no bit mapping; use sample()")

    def decode(self, block: Sequence[int]) -> np.ndarray:
        raise MatcherError("iid shaper has no bit mapping")

    def marginal(self) -> np.ndarray:
        return self.probs.copy()

    def rate_loss(self) -> float:
        return 0.0

    def sample(self, n_blocks: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
        idx = rng.choice(len(self.amplitude_levels), size=(n_blocks, self.D), p=self.probs)
        return np.empty((n_blocks, 0), dtype=np.uint8), np.asarray(self.amplitude_levels)[idx]

    @classmethod
    def from_rate(cls, D: int, amplitude_levels: Sequence[int], rate: float, **kwargs: Any) -> 'IidShaper':
        lam = mb_lambda_for_entropy(amplitude_levels, rate)
        return cls(D, amplitude_levels, mb_distribution(np.asarray(amplitude_levels, dtype=float), lam))


def build_shaper(kind: str, D: int, amplitude_levels: Sequence[int], rate: float, **kwargs: Any) -> AmplitudeShaper:
    """
    Registry-backed factory.

    Args:
        kind: registered shaper name (ccdm, ess, kess, iid)
        rate: amplitude bits per amplitude
        **kwargs: extra_bits, e_max, k_max, energy_slack where supported
    """
    shaper = SHAPER_REGISTRY.get(kind).from_rate(D, amplitude_levels, rate, **kwargs)
    xlogger.debug("shaper built", data=shaper.describe())
    return shaper
