"""
Shaper specification shared by the CCDM, ESS and K-ESS matchers.

@author: rookielittleblack
@date:   2025-09-02
"""
import math

from enum import Enum
from fractions import Fraction
from typing import Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


class ShaperKind(str, Enum):
    CCDM = "CCDM"
    ESS = "ESS"
    KESS = "KESS"


def rate_to_amplitude_bits(rate_per_dim: float) -> float:
    """Shaping rate per 1-D PAM symbol (sign bit included) to amplitude bits per amplitude."""
    return rate_per_dim - 1.0


class ShaperSpec(BaseModel):
    """
    Fixed-to-fixed amplitude shaper.

    `k_in = floor(log2 n_seq)` input bits select one of the first 2^k_in
    admissible sequences (lexicographic order, levels ascending).
    """
    model_config = ConfigDict(frozen=True)

    kind: ShaperKind
    D: int = Field(ge=1, description="block length in amplitudes")
    amplitude_levels: Tuple[int, ...]
    composition: Optional[Tuple[int, ...]] = None
    e_max: Optional[int] = Field(default=None, description="bound on sum of a^2")
    k_max: Optional[int] = Field(default=None, description="bound on sum of a^4 (K-ESS)")
    n_seq: int = Field(ge=1, description="exact size of the shaping set")
    k_in: int = Field(ge=0)

    @field_validator("amplitude_levels")
    @classmethod
    def _levels_ascending(cls, levels: Tuple[int, ...]) -> Tuple[int, ...]:
        if not levels:
            raise ValueError("amplitude_levels must be non-empty")
        if any(a <= 0 for a in levels):
            raise ValueError("amplitude levels must be positive")
        if list(levels) != sorted(set(levels)):
            raise ValueError("amplitude levels must be distinct and ascending")
        return levels

    @model_validator(mode="after")
    def _check_kind(self) -> 'ShaperSpec':
        if self.kind == ShaperKind.CCDM:
            if self.composition is None:
                raise ValueError("CCDM needs a composition")
            if len(self.composition) != len(self.amplitude_levels):
                raise ValueError("composition and amplitude_levels differ in length")
            if any(n < 0 for n in self.composition) or sum(self.composition) != self.D:
                raise ValueError(f"composition must be non-negative and sum to D={self.D}")
        else:
            if self.e_max is None:
                raise ValueError(f"{self.kind.value} needs e_max")
            if self.kind == ShaperKind.KESS and self.k_max is None:
                raise ValueError("KESS needs k_max")
        if self.k_in != self.n_seq.bit_length() - 1:
            raise ValueError(f"k_in={self.k_in} is not floor(log2 n_seq) for n_seq={self.n_seq}")
        return self

    @field_serializer("n_seq")
    def _serialize_n_seq(self, value: int) -> str:
        # exceeds 64 bits for realistic block lengths
        return str(value)

    @property
    def rate(self) -> Fraction:
        """Amplitude bits per amplitude, k_in / D."""
        return Fraction(self.k_in, self.D)

    @property
    def log2_n_seq(self) -> float:
        return math.log2(self.n_seq)

    def describe(self) -> str:
        bounds = ""
        if self.kind == ShaperKind.CCDM:
            bounds = f"composition={list(self.composition)}"
        else:
            bounds = f"E_max={self.e_max}" + (f", K_max={self.k_max}" if self.k_max is not None else "")
        return (f"{self.kind.value}(D={self.D}, levels={list(self.amplitude_levels)}, {bounds}, "
                f"k_in={self.k_in}, rate={float(self.rate):.4f})")
