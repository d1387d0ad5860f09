"""
Link and carrier-phase-recovery configuration models.

`LinkConfig` describes a lumped-amplified multi-span WDM link; it is frozen
and hashable so it can key the perturbation-kernel disk cache.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import orjson
import xxhash
import numpy as np

from enum import Enum
from typing import Any, Dict, Optional
from scipy import constants
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shapinglab.utils.xconfig import load_model, validate_model
from shapinglab.utils.xutils import db_to_linear, dbm_to_watt


DB_PER_NEPER = 10.0 * math.log10(math.e)
MANAKOV_FACTOR = 8.0 / 9.0


class LinkConfig(BaseModel):
    """
    Physical and numerical link parameters.

    Units follow the usual lab conventions: km, dB/km, ps/nm/km, ps^2/km,
    1/W/km, GBd and GHz. Derived SI quantities are exposed as properties.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = 1
    span_length_km: float = Field(80.0, gt=0)
    n_spans: int = Field(20, ge=1)
    alpha_db_km: float = Field(0.2, ge=0)
    dispersion_ps_nm_km: float = 17.0
    beta2_ps2_km: Optional[float] = None
    gamma: float = Field(1.37, ge=0)
    noise_figure_db: float = 6.0
    ase_noise: bool = True
    center_wavelength_nm: float = Field(1550.0, gt=0)
    baud_rate_gbd: float = Field(32.0, gt=0)
    channel_spacing_ghz: float = Field(50.0, gt=0)
    n_channels: int = Field(11, ge=1)
    rrc_rolloff: float = Field(0.1, ge=0, le=1)
    samples_per_symbol: int = Field(24, ge=2)
    launch_power_dbm: float = 0.0
    dual_pol: bool = False

    @field_validator("n_channels")
    @classmethod
    def _odd_channel_count(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"n_channels must be odd so the channel of interest sits at the center, got {value}")
        return value

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, value: int) -> int:
        if value != 1:
            raise ValueError(f"unsupported link schema_version {value}; expected 1")
        return value

    @model_validator(mode="after")
    def _oversampling(self) -> 'LinkConfig':
        needed = self.n_channels * self.channel_spacing_ghz / self.baud_rate_gbd
        if self.samples_per_symbol < needed:
            raise ValueError(f"samples_per_symbol={self.samples_per_symbol} is below the WDM oversampling "
                             f"requirement N_ch*B_ch/R_s={needed:.2f}; raise it to {math.ceil(needed)}")
        return self

    # ---------------------------------------------------------------- derived quantities

    @property
    def beta2(self) -> float:
        """Group-velocity dispersion in ps^2/km (from D when not given)."""
        if self.beta2_ps2_km is not None:
            return float(self.beta2_ps2_km)
        c_nm_ps = constants.c * 1e-3
        lam = self.center_wavelength_nm
        return -self.dispersion_ps_nm_km * lam ** 2 / (2.0 * math.pi * c_nm_ps)

    @property
    def beta2_si(self) -> float:
        """beta2 in s^2/m."""
        return self.beta2 * 1e-27

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/km."""
        return self.alpha_db_km / DB_PER_NEPER

    @property
    def total_length_km(self) -> float:
        return self.span_length_km * self.n_spans

    @property
    def span_loss_db(self) -> float:
        return self.alpha_db_km * self.span_length_km

    @property
    def effective_length_km(self) -> float:
        if self.alpha == 0:
            return self.span_length_km
        return (1.0 - math.exp(-self.alpha * self.span_length_km)) / self.alpha

    @property
    def symbol_rate(self) -> float:
        """R_s in Bd."""
        return self.baud_rate_gbd * 1e9

    @property
    def channel_spacing(self) -> float:
        """B_ch in Hz."""
        return self.channel_spacing_ghz * 1e9

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    @property
    def carrier_frequency(self) -> float:
        return constants.c / (self.center_wavelength_nm * 1e-9)

    @property
    def n_pol(self) -> int:
        return 2 if self.dual_pol else 1

    @property
    def gamma_eff(self) -> float:
        """Nonlinear coefficient entering the propagation step (Manakov 8/9 when dual-pol)."""
        return self.gamma * MANAKOV_FACTOR if self.dual_pol else self.gamma

    @property
    def center_channel(self) -> int:
        return self.n_channels // 2

    @property
    def launch_power_w(self) -> float:
        return float(dbm_to_watt(self.launch_power_dbm))

    def channel_offsets(self) -> np.ndarray:
        """Carrier offsets of the WDM grid in Hz, centered on the channel of interest."""
        return (np.arange(self.n_channels) - self.center_channel) * self.channel_spacing

    def occupied_bandwidth(self) -> float:
        return (self.n_channels - 1) * self.channel_spacing + (1.0 + self.rrc_rolloff) * self.symbol_rate

    # ---------------------------------------------------------------- helpers

    def with_updates(self, **updates: Any) -> 'LinkConfig':
        """Validated copy with some fields replaced."""
        return validate_model({**self.model_dump(), **updates}, LinkConfig, source="with_updates")

    def canonical_json(self) -> bytes:
        return orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)

    def config_hash(self) -> str:
        """xxhash64 digest of the canonical JSON."""
        return xxhash.xxh64(self.canonical_json()).hexdigest()

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: str = "<dict>") -> 'LinkConfig':
        return validate_model(data, cls, source=source)

    @classmethod
    def from_file(cls, path: str) -> 'LinkConfig':
        return load_model(path, cls)

    @classmethod
    def table1(cls, **updates: Any) -> 'LinkConfig':
        """Full-scale reference link: 20 x 80 km, 11 channels at 32 GBd on a 50 GHz grid."""
        return cls.from_dict({**updates}, source="table1")

    @classmethod
    def scaled(cls, **updates: Any) -> 'LinkConfig':
        """Desk-scale link: 4 x 80 km, 3 channels."""
        return cls.from_dict({"n_spans": 4, "n_channels": 3, "samples_per_symbol": 8, **updates}, source="scaled")


def ase_power(link: LinkConfig) -> float:
    """
    Accumulated ASE power in the symbol bandwidth, in the launch-power convention.

    Each EDFA compensates one span loss G and adds N_ase = (G*NF - 1)/2 * h*nu
    per polarization; over R_s and all spans and polarizations this gives P_ASE.
    """
    if not link.ase_noise:
        return 0.0
    gain = float(db_to_linear(link.span_loss_db))
    nf = float(db_to_linear(link.noise_figure_db))
    n_ase = max(gain * nf - 1.0, 0.0) / 2.0 * constants.h * link.carrier_frequency
    return link.n_pol * link.n_spans * n_ase * link.symbol_rate


def ase_power_per_span(link: LinkConfig) -> float:
    """P_ASE,1 of a single amplifier."""
    return ase_power(link.with_updates(n_spans=1))


class CprVariant(str, Enum):
    MPR = "MPR"
    MOVING_AVERAGE = "MovingAverage"
    LPA = "LPA"


class CprConfig(BaseModel):
    """
    Carrier phase recovery settings.

    Attributes:
        variant: MPR (one mean rotation), MovingAverage (genie phase averaged over
            2*n_cpr+1 symbols) or LPA (pilot phases, linearly interpolated)
        n_cpr: half-window in symbols for MovingAverage, in pilots for LPA smoothing
        pilot_rate: pilot fraction the frames are built with
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    variant: CprVariant = CprVariant.MPR
    n_cpr: int = Field(0, ge=0)
    pilot_rate: float = Field(0.0, ge=0, le=0.1)

    @model_validator(mode="after")
    def _pilots_for_lpa(self) -> 'CprConfig':
        if self.variant == CprVariant.LPA and self.pilot_rate <= 0:
            raise ValueError("LPA needs pilot_rate > 0")
        return self
