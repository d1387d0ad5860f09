"""
Experiment configuration models.

An experiment file is JSON (or YAML) with `schema_version: 1`; it names a
preset, references a link (`scaled`, `table1`, a link file or an inline
object) and carries the shaper, mapping, selection and CPR settings, the
power grid and the seeds. Every random draw of a run derives from `seeds`.

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import math

from typing import Any, Dict, List, Optional
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from shapinglab.utils.xconfig import load_model, validate_model
from shapinglab.modules.constellation.qam_constellation import SUPPORTED_ORDERS
from shapinglab.modules.fiber.link_config import CprConfig, LinkConfig
from shapinglab.modules.fiber.snr_analysis import MIN_SWEEP_POINTS, parse_power_grid
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper, build_shaper
from shapinglab.modules.matchers.shaper_spec import rate_to_amplitude_bits
from shapinglab.modules.others.xregistry import PRESET_REGISTRY, SHAPER_REGISTRY
from shapinglab.modules.pas.symbol_frame import MappingKind
from shapinglab.modules.selection.sequence_candidates import CandidateStrategy, SelectionConfig


SCHEMA_VERSION = 1
UNIFORM = "uniform"

# Desk-scale ceiling; larger runs need `full`
DESK_MAX_SPANS = 4
DESK_MAX_CHANNELS = 3
DESK_MAX_SYMBOLS = 2 ** 16


class ShaperSettings(BaseModel):
    """
    Amplitude shaper of an experiment.

    Attributes:
        kind: registered shaper (ccdm, ess, kess, iid) or `uniform`
        D: default block length
        modulation_order: square QAM order M; amplitudes are the positive sqrt(M)-PAM levels
        rate: transmission rate in bits per real dimension, sign bit included
        energy_slack: K-ESS energy-bound slack over the ESS bound
        k_max: explicit K-ESS kurtosis bound
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: str = "ccdm"
    D: int = Field(108, ge=2)
    modulation_order: int = 64
    rate: float = Field(2.4, gt=1.0)
    energy_slack: int = Field(0, ge=0)
    k_max: Optional[int] = Field(None, ge=1)

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, value: str) -> str:
        if value != UNIFORM and value not in SHAPER_REGISTRY:
            raise ValueError(f"unknown shaper kind '{value}'; available: "
                             f"{', '.join(sorted(SHAPER_REGISTRY.keys()) + [UNIFORM])}")
        return value

    @field_validator("modulation_order")
    @classmethod
    def _square_qam(cls, value: int) -> int:
        if value not in SUPPORTED_ORDERS:
            raise ValueError(f"modulation_order must be one of {SUPPORTED_ORDERS}, got {value}")
        return value

    @model_validator(mode="after")
    def _rate_below_capacity(self) -> 'ShaperSettings':
        ceiling = math.log2(self.modulation_order) / 2.0
        if self.rate > ceiling:
            raise ValueError(f"rate {self.rate} exceeds log2(sqrt(M)) = {ceiling} bits per dimension")
        return self

    @property
    def amplitude_levels(self) -> List[int]:
        return list(range(1, int(round(math.sqrt(self.modulation_order))), 2))

    @property
    def amplitude_rate(self) -> float:
        return rate_to_amplitude_bits(self.rate)

    def build(self, kind: Optional[str] = None, D: Optional[int] = None, extra_bits: int = 0) -> AmplitudeShaper:
        """
        Instantiate the shaper. `extra_bits` enlarges k_in for flipping bits;
        `uniform` is the i.i.d. source at full amplitude entropy.
        """
        kind = kind or self.kind
        D = int(D or self.D)
        levels = self.amplitude_levels
        if kind == UNIFORM:
            return build_shaper("iid", D, levels, math.log2(len(levels)))
        kwargs: Dict[str, Any] = {"extra_bits": extra_bits}
        if kind == "kess":
            kwargs.update(energy_slack=self.energy_slack)
            if self.k_max is not None:
                kwargs["k_max"] = self.k_max
        if kind == "iid":
            kwargs = {}
        return build_shaper(kind, D, levels, self.amplitude_rate, **kwargs)


class ExperimentConfig(BaseModel):
    """
    One experiment run.

    Attributes:
        preset: PRESET_REGISTRY name
        link: resolved link model
        powers_dbm: launch-power grid (list or 'start:step:stop')
        block_lengths: D sweep of the block-length presets
        candidates: N_t sweep of the selection presets
        seeds: explicit seeds, one repetition each
        n_symbols: symbols per polarization and channel
        full: allow runs beyond desk scale
        options: preset-specific extras
    """
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    preset: str
    link: LinkConfig = Field(default_factory=LinkConfig.scaled)
    shaper: ShaperSettings = Field(default_factory=ShaperSettings)
    mapping: MappingKind = MappingKind.DIM1
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    cpr: CprConfig = Field(default_factory=CprConfig)
    powers_dbm: List[float] = Field(default_factory=lambda: [-2.0, 0.0, 2.0, 4.0, 6.0])
    block_lengths: List[int] = Field(default_factory=lambda: [16, 64, 256])
    candidates: List[int] = Field(default_factory=lambda: [1, 4, 16])
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2])
    n_symbols: int = Field(4096, ge=64)
    full: bool = False
    output_dir: str = "results"
    options: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported experiment schema_version {value}; expected {SCHEMA_VERSION}")
        return value

    @field_validator("preset")
    @classmethod
    def _known_preset(cls, value: str) -> str:
        if value not in PRESET_REGISTRY:
            raise ValueError(f"unknown preset '{value}'; run `shaping-lab presets` for the list")
        return value

    @field_validator("link", mode="before")
    @classmethod
    def _resolve_link(cls, value: Any) -> Any:
        if isinstance(value, str):
            if value == "scaled":
                return LinkConfig.scaled()
            if value == "table1":
                return LinkConfig.table1()
            if not os.path.exists(value):
                raise ValueError(f"link '{value}' is neither 'scaled', 'table1' nor an existing file")
            return LinkConfig.from_file(value)
        return value

    @field_validator("mapping", mode="before")
    @classmethod
    def _parse_mapping(cls, value: Any) -> MappingKind:
        return MappingKind.parse(value)

    @field_validator("powers_dbm", mode="before")
    @classmethod
    def _parse_powers(cls, value: Any) -> Any:
        if isinstance(value, str):
            return parse_power_grid(value).tolist()
        return value

    @field_validator("seeds")
    @classmethod
    def _explicit_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError(f"seeds must be distinct, got {value}")
        return value

    @field_validator("block_lengths", "candidates")
    @classmethod
    def _positive_grid(cls, value: List[int]) -> List[int]:
        if not value or min(value) < 1:
            raise ValueError(f"grid must be non-empty with positive entries, got {value}")
        return value

    @model_validator(mode="after")
    def _desk_scale(self) -> 'ExperimentConfig':
        if len(self.powers_dbm) < MIN_SWEEP_POINTS:
            raise ValueError(f"powers_dbm needs at least {MIN_SWEEP_POINTS} points for a GN fit")
        if self.full:
            return self
        if self.link.n_spans > DESK_MAX_SPANS or self.link.n_channels > DESK_MAX_CHANNELS:
            raise ValueError(f"link with {self.link.n_spans} spans and {self.link.n_channels} channels is beyond "
                             f"desk scale ({DESK_MAX_SPANS} spans, {DESK_MAX_CHANNELS} channels); "
                             f"set full=true (CLI --full) for multi-hour runs")
        if self.n_symbols > DESK_MAX_SYMBOLS:
            raise ValueError(f"n_symbols={self.n_symbols} exceeds {DESK_MAX_SYMBOLS}; set full=true to allow it")
        return self

    @property
    def flip_bits(self) -> int:
        """Extra shaper input bits consumed by flipping-bit selection."""
        return self.selection.nu if self.selection.strategy == CandidateStrategy.FLIP else 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: str = "<dict>") -> 'ExperimentConfig':
        return validate_model(data, cls, source=source)

    @classmethod
    def from_file(cls, path: str) -> 'ExperimentConfig':
        return load_model(path, cls)


def deep_merge(target: Dict[str, Any], source: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge `source` into `target` in place; returns target."""
    for key, value in source.items():
        if key in target and isinstance(target[key], dict) and isinstance(value, dict):
            deep_merge(target[key], value)
        else:
            target[key] = value
    return target

