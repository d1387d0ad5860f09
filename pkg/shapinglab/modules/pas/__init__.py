"""
Probabilistic amplitude shaping frames: mapping, signs, pilots.

@author: rookielittleblack
@date:   2025-09-02
"""
from .energy_sequence import EnergySequence
from .symbol_frame import (
    MappingKind,
    SymbolFrame,
    pas_constellation,
    pilot_layout,
    map_amplitudes,
    unmap_amplitudes,
    assemble_frame,
    disassemble_frame,
    shaping_rate,
    aggregated_energy,
    polarization_energy
)


__all__ = [
    'EnergySequence',
    'MappingKind',
    'SymbolFrame',
    'pas_constellation',
    'pilot_layout',
    'map_amplitudes',
    'unmap_amplitudes',
    'assemble_frame',
    'disassemble_frame',
    'shaping_rate',
    'aggregated_energy',
    'polarization_energy',
]
