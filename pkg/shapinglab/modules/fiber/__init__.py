"""
Split-step fiber simulator, coherent receiver and GN-style SNR analysis.

@author: rookielittleblack
@date:   2025-09-02
"""
from .link_config import LinkConfig, CprConfig, CprVariant, ase_power, ase_power_per_span
from .ssfm_channel import (
    Waveform,
    rrc_response,
    pulse_shape,
    transmit_waveform,
    linear_step,
    nonlinear_step,
    step_boundaries,
    steps_per_span,
    propagate,
    ssfm_propagate,
    compensate_dispersion
)
from .coherent_receiver import (
    ReceiverOutput,
    SnrEstimate,
    genie_phase,
    recover_phase,
    select_channel,
    receiver_dsp,
    measure_effective_snr
)
from .snr_analysis import (
    GnFit,
    SweepResult,
    fit_gn_model,
    fit_gn_models,
    nonlinear_gain,
    ign_snr_bound,
    ign_max_spans,
    parse_power_grid,
    simulate_snr,
    power_sweep
)


__all__ = [
    'LinkConfig', 'CprConfig', 'CprVariant', 'ase_power', 'ase_power_per_span',
    'Waveform', 'rrc_response', 'pulse_shape', 'transmit_waveform', 'linear_step', 'nonlinear_step',
    'step_boundaries', 'steps_per_span', 'propagate', 'ssfm_propagate', 'compensate_dispersion',
    'ReceiverOutput', 'SnrEstimate', 'genie_phase', 'recover_phase', 'select_channel', 'receiver_dsp',
    'measure_effective_snr',
    'GnFit', 'SweepResult', 'fit_gn_model', 'fit_gn_models', 'nonlinear_gain', 'ign_snr_bound',
    'ign_max_spans', 'parse_power_grid', 'simulate_snr', 'power_sweep',
]
