"""
First-order perturbation kernel, phase-noise filter model, energy-sequence
statistics and kurtosis-driven SNR prediction.

@author: rookielittleblack
@date:   2025-09-02
"""
from shapinglab.modules.pas.energy_sequence import EnergySequence
from .energy_statistics import (
    WindowedMomentReport,
    windowed_sums,
    windowed_moments,
    edi,
    ccdm_edi_closed_form,
    iid_energy_autocorrelation,
    ccdm_energy_autocorrelation,
    empirical_autocorrelation,
    energy_autocorrelation,
    psd_estimate,
    psd_from_autocorrelation,
    psd_at_dc
)
from .perturbation_kernel import (
    PulseShape,
    TruncationRule,
    PerturbationKernel,
    memory_window,
    window_sizes,
    coefficient_set,
    rule_mask,
    quadrature_nodes,
    compute_coefficients,
    quantized_count,
    quantize_kernel,
    predicted_nlin_variance,
    truncation_gap,
    truncation_memory,
    circular_convolve,
    triplet_sum,
    aggregated_power,
    additive_distortion
)
from .filter_model import (
    FilterResponse,
    LearnedFilter,
    dtft,
    three_db_bandwidth,
    taps_response,
    filter_response,
    phase_noise_nlin,
    nlin_variance_from_spectrum,
    cpr_filter,
    residual_after_cpr,
    multiplicative_phase,
    fit_overall_filter
)
from .egn_prediction import EgnCalibration, predict_snr


__all__ = [
    'EnergySequence', 'WindowedMomentReport', 'windowed_sums', 'windowed_moments', 'edi',
    'ccdm_edi_closed_form', 'iid_energy_autocorrelation', 'ccdm_energy_autocorrelation',
    'empirical_autocorrelation', 'energy_autocorrelation', 'psd_estimate', 'psd_from_autocorrelation',
    'psd_at_dc',
    'PulseShape', 'TruncationRule', 'PerturbationKernel', 'memory_window', 'window_sizes',
    'coefficient_set', 'rule_mask', 'quadrature_nodes', 'compute_coefficients', 'quantized_count', 'quantize_kernel',
    'predicted_nlin_variance', 'truncation_gap', 'truncation_memory',
    'circular_convolve', 'triplet_sum', 'aggregated_power', 'additive_distortion',
    'FilterResponse', 'LearnedFilter', 'dtft', 'three_db_bandwidth', 'taps_response', 'filter_response',
    'phase_noise_nlin', 'nlin_variance_from_spectrum', 'cpr_filter', 'residual_after_cpr',
    'multiplicative_phase', 'fit_overall_filter',
    'EgnCalibration', 'predict_snr',
]
