"""
Constellations, distributions, moments and achievable-rate analytics.

@author: rookielittleblack
@date:   2025-09-02
"""
from .qam_constellation import (
    Constellation,
    MomentReport,
    build_qam,
    mb_distribution,
    qam_from_amplitudes,
    mb_qam,
    entropy,
    standardized_moments,
    moments_from_samples,
    moment_ratio,
    min_distance_sq,
    linear_shaping_gain,
    system_quality_factor,
    q_max,
    total_shaping_gain
)
from .air_estimator import AirEstimate, air_bmd, air_bmd_quadrature, estimate_noise_var


__all__ = [
    'Constellation',
    'MomentReport',
    'build_qam',
    'mb_distribution',
    'qam_from_amplitudes',
    'mb_qam',
    'entropy',
    'standardized_moments',
    'moments_from_samples',
    'moment_ratio',
    'min_distance_sq',
    'linear_shaping_gain',
    'system_quality_factor',
    'q_max',
    'total_shaping_gain',
    'AirEstimate',
    'air_bmd',
    'air_bmd_quadrature',
    'estimate_noise_var',
]
