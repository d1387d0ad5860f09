"""
Fixed-to-fixed amplitude shapers (CCDM, ESS, K-ESS) and their analytics.

@author: rookielittleblack
@date:   2025-09-02
"""
from .shaper_spec import ShaperKind, ShaperSpec, rate_to_amplitude_bits
from .ccdm_matcher import (
    multinomial,
    quantize_type,
    ccdm_spec,
    ccdm_composition,
    ccdm_encode,
    ccdm_decode,
    ccdm_rank,
    ccdm_unrank
)
from .ess_matcher import (
    EssTrellis,
    ess_trellis,
    ess_spec,
    ess_encode,
    ess_decode,
    ess_rank,
    ess_unrank,
    energy_distribution,
    ess_energy_bound,
    kess_kurtosis_bound
)
from .matcher_analytics import (
    induced_marginal,
    rate_loss,
    induced_moments,
    sample_blocks,
    block_kurtosis,
    kurtosis_histogram
)
from .amplitude_shapers import (
    AmplitudeShaper,
    CcdmShaper,
    EssShaper,
    KessShaper,
    IidShaper,
    build_shaper,
    mb_lambda_for_entropy
)


__all__ = [
    'ShaperKind', 'ShaperSpec', 'rate_to_amplitude_bits',
    'multinomial', 'quantize_type', 'ccdm_spec', 'ccdm_composition', 'ccdm_encode', 'ccdm_decode',
    'ccdm_rank', 'ccdm_unrank',
    'EssTrellis', 'ess_trellis', 'ess_spec', 'ess_encode', 'ess_decode', 'ess_rank', 'ess_unrank',
    'energy_distribution', 'ess_energy_bound', 'kess_kurtosis_bound',
    'induced_marginal', 'rate_loss', 'induced_moments', 'sample_blocks', 'block_kurtosis',
    'kurtosis_histogram',
    'AmplitudeShaper', 'CcdmShaper', 'EssShaper', 'KessShaper', 'IidShaper', 'build_shaper',
    'mb_lambda_for_entropy',
]
