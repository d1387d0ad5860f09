"""
Frameworks module initialization

The experiment runner: ExperimentConfig, the registered presets, the
experiment framework and the result comparison.

@author: rookielittleblack
@date:   2025-09-02
"""
from .xexperiment_config import ExperimentConfig, ShaperSettings, deep_merge
from .xpresets import list_presets, register_preset
from .xframe_exp import XFramework_Exp
from .xcompare import CompareReport, SeriesDeviation, compare


# Export all classes for easy importing
__all__ = [
    'ExperimentConfig',
    'ShaperSettings',
    'deep_merge',
    'list_presets',
    'register_preset',
    'XFramework_Exp',
    'CompareReport',
    'SeriesDeviation',
    'compare',
]
