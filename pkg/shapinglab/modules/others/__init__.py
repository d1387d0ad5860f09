"""
Lifecycle bases and registries shared by all ShapingLab modules.

@author: rookielittleblack
@date:   2025-09-02
"""
from .xregistry import (
    Registry,
    OPERATOR_REGISTRY,
    PIPELINE_REGISTRY,
    FRAMEWORK_REGISTRY,
    SHAPER_REGISTRY,
    METRIC_REGISTRY,
    CPR_REGISTRY,
    PRESET_REGISTRY
)
from .xoperator import OperatorABC, OperatorState, register_operator, get_operator
from .xpipeline import PipelineABC, PipelineState, register_pipeline
from .xframework import FrameworkABC, FrameworkState, register_framework, create_framework


__all__ = [
    'Registry',
    'OPERATOR_REGISTRY',
    'PIPELINE_REGISTRY',
    'FRAMEWORK_REGISTRY',
    'SHAPER_REGISTRY',
    'METRIC_REGISTRY',
    'CPR_REGISTRY',
    'PRESET_REGISTRY',
    'OperatorABC',
    'OperatorState',
    'register_operator',
    'get_operator',
    'PipelineABC',
    'PipelineState',
    'register_pipeline',
    'FrameworkABC',
    'FrameworkState',
    'register_framework',
    'create_framework',
]
