"""
Utilities module for ShapingLab.

Logging, configuration, storage, error handling and numeric helpers.

@author: rookielittleblack
@date:   2025-09-02
"""
from .xlogger import xlogger
from .xerror_handler import (
    ShapingLabError,
    ConfigError,
    ConstellationError,
    MatcherError,
    FrameError,
    SimulationError,
    ReceiverError,
    ModelError,
    SchemaError,
    XErrorHandler,
    XRetryMechanism,
    XErrorReporter,
    ErrorSeverity,
    ErrorCategory,
    ErrorInfo,
    retry_on_failure,
    safe_execute,
    error_handler
)
from .xconfig import XConfigLoader, get_config, load_model, validate_model
from .xutils import (
    db_to_linear,
    linear_to_db,
    dbm_to_watt,
    watt_to_dbm,
    bits_to_int,
    int_to_bits,
    bootstrap_ci,
    run_parallel
)
from .xstorage import ResultStorage, FrameCodec, KernelCache, RESULT_COLUMNS


__all__ = [
    # Logger
    'xlogger',

    # Configuration
    'XConfigLoader',
    'get_config',
    'load_model',
    'validate_model',

    # Storage
    'ResultStorage',
    'FrameCodec',
    'KernelCache',
    'RESULT_COLUMNS',

    # Utilities
    'db_to_linear',
    'linear_to_db',
    'dbm_to_watt',
    'watt_to_dbm',
    'bits_to_int',
    'int_to_bits',
    'bootstrap_ci',
    'run_parallel',

    # Error handling
    'ShapingLabError',
    'ConfigError',
    'ConstellationError',
    'MatcherError',
    'FrameError',
    'SimulationError',
    'ReceiverError',
    'ModelError',
    'SchemaError',
    'XErrorHandler',
    'XRetryMechanism',
    'XErrorReporter',
    'ErrorSeverity',
    'ErrorCategory',
    'ErrorInfo',
    'retry_on_failure',
    'safe_execute',
    'error_handler',
]
