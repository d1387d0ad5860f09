"""
Exception handling utilities for ShapingLab.

This module defines the domain exception hierarchy and provides unified error
reporting, retry for transient I/O, and the `safe_execute` / `retry_on_failure`
decorators used by the lifecycle layers.

@author: rookielittleblack
@date:   2025-09-02
"""
import sys
import time
import uuid
import random
import traceback
import threading

from enum import Enum
from typing import Any, Callable, Deque, Dict, List, Optional, Tuple, Type
from datetime import datetime
from functools import wraps
from collections import deque
from dataclasses import asdict, dataclass, field
from shapinglab.utils.xlogger import xlogger


class ShapingLabError(Exception):
    """Root of all errors raised by ShapingLab."""


class ConfigError(ShapingLabError, ValueError):
    """Invalid or unresolvable configuration."""


class ConstellationError(ShapingLabError, ValueError):
    """Invalid constellation, distribution or moment request."""


class MatcherError(ShapingLabError, ValueError):
    """Shaper specification, encode or decode failure."""


class FrameError(ShapingLabError, ValueError):
    """Frame assembly, mapping or codec failure."""


class SimulationError(ShapingLabError, RuntimeError):
    """Fiber propagation failure (aliasing, numerical overflow)."""


class ReceiverError(ShapingLabError, RuntimeError):
    """Receiver DSP failure."""


class ModelError(ShapingLabError, RuntimeError):
    """Analytical model failure (calibration, fitting, quadrature)."""


class SchemaError(ShapingLabError, ValueError):
    """Result files do not share a schema."""


class ErrorSeverity(Enum):
    """Error severity levels for classification."""
    LOW = "LOW"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"
    CRITICAL = "CRITICAL"


class ErrorCategory(Enum):
    """Error categories for classification."""
    SYSTEM = "SYSTEM"      # memory, interpreter
    IO = "IO"              # files, cache, disk
    CONFIG = "CONFIG"      # parameters, schemas
    DATA = "DATA"          # frames, blocks, sequences
    NUMERIC = "NUMERIC"    # overflow, aliasing, NaN
    MODEL = "MODEL"        # calibration, fits, quadrature
    UNKNOWN = "UNKNOWN"


# Ordered: first match wins
_CLASSIFICATION: List[Tuple[Tuple[Type[BaseException], ...], ErrorSeverity, ErrorCategory]] = [
    ((ConfigError, SchemaError), ErrorSeverity.HIGH, ErrorCategory.CONFIG),
    ((SimulationError,), ErrorSeverity.HIGH, ErrorCategory.NUMERIC),
    ((ModelError,), ErrorSeverity.MEDIUM, ErrorCategory.MODEL),
    ((ConstellationError, MatcherError, FrameError, ReceiverError), ErrorSeverity.MEDIUM, ErrorCategory.DATA),
    ((FloatingPointError, OverflowError, ZeroDivisionError), ErrorSeverity.HIGH, ErrorCategory.NUMERIC),
    ((FileNotFoundError, PermissionError), ErrorSeverity.HIGH, ErrorCategory.IO),
    ((MemoryError,), ErrorSeverity.CRITICAL, ErrorCategory.SYSTEM),
    ((OSError,), ErrorSeverity.HIGH, ErrorCategory.IO),
    ((ValueError, TypeError, KeyError, IndexError), ErrorSeverity.MEDIUM, ErrorCategory.DATA),
]


@dataclass
class ErrorInfo:
    """One reported failure."""
    severity: ErrorSeverity
    category: ErrorCategory
    exception_type: str
    message: str
    traceback: str = ""
    context: Dict[str, Any] = field(default_factory=dict)
    location: str = ""
    error_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    timestamp: datetime = field(default_factory=datetime.now)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["severity"] = self.severity.value
        record["category"] = self.category.value
        record["timestamp"] = self.timestamp.isoformat()
        return record


class XRetryMechanism:
    """
    Exponential backoff for transient file-system failures (cache directory races,
    results written to network mounts). Domain errors are deterministic and never retried.
    """

    RETRYABLE: Tuple[Type[BaseException], ...] = (TimeoutError, ConnectionError, OSError)
    NEVER_RETRY: Tuple[Type[BaseException], ...] = (FileNotFoundError, PermissionError, IsADirectoryError)

    def __init__(self, max_retries: int = 3, base_delay: float = 0.2, max_delay: float = 5.0,
                 jitter: float = 0.25):
        self.max_retries = max_retries
        self.base_delay = base_delay
        self.max_delay = max_delay
        self.jitter = jitter

    def delay_for(self, attempt: int) -> float:
        delay = min(self.base_delay * 2.0 ** attempt, self.max_delay)
        return max(0.0, delay * (1.0 + random.uniform(-self.jitter, self.jitter)))

    def is_retryable(self, exception: BaseException) -> bool:
        if isinstance(exception, (ShapingLabError,) + self.NEVER_RETRY):
            return False
        return isinstance(exception, self.RETRYABLE)

    def retry(self, func: Callable, *args, **kwargs) -> Any:
        """
        Call `func`, retrying transient failures.

        Raises:
            The last exception once retries are exhausted or the failure is not transient
        """
        name = getattr(func, "__qualname__", repr(func))
        for attempt in range(self.max_retries + 1):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if attempt == self.max_retries or not self.is_retryable(e):
                    raise
                delay = self.delay_for(attempt)
                xlogger.warning(f"{name} failed ({e}); retry {attempt + 1}/{self.max_retries} in {delay:.2f}s")
                time.sleep(delay)


def retry_on_failure(max_retries: int = 3, base_delay: float = 0.2, max_delay: float = 5.0):
    """Decorator form of `XRetryMechanism.retry`."""
    def decorator(func: Callable) -> Callable:
        mechanism = XRetryMechanism(max_retries=max_retries, base_delay=base_delay, max_delay=max_delay)

        @wraps(func)
        def wrapper(*args, **kwargs):
            return mechanism.retry(func, *args, **kwargs)
        return wrapper
    return decorator


class XErrorReporter:
    """Classifies failures and keeps the most recent ones for inspection."""

    def __init__(self, max_records: int = 200):
        self.recent: Deque[ErrorInfo] = deque(maxlen=max_records)
        self._lock = threading.Lock()

    @staticmethod
    def classify(exception: BaseException) -> Tuple[ErrorSeverity, ErrorCategory]:
        for types, severity, category in _CLASSIFICATION:
            if isinstance(exception, types):
                return severity, category
        return ErrorSeverity.MEDIUM, ErrorCategory.UNKNOWN

    def report(self, exception: BaseException, context: Optional[Dict[str, Any]] = None) -> ErrorInfo:
        severity, category = self.classify(exception)
        tb = exception.__traceback__
        frames = traceback.extract_tb(tb) if tb is not None else []
        location = f"{frames[-1].filename}:{frames[-1].lineno} in {frames[-1].name}" if frames else ""
        info = ErrorInfo(
            severity=severity,
            category=category,
            exception_type=type(exception).__name__,
            message=str(exception),
            traceback="".join(traceback.format_exception(type(exception), exception, tb)),
            context=dict(context or {}),
            location=location,
        )
        with self._lock:
            self.recent.append(info)
        return info


class XErrorHandler:
    """
    Process-wide error handler: every failure that crosses a lifecycle boundary
    (operator, pipeline, framework, CLI) goes through `handle_error`.
    """

    _instance: Optional['XErrorHandler'] = None
    _lock = threading.Lock()

    def __new__(cls) -> 'XErrorHandler':
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if hasattr(self, '_initialized'):
            return
        self.reporter = XErrorReporter()
        self.retry_mechanism = XRetryMechanism()
        self._hook_installed = False
        self._initialized = True

    def install_global_handler(self) -> None:
        """Route uncaught exceptions through the reporter (called by the CLI)."""
        if self._hook_installed:
            return

        def handle_exception(exc_type, exc_value, exc_traceback):
            if issubclass(exc_type, KeyboardInterrupt):
                sys.__excepthook__(exc_type, exc_value, exc_traceback)
                return
            info = self.reporter.report(exc_value)
            xlogger.error(f"Uncaught exception: {info.message}", data={"error_info": info.to_dict()})

        sys.excepthook = handle_exception
        self._hook_installed = True

    def handle_error(self,
                     exception: Exception,
                     context: Optional[Dict[str, Any]] = None,
                     should_raise: bool = True) -> Optional[ErrorInfo]:
        """
        Log a failure with its classification and context.

        Args:
            exception: Exception to handle
            context: Additional context information
            should_raise: Whether to re-raise the exception after logging

        Returns:
            ErrorInfo when not re-raised, None for a failure already reported upstream
        """
        # A failure re-raised through several lifecycle layers is logged once
        if getattr(exception, "_shapinglab_reported", False):
            if should_raise:
                raise exception
            return None

        info = self.reporter.report(exception, context)
        xlogger.error(f"Error handled: {info.exception_type}: {info.message}",
                      data={"error_id": info.error_id,
                            "severity": info.severity.value,
                            "category": info.category.value,
                            "location": info.location,
                            "context": info.context})
        try:
            exception._shapinglab_reported = True
        except AttributeError:
            pass

        if should_raise:
            raise exception
        return info

    def safe_execute(self, func: Callable, *args, fallback_value: Any = None,
                     retry_enabled: bool = False, **kwargs) -> Any:
        """Execute a function, returning `fallback_value` when it fails."""
        try:
            if retry_enabled:
                return self.retry_mechanism.retry(func, *args, **kwargs)
            return func(*args, **kwargs)
        except Exception as e:
            self.handle_error(e, context={"function": getattr(func, "__qualname__", str(func))},
                              should_raise=False)
            return fallback_value


def safe_execute(func: Optional[Callable] = None,
                 fallback_value: Any = None,
                 retry_enabled: bool = False):
    """
    Decorator for fallback-on-failure execution.

    Args:
        func: Function to decorate (for direct decoration)
        fallback_value: Value to return on error
        retry_enabled: Whether to enable retry mechanism
    """
    def decorator(f: Callable) -> Callable:
        @wraps(f)
        def wrapper(*args, **kwargs):
            return XErrorHandler().safe_execute(
                f, *args,
                fallback_value=fallback_value,
                retry_enabled=retry_enabled,
                **kwargs
            )
        return wrapper

    # Support both @safe_execute and @safe_execute() syntax
    if func is None:
        return decorator
    return decorator(func)


# Global error handler instance
error_handler = XErrorHandler()
