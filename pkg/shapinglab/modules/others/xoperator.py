"""
Operator abstract base class for ShapingLab.

An operator is one stage of a link experiment (transmitter, fiber channel,
receiver, selector). The base class owns the lifecycle: hooks, timing metrics
and error routing.

@author: rookielittleblack
@date:   2025-09-02
"""
import time

from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Callable, Dict, List, Optional
from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import error_handler
from shapinglab.modules.others.xregistry import OPERATOR_REGISTRY


def register_operator(name: str):
    """
    Decorator for registering operator classes.

    Example:
        @register_operator("transmitter")
        class XTransmitter(OperatorABC):
            pass
    """
    def decorator(operator_class):
        OPERATOR_REGISTRY.register(operator_class, name)
        return operator_class
    return decorator


class OperatorState(Enum):
    """Operator lifecycle states."""
    INITIALIZED = "INITIALIZED"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


HOOK_EVENTS = ("before_run", "after_run", "on_error")


class OperatorABC(ABC):
    """
    Abstract base class for all operators in ShapingLab.

    Subclasses implement `run()` and `get_desc()`; callers use `execute()`,
    which wraps `run()` with hooks, timing and error reporting. Failures are
    logged once and re-raised.
    """

    VERSION = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config: Dict[str, Any] = dict(config or {})
        self.state = OperatorState.INITIALIZED
        self.metrics = {"execution_count": 0, "error_count": 0, "total_time": 0.0, "last_time": None}
        self._hooks: Dict[str, List[Callable]] = {event: [] for event in HOOK_EVENTS}
        self._on_init()

    def _on_init(self) -> None:
        """Hook called during initialization. Override in subclasses."""

    def _on_configure(self) -> None:
        """Validate `self.config`; subclasses call it from `_on_init`."""

    @abstractmethod
    def run(self, *args, **kwargs) -> Any:
        """Main function to run the operator."""

    @abstractmethod
    def get_desc(self, lang: str = "en") -> str:
        """
        Get description of the operator.

        Args:
            lang: "en" for English, "zh" for Chinese
        """

    def add_hook(self, event: str, callback: Callable) -> 'OperatorABC':
        """
        Attach a callback to "before_run", "after_run" (receives the result) or
        "on_error" (receives the exception). Callbacks get the operator first.
        """
        if event not in self._hooks:
            xlogger.warning(f"Unknown hook event: {event}", data={"known": list(HOOK_EVENTS)})
            return self
        self._hooks[event].append(callback)
        return self

    def _execute_hooks(self, event: str, *args) -> None:
        for hook in self._hooks[event]:
            try:
                hook(self, *args)
            except Exception as e:
                xlogger.error(f"{event} hook of {self.__class__.__name__} failed: {e}")

    def execute(self, *args, **kwargs) -> Any:
        """
        Run the operator with lifecycle bookkeeping.

        Returns:
            Result of `run()`
        """
        name = self.__class__.__name__
        start = time.perf_counter()
        self.state = OperatorState.RUNNING
        self.metrics["execution_count"] += 1
        try:
            self._execute_hooks("before_run")
            result = self.run(*args, **kwargs)
        except Exception as e:
            self.state = OperatorState.FAILED
            self.metrics["error_count"] += 1
            self._execute_hooks("on_error", e)
            error_handler.handle_error(
                e,
                context={"operator": name, "execution": self.metrics["execution_count"],
                         "config_keys": sorted(self.config)},
                should_raise=True
            )

        elapsed = time.perf_counter() - start
        self.state = OperatorState.COMPLETED
        self.metrics["total_time"] += elapsed
        self.metrics["last_time"] = elapsed
        self._execute_hooks("after_run", result)
        xlogger.debug(f"{name} finished in {elapsed:.3f}s")
        return result

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.__class__.__name__,
            "version": self.VERSION,
            "description": self.get_desc(),
            "state": self.state.value,
            "metrics": dict(self.metrics),
        }

    def __repr__(self) -> str:
        return (f"{self.__class__.__name__}(state={self.state.value}, "
                f"executions={self.metrics['execution_count']}, errors={self.metrics['error_count']})")


def get_operator(operator_name: str, config: Optional[Dict[str, Any]] = None) -> OperatorABC:
    """
    Instantiate a registered operator.

    Raises:
        ConfigError: unknown operator name
    """
    operator_class = OPERATOR_REGISTRY.get(operator_name)
    try:
        return operator_class(config)
    except Exception as e:
        error_handler.handle_error(e, context={"operator_name": operator_name}, should_raise=True)
