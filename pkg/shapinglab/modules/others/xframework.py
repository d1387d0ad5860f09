"""
Framework abstract base class for ShapingLab.

A framework owns one experiment run end to end: it prepares its pipelines,
executes, and writes results through `ResultStorage`.

State transitions:
    INITIALIZED -> prepare() -> CONFIGURED -> run() -> RUNNING -> COMPLETED/FAILED

@author: rookielittleblack
@date:   2025-09-02
"""
import time

from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Type
from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ShapingLabError, error_handler
from shapinglab.utils.xstorage import ResultStorage
from shapinglab.modules.others.xpipeline import PipelineABC
from shapinglab.modules.others.xregistry import FRAMEWORK_REGISTRY


def register_framework(name: str):
    """
    Decorator for registering framework classes.

    Example:
        @register_framework("experiment")
        class XFramework_Exp(FrameworkABC):
            pass
    """
    def decorator(framework_class):
        FRAMEWORK_REGISTRY.register(framework_class, name)
        return framework_class
    return decorator


class FrameworkState(Enum):
    """Framework lifecycle states."""
    INITIALIZED = "INITIALIZED"
    PREPARING = "PREPARING"
    CONFIGURED = "CONFIGURED"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


FRAMEWORK_HOOK_EVENTS = ("before_prepare", "after_prepare", "before_run", "after_run", "on_error")


class FrameworkABC(ABC):
    """
    Abstract base class for experiment frameworks.

    Usage:
        framework = XFramework_Exp(output_dir="results/", config={...})
        results = framework.run()  # prepares on first use
    """

    VERSION: str = "1.0.0"
    REQUIRED_PIPELINES: List[str] = []

    def __init__(self, output_dir: str, config: Optional[Dict[str, Any]] = None,
                 max_workers: Optional[int] = None):
        self.output_dir = output_dir
        self.config: Dict[str, Any] = dict(config or {})
        self.max_workers = max_workers
        self.state = FrameworkState.INITIALIZED
        self.metrics = {"elapsed": 0.0, "rows_written": 0, "error_count": 0}

        self.storage: Optional[ResultStorage] = None
        self.pipelines: Dict[str, PipelineABC] = {}
        self._hooks: Dict[str, List[Callable]] = {event: [] for event in FRAMEWORK_HOOK_EVENTS}
        self._initialize()

    def _initialize(self) -> None:
        try:
            self.storage = ResultStorage(self.output_dir)
            self._on_init()
        except Exception as e:
            self._fail(e, "initialization")

    def _fail(self, exception: Exception, stage: str) -> None:
        self.state = FrameworkState.FAILED
        self.metrics["error_count"] += 1
        error_handler.handle_error(
            exception,
            context={"framework": self.__class__.__name__, "stage": stage, "output_dir": self.output_dir},
            should_raise=True
        )

    def _execute_hooks(self, event: str, *args) -> None:
        for hook in self._hooks[event]:
            try:
                hook(self, *args)
            except Exception as e:
                xlogger.error(f"{event} hook of {self.__class__.__name__} failed: {e}")

    @abstractmethod
    def _on_init(self) -> None:
        """Framework-specific initialization (config validation)."""

    @abstractmethod
    def _prepare_components(self) -> None:
        """Build pipelines."""

    @abstractmethod
    def _execute_pipeline(self) -> Dict[str, Any]:
        """Run the experiment; returns a result dict containing `rows`."""

    @abstractmethod
    def get_desc(self, lang: str = "en") -> str:
        """Get framework description."""

    def add_pipeline(self, name: str, pipeline: PipelineABC) -> 'FrameworkABC':
        self.pipelines[name] = pipeline
        return self

    def add_hook(self, event: str, callback: Callable) -> 'FrameworkABC':
        """Attach a callback; "after_run" receives the results, "on_error" the exception."""
        if event not in self._hooks:
            xlogger.warning(f"Unknown hook event: {event}", data={"known": list(FRAMEWORK_HOOK_EVENTS)})
            return self
        self._hooks[event].append(callback)
        return self

    def prepare(self) -> 'FrameworkABC':
        """Build the pipelines and check that the required ones exist."""
        try:
            if self.state not in (FrameworkState.INITIALIZED, FrameworkState.CONFIGURED):
                raise ShapingLabError(f"Cannot prepare framework in state: {self.state.value}")
            self.state = FrameworkState.PREPARING
            self._execute_hooks("before_prepare")
            self._prepare_components()
            missing = [name for name in self.REQUIRED_PIPELINES if name not in self.pipelines]
            if missing:
                raise ShapingLabError(f"Required pipelines not found: {', '.join(missing)}")
            self._execute_hooks("after_prepare")
            self.state = FrameworkState.CONFIGURED
            return self
        except Exception as e:
            self._fail(e, "preparation")

    def run(self) -> Dict[str, Any]:
        """
        Execute the framework, preparing first when needed.

        Raises:
            ShapingLabError: invalid state or any failure inside the run
        """
        if self.state == FrameworkState.INITIALIZED:
            self.prepare()
        try:
            if self.state != FrameworkState.CONFIGURED:
                raise ShapingLabError(f"Framework cannot run in state {self.state.value}; "
                                      f"expected INITIALIZED or CONFIGURED")
            self.state = FrameworkState.RUNNING
            started = time.perf_counter()
            self._execute_hooks("before_run")

            results = self._execute_pipeline()

            self.metrics["elapsed"] = time.perf_counter() - started
            self.metrics["rows_written"] = len(results.get("rows", []))
            self._execute_hooks("after_run", results)
            self.state = FrameworkState.COMPLETED
            xlogger.success(f"{self.__class__.__name__} completed in {self.metrics['elapsed']:.2f}s",
                            data={"rows": self.metrics["rows_written"]})
            return results
        except Exception as e:
            self._execute_hooks("on_error", e)
            self._fail(e, "execution")

    def get_info(self) -> Dict[str, Any]:
        return {
            "name": self.__class__.__name__,
            "version": self.VERSION,
            "description": self.get_desc(),
            "state": self.state.value,
            "metrics": dict(self.metrics),
            "pipelines": sorted(self.pipelines),
        }

    def __repr__(self) -> str:
        return (f"{self.__class__.__name__}(state={self.state.value}, "
                f"rows={self.metrics['rows_written']}, errors={self.metrics['error_count']})")


def create_framework(name: str, output_dir: str, config: Optional[Dict[str, Any]] = None,
                     max_workers: Optional[int] = None) -> FrameworkABC:
    """Instantiate a registered framework by name."""
    framework_class: Type[FrameworkABC] = FRAMEWORK_REGISTRY.get(name)
    return framework_class(output_dir=output_dir, config=config, max_workers=max_workers)
