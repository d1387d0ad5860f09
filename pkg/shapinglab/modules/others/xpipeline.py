"""
Pipeline abstract base class for ShapingLab.

A pipeline chains operators (e.g. shaper -> channel -> receiver) and passes a
context dict from one stage to the next.

@author: rookielittleblack
@date:   2025-09-02
"""
import time

from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Optional
from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import error_handler
from shapinglab.modules.others.xoperator import OperatorABC
from shapinglab.modules.others.xregistry import PIPELINE_REGISTRY


def register_pipeline(name: str):
    """
    Decorator for registering pipeline classes.

    Example:
        @register_pipeline("link")
        class LinkPipeline(PipelineABC):
            pass
    """
    def decorator(pipeline_class):
        PIPELINE_REGISTRY.register(pipeline_class, name)
        return pipeline_class
    return decorator


class PipelineState(Enum):
    """Pipeline lifecycle states."""
    INITIALIZED = "INITIALIZED"
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


class PipelineABC(ABC):
    """
    Abstract base class for operator pipelines.

    Subclasses add their operators in `_configure_operators()` and implement
    `run(context)`; `execute(context)` wraps it with timing and error routing.
    """

    VERSION = "1.0.0"

    def __init__(self, max_workers: Optional[int] = None, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            max_workers: worker threads for fan-out stages (None: SHAPING_LAB_THREADS)
            config: pipeline configuration
        """
        self.max_workers = max_workers
        self.config: Dict[str, Any] = dict(config or {})
        self.state = PipelineState.INITIALIZED
        self.metrics = {"execution_count": 0, "error_count": 0, "total_time": 0.0, "last_time": None}
        self.operators: List[OperatorABC] = []
        self._configure_operators()

    @abstractmethod
    def _configure_operators(self) -> None:
        """Configure and add operators to the pipeline."""

    @abstractmethod
    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        """
        Execute the pipeline on a context dict and return the updated context.
        """

    @abstractmethod
    def get_desc(self, lang: str = "en") -> str:
        """Get pipeline description."""

    def add_operator(self, operator: OperatorABC) -> 'PipelineABC':
        self.operators.append(operator)
        xlogger.debug(f"Added operator {operator.__class__.__name__} to pipeline")
        return self

    def execute(self, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Run with lifecycle bookkeeping; failures are reported and re-raised."""
        start = time.perf_counter()
        self.state = PipelineState.RUNNING
        self.metrics["execution_count"] += 1
        try:
            result = self.run(dict(context or {}))
            elapsed = time.perf_counter() - start
            self.metrics["total_time"] += elapsed
            self.metrics["last_time"] = elapsed
            self.state = PipelineState.COMPLETED
            return result
        except Exception as e:
            self.state = PipelineState.FAILED
            self.metrics["error_count"] += 1
            error_handler.handle_error(
                e,
                context={"pipeline": self.__class__.__name__,
                         "operators": [op.__class__.__name__ for op in self.operators]},
                should_raise=True
            )

    def __repr__(self) -> str:
        return (f"{self.__class__.__name__}("
                f"state={self.state.value}, "
                f"operators={len(self.operators)}, "
                f"executions={self.metrics['execution_count']})")
