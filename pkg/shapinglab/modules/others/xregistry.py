"""
Registries for ShapingLab.

Name -> object maps for operators, pipelines, frameworks, and the domain
extension points: shapers, selection metrics, CPR variants and experiment
presets.

@author: rookielittleblack
@date:   2025-09-02
"""
from typing import Any, Dict, List, Optional
from threading import Lock
from rich.table import Table
from rich.console import Console
from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, error_handler


class Registry:
    """
    Thread-safe registry mapping names to classes or callables.

    Entries carry metadata (module, class name and whatever the registering
    decorator passes, typically a `description`).
    """

    def __init__(self, name: str):
        self._name = name
        self._entries: Dict[str, Any] = {}
        self._metadata: Dict[str, Dict[str, Any]] = {}
        self._lock = Lock()

    @property
    def name(self) -> str:
        return self._name

    def register(self, obj: Optional[Any] = None, name: Optional[str] = None,
                 metadata: Optional[Dict[str, Any]] = None):
        """
        Register an object, directly or as a decorator.

        Args:
            obj: Object to register (None for decorator usage)
            name: Registry key (defaults to `obj.__name__`)
            metadata: Extra metadata, e.g. a one-line description

        Returns:
            The registered object, or a decorator when `obj` is None
        """
        def _register(target: Any) -> Any:
            key = name or target.__name__
            try:
                self._check(key, target)
                with self._lock:
                    if self._entries.get(key, target) is not target:
                        xlogger.warning(f"'{key}' re-registered in the {self._name} registry")
                    self._entries[key] = target
                    self._metadata[key] = {
                        'module': getattr(target, '__module__', 'unknown'),
                        'class_name': getattr(target, '__name__', type(target).__name__),
                        **(metadata or {})
                    }
                return target
            except Exception as e:
                error_handler.handle_error(e, context={'registry': self._name, 'key': key}, should_raise=True)

        if obj is None:
            return _register
        return _register(obj)

    def _check(self, key: str, target: Any) -> None:
        if not key:
            raise ConfigError("Registration name cannot be empty")
        if not callable(target):
            raise ConfigError(f"'{key}' must be callable or a class")
        if self._name == 'operator' and not callable(getattr(target, 'run', None)):
            raise ConfigError(f"Operator '{key}' must have callable 'run' method")

    def get(self, name: str) -> Any:
        """
        Look up a registered object.

        Raises:
            ConfigError: unknown name (the message lists the available names)
        """
        with self._lock:
            entry = self._entries.get(name)
            available = ", ".join(sorted(self._entries)) or "<none>"
        if entry is None:
            raise ConfigError(f"No object named '{name}' found in '{self._name}' registry; "
                              f"available: {available}")
        return entry

    def get_metadata(self, name: str) -> Optional[Dict[str, Any]]:
        return self._metadata.get(name)

    def __contains__(self, name: str) -> bool:
        with self._lock:
            return name in self._entries

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def keys(self) -> List[str]:
        with self._lock:
            return list(self._entries)

    def __repr__(self) -> str:
        table = Table(title=f'{self._name} registry')
        table.add_column('Name', style='cyan')
        table.add_column('Object', style='green')
        table.add_column('Description', style='yellow')
        with self._lock:
            for key in sorted(self._entries):
                meta = self._metadata[key]
                table.add_row(key, meta['class_name'], meta.get('description', ''))

        console = Console(width=120)
        with console.capture() as capture:
            console.print(table, end='')
        return capture.get()


# Lifecycle registries
OPERATOR_REGISTRY = Registry('operator')
PIPELINE_REGISTRY = Registry('pipeline')
FRAMEWORK_REGISTRY = Registry('framework')

# Domain extension points
SHAPER_REGISTRY = Registry('shaper')
METRIC_REGISTRY = Registry('metric')
CPR_REGISTRY = Registry('cpr')
PRESET_REGISTRY = Registry('preset')
