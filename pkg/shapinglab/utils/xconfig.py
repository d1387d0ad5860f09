"""
Config for ShapingLab.

YAML or JSON runtime settings, plus validation of JSON experiment/link files
into pydantic models.

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import yaml
import orjson

from typing import Any, Dict, Optional, Type, TypeVar
from pydantic import BaseModel, ValidationError

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError


DEFAULT_CONFIG_PATH = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                   "config", "config.yaml")

ModelT = TypeVar("ModelT", bound=BaseModel)


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Read a YAML or JSON file into a dict.

    Raises:
        ConfigError: missing file or unparsable content
    """
    if not os.path.exists(path):
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.endswith(".json"):
            with open(path, "rb") as f:
                content = orjson.loads(f.read())
        else:
            with open(path, "r", encoding="utf-8") as f:
                content = yaml.safe_load(f)
    except (orjson.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}") from e
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigError(f"Config file {path} must contain a mapping, got {type(content).__name__}")
    return content


def format_validation_error(error: ValidationError) -> str:
    """One line per offending field: `field.path: message`."""
    lines = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
        lines.append(f"{loc}: {item.get('msg')}")
    return "; ".join(lines)


def validate_model(data: Dict[str, Any], model_cls: Type[ModelT], source: str = "<dict>") -> ModelT:
    """Validate a dict into `model_cls`, converting pydantic errors to ConfigError."""
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model_cls.__name__} in {source}: {format_validation_error(e)}") from e


def load_model(path: str, model_cls: Type[ModelT]) -> ModelT:
    """Load a YAML/JSON file and validate it into `model_cls`."""
    return validate_model(read_config_file(path), model_cls, source=path)


class XConfigLoader:
    """Config loader for ShapingLab runtime settings."""

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize the config loader.

        Args:
            config_path: config file path, default is shapinglab/config/config.yaml
        """
        self.config_path = config_path or DEFAULT_CONFIG_PATH
        self.config: Dict[str, Any] = {}
        self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load the config file."""
        try:
            self.config = read_config_file(self.config_path)
            xlogger.debug(f"Loaded config file: {self.config_path}")
            return self.config
        except ConfigError as e:
            xlogger.error(f"Failed to load config file: {e}")
            raise

    def get(self, key: str, default: Any = None) -> Any:
        """Dotted-path lookup, e.g. `get("runtime.threads")`."""
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def get_logging_config(self) -> Dict[str, Any]:
        """Get the logging section."""
        return self.config.get("logging", {})

    def get_runtime_config(self) -> Dict[str, Any]:
        """Get the runtime section; `SHAPING_LAB_THREADS` overrides `threads`."""
        runtime = dict(self.config.get("runtime", {}))
        env_threads = os.getenv("SHAPING_LAB_THREADS")
        if env_threads:
            try:
                runtime["threads"] = max(1, int(env_threads))
            except ValueError:
                xlogger.warning(f"Ignoring non-integer SHAPING_LAB_THREADS={env_threads!r}")
        return runtime

    def get_bootstrap_config(self) -> Dict[str, Any]:
        """Get the bootstrap section (resample count, confidence level)."""
        return self.config.get("bootstrap", {})

    def get_cache_config(self) -> Dict[str, Any]:
        """Get the cache section; `SHAPING_LAB_CACHE_DIR` overrides `dir`."""
        cache = dict(self.config.get("cache", {}))
        cache_dir = os.getenv("SHAPING_LAB_CACHE_DIR") or cache.get("dir") or "~/.cache/shapinglab"
        cache["dir"] = os.path.expanduser(cache_dir)
        return cache

    @staticmethod
    def load_model(path: str, model_cls: Type[ModelT]) -> ModelT:
        """Load and validate a model file, see `load_model`."""
        return load_model(path, model_cls)


_default_loader: Optional[XConfigLoader] = None


def get_config() -> XConfigLoader:
    """Process-wide loader for the packaged defaults."""
    global _default_loader
    if _default_loader is None:
        _default_loader = XConfigLoader()
    return _default_loader


# Run as a script to check the functions: `python -m shapinglab.utils.xconfig`
if __name__ == "__main__":
    config_loader = XConfigLoader()
    xlogger.info("runtime", data=config_loader.get_runtime_config())
    xlogger.info("cache", data=config_loader.get_cache_config())
    xlogger.info("bootstrap", data=config_loader.get_bootstrap_config())
