"""
Logger for ShapingLab.

JSON lines go to a daily-rotated file, colored one-liners go to the console.
Behaviour is steered by environment variables so that batch runs, tests and
the CLI can share one process-wide instance:

    SHAPING_LAB_LOG_DIR      directory for the log file (default: logs)
    SHAPING_LAB_LOG_FILE     "0" disables the file handler
    SHAPING_LAB_LOG_CONSOLE  "0" disables the console handler
    SHAPING_LAB_LOG_LEVEL    DEBUG | INFO | WARNING | ERROR (default: INFO)
    SHAPING_LAB_ENV          free-form tag stored in every record (default: dev)

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import time
import logging
import inspect
import orjson

from datetime import datetime
from logging.handlers import TimedRotatingFileHandler


class Colors:
    RESET = "\033[0m"
    RED = "\033[31m"
    GREEN = "\033[32m"
    YELLOW = "\033[33m"
    BLUE = "\033[34m"
    MAGENTA = "\033[35m"
    CYAN = "\033[36m"
    WHITE = "\033[37m"


class ColoredFormatter(logging.Formatter):
    COLORS = {
        'DEBUG': Colors.BLUE,
        'INFO': Colors.GREEN,
        'SUCCESS': Colors.CYAN,
        'WARNING': Colors.YELLOW,
        'ERROR': Colors.RED,
        'CRITICAL': Colors.MAGENTA
    }

    def format(self, record):
        log_message = super().format(record)
        level = getattr(record, 'display_level', record.levelname)
        return f"{self.COLORS.get(level, Colors.WHITE)}{log_message}{Colors.RESET}"


class DailyArchiveFileHandler(TimedRotatingFileHandler):
    """Rotates at midnight and moves the finished day into `daily_backup/`."""

    def __init__(self, log_dir, log_filename, when='midnight', interval=1, backupCount=7, encoding='utf-8'):
        self.log_dir = log_dir
        self.log_filename = log_filename
        super().__init__(os.path.join(log_dir, log_filename), when=when, interval=interval,
                         backupCount=backupCount, encoding=encoding, delay=True)

    def doRollover(self):
        if self.stream:
            self.stream.close()
            self.stream = None

        time_tuple = time.localtime(self.rolloverAt - self.interval)
        archive_dir = os.path.join(self.log_dir, "daily_backup")
        os.makedirs(archive_dir, exist_ok=True)
        archived = os.path.join(archive_dir, f"{time.strftime('%Y%m%d', time_tuple)}_{self.log_filename}")

        if os.path.exists(self.baseFilename):
            os.replace(self.baseFilename, archived)

        if not self.delay:
            self.stream = self._open()

        current_time = int(time.time())
        new_rollover_at = self.computeRollover(current_time)
        while new_rollover_at <= current_time:
            new_rollover_at = new_rollover_at + self.interval
        self.rolloverAt = new_rollover_at


def _env_flag(name: str, default: bool = True) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() not in ("0", "false", "no", "off", "")


class CustomJSONLogger:
    _instance = None

    @classmethod
    def get_instance(cls, log_dir=None, log_filename="shapinglab.log", version=None):
        if cls._instance is None:
            cls._instance = cls(log_dir, log_filename, version)
        return cls._instance

    def __init__(self, log_dir=None, log_filename="shapinglab.log", version=None):
        from shapinglab.version import __version__

        self.log_filename = log_filename
        self.default_version = version or __version__
        self.log_dir = log_dir or os.getenv("SHAPING_LAB_LOG_DIR", "logs")
        self.env = os.getenv("SHAPING_LAB_ENV", "dev")

        self.logger = logging.getLogger("shapinglab")
        self.logger.propagate = False
        self.logger.handlers.clear()
        self.set_level(os.getenv("SHAPING_LAB_LOG_LEVEL", "INFO"))

        self.file_handler = None
        if _env_flag("SHAPING_LAB_LOG_FILE"):
            os.makedirs(self.log_dir, exist_ok=True)
            self.file_handler = DailyArchiveFileHandler(log_dir=self.log_dir, log_filename=self.log_filename)
            self.file_handler.setFormatter(logging.Formatter('%(message)s'))
            self.logger.addHandler(self.file_handler)

        self.console_handler = None
        if _env_flag("SHAPING_LAB_LOG_CONSOLE"):
            self.console_handler = logging.StreamHandler()
            self.console_handler.setFormatter(ColoredFormatter('%(message)s'))
            self.logger.addHandler(self.console_handler)

    def set_level(self, level) -> None:
        """Set the minimum level; accepts a name or a logging constant."""
        if isinstance(level, str):
            level = logging.getLevelName(level.upper())
            if not isinstance(level, int):
                level = logging.INFO
        self.level = level
        self.logger.setLevel(level)

    def get_calling_class(self):
        for frame_info in inspect.stack()[3:6]:
            calling_class = frame_info.frame.f_locals.get('self', None)
            if calling_class is not None and calling_class is not self:
                return calling_class.__class__.__name__
        return None

    @staticmethod
    def get_caller_script_name():
        frame = inspect.currentframe()
        while frame:
            filename = frame.f_code.co_filename
            if filename != __file__:
                return os.path.basename(filename)
            frame = frame.f_back
        return None

    @staticmethod
    def _dumps(payload) -> str:
        return orjson.dumps(
            payload,
            option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS,
            default=str
        ).decode("utf-8")

    def log(self, message, data=None, log_level=logging.DEBUG, category=None, version=None, tags=None,
            display_level=None):
        if log_level < self.level:
            return

        if category is None:
            category = self.get_caller_script_name()

        level_name = display_level or logging.getLevelName(log_level)
        log_data = {
            'time': datetime.now().strftime('%Y-%m-%d %H:%M:%S.%f'),
            'version': version or self.default_version,
            'level': level_name,
            'category': category,
            'tags': tags,
            'env': self.env,
            'message': {'text': str(message)}
        }

        if log_level >= logging.ERROR:
            calling_class = self.get_calling_class()
            if calling_class:
                log_data['message']['classname'] = calling_class

        if data is not None:
            if isinstance(data, dict):
                log_data['message'].update(data)
            else:
                log_data['message']['data'] = data

        console_line = f"{log_data['time']} - {level_name} - {category}: {log_data['message']['text']}"

        if self.file_handler is not None:
            record = logging.LogRecord(self.logger.name, log_level, '', 0, self._dumps(log_data), (), None)
            self.file_handler.handle(record)
        if self.console_handler is not None:
            record = logging.LogRecord(self.logger.name, log_level, '', 0, console_line, (), None)
            record.display_level = level_name
            self.console_handler.handle(record)

    def debug(self, message, data=None, category=None, version=None, tags=None):
        self.log(message, data, log_level=logging.DEBUG, category=category, version=version, tags=tags)

    def info(self, message, data=None, category=None, version=None, tags=None):
        self.log(message, data, log_level=logging.INFO, category=category, version=version, tags=tags)

    # Same threshold as info, rendered with its own label
    def success(self, message, data=None, category=None, version=None, tags=None):
        self.log(message, data, log_level=logging.INFO, category=category, version=version, tags=tags,
                 display_level='SUCCESS')

    def warning(self, message, data=None, category=None, version=None, tags=None):
        self.log(message, data, log_level=logging.WARNING, category=category, version=version, tags=tags)

    def error(self, message, data=None, category=None, version=None, tags=None):
        self.log(message, data, log_level=logging.ERROR, category=category, version=version, tags=tags)


# Create a global logger instance
xlogger = CustomJSONLogger.get_instance()


if __name__ == "__main__":
    xlogger.info("Logger ready", data={"log_dir": xlogger.log_dir})
