"""
Storage for ShapingLab.

Result tables (CSV + meta.json), the binary symbol-frame format and the
on-disk perturbation-kernel cache.

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import struct
import hashlib
import orjson
import numpy as np
import pandas as pd

from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Tuple, Union
from datetime import datetime
from pathlib import Path

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import (
    FrameError, SchemaError, error_handler, retry_on_failure, safe_execute
)


RESULT_COLUMNS = ["preset", "series", "seed", "x", "y", "ci_lo", "ci_hi"]


def file_md5(file_path: str) -> str:
    """MD5 of a file for integrity checking."""
    hash_md5 = hashlib.md5()
    with open(file_path, "rb") as f:
        for chunk in iter(lambda: f.read(4096), b""):
            hash_md5.update(chunk)
    return hash_md5.hexdigest()


class ShapingLabStorage(ABC):
    """Abstract base class for result storage."""

    @abstractmethod
    def read(self) -> Any:
        """Read stored data."""

    @abstractmethod
    def write(self, data: Any, meta: Optional[Dict[str, Any]] = None) -> str:
        """Write data; returns the written path."""

    @abstractmethod
    def validate_integrity(self, file_path: str) -> bool:
        """Check a stored file."""


class ResultStorage(ShapingLabStorage):
    """
    Long-format result table writer/reader.

    `results.csv` has the columns preset, series, seed, x, y, ci_lo, ci_hi.
    Rows are sorted and floats rendered with a fixed format, so the same rows
    always produce the same bytes. `meta.json` records config, seeds, package
    version and the CSV md5.
    """

    CSV_NAME = "results.csv"
    META_NAME = "meta.json"
    FLOAT_FORMAT = "%.12g"

    def __init__(self, output_dir: str):
        self.output_dir = output_dir
        self.csv_path = os.path.join(output_dir, self.CSV_NAME)
        self.meta_path = os.path.join(output_dir, self.META_NAME)

    @staticmethod
    def normalize(data: Union[pd.DataFrame, List[Dict[str, Any]]]) -> pd.DataFrame:
        """Coerce rows into the canonical column order and dtypes."""
        frame = pd.DataFrame(data) if not isinstance(data, pd.DataFrame) else data.copy()
        missing = [col for col in ["preset", "series", "x", "y"] if col not in frame.columns]
        if missing:
            raise SchemaError(f"Result rows lack required columns: {missing}")
        if "seed" not in frame.columns:
            frame["seed"] = -1
        for col in ("ci_lo", "ci_hi"):
            if col not in frame.columns:
                frame[col] = np.nan
        frame = frame[RESULT_COLUMNS]
        frame["preset"] = frame["preset"].astype(str)
        frame["series"] = frame["series"].astype(str)
        frame["seed"] = frame["seed"].astype(np.int64)
        for col in ("x", "y", "ci_lo", "ci_hi"):
            frame[col] = frame[col].astype(float)
        return frame.sort_values(["preset", "series", "seed", "x"], kind="mergesort").reset_index(drop=True)

    @retry_on_failure(max_retries=2)
    def write(self, data: Union[pd.DataFrame, List[Dict[str, Any]]], meta: Optional[Dict[str, Any]] = None) -> str:
        """
        Write results.csv and meta.json.

        Args:
            data: rows (DataFrame or list of dicts)
            meta: metadata merged into meta.json

        Returns:
            Path to results.csv
        """
        frame = self.normalize(data)
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)
        frame.to_csv(self.csv_path, index=False, float_format=self.FLOAT_FORMAT, lineterminator="\n")

        payload = dict(meta or {})
        payload["rows"] = int(len(frame))
        payload["csv_md5"] = file_md5(self.csv_path)
        payload.setdefault("written_at", datetime.now().isoformat(timespec="seconds"))
        with open(self.meta_path, "wb") as f:
            f.write(orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS
                                 | orjson.OPT_SERIALIZE_NUMPY, default=str))

        xlogger.success(f"Wrote {len(frame)} result rows to {self.csv_path}")
        return self.csv_path

    def read(self) -> pd.DataFrame:
        return self.read_csv(self.csv_path)

    @staticmethod
    def read_csv(path: str) -> pd.DataFrame:
        """Read a results.csv, checking the schema."""
        if not os.path.exists(path):
            raise FileNotFoundError(f"Result file not found: {path}")
        frame = pd.read_csv(path, encoding="utf-8")
        if list(frame.columns) != RESULT_COLUMNS:
            raise SchemaError(f"{path}: expected columns {RESULT_COLUMNS}, found {list(frame.columns)}")
        frame["preset"] = frame["preset"].astype(str)
        frame["series"] = frame["series"].astype(str)
        return frame

    def read_meta(self) -> Dict[str, Any]:
        with open(self.meta_path, "rb") as f:
            return orjson.loads(f.read())

    def validate_integrity(self, file_path: Optional[str] = None) -> bool:
        """Compare the CSV md5 with the value stored in meta.json."""
        file_path = file_path or self.csv_path
        try:
            return self.read_meta().get("csv_md5") == file_md5(file_path)
        except Exception as e:
            error_handler.handle_error(e, context={"file_path": file_path}, should_raise=False)
            return False


class _BinaryCodec:
    """magic (4 bytes) | u32 little-endian header length | JSON header | payload."""

    MAGIC = b"????"

    @classmethod
    def pack_header(cls, header: Dict[str, Any]) -> bytes:
        raw = orjson.dumps(header, option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY)
        return cls.MAGIC + struct.pack("<I", len(raw)) + raw

    @classmethod
    def unpack_header(cls, blob: bytes) -> Tuple[Dict[str, Any], int]:
        if len(blob) < 8 or blob[:4] != cls.MAGIC:
            raise FrameError(f"Bad magic: expected {cls.MAGIC!r}, found {blob[:4]!r}")
        (length,) = struct.unpack("<I", blob[4:8])
        if len(blob) < 8 + length:
            raise FrameError("Truncated header")
        return orjson.loads(blob[8:8 + length]), 8 + length


class FrameCodec(_BinaryCodec):
    """
    Binary symbol-frame format.

    Payload: per polarization, `n_symbols` complex values stored as
    little-endian f64 interleaved (re, im).
    """

    MAGIC = b"SLFR"

    @classmethod
    def encode(cls, header: Dict[str, Any], pols: List[np.ndarray]) -> bytes:
        lengths = {len(p) for p in pols}
        if len(lengths) != 1:
            raise FrameError(f"Polarizations differ in length: {sorted(lengths)}")
        header = dict(header, n_pol=len(pols), n_symbols=int(next(iter(lengths))))
        body = b"".join(np.ascontiguousarray(p, dtype="<c16").tobytes() for p in pols)
        return cls.pack_header(header) + body

    @classmethod
    def decode(cls, blob: bytes) -> Tuple[Dict[str, Any], List[np.ndarray]]:
        header, offset = cls.unpack_header(blob)
        n_pol, n_sym = int(header["n_pol"]), int(header["n_symbols"])
        expected = n_pol * n_sym * 16
        if len(blob) - offset != expected:
            raise FrameError(f"Payload size {len(blob) - offset} does not match header ({expected} bytes)")
        data = np.frombuffer(blob, dtype="<c16", offset=offset).astype(np.complex128)
        return header, [data[i * n_sym:(i + 1) * n_sym].copy() for i in range(n_pol)]

    @classmethod
    @retry_on_failure(max_retries=2)
    def write(cls, path: str, header: Dict[str, Any], pols: List[np.ndarray]) -> str:
        Path(os.path.dirname(os.path.abspath(path))).mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(cls.encode(header, pols))
        return path

    @classmethod
    def read(cls, path: str) -> Tuple[Dict[str, Any], List[np.ndarray]]:
        with open(path, "rb") as f:
            return cls.decode(f.read())


class KernelCache(_BinaryCodec):
    """
    Disk cache for perturbation coefficients keyed by link hash.

    File: magic `SLPK`, header (link hash, w_mem, pulse, lag layout),
    complex128 little-endian coefficient array.
    """

    MAGIC = b"SLPK"

    def __init__(self, cache_dir: str, enabled: bool = True):
        self.cache_dir = os.path.expanduser(cache_dir)
        self.enabled = enabled

    def path_for(self, key: str) -> str:
        return os.path.join(self.cache_dir, f"{key}.slpk")

    def _load(self, key: str) -> Optional[Tuple[Dict[str, Any], np.ndarray]]:
        path = self.path_for(key)
        if not os.path.exists(path):
            return None
        with open(path, "rb") as f:
            blob = f.read()
        header, offset = self.unpack_header(blob)
        data = np.frombuffer(blob, dtype="<c16", offset=offset).astype(np.complex128)
        shape = tuple(header.get("shape", (data.size,)))
        xlogger.debug(f"Kernel cache hit: {path}")
        return header, data.reshape(shape)

    # A corrupt entry is treated as a miss and recomputed
    @safe_execute(fallback_value=None)
    def load(self, key: str) -> Optional[Tuple[Dict[str, Any], np.ndarray]]:
        if not self.enabled:
            return None
        return self._load(key)

    @retry_on_failure(max_retries=2)
    def save(self, key: str, header: Dict[str, Any], coefficients: np.ndarray) -> Optional[str]:
        if not self.enabled:
            return None
        Path(self.cache_dir).mkdir(parents=True, exist_ok=True)
        header = dict(header, shape=list(coefficients.shape))
        path = self.path_for(key)
        tmp_path = f"{path}.tmp{os.getpid()}"
        with open(tmp_path, "wb") as f:
            f.write(self.pack_header(header))
            f.write(np.ascontiguousarray(coefficients, dtype="<c16").tobytes())
        os.replace(tmp_path, path)
        xlogger.debug(f"Kernel cached: {path}")
        return path

