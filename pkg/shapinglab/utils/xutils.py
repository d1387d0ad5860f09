"""
Reusable helpers for ShapingLab: unit conversions, bit helpers, bootstrap
confidence intervals and the worker pool used by sweeps and selection.

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import math
import numpy as np

from typing import Any, Callable, Iterable, List, Optional, Sequence, Tuple, TypeVar
from concurrent.futures import ThreadPoolExecutor
from tqdm import tqdm

from shapinglab.utils.xlogger import xlogger  # Please import xlogger from `shapinglab.utils.xlogger`, not `shapinglab.utils`
from shapinglab.utils.xconfig import get_config

T = TypeVar("T")
R = TypeVar("R")


# ---------------------------------------------------------------- units

def db_to_linear(value_db):
    """10^(x/10), works on scalars and arrays."""
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """10·log10(x); zero maps to -inf."""
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(value, dtype=float))


def dbm_to_watt(power_dbm):
    return 1e-3 * db_to_linear(power_dbm)


def watt_to_dbm(power_w):
    return linear_to_db(np.asarray(power_w, dtype=float) / 1e-3)


# ---------------------------------------------------------------- bits

def bits_to_int(bits: Sequence[int]) -> int:
    """MSB-first bit sequence to a Python int (arbitrary size)."""
    value = 0
    for bit in bits:
        value = (value << 1) | (int(bit) & 1)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Python int to an MSB-first uint8 array of `width` bits."""
    if value < 0 or (width < value.bit_length()):
        raise ValueError(f"{value} does not fit into {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


# ---------------------------------------------------------------- statistics

def compensated_sum(values: Iterable[float]) -> float:
    """Exactly rounded float sum (Shewchuk), used for moments."""
    return math.fsum(values)


def bootstrap_ci(samples: np.ndarray,
                 statistic: Callable[[np.ndarray], float] = np.mean,
                 n_resamples: Optional[int] = None,
                 confidence: Optional[float] = None,
                 seed: int = 0) -> Tuple[float, float]:
    """
    Percentile bootstrap confidence interval.

    Args:
        samples: 1-D sample array (or 2-D with observations along axis 0)
        statistic: function of a resampled array returning a scalar
        n_resamples: number of bootstrap resamples (config `bootstrap.resamples` when None)
        confidence: two-sided confidence level (config `bootstrap.confidence` when None)
        seed: resampling seed; results depend on nothing else

    Returns:
        (low, high)
    """
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n == 0:
        raise ValueError("bootstrap_ci needs at least one sample")
    settings = get_config().get_bootstrap_config()
    n_resamples = int(settings.get("resamples", 200) if n_resamples is None else n_resamples)
    confidence = float(settings.get("confidence", 0.95) if confidence is None else confidence)
    rng = np.random.default_rng(seed)
    stats = np.empty(n_resamples)
    for i in range(n_resamples):
        stats[i] = statistic(samples[rng.integers(0, n, size=n)])
    alpha = (1.0 - confidence) / 2.0
    low, high = np.quantile(stats, [alpha, 1.0 - alpha])
    return float(low), float(high)


def mean_ci(samples: np.ndarray, confidence: Optional[float] = None) -> Tuple[float, float, float]:
    """Mean with a normal-approximation CI: (mean, low, high); level from `bootstrap.confidence` when None."""
    if confidence is None:
        confidence = float(get_config().get_bootstrap_config().get("confidence", 0.95))
    samples = np.asarray(samples, dtype=float)
    mean = float(np.mean(samples))
    if samples.size < 2:
        return mean, mean, mean
    from scipy.stats import norm
    half = norm.ppf(0.5 + confidence / 2.0) * float(np.std(samples, ddof=1)) / math.sqrt(samples.size)
    return mean, mean - half, mean + half


# ---------------------------------------------------------------- worker pool

def resolve_workers(max_workers: Optional[int] = None) -> int:
    """Worker count capped by `runtime.threads` (`SHAPING_LAB_THREADS` overrides; CPU count when unset)."""
    threads = get_config().get_runtime_config().get("threads")
    limit = max(1, int(threads)) if threads else (os.cpu_count() or 1)
    if max_workers is None:
        return limit
    return max(1, min(int(max_workers), limit))


def run_parallel(func: Callable[[T], R],
                 items: Sequence[T],
                 max_workers: Optional[int] = None,
                 desc: Optional[str] = None,
                 show_progress: bool = False) -> List[R]:
    """
    Apply `func` to every item with a thread pool; results keep input order.

    numpy/scipy release the GIL inside FFTs and BLAS, so threads scale for the
    heavy stages. With one worker the loop runs inline.
    """
    items = list(items)
    workers = resolve_workers(max_workers)
    if workers <= 1 or len(items) <= 1:
        iterator = tqdm(items, desc=desc, disable=not show_progress)
        return [func(item) for item in iterator]

    results: List[Any] = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(func, item): idx for idx, item in enumerate(items)}
        with tqdm(total=len(items), desc=desc, disable=not show_progress) as pbar:
            for future, idx in futures.items():
                results[idx] = future.result()
                pbar.update(1)
    return results


# Run as a script to check the functions: `python -m shapinglab.utils.xutils`
if __name__ == "__main__":
    xlogger.info(f"db_to_linear(3) = {float(db_to_linear(3)):.4f}")
    xlogger.info(f"bits_to_int([1, 0, 1]) = {bits_to_int([1, 0, 1])}")
    xlogger.info(f"run_parallel(square) = {run_parallel(lambda v: v * v, range(5))}")
