"""
Achievable information rate under bit-metric decoding.

Monte Carlo estimation with a mismatched Gaussian auxiliary channel, and a
Gauss-Hermite evaluation on the AWGN channel used as a reference.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from typing import Any, Optional, Tuple
from dataclasses import dataclass
from scipy.special import logsumexp

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xconfig import get_config
from shapinglab.utils.xerror_handler import ConstellationError, FrameError
from shapinglab.modules.constellation.qam_constellation import Constellation, build_qam, entropy


NOISE_FLOOR = 1e-12
CHUNK = 16384


@dataclass(frozen=True)
class AirEstimate:
    """AIR in bits per 2 real dimensions with its Monte Carlo standard error."""
    value: float
    stderr: float
    n: int
    pilot_rate: float = 0.0

    def __float__(self) -> float:
        return self.value

    @property
    def ci(self) -> Tuple[float, float]:
        return self.value - 1.96 * self.stderr, self.value + 1.96 * self.stderr


def _data_symbols(obj: Any) -> Tuple[np.ndarray, float]:
    """Flatten a frame (anything with `data_symbols()`) or an array; returns (symbols, pilot_rate)."""
    if hasattr(obj, "data_symbols"):
        return np.asarray(obj.data_symbols(), dtype=np.complex128).ravel(), float(getattr(obj, "pilot_rate", 0.0))
    return np.asarray(obj, dtype=np.complex128).ravel(), 0.0


def _bit_log_posteriors(y: np.ndarray, c: Constellation, noise_var: float) -> np.ndarray:
    """
    log P(b_i = 0 | y) and log P(b_i = 1 | y) under the Gaussian metric.

    Returns:
        array of shape (len(y), bits_per_symbol, 2)
    """
    bits = c.bit_matrix()
    with np.errstate(divide="ignore"):
        log_prior = np.log(c.probs)
    metric = log_prior[None, :] - np.abs(y[:, None] - c.points[None, :]) ** 2 / noise_var
    total = logsumexp(metric, axis=1)
    out = np.empty((y.size, c.bits_per_symbol, 2))
    for i in range(c.bits_per_symbol):
        for b in (0, 1):
            mask = bits[:, i] == b
            if not mask.any():
                out[:, i, b] = -np.inf
            else:
                out[:, i, b] = logsumexp(metric[:, mask], axis=1) - total
    return out


def _bit_cost(y: np.ndarray, tx_idx: np.ndarray, c: Constellation, noise_var: float) -> np.ndarray:
    """Per-symbol sum over bit levels of -log2 P(transmitted bit | y)."""
    bits = c.bit_matrix()
    cost = np.empty(y.size)
    chunk = max(1, int(get_config().get_runtime_config().get("chunk_size", CHUNK)))
    for start in range(0, y.size, chunk):
        sl = slice(start, start + chunk)
        post = _bit_log_posteriors(y[sl], c, noise_var)
        tx_bits = bits[tx_idx[sl]]
        picked = np.take_along_axis(post, tx_bits[:, :, None].astype(np.int64), axis=2)[:, :, 0]
        cost[sl] = -picked.sum(axis=1) / math.log(2.0)
    return cost


def estimate_noise_var(tx: np.ndarray, rx: np.ndarray, energy: float = 1.0) -> float:
    """Residual variance E|y - x|^2 with a small floor relative to `energy`."""
    return max(float(np.mean(np.abs(rx - tx) ** 2)), NOISE_FLOOR * energy)


def air_bmd(tx: Any, rx: Any, c: Constellation, noise_var: Optional[float] = None,
            pilot_rate: Optional[float] = None) -> AirEstimate:
    """
    Monte Carlo BMD rate: H(X) minus the summed per-bit conditional entropies
    under the mismatched Gaussian metric.

    Args:
        tx: transmitted data symbols (array or frame, pilots excluded)
        rx: equalized received symbols aligned with tx
        c: constellation the tx symbols are drawn from
        noise_var: auxiliary-channel variance; estimated from residuals when None
        pilot_rate: overrides the frame's pilot rate for the rate adjustment

    Raises:
        FrameError: empty input or length mismatch
    """
    x, frame_rate = _data_symbols(tx)
    y, _ = _data_symbols(rx)
    if x.size == 0:
        raise FrameError("air_bmd needs a non-empty frame")
    if x.size != y.size:
        raise FrameError(f"tx/rx length mismatch: {x.size} vs {y.size}")
    rate = frame_rate if pilot_rate is None else float(pilot_rate)

    tx_idx = c.nearest_index(x)
    sigma2 = estimate_noise_var(x, y, c.mean_energy) if noise_var is None else float(noise_var)
    if sigma2 <= 0:
        raise ConstellationError(f"noise_var must be positive, got {sigma2}")

    cost = _bit_cost(y, tx_idx, c, sigma2)
    h = entropy(c)
    raw = h - float(np.mean(cost))
    stderr = float(np.std(cost, ddof=1) / math.sqrt(cost.size)) if cost.size > 1 else 0.0
    value = max(0.0, raw) * (1.0 - rate)
    xlogger.debug("air_bmd", data={"n": int(cost.size), "noise_var": sigma2, "air": value})
    return AirEstimate(value=value, stderr=stderr * (1.0 - rate), n=int(cost.size), pilot_rate=rate)


def air_bmd_quadrature(c: Constellation, noise_var: float, order: int = 24) -> float:
    """
    BMD rate on the AWGN channel by 2-D Gauss-Hermite quadrature over the noise.

    Args:
        c: constellation
        noise_var: total complex noise variance
        order: Gauss-Hermite nodes per real dimension
    """
    if noise_var <= 0:
        raise ConstellationError("noise_var must be positive")
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    sigma = math.sqrt(noise_var / 2.0)
    # n = sqrt(2) sigma (t_i + j t_k), weight w_i w_k / pi
    noise = math.sqrt(2.0) * sigma * (nodes[:, None] + 1j * nodes[None, :]).ravel()
    w = (weights[:, None] * weights[None, :]).ravel() / math.pi

    expected_cost = 0.0
    for idx in np.flatnonzero(c.probs > 0):
        y = c.points[idx] + noise
        cost = _bit_cost(y, np.full(y.size, idx), c, noise_var)
        expected_cost += c.probs[idx] * float(np.dot(w, cost))
    return max(0.0, entropy(c) - expected_cost)


# Run as a script to check the functions: `python -m shapinglab.modules.constellation.air_estimator`
if __name__ == "__main__":
    c16 = build_qam(16)
    rng = np.random.default_rng(1)
    x = c16.sample(20000, rng)
    sigma2 = 0.1
    y = x + math.sqrt(sigma2 / 2) * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    xlogger.info("16QAM @ 10 dB", data={"mc": float(air_bmd(x, y, c16, sigma2)),
                                        "quadrature": air_bmd_quadrature(c16, sigma2)})
