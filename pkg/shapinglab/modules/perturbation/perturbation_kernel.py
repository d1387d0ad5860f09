"""
First-order time-domain perturbation kernel of a lumped-amplified link.

After CDC, matched filtering and sampling, the first-order NLIN on symbol k
of the channel of interest is

    dx_k = j gamma E sum_{m,n} C_{m,n} [x_{k+m} x*_{k+m+n} (+ y_{k+m} y*_{k+m+n})] x_{k+n}

with x in unit-energy symbol units, gamma in 1/W/km (Manakov 8/9 applied for
dual polarization), E the launch power per polarization in W and C in km.
Inter-channel XPM keeps only the multiplicative terms x_k |x_{k+n,s}|^2,
stored per channel offset s as C_{0,n,s}. The phase-noise filter taps are
h_{n,s} = Re C_{0,-n,s}.

Two pulse models: an RRC (or Gaussian) pulse integrated numerically over
the accumulated-dispersion trajectory with Gauss-Legendre nodes per span,
and a Gaussian-pulse closed form with exponential integrals.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import time
import xxhash
import numpy as np

from enum import Enum
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from scipy.cluster.vq import kmeans2
from scipy.special import exp1

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xconfig import get_config
from shapinglab.utils.xerror_handler import ConfigError, FrameError, ModelError
from shapinglab.utils.xstorage import KernelCache
from shapinglab.utils.xutils import dbm_to_watt, resolve_workers, run_parallel
from shapinglab.modules.constellation.qam_constellation import MomentReport, build_qam, standardized_moments
from shapinglab.modules.fiber.link_config import LinkConfig
from shapinglab.modules.fiber.ssfm_channel import angular_frequency, rrc_response


KERNEL_SPS = 4
DEFAULT_QUAD_NODES = 32
GAUSSIAN_WIDTH = 0.5      # T0 / T
QUAD_TOLERANCE = 1e-3
TRUNCATION_TOLERANCE = 0.03
MAX_MEMORY_FACTOR = 16


class PulseShape(str, Enum):
    GAUSSIAN = "gaussian"
    RRC = "rrc"


class TruncationRule(str, Enum):
    FULL = "full"            # |m| + |n| <= w
    SELECTED = "selected"    # |m|, |n| <= w and |m n| < w
    QUANTIZED = "quantized"  # selected lags, k-means magnitudes


# ---------------------------------------------------------------- windows and lag sets

def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def memory_window(link: LinkConfig) -> int:
    """
    One-sided SPM memory in symbols: ceil(pi |beta2| L R_s^2 (1 + rolloff)),
    the delay spread of the pulse bandwidth after the full link.
    """
    spread = math.pi * abs(link.beta2_si) * link.total_length_km * 1e3 * link.symbol_rate ** 2 \
        * (1.0 + link.rrc_rolloff)
    return int(math.ceil(spread - 1e-9)) if spread > 0 else 0


def window_sizes(link: LinkConfig) -> Tuple[int, int]:
    """
    EDI windows (w_spm, w_xpm), rounded half up:
    w_spm = 2 R_s B_ch |beta2| L, w_xpm = w_spm sqrt(N_ch B_ch / R_s).
    """
    raw = 2.0 * link.symbol_rate * link.channel_spacing * abs(link.beta2_si) * link.total_length_km * 1e3
    xpm = raw * math.sqrt(link.n_channels * link.channel_spacing / link.symbol_rate)
    return _round_half_up(raw), _round_half_up(xpm)


def coefficient_set(w: int, rule: Union[str, TruncationRule] = TruncationRule.FULL) -> np.ndarray:
    """
    Active (m, n) lags of a truncation rule as an int array of shape (K, 2),
    sorted by m then n.
    """
    if w < 0:
        raise ConfigError(f"memory must be non-negative, got {w}")
    return np.argwhere(rule_mask(w, rule)) - w


def rule_mask(w: int, rule: Union[str, TruncationRule] = TruncationRule.FULL) -> np.ndarray:
    """Boolean (2w+1, 2w+1) mask of the active lags, index [m + w, n + w]."""
    rule = TruncationRule(rule)
    lags = np.arange(-w, w + 1)
    m, n = np.meshgrid(lags, lags, indexing="ij")
    if rule == TruncationRule.FULL:
        return np.abs(m) + np.abs(n) <= w
    return (np.abs(m * n) < w) | ((m == 0) & (n == 0))


# ---------------------------------------------------------------- kernel

@dataclass(frozen=True, eq=False)
class PerturbationKernel:
    """
    Perturbation coefficients of one channel of interest.

    Attributes:
        gamma: effective nonlinearity in 1/W/km
        energy: launch power per polarization in W (mean symbol energy per symbol period)
        coefficients: (2w+1, 2w+1) intra-channel C_{m,n} in km, index [m + w, n + w]
        memory: one-sided memory w in symbols
        xpm: channel offset s -> C_{0,n,s} for n = -w_s..w_s
        rule: active truncation rule
        pulse: pulse model used for the coefficients
        dual_pol: Manakov (True) or scalar (False) triplets
    """
    gamma: float
    energy: float
    coefficients: np.ndarray
    memory: int
    xpm: Dict[int, np.ndarray] = field(default_factory=dict)
    rule: TruncationRule = TruncationRule.FULL
    pulse: PulseShape = PulseShape.GAUSSIAN
    dual_pol: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.complex128)
        size = 2 * int(self.memory) + 1
        if c.shape != (size, size):
            raise ModelError(f"coefficient array {c.shape} does not match memory {self.memory}")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "rule", TruncationRule(self.rule))
        object.__setattr__(self, "pulse", PulseShape(self.pulse))

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.memory, self.memory + 1)

    @property
    def channels(self) -> List[int]:
        """Channel offsets covered, the channel of interest (0) first."""
        return [0] + sorted(self.xpm)

    @property
    def scale(self) -> float:
        """gamma E, the factor turning C (km) into symbol-unit NLIN."""
        return self.gamma * self.energy

    def coefficient(self, m: int, n: int) -> complex:
        w = self.memory
        if abs(m) > w or abs(n) > w:
            return 0j
        return complex(self.coefficients[m + w, n + w])

    def taps(self, s: int = 0) -> Tuple[np.ndarray, np.ndarray]:
        """(lags n, h_{n,s} = Re C_{0,-n,s})."""
        if s == 0:
            return self.lags, self.coefficients[self.memory, ::-1].real.copy()
        if s not in self.xpm:
            raise ModelError(f"kernel has no XPM row for channel offset {s}; available {self.channels}")
        row = self.xpm[s]
        w_s = (row.size - 1) // 2
        return np.arange(-w_s, w_s + 1), row[::-1].real.copy()

    def active_lags(self) -> np.ndarray:
        return coefficient_set(self.memory, self.rule)

    def with_rule(self, rule: Union[str, TruncationRule]) -> 'PerturbationKernel':
        rule = TruncationRule(rule)
        if rule == TruncationRule.QUANTIZED and self.rule != TruncationRule.QUANTIZED:
            return quantize_kernel(self)
        return replace(self, rule=rule)

    def describe(self) -> Dict[str, Any]:
        return {"gamma": self.gamma, "energy": self.energy, "memory": self.memory, "rule": self.rule.value,
                "pulse": self.pulse.value, "dual_pol": self.dual_pol, "channels": self.channels,
                "n_active": int(len(self.active_lags()))}


# ---------------------------------------------------------------- numerical integration

class _KernelGrid:
    """Time grid at KERNEL_SPS samples per symbol carrying the dispersed pulse."""

    def __init__(self, link: LinkConfig, pulse: PulseShape, n_symbols: int):
        self.sps = KERNEL_SPS
        self.n = int(n_symbols) * self.sps
        self.dt = 1.0 / (self.sps * link.symbol_rate)
        self.omega = angular_frequency(self.n, self.sps * link.symbol_rate)
        self.beta2 = link.beta2_si
        if pulse == PulseShape.RRC:
            spec = rrc_response(self.n, self.sps, link.rrc_rolloff).astype(np.complex128)
        else:
            f = np.fft.fftfreq(self.n, d=1.0 / self.sps)
            spec = np.exp(-0.5 * (2.0 * np.pi * f * GAUSSIAN_WIDTH) ** 2).astype(np.complex128)
        # unit energy: sum |q|^2 = 1
        self.spectrum = spec * math.sqrt(self.n / np.sum(np.abs(spec) ** 2))

    def dispersed(self, z_km: float) -> np.ndarray:
        return np.fft.ifft(self.spectrum * np.exp(1j * self.beta2 / 2.0 * self.omega ** 2 * z_km * 1e3))

    def intensity_correlation(self, z_km: float) -> np.ndarray:
        """Circular R[j] = sum_t |g(t)|^2 |g(t - j dt)|^2 at the grid lags."""
        power = np.abs(self.dispersed(z_km)) ** 2
        return np.fft.ifft(np.abs(np.fft.fft(power)) ** 2).real


def _grid_symbols(reach: int) -> int:
    return int(2 ** math.ceil(math.log2(2 * reach + 64)))


def quadrature_nodes(link: LinkConfig, n_nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes on every span with the power profile folded into
    the weights. Returns (z in km from the transmitter, weights in km).
    """
    x, wts = np.polynomial.legendre.leggauss(int(n_nodes))
    span = link.span_length_km
    z_local = (x + 1.0) / 2.0 * span
    w_local = wts / 2.0 * span * np.exp(-link.alpha * z_local)
    z = np.concatenate([i * span + z_local for i in range(link.n_spans)])
    return z, np.tile(w_local, link.n_spans)


def _intra_rows(grid: _KernelGrid, rows: Sequence[int], w: int, z: np.ndarray, weights: np.ndarray) -> np.ndarray:
    t = np.arange(grid.n)
    shifts = np.arange(-2 * w, 2 * w + 1)
    index = (t[None, :] - shifts[:, None] * grid.sps) % grid.n
    ns = np.arange(-w, w + 1)
    out = np.zeros((len(rows), 2 * w + 1), dtype=np.complex128)
    for zk, wk in zip(z, weights):
        g = grid.dispersed(zk)[index]          # g[j + 2w] = g(t - jT)
        g0 = np.conj(g[2 * w])
        for i, m in enumerate(rows):
            a = g0 * g[m + 2 * w]
            out[i] += wk * ((g[ns + 2 * w] * np.conj(g[m + ns + 2 * w])) @ a)
    return out * grid.sps


def _multiplicative_row(grid: _KernelGrid, w: int, offset_hz: float, z: np.ndarray,
                        weights: np.ndarray) -> np.ndarray:
    """C_{0,n,s} = sps sum_z wt R(nT - beta2 omega_s z) for n = -w..w."""
    ns = np.arange(-w, w + 1)
    positions = np.arange(grid.n)
    omega_s = 2.0 * np.pi * offset_hz
    row = np.zeros(ns.size)
    for zk, wk in zip(z, weights):
        corr = grid.intensity_correlation(zk)
        shift = (ns * grid.sps) - grid.beta2 * omega_s * zk * 1e3 / grid.dt
        row += wk * np.interp(shift, positions, corr, period=grid.n)
    return (row * grid.sps).astype(np.complex128)


def _numerical_intra(link: LinkConfig, pulse: PulseShape, w: int, n_nodes: int,
                     max_workers: Optional[int]) -> np.ndarray:
    """
    Raises:
        ModelError: the multiplicative row changes by more than QUAD_TOLERANCE
            (relative to its peak) when the node count is halved
    """
    grid = _KernelGrid(link, pulse, _grid_symbols(3 * w + memory_window(link)))
    z, wts = quadrature_nodes(link, n_nodes)
    z_half, wts_half = quadrature_nodes(link, max(n_nodes // 2, 2))
    fine = _multiplicative_row(grid, w, 0.0, z, wts)
    coarse = _multiplicative_row(grid, w, 0.0, z_half, wts_half)
    peak = float(np.max(np.abs(fine))) or 1.0
    error = float(np.max(np.abs(fine - coarse))) / peak
    if error > QUAD_TOLERANCE:
        raise ModelError(f"kernel quadrature did not converge: relative change {error:.2e} with "
                         f"{n_nodes} nodes per span; increase the node count")

    rows = np.arange(-w, w + 1)
    chunks = [c for c in np.array_split(rows, max(1, min(resolve_workers(max_workers), rows.size))) if c.size]
    blocks = run_parallel(lambda chunk: _intra_rows(grid, chunk.tolist(), w, z, wts), chunks,
                          max_workers=max_workers, desc="kernel rows")
    return np.vstack(blocks)


def _gaussian_closed_form(link: LinkConfig, w: int) -> np.ndarray:
    """
    Gaussian pulse (T0 = GAUSSIAN_WIDTH T), loss averaged over each span:
    C_{m,n} = K E1(-j m n T^2 / (beta2 L)) for m n != 0,
    K/2 E1((n - m)^2 T^2 T0^2 / (3 beta2^2 L^2)) on the axes,
    K asinh(L sqrt(3) |beta2| / T0^2) at the origin, with
    K = (L_eff / L_span) T0^2 / (sqrt(3) |beta2|) * T / (sqrt(2 pi) T0).
    The last factor matches the unit-energy normalization of the numerical kernel.
    """
    T = 1.0 / link.symbol_rate
    t0 = GAUSSIAN_WIDTH * T
    beta2 = link.beta2_si * 1e3          # s^2/km
    length = link.total_length_km
    norm = T / (math.sqrt(2.0 * math.pi) * t0)
    loss_ratio = link.effective_length_km / link.span_length_km
    c = np.zeros((2 * w + 1, 2 * w + 1), dtype=np.complex128)
    if beta2 == 0.0:
        c[w, w] = norm * loss_ratio * length
        return c

    k = norm * loss_ratio * t0 ** 2 / (math.sqrt(3.0) * abs(beta2))
    lags = np.arange(-w, w + 1)
    m, n = np.meshgrid(lags, lags, indexing="ij")
    mn = m * n
    fwm = mn != 0
    axes = (mn == 0) & ~((m == 0) & (n == 0))
    c[fwm] = k * exp1(-1j * mn[fwm] * T ** 2 / (beta2 * length))
    c[axes] = k * 0.5 * exp1(((n - m)[axes] ** 2) * T ** 2 * t0 ** 2 / (3.0 * beta2 ** 2 * length ** 2))
    c[w, w] = k * math.asinh(length * math.sqrt(3.0) * abs(beta2) / t0 ** 2)
    return c


def _xpm_rows(link: LinkConfig, pulse: PulseShape, channel: int, w: int, n_nodes: int) -> Dict[int, np.ndarray]:
    rows: Dict[int, np.ndarray] = {}
    offsets = link.channel_offsets() - link.channel_offsets()[channel]
    T = 1.0 / link.symbol_rate
    w_mem = memory_window(link)
    for idx, offset in enumerate(offsets):
        s = idx - channel
        if s == 0:
            continue
        walk_per_span = abs(link.beta2_si) * 2.0 * np.pi * abs(offset) * link.span_length_km * 1e3 / T
        w_s = w + int(math.ceil(walk_per_span * link.n_spans))
        grid = _KernelGrid(link, pulse, _grid_symbols(w_s + w_mem))
        z, wts = quadrature_nodes(link, max(n_nodes, int(math.ceil(4.0 * walk_per_span))))
        rows[s] = _multiplicative_row(grid, w_s, float(offset), z, wts)
    return rows


def _cache_key(link: LinkConfig, pulse: PulseShape, w: int, channel: int, include_xpm: bool, n_nodes: int) -> str:
    text = f"{link.config_hash()}|{pulse.value}|{w}|{channel}|{include_xpm}|{n_nodes}|{KERNEL_SPS}"
    return xxhash.xxh64(text.encode()).hexdigest()


def _pack(c: np.ndarray, xpm: Dict[int, np.ndarray]) -> Tuple[Dict[str, Any], np.ndarray]:
    layout = [{"s": s, "length": int(row.size)} for s, row in sorted(xpm.items())]
    flat = np.concatenate([c.ravel()] + [xpm[s] for s in sorted(xpm)])
    return {"layout": layout, "size": int(c.shape[0])}, flat


def _unpack(header: Dict[str, Any], flat: np.ndarray) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
    flat = np.asarray(flat).ravel()
    size = int(header["size"])
    c = flat[:size * size].reshape(size, size)
    offset = size * size
    xpm: Dict[int, np.ndarray] = {}
    for entry in header.get("layout", []):
        xpm[int(entry["s"])] = flat[offset:offset + int(entry["length"])].copy()
        offset += int(entry["length"])
    return c.copy(), xpm


def compute_coefficients(link: LinkConfig,
                         channel: Optional[int] = None,
                         w_mem: Optional[int] = None,
                         pulse: Union[str, PulseShape] = PulseShape.GAUSSIAN,
                         power_dbm: Optional[float] = None,
                         include_xpm: bool = True,
                         n_nodes: int = DEFAULT_QUAD_NODES,
                         use_cache: bool = True,
                         max_workers: Optional[int] = None) -> PerturbationKernel:
    """
    Perturbation kernel of `channel` (center channel by default) on `link`.

    Args:
        w_mem: one-sided memory (memory_window(link) when None)
        pulse: "gaussian" (closed-form intra-channel coefficients) or "rrc" (numerical)
        power_dbm: per-channel launch power setting E (link default when None)
        include_xpm: also integrate the multiplicative rows of the other WDM channels
        n_nodes: Gauss-Legendre nodes per span

    Raises:
        ModelError: quadrature non-convergence
    """
    pulse = PulseShape(pulse)
    channel = link.center_channel if channel is None else int(channel)
    if not 0 <= channel < link.n_channels:
        raise ConfigError(f"channel {channel} outside 0..{link.n_channels - 1}")
    w = memory_window(link) if w_mem is None else int(w_mem)
    if w < 0:
        raise ConfigError(f"w_mem must be non-negative, got {w}")
    energy = float(dbm_to_watt(link.launch_power_dbm if power_dbm is None else power_dbm)) / link.n_pol
    include_xpm = include_xpm and link.n_channels > 1

    cache_cfg = get_config().get_cache_config()
    cache = KernelCache(cache_cfg["dir"], enabled=bool(cache_cfg.get("enabled", True)) and use_cache)
    key = _cache_key(link, pulse, w, channel, include_xpm, n_nodes)
    cached = cache.load(key)
    if cached is not None:
        c, xpm = _unpack(*cached)
    else:
        start = time.time()
        xlogger.info("kernel build start", data={"pulse": pulse.value, "w_mem": w, "spans": link.n_spans,
                                                 "channels": link.n_channels if include_xpm else 1})
        if pulse == PulseShape.GAUSSIAN:
            c = _gaussian_closed_form(link, w)
        else:
            c = _numerical_intra(link, pulse, w, n_nodes, max_workers)
        xpm = _xpm_rows(link, pulse, channel, w, n_nodes) if include_xpm else {}
        header, flat = _pack(c, xpm)
        cache.save(key, {**header, "link_hash": link.config_hash(), "pulse": pulse.value, "w_mem": w}, flat)
        xlogger.success("kernel build done", data={"w_mem": w, "seconds": round(time.time() - start, 3)})

    return PerturbationKernel(gamma=link.gamma_eff, energy=energy, coefficients=c, memory=w, xpm=xpm,
                              pulse=pulse, dual_pol=link.dual_pol,
                              metadata={"link_hash": link.config_hash(), "channel": channel})


# ---------------------------------------------------------------- quantization

def quantized_count(w: int) -> int:
    """3 floor((w + 14) / 16) + 1 distinct coefficient magnitudes."""
    return 3 * ((w + 14) // 16) + 1


def quantize_kernel(kernel: PerturbationKernel, n_clusters: Optional[int] = None,
                    seed: int = 0) -> PerturbationKernel:
    """
    Restrict to the selected lag set and replace every |C| by its 1-D k-means
    centroid, keeping the phases.
    """
    w = kernel.memory
    lags = coefficient_set(w, TruncationRule.SELECTED)
    values = kernel.coefficients[lags[:, 0] + w, lags[:, 1] + w]
    magnitudes = np.abs(values)
    k = min(n_clusters or quantized_count(w), int(np.unique(magnitudes).size))
    if k <= 1:
        levels = np.full(magnitudes.shape, float(np.mean(magnitudes)))
    else:
        centroids, labels = kmeans2(magnitudes.reshape(-1, 1), k, minit="++", seed=np.random.default_rng(seed))
        levels = centroids[labels, 0]
    c = np.zeros_like(kernel.coefficients)
    c[lags[:, 0] + w, lags[:, 1] + w] = levels * np.exp(1j * np.angle(values))
    return replace(kernel, coefficients=c, rule=TruncationRule.QUANTIZED,
                   metadata={**kernel.metadata, "n_clusters": int(k)})


# ---------------------------------------------------------------- truncation calibration

def _moment_pair(moments: Optional[MomentReport]) -> Tuple[float, float]:
    report = moments if moments is not None else standardized_moments(build_qam(64))
    return float(report.mu4), float(report.mu6)


def _iid_variance(c: np.ndarray, rule: Union[str, TruncationRule], mu4: float, mu6: float) -> float:
    """
    E|sum C x x* x - 2 (sum_n Re C_{0,n}) x_k|^2 over the active lags for i.i.d.
    circular unit-energy symbols on one polarization, c indexed [m + w, n + w].

    The multiplicative lags (m n = 0) and the four-wave-mixing triplets are
    uncorrelated; a triplet is correlated only with its (n, m) mirror.
    """
    w = (c.shape[0] - 1) // 2
    c = np.where(rule_mask(w, rule), c, 0.0)
    lags = np.arange(-w, w + 1)
    m, n = np.meshgrid(lags, lags, indexing="ij")

    c00 = c[w, w]
    a = c[w, :] + c[:, w]
    a[w] = 0.0
    b = np.sum(a) - 2.0 * np.sum(c[w, :].real)
    multiplicative = (abs(c00) ** 2 * mu6 + 2.0 * (c00 * np.conj(b)).real * mu4 + abs(b) ** 2
                      + (mu4 - 1.0) * float(np.sum(np.abs(a) ** 2)))

    mirrored = np.abs(c + c.T) ** 2
    off_axis = (m * n != 0)
    fwm = 0.5 * float(np.sum(mirrored[off_axis & (m != n)])) \
        + mu4 * float(np.sum(np.abs(np.diag(c)[lags != 0]) ** 2))
    return float(multiplicative + fwm)


def predicted_nlin_variance(kernel: PerturbationKernel,
                            rule: Optional[Union[str, TruncationRule]] = None,
                            moments: Optional[MomentReport] = None) -> float:
    """
    Per-symbol variance of the AM-metric distortion predicted from the kernel
    for i.i.d. symbols on one polarization (uniform 64-QAM moments by default).
    """
    mu4, mu6 = _moment_pair(moments)
    return kernel.scale ** 2 * _iid_variance(kernel.coefficients, rule or kernel.rule, mu4, mu6)


def _gap(c: np.ndarray, mu4: float, mu6: float) -> float:
    full = _iid_variance(c, TruncationRule.FULL, mu4, mu6)
    if full <= 0.0:
        return 0.0
    return abs(full - _iid_variance(c, TruncationRule.SELECTED, mu4, mu6)) / full


def truncation_gap(kernel: PerturbationKernel, moments: Optional[MomentReport] = None) -> float:
    """Relative NLIN-variance difference between the |m n| < w and |m| + |n| <= w sets."""
    return _gap(kernel.coefficients, *_moment_pair(moments))


_TRUNCATION_MEMORY: Dict[Tuple[str, float, float, float], int] = {}


def truncation_memory(link: LinkConfig, tolerance: Optional[float] = None,
                      moments: Optional[MomentReport] = None) -> int:
    """
    Smallest memory w >= memory_window(link) at which the |m n| < w lag set
    predicts the NLIN variance of the |m| + |n| <= w set within `tolerance`
    (relative), using the Gaussian closed-form coefficients.

    Args:
        tolerance: relative variance gap (config `perturbation.truncation_tolerance` when None)
        moments: symbol moments for the prediction (uniform 64-QAM when None)

    Raises:
        ConfigError: tolerance outside (0, 1) or memory factor below 1
        ModelError: nothing up to `perturbation.max_memory_factor` * memory_window(link) meets the tolerance
    """
    cfg = get_config()
    if tolerance is None:
        tolerance = float(cfg.get("perturbation.truncation_tolerance", TRUNCATION_TOLERANCE))
    factor = int(cfg.get("perturbation.max_memory_factor", MAX_MEMORY_FACTOR))
    if not 0.0 < tolerance < 1.0:
        raise ConfigError(f"truncation tolerance must lie in (0, 1), got {tolerance}")
    if factor < 1:
        raise ConfigError(f"max_memory_factor must be at least 1, got {factor}")
    w0 = memory_window(link)
    if w0 == 0:
        return 0
    mu4, mu6 = _moment_pair(moments)
    key = (link.config_hash(), float(tolerance), mu4, mu6)
    if key in _TRUNCATION_MEMORY:
        return _TRUNCATION_MEMORY[key]

    cap = factor * w0
    step = max(1, w0 // 10)
    w, hi = w0, min(2 * w0, cap)
    gap = float("nan")
    while True:
        # closed-form C_{m,n} does not depend on the array size, so windows are sub-blocks
        c = _gaussian_closed_form(link, hi)
        while w <= hi:
            gap = _gap(c[hi - w:hi + w + 1, hi - w:hi + w + 1], mu4, mu6)
            if gap <= tolerance:
                xlogger.info("truncation memory", data={"memory_window": w0, "w_mem": w, "gap": round(gap, 5),
                                                        "tolerance": tolerance})
                _TRUNCATION_MEMORY[key] = w
                return w
            w += step
        if hi >= cap:
            raise ModelError(f"selected lags stay {gap:.3f} away from the full set up to w={cap}; "
                             f"raise perturbation.max_memory_factor or the tolerance")
        hi = min(2 * hi, cap)


# ---------------------------------------------------------------- NLIN from the kernel

def circular_convolve(values: np.ndarray, lags: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """out_k = sum_n taps_n values_{k-n}, indices modulo len(values)."""
    values = np.asarray(values)
    n = values.shape[-1]
    kernel = np.zeros(n, dtype=np.result_type(taps, float))
    np.add.at(kernel, np.asarray(lags, dtype=np.int64) % n, taps)
    out = np.fft.ifft(np.fft.fft(values, axis=-1) * np.fft.fft(kernel), axis=-1)
    if np.isrealobj(values) and np.isrealobj(kernel):
        return out.real
    return out


def _as_polarizations(symbols: np.ndarray, kernel: PerturbationKernel) -> np.ndarray:
    x = np.atleast_2d(np.asarray(symbols, dtype=np.complex128))
    if x.shape[0] not in (1, 2):
        raise FrameError(f"symbols must have one or two polarizations, got shape {x.shape}")
    if kernel.dual_pol and x.shape[0] != 2:
        raise FrameError("dual-polarization kernel needs (2, N) symbols")
    return x


def triplet_sum(kernel: PerturbationKernel, symbols: np.ndarray,
                rule: Optional[Union[str, TruncationRule]] = None) -> np.ndarray:
    """
    Intra-channel first-order NLIN dx in symbol units over the active lags,
    circular in k. Returns an array shaped like `symbols` (at least 2-D).
    """
    x = _as_polarizations(symbols, kernel)
    lags = coefficient_set(kernel.memory, rule or kernel.rule)
    w = kernel.memory
    rolled: Dict[int, np.ndarray] = {}

    def ahead(j: int) -> np.ndarray:
        # x_{k+j}
        if j not in rolled:
            rolled[j] = np.roll(x, -j, axis=1)
        return rolled[j]

    out = np.zeros_like(x)
    for m, n in lags:
        c = kernel.coefficients[m + w, n + w]
        if c == 0:
            continue
        pair = np.sum(ahead(m) * np.conj(ahead(m + n)), axis=0)
        out += c * pair * ahead(n)
    return 1j * kernel.scale * out


def aggregated_power(x: np.ndarray) -> np.ndarray:
    """2|x_p|^2 + |x_q|^2 per polarization (2|x|^2 for a single polarization)."""
    r2 = np.abs(x) ** 2
    if x.shape[0] == 1:
        return 2.0 * r2
    return 2.0 * r2 + r2[::-1]


def additive_distortion(kernel: PerturbationKernel, symbols: np.ndarray,
                        rule: Optional[Union[str, TruncationRule]] = None) -> np.ndarray:
    """
    dx' = dx - j gamma E x (e * h): the NLIN left after removing the real
    multiplicative phase term; the imaginary residue of C_{0,n} stays here.

    e is the aggregated 2|x|^2, so h_0 is removed twice while the triplet sum
    holds C_{0,0} once: dx' keeps -j gamma E Re(C_{0,0}) |x_k|^2 x_k. The AM
    metric adds back the fluctuation (e - baseline) * h, which leaves the
    constant rotation -2 j gamma E x_k sum_n h_n in the total.
    """
    x = _as_polarizations(symbols, kernel)
    lags, h = kernel.taps(0)
    phase = circular_convolve(aggregated_power(x), lags, h)
    return triplet_sum(kernel, x, rule) - 1j * kernel.scale * x * phase


# Run as a script to check the functions: `python -m shapinglab.modules.perturbation.perturbation_kernel`
if __name__ == "__main__":
    link = LinkConfig.table1()
    xlogger.info("window sizes", data={"w_spm_w_xpm": window_sizes(link), "w_mem": memory_window(link)})
