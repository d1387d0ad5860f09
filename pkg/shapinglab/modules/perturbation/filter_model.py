"""
Linear filter view of the phase-noise NLIN.

d_k = gamma E sum_s ((e_s - baseline) * h_s)_k, its frequency response and
3 dB bandwidth, the residual left by a CPR window of 2 N_cpr + 1 symbols,
and least-squares learning of the overall filter from simulated phases.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from fractions import Fraction
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, FrameError, ModelError
from shapinglab.modules.pas.energy_sequence import EnergySequence
from shapinglab.modules.perturbation.energy_statistics import psd_from_autocorrelation
from shapinglab.modules.perturbation.perturbation_kernel import PerturbationKernel, circular_convolve


THREE_DB = 10.0 ** (-3.0 / 20.0)
NYQUIST = 0.5


@dataclass(frozen=True, eq=False)
class FilterResponse:
    """
    H(f) = sum_n h_n exp(-j 2 pi f n) on a symbol-rate-normalized grid.

    Attributes:
        frequency: cycles per symbol, ascending from -0.5
        response: complex H(f)
        bandwidth: one-sided 3 dB bandwidth in cycles per symbol
        channel: channel offset the taps belong to
    """
    frequency: np.ndarray
    response: np.ndarray
    bandwidth: float
    channel: int = 0

    def magnitude_db(self) -> np.ndarray:
        """|H| in dB relative to |H(0)|."""
        mag = np.abs(self.response)
        ref = float(np.abs(dtft_at_zero(self)) or np.max(mag) or 1.0)
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(mag / ref)

    def bandwidth_hz(self, symbol_rate: float) -> float:
        return self.bandwidth * symbol_rate


def dtft_at_zero(resp: FilterResponse) -> complex:
    return complex(resp.response[np.argmin(np.abs(resp.frequency))])


def dtft(lags: np.ndarray, taps: np.ndarray, frequency: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * np.outer(frequency, np.asarray(lags, dtype=float))) @ np.asarray(taps)


def three_db_bandwidth(lags: np.ndarray, taps: np.ndarray, n_freq: int = 4096) -> float:
    """
    First frequency in [0, 0.5] where |H| falls 3 dB below |H(0)|, linearly
    interpolated; Nyquist (0.5) when it never does.
    """
    f = np.linspace(0.0, NYQUIST, n_freq + 1)
    mag = np.abs(dtft(lags, taps, f))
    threshold = mag[0] * THREE_DB
    below = np.flatnonzero(mag <= threshold)
    if below.size == 0:
        return NYQUIST
    i = int(below[0])
    if i == 0:
        return 0.0
    # linear interpolation between the bracketing grid points
    f0, f1, m0, m1 = f[i - 1], f[i], mag[i - 1], mag[i]
    return float(f0 + (m0 - threshold) / (m0 - m1) * (f1 - f0))


def taps_response(lags: np.ndarray, taps: np.ndarray, n_freq: int = 1024, channel: int = 0) -> FilterResponse:
    f = np.fft.fftshift(np.fft.fftfreq(n_freq))
    return FilterResponse(f, dtft(lags, taps, f), three_db_bandwidth(lags, taps), channel)


def filter_response(kernel: PerturbationKernel, s: int = 0, n_freq: int = 1024) -> FilterResponse:
    """Frequency response and 3 dB bandwidth of the phase-noise taps h_{n,s}."""
    lags, h = kernel.taps(s)
    return taps_response(lags, h, n_freq, s)


# ---------------------------------------------------------------- phase noise

def _energy_list(energies: Union[EnergySequence, Sequence[EnergySequence]]) -> List[EnergySequence]:
    if isinstance(energies, EnergySequence):
        return [energies]
    energies = list(energies)
    if not energies:
        raise FrameError("at least one energy sequence is required")
    if len({len(e) for e in energies}) != 1:
        raise FrameError(f"energy sequences differ in length: {[len(e) for e in energies]}")
    return energies


def _channels(kernel: PerturbationKernel, n: int, channels: Optional[Sequence[int]]) -> List[int]:
    channels = list(channels) if channels is not None else kernel.channels[:n]
    if len(channels) != n:
        raise FrameError(f"{n} energy sequences for {len(channels)} kernel channels")
    return channels


def phase_noise_nlin(kernel: PerturbationKernel,
                     energies: Union[EnergySequence, Sequence[EnergySequence]],
                     channels: Optional[Sequence[int]] = None) -> np.ndarray:
    """
    Phase-noise NLIN d_k, circular in k.

    Args:
        energies: one sequence per channel, aligned in time; fluctuations are
            taken around each sequence's baseline
        channels: channel offsets of the sequences (kernel.channels order when None)

    Raises:
        FrameError: sequence lengths differ or do not match the channel list
    """
    seqs = _energy_list(energies)
    d = np.zeros(len(seqs[0]))
    for e, s in zip(seqs, _channels(kernel, len(seqs), channels)):
        d += circular_convolve(e.fluctuation, *kernel.taps(s))
    return kernel.scale * d


def nlin_variance_from_spectrum(kernel: PerturbationKernel, lags: np.ndarray, r: np.ndarray,
                                s: int = 0, n_fft: int = 4096) -> float:
    """Var(d) = (gamma E)^2 integral S_e(f) |H_s(f)|^2 df over one period."""
    f, spectrum = psd_from_autocorrelation(lags, r, n_fft)
    taps_lags, h = kernel.taps(s)
    H = dtft(taps_lags, h, f)
    return float(kernel.scale ** 2 * np.mean(spectrum * np.abs(H) ** 2))


def cpr_filter(n_cpr: int, exact: bool = False) -> Tuple[np.ndarray, Union[np.ndarray, List[Fraction]]]:
    """
    u_m = delta_m - 1/(2 N_cpr + 1) for |m| <= N_cpr; sum of u is zero.

    Args:
        exact: return Fractions instead of floats
    """
    if n_cpr < 0:
        raise ConfigError(f"n_cpr must be non-negative, got {n_cpr}")
    lags = np.arange(-n_cpr, n_cpr + 1)
    c = Fraction(1, 2 * n_cpr + 1)
    u = [Fraction(int(m == 0)) - c for m in lags]
    if exact:
        return lags, u
    return lags, np.array([float(v) for v in u])


def residual_after_cpr(kernel: PerturbationKernel,
                       energies: Union[EnergySequence, Sequence[EnergySequence]],
                       n_cpr: int,
                       channels: Optional[Sequence[int]] = None) -> np.ndarray:
    """Residual phase-noise NLIN u * d after a moving-average CPR of 2 N_cpr + 1 symbols."""
    lags, u = cpr_filter(n_cpr)
    return circular_convolve(phase_noise_nlin(kernel, energies, channels), lags, u)


def multiplicative_phase(rx: np.ndarray, tx: np.ndarray, additive: Optional[np.ndarray] = None) -> np.ndarray:
    """theta_k = arg((y_k - dx'_k) x_k^*), the phase left once the additive NLIN is removed."""
    rx = np.asarray(rx, dtype=np.complex128)
    if additive is not None:
        rx = rx - np.asarray(additive, dtype=np.complex128)
    return np.angle(rx * np.conj(np.asarray(tx, dtype=np.complex128)))


# ---------------------------------------------------------------- filter learning

@dataclass
class LearnedFilter:
    """
    Least-squares taps per channel offset, theta ~ intercept + sum_s (e_s - baseline) * h_s.

    Attributes:
        lags: -w..w
        taps: channel offset -> learned taps
        intercept: constant phase
        residual_rms: RMS of the fit residual
    """
    lags: np.ndarray
    taps: Dict[int, np.ndarray]
    intercept: float = 0.0
    residual_rms: float = 0.0
    metadata: Dict[str, float] = field(default_factory=dict)

    def response(self, s: int = 0, n_freq: int = 1024) -> FilterResponse:
        return taps_response(self.lags, self.taps[s], n_freq, s)


def fit_overall_filter(phase: np.ndarray,
                       energies: Union[EnergySequence, Sequence[EnergySequence]],
                       w: int,
                       channels: Optional[Sequence[int]] = None,
                       intercept: bool = True) -> LearnedFilter:
    """
    Learn 2w + 1 taps per channel minimizing ||theta - sum_s (e_s - baseline) * h_s||^2.

    Args:
        phase: residual phase per symbol (see multiplicative_phase)
        energies: aligned energy sequences, channel of interest first
        w: one-sided tap count

    Raises:
        FrameError: phase and energy lengths differ
        ModelError: rank-deficient regression (insufficient excitation)
    """
    seqs = _energy_list(energies)
    phase = np.asarray(phase, dtype=float).ravel()
    if phase.size != len(seqs[0]):
        raise FrameError(f"phase has {phase.size} samples, energies have {len(seqs[0])}")
    channels = list(channels) if channels is not None else list(range(len(seqs)))
    lags = np.arange(-w, w + 1)
    columns = [np.roll(e.fluctuation, n) for e in seqs for n in lags]
    if intercept:
        columns.append(np.ones(phase.size))
    A = np.stack(columns, axis=1)
    rank = np.linalg.matrix_rank(A)
    if rank < A.shape[1]:
        raise ModelError(f"filter regression is rank deficient ({rank} < {A.shape[1]}): "
                         "energy sequences do not excite every tap")
    coef, *_ = np.linalg.lstsq(A, phase, rcond=None)
    residual = phase - A @ coef
    taps = {s: coef[i * lags.size:(i + 1) * lags.size] for i, s in enumerate(channels)}
    learned = LearnedFilter(lags, taps, float(coef[-1]) if intercept else 0.0,
                            float(np.sqrt(np.mean(residual ** 2))))
    xlogger.debug("overall filter learned", data={"w": w, "channels": channels, "rms": learned.residual_rms})
    return learned
