"""
Coherent receiver DSP for the channel of interest: CDC, channel selection with
a matched RRC filter, downsampling, carrier phase recovery and a final
least-squares scale, plus effective-SNR measurement.

CPR variants live in CPR_REGISTRY; each maps (rx, tx, pilot mask, config) to
a per-symbol phase estimate.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from dataclasses import dataclass
from typing import Optional, Tuple
from scipy.ndimage import uniform_filter1d

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xconfig import get_config
from shapinglab.utils.xerror_handler import FrameError, ReceiverError
from shapinglab.utils.xutils import bootstrap_ci, linear_to_db
from shapinglab.modules.others.xregistry import CPR_REGISTRY
from shapinglab.modules.fiber.link_config import CprConfig, CprVariant, LinkConfig
from shapinglab.modules.fiber.ssfm_channel import Waveform, compensate_dispersion, rrc_response
from shapinglab.modules.pas.symbol_frame import SymbolFrame


MIN_LPA_PILOTS = 2


@dataclass
class ReceiverOutput:
    """
    Equalized frame with the quantities the analytics need.

    Attributes:
        frame: equalized symbols, same pilots and constellation as the transmitted frame
        phase: (n_pol, n_symbols) phase removed by CPR
        residuals: rx - tx after all DSP
        scale: complex least-squares scale per polarization
    """
    frame: SymbolFrame
    phase: np.ndarray
    residuals: np.ndarray
    scale: np.ndarray


@dataclass(frozen=True)
class SnrEstimate:
    """Effective SNR in dB with a bootstrap CI; `capped` marks a noiseless estimate."""
    value_db: float
    ci_db: Tuple[float, float]
    capped: bool = False
    n: int = 0

    def __float__(self) -> float:
        return self.value_db


# ---------------------------------------------------------------- CPR variants

def genie_phase(rx: np.ndarray, tx: np.ndarray) -> np.ndarray:
    """theta_k = arg(y_k x_k^*)."""
    return np.angle(rx * np.conj(tx))


@CPR_REGISTRY.register(name=CprVariant.MPR.value, metadata={"description": "one mean rotation per frame"})
def mean_phase_rotation(rx: np.ndarray, tx: np.ndarray, pilot_mask: np.ndarray, config: CprConfig) -> np.ndarray:
    phi = np.angle(np.sum(rx * np.conj(tx)))
    return np.full(rx.shape, phi)


@CPR_REGISTRY.register(name=CprVariant.MOVING_AVERAGE.value,
                       metadata={"description": "genie phase averaged over 2N_cpr+1 symbols"})
def moving_average_phase(rx: np.ndarray, tx: np.ndarray, pilot_mask: np.ndarray, config: CprConfig) -> np.ndarray:
    theta = genie_phase(rx, tx)
    if config.n_cpr == 0:
        return theta
    return uniform_filter1d(theta, size=2 * config.n_cpr + 1, mode="wrap")


@CPR_REGISTRY.register(name=CprVariant.LPA.value,
                       metadata={"description": "pilot phases linearly interpolated"})
def pilot_interpolated_phase(rx: np.ndarray, tx: np.ndarray, pilot_mask: np.ndarray,
                             config: CprConfig) -> np.ndarray:
    """
    Raises:
        ReceiverError: fewer than two pilots
    """
    idx = np.flatnonzero(pilot_mask)
    if idx.size < MIN_LPA_PILOTS:
        raise ReceiverError(f"LPA needs at least {MIN_LPA_PILOTS} pilots, frame has {idx.size}")
    theta = np.unwrap(genie_phase(rx[idx], tx[idx]))
    if config.n_cpr > 0:
        theta = uniform_filter1d(theta, size=2 * config.n_cpr + 1, mode="nearest")
    return np.interp(np.arange(rx.size), idx, theta, period=None)


def recover_phase(rx: np.ndarray, tx: np.ndarray, pilot_mask: np.ndarray, config: CprConfig) -> np.ndarray:
    """Dispatch to the registered variant."""
    return CPR_REGISTRY.get(CprVariant(config.variant).value)(rx, tx, pilot_mask, config)


# ---------------------------------------------------------------- receiver chain

def select_channel(waveform: Waveform, link: LinkConfig, channel: Optional[int] = None) -> np.ndarray:
    """
    Shift a channel to baseband, apply the matched RRC filter and sample at one
    sample per symbol. Returns symbols in units of the transmitted constellation.
    """
    channel = link.center_channel if channel is None else channel
    sps = waveform.samples_per_symbol
    spec = np.roll(np.fft.fft(waveform.samples, axis=1), -waveform.channel_bins[channel], axis=1)
    spec *= rrc_response(waveform.n_samples, sps, link.rrc_rolloff)
    y = np.fft.ifft(spec, axis=1)[:, ::sps]
    amplitude = math.sqrt(waveform.launch_power_w / link.n_pol * sps)
    return y / amplitude


def receiver_dsp(waveform: Waveform, link: LinkConfig, cpr: CprConfig, tx_frame: SymbolFrame,
                 channel: Optional[int] = None, cdc: bool = True) -> ReceiverOutput:
    """
    CDC, matched filtering, CPR and least-squares scaling against the known frame.

    Raises:
        FrameError: received length differs from the transmitted frame
        ReceiverError: CPR variant cannot operate on this frame
    """
    if cdc:
        waveform = compensate_dispersion(waveform, link)
    y = select_channel(waveform, link, channel)
    x = tx_frame.symbols
    if y.shape != x.shape:
        raise FrameError(f"received shape {y.shape} differs from transmitted {x.shape}")

    phase = np.stack([recover_phase(y[p], x[p], tx_frame.pilot_mask, cpr) for p in range(x.shape[0])])
    y = y * np.exp(-1j * phase)

    data = ~tx_frame.pilot_mask
    scale = np.array([np.vdot(y[p, data], x[p, data]) / np.vdot(y[p, data], y[p, data])
                      for p in range(x.shape[0])])
    y = y * scale[:, None]
    xlogger.debug("receiver DSP done", data={"cpr": cpr.variant.value, "n_cpr": cpr.n_cpr,
                                             "scale": [abs(s) for s in scale]})
    frame = tx_frame.with_symbols(y, equalized=True)
    return ReceiverOutput(frame=frame, phase=phase, residuals=y - x, scale=scale)


def measure_effective_snr(tx: SymbolFrame, rx: SymbolFrame, n_resamples: Optional[int] = None,
                          seed: int = 0) -> SnrEstimate:
    """
    SNR_eff = E|x|^2 / E|y - x|^2 over data symbols of all polarizations, in dB.

    Raises:
        ReceiverError: no data symbols
    """
    x = tx.data_symbols().ravel()
    y = rx.data_symbols().ravel()
    if x.size == 0:
        raise ReceiverError("effective SNR needs at least one data symbol")
    if x.shape != y.shape:
        raise FrameError(f"transmitted/received data sizes differ: {x.size} vs {y.size}")
    signal = np.abs(x) ** 2
    noise = np.abs(y - x) ** 2
    config = get_config()
    cap = float(config.get("simulation.snr_cap_db", 100.0))
    if np.mean(noise) <= float(np.mean(signal)) * 10.0 ** (-cap / 10.0):
        return SnrEstimate(cap, (cap, cap), capped=True, n=int(x.size))

    value = float(linear_to_db(np.mean(signal) / np.mean(noise)))
    pairs = np.stack([signal, noise], axis=1)
    low, high = bootstrap_ci(pairs, lambda s: float(linear_to_db(np.mean(s[:, 0]) / np.mean(s[:, 1]))),
                             n_resamples=n_resamples, seed=seed)
    return SnrEstimate(value, (low, high), capped=False, n=int(x.size))
