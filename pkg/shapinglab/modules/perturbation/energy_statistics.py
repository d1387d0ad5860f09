"""
Statistics of normalized symbol-energy sequences.

Windowed central / standardized moments, the energy dispersion index,
energy autocorrelations (i.i.d., CCDM closed form, empirical) and PSDs.
Block-structured sequences are treated as wide-sense cyclostationary:
averaging over every index k covers all block phases.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple, Union
from scipy import signal

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import FrameError, ModelError
from shapinglab.modules.constellation.qam_constellation import Constellation, standardized_moments
from shapinglab.modules.pas.energy_sequence import EnergySequence


WELCH_NPERSEG = 4096
WELCH_NOVERLAP = 2048


@dataclass(frozen=True)
class WindowedMomentReport:
    """Windowed central moments m2w, m3w, standardized mu4w, mu6w and the EDI."""
    w: int
    m2w: float
    m3w: float
    mu4w: float
    mu6w: float
    edi: float

    def to_dict(self) -> Dict[str, float]:
        return {"w": self.w, "m2w": self.m2w, "m3w": self.m3w, "mu4w": self.mu4w,
                "mu6w": self.mu6w, "edi": self.edi}


def windowed_sums(e: EnergySequence, w: int) -> np.ndarray:
    """
    Circular sliding sums e_k^w over indices k - floor((w-1)/2) .. k + floor(w/2).

    Raises:
        FrameError: w < 1 or w longer than the sequence
    """
    n = len(e)
    if w < 1 or w > n:
        raise FrameError(f"window {w} must satisfy 1 <= w <= {n}")
    left, right = (w - 1) // 2, w // 2
    ext = np.concatenate([e.values[n - left:] if left else e.values[:0], e.values, e.values[:right]])
    cs = np.concatenate([[0.0], np.cumsum(ext)])
    return cs[w:] - cs[:-w]


def windowed_moments(e: EnergySequence, w: int, energy: float = 1.0) -> WindowedMomentReport:
    """
    m_n^w = E[(e^w - w)^n] / w, mu4w = m2w + 1, mu6w = m3w + 3 m2w + 1 and psi^w = E m2w.

    Args:
        e: normalized energy sequence
        w: window length
        energy: mean symbol energy E entering the EDI
    """
    dev = windowed_sums(e, w) - w
    m2w = float(np.mean(dev ** 2) / w)
    m3w = float(np.mean(dev ** 3) / w)
    return WindowedMomentReport(w=int(w), m2w=m2w, m3w=m3w, mu4w=m2w + 1.0, mu6w=m3w + 3.0 * m2w + 1.0,
                                edi=energy * m2w)


def edi(e: EnergySequence, w: int, energy: float = 1.0) -> float:
    """Energy dispersion index psi^w = E m2w."""
    return windowed_moments(e, w, energy).edi


def ccdm_edi_closed_form(D: int, w: int, mu4: float, energy: float = 1.0) -> float:
    """
    psi^w = (D + 1)(mu4 - 1) E / (3 w) for CCDM with D <= w + 1.

    Raises:
        ModelError: D > w + 1
    """
    if D > w + 1:
        raise ModelError(f"closed-form EDI needs D <= w + 1, got D={D}, w={w}")
    return (D + 1) * (mu4 - 1.0) * energy / (3.0 * w)


# ---------------------------------------------------------------- autocorrelation

def iid_energy_autocorrelation(mu4: float, max_lag: int) -> Tuple[np.ndarray, np.ndarray]:
    """r_k = (mu4 - 1) delta_k for lags -max_lag..max_lag."""
    lags = np.arange(-max_lag, max_lag + 1)
    return lags, np.where(lags == 0, mu4 - 1.0, 0.0)


def ccdm_energy_autocorrelation(D: int, mu4: float, max_lag: Optional[int] = None
                                ) -> Tuple[np.ndarray, np.ndarray]:
    """
    Block-averaged CCDM autocorrelation: mu4 - 1 at 0, (mu4 - 1)(|k|/D - 1)/(D - 1)
    for 1 <= |k| < D and 0 beyond.
    """
    if D < 2:
        raise ModelError("CCDM autocorrelation needs D >= 2")
    max_lag = D if max_lag is None else int(max_lag)
    lags = np.arange(-max_lag, max_lag + 1)
    k = np.abs(lags).astype(float)
    r = np.where(k < D, (mu4 - 1.0) * (k / D - 1.0) / (D - 1.0), 0.0)
    r[lags == 0] = mu4 - 1.0
    return lags, r


def empirical_autocorrelation(e: EnergySequence, max_lag: int) -> Tuple[np.ndarray, np.ndarray]:
    """Circular autocorrelation of e - 1 averaged over all indices."""
    x = e.fluctuation
    n = x.size
    spec = np.fft.rfft(x, n)
    full = np.fft.irfft(np.abs(spec) ** 2, n) / n
    lags = np.arange(-max_lag, max_lag + 1)
    return lags, full[lags % n]


def energy_autocorrelation(source: Union[Constellation, EnergySequence, Any], max_lag: int = 256,
                           mu4: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Energy autocorrelation of a source.

    Args:
        source: i.i.d. constellation, CCDM shaper spec, or an energy sequence (empirical)
        max_lag: one-sided number of lags
        mu4: overrides the fourth moment used by the closed forms
    """
    if isinstance(source, Constellation):
        return iid_energy_autocorrelation(standardized_moments(source).mu4 if mu4 is None else mu4, max_lag)
    if isinstance(source, EnergySequence):
        return empirical_autocorrelation(source, max_lag)
    kind = getattr(getattr(source, "kind", None), "value", None)
    if kind == "CCDM":
        if mu4 is None:
            from shapinglab.modules.matchers.matcher_analytics import induced_moments
            mu4 = induced_moments(source, pairing=1).mu4
        return ccdm_energy_autocorrelation(source.D, mu4, max_lag)
    raise ModelError(f"no energy autocorrelation for source of type {type(source).__name__}")


# ---------------------------------------------------------------- spectra

def psd_estimate(e: EnergySequence, nperseg: int = WELCH_NPERSEG,
                 noverlap: int = WELCH_NOVERLAP) -> Tuple[np.ndarray, np.ndarray]:
    """
    Averaged-periodogram PSD of e - 1 with a rectangular window.

    Returns:
        (frequency in cycles per symbol ascending from -0.5, two-sided density)
    """
    if len(e) < nperseg:
        raise FrameError(f"PSD needs at least {nperseg} samples, got {len(e)}")
    f, pxx = signal.welch(e.fluctuation, fs=1.0, window="boxcar", nperseg=nperseg, noverlap=noverlap,
                          detrend=False, return_onesided=False, scaling="density")
    order = np.argsort(f)
    return f[order], pxx[order]


def psd_from_autocorrelation(lags: np.ndarray, r: np.ndarray, n_fft: int = 4096) -> Tuple[np.ndarray, np.ndarray]:
    """Exact spectrum S(f) = sum_k r_k exp(-j 2 pi f k) on an n_fft grid."""
    lags = np.asarray(lags, dtype=np.int64)
    if np.max(np.abs(lags)) >= n_fft // 2:
        raise ModelError(f"n_fft={n_fft} too small for lag {np.max(np.abs(lags))}")
    buf = np.zeros(n_fft)
    np.add.at(buf, lags % n_fft, np.asarray(r, dtype=float))
    spectrum = np.fft.fftshift(np.fft.fft(buf).real)
    f = np.fft.fftshift(np.fft.fftfreq(n_fft))
    return f, spectrum


def psd_at_dc(lags: np.ndarray, r: np.ndarray) -> float:
    """S(0) = sum of the autocorrelation."""
    return float(np.sum(r))


# Run as a script to check the functions: `python -m shapinglab.modules.perturbation.energy_statistics`
if __name__ == "__main__":
    lags, r = ccdm_energy_autocorrelation(180, 1.5)
    xlogger.info("CCDM autocorrelation DC", data={"S0": psd_at_dc(lags, r)})
