"""
Kurtosis-driven NLIN coefficient and optimum-SNR prediction.

eta(mu4) = eta1 + eta2 (mu4 - 2), calibrated by least squares against GN
fits of simulated power sweeps. Block-structured sources substitute the
windowed kurtosis, split between the SPM window and the XPM window by the
single-channel share of eta2.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ModelError
from shapinglab.utils.xutils import linear_to_db
from shapinglab.modules.constellation.qam_constellation import MomentReport
from shapinglab.modules.fiber.link_config import LinkConfig
from shapinglab.modules.perturbation.energy_statistics import WindowedMomentReport


GAUSSIAN_MU4 = 2.0


@dataclass(frozen=True)
class EgnCalibration:
    """
    Calibrated eta(mu4) of one link.

    Attributes:
        p_ase: accumulated ASE power (W)
        eta1: eta of a Gaussian-kurtosis source (1/W^2)
        eta2: slope in mu4 (1/W^2)
        link_hash: LinkConfig.config_hash() the calibration belongs to
        spm_fraction: share of eta2 attributed to SPM (1 for single-channel links)
    """
    p_ase: float
    eta1: float
    eta2: float
    link_hash: str = ""
    spm_fraction: float = 1.0

    def eta(self, mu4: float) -> float:
        return self.eta1 + self.eta2 * (mu4 - GAUSSIAN_MU4)

    def effective_mu4(self, mu4_spm: float, mu4_xpm: Optional[float] = None) -> float:
        """Windowed kurtosis weighted by the SPM/XPM split."""
        if mu4_xpm is None:
            return mu4_spm
        return self.spm_fraction * mu4_spm + (1.0 - self.spm_fraction) * mu4_xpm

    def snr_opt(self, mu4: float) -> float:
        """(1/3)(2 / P_ASE)^(2/3) eta^(-1/3)."""
        eta = self.eta(mu4)
        if eta <= 0:
            raise ModelError(f"calibration gives non-positive eta={eta:.3e} at mu4={mu4}")
        return (1.0 / 3.0) * (2.0 / self.p_ase) ** (2.0 / 3.0) * eta ** (-1.0 / 3.0)

    @classmethod
    def calibrate(cls, points: Sequence[Tuple[float, float]], p_ase: float,
                  link: Optional[LinkConfig] = None) -> 'EgnCalibration':
        """
        Least-squares fit of eta = eta1 + eta2 (mu4 - 2).

        Args:
            points: (mu4, fitted eta) per simulated distribution
            p_ase: shared ASE power of the sweeps

        Raises:
            ModelError: fewer than two distinct kurtoses or non-positive P_ASE
        """
        mu4 = np.array([p[0] for p in points], dtype=float)
        eta = np.array([p[1] for p in points], dtype=float)
        if np.unique(mu4).size < 2:
            raise ModelError("calibration needs sweeps of at least two distributions with different mu4")
        if p_ase <= 0:
            raise ModelError(f"calibration needs a positive P_ASE, got {p_ase}")
        A = np.stack([np.ones_like(mu4), mu4 - GAUSSIAN_MU4], axis=1)
        (eta1, eta2), *_ = np.linalg.lstsq(A, eta, rcond=None)
        xlogger.debug("eta calibration", data={"eta1": float(eta1), "eta2": float(eta2), "n": int(mu4.size)})
        return cls(float(p_ase), float(eta1), float(eta2), link.config_hash() if link else "")

    def with_split(self, single_channel: 'EgnCalibration') -> 'EgnCalibration':
        """SPM share of eta2 from a single-channel calibration of the same span layout."""
        if self.eta2 == 0:
            return replace(self, spm_fraction=1.0)
        fraction = float(np.clip(single_channel.eta2 / self.eta2, 0.0, 1.0))
        return replace(self, spm_fraction=fraction)


MomentsLike = Union[float, MomentReport, WindowedMomentReport,
                    Tuple[WindowedMomentReport, WindowedMomentReport]]


def _mu4(moments: MomentsLike, calibration: EgnCalibration) -> float:
    if isinstance(moments, tuple):
        spm, xpm = moments
        return calibration.effective_mu4(spm.mu4w, xpm.mu4w)
    if isinstance(moments, WindowedMomentReport):
        return moments.mu4w
    if isinstance(moments, MomentReport):
        return moments.mu4
    return float(moments)


def predict_snr(link: LinkConfig, moments: MomentsLike, calibration: Optional[EgnCalibration],
                in_db: bool = True) -> float:
    """
    Predicted optimum effective SNR for a source with the given (windowed) kurtosis.

    Args:
        moments: mu4, a MomentReport, a WindowedMomentReport, or (spm, xpm) windowed reports

    Raises:
        ModelError: missing calibration or calibration made for another link
    """
    if calibration is None:
        raise ModelError("link is not calibrated: run an eta calibration first")
    if calibration.link_hash and calibration.link_hash != link.config_hash():
        raise ModelError(f"calibration belongs to link {calibration.link_hash}, not {link.config_hash()}")
    snr = calibration.snr_opt(_mu4(moments, calibration))
    return float(linear_to_db(snr)) if in_db else snr
