"""
GN-style analysis of effective-SNR power sweeps.

SNR_eff(P) = P / (P_ASE + eta P^3): least-squares fits (optionally with a
P_ASE shared between series), optimum power, optimum SNR, nonlinear gain and
the incoherent-GN reach bound.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import time
import numpy as np

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError, ModelError
from shapinglab.utils.xutils import db_to_linear, dbm_to_watt, linear_to_db, run_parallel, watt_to_dbm
from shapinglab.modules.fiber.link_config import CprConfig, LinkConfig
from shapinglab.modules.fiber.ssfm_channel import ssfm_propagate
from shapinglab.modules.fiber.coherent_receiver import SnrEstimate, measure_effective_snr, receiver_dsp
from shapinglab.modules.pas.symbol_frame import SymbolFrame


MIN_SWEEP_POINTS = 3


@dataclass(frozen=True)
class GnFit:
    """Fitted P_ASE (W) and eta (1/W^2) of one series."""
    p_ase: float
    eta: float
    label: str = ""

    def snr(self, power_w) -> np.ndarray:
        power_w = np.asarray(power_w, dtype=float)
        return power_w / (self.p_ase + self.eta * power_w ** 3)

    def snr_db(self, power_dbm) -> np.ndarray:
        return linear_to_db(self.snr(dbm_to_watt(np.asarray(power_dbm, dtype=float))))

    @property
    def p_opt(self) -> float:
        """(P_ASE / 2 eta)^(1/3)."""
        return (self.p_ase / (2.0 * self.eta)) ** (1.0 / 3.0)

    @property
    def p_opt_dbm(self) -> float:
        return float(watt_to_dbm(self.p_opt))

    @property
    def snr_opt(self) -> float:
        """(1/3)(2/P_ASE)^(2/3) eta^(-1/3)."""
        return (1.0 / 3.0) * (2.0 / self.p_ase) ** (2.0 / 3.0) * self.eta ** (-1.0 / 3.0)

    @property
    def snr_opt_db(self) -> float:
        return float(linear_to_db(self.snr_opt))


def _check_series(powers_dbm: Sequence[float], snr_db: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(dbm_to_watt(np.asarray(powers_dbm, dtype=float)), dtype=float)
    s = np.asarray(db_to_linear(np.asarray(snr_db, dtype=float)), dtype=float)
    if p.shape != s.shape:
        raise ConfigError(f"{p.size} powers but {s.size} SNR values")
    if p.size < MIN_SWEEP_POINTS:
        raise ConfigError(f"a GN fit needs at least {MIN_SWEEP_POINTS} power points, got {p.size}")
    return p, s


def fit_gn_models(sweeps: Dict[str, Tuple[Sequence[float], Sequence[float]]],
                  shared_ase: bool = True) -> Dict[str, GnFit]:
    """
    Least-squares fit of P/SNR = P_ASE + eta P^3 per series.

    Args:
        sweeps: label -> (powers in dBm, SNR in dB)
        shared_ase: one P_ASE for all series (same link and receiver)

    Raises:
        ModelError: non-positive P_ASE or eta (sweep not GN-shaped)
    """
    labels = list(sweeps)
    series = [_check_series(*sweeps[label]) for label in labels]
    fits: Dict[str, GnFit] = {}
    if shared_ase:
        rows, targets = [], []
        for i, (p, s) in enumerate(series):
            block = np.zeros((p.size, 1 + len(labels)))
            block[:, 0] = 1.0
            block[:, 1 + i] = p ** 3
            rows.append(block)
            targets.append(p / s)
        A, b = np.vstack(rows), np.concatenate(targets)
        # column scaling keeps the normal equations well conditioned
        norms = np.linalg.norm(A, axis=0)
        coef = np.linalg.lstsq(A / norms, b, rcond=None)[0] / norms
        fits = {label: GnFit(float(coef[0]), float(coef[1 + i]), label) for i, label in enumerate(labels)}
    else:
        for label, (p, s) in zip(labels, series):
            A = np.stack([np.ones_like(p), p ** 3], axis=1)
            norms = np.linalg.norm(A, axis=0)
            coef = np.linalg.lstsq(A / norms, p / s, rcond=None)[0] / norms
            fits[label] = GnFit(float(coef[0]), float(coef[1]), label)
    for fit in fits.values():
        if fit.p_ase <= 0 or fit.eta <= 0:
            raise ModelError(f"GN fit failed for '{fit.label}': P_ASE={fit.p_ase:.3e}, eta={fit.eta:.3e}")
    return fits


def fit_gn_model(powers_dbm: Sequence[float], snr_db: Sequence[float], label: str = "") -> GnFit:
    return fit_gn_models({label: (powers_dbm, snr_db)}, shared_ase=False)[label]


def nonlinear_gain(ref: GnFit, shaped: GnFit) -> Dict[str, float]:
    """
    g_nl of `shaped` over `ref` in dB, three ways: eta ratio, optimum-power
    ratio and optimum-SNR ratio. All three agree when P_ASE is shared.
    """
    return {
        "eta": float(linear_to_db(ref.eta / shaped.eta)) / 3.0,
        "p_opt": float(linear_to_db(shaped.p_opt / ref.p_opt)),
        "snr_opt": float(linear_to_db(shaped.snr_opt / ref.snr_opt)),
    }


def ign_snr_bound(p_ase1: float, eta1: float, n_spans: int) -> float:
    """Optimum SNR of the incoherent GN model: (1/(3 N_s)) (4 / (P_ASE,1^2 eta_1))^(1/3)."""
    if p_ase1 <= 0 or eta1 <= 0 or n_spans < 1:
        raise ModelError("ign_snr_bound needs positive P_ASE,1, eta_1 and n_spans >= 1")
    return (1.0 / (3.0 * n_spans)) * (4.0 / (p_ase1 ** 2 * eta1)) ** (1.0 / 3.0)


def ign_max_spans(p_ase1: float, eta1: float, snr_target_db: float) -> int:
    """Largest span count whose incoherent-GN optimum SNR still meets the target."""
    snr = float(db_to_linear(snr_target_db))
    return int(math.floor(ign_snr_bound(p_ase1, eta1, 1) / snr))


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepResult:
    """Per-power effective SNR of one frame ensemble and its GN fit."""
    label: str
    powers_dbm: np.ndarray
    snr: List[SnrEstimate]
    fit: Optional[GnFit] = None
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([s.value_db for s in self.snr])

    def best(self) -> Tuple[float, SnrEstimate]:
        i = int(np.argmax(self.snr_db))
        return float(self.powers_dbm[i]), self.snr[i]


def parse_power_grid(text: str) -> np.ndarray:
    """'start:step:stop' (inclusive) or comma-separated dBm values."""
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return np.round(start + step * np.arange(n), 10)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as e:
        raise ConfigError(f"invalid power grid '{text}': {e}") from e


def simulate_snr(frames: Sequence[SymbolFrame], link: LinkConfig, cpr: CprConfig, power_dbm: float,
                 seed: int = 0) -> SnrEstimate:
    """Propagate once and measure SNR_eff of the center channel."""
    waveform = ssfm_propagate(frames, link, seed=seed, power_dbm=power_dbm)
    out = receiver_dsp(waveform, link, cpr, frames[link.center_channel])
    return measure_effective_snr(frames[link.center_channel], out.frame, seed=seed)


def power_sweep(link: LinkConfig, frames_for_seed: Callable[[int], Sequence[SymbolFrame]],
                powers_dbm: Sequence[float], cpr: CprConfig, seed: int = 0, label: str = "",
                max_workers: Optional[int] = None, fit: bool = True) -> SweepResult:
    """
    SNR_eff at every launch power, optimum power and the GN fit.

    Args:
        frames_for_seed: builds the per-channel frames for a seed
        powers_dbm: at least three launch powers

    Raises:
        ConfigError: fewer than three powers
    """
    powers = np.asarray(powers_dbm, dtype=float)
    if powers.size < MIN_SWEEP_POINTS:
        raise ConfigError(f"a power sweep needs at least {MIN_SWEEP_POINTS} points, got {powers.size}")
    start = time.time()
    xlogger.info("power sweep start", data={"label": label, "powers_dbm": powers.tolist(), "seed": seed})
    frames = frames_for_seed(seed)
    snrs = run_parallel(lambda p: simulate_snr(frames, link, cpr, float(p), seed=seed), powers,
                        max_workers=max_workers, desc=f"sweep {label}")
    result = SweepResult(label, powers, snrs)
    if fit:
        result.fit = fit_gn_model(powers, result.snr_db, label)
    xlogger.success("power sweep done", data={"label": label, "best": result.best()[0],
                                              "seconds": round(time.time() - start, 3)})
    return result
