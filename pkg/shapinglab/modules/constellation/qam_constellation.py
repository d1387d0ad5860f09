"""
Square QAM constellations with probabilistic shaping.

Constellation values, the Maxwell-Boltzmann family, entropy, standardized
moments, and the linear / nonlinear shaping-gain algebra.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from typing import Any, Dict, Optional, Sequence, Tuple
from dataclasses import dataclass, field

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConstellationError
from shapinglab.utils.xutils import bootstrap_ci, compensated_sum, linear_to_db


SUPPORTED_ORDERS = (4, 16, 64, 256)
PROB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class MomentReport:
    """Standardized 4th/6th moments; CIs are set for Monte Carlo estimates."""
    mu4: float
    mu6: float
    mu4_ci: Optional[Tuple[float, float]] = None
    mu6_ci: Optional[Tuple[float, float]] = None

    @property
    def excess_kurtosis(self) -> float:
        # complex Gaussian reference
        return self.mu4 - 2.0

    def to_dict(self) -> Dict[str, Any]:
        return {"mu4": self.mu4, "mu6": self.mu6, "excess_kurtosis": self.excess_kurtosis,
                "mu4_ci": self.mu4_ci, "mu6_ci": self.mu6_ci}


@dataclass(frozen=True, eq=False)
class Constellation:
    """
    Complex signal points with a probability distribution.

    Attributes:
        points: complex signal points
        probs: per-point probabilities (sum to 1)
        bit_labels: integer bit label per point (Gray for square QAM)
        bits_per_symbol: label width
        scale: factor from the odd-integer grid to `points` (1 for custom sets)
        label: free-form name
    """
    points: np.ndarray
    probs: np.ndarray
    bit_labels: np.ndarray
    bits_per_symbol: int
    scale: float = 1.0
    label: str = ""
    _cache: Dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.complex128)
        probs = np.asarray(self.probs, dtype=float)
        if points.ndim != 1 or points.size == 0:
            raise ConstellationError("Constellation needs a non-empty 1-D point array")
        if probs.shape != points.shape:
            raise ConstellationError(f"probs has shape {probs.shape}, points {points.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ConstellationError("probabilities must be finite and non-negative")
        total = probs.sum()
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise ConstellationError(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs / total)
        object.__setattr__(self, "bit_labels", np.asarray(self.bit_labels, dtype=np.int64))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def mean_energy(self) -> float:
        return compensated_sum(self.probs * np.abs(self.points) ** 2)

    @property
    def mean(self) -> complex:
        return complex(compensated_sum(self.probs * self.points.real),
                       compensated_sum(self.probs * self.points.imag))

    @property
    def amplitude_levels(self) -> np.ndarray:
        """Distinct positive per-dimension amplitudes, ascending."""
        values = np.abs(np.concatenate([self.points.real, self.points.imag]))
        return np.unique(np.round(values[values > 0], 12))

    @property
    def support(self) -> np.ndarray:
        return self.points[self.probs > 0]

    def bit_matrix(self) -> np.ndarray:
        """(size, bits_per_symbol) matrix of label bits, MSB first."""
        if "bits" not in self._cache:
            shifts = np.arange(self.bits_per_symbol - 1, -1, -1)
            self._cache["bits"] = ((self.bit_labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        return self._cache["bits"]

    def scaled(self, factor: float) -> 'Constellation':
        return Constellation(self.points * factor, self.probs, self.bit_labels, self.bits_per_symbol,
                             self.scale * factor, self.label)

    def normalized(self) -> 'Constellation':
        """Copy scaled to unit mean energy."""
        energy = self.mean_energy
        if energy <= 0:
            raise ConstellationError("Cannot normalize a zero-energy constellation")
        return self.scaled(1.0 / math.sqrt(energy))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw `n` i.i.d. points from the distribution."""
        return self.points[rng.choice(self.size, size=n, p=self.probs)]

    def nearest_index(self, symbols: np.ndarray) -> np.ndarray:
        """Index of the nearest point for every symbol."""
        symbols = np.asarray(symbols, dtype=np.complex128)
        flat = symbols.ravel()
        out = np.empty(flat.size, dtype=np.int64)
        chunk = max(1, 2 ** 20 // self.size)
        for start in range(0, flat.size, chunk):
            block = flat[start:start + chunk]
            out[start:start + chunk] = np.argmin(np.abs(block[:, None] - self.points[None, :]), axis=1)
        return out.reshape(symbols.shape)

    def to_json(self) -> Dict[str, Any]:
        return {
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "probs": [float(p) for p in self.probs],
            "label": self.label,
            "bit_labels": [int(b) for b in self.bit_labels],
            "bits_per_symbol": self.bits_per_symbol,
            "scale": self.scale
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> 'Constellation':
        try:
            points = np.array([complex(re, im) for re, im in data["points"]])
            probs = np.asarray(data["probs"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ConstellationError(f"Malformed constellation JSON: {e}") from e
        labels = data.get("bit_labels", list(range(points.size)))
        bps = int(data.get("bits_per_symbol", max(1, math.ceil(math.log2(max(points.size, 2))))))
        return cls(points, probs, np.asarray(labels), bps, float(data.get("scale", 1.0)), data.get("label", ""))


def _pam_levels(m: int) -> np.ndarray:
    """Odd-integer PAM levels -(m-1), ..., m-1."""
    return np.arange(m, dtype=float) * 2.0 - (m - 1)


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def _square_side(M: int) -> int:
    if M not in SUPPORTED_ORDERS:
        raise ConstellationError(f"Unsupported QAM order {M}; expected one of {SUPPORTED_ORDERS}")
    return int(round(math.sqrt(M)))


def build_qam(M: int, probs: Optional[Sequence[float]] = None, label: Optional[str] = None) -> Constellation:
    """
    Gray-labeled square M-QAM, normalized to unit mean energy.

    Point `i * m + q` sits at (2i-m+1) + j(2q-m+1) before normalization; its
    label concatenates the Gray codes of i (MSBs) and q.

    Args:
        M: constellation order (4, 16, 64, 256)
        probs: optional per-point probabilities in the same order

    Raises:
        ConstellationError: unsupported order or invalid probabilities
    """
    m = _square_side(M)
    bpd = int(math.log2(m))
    levels = _pam_levels(m)
    ii, qq = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    grid = (levels[ii] + 1j * levels[qq]).ravel()
    labels = ((_gray(ii) << bpd) | _gray(qq)).ravel()

    if probs is None:
        p = np.full(M, 1.0 / M)
    else:
        p = np.asarray(probs, dtype=float)
        if p.shape != (M,):
            raise ConstellationError(f"probs must have length {M}, got {p.shape}")

    raw = Constellation(grid, p, labels, 2 * bpd, 1.0, label or f"{M}QAM")
    return raw.normalized()


def mb_distribution(amplitudes: Sequence, lam: float) -> np.ndarray:
    """
    Maxwell-Boltzmann probabilities p_i ~ exp(-lam |x_i|^2).

    Args:
        amplitudes: non-empty, distinct signal points or amplitudes (real or complex)
        lam: non-negative rate parameter

    Raises:
        ConstellationError: negative lam, empty or repeated amplitudes
    """
    if lam < 0:
        raise ConstellationError(f"lambda must be non-negative, got {lam}")
    a = np.asarray(amplitudes)
    if a.size == 0:
        raise ConstellationError("amplitudes must be non-empty")
    if np.unique(a).size != a.size:
        raise ConstellationError("amplitudes must be distinct")
    log_w = -lam * np.abs(a.astype(np.complex128)) ** 2
    log_w -= log_w.max()
    w = np.exp(log_w)
    return w / w.sum()


def qam_from_amplitudes(M: int, amplitude_probs: Sequence[float], label: Optional[str] = None) -> Constellation:
    """
    PAS-induced square QAM: independent per-dimension amplitudes with uniform signs.

    Args:
        M: QAM order
        amplitude_probs: probabilities of the amplitude levels 1, 3, ..., sqrt(M)-1
    """
    m = _square_side(M)
    pa = np.asarray(amplitude_probs, dtype=float)
    if pa.shape != (m // 2,):
        raise ConstellationError(f"{M}QAM needs {m // 2} amplitude probabilities, got {pa.shape}")
    if np.any(pa < 0) or abs(pa.sum() - 1.0) > PROB_TOLERANCE:
        raise ConstellationError("amplitude probabilities must be non-negative and sum to 1")
    # per-level probability of a signed PAM point: half the amplitude mass
    levels = _pam_levels(m)
    amp_index = (np.abs(levels).astype(int) - 1) // 2
    p_dim = pa[amp_index] / 2.0
    probs = np.outer(p_dim, p_dim).ravel()
    return build_qam(M, probs, label=label)


def mb_qam(M: int, lam: float) -> Constellation:
    """MB-shaped square QAM with lam applied to the odd-integer grid."""
    m = _square_side(M)
    amps = np.arange(1, m, 2, dtype=float)
    return qam_from_amplitudes(M, mb_distribution(amps, lam), label=f"{M}QAM-MB{lam:g}")


def entropy(c: Constellation) -> float:
    """Entropy in bits per complex symbol (0 log 0 := 0)."""
    p = c.probs[c.probs > 0]
    return float(-compensated_sum(p * np.log2(p)))


def standardized_moments(c: Constellation) -> MomentReport:
    """
    mu_n = E|x|^n / (E|x|^2)^(n/2) for n = 4, 6.

    Raises:
        ConstellationError: zero-energy constellation
    """
    r2 = np.abs(c.points) ** 2
    m2 = compensated_sum(c.probs * r2)
    if m2 <= 0:
        raise ConstellationError("standardized moments need E > 0")
    m4 = compensated_sum(c.probs * r2 ** 2)
    m6 = compensated_sum(c.probs * r2 ** 3)
    return MomentReport(mu4=m4 / m2 ** 2, mu6=m6 / m2 ** 3)


def moments_from_samples(x: np.ndarray, with_ci: bool = True, n_resamples: Optional[int] = None,
                         seed: int = 0) -> MomentReport:
    """Monte Carlo standardized moments of a sample array, bootstrap CIs (config `bootstrap`) optional."""
    r2 = np.abs(np.asarray(x, dtype=np.complex128).ravel()) ** 2
    if r2.size == 0 or r2.mean() <= 0:
        raise ConstellationError("moments need non-empty, non-zero samples")
    mu4 = float(np.mean(r2 ** 2) / np.mean(r2) ** 2)
    mu6 = float(np.mean(r2 ** 3) / np.mean(r2) ** 3)
    if not with_ci:
        return MomentReport(mu4, mu6)
    ci4 = bootstrap_ci(r2, lambda s: np.mean(s ** 2) / np.mean(s) ** 2, n_resamples=n_resamples, seed=seed)
    ci6 = bootstrap_ci(r2, lambda s: np.mean(s ** 3) / np.mean(s) ** 3, n_resamples=n_resamples,
                       seed=seed + 1)
    return MomentReport(mu4, mu6, ci4, ci6)


def moment_ratio(shaped: Constellation, ref: Constellation) -> Tuple[float, float]:
    """(mu4 ratio, mu6 ratio) of shaped over reference."""
    a, b = standardized_moments(shaped), standardized_moments(ref)
    return a.mu4 / b.mu4, a.mu6 / b.mu6


def min_distance_sq(c: Constellation) -> float:
    """Squared minimum distance over points with non-zero probability."""
    pts = c.support
    if pts.size < 2:
        raise ConstellationError("d_min needs at least two support points")
    d2 = np.abs(pts[:, None] - pts[None, :]) ** 2
    np.fill_diagonal(d2, np.inf)
    return float(d2.min())


def _linear_figure(c: Constellation) -> float:
    # (2^(2H) - 1) d_min^2 / (6P) with H and P per real dimension
    h_dim = entropy(c) / 2.0
    p_dim = c.mean_energy / 2.0
    return (2.0 ** (2.0 * h_dim) - 1.0) * min_distance_sq(c) / (6.0 * p_dim)


def linear_shaping_gain(shaped: Constellation, ref: Constellation) -> float:
    """
    Linear shaping gain of `shaped` over `ref` in dB.

    Raises:
        ConstellationError: degenerate reference
    """
    g_ref = _linear_figure(ref)
    if g_ref <= 0:
        raise ConstellationError("reference constellation has zero linear figure of merit")
    return float(linear_to_db(_linear_figure(shaped) / g_ref))


def system_quality_factor(c: Constellation, p_ase: float, eta: float, power) -> np.ndarray:
    """
    Q = nu P / (P_ASE + eta P^3) with nu = d_min^2 / E.

    Args:
        p_ase: ASE power (W)
        eta: NLIN coefficient (1/W^2)
        power: launch power(s) in W
    """
    nu = min_distance_sq(c) / c.mean_energy
    power = np.asarray(power, dtype=float)
    return nu * power / (p_ase + eta * power ** 3)


def q_max(c: Constellation, p_ase: float, eta: float) -> float:
    """Maximum SQF, reached at the optimum launch power."""
    if eta <= 0 or p_ase <= 0:
        raise ConstellationError("q_max needs positive P_ASE and eta")
    nu = min_distance_sq(c) / c.mean_energy
    return (1.0 / 3.0) * (p_ase / 2.0) ** (-2.0 / 3.0) * nu / eta ** (1.0 / 3.0)


def total_shaping_gain(shaped: Constellation, ref: Constellation,
                       eta_sh: float, eta_ref: float) -> Tuple[float, float, float]:
    """
    Split the SQF gain into (g_lin, g_nl, total), all in dB.
    """
    if eta_sh <= 0 or eta_ref <= 0:
        raise ConstellationError("eta values must be positive")
    g_lin = linear_shaping_gain(shaped, ref)
    g_nl = float(linear_to_db(eta_ref / eta_sh)) / 3.0
    return g_lin, g_nl, g_lin + g_nl


# Run as a script to check the functions: `python -m shapinglab.modules.constellation.qam_constellation`
if __name__ == "__main__":
    uniform = build_qam(64)
    shaped = mb_qam(64, 0.03)
    xlogger.info("64QAM MB 0.03", data={
        "entropy": entropy(shaped),
        "mu4": standardized_moments(shaped).mu4,
        "g_lin_db": linear_shaping_gain(shaped, uniform)
    })
