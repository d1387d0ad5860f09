"""
Analytics of fixed-length shapers: induced amplitude marginal, rate loss,
induced QAM moments and empirical block kurtosis.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import MatcherError
from shapinglab.utils.xutils import bits_to_int, random_bits
from shapinglab.modules.constellation.qam_constellation import MomentReport, moments_from_samples
from shapinglab.modules.matchers.shaper_spec import ShaperKind, ShaperSpec
from shapinglab.modules.matchers.ccdm_matcher import ccdm_unrank
from shapinglab.modules.matchers.ess_matcher import ROOT, EssTrellis, ess_trellis, ess_unrank


PAIRINGS = (1, 2, 4)


def _occurrences(trellis: EssTrellis) -> List[Dict[tuple, List[int]]]:
    """occ[i][state][l] = occurrences of level l over all completions from (i, state)."""
    L = len(trellis.amplitude_levels)
    occ: List[Dict[tuple, List[int]]] = [dict() for _ in range(trellis.D + 1)]
    occ[trellis.D] = {state: [0] * L for state in trellis.counts[trellis.D]}
    for i in range(trellis.D - 1, -1, -1):
        layer = {}
        for state in trellis.counts[i]:
            acc = [0] * L
            for li in range(L):
                child = trellis.child(state, li)
                n = trellis.completions(i + 1, child)
                if n == 0:
                    continue
                acc[li] += n
                for lj, v in enumerate(occ[i + 1][child]):
                    acc[lj] += v
            layer[state] = acc
        occ[i] = layer
    return occ


def _ess_level_counts(spec: ShaperSpec) -> List[int]:
    """Level occurrences summed over the first 2^k_in admissible sequences."""
    trellis = ess_trellis(spec)
    occ = _occurrences(trellis)
    L = len(trellis.amplitude_levels)
    used = 1 << spec.k_in
    if used == trellis.n_seq:
        return list(occ[0][ROOT])

    # sequences ranked below `used` split into full subtrees off the path of index `used`
    total = [0] * L
    prefix = [0] * L
    index, state = used, ROOT
    for i in range(trellis.D):
        for li in range(L):
            child = trellis.child(state, li)
            n = trellis.completions(i + 1, child)
            if index >= n:
                if n:
                    for lj in range(L):
                        total[lj] += prefix[lj] * n + occ[i + 1][child][lj]
                    total[li] += n
                index -= n
                continue
            prefix[li] += 1
            state = child
            break
    return total


def induced_marginal(spec: ShaperSpec) -> np.ndarray:
    """
    Position-averaged amplitude distribution of the first 2^k_in sequences.

    Returns:
        probabilities aligned with `spec.amplitude_levels`
    """
    if spec.kind == ShaperKind.CCDM:
        return np.array([n / spec.D for n in spec.composition], dtype=float)
    counts = _ess_level_counts(spec)
    denominator = (1 << spec.k_in) * spec.D
    return np.array([float(Fraction(c, denominator)) for c in counts], dtype=float)


def rate_loss(spec: ShaperSpec) -> float:
    """H(induced marginal) - k_in / D in bits per amplitude (non-negative)."""
    p = induced_marginal(spec)
    p = p[p > 0]
    h = float(-np.sum(p * np.log2(p)))
    return max(0.0, h - float(spec.rate))


def sample_indices(spec: ShaperSpec, n: int, rng: np.random.Generator) -> List[int]:
    """Uniform random input indices in [0, 2^k_in)."""
    return [bits_to_int(random_bits(spec.k_in, rng)) for _ in range(n)]


def sample_blocks(spec: ShaperSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Blocks for uniform random inputs, shape (n, D)."""
    unrank = ccdm_unrank if spec.kind == ShaperKind.CCDM else ess_unrank
    if n == 0:
        return np.empty((0, spec.D), dtype=np.int64)
    return np.stack([unrank(spec, idx) for idx in sample_indices(spec, n, rng)])


def _pair_blocks(blocks: np.ndarray, pairing: int) -> np.ndarray:
    """
    Complex (sign-free) symbols from consecutive amplitudes within each block.

    The 4-dim layout puts (a_0 + j a_1) on X and (a_2 + j a_3) on Y, so the
    per-symbol values equal the 2-dim ones; `pairing` only sets which block
    lengths are admissible. Moments are per complex symbol and do not see the
    polarization assignment.
    """
    D = blocks.shape[1]
    if D % pairing:
        raise MatcherError(f"D={D} is not divisible by the pairing dimension {pairing}")
    # within one block: (a_0 + j a_1), (a_2 + j a_3), ...
    return (blocks[:, 0::2] + 1j * blocks[:, 1::2]).ravel()


def induced_moments(spec: ShaperSpec, pairing: int = 1, n_blocks: int = 2000, seed: int = 0,
                    with_ci: bool = True) -> MomentReport:
    """
    Standardized moments of QAM symbols built from shaper outputs.

    pairing=1 uses the exact position-averaged marginal with the two
    quadratures taken from independent blocks; pairing 2 and 4 place
    consecutive amplitudes of one block on a quadrature pair and are
    estimated by Monte Carlo over random inputs.

    Raises:
        MatcherError: unsupported pairing or D not divisible by it
    """
    if pairing not in PAIRINGS:
        raise MatcherError(f"pairing must be one of {PAIRINGS}, got {pairing}")
    if pairing == 1:
        p = induced_marginal(spec)
        a2 = np.asarray(spec.amplitude_levels, dtype=float) ** 2
        m2, m4, m6 = (float(np.dot(p, a2 ** n)) for n in (1, 2, 3))
        e2 = 2.0 * m2
        e4 = 2.0 * m4 + 2.0 * m2 ** 2
        e6 = 2.0 * m6 + 6.0 * m4 * m2
        return MomentReport(mu4=e4 / e2 ** 2, mu6=e6 / e2 ** 3)
    rng = np.random.default_rng(seed)
    blocks = sample_blocks(spec, n_blocks, rng)
    return moments_from_samples(_pair_blocks(blocks, pairing), with_ci=with_ci, seed=seed)


def block_kurtosis(block: np.ndarray) -> float:
    """Empirical kurtosis D * sum a^4 / (sum a^2)^2 of one amplitude block."""
    a2 = np.asarray(block, dtype=float) ** 2
    return float(a2.size * np.sum(a2 ** 2) / np.sum(a2) ** 2)


def kurtosis_histogram(spec: ShaperSpec, n_pairs: int = 2000, seed: int = 0,
                       bins: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Empirical kurtosis of QAM blocks formed by pairing two shaper outputs.

    Returns:
        (per-pair kurtosis values, histogram density, bin edges)
    """
    rng = np.random.default_rng(seed)
    blocks = sample_blocks(spec, 2 * n_pairs, rng).astype(float)
    r2 = blocks[0::2] ** 2 + blocks[1::2] ** 2
    kurt = spec.D * np.sum(r2 ** 2, axis=1) / np.sum(r2, axis=1) ** 2
    if bins is None:
        bins = np.histogram_bin_edges(kurt, bins=40)
    density, edges = np.histogram(kurt, bins=bins, density=True)
    xlogger.debug("kurtosis histogram", data={"shaper": spec.describe(), "mean": float(kurt.mean())})
    return kurt, density, edges
