"""
Constant composition distribution matching.

Exact big-integer interval matching over the permutations of one amplitude
multiset: the input index is unranked in lexicographic order, which is the
infinite-precision limit of arithmetic-coding CCDM.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from typing import Sequence, Tuple

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import MatcherError
from shapinglab.utils.xutils import bits_to_int, int_to_bits
from shapinglab.modules.constellation.qam_constellation import mb_distribution
from shapinglab.modules.matchers.shaper_spec import ShaperKind, ShaperSpec


def multinomial(counts: Sequence[int]) -> int:
    """(sum n)! / prod(n!) as an exact integer."""
    total, result = 0, 1
    for n in counts:
        total += n
        result *= math.comb(total, n)
    return result


def ccdm_spec(amplitude_levels: Sequence[int], composition: Sequence[int]) -> ShaperSpec:
    """Build a CCDM spec; n_seq is the multinomial coefficient of the composition."""
    n_seq = multinomial(composition)
    return ShaperSpec(kind=ShaperKind.CCDM, D=int(sum(composition)),
                      amplitude_levels=tuple(int(a) for a in amplitude_levels),
                      composition=tuple(int(n) for n in composition),
                      n_seq=n_seq, k_in=n_seq.bit_length() - 1)


def quantize_type(probs: Sequence[float], D: int) -> Tuple[int, ...]:
    """
    n-type quantization of a distribution: floor(D p), then greedy unit
    increments that minimize the KL divergence to p.
    """
    p = np.asarray(probs, dtype=float)
    target = D * p
    counts = np.floor(target).astype(np.int64)

    def cost(n: int, t: float) -> float:
        return 0.0 if n == 0 else n * math.log(n / t) if t > 0 else math.inf

    for _ in range(D - int(counts.sum())):
        deltas = [cost(int(n) + 1, t) - cost(int(n), t) for n, t in zip(counts, target)]
        counts[int(np.argmin(deltas))] += 1
    return tuple(int(n) for n in counts)


def ccdm_composition(D: int, amplitude_levels: Sequence[int], rate: float, extra_bits: int = 0,
                     lam_max: float = 5.0, iterations: int = 60) -> Tuple[int, ...]:
    """
    Composition for a target rate: quantized MB type with the largest lambda
    whose floor(log2 n_seq) reaches ceil(rate * D) + extra_bits.

    Args:
        D: block length
        amplitude_levels: ascending positive levels
        rate: amplitude bits per amplitude (k / D)
        extra_bits: additional input bits, e.g. flipping bits

    Raises:
        MatcherError: rate not reachable at this block length
    """
    levels = np.asarray(amplitude_levels, dtype=float)
    target = math.ceil(rate * D - 1e-9) + extra_bits

    def bits(lam: float) -> Tuple[int, Tuple[int, ...]]:
        comp = quantize_type(mb_distribution(levels, lam), D)
        return multinomial(comp).bit_length() - 1, comp

    k0, comp0 = bits(0.0)
    if k0 < target:
        raise MatcherError(f"rate {rate} needs {target} bits but D={D} over {len(levels)} levels "
                           f"gives at most {k0}")
    lo, hi = 0.0, lam_max
    best = comp0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        k, comp = bits(mid)
        if k >= target:
            lo, best = mid, comp
        else:
            hi = mid
    return best


def ccdm_unrank(spec: ShaperSpec, index: int) -> np.ndarray:
    """Index-th permutation of the composition in lexicographic order."""
    if spec.kind != ShaperKind.CCDM:
        raise MatcherError(f"expected a CCDM spec, got {spec.kind.value}")
    if not 0 <= index < spec.n_seq:
        raise MatcherError(f"index {index} outside [0, {spec.n_seq})")
    counts = list(spec.composition)
    remaining = spec.D
    total = spec.n_seq
    out = np.empty(spec.D, dtype=np.int64)
    for pos in range(spec.D):
        for li, n in enumerate(counts):
            if n == 0:
                continue
            count_with = total * n // remaining
            if index < count_with:
                out[pos] = spec.amplitude_levels[li]
                counts[li] -= 1
                total = count_with
                break
            index -= count_with
        remaining -= 1
    return out


def ccdm_rank(spec: ShaperSpec, block: Sequence[int]) -> int:
    """
    Lexicographic rank of a block among the composition's permutations.

    Raises:
        MatcherError: wrong length or composition
    """
    if spec.kind != ShaperKind.CCDM:
        raise MatcherError(f"expected a CCDM spec, got {spec.kind.value}")
    block = [int(a) for a in block]
    if len(block) != spec.D:
        raise MatcherError(f"block length {len(block)} != D={spec.D}")
    level_index = {a: i for i, a in enumerate(spec.amplitude_levels)}
    observed = [0] * len(spec.amplitude_levels)
    for a in block:
        if a not in level_index:
            raise MatcherError(f"amplitude {a} not in {spec.amplitude_levels}")
        observed[level_index[a]] += 1
    if tuple(observed) != spec.composition:
        raise MatcherError(f"composition mismatch: block has {observed}, spec {list(spec.composition)}")

    counts = list(spec.composition)
    remaining = spec.D
    total = spec.n_seq
    rank = 0
    for a in block:
        li = level_index[a]
        for lj in range(li):
            if counts[lj]:
                rank += total * counts[lj] // remaining
        total = total * counts[li] // remaining
        counts[li] -= 1
        remaining -= 1
    return rank


def ccdm_encode(spec: ShaperSpec, bits: Sequence[int]) -> np.ndarray:
    """
    Map k_in bits to a block with exactly the spec's composition.

    Raises:
        MatcherError: bit-length mismatch or non-CCDM spec
    """
    if len(bits) != spec.k_in:
        raise MatcherError(f"expected {spec.k_in} bits, got {len(bits)}")
    return ccdm_unrank(spec, bits_to_int(bits))


def ccdm_decode(spec: ShaperSpec, block: Sequence[int]) -> np.ndarray:
    """
    Inverse of ccdm_encode.

    Raises:
        MatcherError: composition mismatch or block outside the encoded range
    """
    rank = ccdm_rank(spec, block)
    if rank >> spec.k_in:
        raise MatcherError(f"block rank {rank} is outside the 2^{spec.k_in} encoded sequences")
    return int_to_bits(rank, spec.k_in)


# Run as a script to check the functions: `python -m shapinglab.modules.matchers.ccdm_matcher`
if __name__ == "__main__":
    comp = ccdm_composition(180, [1, 3, 5, 7], 1.4)
    spec = ccdm_spec([1, 3, 5, 7], comp)
    xlogger.info(spec.describe())
