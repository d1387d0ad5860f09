"""
Enumerative sphere shaping and its kurtosis-limited variant.

The bounded-energy trellis stores, for every position and reachable state,
the exact number of admissible completions. States are the accumulated
(sum a^2, sum a^4) pairs; the fourth-moment sum is only tracked for K-ESS.
Admissible sequences are ordered lexicographically with the amplitude levels
ascending, and index i maps to the i-th sequence.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import time
import numpy as np

from functools import lru_cache
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import MatcherError
from shapinglab.utils.xutils import bits_to_int, int_to_bits
from shapinglab.modules.matchers.shaper_spec import ShaperKind, ShaperSpec


State = Tuple[int, int]
ROOT: State = (0, 0)


@dataclass(frozen=True)
class EssTrellis:
    """
    Enumeration table of a bounded-energy shaping set.

    Attributes:
        D: block length
        amplitude_levels: ascending integer levels
        e_max: energy bound E_max
        k_max: fourth-moment bound (None for plain ESS)
        counts: counts[i][state] = admissible completions of positions i..D-1
    """
    D: int
    amplitude_levels: Tuple[int, ...]
    e_max: int
    k_max: Optional[int]
    counts: Tuple[Dict[State, int], ...]

    @property
    def n_seq(self) -> int:
        return self.counts[0].get(ROOT, 0)

    @property
    def n_states(self) -> int:
        return sum(len(layer) for layer in self.counts)

    def child(self, state: State, level_index: int) -> State:
        a = self.amplitude_levels[level_index]
        return (state[0] + a * a, state[1] + a ** 4 if self.k_max is not None else 0)

    def completions(self, position: int, state: State) -> int:
        return self.counts[position].get(state, 0)


@lru_cache(maxsize=64)
def _build_trellis(D: int, levels: Tuple[int, ...], e_max: int, k_max: Optional[int]) -> EssTrellis:
    if D < 1:
        raise MatcherError(f"block length must be positive, got {D}")
    if list(levels) != sorted(set(levels)) or levels[0] <= 0:
        raise MatcherError(f"amplitude levels must be positive, distinct and ascending: {levels}")
    squares = [a * a for a in levels]
    quarts = [a ** 4 for a in levels]
    track_k = k_max is not None
    if e_max < D * squares[0] or (track_k and k_max < D * quarts[0]):
        raise MatcherError(f"empty admissible set: E_max={e_max}, K_max={k_max}, D={D}, levels={levels}")

    start = time.time()
    # forward pass: states from which the all-minimum completion still fits
    layers: List[set] = [{ROOT}]
    for i in range(D):
        remaining = D - i - 1
        reachable = set()
        for e, k in layers[-1]:
            for s, q in zip(squares, quarts):
                e2 = e + s
                if e2 + remaining * squares[0] > e_max:
                    break
                k2 = k + q if track_k else 0
                if track_k and k2 + remaining * quarts[0] > k_max:
                    break
                reachable.add((e2, k2))
        layers.append(reachable)

    counts: List[Dict[State, int]] = [dict() for _ in range(D + 1)]
    counts[D] = {state: 1 for state in layers[D]}
    for i in range(D - 1, -1, -1):
        below = counts[i + 1]
        layer: Dict[State, int] = {}
        for e, k in layers[i]:
            total = 0
            for s, q in zip(squares, quarts):
                total += below.get((e + s, k + q if track_k else 0), 0)
            if total:
                layer[(e, k)] = total
        counts[i] = layer

    trellis = EssTrellis(D, tuple(levels), e_max, k_max, tuple(counts))
    if trellis.n_seq == 0:
        raise MatcherError(f"empty admissible set: E_max={e_max}, K_max={k_max}, D={D}")
    xlogger.debug("ESS trellis built", data={"D": D, "e_max": e_max, "k_max": k_max,
                                             "states": trellis.n_states,
                                             "log2_n_seq": math.log2(trellis.n_seq),
                                             "elapsed_s": round(time.time() - start, 4)})
    return trellis


def ess_trellis(spec: ShaperSpec) -> EssTrellis:
    """
    Bounded-energy trellis of an ESS or K-ESS spec (cached per parameter set).

    Raises:
        MatcherError: CCDM spec or empty admissible set
    """
    if spec.kind == ShaperKind.CCDM:
        raise MatcherError("ess_trellis needs an ESS or KESS spec")
    k_max = spec.k_max if spec.kind == ShaperKind.KESS else None
    return _build_trellis(spec.D, spec.amplitude_levels, int(spec.e_max), k_max)


def ess_spec(D: int, amplitude_levels: Sequence[int], e_max: int, k_max: Optional[int] = None) -> ShaperSpec:
    """ESS spec, or K-ESS when `k_max` is given; n_seq and k_in come from the trellis."""
    levels = tuple(int(a) for a in amplitude_levels)
    trellis = _build_trellis(int(D), levels, int(e_max), None if k_max is None else int(k_max))
    n_seq = trellis.n_seq
    return ShaperSpec(kind=ShaperKind.ESS if k_max is None else ShaperKind.KESS, D=int(D),
                      amplitude_levels=levels, e_max=int(e_max),
                      k_max=None if k_max is None else int(k_max),
                      n_seq=n_seq, k_in=n_seq.bit_length() - 1)


def ess_unrank(spec: ShaperSpec, index: int) -> np.ndarray:
    """Index-th admissible sequence in lexicographic order."""
    trellis = ess_trellis(spec)
    if not 0 <= index < trellis.n_seq:
        raise MatcherError(f"index {index} outside [0, {trellis.n_seq})")
    out = np.empty(spec.D, dtype=np.int64)
    state = ROOT
    for i in range(spec.D):
        for li, a in enumerate(trellis.amplitude_levels):
            child = trellis.child(state, li)
            count = trellis.completions(i + 1, child)
            if index < count:
                out[i] = a
                state = child
                break
            index -= count
    return out


def ess_rank(spec: ShaperSpec, block: Sequence[int]) -> int:
    """
    Lexicographic rank of an admissible block.

    Raises:
        MatcherError: wrong length, unknown level or bound violation
    """
    trellis = ess_trellis(spec)
    block = [int(a) for a in block]
    if len(block) != spec.D:
        raise MatcherError(f"block length {len(block)} != D={spec.D}")
    level_index = {a: i for i, a in enumerate(trellis.amplitude_levels)}
    rank = 0
    state = ROOT
    for i, a in enumerate(block):
        if a not in level_index:
            raise MatcherError(f"amplitude {a} not in {trellis.amplitude_levels}")
        li = level_index[a]
        for lj in range(li):
            rank += trellis.completions(i + 1, trellis.child(state, lj))
        state = trellis.child(state, li)
        if trellis.completions(i + 1, state) == 0:
            raise MatcherError(f"inadmissible block: bound exceeded at position {i}")
    return rank


def ess_encode(spec: ShaperSpec, bits: Sequence[int]) -> np.ndarray:
    """
    Map k_in bits to the admissible block with that lexicographic index.

    Raises:
        MatcherError: bit-length mismatch
    """
    if len(bits) != spec.k_in:
        raise MatcherError(f"expected {spec.k_in} bits, got {len(bits)}")
    block = ess_unrank(spec, bits_to_int(bits))
    energy = int(np.sum(block ** 2))
    if energy > spec.e_max or (spec.k_max is not None and int(np.sum(block ** 4)) > spec.k_max):
        raise MatcherError(f"encoder emitted a block outside the bounds (energy {energy})")
    return block


def ess_decode(spec: ShaperSpec, block: Sequence[int]) -> np.ndarray:
    """
    Inverse of ess_encode.

    Raises:
        MatcherError: inadmissible block or index outside the 2^k_in encoded sequences
    """
    rank = ess_rank(spec, block)
    if rank >> spec.k_in:
        raise MatcherError(f"block rank {rank} is outside the 2^{spec.k_in} encoded sequences")
    return int_to_bits(rank, spec.k_in)


def energy_distribution(D: int, amplitude_levels: Sequence[int]) -> Dict[int, int]:
    """Exact number of length-D sequences per total energy sum a_i^2."""
    dist = {0: 1}
    squares = [int(a) * int(a) for a in amplitude_levels]
    for _ in range(D):
        nxt: Dict[int, int] = {}
        for e, n in dist.items():
            for s in squares:
                nxt[e + s] = nxt.get(e + s, 0) + n
        dist = nxt
    return dist


def ess_energy_bound(D: int, amplitude_levels: Sequence[int], rate: float, extra_bits: int = 0) -> int:
    """
    Smallest E_max with floor(log2 n_seq) >= ceil(rate * D) + extra_bits.

    Args:
        rate: amplitude bits per amplitude (k / D)

    Raises:
        MatcherError: rate above log2 of the alphabet size
    """
    target = math.ceil(rate * D - 1e-9) + extra_bits
    cumulative = 0
    for e, n in sorted(energy_distribution(D, amplitude_levels).items()):
        cumulative += n
        if cumulative.bit_length() - 1 >= target:
            return e
    raise MatcherError(f"rate {rate} unreachable with D={D} over {len(amplitude_levels)} levels")


def kess_kurtosis_bound(D: int, amplitude_levels: Sequence[int], e_max: int, rate: float,
                        extra_bits: int = 0) -> int:
    """
    Smallest K_max that keeps floor(log2 n_seq) >= ceil(rate * D) + extra_bits
    under the energy bound `e_max`.

    Raises:
        MatcherError: rate unreachable at this E_max
    """
    target = math.ceil(rate * D - 1e-9) + extra_bits
    pairs = [(int(a) * int(a), int(a) ** 4) for a in amplitude_levels]
    joint: Dict[State, int] = {ROOT: 1}
    min_sq = min(s for s, _ in pairs)
    for i in range(D):
        remaining = D - i - 1
        nxt: Dict[State, int] = {}
        for (e, k), n in joint.items():
            for s, q in pairs:
                if e + s + remaining * min_sq <= e_max:
                    key = (e + s, k + q)
                    nxt[key] = nxt.get(key, 0) + n
        joint = nxt
    per_k: Dict[int, int] = {}
    for (_, k), n in joint.items():
        per_k[k] = per_k.get(k, 0) + n
    cumulative = 0
    for k, n in sorted(per_k.items()):
        cumulative += n
        if cumulative.bit_length() - 1 >= target:
            return k
    raise MatcherError(f"rate {rate} unreachable with E_max={e_max}, D={D}")


# Run as a script to check the functions: `python -m shapinglab.modules.matchers.ess_matcher`
if __name__ == "__main__":
    e_max = ess_energy_bound(64, [1, 3, 5, 7], 1.5)
    spec = ess_spec(64, [1, 3, 5, 7], e_max)
    xlogger.info(spec.describe())
    bits = np.random.default_rng(0).integers(0, 2, spec.k_in)
    assert np.array_equal(ess_decode(spec, ess_encode(spec, bits)), bits)
