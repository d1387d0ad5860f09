"""
Cost of the AM selection metric.

@author: rookielittleblack
@date:   2025-09-02
"""
from dataclasses import asdict, dataclass
from typing import Any, Dict, Union

from shapinglab.utils.xerror_handler import ConfigError
from shapinglab.modules.perturbation.perturbation_kernel import TruncationRule, quantized_count


def full_count(w: int) -> int:
    """(w + 1)^2 + w^2 coefficients with |m| + |n| <= w."""
    return (w + 1) ** 2 + w ** 2


def selected_count(w: int) -> int:
    """4 sum_{k=1}^{w} floor((w - 1) / k) + 4 w + 1 coefficients with |m n| < w."""
    return 4 * sum((w - 1) // k for k in range(1, w + 1)) + 4 * w + 1


@dataclass(frozen=True)
class ComplexityReport:
    """
    Per-symbol complex multiplications of the AM metric for N_t candidates.

    Attributes:
        w_mem: one-sided memory
        n_candidates: N_t
        n_full, n_selected, n_quantized: coefficient count n_pb under each rule
    """
    w_mem: int
    n_candidates: int
    n_full: int
    n_selected: int
    n_quantized: int

    def n_pb(self, rule: Union[str, TruncationRule]) -> int:
        rule = TruncationRule(rule)
        return {TruncationRule.FULL: self.n_full, TruncationRule.SELECTED: self.n_selected,
                TruncationRule.QUANTIZED: self.n_quantized}[rule]

    def cost(self, rule: Union[str, TruncationRule] = TruncationRule.FULL) -> int:
        """C_AM = N_t (2 + n_pb)."""
        return self.n_candidates * (2 + self.n_pb(rule))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.update({f"cost_{r.value}": self.cost(r) for r in TruncationRule})
        return data


def complexity_report(w_mem: int, n_candidates: int = 1) -> ComplexityReport:
    """
    Raises:
        ConfigError: negative memory or no candidates
    """
    if w_mem < 0:
        raise ConfigError(f"w_mem must be non-negative, got {w_mem}")
    if n_candidates < 1:
        raise ConfigError(f"n_candidates must be positive, got {n_candidates}")
    return ComplexityReport(int(w_mem), int(n_candidates), full_count(w_mem), selected_count(w_mem),
                            quantized_count(w_mem))
