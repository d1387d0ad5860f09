"""
Selection metrics, registered in METRIC_REGISTRY. Lower is better.

- `edi`: energy dispersion index of the candidate's energy sequence
- `lsas`: energy of the lowpass-filtered amplitude sequence, sum_k d_k^2
- `am`, `am-s`, `am-q`: additive-multiplicative NLIN energy with the full,
  selected and quantized coefficient sets

Every metric takes (frame, kernel=None, window=None) so the selector can
call them uniformly.

@author: rookielittleblack
@date:   2025-09-02
"""
import numpy as np

from typing import Callable, List, Optional

from shapinglab.utils.xerror_handler import ConfigError, FrameError
from shapinglab.modules.others.xregistry import METRIC_REGISTRY
from shapinglab.modules.pas.energy_sequence import EnergySequence
from shapinglab.modules.pas.symbol_frame import SymbolFrame
from shapinglab.modules.perturbation.energy_statistics import edi
from shapinglab.modules.perturbation.filter_model import phase_noise_nlin
from shapinglab.modules.fiber.link_config import LinkConfig
from shapinglab.modules.perturbation.perturbation_kernel import (
    PerturbationKernel, TruncationRule, additive_distortion, circular_convolve, compute_coefficients, memory_window,
    truncation_memory
)


DEFAULT_EDI_WINDOW = 111

Metric = Callable[..., float]


def _require_kernel(kernel: Optional[PerturbationKernel], name: str) -> PerturbationKernel:
    if kernel is None:
        raise ConfigError(f"metric '{name}' needs a perturbation kernel")
    return kernel


def _check_polarizations(frame: SymbolFrame, kernel: PerturbationKernel) -> None:
    if kernel.dual_pol != (frame.n_pol == 2):
        raise FrameError(f"kernel is {'dual' if kernel.dual_pol else 'single'}-polarization, "
                         f"candidate has {frame.n_pol} polarization(s)")


def aggregated_energies(frame: SymbolFrame) -> List[EnergySequence]:
    """
    Per-polarization 2 e_p + e_q (2 e for one polarization) in units of the
    constellation energy. Candidates are not renormalized, so energy
    differences between them stay visible.
    """
    e = np.abs(frame.symbols) ** 2 / frame.constellation.mean_energy
    if frame.n_pol == 1:
        return [EnergySequence(2.0 * e[0], source={"baseline": 2.0})]
    return [EnergySequence(2.0 * e[p] + e[1 - p], source={"baseline": 3.0, "pol": p}) for p in range(2)]


def multiplicative_term(kernel: PerturbationKernel, frame: SymbolFrame) -> np.ndarray:
    """j gamma E x_k ((e_agg - baseline) * h)_k per polarization."""
    x = frame.symbols
    phase = np.stack([circular_convolve(e.fluctuation, *kernel.taps(0)) for e in aggregated_energies(frame)])
    return 1j * kernel.scale * x * phase


@METRIC_REGISTRY.register(name="edi", metadata={"description": "energy dispersion index over a window"})
def metric_edi(frame: SymbolFrame, kernel: Optional[PerturbationKernel] = None,
               window: Optional[int] = None) -> float:
    """EDI of the polarization-averaged energy sequence; the window is clipped to the frame."""
    e = np.sum(np.abs(frame.symbols) ** 2, axis=0) / (frame.n_pol * frame.constellation.mean_energy)
    w = min(int(window or DEFAULT_EDI_WINDOW), e.size)
    return edi(EnergySequence(e), w)


@METRIC_REGISTRY.register(name="lsas", metadata={"description": "lowpass-filtered symbol-amplitude sequence"})
def metric_lsas(frame: SymbolFrame, kernel: Optional[PerturbationKernel] = None,
                window: Optional[int] = None) -> float:
    """Sum of squared phase-noise NLIN; depends on |x|^2 only."""
    kernel = _require_kernel(kernel, "lsas")
    _check_polarizations(frame, kernel)
    return float(sum(np.sum(phase_noise_nlin(kernel, e) ** 2) for e in aggregated_energies(frame)))


def am_metric(frame: SymbolFrame, kernel: PerturbationKernel, rule: Optional[TruncationRule] = None) -> float:
    """
    sum_k |j gamma E x_k ((e - baseline) * h)_k + dx'_k|^2 over both polarizations.

    Raises:
        FrameError: polarization mismatch between kernel and candidate
    """
    _check_polarizations(frame, kernel)
    if rule is not None and kernel.rule != rule:
        kernel = kernel.with_rule(rule)
    distortion = multiplicative_term(kernel, frame) + additive_distortion(kernel, frame.symbols)
    return float(np.sum(np.abs(distortion) ** 2))


@METRIC_REGISTRY.register(name="am", metadata={"description": "additive-multiplicative model, full coefficients",
                                               "rule": "full"})
def metric_am(frame: SymbolFrame, kernel: Optional[PerturbationKernel] = None,
              window: Optional[int] = None) -> float:
    return am_metric(frame, _require_kernel(kernel, "am"), TruncationRule.FULL)


@METRIC_REGISTRY.register(name="am-s", metadata={"description": "AM metric on the |m n| < w coefficient set",
                                                 "rule": "selected"})
def metric_am_selected(frame: SymbolFrame, kernel: Optional[PerturbationKernel] = None,
                       window: Optional[int] = None) -> float:
    return am_metric(frame, _require_kernel(kernel, "am-s"), TruncationRule.SELECTED)


@METRIC_REGISTRY.register(name="am-q", metadata={"description": "AM metric with k-means quantized coefficients",
                                                 "rule": "quantized"})
def metric_am_quantized(frame: SymbolFrame, kernel: Optional[PerturbationKernel] = None,
                        window: Optional[int] = None) -> float:
    return am_metric(frame, _require_kernel(kernel, "am-q"), TruncationRule.QUANTIZED)


def get_metric(name: str) -> Metric:
    return METRIC_REGISTRY.get(name)


def prepare_kernel(name: str, kernel: Optional[PerturbationKernel]) -> Optional[PerturbationKernel]:
    """Convert the kernel once to the rule a metric evaluates (quantization is not free)."""
    rule = (METRIC_REGISTRY.get_metadata(name) or {}).get("rule")
    if kernel is None or rule is None:
        return kernel
    return kernel.with_rule(rule)


def kernel_memory(link: LinkConfig, name: str) -> int:
    """
    Kernel memory a metric is evaluated with: the truncation memory for the AM
    family, so the full, selected and quantized sets agree on the NLIN
    variance, and the dispersion memory otherwise.
    """
    if (METRIC_REGISTRY.get_metadata(name) or {}).get("rule") is None:
        return memory_window(link)
    return truncation_memory(link)


def selection_kernel(link: LinkConfig, name: str, w_mem: Optional[int] = None, power_dbm: Optional[float] = None,
                     include_xpm: bool = False, max_workers: Optional[int] = None) -> Optional[PerturbationKernel]:
    """Center-channel kernel for metric `name` (None for metrics that need none), already in its rule."""
    get_metric(name)
    if name == "edi":
        return None
    kernel = compute_coefficients(link, w_mem=kernel_memory(link, name) if w_mem is None else w_mem,
                                  power_dbm=power_dbm, include_xpm=include_xpm, max_workers=max_workers)
    return prepare_kernel(name, kernel)
