"""
This operator replaces the plain transmit frames by sequence-selected ones.

@author: rookielittleblack
@date:   2025-09-02
"""
import math

from typing import Any, Dict, List, Optional

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper
from shapinglab.modules.pas.symbol_frame import MappingKind
from shapinglab.modules.perturbation.perturbation_kernel import PerturbationKernel
from shapinglab.modules.selection.sequence_candidates import SelectionConfig, groups_per_block
from shapinglab.modules.selection.sequence_selector import SelectionRun, run_selection
from shapinglab.modules.operators.xtransmitter import channel_seed
from shapinglab.modules.others.xoperator import OperatorABC, register_operator


@register_operator("selector")
class XSelector(OperatorABC):
    """
    Best-of-N sequence selection per channel.

    Config keys:
        shaper: AmplitudeShaper with k_in covering the flipping bits
        selection: SelectionConfig
        kernel: PerturbationKernel for the lsas/am metrics (context `kernel` overrides)
        mapping, n_pol, baud_rate, n_symbols: as for the transmitter
        max_workers: candidate fan-out

    Context in: seed, n_channels. Context out: frames, selection (SelectionRun per channel).
    """

    def _on_init(self) -> None:
        self._on_configure()

    def _on_configure(self) -> None:
        shaper = self.config.get("shaper")
        if not isinstance(shaper, AmplitudeShaper):
            raise ConfigError("selector needs a 'shaper' (AmplitudeShaper) in its config")
        selection = self.config.get("selection", SelectionConfig())
        if isinstance(selection, dict):
            selection = SelectionConfig(**selection)
        self.shaper: AmplitudeShaper = shaper
        self.selection: SelectionConfig = selection
        self.kernel: Optional[PerturbationKernel] = self.config.get("kernel")
        self.mapping = MappingKind.parse(self.config.get("mapping", MappingKind.DIM1))
        self.n_pol = int(self.config.get("n_pol", 1))
        self.baud_rate = float(self.config.get("baud_rate", 32e9))
        self.n_symbols = int(self.config.get("n_symbols", 4096))
        self.max_workers = self.config.get("max_workers")

    @staticmethod
    def get_desc(lang: str = "en"):
        if lang == "zh":
            return (
                "XSelector 为每个选择块生成 N_t 个候选序列，",
                "按非线性度量选出最优序列并拼接成发送帧。",
            )
        return (
            "XSelector generates N_t candidates per selection block,",
            "keeps the one with the lowest nonlinearity metric",
            "and joins the chosen blocks into the transmit frame.",
        )

    @property
    def n_selection_blocks(self) -> int:
        span = groups_per_block(self.shaper.D, self.selection.selection_length) * self.shaper.D
        return max(1, math.ceil(self.n_symbols / span))

    def select_channel(self, seed: int, channel: int, kernel: Optional[PerturbationKernel]) -> SelectionRun:
        return run_selection(self.shaper, self.selection, self.n_selection_blocks, kernel=kernel,
                             mapping=self.mapping, n_pol=self.n_pol, baud_rate=self.baud_rate,
                             seed=channel_seed(seed, channel), max_workers=self.max_workers)

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        seed = int(context.get("seed", 0))
        n_channels = int(context.get("n_channels", 1))
        kernel = context.get("kernel", self.kernel)
        runs: List[SelectionRun] = [self.select_channel(seed, ch, kernel) for ch in range(n_channels)]
        frames = [r.selected.with_symbols(r.selected.symbols, channel=ch) for ch, r in enumerate(runs)]
        xlogger.info("selection applied", data={"metric": self.selection.metric,
                                                "n_candidates": self.selection.n_candidates,
                                                "channels": n_channels, "seed": seed})
        return {**context, "frames": frames, "payloads": [r.payloads for r in runs], "selection": runs}
