"""
This pipeline builds the transmit frames of all channels.

@author: rookielittleblack
@date:   2025-09-02
"""
from typing import Any, Dict, Optional

from shapinglab.utils.xlogger import xlogger
from shapinglab.modules.operators import XSelector, XTransmitter
from shapinglab.modules.others.xpipeline import PipelineABC, register_pipeline


@register_pipeline("transmit")
class XTransmitPipe(PipelineABC):
    """
    Transmitter, optionally followed by best-of-N sequence selection.

    With selection enabled the selector draws its own payloads and its frames
    replace the transmitter's; the plain frames stay in `reference_frames`.
    """

    VERSION = "1.0.0"

    def __init__(self, max_workers: Optional[int] = None, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            max_workers: candidate fan-out of the selector
            config: transmitter keys (shaper, mapping, pilot_rate, n_pol, baud_rate,
                n_symbols) plus:
                - enable_selection: run the selector (default False)
                - selection: SelectionConfig
                - kernel: PerturbationKernel for the lsas/am metrics
        """
        # Defaults before super().__init__, which calls _configure_operators()
        self.default_config = {
            "enable_selection": False,
            "mapping": "dim1",
            "pilot_rate": 0.0,
            "n_pol": 1,
        }
        config = {**self.default_config, **(config or {})}
        self.transmitter: Optional[XTransmitter] = None
        self.selector: Optional[XSelector] = None
        super().__init__(max_workers=max_workers, config=config)

    def _configure_operators(self) -> None:
        self.transmitter = XTransmitter(self.config)
        self.add_operator(self.transmitter)
        if self.config.get("enable_selection"):
            self.selector = XSelector({**self.config, "max_workers": self.max_workers})
            self.add_operator(self.selector)
        xlogger.debug(f"Configured {len(self.operators)} transmit operators")

    def get_desc(self, lang: str = "en") -> str:
        if lang == "zh":
            return "XTransmitPipe 生成各信道的 PAS 发送帧，可选序列选择"
        return "XTransmitPipe builds the PAS transmit frames of every channel, with optional sequence selection"

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        context = self.transmitter.execute(context)
        if self.selector is not None:
            plain = context["frames"]
            context = self.selector.execute(context)
            context["reference_frames"] = plain
        return context
