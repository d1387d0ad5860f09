"""
This operator propagates the transmit frames over the fiber link.

@author: rookielittleblack
@date:   2025-09-02
"""
from typing import Any, Dict

from shapinglab.utils.xerror_handler import ConfigError
from shapinglab.modules.fiber.link_config import LinkConfig
from shapinglab.modules.fiber.ssfm_channel import ssfm_propagate
from shapinglab.modules.others.xoperator import OperatorABC, register_operator


@register_operator("fiber_channel")
class XFiberChannel(OperatorABC):
    """
    Split-step propagation of all channels.

    Config keys:
        link: LinkConfig
        n_steps: steps per span (derived from the launch power when absent)

    Context in: frames, power_dbm, seed. Context out: waveform.
    """

    def _on_init(self) -> None:
        self._on_configure()

    def _on_configure(self) -> None:
        link = self.config.get("link")
        if not isinstance(link, LinkConfig):
            raise ConfigError("fiber channel needs a 'link' (LinkConfig) in its config")
        self.link: LinkConfig = link
        self.n_steps = self.config.get("n_steps")

    @staticmethod
    def get_desc(lang: str = "en"):
        if lang == "zh":
            return "XFiberChannel 用分步傅里叶法模拟多跨段 WDM 光纤传输。"
        return "XFiberChannel simulates multi-span WDM propagation with the split-step Fourier method."

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        waveform = ssfm_propagate(context["frames"], self.link, seed=int(context.get("seed", 0)),
                                  power_dbm=context.get("power_dbm"), n_steps=self.n_steps)
        return {**context, "waveform": waveform}
