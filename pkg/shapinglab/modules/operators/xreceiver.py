"""
This operator runs the coherent receiver and measures the effective SNR.

@author: rookielittleblack
@date:   2025-09-02
"""
from typing import Any, Dict

from shapinglab.utils.xerror_handler import ConfigError
from shapinglab.modules.constellation.air_estimator import air_bmd
from shapinglab.modules.fiber.link_config import CprConfig, LinkConfig
from shapinglab.modules.fiber.coherent_receiver import measure_effective_snr, receiver_dsp
from shapinglab.modules.others.xoperator import OperatorABC, register_operator


@register_operator("receiver")
class XReceiver(OperatorABC):
    """
    CDC, matched filter, CPR and scaling on the center channel.

    Config keys:
        link: LinkConfig
        cpr: CprConfig (MPR when absent)
        compute_air: also estimate the BMD rate (default False)

    Context in: waveform, frames, seed. Context out: rx (ReceiverOutput), snr, air (optional).
    """

    def _on_init(self) -> None:
        self._on_configure()

    def _on_configure(self) -> None:
        link = self.config.get("link")
        if not isinstance(link, LinkConfig):
            raise ConfigError("receiver needs a 'link' (LinkConfig) in its config")
        self.link: LinkConfig = link
        self.cpr: CprConfig = self.config.get("cpr") or CprConfig()
        self.compute_air = bool(self.config.get("compute_air", False))

    @staticmethod
    def get_desc(lang: str = "en"):
        if lang == "zh":
            return "XReceiver 完成色散补偿、匹配滤波、载波相位恢复并计算有效信噪比。"
        return "XReceiver compensates dispersion, filters, recovers the carrier phase and measures SNR_eff."

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        tx = context["frames"][self.link.center_channel]
        seed = int(context.get("seed", 0))
        out = receiver_dsp(context["waveform"], self.link, self.cpr, tx)
        result = {**context, "rx": out, "snr": measure_effective_snr(tx, out.frame, seed=seed)}
        if self.compute_air:
            result["air"] = air_bmd(tx, out.frame, tx.constellation)
        return result
