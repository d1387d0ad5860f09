"""
This operator builds the PAS transmit frames of every WDM channel.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from typing import Any, Dict, List

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import ConfigError
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper
from shapinglab.modules.pas.symbol_frame import MappingKind, SymbolFrame, assemble_frame
from shapinglab.modules.others.xoperator import OperatorABC, register_operator


SEED_SPACE = 2 ** 31 - 1


def channel_seed(seed: int, channel: int) -> int:
    """Integer seed of one channel's bit stream, derived from the run seed only."""
    return int(np.random.default_rng([seed, channel]).integers(0, SEED_SPACE))


@register_operator("transmitter")
class XTransmitter(OperatorABC):
    """
    Random payload -> shaper -> PAS frame, once per channel.

    Config keys:
        shaper: AmplitudeShaper instance
        mapping: dim1 | dim2 | dim4 (default dim1)
        pilot_rate: pilot fraction (default 0)
        n_pol: polarizations (default 1)
        baud_rate: symbol rate in Bd (default 32e9)
        n_symbols: minimum symbols per polarization; rounded up to whole shaper groups

    Context in: seed, n_channels (default 1). Context out: frames, payloads.
    """

    def _on_init(self) -> None:
        self._on_configure()

    def _on_configure(self) -> None:
        shaper = self.config.get("shaper")
        if not isinstance(shaper, AmplitudeShaper):
            raise ConfigError("transmitter needs a 'shaper' (AmplitudeShaper) in its config")
        self.shaper: AmplitudeShaper = shaper
        self.mapping = MappingKind.parse(self.config.get("mapping", MappingKind.DIM1))
        self.pilot_rate = float(self.config.get("pilot_rate", 0.0))
        self.n_pol = int(self.config.get("n_pol", 1))
        self.baud_rate = float(self.config.get("baud_rate", 32e9))
        self.n_symbols = int(self.config.get("n_symbols", 4096))

    @staticmethod
    def get_desc(lang: str = "en"):
        if lang == "zh":
            return (
                "XTransmitter 为每个信道生成随机载荷，",
                "经幅度整形器和 PAS 映射得到发送帧。",
            )
        return (
            "XTransmitter draws a random payload per channel, shapes it",
            "and assembles the PAS frame with signs and pilots.",
        )

    @property
    def n_blocks(self) -> int:
        """Shaper blocks per channel: whole groups of 2 * n_pol blocks covering n_symbols."""
        return 2 * self.n_pol * max(1, math.ceil(self.n_symbols / self.shaper.D))

    def build_frame(self, seed: int, channel: int = 0) -> Dict[str, Any]:
        rng = np.random.default_rng([seed, channel, 1])
        payload, blocks = self.shaper.sample(self.n_blocks, rng)
        frame = assemble_frame(blocks, self.mapping, channel_seed(seed, channel), pilot_rate=self.pilot_rate,
                               amplitude_probs=self.shaper.marginal(),
                               amplitude_levels=self.shaper.amplitude_levels, n_pol=self.n_pol,
                               baud_rate=self.baud_rate, shaper=self.shaper.KIND, channel=channel)
        return {"frame": frame, "payload": payload}

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        seed = int(context.get("seed", 0))
        n_channels = int(context.get("n_channels", 1))
        built = [self.build_frame(seed, ch) for ch in range(n_channels)]
        frames: List[SymbolFrame] = [b["frame"] for b in built]
        xlogger.debug("frames built", data={"shaper": self.shaper.describe(), "channels": n_channels,
                                            "n_symbols": frames[0].n_symbols, "seed": seed})
        return {**context, "frames": frames, "payloads": [b["payload"] for b in built]}


# Run as a script to check the functions: `python -m shapinglab.modules.operators.xtransmitter`
if __name__ == "__main__":
    from shapinglab.modules.matchers import build_shaper
    op = XTransmitter({"shaper": build_shaper("ccdm", 32, [1, 3, 5, 7], 1.5), "n_symbols": 256})
    out = op.execute({"seed": 7, "n_channels": 3})
    xlogger.info(f"{len(out['frames'])} frames of {out['frames'][0].n_symbols} symbols")
