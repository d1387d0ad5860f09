"""
This pipeline sweeps the launch power over the fiber link and fits the GN model.

@author: rookielittleblack
@date:   2025-09-02
"""
import time
import numpy as np

from typing import Any, Dict, List, Optional

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xutils import run_parallel
from shapinglab.utils.xerror_handler import ConfigError, ModelError
from shapinglab.modules.fiber.snr_analysis import MIN_SWEEP_POINTS, SweepResult, fit_gn_model
from shapinglab.modules.operators import XFiberChannel, XReceiver
from shapinglab.modules.others.xpipeline import PipelineABC, register_pipeline


@register_pipeline("link")
class XLinkPipe(PipelineABC):
    """
    Fiber channel -> receiver at every launch power of `powers_dbm`.

    Context in: frames, powers_dbm, seed, label.
    Context out: sweep (SweepResult); `air` per power when compute_air is set.
    """

    VERSION = "1.0.0"

    def __init__(self, max_workers: Optional[int] = None, config: Optional[Dict[str, Any]] = None):
        """
        Args:
            max_workers: launch powers simulated concurrently
            config:
                - link: LinkConfig
                - cpr: CprConfig
                - compute_air: estimate the BMD rate at every power (default False)
                - fit: fit the GN model to the sweep (default True)
        """
        self.default_config = {"compute_air": False, "fit": True}
        config = {**self.default_config, **(config or {})}
        self.channel: Optional[XFiberChannel] = None
        self.receiver: Optional[XReceiver] = None
        super().__init__(max_workers=max_workers, config=config)

    def _configure_operators(self) -> None:
        self.channel = XFiberChannel(self.config)
        self.receiver = XReceiver(self.config)
        self.add_operator(self.channel)
        self.add_operator(self.receiver)

    def get_desc(self, lang: str = "en") -> str:
        if lang == "zh":
            return "XLinkPipe 在各发射功率下完成光纤传输和相干接收，并拟合 GN 模型"
        return "XLinkPipe propagates and receives at every launch power and fits the GN model"

    def run_point(self, context: Dict[str, Any], power_dbm: float) -> Dict[str, Any]:
        """One launch power: propagate, receive and measure."""
        point = self.channel.execute({**context, "power_dbm": float(power_dbm)})
        return self.receiver.execute(point)

    def run(self, context: Dict[str, Any]) -> Dict[str, Any]:
        powers = np.asarray(context.get("powers_dbm", []), dtype=float)
        if powers.size < MIN_SWEEP_POINTS:
            raise ConfigError(f"a power sweep needs at least {MIN_SWEEP_POINTS} points, got {powers.size}")
        label = str(context.get("label", ""))
        start = time.time()
        points: List[Dict[str, Any]] = run_parallel(lambda p: self.run_point(context, p), powers,
                                                    max_workers=self.max_workers, desc=f"sweep {label}")
        sweep = SweepResult(label, powers, [p["snr"] for p in points])
        if self.config.get("fit"):
            try:
                sweep.fit = fit_gn_model(powers, sweep.snr_db, label)
            except ModelError as e:
                xlogger.warning(f"no GN fit for '{label}': {e}")
        result = {**context, "sweep": sweep}
        if self.config.get("compute_air"):
            result["air"] = [p["air"] for p in points]
        xlogger.success("link sweep done", data={"label": label, "best_power_dbm": sweep.best()[0],
                                                 "best_snr_db": round(sweep.best()[1].value_db, 3),
                                                 "seconds": round(time.time() - start, 3)})
        return result
