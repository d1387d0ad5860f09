"""
Experiment framework for ShapingLab.

One run = one preset on one validated ExperimentConfig. The framework builds
the transmit and link pipelines, hands itself to the preset function and
writes the rows the preset returns as results.csv / meta.json.

Usage:
    shaping-lab run --preset psd-ccdm --seed 7 --out results/

@author: rookielittleblack
@date:   2025-09-02
"""
import copy

from typing import Any, Dict, List, Optional, Tuple

from shapinglab.version import __version__
from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xerror_handler import error_handler
from shapinglab.modules.fiber.link_config import CprConfig, LinkConfig
from shapinglab.modules.matchers.amplitude_shapers import AmplitudeShaper
from shapinglab.modules.perturbation.perturbation_kernel import PerturbationKernel, compute_coefficients
from shapinglab.modules.pipelines import XLinkPipe, XTransmitPipe
from shapinglab.modules.selection.sequence_candidates import SelectionConfig
from shapinglab.modules.selection.selection_metrics import kernel_memory
from shapinglab.modules.others.xframework import FrameworkABC, register_framework
from shapinglab.modules.others.xregistry import PRESET_REGISTRY
from shapinglab.modules.frameworks import xpresets  # noqa: F401  (fills PRESET_REGISTRY)
from shapinglab.modules.frameworks.xexperiment_config import ExperimentConfig, deep_merge


@register_framework("experiment")
class XFramework_Exp(FrameworkABC):
    """
    XFramework_Exp runs one registered preset end to end.

    Usage:
        framework = XFramework_Exp(output_dir="results/", config={"preset": "complexity"})
        results = framework.run()  # prepares on first use

        # user keys override the preset's registered defaults
        config = {"preset": "psd-ccdm", "seeds": [7], "options": {"nperseg": 512}}
        results = XFramework_Exp(output_dir="out/", config=config).run()

    Presets receive the framework and use its helpers: `transmit` (frames of a
    shaper), `simulate` (frames plus a power sweep over the link), `kernel`
    (cached perturbation kernels) and the pipeline builders.
    """

    VERSION = "1.0.0"
    REQUIRED_PIPELINES = ["transmit", "link"]

    def __init__(self,
                 output_dir: Optional[str] = None,
                 config: Optional[Dict[str, Any]] = None,
                 max_workers: Optional[int] = None):
        """
        Args:
            output_dir: result directory (config `output_dir` when None)
            config: experiment config dict; `preset` is required
            max_workers: worker threads for sweeps and candidates (None: SHAPING_LAB_THREADS)
        """
        config = dict(config or {})
        preset_meta = PRESET_REGISTRY.get_metadata(str(config.get("preset", ""))) or {}
        default_config = copy.deepcopy(preset_meta.get("defaults", {}))
        deep_merge(default_config, config)
        output_dir = output_dir or default_config.get("output_dir", "results")
        default_config["output_dir"] = output_dir

        # _on_init runs inside super().__init__
        self.experiment: Optional[ExperimentConfig] = None
        self.transmit_pipe: Optional[XTransmitPipe] = None
        self.link_pipe: Optional[XLinkPipe] = None
        self._kernels: Dict[Tuple[Any, ...], PerturbationKernel] = {}

        super().__init__(output_dir=output_dir, config=default_config, max_workers=max_workers)

    def _on_init(self) -> None:
        self.experiment = ExperimentConfig.from_dict(self.config, source=f"preset '{self.config.get('preset')}'")
        xlogger.info(f"XFramework_Exp initializing: preset='{self.experiment.preset}', "
                     f"output_dir='{self.output_dir}', seeds={self.experiment.seeds}",
                     data={"link_hash": self.experiment.link.config_hash(), "full": self.experiment.full})

    def get_desc(self, lang: str = "en") -> str:
        if lang == "zh":
            return "XFramework_Exp 按预设运行 PAS 非线性容忍度实验，输出长格式 CSV 与元数据"
        return "XFramework_Exp runs one PAS nonlinearity-tolerance preset and writes long-format CSV plus metadata"

    # ---------------------------------------------------------------- components

    def _prepare_components(self) -> None:
        try:
            cfg = self.experiment
            self.transmit_pipe = self.build_transmit_pipe(cfg.shaper.build())
            self.add_pipeline("transmit", self.transmit_pipe)
            self.link_pipe = self.build_link_pipe()
            self.add_pipeline("link", self.link_pipe)
            xlogger.success("Experiment components prepared", data={"shaper": cfg.shaper.kind, "D": cfg.shaper.D})
        except Exception as e:
            error_handler.handle_error(e, context={"stage": "component_preparation"}, should_raise=True)

    def build_transmit_pipe(self,
                            shaper: AmplitudeShaper,
                            selection: Optional[SelectionConfig] = None,
                            pilot_rate: Optional[float] = None,
                            n_pol: Optional[int] = None,
                            mapping: Optional[str] = None) -> XTransmitPipe:
        """Transmit pipeline for `shaper`; selection enabled when `selection` is given."""
        cfg = self.experiment
        config: Dict[str, Any] = {
            "shaper": shaper,
            "mapping": mapping or cfg.mapping,
            "pilot_rate": cfg.cpr.pilot_rate if pilot_rate is None else pilot_rate,
            "n_pol": n_pol or cfg.link.n_pol,
            "baud_rate": cfg.link.symbol_rate,
            "n_symbols": cfg.n_symbols,
            "enable_selection": selection is not None,
        }
        if selection is not None:
            config.update(selection=selection, kernel=self.kernel(metric=selection.metric))
        return XTransmitPipe(max_workers=self.max_workers, config=config)

    def build_link_pipe(self, cpr: Optional[CprConfig] = None, link: Optional[LinkConfig] = None) -> XLinkPipe:
        cfg = self.experiment
        return XLinkPipe(max_workers=self.max_workers, config={
            "link": link or cfg.link,
            "cpr": cpr or cfg.cpr,
            "compute_air": bool(cfg.options.get("compute_air", False)),
        })

    def kernel(self, link: Optional[LinkConfig] = None, power_dbm: Optional[float] = None,
               include_xpm: bool = False, w_mem: Optional[int] = None,
               metric: Optional[str] = None) -> PerturbationKernel:
        """
        Perturbation kernel of the center channel, memoized per run (disk cache underneath).
        With `metric` and no explicit memory the metric's kernel memory is used.
        """
        link = link or self.experiment.link
        w_mem = w_mem if w_mem is not None else self.experiment.options.get("w_mem")
        if w_mem is None and metric is not None:
            w_mem = kernel_memory(link, metric)
        key = (link.config_hash(), power_dbm, include_xpm, w_mem)
        if key not in self._kernels:
            self._kernels[key] = compute_coefficients(link, w_mem=w_mem, power_dbm=power_dbm,
                                                      include_xpm=include_xpm, max_workers=self.max_workers)
        return self._kernels[key]

    # ---------------------------------------------------------------- preset helpers

    def transmit(self,
                 shaper: Optional[AmplitudeShaper],
                 seed: int,
                 n_channels: Optional[int] = None,
                 selection: Optional[SelectionConfig] = None,
                 **overrides: Any) -> Dict[str, Any]:
        """
        Frames of every channel for one seed.

        Args:
            shaper: shaper to use (the prepared transmit pipeline when None)
            n_channels: channels to build (all link channels when None)
            selection: enable sequence selection with these settings
            **overrides: pilot_rate, n_pol or mapping for this call
        """
        if shaper is None and selection is None and not overrides and self.transmit_pipe is not None:
            pipe = self.transmit_pipe
        else:
            pipe = self.build_transmit_pipe(shaper or self.experiment.shaper.build(), selection, **overrides)
        n_channels = self.experiment.link.n_channels if n_channels is None else n_channels
        return pipe.execute({"seed": int(seed), "n_channels": int(n_channels)})

    def simulate(self,
                 shaper: Optional[AmplitudeShaper],
                 seed: int,
                 label: str,
                 selection: Optional[SelectionConfig] = None,
                 link_pipe: Optional[XLinkPipe] = None,
                 **overrides: Any) -> Dict[str, Any]:
        """Transmit on all channels and sweep the launch power; the context carries `sweep`."""
        context = self.transmit(shaper, seed, selection=selection, **overrides)
        pipe = link_pipe or self.link_pipe
        return pipe.execute({**context, "powers_dbm": self.experiment.powers_dbm, "label": label})

    # ---------------------------------------------------------------- execution

    def _execute_pipeline(self) -> Dict[str, Any]:
        cfg = self.experiment
        preset = PRESET_REGISTRY.get(cfg.preset)
        preset_meta = PRESET_REGISTRY.get_metadata(cfg.preset) or {}
        xlogger.info(f"Running preset '{cfg.preset}': {preset_meta.get('description', '')}",
                     data={"seeds": cfg.seeds, "simulation": preset_meta.get("simulation", False)})

        rows: List[Dict[str, Any]] = [{"preset": cfg.preset, **row} for row in preset(self)]
        meta = {
            "preset": cfg.preset,
            "seeds": list(cfg.seeds),
            "version": __version__,
            "framework": self.__class__.__name__,
            "simulation": bool(preset_meta.get("simulation", False)),
            "link_hash": cfg.link.config_hash(),
            "config": cfg.model_dump(mode="json"),
        }
        csv_path = self.storage.write(rows, meta)
        return {"preset": cfg.preset, "rows": rows, "csv": csv_path, "meta": self.storage.meta_path}
