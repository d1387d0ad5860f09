"""
Experiment presets.

A preset is a function taking the running experiment framework and returning
long-format rows (series, seed, x, y, ci_lo, ci_hi). Presets register in
PRESET_REGISTRY with a description, their default config (merged under the
user's) and whether they drive the split-step simulator. Rows with seed -1
aggregate over all seeds; seed-specific rows carry their own seed.

@author: rookielittleblack
@date:   2025-09-02
"""
import math
import numpy as np

from collections import defaultdict
from typing import TYPE_CHECKING, Any, Dict, Iterable, List, Optional, Sequence, Tuple

from shapinglab.utils.xlogger import xlogger
from shapinglab.utils.xutils import mean_ci
from shapinglab.modules.constellation.qam_constellation import (
    qam_from_amplitudes,
    standardized_moments,
    total_shaping_gain,
)
from shapinglab.modules.fiber.link_config import CprConfig, CprVariant
from shapinglab.modules.fiber.snr_analysis import fit_gn_models, nonlinear_gain
from shapinglab.modules.matchers.matcher_analytics import induced_moments, kurtosis_histogram
from shapinglab.modules.pas.symbol_frame import MappingKind, SymbolFrame, aggregated_energy, polarization_energy
from shapinglab.modules.perturbation.energy_statistics import (
    ccdm_edi_closed_form,
    edi,
    energy_autocorrelation,
    psd_estimate,
    psd_from_autocorrelation,
)
from shapinglab.modules.perturbation.filter_model import (
    cpr_filter,
    filter_response,
    fit_overall_filter,
    multiplicative_phase,
    phase_noise_nlin,
    residual_after_cpr,
    taps_response,
    three_db_bandwidth,
)
from shapinglab.modules.perturbation.perturbation_kernel import TruncationRule, compute_coefficients
from shapinglab.modules.selection.complexity import complexity_report
from shapinglab.modules.selection.sequence_selector import nlin_power, predict_selection_gain
from shapinglab.modules.others.xregistry import PRESET_REGISTRY
from shapinglab.modules.frameworks.xexperiment_config import UNIFORM

if TYPE_CHECKING:
    from shapinglab.modules.frameworks.xframe_exp import XFramework_Exp


AGGREGATE_SEED = -1
DB_FLOOR = -200.0


def register_preset(name: str, description: str, defaults: Optional[Dict[str, Any]] = None,
                    simulation: bool = False):
    """
    Decorator registering a preset function.

    Example:
        @register_preset("complexity", "AM metric cost versus memory")
        def complexity(fw):
            return [...]
    """
    return PRESET_REGISTRY.register(name=name, metadata={
        "description": description,
        "defaults": defaults or {},
        "simulation": simulation,
    })


def list_presets() -> List[Dict[str, Any]]:
    """Name, description and simulation flag of every registered preset, sorted by name."""
    out = []
    for name in sorted(PRESET_REGISTRY.keys()):
        meta = PRESET_REGISTRY.get_metadata(name) or {}
        out.append({"name": name, "description": meta.get("description", ""),
                    "simulation": bool(meta.get("simulation", False))})
    return out


# ---------------------------------------------------------------- row helpers

def row(series: str, x: float, y: float, seed: int = AGGREGATE_SEED,
        ci: Optional[Tuple[float, float]] = None) -> Dict[str, Any]:
    lo, hi = ci if ci is not None else (math.nan, math.nan)
    return {"series": series, "seed": int(seed), "x": float(x), "y": float(y),
            "ci_lo": float(lo), "ci_hi": float(hi)}


def seed_mean(series: str, x: float, values: Sequence[float]) -> Dict[str, Any]:
    """Mean over seeds with its normal-approximation CI."""
    mean, lo, hi = mean_ci(np.asarray(values, dtype=float))
    return row(series, x, mean, ci=(lo, hi))


def curve(series: str, x: Iterable[float], y: Iterable[float], seed: int = AGGREGATE_SEED) -> List[Dict[str, Any]]:
    return [row(series, xi, yi, seed) for xi, yi in zip(x, y)]


def mean_curve(series: str, x: np.ndarray, stacked: np.ndarray) -> List[Dict[str, Any]]:
    """One row per x with the mean and CI over the stacked (n_seeds, n_x) values."""
    return [seed_mean(series, xi, column) for xi, column in zip(x, np.asarray(stacked).T)]


def one_sided(f: np.ndarray, *values: np.ndarray) -> Tuple[np.ndarray, ...]:
    keep = np.asarray(f) >= 0
    return (np.asarray(f)[keep],) + tuple(np.asarray(v)[..., keep] for v in values)


def db(values: np.ndarray) -> np.ndarray:
    return np.maximum(values, DB_FLOOR)


def dc_value(f: np.ndarray, spectrum: np.ndarray) -> float:
    return float(spectrum[int(np.argmin(np.abs(f)))])


def energy_psd(frame: SymbolFrame, nperseg: int, aggregated: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    e = aggregated_energy(frame, 0)[0] if aggregated else polarization_energy(frame, 0)
    return psd_estimate(e, nperseg=nperseg, noverlap=nperseg // 2)


def single_frame(fw: 'XFramework_Exp', shaper, seed: int, **overrides: Any) -> SymbolFrame:
    """Channel-0 frame at the transmitter; pilots off unless overridden."""
    overrides.setdefault("pilot_rate", 0.0)
    return fw.transmit(shaper, seed, n_channels=1, **overrides)["frames"][0]


# ---------------------------------------------------------------- matchers

@register_preset("rate-loss", "Rate loss and induced QAM moments of CCDM and ESS versus block length",
                 defaults={"block_lengths": [16, 32, 64, 128, 256], "options": {"kinds": ["ccdm", "ess"]}})
def rate_loss_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    rows = []
    for kind in cfg.options.get("kinds", ["ccdm", "ess"]):
        for D in cfg.block_lengths:
            shaper = cfg.shaper.build(kind, D)
            moments = induced_moments(shaper.spec, pairing=1)
            rows += [row(f"{kind}/rate_loss", D, shaper.rate_loss()),
                     row(f"{kind}/mu4", D, moments.mu4),
                     row(f"{kind}/mu6", D, moments.mu6)]
    ideal = standardized_moments(qam_from_amplitudes(cfg.shaper.modulation_order, cfg.shaper.build("iid").marginal()))
    uniform = standardized_moments(qam_from_amplitudes(cfg.shaper.modulation_order,
                                                       cfg.shaper.build(UNIFORM).marginal()))
    for D in cfg.block_lengths:
        rows += [row("iid/mu4", D, ideal.mu4), row("uniform/mu4", D, uniform.mu4)]
    return rows


@register_preset("kess-kurtosis", "K-ESS induced kurtosis, rate loss and block-kurtosis histograms versus energy slack",
                 defaults={"shaper": {"kind": "kess", "D": 16, "rate": 2.5},
                           "options": {"slacks": [0, 16, 32], "n_pairs": 2000}})
def kess_kurtosis_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    n_pairs = int(cfg.options.get("n_pairs", 2000))
    rows = []
    ess = cfg.shaper.build("ess")
    for seed in cfg.seeds:
        m = induced_moments(ess.spec, pairing=2, n_blocks=n_pairs, seed=seed)
        rows.append(row("ess/mu4", 0, m.mu4, seed, m.mu4_ci))
    for slack in cfg.options.get("slacks", [0, 16, 32]):
        shaper = cfg.shaper.model_copy(update={"energy_slack": int(slack)}).build("kess")
        rows.append(row("kess/rate_loss", slack, shaper.rate_loss()))
        rows.append(row("kess/k_max", slack, shaper.spec.k_max))
        for seed in cfg.seeds:
            m = induced_moments(shaper.spec, pairing=2, n_blocks=n_pairs, seed=seed)
            rows.append(row("kess/mu4", slack, m.mu4, seed, m.mu4_ci))
            _, density, edges = kurtosis_histogram(shaper.spec, n_pairs=n_pairs, seed=seed)
            rows += curve(f"kurtosis_hist/slack{slack}", 0.5 * (edges[:-1] + edges[1:]), density, seed)
    return rows


# ---------------------------------------------------------------- filter model

@register_preset("filter-response", "Phase-noise filter |H_s(f)| of every WDM channel offset",
                 defaults={"options": {"n_freq": 1024}})
def filter_response_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    kernel = fw.kernel(include_xpm=True)
    rs = cfg.link.symbol_rate
    rows = []
    for s in kernel.channels:
        resp = filter_response(kernel, s, n_freq=int(cfg.options.get("n_freq", 1024)))
        f, mag = one_sided(resp.frequency, resp.magnitude_db())
        rows += curve(f"h_s{s}", f * rs / 1e9, db(mag))
        rows.append(row("bandwidth_ghz", s, resp.bandwidth_hz(rs) / 1e9))
    return rows


@register_preset("filter-bandwidth", "3 dB bandwidth of the SPM filter versus link length and symbol rate",
                 defaults={"options": {"spans": [1, 4, 20], "baud_rates_gbd": [16, 32, 64]}})
def filter_bandwidth_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    base = cfg.link.with_updates(n_channels=1)

    def bandwidth_ghz(link) -> float:
        kernel = compute_coefficients(link, include_xpm=False, max_workers=fw.max_workers)
        return three_db_bandwidth(*kernel.taps(0)) * link.symbol_rate / 1e9

    rows = []
    for n_spans in cfg.options.get("spans", [1, 4, 20]):
        link = base.with_updates(n_spans=int(n_spans))
        rows.append(row("vs_length", link.total_length_km, bandwidth_ghz(link)))
    for baud in cfg.options.get("baud_rates_gbd", [16, 32, 64]):
        link = base.with_updates(baud_rate_gbd=float(baud))
        rows.append(row("vs_baud", baud, bandwidth_ghz(link)))
    return rows


# ---------------------------------------------------------------- energy spectra

@register_preset("psd-ccdm", "CCDM energy PSD, closed form and Welch estimate, with its DC null",
                 defaults={"block_lengths": [20, 108, 300], "options": {"nperseg": 1024}})
def psd_ccdm_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    nperseg = int(cfg.options.get("nperseg", 1024))
    rows = []
    for D in cfg.block_lengths:
        shaper = cfg.shaper.build("ccdm", D)
        mu4 = induced_moments(shaper.spec, pairing=1).mu4
        lags, r = energy_autocorrelation(shaper.spec, max_lag=D, mu4=mu4)
        f, spectrum = psd_from_autocorrelation(lags, r, n_fft=nperseg)
        rows.append(row("dc/closed_form", D, dc_value(f, spectrum)))
        rows += curve(f"D{D}/closed_form", *one_sided(f, spectrum))

        spectra = []
        for seed in cfg.seeds:
            fe, pxx = energy_psd(single_frame(fw, shaper, seed, n_pol=1, mapping=MappingKind.DIM1), nperseg)
            spectra.append(pxx)
        fe, stacked = one_sided(fe, np.stack(spectra))
        rows += mean_curve(f"D{D}/empirical", fe, stacked)
    return rows


@register_preset("psd-ess", "ESS energy PSD versus block length against the i.i.d. reference",
                 defaults={"block_lengths": [16, 64, 256], "options": {"nperseg": 1024}})
def psd_ess_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    nperseg = int(cfg.options.get("nperseg", 1024))
    sources = [(f"ess/D{D}", D, cfg.shaper.build("ess", D)) for D in cfg.block_lengths]
    sources.append(("iid", 0, cfg.shaper.build("iid")))
    rows = []
    for series, D, shaper in sources:
        spectra = []
        for seed in cfg.seeds:
            f, pxx = energy_psd(single_frame(fw, shaper, seed, n_pol=1, mapping=MappingKind.DIM1), nperseg)
            spectra.append(pxx)
        stacked = np.stack(spectra)
        rows.append(seed_mean("dc/" + series.split("/")[0], D, stacked[:, int(np.argmin(np.abs(f)))]))
        rows += mean_curve(series, *one_sided(f, stacked))
    return rows


@register_preset("psd-mapping", "Aggregated dual-polarization energy PSD for the 1-D, 2-D and 4-D mappings",
                 defaults={"options": {"mappings": ["dim1", "dim2", "dim4"], "nperseg": 1024}})
def psd_mapping_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    nperseg = int(cfg.options.get("nperseg", 1024))
    shaper = cfg.shaper.build()
    rows = []
    for name in cfg.options.get("mappings", ["dim1", "dim2", "dim4"]):
        mapping = MappingKind.parse(name)
        spectra = []
        for seed in cfg.seeds:
            frame = single_frame(fw, shaper, seed, n_pol=2, mapping=mapping)
            f, pxx = energy_psd(frame, nperseg, aggregated=True)
            spectra.append(pxx)
        stacked = np.stack(spectra)
        rows.append(seed_mean("dc", mapping.dims, stacked[:, int(np.argmin(np.abs(f)))]))
        rows += mean_curve(mapping.value, *one_sided(f, stacked))
    return rows


@register_preset("cpr-filter", "Moving-average CPR response U(f) and the NLIN phase it leaves on CCDM energies",
                 defaults={"shaper": {"kind": "ccdm", "D": 108}, "options": {"n_cprs": [50, 100], "n_freq": 1024}})
def cpr_filter_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    kernel = fw.kernel()
    shaper = cfg.shaper.build()
    energies = [aggregated_energy(single_frame(fw, shaper, seed, n_pol=cfg.link.n_pol), 0)[0] for seed in cfg.seeds]
    rows = [seed_mean("residual_var/none", 0, [np.var(phase_noise_nlin(kernel, e)) for e in energies])]
    for n_cpr in cfg.options.get("n_cprs", [50, 100]):
        lags, u = cpr_filter(int(n_cpr))
        resp = taps_response(lags, u, n_freq=int(cfg.options.get("n_freq", 1024)))
        rows += curve(f"U/N{n_cpr}", *one_sided(resp.frequency, np.abs(resp.response)))
        _, exact = cpr_filter(int(n_cpr), exact=True)
        rows.append(row("sum_u", n_cpr, abs(sum(exact))))
        rows.append(seed_mean("residual_var", n_cpr,
                              [np.var(residual_after_cpr(kernel, e, int(n_cpr))) for e in energies]))
    return rows


@register_preset("edi-law", "Windowed energy dispersion of CCDM versus block length and its power-law slope",
                 defaults={"block_lengths": [8, 16, 32, 64], "shaper": {"kind": "ccdm", "rate": 2.25},
                           "options": {"window": 111}})
def edi_law_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    w = int(cfg.options.get("window", 111))
    rows, xs, ys = [], [], []
    for D in cfg.block_lengths:
        shaper = cfg.shaper.build("ccdm", D)
        mu4 = induced_moments(shaper.spec, pairing=1).mu4
        values = []
        for seed in cfg.seeds:
            value = edi(polarization_energy(single_frame(fw, shaper, seed, n_pol=1, mapping=MappingKind.DIM1)), w)
            values.append(value)
            rows.append(row("edi/empirical", D, value, seed))
        rows.append(seed_mean("edi/empirical", D, values))
        rows.append(row("edi/closed_form", D, ccdm_edi_closed_form(D, w, mu4)))
        xs.append(math.log(D + 1))
        ys.append(-math.log(float(np.mean(values))))
    slope = float(np.polyfit(xs, ys, 1)[0])
    rows.append(row("slope", w, slope))
    xlogger.info("EDI law", data={"window": w, "slope": slope})
    return rows


# ---------------------------------------------------------------- split-step runs

def _best(context: Dict[str, Any]):
    power, snr = context["sweep"].best()
    return power, snr


@register_preset("snr-vs-blocklength", "Optimum effective SNR versus block length for CCDM, ESS, i.i.d. MB and uniform",
                 defaults={"options": {"kinds": ["ccdm", "ess"], "references": ["iid", UNIFORM]}},
                 simulation=True)
def snr_vs_blocklength_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    rows: List[Dict[str, Any]] = []
    collected: Dict[Tuple[str, int], List[float]] = defaultdict(list)
    for seed in cfg.seeds:
        for kind in cfg.options.get("kinds", ["ccdm", "ess"]):
            for D in cfg.block_lengths:
                power, snr = _best(fw.simulate(cfg.shaper.build(kind, D), seed, f"{kind}/D{D}"))
                rows += [row(f"{kind}/snr_db", D, snr.value_db, seed, snr.ci_db), row(f"{kind}/p_opt_dbm", D, power, seed)]
                collected[(kind, D)].append(snr.value_db)
        for ref in cfg.options.get("references", ["iid", UNIFORM]):
            power, snr = _best(fw.simulate(cfg.shaper.build(ref), seed, ref))
            for D in cfg.block_lengths:
                rows += [row(f"{ref}/snr_db", D, snr.value_db, seed, snr.ci_db), row(f"{ref}/p_opt_dbm", D, power, seed)]
                collected[(ref, D)].append(snr.value_db)
    for (name, D), values in collected.items():
        rows.append(seed_mean(f"{name}/snr_db", D, values))
    return rows


@register_preset("air-vs-blocklength", "BMD rate at the optimum power and net rate after the shaping rate loss",
                 defaults={"options": {"kinds": ["ccdm", "ess"], "compute_air": True}}, simulation=True)
def air_vs_blocklength_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    rows: List[Dict[str, Any]] = []
    collected: Dict[Tuple[str, int], List[float]] = defaultdict(list)

    def measure(kind: str, shaper, seed: int, xs: Sequence[int]) -> None:
        context = fw.simulate(shaper, seed, f"{kind}/D{shaper.D}")
        air = context["air"][int(np.argmax(context["sweep"].snr_db))]
        # rate loss is per amplitude, two amplitudes per QAM symbol
        net = air.value - 2.0 * shaper.rate_loss()
        for D in xs:
            rows.extend([row(f"{kind}/air", D, air.value, seed, air.ci), row(f"{kind}/net_air", D, net, seed)])
            collected[(kind, D)].append(net)

    for seed in cfg.seeds:
        for kind in cfg.options.get("kinds", ["ccdm", "ess"]):
            for D in cfg.block_lengths:
                measure(kind, cfg.shaper.build(kind, D), seed, [D])
        measure("iid", cfg.shaper.build("iid"), seed, cfg.block_lengths)
    for (name, D), values in collected.items():
        rows.append(seed_mean(f"{name}/net_air", D, values))
    return rows


@register_preset("gain-algebra", "Nonlinear shaping gain three ways from GN fits with a shared ASE term",
                 simulation=True)
def gain_algebra_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    shaped, uniform = cfg.shaper.build(), cfg.shaper.build(UNIFORM)
    rows = []
    for seed in cfg.seeds:
        ref = fw.simulate(uniform, seed, UNIFORM)
        sh = fw.simulate(shaped, seed, "shaped")
        fits = fit_gn_models({UNIFORM: (ref["sweep"].powers_dbm, ref["sweep"].snr_db),
                              "shaped": (sh["sweep"].powers_dbm, sh["sweep"].snr_db)}, shared_ase=True)
        gains = nonlinear_gain(fits[UNIFORM], fits["shaped"])
        rows += [row(f"g_nl/{way}", seed, value, seed) for way, value in gains.items()]
        rows.append(row("g_nl/spread", seed, max(gains.values()) - min(gains.values()), seed))
        center = cfg.link.center_channel
        g_lin, g_nl, total = total_shaping_gain(sh["frames"][center].constellation, ref["frames"][center].constellation,
                                                fits["shaped"].eta, fits[UNIFORM].eta)
        rows += [row("g_lin", seed, g_lin, seed), row("g_total", seed, total, seed),
                 row("p_opt_dbm/shaped", seed, fits["shaped"].p_opt_dbm, seed),
                 row(f"p_opt_dbm/{UNIFORM}", seed, fits[UNIFORM].p_opt_dbm, seed)]
    return rows


@register_preset("learned-filter", "Overall phase filter learned from LPA-equalized symbols against the model response",
                 defaults={"options": {"pilot_rates": [0.01, 0.025], "window": 16, "power_dbm": 4.0, "n_freq": 256}},
                 simulation=True)
def learned_filter_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    power = float(cfg.options.get("power_dbm", 4.0))
    n_freq = int(cfg.options.get("n_freq", 256))
    kernel = fw.kernel(power_dbm=power, include_xpm=True)
    w = min(int(cfg.options.get("window", 16)), kernel.memory)
    channels = kernel.channels
    center = cfg.link.center_channel
    rs = cfg.link.symbol_rate
    shaper = cfg.shaper.build()

    rows = []
    for s in channels:
        resp = filter_response(kernel, s, n_freq=n_freq)
        f, mag = one_sided(resp.frequency, resp.magnitude_db())
        rows += curve(f"model/h_s{s}", f * rs / 1e9, db(mag))

    for pilot_rate in cfg.options.get("pilot_rates", [0.01, 0.025]):
        cpr = CprConfig(variant=CprVariant.LPA, n_cpr=cfg.cpr.n_cpr, pilot_rate=float(pilot_rate))
        link_pipe = fw.build_link_pipe(cpr=cpr)
        learned: Dict[int, List[np.ndarray]] = defaultdict(list)
        for seed in cfg.seeds:
            tx = fw.transmit(shaper, seed, pilot_rate=float(pilot_rate))
            out = link_pipe.run_point({**tx, "seed": seed}, power)
            frames = tx["frames"]
            phase = multiplicative_phase(out["rx"].frame.symbols[0], frames[center].symbols[0])
            energies = [aggregated_energy(frames[center + s], 0)[0] for s in channels]
            fit = fit_overall_filter(phase, energies, w, channels=channels)
            for s in channels:
                resp = fit.response(s, n_freq=n_freq)
                f, mag = one_sided(resp.frequency, resp.magnitude_db())
                learned[s].append(db(mag))
        for s in channels:
            rows += mean_curve(f"learned/pilot{pilot_rate:g}/h_s{s}", f * rs / 1e9, np.stack(learned[s]))
    return rows


# ---------------------------------------------------------------- sequence selection

def _selection(fw: 'XFramework_Exp', metric: str, n_candidates: Optional[int] = None):
    update: Dict[str, Any] = {"metric": metric}
    if n_candidates is not None:
        update["n_candidates"] = int(n_candidates)
    return fw.experiment.selection.model_copy(update=update)


@register_preset("selection-psd", "Energy PSD of selected sequences per metric against no selection",
                 defaults={"options": {"metrics": ["edi", "lsas", "am"], "nperseg": 1024}})
def selection_psd_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    nperseg = int(cfg.options.get("nperseg", 1024))
    shaper = cfg.shaper.build(extra_bits=cfg.flip_bits)
    spectra: Dict[str, List[np.ndarray]] = defaultdict(list)
    for seed in cfg.seeds:
        for i, metric in enumerate(cfg.options.get("metrics", ["edi", "lsas", "am"])):
            run = fw.transmit(shaper, seed, n_channels=1, selection=_selection(fw, metric))["selection"][0]
            f, pxx = energy_psd(run.selected, nperseg, aggregated=True)
            spectra[metric].append(pxx)
            if i == 0:
                spectra["none"].append(energy_psd(run.reference, nperseg, aggregated=True)[1])
    rows = []
    for name, values in spectra.items():
        stacked = np.stack(values)
        rows.append(seed_mean(f"dc/{name}", cfg.selection.n_candidates, stacked[:, int(np.argmin(np.abs(f)))]))
        rows += mean_curve(name, *one_sided(f, stacked))
    return rows


@register_preset("selection-gain", "Measured and predicted SNR gain of best-of-N selection versus N_t",
                 defaults={"candidates": [1, 4, 16], "options": {"metrics": ["lsas", "am"]}}, simulation=True)
def selection_gain_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    shaper = cfg.shaper.build(extra_bits=cfg.flip_bits)
    kernel = fw.kernel()
    center = cfg.link.center_channel
    metrics = cfg.options.get("metrics", ["lsas", "am"])
    rows: List[Dict[str, Any]] = []
    collected: Dict[Tuple[str, int], List[float]] = defaultdict(list)
    for seed in cfg.seeds:
        # N_t = 1 always picks candidate 0, the unselected reference
        _, ref = _best(fw.simulate(shaper, seed, "reference", selection=_selection(fw, metrics[0], 1)))
        rows.append(row("reference/snr_db", 1, ref.value_db, seed, ref.ci_db))
        for metric in metrics:
            for n_t in cfg.candidates:
                if n_t < 2:
                    continue
                context = fw.simulate(shaper, seed, f"{metric}/Nt{n_t}", selection=_selection(fw, metric, n_t))
                _, snr = _best(context)
                run = context["selection"][center]
                measured = snr.value_db - ref.value_db
                predicted = predict_selection_gain(nlin_power([run.reference], kernel),
                                                   nlin_power([run.selected], kernel))
                rows += [row(f"{metric}/snr_db", n_t, snr.value_db, seed, snr.ci_db),
                         row(f"{metric}/measured_gain_db", n_t, measured, seed),
                         row(f"{metric}/predicted_gain_db", n_t, predicted, seed)]
                collected[(f"{metric}/measured_gain_db", n_t)].append(measured)
                collected[(f"{metric}/predicted_gain_db", n_t)].append(predicted)
    for (series, n_t), values in collected.items():
        rows.append(seed_mean(series, n_t, values))
    return rows


@register_preset("complexity", "Coefficient counts and AM metric cost per truncation rule versus memory",
                 defaults={"options": {"windows": [10, 25, 50, 111, 123, 200, 500]}})
def complexity_preset(fw: 'XFramework_Exp') -> List[Dict[str, Any]]:
    cfg = fw.experiment
    rows = []
    for w in cfg.options.get("windows", [10, 25, 50, 111, 123, 200, 500]):
        base = complexity_report(int(w))
        rows += [row(f"n_pb/{rule.value}", w, base.n_pb(rule)) for rule in TruncationRule]
        for n_t in cfg.candidates:
            report = complexity_report(int(w), int(n_t))
            rows += [row(f"cost/{rule.value}/Nt{n_t}", w, report.cost(rule)) for rule in TruncationRule]
    return rows
