"""
Command-line entry point of ShapingLab.

Usage:
    shaping-lab run --preset psd-ccdm --seed 7 --out results/
    shaping-lab run --preset snr-vs-blocklength --config configs/table1.json --full
    shaping-lab compare results/baseline.csv results/results.csv --tol 0.05 --mode ci
    shaping-lab matcher --kind ess --D 64
    shaping-lab simulate --kind ccdm --D 32 --powers -2:2:6
    shaping-lab analyze kernel --w_mem 25
    shaping-lab select --metric am --candidates 16
    shaping-lab presets

Exit codes: 0 success, 1 comparison failure, 2 invalid input or domain error.

@author: rookielittleblack
@date:   2025-09-02
"""
import os
import sys
import orjson
import argparse

from typing import Any, Dict, List, Optional

from rich.console import Console
from rich.table import Table

from shapinglab.version import __version__
from shapinglab.utils import xlogger
from shapinglab.utils.xconfig import get_config, read_config_file, validate_model
from shapinglab.utils.xerror_handler import ConfigError, ShapingLabError, error_handler
from shapinglab.modules.fiber.link_config import CprConfig, LinkConfig
from shapinglab.modules.fiber.snr_analysis import parse_power_grid, power_sweep
from shapinglab.modules.frameworks import ShaperSettings, XFramework_Exp, compare, list_presets
from shapinglab.modules.frameworks.xcompare import render_report
from shapinglab.modules.frameworks.xexperiment_config import DESK_MAX_CHANNELS, DESK_MAX_SPANS
from shapinglab.modules.matchers.matcher_analytics import induced_moments
from shapinglab.modules.pas.symbol_frame import polarization_energy
from shapinglab.modules.perturbation.energy_statistics import windowed_moments
from shapinglab.modules.perturbation.filter_model import filter_response
from shapinglab.modules.perturbation.perturbation_kernel import compute_coefficients
from shapinglab.modules.pipelines import XTransmitPipe
from shapinglab.modules.selection.sequence_candidates import SelectionConfig
from shapinglab.modules.selection.selection_metrics import selection_kernel
from shapinglab.modules.selection.sequence_selector import run_selection
from shapinglab.modules.selection.complexity import complexity_report

EXIT_OK = 0
EXIT_COMPARE_FAILED = 1
EXIT_ERROR = 2

console = Console()


# ---------------------------------------------------------------- helpers

def _resolve_link(name: str, full: bool) -> LinkConfig:
    if name == "scaled":
        link = LinkConfig.scaled()
    elif name == "table1":
        link = LinkConfig.table1()
    else:
        link = LinkConfig.from_file(name)
    if not full and (link.n_spans > DESK_MAX_SPANS or link.n_channels > DESK_MAX_CHANNELS):
        raise ConfigError(f"link '{name}' ({link.n_spans} spans, {link.n_channels} channels) is beyond desk "
                          f"scale; pass --full for multi-hour runs")
    return link


def _shaper_settings(args: argparse.Namespace) -> ShaperSettings:
    return validate_model({"kind": args.kind, "D": args.D, "modulation_order": args.M, "rate": args.rate,
                           "energy_slack": args.energy_slack}, ShaperSettings, source="command line")


def _print_mapping(title: str, data: Dict[str, Any]) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("key", style="cyan")
    table.add_column("value")
    for key, value in data.items():
        table.add_row(str(key), f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


def _add_shaper_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", type=str, default="ccdm", help="Shaper: ccdm, ess, kess, iid or uniform.")
    parser.add_argument("--D", type=int, default=108, help="Block length in amplitudes.")
    parser.add_argument("--M", type=int, default=64, help="Square QAM order.")
    parser.add_argument("--rate", type=float, default=2.4, help="Bits per real dimension, sign bit included.")
    parser.add_argument("--energy_slack", type=int, default=0, help="K-ESS energy-bound slack.")


def _add_link_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--link", type=str, default="scaled", help="'scaled', 'table1' or a link JSON file.")
    parser.add_argument("--full", action="store_true", help="Allow links beyond desk scale.")
    parser.add_argument("--seed", "-s", type=int, default=0, help="Seed of every random draw.")
    parser.add_argument("--n_symbols", type=int, default=4096, help="Symbols per polarization and channel.")


# ---------------------------------------------------------------- subcommands

def cmd_matcher(args: argparse.Namespace) -> int:
    shaper = _shaper_settings(args).build()
    info = dict(shaper.describe())
    info["rate_loss"] = float(shaper.rate_loss())
    spec = getattr(shaper, "spec", None)
    if spec is not None:
        moments = induced_moments(spec, pairing=1)
        info.update(mu4=moments.mu4, mu6=moments.mu6)
    _print_mapping(f"{shaper.KIND} shaper, D={shaper.D}", info)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    link = _resolve_link(args.link, args.full)
    shaper = _shaper_settings(args).build()
    pipe = XTransmitPipe(config={"shaper": shaper, "mapping": args.mapping, "pilot_rate": args.pilot_rate,
                                 "n_pol": link.n_pol, "baud_rate": link.symbol_rate, "n_symbols": args.n_symbols})
    cpr = validate_model({"pilot_rate": args.pilot_rate}, CprConfig, source="command line")
    sweep = power_sweep(link, lambda s: pipe.execute({"seed": s, "n_channels": link.n_channels})["frames"],
                        parse_power_grid(args.powers), cpr, seed=args.seed,
                        label=f"{shaper.KIND}/D{shaper.D}", max_workers=args.max_workers)

    table = Table(title=f"SNR_eff sweep ({sweep.label})")
    table.add_column("power [dBm]")
    table.add_column("SNR_eff [dB]")
    for power, snr in zip(sweep.powers_dbm, sweep.snr_db):
        table.add_row(f"{power:.2f}", f"{snr:.3f}")
    console.print(table)
    if sweep.fit is not None:
        console.print(f"GN fit: P_opt={sweep.fit.p_opt_dbm:.2f} dBm, SNR_opt={sweep.fit.snr_opt_db:.3f} dB")
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    link = _resolve_link(args.link, args.full)
    if args.target == "kernel":
        kernel = compute_coefficients(link, w_mem=args.w_mem, include_xpm=args.xpm, max_workers=args.max_workers)
        info = dict(kernel.describe())
        for s in kernel.channels:
            info[f"bandwidth_ghz[s={s}]"] = filter_response(kernel, s=s).bandwidth_hz(link.symbol_rate) / 1e9
        _print_mapping(f"perturbation kernel, w_mem={kernel.memory}", info)
        return EXIT_OK

    shaper = _shaper_settings(args).build()
    pipe = XTransmitPipe(config={"shaper": shaper, "mapping": args.mapping, "n_pol": 1,
                                 "baud_rate": link.symbol_rate, "n_symbols": args.n_symbols})
    frame = pipe.execute({"seed": args.seed, "n_channels": 1})["frames"][0]
    report = windowed_moments(polarization_energy(frame), args.window)
    _print_mapping(f"energy statistics, {shaper.KIND} D={shaper.D}, w={args.window}", report.to_dict())
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    link = _resolve_link(args.link, args.full)
    selection = validate_model({"strategy": args.strategy, "nu": args.nu, "n_candidates": args.candidates,
                                "metric": args.metric, "window": args.window, "seed": args.seed},
                               SelectionConfig, source="command line")
    shaper = _shaper_settings(args).build(extra_bits=selection.nu if args.strategy == "flip" else 0)
    kernel = selection_kernel(link, args.metric, w_mem=args.w_mem, max_workers=args.max_workers)
    run = run_selection(shaper, selection, args.blocks, kernel=kernel, mapping=args.mapping, n_pol=link.n_pol,
                        baud_rate=link.symbol_rate, seed=args.seed, max_workers=args.max_workers)
    info: Dict[str, Any] = dict(run.summary())
    if kernel is not None:
        info.update(complexity_report(kernel.memory, selection.n_candidates).to_dict())
    _print_mapping(f"selection ({args.metric}, N_t={args.candidates})", info)
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config: Dict[str, Any] = read_config_file(args.config) if args.config else {}
    config["preset"] = args.preset or config.get("preset")
    if not config["preset"]:
        raise ConfigError("no preset given; use --preset or set 'preset' in the config file")
    if args.seed is not None:
        config["seeds"] = [args.seed]
    if args.full:
        config["full"] = True

    framework = XFramework_Exp(output_dir=args.out, config=config, max_workers=args.max_workers)
    results = framework.run()
    console.print(f"[green]{results['preset']}[/green]: {len(results['rows'])} rows -> {results['csv']}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    tolerances: Any = args.tol
    if args.tolerances:
        tolerances = {"default": args.tol, **read_config_file(args.tolerances)}
    report = compare(args.baseline, args.run, tolerances=tolerances, mode=args.mode)
    console.print(render_report(report))
    if args.json:
        console.print_json(orjson.dumps(report.to_dict(), option=orjson.OPT_SERIALIZE_NUMPY, default=str).decode())
    if report.ok:
        return EXIT_OK
    console.print(f"[red]failing series:[/red] {', '.join(report.failing)}")
    return EXIT_COMPARE_FAILED


def cmd_presets(args: argparse.Namespace) -> int:
    table = Table(title="ShapingLab presets")
    table.add_column("preset", style="cyan")
    table.add_column("SSFM")
    table.add_column("description")
    for meta in list_presets():
        table.add_row(meta["name"], "yes" if meta["simulation"] else "", meta["description"])
    console.print(table)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shaping-lab",
                                     description="PAS nonlinearity-tolerance experiments on coherent fiber links.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--max_workers", "-m", type=int, default=None,
                        help="Worker threads (SHAPING_LAB_THREADS caps it).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matcher", help="Build a shaper and print its rate loss and moments.")
    _add_shaper_arguments(p)
    p.set_defaults(func=cmd_matcher)

    p = sub.add_parser("simulate", help="One SSFM power sweep of a shaper.")
    _add_shaper_arguments(p)
    _add_link_arguments(p)
    p.add_argument("--mapping", type=str, default="dim1", help="dim1, dim2 or dim4.")
    p.add_argument("--powers", "--power_sweep", dest="powers", type=str, default="-2:2:6",
                   help="'start:step:stop' or comma-separated dBm.")
    p.add_argument("--pilot_rate", type=float, default=0.0, help="Pilot fraction for pilot-aided CPR.")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="Perturbation-kernel filters or windowed energy statistics.")
    p.add_argument("target", choices=["kernel", "energy"])
    _add_shaper_arguments(p)
    _add_link_arguments(p)
    p.add_argument("--mapping", type=str, default="dim1", help="dim1, dim2 or dim4.")
    p.add_argument("--w_mem", type=int, default=None, help="Kernel memory (link default when omitted).")
    p.add_argument("--xpm", action="store_true", help="Also build the XPM rows of the other channels.")
    p.add_argument("--window", type=int, default=111, help="Window of the windowed energy moments.")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("select", help="Sequence selection over consecutive blocks.")
    _add_shaper_arguments(p)
    _add_link_arguments(p)
    p.add_argument("--mapping", type=str, default="dim1", help="dim1, dim2 or dim4.")
    p.add_argument("--strategy", type=str, default="flip", choices=["flip", "interleave"])
    p.add_argument("--nu", type=int, default=4, help="Flipping bits per shaper pair.")
    p.add_argument("--candidates", type=int, default=16, help="Candidates N_t.")
    p.add_argument("--metric", type=str, default="am", help="edi, lsas, am, am-s or am-q.")
    p.add_argument("--window", type=int, default=111, help="EDI window.")
    p.add_argument("--w_mem", type=int, default=None,
                   help="Kernel memory (truncation memory for the am metrics when omitted).")
    p.add_argument("--blocks", type=int, default=4, help="Selection blocks.")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="Run a registered preset and write results.csv / meta.json.")
    p.add_argument("--preset", "-p", type=str, default=None, help="Preset name (see `presets`).")
    p.add_argument("--config", "-c", type=str, default=None, help="Experiment JSON/YAML file.")
    p.add_argument("--seed", "-s", type=int, default=None, help="Single seed overriding the config seeds.")
    p.add_argument("--out", "-o", type=str, default=None, help="Output directory.")
    p.add_argument("--full", action="store_true", help="Allow full-scale links (multi-hour runtime).")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="Compare a run against a baseline results.csv.")
    p.add_argument("baseline", type=str)
    p.add_argument("run", type=str)
    p.add_argument("--tol", type=float, default=1e-9, help="Default absolute tolerance.")
    p.add_argument("--tolerances", type=str, default=None, help="JSON/YAML file: series -> tolerance.")
    p.add_argument("--mode", type=str, default="abs", choices=["abs", "ci"])
    p.add_argument("--json", action="store_true", help="Also print the report as JSON.")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("presets", help="List the registered presets.")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    error_handler.install_global_handler()
    if not os.getenv("SHAPING_LAB_LOG_LEVEL"):
        xlogger.set_level(get_config().get_logging_config().get("level", "INFO"))
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args))
    except ShapingLabError as e:
        xlogger.error(f"{args.command} failed: {e}", data={"error_type": type(e).__name__})
        console.print(f"[red]error:[/red] {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
