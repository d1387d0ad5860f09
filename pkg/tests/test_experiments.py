import math
import os

import numpy as np
import orjson
import pandas as pd
import pytest

from shapinglab.main import main
from shapinglab.utils.xconfig import read_config_file
from shapinglab.utils.xerror_handler import ConfigError, SchemaError
from shapinglab.utils.xstorage import RESULT_COLUMNS, ResultStorage
from shapinglab.modules.frameworks import ExperimentConfig, XFramework_Exp, compare, list_presets
from shapinglab.modules.matchers import build_shaper
from shapinglab.modules.operators import XTransmitter
from shapinglab.modules.others.xregistry import PRESET_REGISTRY
from shapinglab.modules.pipelines import XTransmitPipe
from shapinglab.modules.selection import full_count, selected_count


PRESETS = ["rate-loss", "kess-kurtosis", "filter-response", "filter-bandwidth", "psd-ccdm", "psd-ess",
           "psd-mapping", "cpr-filter", "edi-law", "snr-vs-blocklength", "air-vs-blocklength", "gain-algebra",
           "learned-filter", "selection-psd", "selection-gain", "complexity"]


def run_preset(output_dir, **config):
    return XFramework_Exp(output_dir=str(output_dir), config=config).run()


def series(results, name):
    frame = pd.DataFrame(results["rows"])
    return frame[frame["series"] == name].sort_values("x")


# ---------------------------------------------------------------- registry and config

def test_all_presets_registered():
    names = [p["name"] for p in list_presets()]
    assert sorted(PRESETS) == names
    assert PRESET_REGISTRY.get_metadata("snr-vs-blocklength")["simulation"]
    assert not PRESET_REGISTRY.get_metadata("complexity")["simulation"]


def test_unknown_preset_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown preset"):
        XFramework_Exp(output_dir=str(tmp_path), config={"preset": "no-such-preset"})


def test_full_scale_link_needs_full_flag(tmp_path):
    with pytest.raises(ConfigError, match="desk scale"):
        XFramework_Exp(output_dir=str(tmp_path), config={"preset": "complexity", "link": "table1"})
    cfg = ExperimentConfig.from_dict({"preset": "complexity", "link": "table1", "full": True})
    assert cfg.link.n_spans == 20 and cfg.link.n_channels == 11


def test_seeds_must_be_explicit():
    with pytest.raises(ConfigError, match="seed"):
        ExperimentConfig.from_dict({"preset": "complexity", "seeds": []})


def test_power_grid_needs_three_points():
    with pytest.raises(ConfigError, match="powers_dbm"):
        ExperimentConfig.from_dict({"preset": "complexity", "powers_dbm": [0.0, 2.0]})
    cfg = ExperimentConfig.from_dict({"preset": "complexity", "powers_dbm": "-2:2:4"})
    assert cfg.powers_dbm == [-2.0, 0.0, 2.0, 4.0]


def test_shipped_configs_validate():
    root = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")
    scaled = ExperimentConfig.from_dict({**orjson.loads(open(os.path.join(root, "scaled.json"), "rb").read()),
                                         "preset": "psd-ccdm"})
    assert scaled.link.n_spans == 4 and scaled.link.n_channels == 3
    table1 = ExperimentConfig.from_dict({**orjson.loads(open(os.path.join(root, "table1.json"), "rb").read()),
                                         "preset": "psd-ccdm"})
    assert table1.full and table1.link.n_channels == 11


# ---------------------------------------------------------------- stage operators

def test_transmit_pipe_is_deterministic_per_seed():
    shaper = build_shaper("ccdm", 16, [1, 3, 5, 7], 1.5)
    config = {"shaper": shaper, "n_symbols": 256, "n_pol": 1}
    first = XTransmitPipe(config=config).execute({"seed": 3, "n_channels": 3})
    again = XTransmitPipe(config=config).execute({"seed": 3, "n_channels": 3})
    other = XTransmitPipe(config=config).execute({"seed": 4, "n_channels": 3})

    assert len(first["frames"]) == 3
    for a, b in zip(first["frames"], again["frames"]):
        np.testing.assert_array_equal(a.symbols, b.symbols)
    assert not np.array_equal(first["frames"][0].symbols, first["frames"][1].symbols)
    assert not np.array_equal(first["frames"][0].symbols, other["frames"][0].symbols)
    assert first["frames"][0].n_symbols >= 256


def test_transmitter_needs_a_shaper():
    with pytest.raises(ConfigError, match="shaper"):
        XTransmitter({"n_symbols": 256})


# ---------------------------------------------------------------- desk presets

def test_complexity_preset_counts(tmp_path):
    results = run_preset(tmp_path, preset="complexity", candidates=[1, 4], options={"windows": [10, 111]})
    full = series(results, "n_pb/full")
    assert full["y"].tolist() == [full_count(10), full_count(111)]
    assert series(results, "n_pb/selected")["y"].tolist() == [selected_count(10), selected_count(111)]
    cost = series(results, "cost/full/Nt4")
    assert cost["y"].tolist() == [4 * (2 + full_count(10)), 4 * (2 + full_count(111))]
    assert os.path.exists(results["csv"]) and os.path.exists(results["meta"])


def test_results_files_follow_schema(tmp_path):
    results = run_preset(tmp_path, preset="complexity", seeds=[7], options={"windows": [10]})
    frame = ResultStorage.read_csv(results["csv"])
    assert list(frame.columns) == RESULT_COLUMNS
    assert set(frame["preset"]) == {"complexity"}
    meta = orjson.loads(open(results["meta"], "rb").read())
    assert meta["preset"] == "complexity"
    assert meta["seeds"] == [7]
    assert meta["rows"] == len(frame)
    assert ResultStorage(str(tmp_path)).validate_integrity()


def test_same_seed_gives_identical_csv(tmp_path):
    config = {"preset": "edi-law", "block_lengths": [8, 16], "seeds": [5], "n_symbols": 2048}
    first = run_preset(tmp_path / "a", **config)
    second = run_preset(tmp_path / "b", **config)
    with open(first["csv"], "rb") as a, open(second["csv"], "rb") as b:
        assert a.read() == b.read()


def test_rate_loss_preset(tmp_path):
    results = run_preset(tmp_path, preset="rate-loss", block_lengths=[16, 32])
    for kind in ("ccdm", "ess"):
        loss = series(results, f"{kind}/rate_loss")["y"].to_numpy()
        assert np.all(loss >= 0)
    uniform = series(results, "uniform/mu4")["y"].to_numpy()
    # 64-QAM kurtosis
    np.testing.assert_allclose(uniform, 1.380952, atol=1e-5)
    assert np.all(series(results, "ccdm/mu4")["y"].to_numpy() > uniform[0])


def test_filter_response_preset(tmp_path):
    results = run_preset(tmp_path, preset="filter-response", options={"w_mem": 4, "n_freq": 256})
    spm = series(results, "h_s0")
    assert spm["x"].iloc[0] == 0.0
    assert abs(spm["y"].iloc[0]) < 1e-9
    assert len(series(results, "bandwidth_ghz")) == 3
    assert {"h_s-1", "h_s1"} <= set(pd.DataFrame(results["rows"])["series"])


def test_psd_ccdm_has_dc_null(tmp_path):
    results = run_preset(tmp_path, preset="psd-ccdm", block_lengths=[20], seeds=[0], n_symbols=2048,
                         options={"nperseg": 256})
    dc = series(results, "dc/closed_form")
    assert abs(dc["y"].iloc[0]) < 1e-10
    empirical = series(results, "D20/empirical")
    assert len(empirical) == 128
    assert np.all(np.isfinite(empirical["y"]))


def test_cpr_filter_preset(tmp_path):
    results = run_preset(tmp_path, preset="cpr-filter", seeds=[0], n_symbols=4096)
    assert series(results, "sum_u")["y"].tolist() == [0.0, 0.0]
    residual = series(results, "residual_var")["y"].to_numpy()
    assert residual[0] < residual[1]


def test_edi_law_rows(tmp_path):
    results = run_preset(tmp_path, preset="edi-law", block_lengths=[8, 16, 32], seeds=[0, 1], n_symbols=4096)
    frame = pd.DataFrame(results["rows"])
    empirical = frame[frame["series"] == "edi/empirical"]
    assert set(empirical["seed"]) == {-1, 0, 1}
    closed = series(results, "edi/closed_form")["y"].to_numpy()
    assert np.all(closed > 0) and np.all(np.diff(closed) > 0)
    slope = series(results, "slope")
    assert slope["x"].iloc[0] == 111 and slope["y"].iloc[0] < 0


@pytest.mark.slow
def test_snr_vs_blocklength_on_tiny_link(tmp_path):
    link = {"n_spans": 1, "n_channels": 1, "samples_per_symbol": 4}
    results = run_preset(tmp_path, preset="snr-vs-blocklength", link=link, block_lengths=[16], seeds=[0],
                         n_symbols=1024, powers_dbm=[-2.0, 0.0, 2.0],
                         options={"kinds": ["ccdm"], "references": ["iid"]})
    for name in ("ccdm/snr_db", "iid/snr_db"):
        values = series(results, name)["y"].to_numpy()
        assert values.size and np.all(np.isfinite(values))
    assert orjson.loads(open(results["meta"], "rb").read())["simulation"] is True


# ---------------------------------------------------------------- compare

def write_rows(directory, rows):
    storage = ResultStorage(str(directory))
    return storage.write(rows, {"preset": "demo"})


def demo_rows(shift=0.0, ci=None):
    lo, hi = ci if ci is not None else (math.nan, math.nan)
    rows = []
    for name in ("snr", "air"):
        for x in (1.0, 2.0, 3.0):
            rows.append({"preset": "demo", "series": name, "seed": -1, "x": x,
                         "y": x + (shift if name == "snr" else 0.0), "ci_lo": lo, "ci_hi": hi})
    return rows


def test_compare_identical_files_pass(tmp_path):
    a = write_rows(tmp_path / "a", demo_rows())
    b = write_rows(tmp_path / "b", demo_rows())
    report = compare(a, b)
    assert report.ok
    assert all(s.max_deviation == 0.0 for s in report.series)


def test_compare_names_the_shifted_series(tmp_path):
    a = write_rows(tmp_path / "a", demo_rows())
    b = write_rows(tmp_path / "b", demo_rows(shift=0.1))
    report = compare(a, b, tolerances=0.01)
    assert not report.ok
    assert report.failing == ["snr"]
    assert compare(a, b, tolerances={"snr": 0.2, "default": 0.01}).ok


def test_compare_ci_mode_accepts_overlapping_intervals(tmp_path):
    base = demo_rows(ci=(-1.0, 1.0))
    for r in base:
        r["ci_lo"], r["ci_hi"] = r["y"] - 0.1, r["y"] + 0.1
    run = demo_rows(shift=0.05)
    for r in run:
        r["ci_lo"], r["ci_hi"] = r["y"] - 0.1, r["y"] + 0.1
    a = write_rows(tmp_path / "a", base)
    b = write_rows(tmp_path / "b", run)
    assert compare(a, b, tolerances=0.0, mode="ci").ok
    assert not compare(a, b, tolerances=0.01, mode="abs").ok


def test_compare_schema_mismatch(tmp_path):
    a = write_rows(tmp_path / "a", demo_rows())
    broken = tmp_path / "broken.csv"
    pd.DataFrame(demo_rows()).drop(columns=["ci_hi"]).to_csv(broken, index=False)
    with pytest.raises(SchemaError):
        compare(a, str(broken))
    with pytest.raises(ConfigError):
        compare(a, a, mode="relative")


def test_compare_rejects_unmatched_points(tmp_path):
    a = write_rows(tmp_path / "a", demo_rows())
    b = write_rows(tmp_path / "b", demo_rows()[:-1])
    with pytest.raises(SchemaError, match="only one file"):
        compare(a, b)


# ---------------------------------------------------------------- command line

def test_cli_exit_codes(tmp_path):
    a = write_rows(tmp_path / "a", demo_rows())
    b = write_rows(tmp_path / "b", demo_rows(shift=1.0))
    assert main(["compare", a, a]) == 0
    assert main(["compare", a, b, "--tol", "0.01"]) == 1
    assert main(["run", "--preset", "no-such-preset", "--out", str(tmp_path / "x")]) == 2
    assert main(["presets"]) == 0


def test_cli_compare_json_report(tmp_path, capsys):
    a = write_rows(tmp_path / "a", demo_rows())
    b = write_rows(tmp_path / "b", demo_rows(shift=1.0))
    assert main(["compare", a, b, "--tol", "0.01", "--json"]) == 1
    out = capsys.readouterr().out
    assert '"failing"' in out and '"ok": false' in out


def test_json_config_files(tmp_path):
    good = tmp_path / "tolerances.json"
    good.write_bytes(orjson.dumps({"snr": 0.2, "default": 0.01}))
    assert read_config_file(str(good)) == {"snr": 0.2, "default": 0.01}
    broken = tmp_path / "broken.json"
    broken.write_text("{\"snr\": 0.2,", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_config_file(str(broken))
    listed = tmp_path / "list.json"
    listed.write_bytes(orjson.dumps([1, 2]))
    with pytest.raises(ConfigError):
        read_config_file(str(listed))


def test_cli_run_writes_results(tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--preset", "complexity", "--seed", "7", "--out", str(out)]) == 0
    frame = ResultStorage.read_csv(str(out / "results.csv"))
    assert not frame.empty


def test_cli_matcher(tmp_path):
    assert main(["matcher", "--kind", "ess", "--D", "16"]) == 0
    assert main(["matcher", "--kind", "nope"]) == 2
