import re

from pathlib import Path

import numpy as np
import pytest

from shapinglab.utils.xconfig import get_config
from shapinglab.utils.xutils import bootstrap_ci, mean_ci, resolve_workers
from shapinglab.utils.xerror_handler import (
    ConfigError,
    ErrorCategory,
    FrameError,
    ShapingLabError,
    XErrorReporter,
    XRetryMechanism,
    error_handler,
    safe_execute,
)
from shapinglab.modules.constellation import air_bmd, build_qam
from shapinglab.modules.fiber import LinkConfig
from shapinglab.modules.frameworks import XFramework_Exp
from shapinglab.modules.matchers import build_shaper
from shapinglab.modules.operators import XTransmitter
from shapinglab.modules.perturbation import compute_coefficients
from shapinglab.modules.others import (
    OPERATOR_REGISTRY,
    FrameworkState,
    OperatorABC,
    OperatorState,
    Registry,
    create_framework,
    get_operator,
)


class _Doubler(OperatorABC):

    def run(self, value):
        if value < 0:
            raise FrameError("negative input")
        return 2 * value

    def get_desc(self, lang="en"):
        return "doubles its input"


def test_registry_lookup_lists_available_names():
    registry = Registry("demo")

    @registry.register(name="alpha", metadata={"description": "first"})
    def alpha():
        return 1

    assert "alpha" in registry and len(registry) == 1
    assert registry.get_metadata("alpha")["description"] == "first"
    with pytest.raises(ConfigError, match="available: alpha"):
        registry.get("beta")
    assert "alpha" in repr(registry)


def test_operator_registry_requires_run():
    with pytest.raises(ConfigError, match="run"):
        Registry("operator").register(lambda: None, name="bad")
    assert {"transmitter", "fiber_channel", "receiver", "selector"} <= set(OPERATOR_REGISTRY.keys())


def test_operator_hooks_and_metrics():
    events = []
    op = _Doubler()
    op.add_hook("before_run", lambda o: events.append("before"))
    op.add_hook("after_run", lambda o, result: events.append(("after", result)))
    op.add_hook("on_error", lambda o, exc: events.append(("error", type(exc).__name__)))

    assert op.execute(3) == 6
    assert op.state is OperatorState.COMPLETED
    with pytest.raises(FrameError):
        op.execute(-1)
    assert op.state is OperatorState.FAILED

    assert events == ["before", ("after", 6), "before", ("error", "FrameError")]
    info = op.get_info()
    assert info["metrics"]["execution_count"] == 2
    assert info["metrics"]["error_count"] == 1
    assert info["description"] == "doubles its input"


def test_failing_hook_does_not_break_operator():
    op = _Doubler().add_hook("before_run", lambda o: 1 / 0)
    assert op.execute(4) == 8


def test_get_operator_builds_registered_class():
    shaper = build_shaper("ccdm", 16, [1, 3, 5, 7], 1.5)
    op = get_operator("transmitter", {"shaper": shaper, "n_symbols": 64})
    assert isinstance(op, XTransmitter)
    with pytest.raises(ConfigError):
        get_operator("no-such-operator")


def test_errors_are_reported_once():
    reporter = error_handler.reporter
    exc = FrameError("frame 17 has no pilots")
    with pytest.raises(FrameError):
        error_handler.handle_error(exc, context={"stage": "outer"})
    with pytest.raises(FrameError):
        error_handler.handle_error(exc, context={"stage": "outer again"})
    matching = [info for info in reporter.recent if info.message == "frame 17 has no pilots"]
    assert len(matching) == 1
    assert matching[0].context == {"stage": "outer"}


def test_error_classification():
    assert XErrorReporter.classify(ConfigError("x"))[1] is ErrorCategory.CONFIG
    assert XErrorReporter.classify(FrameError("x"))[1] is ErrorCategory.DATA
    assert XErrorReporter.classify(OSError("x"))[1] is ErrorCategory.IO
    assert XErrorReporter.classify(RuntimeError("x"))[1] is ErrorCategory.UNKNOWN


def test_retry_only_transient_failures():
    calls = []

    def flaky():
        calls.append(1)
        if len(calls) < 3:
            raise TimeoutError("busy")
        return "ok"

    mechanism = XRetryMechanism(max_retries=3, base_delay=0.0)
    assert mechanism.retry(flaky) == "ok" and len(calls) == 3

    def broken():
        calls.append(1)
        raise ConfigError("deterministic")

    calls.clear()
    with pytest.raises(ConfigError):
        mechanism.retry(broken)
    assert len(calls) == 1


def test_safe_execute_returns_fallback():
    @safe_execute(fallback_value=-1.0)
    def ratio(a, b):
        return a / b

    assert ratio(1.0, 2.0) == 0.5
    assert ratio(1.0, 0.0) == -1.0


def test_framework_lifecycle_hooks(tmp_path):
    events = []
    framework = create_framework("experiment", output_dir=str(tmp_path),
                                 config={"preset": "complexity", "options": {"windows": [10]}})
    assert isinstance(framework, XFramework_Exp)
    framework.add_hook("after_prepare", lambda f: events.append("prepared"))
    framework.add_hook("after_run", lambda f, results: events.append(len(results["rows"])))

    results = framework.run()
    assert framework.state is FrameworkState.COMPLETED
    assert events == ["prepared", len(results["rows"])]
    info = framework.get_info()
    assert info["pipelines"] == ["link", "transmit"]
    assert info["metrics"]["rows_written"] == len(results["rows"])

    with pytest.raises(ShapingLabError, match="cannot run"):
        framework.run()
    assert framework.state is FrameworkState.FAILED


# ---------------------------------------------------------------- runtime settings

def test_thread_limit_from_config_and_env(monkeypatch):
    monkeypatch.delenv("SHAPING_LAB_THREADS", raising=False)
    monkeypatch.setitem(get_config().config, "runtime", {"threads": 4, "chunk_size": 16384})
    assert resolve_workers() == 4
    assert resolve_workers(2) == 2
    monkeypatch.setenv("SHAPING_LAB_THREADS", "3")
    assert resolve_workers() == 3
    assert resolve_workers(8) == 3


def test_bootstrap_settings_from_config(monkeypatch):
    calls = []

    def statistic(s):
        calls.append(1)
        return float(np.mean(s))

    samples = np.random.default_rng(5).normal(size=200)
    monkeypatch.setitem(get_config().config, "bootstrap", {"resamples": 10, "confidence": 0.95})
    bootstrap_ci(samples, statistic)
    assert len(calls) == 10

    monkeypatch.setitem(get_config().config, "bootstrap", {"resamples": 200, "confidence": 0.95})
    wide = bootstrap_ci(samples)
    monkeypatch.setitem(get_config().config, "bootstrap", {"resamples": 200, "confidence": 0.5})
    narrow = bootstrap_ci(samples)
    assert narrow[1] - narrow[0] < wide[1] - wide[0]
    _, low, high = mean_ci(samples)
    assert high - low < wide[1] - wide[0]


def test_air_chunk_size_does_not_change_rate(monkeypatch):
    rng = np.random.default_rng(8)
    c = build_qam(16)
    x = c.sample(500, rng)
    y = x + 0.2 * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    default = air_bmd(x, y, c, noise_var=0.08).value
    monkeypatch.setitem(get_config().config, "runtime", {"threads": 4, "chunk_size": 7})
    assert air_bmd(x, y, c, noise_var=0.08).value == pytest.approx(default, rel=1e-12)


def test_kernel_cache_switch(monkeypatch, tmp_path):
    link = LinkConfig.scaled(n_channels=1, n_spans=1)
    monkeypatch.setenv("SHAPING_LAB_CACHE_DIR", str(tmp_path / "off"))
    monkeypatch.setitem(get_config().config, "cache", {"enabled": False})
    compute_coefficients(link, w_mem=3)
    assert not list(tmp_path.glob("off/*.slpk"))

    monkeypatch.setenv("SHAPING_LAB_CACHE_DIR", str(tmp_path / "on"))
    monkeypatch.setitem(get_config().config, "cache", {"enabled": True})
    compute_coefficients(link, w_mem=3)
    assert len(list((tmp_path / "on").glob("*.slpk"))) == 1


def test_every_pinned_requirement_is_imported():
    root = Path(__file__).resolve().parent.parent
    import_names = {"PyYAML": "yaml"}
    sources = "\n".join(p.read_text(encoding="utf-8") for p in (root / "shapinglab").rglob("*.py"))
    for line in (root / "requirements.txt").read_text(encoding="utf-8").splitlines():
        name = line.split("==")[0].strip()
        if not name:
            continue
        module = import_names.get(name, name)
        assert re.search(rf"^\s*(import|from) {module}\b", sources, re.MULTILINE), name
