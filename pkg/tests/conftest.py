"""
Shared fixtures: quiet logger, small links and temporary output directories.
"""
import os
import tempfile

os.environ.setdefault("SHAPING_LAB_LOG_FILE", "0")
os.environ.setdefault("SHAPING_LAB_CACHE_DIR", tempfile.mkdtemp(prefix="shapinglab-cache-"))
os.environ.setdefault("SHAPING_LAB_LOG_CONSOLE", "0")
os.environ.setdefault("SHAPING_LAB_LOG_LEVEL", "WARNING")

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def output_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return str(path)
