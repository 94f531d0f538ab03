import json

import pytest

from isac_weather import pipeline
from isac_weather.config import load_config

# 32 x 32 frames, 8 samples per rain stratum, 5 + 5 batches: seconds per run
TINY = {
    "radio": {"n_subcarriers": 32, "n_symbols": 32, "frame_duration": 32 * 0.01 / 1120},
    "campaign": {"preset": "default", "per_stratum": 8, "calibration_count": 8, "frames_per_measurement": 8},
    "crop": {"n_prime": 16, "m_prime": 8},
    "clutter": {"max_snapshots": 8},
    "train": {"epochs": 3, "n_rain": 5, "n_no_rain": 5, "lr": 3e-3},
}


@pytest.fixture(scope="session")
def tiny_config_path(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "tiny.json"
    p.write_text(json.dumps(TINY))
    return p


@pytest.fixture(scope="session")
def tiny_cfg(tiny_config_path):
    return load_config(tiny_config_path)


@pytest.fixture(scope="session")
def tiny_run(tmp_path_factory, tiny_cfg):
    root = tmp_path_factory.mktemp("tiny")
    pipeline.cmd_simulate(tiny_cfg, root / "data", 3)
    prov = pipeline.cmd_preprocess(tiny_cfg, root / "data", root / "feat")
    return root, prov


# ----------------------------------------------------------------------------
# acceptance lines: one per criterion, printed after the run
# ----------------------------------------------------------------------------
ACCEPTANCE = []


@pytest.fixture
def criterion():
    def record(name, ok, detail=""):
        ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
