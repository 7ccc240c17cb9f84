import json

import pytest

from crosslink_nav.config import ScenarioConfig


def short_config(days=1.0, cadence=600.0, **sections):
    """A quick scenario: short arc, sparse measurements."""
    cfg = ScenarioConfig().with_overrides(
        dynamics={"duration_days": days}, link={"cadence_s": cadence, "bias_truth_m": 0.0}, montecarlo={"runs": 2}
    )
    return cfg.with_overrides(**sections) if sections else cfg


@pytest.fixture
def short_cfg():
    return short_config()


@pytest.fixture
def short_cfg_file(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps(short_config().model_dump(mode="json"), indent=2))
    return path


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
