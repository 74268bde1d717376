from __future__ import annotations

import pytest

from ghostfilter.logs import InteractionLog, PlantedEffects, SyntheticConfig, generate_with_truth


def make_log(**overrides) -> InteractionLog:
    """A valid baseline event; override any field per test."""
    base = dict(
        event_id="evt0",
        developer_id="dev0",
        project_id="proj0",
        trigger_timestamp=1_700_000_000_000,
        preceding_lines=10,
        preceding_chars=240,
        preceding_last_line_chars=12,
        preceding_comment_chars=30,
        preceding_is_incomplete=False,
        generated_lines=2,
        generated_chars=48,
        written_lines=5,
        written_chars=80,
        max_generated_lines=10,
        max_generated_chars=400,
        ide_type="vscode",
        ide_version="1.2.0",
        generation_time_ms=300,
        accepted=False,
        accepted_length_ratio=0.0,
    )
    base.update(overrides)
    return InteractionLog(**base)


@pytest.fixture(scope="session")
def small_planted():
    """A modest planted stream shared by tests that need real signal."""
    config = SyntheticConfig(
        event_count=6000,
        developer_count=15,
        project_count=5,
        duration_days=21.0,
        seed=101,
        planted_effects=PlantedEffects(
            developer_spread=1.4, project_spread=0.9,
            version_drift=4.0, interval_slope=0.25,
        ),
        base_accept_rate=0.35,
    )
    logs, truth = generate_with_truth(config)
    return config, logs, truth
