import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from handover_regions.scenario import Scenario

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

COMMUNITY_2x12 = {"kind": "community", "n_communities": 2, "cells_per_community": 12,
                  "inter_edges": 2}


def community_scenario(seed=0, **overrides):
    doc = {
        "topology": COMMUNITY_2x12,
        "mobility": {"kind": "community_flow", "q": 0.95},
        "regions": {"count": 2, "capacity": 12},
        "n_events": 20000,
        "seed": seed,
    }
    doc.update(overrides)
    return Scenario.from_dict(doc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
