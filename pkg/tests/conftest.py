"""Shared test configuration.

Compiles the hot kernels once per session so per-test runtime budgets
measure the algorithms, not JIT compilation, and pins a hypothesis profile
suited to a single-core box.
"""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from makrl._kernels import warmup

settings.register_profile(
    "makrl",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("makrl")


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    warmup()
