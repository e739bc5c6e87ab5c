"""Shared fixtures and cached solver results for the test suite."""

import math
from functools import lru_cache

import pytest

from dos_lab import (ChannelParams, ContentionParams, SolverTrace,
                     optimize_backoff)

DELTA = 0.1
PS = math.exp(-1.0)


@lru_cache(maxsize=None)
def reference_contention() -> ContentionParams:
    return ContentionParams.from_ratios(delta=DELTA, p_s=PS)


@lru_cache(maxsize=None)
def solved_backoff(rho: float, alpha: float) -> SolverTrace:
    """optimize_backoff at the benchmark operating point (delta=0.1, p_s=1/e)."""
    ch = ChannelParams.from_alpha(rho, alpha)
    return optimize_backoff(ch, reference_contention())


@pytest.fixture
def cont() -> ContentionParams:
    return reference_contention()
