import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fadingbc.channel import validate_channel  # noqa: E402


@pytest.fixture
def ref_channel():
    """H = {1, 2} equiprobable, G = {1}, Q = 1."""
    return validate_channel([1, 2], [0.5, 0.5], [1], [1], 1.0)


@pytest.fixture
def static_degraded():
    """H = {2}, G = {1}, Q = 1."""
    return validate_channel([2], [1], [1], [1], 1.0)
