import numpy as np
import pytest

from services.logging_service import LoggingService, reset_logger


@pytest.fixture(autouse=True)
def event_log(tmp_path):
    """Every test logs into its own temporary event database."""

    service = LoggingService(db_path=str(tmp_path / "events.db"), enabled=True)
    reset_logger(service)

    yield service

    reset_logger(None)


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.SeedSequence(20240611))


@pytest.fixture
def crandom(rng):

    def draw(shape, scale=1.0, center=0.0):
        noise = rng.uniform(-1.0, 1.0, shape) + 1j * rng.uniform(-1.0, 1.0, shape)
        return np.asarray(center, dtype=complex) + scale * noise

    return draw
