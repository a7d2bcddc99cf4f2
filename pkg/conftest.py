# conftest.py

import os

import matplotlib
import pytest
from hypothesis import HealthCheck, settings

matplotlib.use("Agg")

settings.register_profile("ci", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("dev", max_examples=10, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def artifacts(tmp_path, monkeypatch):
    """Diretório de artefatos isolado por teste."""
    monkeypatch.setenv("HOLOMORPHIC_OUTPUT_ROOT", str(tmp_path))
    return tmp_path
