"""Shared fixtures: reference baths and systems."""

import pytest

from src.bath import BathSpec
from src.config import Config
from src.redfield import SystemSpec


@pytest.fixture
def ohmic_bath():
    return BathSpec(lam=0.01, s=1.0, cutoff=10.0, temperature=1.0)


@pytest.fixture
def super_ohmic_bath():
    return BathSpec(lam=0.01, s=3.0, cutoff=10.0, temperature=1.0)


@pytest.fixture
def sub_ohmic_bath():
    return BathSpec(lam=0.01, s=0.5, cutoff=10.0, temperature=1.0)


@pytest.fixture
def system():
    return SystemSpec(f1=1.0, f2=1.0)


@pytest.fixture
def config(monkeypatch):
    for name in ("SSC_WORKERS", "SSC_LOG_LEVEL", "SSC_LOG_FILE", "SSC_CUTOFF",
                 "SSC_OUTPUT_FORMAT"):
        monkeypatch.delenv(name, raising=False)
    return Config(None)
