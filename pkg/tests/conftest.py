from importlib import resources

import pytest
from hypothesis import settings

from constraint_forge.models import hp_model, maxwell_model, toy_models
from constraint_forge.vacuum import build_ideal

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def fixture_text(name):
    return (resources.files("constraint_forge") / "fixtures" / f"{name}.model").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def hp():
    return hp_model()


@pytest.fixture(scope="session")
def maxwell():
    return maxwell_model()


@pytest.fixture(scope="session")
def toys():
    return {m.name: m for m in toy_models()}


@pytest.fixture(scope="session")
def ideal2():
    return build_ideal(2)
