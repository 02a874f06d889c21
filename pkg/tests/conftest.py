import warnings

import pytest

with warnings.catch_warnings():
    warnings.filterwarnings("ignore", message=".*httpx2.*")
    from fastapi.testclient import TestClient

from copbalance import synth
from copbalance.service.app import create_app


@pytest.fixture(scope="session")
def service():
    with TestClient(create_app()) as client:
        yield client


@pytest.fixture(scope="session")
def ellipse_fixture():
    return synth.ellipse_trial()


@pytest.fixture(scope="session")
def quiet_text():
    return synth.quiet_stance_trial()
