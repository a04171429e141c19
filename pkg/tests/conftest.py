# ruff: noqa
import os
import pytest
from fastapi.testclient import TestClient

os.environ["EVENTSOURCING_MAPPER_FACTORY"] = "eventsourcing.sqlite:Factory"
os.environ["EVENTSOURCING_INFRASTRUCTURE_FACTORY"] = "eventsourcing.sqlite:Factory"
os.environ["EVENTSOURCING_SQLITE_DBNAME"] = ":memory:"
os.environ.setdefault("HKQUAD_THREADS", "2")

from src.main import app
from src.core.brick import Brick
from src.core.division import BuilderConfig
from src.core.integrate import IntegrateConfig, PointIntegrand
from src.domain.models import Computation
from src.domain.repositories import ComputationRepository


@pytest.fixture
def client():
    """Returns a TestClient for the FastAPI application"""
    with TestClient(app) as client:
        yield client


@pytest.fixture
def computation_repository():
    """Returns a clean ComputationRepository for each test"""
    repo = ComputationRepository()
    yield repo
    repo.close()


@pytest.fixture
def sample_computation(computation_repository):
    """Creates and returns a requested integration of x^2 over [0, 1]"""
    computation = Computation.request(
        mode="integrate", expression="x^2", domain=(0.0, 1.0), tol=1e-6
    )
    computation_repository.create(computation)
    return computation


@pytest.fixture
def unit_interval():
    return Brick.interval(0.0, 1.0)


@pytest.fixture
def unit_square():
    return Brick((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def fast_config():
    """Small budgets for tests that only need a few rounds"""
    return IntegrateConfig(max_refinements=40, builder=BuilderConfig(rng_seed=7))


@pytest.fixture
def square():
    return PointIntegrand.from_scalar(lambda x: x * x)
