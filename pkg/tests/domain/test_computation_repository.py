import math
import uuid

from src.cli.runner import ExitCode, RunOutcome
from src.core.integrate import RoundRecord
from src.domain.models import Computation


def _request(expression="x^2", mode="integrate"):
    return Computation.request(mode=mode, expression=expression, domain=(0.0, 1.0), tol=1e-6)


def test_create_and_get_computation(computation_repository, sample_computation):
    """Test saving and retrieving a computation through the repository"""
    retrieved = computation_repository.get(sample_computation.id)

    assert retrieved.id == sample_computation.id
    assert retrieved.expression == "x^2"
    assert retrieved.domain == [0.0, 1.0]
    assert retrieved.status == "running"


def test_get_missing_computation(computation_repository):
    """Test that an unknown id gives None"""
    assert computation_repository.get(uuid.uuid4()) is None


def test_get_all_computations(computation_repository):
    """Test retrieving all computations in request order"""
    expressions = ["x", "x^2", "exp(x)"]
    for expression in expressions:
        computation_repository.create(_request(expression))

    computations = computation_repository.get_all()

    assert [c.expression for c in computations] == expressions


def test_get_computations_paginates(computation_repository):
    """Test that the log yields positions for cursor-based pagination"""
    for expression in ["x", "x^2", "exp(x)"]:
        computation_repository.create(_request(expression))

    page = list(computation_repository.get_computations(desc=True, limit=2))

    assert [c.expression for _, c in page] == ["exp(x)", "x^2"]
    assert page[0][0] > page[1][0]


def test_record_round_stores_non_finite_as_none(computation_repository, sample_computation):
    """Test that rounds persist with non-finite values dropped"""
    computation_repository.record_round(
        sample_computation, RoundRecord(0, math.inf, None, 2, 3, 1)
    )
    computation_repository.record_round(
        sample_computation, RoundRecord(1, 0.3, math.nan, 4, 7, 0)
    )

    retrieved = computation_repository.get(sample_computation.id)

    assert retrieved.rounds == [
        {"refinement": 0, "value": None, "gap": None, "items": 2, "marked": 1},
        {"refinement": 1, "value": 0.3, "gap": None, "items": 4, "marked": 0},
    ]


def test_complete_with_a_result(computation_repository, sample_computation):
    """Test that a converged outcome finishes the computation"""
    outcome = RunOutcome(
        ExitCode.OK,
        {"value": 1 / 3, "err_estimate": 1e-7, "status": "converged", "items": 64, "evaluations": 200},
    )

    computation_repository.complete(sample_computation, outcome)
    retrieved = computation_repository.get(sample_computation.id)

    assert retrieved.status == "converged"
    assert retrieved.value == 1 / 3
    assert retrieved.items == 64
    assert retrieved.exit_code == 0
    assert retrieved.is_finished


def test_complete_with_a_failure(computation_repository):
    """Test that a failed outcome keeps its detail"""
    computation = _request("1/x", mode="improper")
    computation_repository.create(computation)
    outcome = RunOutcome(
        ExitCode.NONINTEGRABLE,
        {"value": None, "status": "nonintegrable", "detail": "ladder diverges"},
    )

    computation_repository.complete(computation, outcome)
    retrieved = computation_repository.get(computation.id)

    assert retrieved.status == "nonintegrable"
    assert retrieved.detail == "ladder diverges"
    assert retrieved.exit_code == 2


def test_complete_variation_uses_lower_bound(computation_repository):
    """Test that a variation bracket records its lower bound as the value"""
    computation = _request(mode="variation")
    computation_repository.create(computation)

    computation_repository.complete(
        computation, RunOutcome(ExitCode.OK, {"lower": 0.3, "upper": None, "status": "bounded"})
    )

    assert computation_repository.get(computation.id).value == 0.3


def test_get_by_status(computation_repository, sample_computation):
    """Test filtering computations by status"""
    finished = _request("x")
    computation_repository.create(finished)
    computation_repository.complete(
        finished, RunOutcome(ExitCode.OK, {"value": 0.5, "status": "converged"})
    )

    running = computation_repository.get_by_status("running")
    converged = computation_repository.get_by_status("converged")

    assert [c.id for c in running] == [sample_computation.id]
    assert [c.id for c in converged] == [finished.id]
