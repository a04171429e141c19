from datetime import datetime
from typing import List, Optional
from uuid import UUID

import strawberry
from strawberry.types import Info

from ..cli.runner import Mode, RunConfig, finite_or_none, run
from ..domain.models import Computation
from ..expression.parser import parse_expression


# GraphQL Types - Computation ledger
@strawberry.type
class RoundType:
    refinement: int
    value: Optional[float]
    gap: Optional[float]
    items: int
    marked: int


@strawberry.type
class ComputationType:
    id: strawberry.ID
    mode: str
    expression: Optional[str]
    domain: List[float]
    tol: float
    status: str
    value: Optional[float]
    err_estimate: Optional[float]
    items: int
    evaluations: int
    exit_code: Optional[int]
    detail: Optional[str]
    requested_at: datetime
    finished_at: Optional[datetime]

    @strawberry.field
    def rounds(self, info: Info) -> List[RoundType]:
        repo = info.context["computation_repo"]
        computation = repo.get(UUID(str(self.id)))
        return [RoundType(**r) for r in computation.rounds] if computation else []

    @strawberry.field
    def converged(self) -> bool:
        return self.status == "converged"


@strawberry.type
class CheckRowType:
    check: str
    entry: str
    verdict: str
    lhs: Optional[float]
    rhs: Optional[float]
    margin: Optional[float]
    tolerance: float
    note: str


@strawberry.type
class CheckReportType:
    computation: ComputationType
    passed: int
    failed: int
    skipped: int
    rows: List[CheckRowType]


# Input types for mutations
@strawberry.input
class IntegrateInput:
    expression: str
    mode: str = "integrate"
    domain: List[float] = strawberry.field(default_factory=lambda: [0.0, 1.0])
    tol: float = 1e-6
    singular: List[float] = strawberry.field(default_factory=list)
    weight: Optional[str] = None
    cutoffs: Optional[List[float]] = None
    max_refinements: int = 60
    seed: Optional[int] = None


def _execute(info: Info, cfg: RunConfig, source: Optional[str]):
    expr = parse_expression(source, cfg.dim) if source is not None else None
    repo = info.context["computation_repo"]
    computation = Computation.request(
        mode=str(cfg.mode), expression=source, domain=cfg.domain, tol=cfg.tol
    )
    repo.create(computation)
    outcome = run(cfg, expr, on_round=lambda record: repo.record_round(computation, record))
    repo.complete(computation, outcome)
    return computation, outcome


# Query resolvers
@strawberry.type
class Query:
    @strawberry.field
    def computation(self, info: Info, id: strawberry.ID) -> Optional[ComputationType]:
        repo = info.context["computation_repo"]
        return repo.get(UUID(id))

    @strawberry.field
    def computations(self, info: Info, status: Optional[str] = None) -> List[ComputationType]:
        repo = info.context["computation_repo"]
        if status is not None:
            return repo.get_by_status(status)
        return repo.get_all()


# Mutation resolvers
@strawberry.type
class Mutation:
    @strawberry.mutation
    def integrate(self, info: Info, input: IntegrateInput) -> ComputationType:
        if input.mode in (Mode.CHECK, Mode.VARIATION):
            raise ValueError(f"Mode {input.mode} is not an integration mode")
        cfg = RunConfig(
            mode=input.mode,
            domain=tuple(input.domain),
            tol=input.tol,
            max_refinements=input.max_refinements,
            seed=input.seed,
            singular=tuple(input.singular),
            weight=input.weight,
            cutoffs=tuple(input.cutoffs) if input.cutoffs else None,
        )
        computation, _ = _execute(info, cfg, input.expression)
        return computation

    @strawberry.mutation
    def variation(
        self, info: Info, expression: str, domain: List[float], tol: float = 1e-6
    ) -> ComputationType:
        cfg = RunConfig(mode=Mode.VARIATION, domain=tuple(domain), tol=tol)
        computation, _ = _execute(info, cfg, expression)
        return computation

    @strawberry.mutation
    def run_check(
        self, info: Info, suite: str = "default", checks: Optional[List[str]] = None
    ) -> CheckReportType:
        cfg = RunConfig(mode=Mode.CHECK, suite=suite, checks=tuple(checks or ()))
        computation, outcome = _execute(info, cfg, None)
        summary = outcome.payload["summary"]
        rows = [
            CheckRowType(
                check=row["check"],
                entry=row["entry"],
                verdict=row["verdict"],
                lhs=finite_or_none(row["lhs"]),
                rhs=finite_or_none(row["rhs"]),
                margin=finite_or_none(row["margin"]),
                tolerance=row["tolerance"],
                note=row["note"],
            )
            for row in outcome.rows
        ]
        return CheckReportType(
            computation=computation,
            passed=summary["passed"],
            failed=summary["failed"],
            skipped=summary["skipped"],
            rows=rows,
        )
