from datetime import datetime
from typing import List, Optional, Tuple

from eventsourcing.domain import Aggregate, event


class Computation(Aggregate):
    """Computation aggregate root recording one integration request and its rounds"""

    @event("Requested")
    def __init__(
        self,
        mode: str,
        expression: Optional[str],
        domain: List[float],
        tol: float,
    ):
        self.mode = mode
        self.expression = expression
        self.domain = domain
        self.tol = tol
        self.rounds: List[dict] = []
        self.status = "running"
        self.value: Optional[float] = None
        self.err_estimate: Optional[float] = None
        self.items = 0
        self.evaluations = 0
        self.exit_code: Optional[int] = None
        self.detail: Optional[str] = None
        self.requested_at = datetime.now()
        self.finished_at: Optional[datetime] = None

    @classmethod
    def request(
        cls,
        mode: str,
        expression: Optional[str],
        domain: Tuple[float, ...],
        tol: float,
    ) -> "Computation":
        if tol <= 0:
            raise ValueError("Tolerance must be positive")
        if mode != "check" and not expression:
            raise ValueError(f"Mode {mode} needs an expression")
        return cls(mode=mode, expression=expression, domain=list(domain), tol=tol)

    @property
    def is_finished(self) -> bool:
        return self.finished_at is not None

    @event("RoundRecorded")
    def record_round(
        self, refinement: int, value: float, gap: float, items: int, marked: int
    ) -> None:
        if self.is_finished:
            raise ValueError("Computation is already finished")
        self.rounds.append(
            {
                "refinement": refinement,
                "value": value,
                "gap": gap,
                "items": items,
                "marked": marked,
            }
        )

    @event("Finished")
    def finish(
        self,
        status: str,
        exit_code: int,
        value: Optional[float] = None,
        err_estimate: Optional[float] = None,
        items: int = 0,
        evaluations: int = 0,
    ) -> None:
        if self.is_finished:
            raise ValueError("Computation is already finished")
        self.status = status
        self.exit_code = exit_code
        self.value = value
        self.err_estimate = err_estimate
        self.items = items
        self.evaluations = evaluations
        self.finished_at = datetime.now()

    @event("Failed")
    def fail(self, status: str, exit_code: int, detail: str) -> None:
        if self.is_finished:
            raise ValueError("Computation is already finished")
        self.status = status
        self.exit_code = exit_code
        self.detail = detail
        self.finished_at = datetime.now()
