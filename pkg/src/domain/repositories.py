import logging
from typing import Iterator, List, Optional, Tuple, Union
from uuid import NAMESPACE_URL, UUID, uuid5

from eventsourcing.application import AggregateNotFoundError, Application, EventSourcedLog
from eventsourcing.domain import DomainEvent

from ..cli.runner import RunOutcome, finite_or_none
from ..core.integrate import RoundRecord
from .models import Computation

logger = logging.getLogger(__name__)


# Domain event for logging computation requests
class ComputationLogged(DomainEvent):
    computation_id: UUID


class ComputationRepository(Application):
    """Repository for Computation aggregates"""

    name = "computation"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.computation_log: EventSourcedLog[ComputationLogged] = EventSourcedLog(
            self.events, uuid5(NAMESPACE_URL, "/computation_log"), ComputationLogged
        )

    def create(self, computation: Computation) -> None:
        logged = self.computation_log.trigger_event(computation_id=computation.id)
        self.save(computation, logged)

    def get(self, computation_id: Union[str, UUID]) -> Optional[Computation]:
        try:
            return self.repository.get(computation_id)
        except AggregateNotFoundError:
            return None

    def get_all(self) -> List[Computation]:
        computations = []
        for notification in self.computation_log.get():
            computation = self.repository.get(notification.computation_id)
            if isinstance(computation, Computation):
                computations.append(computation)
        return computations

    def get_computations(
        self,
        *,
        gt: int | None = None,
        lte: int | None = None,
        desc: bool = True,
        limit: int | None = None,
    ) -> Iterator[Tuple[int, Computation]]:
        """Get computations with their log positions for cursor-based pagination."""
        for notification in self.computation_log.get(gt=gt, lte=lte, desc=desc, limit=limit):
            try:
                computation = self.repository.get(notification.computation_id)
                yield notification.originator_version, computation
            except AggregateNotFoundError:
                continue

    def record_round(self, computation: Computation, record: RoundRecord) -> None:
        computation.record_round(
            refinement=record.refinement,
            value=finite_or_none(record.value),
            gap=finite_or_none(record.gap),
            items=record.items,
            marked=record.marked,
        )
        self.save(computation)

    def complete(self, computation: Computation, outcome: RunOutcome) -> None:
        """Store the terminal event for a finished run"""
        payload = outcome.payload
        status = str(payload.get("status", "unknown"))
        if payload.get("value") is None and "detail" in payload:
            computation.fail(status=status, exit_code=int(outcome.exit_code), detail=str(payload["detail"]))
        else:
            computation.finish(
                status=status,
                exit_code=int(outcome.exit_code),
                value=finite_or_none(payload.get("value", payload.get("lower"))),
                err_estimate=finite_or_none(payload.get("err_estimate")),
                items=int(payload.get("items") or 0),
                evaluations=int(payload.get("evaluations") or 0),
            )
        self.save(computation)
        logger.info("Computation %s finished with status %s", computation.id, status)

    def get_by_status(self, status: str) -> List[Computation]:
        return [c for c in self.get_all() if c.status == status]
