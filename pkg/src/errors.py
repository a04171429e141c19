from typing import Any, Dict, Optional, Sequence


class HKQuadError(Exception):
    """Base class for every error raised by hkquad"""


class DegenerateBrickError(HKQuadError, ValueError):
    """A brick with a non-positive or non-finite edge"""


class NotContainedError(HKQuadError, ValueError):
    """A brick or point that should lie inside another brick does not"""


class DomainMismatchError(HKQuadError, ValueError):
    """Operands defined on different domains or dimensions"""


class GaugeEvaluationError(HKQuadError):
    """A gauge produced a value that is not a positive finite real"""

    def __init__(self, point: Sequence[float], value: Any, kind: str = "user"):
        self.point = tuple(point)
        self.value = value
        self.kind = kind
        super().__init__(
            f"Gauge ({kind}) returned {value!r} at {self.point}; gauges must be positive"
        )


class DepthExhaustedError(HKQuadError):
    """Subdivision can no longer make progress in floating point"""

    def __init__(
        self,
        message: str,
        brick: Any = None,
        depth: Optional[int] = None,
        candidates: Optional[Dict[Any, float]] = None,
    ):
        self.brick = brick
        self.depth = depth
        self.candidates = candidates or {}
        super().__init__(message)


class NonFiniteIntegrandError(HKQuadError):
    """An integrand returned NaN or infinity at a queried tag"""

    def __init__(self, tag: Sequence[float], brick: Any, value: float):
        self.tag = tuple(tag)
        self.brick = brick
        self.value = value
        super().__init__(
            f"Integrand returned {value!r} at tag {self.tag} on {brick}; "
            "declare it as a singular point or check the expression"
        )


class NonIntegrableError(HKQuadError):
    """The improper/extended integral does not exist"""

    def __init__(self, message: str, partial_sums: Sequence[float] = ()):
        self.partial_sums = list(partial_sums)
        super().__init__(message)


class DivergentTailError(NonIntegrableError):
    """An infinite-range integral whose tails do not settle"""


class ExpressionError(HKQuadError, ValueError):
    """Lexing, parsing or binding error in an integrand expression"""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at position {position}")
