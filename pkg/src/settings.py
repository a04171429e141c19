import logging
import os
from dataclasses import dataclass
from typing import Mapping, Optional


def _default_threads() -> int:
    return max(1, min(4, os.cpu_count() or 1))


@dataclass(frozen=True)
class Settings:
    """Process-wide knobs read from HKQUAD_* environment variables"""

    threads: int = 1
    log_level: str = "WARNING"
    default_tol: float = 1e-8

    def __post_init__(self):
        if self.threads < 1:
            raise ValueError(f"HKQUAD_THREADS must be at least 1, got {self.threads}")
        if not self.default_tol > 0:
            raise ValueError(
                f"HKQUAD_DEFAULT_TOL must be positive, got {self.default_tol}"
            )
        if logging.getLevelName(self.log_level.upper()) == f"Level {self.log_level.upper()}":
            raise ValueError(f"Unknown log level {self.log_level!r}")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        env = os.environ if environ is None else environ
        return cls(
            threads=int(env.get("HKQUAD_THREADS", _default_threads())),
            log_level=env.get("HKQUAD_LOG_LEVEL", "WARNING").upper(),
            default_tol=float(env.get("HKQUAD_DEFAULT_TOL", 1e-8)),
        )


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
