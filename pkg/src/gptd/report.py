"""Report containers returned by validation and certificate checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def jsonable(value):
    """Convert numpy containers and scalars into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, message: str) -> None:
        self.violations.append(message)


@dataclass
class CheckReport:
    """Named residuals compared against one tolerance; passes iff all are within it."""

    name: str
    residuals: dict[str, float]
    tol: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(np.isfinite(v) and v <= self.tol for v in self.residuals.values())

    def failing(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not (np.isfinite(v) and v <= self.tol)]

    def to_dict(self) -> dict:
        return jsonable({
            "check": self.name,
            "pass": self.passed,
            "tol": self.tol,
            "residuals": self.residuals,
            **self.details,
        })
