"""Containers for solver output."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .model import ModelParams


@dataclass
class Snapshot:
    t: float
    n0: np.ndarray
    n1: np.ndarray
    s: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return self.n0 + self.n1


@dataclass
class ProbeSeries:
    """Point values of (n0, n1, s) sampled at regular output times."""

    t: list[float] = field(default_factory=list)
    n0: list[float] = field(default_factory=list)
    n1: list[float] = field(default_factory=list)
    s: list[float] = field(default_factory=list)

    def append(self, t: float, values) -> None:
        a, b, c = values
        self.t.append(float(t))
        self.n0.append(float(a))
        self.n1.append(float(b))
        self.s.append(float(c))

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(getattr(self, k)) for k in ("t", "n0", "n1", "s")}

    def field(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class RunArtifacts:
    """Everything a solver run produced, before it is written to disk.

    ``coords`` holds the cell-centre coordinates (``x``, ``r`` or ``x``/``y``)
    and ``measure`` the cell measures used for mass integrals.
    """

    geometry: str
    params: ModelParams
    coords: dict[str, np.ndarray]
    measure: np.ndarray
    snapshots: list[Snapshot] = field(default_factory=list)
    probe: ProbeSeries = field(default_factory=ProbeSeries)
    max_density: list[tuple[float, float]] = field(default_factory=list)
    status: str = "completed"
    message: str = ""
    blowup_time: float | None = None
    stats: dict[str, Any] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    summary: Any = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    @property
    def aborted(self) -> bool:
        return self.status in ("blowup", "stiff")

    def total_mass(self, snap: Snapshot) -> float:
        return float(np.sum(snap.rho * self.measure))

    def snapshot_at(self, t: float) -> Snapshot:
        """Snapshot whose time is closest to ``t``."""
        return min(self.snapshots, key=lambda snap: abs(snap.t - t))


class NumericalAbort(RuntimeError):
    """Raised by callers that want a failed run to become an exception."""

    def __init__(self, message: str, run: RunArtifacts | None = None):
        super().__init__(message)
        self.run = run
