"""Adaptive method-of-lines time marching for line geometries (1D and radial)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .model import ModelParams


# "bs23": Bogacki-Shampine 3(2) pair. "rkc": second-order Runge-Kutta-Chebyshev,
# whose stability interval grows with the stage count (for fine, diffusion-bound grids).
METHODS = {"bs23": _kernels.bs23_advance, "rkc": _kernels.rkc_advance}


@dataclass(frozen=True)
class TimeController:
    t_end: float = 500.0
    dt_init: float = 1e-4
    dt_min: float = 1e-12
    dt_max: float = 0.5
    rel_tol: float = 1e-6
    abs_tol: float = 1e-9
    snapshot_every: float = 10.0
    probe_every: float = 0.1
    max_steps: int = 2_000_000_000
    method: str = "bs23"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        for name in ("rel_tol", "abs_tol"):
            value = getattr(self, name)
            if not 0 < value <= 1e-2:
                raise ValueError(f"{name} must lie in (0, 1e-2], got {value}")
        if not self.snapshot_every > 0 or not self.probe_every > 0:
            raise ValueError("output intervals must be positive")


def output_times(t_end: float, *intervals: float, extra=()) -> np.ndarray:
    """Sorted union of the regular output grids (and any extra times) up to ``t_end``."""
    times = [np.asarray(extra, dtype=float)]
    for every in intervals:
        n = int(math.floor(t_end / every + 1e-9))
        times.append(np.arange(1, n + 1) * every)
    times.append(np.array([t_end]))
    grid = np.unique(np.round(np.concatenate(times), 12))
    return grid[(grid > 0) & (grid <= t_end)]


@dataclass
class MarchResult:
    t: float
    status: int
    accepted: int = 0
    rejected: int = 0
    stopped_by_callback: str | None = None


def march(y: np.ndarray, h: float, wface: np.ndarray, inv_vol: np.ndarray, params: ModelParams,
          controller: TimeController, times: np.ndarray,
          on_output: Callable[[float, np.ndarray], str | None]) -> MarchResult:
    """Advance ``y`` (shape (3, N), modified in place) through ``times``.

    ``on_output`` is called after each output time; returning a non-empty
    string stops the march (used for convergence and blow-up checks).
    """
    args = params.kernel_args()
    t = 0.0
    dt = controller.dt_init
    result = MarchResult(t=0.0, status=_kernels.STATUS_OK)
    advance = METHODS[controller.method]
    for t_out in times:
        t, dt, status, acc, rej = advance(
            y, t, float(t_out), dt, controller.dt_min, controller.dt_max,
            controller.rel_tol, controller.abs_tol,
            controller.max_steps - result.accepted - result.rejected,
            h, wface, inv_vol, *args,
        )
        result.accepted += acc
        result.rejected += rej
        result.t = t
        result.status = status
        if status != _kernels.STATUS_OK:
            break
        stop = on_output(t, y)
        if stop:
            result.stopped_by_callback = stop
            break
    return result
