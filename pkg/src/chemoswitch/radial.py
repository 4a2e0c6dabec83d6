"""Radially symmetric solver on 0 < r < L_r, sharing the 1D flux kernel.

Cell centres sit at ``r_i = (i - 1/2) dr`` and faces at ``i dr``. Face fluxes
are weighted by the face circumference ``2 pi r`` and divided by the cell
area ``2 pi r_i dr``. The face at r = 0 has zero circumference, so the
coordinate singularity never enters the discrete equations.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid1d import _status_text
from .model import ModelParams
from .runs import RunArtifacts, Snapshot
from .timestep import TimeController, march, output_times

CONVERGENCE_WINDOW = 100.0
CONVERGENCE_TOL = 1e-6
BLOWUP_THRESHOLD = 1e6


@dataclass(frozen=True)
class RadialGrid:
    L_r: float = 10.0
    n_cells: int = 2000

    def __post_init__(self):
        if not self.L_r > 0:
            raise ValueError(f"L_r must be positive, got {self.L_r}")
        if self.n_cells < 4:
            raise ValueError(f"need at least 4 cells, got {self.n_cells}")

    @classmethod
    def from_spacing(cls, L_r: float = 10.0, dr: float = 5e-3) -> "RadialGrid":
        if not dr > 0:
            raise ValueError(f"dr must be positive, got {dr}")
        return cls(L_r, int(round(L_r / dr)))

    @property
    def dr(self) -> float:
        return self.L_r / self.n_cells

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dr

    @property
    def volumes(self) -> np.ndarray:
        return 2.0 * math.pi * self.r * self.dr

    @property
    def interior_faces(self) -> np.ndarray:
        return np.arange(1, self.n_cells) * self.dr


@dataclass
class RadialState:
    n0: np.ndarray
    n1: np.ndarray
    s: np.ndarray
    t: float = 0.0

    def stacked(self) -> np.ndarray:
        return np.ascontiguousarray(np.vstack([self.n0, self.n1, self.s]), dtype=float)


def radial_initial_condition(grid: RadialGrid, nbar: float = 0.5, amplitude: float = 0.01) -> RadialState:
    """``n0 = nbar``, ``n1 = 1 - nbar``, ``s = nbar + amplitude exp(-r^2)`` at cell centres."""
    if not 0 < nbar < 1:
        raise ValueError(f"nbar must lie in (0, 1), got {nbar}")
    n = grid.n_cells
    return RadialState(np.full(n, nbar), np.full(n, 1.0 - nbar), nbar + amplitude * np.exp(-grid.r**2))


def radial_geometry(grid: RadialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Face circumferences and inverse cell areas for the shared flux kernel."""
    return 2.0 * math.pi * grid.interior_faces, 1.0 / grid.volumes


def radial_rhs(params: ModelParams, state: RadialState, grid: RadialGrid):
    """Semi-discrete time derivatives ``(dn0, dn1, ds)``."""
    y = state.stacked()
    if y.shape[1] != grid.n_cells:
        raise ValueError("state length does not match the grid")
    out = np.empty_like(y)
    wface, inv_vol = radial_geometry(grid)
    _kernels.fv_rhs(y, out, grid.dr, wface, inv_vol, *params.kernel_args())
    return out[0], out[1], out[2]


def snapshot_schedule(t_end: float) -> np.ndarray:
    """Four logarithmically spaced output times ending at ``t_end``."""
    return np.geomspace(t_end / 1000.0, t_end, 4)


def run_radial(params: ModelParams, grid: RadialGrid, controller: TimeController,
               ic: RadialState | None = None, blowup_threshold: float = BLOWUP_THRESHOLD,
               window: float = CONVERGENCE_WINDOW, tol: float = CONVERGENCE_TOL,
               check_every: float = 1.0) -> RunArtifacts:
    """Integrate until ``t_end``, convergence or blow-up.

    The run is "converged" once the max-norm change of (n0, n1, s) over the
    trailing ``window`` time units is below ``tol``, and "blowup" when the
    maximum density exceeds ``blowup_threshold`` times the uniform density
    or turns non-finite. A collapsing time step is reported as "stiff"
    (suspected blow-up).
    """
    if not window > 0 or not tol > 0 or not check_every > 0:
        raise ValueError("window, tol and check_every must be positive")
    ic = ic or radial_initial_condition(grid)
    y = ic.stacked()
    uniform = float(np.sum((y[0] + y[1]) * grid.volumes) / np.sum(grid.volumes))
    limit = blowup_threshold * uniform
    run = RunArtifacts(geometry="radial", params=params, coords={"r": grid.r}, measure=grid.volumes)
    run.snapshots.append(Snapshot(0.0, y[0].copy(), y[1].copy(), y[2].copy()))
    run.probe.append(0.0, (y[0, 0], y[1, 0], y[2, 0]))
    run.max_density.append((0.0, float(np.max(y[0] + y[1]))))
    mass0 = run.total_mass(run.snapshots[0])

    log_times = snapshot_schedule(controller.t_end)
    snap_times = set(np.round(log_times, 12))
    times = output_times(controller.t_end, check_every, controller.probe_every, extra=log_times)
    checkpoints: deque[tuple[float, np.ndarray]] = deque([(0.0, y.copy())])
    state = {"drift": 0.0, "change": math.inf}
    next_check = check_every

    def on_output(t: float, cur: np.ndarray) -> str | None:
        nonlocal next_check
        run.probe.append(t, (cur[0, 0], cur[1, 0], cur[2, 0]))
        peak = float(np.max(cur[0] + cur[1]))
        run.max_density.append((t, peak))
        if round(t, 12) in snap_times:
            snap = Snapshot(t, cur[0].copy(), cur[1].copy(), cur[2].copy())
            run.snapshots.append(snap)
            state["drift"] = max(state["drift"], abs(run.total_mass(snap) - mass0) / mass0)
        if peak > limit:
            return "blowup"
        if t + 1e-9 < next_check:
            return None
        next_check = t + check_every
        checkpoints.append((t, cur.copy()))
        while len(checkpoints) > 1 and checkpoints[1][0] <= t - window + 1e-9:
            checkpoints.popleft()
        t_old, old = checkpoints[0]
        if t - t_old >= window - 1e-9:
            state["change"] = float(np.max(np.abs(cur - old)))
            if state["change"] < tol:
                return "converged"
        return None

    wface, inv_vol = radial_geometry(grid)
    result = march(y, grid.dr, wface, inv_vol, params, controller, times, on_output)
    if result.stopped_by_callback == "blowup":
        run.status = "blowup"
        run.message = f"maximum density exceeded {blowup_threshold:g} x the uniform density"
        run.blowup_time = result.t
    elif result.stopped_by_callback == "converged":
        run.status = "converged"
        run.message = f"max-norm change over the last {window:g} time units below {tol:g}"
    else:
        run.status, run.message = _status_text(result.status)
        if run.status != "completed":
            run.blowup_time = result.t
    if run.snapshots[-1].t != result.t:
        final = Snapshot(result.t, y[0].copy(), y[1].copy(), y[2].copy())
        run.snapshots.append(final)
        if all(np.isfinite(final.rho)):
            state["drift"] = max(state["drift"], abs(run.total_mass(final) - mass0) / mass0)
    run.stats.update(accepted=result.accepted, rejected=result.rejected, t_final=result.t,
                     mass_drift=state["drift"], dr=grid.dr, n_cells=grid.n_cells, L_r=grid.L_r,
                     last_window_change=state["change"], peak_n1_origin=float(y[1, 0]))
    if state["drift"] > 1e-8:
        run.warnings.append(f"mass drift {state['drift']:.3e} exceeds 1e-8")
    return run
