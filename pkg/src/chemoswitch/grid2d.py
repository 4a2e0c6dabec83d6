"""Explicit finite-volume scheme on the square (0, L) x (0, L).

Each step updates w (attractant), then u (secreting cells, n0), then v
(chemotactic cells, n1), and every right-hand side reads step-k values
only. Zero flux is imposed with mirrored ghost cells for the Laplacians and
vanishing boundary fluxes for the chemotactic equation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import ModelParams
from .runs import RunArtifacts, Snapshot

GENERATOR_ID = "numpy.PCG64"
BOUND_FACTOR = 0.9
PROBE_EVERY = 0.1


@dataclass(frozen=True)
class Grid2D:
    L: float = 40.0
    N: int = 80

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if self.N < 8:
            raise ValueError(f"N must be at least 8, got {self.N}")

    @classmethod
    def from_spacing(cls, L: float = 40.0, dx: float = 0.5) -> "Grid2D":
        if not dx > 0:
            raise ValueError(f"dx must be positive, got {dx}")
        return cls(L, int(round(L / dx)))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dy(self) -> float:
        return self.dx

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.dx


@dataclass
class StateField2D:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float = 0.0
    k_step: int = 0

    def copy(self) -> "StateField2D":
        return StateField2D(self.u.copy(), self.v.copy(), self.w.copy(), self.t, self.k_step)


@dataclass(frozen=True)
class Rng2DSeed:
    seed: int = 0
    generator_id: str = GENERATOR_ID

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.generator_id != GENERATOR_ID:
            raise ValueError(f"unsupported generator {self.generator_id!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(int(self.seed)))


def initial_condition_2d(grid: Grid2D, nbar: float = 0.5, amplitude: float = 0.01,
                         seed: Rng2DSeed | int = 0) -> StateField2D:
    """Uniform state with ``w = nbar + amplitude * R``, R i.i.d. uniform on [0, 1)."""
    if not 0 < nbar < 1:
        raise ValueError(f"nbar must lie in (0, 1), got {nbar}")
    if not isinstance(seed, Rng2DSeed):
        seed = Rng2DSeed(int(seed))
    R = seed.generator().random((grid.N, grid.N))
    N = grid.N
    return StateField2D(np.full((N, N), nbar), np.full((N, N), 1.0 - nbar), nbar + amplitude * R)


def stability_bound(params: ModelParams, grid: Grid2D, w: np.ndarray) -> float:
    """Advisory explicit step bound ``min(dx^2/(4(D+1)), dx/(2 max|b|))``."""
    h = grid.dx
    bound = h * h / (4.0 * (params.D + 1.0))
    if w.shape[0] > 1:
        bx = np.abs(np.diff(w, axis=0)).max(initial=0.0)
        by = np.abs(np.diff(w, axis=1)).max(initial=0.0)
        b = params.chi * max(bx, by) / h
        if b > 0:
            bound = min(bound, h / (2.0 * b))
    return bound


def _check_params(params: ModelParams) -> None:
    if params.minimal:
        raise ValueError("the 2D scheme is defined for the two-phenotype model only")


def _advance(params: ModelParams, state: StateField2D, tau: float, n_steps: int, h: float):
    _, chi, _, case, mu, q, nbar = params.kernel_args()
    return _kernels.fe2d_steps(state.u, state.v, state.w, n_steps, tau, h, params.D, chi,
                               case, mu, q, nbar, BOUND_FACTOR)


def step_2d(params: ModelParams, state: StateField2D, tau: float, grid: Grid2D | None = None) -> StateField2D:
    """One explicit step; returns a new state and leaves ``state`` untouched.

    Raises :class:`FloatingPointError` if the update produces non-finite or
    negative values.
    """
    _check_params(params)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    N = state.u.shape[0]
    grid = grid or Grid2D(N=N)
    if grid.N != N:
        raise ValueError("state size does not match the grid")
    new = state.copy()
    _, status, _, _ = _advance(params, new, tau, 1, grid.dx)
    if status == _kernels.STATUS_NONFINITE:
        raise FloatingPointError("non-finite values after the 2D update")
    if status == _kernels.STATUS_NEGATIVE:
        raise FloatingPointError("negative density after the 2D update")
    new.k_step += 1
    new.t = new.k_step * tau
    return new


def probe_center_2d(state: StateField2D) -> tuple[float, float, float]:
    """Values at the domain centre (mean of the central 2x2 cells when N is even)."""
    N = state.u.shape[0]
    if N % 2:
        sl = slice(N // 2, N // 2 + 1)
    else:
        sl = slice(N // 2 - 1, N // 2 + 1)
    return tuple(float(f[sl, sl].mean()) for f in (state.u, state.v, state.w))


def _step_index(t: float, tau: float) -> int:
    k = int(round(t / tau))
    if abs(k * tau - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"output time {t} is not a multiple of tau={tau}")
    return k


def run_2d(params: ModelParams, grid: Grid2D, ic: StateField2D, tau: float = 1e-3, t_end: float = 500.0,
           snapshot_times=(), probe_every: float = PROBE_EVERY,
           blowup_threshold: float = 1e6) -> RunArtifacts:
    """Iterate :func:`step_2d` to ``t_end``.

    Full fields are stored at ``snapshot_times`` (and at ``t_end``). The
    centre probe and the running maximum of n0 + n1 are recorded every
    ``probe_every``. The run stops on non-finite values, negative densities
    or a density above ``blowup_threshold``.
    """
    _check_params(params)
    if not tau > 0 or not t_end > 0:
        raise ValueError("tau and t_end must be positive")
    state = ic.copy()
    if state.u.shape != (grid.N, grid.N):
        raise ValueError("initial condition does not match the grid")
    x = grid.centers
    run = RunArtifacts(
        geometry="2d",
        params=params,
        coords={"x": x, "y": x},
        measure=np.full((grid.N, grid.N), grid.dx * grid.dy),
    )
    k_end = _step_index(t_end, tau)
    snap_steps = {_step_index(t, tau) for t in snapshot_times if 0 < t <= t_end}
    snap_steps.add(k_end)
    probe_stride = max(1, int(round(probe_every / tau)))
    stops = sorted(snap_steps | set(range(probe_stride, k_end + 1, probe_stride)))

    def record_snapshot():
        run.snapshots.append(Snapshot(state.k_step * tau, state.u.copy(), state.v.copy(), state.w.copy()))

    record_snapshot()
    run.probe.append(0.0, probe_center_2d(state))
    run.max_density.append((0.0, float(np.max(state.u + state.v))))
    mass0 = run.total_mass(run.snapshots[0])
    worst_drift = 0.0
    violations = 0
    max_b = 0.0
    initial_bound = stability_bound(params, grid, state.w)
    if tau > BOUND_FACTOR * initial_bound:
        run.warnings.append(f"tau={tau:g} exceeds {BOUND_FACTOR} x stability bound {initial_bound:.3e} at t=0")

    for k_stop in stops:
        done, status, viol, mb = _advance(params, state, tau, k_stop - state.k_step, grid.dx)
        state.k_step += done
        state.t = state.k_step * tau
        violations += viol
        max_b = max(max_b, mb)
        if status != _kernels.STATUS_OK:
            run.status = "blowup"
            run.blowup_time = state.t
            if status == _kernels.STATUS_NEGATIVE:
                run.message = "negative density: time step too large for the explicit scheme"
            else:
                run.message = "non-finite values in the solution"
            record_snapshot()
            break
        peak = float(np.max(state.u + state.v))
        run.max_density.append((state.t, peak))
        run.probe.append(state.t, probe_center_2d(state))
        if k_stop in snap_steps:
            record_snapshot()
            drift = abs(run.total_mass(run.snapshots[-1]) - mass0) / mass0
            worst_drift = max(worst_drift, drift)
        if peak > blowup_threshold:
            run.status = "blowup"
            run.blowup_time = state.t
            run.message = f"density exceeded {blowup_threshold:g}"
            if k_stop not in snap_steps:
                record_snapshot()
            break

    if violations:
        run.warnings.append(
            f"tau exceeded {BOUND_FACTOR} x the explicit stability bound on {violations} steps")
    run.stats.update(steps=state.k_step, t_final=state.t, tau=tau, dx=grid.dx, N=grid.N, L=grid.L,
                     mass_drift=worst_drift, bound_violations=violations, max_b=max_b)
    if worst_drift > 1e-8:
        run.warnings.append(f"mass drift {worst_drift:.3e} exceeds 1e-8")
    return run

