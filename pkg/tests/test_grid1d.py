import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemoswitch.grid1d import Grid1D, StateField1D, initial_condition_1d, integrate_1d, spatial_rhs_1d
from chemoswitch.model import Case, ModelParams, SwitchingSpec, Variant, switching_rates
from chemoswitch.patterns import count_peaks
from chemoswitch.stability import h_values_analytic, linear_jacobian
from chemoswitch.timestep import TimeController

CASES = [Case.A, Case.B1, Case.B2, Case.C1, Case.C2, Case.NO_SWITCHING]


def oracle_rhs(params, n0, n1, s, dx):
    """Face fluxes written out cell by cell in plain Python floats.

    The minimal model keeps its single (chemotactic) density in n0.
    """
    D, chi = params.D, params.chi
    minimal = params.variant is Variant.MINIMAL_KS
    if minimal:
        n0, n1 = n1, n0
    N = len(n0)
    F0, F1, Fs = [0.0] * (N + 1), [0.0] * (N + 1), [0.0] * (N + 1)
    for i in range(N - 1):
        b = chi * (s[i + 1] - s[i]) / dx
        F0[i + 1] = D * (n0[i + 1] - n0[i]) / dx
        F1[i + 1] = D * (n1[i + 1] - n1[i]) / dx - max(0.0, b) * n1[i] + max(0.0, -b) * n1[i + 1]
        Fs[i + 1] = (s[i + 1] - s[i]) / dx
    out = np.zeros((3, N))
    for i in range(N):
        if params.variant is Variant.MINIMAL_KS:
            G = 0.0
        else:
            up, down = switching_rates(params.switching, n0[i] + n1[i], s[i])
            G = -up * n0[i] + down * n1[i]
        out[0, i] = (F0[i + 1] - F0[i]) / dx + G
        out[1, i] = (F1[i + 1] - F1[i]) / dx - G
        out[2, i] = (Fs[i + 1] - Fs[i]) / dx + (n1[i] if minimal else n0[i]) - s[i]
    if minimal:
        out[[0, 1]] = out[[1, 0]]
        out[1] = 0.0
    return out


def rhs(params, grid, y):
    return np.array(spatial_rhs_1d(params, StateField1D(*y), grid))


# ---- grid and initial condition ---------------------------------------------

def test_grid_geometry():
    g = Grid1D.from_spacing(40.0, 0.1)
    assert g.n_cells == 400 and g.dx * g.n_cells == pytest.approx(40.0, rel=1e-15)
    assert g.x[0] == pytest.approx(0.05) and g.x[-1] == pytest.approx(39.95)
    with pytest.raises(ValueError):
        Grid1D(40.0, 3)
    with pytest.raises(ValueError):
        Grid1D(-1.0, 10)


def test_initial_condition_examples():
    g = Grid1D(40.0, 401)  # odd count puts a centre exactly at L/2
    ic = initial_condition_1d(g, sampling="point")
    assert ic.s[200] == pytest.approx(0.51, rel=1e-14)
    assert ic.s[201] - 0.5 == pytest.approx(0.01 * math.exp(-1e4 * g.dx**2), rel=1e-6)
    g = Grid1D.from_spacing(40.0, 0.1)
    flat = initial_condition_1d(g, amplitude=0.0)
    assert np.all(flat.n0 == 0.5) and np.all(flat.n1 == 0.5) and np.all(flat.s == 0.5)
    with pytest.raises(ValueError):
        initial_condition_1d(g, nbar=1.0)


def test_offset_sample_example():
    # on the default grid the cells next to L/2 have centres 0.05 away: e^(-1e4 * 0.05^2) = e^-25
    g = Grid1D.from_spacing(40.0, 0.1)
    ic = initial_condition_1d(g, sampling="point")
    assert ic.s[199] - 0.5 == pytest.approx(0.01 * math.exp(-25), rel=1e-9)
    assert ic.s[200] == ic.s[199]


def test_cell_average_keeps_bump_integral():
    g = Grid1D.from_spacing(40.0, 0.1)
    ic = initial_condition_1d(g)
    excess = np.sum(ic.s - 0.5) * g.dx
    assert excess == pytest.approx(0.01 * math.sqrt(math.pi / 1e4), rel=1e-12)
    assert np.allclose(ic.s, ic.s[::-1], rtol=0, atol=1e-17)


# ---- spatial operator ---------------------------------------------------------

@pytest.mark.parametrize("case", CASES)
def test_uniform_steady_state_has_zero_rhs(case):
    nbar = 0.3 if case is Case.NO_SWITCHING else 0.5
    p = ModelParams(1.0, 10.0, SwitchingSpec(case, 1.0, 3.0))
    g = Grid1D(10.0, 50)
    y = np.vstack([np.full(50, nbar), np.full(50, 1 - nbar), np.full(50, nbar)])
    assert np.max(np.abs(rhs(p, g, y))) < 1e-15


@settings(max_examples=60, deadline=None)
@given(case=st.sampled_from(CASES), chi=st.floats(0, 30), D=st.floats(0.1, 3), n=st.integers(4, 40),
       seed=st.integers(0, 2**31))
def test_rhs_matches_oracle(case, chi, D, n, seed):
    p = ModelParams(D, chi, SwitchingSpec(case, 1.3, 2.0))
    g = Grid1D(7.0, n)
    y = np.random.default_rng(seed).uniform(0, 2, size=(3, n))
    want = oracle_rhs(p, *y, g.dx)
    assert np.allclose(rhs(p, g, y), want, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(want))))


@settings(max_examples=60, deadline=None)
@given(case=st.sampled_from(CASES), chi=st.floats(0, 30), n=st.integers(4, 60), seed=st.integers(0, 2**31))
def test_total_cell_rhs_telescopes(case, chi, n, seed):
    p = ModelParams(1.0, chi, SwitchingSpec(case, 1.0, 2.0))
    g = Grid1D(5.0, n)
    y = np.random.default_rng(seed).uniform(0, 3, size=(3, n))
    d = rhs(p, g, y)
    scale = np.sum(np.abs(d[:2])) * g.dx + 1.0
    assert abs(np.sum(d[0] + d[1]) * g.dx) < 1e-13 * scale


def test_minimal_ks_matches_oracle():
    p = ModelParams(1.0, 8.0, SwitchingSpec(Case.A), variant=Variant.MINIMAL_KS)
    g = Grid1D(5.0, 20)
    y = np.random.default_rng(3).uniform(0.2, 1.0, size=(3, 20))
    assert np.allclose(rhs(p, g, y), oracle_rhs(p, *y, g.dx), rtol=1e-12, atol=1e-11)


def test_mirrored_state_gives_mirrored_rhs():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.B1, 1.0, 30.0))
    g = Grid1D(4.0, 40)
    y = np.random.default_rng(9).uniform(0.1, 1.0, size=(3, 40))
    assert np.allclose(rhs(p, g, y[:, ::-1]), rhs(p, g, y)[:, ::-1], rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("m", [1, 4, 7, 11])
def test_eigenvector_mode_grows_at_eigenvalue(m):
    # A mode seeded along the dominant eigenvector of the linearised mode
    # system has d/dt = lambda * amplitude, up to O(eps) and O(dx^2) errors.
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    L, n = 40.0, 400
    g = Grid1D(L, n)
    h = h_values_analytic(p.switching)
    # discrete Laplacian eigenvalue of cos(m pi x / L) on the cell grid
    k_sq = (2 / g.dx * math.sin(m * math.pi * g.dx / (2 * L))) ** 2
    w, V = np.linalg.eig(linear_jacobian(p, h, k_sq))
    j = int(np.argmax(w.real))
    v = np.real(V[:, j] / V[1, j])
    eps = 1e-6
    c = np.cos(m * math.pi * g.x / L)
    y = 0.5 + eps * np.outer(v, c)
    d = rhs(p, g, y)
    growth = np.sum(d[1] * c) / np.sum(c * c) / eps
    assert growth == pytest.approx(w[j].real, rel=1e-3)


# ---- integration ----------------------------------------------------------------

def test_uniform_state_stays_put():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D(10.0, 100)
    run = integrate_1d(p, g, initial_condition_1d(g, amplitude=0.0), TimeController(t_end=5.0, snapshot_every=1.0))
    assert run.status == "completed"
    assert np.max(np.abs(run.final.n1 - 0.5)) < 1e-14
    assert [round(s.t, 9) for s in run.snapshots] == [0, 1, 2, 3, 4, 5]


def test_controller_validation():
    with pytest.raises(ValueError):
        TimeController(dt_init=1.0, dt_max=0.5)
    with pytest.raises(ValueError):
        TimeController(rel_tol=0.1)
    with pytest.raises(ValueError):
        TimeController(method="euler")
    with pytest.raises(ValueError):
        TimeController(t_end=0.0)


def test_dt_underflow_reports_stiffness():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D(40.0, 400)
    ctrl = TimeController(t_end=1.0, dt_init=1e-3, dt_min=1e-3, dt_max=1e-3, rel_tol=1e-10, abs_tol=1e-12)
    run = integrate_1d(p, g, initial_condition_1d(g), ctrl)
    assert run.status == "stiff" and "stiffness/blow-up suspected" in run.message
    assert run.aborted and run.blowup_time is not None


def test_mass_and_symmetry_preserved_over_short_run():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=50.0))
    m0 = run.total_mass(run.snapshots[0])
    for snap in run.snapshots:
        assert abs(run.total_mass(snap) - m0) / m0 < 1e-8
        for f in (snap.n0, snap.n1, snap.s):
            assert np.max(np.abs(f - f[::-1])) < 1e-6
        assert min(snap.n0.min(), snap.n1.min(), snap.s.min()) >= 0
    assert run.stats["mass_drift"] < 1e-8


def test_subthreshold_perturbation_decays():
    p = ModelParams(1.0, 3.0, SwitchingSpec(Case.A))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=500.0, snapshot_every=100.0))
    assert np.ptp(run.final.n1) < 1e-4


def test_no_switching_perturbation_decays():
    p = ModelParams(1.0, 20.0, SwitchingSpec(Case.NO_SWITCHING))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=500.0, snapshot_every=100.0))
    assert run.status == "completed"
    assert np.ptp(run.final.n1) < 1e-4


def test_case_a_forms_aggregates():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=500.0, snapshot_every=50.0))
    _, heights, _ = count_peaks(run.final.n1, g.dx)
    assert sum(h > 1.5 for h in heights) >= 2  # more than 1 above the 0.5 baseline
    counts = [count_peaks(s.n1, g.dx)[0] for s in run.snapshots if s.t > 100]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_bs23_and_rkc_agree():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D.from_spacing(40.0, 0.1)
    ic = initial_condition_1d(g)
    runs = [integrate_1d(p, g, ic, TimeController(t_end=150.0, snapshot_every=150.0, method=m))
            for m in ("bs23", "rkc")]
    a, b = runs[0].final.n1, runs[1].final.n1
    assert np.max(np.abs(a - b)) < 1e-3 * np.max(np.abs(a))
