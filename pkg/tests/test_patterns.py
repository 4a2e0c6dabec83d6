import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemoswitch.grid1d import Grid1D, initial_condition_1d, integrate_1d
from chemoswitch.model import Case, ModelParams, SwitchingSpec
from chemoswitch.patterns import (PatternSummary, Phenotype, count_peaks, count_spots_2d, default_oscillation_window,
                                  detect_extinction, detect_oscillation, mass_audit, pattern_formed, summarize)
from chemoswitch.runs import RunArtifacts, Snapshot
from chemoswitch.timestep import TimeController

X = np.arange(400) * 0.1 + 0.05


def gaussians(centres, height=2.0, base=0.5, width=0.5):
    y = np.full_like(X, base)
    for c in centres:
        y += (height - base) * np.exp(-((X - c) / width) ** 2)
    return y


def make_run(profiles, measure=None):
    measure = np.full(len(profiles[0][0]), 0.1) if measure is None else measure
    run = RunArtifacts("1d", ModelParams(), {"x": X[:len(measure)]}, measure)
    for t, (n0, n1) in enumerate(profiles):
        run.snapshots.append(Snapshot(float(t), np.asarray(n0, float), np.asarray(n1, float),
                                      np.full(len(n0), 0.5)))
    return run


# ---- peaks ------------------------------------------------------------------------

def test_constant_profile_has_no_peaks():
    assert count_peaks(np.full(50, 0.7)) == (0, [], [])


def test_two_gaussians_example():
    count, heights, widths = count_peaks(gaussians([10.05, 30.05]), 0.1, 1.5)
    assert count == 2
    assert heights == pytest.approx([2.0, 2.0], abs=1e-3)
    # full width at half prominence of exp(-(x/w)^2) is 2 w sqrt(ln 2)
    assert widths == pytest.approx([2 * 0.5 * np.sqrt(np.log(2))] * 2, abs=0.1)


def test_close_maxima_merge():
    y = np.full(40, 0.5)
    y[[10, 12]] = [2.0, 1.8]
    count, heights, _ = count_peaks(y)
    assert count == 1 and heights == [2.0]
    y[12] = 1.8
    y[13:] = 0.5
    y[16] = 1.9
    assert count_peaks(y)[0] == 2


def test_plateau_on_two_cells_counts_once():
    y = np.full(40, 0.5)
    y[19:21] = 3.0
    assert count_peaks(y)[0] == 1


def test_boundary_modes():
    y = np.full(40, 0.5)
    y[0] = 3.0
    assert count_peaks(y, boundary="reflect")[0] == 1
    assert count_peaks(y, boundary="none")[0] == 0
    y[-1] = 3.0
    assert count_peaks(y, boundary="periodic")[0] == 1  # the two ends touch
    with pytest.raises(ValueError):
        count_peaks(y, boundary="mirror")
    with pytest.raises(ValueError):
        count_peaks([1.0, np.nan, 2.0])


@settings(max_examples=100, deadline=None)
@given(shift=st.integers(0, 399), scale=st.floats(0.1, 100), seed=st.integers(0, 2**31))
def test_peak_count_invariant_under_shift_and_scale(shift, scale, seed):
    rng = np.random.default_rng(seed)
    centres = np.sort(rng.choice(np.arange(2, 38, 4.0), size=rng.integers(1, 6), replace=False))
    y = gaussians(centres, width=0.4)
    base = count_peaks(y, 0.1, boundary="periodic")[0]
    assert count_peaks(np.roll(y, shift), 0.1, boundary="periodic")[0] == base
    assert count_peaks(scale * y, 0.1, boundary="periodic")[0] == base
    assert base == len(centres)


def test_spots_2d():
    xx, yy = np.meshgrid(np.arange(40), np.arange(40), indexing="ij")
    f = 0.5 + sum(3 * np.exp(-((xx - a) ** 2 + (yy - b) ** 2) / 4) for a, b in [(8, 8), (8, 30), (30, 20)])
    count, positions, heights = count_spots_2d(f)
    assert count == 3 and sorted(positions) == [(8, 8), (8, 30), (30, 20)]
    assert min(heights) > 3
    assert count_spots_2d(np.full((20, 20), 0.5))[0] == 0
    with pytest.raises(ValueError):
        count_spots_2d(np.ones(5))


def test_pattern_formed_threshold():
    assert not pattern_formed(np.full(10, 0.5))
    assert not pattern_formed(0.5 + 1e-4 * np.sin(X))
    assert pattern_formed(0.5 + 1e-2 * np.sin(X))


# ---- oscillations -------------------------------------------------------------------

def test_constant_series_has_no_oscillation():
    t = np.arange(0, 100, 0.1)
    assert detect_oscillation(t, np.full(t.size, 0.5), (0, 100)) is None


def test_sine_with_noise_example():
    t = np.arange(300, 500, 0.1)
    y = np.sin(2 * np.pi * t / 7) + np.random.default_rng(0).normal(0, 0.01, t.size)
    osc = detect_oscillation(t, y, (400, 500))
    assert osc is not None and osc.period == pytest.approx(7, abs=0.5)
    assert osc.amplitude == pytest.approx(1.0, rel=0.05)


@settings(max_examples=50, deadline=None)
@given(period=st.floats(2, 40), phase=st.floats(0, 6.3), offset=st.floats(-5, 5), trend=st.floats(-0.01, 0.01))
def test_sustained_sines_detected(period, phase, offset, trend):
    t = np.arange(400, 500.05, 0.1)
    y = offset + trend * t + 0.3 * np.sin(2 * np.pi * t / period + phase)
    osc = detect_oscillation(t, y, (400, 500))
    assert osc is not None and osc.period == pytest.approx(period, rel=0.08)


@settings(max_examples=50, deadline=None)
@given(period=st.floats(2, 40), rate=st.floats(np.log(2) / 100, 0.2))
def test_decaying_oscillation_rejected(period, rate):
    # decays by at least 50% across the window
    t = np.arange(400, 500.05, 0.1)
    y = np.exp(-rate * (t - 400)) * np.sin(2 * np.pi * t / period)
    assert detect_oscillation(t, y, (400, 500)) is None


def test_short_window_rejected():
    t = np.arange(0, 100, 0.1)
    with pytest.raises(ValueError):
        detect_oscillation(t, np.sin(t), (10, 40))
    assert default_oscillation_window(500) == (400, 500)
    assert default_oscillation_window(320) is None


# ---- extinction and mass ------------------------------------------------------------

def test_extinction_examples():
    half = np.full(10, 0.5)
    assert detect_extinction(Snapshot(0, half, half, half)) is None
    assert detect_extinction(Snapshot(0, np.full(10, 1e-3), half, half)) is Phenotype.SECRETING
    assert detect_extinction(Snapshot(0, half, np.full(10, 5e-3), half)) is Phenotype.CHEMOTACTIC
    # a weighted mean differs from the plain mean on non-uniform cells
    n1 = np.array([0.0, 0.0, 0.0, 1.0])
    snap = Snapshot(0, np.ones(4), n1, np.ones(4))
    assert detect_extinction(snap, 0.1) is None
    assert detect_extinction(snap, 0.1, measure=[1, 1, 1, 1e-3]) is Phenotype.CHEMOTACTIC


def test_mass_audit_is_exactly_zero_for_identical_snapshots():
    p = gaussians([20])
    run = make_run([(p, p)] * 5)
    assert mass_audit(run) == 0.0


def test_mass_audit_detects_corruption():
    p = np.full(400, 0.5)
    bad = p.copy()
    bad[100] *= 2  # adds 0.5 * 0.1 to a total of 400 * 1.0 * 0.1
    run = make_run([(p, p), (p, p), (bad, p)])
    assert mass_audit(run) == pytest.approx(0.05 / 40.0, rel=1e-12)


def test_summary_pairs_are_flat():
    pairs = dict(PatternSummary(peak_count=2, peak_heights=[1.5, 2.0]).to_pairs())
    assert pairs["peak_count"] == "2" and pairs["peak_heights"] == "1.5;2"
    assert pairs["oscillation"] == "false" and pairs["extinct_phenotype"] == ""


# ---- reference runs ------------------------------------------------------------------

def test_case_a_reference_summary():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=500.0, snapshot_every=50.0))
    s = summarize(run)
    assert s.peak_count >= 2 and s.pattern_formed
    assert s.extinct_phenotype is None and s.blowup is None
    assert s.mass_drift < 1e-8


def test_c1_high_chi_keeps_both_phenotypes():
    p = ModelParams(1.0, 75.0, SwitchingSpec(Case.C1, 1.0, 30.0))
    g = Grid1D.from_spacing(40.0, 0.1)
    run = integrate_1d(p, g, initial_condition_1d(g), TimeController(t_end=500.0, snapshot_every=100.0))
    assert run.status == "completed"
    assert detect_extinction(run.final) is None
    assert mass_audit(run) < 1e-8
