import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from chemoswitch.model import Case, ModelParams, SwitchingSpec, switching_rates
from chemoswitch.stability import (ThresholdBranch, chi_threshold, chi_threshold_closed_form, dispersion_coeffs,
                                   eigenvalue_map, eigenvalues, h_values_analytic, h_values_numeric,
                                   homogeneous_stability, linear_jacobian, min_domain_length, stability_report,
                                   steady_state, unstable_mode_set)

CASES = [Case.A, Case.B1, Case.B2, Case.C1, Case.C2]


def table_h(case, mu, q, nbar=0.5):
    """H-values written out from the closed forms, independent of the package."""
    if case is Case.A:
        return -mu, mu, 0.0
    if case is Case.B1:
        return -mu * (2 + q) / 4, mu * (2 - q) / 4, 0.0
    if case is Case.B2:
        return -mu * (2 - q) / 4, mu * (2 + q) / 4, 0.0
    if case is Case.C1:
        return -mu / 2, mu / 2, -mu * q / (4 * nbar)
    return -mu / 2, mu / 2, mu * q / (4 * nbar)


def residual_scale(c):
    return max(1.0, *(abs(x) for x in c))


# ---- steady state and H-values ---------------------------------------------

@pytest.mark.parametrize("case", CASES)
def test_switching_steady_state_is_half(case):
    ss = steady_state(SwitchingSpec(case, 2.0, 30.0))
    assert (ss.n0_star, ss.n1_star, ss.s_star) == pytest.approx((0.5, 0.5, 0.5), abs=1e-10)


def test_no_switching_steady_state_uses_mean():
    ss = steady_state(SwitchingSpec(Case.NO_SWITCHING), 0.3)
    assert (ss.n0_star, ss.n1_star, ss.s_star) == pytest.approx((0.3, 0.7, 0.3))


@pytest.mark.parametrize("case,mu,q,expected", [
    (Case.A, 1.0, 1.0, (-1.0, 1.0, 0.0)),
    (Case.B1, 1.0, 1.0, (-0.75, 0.25, 0.0)),
])
def test_h_values_examples(case, mu, q, expected):
    h = h_values_analytic(SwitchingSpec(case, mu, q))
    assert (h.H0, h.H1, h.Hs) == pytest.approx(expected)


def test_c2_h_values_example():
    h = h_values_analytic(SwitchingSpec(Case.C2, 1.0, 1.0))
    assert h.Hs == pytest.approx(0.5)
    assert h.homogeneous_margin == pytest.approx(0.5)


def test_numeric_h_values_examples():
    h = h_values_numeric(SwitchingSpec(Case.A, 1.0, 1.0), 1e-6)
    assert (h.H0, h.H1, h.Hs) == pytest.approx((-1, 1, 0), abs=1e-5)
    h = h_values_numeric(SwitchingSpec(Case.B2, 1.0, 1.0))
    assert h.H1 - h.H0 == pytest.approx(1.0, abs=1e-5)
    h = h_values_numeric(SwitchingSpec(Case.C1, 1.0, 30.0))
    assert h.Hs == pytest.approx(-15.0, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(case=st.sampled_from(CASES), mu=st.floats(0.01, 10), q=st.floats(0.5, 30))
def test_analytic_h_values_match_table(case, mu, q):
    h = h_values_analytic(SwitchingSpec(case, mu, q))
    assert (h.H0, h.H1, h.Hs) == pytest.approx(table_h(case, mu, q), rel=1e-12, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(case=st.sampled_from(CASES), mu=st.floats(0.01, 10), q=st.floats(0.5, 30))
def test_h1_minus_h0_is_total_switching_rate(case, mu, q):
    spec = SwitchingSpec(case, mu, q)
    h = h_values_analytic(spec)
    up, down = switching_rates(spec, 1.0, 0.5)
    assert h.H1 - h.H0 == pytest.approx(up + down, abs=1e-10)
    assert h.H1 - h.H0 > 0


# ---- cubic and eigenvalues --------------------------------------------------

@pytest.mark.parametrize("coeffs,roots", [
    ((4.0, 5.0, 2.0), [-1, -1, -2]),
    ((0.0, 0.0, 0.0), [0, 0, 0]),
    ((-3.0, 3.0, -1.0), [1, 1, 1]),
])
def test_eigenvalue_examples(coeffs, roots):
    got = sorted(eigenvalues(coeffs), key=lambda z: (z.real, z.imag))
    for z, r in zip(got, sorted(roots)):
        assert abs(z - r) < 1e-4  # multiple roots are conditioned at eps^(1/3)
    for z in got:
        assert abs(((z + coeffs[0]) * z + coeffs[1]) * z + coeffs[2]) < 1e-8 * residual_scale(coeffs)


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_eigenvalues_residual_vieta_and_order(A, B, C):
    roots = eigenvalues((A, B, C))
    scale = residual_scale((A, B, C))
    for z in roots:
        assert abs(((z + A) * z + B) * z + C) < 1e-8 * scale
    assert abs(sum(roots) + A) < 1e-8 * scale
    assert abs(roots[0] * roots[1] * roots[2] + C) < 1e-8 * scale
    re = [z.real for z in roots]
    assert re == sorted(re, reverse=True)
    nonreal = [z for z in roots if z.imag != 0]
    for z in nonreal:
        assert any(abs(w - z.conjugate()) < 1e-8 * scale for w in roots)


def test_dispersion_examples():
    none = ModelParams(1.0, 3.0, SwitchingSpec(Case.NO_SWITCHING))
    assert dispersion_coeffs(none, h_values_analytic(none.switching), 1.0) == pytest.approx((4, 5, 2))
    a = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    h = h_values_analytic(a.switching)
    assert dispersion_coeffs(a, h, 0.5)[2] == pytest.approx(-0.625)
    for case in CASES:
        p = ModelParams(1.3, 7.0, SwitchingSpec(case, 1.1, 2.5))
        assert dispersion_coeffs(p, h_values_analytic(p.switching), 0.0)[2] == 0.0


@settings(max_examples=100, deadline=None)
@given(case=st.sampled_from(CASES), mu=st.floats(0.05, 5), q=st.floats(0.5, 30), D=st.floats(0.1, 5),
       chi=st.floats(0, 50), k_sq=st.floats(0, 20))
def test_coefficients_equal_characteristic_polynomial_of_jacobian(case, mu, q, D, chi, k_sq):
    p = ModelParams(D, chi, SwitchingSpec(case, mu, q))
    h = h_values_analytic(p.switching)
    J = linear_jacobian(p, h, k_sq)
    oracle = np.poly(J)  # [1, A, B, C] from the matrix itself
    got = dispersion_coeffs(p, h, k_sq)
    scale = residual_scale(got)
    assert np.allclose(oracle[1:], got, rtol=1e-9, atol=1e-9 * scale)


def test_no_switching_routh_hurwitz_identity():
    rng = np.random.default_rng(11)
    for D, k_sq in rng.uniform([0.1, 0.0], [5.0, 10.0], size=(100, 2)):
        p = ModelParams(D, 12.0, SwitchingSpec(Case.NO_SWITCHING))
        A, B, C = dispersion_coeffs(p, h_values_analytic(p.switching), k_sq)
        rhs = 2 * D * k_sq * ((D + 1) ** 2 * k_sq**2 + 2 * (D + 1) * k_sq + 1)
        assert A * B - C == pytest.approx(rhs, rel=1e-10, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(case=st.sampled_from(CASES), mu=st.floats(0.01, 10), q=st.floats(0.5, 30), k_sq=st.floats(0, 100))
def test_A_positive_when_switching(case, mu, q, k_sq):
    p = ModelParams(1.0, 10.0, SwitchingSpec(case, mu, q))
    assert dispersion_coeffs(p, h_values_analytic(p.switching), k_sq)[0] > 0


# ---- homogeneous stability and thresholds -----------------------------------

def test_homogeneous_stability_examples():
    assert homogeneous_stability(h_values_analytic(SwitchingSpec(Case.A)))
    h = h_values_analytic(SwitchingSpec(Case.C2, 1.0, 30.0))
    assert not homogeneous_stability(h) and h.homogeneous_margin == pytest.approx(-14)
    h = h_values_analytic(SwitchingSpec(Case.C2, 1.0, 2.0))
    assert homogeneous_stability(h) and h.homogeneous_margin == 0.0


@pytest.mark.parametrize("case,expected", [
    (Case.A, 4.0), (Case.B1, 8.0), (Case.B2, 8.0 / 3.0), (Case.C1, 6.0), (Case.C2, 2.0)])
def test_threshold_table(case, expected):
    thr, branch = chi_threshold(SwitchingSpec(case, 1.0, 1.0), 1.0)
    assert branch is ThresholdBranch.H1_POSITIVE
    assert thr == pytest.approx(expected, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(case=st.sampled_from(CASES), mu=st.floats(0.01, 10), q=st.floats(0.5, 30), D=st.floats(0.1, 5))
def test_thresholds_match_closed_forms(case, mu, q, D):
    spec = SwitchingSpec(case, mu, q)
    thr, branch = chi_threshold(spec, D)
    closed = chi_threshold_closed_form(spec, D)
    if branch is ThresholdBranch.NONE:
        assert thr is None
        return
    assert thr == pytest.approx(closed, rel=1e-10)


def test_b1_q2_has_no_threshold():
    assert chi_threshold(SwitchingSpec(Case.B1, 1.0, 2.0), 1.0) == (None, ThresholdBranch.NONE)


def test_homogeneously_unstable_case_has_no_threshold():
    assert chi_threshold(SwitchingSpec(Case.C2, 1.0, 30.0), 1.0) == (None, ThresholdBranch.NONE)


@pytest.mark.parametrize("case,q", [(Case.A, 1.0), (Case.B2, 3.0), (Case.C1, 2.0), (Case.C2, 1.0), (Case.B1, 0.5)])
def test_positive_branch_threshold_is_infimum_over_k(case, q):
    spec = SwitchingSpec(case, 1.4, q)
    D = 0.8
    h = h_values_analytic(spec)

    def chi_zero(log_k_sq):
        # chi making C(k^2) = 0: C is linear in chi
        k_sq = math.exp(log_k_sq)
        c0 = dispersion_coeffs(ModelParams(D, 0.0, spec), h, k_sq)[2]
        c1 = dispersion_coeffs(ModelParams(D, 1.0, spec), h, k_sq)[2]
        return c0 / (c0 - c1)

    best = minimize_scalar(chi_zero, bounds=(-30, 5), method="bounded", options={"xatol": 1e-12})
    thr, _ = chi_threshold(spec, D)
    assert min(best.fun, chi_zero(-30)) == pytest.approx(thr, rel=1e-6)


def test_figure_chi_values_exceed_thresholds():
    for case, chi in zip(CASES, (10, 15, 5, 10, 10)):
        thr, _ = chi_threshold(SwitchingSpec(case, 1.0, 1.0), 1.0)
        assert chi > thr


# ---- mode sets, domain lengths, maps ----------------------------------------

def test_min_domain_length_examples():
    spec = SwitchingSpec(Case.A)
    L1 = min_domain_length(spec, 1.0, 10.0, 1)
    assert L1 == pytest.approx(math.sqrt(2 * math.pi**2 / (-3 + math.sqrt(21))))
    assert L1 == pytest.approx(3.532, abs=1e-3)
    assert min_domain_length(spec, 1.0, 10.0, 2) == pytest.approx(2 * L1)
    assert min_domain_length(spec, 1.0, 4.0, 1) is None
    with pytest.raises(ValueError):
        min_domain_length(spec, 1.0, 10.0, 0)


def test_unstable_mode_examples():
    p = ModelParams(1.0, 10.0, SwitchingSpec(Case.A))
    h = h_values_analytic(p.switching)
    modes = unstable_mode_set(p, h, 40.0)
    assert modes == list(range(1, 12))
    k_sq = [(m * math.pi / 40) ** 2 for m in modes]
    assert max(k_sq) < (-3 + math.sqrt(21)) / 2
    assert any(abs(k - 0.4) < 0.05 for k in k_sq)
    assert unstable_mode_set(p, h, 3.0) == []
    none = ModelParams(1.0, 50.0, SwitchingSpec(Case.NO_SWITCHING))
    assert unstable_mode_set(none, h_values_analytic(none.switching), 40.0) == []


def test_eigenvalue_map_examples():
    spec = SwitchingSpec(Case.B1, 1.0, 30.0)
    re, im = eigenvalue_map(spec, 1.0, [15.0], [1.0], 40.0)
    assert re[0, 0] > 0 and im[0, 0] > 0
    re, _ = eigenvalue_map(spec, 1.0, [1.0], [0.01], 40.0)
    assert re[0, 0] < 0


def test_map_shape_and_report_fields():
    re, im = eigenvalue_map(SwitchingSpec(Case.A), 1.0, [2.0, 6.0, 10.0], [0.1, 1.0], 40.0)
    assert re.shape == im.shape == (3, 2)
    assert np.all(re[0] <= 1e-12) and np.all(re[2] > 0)
    rep = stability_report(ModelParams(1.0, 15.0, SwitchingSpec(Case.B1, 1.0, 30.0)))
    assert rep.threshold_branch is ThresholdBranch.H1_NEGATIVE
    assert rep.predicts_oscillation
    assert rep.unstable_modes
    rep = stability_report(ModelParams(1.0, 10.0, SwitchingSpec(Case.C2, 1.0, 30.0)))
    assert not rep.homogeneous_stable and rep.homogeneous_status == "unstable"
