"""Linear stability of the uniform steady state.

Perturbations proportional to ``exp(lambda t) cos(k x)`` of the uniform
state satisfy the cubic ``lambda^3 + A lambda^2 + B lambda + C = 0`` whose
coefficients depend on ``k^2`` and on the partial derivatives H0, H1, Hs of
the switching kinetics at the steady state.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .model import Case, ModelParams, SwitchingSpec, kinetic_G, switching_rates


class ThresholdBranch(str, enum.Enum):
    H1_POSITIVE = "H1Positive"
    H1_NEGATIVE = "H1Negative"
    NONE = "None"


@dataclass(frozen=True)
class SteadyState:
    n0_star: float
    n1_star: float
    s_star: float


@dataclass(frozen=True)
class HValues:
    H0: float
    H1: float
    Hs: float

    @property
    def h1_minus_h0(self) -> float:
        return self.H1 - self.H0

    @property
    def homogeneous_margin(self) -> float:
        return self.H1 - self.H0 - self.Hs


@dataclass(frozen=True)
class DispersionPoint:
    m: int
    k_sq: float
    coeffs: tuple[float, float, float]
    eigenvalues: tuple[complex, complex, complex]

    @property
    def max_real(self) -> float:
        return max(ev.real for ev in self.eigenvalues)

    @property
    def max_abs_imag(self) -> float:
        return max(abs(ev.imag) for ev in self.eigenvalues)


@dataclass
class StabilityReport:
    steady: SteadyState
    h: HValues
    homogeneous_stable: bool
    homogeneous_margin: float
    chi_threshold: float | None
    threshold_branch: ThresholdBranch
    min_lengths: list[tuple[int, float | None]]
    dispersion: list[DispersionPoint] = field(default_factory=list)
    unstable_modes: list[int] = field(default_factory=list)

    @property
    def predicts_oscillation(self) -> bool:
        return any(
            ev.real > 0 and ev.imag != 0
            for point in self.dispersion
            for ev in point.eigenvalues
        )

    @property
    def homogeneous_status(self) -> str:
        if self.homogeneous_margin > 0:
            return "stable"
        if self.homogeneous_margin == 0:
            return "neutrally stable"
        return "unstable"


def fixed_point_roots(spec: SwitchingSpec, samples: int = 2000) -> list[float]:
    """All roots in (0, 1) of ``n - mu10(1, n) / (mu01(1, n) + mu10(1, n))``.

    Sign changes are bracketed on a uniform grid and refined by bisection.
    Steep attractant-dependent switching (C2 with q > 2) has an extra root
    close to 1 (a state without chemotactic cells) besides the symmetric one.
    """
    def residual(n: float) -> float:
        mu01, mu10 = switching_rates(spec, 1.0, n)
        return n - mu10 / (mu01 + mu10)

    grid = np.linspace(1e-12, 1.0 - 1e-12, samples + 1)
    vals = [residual(n) for n in grid]
    roots = [float(n) for n, v in zip(grid, vals) if v == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa * fb < 0:
            roots.append(brentq(residual, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return sorted(roots)


def steady_state(spec: SwitchingSpec, n0_mean: float = 0.5) -> SteadyState:
    """Positive uniform steady state at unit mean total density.

    With switching, the secreting fraction solves
    ``n = mu10(1, n) / (mu01(1, n) + mu10(1, n))``; the symmetric root 0.5 is
    located by bisection and returned.
    """
    if not spec.active:
        if not 0.0 < n0_mean < 1.0:
            raise ValueError(f"n0_mean must lie in (0, 1), got {n0_mean}")
        return SteadyState(n0_mean, 1.0 - n0_mean, n0_mean)

    roots = fixed_point_roots(spec)
    if not any(abs(r - 0.5) <= 1e-10 for r in roots):
        raise RuntimeError(f"steady-state bisection gave {roots!r}, expected 0.5 for case {spec.case.value}")
    return SteadyState(0.5, 0.5, 0.5)


def h_values_analytic(spec: SwitchingSpec) -> HValues:
    """Closed-form H0, H1, Hs at the symmetric steady state."""
    mu, q, nb = spec.mu, spec.q, spec.nbar_ref
    if spec.case is Case.NO_SWITCHING:
        return HValues(0.0, 0.0, 0.0)
    if spec.case is Case.A:
        return HValues(-mu, mu, 0.0)
    if spec.case is Case.B1:
        return HValues(-mu * (2 + q) / 4, mu * (2 - q) / 4, 0.0)
    if spec.case is Case.B2:
        return HValues(mu * (q - 2) / 4, mu * (2 + q) / 4, 0.0)
    if spec.case is Case.C1:
        return HValues(-mu / 2, mu / 2, -mu * q / (4 * nb))
    if spec.case is Case.C2:
        return HValues(-mu / 2, mu / 2, mu * q / (4 * nb))
    raise ValueError(f"unsupported case {spec.case}")


def h_values_numeric(spec: SwitchingSpec, h_step: float = 1e-6, steady: SteadyState | None = None) -> HValues:
    """Central differences of G at the steady state, with rho = n0 + n1 coupled."""
    if not 1e-8 <= h_step <= 1e-3:
        raise ValueError(f"h_step must lie in [1e-8, 1e-3], got {h_step}")
    ss = steady or steady_state(spec)
    n0, n1, s = ss.n0_star, ss.n1_star, ss.s_star

    def G(a: float, b: float, c: float) -> float:
        return kinetic_G(spec, a, b, a + b, c)

    H0 = (G(n0 + h_step, n1, s) - G(n0 - h_step, n1, s)) / (2 * h_step)
    H1 = (G(n0, n1 + h_step, s) - G(n0, n1 - h_step, s)) / (2 * h_step)
    Hs = (G(n0, n1, s + h_step) - G(n0, n1, s - h_step)) / (2 * h_step)
    return HValues(H0, H1, Hs)


def dispersion_coeffs(params: ModelParams, h: HValues, k_sq: float, nbar: float = 0.5) -> tuple[float, float, float]:
    if k_sq < 0:
        raise ValueError(f"k_sq must be non-negative, got {k_sq}")
    D, chi = params.D, params.chi
    d = h.H1 - h.H0
    A = (2 * D + 1) * k_sq + (d + 1)
    B = D * (D + 2) * k_sq**2 + ((d + 2) * D + d) * k_sq + (d - h.Hs)
    C = D**2 * k_sq**3 + (D * d + D**2) * k_sq**2 + (D * (d - h.Hs) - h.H1 * chi * (1 - nbar)) * k_sq
    return A, B, C


def linear_jacobian(params: ModelParams, h: HValues, k_sq: float, nbar: float = 0.5) -> np.ndarray:
    """Matrix of the linearised system acting on mode amplitudes (n0, n1, s)."""
    D, chi = params.D, params.chi
    return np.array([
        [-D * k_sq + h.H0, h.H1, h.Hs],
        [-h.H0, -D * k_sq - h.H1, -h.Hs + chi * (1 - nbar) * k_sq],
        [1.0, 0.0, -k_sq - 1.0],
    ])


def _polish(c: tuple[float, float, float], z: complex) -> complex:
    A, B, C = c
    for _ in range(3):
        p = ((z + A) * z + B) * z + C
        dp = (3 * z + 2 * A) * z + B
        if dp == 0:
            break
        step = p / dp
        if not np.isfinite(step):
            break
        z_new = z - step
        p_new = ((z_new + A) * z_new + B) * z_new + C
        if abs(p_new) >= abs(p):
            break
        z = z_new
    return z


def eigenvalues(coeffs: tuple[float, float, float]) -> tuple[complex, complex, complex]:
    """Roots of ``l^3 + A l^2 + B l + C`` sorted by descending real part.

    Companion-matrix eigenvalues followed by a guarded Newton polish; a real
    cubic always has a real root, so a triple with three complex roots is
    repaired by snapping the one closest to the axis.
    """
    A, B, C = (float(x) for x in coeffs)
    companion = np.array([[-A, -B, -C], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = np.linalg.eigvals(companion).astype(complex)
    roots = [_polish((A, B, C), complex(z)) for z in roots]
    scale = max(1.0, abs(A), abs(B), abs(C))
    # a real cubic has conjugate pairs; tidy near-real roots so pairs stay exact
    tidy = []
    for z in roots:
        if abs(z.imag) <= 1e-12 * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        tidy.append(z)
    if all(z.imag != 0 for z in tidy):
        idx = min(range(3), key=lambda i: abs(tidy[i].imag))
        tidy[idx] = complex(_polish((A, B, C), complex(tidy[idx].real, 0.0)).real, 0.0)
    complex_roots = [z for z in tidy if z.imag != 0]
    if len(complex_roots) == 2:
        a, b = complex_roots
        re = 0.5 * (a.real + b.real)
        im = 0.5 * (abs(a.imag) + abs(b.imag))
        real_root = next(z for z in tidy if z.imag == 0)
        tidy = [real_root, complex(re, im), complex(re, -im)]
    tidy.sort(key=lambda z: (-z.real, -z.imag))
    for z in tidy:
        if abs(((z + A) * z + B) * z + C) > 1e-6 * scale:
            raise ArithmeticError(f"cubic root residual too large for coefficients {coeffs}")
    return tuple(tidy)


def homogeneous_stability(h: HValues) -> bool:
    """Stable to spatially uniform perturbations iff ``H1 - H0 - Hs >= 0``."""
    return h.homogeneous_margin >= 0


def _h1_negative_threshold(h: HValues, D: float, nbar: float) -> float:
    d = h.H1 - h.H0
    numer = ((d - h.Hs) + d**2) * (D + 1) + (3 * D + 1) * d + 2 * D
    return numer / ((-h.H1) * (1 - nbar))


def chi_threshold(spec: SwitchingSpec, D: float, nbar: float = 0.5,
                  h: HValues | None = None) -> tuple[float | None, ThresholdBranch]:
    """Critical chemotactic sensitivity and the branch it was derived on.

    For H1 > 0 the threshold is where the k^2 coefficient of C turns negative
    (C < 0 on a band of small k^2 above it). For H1 < 0 it is where the k^2
    coefficient of AB - C turns negative, which is necessary but not sufficient.
    """
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    h = h or h_values_analytic(spec)
    if not spec.active or not homogeneous_stability(h):
        return None, ThresholdBranch.NONE
    if h.H1 > 0:
        return D * h.homogeneous_margin / (h.H1 * (1 - nbar)), ThresholdBranch.H1_POSITIVE
    if h.H1 < 0:
        return _h1_negative_threshold(h, D, nbar), ThresholdBranch.H1_NEGATIVE
    return None, ThresholdBranch.NONE


def chi_threshold_closed_form(spec: SwitchingSpec, D: float) -> float | None:
    """Per-case closed forms, used to cross-check :func:`chi_threshold`."""
    mu, q, nb = spec.mu, spec.q, spec.nbar_ref
    case = spec.case
    if case is Case.A:
        return 2 * D / (1 - nb)
    if case is Case.B1:
        if q < 2:
            return 4 * D / ((2 - q) * (1 - nb))
        if q > 2:
            return 4 * (mu**2 * (D + 1) + 4 * mu * D + 2 * mu + 2 * D) / (mu * (q - 2) * (1 - nb))
        return None
    if case is Case.B2:
        return 4 * D / ((q + 2) * (1 - nb))
    if case is Case.C1:
        return D * (4 * nb + q) / (2 * nb * (1 - nb))
    if case is Case.C2:
        if q < 4 * nb:
            return D * (4 * nb - q) / (2 * nb * (1 - nb))
        return None
    return None


def _band_discriminant(h: HValues, D: float, chi: float, nbar: float) -> tuple[float, float]:
    d = h.H1 - h.H0
    rad = (d - D) ** 2 + 4 * h.H1 * chi * (1 - nbar) + 4 * h.Hs * D
    return d, rad


def unstable_k_sq_bound(h: HValues, D: float, chi: float, nbar: float = 0.5) -> float | None:
    """Upper end of the band ``0 < k^2 < bound`` on which C(k^2) < 0, if any."""
    d, rad = _band_discriminant(h, D, chi, nbar)
    if rad < 0:
        return None
    denom = -(d + D) + math.sqrt(rad)
    if denom <= 0:
        return None
    return denom / (2 * D)


def min_domain_length(spec: SwitchingSpec, D: float, chi: float, m: int,
                      nbar: float = 0.5, h: HValues | None = None) -> float | None:
    """Smallest domain length on which mode ``m`` sits inside the C < 0 band."""
    if m < 1:
        raise ValueError(f"m must be a positive integer, got {m}")
    h = h or h_values_analytic(spec)
    d, rad = _band_discriminant(h, D, chi, nbar)
    if rad < 0:
        return None
    denom = -(d + D) + math.sqrt(rad)
    if denom <= 0:
        return None
    return math.sqrt(2 * D * m**2 * math.pi**2 / denom)


def dispersion_point(params: ModelParams, h: HValues, m: int, L: float, nbar: float = 0.5) -> DispersionPoint:
    k_sq = (m * math.pi / L) ** 2
    c = dispersion_coeffs(params, h, k_sq, nbar)
    return DispersionPoint(m, k_sq, c, eigenvalues(c))


def mode_scan_limit(params: ModelParams, h: HValues, L: float, nbar: float = 0.5) -> int:
    """Largest mode index worth scanning on a domain of length ``L``."""
    if h.H1 > 0:
        bound = unstable_k_sq_bound(h, params.D, params.chi, nbar)
        m_max = 0 if bound is None else int(math.floor(L * math.sqrt(bound) / math.pi))
        return m_max + 5
    k_sq_sweep = 50.0 / params.D
    return int(math.ceil(L * math.sqrt(k_sq_sweep) / math.pi))


def dispersion_scan(params: ModelParams, h: HValues, L: float, nbar: float = 0.5,
                    m_max: int | None = None) -> list[DispersionPoint]:
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    top = mode_scan_limit(params, h, L, nbar) if m_max is None else m_max
    return [dispersion_point(params, h, m, L, nbar) for m in range(1, top + 1)]


def unstable_mode_set(params: ModelParams, h: HValues, L: float, nbar: float = 0.5) -> list[int]:
    """Mode indices whose fastest eigenvalue has positive real part."""
    return [p.m for p in dispersion_scan(params, h, L, nbar) if p.max_real > 0]


def eigenvalue_map(template: SwitchingSpec, D: float, chi_values, mu_values, L: float,
                   nbar: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Max real part and max |imaginary part| over admissible modes on a (chi, mu) grid.

    Returns two arrays of shape ``(len(chi_values), len(mu_values))``.
    """
    chi_values = np.asarray(chi_values, dtype=float)
    mu_values = np.asarray(mu_values, dtype=float)
    max_re = np.empty((chi_values.size, mu_values.size))
    max_im = np.empty_like(max_re)
    for j, mu in enumerate(mu_values):
        spec = SwitchingSpec(template.case, float(mu), template.q, template.nbar_ref)
        h = h_values_analytic(spec)
        for i, chi in enumerate(chi_values):
            params = ModelParams(D=D, chi=float(chi), switching=spec)
            scan = dispersion_scan(params, h, L, nbar)
            max_re[i, j] = max(p.max_real for p in scan)
            max_im[i, j] = max(p.max_abs_imag for p in scan)
    return max_re, max_im


def stability_report(params: ModelParams, L: float = 40.0, n0_mean: float = 0.5,
                     m_lengths: int = 5) -> StabilityReport:
    """Bundle steady state, H-values, thresholds and the dispersion table."""
    spec = params.switching
    ss = steady_state(spec, n0_mean)
    nbar = ss.n0_star
    h = h_values_analytic(spec)
    threshold, branch = chi_threshold(spec, params.D, nbar, h)
    lengths: list[tuple[int, float | None]] = []
    if branch is ThresholdBranch.H1_POSITIVE:
        lengths = [(m, min_domain_length(spec, params.D, params.chi, m, nbar, h)) for m in range(1, m_lengths + 1)]
    scan = dispersion_scan(params, h, L, nbar)
    return StabilityReport(
        steady=ss,
        h=h,
        homogeneous_stable=homogeneous_stability(h),
        homogeneous_margin=h.homogeneous_margin,
        chi_threshold=threshold,
        threshold_branch=branch,
        min_lengths=lengths,
        dispersion=scan,
        unstable_modes=[p.m for p in scan if p.max_real > 0],
    )
