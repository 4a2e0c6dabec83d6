"""Model parameters, phenotypic switching functions and the kinetic term G.

Everything here is dimensionless unless stated otherwise. The switching
rates are the bounded Hill-type forms of cases A, B1, B2, C1 and C2; the
dimensional switching scales are folded into ``mu`` (``mu = Gamma/eta``)
and are not modelled separately.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import _kernels


class Case(str, enum.Enum):
    NO_SWITCHING = "NoSwitching"
    A = "A"
    B1 = "B1"
    B2 = "B2"
    C1 = "C1"
    C2 = "C2"

    @classmethod
    def parse(cls, text: str) -> "Case":
        key = text.strip().replace("_", "").replace("-", "").lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        if key in ("none", "noswitch", "off"):
            return cls.NO_SWITCHING
        raise ValueError(f"unknown switching case {text!r}")

    @property
    def code(self) -> int:
        return _CASE_CODES[self]


_CASE_CODES = {
    Case.NO_SWITCHING: _kernels.CASE_NONE,
    Case.A: _kernels.CASE_A,
    Case.B1: _kernels.CASE_B1,
    Case.B2: _kernels.CASE_B2,
    Case.C1: _kernels.CASE_C1,
    Case.C2: _kernels.CASE_C2,
}


class Variant(str, enum.Enum):
    TWO_PHENOTYPE = "TwoPhenotype"
    MINIMAL_KS = "MinimalKS"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        key = text.strip().lower()
        for member in cls:
            if member.value.lower() == key:
                return member
        raise ValueError(f"unknown model variant {text!r}")


@dataclass(frozen=True)
class SwitchingSpec:
    case: Case = Case.A
    mu: float = 1.0
    q: float = 1.0
    nbar_ref: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        if self.case is not Case.NO_SWITCHING:
            if not self.mu > 0:
                raise ValueError(f"mu must be positive, got {self.mu}")
            if not self.q > 0:
                raise ValueError(f"q must be positive, got {self.q}")
        if not 0.0 < self.nbar_ref < 1.0:
            raise ValueError(f"nbar_ref must lie in (0, 1), got {self.nbar_ref}")

    @property
    def active(self) -> bool:
        return self.case is not Case.NO_SWITCHING

    def kernel_args(self) -> tuple[int, float, float, float]:
        return self.case.code, float(self.mu), float(self.q), float(self.nbar_ref)


@dataclass(frozen=True)
class ModelParams:
    D: float = 1.0
    chi: float = 10.0
    switching: SwitchingSpec = field(default_factory=SwitchingSpec)
    variant: Variant = Variant.TWO_PHENOTYPE

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.D > 0:
            raise ValueError(f"D must be positive, got {self.D}")
        if not self.chi >= 0:
            raise ValueError(f"chi must be non-negative, got {self.chi}")

    @property
    def minimal(self) -> bool:
        return self.variant is Variant.MINIMAL_KS

    def kernel_args(self) -> tuple:
        """Flat scalar tuple consumed by the compiled kernels."""
        return (float(self.D), float(self.chi), bool(self.minimal), *self.switching.kernel_args())


@dataclass(frozen=True)
class DimensionalParams:
    D_n: float
    D_s: float
    chi_1: float
    alpha_0: float
    eta: float
    sigma: float

    def __post_init__(self):
        for name in ("D_n", "D_s", "chi_1", "alpha_0", "eta", "sigma"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value}")


@dataclass(frozen=True)
class NondimScales:
    X: float
    T: float
    S: float
    N: float


def _check_nonneg(**values: float) -> None:
    for name, value in values.items():
        if not value >= 0:
            raise ValueError(f"{name} must be non-negative, got {value}")


def switching_rates(spec: SwitchingSpec, rho: float, s: float) -> tuple[float, float]:
    """Return ``(mu01, mu10)`` at total density ``rho`` and attractant ``s``."""
    _check_nonneg(rho=rho, s=s)
    return _kernels.rates(*spec.kernel_args(), float(rho), float(s))


def kinetic_G(spec: SwitchingSpec, n0: float, n1: float, rho: float, s: float) -> float:
    """Net switching flux into the secreting state, ``-mu01*n0 + mu10*n1``.

    ``rho`` is taken as given; it is not forced to equal ``n0 + n1``.
    """
    _check_nonneg(n0=n0, n1=n1)
    mu01, mu10 = switching_rates(spec, rho, s)
    return -mu01 * n0 + mu10 * n1


def nondimensionalize(dim: DimensionalParams) -> tuple[float, float, NondimScales]:
    """Return ``(D, chi, scales)`` for a dimensional parameter set.

    The caller attaches the switching spec; rates there are already
    expressed in units of the attractant decay rate.
    """
    N = dim.sigma
    scales = NondimScales(
        X=math.sqrt(dim.D_s / dim.eta),
        T=1.0 / dim.eta,
        S=dim.alpha_0 * N / dim.eta,
        N=N,
    )
    D = dim.D_n / dim.D_s
    chi = dim.chi_1 * dim.alpha_0 * N / (dim.eta * dim.D_s)
    return D, chi, scales


def redimensionalize(D: float, chi: float, scales: NondimScales) -> DimensionalParams:
    """Invert :func:`nondimensionalize` given its outputs."""
    eta = 1.0 / scales.T
    D_s = scales.X**2 * eta
    alpha_0 = scales.S * eta / scales.N
    return DimensionalParams(
        D_n=D * D_s,
        D_s=D_s,
        chi_1=chi * eta * D_s / (alpha_0 * scales.N),
        alpha_0=alpha_0,
        eta=eta,
        sigma=scales.N,
    )


def rhs_reaction(params: ModelParams, n0: float, n1: float, s: float) -> tuple[float, float, float]:
    """Pointwise reaction terms ``(dn0, dn1, ds)``; transport is left to the solvers."""
    _check_nonneg(n0=n0, n1=n1, s=s)
    if params.minimal:
        return 0.0, 0.0, n0 - s
    G = kinetic_G(params.switching, n0, n1, n0 + n1, s)
    return G, -G, n0 - s
