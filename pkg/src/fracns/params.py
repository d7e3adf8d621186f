"""Physical constants and the density-variable change.

The pressure law P = A rho^gamma with far-field density 1 fixes
kappa = sqrt(A gamma) and a = 2/(gamma - 1); the reference viscosity
mu' is kappa^a mu.  The evolved density variable rho is the transformed
sound-speed perturbation: the physical density is
rho_tilde = ((kappa + rho/a)/kappa)^a, so rho = 0 at the background state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import VacuumError
from .spectral import RealField

__all__ = [
    "FluidParams",
    "derive_constants",
    "to_perturbation",
    "from_perturbation",
    "viscosity_coeff",
]


@dataclass(frozen=True)
class FluidParams:
    A: float
    gamma: float
    mu: float
    alpha: float
    kappa: float
    a: float
    mu_prime: float

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"pressure coefficient A must be positive, got {self.A}")
        if not self.gamma > 1:
            raise ValueError(f"adiabatic exponent must exceed 1, got {self.gamma}")
        if not self.mu > 0:
            raise ValueError(f"viscosity must be positive, got {self.mu}")
        if not 0.5 < self.alpha <= 1.0:
            raise ValueError(
                f"fractional order alpha must lie in (1/2, 1], got {self.alpha}"
            )

    @property
    def classical_limit(self) -> bool:
        """alpha = 1 reduces the dissipation to the ordinary Laplacian.

        Accepted as a cross-check limit; the decay statements verified by
        this package assume alpha strictly below 1.
        """
        return self.alpha == 1.0


def derive_constants(A: float, gamma: float, mu: float, alpha: float = 0.75) -> FluidParams:
    """Build FluidParams with kappa = sqrt(A gamma), a = 2/(gamma-1), mu' = kappa^a mu."""
    if not (A > 0 and gamma > 1 and mu > 0):
        raise ValueError(
            f"invalid constants: need A > 0, gamma > 1, mu > 0, got A={A}, gamma={gamma}, mu={mu}"
        )
    kappa = float(np.sqrt(A * gamma))
    a = 2.0 / (gamma - 1.0)
    return FluidParams(
        A=float(A),
        gamma=float(gamma),
        mu=float(mu),
        alpha=float(alpha),
        kappa=kappa,
        a=a,
        mu_prime=kappa**a * mu,
    )


def to_perturbation(rho_tilde: RealField, p: FluidParams) -> RealField:
    """Physical density -> perturbation variable: rho = a kappa (rho_tilde^(1/a) - 1)."""
    rt = rho_tilde.samples
    if not np.all(rt > 0):
        raise VacuumError(
            f"physical density must be positive everywhere (min {rt.min():.3e})"
        )
    return RealField(rho_tilde.grid, p.a * p.kappa * (rt ** (1.0 / p.a) - 1.0))


def from_perturbation(rho: RealField, p: FluidParams) -> RealField:
    """Perturbation variable -> physical density: rho_tilde = ((kappa + rho/a)/kappa)^a."""
    base = _positive_base(rho.samples, p)
    return RealField(rho.grid, (base / p.kappa) ** p.a)


def viscosity_coeff(rho: RealField, p: FluidParams) -> RealField:
    """Pointwise mu' / (kappa + rho/a)^a; equals mu exactly at rho = 0."""
    return RealField(rho.grid, viscosity_samples(rho.samples, p))


def viscosity_samples(rho_samples: np.ndarray, p: FluidParams) -> np.ndarray:
    # mu * (kappa / (kappa + rho/a))^a is the same quantity as
    # mu' / (kappa + rho/a)^a but is exact at rho = 0.
    base = _positive_base(rho_samples, p)
    return p.mu * (p.kappa / base) ** p.a


def _positive_base(rho_samples, p):
    base = p.kappa + rho_samples / p.a
    if not np.all(base > 0):
        raise VacuumError(
            "transformed density kappa + rho/a lost positivity "
            f"(min {base.min():.3e}); state left the admissible region"
        )
    return base
