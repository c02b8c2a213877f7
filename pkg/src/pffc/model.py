"""Material/regularization parameters and pointwise constitutive laws."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class ParameterError(ValueError):
    """Raised for physically or numerically invalid parameters."""


def lame_from_engineering(E: float, nu: float) -> tuple[float, float]:
    """Plane-strain Lamé constants ``(mu, lambda)`` from Young's modulus and Poisson ratio."""
    if E <= 0:
        raise ParameterError(f"Young's modulus must be positive, got {E}")
    if not 0.0 <= nu < 0.5:
        raise ParameterError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    return mu, lam


@dataclass(frozen=True)
class ModelParams:
    """Constants of the regularized, penalized fracture energy.

    Attributes
    ----------
    G_c : float
        Fracture toughness.
    eps : float
        Phase-field regularization length.
    kappa : float
        Residual stiffness in the degradation function.
    gamma : float
        Irreversibility penalty weight.
    eta : float
        Viscous (convexification) weight.
    eta0 : float
        Weight of the displacement initial condition.
    mu, lam : float
        Lamé parameters.
    """

    G_c: float = 1.0
    eps: float = 0.0884
    kappa: float = 1e-10
    gamma: float = 1e5
    eta: float = 1e3
    eta0: float = 1.0
    mu: float = 416666.6666666667
    lam: float = 277777.7777777778

    def __post_init__(self):
        for name in ("G_c", "eps", "gamma", "eta", "eta0", "mu", "lam"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.kappa < 1:
            raise ParameterError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.gamma / self.eta < 10:
            warnings.warn("gamma should dominate eta (gamma/eta < 10)", stacklevel=3)
        if self.eta / self.eta0 < 10:
            warnings.warn("eta0 should be much smaller than eta (eta/eta0 < 10)", stacklevel=3)

    @classmethod
    def from_engineering(cls, E: float, nu: float, **kwargs) -> "ModelParams":
        mu, lam = lame_from_engineering(E, nu)
        return cls(mu=mu, lam=lam, **kwargs)


@dataclass
class CostParams:
    """Tracking-type cost: desired phase-field, nominal control and Tikhonov weight.

    ``time_weighting`` selects how the per-step terms are summed over
    ``m = 1..M``: ``"sum"`` adds them with unit weight, ``"dt"`` weights
    step ``m`` by its length.
    """

    alpha: float
    phi_d: np.ndarray
    q_d: np.ndarray
    time_weighting: str = "sum"

    def __post_init__(self):
        self.phi_d = np.asarray(self.phi_d, dtype=float)
        self.q_d = np.asarray(self.q_d, dtype=float)
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.phi_d.size and (self.phi_d.min() < 0 or self.phi_d.max() > 1):
            raise ParameterError("desired phase-field must take values in [0, 1]")
        if self.time_weighting not in ("sum", "dt"):
            raise ParameterError(f"unknown time weighting {self.time_weighting!r}")

    def weights(self, times: np.ndarray) -> np.ndarray:
        """Weights of the steps ``m = 1..M`` in the time sums."""
        dt = np.diff(np.asarray(times, dtype=float))
        if self.time_weighting == "dt":
            return dt
        return np.ones_like(dt)


def degradation(phi, kappa: float):
    """g(phi) = (1 - kappa) phi^2 + kappa."""
    phi = np.asarray(phi, dtype=float)
    return (1.0 - kappa) * phi * phi + kappa


def degradation_prime(phi, kappa: float):
    return 2.0 * (1.0 - kappa) * np.asarray(phi, dtype=float)


def stress(e, mu: float, lam: float):
    """Linear isotropic stress ``2 mu e + lam tr(e) I`` for (..., 2, 2) strains."""
    e = np.asarray(e, dtype=float)
    tr = e[..., 0, 0] + e[..., 1, 1]
    return 2.0 * mu * e + lam * tr[..., None, None] * np.eye(2)


def active_indicator(phi_curr, phi_prev):
    """1 where the phase-field grows strictly (penalty active), else 0."""
    return (np.asarray(phi_curr) > np.asarray(phi_prev)).astype(float)
