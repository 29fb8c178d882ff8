"""Parameter bundles shared by the stepper, the domain manager and the driver."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class PhysicsParams:
    """Model constants of the relaxation system.

    ``eps`` is the stiffness parameter multiplying the collision rate,
    ``beta`` the anisotropy parameter of the Gaussian closure (beta = 0
    reduces to plain BGK), ``tau_model`` chooses how the relaxation
    prefactor depends on density, ``constants_dim`` the dimension used in
    the indicator constants, and ``gamma`` the adiabatic exponent of the
    limiting Euler system.
    """

    eps: float
    beta: float = -0.5
    tau_model: str = "density"
    constants_dim: int = 2
    gamma: float = 2.0
    eps_w: float = 1e-6
    linear_reconstruction: bool = False

    def __post_init__(self):
        if self.eps < 0.0:
            raise ConfigError("eps must be non-negative")
        if not self.beta < 1.0:
            raise ConfigError("beta must be below 1")
        if self.tau_model not in ("density", "constant"):
            raise ConfigError(f"unknown tau model {self.tau_model!r}")
        if self.constants_dim not in (2, 3):
            raise ConfigError("constants_dim must be 2 or 3")


@dataclass(frozen=True)
class CouplingThresholds:
    """Switching thresholds and the buffer depth around regime interfaces."""

    eta: float
    delta: float
    buffer_width: int = 2

    def __post_init__(self):
        if self.eta <= 0.0 or self.delta <= 0.0:
            raise ConfigError("eta and delta must be positive")
        if self.buffer_width < 2:
            raise ConfigError("buffer_width must cover the stencil halo (>= 2)")
