"""Parameters, vector field, Jacobian and SDE coefficients of the refuge model.

The deterministic system on the closed quadrant {x >= 0, y >= 0} is

    dx/dt = x(1-x) - a*y*(x-m)_+ / (k1 + (x-m)_+),
    dy/dt = b*y*(1 - y / (k2 + (x-m)_+)),

with (x-m)_+ = max(0, x-m); dimensionless parameters a, b, k1, k2 > 0 and
refuge density 0 <= m < 1.  The stochastic variant adds diagonal
multiplicative noise (sigma1*x dW1, sigma2*y dW2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParams, KinkPoint


@dataclass(frozen=True)
class RawParams:
    """Dimensional parameters of the original two-species system.

    rho1, rho2 are the growth rates, beta the prey competition strength,
    alpha1/alpha2 the reduction rates, kappa1/kappa2 the protection
    constants and mu the refuge density, constrained by 0 <= mu < rho1/beta.
    """

    rho1: float
    rho2: float
    beta: float
    alpha1: float
    alpha2: float
    kappa1: float
    kappa2: float
    mu: float = 0.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "beta", "alpha1", "alpha2", "kappa1", "kappa2"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be strictly positive")
        if not 0 <= self.mu < self.rho1 / self.beta:
            raise InvalidParams("mu must satisfy 0 <= mu < rho1/beta")


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless parameters; sigma1 = sigma2 = 0 means deterministic."""

    a: float
    b: float
    k1: float
    k2: float
    m: float = 0.0
    sigma1: float = 0.0
    sigma2: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "k1", "k2"):
            if not getattr(self, name) > 0:
                raise InvalidParams(f"{name} must be strictly positive")
        if not 0 <= self.m < 1:
            raise InvalidParams("m must satisfy 0 <= m < 1")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise InvalidParams("noise intensities must be nonnegative")

    @property
    def deterministic(self) -> bool:
        return self.sigma1 == 0.0 and self.sigma2 == 0.0

    def with_b(self, b: float) -> "ModelParams":
        return replace(self, b=b)

    def to_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "k1": self.k1, "k2": self.k2,
            "m": self.m, "sigma1": self.sigma1, "sigma2": self.sigma2,
        }


def nondimensionalize(raw: RawParams, sigma1: float = 0.0, sigma2: float = 0.0) -> ModelParams:
    """Rescale dimensional parameters to the dimensionless record.

    m = mu*beta/rho1, a = alpha1*rho2/(alpha2*rho1), ki = kappai*beta/rho1,
    b = rho2/rho1.  Noise intensities are carried through unchanged.
    """
    return ModelParams(
        a=raw.alpha1 * raw.rho2 / (raw.alpha2 * raw.rho1),
        b=raw.rho2 / raw.rho1,
        k1=raw.kappa1 * raw.beta / raw.rho1,
        k2=raw.kappa2 * raw.beta / raw.rho1,
        m=raw.mu * raw.beta / raw.rho1,
        sigma1=sigma1,
        sigma2=sigma2,
    )


def load_params(obj) -> ModelParams:
    """Build ModelParams from a dict, JSON string, or path to a JSON file.

    Accepts either the dimensionless fields directly or {"raw": {...}}, which
    triggers nondimensionalize.  Missing sigma fields default to 0.
    """
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError:
            with open(obj) as f:
                obj = json.load(f)
    if "raw" in obj:
        raw = RawParams(**obj["raw"])
        return nondimensionalize(raw, obj.get("sigma1", 0.0), obj.get("sigma2", 0.0))
    known = {"a", "b", "k1", "k2", "m", "sigma1", "sigma2"}
    unknown = set(obj) - known
    if unknown:
        raise InvalidParams(f"unknown parameter fields: {sorted(unknown)}")
    return ModelParams(**obj)


def _field_scalar(a, b, k1, k2, m, x, y):
    """Pure-float evaluation of the vector field (the hot path of integrators)."""
    u = x - m
    if u < 0.0:
        u = 0.0
    v1 = x * (1.0 - x) - a * y * u / (k1 + u)
    v2 = b * y * (1.0 - y / (k2 + u))
    return v1, v2


def vector_field(p: ModelParams, state):
    """Velocity (v1, v2) at a state; broadcasts over array-valued states."""
    x, y = state
    if isinstance(x, float) and isinstance(y, float):
        return _field_scalar(p.a, p.b, p.k1, p.k2, p.m, x, y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = np.maximum(0.0, x - p.m)
    v1 = x * (1.0 - x) - p.a * y * u / (p.k1 + u)
    v2 = p.b * y * (1.0 - y / (p.k2 + u))
    return v1, v2


def jacobian(p: ModelParams, state) -> np.ndarray:
    """2x2 Jacobian of the vector field at a state off the refuge line.

    Raises KinkPoint when m > 0 and x == m exactly: the field has a kink
    there and one-sided derivatives must be queried at m +- eps instead.
    """
    x, y = state
    if p.m > 0 and x == p.m:
        raise KinkPoint(f"jacobian is undefined on the line x = m = {p.m}")
    u = max(0.0, x - p.m)
    active = 1.0 if x >= p.m else 0.0
    j11 = 1.0 - 2.0 * x - p.a * y * p.k1 / (p.k1 + u) ** 2 * active
    j12 = -p.a * u / (p.k1 + u)
    j21 = p.b * y ** 2 / (p.k2 + u) ** 2 * active
    j22 = p.b - 2.0 * p.b * y / (p.k2 + u)
    return np.array([[j11, j12], [j21, j22]])


def sde_coefficients(p: ModelParams, state):
    """Drift and diffusion of the stochastic system at a state.

    The drift is the deterministic field; the diffusion is the diagonal
    multiplicative pair (sigma1*x, sigma2*y).
    """
    x, y = state
    drift = vector_field(p, state)
    return drift, (p.sigma1 * x, p.sigma2 * y)
