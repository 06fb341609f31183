"""
Symbols module for the spectral toolkit.

This module defines the five characteristic quasipolynomial families of the
modal delay equations and evaluates them, and their lambda-derivatives, on
scalars or numpy arrays.

With mu = n**theta the families are:

    parabolic-delay          lambda   + mu * exp(-lambda*h)
    hyperbolic-delay         lambda^2 + mu * exp(-lambda*h)
    perturbed-hyperbolic     lambda^2 + mu * (1 + exp(-lambda*h))
    stable-parabolic-delay   lambda   + mu * (1 + exp(-lambda*h))
    maxwell-cattaneo         lambda^2 + lambda + mu        (h unused)
"""

import logging
from enum import Enum
from numbers import Real
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import NonFiniteError, OverflowGuardError, UsageError

logger = logging.getLogger(__name__)

# e^{-lambda h} stays inside double range while |Re(lambda) h| <= 700
OVERFLOW_GUARD = 700.0

ComplexValue = complex
ComplexInput = Union[complex, float, np.ndarray]


class FamilyKind(str, Enum):
    """Quasipolynomial families, valued by their serialized tokens."""

    PARABOLIC_DELAY = "parabolic-delay"
    HYPERBOLIC_DELAY = "hyperbolic-delay"
    PERTURBED_HYPERBOLIC = "perturbed-hyperbolic"
    STABLE_PARABOLIC_DELAY = "stable-parabolic-delay"
    MAXWELL_CATTANEO = "maxwell-cattaneo"

    @classmethod
    def from_token(cls, token: str) -> "FamilyKind":
        try:
            return cls(token.strip().lower())
        except ValueError:
            tokens = ", ".join(kind.value for kind in cls)
            raise UsageError(f"Unknown family '{token}' (expected one of: {tokens})")

    @property
    def order(self) -> int:
        """Order of the modal equation in time."""
        if self in (FamilyKind.PARABOLIC_DELAY, FamilyKind.STABLE_PARABOLIC_DELAY):
            return 1
        return 2

    @property
    def has_delay(self) -> bool:
        return self is not FamilyKind.MAXWELL_CATTANEO


class Mode(BaseModel):
    """A Fourier mode n with its cached coefficient mu = n**theta."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Mode index")
    theta: float = Field(2.0, gt=0, description="Coefficient exponent")
    mu: float = Field(..., gt=0, description="Coefficient n**theta (derived)")

    @model_validator(mode="before")
    @classmethod
    def _derive_mu(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            n = data.get("n")
            theta = data.get("theta", 2.0)
            if isinstance(n, Real) and isinstance(theta, Real) and n >= 1 and theta > 0:
                data["mu"] = float(n) ** float(theta)
        return data


class SymbolFamily(BaseModel):
    """One quasipolynomial family with its delay and coefficient exponent."""

    model_config = ConfigDict(frozen=True)

    kind: FamilyKind = Field(..., description="Which quasipolynomial family")
    h: float = Field(1.0, gt=0, description="Delay (ignored by maxwell-cattaneo)")
    theta: float = Field(2.0, gt=0, description="Coefficient exponent, mu = n**theta")

    @property
    def token(self) -> str:
        return self.kind.value

    def mode(self, n: int) -> Mode:
        return Mode(n=n, theta=self.theta)


def _as_complex(lam: ComplexInput):
    if isinstance(lam, np.ndarray):
        z, scalar = lam.astype(complex, copy=False), False
    else:
        z, scalar = complex(lam), True
    if not np.all(np.isfinite(z)):
        raise NonFiniteError("lambda must be finite", {"lambda": str(lam) if scalar else "array"})
    return z, scalar


def _delay_factor(family: SymbolFamily, lam) -> Any:
    """exp(-lambda h) after enforcing the overflow guard."""
    if np.any(np.abs(np.real(lam) * family.h) > OVERFLOW_GUARD):
        raise OverflowGuardError(
            f"|Re(lambda)*h| exceeds {OVERFLOW_GUARD:g} for {family.token} (h={family.h:g})",
            {"family": family.token, "h": family.h},
        )
    return np.exp(-lam * family.h)


def evaluate(family: SymbolFamily, mode: Mode, lam: ComplexInput) -> ComplexInput:
    """
    Evaluate the characteristic quasipolynomial F_n(lambda).

    Args:
        family: The symbol family
        mode: The Fourier mode (supplies mu)
        lam: A complex scalar or an array of complex points

    Returns:
        F_n at lam, with the same shape as lam

    Raises:
        OverflowGuardError: If |Re(lambda) h| > 700 for a delay family
        NonFiniteError: If lambda is NaN or infinite
    """
    z, scalar = _as_complex(lam)
    mu = mode.mu
    kind = family.kind

    if kind is FamilyKind.MAXWELL_CATTANEO:
        value = z * z + z + mu
    else:
        e = _delay_factor(family, z)
        if kind is FamilyKind.PARABOLIC_DELAY:
            value = z + mu * e
        elif kind is FamilyKind.HYPERBOLIC_DELAY:
            value = z * z + mu * e
        elif kind is FamilyKind.PERTURBED_HYPERBOLIC:
            value = z * z + mu * (1.0 + e)
        else:
            value = z + mu * (1.0 + e)

    return complex(value) if scalar else value


def derivative(family: SymbolFamily, mode: Mode, lam: ComplexInput) -> ComplexInput:
    """
    Evaluate dF_n/dlambda.

    Args:
        family: The symbol family
        mode: The Fourier mode
        lam: A complex scalar or an array of complex points

    Returns:
        The derivative at lam

    Raises:
        OverflowGuardError: Under the same guard as evaluate()
    """
    z, scalar = _as_complex(lam)
    mu = mode.mu
    kind = family.kind

    if kind is FamilyKind.MAXWELL_CATTANEO:
        value = 2.0 * z + 1.0
    else:
        delayed = -mu * family.h * _delay_factor(family, z)
        if kind.order == 1:
            value = 1.0 + delayed
        else:
            value = 2.0 * z + delayed

    return complex(value) if scalar else value


def residual_scale(mode: Mode, lam: ComplexInput) -> ComplexInput:
    """Normalisation |lambda|^2 + mu + 1 used by residuals and guard bands."""
    return np.abs(lam) ** 2 + mode.mu + 1.0


def relative_residual(family: SymbolFamily, mode: Mode, lam: complex) -> float:
    """|F_n(lambda)| / (|lambda|^2 + mu + 1)."""
    return float(abs(evaluate(family, mode, lam)) / residual_scale(mode, lam))
