"""
Lambert module for the spectral toolkit.

Real solvers for x * exp(x) = t and x^2 * exp(x) = t on x >= 0, and the
leading-order large-t asymptotic ln t - ln ln t.
"""

import math
import logging

from pydantic import BaseModel, Field
from scipy.optimize import brentq

from .exceptions import DomainError, NonFiniteError

logger = logging.getLogger(__name__)

RESIDUAL_BOUND = 1e-12
MAX_NEWTON_STEPS = 60


class LambertSolution(BaseModel):
    """Nonnegative root of a Lambert-type equation."""

    x: float = Field(..., ge=0, description="The root")
    t: float = Field(..., ge=0, description="Right-hand side")
    residual: float = Field(..., ge=0, description="|g(x) - t| / max(1, t)")
    iterations: int = Field(..., ge=0, description="Solver iterations used")


def _check_argument(t: float) -> float:
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteError(f"Lambert argument must be finite, got {t}")
    if t < 0:
        raise DomainError(f"Lambert argument must be nonnegative, got {t}")
    return t


def _newton(g, dg, x: float, scale: float) -> tuple:
    """Plain Newton iteration; returns (x, iterations) or (None, iterations) on failure."""
    for iteration in range(1, MAX_NEWTON_STEPS + 1):
        step = g(x) / dg(x)
        x_next = x - step
        if not math.isfinite(x_next) or x_next <= 0:
            return None, iteration
        x = x_next
        if abs(step) <= 4 * 2.2e-16 * max(scale, x):
            return x, iteration
    return x, MAX_NEWTON_STEPS


def phi_asymptotic(t: float) -> float:
    """
    Leading-order asymptotic ln t - ln ln t of the root of x e^x = t.

    Args:
        t: Argument, must exceed e

    Returns:
        ln t - ln ln t

    Raises:
        DomainError: If t <= e
    """
    t = float(t)
    if not t > math.e:
        raise DomainError(f"phi_asymptotic needs t > e, got {t}")
    log_t = math.log(t)
    return log_t - math.log(log_t)


def solve_xexp(t: float) -> LambertSolution:
    """
    Solve x * exp(x) = t for the unique x >= 0.

    For t >= e Newton runs on the log form x + ln x - ln t, otherwise on the
    original form. Bisection (brentq) takes over if Newton leaves the domain.

    Args:
        t: Nonnegative right-hand side

    Returns:
        The LambertSolution

    Raises:
        NonFiniteError: If t is NaN or infinite
        DomainError: If t is negative
    """
    t = _check_argument(t)
    if t == 0.0:
        return LambertSolution(x=0.0, t=0.0, residual=0.0, iterations=0)

    x0 = phi_asymptotic(t) if t > math.e ** 2 else t / (1.0 + t)

    if t >= math.e:
        log_t = math.log(t)
        x, iterations = _newton(
            lambda x: x + math.log(x) - log_t,
            lambda x: 1.0 + 1.0 / x,
            x0, 1.0,
        )
        if x is None:
            logger.warning(f"Newton left the domain for x*exp(x) = {t:g}; bisecting")
            x = brentq(lambda x: x + math.log(x) - log_t, 1e-300, max(1.0, log_t), xtol=1e-15, rtol=4.5e-16)
    else:
        x, iterations = _newton(
            lambda x: x * math.exp(x) - t,
            lambda x: (1.0 + x) * math.exp(x),
            x0, t,
        )
        if x is None:
            logger.warning(f"Newton left the domain for x*exp(x) = {t:g}; bisecting")
            x = brentq(lambda x: x * math.exp(x) - t, 0.0, 1.0, xtol=1e-300, rtol=4.5e-16)

    residual = abs(x * math.exp(x) - t) / max(1.0, t)
    logger.debug(f"solve_xexp(t={t:g}) -> x={x!r} in {iterations} steps, residual {residual:.2e}")
    return LambertSolution(x=x, t=t, residual=residual, iterations=iterations)


def solve_x2exp(t: float) -> LambertSolution:
    """
    Solve x^2 * exp(x) = t for the unique x >= 0.

    Uses the identity x = 2 W(sqrt(t)/2) for the start value, then polishes
    with Newton on the log form 2 ln x + x - ln t.

    Args:
        t: Nonnegative right-hand side

    Returns:
        The LambertSolution

    Raises:
        NonFiniteError: If t is NaN or infinite
        DomainError: If t is negative
    """
    t = _check_argument(t)
    if t == 0.0:
        return LambertSolution(x=0.0, t=0.0, residual=0.0, iterations=0)

    start = solve_xexp(math.sqrt(t) / 2.0)
    x = 2.0 * start.x
    iterations = start.iterations

    log_t = math.log(t)
    polished, steps = _newton(
        lambda x: 2.0 * math.log(x) + x - log_t,
        lambda x: 1.0 + 2.0 / x,
        x, 1.0,
    )
    if polished is not None:
        x = polished
    iterations += steps

    residual = abs(x * x * math.exp(x) - t) / max(1.0, t)
    logger.debug(f"solve_x2exp(t={t:g}) -> x={x!r}, residual {residual:.2e}")
    return LambertSolution(x=x, t=t, residual=residual, iterations=iterations)
