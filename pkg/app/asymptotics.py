"""
Asymptotics module for the spectral toolkit.

Leading-order predictions of the unstable roots of the delay families, the
admissible-index scan and bracketing function for the perturbed hyperbolic
family, the exact Maxwell-Cattaneo roots and the far-branch expansion of the
parabolic-delay roots.
"""

import math
import logging
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import bisect

from .exceptions import DomainError, NoBracketError, SubdivisionLimitError
from .lambert import solve_x2exp, solve_xexp
from .rootfinder import NEWTON_TOL, Root, RootMethod, newton_refine
from .symbols import FamilyKind, SymbolFamily

logger = logging.getLogger(__name__)

ALPHA = 0.25
BISECT_XTOL = 1e-10

PARABOLIC = SymbolFamily(kind=FamilyKind.PARABOLIC_DELAY)
HYPERBOLIC = SymbolFamily(kind=FamilyKind.HYPERBOLIC_DELAY)
PERTURBED = SymbolFamily(kind=FamilyKind.PERTURBED_HYPERBOLIC)
MAXWELL = SymbolFamily(kind=FamilyKind.MAXWELL_CATTANEO)


class AsymptoticPrediction(BaseModel):
    """A predicted root location and the term the prediction drops."""

    family: SymbolFamily = Field(..., description="Family the prediction belongs to")
    n: int = Field(..., ge=1, description="Mode index")
    k: Optional[int] = Field(None, description="Branch index for far-branch predictions")
    x_pred: float = Field(..., description="Predicted real part")
    y_pred: float = Field(..., description="Predicted imaginary part")
    order_note: str = Field(..., description="Which correction term is dropped")
    x_lambert: Optional[float] = Field(None, description="Leading quantity from the exact Lambert solution")

    @property
    def value(self) -> complex:
        return complex(self.x_pred, self.y_pred)


class AdmissibleIndex(BaseModel):
    """An index n with cos n > 1/4 and cos(n+1) < -1/4."""

    n: int = Field(..., ge=1)
    cos_n: float = Field(..., gt=ALPHA)
    cos_n1: float = Field(..., lt=-ALPHA)


def predict_parabolic(n: int) -> AsymptoticPrediction:
    """
    Leading-order unstable root of lambda + n^2 exp(-lambda).

    Raises:
        DomainError: If n < 2
    """
    if n < 2:
        raise DomainError(f"predict_parabolic needs n >= 2, got {n}")
    log_n2 = math.log(float(n) * n)
    x = log_n2 - math.log(log_n2)
    return AsymptoticPrediction(
        family=PARABOLIC,
        n=n,
        x_pred=x,
        y_pred=math.pi * (1.0 - 1.0 / x),
        order_note="drops O(ln ln n / ln n) in x and O(1/x^2) in y",
        x_lambert=solve_xexp(float(n) * n).x,
    )


def predict_hyperbolic(n: int) -> AsymptoticPrediction:
    """
    Leading-order unstable root of lambda^2 + n^2 exp(-lambda).

    eta = 2(ln(n/2) - ln ln(n/2)) approximates the solution of
    eta^2 exp(eta) = n^2; delta = 2 pi / (eta + 2) is the angular defect.

    Raises:
        DomainError: If n < 6
    """
    if n < 6:
        raise DomainError(f"predict_hyperbolic needs n >= 6, got {n}")
    half = math.log(n / 2.0)
    eta = 2.0 * (half - math.log(half))
    delta = 2.0 * math.pi / (eta + 2.0)
    return AsymptoticPrediction(
        family=HYPERBOLIC,
        n=n,
        x_pred=2.0 * math.pi / delta - 2.0,
        y_pred=math.pi - delta,
        order_note="drops O(ln ln n / ln n) in x; '+' branch t = (1 - cos y)/sin y only",
        x_lambert=solve_x2exp(float(n) * n).x,
    )


def admissible_indices(N: int, start: int = 1) -> List[AdmissibleIndex]:
    """All n in [start, N] with cos n > 1/4 and cos(n+1) < -1/4, ascending."""
    if N < max(start, 1):
        return []
    n = np.arange(max(start, 1), N + 1)
    cos_n, cos_n1 = np.cos(n), np.cos(n + 1)
    mask = (cos_n > ALPHA) & (cos_n1 < -ALPHA)
    return [
        AdmissibleIndex(n=int(i), cos_n=float(a), cos_n1=float(b))
        for i, a, b in zip(n[mask], cos_n[mask], cos_n1[mask])
    ]


def u_function(n: int, y: float) -> float:
    """
    Bracketing function whose zero on [n, n+1] is the imaginary part of the
    perturbed-hyperbolic root:

        U_n(y) = Phi(n^2 sin y / 2y) + (y cos y - sqrt(y^2 - n^2 sin^2 y)) / sin y

    with Phi the inverse of x exp(x).

    Raises:
        DomainError: If y is outside [n, n+1], sin y <= 0 or the radicand is negative
    """
    y = float(y)
    if not n <= y <= n + 1:
        raise DomainError(f"u_function needs y in [{n}, {n + 1}], got {y}")
    s = math.sin(y)
    if s <= 0:
        raise DomainError(f"sin({y}) = {s} is not positive")
    radicand = y * y - float(n) * n * s * s
    if radicand < 0:
        raise DomainError(f"Negative radicand {radicand} at y={y}")
    phi = solve_xexp(float(n) * n * s / (2.0 * y)).x
    return phi + (y * math.cos(y) - math.sqrt(radicand)) / s


def find_perturbed_root(index: Union[AdmissibleIndex, int], tol: float = NEWTON_TOL) -> Root:
    """
    Locate the unstable perturbed-hyperbolic root with Im in (n, n+1).

    Args:
        index: An admissible index (or its integer value)
        tol: Relative residual required after refinement

    Returns:
        The refined Root

    Raises:
        NoBracketError: If u_function has no sign change on [n, n+1]
        SubdivisionLimitError: If refinement stalls above tol
    """
    n = index.n if isinstance(index, AdmissibleIndex) else int(index)
    lo, hi = u_function(n, n), u_function(n, n + 1)
    if not (lo > 0 > hi or lo < 0 < hi):
        raise NoBracketError(
            f"U_{n} has no sign change on [{n}, {n + 1}] (U(n)={lo:.4g}, U(n+1)={hi:.4g})",
            {"n": n, "u_low": lo, "u_high": hi},
        )

    y_n = bisect(lambda y: u_function(n, y), float(n), float(n + 1), xtol=BISECT_XTOL)
    x_n = solve_xexp(float(n) * n * math.sin(y_n) / (2.0 * y_n)).x
    logger.debug(f"Perturbed n={n}: bracket root y={y_n:.12g}, x={x_n:.12g}")

    mode = PERTURBED.mode(n)
    z, residual, _ = newton_refine(PERTURBED, mode, complex(x_n, y_n))
    if residual > tol:
        raise SubdivisionLimitError(f"Refinement stalled at residual {residual:.2e} for n={n}")
    return Root(family=PERTURBED, n=n, re=z.real, im=z.imag, residual=residual, method=RootMethod.NEWTON_REFINED)


def predict_perturbed(n: int) -> AsymptoticPrediction:
    """
    Leading-order real part ln n - ln ln n of the perturbed-hyperbolic root;
    the imaginary part is only known to lie in (n, n+1).

    Raises:
        DomainError: If n < 3
    """
    if n < 3:
        raise DomainError(f"predict_perturbed needs n >= 3, got {n}")
    log_n = math.log(n)
    return AsymptoticPrediction(
        family=PERTURBED,
        n=n,
        x_pred=log_n - math.log(log_n),
        y_pred=n + 0.5,
        order_note="drops O(ln ln n / ln n) in x; y is the midpoint of the bracket (n, n+1)",
    )


def mc_roots(n: int) -> Tuple[complex, complex]:
    """Exact Maxwell-Cattaneo roots (-1 +/- i sqrt(4n^2 - 1)) / 2."""
    if n < 1:
        raise DomainError(f"mc_roots needs n >= 1, got {n}")
    half_im = math.sqrt(4.0 * n * n - 1.0) / 2.0
    return complex(-0.5, half_im), complex(-0.5, -half_im)


def mc_expansion(n: int) -> AsymptoticPrediction:
    if n < 1:
        raise DomainError(f"mc_expansion needs n >= 1, got {n}")
    return AsymptoticPrediction(
        family=MAXWELL,
        n=n,
        x_pred=-0.5,
        y_pred=n * (1.0 - 1.0 / (8.0 * n * n)),
        order_note="drops O(1/n^3) in y",
    )


def predict_branch(n: int, k: int, sign: int = 1) -> AsymptoticPrediction:
    """
    Far-branch parabolic-delay root for fixed n and large k.

    The sign selects the upper (+1) or the conjugate lower (-1) branch and
    applies to the imaginary part only.

    Raises:
        DomainError: If k < 1 or sign is not +/-1
    """
    if k < 1:
        raise DomainError(f"predict_branch needs k >= 1, got {k}")
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    y = math.pi / 2.0 + 2.0 * math.pi * k
    return AsymptoticPrediction(
        family=PARABOLIC,
        n=n,
        k=k,
        x_pred=math.log(float(n) * n) - math.log(y) + 1.0 / (2.0 * k),
        y_pred=sign * y,
        order_note="drops o(1/k) in x and O(ln k / k) in y; sign on Im only",
    )


def refine_prediction(prediction: AsymptoticPrediction, tol: float = NEWTON_TOL) -> Root:
    """
    Newton-refine a prediction against its family's symbol.

    Raises:
        SubdivisionLimitError: If Newton does not reach tol
    """
    family = prediction.family
    mode = family.mode(prediction.n)
    z, residual, _ = newton_refine(family, mode, prediction.value)
    if residual > tol:
        raise SubdivisionLimitError(
            f"Newton from {prediction.value:.6g} stalled at residual {residual:.2e}",
            {"n": prediction.n, "k": prediction.k},
        )
    return Root(
        family=family, n=prediction.n, k=prediction.k, re=z.real, im=z.imag,
        residual=residual, method=RootMethod.NEWTON_REFINED,
    )
