"""
Root finder module for the spectral toolkit.

This module locates characteristic roots inside rectangles by counting zeros
with the argument principle (tracked phase increments along the contour),
isolating them by quadrisection and polishing them with damped Newton steps.
It also certifies the unstable root that the log-form equation

    lambda + b ln(lambda) - w = 0,   w = ln(mu) + i*pi

pins down inside a Rouche disk (b = 1 for parabolic-delay, b = 2 for
hyperbolic-delay).
"""

import cmath
import math
import logging
from enum import Enum
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .exceptions import (
    BoundaryTooCloseError,
    BranchCutError,
    DomainError,
    MarginNonPositiveError,
    NonFiniteError,
    OverflowGuardError,
    SubdivisionLimitError,
    WindingMismatchError,
)
from .symbols import (
    FamilyKind,
    Mode,
    SymbolFamily,
    derivative,
    evaluate,
    relative_residual,
    residual_scale,
)

logger = logging.getLogger(__name__)

NEWTON_TOL = 1e-9
GUARD_EPS = 1e-8
MAX_DEPTH = 40
PERTURBATION_BUDGET = 8
DILATION = 1.01
ROUCHE_SAMPLES = 4096
MAX_NEWTON_STEPS = 60
MAX_CONTOUR_SAMPLES = 1 << 20
SAMPLES_PER_UNIT = 4.0
MACHINE_EPS = 2.220446049250313e-16

# Split points tried in turn when a child contour passes too close to a zero
SPLIT_FRACTIONS = [
    (0.5, 0.5), (0.47, 0.53), (0.53, 0.47), (0.44, 0.56),
    (0.56, 0.44), (0.41, 0.59), (0.59, 0.41), (0.38, 0.62),
]


class RootMethod(str, Enum):
    WINDING_SUBDIVISION = "winding_subdivision"
    NEWTON_REFINED = "newton_refined"
    CERTIFIED_ROUCHE = "certified_rouche"
    CLOSED_FORM = "closed_form"


class Root(BaseModel):
    """A located characteristic root with its provenance."""

    family: SymbolFamily = Field(..., description="The symbol family")
    n: int = Field(..., ge=1, description="Mode index")
    k: Optional[int] = Field(None, description="Branch index, when the root belongs to a named branch")
    re: float = Field(..., description="Real part")
    im: float = Field(..., description="Imaginary part")
    residual: float = Field(..., ge=0, description="|F| / (|lambda|^2 + mu + 1)")
    method: RootMethod = Field(..., description="How the root was obtained")
    certified: bool = Field(False, description="Whether a Rouche certificate holds")
    rouche_margin: Optional[float] = Field(None, description="Margin of the certifying Rouche inequality")

    @model_validator(mode="after")
    def _certificate_needs_margin(self) -> "Root":
        if self.certified and not (self.rouche_margin is not None and self.rouche_margin > 0):
            raise ValueError("certified roots need a positive rouche_margin")
        return self

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class Contour(BaseModel):
    """Common fields of the closed contours used for zero counting."""

    model_config = ConfigDict(frozen=True)

    boundary_samples: int = Field(64, ge=64, description="Minimum number of boundary samples")

    @property
    def perimeter(self) -> float:
        raise NotImplementedError

    def boundary_points(self, count: int) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z: complex) -> bool:
        raise NotImplementedError


class Rectangle(Contour):
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    shape: Literal["rectangle"] = "rectangle"
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @model_validator(mode="after")
    def _positive_area(self) -> "Rectangle":
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("rectangle must have positive area")
        return self

    @classmethod
    def from_bounds(cls, bounds, **kwargs) -> "Rectangle":
        x_min, x_max, y_min, y_max = (float(v) for v in bounds)
        return cls(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, **kwargs)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.width + self.height)

    def boundary_points(self, count: int) -> np.ndarray:
        corners = [
            complex(self.x_min, self.y_min),
            complex(self.x_max, self.y_min),
            complex(self.x_max, self.y_max),
            complex(self.x_min, self.y_max),
        ]
        pieces = []
        for start, end in zip(corners, corners[1:] + corners[:1]):
            m = max(2, int(math.ceil(count * abs(end - start) / self.perimeter)))
            pieces.append(start + (end - start) * (np.arange(m) / m))
        return np.concatenate(pieces)

    def contains(self, z: complex) -> bool:
        return self.x_min <= z.real <= self.x_max and self.y_min <= z.imag <= self.y_max

    def dilate(self, factor: float) -> "Rectangle":
        c = self.center
        half_w, half_h = 0.5 * factor * self.width, 0.5 * factor * self.height
        return Rectangle(
            x_min=c.real - half_w, x_max=c.real + half_w,
            y_min=c.imag - half_h, y_max=c.imag + half_h,
            boundary_samples=self.boundary_samples,
        )

    def split(self, fx: float = 0.5, fy: float = 0.5) -> List["Rectangle"]:
        xm = self.x_min + fx * self.width
        ym = self.y_min + fy * self.height
        spans = [
            (self.x_min, xm, self.y_min, ym),
            (xm, self.x_max, self.y_min, ym),
            (self.x_min, xm, ym, self.y_max),
            (xm, self.x_max, ym, self.y_max),
        ]
        return [Rectangle.from_bounds(s, boundary_samples=self.boundary_samples) for s in spans]


class Circle(Contour):
    """Circle |lambda - center| = radius."""

    shape: Literal["circle"] = "circle"
    center_re: float
    center_im: float
    radius: float = Field(..., gt=0)

    @classmethod
    def around(cls, center: complex, radius: float, **kwargs) -> "Circle":
        return cls(center_re=float(center.real), center_im=float(center.imag), radius=float(radius), **kwargs)

    @property
    def center(self) -> complex:
        return complex(self.center_re, self.center_im)

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def boundary_points(self, count: int) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(count) / count)

    def contains(self, z: complex) -> bool:
        return abs(z - self.center) < self.radius


def _count_zeros(
    func: Callable[[np.ndarray], np.ndarray],
    scale: Callable[[np.ndarray], np.ndarray],
    contour: Contour,
    density: float,
    guard_eps: float = GUARD_EPS,
) -> int:
    """
    Argument-principle zero count by summing phase increments of func.

    Sampling doubles until every increment is below pi/2, which makes the
    rounded sum exact.
    """
    count = max(contour.boundary_samples, int(math.ceil(density * contour.perimeter)))
    while True:
        z = contour.boundary_points(count)
        f = func(z)
        if not np.all(np.isfinite(f)):
            raise OverflowGuardError("Non-finite symbol value on the contour")

        closeness = np.abs(f) / scale(z)
        nearest = int(np.argmin(closeness))
        if closeness[nearest] <= guard_eps:
            raise BoundaryTooCloseError(
                f"Zero within the guard band near {complex(z[nearest]):.6g}",
                {"point": [float(z[nearest].real), float(z[nearest].imag)]},
            )

        increments = np.angle(np.roll(f, -1) / f)
        if np.max(np.abs(increments)) < 0.5 * np.pi:
            winding = float(np.sum(increments)) / (2.0 * np.pi)
            logger.debug(f"Winding {winding:.6f} from {len(z)} samples")
            return int(round(winding))

        count *= 2
        if count > MAX_CONTOUR_SAMPLES:
            raise BoundaryTooCloseError(
                f"Argument increments unresolved after {MAX_CONTOUR_SAMPLES} samples",
                {"samples": MAX_CONTOUR_SAMPLES},
            )


def _symbol_density(family: SymbolFamily) -> float:
    if family.kind.has_delay:
        return SAMPLES_PER_UNIT * max(family.h, 1.0)
    return SAMPLES_PER_UNIT


def winding_number(family: SymbolFamily, mode: Mode, contour: Contour, guard_eps: float = GUARD_EPS) -> int:
    """
    Count the zeros of F_n inside a contour, with multiplicity.

    Args:
        family: The symbol family
        mode: The Fourier mode
        contour: A Rectangle or Circle
        guard_eps: Relative guard band for |F| on the contour

    Returns:
        The number of enclosed zeros

    Raises:
        BoundaryTooCloseError: If a zero lies within the guard band
        OverflowGuardError: If the contour leaves the exponential range
    """
    return _count_zeros(
        lambda z: evaluate(family, mode, z),
        lambda z: residual_scale(mode, z),
        contour,
        _symbol_density(family),
        guard_eps,
    )


def newton_refine(
    family: SymbolFamily,
    mode: Mode,
    start: complex,
    max_iter: int = MAX_NEWTON_STEPS,
) -> Tuple[complex, float, int]:
    """
    Damped Newton refinement of a root of F_n.

    The step is halved while |F| fails to decrease; iteration stops when the
    step reaches rounding level or no decreasing step exists.

    Args:
        family: The symbol family
        mode: The Fourier mode
        start: Initial guess
        max_iter: Iteration cap

    Returns:
        (root, relative residual, iterations used)
    """
    z = complex(start)
    fz = evaluate(family, mode, z)
    iterations = 0

    for iterations in range(1, max_iter + 1):
        dz = derivative(family, mode, z)
        if dz == 0 or not cmath.isfinite(dz):
            break
        step = fz / dz

        accepted = None
        for _ in range(40):
            trial = z - step
            try:
                ft = evaluate(family, mode, trial)
            except (OverflowGuardError, NonFiniteError):
                ft = None
            if ft is not None and abs(ft) < abs(fz):
                accepted = (trial, ft)
                break
            step *= 0.5
        if accepted is None:
            break

        converged = abs(step) <= 4 * MACHINE_EPS * max(1.0, abs(accepted[0]))
        z, fz = accepted
        if converged or fz == 0:
            break

    residual = relative_residual(family, mode, z)
    logger.debug(f"Newton on {family.token} n={mode.n}: {z:.12g} after {iterations} steps, residual {residual:.2e}")
    return z, residual, iterations


def _settle_box(
    family: SymbolFamily,
    mode: Mode,
    box: Rectangle,
    guard_eps: float,
    perturbation_budget: int,
) -> Tuple[Rectangle, int]:
    """Count zeros in box, dilating it when a zero sits in the guard band."""
    for attempt in range(perturbation_budget + 1):
        try:
            return box, winding_number(family, mode, box, guard_eps)
        except BoundaryTooCloseError as e:
            if attempt == perturbation_budget:
                raise BoundaryTooCloseError(
                    f"Box still too close to a zero after {perturbation_budget} dilations: {e}",
                    e.detail,
                )
            logger.warning(f"Dilating box by {DILATION} (attempt {attempt + 1}): {e}")
            box = box.dilate(DILATION)


def _split(
    family: SymbolFamily,
    mode: Mode,
    cell: Rectangle,
    count: int,
    guard_eps: float,
) -> List[Tuple[Rectangle, int]]:
    for fx, fy in SPLIT_FRACTIONS:
        children = cell.split(fx, fy)
        try:
            counts = [winding_number(family, mode, child, guard_eps) for child in children]
        except BoundaryTooCloseError as e:
            logger.debug(f"Split ({fx}, {fy}) rejected: {e}")
            continue
        if sum(counts) != count or min(counts) < 0:
            logger.warning(f"Split ({fx}, {fy}) counts {counts} do not add up to {count}; retrying")
            continue
        return list(zip(children, counts))

    raise BoundaryTooCloseError(
        f"No admissible split for cell {cell.x_min:g},{cell.x_max:g},{cell.y_min:g},{cell.y_max:g}"
    )


def _isolate(family: SymbolFamily, mode: Mode, cell: Rectangle, tol: float) -> Optional[Root]:
    """Newton from the cell centre; the result must stay in the cell."""
    try:
        z, residual, _ = newton_refine(family, mode, cell.center)
    except OverflowGuardError:
        return None
    if residual > tol or not cell.contains(z):
        return None
    return Root(
        family=family, n=mode.n, re=z.real, im=z.imag,
        residual=residual, method=RootMethod.NEWTON_REFINED,
    )


def find_roots(
    family: SymbolFamily,
    mode: Mode,
    box: Rectangle,
    tol: float = NEWTON_TOL,
    max_depth: int = MAX_DEPTH,
    guard_eps: float = GUARD_EPS,
    perturbation_budget: int = PERTURBATION_BUDGET,
) -> List[Root]:
    """
    Find every root of F_n inside a rectangle.

    Cells are quadrisected until each holds at most one zero, then the zero
    is Newton-refined from the cell centre.

    Args:
        family: The symbol family
        mode: The Fourier mode
        box: The search rectangle
        tol: Relative residual each root must reach
        max_depth: Subdivision depth cap
        guard_eps: Relative guard band for contour counting
        perturbation_budget: Number of box dilations allowed

    Returns:
        Roots sorted by (Re, Im); their number equals the box's winding number

    Raises:
        SubdivisionLimitError: If a cell cannot be resolved within max_depth
        BoundaryTooCloseError: If the box cannot be cleared of its guard band
    """
    box, total = _settle_box(family, mode, box, guard_eps, perturbation_budget)
    logger.info(f"{family.token} n={mode.n}: {total} zero(s) in box")

    roots: List[Root] = []
    pending = [(box, total, 0)]
    while pending:
        cell, count, depth = pending.pop()
        if count <= 0:
            continue
        if count == 1:
            root = _isolate(family, mode, cell, tol)
            if root is not None:
                roots.append(root)
                continue
        if depth >= max_depth:
            centroid = cell.center
            raise SubdivisionLimitError(
                f"Depth {max_depth} reached with {count} zero(s) near {centroid:.12g} (suspected multiple root)",
                {
                    "re": centroid.real,
                    "im": centroid.imag,
                    "count": count,
                    "method": RootMethod.WINDING_SUBDIVISION.value,
                    "certified": False,
                },
            )
        pending.extend((child, k, depth + 1) for child, k in _split(family, mode, cell, count, guard_eps))

    roots.sort(key=lambda r: (r.re, r.im))
    return roots


def spectral_abscissa_window(family: SymbolFamily, mode: Mode, box: Rectangle, **kwargs) -> Optional[float]:
    """Largest real part among the roots in box, or None when there are none."""
    roots = find_roots(family, mode, box, **kwargs)
    if not roots:
        return None
    return max(root.re for root in roots)


# Lemma disk certification

def lemma_family(b: int, theta: float = 2.0) -> SymbolFamily:
    """The symbol whose log form carries coefficient b (h = 1)."""
    if b == 1:
        return SymbolFamily(kind=FamilyKind.PARABOLIC_DELAY, h=1.0, theta=theta)
    if b == 2:
        return SymbolFamily(kind=FamilyKind.HYPERBOLIC_DELAY, h=1.0, theta=theta)
    raise DomainError(f"b must be 1 or 2, got {b}")


def lemma_center(mode: Mode) -> complex:
    """w = ln(mu) + i*pi, the centre of the Lemma disk."""
    return complex(math.log(mode.mu), math.pi)


def _crosses_branch_cut(center: complex, radius: float) -> bool:
    if abs(center.imag) > radius:
        return False
    reach = math.sqrt(radius * radius - center.imag * center.imag)
    return center.real - reach <= 0.0


def rouche_margin(
    b: int,
    w: complex,
    samples: int = ROUCHE_SAMPLES,
    center: Optional[complex] = None,
    radius: Optional[float] = None,
) -> float:
    """
    Sampled margin of the Rouche inequality for lambda + b ln(lambda) - w.

    The comparison function is lambda - center, so the perturbation is
    b ln(lambda) + center - w. With the default circle (center w, radius
    |w|/2) this is min(|lambda - w| - |b ln(lambda)|). A Lipschitz bound for
    the gap between samples is subtracted.

    Args:
        b: Log coefficient
        w: Right-hand side of the log-form equation
        samples: Number of circle samples (>= 256)
        center: Circle centre, default w
        radius: Circle radius, default |w|/2

    Returns:
        The margin; positive certifies the Rouche hypothesis

    Raises:
        DomainError: If samples < 256
        BranchCutError: If the circle meets the negative real axis
    """
    if samples < 256:
        raise DomainError(f"rouche_margin needs at least 256 samples, got {samples}")
    w = complex(w)
    center = w if center is None else complex(center)
    radius = abs(w) / 2.0 if radius is None else float(radius)

    if _crosses_branch_cut(center, radius):
        raise BranchCutError(f"Circle |lambda - {center:.6g}| = {radius:.6g} meets the branch cut")

    lam = center + radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    on_cut = (np.abs(lam.imag) <= 1e-12) & (lam.real <= 0.0)
    if np.any(on_cut):
        raise BranchCutError("A Rouche sample lies on the negative real axis")

    perturbation = np.abs(b * np.log(lam) + (center - w))
    slack = b * (2.0 * np.pi * radius / samples) / float(np.min(np.abs(lam)))
    return float(radius - np.max(perturbation) - slack)


def _solve_log_form(b: int, w: complex) -> Optional[complex]:
    """Newton on lambda + b ln(lambda) - w from lambda = w (principal branch)."""
    z = complex(w)
    for _ in range(MAX_NEWTON_STEPS):
        if z == 0:
            return None
        step = (z + b * cmath.log(z) - w) / (1.0 + b / z)
        z_next = z - step
        if not cmath.isfinite(z_next):
            return None
        z = z_next
        if abs(step) <= 4 * MACHINE_EPS * max(1.0, abs(z)):
            break
    if z == 0 or abs(z + b * cmath.log(z) - w) > 1e-10 * (1.0 + abs(w)):
        return None
    return z


def lemma_root(b: int, mode: Mode, tol: float = NEWTON_TOL) -> Root:
    """
    Uncertified root on the log-form branch, polished against the original symbol.

    Raises:
        SubdivisionLimitError: If Newton on the log form or on the symbol fails
    """
    family = lemma_family(b, mode.theta)
    w = lemma_center(mode)
    seed = _solve_log_form(b, w)
    if seed is None:
        raise SubdivisionLimitError(f"Log-form Newton diverged for b={b}, n={mode.n}")
    z, residual, _ = newton_refine(family, mode, seed)
    if residual > tol:
        raise SubdivisionLimitError(f"Newton stalled at residual {residual:.2e} for b={b}, n={mode.n}")
    return Root(family=family, n=mode.n, re=z.real, im=z.imag, residual=residual, method=RootMethod.NEWTON_REFINED)


def _log_form_count(b: int, w: complex, disk: Circle, guard_eps: float) -> int:
    return _count_zeros(
        lambda z: z + b * np.log(z) - w,
        lambda z: np.abs(z) + abs(w) + 1.0,
        disk,
        SAMPLES_PER_UNIT,
        guard_eps,
    )


def certification_disk(
    b: int,
    mode: Mode,
    samples: int = ROUCHE_SAMPLES,
    guard_eps: float = GUARD_EPS,
) -> Tuple[Circle, float]:
    """
    Pick the disk that certifies the unstable root, with its Rouche margin.

    The Lemma disk |lambda - w| < |w|/2 is tried first, then the tightened
    disk centred at the log-form root c with radius |c|/4. A disk is accepted
    when it lies in Re(lambda) > 0, its Rouche margin is positive, and both
    the log form and the original symbol wind exactly once around it.

    Raises:
        MarginNonPositiveError: If no disk has a positive margin in the right half-plane
        WindingMismatchError: If every disk with a positive margin holds other than one zero
    """
    family = lemma_family(b, mode.theta)
    w = lemma_center(mode)
    seed = _solve_log_form(b, w)

    candidates = [("lemma", w, abs(w) / 2.0)]
    if seed is not None:
        candidates.append(("tightened", seed, abs(seed) / 4.0))

    margins, counts = {}, {}
    for name, center, radius in candidates:
        if center.real - radius <= 0:
            logger.debug(f"b={b} n={mode.n}: {name} disk leaves the right half-plane")
            continue
        try:
            margin = rouche_margin(b, w, samples, center, radius)
        except BranchCutError as e:
            logger.debug(f"b={b} n={mode.n}: {name} disk rejected: {e}")
            continue
        margins[name] = margin
        if margin <= 0:
            continue

        disk = Circle.around(center, radius)
        try:
            count = _log_form_count(b, w, disk, guard_eps)
            if count == 1:
                count = winding_number(family, mode, disk, guard_eps)
        except BoundaryTooCloseError as e:
            logger.warning(f"b={b} n={mode.n}: {name} disk too close to a zero: {e}")
            count = None
        counts[name] = count
        if count == 1:
            logger.debug(f"b={b} n={mode.n}: certified on the {name} disk, margin {margin:.4g}")
            return disk, margin
        logger.info(f"b={b} n={mode.n}: {name} disk holds {count} zero(s), trying the next disk")

    detail = {"b": b, "n": mode.n, "margins": margins, "counts": counts}
    if not counts:
        raise MarginNonPositiveError(
            f"No certification disk with a positive Rouche margin for b={b}, n={mode.n} (margins {margins})",
            detail,
        )
    raise WindingMismatchError(
        f"No certification disk holds exactly one zero for b={b}, n={mode.n} (counts {counts})",
        detail,
    )


def certify_unstable(
    b: int,
    mode: Mode,
    samples: int = ROUCHE_SAMPLES,
    tol: float = NEWTON_TOL,
    guard_eps: float = GUARD_EPS,
) -> Root:
    """
    Certify the unstable root of the parabolic (b=1) or hyperbolic (b=2) symbol.

    The disk comes from certification_disk; the root is refined against the
    original symbol and must stay inside it.

    Args:
        b: 1 or 2
        mode: The Fourier mode (mu = n**theta)
        samples: Rouche circle samples
        tol: Relative residual required of the refined root
        guard_eps: Guard band for the disk counts

    Returns:
        A certified Root

    Raises:
        MarginNonPositiveError: If no disk satisfies the Rouche inequality
        WindingMismatchError: If no disk holds exactly one zero or the root escapes
    """
    family = lemma_family(b, mode.theta)
    disk, margin = certification_disk(b, mode, samples, guard_eps)

    seed = _solve_log_form(b, lemma_center(mode))
    start = seed if seed is not None and disk.contains(seed) else disk.center
    z, residual, _ = newton_refine(family, mode, start)
    if residual > tol or not disk.contains(z):
        raise WindingMismatchError(
            f"Refined root {z:.12g} (residual {residual:.2e}) is not the disk's zero for b={b}, n={mode.n}",
            {"b": b, "n": mode.n, "count": 1},
        )

    return Root(
        family=family, n=mode.n, re=z.real, im=z.imag, residual=residual,
        method=RootMethod.CERTIFIED_ROUCHE, certified=True, rouche_margin=margin,
    )
