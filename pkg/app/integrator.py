"""
Integrator module for the spectral toolkit.

Method-of-steps integration of the modal delay equations

    parabolic-delay          T'  = -mu T(t-h)
    stable-parabolic-delay   T'  = -mu (T + T(t-h))
    hyperbolic-delay         T'' = -mu T(t-h)
    perturbed-hyperbolic     T'' = -mu (T + T(t-h))
    maxwell-cattaneo         T'' = -T' - mu T

with classical RK4 steps on a grid whose step divides the delay. Midpoint
delayed values come from the exact history while the delayed time is still
in [-h, 0] and from a four-point cubic stencil afterwards. The growth
exponent of a trajectory is fitted to the log of its envelope peaks.
"""

import math
import logging
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.signal import find_peaks
from scipy.stats import linregress

from .exceptions import (
    DomainError,
    GridMismatchError,
    NonFiniteHistoryError,
    TooFewPeaksError,
    UsageError,
)
from .rootfinder import Rectangle, spectral_abscissa_window
from .symbols import FamilyKind, Mode, SymbolFamily

logger = logging.getLogger(__name__)

BLOW_UP = 1e300
MIN_STEPS_PER_DELAY = 50
MAX_DELAYS = 200
MIN_PEAKS = 10
RELIABLE_R_SQUARED = 0.9
CROSS_VALIDATE_DELAYS = 80
CROSS_VALIDATE_STEPS = 100
DEFAULT_BOX = (-5.0, 10.0, -50.0, 50.0)


class HistoryKind(str, Enum):
    CONSTANT = "constant"
    SINUSOID = "sinusoid"
    POLYNOMIAL = "polynomial"


class HistorySpec(BaseModel):
    """
    Initial history on [-h, 0].

    constant:    params = [c]
    sinusoid:    params = [amplitude, frequency, phase], amplitude*sin(frequency*t + phase)
    polynomial:  params = [c0, c1, ...], c0 + c1*t + ...

    derivative_history seeds T'(0) for second-order families (zero when unset).
    """

    kind: HistoryKind = Field(HistoryKind.CONSTANT, description="History shape")
    params: List[float] = Field(default_factory=lambda: [1.0], description="Shape parameters")
    derivative_history: Optional["HistorySpec"] = Field(None, description="History of T' (second order)")

    @classmethod
    def parse(cls, text: str, derivative: Optional[str] = None) -> "HistorySpec":
        """Parse 'constant:1', 'sinusoid:A,f,phi' or 'polynomial:c0,c1,...'."""
        name, _, rest = text.partition(":")
        try:
            kind = HistoryKind(name.strip().lower())
            params = [float(p) for p in rest.split(",") if p.strip()]
        except ValueError:
            raise UsageError(f"Cannot parse history '{text}'")

        expected = {HistoryKind.CONSTANT: 1, HistoryKind.SINUSOID: 3}
        if kind in expected and len(params) != expected[kind]:
            raise UsageError(f"History '{kind.value}' needs {expected[kind]} parameter(s), got {len(params)}")
        if kind is HistoryKind.POLYNOMIAL and not params:
            raise UsageError("Polynomial history needs at least one coefficient")

        return cls(
            kind=kind,
            params=params,
            derivative_history=cls.parse(derivative) if derivative else None,
        )

    def scaled(self, factor: float) -> "HistorySpec":
        """The same history multiplied by factor."""
        params = list(self.params)
        if self.kind is HistoryKind.SINUSOID:
            params[0] *= factor
        else:
            params = [p * factor for p in params]
        derivative = self.derivative_history.scaled(factor) if self.derivative_history else None
        return HistorySpec(kind=self.kind, params=params, derivative_history=derivative)

    def __call__(self, t: float) -> float:
        if self.kind is HistoryKind.CONSTANT:
            return self.params[0]
        if self.kind is HistoryKind.SINUSOID:
            amplitude, frequency, phase = self.params
            return amplitude * math.sin(frequency * t + phase)
        value = 0.0
        for c in reversed(self.params):
            value = value * t + c
        return value


class Trajectory(BaseModel):
    """A sampled modal solution on [0, t_end]."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    family: SymbolFamily
    n: int = Field(..., ge=1)
    h: float = Field(..., gt=0)
    dt: float = Field(..., gt=0)
    times: np.ndarray
    values: np.ndarray
    derivative_values: Optional[np.ndarray] = None
    blow_up_index: Optional[int] = Field(None, description="First step not recorded because |T| > 1e300")
    delay_free: bool = False

    def export(self, path: str) -> None:
        """Write whitespace-delimited columns t, value[, derivative]."""
        columns = [self.times, self.values]
        if self.derivative_values is not None:
            columns.append(self.derivative_values)
        np.savetxt(path, np.column_stack(columns), fmt="%.16e")
        logger.info(f"Wrote {len(self.times)} samples to {path}")


class GrowthEstimate(BaseModel):
    sigma_hat: float = Field(..., description="Fitted exponential rate")
    r_squared: float = Field(..., ge=0, le=1)
    fit_window: Tuple[float, float]
    peaks_used: int = Field(..., ge=MIN_PEAKS)
    reliable: bool = Field(..., description="r_squared >= 0.9")


class CrossValidation(BaseModel):
    family: str
    n: int
    sigma_hat: float
    r_squared: float
    abscissa: Optional[float] = None
    rel_error: Optional[float] = None


def _grid_ratio(h: float, dt: float) -> int:
    if dt <= 0:
        raise GridMismatchError(f"dt must be positive, got {dt}")
    ratio = h / dt
    m = int(round(ratio))
    if abs(ratio - m) > 1e-9 * max(1.0, ratio) or m < MIN_STEPS_PER_DELAY:
        raise GridMismatchError(
            f"dt={dt:g} must equal h/m for an integer m >= {MIN_STEPS_PER_DELAY} (h={h:g})",
            {"h": h, "dt": dt},
        )
    return m


def _right_hand_side(kind: FamilyKind, mu: float) -> Callable[[float, float, float], Tuple[float, float]]:
    """(T, V, T_delayed) -> (T', V'); V is unused by first-order families."""
    if kind is FamilyKind.PARABOLIC_DELAY:
        return lambda y, v, d: (-mu * d, 0.0)
    if kind is FamilyKind.STABLE_PARABOLIC_DELAY:
        return lambda y, v, d: (-mu * (y + d), 0.0)
    if kind is FamilyKind.HYPERBOLIC_DELAY:
        return lambda y, v, d: (v, -mu * d)
    if kind is FamilyKind.PERTURBED_HYPERBOLIC:
        return lambda y, v, d: (v, -mu * (y + d))
    return lambda y, v, d: (v, -v - mu * y)


def simulate_mode(
    family: SymbolFamily,
    mode: Mode,
    history: HistorySpec,
    t_end: float,
    dt: float,
    delay_free: bool = False,
) -> Trajectory:
    """
    Integrate one modal equation on [0, t_end].

    Args:
        family: The symbol family (supplies h)
        mode: The Fourier mode (supplies mu)
        history: Initial history on [-h, 0]
        t_end: Final time, at most 200 h
        dt: Step, h/m for an integer m >= 50
        delay_free: Evaluate the delayed term at the current time instead

    Returns:
        The Trajectory, truncated before the first step with |T| > 1e300

    Raises:
        GridMismatchError: If dt does not divide h
        DomainError: If t_end is not in (0, 200 h]
        NonFiniteHistoryError: If the history is not finite on [-h, 0]
    """
    h = family.h
    m = _grid_ratio(h, dt)
    if not 0 < t_end <= MAX_DELAYS * h:
        raise DomainError(f"t_end must lie in (0, {MAX_DELAYS}h], got {t_end:g}")
    steps = int(round(t_end / dt))

    # buffer index i holds t = (i - m) dt; indices 0..m are the history
    y = [history((j - m) * dt) for j in range(m + 1)]
    if not all(math.isfinite(v) for v in y):
        raise NonFiniteHistoryError(f"History is not finite on [-{h:g}, 0]")
    v = history.derivative_history(0.0) if history.derivative_history else 0.0
    if not math.isfinite(v):
        raise NonFiniteHistoryError("Derivative history is not finite at 0")

    second_order = family.kind.order == 2
    f = _right_hand_side(family.kind, mode.mu)
    derivative = [v]
    blow_up_index = None
    half = 0.5 * dt

    for step in range(steps):
        i = m + step
        y0, v0 = y[i], derivative[-1]

        d = i - m
        if delay_free:
            d0 = dmid = d1 = None
        else:
            d0, d1 = y[d], y[d + 1]
            if d + 1 <= m:
                dmid = history((d - m + 0.5) * dt)
            else:
                dmid = (-y[d - 1] + 9.0 * (y[d] + y[d + 1]) - y[d + 2]) / 16.0

        k1y, k1v = f(y0, v0, y0 if delay_free else d0)
        y2, v2 = y0 + half * k1y, v0 + half * k1v
        k2y, k2v = f(y2, v2, y2 if delay_free else dmid)
        y3, v3 = y0 + half * k2y, v0 + half * k2v
        k3y, k3v = f(y3, v3, y3 if delay_free else dmid)
        y4, v4 = y0 + dt * k3y, v0 + dt * k3v
        k4y, k4v = f(y4, v4, y4 if delay_free else d1)

        y_next = y0 + dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        v_next = v0 + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if not (math.isfinite(y_next) and abs(y_next) <= BLOW_UP and math.isfinite(v_next)):
            blow_up_index = step + 1
            logger.warning(f"{family.token} n={mode.n}: blow-up at t={(step + 1) * dt:g}, recording stops")
            break
        y.append(y_next)
        derivative.append(v_next)

    values = np.asarray(y[m:], dtype=float)
    times = dt * np.arange(len(values))
    logger.debug(f"{family.token} n={mode.n}: {len(values) - 1} steps of dt={dt:g}")
    return Trajectory(
        family=family,
        n=mode.n,
        h=h,
        dt=dt,
        times=times,
        values=values,
        derivative_values=np.asarray(derivative, dtype=float) if second_order else None,
        blow_up_index=blow_up_index,
        delay_free=delay_free,
    )


def _refine_peak(log_a: np.ndarray, times: np.ndarray, p: int, dt: float) -> Tuple[float, float]:
    """Vertex of the parabola through three log-amplitude samples."""
    la, lb, lc = log_a[p - 1], log_a[p], log_a[p + 1]
    curvature = la - 2.0 * lb + lc
    if not (np.isfinite(la) and np.isfinite(lc)) or curvature >= 0:
        return times[p], lb
    offset = 0.5 * (la - lc) / curvature
    return times[p] + offset * dt, lb - 0.25 * (la - lc) * offset


def estimate_growth(traj: Trajectory, window_fraction: float = 0.75) -> GrowthEstimate:
    """
    Fit the exponential rate of the |T| envelope over the trailing window.

    Args:
        traj: The trajectory
        window_fraction: Trailing fraction of the span used for the fit

    Returns:
        The GrowthEstimate

    Raises:
        DomainError: If window_fraction is not in (0, 1]
        TooFewPeaksError: If fewer than 10 envelope peaks fall in the window
    """
    if not 0 < window_fraction <= 1:
        raise DomainError(f"window_fraction must lie in (0, 1], got {window_fraction}")
    times = traj.times
    t_end = float(times[-1])
    t_start = t_end - window_fraction * (t_end - float(times[0]))

    window = times >= t_start
    amplitude = np.abs(traj.values[window])
    t_window = times[window]
    peaks, _ = find_peaks(amplitude)
    if len(peaks) < MIN_PEAKS:
        raise TooFewPeaksError(
            f"Only {len(peaks)} envelope peaks in [{t_start:g}, {t_end:g}], need {MIN_PEAKS}",
            {"peaks": int(len(peaks))},
        )

    with np.errstate(divide="ignore"):
        log_a = np.log(amplitude)
    refined = [_refine_peak(log_a, t_window, int(p), traj.dt) for p in peaks]
    peak_times, peak_logs = zip(*refined)

    fit = linregress(peak_times, peak_logs)
    r_squared = float(min(1.0, max(0.0, fit.rvalue ** 2)))
    logger.debug(f"Growth fit over {len(peaks)} peaks: slope {fit.slope:.6g}, r^2 {r_squared:.4f}")
    return GrowthEstimate(
        sigma_hat=float(fit.slope),
        r_squared=r_squared,
        fit_window=(t_start, t_end),
        peaks_used=len(peaks),
        reliable=r_squared >= RELIABLE_R_SQUARED,
    )


def cross_validate(
    family: SymbolFamily,
    mode: Mode,
    box: Optional[Rectangle] = None,
    window_fraction: float = 0.75,
    dt: Optional[float] = None,
    **root_options,
) -> CrossValidation:
    """
    Compare the simulated growth rate with the spectral abscissa in a box.

    Runs Constant(1) history (zero derivative history) to t_end = 80 h with
    dt = h/100 unless dt is given.
    """
    box = box or Rectangle.from_bounds(DEFAULT_BOX)
    h = family.h
    trajectory = simulate_mode(
        family, mode, HistorySpec(), CROSS_VALIDATE_DELAYS * h, dt or h / CROSS_VALIDATE_STEPS
    )
    growth = estimate_growth(trajectory, window_fraction)
    abscissa = spectral_abscissa_window(family, mode, box, **root_options)

    rel_error = None
    if abscissa is not None:
        rel_error = abs(growth.sigma_hat - abscissa) / max(1.0, abs(abscissa))
    logger.info(f"{family.token} n={mode.n}: sigma_hat={growth.sigma_hat:.6g}, abscissa={abscissa}")
    return CrossValidation(
        family=family.token,
        n=mode.n,
        sigma_hat=growth.sigma_hat,
        r_squared=growth.r_squared,
        abscissa=abscissa,
        rel_error=rel_error,
    )
