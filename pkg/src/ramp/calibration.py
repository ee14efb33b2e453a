"""Per-iteration calibration of the proximal scale b.

Each pass of the solver re-fits b on the current adjusted residuals z so
that the average derivative of the effective score matches the target
slope s/n. Smooth-score losses (least squares, Huber) solve the empirical
equation directly by bracketing and bisection. Kinked-score losses
(absolute, quantile) go through a plug-in estimate of the population
slope built from the ECDF and a density estimate, solved on a log grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import losses
from .gauss import norm_pdf
from .losses import LossSpec, effective_score_deriv

# log grid for the b search; widened by a decade per side on failure,
# at most twice
GRID_LO = 1e-4
GRID_HI = 1e2
GRID_POINTS = 400
MAX_EXTENSIONS = 2

SMOOTH_FAMILIES = (losses.LEAST_SQUARES, losses.HUBER)
KINKED_FAMILIES = (losses.ABSOLUTE, losses.QUANTILE)


class CalibrationError(RuntimeError):
    """Raised when the slope equation has no crossing on the search grid.

    Carries the final grid endpoints and the fitted-slope values there, so
    callers can see on which side the target was missed.
    """

    def __init__(self, message, grid_lo=None, grid_hi=None, value_lo=None, value_hi=None):
        super().__init__(message)
        self.grid_lo = grid_lo
        self.grid_hi = grid_hi
        self.value_lo = value_lo
        self.value_hi = value_hi


@dataclass(frozen=True, eq=False)
class CalibrationTarget:
    """Target slope s/n together with the loss and the residuals to fit on."""

    slope: float
    loss: LossSpec
    residuals: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.slope < 1.0:
            raise ValueError("slope must lie strictly inside (0, 1); requires 0 < s < n")
        z = np.atleast_1d(np.asarray(self.residuals, dtype=float))
        if z.ndim != 1 or z.size == 0:
            raise ValueError("residuals must be a nonempty vector")
        object.__setattr__(self, "residuals", z)


@dataclass(frozen=True)
class DensityEstimate:
    """A pointwise-evaluable density estimate fitted on one residual vector.

    eval maps points to density values (vectorized). The two regime flags
    record whether the bandwidth is within an order of magnitude of the
    n^(-1/5) reference rate, i.e. small enough to shrink and large enough
    that n*h still grows.
    """

    eval: Callable
    bandwidth_h: float
    sample_size: int
    degenerate: bool = False
    h_shrinks: bool = True
    nh_grows: bool = True


def _silverman_h(z: np.ndarray) -> float:
    sigma = float(np.std(z, ddof=1)) if z.size > 1 else 0.0
    return 1.06 * sigma * z.size ** (-0.2)


def ecdf(residuals, x):
    """Right-continuous empirical CDF of the residuals, evaluated at x."""
    z = np.atleast_1d(np.asarray(residuals, dtype=float))
    if z.size == 0:
        raise ValueError("residuals must be nonempty")
    zs = np.sort(z)
    out = np.searchsorted(zs, np.asarray(x, dtype=float), side="right") / zs.size
    return out if np.ndim(x) else float(out)


def kde(residuals, bandwidth_h: Optional[float] = None, method: str = "kernel") -> DensityEstimate:
    """Fit a density estimate on the residuals.

    Inputs
    ------
    residuals   : sample of size >= 2
    bandwidth_h : positive bandwidth; Silverman's 1.06*sigma*n^(-1/5) when None
    method      : "kernel" for the Gaussian smoother (default; evaluable
                  anywhere, which the calibration grid search needs), or
                  "window" for the symmetric ECDF difference quotient with
                  half-width h/sqrt(n)

    A degenerate sample (zero spread) yields a spike estimate and sets the
    degenerate flag instead of failing.
    """
    z = np.atleast_1d(np.asarray(residuals, dtype=float))
    if z.size < 2:
        raise ValueError("need at least two residuals for a density estimate")
    n = z.size
    h_ref = _silverman_h(z)
    degenerate = h_ref == 0.0
    if bandwidth_h is None:
        h = h_ref if not degenerate else 1e-6
    else:
        if bandwidth_h <= 0:
            raise ValueError("bandwidth must be positive")
        h = float(bandwidth_h)

    if method == "kernel":
        def evaluate(x, _z=z, _h=h):
            x = np.asarray(x, dtype=float)
            flat = np.atleast_1d(x)
            out = np.empty_like(flat)
            # chunk the evaluation grid so the pairwise matrix stays small
            for start in range(0, flat.size, 64):
                block = flat[start:start + 64]
                out[start:start + 64] = norm_pdf(
                    (block[:, None] - _z[None, :]) / _h).mean(axis=1) / _h
            return out.reshape(x.shape) if x.ndim else float(out[0])
    elif method == "window":
        zs = np.sort(z)
        eps = h / np.sqrt(n)

        def evaluate(x, _zs=zs, _eps=eps, _n=n):
            x = np.asarray(x, dtype=float)
            hi = np.searchsorted(_zs, x + _eps, side="right")
            lo = np.searchsorted(_zs, x - _eps, side="right")
            out = (hi - lo) / (2.0 * _eps * _n)
            return out if x.ndim else float(out)
    else:
        raise ValueError(f"unknown density method {method!r}")

    if degenerate:
        h_shrinks, nh_grows = False, False
    else:
        h_shrinks = h <= 10.0 * h_ref
        nh_grows = h >= 0.1 * h_ref
    return DensityEstimate(eval=evaluate, bandwidth_h=h, sample_size=n,
                           degenerate=degenerate, h_shrinks=h_shrinks, nh_grows=nh_grows)


# ---------------------------------------------------------------------------
# smooth-score calibration: empirical slope equation
# ---------------------------------------------------------------------------

def _empirical_slope(loss: LossSpec, z: np.ndarray, b: float) -> float:
    return float(np.mean(effective_score_deriv(loss, z, b)))


def _base_grid(extensions: int) -> np.ndarray:
    lo = GRID_LO * 10.0 ** (-extensions)
    hi = GRID_HI * 10.0 ** extensions
    return np.geomspace(lo, hi, GRID_POINTS)


def calibrate_smooth(target: CalibrationTarget) -> float:
    """Solve mean_i d1Phi(z_i; b) = slope for b by bracketing + bisection.

    Least squares short-circuits to the closed form slope/(1 - slope).
    The fitted-slope map is nondecreasing in b for both smooth families, so
    a sign change between adjacent grid points brackets the root. Bisection
    runs the bracket down to ~1e-15 relative width and returns its midpoint,
    which doubles as the tie rule b = (b_plus + b_minus)/2 when the
    empirical map steps across the target without touching it.
    """
    if target.loss.family not in SMOOTH_FAMILIES:
        raise ValueError("calibrate_smooth handles least-squares and huber losses only")
    z, slope = target.residuals, target.slope

    if target.loss.family == losses.LEAST_SQUARES:
        # the derivative b/(1+b) does not depend on z, so the root is exact
        return slope / (1.0 - slope)

    for ext in range(MAX_EXTENSIONS + 1):
        grid = _base_grid(ext)
        vals = np.array([_empirical_slope(target.loss, z, b) for b in grid])
        diff = vals - slope
        exact = np.flatnonzero(diff == 0.0)
        if exact.size:
            return float(grid[exact[0]])
        cross = np.flatnonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)
        if cross.size:
            lo, hi = grid[cross[0]], grid[cross[0] + 1]
            break
    else:
        raise CalibrationError(
            "fitted slope never crosses the target on the extended grid",
            grid_lo=grid[0], grid_hi=grid[-1], value_lo=vals[0], value_hi=vals[-1])

    f_lo = _empirical_slope(target.loss, z, lo) - slope
    for _ in range(200):
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        f_mid = _empirical_slope(target.loss, z, mid) - slope
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# kinked-score calibration: plug-in slope on a log grid
# ---------------------------------------------------------------------------

def plugin_slope_curve(loss: LossSpec, b_grid, cdf: Callable, pdf: Callable):
    """Plug-in estimate of E[d1Phi(z; b)] as a curve over b.

    For the absolute loss the estimate is F(b) - F(-b) - b(f(b) + f(-b));
    the quantile version evaluates the window [b(tau-1), b*tau] instead.
    cdf/pdf may be empirical (ECDF + density estimate) or exact functions,
    which is how the tests pin the equations against analytic roots.
    """
    b = np.asarray(b_grid, dtype=float)
    if loss.family == losses.ABSOLUTE:
        return cdf(b) - cdf(-b) - b * (pdf(b) + pdf(-b))
    if loss.family == losses.QUANTILE:
        t = loss.tau_q
        hi = b * t
        lo = b * (t - 1.0)
        return cdf(hi) - cdf(lo) - hi * pdf(hi) + lo * pdf(lo)
    raise ValueError("plug-in calibration applies to absolute and quantile losses only")


def _grid_average_rule(grid: np.ndarray, vals: np.ndarray, slope: float) -> Optional[float]:
    """Average the straddling grid values per the bracketing recipe.

    Scanning in ascending b: for a decreasing curve this averages the first
    value below the target with the last value above it; for an increasing
    curve, the mirrored pair. Exact hits short-circuit. None when the curve
    never crosses.
    """
    hit = np.flatnonzero(vals == slope)
    if hit.size:
        return float(grid[hit[0]])
    below = vals < slope
    above = vals > slope
    if not below.any() or not above.any():
        return None
    increasing = vals[-1] > vals[0]
    if increasing:
        return float(0.5 * (grid[below][-1] + grid[above][0]))
    return float(0.5 * (grid[below][0] + grid[above][-1]))


def calibrate_nonsmooth(target: CalibrationTarget, density: Optional[DensityEstimate] = None) -> float:
    """Grid-search the plug-in slope equation for kinked-score losses.

    Inputs
    ------
    target  : slope, loss (absolute or quantile) and residuals
    density : density estimate for the residuals; default Gaussian-kernel fit

    Returns the average of the two grid values straddling the crossing of
    the plug-in curve with the target slope.
    """
    if target.loss.family not in KINKED_FAMILIES:
        raise ValueError("calibrate_nonsmooth handles absolute and quantile losses only")
    z, slope = target.residuals, target.slope
    if density is None:
        density = kde(z)
    zs = np.sort(z)

    def cdf(x, _zs=zs):
        return np.searchsorted(_zs, x, side="right") / _zs.size

    for ext in range(MAX_EXTENSIONS + 1):
        grid = _base_grid(ext)
        vals = plugin_slope_curve(target.loss, grid, cdf, density.eval)
        b = _grid_average_rule(grid, vals, slope)
        if b is not None:
            return b
    raise CalibrationError(
        "plug-in slope never crosses the target on the extended grid",
        grid_lo=grid[0], grid_hi=grid[-1], value_lo=vals[0], value_hi=vals[-1])


def calibrate(target: CalibrationTarget, density: Optional[DensityEstimate] = None) -> float:
    """Dispatch on the loss family's score smoothness."""
    if target.loss.family in SMOOTH_FAMILIES:
        return calibrate_smooth(target)
    return calibrate_nonsmooth(target, density)
