"""Predictive densities, MAP point predictions and highest-density regions.

Works with any model exposing ``energy_grid(x, ys)`` and
``energy_and_ygrad(x, y)`` in raw output units, which keeps these routines
testable against closed-form stand-ins.  Densities are normalized by
trapezoidal quadrature with log-sum-exp stabilization.
"""

from dataclasses import dataclass

import numpy as np

from .mathutil import log_trapezoid, trapezoid_weights


class GridTooNarrowError(ValueError):
    """The grid leaves too much density mass at its boundary."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform evaluation grid over raw output values."""

    lo: float
    hi: float
    n_points: int = 2048

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("grid needs lo < hi")
        if self.n_points < 16:
            raise ValueError("grid needs at least 16 points")

    @property
    def h(self):
        return (self.hi - self.lo) / (self.n_points - 1)

    @property
    def ys(self):
        return np.linspace(self.lo, self.hi, self.n_points)


def default_grid(standardizer, n_points=2048):
    """Grid spanning the training target range padded by three target stds."""
    pad = 3.0 * standardizer.std_y
    return GridSpec(standardizer.y_min - pad, standardizer.y_max + pad, n_points)


@dataclass
class DensityGrid:
    """Normalized predictive density over a grid, in raw output units."""

    ys: np.ndarray
    density: np.ndarray
    log_partition: float

    def integral(self):
        return float(np.trapezoid(self.density, self.ys))

    def mean(self):
        return float(np.trapezoid(self.ys * self.density, self.ys))

    def std(self):
        m = self.mean()
        var = float(np.trapezoid((self.ys - m) ** 2 * self.density, self.ys))
        return float(np.sqrt(max(var, 0.0)))

    def mode(self):
        return float(self.ys[int(np.argmax(self.density))])


def density(model, x, grid):
    """Normalized predictive density of the output given one regressor.

    Raises
    ------
    GridTooNarrowError
        If more than 1e-3 probability mass sits in a boundary cell, meaning
        the grid clips the distribution.
    """
    ys = grid.ys
    g = np.asarray(model.energy_grid(x, ys), dtype=float)
    log_z = log_trapezoid(g, ys)
    dens = np.exp(g - log_z)
    if dens[0] * grid.h > 1e-3 or dens[-1] * grid.h > 1e-3:
        raise GridTooNarrowError(
            f"density mass at the boundary of [{grid.lo}, {grid.hi}] exceeds "
            "1e-3; widen the grid"
        )
    return DensityGrid(ys, dens, float(log_z))


@dataclass(frozen=True)
class AscentConfig:
    """Gradient-ascent refinement: step size (defaults to grid h / 10) and
    iteration count; the step halves whenever the energy would decrease."""

    step: float | None = None
    iters: int = 50

    def __post_init__(self):
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.iters < 0:
            raise ValueError("iters must be non-negative")


def map_estimate(model, x, grid, ascent=None):
    """Most likely output value: grid argmax refined by gradient ascent.

    The refined value never has lower energy than the best grid point and is
    clamped to the grid bounds.
    """
    ascent = ascent or AscentConfig()
    ys = grid.ys
    g = np.asarray(model.energy_grid(x, ys), dtype=float)
    best_idx = int(np.argmax(g))
    y = float(ys[best_idx])
    step = ascent.step if ascent.step is not None else grid.h / 10.0
    g_y, slope = model.energy_and_ygrad(x, y)
    for _ in range(ascent.iters):
        cand = min(max(y + step * slope, grid.lo), grid.hi)
        g_cand, slope_cand = model.energy_and_ygrad(x, cand)
        if g_cand > g_y:
            y, g_y, slope = cand, g_cand, slope_cand
            step *= 2.0  # grow while improving, so the peak is reached quickly
        else:
            step *= 0.5
    return y


def hdr_intervals(grid, levels):
    """Highest-density regions of a DensityGrid for each probability level.

    Grid cells are ranked by density and accumulated until each level's mass
    is reached, then merged into maximal contiguous intervals; multimodal
    densities yield several disjoint intervals.  Regions of higher levels
    contain those of lower levels.

    Returns a dict mapping level -> list of (lo, hi) tuples.
    """
    dens = grid.density
    mass = dens * trapezoid_weights(grid.ys)
    total = mass.sum()
    order = np.argsort(-dens, kind="stable")
    cum = np.cumsum(mass[order])
    out = {}
    for level in levels:
        if not 0.0 < level < 1.0:
            raise ValueError("levels must lie in (0, 1)")
        k = int(np.searchsorted(cum, level * total))
        k = min(k, len(cum) - 1)
        selected = np.zeros(len(dens), dtype=bool)
        selected[order[:k + 1]] = True
        out[level] = _runs_to_intervals(selected, grid.ys)
    return out


def _runs_to_intervals(selected, ys):
    intervals = []
    start = None
    for i, flag in enumerate(selected):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            intervals.append((float(ys[start]), float(ys[i - 1])))
            start = None
    if start is not None:
        intervals.append((float(ys[start]), float(ys[-1])))
    return intervals


@dataclass
class Prediction:
    """MAP point, highest-density intervals per level, and the full density."""

    map: float
    intervals: dict
    grid: DensityGrid


def predict(model, x, grid, ascent=None, levels=(0.65, 0.95, 0.99)):
    """Full prediction for one regressor: density, MAP point and intervals."""
    dens = density(model, x, grid)
    return Prediction(
        map=map_estimate(model, x, grid, ascent),
        intervals=hdr_intervals(dens, levels),
        grid=dens,
    )


def prediction_to_dict(pred):
    """JSON-ready form: ``{"map": ..., "intervals": {"0.65": [[a, b], ...]}}``."""
    return {
        "map": pred.map,
        "intervals": {
            f"{level:g}": [[a, b] for a, b in ivals]
            for level, ivals in pred.intervals.items()
        },
    }


def density_to_csv(grid, path):
    """Export one density as CSV with columns y,density."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("y,density\n")
        for y_val, d_val in zip(grid.ys, grid.density):
            fh.write(f"{float(y_val)!r},{float(d_val)!r}\n")
