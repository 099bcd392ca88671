"""Coverage-map interpolation by harmonic relaxation.

Sparse drive-test samples become Dirichlet constraints on a regular
grid; every free cell is relaxed to the mean of its neighbors until the
discrete Laplace residual falls below tolerance. The result inherits
the maximum principle: interpolated values never leave the sample
range, which is what makes the map trustworthy between roads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = ["CoverageGrid", "CoverageFit", "fit_coverage_map", "grid_to_csv", "grid_from_csv"]


@dataclass
class CoverageGrid:
    origin_x_m: float
    origin_y_m: float
    cell_size_m: float
    values: np.ndarray  # shape (ny, nx), row i is y = origin_y + i*cell
    sample_mask: np.ndarray  # True where a cell is a pinned sample

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        j = int(round((x - self.origin_x_m) / self.cell_size_m))
        i = int(round((y - self.origin_y_m) / self.cell_size_m))
        return i, j


@dataclass
class CoverageFit:
    grid: CoverageGrid
    residual: float
    iterations: int
    converged: bool


def _neighbor_mean(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean of the available 4-neighbors (edge cells average fewer)."""
    total = np.zeros_like(values)
    count = np.zeros_like(values)
    total[1:, :] += values[:-1, :]
    count[1:, :] += 1
    total[:-1, :] += values[1:, :]
    count[:-1, :] += 1
    total[:, 1:] += values[:, :-1]
    count[:, 1:] += 1
    total[:, :-1] += values[:, 1:]
    count[:, :-1] += 1
    return total, count


def fit_coverage_map(
    samples: Iterable[tuple[float, float, float]],
    bounds: tuple[float, float, float, float],
    cell_size_m: float,
    tol: float = 1e-6,
    max_iters: int = 20000,
    omega: float = 1.9,
) -> CoverageFit:
    """Fit a harmonic surface through (x, y, value) samples.

    bounds is (x_min, y_min, x_max, y_max); cells are lattice points
    spaced cell_size_m apart. Relaxation is red-black SOR; when the
    iteration cap is hit before the residual drops under tol the result
    is returned flagged non-converged rather than raised.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("at least one sample is required")
    if cell_size_m <= 0:
        raise ValueError("cell_size_m must be positive")
    if not 0 < omega < 2:
        raise ValueError("omega must lie in (0, 2) for SOR stability")
    x0, y0, x1, y1 = bounds
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bounds must describe a non-empty rectangle")
    nx = int(round((x1 - x0) / cell_size_m)) + 1
    ny = int(round((y1 - y0) / cell_size_m)) + 1
    if nx < 3 or ny < 3:
        raise ValueError("grid must be at least 3x3 cells; shrink cell_size_m")

    acc = np.zeros((ny, nx))
    hits = np.zeros((ny, nx))
    for x, y, v in samples:
        j = int(round((x - x0) / cell_size_m))
        i = int(round((y - y0) / cell_size_m))
        if not (0 <= i < ny and 0 <= j < nx):
            raise ValueError(f"sample ({x}, {y}) falls outside bounds {bounds}")
        acc[i, j] += v
        hits[i, j] += 1
    sample_mask = hits > 0
    values = np.full((ny, nx), float(np.mean([s[2] for s in samples])))
    values[sample_mask] = acc[sample_mask] / hits[sample_mask]

    free = ~sample_mask
    ii, jj = np.meshgrid(np.arange(ny), np.arange(nx), indexing="ij")
    red = ((ii + jj) % 2 == 0) & free
    black = ((ii + jj) % 2 == 1) & free

    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        for color in (red, black):
            total, count = _neighbor_mean(values)
            target = total[color] / count[color]
            values[color] = (1 - omega) * values[color] + omega * target
        total, count = _neighbor_mean(values)
        resid_grid = np.abs(values - total / count)
        residual = float(resid_grid[free].max()) if free.any() else 0.0
        if residual < tol:
            break
    converged = residual < tol
    grid = CoverageGrid(x0, y0, cell_size_m, values, sample_mask)
    return CoverageFit(grid=grid, residual=residual, iterations=iterations, converged=converged)


def grid_to_csv(grid: CoverageGrid) -> str:
    """Row-major CSV with an origin/cell-size header."""
    buf = io.StringIO()
    buf.write("# origin_x_m,origin_y_m,cell_size_m\n")
    buf.write(f"# {grid.origin_x_m!r},{grid.origin_y_m!r},{grid.cell_size_m!r}\n")
    for row in grid.values:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def grid_from_csv(text: str | Path) -> CoverageGrid:
    if isinstance(text, Path):
        text = text.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("#") or not lines[1].startswith("#"):
        raise ValueError("coverage CSV must start with the two-line origin header")
    x0, y0, cell = (float(tok) for tok in lines[1].lstrip("# ").split(","))
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines[2:]]
    values = np.array(rows)
    return CoverageGrid(x0, y0, cell, values, np.zeros(values.shape, dtype=bool))
