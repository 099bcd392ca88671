"""Harmonic coverage-map interpolation: exact solutions, maximum principle, I/O."""

import numpy as np
import pytest

from aralab.coverage import fit_coverage_map, grid_from_csv, grid_to_csv

BOUNDS = (0.0, 0.0, 100.0, 100.0)


def test_constant_samples_give_constant_surface():
    samples = [(0.0, 0.0, -80.0), (100.0, 0.0, -80.0), (50.0, 100.0, -80.0)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    assert fit.converged
    assert float(np.max(np.abs(fit.grid.values - (-80.0)))) < 1e-6


def test_plane_is_reproduced_exactly():
    # An affine surface is harmonic: pinning the full boundary must
    # reproduce it in the interior to solver tolerance.
    plane = lambda x, y: -60.0 - 0.2 * x - 0.1 * y
    samples = []
    for k in range(11):
        for x, y in ((10.0 * k, 0.0), (10.0 * k, 100.0), (0.0, 10.0 * k), (100.0, 10.0 * k)):
            samples.append((x, y, plane(x, y)))
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    assert fit.converged
    xs = np.arange(11) * 10.0
    expected = np.array([[plane(x, y) for x in xs] for y in xs])
    assert float(np.max(np.abs(fit.grid.values - expected))) < 1e-4


def test_one_dimensional_ramp():
    # Pin two opposite edges; the interior relaxes to a linear ramp.
    samples = [(0.0, 10.0 * k, -50.0) for k in range(11)]
    samples += [(100.0, 10.0 * k, -90.0) for k in range(11)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    assert fit.converged
    mid_column = fit.grid.values[:, 5]
    assert np.allclose(mid_column, -70.0, atol=1e-4)


def test_maximum_principle():
    rng = np.random.default_rng(9)
    samples = [
        (float(rng.uniform(0, 100)), float(rng.uniform(0, 100)), float(rng.uniform(-110, -50)))
        for _ in range(12)
    ]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=5.0)
    lo = min(s[2] for s in samples)
    hi = max(s[2] for s in samples)
    assert float(fit.grid.values.min()) >= lo - 1e-6
    assert float(fit.grid.values.max()) <= hi + 1e-6


def test_samples_are_pinned():
    samples = [(20.0, 30.0, -72.5), (80.0, 60.0, -95.0), (50.0, 90.0, -60.0)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    for x, y, v in samples:
        i, j = fit.grid.cell_index(x, y)
        assert fit.grid.values[i, j] == pytest.approx(v)
        assert fit.grid.sample_mask[i, j]


def test_duplicate_samples_average():
    samples = [(20.0, 30.0, -70.0), (20.0, 30.0, -90.0), (0.0, 0.0, -80.0)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    i, j = fit.grid.cell_index(20.0, 30.0)
    assert fit.grid.values[i, j] == pytest.approx(-80.0)


def test_iteration_cap_reports_non_convergence():
    samples = [(0.0, 0.0, -50.0), (100.0, 100.0, -100.0)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=2.0, max_iters=1)
    assert not fit.converged
    assert fit.iterations == 1
    assert fit.residual > 1e-6


def test_input_validation():
    with pytest.raises(ValueError, match="at least one sample"):
        fit_coverage_map([], BOUNDS, 10.0)
    with pytest.raises(ValueError, match="cell_size_m"):
        fit_coverage_map([(0, 0, -80)], BOUNDS, 0.0)
    with pytest.raises(ValueError, match="omega"):
        fit_coverage_map([(0, 0, -80)], BOUNDS, 10.0, omega=2.0)
    with pytest.raises(ValueError, match="rectangle"):
        fit_coverage_map([(0, 0, -80)], (0.0, 0.0, 0.0, 100.0), 10.0)
    with pytest.raises(ValueError, match="outside bounds"):
        fit_coverage_map([(500.0, 0.0, -80.0)], BOUNDS, 10.0)
    with pytest.raises(ValueError, match="3x3"):
        fit_coverage_map([(0, 0, -80)], (0.0, 0.0, 10.0, 10.0), 10.0)


def test_csv_round_trip():
    samples = [(0.0, 0.0, -50.0), (100.0, 0.0, -90.0), (50.0, 100.0, -70.0)]
    fit = fit_coverage_map(samples, BOUNDS, cell_size_m=10.0)
    text = grid_to_csv(fit.grid)
    back = grid_from_csv(text)
    assert back.origin_x_m == fit.grid.origin_x_m
    assert back.origin_y_m == fit.grid.origin_y_m
    assert back.cell_size_m == fit.grid.cell_size_m
    # repr round trip keeps every float bit-exact
    assert np.array_equal(back.values, fit.grid.values)


def test_csv_requires_header():
    with pytest.raises(ValueError, match="header"):
        grid_from_csv("1.0,2.0\n3.0,4.0\n5.0,6.0\n")
