"""
Tests for the fractional calculus module.

Covers time grids, sampled paths, the product-trapezoidal Riemann-Liouville
integral and the Caputo and Riemann-Liouville derivatives.
"""

import math

import numpy as np
import pytest
from app.errors import CoverageError, DomainError, InputError, InsufficientDataError
from app.fraccalc import (
    SampledPath,
    TimeGrid,
    caputo_derivative,
    convergence_order,
    power_function_path,
    rl_derivative,
    rl_integral,
)
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special


class TestTimeGrid:
    """Test the TimeGrid type."""

    def test_nodes_and_end(self):
        """Test node placement of a simple grid."""
        grid = TimeGrid(t0=1.0, dt=0.5, n=5)
        np.testing.assert_allclose(grid.nodes, [1.0, 1.5, 2.0, 2.5, 3.0])
        assert grid.end == pytest.approx(3.0)

    def test_invalid_step(self):
        """Test that a non-positive step is rejected."""
        with pytest.raises(InputError, match="step must be positive"):
            TimeGrid(t0=0.0, dt=0.0, n=4)

    def test_too_few_nodes(self):
        """Test that grids need two nodes."""
        with pytest.raises(InputError, match="at least 2 nodes"):
            TimeGrid(t0=0.0, dt=0.1, n=1)

    def test_spanning_reaches_end(self):
        """Test that spanning grids cover the requested interval."""
        grid = TimeGrid.spanning(0.0, 1.0, 0.1)
        assert grid.n == 11
        assert grid.end == pytest.approx(1.0)

    def test_index_of(self):
        """Test node lookup and its error paths."""
        grid = TimeGrid(t0=0.0, dt=0.25, n=9)
        assert grid.index_of(1.5) == 6
        with pytest.raises(InputError, match="not a grid node"):
            grid.index_of(0.3)
        with pytest.raises(CoverageError) as excinfo:
            grid.index_of(3.0)
        assert excinfo.value.required_extension == pytest.approx(1.0)

    def test_restricted(self):
        """Test sub-grid extraction."""
        grid = TimeGrid(t0=0.0, dt=0.5, n=11)
        sub = grid.restricted(1.0, 3.0)
        assert sub.t0 == pytest.approx(1.0)
        assert sub.n == 5


class TestSampledPath:
    """Test the SampledPath type."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = TimeGrid(t0=0.0, dt=1.0, n=4)

    def test_scalar_values_become_column(self):
        """Test that 1-D samples are stored as one column."""
        path = SampledPath(grid=self.grid, values=[0.0, 1.0, 2.0, 3.0])
        assert path.values.shape == (4, 1)
        assert path.is_scalar

    def test_length_mismatch(self):
        """Test that sample count must match the grid."""
        with pytest.raises(InputError, match="3 samples but grid has 4"):
            SampledPath(grid=self.grid, values=[0.0, 1.0, 2.0])

    def test_non_finite_rejected(self):
        """Test that NaN samples are rejected unless flagged."""
        with pytest.raises(InputError, match="finite"):
            SampledPath(grid=self.grid, values=[0.0, math.nan, 2.0, 3.0])
        flagged = SampledPath(
            grid=self.grid, values=[0.0, math.nan, 2.0, 3.0], unreliable_nodes=(1,)
        )
        assert flagged.sup_norm() == pytest.approx(3.0)

    def test_interpolate(self):
        """Test linear interpolation between nodes."""
        values = [[0.0, 1.0], [2.0, 1.0], [4.0, 1.0], [6.0, 1.0]]
        path = SampledPath(grid=self.grid, values=values)
        np.testing.assert_allclose(path.interpolate(1.5), [3.0, 1.0])
        with pytest.raises(CoverageError):
            path.interpolate(-0.5)

    def test_restrict(self):
        """Test sub-path extraction keeps values aligned with times."""
        path = SampledPath.from_function(self.grid, lambda t: t**2)
        sub = path.restrict(1.0, 3.0)
        np.testing.assert_allclose(sub.column(), [1.0, 4.0, 9.0])


class TestRlIntegral:
    """Test the Riemann-Liouville fractional integral."""

    def test_unit_order_of_constant(self):
        """Test that I^1 of 1 is t exactly."""
        grid = TimeGrid(t0=0.0, dt=0.01, n=101)
        result = rl_integral(power_function_path(grid, 0.0), 1.0)
        np.testing.assert_allclose(result.column(), grid.nodes, atol=1e-12)

    def test_value_at_origin_is_zero(self):
        """Test that the integral vanishes at t = 0."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=11)
        result = rl_integral(SampledPath.from_function(grid, np.cos), 0.7)
        assert result.column()[0] == 0.0

    def test_power_rule_for_linear_function(self):
        """Test I^0.5 t = Gamma(2) / Gamma(2.5) t^1.5."""
        grid = TimeGrid(t0=0.0, dt=0.01, n=101)
        result = rl_integral(power_function_path(grid, 1.0), 0.5)
        expected = special.gamma(2.0) / special.gamma(2.5) * grid.nodes**1.5
        np.testing.assert_allclose(result.column()[1:], expected[1:], rtol=1e-10)

    def test_unit_order_matches_cumulative_trapezoid(self):
        """Test that I^1 reproduces cumulative trapezoidal integration."""
        grid = TimeGrid(t0=0.0, dt=0.05, n=41)
        f = SampledPath.from_function(grid, np.sin)
        expected = integrate.cumulative_trapezoid(f.column(), dx=grid.dt, initial=0.0)
        np.testing.assert_allclose(rl_integral(f, 1.0).column(), expected, atol=1e-12)

    def test_semigroup(self):
        """Test I^0.5 I^0.5 sin = I^1 sin on [0, 1]."""
        grid = TimeGrid(t0=0.0, dt=1e-3, n=1001)
        f = SampledPath.from_function(grid, np.sin)
        twice = rl_integral(rl_integral(f, 0.5), 0.5)
        once = rl_integral(f, 1.0)
        assert np.max(np.abs(twice.column() - once.column())) <= 1e-4

    def test_semigroup_convergence_order(self):
        """Test that the semigroup defect shrinks at least linearly on halving."""
        errors = []
        for n in (51, 101, 201):
            grid = TimeGrid(t0=0.0, dt=1.0 / (n - 1), n=n)
            f = SampledPath.from_function(grid, np.sin)
            twice = rl_integral(rl_integral(f, 0.5), 0.5)
            once = rl_integral(f, 1.0)
            errors.append(np.max(np.abs(twice.column() - once.column())))
        assert np.all(convergence_order(errors) >= 1.0)

    def test_vector_paths_componentwise(self):
        """Test that vector paths are integrated column by column."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=21)
        values = np.column_stack([grid.nodes, np.ones(grid.n)])
        result = rl_integral(SampledPath(grid=grid, values=values), 1.0)
        np.testing.assert_allclose(result.column(0), grid.nodes**2 / 2, atol=1e-12)
        np.testing.assert_allclose(result.column(1), grid.nodes, atol=1e-12)

    def test_invalid_order(self):
        """Test that non-positive orders are rejected."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=5)
        with pytest.raises(DomainError, match="must be positive"):
            rl_integral(SampledPath.zeros(grid), 0.0)

    def test_grid_must_start_at_origin(self):
        """Test that the grid must start at t = 0."""
        grid = TimeGrid(t0=1.0, dt=0.1, n=5)
        with pytest.raises(DomainError, match="t0 = 0"):
            rl_integral(SampledPath.zeros(grid), 0.5)

    def test_flagged_samples_rejected(self):
        """Test that paths with unreliable nodes are rejected."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=5)
        path = SampledPath(
            grid=grid, values=[math.nan, 1.0, 1.0, 1.0, 1.0], unreliable_nodes=(0,)
        )
        with pytest.raises(InputError, match="finite samples"):
            rl_integral(path, 0.5)

    @settings(max_examples=25, deadline=None)
    @given(
        a=st.floats(-5.0, 5.0),
        b=st.floats(-5.0, 5.0),
        alpha=st.floats(0.1, 2.0),
        seed=st.integers(0, 2**16),
    )
    def test_linearity(self, a, b, alpha, seed):
        """Test I(a f + b g) = a I f + b I g."""
        rng = np.random.default_rng(seed)
        grid = TimeGrid(t0=0.0, dt=0.05, n=40)
        f = rng.standard_normal(grid.n)
        g = rng.standard_normal(grid.n)
        combined = rl_integral(SampledPath(grid=grid, values=a * f + b * g), alpha)
        separate = a * rl_integral(SampledPath(grid=grid, values=f), alpha).column() + (
            b * rl_integral(SampledPath(grid=grid, values=g), alpha).column()
        )
        np.testing.assert_allclose(combined.column(), separate, atol=1e-10)


class TestCaputoDerivative:
    """Test the Caputo derivative of order in (1, 2)."""

    def setup_method(self):
        """Set up test fixtures."""
        self.grid = TimeGrid(t0=0.0, dt=0.01, n=101)

    def test_constant_is_annihilated(self):
        """Test that constants have zero derivative."""
        result = caputo_derivative(power_function_path(self.grid, 0.0, 3.0), 1.5)
        np.testing.assert_allclose(result.column(), 0.0, atol=1e-8)

    def test_affine_is_annihilated(self):
        """Test that affine functions have zero derivative."""
        path = SampledPath.from_function(self.grid, lambda t: 5.0 * t + 1.0)
        result = caputo_derivative(path, 1.3)
        np.testing.assert_allclose(result.column(), 0.0, atol=1e-8)

    def test_power_rule_square(self):
        """Test D^1.5 t^2 = 2 t^0.5 / Gamma(1.5)."""
        result = caputo_derivative(power_function_path(self.grid, 2.0), 1.5)
        expected = 2.0 * np.sqrt(self.grid.nodes) / special.gamma(1.5)
        np.testing.assert_allclose(result.column(), expected, rtol=1e-9, atol=1e-12)
        assert result.column()[-1] == pytest.approx(2.0 / special.gamma(1.5), rel=1e-9)

    def test_power_rule_cube(self):
        """Test D^1.25 t^3 = 6 t^1.75 / Gamma(2.75)."""
        result = caputo_derivative(power_function_path(self.grid, 3.0), 1.25)
        expected = 6.0 * self.grid.nodes**1.75 / special.gamma(2.75)
        np.testing.assert_allclose(result.column(), expected, rtol=1e-8, atol=1e-10)

    def test_order_out_of_range(self):
        """Test that orders outside (1, 2) are rejected."""
        with pytest.raises(DomainError, match="outside"):
            caputo_derivative(power_function_path(self.grid, 2.0), 2.0)

    def test_too_few_nodes(self):
        """Test that four nodes are required."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=3)
        with pytest.raises(InsufficientDataError, match="at least 4 nodes"):
            caputo_derivative(SampledPath.zeros(grid), 1.5)


class TestRlDerivative:
    """Test the Riemann-Liouville derivative of order in (1, 2)."""

    def test_zero(self):
        """Test that the zero path has zero derivative and no flagged nodes."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=11)
        result = rl_derivative(SampledPath.zeros(grid), 1.5)
        assert result.unreliable_nodes == ()
        np.testing.assert_allclose(result.column(), 0.0)

    def test_matches_caputo_when_initial_data_vanish(self):
        """Test D^1.5 t^2 against the Caputo closed form away from the origin."""
        grid = TimeGrid(t0=0.0, dt=0.01, n=101)
        result = rl_derivative(power_function_path(grid, 2.0), 1.5)
        assert result.unreliable_nodes == ()
        late = grid.nodes >= 0.5
        expected = 2.0 * np.sqrt(grid.nodes[late]) / special.gamma(1.5)
        np.testing.assert_allclose(result.column()[late], expected, rtol=1e-2)

    def test_constant_flags_origin(self):
        """Test D^1.5 1 = t^-1.5 / Gamma(-0.5) with the singular node flagged."""
        grid = TimeGrid(t0=0.0, dt=0.01, n=101)
        result = rl_derivative(power_function_path(grid, 0.0), 1.5)
        assert result.unreliable_nodes == (0,)
        assert math.isnan(result.column()[0])
        late = grid.nodes >= 0.5
        expected = grid.nodes[late] ** -1.5 / special.gamma(-0.5)
        np.testing.assert_allclose(result.column()[late], expected, rtol=1e-2)


class TestConvergenceOrder:
    """Test the observed convergence order helper."""

    def test_second_order_errors(self):
        """Test log2 ratios of quartering errors."""
        orders = convergence_order([1e-2, 2.5e-3, 6.25e-4])
        np.testing.assert_allclose(orders, [2.0, 2.0])

    def test_needs_two_levels(self):
        """Test that a single error level is rejected."""
        with pytest.raises(InsufficientDataError):
            convergence_order([1e-3])
