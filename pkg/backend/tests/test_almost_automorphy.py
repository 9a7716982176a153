"""
Tests for the almost automorphy diagnostics and growth-condition checks
"""

import math

import numpy as np
import pytest
from app.almost_automorphy import (
    ShiftSequence,
    WeightError,
    WeightFunction,
    beta_of_r,
    ch_norm,
    check_theorem2,
    composition_translate_check,
    decay_split_test,
    late_window_profile,
    normalized_integrals,
    sqrt2_convergents,
    sqrt2_shift_sequence,
    translate_test,
)
from app.errors import BudgetError, CoverageError, DomainError, InputError
from app.forcing import HolderGrowth, make_example1_forcing, make_example2_forcing
from app.fraccalc import SampledPath, TimeGrid
from app.memory import Kernel, l1_norm
from app.mlf import kernel_integral_identity


def _quasi_periodic(t):
    return np.cos(t) + np.cos(math.sqrt(2.0) * t)


class TestShiftSequences:
    """Test Diophantine shift sequences."""

    def test_convergents(self):
        """Test the first convergents of sqrt(2)."""
        assert sqrt2_convergents(5) == [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29)]

    def test_convergents_approximate_sqrt2(self):
        """Test |sqrt2 q - p| <= 1 / q."""
        for p, q in sqrt2_convergents(10):
            assert abs(math.sqrt(2.0) * q - p) <= 1.0 / q

    def test_shift_sequence(self):
        """Test shifts 2 pi q along the convergent denominators."""
        shifts = sqrt2_shift_sequence(5)
        assert len(shifts) == 5
        assert shifts.denominators == (1, 2, 5, 12, 29)
        assert shifts.largest == pytest.approx(2.0 * math.pi * 29)

    def test_invalid_sequences(self):
        """Test that shifts must be positive and increasing."""
        with pytest.raises(InputError, match="empty"):
            ShiftSequence(shifts=())
        with pytest.raises(InputError, match="increasing"):
            ShiftSequence(shifts=(2.0, 1.0))
        with pytest.raises(DomainError):
            sqrt2_convergents(0)


class TestTranslateTest:
    """Test translate errors along shift sequences."""

    def setup_method(self):
        """Set up a long grid and the probe window [190, 230]."""
        self.grid = TimeGrid.spanning(0.0, 420.0, 0.05)
        self.probe = TimeGrid.spanning(190.0, 230.0, 0.5)
        self.shifts = sqrt2_shift_sequence(5)

    def test_quasi_periodic_path(self):
        """Test that cos t + cos sqrt2 t passes with decreasing errors."""
        u = SampledPath.from_function(self.grid, _quasi_periodic)
        report = translate_test(u, self.shifts, self.probe)
        assert report.decreasing
        assert report.two_sided_ok
        assert report.is_almost_automorphic
        assert report.errors[-1] < 0.1
        header, rows = report.to_rows()
        assert header == ["shift", "error", "reverse_error"]
        assert len(rows) == 5

    def test_growing_path_fails(self):
        """Test that a linear ramp is not almost automorphic."""
        u = SampledPath.from_function(self.grid, lambda t: t / 100.0)
        report = translate_test(u, self.shifts, self.probe)
        assert not report.decreasing
        assert not report.is_almost_automorphic

    def test_insufficient_coverage(self):
        """Test that the probe window must fit inside the path after shifting."""
        short = SampledPath.from_function(TimeGrid.spanning(0.0, 300.0, 0.05), np.cos)
        with pytest.raises(CoverageError):
            translate_test(short, self.shifts, self.probe)


class TestDecaySplit:
    """Test the split into a profile and a decaying remainder."""

    def setup_method(self):
        """Set up a grid on [0, 60]."""
        self.grid = TimeGrid.spanning(0.0, 60.0, 0.05)
        self.aa = SampledPath.from_function(self.grid, _quasi_periodic)
        self.u = SampledPath.from_function(
            self.grid, lambda t: _quasi_periodic(t) + np.exp(-t)
        )

    def test_remainder_small_after_T(self):
        """Test that e^{-t} is below eps past T = 20."""
        assert decay_split_test(self.u, self.aa, T=20.0, eps=1e-2)

    def test_remainder_large_near_start(self):
        """Test that the split fails from T = 0."""
        assert not decay_split_test(self.u, self.aa, T=0.0, eps=1e-2)

    def test_grid_mismatch(self):
        """Test that both paths must share a grid."""
        other = SampledPath.zeros(TimeGrid.spanning(0.0, 30.0, 0.05))
        with pytest.raises(InputError, match="same grid"):
            decay_split_test(self.u, other, T=10.0, eps=1e-2)

    def test_split_time_beyond_grid(self):
        """Test that T must lie on the grid."""
        with pytest.raises(CoverageError):
            decay_split_test(self.u, self.aa, T=100.0, eps=1e-2)

    def test_late_window_profile(self):
        """Test that the profile is the path translated back by the shift."""
        u = SampledPath.from_function(self.grid, np.sin)
        profile = late_window_profile(u, 10.0)
        assert profile.grid.t0 == 0.0
        assert profile.grid.end == pytest.approx(50.0)
        np.testing.assert_allclose(
            profile.column(0), np.sin(profile.times + 10.0), atol=1e-12
        )

    def test_profile_shift_too_large(self):
        """Test that a shift longer than the path is rejected."""
        with pytest.raises(CoverageError):
            late_window_profile(self.u, 100.0)


class TestWeights:
    """Test weight functions and the weighted norm."""

    def test_ch_norm(self):
        """Test max t / (1 + t^2) = 1/2 at t = 1."""
        u = SampledPath.from_function(TimeGrid.spanning(0.0, 10.0, 0.5), lambda t: t)
        assert ch_norm(u, WeightFunction.polynomial(1.0, 2.0)) == pytest.approx(0.5)

    def test_ch_norm_rejects_small_weight(self):
        """Test that weights below 1 are rejected."""
        u = SampledPath.zeros(TimeGrid(0.0, 1.0, 3))
        with pytest.raises(WeightError, match="< 1"):
            ch_norm(u, lambda t: np.full(np.shape(t), 0.5))

    def test_weight_kinds(self):
        """Test polynomial, constant and sampled weights."""
        linear = WeightFunction.polynomial(2.0, 1.0)
        np.testing.assert_allclose(linear([0.0, 3.0]), [1.0, 7.0])
        assert WeightFunction.constant(3.0)(5.0) == 3.0
        sampled = WeightFunction(kind="sampled", times=(0.0, 2.0), values=(1.0, 3.0))
        assert sampled(1.0) == pytest.approx(2.0)
        assert WeightFunction.polynomial()(-4.0) == 1.0

    def test_invalid_weights(self):
        """Test weight validation."""
        with pytest.raises(WeightError, match=">= 1"):
            WeightFunction.constant(0.5)
        with pytest.raises(WeightError, match="nondecreasing"):
            WeightFunction(kind="sampled", times=(0.0, 1.0), values=(2.0, 1.0))
        with pytest.raises(WeightError, match="Unknown weight kind"):
            WeightFunction(kind="exponential")


class TestGrowthConditions:
    """Test the checks replacing the Lipschitz hypothesis."""

    def setup_method(self):
        """Set up a Holder growth bound and a quadratic weight."""
        self.W = HolderGrowth(1.0, 1.0, 0.5)
        self.h = WeightFunction.polynomial(1.0, 2.0)
        self.times = np.concatenate([[0.0], np.logspace(-2, 6, 81)])

    def test_normalized_integral_constant_case(self):
        """Test W = identity, h = 1: the integral is r times the kernel identity."""
        values = normalized_integrals(
            1.5, -1.0, lambda x: x, WeightFunction.constant(1.0), 2.0, [0.0, 5.0]
        )
        np.testing.assert_allclose(values, 2.0 * kernel_integral_identity(1.5, -1.0))

    def test_conditions_hold(self):
        """Test that sublinear growth with a quadratic weight passes both conditions."""
        report = check_theorem2(
            1.0,
            1.5,
            -1.0,
            self.W,
            self.h,
            [1.0, 2.0],
            2.0 ** np.arange(11),
            times=self.times,
        )
        assert report.condition_i_ok
        assert report.condition_iv_ok
        assert report.holder_variant["ok"]
        assert len(report.beta_samples) == 2
        assert report.beta_samples[1][1] > report.beta_samples[0][1]
        assert report.to_dict()["condition_i_ok"] is True

    def test_linear_growth_fails(self):
        """Test that W(r) = r with constant weight fails both conditions."""
        report = check_theorem2(
            1.0,
            1.5,
            -1.0,
            HolderGrowth(0.0, 1.0, 1.0),
            WeightFunction.constant(1.0),
            [1.0],
            [1.0, 2.0, 4.0, 8.0],
            times=np.array([0.0, 0.1, 1.0, 10.0, 100.0, 1000.0]),
        )
        assert not report.condition_i_ok
        assert not report.condition_iv_ok
        for _, ratio in report.liminf_samples:
            assert ratio == pytest.approx(1.0 / kernel_integral_identity(1.5, -1.0))

    def test_beta_of_r_unstabilized(self):
        """Test that a still-growing sup is reported."""
        with pytest.raises(BudgetError, match="still grows"):
            beta_of_r(
                1.0,
                1.5,
                -1.0,
                lambda x: x**2,
                WeightFunction.polynomial(1.0, 1.0),
                1.0,
                times=np.array([0.0, 1.0, 10.0, 100.0, 1000.0]),
            )

    def test_invalid_grid(self):
        """Test that radius grids must be positive and increasing."""
        with pytest.raises(DomainError, match="r_grid"):
            check_theorem2(1.0, 1.5, -1.0, self.W, self.h, [2.0, 1.0], [1.0])


class TestCompositionCheck:
    """Test the composition bound for translates of f(t, u(t), Ku(t))."""

    def setup_method(self):
        """Set up a quasi-periodic path and the probe window."""
        grid = TimeGrid.spanning(0.0, 420.0, 0.05)
        self.u = SampledPath.from_function(grid, lambda t: 0.1 * _quasi_periodic(t))
        self.probe = TimeGrid.spanning(190.0, 230.0, 0.5)
        self.kernel = Kernel.exponential()

    @pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
    def test_nominal_bound_holds(self, beta):
        """Test the composed translate error against the nominal bound."""
        f = make_example1_forcing(beta=beta, source_amplitude=0.5)
        shift = sqrt2_shift_sequence(5).largest
        check = composition_translate_check(f, self.kernel, self.u, shift, self.probe)

        nominal = (
            f.lipschitz_L * (1.0 + l1_norm(self.kernel)) * check.path_error
            + check.explicit_time_error
        )
        assert check.nominal_bound == pytest.approx(nominal)
        assert check.composed_error <= check.nominal_bound
        assert check.composed_error <= check.bound * (1.0 + 1e-9) + 1e-14
        assert check.ok
        assert check.to_dict()["shift"] == shift

    def test_verdict_follows_nominal_bound(self):
        """Test that a path with a large memory error can fail the check."""
        f = make_example1_forcing(beta=0.1)
        grid = self.u.grid
        values = np.zeros_like(self.u.values)
        memory = SampledPath.from_function(grid, lambda t: np.sin(0.3 * t))
        u = self.u.with_values(values)
        check = composition_translate_check(
            f, self.kernel, u, 10.0, self.probe, memory=memory
        )

        assert check.path_error == 0.0
        assert check.memory_error > 0.0
        assert check.composed_error <= check.bound * (1.0 + 1e-9) + 1e-14
        assert check.composed_error > check.nominal_bound
        assert not check.ok

    def test_delay_forcing_rejected(self):
        """Test that point delay forcings are not covered."""
        f = make_example2_forcing(beta=0.1, tau=1.0)
        with pytest.raises(InputError, match="memory forcings"):
            composition_translate_check(f, self.kernel, self.u, 10.0, self.probe)
