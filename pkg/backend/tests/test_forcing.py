"""
Tests for forcing terms and their Lipschitz and translation checks
"""

import math

import numpy as np
import pytest
from app.errors import DomainError, InputError
from app.forcing import (
    SQRT2,
    HolderGrowth,
    Nonlinearity,
    SourceTerm,
    delayed_values,
    envelope_peak_times,
    estimate_lipschitz,
    eval_aa_part,
    eval_decay_part,
    eval_forcing,
    make_constant_forcing,
    make_example1_forcing,
    make_example2_forcing,
    make_harmonic_forcing,
    point_delay_eval,
    time_translate_error,
)
from app.fraccalc import SampledPath, TimeGrid


class TestExampleForcings:
    """Test the shipped example forcings."""

    def test_example1_closed_form(self):
        """Test f(t, w, Kw) for a scalar state."""
        f = make_example1_forcing(beta=0.1)
        t, w, kw = 0.7, 0.5, 0.3
        expected = (
            0.1 * w * (math.cos(t) + math.cos(SQRT2 * t))
            + 0.1 * math.exp(-t) * math.sin(w)
            + math.sin(kw)
        )
        assert float(eval_forcing(f, t, w, kw)) == pytest.approx(expected, rel=1e-14)

    def test_example1_vanishes_at_origin(self):
        """Test that f(t, 0, 0) = 0 without a source."""
        f = make_example1_forcing(beta=0.3)
        times = np.linspace(0.0, 50.0, 11)
        values = eval_forcing(f, times, np.zeros((11, 4)), np.zeros((11, 4)))
        np.testing.assert_array_equal(values, 0.0)

    def test_example1_source_on_first_mode(self):
        """Test that the source drives mode 0 only."""
        f = make_example1_forcing(beta=0.1, source_amplitude=0.5)
        values = eval_forcing(f, 0.0, np.zeros(3), np.zeros(3))
        np.testing.assert_allclose(values, [1.0, 0.0, 0.0])

    def test_example1_lipschitz_derivation(self):
        """Test L_f = max(3|beta|, 1)."""
        assert make_example1_forcing(0.1).lipschitz_L == 1.0
        assert make_example1_forcing(-0.5).lipschitz_L == 1.5
        assert make_example1_forcing(0.1).name == "example1"

    def test_example2_is_point_delay(self):
        """Test example 2 metadata."""
        f = make_example2_forcing(beta=0.2, tau=1.0)
        assert f.is_delay
        assert f.memory_gain == 1.0
        assert f.lipschitz_L == 0.2
        assert f.to_dict()["delay_tau"] == 1.0

    def test_example2_closed_form(self):
        """Test beta sin(u(t - tau)) + beta e^{-|t|} sin(u)."""
        f = make_example2_forcing(beta=0.2, tau=1.0)
        value = float(eval_forcing(f, 2.0, 0.4, -0.6))
        expected = 0.2 * math.sin(-0.6) + 0.2 * math.exp(-2.0) * math.sin(0.4)
        assert value == pytest.approx(expected, rel=1e-14)

    def test_example2_requires_positive_delay(self):
        """Test that tau <= 0 is rejected."""
        with pytest.raises(DomainError, match="Delay must be positive"):
            make_example2_forcing(beta=0.2, tau=0.0)

    def test_state_independent_forcings(self):
        """Test harmonic and constant forcings."""
        harmonic = make_harmonic_forcing(2.0, 3.0, mode=1)
        assert harmonic.is_state_independent
        values = eval_forcing(harmonic, 1.0, np.ones(2), np.ones(2))
        np.testing.assert_allclose(values, [0.0, 2.0 * math.cos(3.0)])
        constant = make_constant_forcing(1.5)
        assert float(eval_forcing(constant, 42.0, 0.0, 0.0)) == 1.5
        assert not make_example1_forcing(0.1).is_state_independent


class TestForcingParts:
    """Test the split into almost automorphic and decaying parts."""

    def test_parts_sum_to_forcing(self):
        """Test f = f1 + f2 on rows of states."""
        f = make_example1_forcing(beta=0.2, source_amplitude=0.3)
        rng = np.random.default_rng(0)
        t = rng.uniform(0.0, 10.0, 5)
        u = rng.standard_normal((5, 3))
        phi = rng.standard_normal((5, 3))
        total = eval_aa_part(f, t, u, phi) + eval_decay_part(f, t, u, phi)
        np.testing.assert_allclose(eval_forcing(f, t, u, phi), total)

    def test_decay_part_vanishes(self):
        """Test |f2(t, u)| <= |beta| e^{-t}."""
        f = make_example1_forcing(beta=0.5)
        value = eval_decay_part(f, 40.0, np.full(4, 1.0), np.zeros(4))
        assert np.max(np.abs(value)) <= 0.5 * math.exp(-40.0) * 4.0

    def test_shape_mismatch(self):
        """Test that u and phi must have the same shape."""
        f = make_example1_forcing(beta=0.1)
        with pytest.raises(InputError, match="shapes differ"):
            eval_forcing(f, 0.0, np.zeros(3), np.zeros(2))

    def test_source_mode_out_of_range(self):
        """Test that a source on a missing mode is rejected."""
        f = make_harmonic_forcing(1.0, 1.0, mode=2)
        with pytest.raises(InputError, match="mode 2"):
            eval_forcing(f, 0.0, np.zeros(2), np.zeros(2))

    def test_envelope_peak_includes_origin(self):
        """Test that the multiplier envelope peaks at t = 0."""
        peaks = envelope_peak_times(make_example1_forcing(beta=0.1))
        assert 0.0 in peaks


class TestLipschitzEstimate:
    """Test the empirical Lipschitz check."""

    @pytest.mark.parametrize("dim", [1, 3])
    def test_example1_respects_recorded_constant(self, dim):
        """Test that sampled quotients stay below L_f."""
        f = make_example1_forcing(beta=0.1)
        estimate = estimate_lipschitz(f, radius=2.0, samples=2000, dim=dim)
        assert estimate <= f.lipschitz_L * (1.0 + 1e-9)

    def test_example1_estimate_is_sharp(self):
        """Test that the scalar estimate comes close to L_f."""
        f = make_example1_forcing(beta=0.1)
        estimate = estimate_lipschitz(f, radius=2.0, samples=2000)
        assert estimate >= 0.8 * f.lipschitz_L

    def test_example2_respects_recorded_constant(self):
        """Test L_f = |beta| for the delay forcing."""
        f = make_example2_forcing(beta=0.25, tau=1.0)
        estimate = estimate_lipschitz(f, radius=2.0, samples=1000)
        assert estimate <= 0.25 * (1.0 + 1e-9)

    def test_reproducible_with_seed(self):
        """Test that the same seed gives the same estimate."""
        f = make_example1_forcing(beta=0.2)
        first = estimate_lipschitz(f, radius=1.0, samples=200, seed=3)
        second = estimate_lipschitz(f, radius=1.0, samples=200, seed=3)
        assert first == second

    def test_invalid_arguments(self):
        """Test radius and sample count validation."""
        f = make_example1_forcing(beta=0.1)
        with pytest.raises(DomainError, match="Radius must be positive"):
            estimate_lipschitz(f, radius=0.0, samples=10)
        with pytest.raises(DomainError, match="at least one sample"):
            estimate_lipschitz(f, radius=1.0, samples=0)


class TestTimeTranslation:
    """Test time-translate errors at a fixed state."""

    def test_period_shift(self):
        """Test that a harmonic forcing is invariant under its period."""
        f = make_harmonic_forcing(1.0, 1.0)
        error = time_translate_error(f, 0.0, 0.0, 2.0 * math.pi, np.linspace(0, 10, 21))
        assert error < 1e-12

    def test_half_period_shift(self):
        """Test the maximal error under a half-period shift."""
        f = make_harmonic_forcing(1.0, 1.0)
        error = time_translate_error(f, 0.0, 0.0, math.pi, [0.0])
        assert error == pytest.approx(2.0)


class TestDelays:
    """Test point delays on sampled paths."""

    def test_delayed_values_linear(self):
        """Test exact interpolation of a linear path and clipping before the start."""
        times = 0.1 * np.arange(21)
        delayed = delayed_values(times[:, np.newaxis], 0.1, 0.25)
        np.testing.assert_allclose(delayed[3:, 0], times[3:] - 0.25, atol=1e-14)
        np.testing.assert_array_equal(delayed[:2, 0], 0.0)

    def test_point_delay_eval(self):
        """Test u(t - tau) on a path."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=21)
        u = SampledPath.from_function(grid, lambda t: 2.0 * t)
        assert point_delay_eval(u, 1.5, 0.55)[0] == pytest.approx(1.9)

    def test_negative_delay(self):
        """Test that tau < 0 is rejected."""
        grid = TimeGrid(t0=0.0, dt=0.1, n=21)
        with pytest.raises(DomainError):
            point_delay_eval(SampledPath.zeros(grid), 1.0, -0.1)


class TestSmallTypes:
    """Test the growth bound, sources and nonlinearities."""

    def test_growth_bound(self):
        """Test W(r) = gamma0 + gamma1 r^theta."""
        W = HolderGrowth(1.0, 2.0, 0.5)
        np.testing.assert_allclose(W([0.0, 4.0]), [1.0, 5.0])
        with pytest.raises(DomainError, match=r"\(0, 1\]"):
            HolderGrowth(1.0, 1.0, 1.5)

    def test_source_sup(self):
        """Test that a source is bounded by |a| times its frequency count."""
        source = SourceTerm(-0.5)
        assert source.sup == 1.0
        assert source.value(0.0) == pytest.approx(-1.0)

    def test_nonlinearities(self):
        """Test the pointwise nonlinearities."""
        x = np.array([0.0, 1.0])
        np.testing.assert_allclose(Nonlinearity.SINE.apply(x), np.sin(x))
        np.testing.assert_array_equal(Nonlinearity.IDENTITY.apply(x), x)
        np.testing.assert_array_equal(Nonlinearity.ZERO.apply(x), 0.0)
