"""
Tests for the configuration module.
"""

import json
import math

import pytest
from app.config import (
    GrowthConfig,
    KernelConfig,
    ScenarioConfig,
    ScenarioName,
    WeightConfig,
    load_scenario_config,
    parse_scenario_config,
)
from app.errors import ConfigurationError
from app.forcing import HolderGrowth
from app.memory import Kernel, KernelForm
from pydantic import ValidationError


class TestScenarioConfig:
    """Test cases for the ScenarioConfig model."""

    def test_defaults(self):
        """Test the documented defaults."""
        config = ScenarioConfig(scenario="example1")

        assert config.scenario is ScenarioName.EXAMPLE1
        assert config.alpha == 1.5
        assert config.mu_shift == 60.0
        assert config.theta == pytest.approx(math.pi / 24)
        assert config.window == (0.0, 420.0)
        assert config.kernel.to_kernel() == Kernel.exponential()
        assert config.CM is None

    def test_initial_state_defaults_to_first_mode(self):
        """Test that u0 defaults to the first sine mode."""
        config = ScenarioConfig(scenario="example1", n_modes=3)
        assert config.initial_state() == [1.0, 0.0, 0.0]

        config = ScenarioConfig(scenario="example1", n_modes=2, u0=[0.5, -0.5])
        assert config.initial_state() == [0.5, -0.5]

    @pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5])
    def test_alpha_outside_open_interval(self, alpha):
        """Test that alpha must lie strictly between 1 and 2."""
        with pytest.raises(ValidationError, match="open interval"):
            ScenarioConfig(scenario="example1", alpha=alpha)

    @pytest.mark.parametrize("field", ["dt", "tol", "history_T", "mu_shift"])
    def test_positive_fields(self, field):
        """Test that step sizes and tolerances must be positive."""
        with pytest.raises(ValidationError, match="positive finite"):
            ScenarioConfig(scenario="example1", **{field: 0.0})

    def test_unknown_field_rejected(self):
        """Test that misspelled keys are not silently ignored."""
        with pytest.raises(ValidationError, match="bogus"):
            ScenarioConfig(scenario="example1", bogus=1)

    def test_unknown_scenario_rejected(self):
        """Test that the scenario name must be known."""
        with pytest.raises(ValidationError):
            ScenarioConfig(scenario="example3")

    def test_window_must_start_at_zero_for_initial_value_scenarios(self):
        """Test the window start for scenarios with an initial-value solution."""
        with pytest.raises(ValidationError, match="must start at 0"):
            ScenarioConfig(scenario="example1", window=(10.0, 100.0))

        config = ScenarioConfig(scenario="contraction_check", window=(10.0, 100.0))
        assert config.window == (10.0, 100.0)

    def test_window_too_short(self):
        """Test that the window must hold three nodes."""
        with pytest.raises(ValidationError, match="3 grid nodes"):
            ScenarioConfig(scenario="example1", window=(0.0, 0.05), dt=0.05)

    def test_u0_length_mismatch(self):
        """Test that u0 must match n_modes."""
        with pytest.raises(ValidationError, match="u0 has 2 entries"):
            ScenarioConfig(scenario="example1", n_modes=3, u0=[1.0, 0.0])

    def test_omega_convention(self):
        """Test that only known omega conventions are accepted."""
        config = ScenarioConfig(scenario="example1", omega_convention="shift")
        assert config.omega_convention == "shift"
        with pytest.raises(ValidationError, match="omega_convention"):
            ScenarioConfig(scenario="example1", omega_convention="midpoint")

    def test_lattices_and_grids(self):
        """Test lattice and radius grid validation."""
        with pytest.raises(ValidationError, match="lattice values"):
            ScenarioConfig(scenario="mlf_validate", lattice_mus=[-1.0, 0.5])
        with pytest.raises(ValidationError, match="strictly increasing"):
            ScenarioConfig(scenario="theorem2_check", r_grid=[2.0, 1.0])
        with pytest.raises(ValidationError, match="omega must be negative"):
            ScenarioConfig(scenario="theorem2_check", omega=0.0)


class TestNestedConfigs:
    """Test the kernel, weight and growth sub-documents."""

    def test_sampled_kernel(self):
        """Test conversion of a sampled kernel."""
        config = KernelConfig(form="sampled", dt=0.5, values=[1.0, 0.5, 0.0])
        kernel = config.to_kernel()
        assert kernel.form is KernelForm.SAMPLED
        assert kernel.values == (1.0, 0.5, 0.0)

    def test_sampled_kernel_needs_samples(self):
        """Test that sampled kernels need dt and values."""
        with pytest.raises(ValidationError, match="needs 'dt' and 'values'"):
            KernelConfig(form="sampled", dt=0.5)

    def test_exponential_rate(self):
        """Test that exponential kernels need a positive rate."""
        with pytest.raises(ValidationError, match="rate must be > 0"):
            KernelConfig(rate=0.0)

    def test_weight_kinds(self):
        """Test polynomial and constant weights."""
        assert WeightConfig(kind="constant", coefficient=2.0).to_weight()(7.0) == 2.0
        assert WeightConfig(power=1.0).to_weight()(3.0) == pytest.approx(4.0)
        with pytest.raises(ValidationError, match="weight kind"):
            WeightConfig(kind="exponential")

    def test_growth(self):
        """Test growth bound conversion and ranges."""
        growth = GrowthConfig(gamma0=1.0, gamma1=2.0, theta=0.5).to_growth()
        assert growth == HolderGrowth(1.0, 2.0, 0.5)
        with pytest.raises(ValidationError, match="theta must lie"):
            GrowthConfig(theta=0.0)
        with pytest.raises(ValidationError, match="nonnegative"):
            GrowthConfig(gamma1=-1.0)


class TestLoadScenarioConfig:
    """Test cases for reading configuration files."""

    def test_load_valid_file(self, tmp_path):
        """Test loading a valid configuration."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"scenario": "identity_check", "alpha": 1.25}))

        config = load_scenario_config(path)

        assert config.scenario is ScenarioName.IDENTITY_CHECK
        assert config.alpha == 1.25

    def test_missing_file(self, tmp_path):
        """Test that a missing file is a configuration error."""
        with pytest.raises(ConfigurationError, match="not found"):
            load_scenario_config(tmp_path / "missing.json")

    def test_invalid_json(self, tmp_path):
        """Test that malformed JSON is a configuration error."""
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError, match="Invalid JSON"):
            load_scenario_config(path)

    def test_top_level_must_be_object(self, tmp_path):
        """Test that a JSON list is rejected."""
        path = tmp_path / "config.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError, match="JSON object"):
            load_scenario_config(path)

    def test_error_names_the_field(self):
        """Test that validation errors name the offending field."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_scenario_config({"scenario": "example1", "alpha": 2.5})
        assert "alpha:" in str(exc_info.value)
        assert isinstance(exc_info.value, ValueError)

    def test_nested_error_location(self):
        """Test that nested fields are reported with a dotted path."""
        with pytest.raises(ConfigurationError, match="kernel"):
            parse_scenario_config({"scenario": "example1", "kernel": {"rate": -1.0}})

