"""
Configuration management for FracAAA.

Handles reading and validating scenario configuration documents.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    ValidationError,
    field_validator,
    model_validator,
)

from app.almost_automorphy import WeightFunction
from app.errors import ConfigurationError
from app.forcing import HolderGrowth
from app.memory import Kernel, KernelForm
from app.spectral_operator import DEFAULT_THETA, OMEGA_CONVENTIONS

logger = logging.getLogger(__name__)


class ScenarioName(str, Enum):
    """Scenarios the command line runner knows about."""

    EXAMPLE1 = "example1"
    EXAMPLE2_DELAY = "example2_delay"
    MLF_VALIDATE = "mlf_validate"
    IDENTITY_CHECK = "identity_check"
    CONTRACTION_CHECK = "contraction_check"
    THEOREM2_CHECK = "theorem2_check"
    ASYMPTOTIC_GAP = "asymptotic_gap"


# Scenarios comparing the whole-line solution with an initial-value solution
INITIAL_VALUE_SCENARIOS = (
    ScenarioName.EXAMPLE1,
    ScenarioName.EXAMPLE2_DELAY,
    ScenarioName.ASYMPTOTIC_GAP,
)


class KernelConfig(BaseModel):
    """Memory kernel: exponential (rate, scale) or sampled (dt, values)."""

    model_config = ConfigDict(extra="forbid")

    form: KernelForm = KernelForm.EXPONENTIAL
    rate: float = 1.0
    scale: float = 1.0
    dt: Optional[float] = None
    values: Optional[List[float]] = None

    @model_validator(mode="after")
    def check_form(self) -> "KernelConfig":
        if self.form is KernelForm.SAMPLED and (self.dt is None or not self.values):
            raise ValueError("sampled kernel needs 'dt' and 'values'")
        if self.form is KernelForm.EXPONENTIAL and not self.rate > 0:
            raise ValueError(f"kernel rate must be > 0, got {self.rate}")
        return self

    def to_kernel(self) -> Kernel:
        if self.form is KernelForm.SAMPLED:
            return Kernel.sampled(dt=self.dt, values=self.values)
        return Kernel.exponential(rate=self.rate, scale=self.scale)


class WeightConfig(BaseModel):
    """Weight h of the C_h space."""

    model_config = ConfigDict(extra="forbid")

    kind: str = "polynomial"
    coefficient: float = 1.0
    power: float = 2.0

    @field_validator("kind")
    @classmethod
    def check_kind(cls, v: str) -> str:
        if v not in ("polynomial", "constant"):
            raise ValueError(
                f"weight kind must be 'polynomial' or 'constant', got '{v}'"
            )
        return v

    def to_weight(self) -> WeightFunction:
        if self.kind == "constant":
            return WeightFunction.constant(self.coefficient)
        return WeightFunction.polynomial(self.coefficient, self.power)


class GrowthConfig(BaseModel):
    """Growth bound W(r) = gamma0 + gamma1 r^theta."""

    model_config = ConfigDict(extra="forbid")

    gamma0: float = 1.0
    gamma1: float = 1.0
    theta: float = 0.5

    @model_validator(mode="after")
    def check_ranges(self) -> "GrowthConfig":
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise ValueError("gamma0 and gamma1 must be nonnegative")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        return self

    def to_growth(self) -> HolderGrowth:
        return HolderGrowth(self.gamma0, self.gamma1, self.theta)


class ScenarioConfig(BaseModel):
    """A single flat scenario document with documented defaults."""

    model_config = ConfigDict(extra="forbid")

    scenario: ScenarioName

    # Equation
    alpha: float = 1.5
    beta: float = 0.1
    source_amplitude: float = 0.5
    mu_shift: float = 60.0
    n_modes: int = 8
    theta: float = DEFAULT_THETA
    omega_convention: str = "spectrum_top"
    delay_tau: float = 1.0
    kernel: KernelConfig = KernelConfig()
    CM: Optional[float] = None

    # Discretization
    dt: float = 0.05
    window: Tuple[float, float] = (0.0, 420.0)
    history_T: float = 50.0
    tol: float = 1e-8
    max_iter: int = 60
    max_tail_error: Optional[float] = None

    # Initial-value problem
    u0: Optional[List[float]] = None
    nonlocal_points: List[Tuple[float, float]] = []

    # Almost automorphy diagnostics
    shifts_n: int = 5
    probe: Tuple[float, float] = (190.0, 230.0)
    split_T: float = 20.0
    split_eps: float = 1e-2

    # Lipschitz sampling
    lipschitz_radius: float = 2.0
    lipschitz_samples: int = 2000

    # Mittag-Leffler and identity lattices
    lattice_alphas: List[float] = [1.25, 1.5, 1.75]
    lattice_mus: List[float] = [-0.5, -1.0, -4.0]
    lattice_times: List[float] = [0.5, 1.0, 2.0, 5.0, 10.0]
    lattice_omegas: List[float] = [-0.5, -1.0, -4.0]
    certificate_tolerance: float = 0.05

    # Growth conditions
    omega: float = -1.0
    growth: GrowthConfig = GrowthConfig()
    weight: WeightConfig = WeightConfig(kind="polynomial", coefficient=1.0, power=1.0)
    r_grid: List[float] = [0.5, 1.0, 2.0, 4.0, 8.0]
    xi_grid: List[float] = [2.0**k for k in range(11)]
    condition_threshold: float = 1e-3
    liminf_margin: float = 0.05
    condition_t_max: float = 1e8

    # Output
    output_dir: str = "results"
    seed: int = 0

    @field_validator("alpha")
    @classmethod
    def check_alpha(cls, v: float) -> float:
        if not 1.0 < v < 2.0:
            raise ValueError(f"alpha must lie in the open interval (1, 2), got {v}")
        return v

    @field_validator(
        "mu_shift",
        "dt",
        "history_T",
        "tol",
        "delay_tau",
        "lipschitz_radius",
        "condition_threshold",
        "certificate_tolerance",
    )
    @classmethod
    def check_positive(cls, v: float) -> float:
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"must be a positive finite number, got {v}")
        return v

    @field_validator("n_modes")
    @classmethod
    def check_modes(cls, v: int) -> int:
        if not 1 <= v <= 32:
            raise ValueError(f"n_modes must lie in 1..32, got {v}")
        return v

    @field_validator("theta")
    @classmethod
    def check_theta(cls, v: float) -> float:
        if not 0.0 < v < math.pi / 2:
            raise ValueError(f"theta must lie in (0, pi/2), got {v}")
        return v

    @field_validator("omega_convention")
    @classmethod
    def check_convention(cls, v: str) -> str:
        if v not in OMEGA_CONVENTIONS:
            raise ValueError(f"omega_convention must be one of {OMEGA_CONVENTIONS}")
        return v

    @field_validator("omega")
    @classmethod
    def check_omega(cls, v: float) -> float:
        if not v < 0:
            raise ValueError(f"omega must be negative, got {v}")
        return v

    @field_validator("lattice_alphas")
    @classmethod
    def check_lattice_alphas(cls, v: List[float]) -> List[float]:
        if not v or any(not 1.0 < x < 2.0 for x in v):
            raise ValueError("lattice alphas must lie in (1, 2) and be non-empty")
        return v

    @field_validator("lattice_mus", "lattice_omegas")
    @classmethod
    def check_negative_lattice(cls, v: List[float]) -> List[float]:
        if not v or any(x >= 0 for x in v):
            raise ValueError("lattice values must be negative and non-empty")
        return v

    @field_validator("r_grid", "xi_grid")
    @classmethod
    def check_grid(cls, v: List[float]) -> List[float]:
        if not v or any(x <= 0 for x in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("grid must be positive and strictly increasing")
        return v

    @field_validator("condition_t_max")
    @classmethod
    def check_horizon(cls, v: float) -> float:
        if not v > 1:
            raise ValueError(f"condition_t_max must exceed 1, got {v}")
        return v

    @field_validator("shifts_n", "max_iter", "lipschitz_samples")
    @classmethod
    def check_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"must be at least 1, got {v}")
        return v

    @model_validator(mode="after")
    def check_windows(self) -> "ScenarioConfig":
        start, end = self.window
        if end <= start:
            raise ValueError(f"window end must exceed its start, got {self.window}")
        if end - start < 2 * self.dt:
            raise ValueError("window must hold at least 3 grid nodes")
        if self.probe[1] <= self.probe[0]:
            raise ValueError(f"probe end must exceed its start, got {self.probe}")
        if self.scenario in INITIAL_VALUE_SCENARIOS and start != 0:
            raise ValueError(
                f"window must start at 0 for scenario '{self.scenario.value}', "
                f"got {start}"
            )
        if self.u0 is not None and len(self.u0) != self.n_modes:
            raise ValueError(
                f"u0 has {len(self.u0)} entries but n_modes is {self.n_modes}"
            )
        return self

    def initial_state(self) -> List[float]:
        """u0, defaulting to the first sine mode."""
        if self.u0 is not None:
            return list(self.u0)
        return [1.0] + [0.0] * (self.n_modes - 1)


def _describe(error: ValidationError) -> str:
    lines = []
    for issue in error.errors():
        location = ".".join(str(part) for part in issue["loc"]) or "config"
        lines.append(f"{location}: {issue['msg']}")
    return "; ".join(lines)


def parse_scenario_config(data: dict) -> ScenarioConfig:
    """Validate a configuration mapping.

    Raises:
        ConfigurationError: With one actionable message per invalid field
    """
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        message = f"Invalid scenario configuration: {_describe(e)}"
        raise ConfigurationError(message) from e


def load_scenario_config(path: Union[str, Path]) -> ScenarioConfig:
    """Load and validate a scenario configuration file.

    Args:
        path: JSON document with a top-level object

    Returns:
        ScenarioConfig: Validated configuration

    Raises:
        ConfigurationError: If the file is missing, not JSON or invalid
    """
    config_path = Path(path)
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigurationError(f"Configuration file not found: {config_path}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Invalid JSON in {config_path}: {e}")

    if not isinstance(data, dict):
        raise ConfigurationError(f"{config_path} must contain a JSON object")

    config = parse_scenario_config(data)
    logger.info(f"Loaded scenario '{config.scenario.value}' from {config_path}")
    return config
