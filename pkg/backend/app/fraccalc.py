"""
FracAAA - Fractional Calculus on Uniform Grids

This module provides the sampled-trajectory types shared by the whole package
and grid-based Riemann-Liouville integration plus Caputo and Riemann-Liouville
differentiation of order alpha in (1, 2).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy import signal, special

from app.errors import CoverageError, DomainError, InputError, InsufficientDataError

logger = logging.getLogger(__name__)

# Relative tolerance used when matching times against grid nodes
NODE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time discretization t_j = t0 + j * dt, j = 0..n-1."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        """Validate grid parameters after initialization."""
        if not math.isfinite(self.t0):
            raise InputError(f"Grid start must be finite, got {self.t0}")
        if not math.isfinite(self.dt) or self.dt <= 0:
            raise InputError(f"Grid step must be positive, got {self.dt}")
        if int(self.n) != self.n or self.n < 2:
            raise InputError(f"Grid needs at least 2 nodes, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def spanning(cls, t0: float, t1: float, dt: float) -> "TimeGrid":
        """Build the grid with step dt starting at t0 whose last node is >= t1."""
        if t1 <= t0:
            raise InputError(f"Empty interval [{t0}, {t1}]")
        n = int(math.ceil((t1 - t0) / dt - NODE_TOLERANCE)) + 1
        return cls(t0=t0, dt=dt, n=max(n, 2))

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    def covers(self, t: float) -> bool:
        """Check whether t lies inside [t0, end] up to node tolerance."""
        slack = NODE_TOLERANCE * self.dt
        return self.t0 - slack <= t <= self.end + slack

    def index_of(self, t: float) -> int:
        """Return the node index of t, which must coincide with a node.

        Raises:
            CoverageError: If t is outside the grid
            InputError: If t falls between nodes
        """
        if not self.covers(t):
            raise CoverageError(
                f"Time {t} outside grid [{self.t0}, {self.end}]",
                required_extension=max(self.t0 - t, t - self.end),
            )
        position = (t - self.t0) / self.dt
        index = int(round(position))
        if abs(position - index) > 1e-6:
            raise InputError(f"Time {t} is not a grid node (step {self.dt})")
        return index

    def restricted(self, t_start: float, t_end: float) -> "TimeGrid":
        """Sub-grid of the nodes lying in [t_start, t_end]."""
        first = self.index_of(t_start)
        last = self.index_of(t_end)
        return TimeGrid(t0=self.t0 + first * self.dt, dt=self.dt, n=last - first + 1)

    def to_dict(self) -> dict:
        return {"t0": self.t0, "dt": self.dt, "n": self.n}


@dataclass
class SampledPath:
    """A trajectory sampled on a TimeGrid, one vector of length dim per node.

    Nodes listed in unreliable_nodes hold NaN and are exempt from the
    finiteness check; they mark samples whose closed form diverges.
    """

    grid: TimeGrid
    values: np.ndarray
    unreliable_nodes: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        """Normalize values to shape (n, dim) and validate them."""
        values = np.asarray(self.values)
        if not (
            np.issubdtype(values.dtype, np.floating)
            or np.issubdtype(values.dtype, np.complexfloating)
        ):
            values = values.astype(float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise InputError(f"Path values must be 1-D or 2-D, got {values.ndim}-D")
        if values.shape[0] != self.grid.n:
            raise InputError(
                f"Path has {values.shape[0]} samples but grid has {self.grid.n} nodes"
            )
        if values.shape[1] < 1:
            raise InputError("Path dimension must be at least 1")

        self.unreliable_nodes = tuple(sorted(int(j) for j in self.unreliable_nodes))
        reliable = np.ones(self.grid.n, dtype=bool)
        reliable[np.asarray(self.unreliable_nodes, dtype=int)] = False
        if not np.all(np.isfinite(values[reliable])):
            raise InputError("Path values must be finite")
        self.values = values

    @classmethod
    def from_function(
        cls, grid: TimeGrid, func: Callable[[np.ndarray], np.ndarray]
    ) -> "SampledPath":
        """Sample a vectorized function of time on the grid."""
        return cls(grid=grid, values=func(grid.nodes))

    @classmethod
    def zeros(cls, grid: TimeGrid, dim: int = 1) -> "SampledPath":
        return cls(grid=grid, values=np.zeros((grid.n, dim)))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.dim == 1

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes

    def column(self, k: int = 0) -> np.ndarray:
        return self.values[:, k]

    def norms(self) -> np.ndarray:
        """Euclidean norm of the sample at each node."""
        return np.linalg.norm(self.values, axis=1)

    def sup_norm(self) -> float:
        """Max over reliable nodes of the Euclidean norm."""
        norms = self.norms()
        finite = norms[np.isfinite(norms)]
        return float(finite.max()) if finite.size else 0.0

    def interpolate(self, t: float) -> np.ndarray:
        """Linear interpolation of the path at time t.

        Raises:
            CoverageError: If t is outside the grid
        """
        if not self.grid.covers(t):
            raise CoverageError(
                f"Path on [{self.grid.t0}, {self.grid.end}] does not cover t={t}",
                required_extension=max(self.grid.t0 - t, t - self.grid.end),
            )
        position = min(max((t - self.grid.t0) / self.grid.dt, 0.0), self.grid.n - 1)
        left = min(int(math.floor(position)), self.grid.n - 2)
        weight = position - left
        return (1.0 - weight) * self.values[left] + weight * self.values[left + 1]

    def restrict(self, t_start: float, t_end: float) -> "SampledPath":
        """Sub-path on the nodes lying in [t_start, t_end]."""
        sub_grid = self.grid.restricted(t_start, t_end)
        first = self.grid.index_of(sub_grid.t0)
        unreliable = tuple(
            j - first for j in self.unreliable_nodes if first <= j < first + sub_grid.n
        )
        return SampledPath(
            grid=sub_grid,
            values=self.values[first : first + sub_grid.n].copy(),
            unreliable_nodes=unreliable,
        )

    def with_values(self, values: np.ndarray) -> "SampledPath":
        return SampledPath(grid=self.grid, values=values)


def _check_order(alpha: float, low: float, high: float, closed_high: bool) -> None:
    if not math.isfinite(alpha):
        raise DomainError(f"Fractional order must be finite, got {alpha}")
    upper_ok = alpha <= high if closed_high else alpha < high
    if not (alpha > low and upper_ok):
        bracket = "]" if closed_high else ")"
        raise DomainError(f"Fractional order {alpha} outside ({low}, {high}{bracket}")


def _require_origin(f: SampledPath) -> None:
    if abs(f.grid.t0) > NODE_TOLERANCE * f.grid.dt:
        raise DomainError(f"Grid must start at t0 = 0, got {f.grid.t0}")


def _require_finite(f: SampledPath) -> None:
    if f.unreliable_nodes or not np.all(np.isfinite(f.values)):
        raise InputError("Fractional operators need finite samples at every node")


def product_trapezoid_weights(alpha: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Weights of the product trapezoidal rule for I^alpha on n nodes.

    Returns (start, lag): I(t_m) = h^alpha / Gamma(alpha + 2) *
    (start[m] * f_0 + sum_{k=1..m} lag[m - k] * f_k), with start[0] = 0.
    """
    a1 = alpha + 1.0
    m = np.arange(n, dtype=float)
    lag = np.empty(n)
    lag[0] = 1.0
    if n > 1:
        mm = m[1:]
        lag[1:] = (mm + 1.0) ** a1 - 2.0 * mm**a1 + (mm - 1.0) ** a1
    start = np.zeros(n)
    if n > 1:
        mm = m[1:]
        start[1:] = (mm - 1.0) ** a1 - (mm - alpha - 1.0) * mm**alpha
    return start, lag


def rl_integral(f: SampledPath, alpha: float) -> SampledPath:
    """
    Riemann-Liouville fractional integral I^alpha f sampled on the grid of f.

    The kernel (t - s)^(alpha - 1) is integrated exactly against the piecewise
    linear interpolant of f. The value at t = 0 is exactly 0. Vector paths are
    integrated componentwise.

    Args:
        f: Path sampled on a grid starting at t = 0
        alpha: Integration order, alpha > 0

    Returns:
        SampledPath: I^alpha f on the same grid

    Raises:
        DomainError: If alpha <= 0 or the grid does not start at 0
        InputError: If f has non-finite samples
    """
    if not math.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"Integration order must be positive, got {alpha}")
    _require_origin(f)
    _require_finite(f)

    n = f.grid.n
    start, lag = product_trapezoid_weights(alpha, n)
    scale = f.grid.dt**alpha / special.gamma(alpha + 2.0)

    out = np.zeros_like(f.values)
    for k in range(f.dim):
        column = f.values[:, k]
        history = signal.convolve(column[1:], lag[: n - 1], method="auto")[: n - 1]
        out[1:, k] = scale * (start[1:] * column[0] + history)
    out[0, :] = 0.0
    return SampledPath(grid=f.grid, values=out)


def second_difference(values: np.ndarray, dt: float) -> np.ndarray:
    """Second derivative estimate along axis 0.

    Central in the interior, one-sided second order at both ends; exact for
    cubic polynomials. Needs at least 4 samples.
    """
    v = np.asarray(values)
    if v.shape[0] < 4:
        raise InsufficientDataError(
            f"Second differences need at least 4 nodes, got {v.shape[0]}"
        )
    d2 = np.empty_like(v)
    d2[1:-1] = v[:-2] - 2.0 * v[1:-1] + v[2:]
    d2[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
    d2[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    return d2 / dt**2


def caputo_derivative(f: SampledPath, alpha: float) -> SampledPath:
    """
    Caputo derivative of order alpha in (1, 2): I^(2 - alpha) applied to f''.

    Args:
        f: Path on a grid starting at 0 with at least 4 nodes
        alpha: Order in the open interval (1, 2)

    Returns:
        SampledPath: The Caputo derivative on the same grid

    Raises:
        DomainError: If alpha is outside (1, 2)
        InsufficientDataError: If f has fewer than 4 nodes
    """
    _check_order(alpha, 1.0, 2.0, closed_high=False)
    _require_finite(f)
    d2 = second_difference(f.values, f.grid.dt)
    return rl_integral(SampledPath(grid=f.grid, values=d2), 2.0 - alpha)


def rl_derivative(f: SampledPath, alpha: float) -> SampledPath:
    """
    Riemann-Liouville derivative of order alpha in (1, 2): d^2/dt^2 of I^(2 - alpha) f.

    When f(0) or f'(0) does not vanish the exact derivative diverges at t = 0;
    that node is then reported in unreliable_nodes with a NaN value.

    Raises:
        DomainError: If alpha is outside (1, 2)
        InsufficientDataError: If f has fewer than 4 nodes
    """
    _check_order(alpha, 1.0, 2.0, closed_high=False)
    if f.grid.n < 4:
        raise InsufficientDataError(
            f"Second differences need at least 4 nodes, got {f.grid.n}"
        )
    integral = rl_integral(f, 2.0 - alpha)
    out = second_difference(integral.values, f.grid.dt)

    v = f.values
    scale = max(float(np.max(np.abs(v))), 1.0)
    slope = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * f.grid.dt)
    singular = bool(
        np.any(np.abs(v[0]) > 1e-12 * scale)
        or np.any(np.abs(slope) * f.grid.dt > 1e-12 * scale)
    )
    if singular:
        logger.debug("RL derivative is singular at t=0; flagging node 0")
        out = out.astype(np.result_type(out.dtype, float))
        out[0, :] = np.nan
        return SampledPath(grid=f.grid, values=out, unreliable_nodes=(0,))
    return SampledPath(grid=f.grid, values=out)


def convergence_order(errors: Sequence[float]) -> np.ndarray:
    """Observed orders log2(e_k / e_{k+1}) for errors under successive grid halving."""
    e = np.asarray(errors, dtype=float)
    if e.size < 2:
        raise InsufficientDataError("Need at least two error levels")
    return np.log2(e[:-1] / e[1:])


def power_function_path(
    grid: TimeGrid, power: float, coefficient: float = 1.0
) -> SampledPath:
    """Sample coefficient * t^power on a grid starting at 0."""
    t = grid.nodes
    if power == 0:
        return SampledPath(grid=grid, values=np.full(grid.n, float(coefficient)))
    return SampledPath(grid=grid, values=coefficient * np.power(t, power))

