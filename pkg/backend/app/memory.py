"""
FracAAA - Memory Kernels

This module provides L1(R+) memory kernels and the history convolution
Ku(t) = int_{-inf}^t k(t - s) u(s) ds on sampled paths, with explicit
control of the error made by truncating the history.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import integrate, signal

from app.errors import CoverageError, DomainError, FracAAAError, InputError
from app.fraccalc import NODE_TOLERANCE, SampledPath, TimeGrid

logger = logging.getLogger(__name__)

# Relative size of the last sample below which a sampled kernel counts as decayed
TAIL_DECAY_THRESHOLD = 1e-8


class NonIntegrableKernelError(FracAAAError):
    """Exception raised when a sampled kernel does not decay to zero."""

    pass


class KernelForm(str, Enum):
    """Representation of a memory kernel."""

    EXPONENTIAL = "exponential"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class Kernel:
    """Memory kernel k on [0, inf): scale * exp(-rate * tau), or uniform samples.

    Sampled kernels start at tau = 0 and are taken as zero beyond their last
    sample.
    """

    form: KernelForm
    rate: float = 1.0
    scale: float = 1.0
    dt: Optional[float] = None
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        """Validate kernel parameters after initialization."""
        object.__setattr__(self, "form", KernelForm(self.form))
        if self.form is KernelForm.EXPONENTIAL:
            if not math.isfinite(self.rate) or self.rate <= 0:
                raise DomainError(
                    f"Exponential kernel rate must be > 0, got {self.rate}"
                )
            if not math.isfinite(self.scale):
                raise DomainError(f"Kernel scale must be finite, got {self.scale}")
        else:
            samples = tuple(float(v) for v in self.values)
            if len(samples) < 2:
                raise InputError("Sampled kernel needs at least 2 samples")
            if not all(math.isfinite(v) for v in samples):
                raise InputError("Sampled kernel values must be finite")
            if self.dt is None or not self.dt > 0:
                raise InputError(f"Sampled kernel step must be positive, got {self.dt}")
            object.__setattr__(self, "values", samples)

    @classmethod
    def exponential(cls, rate: float = 1.0, scale: float = 1.0) -> "Kernel":
        return cls(form=KernelForm.EXPONENTIAL, rate=rate, scale=scale)

    @classmethod
    def sampled(cls, dt: float, values) -> "Kernel":
        return cls(form=KernelForm.SAMPLED, dt=dt, values=tuple(values))

    @classmethod
    def zero(cls) -> "Kernel":
        return cls.exponential(rate=1.0, scale=0.0)

    @property
    def grid(self) -> Optional[TimeGrid]:
        if self.form is KernelForm.EXPONENTIAL:
            return None
        return TimeGrid(t0=0.0, dt=self.dt, n=len(self.values))

    @property
    def l1_norm(self) -> float:
        return l1_norm(self)

    @property
    def support_hint(self) -> float:
        """Length beyond which the kernel is negligible."""
        if self.form is KernelForm.EXPONENTIAL:
            return math.log(1e16) / self.rate
        return self.dt * (len(self.values) - 1)

    def evaluate(self, tau) -> np.ndarray:
        """Kernel values at lags tau >= 0."""
        tau = np.asarray(tau, dtype=float)
        if self.form is KernelForm.EXPONENTIAL:
            return self.scale * np.exp(-self.rate * tau)
        lags = self.grid.nodes
        return np.interp(tau, lags, np.array(self.values), right=0.0)

    def to_dict(self) -> dict:
        if self.form is KernelForm.EXPONENTIAL:
            return {"form": self.form.value, "rate": self.rate, "scale": self.scale}
        return {
            "form": self.form.value,
            "grid": self.grid.to_dict(),
            "values": list(self.values),
        }


def kernel_from_dict(data: dict) -> Kernel:
    """Build a kernel from its JSON form."""
    form = KernelForm(data.get("form", "exponential"))
    if form is KernelForm.EXPONENTIAL:
        return Kernel.exponential(
            rate=float(data.get("rate", 1.0)), scale=float(data.get("scale", 1.0))
        )
    grid = data.get("grid", {})
    if float(grid.get("t0", 0.0)) != 0.0:
        raise InputError("Sampled kernel grid must start at 0")
    return Kernel.sampled(dt=float(grid["dt"]), values=data["values"])


def _require_decay(kernel: Kernel) -> None:
    magnitudes = np.abs(np.array(kernel.values))
    peak = float(magnitudes.max())
    if peak > 0 and magnitudes[-1] > TAIL_DECAY_THRESHOLD * peak:
        raise NonIntegrableKernelError(
            f"Sampled kernel does not decay: last value {magnitudes[-1]:.3e} "
            f"vs peak {peak:.3e}"
        )


def l1_norm(kernel: Kernel) -> float:
    """
    L1(R+) norm of the kernel.

    Exact |scale| / rate for exponential kernels, trapezoidal for sampled ones.

    Raises:
        NonIntegrableKernelError: If a sampled kernel has a non-decaying tail
    """
    if kernel.form is KernelForm.EXPONENTIAL:
        return abs(kernel.scale) / kernel.rate
    _require_decay(kernel)
    return float(integrate.trapezoid(np.abs(kernel.values), dx=kernel.dt))


def tail_bound(kernel: Kernel, T: float) -> float:
    """
    Upper bound on int_T^inf |k|; exact for exponential kernels.

    Raises:
        DomainError: If T < 0
        NonIntegrableKernelError: If a sampled kernel has a non-decaying tail
    """
    if not T >= 0:
        raise DomainError(f"Tail start must be nonnegative, got {T}")
    if kernel.form is KernelForm.EXPONENTIAL:
        return math.exp(-kernel.rate * T) * abs(kernel.scale) / kernel.rate
    _require_decay(kernel)
    lags = kernel.grid.nodes
    if T >= lags[-1]:
        return 0.0
    magnitudes = np.abs(np.array(kernel.values))
    first = int(np.searchsorted(lags, T, side="right"))
    head = np.interp(T, lags, magnitudes)
    tail_lags = np.concatenate([[T], lags[first:]])
    tail_values = np.concatenate([[head], magnitudes[first:]])
    return float(integrate.trapezoid(tail_values, tail_lags))


def required_history(kernel: Kernel, tolerance: float, sup_norm: float) -> float:
    """Smallest history length T with tail_bound(kernel, T) * sup_norm <= tolerance."""
    if tolerance <= 0:
        raise DomainError(f"Tolerance must be positive, got {tolerance}")
    if sup_norm == 0 or l1_norm(kernel) * sup_norm <= tolerance:
        return 0.0
    if kernel.form is KernelForm.EXPONENTIAL:
        ratio = abs(kernel.scale) * sup_norm / (kernel.rate * tolerance)
        return math.log(ratio) / kernel.rate
    for T in kernel.grid.nodes:
        if tail_bound(kernel, T) * sup_norm <= tolerance:
            return float(T)
    return kernel.support_hint


def _exponential_cell_weights(kernel: Kernel, dt: float) -> Tuple[float, float]:
    """Exact weights of e^{-rate tau} on one cell against a linear interpolant.

    Returns (near, far): weights of the sample at the cell end nearest to t
    and of the sample one step further into the past.
    """
    x = kernel.rate * dt
    mean = -math.expm1(-x) / x
    near = (1.0 - mean) / kernel.rate
    far = (mean - math.exp(-x)) / kernel.rate
    return kernel.scale * near, kernel.scale * far


def _trapezoid_lag_weights(kernel: Kernel, dt: float, n_lags: int) -> np.ndarray:
    """Trapezoid weights w_m for lags m * dt, m = 0..n_lags."""
    weights = dt * kernel.evaluate(dt * np.arange(n_lags + 1))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return weights


def convolve_history(
    kernel: Kernel, u: SampledPath, j: int, history_T: float
) -> np.ndarray:
    """
    Approximate int_{t_j - history_T}^{t_j} k(t_j - s) u(s) ds componentwise.

    Exponential kernels are integrated exactly against the piecewise-linear
    interpolant of u; sampled kernels use the trapezoidal rule. The neglected
    history contributes at most tail_bound(kernel, history_T) * ||u||_inf.

    Args:
        kernel: Memory kernel
        u: Path covering [t_j - history_T, t_j]
        j: Node index of the evaluation time
        history_T: Length of the history window

    Returns:
        np.ndarray: Vector of length u.dim

    Raises:
        CoverageError: If the path starts after t_j - history_T
    """
    if not 0 <= j < u.grid.n:
        raise InputError(f"Node index {j} outside path with {u.grid.n} nodes")
    if history_T < 0:
        raise DomainError(f"History length must be nonnegative, got {history_T}")
    dt = u.grid.dt
    steps = int(math.ceil(history_T / dt - NODE_TOLERANCE))
    if steps > j:
        missing = (steps - j) * dt
        raise CoverageError(
            f"Path needs {missing:g} more time units of history before "
            f"t={u.grid.t0}",
            required_extension=missing,
        )
    if steps == 0:
        return np.zeros(u.dim, dtype=u.values.dtype)

    window = u.values[j - steps : j + 1][::-1]
    if kernel.form is KernelForm.EXPONENTIAL:
        near, far = _exponential_cell_weights(kernel, dt)
        decay = np.exp(-kernel.rate * dt * np.arange(steps))
        cells = near * window[:-1] + far * window[1:]
        return decay @ cells
    weights = _trapezoid_lag_weights(kernel, dt, steps)
    return weights @ window


def history_convolution(
    kernel: Kernel,
    values: np.ndarray,
    dt: float,
    left_value: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Ku at every node of a uniformly sampled path extended constantly to the left.

    Samples before the first node equal left_value (default: the first
    sample), so the history is never truncated.

    Args:
        kernel: Memory kernel
        values: Samples of shape (n, dim)
        dt: Grid step
        left_value: Constant value of the path before its first node

    Returns:
        np.ndarray: Ku samples of shape (n, dim)
    """
    u = np.asarray(values)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    n = u.shape[0]
    left = u[0] if left_value is None else np.asarray(left_value)

    if kernel.form is KernelForm.EXPONENTIAL:
        near, far = _exponential_cell_weights(kernel, dt)
        increments = np.zeros_like(u)
        increments[1:] = near * u[1:] + far * u[:-1]
        inside = signal.lfilter(
            [1.0], [1.0, -math.exp(-kernel.rate * dt)], increments, axis=0
        )
        tail = np.array([tail_bound(kernel, j * dt) for j in range(n)])
        tail *= math.copysign(1.0, kernel.scale) if kernel.scale else 0.0
        return inside + tail[:, np.newaxis] * left[np.newaxis, :]

    _require_decay(kernel)
    n_lags = max(1, int(math.ceil(kernel.support_hint / dt - NODE_TOLERANCE)))
    weights = _trapezoid_lag_weights(kernel, dt, n_lags)
    padded = np.concatenate([np.repeat(left[np.newaxis, :], n_lags, axis=0), u])
    full = signal.fftconvolve(padded, weights[:, np.newaxis], axes=0)
    return full[n_lags : n_lags + n]


def convolve_path(kernel: Kernel, u: SampledPath) -> SampledPath:
    """Ku along a whole path, with constant extension before its first node."""
    return SampledPath(
        grid=u.grid, values=history_convolution(kernel, u.values, u.grid.dt)
    )
