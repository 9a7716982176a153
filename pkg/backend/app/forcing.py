"""
FracAAA - Forcing Terms

This module provides asymptotically almost automorphic forcing terms
f(t, u, phi) = f1 + f2, where f1 is almost automorphic in t and f2 decays,
together with the shipped example forcings and empirical Lipschitz checks.

The third argument phi is either the memory term Ku(t) or, for delay
forcings, the delayed state u(t - tau). States with more than one component
are sine-mode coefficients; spatial nonlinearities act pointwise on
collocation values.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from app.errors import DomainError, InputError
from app.fraccalc import SampledPath
from app.spectral_operator import SineCollocation

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
DEFAULT_FREQUENCIES = (1.0, SQRT2)

# Horizon and resolution of the scan for peaks of the almost periodic envelope
ENVELOPE_SCAN_END = 1100.0
ENVELOPE_SCAN_STEP = 0.01


class Nonlinearity(str, Enum):
    """Pointwise nonlinearities; all are 1-Lipschitz."""

    SINE = "sine"
    IDENTITY = "identity"
    ZERO = "zero"

    def apply(self, values: np.ndarray) -> np.ndarray:
        if self is Nonlinearity.SINE:
            return np.sin(values)
        if self is Nonlinearity.IDENTITY:
            return values
        return np.zeros_like(values)


@dataclass(frozen=True)
class SourceTerm:
    """State independent term amplitude * sum_i cos(nu_i t) on one mode."""

    amplitude: float
    frequencies: Tuple[float, ...] = DEFAULT_FREQUENCIES
    mode: int = 0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.amplitude, *self.frequencies)):
            raise DomainError("Source amplitude and frequencies must be finite")
        if self.mode < 0:
            raise DomainError(f"Source mode must be nonnegative, got {self.mode}")

    def value(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.amplitude * sum(np.cos(nu * t) for nu in self.frequencies)

    @property
    def sup(self) -> float:
        return abs(self.amplitude) * len(self.frequencies)

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "frequencies": list(self.frequencies),
            "mode": self.mode,
        }


@dataclass(frozen=True)
class HolderGrowth:
    """Growth bound W(r) = gamma0 + gamma1 * r^theta."""

    gamma0: float
    gamma1: float
    theta: float = 1.0

    def __post_init__(self):
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise DomainError("Growth coefficients must be nonnegative")
        if not 0 < self.theta <= 1:
            raise DomainError(f"Growth exponent must lie in (0, 1], got {self.theta}")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.gamma0 + self.gamma1 * np.power(r, self.theta)

    def to_dict(self) -> dict:
        return {"gamma0": self.gamma0, "gamma1": self.gamma1, "theta": self.theta}


@dataclass(frozen=True)
class AAAForcing:
    """
    Forcing f(t, u, phi) split into an almost automorphic and a decaying part.

    aa part:    m(t) * u + memory_scale * g(phi) + sources(t),
                with m(t) = sum_i a_i cos(nu_i t)
    decay part: decay_scale * e^{-|t|} * h(u)
    """

    multipliers: Tuple[Tuple[float, float], ...] = ()
    sources: Tuple[SourceTerm, ...] = ()
    decay_scale: float = 0.0
    decay_nonlinearity: Nonlinearity = Nonlinearity.SINE
    memory_scale: float = 0.0
    memory_nonlinearity: Nonlinearity = Nonlinearity.SINE
    delay_tau: Optional[float] = None
    lipschitz_L: float = 0.0
    lipschitz_derivation: str = ""
    growth: HolderGrowth = field(default_factory=lambda: HolderGrowth(0.0, 0.0))
    name: str = "custom"

    def __post_init__(self):
        """Validate forcing parameters after initialization."""
        if not math.isfinite(self.lipschitz_L) or self.lipschitz_L < 0:
            raise DomainError(
                f"Lipschitz constant must be >= 0, got {self.lipschitz_L}"
            )
        for amplitude, frequency in self.multipliers:
            if not (math.isfinite(amplitude) and math.isfinite(frequency)):
                raise DomainError(
                    "Multiplier amplitudes and frequencies must be finite"
                )
        if not (math.isfinite(self.decay_scale) and math.isfinite(self.memory_scale)):
            raise DomainError("Forcing scales must be finite")
        if self.delay_tau is not None and not self.delay_tau >= 0:
            raise DomainError(f"Delay must be nonnegative, got {self.delay_tau}")
        object.__setattr__(
            self, "decay_nonlinearity", Nonlinearity(self.decay_nonlinearity)
        )
        object.__setattr__(
            self, "memory_nonlinearity", Nonlinearity(self.memory_nonlinearity)
        )

    @property
    def is_delay(self) -> bool:
        return self.delay_tau is not None

    @property
    def is_state_independent(self) -> bool:
        return not self.multipliers and self.decay_scale == 0 and self.memory_scale == 0

    @property
    def memory_gain(self) -> Optional[float]:
        """Factor replacing ||k||_1 in the contraction constant; 1 for point delays."""
        return 1.0 if self.is_delay else None

    def multiplier(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for amplitude, frequency in self.multipliers:
            total = total + amplitude * np.cos(frequency * t)
        return total

    def envelope(self, t: np.ndarray) -> np.ndarray:
        """Decay envelope |decay_scale| e^{-|t|} of the decaying part."""
        return abs(self.decay_scale) * np.exp(-np.abs(np.asarray(t, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "beta": self.decay_scale,
            "frequencies": [nu for _, nu in self.multipliers],
            "multipliers": [list(pair) for pair in self.multipliers],
            "sources": [source.to_dict() for source in self.sources],
            "envelope_scale": self.decay_scale,
            "decay_nonlinearity": self.decay_nonlinearity.value,
            "memory_scale": self.memory_scale,
            "memory_nonlinearity": self.memory_nonlinearity.value,
            "delay_tau": self.delay_tau,
            "L_f": self.lipschitz_L,
            "L_f_derivation": self.lipschitz_derivation,
            "W": self.growth.to_dict(),
        }


def make_example1_forcing(beta: float, source_amplitude: float = 0.0) -> AAAForcing:
    """
    Relaxation-oscillation forcing with exponential memory coupling.

    f(t, w, Kw) = beta w (cos t + cos sqrt2 t) + beta e^{-|t|} sin(w) + sin(Kw),
    plus an optional source a (cos t + cos sqrt2 t) on the first mode. The
    forcing without source vanishes at the origin.
    """
    if not math.isfinite(beta) or not math.isfinite(source_amplitude):
        raise DomainError("Forcing parameters must be finite")
    lipschitz = max(3.0 * abs(beta), 1.0)
    sources = (SourceTerm(source_amplitude),) if source_amplitude else ()
    return AAAForcing(
        multipliers=((beta, 1.0), (beta, SQRT2)),
        sources=sources,
        decay_scale=beta,
        decay_nonlinearity=Nonlinearity.SINE,
        memory_scale=1.0,
        memory_nonlinearity=Nonlinearity.SINE,
        lipschitz_L=lipschitz,
        lipschitz_derivation=(
            f"state: 2|beta| + |beta| = {3.0 * abs(beta):g}; memory: 1; "
            f"L_f = max = {lipschitz:g}"
        ),
        growth=HolderGrowth(2.0 * abs(source_amplitude), lipschitz, 1.0),
        name="example1",
    )


def make_example2_forcing(
    beta: float, tau: float, source_amplitude: float = 0.0
) -> AAAForcing:
    """
    Point delay forcing
    a (cos t + cos sqrt2 t) e1 + beta sin(u(t - tau)) + beta e^{-|t|} sin(u).
    """
    if not math.isfinite(beta) or not math.isfinite(source_amplitude):
        raise DomainError("Forcing parameters must be finite")
    if not tau > 0:
        raise DomainError(f"Delay must be positive, got {tau}")
    lipschitz = abs(beta)
    sources = (SourceTerm(source_amplitude),) if source_amplitude else ()
    return AAAForcing(
        sources=sources,
        decay_scale=beta,
        decay_nonlinearity=Nonlinearity.SINE,
        memory_scale=beta,
        memory_nonlinearity=Nonlinearity.SINE,
        delay_tau=tau,
        lipschitz_L=lipschitz,
        lipschitz_derivation=(
            f"state: |beta|; delayed state: |beta|; L_f = {lipschitz:g}"
        ),
        growth=HolderGrowth(2.0 * abs(source_amplitude), lipschitz, 1.0),
        name="example2",
    )


def make_harmonic_forcing(
    amplitude: float, frequency: float, mode: int = 0
) -> AAAForcing:
    """State independent forcing amplitude * cos(frequency t) on one mode."""
    return AAAForcing(
        sources=(SourceTerm(amplitude, (frequency,), mode),),
        growth=HolderGrowth(abs(amplitude), 0.0, 1.0),
        lipschitz_derivation="state independent",
        name="harmonic",
    )


def make_constant_forcing(value: float, mode: int = 0) -> AAAForcing:
    """State independent constant forcing on one mode."""
    return AAAForcing(
        sources=(SourceTerm(value, (0.0,), mode),),
        growth=HolderGrowth(abs(value), 0.0, 1.0),
        lipschitz_derivation="state independent",
        name="constant",
    )


def _pointwise(nonlinearity: Nonlinearity, states: np.ndarray) -> np.ndarray:
    """Apply a pointwise nonlinearity to rows of mode coefficients."""
    if nonlinearity is Nonlinearity.IDENTITY:
        return states
    if nonlinearity is Nonlinearity.ZERO:
        return np.zeros_like(states)
    if states.shape[-1] == 1:
        return nonlinearity.apply(states)
    collocation = SineCollocation(n_modes=states.shape[-1])
    return collocation.to_coeffs(nonlinearity.apply(collocation.to_values(states)))


def _as_rows(t, u, phi) -> Tuple[np.ndarray, np.ndarray, np.ndarray, tuple]:
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if u.shape != phi.shape:
        raise InputError(f"State shapes differ: {u.shape} vs {phi.shape}")
    shape = u.shape
    if u.ndim == 0:
        u, phi = u.reshape(1, 1), phi.reshape(1, 1)
    elif u.ndim == 1:
        u, phi = u.reshape(1, -1), phi.reshape(1, -1)
    elif u.ndim != 2:
        raise InputError(f"States must have at most 2 dimensions, got {u.ndim}")
    times = np.broadcast_to(np.asarray(t, dtype=float).reshape(-1), (u.shape[0],))
    return times, u, phi, shape


def eval_aa_part(f: AAAForcing, t, u, phi) -> np.ndarray:
    """Almost automorphic part m(t) u + memory_scale g(phi) + sources(t)."""
    times, rows, coupled, shape = _as_rows(t, u, phi)
    out = f.multiplier(times)[:, np.newaxis] * rows
    if f.memory_scale:
        out = out + f.memory_scale * _pointwise(f.memory_nonlinearity, coupled)
    for source in f.sources:
        if source.mode >= rows.shape[1]:
            raise InputError(
                f"Source on mode {source.mode} but state has {rows.shape[1]} modes"
            )
        out[:, source.mode] += source.value(times)
    return out.reshape(shape)


def eval_decay_part(f: AAAForcing, t, u, phi) -> np.ndarray:
    """Decaying part decay_scale e^{-|t|} h(u)."""
    times, rows, _, shape = _as_rows(t, u, phi)
    if not f.decay_scale:
        return np.zeros(shape)
    out = f.envelope(times)[:, np.newaxis] * np.sign(f.decay_scale)
    out = out * _pointwise(f.decay_nonlinearity, rows)
    return out.reshape(shape)


def eval_forcing(f: AAAForcing, t, u, phi) -> np.ndarray:
    """
    Evaluate f(t, u, phi) pointwise in time.

    Args:
        f: Forcing
        t: Time, or one time per row of u
        u: Scalar, state vector of mode coefficients, or rows of states
        phi: Memory term Ku(t) (or delayed state) of the same shape as u

    Returns:
        np.ndarray: Forcing values with the shape of u

    Raises:
        InputError: If u and phi have different shapes
    """
    return eval_aa_part(f, t, u, phi) + eval_decay_part(f, t, u, phi)


def envelope_peak_times(f: AAAForcing, count: int = 8) -> np.ndarray:
    """Times in [0, ENVELOPE_SCAN_END] where |m(t)| is largest."""
    times = np.arange(0.0, ENVELOPE_SCAN_END, ENVELOPE_SCAN_STEP)
    if not f.multipliers:
        return times[:1]
    magnitude = np.abs(f.multiplier(times))
    return np.sort(times[np.argsort(magnitude)[-count:]])


def _ball_samples(rng: np.random.Generator, count: int, dim: int, radius: float):
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return directions * radii[:, np.newaxis]


def estimate_lipschitz(
    f: AAAForcing, radius: float, samples: int, dim: int = 1, seed: int = 0
) -> float:
    """
    Empirical Lipschitz constant of f over the ball of the given radius.

    Maximizes ||f(t,u,phi) - f(t,v,psi)|| / (||u - v|| + ||phi - psi||) over
    random pairs, pairs differing in one argument only, and nearby pairs,
    at random times plus t = 0 and the peaks of the multiplier envelope.

    Args:
        f: Forcing
        radius: Ball radius, must be positive
        samples: Number of pairs per category
        dim: State dimension (number of modes)
        seed: Seed of the sampling generator

    Returns:
        float: Largest observed difference quotient
    """
    if not radius > 0:
        raise DomainError(f"Radius must be positive, got {radius}")
    if samples < 1:
        raise DomainError(f"Need at least one sample, got {samples}")
    rng = np.random.default_rng(seed)

    special_times = np.concatenate([[0.0], envelope_peak_times(f)])
    times = np.concatenate(
        [
            rng.uniform(0.0, ENVELOPE_SCAN_END, samples),
            rng.choice(special_times, samples),
        ]
    )
    n = times.size

    u = _ball_samples(rng, n, dim, radius)
    phi = _ball_samples(rng, n, dim, radius)
    v = _ball_samples(rng, n, dim, radius)
    psi = _ball_samples(rng, n, dim, radius)
    small = _ball_samples(rng, n, dim, 1e-4 * radius)
    tiny = _ball_samples(rng, n, dim, 1e-3 * radius)

    categories = (
        (u, phi, v, psi),
        (u, phi, v, phi),
        (u, phi, u, psi),
        (u, phi, u + small, phi),
        (tiny, tiny, tiny + small, tiny),
    )
    best = 0.0
    for a, a_coupled, b, b_coupled in categories:
        denominator = np.linalg.norm(a - b, axis=1) + np.linalg.norm(
            a_coupled - b_coupled, axis=1
        )
        difference = eval_forcing(f, times, a, a_coupled) - eval_forcing(
            f, times, b, b_coupled
        )
        mask = denominator > 0
        if np.any(mask):
            ratios = np.linalg.norm(difference[mask], axis=1) / denominator[mask]
            best = max(best, float(ratios.max()))

    logger.debug(
        f"Empirical Lipschitz constant of {f.name}: {best:.6g} "
        f"(recorded {f.lipschitz_L:.6g})"
    )
    return best


def time_translate_error(
    f: AAAForcing, u: np.ndarray, phi: np.ndarray, shift: float, probe_times
) -> float:
    """
    Largest ||f(t + shift, u, phi) - f(t, u, phi)|| over the probe times.

    The state is held fixed while time moves: u and phi are either one state
    shared by all probe times or one row per probe time.
    """
    times = np.asarray(probe_times, dtype=float)
    rows = np.asarray(u, dtype=float)
    coupled = np.asarray(phi, dtype=float)
    if rows.ndim < 2:
        rows = np.broadcast_to(rows.reshape(1, -1), (times.size, rows.size))
        coupled = np.broadcast_to(coupled.reshape(1, -1), rows.shape)
    difference = eval_forcing(f, times + shift, rows, coupled) - eval_forcing(
        f, times, rows, coupled
    )
    return float(np.max(np.linalg.norm(difference, axis=1)))


def point_delay_eval(u: SampledPath, t: float, tau: float) -> np.ndarray:
    """
    Delayed state u(t - tau) by linear interpolation.

    Raises:
        DomainError: If tau < 0
        CoverageError: If the path does not cover t - tau
    """
    if not tau >= 0:
        raise DomainError(f"Delay must be nonnegative, got {tau}")
    return u.interpolate(t - tau)


def delayed_values(values: np.ndarray, dt: float, tau: float) -> np.ndarray:
    """Rows u(t_j - tau) of a uniformly sampled path extended constantly to the left."""
    values = np.asarray(values)
    n = values.shape[0]
    positions = np.clip(np.arange(n) - tau / dt, 0.0, n - 1)
    left = np.minimum(np.floor(positions).astype(int), max(n - 2, 0))
    weight = (positions - left)[:, np.newaxis]
    right = np.minimum(left + 1, n - 1)
    return (1.0 - weight) * values[left] + weight * values[right]
