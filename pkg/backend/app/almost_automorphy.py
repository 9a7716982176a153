"""
FracAAA - Almost Automorphy Diagnostics

This module provides numerical diagnostics for (asymptotically) almost
automorphic paths: translate tests along Diophantine shift sequences, the
split into an almost automorphic profile plus a decaying remainder, the
weighted C_h norm, and checks of the growth conditions that replace the
Lipschitz hypothesis in the existence theorem for non-Lipschitz forcings.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from app.errors import BudgetError, CoverageError, DomainError, FracAAAError, InputError
from app.fraccalc import SampledPath, TimeGrid
from app.forcing import AAAForcing, HolderGrowth, eval_forcing, time_translate_error
from app.memory import Kernel, history_convolution, l1_norm
from app.mlf import kernel_integral_identity, kernel_tail_integral

logger = logging.getLogger(__name__)

# Verdict of a translate test: errors non-increasing and the last one small
TRANSLATE_RELATIVE_LIMIT = 0.25
# Growth over the final decade of sample times accepted as "stabilized"
STABILIZATION_GROWTH = 0.01
DEFAULT_CONDITION_THRESHOLD = 1e-3
DEFAULT_LIMINF_MARGIN = 0.05


class WeightError(FracAAAError, ValueError):
    """Exception raised when a weight function drops below 1 or decreases."""

    pass


class ShiftProvenance(str, Enum):
    DIOPHANTINE_SQRT2 = "diophantine_sqrt2"
    USER = "user"


@dataclass(frozen=True)
class ShiftSequence:
    """Increasing positive shifts s_1 < s_2 < ... used by translate tests."""

    shifts: Tuple[float, ...]
    provenance: ShiftProvenance = ShiftProvenance.USER
    denominators: Tuple[int, ...] = ()
    numerators: Tuple[int, ...] = ()

    def __post_init__(self):
        shifts = tuple(float(s) for s in self.shifts)
        if not shifts:
            raise InputError("Shift sequence is empty")
        if shifts[0] <= 0 or any(b <= a for a, b in zip(shifts, shifts[1:])):
            raise InputError(f"Shifts must be positive and increasing, got {shifts}")
        object.__setattr__(self, "shifts", shifts)
        object.__setattr__(self, "provenance", ShiftProvenance(self.provenance))

    def __len__(self) -> int:
        return len(self.shifts)

    @property
    def largest(self) -> float:
        return self.shifts[-1]

    def to_dict(self) -> dict:
        return {"shifts": list(self.shifts), "provenance": self.provenance.value}


def sqrt2_convergents(n: int) -> List[Tuple[int, int]]:
    """First n convergents p/q of sqrt(2) = [1; 2, 2, 2, ...]."""
    if n < 1:
        raise DomainError(f"Need at least one convergent, got {n}")
    convergents = []
    p_prev, p = 1, 1
    q_prev, q = 0, 1
    convergents.append((p, q))
    for _ in range(n - 1):
        p_prev, p = p, 2 * p + p_prev
        q_prev, q = q, 2 * q + q_prev
        convergents.append((p, q))
    return convergents


def sqrt2_shift_sequence(n: int) -> ShiftSequence:
    """
    Shifts s_m = 2 pi q_m with q_m the convergent denominators of sqrt(2).

    Both cos(t + s_m) and cos(sqrt2 (t + s_m)) return to their unshifted
    values as m grows, since dist(sqrt2 q_m, Z) <= 1 / q_m.
    """
    convergents = sqrt2_convergents(n)
    return ShiftSequence(
        shifts=tuple(2.0 * math.pi * q for _, q in convergents),
        provenance=ShiftProvenance.DIOPHANTINE_SQRT2,
        denominators=tuple(q for _, q in convergents),
        numerators=tuple(p for p, _ in convergents),
    )


@dataclass(frozen=True)
class WeightFunction:
    """
    Weight h: R+ -> [1, inf), nondecreasing, extended by h(0) for t < 0.

    Kinds: "polynomial" h(t) = 1 + coefficient * t^power, "constant"
    h(t) = coefficient, "sampled" linear interpolation of (times, values).
    """

    kind: str = "polynomial"
    coefficient: float = 1.0
    power: float = 2.0
    times: Tuple[float, ...] = ()
    values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("polynomial", "constant", "sampled"):
            raise WeightError(f"Unknown weight kind '{self.kind}'")
        if self.kind == "polynomial" and (self.coefficient < 0 or self.power < 0):
            raise WeightError(
                "Polynomial weight needs nonnegative coefficient and power"
            )
        if self.kind == "constant" and self.coefficient < 1:
            raise WeightError(f"Constant weight must be >= 1, got {self.coefficient}")
        if self.kind == "sampled":
            times = np.asarray(self.times, dtype=float)
            values = np.asarray(self.values, dtype=float)
            if times.size < 2 or times.shape != values.shape:
                raise WeightError("Sampled weight needs matching times and values")
            if np.any(np.diff(times) <= 0) or times[0] != 0:
                raise WeightError("Sampled weight times must increase from 0")
            if np.any(values < 1):
                raise WeightError("Weight samples must be >= 1")
            if np.any(np.diff(values) < 0):
                raise WeightError("Weight samples must be nondecreasing")

    @classmethod
    def polynomial(
        cls, coefficient: float = 1.0, power: float = 2.0
    ) -> "WeightFunction":
        return cls(kind="polynomial", coefficient=coefficient, power=power)

    @classmethod
    def constant(cls, value: float = 1.0) -> "WeightFunction":
        return cls(kind="constant", coefficient=value)

    def __call__(self, t) -> np.ndarray:
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "polynomial":
            return 1.0 + self.coefficient * t**self.power
        if self.kind == "constant":
            return np.full(t.shape, self.coefficient)
        return np.interp(t, np.asarray(self.times), np.asarray(self.values))

    def to_dict(self) -> dict:
        data = {"kind": self.kind, "coefficient": self.coefficient, "power": self.power}
        if self.kind == "sampled":
            data.update(times=list(self.times), values=list(self.values))
        return data


@dataclass
class TranslateReport:
    """Sup-norm translate errors of a path along a shift sequence."""

    shifts: ShiftSequence
    errors: List[float]
    reverse_errors: List[float]
    limit_candidate: SampledPath
    scale: float
    decreasing: bool
    two_sided_ok: bool

    @property
    def relative_final_error(self) -> float:
        return self.errors[-1] / self.scale if self.scale > 0 else 0.0

    @property
    def is_almost_automorphic(self) -> bool:
        return self.decreasing and self.relative_final_error <= TRANSLATE_RELATIVE_LIMIT

    def to_dict(self) -> dict:
        return {
            "shifts": list(self.shifts.shifts),
            "errors": list(self.errors),
            "reverse_errors": list(self.reverse_errors),
            "decreasing": self.decreasing,
            "two_sided_ok": self.two_sided_ok,
            "relative_final_error": self.relative_final_error,
            "almost_automorphic": self.is_almost_automorphic,
        }

    def to_rows(self) -> Tuple[List[str], List[list]]:
        header = ["shift", "error", "reverse_error"]
        rows = [
            [s, e, r]
            for s, e, r in zip(self.shifts.shifts, self.errors, self.reverse_errors)
        ]
        return header, rows


@dataclass
class HypothesisReport:
    """Verdicts for the growth conditions of the non-Lipschitz existence theorem."""

    beta_samples: List[Tuple[float, float]]
    condition_i_ok: bool
    condition_i_trace: List[Tuple[float, float]]
    condition_iv_ok: bool
    liminf_samples: List[Tuple[float, float]]
    holder_variant: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "beta_samples": [list(s) for s in self.beta_samples],
            "condition_i_ok": self.condition_i_ok,
            "condition_i_trace": [list(s) for s in self.condition_i_trace],
            "condition_iv_ok": self.condition_iv_ok,
            "liminf_samples": [list(s) for s in self.liminf_samples],
            "holder_variant": self.holder_variant,
        }

    def to_rows(self) -> Tuple[List[str], List[list]]:
        return ["r", "beta"], [list(s) for s in self.beta_samples]


@dataclass
class CompositionCheck:
    """Translate error of t -> f(t, u(t), Ku(t)) against its composition bound."""

    shift: float
    path_error: float
    memory_error: float
    explicit_time_error: float
    composed_error: float
    bound: float
    nominal_bound: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "shift": self.shift,
            "path_error": self.path_error,
            "memory_error": self.memory_error,
            "explicit_time_error": self.explicit_time_error,
            "composed_error": self.composed_error,
            "bound": self.bound,
            "nominal_bound": self.nominal_bound,
            "ok": self.ok,
        }


def _sample(u: SampledPath, times: np.ndarray) -> np.ndarray:
    """Linear interpolation of u at many times, with a coverage check."""
    slack = 1e-9 * u.grid.dt
    low, high = float(np.min(times)), float(np.max(times))
    if low < u.grid.t0 - slack or high > u.grid.end + slack:
        extension = max(u.grid.t0 - low, high - u.grid.end)
        raise CoverageError(
            f"Path on [{u.grid.t0}, {u.grid.end}] does not cover "
            f"[{low:g}, {high:g}]",
            required_extension=extension,
        )
    nodes = u.times
    columns = [
        np.interp(times, nodes, u.values[:, k].real)
        + (1j * np.interp(times, nodes, u.values[:, k].imag) if u.is_complex else 0.0)
        for k in range(u.dim)
    ]
    return np.column_stack(columns)


def _non_increasing(errors: Sequence[float], scale: float) -> bool:
    slack = 1e-12 * max(scale, 1.0)
    return all(b <= a + slack for a, b in zip(errors, errors[1:]))


def translate_test(
    u: SampledPath, shifts: ShiftSequence, probe_grid: TimeGrid
) -> TranslateReport:
    """
    Translate errors e_m = max_t ||u(t + s_m) - u(t)|| over the probe nodes.

    The path itself serves as limit candidate. Reverse errors use t - s_m.

    Raises:
        CoverageError: If the path does not cover the probe grid shifted by
            plus and minus the largest shift
    """
    probes = probe_grid.nodes
    base = _sample(u, probes)
    _sample(u, probes + shifts.largest)
    _sample(u, probes - shifts.largest)

    errors, reverse = [], []
    for shift in shifts.shifts:
        forward = _sample(u, probes + shift)
        backward = _sample(u, probes - shift)
        errors.append(float(np.max(np.linalg.norm(forward - base, axis=1))))
        reverse.append(float(np.max(np.linalg.norm(backward - base, axis=1))))

    scale = float(np.max(np.linalg.norm(base, axis=1)))
    decreasing = _non_increasing(errors, scale)
    reverse_ok = _non_increasing(reverse, scale) and (
        scale == 0 or reverse[-1] / scale <= TRANSLATE_RELATIVE_LIMIT
    )
    report = TranslateReport(
        shifts=shifts,
        errors=errors,
        reverse_errors=reverse,
        limit_candidate=SampledPath(grid=probe_grid, values=base),
        scale=scale,
        decreasing=decreasing,
        two_sided_ok=reverse_ok,
    )
    logger.debug(f"Translate errors along {len(shifts)} shifts: {errors}")
    return report


def late_window_profile(u: SampledPath, shift: float) -> SampledPath:
    """The path translated back by a shift: t -> u(t + shift) on [t0, end - shift]."""
    if not shift > 0:
        raise DomainError(f"Profile shift must be positive, got {shift}")
    last = u.grid.n - 1 - int(math.ceil(shift / u.grid.dt - 1e-9))
    if last < 1:
        raise CoverageError(
            f"Shift {shift} leaves no window on [{u.grid.t0}, {u.grid.end}]",
            required_extension=shift - (u.grid.end - u.grid.t0) + u.grid.dt,
        )
    grid = TimeGrid(t0=u.grid.t0, dt=u.grid.dt, n=last + 1)
    return SampledPath(grid=grid, values=_sample(u, grid.nodes + shift))


def decay_split_test(
    u: SampledPath, candidate_aa: SampledPath, T: float, eps: float
) -> bool:
    """
    Check sup_{t_j >= T} ||u(t_j) - candidate_aa(t_j)|| <= eps.

    Raises:
        InputError: If the paths live on different grids
        CoverageError: If T lies beyond the grid
    """
    if u.grid != candidate_aa.grid or u.dim != candidate_aa.dim:
        raise InputError("Decay split needs both paths on the same grid")
    if T > u.grid.end:
        raise CoverageError(
            f"Split time {T} beyond grid end {u.grid.end}",
            required_extension=T - u.grid.end,
        )
    late = u.times >= T - 1e-9 * u.grid.dt
    remainder = np.linalg.norm(u.values[late] - candidate_aa.values[late], axis=1)
    return bool(np.max(remainder) <= eps)


def ch_norm(u: SampledPath, h: Callable) -> float:
    """
    Weighted norm ||u||_h = max_j ||u(t_j)|| / h(t_j).

    Raises:
        WeightError: If some weight sample is below 1
    """
    weights = np.asarray(h(u.times), dtype=float)
    if np.any(weights < 1):
        raise WeightError(f"Weight drops to {float(weights.min()):g} < 1")
    return float(np.max(u.norms() / weights))


def default_condition_times() -> np.ndarray:
    return np.concatenate([[0.0], np.logspace(-2, 8, 201)])


def _weighted_integral(
    alpha: float,
    omega: float,
    integrand_of_history: Callable[[np.ndarray], np.ndarray],
    at_origin: float,
    t: float,
) -> float:
    """
    int_0^t F(t - s) / (1 + |omega| s^alpha) ds
    + F(0) int_t^inf ds / (1 + |omega| s^alpha).
    """
    rate = abs(omega)
    tail = at_origin * kernel_tail_integral(alpha, omega, t)
    if t == 0:
        return tail
    knee = rate ** (-1.0 / alpha)
    points = [p for p in knee * 10.0 ** np.arange(-2, 12) if p < t]

    def integrand(s: float) -> float:
        return float(integrand_of_history(np.array(t - s))) / (1.0 + rate * s**alpha)

    head, _ = integrate.quad(
        integrand, 0.0, t, points=points or None, limit=500, epsabs=1e-13, epsrel=1e-10
    )
    return head + tail


def normalized_integrals(
    alpha: float,
    omega: float,
    W: Callable,
    h: Callable,
    r: float,
    times: np.ndarray,
) -> np.ndarray:
    """(1/h(t)) int_{-inf}^t W(r h(s)) / (1 + |omega| (t - s)^alpha) ds at each time."""
    at_origin = float(W(r * h(0.0)))
    values = [
        _weighted_integral(alpha, omega, lambda x: W(r * h(x)), at_origin, float(t))
        / float(h(t))
        for t in times
    ]
    return np.array(values)


def _last_decade_growth(times: np.ndarray, values: np.ndarray) -> float:
    """Relative growth of the running maximum over the final decade of times."""
    decade = times >= times[-1] / 10.0
    before = values[~decade]
    if before.size == 0:
        return 0.0
    reference = float(np.max(before))
    peak = float(np.max(values))
    if reference <= 0:
        return 0.0 if peak <= 0 else math.inf
    return peak / reference - 1.0


def beta_of_r(
    CM: float,
    alpha: float,
    omega: float,
    W: Callable,
    h: Callable,
    r: float,
    times: Optional[np.ndarray] = None,
) -> float:
    """
    beta(r) = CM || int_{-inf}^t W(r h(s)) / (1 + |omega| (t - s)^alpha) ds ||_h.

    The history before t = 0 uses h(0). The sup over t is sampled on the
    given times (log-spaced by default).

    Raises:
        BudgetError: If the sampled sup still grows over the last decade of times
    """
    if r < 0:
        raise DomainError(f"Radius must be nonnegative, got {r}")
    if times is None:
        times = default_condition_times()
    times = np.asarray(times, dtype=float)
    normalized = normalized_integrals(alpha, omega, W, h, r, times)
    growth = _last_decade_growth(times, normalized)
    if growth > STABILIZATION_GROWTH:
        raise BudgetError(
            f"Sampled sup for r={r} still grows by {growth:.2%} over the last "
            f"decade up to t={times[-1]:g}; extend the time grid"
        )
    return CM * float(np.max(normalized))


def _decreasing_over_last_decade(times: np.ndarray, values: np.ndarray) -> bool:
    decade = values[times >= times[-1] / 10.0]
    scale = max(float(np.max(np.abs(decade))), 1.0)
    return bool(np.all(np.diff(decade) <= 1e-9 * scale))


def holder_gamma_over_CM(
    alpha: float, omega: float, growth: HolderGrowth, h: Callable, times: np.ndarray
) -> Tuple[float, bool]:
    """
    sup_t (1/h(t)) int_{-inf}^t h(s)^theta / (1 + |omega| (t - s)^alpha) ds
    and whether it has stabilized.
    """
    theta = growth.theta
    at_origin = float(h(0.0)) ** theta
    values = np.array(
        [
            _weighted_integral(
                alpha, omega, lambda x: np.power(h(x), theta), at_origin, float(t)
            )
            / float(h(t))
            for t in times
        ]
    )
    stable = _last_decade_growth(times, values) <= STABILIZATION_GROWTH
    return float(np.max(values)), bool(stable and np.all(np.isfinite(values)))


def check_theorem2(
    CM: float,
    alpha: float,
    omega: float,
    W: Callable,
    h: Callable,
    r_grid: Sequence[float],
    xi_grid: Sequence[float],
    threshold: float = DEFAULT_CONDITION_THRESHOLD,
    margin: float = DEFAULT_LIMINF_MARGIN,
    times: Optional[np.ndarray] = None,
) -> HypothesisReport:
    """
    Check the growth conditions of the existence theorem for non-Lipschitz forcings.

    Condition (i) holds when, for every r, the normalized integral is below
    threshold at the largest time and decreasing over the last decade.
    Condition (iv) holds when min over the upper half of xi_grid of
    xi / beta(xi) exceeds 1 + margin.

    Args:
        CM: Decay constant of the resolvent family
        alpha: Fractional order in (1, 2)
        omega: Sector vertex, negative
        W: Nondecreasing growth bound of the forcing
        h: Weight function
        r_grid: Positive increasing radii
        xi_grid: Positive increasing arguments for the liminf test
        threshold: Level below which condition (i) counts as reached
        margin: Safety margin of the liminf test
        times: Sample times for the sup over t

    Returns:
        HypothesisReport: Verdicts with their sampled evidence
    """
    for name, grid in (("r_grid", r_grid), ("xi_grid", xi_grid)):
        values = np.asarray(grid, dtype=float)
        if values.size == 0 or np.any(values <= 0) or np.any(np.diff(values) <= 0):
            raise DomainError(f"{name} must be positive and increasing")
    kernel_integral_identity(alpha, omega)
    if times is None:
        times = default_condition_times()
    times = np.asarray(times, dtype=float)

    beta_samples = []
    condition_i_ok = True
    trace: List[Tuple[float, float]] = []
    for r in r_grid:
        normalized = normalized_integrals(alpha, omega, W, h, float(r), times)
        beta_samples.append((float(r), CM * float(np.max(normalized))))
        reached = normalized[-1] < threshold and _decreasing_over_last_decade(
            times, normalized
        )
        condition_i_ok = condition_i_ok and reached
        trace = [(float(t), float(v)) for t, v in zip(times, normalized)]

    tail = np.asarray(xi_grid, dtype=float)[len(xi_grid) // 2 :]
    liminf_samples = []
    for xi in tail:
        beta = beta_of_r(CM, alpha, omega, W, h, float(xi), times)
        liminf_samples.append((float(xi), float(xi) / beta if beta > 0 else math.inf))
    condition_iv_ok = min(ratio for _, ratio in liminf_samples) > 1.0 + margin

    holder = None
    if isinstance(W, HolderGrowth):
        gamma_over_CM, stable = holder_gamma_over_CM(alpha, omega, W, h, times)
        holder = {
            "gamma0": W.gamma0,
            "gamma1": W.gamma1,
            "theta": W.theta,
            "gamma_over_CM": gamma_over_CM,
            "gamma": CM * gamma_over_CM,
            "ok": stable,
        }

    logger.info(
        f"Growth conditions: (i) {'ok' if condition_i_ok else 'fails'}, "
        f"(iv) {'ok' if condition_iv_ok else 'fails'}"
    )
    return HypothesisReport(
        beta_samples=beta_samples,
        condition_i_ok=bool(condition_i_ok),
        condition_i_trace=trace,
        condition_iv_ok=bool(condition_iv_ok),
        liminf_samples=liminf_samples,
        holder_variant=holder,
    )


def composition_translate_check(
    f: AAAForcing,
    kernel: Kernel,
    u: SampledPath,
    shift: float,
    probe_grid: TimeGrid,
    memory: Optional[SampledPath] = None,
) -> CompositionCheck:
    """
    Compare the translate error of t -> f(t, u(t), Ku(t)) with its composition bound.

    The bound L_f (e_u + e_Ku) + e_time holds pointwise by the triangle
    inequality, where e_time is the translate error of f in its explicit
    time argument at the state of each probe time. The verdict uses the
    nominal bound L_f (1 + ||k||_1) e_u + e_time, which replaces the measured
    e_Ku with its kernel estimate.

    Args:
        f: Forcing (memory forcings only)
        kernel: Memory kernel
        u: Path covering the probe grid shifted by shift
        shift: Translation
        probe_grid: Probe times
        memory: Precomputed Ku along u (computed with constant extension if omitted)
    """
    if f.is_delay:
        raise InputError("Composition check covers memory forcings only")
    if memory is None:
        memory = u.with_values(history_convolution(kernel, u.values, u.grid.dt))
    probes = probe_grid.nodes
    state = _sample(u, probes)
    state_shifted = _sample(u, probes + shift)
    mem = _sample(memory, probes)
    mem_shifted = _sample(memory, probes + shift)

    path_error = float(np.max(np.linalg.norm(state_shifted - state, axis=1)))
    memory_error = float(np.max(np.linalg.norm(mem_shifted - mem, axis=1)))
    explicit = time_translate_error(f, state, mem, shift, probes)
    composed = eval_forcing(
        f, probes + shift, state_shifted, mem_shifted
    ) - eval_forcing(f, probes, state, mem)
    composed_error = float(np.max(np.linalg.norm(composed, axis=1)))

    bound = f.lipschitz_L * (path_error + memory_error) + explicit
    nominal = f.lipschitz_L * (1.0 + l1_norm(kernel)) * path_error + explicit
    ok = composed_error <= nominal * (1.0 + 1e-9) + 1e-14
    return CompositionCheck(
        shift=shift,
        path_error=path_error,
        memory_error=memory_error,
        explicit_time_error=explicit,
        composed_error=composed_error,
        bound=bound,
        nominal_bound=nominal,
        ok=ok,
    )
