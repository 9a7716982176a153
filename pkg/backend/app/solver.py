"""
FracAAA - Mild Solution Solver

This module provides the whole-line mild solution
u(t) = int_{-inf}^t S_alpha(t - s) f(s, u(s), Ku(s)) ds by Picard iteration,
the contraction constant that guarantees its uniqueness, the initial-value
variant with a nonlocal condition u(0) + g(u) = u0, and the comparison of
the two solutions for large t.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal, special

from app.errors import BudgetError, DomainError, FracAAAError, InputError
from app.fraccalc import NODE_TOLERANCE, SampledPath, TimeGrid
from app.forcing import AAAForcing, delayed_values, eval_forcing
from app.memory import Kernel, history_convolution, l1_norm
from app.mlf import (
    MAX_SERIES_TERMS,
    SERIES_RADIUS,
    check_solver_order,
    kernel_integral_identity,
    kernel_tail_integral,
    resolvent_symbols,
)
from app.spectral_operator import SpectralOperator, StateVector, operator_decay_constant

logger = logging.getLogger(__name__)

# Ratio used for the stopping rule before two iterate differences exist
DEFAULT_RATIO_GUESS = 0.5
# Relative slack of the theoretical gap envelope
ENVELOPE_SLACK = 1e-3
# Cells next to the origin whose symbol moments come from the power series
SERIES_CELLS = 16


class DivergenceError(FracAAAError):
    """Exception raised when a Picard iterate stops being finite."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class Verdict(str, Enum):
    CONTRACTIVE = "contractive"
    NOT_CONTRACTIVE = "not_contractive"


@dataclass(frozen=True)
class ContractionReport:
    """Contraction constant Lambda with the factors it was computed from."""

    Lambda: float
    CM: float
    omega: float
    alpha: float
    L_f: float
    k_l1: float
    memory_gain: float
    verdict: Verdict
    example1_condition_value: Optional[float] = None
    example2_condition_value: Optional[float] = None

    @property
    def factors(self) -> dict:
        return {
            "CM": self.CM,
            "omega": self.omega,
            "alpha": self.alpha,
            "L_f": self.L_f,
            "k_l1": self.k_l1,
        }

    def to_dict(self) -> dict:
        return {
            "Lambda": self.Lambda,
            "factors": self.factors,
            "memory_gain": self.memory_gain,
            "verdict": self.verdict.value,
            "example1_condition_value": self.example1_condition_value,
            "example1_condition_holds": (
                None
                if self.example1_condition_value is None
                else self.example1_condition_value < 1.0
            ),
            "example2_condition_value": self.example2_condition_value,
            "example2_condition_holds": (
                None
                if self.example2_condition_value is None
                else self.example2_condition_value < 1.0
            ),
        }


@dataclass(frozen=True)
class TruncationBudget:
    history_T: float
    tail_error_bound: float
    forcing_sup: float = 0.0

    def to_dict(self) -> dict:
        return {
            "history_T": self.history_T,
            "tail_error_bound": self.tail_error_bound,
            "forcing_sup": self.forcing_sup,
        }


@dataclass
class PicardResult:
    """Outcome of the Picard iteration on a solve window."""

    fixed_point: SampledPath
    residual: float
    iterate_deltas: List[float]
    empirical_ratio: float
    iterations: int
    truncation_budget: TruncationBudget
    converged: bool
    contraction: Optional[ContractionReport] = None
    forcing_path: Optional[SampledPath] = None
    coupling_path: Optional[SampledPath] = None

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "iterate_deltas": list(self.iterate_deltas),
            "empirical_ratio": self.empirical_ratio,
            "iterations": self.iterations,
            "converged": self.converged,
            "truncation_budget": self.truncation_budget.to_dict(),
            "contraction": (
                None if self.contraction is None else self.contraction.to_dict()
            ),
            "window": self.fixed_point.grid.to_dict(),
            "sup_norm": self.fixed_point.sup_norm(),
        }

    def to_rows(self) -> Tuple[List[str], List[list]]:
        """Header and per-node rows (t, ||u||, mode coefficients)."""
        header = ["t", "norm"] + [f"u_{k + 1}" for k in range(self.fixed_point.dim)]
        norms = self.fixed_point.norms()
        rows = [
            [float(t), float(norm)] + [float(v) for v in values]
            for t, norm, values in zip(
                self.fixed_point.times, norms, self.fixed_point.values
            )
        ]
        return header, rows


@dataclass(frozen=True)
class NonlocalCondition:
    """Nonlocal initial condition u(0) + sum_i c_i u(tau_i) = u0."""

    points: Tuple[Tuple[float, float], ...]
    u0: StateVector

    def __post_init__(self):
        points = tuple((float(tau), float(c)) for tau, c in self.points)
        for tau, c in points:
            if not (math.isfinite(tau) and tau >= 0 and math.isfinite(c)):
                raise InputError(f"Invalid nonlocal point ({tau}, {c})")
        object.__setattr__(self, "points", points)

    def g(self, reference: SampledPath) -> np.ndarray:
        """g(u) = sum_i c_i u(tau_i) on the reference path.

        Raises:
            CoverageError: If some tau_i lies outside the reference path
        """
        total = np.zeros(reference.dim)
        for tau, c in self.points:
            total = total + c * reference.interpolate(tau)
        return total

    def to_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "u0": self.u0.coeffs.tolist()}


@dataclass
class GapReport:
    """Per-node gap ||v(t) - u(t)|| with its envelope checks."""

    times: np.ndarray
    gap: np.ndarray
    fitted_constant: Optional[float] = None
    envelope: Optional[np.ndarray] = None
    envelope_ok: Optional[bool] = None
    decay_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "fitted_constant": self.fitted_constant,
            "envelope_ok": self.envelope_ok,
            "decay_ratio_50_over_1": self.decay_ratio,
            "max_gap": float(np.max(self.gap)),
            "final_gap": float(self.gap[-1]),
        }

    def to_rows(self) -> Tuple[List[str], List[list]]:
        header = ["t", "gap", "envelope"]
        envelope = self.envelope
        if envelope is None:
            envelope = [math.nan] * len(self.gap)
        rows = [
            [float(t), float(g), float(e)]
            for t, g, e in zip(self.times, self.gap, envelope)
        ]
        return header, rows


def _lambda_factor(alpha: float, omega: float) -> float:
    return abs(omega) ** (-1.0 / alpha) * math.pi / (alpha * math.sin(math.pi / alpha))


def contraction_constant(
    CM: float,
    alpha: float,
    omega: float,
    L_f: float,
    k_l1: float,
    beta: Optional[float] = None,
    mu: Optional[float] = None,
    delay: bool = False,
) -> ContractionReport:
    """
    Contraction constant
    Lambda = CM |omega|^(-1/alpha) pi / (alpha sin(pi/alpha)) L_f (1 + ||k||_1).

    For point delays the memory gain ||k||_1 is replaced by 1. When beta and
    mu are supplied, the smallness condition for the relaxation-oscillation
    example, (|beta| + 1) 3 CM |mu|^(-1/alpha) pi / (alpha sin(pi/alpha)) < 1,
    is evaluated alongside; for delay forcings the condition
    2 L_f |omega|^(-1/alpha) pi / (alpha sin(pi/alpha)) < 1 is.

    Raises:
        DomainError: If alpha is not in (1, 2) or a factor is out of range
    """
    check_solver_order(alpha)
    if not (math.isfinite(CM) and CM > 0):
        raise DomainError(f"CM must be positive, got {CM}")
    if not (math.isfinite(omega) and omega < 0):
        raise DomainError(f"omega must be negative, got {omega}")
    if not (math.isfinite(L_f) and L_f >= 0):
        raise DomainError(f"L_f must be nonnegative, got {L_f}")
    if not (math.isfinite(k_l1) and k_l1 >= 0):
        raise DomainError(f"Kernel norm must be nonnegative, got {k_l1}")

    memory_gain = 1.0 if delay else k_l1
    Lambda = CM * _lambda_factor(alpha, omega) * L_f * (1.0 + memory_gain)

    example1 = None
    if beta is not None and mu is not None:
        if mu == 0:
            raise DomainError("Example condition needs a nonzero shift mu")
        example1 = (abs(beta) + 1.0) * 3.0 * CM * _lambda_factor(alpha, -abs(mu))
    example2 = 2.0 * L_f * _lambda_factor(alpha, omega) if delay else None

    return ContractionReport(
        Lambda=Lambda,
        CM=CM,
        omega=omega,
        alpha=alpha,
        L_f=L_f,
        k_l1=k_l1,
        memory_gain=memory_gain,
        verdict=Verdict.CONTRACTIVE if Lambda < 1 else Verdict.NOT_CONTRACTIVE,
        example1_condition_value=example1,
        example2_condition_value=example2,
    )


def lambda_via_identity(
    CM: float, alpha: float, omega: float, L_f: float, k_l1: float
) -> float:
    """Lambda assembled from the closed-form kernel integral."""
    return CM * L_f * (1.0 + k_l1) * kernel_integral_identity(alpha, omega)


def _series_cell_moments(
    alpha: float, mu: float, dt: float, cells: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hat moments of the first cells, summed termwise from the power series.

    Needs |mu| (cells dt)^alpha within the series radius.
    """
    j = np.arange(cells, dtype=float)
    b = j + 1.0
    z = mu * dt**alpha
    left = np.zeros(cells)
    right = np.zeros(cells)
    for k in range(MAX_SERIES_TERMS):
        p = alpha * k
        coefficient = z**k * special.rgamma(p + 1.0)
        rise1 = (b ** (p + 1.0) - j ** (p + 1.0)) / (p + 1.0)
        rise2 = (b ** (p + 2.0) - j ** (p + 2.0)) / (p + 2.0)
        term_left = coefficient * (b * rise1 - rise2)
        term_right = coefficient * (rise2 - j * rise1)
        left += term_left
        right += term_right
        if k > 0 and np.max(np.abs(term_left) + np.abs(term_right)) < 1e-18:
            break
    return dt * left, dt * right


def _cell_moments(
    alpha: float, mu: float, dt: float, cells: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integrals of the symbol against the falling and rising hat of each cell.

    Three point Gauss-Legendre per cell; the cells next to the s^alpha cusp
    at the origin use the power series instead.
    """
    nodes, gauss = np.polynomial.legendre.leggauss(3)
    theta = 0.5 * (nodes + 1.0)
    gauss = 0.5 * gauss
    sigma = dt * (np.arange(cells)[:, np.newaxis] + theta[np.newaxis, :])
    symbols = resolvent_symbols(alpha, mu, sigma.ravel()).reshape(sigma.shape)
    left = dt * (symbols * (1.0 - theta)) @ gauss
    right = dt * (symbols * theta) @ gauss

    series = min(cells, SERIES_CELLS)
    while series > 0 and abs(mu) * (dt * series) ** alpha > SERIES_RADIUS:
        series -= 1
    if series:
        left[:series], right[:series] = _series_cell_moments(alpha, mu, dt, series)
    return left, right


def product_symbol_weights(alpha: float, mu: float, dt: float, pad: int) -> np.ndarray:
    """
    Lag weights w_j of the product trapezoidal rule for the resolvent symbol.

    sum_j w_j g(t - j dt) equals int_0^{pad dt} E_alpha(mu s^alpha) g(t - s) ds
    for piecewise linear g with nodes on the grid.
    """
    left, right = _cell_moments(alpha, mu, dt, pad)
    weights = np.zeros(pad + 1)
    weights[:-1] += left
    weights[1:] += right
    return weights


@dataclass
class _MildMap:
    """Discretized F on a window with a constant-extension history pad."""

    op: SpectralOperator
    forcing: AAAForcing
    kernel: Kernel
    window: TimeGrid
    alpha: float
    pad: int
    weighted_symbols: np.ndarray = field(repr=False)
    pad_times: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls,
        op: SpectralOperator,
        forcing: AAAForcing,
        kernel: Kernel,
        window: TimeGrid,
        history_T: float,
        alpha: float,
    ) -> "_MildMap":
        dt = window.dt
        pad = max(1, int(math.ceil(history_T / dt - NODE_TOLERANCE)))
        weights = np.column_stack(
            [product_symbol_weights(alpha, mu, dt, pad) for mu in op.eigenvalues]
        )
        pad_times = window.t0 + dt * np.arange(-pad, window.n)
        return cls(
            op=op,
            forcing=forcing,
            kernel=kernel,
            window=window,
            alpha=alpha,
            pad=pad,
            weighted_symbols=weights,
            pad_times=pad_times,
        )

    @property
    def history_T(self) -> float:
        return self.pad * self.window.dt

    def padded(self, values: np.ndarray) -> np.ndarray:
        return np.concatenate([np.repeat(values[:1], self.pad, axis=0), values])

    def coupling(self, padded: np.ndarray) -> np.ndarray:
        """Third forcing argument along the padded path: Ku, or u(t - tau)."""
        if self.forcing.is_delay:
            return delayed_values(padded, self.window.dt, self.forcing.delay_tau)
        return history_convolution(self.kernel, padded, self.window.dt)

    def forcing_samples(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        padded = self.padded(values)
        coupled = self.coupling(padded)
        return eval_forcing(self.forcing, self.pad_times, padded, coupled), coupled

    def __call__(self, values: np.ndarray) -> Tuple[np.ndarray, float]:
        """Apply F; returns the new window values and the forcing sup norm."""
        samples, _ = self.forcing_samples(values)
        full = signal.fftconvolve(samples, self.weighted_symbols, axes=0)
        image = full[self.pad : self.pad + self.window.n]
        return image, float(np.max(np.linalg.norm(samples, axis=1)))


def apply_mild_map(
    op: SpectralOperator,
    f: AAAForcing,
    kernel: Kernel,
    u: SampledPath,
    history_T: float,
    alpha: float,
) -> SampledPath:
    """One application of the discretized map F to the path u."""
    check_solver_order(alpha)
    if u.dim != op.n_modes:
        raise InputError(f"Path has {u.dim} modes, operator has {op.n_modes}")
    mild_map = _MildMap.build(op, f, kernel, u.grid, history_T, alpha)
    image, _ = mild_map(np.real(u.values))
    return u.with_values(image)


def _empirical_ratio(deltas: Sequence[float], fallback: float) -> float:
    ratios = [
        later / earlier
        for earlier, later in zip(deltas[:-1], deltas[1:])
        if earlier > 0
    ]
    if len(ratios) > 1:
        ratios = ratios[1:]
    return max(ratios) if ratios else fallback


def picard_solve(
    op: SpectralOperator,
    f: AAAForcing,
    kernel: Kernel,
    window: TimeGrid,
    history_T: float,
    tol: float,
    max_iter: int,
    initial_guess: Optional[SampledPath] = None,
    alpha: float = 1.5,
    decay_constant: Optional[float] = None,
    max_tail_error: Optional[float] = None,
) -> PicardResult:
    """
    Whole-line mild solution on a solve window by Picard iteration.

    The iterate is extended to the left of the window by its first value. For
    each node, int_{t_j - history_T}^{t_j} E_alpha(mu_k (t_j - s)^alpha) f_k(s) ds
    is approximated modewise by the product trapezoidal rule, with the symbol
    integrated cell by cell against the linear interpolant of f_k; the
    neglected history is bounded by
    CM ||f||_inf int_{history_T}^inf ds / (1 + |omega| s^alpha).

    Args:
        op: Diagonal sectorial operator
        f: Forcing
        kernel: Memory kernel (ignored by delay forcings)
        window: Solve window grid
        history_T: Length of the history pad
        tol: Requested sup-norm accuracy of the fixed point
        max_iter: Iteration cap
        initial_guess: Starting path on the window (default zero)
        alpha: Fractional order in (1, 2)
        decay_constant: CM; certified from the operator when omitted
        max_tail_error: Largest admissible truncation bound

    Returns:
        PicardResult: Fixed point, residual and iteration history

    Raises:
        DivergenceError: If an iterate is not finite
        BudgetError: If the truncation bound exceeds max_tail_error
    """
    check_solver_order(alpha)
    if not history_T > 0:
        raise DomainError(f"History length must be positive, got {history_T}")
    if not tol > 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError(f"Need at least one iteration, got {max_iter}")

    if initial_guess is None:
        current = np.zeros((window.n, op.n_modes))
    else:
        if initial_guess.grid != window or initial_guess.dim != op.n_modes:
            raise InputError(
                "Initial guess must live on the solve window with all modes"
            )
        current = np.real(initial_guess.values).astype(float)

    omega = op.sector.omega
    CM = decay_constant
    if CM is None:
        horizon = max(window.end - window.t0, history_T)
        CM = operator_decay_constant(op, alpha, t_max=horizon)
    k_l1 = 0.0 if f.is_delay else l1_norm(kernel)
    report = contraction_constant(
        CM, alpha, omega, f.lipschitz_L, k_l1, delay=f.is_delay
    )
    if report.verdict is Verdict.NOT_CONTRACTIVE:
        logger.warning(
            f"Lambda={report.Lambda:.4g} >= 1: convergence is not guaranteed"
        )

    mild_map = _MildMap.build(op, f, kernel, window, history_T, alpha)
    fallback = report.Lambda if report.Lambda < 1 else DEFAULT_RATIO_GUESS
    deltas: List[float] = []
    forcing_sup = 0.0
    converged = False
    iterations = 0

    for iteration in range(1, max_iter + 1):
        following, forcing_sup = mild_map(current)
        if not np.all(np.isfinite(following)):
            raise DivergenceError(
                f"Picard iterate {iteration} is not finite", iteration=iteration
            )
        delta = float(np.max(np.linalg.norm(following - current, axis=1)))
        deltas.append(delta)
        current = following
        iterations = iteration
        ratio = _empirical_ratio(deltas, fallback)
        logger.debug(
            f"Picard iteration {iteration}: delta={delta:.3e}, ratio={ratio:.3f}"
        )
        if delta == 0.0 or (ratio < 1 and delta <= tol * (1.0 - ratio)):
            converged = True
            break

    empirical_ratio = _empirical_ratio(deltas, fallback)
    image, forcing_sup = mild_map(current)
    residual = float(np.max(np.linalg.norm(image - current, axis=1)))
    tail = CM * forcing_sup * kernel_tail_integral(alpha, omega, mild_map.history_T)
    budget = TruncationBudget(
        history_T=mild_map.history_T, tail_error_bound=tail, forcing_sup=forcing_sup
    )
    if max_tail_error is not None and tail > max_tail_error:
        raise BudgetError(
            f"History of length {mild_map.history_T:g} leaves a tail bound "
            f"{tail:.3e} above {max_tail_error:.3e}"
        )
    if not converged:
        logger.warning(
            f"Picard iteration stopped after {iterations} steps with "
            f"delta={deltas[-1]:.3e}"
        )
    else:
        logger.info(
            f"Picard converged in {iterations} iterations, residual={residual:.3e}, "
            f"tail bound={tail:.3e}"
        )

    samples, coupled = mild_map.forcing_samples(current)
    pad = mild_map.pad
    return PicardResult(
        fixed_point=SampledPath(grid=window, values=current),
        residual=residual,
        iterate_deltas=deltas,
        empirical_ratio=float(empirical_ratio),
        iterations=iterations,
        truncation_budget=budget,
        converged=converged,
        contraction=report,
        forcing_path=SampledPath(grid=window, values=samples[pad:]),
        coupling_path=SampledPath(grid=window, values=coupled[pad:]),
    )


def ivp_solve(
    op: SpectralOperator,
    f_path: SampledPath,
    cond: NonlocalCondition,
    alpha: float,
    window: TimeGrid,
    reference: Optional[SampledPath] = None,
) -> SampledPath:
    """
    Variation-of-parameters solution
    v(t) = S_alpha(t)(u0 - g(u)) + int_0^t S_alpha(t - s) f(s) ds.

    Args:
        op: Diagonal sectorial operator
        f_path: Forcing samples on the window
        cond: Nonlocal condition; g is evaluated on the reference path
        alpha: Fractional order in (1, 2)
        window: Grid starting at t = 0
        reference: Path u entering g(u); zero when omitted

    Raises:
        InputError: If the window does not start at 0 or shapes disagree
        CoverageError: If a nonlocal point lies outside the reference path
    """
    check_solver_order(alpha)
    if abs(window.t0) > NODE_TOLERANCE:
        raise InputError(f"Initial-value window must start at 0, got {window.t0}")
    if f_path.grid != window or f_path.dim != op.n_modes:
        raise InputError("Forcing path must live on the window with all modes")
    if cond.u0.n_modes != op.n_modes:
        raise InputError(f"u0 has {cond.u0.n_modes} modes, operator has {op.n_modes}")

    g_value = np.zeros(op.n_modes) if reference is None else cond.g(reference)
    start = cond.u0.coeffs - g_value

    table = np.column_stack(
        [resolvent_symbols(alpha, mu, window.nodes) for mu in op.eigenvalues]
    )
    forcing = np.real(f_path.values)
    duhamel = np.zeros_like(forcing)
    for k, mu in enumerate(op.eigenvalues):
        left, right = _cell_moments(alpha, mu, window.dt, window.n)
        weights = left.copy()
        weights[1:] += right[:-1]
        column = forcing[:, k]
        # the cell reaching below t = 0 does not exist on [0, t_j]
        duhamel[:, k] = (
            signal.fftconvolve(column, weights)[: window.n] - left * column[0]
        )
    duhamel[0] = 0.0

    return SampledPath(grid=window, values=table * start + duhamel)


def asymptotic_gap(
    v: SampledPath,
    u: SampledPath,
    omega: Optional[float] = None,
    alpha: Optional[float] = None,
    decay_constant: Optional[float] = None,
    transient_norm: Optional[float] = None,
    forcing_sup: Optional[float] = None,
) -> GapReport:
    """
    Gap ||v(t_j) - u(t_j)|| between the initial-value and whole-line solutions.

    With omega and alpha the gap is fitted against c / (1 + |omega| t^alpha);
    with CM, ||u0 - g(u)|| and ||f||_inf it is also checked against
    CM ||u0 - g(u)|| / (1 + |omega| t^alpha)
    + CM ||f||_inf int_t^inf ds / (1 + |omega| s^alpha).

    Raises:
        InputError: If the paths live on different grids
    """
    if v.grid != u.grid or v.dim != u.dim:
        raise InputError("Gap needs paths on the same grid with equal dimension")
    times = u.times
    gap = np.linalg.norm(v.values - u.values, axis=1)
    report = GapReport(times=times, gap=gap)

    if omega is not None and alpha is not None:
        positive = times > 0
        decay = 1.0 + abs(omega) * np.where(positive, times, 0.0) ** alpha
        report.fitted_constant = float(np.max(gap * decay))
        if None not in (decay_constant, transient_norm, forcing_sup):
            tails = np.array(
                [kernel_tail_integral(alpha, omega, float(max(t, 0.0))) for t in times]
            )
            envelope = (
                decay_constant * transient_norm / decay
                + decay_constant * forcing_sup * tails
            )
            report.envelope = envelope
            report.envelope_ok = bool(np.all(gap <= envelope * (1.0 + ENVELOPE_SLACK)))

    if u.grid.covers(1.0) and u.grid.covers(50.0):
        early = float(np.linalg.norm(v.interpolate(1.0) - u.interpolate(1.0)))
        late = float(np.linalg.norm(v.interpolate(50.0) - u.interpolate(50.0)))
        report.decay_ratio = late / early if early > 0 else None
    return report
