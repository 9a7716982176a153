"""
FracAAA - Mittag-Leffler Evaluation and Resolvent Symbols

This module provides evaluation of the Mittag-Leffler function E_alpha(z),
an independent contour-integral oracle for the scalar resolvent symbol
E_alpha(mu t^alpha), empirical decay certificates for that symbol and the
closed-form kernel integral identity used by the contraction constant.

E_alpha is evaluated in three regimes:
    series      Taylor series, for moderate |z|
    asymptotic  exponential pole terms plus the optimally truncated algebraic
                expansion, for large |z|
    integral    the same pole terms plus the branch-cut integral computed by
                adaptive quadrature, when neither of the above is reliable
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import integrate, special

from app.errors import DomainError, FracAAAError

logger = logging.getLogger(__name__)

SERIES_RADIUS = 10.0
CROSSOVER_BAND = (8.0, 12.0)
TARGET_ACCURACY = 1e-10

# Smallest retained asymptotic term accepted as truncation error
ASYMPTOTIC_TOLERANCE = 1e-11
MAX_SERIES_TERMS = 3000
MAX_ASYMPTOTIC_TERMS = 80

# Hyperbolic contour defaults for the scaled variable s = lambda * t
DEFAULT_CONTOUR_NODES = 32
CONTOUR_DELTA = 1.1721
CONTOUR_STEP_FACTOR = 1.0818
CONTOUR_SCALE_FACTOR = 4.4921
POLE_CLEARANCE = 4.4
# (scale factor, delta) pairs tried when a pole sits near the default contour
_CONTOUR_RETRIES = (
    (1.0, CONTOUR_DELTA),
    (0.75, CONTOUR_DELTA),
    (1.25, CONTOUR_DELTA),
    (0.55, CONTOUR_DELTA),
    (0.9, 1.3),
    (0.65, 1.3),
    (1.1, 1.3),
    (0.8, 1.05),
    (0.6, 1.05),
)

CERTIFICATE_MIN_RANGE = 1e3
STABILIZATION_TOLERANCE = 0.05


class MittagLefflerEvaluationError(FracAAAError):
    """Exception raised when no evaluation regime is reliable."""

    def __init__(self, message: str, attempted_regimes: Optional[List[str]] = None):
        super().__init__(message)
        self.attempted_regimes = list(attempted_regimes or [])


class ContourConfigurationError(FracAAAError, ValueError):
    """Exception raised for an invalid or ill-conditioned contour."""

    pass


@dataclass(frozen=True)
class SectorType:
    """Sector data of a sectorial operator: type omega, angle theta, bound M."""

    omega: float
    theta: float
    M: float

    def __post_init__(self):
        """Validate sector data after initialization."""
        if not math.isfinite(self.omega):
            raise DomainError(f"Sector type must be finite, got {self.omega}")
        if not math.isfinite(self.M) or self.M <= 0:
            raise DomainError(f"Resolvent bound M must be positive, got {self.M}")
        if not (0.0 <= self.theta < math.pi / 2):
            raise DomainError(f"Sector angle must lie in [0, pi/2), got {self.theta}")

    @classmethod
    def negative_type(cls, omega: float, theta: float, M: float) -> "SectorType":
        """Constructor for solver use; rejects omega >= 0."""
        if omega >= 0:
            raise DomainError(f"Solver requires a sector of negative type, got {omega}")
        return cls(omega=omega, theta=theta, M=M)

    def admits_order(self, alpha: float) -> bool:
        """Check theta < pi * (1 - alpha / 2)."""
        return self.theta < math.pi * (1.0 - alpha / 2.0)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DecayCertificate:
    """Empirical c_est with |E_alpha(mu t^alpha)| <= c_est / (1 + |mu| t^alpha).

    The bound holds on the log-spaced grid returned by sample_times().
    """

    alpha: float
    mu: float
    c_est: float
    t_max: float
    grid_points: int
    t_min: float

    def __post_init__(self):
        if not math.isfinite(self.c_est) or self.c_est <= 0:
            raise MittagLefflerEvaluationError(
                f"Certificate constant must be finite and positive, got {self.c_est}",
                attempted_regimes=["certificate"],
            )

    def sample_times(self) -> np.ndarray:
        return certificate_grid(self.t_min, self.t_max, self.grid_points)

    def bound(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.c_est / (1.0 + abs(self.mu) * t**self.alpha)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MittagLefflerValue:
    """E_alpha(z) with the regime that produced it."""

    value: complex
    regime: str
    crossover_discrepancy: Optional[float] = None


@dataclass(frozen=True)
class ContourParameters:
    """Hyperbola s(theta) = sigma * (1 - sin(delta - i theta)) in the variable lambda*t.

    Leave sigma / delta as None to use the defaults and allow automatic
    retries around nearby poles.
    """

    n_nodes: int = DEFAULT_CONTOUR_NODES
    sigma: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if self.n_nodes < 4:
            raise ContourConfigurationError(
                f"Contour needs at least 4 nodes, got {self.n_nodes}"
            )
        if self.sigma is not None and not self.sigma > 0:
            raise ContourConfigurationError(
                f"Contour scale must be positive, got {self.sigma}"
            )
        if self.delta is not None and not (0.0 < self.delta < math.pi / 2):
            raise ContourConfigurationError(
                f"Contour angle must lie in (0, pi/2), got {self.delta}"
            )

    @property
    def step(self) -> float:
        return CONTOUR_STEP_FACTOR / self.n_nodes


@dataclass(frozen=True)
class StabilizationReport:
    """Certificate before and after doubling both sample count and horizon."""

    base: DecayCertificate
    refined: DecayCertificate
    relative_change: float
    stable: bool

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "refined": self.refined.to_dict(),
            "relative_change": self.relative_change,
            "stable": self.stable,
        }


def _check_alpha(alpha: float) -> None:
    if not math.isfinite(alpha) or not (0.0 < alpha <= 2.0):
        raise DomainError(f"Mittag-Leffler order must lie in (0, 2], got {alpha}")


def check_solver_order(alpha: float) -> None:
    if not math.isfinite(alpha) or not (1.0 < alpha < 2.0):
        raise DomainError(f"Order must lie in the open interval (1, 2), got {alpha}")


def _pole_terms(alpha: float, z: np.ndarray) -> np.ndarray:
    """Sum of residues e^{s_p}/alpha over the principal-sheet roots of s^alpha = z."""
    radius = np.abs(z) ** (1.0 / alpha)
    arg = np.angle(z)
    total = np.zeros(z.shape, dtype=complex)
    for m in (-1, 0, 1):
        phase = arg + 2.0 * math.pi * m
        inside = np.abs(phase) < alpha * math.pi
        if np.any(inside):
            s = radius[inside] * np.exp(1j * phase[inside] / alpha)
            total[inside] += np.exp(s) / alpha
    return total


def _series(alpha: float, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Taylor series with a rounding estimate; returns (values, reliable)."""
    k = np.arange(MAX_SERIES_TERMS, dtype=float)
    log_gamma = special.gammaln(alpha * k + 1.0)
    values = np.zeros(z.shape, dtype=complex)
    reliable = np.zeros(z.shape, dtype=bool)
    for i, zi in enumerate(z):
        r = abs(zi)
        if r == 0:
            values[i] = 1.0
            reliable[i] = True
            continue
        with np.errstate(over="ignore"):
            magnitudes = np.exp(k * math.log(r) - log_gamma)
        if not np.all(np.isfinite(magnitudes)):
            continue
        if zi.imag == 0:
            sign = -1.0 if zi.real < 0 else 1.0
            terms = magnitudes * np.where(k % 2 == 0, 1.0, sign)
        else:
            terms = magnitudes * np.exp(1j * k * np.angle(zi))
        total = terms.sum()
        absolute_sum = magnitudes.sum()
        converged = magnitudes[-1] <= 1e-17 * max(absolute_sum, 1.0)
        rounding = np.finfo(float).eps * absolute_sum
        values[i] = total
        reliable[i] = bool(converged and rounding <= TARGET_ACCURACY)
    return values, reliable


def _asymptotic(alpha: float, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pole terms plus optimally truncated algebraic expansion."""
    n_terms = min(MAX_ASYMPTOTIC_TERMS, int(170.0 / alpha))
    k = np.arange(1, n_terms + 1, dtype=float)
    inverse_gamma = special.rgamma(1.0 - alpha * k)
    values = np.zeros(z.shape, dtype=complex)
    reliable = np.zeros(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        poles = _pole_terms(alpha, z)
    for i, zi in enumerate(z):
        if zi == 0 or not np.isfinite(poles[i]):
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            terms = inverse_gamma * np.exp(-k * np.log(complex(zi)))
            magnitudes = np.abs(terms)
        nonzero = magnitudes > 0
        if not np.any(nonzero):
            values[i] = poles[i]
            reliable[i] = True
            continue
        candidates = np.where(nonzero)[0]
        best = candidates[np.argmin(magnitudes[candidates])]
        values[i] = poles[i] - terms[: best + 1].sum()
        reliable[i] = bool(magnitudes[best] <= ASYMPTOTIC_TOLERANCE)
    return values, reliable


def _cut_integral(alpha: float, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Pole terms plus the branch-cut integral along the negative real axis.

    After the substitution s = r^alpha the cut contribution is
    -(z sin(pi alpha) / (alpha pi)) * int_0^inf exp(-s^(1/alpha)) /
    (s^2 - 2 z s cos(pi alpha) + z^2) ds.
    """
    values = np.zeros(z.shape, dtype=complex)
    reliable = np.zeros(z.shape, dtype=bool)
    if z.size == 0:
        return values, reliable
    with np.errstate(over="ignore", invalid="ignore"):
        poles = _pole_terms(alpha, z)
    cos_pa = math.cos(math.pi * alpha)
    prefactor = -z * math.sin(math.pi * alpha) / (alpha * math.pi)

    def integrand(s: float) -> np.ndarray:
        weight = math.exp(-(s ** (1.0 / alpha)))
        contribution = prefactor * weight / (s * s - 2.0 * z * s * cos_pa + z * z)
        return np.concatenate([contribution.real, contribution.imag])

    try:
        result, error = integrate.quad_vec(
            integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, norm="max", limit=4000
        )
    except (ValueError, ZeroDivisionError, FloatingPointError) as e:
        logger.debug(f"Branch-cut quadrature failed: {e}")
        return values, reliable

    cut = result[: z.size] + 1j * result[z.size :]
    values = poles + cut
    ok = np.isfinite(values) & (error <= TARGET_ACCURACY)
    return values, ok


def mittag_leffler_detailed(alpha: float, z) -> List[MittagLefflerValue]:
    """
    Evaluate E_alpha at each entry of z, reporting the regime used.

    Args:
        alpha: Order in (0, 2]
        z: Scalar or array of real or complex arguments

    Returns:
        List[MittagLefflerValue]: One entry per element of z (flattened)

    Raises:
        DomainError: If alpha is outside (0, 2] or z is not finite
        MittagLefflerEvaluationError: If every regime fails for some entry
    """
    _check_alpha(alpha)
    zs = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if not np.all(np.isfinite(zs)):
        raise DomainError("Mittag-Leffler argument must be finite")

    if alpha == 1.0 or alpha == 2.0:
        with np.errstate(over="ignore"):
            exact = np.exp(zs) if alpha == 1.0 else np.cosh(np.sqrt(zs))
        if not np.all(np.isfinite(exact)):
            raise MittagLefflerEvaluationError(
                "Mittag-Leffler value overflows", attempted_regimes=["closed_form"]
            )
        return [
            MittagLefflerValue(value=complex(v), regime="closed_form") for v in exact
        ]

    values = np.full(zs.shape, np.nan, dtype=complex)
    regimes = np.full(zs.shape, "", dtype=object)
    small = np.abs(zs) <= SERIES_RADIUS

    pending = np.ones(zs.shape, dtype=bool)
    for regime, select in (
        ("series", small),
        ("asymptotic", ~small),
        ("asymptotic", small),
        ("integral", np.ones(zs.shape, dtype=bool)),
        ("series", ~small),
    ):
        idx = np.where(pending & select)[0]
        if idx.size == 0:
            continue
        evaluate = {"series": _series, "asymptotic": _asymptotic}.get(
            regime, _cut_integral
        )
        result, ok = evaluate(alpha, zs[idx])
        values[idx[ok]] = result[ok]
        regimes[idx[ok]] = regime
        pending[idx[ok]] = False

    if np.any(pending):
        bad = zs[pending][0]
        raise MittagLefflerEvaluationError(
            f"No reliable regime for E_{alpha}({bad})",
            attempted_regimes=["series", "asymptotic", "integral"],
        )

    discrepancies = np.full(zs.shape, np.nan)
    low, high = CROSSOVER_BAND
    band = np.where((np.abs(zs) >= low) & (np.abs(zs) <= high))[0]
    if band.size:
        series_values, series_ok = _series(alpha, zs[band])
        large_values, large_ok = _asymptotic(alpha, zs[band])
        missing = ~large_ok
        if np.any(missing):
            cut_values, cut_ok = _cut_integral(alpha, zs[band][missing])
            large_values[missing] = cut_values
            large_ok[missing] = cut_ok
        both = series_ok & large_ok
        discrepancies[band[both]] = np.abs(series_values[both] - large_values[both])
        if np.any(both):
            worst = float(np.max(discrepancies[band[both]]))
            logger.debug(f"E_{alpha} crossover band discrepancy: {worst:.3e}")

    return [
        MittagLefflerValue(
            value=complex(values[i]),
            regime=str(regimes[i]),
            crossover_discrepancy=(
                None if np.isnan(discrepancies[i]) else float(discrepancies[i])
            ),
        )
        for i in range(zs.size)
    ]


def mittag_leffler(alpha: float, z) -> np.ndarray:
    """Vectorized E_alpha(z); returns a complex array shaped like z."""
    shape = np.shape(z)
    detailed = mittag_leffler_detailed(alpha, z)
    return np.array([item.value for item in detailed], dtype=complex).reshape(shape)


def ml_eval(alpha: float, z) -> complex:
    """
    Evaluate the Mittag-Leffler function E_alpha(z) = sum_k z^k / Gamma(alpha k + 1).

    Args:
        alpha: Order in (0, 2]
        z: Real or complex argument

    Returns:
        complex: E_alpha(z) to about 1e-10 absolute accuracy

    Raises:
        DomainError: If alpha is out of range
        MittagLefflerEvaluationError: If no regime is reliable
    """
    return mittag_leffler_detailed(alpha, z)[0].value


def _contour_sum(alpha: float, z: complex, sigma: float, delta: float, n: int, h):
    theta = h * np.arange(-n, n + 1)
    w = delta - 1j * theta
    s = sigma * (1.0 - np.sin(w))
    integrand = np.exp(s) * s ** (alpha - 1.0) / (s**alpha - z)
    return h * sigma / (2.0 * math.pi) * np.sum(integrand * np.cos(w))


def _principal_poles(alpha: float, z: complex) -> List[complex]:
    if z == 0:
        return [0j]
    radius = abs(z) ** (1.0 / alpha)
    arg = np.angle(z)
    poles = []
    for m in (-1, 0, 1):
        phase = arg + 2.0 * math.pi * m
        if abs(phase) < alpha * math.pi:
            poles.append(radius * np.exp(1j * phase / alpha))
    return poles


def _pole_placement(
    poles: List[complex], sigma: float, delta: float, h: float
) -> Tuple[float, complex]:
    """Closest strip distance of a pole to the contour, and the residue correction."""
    clearance = math.inf
    residue = 0j
    for p in poles:
        w = np.arcsin(complex(1.0 - p / sigma))
        distance = w.real - delta
        clearance = min(clearance, abs(distance) / h)
        if distance < 0 and p != 0:
            residue += np.exp(p)
    return clearance, residue


def contour_eval(
    alpha: float, mu: float, t: float, contour: Optional[ContourParameters] = None
) -> complex:
    """
    Evaluate the resolvent symbol by trapezoidal quadrature on a hyperbolic contour.

    Integrates e^{lambda t} lambda^{alpha-1} / (lambda^alpha - mu) along a
    hyperbola enclosing the branch cut; residues of poles lying to the right
    of the contour are added. Independent of the series machinery of ml_eval.

    Args:
        alpha: Order in (0, 2]
        mu: Real symbol parameter
        t: Time, t > 0
        contour: Node count and optional fixed geometry

    Returns:
        complex: E_alpha(mu t^alpha)

    Raises:
        DomainError: If t <= 0 or alpha is out of range
        ContourConfigurationError: If the contour passes too close to a pole
    """
    _check_alpha(alpha)
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"Contour evaluation needs t > 0, got {t}")
    contour = contour or ContourParameters()
    n = contour.n_nodes
    h = contour.step
    z = complex(mu * t**alpha)
    poles = _principal_poles(alpha, z)

    fixed = contour.sigma is not None or contour.delta is not None
    base_sigma = contour.sigma or CONTOUR_SCALE_FACTOR * n
    if fixed:
        candidates = [(base_sigma, contour.delta or CONTOUR_DELTA)]
    else:
        candidates = [
            (base_sigma * factor, delta) for factor, delta in _CONTOUR_RETRIES
        ]

    for sigma, delta in candidates:
        clearance, residue = _pole_placement(poles, sigma, delta, h)
        if clearance < POLE_CLEARANCE:
            logger.debug(
                f"Contour sigma={sigma:.3g} delta={delta:.4g} passes "
                f"{clearance:.2f} steps from a pole; retrying"
            )
            continue
        quadrature = _contour_sum(alpha, z, sigma, delta, n, h)
        return complex(quadrature + residue / alpha)

    raise ContourConfigurationError(
        f"Contour cannot clear the poles of E_{alpha} at z={z} "
        f"(tried {len(candidates)} geometries)"
    )


def resolvent_symbol(alpha: float, mu: float, t: float) -> float:
    """
    Scalar resolvent symbol E_alpha(mu t^alpha) of S_alpha(t) on a mode
    with eigenvalue mu.

    Raises:
        DomainError: If alpha is outside (1, 2), mu > 0 or t < 0
    """
    return float(resolvent_symbols(alpha, mu, np.array([t]))[0])


def resolvent_symbols(alpha: float, mu: float, t) -> np.ndarray:
    """Vectorized resolvent symbol over an array of times; exactly 1 at t = 0."""
    check_solver_order(alpha)
    if not math.isfinite(mu) or mu > 0:
        raise DomainError(f"Symbol requires mu <= 0, got {mu}")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0) or not np.all(np.isfinite(times)):
        raise DomainError("Symbol requires finite t >= 0")
    out = np.ones(times.shape)
    positive = times > 0
    if mu != 0 and np.any(positive):
        out[positive] = mittag_leffler(alpha, mu * times[positive] ** alpha).real
    return out


def certificate_grid(t_min: float, t_max: float, n_samples: int) -> np.ndarray:
    return np.logspace(math.log10(t_min), math.log10(t_max), n_samples)


def decay_certificate(
    alpha: float, mu: float, t_max: float, n_samples: int = 2000
) -> DecayCertificate:
    """
    Empirical decay constant c_est = max (1 + |mu| t^alpha) |E_alpha(mu t^alpha)|.

    The maximum is taken over a log-spaced grid from 1e-3 * |mu|^(-1/alpha)
    to t_max. Orders up to 2 are accepted so that the alpha = 2 control can
    be certified (and seen to fail).

    Raises:
        DomainError: If mu >= 0 or |mu| t_max^alpha < 1e3
        MittagLefflerEvaluationError: If a symbol value is not finite
    """
    _check_alpha(alpha)
    if not math.isfinite(mu) or mu >= 0:
        raise DomainError(f"Decay certificate needs mu < 0, got {mu}")
    if n_samples < 2:
        raise DomainError(
            f"Decay certificate needs at least 2 samples, got {n_samples}"
        )
    if abs(mu) * t_max**alpha < CERTIFICATE_MIN_RANGE:
        raise DomainError(
            f"t_max={t_max} too short: |mu| t_max^alpha must be >= "
            f"{CERTIFICATE_MIN_RANGE:g}"
        )

    t_min = 1e-3 * abs(mu) ** (-1.0 / alpha)
    times = certificate_grid(t_min, t_max, n_samples)
    x = abs(mu) * times**alpha
    symbol = mittag_leffler(alpha, -x)
    weighted = (1.0 + x) * np.abs(symbol)
    if not np.all(np.isfinite(weighted)):
        raise MittagLefflerEvaluationError(
            f"Non-finite symbol values while certifying alpha={alpha}, mu={mu}",
            attempted_regimes=["series", "asymptotic", "integral"],
        )
    c_est = float(np.max(weighted))
    logger.debug(f"Decay certificate alpha={alpha} mu={mu}: c_est={c_est:.6g}")
    return DecayCertificate(
        alpha=alpha,
        mu=mu,
        c_est=c_est,
        t_max=t_max,
        grid_points=n_samples,
        t_min=t_min,
    )


def stabilized_certificate(
    alpha: float,
    mu: float,
    t_max: float,
    n_samples: int = 2000,
    tolerance: float = STABILIZATION_TOLERANCE,
) -> StabilizationReport:
    """Compare a certificate with the one on a doubled grid and doubled horizon."""
    base = decay_certificate(alpha, mu, t_max, n_samples)
    refined = decay_certificate(alpha, mu, 2.0 * t_max, 2 * n_samples)
    change = abs(refined.c_est - base.c_est) / base.c_est
    stable = change <= tolerance
    if not stable:
        logger.warning(
            f"Decay certificate for alpha={alpha}, mu={mu} not stable: "
            f"{base.c_est:.4g} -> {refined.c_est:.4g}"
        )
    return StabilizationReport(
        base=base, refined=refined, relative_change=change, stable=stable
    )


def kernel_integral_identity(alpha: float, omega: float) -> float:
    """
    Closed form of int_0^inf dt / (1 + |omega| t^alpha).

    Returns:
        float: |omega|^(-1/alpha) * pi / (alpha * sin(pi / alpha))

    Raises:
        DomainError: If alpha is not in (1, 2) or omega >= 0
    """
    check_solver_order(alpha)
    if not math.isfinite(omega) or omega >= 0:
        raise DomainError(f"Identity requires omega < 0, got {omega}")
    return abs(omega) ** (-1.0 / alpha) * math.pi / (alpha * math.sin(math.pi / alpha))


def _decay_kernel(alpha: float, omega: float):
    rate = abs(omega)
    return lambda s: 1.0 / (1.0 + rate * s**alpha)


def kernel_integral_numeric(alpha: float, omega: float) -> float:
    """Adaptive quadrature of int_0^inf dt / (1 + |omega| t^alpha)."""
    check_solver_order(alpha)
    if omega >= 0:
        raise DomainError(f"Identity requires omega < 0, got {omega}")
    f = _decay_kernel(alpha, omega)
    knee = abs(omega) ** (-1.0 / alpha)
    head, _ = integrate.quad(f, 0.0, knee, epsabs=1e-14, epsrel=1e-12)
    tail, _ = integrate.quad(f, knee, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return head + tail


def kernel_tail_integral(alpha: float, omega: float, T: float) -> float:
    """int_T^inf dt / (1 + |omega| t^alpha) for T >= 0."""
    if T < 0:
        raise DomainError(f"Tail start must be nonnegative, got {T}")
    if T == 0:
        return kernel_integral_identity(alpha, omega)
    check_solver_order(alpha)
    value, _ = integrate.quad(
        _decay_kernel(alpha, omega), T, np.inf, epsabs=1e-15, epsrel=1e-12, limit=200
    )
    return value


def kernel_partial_integral(alpha: float, omega: float, T: float) -> float:
    """int_0^T dt / (1 + |omega| t^alpha); nondecreasing in T."""
    if T < 0:
        raise DomainError(f"Partial integral end must be nonnegative, got {T}")
    check_solver_order(alpha)
    if T == 0:
        return 0.0
    value, _ = integrate.quad(
        _decay_kernel(alpha, omega), 0.0, T, epsabs=1e-15, epsrel=1e-12, limit=200
    )
    return value
