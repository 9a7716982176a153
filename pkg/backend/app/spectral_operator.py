"""
FracAAA - Diagonal Sectorial Operators

This module provides diagonal sectorial operators built from spectral
decompositions, a sampled check of the sectorial resolvent bound, the
action of the resolvent family S_alpha(t) on mode coefficients and the
uniform-in-mode decay constant CM entering the contraction constant.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import fft

from app.errors import DomainError, FracAAAError, InputError
from app.mlf import (
    CERTIFICATE_MIN_RANGE,
    SectorType,
    resolvent_symbols,
    stabilized_certificate,
)

logger = logging.getLogger(__name__)

DEFAULT_THETA = math.pi / 24
OMEGA_CONVENTIONS = ("spectrum_top", "shift")


class SectorialVerificationError(FracAAAError):
    """Exception raised when resolvent sampling keeps hitting the spectrum."""

    pass


class CertificationError(FracAAAError):
    """Exception raised when a per-mode decay certificate does not stabilize."""

    pass


class BasisTag(str, Enum):
    """Basis in which operator coefficients are expressed."""

    DIRICHLET_SINE = "dirichlet_sine_on_0_pi"
    ABSTRACT_DIAGONAL = "abstract_diagonal"


@dataclass(frozen=True)
class SpectralOperator:
    """Diagonal operator with strictly decreasing eigenvalues and sector data."""

    eigenvalues: Tuple[float, ...]
    basis_tag: BasisTag
    sector: SectorType

    def __post_init__(self):
        """Validate the spectrum against the sector."""
        values = tuple(float(v) for v in self.eigenvalues)
        if not values:
            raise InputError("Operator needs at least one eigenvalue")
        if not all(math.isfinite(v) for v in values):
            raise InputError("Eigenvalues must be finite")
        if any(b >= a for a, b in zip(values, values[1:])):
            raise InputError("Eigenvalues must be strictly decreasing")
        if values[0] > self.sector.omega + 1e-12 * max(1.0, abs(values[0])):
            raise DomainError(
                f"Largest eigenvalue {values[0]} exceeds sector type "
                f"{self.sector.omega}"
            )
        object.__setattr__(self, "eigenvalues", values)
        object.__setattr__(self, "basis_tag", BasisTag(self.basis_tag))

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def spectrum(self) -> np.ndarray:
        return np.array(self.eigenvalues)

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "omega": self.sector.omega,
            "theta": self.sector.theta,
            "M": self.sector.M,
            "basis_tag": self.basis_tag.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpectralOperator":
        return cls(
            eigenvalues=tuple(data["eigenvalues"]),
            basis_tag=BasisTag(data["basis_tag"]),
            sector=SectorType(
                omega=data["omega"], theta=data["theta"], M=data["M"]
            ),
        )


@dataclass
class StateVector:
    """Mode coefficients of a state at a fixed time."""

    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size < 1:
            raise InputError("State coefficients must be a non-empty 1-D array")
        if not np.all(np.isfinite(coeffs)):
            raise InputError("State coefficients must be finite")
        self.coeffs = coeffs

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def basis(cls, n_modes: int, index: int) -> "StateVector":
        coeffs = np.zeros(n_modes)
        coeffs[index] = 1.0
        return cls(coeffs)


@dataclass(frozen=True)
class SectorialReport:
    """Outcome of a sampled resolvent-bound check."""

    ok: bool
    worst_ratio: float
    witness: complex
    samples: int

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "worst_ratio": self.worst_ratio,
            "witness": [self.witness.real, self.witness.imag],
            "samples": self.samples,
        }


def sector_constant(theta: float) -> float:
    """Exact sectorial constant 1 / sin(theta) of a self-adjoint spectrum <= omega."""
    if not (0.0 < theta < math.pi / 2):
        raise DomainError(f"Sector angle must lie in (0, pi/2), got {theta}")
    return 1.0 / math.sin(theta)


def make_diagonal_operator(
    eigenvalues: Sequence[float],
    theta: float = DEFAULT_THETA,
    omega: Optional[float] = None,
    basis_tag: BasisTag = BasisTag.ABSTRACT_DIAGONAL,
) -> SpectralOperator:
    """Diagonal operator; omega defaults to the spectrum top, M to 1/sin(theta)."""
    values = tuple(float(v) for v in eigenvalues)
    if not values:
        raise InputError("Operator needs at least one eigenvalue")
    sector = SectorType(
        omega=values[0] if omega is None else float(omega),
        theta=theta,
        M=sector_constant(theta),
    )
    return SpectralOperator(eigenvalues=values, basis_tag=basis_tag, sector=sector)


def make_dirichlet_laplacian(
    mu_shift: float,
    n_modes: int,
    theta: float = DEFAULT_THETA,
    omega_convention: str = "spectrum_top",
) -> SpectralOperator:
    """
    Shifted Dirichlet Laplacian w'' - mu w on (0, pi), truncated to n_modes sine modes.

    Args:
        mu_shift: Spectral shift, must be positive
        n_modes: Number of retained modes k = 1..n_modes
        theta: Sector angle
        omega_convention: "spectrum_top" uses omega = -1 - mu_shift (largest
            eigenvalue), "shift" uses omega = -mu_shift

    Returns:
        SpectralOperator: Eigenvalues -k^2 - mu_shift with a verified sector

    Raises:
        DomainError: If mu_shift <= 0 or n_modes < 1
        SectorialVerificationError: If the resolvent bound cannot be confirmed
    """
    if not math.isfinite(mu_shift) or mu_shift <= 0:
        raise DomainError(f"Spectral shift must be positive, got {mu_shift}")
    if n_modes < 1:
        raise DomainError(f"Need at least one mode, got {n_modes}")
    if omega_convention not in OMEGA_CONVENTIONS:
        raise DomainError(
            f"Unknown omega convention '{omega_convention}', "
            f"expected one of {OMEGA_CONVENTIONS}"
        )

    k = np.arange(1, n_modes + 1, dtype=float)
    eigenvalues = tuple(-(k**2) - mu_shift)
    omega = eigenvalues[0] if omega_convention == "spectrum_top" else -mu_shift
    M = sector_constant(theta)

    operator = SpectralOperator(
        eigenvalues=eigenvalues,
        basis_tag=BasisTag.DIRICHLET_SINE,
        sector=SectorType.negative_type(omega=omega, theta=theta, M=M),
    )
    report = verify_sectorial(operator, omega, theta, M, sample_count=256)
    if not report.ok:
        raise SectorialVerificationError(
            f"Sector bound M={M:.4g} fails (ratio {report.worst_ratio:.4g} at "
            f"{report.witness})"
        )
    logger.debug(
        f"Dirichlet Laplacian: {n_modes} modes, shift {mu_shift}, omega={omega}, "
        f"M={M:.4g}"
    )
    return operator


def resolvent_ratio(
    op: SpectralOperator, lam: complex, omega: float, M: float
) -> float:
    """||(lam - A)^{-1}|| * |lam - omega| / M for the diagonal operator."""
    distance = float(np.min(np.abs(lam - op.spectrum)))
    if distance == 0:
        return math.inf
    return abs(lam - omega) / (distance * M)


def _sector_samples(
    op: SpectralOperator, omega: float, theta: float, sample_count: int
) -> List[complex]:
    """Sample points omega + r e^{i phi} with |phi| <= pi - theta."""
    gaps = np.abs(op.spectrum - omega)
    scale = max(float(np.max(gaps)), 1.0)
    n_angles = max(3, int(math.ceil(math.sqrt(sample_count))))
    n_radii = max(1, int(math.ceil(sample_count / n_angles)))
    angles = np.linspace(-(math.pi - theta), math.pi - theta, n_angles)
    radii = np.logspace(math.log10(scale) - 3, math.log10(scale) + 3, n_radii)

    samples = []
    # Points just beside each eigenvalue come first
    for gap in gaps:
        if gap > 0:
            for factor in (1.0 + 1e-3, 1.0 - 1e-3):
                samples.append(omega + gap * factor * np.exp(1j * 0.0))
                samples.append(omega + gap * factor * np.exp(1j * (math.pi - theta)))
    for phi in angles:
        for r in radii:
            samples.append(omega + r * np.exp(1j * phi))
    return samples


def verify_sectorial(
    op: SpectralOperator, omega: float, theta: float, M: float, sample_count: int
) -> SectorialReport:
    """
    Sampled check of ||(lam - A)^{-1}|| <= M / |lam - omega| outside omega + S_theta.

    Args:
        op: Diagonal operator
        omega: Sector vertex
        theta: Sector half-angle around the negative axis
        M: Claimed resolvent constant
        sample_count: Approximate number of sample points

    Returns:
        SectorialReport: ok, worst ratio and the worst sample

    Raises:
        DomainError: For invalid angles, counts or M
        SectorialVerificationError: If a sample keeps colliding with an eigenvalue
    """
    if sample_count < 1:
        raise DomainError(f"Need at least one sample, got {sample_count}")
    if not (0.0 <= theta < math.pi / 2):
        raise DomainError(f"Sector angle must lie in [0, pi/2), got {theta}")
    if not M > 0:
        raise DomainError(f"Resolvent bound M must be positive, got {M}")

    worst_ratio = -math.inf
    witness = complex(omega)
    samples = _sector_samples(op, omega, theta, sample_count)
    for lam in samples:
        ratio = resolvent_ratio(op, lam, omega, M)
        attempts = 0
        while not math.isfinite(ratio) or lam == omega:
            attempts += 1
            if attempts > 3:
                raise SectorialVerificationError(
                    f"Sample {lam} keeps colliding with the spectrum"
                )
            lam = omega + (lam - omega) * (1.0 + 1e-6 * attempts) + 1e-9j * attempts
            ratio = resolvent_ratio(op, lam, omega, M)
        if ratio > worst_ratio:
            worst_ratio = ratio
            witness = complex(lam)

    ok = worst_ratio <= 1.0 + 1e-12
    return SectorialReport(
        ok=ok, worst_ratio=float(worst_ratio), witness=witness, samples=len(samples)
    )


def family_symbols(op: SpectralOperator, alpha: float, t: float) -> np.ndarray:
    """Per-mode symbols E_alpha(mu_k t^alpha) of S_alpha(t)."""
    if t < 0:
        raise DomainError(f"Family time must be nonnegative, got {t}")
    return np.array(
        [resolvent_symbols(alpha, mu, np.array([t]))[0] for mu in op.eigenvalues]
    )


def apply_family(
    op: SpectralOperator, alpha: float, t: float, x: StateVector
) -> StateVector:
    """
    Apply S_alpha(t) to a state: coefficient k is multiplied by E_alpha(mu_k t^alpha).

    At t = 0 the state is returned unchanged.
    """
    if x.n_modes != op.n_modes:
        raise InputError(f"State has {x.n_modes} modes, operator has {op.n_modes}")
    return StateVector(family_symbols(op, alpha, t) * x.coeffs)


def strong_continuity_jump(
    op: SpectralOperator, alpha: float, x: StateVector, t_end: float, n_points: int
) -> float:
    """Largest jump of S_alpha(t) x between adjacent points of a grid on [0, t_end]."""
    if n_points < 2:
        raise DomainError("Need at least two time points")
    times = np.linspace(0.0, t_end, n_points)
    table = np.column_stack(
        [resolvent_symbols(alpha, mu, times) for mu in op.eigenvalues]
    )
    trajectory = table * x.coeffs[np.newaxis, :]
    return float(np.max(np.linalg.norm(np.diff(trajectory, axis=0), axis=1)))


def operator_decay_constant(
    op: SpectralOperator, alpha: float, t_max: float, n_samples: int = 2000
) -> float:
    """
    Uniform constant CM with
    |E_alpha(mu_k t^alpha)| <= CM / (1 + |omega| t^alpha) for all k.

    Since |mu_k| >= |omega| for every mode, the maximum of the per-mode
    certificate constants suffices.

    Raises:
        DomainError: If some eigenvalue is not negative
        CertificationError: If a per-mode certificate does not stabilize
    """
    if any(mu >= 0 for mu in op.eigenvalues):
        raise DomainError("Decay constant needs a strictly negative spectrum")
    constant = 0.0
    for mu in op.eigenvalues:
        horizon = max(t_max, (CERTIFICATE_MIN_RANGE / abs(mu)) ** (1.0 / alpha))
        report = stabilized_certificate(alpha, mu, horizon, n_samples)
        if not report.stable:
            raise CertificationError(
                f"Decay certificate for mode mu={mu} changed by "
                f"{report.relative_change:.1%} under grid doubling"
            )
        constant = max(constant, report.base.c_est, report.refined.c_est)
    logger.info(f"Operator decay constant CM={constant:.6g} over {op.n_modes} modes")
    return constant


@dataclass
class SineCollocation:
    """Dirichlet sine basis (2/pi)^(1/2) sin(kx) sampled on x_m = m pi / (n_x + 1)."""

    n_modes: int
    n_x: int = 0
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError(f"Need at least one mode, got {self.n_modes}")
        if not self.n_x:
            self.n_x = 2 * self.n_modes + 1
        if self.n_x < 2 * self.n_modes:
            raise DomainError(
                f"Collocation needs n_x >= 2 * n_modes, got {self.n_x} < "
                f"{2 * self.n_modes}"
            )
        self.points = np.arange(1, self.n_x + 1) * math.pi / (self.n_x + 1)

    def to_values(self, coeffs: np.ndarray) -> np.ndarray:
        """Collocation values from mode coefficients along the last axis."""
        coeffs = np.asarray(coeffs, dtype=float)
        padded = np.zeros(coeffs.shape[:-1] + (self.n_x,))
        padded[..., : self.n_modes] = coeffs
        return fft.dst(padded, type=1, axis=-1) * math.sqrt(2.0 / math.pi) / 2.0

    def to_coeffs(self, values: np.ndarray) -> np.ndarray:
        """Mode coefficients from collocation values along the last axis."""
        values = np.asarray(values, dtype=float)
        scaled = values * 2.0 / math.sqrt(2.0 / math.pi)
        return fft.idst(scaled, type=1, axis=-1)[..., : self.n_modes]
