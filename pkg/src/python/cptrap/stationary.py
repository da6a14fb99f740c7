"""
CPTrap - Stationary States

Stationary set of the Lambda-atom dynamics. With alpha-independent
susceptivities the quantity C = rho11 + rho22 - rho12 - rho21 is conserved
and every state relaxes onto one member of a one-parameter family

    rho(s) = [[rho_g, s, 0], [s, rho_g, 0], [0, 0, rho_e]]
    rho_e = (1 + 2s) R / (2 + R),  rho_g = (1 - s R) / (2 + R),
    -1/2 <= s <= 1 / (2 (1 + R))

selected by C. s = -1/2 is the dark state |NC><NC| for every R. Without
thermal pumping (Re(g|g)^+ = 0) nothing relaxes along the ground coherence;
D = rho22 - rho11 + rho12 - rho21 then rotates at 2 Im(g|g)^+ (quantum beats).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from cptrap import metrics
from cptrap.bath import SusceptivitySet, einstein_ratio
from cptrap.errors import (
    AdmissibilityError,
    ConsistencyError,
    EigenSolverError,
    PhysicsDomainError,
    RegimeError,
    UsageError,
)
from cptrap.generator import (
    DensityMatrix3,
    Superoperator,
    Trajectory,
    _eigvals,
    build_generator,
    excited_decay_rate,
    sample_exact,
)

logger = logging.getLogger(__name__)

KET_NC = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
KET_C = np.array([1.0, 1.0, 0.0]) / math.sqrt(2.0)

OBSERVABLE_A = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)

S_MIN = -0.5
DENSITY_TOLERANCE = 1e-10

# Written out entrywise: (1/sqrt 2)^2 is not exactly 1/2 in floating point.
_PRESETS = {
    "NC": [[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 0.0]],
    "C": [[0.5, 0.5, 0.0], [0.5, 0.5, 0.0], [0.0, 0.0, 0.0]],
    "mixed": np.eye(3) / 3.0,
    "excited": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
}

PRESET_NAMES = tuple(_PRESETS)


def preset_state(name: str) -> DensityMatrix3:
    try:
        return DensityMatrix3(np.array(_PRESETS[name], dtype=complex))
    except KeyError:
        raise UsageError(f"unknown state preset {name!r} (expected one of {', '.join(PRESET_NAMES)})")


# =============================================================================
# Conserved quantities and observables
# =============================================================================

def conserved_C(rho: DensityMatrix3) -> float:
    """rho11 + rho22 - rho12 - rho21 = 2 <NC|rho|NC>."""
    return rho.C


def observable_A(rho: DensityMatrix3) -> float:
    """tr(rho A) with A = |1><2| + |2><1|."""
    return float(np.trace(rho.matrix @ OBSERVABLE_A).real)


def stationary_parameter(C: float, R: float) -> float:
    """Family parameter selected by the conserved value C."""
    return (1.0 - C - C * R / 2.0) / (2.0 * (1.0 + R))


def conserved_from_parameter(s: float, R: float) -> float:
    return (2.0 - 4.0 * s * (1.0 + R)) / (2.0 + R)


# =============================================================================
# Density checks
# =============================================================================

@dataclass(frozen=True)
class DensityCheck:
    ok: bool
    violations: Tuple[str, ...]
    min_eigenvalue: float

    def __bool__(self):
        return self.ok


def check_density(rho: Union[DensityMatrix3, np.ndarray], tol: float = DENSITY_TOLERANCE) -> DensityCheck:
    """
    Density-matrix test: Hermitian, unit trace, nonnegative diagonal, and
    positive. For V1-supported matrices positivity is |rho12|^2 <= rho11 rho22;
    otherwise the smallest eigenvalue is tested.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix3) else np.asarray(rho, dtype=complex)
    violations = []

    if np.abs(m - m.conj().T).max() > tol:
        violations.append("hermitian")
        m = 0.5 * (m + m.conj().T)
    if abs(np.trace(m).real - 1.0) > tol:
        violations.append("trace")
    diagonal = m.diagonal().real
    if np.any(diagonal < -tol):
        violations.append("diagonal")

    lowest = float(np.linalg.eigvalsh(m)[0])
    v1_supported = abs(m[0, 2]) <= tol and abs(m[1, 2]) <= tol
    if v1_supported:
        if abs(m[0, 1]) ** 2 > diagonal[0] * diagonal[1] + tol:
            violations.append("coherence_bound")
    elif lowest < -tol:
        violations.append("positivity")

    return DensityCheck(not violations, tuple(violations), lowest)


# =============================================================================
# Family of stationary states
# =============================================================================

def _check_ratio(R: float):
    if not (0.0 <= R <= 1.0):
        raise PhysicsDomainError(f"Einstein ratio must lie in [0, 1], got {R}")


def admissible_interval(R: float) -> Tuple[float, float]:
    """[-1/2, 1/(2(1+R))]. R = 1 is the high-intensity limit N -> infinity."""
    _check_ratio(R)
    return S_MIN, 1.0 / (2.0 * (1.0 + R))


def family_matrix(R: float, s: float) -> np.ndarray:
    """Family member as a raw matrix, without admissibility checks."""
    rho_e = (1.0 + 2.0 * s) * R / (2.0 + R)
    rho_g = (1.0 - rho_e) / 2.0
    return np.array(
        [[rho_g, s, 0.0], [s, rho_g, 0.0], [0.0, 0.0, rho_e]],
        dtype=complex,
    )


def family_state(R: float, s: float) -> DensityMatrix3:
    s_min, s_max = admissible_interval(R)
    if not (s_min - 1e-12 <= s <= s_max + 1e-12):
        raise AdmissibilityError(
            f"s = {s} outside the admissible interval [{s_min}, {s_max:.17g}] for R = {R}",
            {"R": R, "s": s, "interval": [s_min, s_max]},
        )
    return DensityMatrix3(family_matrix(R, s))


def extremal_states(R: float) -> Tuple[DensityMatrix3, DensityMatrix3]:
    """(rho_min, rho_max): the dark state and the most excited family member."""
    s_min, s_max = admissible_interval(R)
    return family_state(R, s_min), family_state(R, s_max)


def min_ground_population(N: float) -> float:
    """
    rho_g at s = s_max for occupation N at the Bohr frequency: (N + 1) / (2 (2N + 1)).

    The total ground population 2 rho_g stays above 1/2 and tends to it as N grows.
    """
    if not N >= 0:
        raise PhysicsDomainError(f"occupation must be >= 0, got {N}")
    if math.isinf(N):
        return 0.25
    return 0.5 * (N + 1.0) / (2.0 * N + 1.0)


@dataclass(frozen=True, eq=False)
class FamilyDescriptor:
    """
    Affine family rho_e(s) = e0 + e1 s, rho_g(s) = g0 + g1 s, off-diagonal s.

    Built analytically by from_ratio, or fitted to a generator kernel by
    solve_nullspace (then kernel_basis holds the V1 kernel columns).
    """

    R: float
    excited_coefficients: Tuple[float, float]
    ground_coefficients: Tuple[float, float]
    kernel_dimension: int = 2
    kernel_basis: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def from_ratio(cls, R: float) -> "FamilyDescriptor":
        _check_ratio(R)
        return cls(
            R=R,
            excited_coefficients=(R / (2.0 + R), 2.0 * R / (2.0 + R)),
            ground_coefficients=(1.0 / (2.0 + R), -R / (2.0 + R)),
        )

    @property
    def s_min(self) -> float:
        return S_MIN

    @property
    def s_max(self) -> float:
        return 1.0 / (2.0 * (1.0 + self.R))

    def member(self, s: float) -> DensityMatrix3:
        if not (self.s_min - 1e-12 <= s <= self.s_max + 1e-12):
            raise AdmissibilityError(
                f"s = {s} outside [{self.s_min}, {self.s_max:.17g}]",
                {"R": self.R, "s": s},
            )
        e0, e1 = self.excited_coefficients
        g0, g1 = self.ground_coefficients
        rho_e, rho_g = e0 + e1 * s, g0 + g1 * s
        return DensityMatrix3(
            np.array([[rho_g, s, 0.0], [s, rho_g, 0.0], [0.0, 0.0, rho_e]], dtype=complex)
        )


@dataclass(frozen=True, eq=False)
class BeatsDescriptor:
    frequency: float
    damping: float
    initial_modulus: Optional[float] = None
    limit_s: Optional[float] = None
    trajectory: Optional[Trajectory] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class StationaryResult:
    kind: str  # 'unique', 'family', 'oscillatory', 'frozen'
    payload: Union[DensityMatrix3, FamilyDescriptor, BeatsDescriptor, None]
    residual: float
    kernel_dimension: int = 0


# =============================================================================
# Prediction and nullspace
# =============================================================================

def _require_alpha_independent(sus: SusceptivitySet, operation: str):
    if not sus.is_alpha_independent():
        raise RegimeError(
            f"{operation} needs alpha-independent susceptivities (equal formfactors); "
            f"use solve_nullspace for the general case"
        )


def predict_stationary(rho0: DensityMatrix3, sus: SusceptivitySet) -> DensityMatrix3:
    """
    Family member reached from rho0: s_inf from the conserved C, R from the bath.

    Raises:
        RegimeError: susceptivities depend on alpha, or Re(g|g)^+ = 0 (no
            relaxation: use solve_nullspace or beats)
    """
    _require_alpha_independent(sus, "predict_stationary")
    re_minus, re_plus = sus.re_sum(1, 1, "-"), sus.re_sum(1, 1, "+")
    if not re_minus > 0:
        raise RegimeError("Re(g|g)^- = 0: the atom does not couple to the bath at w")
    if not re_plus > 1e-12 * re_minus:
        raise RegimeError(
            "Re(g|g)^+ = 0: no convergence to a family member; "
            "use solve_nullspace (Fock case) or beats (Im(g|g)^+ != 0)"
        )

    R = einstein_ratio(sus)
    C = conserved_C(rho0)
    s_min, s_max = admissible_interval(R)
    s_inf = stationary_parameter(C, R)
    if not (s_min - 1e-9 <= s_inf <= s_max + 1e-9):
        raise AdmissibilityError(
            f"initial state gives s = {s_inf:.6g} outside [{s_min}, {s_max:.6g}]; is it a density matrix?",
            {"C": C, "R": R},
        )
    return family_state(R, min(max(s_inf, s_min), s_max))


def _residual(L: Superoperator, v1: np.ndarray) -> float:
    return float(np.linalg.norm(L.v1_block @ v1))


def _embed(v1: np.ndarray) -> DensityMatrix3:
    return DensityMatrix3.from_vector(np.concatenate([v1, np.zeros(4)]))


def _svd(m: np.ndarray):
    try:
        return linalg.svd(m)
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"singular value decomposition failed: {e}", {"shape": list(m.shape)})


def solve_nullspace(L: Superoperator, rcond: float = 1e-9) -> StationaryResult:
    """
    Classify the stationary set of L from the kernel of its V1 block.

    frozen: L = 0. oscillatory: the V1 block has a purely imaginary pair.
    unique: one-dimensional kernel. family: larger kernel, fitted to the
    affine parameterization with s = Re rho12 and unit trace.

    Raises:
        ConsistencyError: the kernel holds no admissible state
        EigenSolverError: LAPACK fails on the V1 block (non-finite entries included)
    """
    if L.is_zero:
        metrics.record_classification("frozen")
        return StationaryResult("frozen", None, 0.0, 9)

    block = L.v1_block
    scale = max(1.0, L.norm_inf)
    eigenvalues = _eigvals(block)
    rotating = [z for z in eigenvalues if abs(z.real) <= rcond * scale and abs(z.imag) > rcond * scale]
    if rotating:
        if L.source is not None and L.source.is_alpha_independent():
            frequency = 2.0 * L.source.im_sum(1, 1, "+")
        else:
            frequency = float(max(abs(z.imag) for z in rotating))
        metrics.record_classification("oscillatory")
        logger.info(f"Stationary set is oscillatory (beat frequency {frequency:.6g})")
        return StationaryResult("oscillatory", BeatsDescriptor(frequency, 0.0), 0.0)

    _, singular, vh = _svd(block)
    rank = int(np.sum(singular > rcond * singular[0]))
    basis = vh[rank:].T
    dimension = basis.shape[1]

    if dimension == 0:
        raise ConsistencyError(
            "generator has no stationary state on V1",
            {"singular_values": singular.tolist()},
        )

    if dimension == 1:
        v = basis[:, 0]
        trace = v[0] + v[1] + v[2]
        if abs(trace) < 1e-12:
            raise ConsistencyError("kernel vector is traceless", {"kernel": v.tolist()})
        v = v / trace
        state = _embed(v)
        check = check_density(state)
        if not check.ok:
            raise ConsistencyError(
                f"unique stationary solution is not a density matrix ({', '.join(check.violations)})",
                {"state": v.tolist(), "min_eigenvalue": check.min_eigenvalue},
            )
        metrics.record_classification("unique")
        return StationaryResult("unique", state, _residual(L, v), 1)

    constraints = np.vstack([basis[0] + basis[1] + basis[2], basis[3]])
    members = {}
    for s in (S_MIN, 0.0):
        target = np.array([1.0, s])
        x = np.linalg.lstsq(constraints, target, rcond=None)[0]
        if np.abs(constraints @ x - target).max() > 1e-9:
            raise ConsistencyError(
                "kernel does not admit a unit-trace member with Re rho12 = s",
                {"s": s, "kernel_dimension": dimension},
            )
        members[s] = basis @ x

    lo, hi = members[S_MIN], members[0.0]
    e0 = hi[2]
    e1 = (hi[2] - lo[2]) / (0.0 - S_MIN)
    g0 = 0.5 * (hi[0] + hi[1])
    g1 = (g0 - 0.5 * (lo[0] + lo[1])) / (0.0 - S_MIN)
    R = min(max(2.0 * e0 / (1.0 - e0), 0.0), 1.0)

    descriptor = FamilyDescriptor(
        R=R,
        excited_coefficients=(float(e0), float(e1)),
        ground_coefficients=(float(g0), float(g1)),
        kernel_dimension=dimension,
        kernel_basis=basis,
    )
    residual = max(_residual(L, lo), _residual(L, hi))
    metrics.record_classification("family")
    logger.info(f"Stationary family: kernel dimension {dimension}, fitted R = {R:.12g}")
    return StationaryResult("family", descriptor, residual, dimension)


# =============================================================================
# Reduced population system
# =============================================================================

def population_determinant(L: Superoperator) -> float:
    """
    Determinant of the stationary equations for (rho11, rho22) after
    eliminating rho33 = 1 - rho11 - rho22, read off the assembled generator
    (rows d rho22, d rho11; coherence terms dropped).
    """
    m = L.matrix
    reduced = np.array(
        [
            [m[1, 2] - m[1, 0], m[1, 2] - m[1, 1]],
            [m[0, 2] - m[0, 0], m[0, 2] - m[0, 1]],
        ]
    )
    return float(np.linalg.det(reduced))


def orthogonal_determinant(sus: SusceptivitySet) -> float:
    """Closed form of population_determinant when (g1|g2)^+ = 0."""
    p11, p22 = 2.0 * sus.re_sum(1, 1, "+"), 2.0 * sus.re_sum(2, 2, "+")
    m11, m22 = 2.0 * sus.re_sum(1, 1, "-"), 2.0 * sus.re_sum(2, 2, "-")
    return -(p22 * m11 + m22 * p11 + p22 * p11)


# =============================================================================
# Quantum beats
# =============================================================================

def beats(
    sus: SusceptivitySet,
    rho0: DensityMatrix3,
    periods: int = 10,
    max_samples: int = 20000,
) -> BeatsDescriptor:
    """
    Oscillatory regime Re(g|g)^+ = 0 with alpha-independent susceptivities.

    Returns frequency 2 Im(g|g)^+ and the modulus |D(0)|, after checking on an
    exact trajectory over `periods` beat periods that |D| stays constant, that
    arg D advances at the stated frequency, and that s(t) settles in [-1/2, 1/2].

    Raises:
        RegimeError: Re(g|g)^+ != 0 (the system converges instead), or Re(g|g)^- = 0
        ConsistencyError: the trajectory contradicts the descriptor
    """
    _require_alpha_independent(sus, "beats")
    re_minus, re_plus = sus.re_sum(1, 1, "-"), sus.re_sum(1, 1, "+")
    if not re_minus > 0:
        raise RegimeError("Re(g|g)^- = 0: no excited-state decay, beats regime undefined")
    if abs(re_plus) > 1e-12 * max(1.0, re_minus):
        raise RegimeError(
            f"Re(g|g)^+ = {re_plus:.6g} != 0: the state converges to a family member "
            f"(use predict_stationary)"
        )

    frequency = 2.0 * sus.im_sum(1, 1, "+")
    d0 = rho0.D
    modulus = abs(d0)
    decay = excited_decay_rate(sus)

    horizon = 40.0 / decay
    if frequency != 0.0:
        horizon = max(horizon, periods * 2.0 * math.pi / abs(frequency))
        samples = int(min(max_samples, max(200, math.ceil(4.0 * horizon * abs(frequency) / math.pi))))
    else:
        samples = 200

    L = build_generator(sus)
    trajectory = sample_exact(L, rho0, np.linspace(0.0, horizon, samples + 1))
    d = trajectory.D()

    drift = float(np.abs(np.abs(d) - modulus).max())
    if drift > 1e-8 * max(1.0, modulus):
        raise ConsistencyError(f"|D(t)| drifts by {drift:.3g}", {"drift": drift})

    if frequency != 0.0 and modulus > 1e-9:
        phase = np.unwrap(np.angle(d))
        slope = float(np.polyfit(trajectory.times, phase, 1)[0])
        if abs(slope - frequency) > 1e-6 * abs(frequency):
            raise ConsistencyError(
                f"phase of D advances at {slope:.12g}, expected {frequency:.12g}",
                {"fitted": slope, "expected": frequency},
            )

    limit_s = rho0.s + rho0.populations[2] / 2.0
    final_s = float(trajectory.s()[-1])
    if abs(final_s - limit_s) > 1e-6 or not (-0.5 - 1e-9 <= limit_s <= 0.5 + 1e-9):
        raise ConsistencyError(
            f"s(t) settles at {final_s:.12g}, expected {limit_s:.12g} in [-1/2, 1/2]",
            {"final_s": final_s, "expected": limit_s},
        )

    logger.info(f"Beats verified: frequency {frequency:.9g}, |D| = {modulus:.6g}")
    return BeatsDescriptor(frequency, 0.0, modulus, limit_s, trajectory)
