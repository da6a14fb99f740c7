"""
CPTrap - Master Equation Generator

Reduced dynamics of the Lambda atom (ground levels |1>, |2>, excited |3>)
in the stochastic limit. The master equation is linear in rho, so on the
real coordinates

    (rho11, rho22, rho33, Re rho12, Im rho12, Re rho13, Im rho13, Re rho23, Im rho23)

it is a constant 9x9 real matrix L. The first five coordinates span V1
(populations and ground coherence), the last four span V0 (excited
coherences); L never couples the two blocks.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from cptrap import metrics
from cptrap.bath import SusceptivitySet, decay_bound_rate
from cptrap.errors import EigenSolverError, UsageError

logger = logging.getLogger(__name__)

V1 = slice(0, 5)
V0 = slice(5, 9)

COORDINATE_NAMES = (
    "rho11", "rho22", "rho33",
    "re_rho12", "im_rho12",
    "re_rho13", "im_rho13",
    "re_rho23", "im_rho23",
)

# Off-diagonal coordinate slots: (row, col, index of Re, index of Im)
_OFF_DIAGONAL = ((0, 1, 3, 4), (0, 2, 5, 6), (1, 2, 7, 8))

HERMITIAN_TOLERANCE = 1e-12
POSITIVITY_WARNING = -1e-8


def _unit(a: int, b: int) -> np.ndarray:
    """|a><b| for a, b in {1, 2, 3}."""
    e = np.zeros((3, 3), dtype=complex)
    e[a - 1, b - 1] = 1.0
    return e


def to_coordinates(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix)
    vec = np.empty(9)
    vec[0], vec[1], vec[2] = m[0, 0].real, m[1, 1].real, m[2, 2].real
    for r, c, i_re, i_im in _OFF_DIAGONAL:
        vec[i_re] = m[r, c].real
        vec[i_im] = m[r, c].imag
    return vec


def from_coordinates(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=float)
    if v.shape != (9,):
        raise UsageError(f"expected 9 real coordinates, got shape {v.shape}")
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2] = v[0], v[1], v[2]
    for r, c, i_re, i_im in _OFF_DIAGONAL:
        m[r, c] = complex(v[i_re], v[i_im])
        m[c, r] = complex(v[i_re], -v[i_im])
    return m


# =============================================================================
# States
# =============================================================================

@dataclass(frozen=True, eq=False)
class DensityMatrix3:
    """
    Hermitian 3x3 state in the basis (|1>, |2>, |3>), entries rho_ab = <a|rho|b>.

    Construction only enforces shape and Hermiticity; unit trace and
    positivity are checked by stationary.check_density.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (3, 3):
            raise UsageError(f"density matrix must be 3x3, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max()))
        if np.abs(m - m.conj().T).max() > HERMITIAN_TOLERANCE * scale:
            raise UsageError("density matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_vector(cls, vec) -> "DensityMatrix3":
        return cls(from_coordinates(vec))

    @classmethod
    def from_ket(cls, ket) -> "DensityMatrix3":
        k = np.asarray(ket, dtype=complex).reshape(3)
        return cls(np.outer(k, k.conj()))

    def to_vector(self) -> np.ndarray:
        return to_coordinates(self.matrix)

    def entry(self, a: int, b: int) -> complex:
        return complex(self.matrix[a - 1, b - 1])

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def populations(self) -> Tuple[float, float, float]:
        d = self.matrix.diagonal().real
        return float(d[0]), float(d[1]), float(d[2])

    @property
    def s(self) -> float:
        """s = (rho12 + rho21) / 2."""
        return float(self.matrix[0, 1].real)

    @property
    def C(self) -> float:
        """rho11 + rho22 - rho12 - rho21."""
        m = self.matrix
        return float((m[0, 0] + m[1, 1] - m[0, 1] - m[1, 0]).real)

    @property
    def A(self) -> float:
        """<A> = rho12 + rho21 for A = |1><2| + |2><1|."""
        return 2.0 * self.s

    @property
    def D(self) -> complex:
        """rho22 - rho11 + rho12 - rho21."""
        m = self.matrix
        return complex(m[1, 1] - m[0, 0] + m[0, 1] - m[1, 0])

    @property
    def v0_norm(self) -> float:
        """Frobenius norm of the excited-coherence (V0) part."""
        m = self.matrix
        return math.sqrt(2.0 * (abs(m[0, 2]) ** 2 + abs(m[1, 2]) ** 2))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def hermitized(self) -> "DensityMatrix3":
        return DensityMatrix3(0.5 * (self.matrix + self.matrix.conj().T))

    def distance(self, other: "DensityMatrix3") -> float:
        return float(np.linalg.norm(self.matrix - other.matrix))


# =============================================================================
# Master equation
# =============================================================================

def _comm(a, b):
    return a @ b - b @ a


def _anti(a, b):
    return a @ b + b @ a


def master_equation_rhs(rho, sus: SusceptivitySet) -> np.ndarray:
    """
    d rho / dt for a 3x3 matrix, term by term.

    All susceptivities enter through their polarization sums. Both ground
    levels decay into |3> and are pumped from it; the cross terms carry the
    (g1|g2) and (g2|g1) susceptivities.
    """
    r = rho.matrix if isinstance(rho, DensityMatrix3) else np.asarray(rho, dtype=complex)
    p3 = _unit(3, 3)
    out = np.zeros((3, 3), dtype=complex)

    for a in (1, 2):
        pa = _unit(a, a)
        out += 1j * sus.im_sum(a, a, "-") * _comm(r, p3)
        out -= 1j * sus.im_sum(a, a, "+") * _comm(r, pa)
        out += 2.0 * sus.re_sum(a, a, "-") * (r[2, 2] * pa - 0.5 * _anti(r, p3))
        out += 2.0 * sus.re_sum(a, a, "+") * (r[a - 1, a - 1] * p3 - 0.5 * _anti(r, pa))

    for a, b in ((1, 2), (2, 1)):
        e_ab = _unit(a, b)
        out -= 1j * sus.im_sum(a, b, "+") * _comm(r, e_ab)
        out += 2.0 * sus.re_sum(a, b, "-") * r[2, 2] * _unit(b, a)
        out += 2.0 * sus.re_sum(a, b, "+") * (r[b - 1, a - 1] * p3 - 0.5 * _anti(r, e_ab))

    return out


@dataclass(frozen=True, eq=False)
class Superoperator:
    """Real 9x9 generator on Hermitian coordinates, with the set it came from."""

    matrix: np.ndarray
    source: Optional[SusceptivitySet] = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (9, 9):
            raise UsageError(f"superoperator must be 9x9, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def v1_block(self) -> np.ndarray:
        return self.matrix[V1, V1]

    @property
    def v0_block(self) -> np.ndarray:
        return self.matrix[V0, V0]

    @property
    def norm_inf(self) -> float:
        return float(np.abs(self.matrix).sum(axis=1).max())

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def spectral_radius(self) -> float:
        if self.is_zero:
            return 0.0
        return float(np.abs(_eigvals(self.matrix)).max())

    def trace_row(self) -> np.ndarray:
        """Row combination giving d(rho11 + rho22 + rho33)/dt."""
        return self.matrix[0] + self.matrix[1] + self.matrix[2]


def _eigvals(m: np.ndarray) -> np.ndarray:
    try:
        return linalg.eigvals(m)
    except (linalg.LinAlgError, ValueError) as e:
        raise EigenSolverError(f"eigenvalue computation failed: {e}", {"shape": list(m.shape)})


def build_generator(sus: SusceptivitySet) -> Superoperator:
    columns = []
    for j in range(9):
        basis = np.zeros(9)
        basis[j] = 1.0
        columns.append(to_coordinates(master_equation_rhs(from_coordinates(basis), sus)))
    L = Superoperator(np.column_stack(columns), source=sus)
    logger.debug(f"Generator assembled: ||L||_inf = {L.norm_inf:.6g}")
    return L


def apply(L: Superoperator, rho: DensityMatrix3) -> np.ndarray:
    """d rho / dt as a Hermitian, traceless 3x3 matrix."""
    return from_coordinates(L.matrix @ rho.to_vector())


def reduced_v1_system(sus: SusceptivitySet) -> np.ndarray:
    """
    Explicit rate equations on V1 with the polarization-summed (g_a|g_b)^+ = c_ab.

    Returns a complex 3x5 array: rows d rho11, d rho22, d rho12; columns the
    variables (rho11, rho22, rho33, rho12, rho21).
    """
    def c(a, b):
        return sus.polarization_sum(a, b, "+")

    def re_minus(a, b):
        return sus.re_sum(a, b, "-")

    def re_plus(a, b):
        return sus.re_sum(a, b, "+")

    rows = np.zeros((3, 5), dtype=complex)
    rows[0] = [-2 * re_plus(1, 1), 0, 2 * re_minus(1, 1), -c(2, 1), -c(2, 1).conjugate()]
    rows[1] = [0, -2 * re_plus(2, 2), 2 * re_minus(2, 2), -c(1, 2).conjugate(), -c(1, 2)]
    rows[2] = [
        -c(1, 2),
        -c(2, 1).conjugate(),
        2 * re_minus(2, 1),
        -(c(1, 1).conjugate() + c(2, 2)),
        0,
    ]
    return rows


def excited_decay_rate(sus: SusceptivitySet) -> float:
    """Rate of rho33 loss when no pumping acts: 2 (Re(g1|g1)^- + Re(g2|g2)^-)."""
    return 2.0 * (sus.re_sum(1, 1, "-") + sus.re_sum(2, 2, "-"))


# =============================================================================
# Block structure
# =============================================================================

@dataclass(frozen=True)
class BlockReport:
    v0_to_v1_leakage: float
    v1_to_v0_leakage: float
    v0_spectral_abscissa: float
    v1_spectral_gap: float
    decay_bound: float
    v1_eigenvalues: Tuple[complex, ...] = ()
    v0_eigenvalues: Tuple[complex, ...] = ()

    @property
    def max_leakage(self) -> float:
        return max(self.v0_to_v1_leakage, self.v1_to_v0_leakage)


def decompose_blocks(L: Superoperator, tol: float = 1e-12) -> BlockReport:
    m = L.matrix
    v0_to_v1 = float(np.abs(m[V1, V0]).max())
    v1_to_v0 = float(np.abs(m[V0, V1]).max())
    bound = decay_bound_rate(L.source) if L.source is not None else 0.0

    if L.is_zero:
        return BlockReport(v0_to_v1, v1_to_v0, 0.0, 0.0, bound)

    ev1 = _eigvals(L.v1_block)
    ev0 = _eigvals(L.v0_block)
    scale = max(1.0, L.norm_inf)
    decaying = ev1.real[ev1.real < -tol * scale]
    gap = float(-decaying.max()) if decaying.size else 0.0

    return BlockReport(
        v0_to_v1_leakage=v0_to_v1,
        v1_to_v0_leakage=v1_to_v0,
        v0_spectral_abscissa=float(ev0.real.max()),
        v1_spectral_gap=gap,
        decay_bound=bound,
        v1_eigenvalues=tuple(complex(x) for x in sorted(ev1, key=lambda z: (z.real, z.imag))),
        v0_eigenvalues=tuple(complex(x) for x in sorted(ev0, key=lambda z: (z.real, z.imag))),
    )


# =============================================================================
# Trajectories
# =============================================================================

@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled evolution: times[k] and coordinate vectors vectors[k]."""

    times: np.ndarray
    vectors: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def states(self) -> Tuple[DensityMatrix3, ...]:
        return tuple(DensityMatrix3.from_vector(v) for v in self.vectors)

    @property
    def final(self) -> DensityMatrix3:
        return DensityMatrix3.from_vector(self.vectors[-1])

    def populations(self) -> np.ndarray:
        return self.vectors[:, 0:3]

    def s(self) -> np.ndarray:
        return self.vectors[:, 3].copy()

    def C(self) -> np.ndarray:
        v = self.vectors
        return v[:, 0] + v[:, 1] - 2.0 * v[:, 3]

    def A(self) -> np.ndarray:
        return 2.0 * self.vectors[:, 3]

    def D(self) -> np.ndarray:
        v = self.vectors
        return (v[:, 1] - v[:, 0]) + 2j * v[:, 4]

    def traces(self) -> np.ndarray:
        return self.vectors[:, 0:3].sum(axis=1)

    def v0_norms(self) -> np.ndarray:
        return np.sqrt(2.0 * (self.vectors[:, V0] ** 2).sum(axis=1))

    def min_eigenvalues(self) -> np.ndarray:
        return np.array([np.linalg.eigvalsh(from_coordinates(v))[0] for v in self.vectors])

    def rows(self):
        """Per-sample rows: t, nine coordinates, s, C, A, min eigenvalue."""
        mins = self.min_eigenvalues()
        s, c, a = self.s(), self.C(), self.A()
        for k, t in enumerate(self.times):
            yield [float(t), *map(float, self.vectors[k]), float(s[k]), float(c[k]), float(a[k]), float(mins[k])]


TRAJECTORY_COLUMNS = ("t",) + COORDINATE_NAMES + ("s", "C", "A", "min_eigenvalue")


def _sample_times(horizon: float, samples: int) -> np.ndarray:
    if horizon < 0:
        raise UsageError(f"horizon must be >= 0, got {horizon}")
    if samples < 1:
        raise UsageError(f"samples must be >= 1, got {samples}")
    if horizon == 0:
        return np.zeros(1)
    return np.linspace(0.0, horizon, samples + 1)


def _positivity_flags(times, vectors) -> list:
    flags = []
    for t, v in zip(times, vectors):
        lowest = float(np.linalg.eigvalsh(from_coordinates(v))[0])
        if lowest < POSITIVITY_WARNING:
            flags.append({"t": float(t), "min_eigenvalue": lowest})
    if flags:
        logger.warning(f"Positivity drift at {len(flags)} samples (worst {min(f['min_eigenvalue'] for f in flags):.3g})")
    return flags


def default_step(L: Superoperator) -> float:
    """dt = 1e-3 / ||L||_inf (1.0 for the zero generator)."""
    norm = L.norm_inf
    return 1e-3 / norm if norm > 0 else 1.0


def evolve_rk(
    L: Superoperator,
    rho0: DensityMatrix3,
    horizon: float,
    dt: Optional[float] = None,
    samples: int = 100,
) -> Trajectory:
    """
    Classical fixed-step RK4 on the 9-dimensional linear system.

    The step is shrunk to divide each sample interval evenly. States are
    re-Hermitized at the samples; the trace is never renormalized.

    Raises:
        UsageError: dt <= 0, or dt times the spectral radius of L is >= 1
    """
    if dt is None:
        dt = default_step(L)
    if not dt > 0:
        raise UsageError(f"step must be positive, got {dt}")
    radius = L.spectral_radius()
    if dt * radius >= 1.0:
        raise UsageError(
            f"step {dt:.3g} violates the stability guard (spectral radius {radius:.3g})",
            {"dt": dt, "spectral_radius": radius},
        )

    times = _sample_times(horizon, samples)
    v = rho0.to_vector()
    out = [v.copy()]
    steps_total = 0

    if horizon > 0:
        interval = horizon / samples
        per_sample = max(1, math.ceil(interval / dt - 1e-12))
        h = interval / per_sample
        hl = h * L.matrix
        # RK4 applied to v' = Lv is exactly v <- P v with the degree-4 Taylor polynomial P.
        hl2 = hl @ hl
        hl3 = hl2 @ hl
        propagator = np.eye(9) + hl + hl2 / 2.0 + hl3 / 6.0 + (hl3 @ hl) / 24.0
        for _ in range(samples):
            for _ in range(per_sample):
                v = propagator @ v
            steps_total += per_sample
            # Coordinates are Hermitian by construction; the round trip is the re-Hermitization.
            out.append(to_coordinates(DensityMatrix3.from_vector(v).hermitized().matrix))
        metrics.record_integrator_steps(steps_total)
    else:
        h = dt

    vectors = np.array(out)
    return Trajectory(
        times=times,
        vectors=vectors,
        metadata={
            "method": "rk4",
            "step": h,
            "steps": steps_total,
            "positivity_warnings": _positivity_flags(times, vectors),
        },
    )


# Truncation threshold for the Taylor stage of the exponential.
_EXPM_TOL = 1e-17


def expm_taylor(m: np.ndarray) -> np.ndarray:
    """
    exp(M) by scaling and squaring with a truncated Taylor series.

    M is scaled by 2^-k until ||M||_1 <= 1/2, the series is summed by Horner's
    rule to the first order whose remainder bound drops below 1e-17, and the
    result is squared k times.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    norm = float(np.abs(m).sum(axis=0).max()) if m.size else 0.0
    if norm == 0.0:
        return np.eye(n)

    squarings = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    scaled = m / 2.0 ** squarings
    theta = norm / 2.0 ** squarings

    order = 1
    remainder = theta ** 2 / 2.0 * math.exp(theta)
    while remainder > _EXPM_TOL and order < 30:
        order += 1
        remainder *= theta / (order + 1)

    coefficients = [1.0]
    for k in range(order):
        coefficients.append(coefficients[-1] / (k + 1))

    result = np.eye(n) * coefficients[order]
    for k in range(order - 1, -1, -1):
        result = scaled @ result
        result += np.eye(n) * coefficients[k]

    for _ in range(squarings):
        result = result @ result
    return result


def evolve_exact(L: Superoperator, rho0: DensityMatrix3, t: float) -> DensityMatrix3:
    """exp(tL) applied to rho0."""
    if t < 0:
        raise UsageError(f"time must be >= 0, got {t}")
    if t == 0 or L.is_zero:
        return rho0
    return DensityMatrix3.from_vector(expm_taylor(t * L.matrix) @ rho0.to_vector())


def sample_exact(L: Superoperator, rho0: DensityMatrix3, times: Sequence[float]) -> Trajectory:
    """Trajectory sampled with the exact propagator at the given increasing times."""
    ts = np.asarray(times, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise UsageError("times must be a non-empty 1-d sequence")
    if ts[0] < 0 or np.any(np.diff(ts) <= 0):
        raise UsageError("times must be non-negative and strictly increasing")

    vectors = np.empty((ts.size, 9))
    v = rho0.to_vector()
    previous = 0.0
    cache: Dict[float, np.ndarray] = {}
    for k, t in enumerate(ts):
        delta = float(t - previous)
        if delta > 0:
            step = cache.get(delta)
            if step is None:
                step = expm_taylor(delta * L.matrix)
                cache[delta] = step
            v = step @ v
        vectors[k] = v
        previous = float(t)

    return Trajectory(
        times=ts,
        vectors=vectors,
        metadata={"method": "exact", "positivity_warnings": _positivity_flags(ts, vectors)},
    )


# =============================================================================
# V0 decay
# =============================================================================

@dataclass(frozen=True)
class DecayReport:
    fitted_rate: float
    spectral_abscissa: float
    decay_bound: float
    bound_satisfied: bool
    max_bound_ratio: float
    samples: int


def v0_decay_check(
    L: Superoperator,
    rho0: DensityMatrix3,
    horizon: float,
    samples: int = 200,
) -> DecayReport:
    """
    Fit log ||V0 block(t)|| against t and compare with the block spectrum.

    bound_satisfied reports ||V0(t)|| <= ||V0(0)|| exp(-c t) (1 + 1e-6) at every
    sample; it is vacuous (True) when c = 0.

    Raises:
        UsageError: rho0 has no V0 component, or horizon <= 0
    """
    initial = rho0.v0_norm
    if initial < 1e-10:
        raise UsageError(f"initial V0 component {initial:.3g} is below 1e-10")
    if not horizon > 0:
        raise UsageError(f"horizon must be positive, got {horizon}")

    report = decompose_blocks(L)
    trajectory = sample_exact(L, rho0, np.linspace(0.0, horizon, samples + 1))
    norms = trajectory.v0_norms()
    times = trajectory.times

    usable = norms > 1e-250
    if usable.sum() >= 2:
        slope = np.polyfit(times[usable], np.log(norms[usable]), 1)[0]
        rate = float(-slope)
    else:
        rate = float("inf")
    if L.is_zero:
        rate = 0.0

    c = report.decay_bound
    envelope = initial * np.exp(-c * times)
    ratios = norms / envelope
    max_ratio = float(ratios.max())
    satisfied = bool(c <= 0 or max_ratio <= 1.0 + 1e-6)
    if not satisfied:
        logger.warning(f"V0 norm exceeds the exp(-ct) envelope by factor {max_ratio:.6g} (c = {c:.6g})")

    return DecayReport(
        fitted_rate=rate,
        spectral_abscissa=report.v0_spectral_abscissa,
        decay_bound=c,
        bound_satisfied=satisfied,
        max_bound_ratio=max_ratio,
        samples=len(times),
    )
