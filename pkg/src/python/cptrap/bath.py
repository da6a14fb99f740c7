"""
CPTrap - Bath Susceptivities

Evaluates the generalized susceptivities (g_ia|g_ib)^{+/-} of a boson
reservoir from its dispersion, formfactors and occupation spectrum:

    (g_ia|g_ib)^- = pi * int dk g_ia g_ib (N+1) delta(w(k) - w)
                    - i * P.P. int dk g_ia g_ib (N+1) / (w(k) - w)
    (g_ia|g_ib)^+ = same with N in place of N+1

Formfactors are real radial profiles and the dispersion is the isotropic
power law w(k) = |k|^p in three dimensions, so the resonant part reduces to
a point evaluation on the sphere |k| = w^(1/p) and the principal value to a
one-dimensional radial integral with a simple pole. The pole is removed by
singularity subtraction:

    P.P. int_0^L f(r) / (r - r*) dr
        = int_0^L (f(r) - f(r*)) / (r - r*) dr + f(r*) * ln((L - r*) / r*)

with the regular part handled by adaptive Gauss-Kronrod quadrature
(QUADPACK via scipy) under an absolute tolerance and a hard subdivision
budget. Running out of budget is an error, never a silent approximation.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from cptrap import metrics
from cptrap.errors import (
    PhysicsDomainError,
    QuadratureError,
    UndefinedRatioError,
    UsageError,
)

logger = logging.getLogger(__name__)

SIGNS = ("+", "-")
SIGN_INDEX = {"+": 0, "-": 1}

DEFAULT_TOLERANCE = 1e-9
DEFAULT_PANEL_LIMIT = 200
DEFAULT_CUTOFF_FACTOR = 20.0

# Relative floor handed to QUADPACK next to the absolute tolerance; large
# principal values cannot be resolved below double-precision roundoff.
_EPSREL = 1e-12


def _check_sign(sign: str):
    if sign not in SIGN_INDEX:
        raise UsageError(f"sign must be '+' or '-', got {sign!r}")


# =============================================================================
# Dispersion
# =============================================================================

@dataclass(frozen=True)
class DispersionSpec:
    """Isotropic power-law dispersion w(k) = |k|^p in three dimensions."""

    exponent: float = 1.0

    def __post_init__(self):
        if not self.exponent > 0:
            raise PhysicsDomainError(f"dispersion exponent must be positive, got {self.exponent}")

    def energy(self, r):
        return np.power(r, self.exponent)

    def resonant_radius(self, omega: float) -> float:
        if not omega > 0:
            raise PhysicsDomainError(f"Bohr frequency must be positive, got {omega}")
        return omega ** (1.0 / self.exponent)

    def surface_density(self, omega: float) -> float:
        """
        Weight of the resonant sphere: int dk F(|k|) delta(w(k) - w) = surface_density * F(r*).

        4*pi*r*^2 from the angular integral, 1/(p r*^(p-1)) from the delta Jacobian.
        """
        r_star = self.resonant_radius(omega)
        p = self.exponent
        return 4.0 * math.pi * r_star ** (3.0 - p) / p

    def inverse_gap(self, r, r_star: float):
        """(r - r*) / (w(r) - w(r*)), continued smoothly through r = r*."""
        p = self.exponent
        x = (np.asarray(r, dtype=float) - r_star) / r_star
        if p == 1.0:
            return np.ones_like(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(x == 0.0, 1.0 / p, x / np.expm1(p * np.log1p(x)))
        return h * r_star ** (1.0 - p)


# =============================================================================
# Formfactors
# =============================================================================

PROFILE_KINDS = ("gaussian", "lorentzian", "shell")

# Peak flanks in units of the profile width.
_PEAK_OFFSETS = (-8, -4, -2, -1, 0, 1, 2, 4, 8)


@dataclass(frozen=True)
class FormFactor:
    """
    Real radial formfactor g_ia(|k|) for polarization i and transition a.

    Profiles:
        gaussian:   A * exp(-(r - r0)^2 / (2 sigma^2))      (center, width = sigma)
        lorentzian: A / (1 + ((r - r0) / gamma)^2)          (center, width = gamma)
        shell:      A on [inner, outer], 0 elsewhere
    """

    polarization: int
    transition: int
    kind: str = "gaussian"
    amplitude: float = 1.0
    center: float = 1.0
    width: float = 1.0
    inner: float = 0.0
    outer: float = 1.0

    def __post_init__(self):
        if self.polarization not in (1, 2) or self.transition not in (1, 2):
            raise UsageError(
                f"formfactor indices must be in {{1, 2}}, got ({self.polarization}, {self.transition})"
            )
        if self.kind not in PROFILE_KINDS:
            raise UsageError(f"unknown formfactor kind {self.kind!r}")
        if self.kind in ("gaussian", "lorentzian") and not self.width > 0:
            raise PhysicsDomainError(f"{self.kind} width must be positive, got {self.width}")
        if self.kind == "shell" and not (0 <= self.inner < self.outer):
            raise PhysicsDomainError(
                f"shell profile needs 0 <= inner < outer, got [{self.inner}, {self.outer}]"
            )

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-0.5 * ((r - self.center) / self.width) ** 2)
        if self.kind == "lorentzian":
            return self.amplitude / (1.0 + ((r - self.center) / self.width) ** 2)
        inside = (r >= self.inner) & (r <= self.outer)
        return np.where(inside, self.amplitude, 0.0)

    def breakpoints(self) -> Tuple[float, ...]:
        """
        Radii that must be panel edges: shell jumps, or the peak and its
        flanks for smooth profiles. A peak far narrower than the first
        Gauss-Kronrod panel is otherwise invisible to QUADPACK.
        """
        if self.kind == "shell":
            return (self.inner, self.outer)
        return tuple(
            r for r in (self.center + k * self.width for k in _PEAK_OFFSETS) if r > 0.0
        )

    def relabel(self, polarization: int, transition: int) -> "FormFactor":
        return replace(self, polarization=polarization, transition=transition)


# =============================================================================
# Occupation spectrum
# =============================================================================

OCCUPATION_KINDS = ("fock", "flat", "planck", "shifted-window")


@dataclass(frozen=True)
class OccupationSpectrum:
    """
    Photon number N(k) of the reservoir state, radial in k.

    fock: N = 0; flat: N = level; planck: N = 1 / (exp(beta * w(k)) - 1);
    shifted-window: N = level for inner <= |k| <= outer, 0 elsewhere.
    """

    kind: str = "planck"
    level: float = 0.0
    beta: float = 1.0
    inner: float = 0.0
    outer: float = 1.0

    def __post_init__(self):
        if self.kind not in OCCUPATION_KINDS:
            raise UsageError(f"unknown occupation kind {self.kind!r}")
        if self.kind in ("flat", "shifted-window") and not self.level >= 0:
            raise PhysicsDomainError(f"occupation level must be >= 0, got {self.level}")
        if self.kind == "planck" and not self.beta > 0:
            raise PhysicsDomainError(f"inverse temperature must be positive, got {self.beta}")
        if self.kind == "shifted-window" and not (0 <= self.inner < self.outer):
            raise PhysicsDomainError(
                f"occupation window needs 0 <= inner < outer, got [{self.inner}, {self.outer}]"
            )

    def evaluate(self, r, dispersion: DispersionSpec):
        r = np.asarray(r, dtype=float)
        if self.kind == "fock":
            return np.zeros_like(r)
        if self.kind == "flat":
            return np.full_like(r, self.level)
        if self.kind == "planck":
            with np.errstate(divide="ignore"):
                return 1.0 / np.expm1(self.beta * dispersion.energy(r))
        inside = (r >= self.inner) & (r <= self.outer)
        return np.where(inside, self.level, 0.0)

    def breakpoints(self) -> Tuple[float, ...]:
        if self.kind == "shifted-window":
            return (self.inner, self.outer)
        return ()


def _weight(occupation: OccupationSpectrum, r, dispersion: DispersionSpec, sign: str):
    n = occupation.evaluate(r, dispersion)
    return n if sign == "+" else n + 1.0


def _check_pair(ga: FormFactor, gb: FormFactor):
    if ga.polarization != gb.polarization:
        raise UsageError(
            f"formfactors belong to different polarizations ({ga.polarization} vs {gb.polarization})"
        )


# =============================================================================
# Bath configuration
# =============================================================================

@dataclass(frozen=True)
class BathConfig:
    """
    Everything the susceptivity integrals depend on.

    formfactors[i-1][a-1] is g_ia; occupations[i-1] is N_i.
    cutoff is the radial UV cutoff L (None -> cutoff_factor * resonant radius).
    """

    formfactors: Tuple[Tuple[FormFactor, FormFactor], Tuple[FormFactor, FormFactor]]
    occupations: Tuple[OccupationSpectrum, OccupationSpectrum]
    dispersion: DispersionSpec = field(default_factory=DispersionSpec)
    bohr_frequency: float = 1.0
    cutoff: Optional[float] = None
    cutoff_factor: float = DEFAULT_CUTOFF_FACTOR
    tolerance: float = DEFAULT_TOLERANCE
    panel_limit: int = DEFAULT_PANEL_LIMIT

    def __post_init__(self):
        if len(self.formfactors) != 2 or any(len(row) != 2 for row in self.formfactors):
            raise UsageError("formfactors must be a 2x2 table (polarization x transition)")
        for i, row in enumerate(self.formfactors, start=1):
            for a, g in enumerate(row, start=1):
                if (g.polarization, g.transition) != (i, a):
                    raise UsageError(
                        f"formfactor at [{i}][{a}] is labelled ({g.polarization}, {g.transition})"
                    )
        if len(self.occupations) != 2:
            raise UsageError("occupations must hold one spectrum per polarization")
        r_star = self.dispersion.resonant_radius(self.bohr_frequency)
        if self.cutoff is not None and not self.cutoff > r_star:
            raise PhysicsDomainError(
                f"cutoff {self.cutoff} must exceed the resonant radius {r_star}"
            )
        if not self.cutoff_factor > 1:
            raise PhysicsDomainError(f"cutoff factor must exceed 1, got {self.cutoff_factor}")
        if not self.tolerance > 0:
            raise PhysicsDomainError(f"quadrature tolerance must be positive, got {self.tolerance}")

    @classmethod
    def with_equal_formfactors(
        cls,
        profile: FormFactor,
        occupation: OccupationSpectrum,
        **kwargs,
    ) -> "BathConfig":
        """All four g_ia equal to `profile`: the alpha-independent case."""
        table = tuple(
            tuple(profile.relabel(i, a) for a in (1, 2)) for i in (1, 2)
        )
        return cls(formfactors=table, occupations=(occupation, occupation), **kwargs)

    @property
    def resonant_radius(self) -> float:
        return self.dispersion.resonant_radius(self.bohr_frequency)

    @property
    def effective_cutoff(self) -> float:
        if self.cutoff is not None:
            return self.cutoff
        return self.cutoff_factor * self.resonant_radius

    def formfactor(self, i: int, alpha: int) -> FormFactor:
        return self.formfactors[i - 1][alpha - 1]

    def occupation(self, i: int) -> OccupationSpectrum:
        return self.occupations[i - 1]

    def occupation_at_resonance(self, i: int = 1) -> float:
        return float(self.occupation(i).evaluate(self.resonant_radius, self.dispersion))


# =============================================================================
# Integrals
# =============================================================================

@dataclass(frozen=True)
class QuadratureEstimate:
    value: float
    error: float
    subintervals: int


def resonant_part(
    ga: FormFactor,
    gb: FormFactor,
    occupation: OccupationSpectrum,
    dispersion: DispersionSpec,
    omega: float,
    sign: str,
) -> float:
    """
    pi * int dk g_a(k) g_b(k) W(k) delta(w(k) - w), W = N for '+', N + 1 for '-'.

    For p = 1 this is 4 pi^2 w^2 g_a(w) g_b(w) W(w).
    """
    _check_sign(sign)
    _check_pair(ga, gb)
    r_star = dispersion.resonant_radius(omega)
    weight = _weight(occupation, r_star, dispersion, sign)
    value = math.pi * dispersion.surface_density(omega) * float(ga(r_star) * gb(r_star) * weight)
    metrics.record_quadrature("resonant")
    return value


def _adaptive_quad(func, a, b, points, tolerance, panel_limit, label, **weight) -> QuadratureEstimate:
    """quad() on [a, b]; anything short of a converged, finite estimate is a QuadratureError."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            out = quad(
                func, a, b,
                points=points or None,
                epsabs=tolerance,
                epsrel=_EPSREL,
                limit=panel_limit,
                full_output=1,
                **weight,
            )
    except ValueError as e:
        raise QuadratureError(f"{label}: QUADPACK rejected the problem: {e}", {"label": label})

    value, error, info = float(out[0]), float(out[1]), out[2]
    converged = len(out) == 3 or error <= max(tolerance, _EPSREL * abs(value))
    if not converged or not math.isfinite(value):
        raise QuadratureError(
            f"{label}: no convergence on [{a}, {b}] (estimate {value:.12g} +/- {error:.3g})",
            {
                "label": label,
                "interval": [a, b],
                "value": value,
                "error_estimate": error,
                "tolerance": tolerance,
                "panel_limit": panel_limit,
                "message": out[3] if len(out) > 3 else "",
            },
        )
    return QuadratureEstimate(value, error, int(info.get("last", 0)))


def _panel_breaks(ga, gb, occupation, r_star: float, cutoff: float):
    """Sorted interior breakpoints of (0, cutoff), kept clear of the pole at r*."""
    clearance = 1e-9 * r_star
    return sorted(
        {b for b in ga.breakpoints() + gb.breakpoints() + occupation.breakpoints()
         if 0.0 < b < cutoff and abs(b - r_star) > clearance}
    )


def _radial_integrand(ga, gb, occupation, dispersion, sign, r_star):
    """f(r) such that the principal-value integrand is f(r) / (r - r*)."""
    def f(r):
        weight = _weight(occupation, r, dispersion, sign)
        return float(
            4.0 * math.pi * r * r * ga(r) * gb(r) * weight * dispersion.inverse_gap(r, r_star)
        )
    return f


def principal_value_integral(
    ga: FormFactor,
    gb: FormFactor,
    occupation: OccupationSpectrum,
    dispersion: DispersionSpec,
    omega: float,
    sign: str,
    cutoff: float,
    tolerance: float = DEFAULT_TOLERANCE,
    panel_limit: int = DEFAULT_PANEL_LIMIT,
) -> QuadratureEstimate:
    """
    P.P. int_{|k| <= cutoff} dk g_a g_b W / (w(k) - w) by singularity subtraction.

    The regular part is integrated separately on [0, r*] and [r*, cutoff], so
    the removable point r = r* is never sampled. Shell edges, occupation
    windows and the flanks of gaussian or lorentzian peaks are passed to
    QUADPACK as breakpoints.

    Raises:
        PhysicsDomainError: cutoff at or below the resonant radius, or w <= 0
        QuadratureError: error estimate above tolerance within the panel budget
    """
    _check_sign(sign)
    _check_pair(ga, gb)
    r_star = dispersion.resonant_radius(omega)
    if not cutoff > r_star:
        raise PhysicsDomainError(f"cutoff {cutoff} must exceed the resonant radius {r_star}")

    f = _radial_integrand(ga, gb, occupation, dispersion, sign, r_star)
    f_star = f(r_star)
    if not math.isfinite(f_star):
        raise QuadratureError(
            "principal-value integrand is not finite on the resonant surface",
            {"r_star": r_star, "f_star": f_star},
        )

    def regular(r):
        return (f(r) - f_star) / (r - r_star)

    breaks = _panel_breaks(ga, gb, occupation, r_star, cutoff)
    label = f"P.P.(g{ga.polarization}{ga.transition}|g{gb.polarization}{gb.transition}){sign}"
    lower = _adaptive_quad(
        regular, 0.0, r_star, [b for b in breaks if b < r_star],
        tolerance / 2, panel_limit, label,
    )
    upper = _adaptive_quad(
        regular, r_star, cutoff, [b for b in breaks if b > r_star],
        tolerance / 2, panel_limit, label,
    )
    analytic = f_star * math.log((cutoff - r_star) / r_star)

    error = lower.error + upper.error
    metrics.record_quadrature("principal", error)
    return QuadratureEstimate(
        lower.value + upper.value + analytic,
        error,
        lower.subintervals + upper.subintervals,
    )


def principal_part(
    ga: FormFactor,
    gb: FormFactor,
    occupation: OccupationSpectrum,
    dispersion: DispersionSpec,
    omega: float,
    sign: str,
    cutoff: float,
    tolerance: float = DEFAULT_TOLERANCE,
    panel_limit: int = DEFAULT_PANEL_LIMIT,
) -> float:
    """Imaginary-part contribution: -P.P. int dk g_a g_b W / (w(k) - w)."""
    estimate = principal_value_integral(
        ga, gb, occupation, dispersion, omega, sign, cutoff, tolerance, panel_limit
    )
    return -estimate.value


def principal_part_cauchy(
    ga: FormFactor,
    gb: FormFactor,
    occupation: OccupationSpectrum,
    dispersion: DispersionSpec,
    omega: float,
    sign: str,
    cutoff: float,
    tolerance: float = DEFAULT_TOLERANCE,
    panel_limit: int = DEFAULT_PANEL_LIMIT,
) -> float:
    """
    Same quantity as principal_part via QUADPACK's Cauchy-weight rule (QAWC).

    QAWC takes no breakpoints, so [0, cutoff] is cut at the same panel edges
    as the subtraction route: the piece holding r* goes to QAWC, the others
    are ordinary integrals of f(r) / (r - r*). Each piece must converge.

    Raises:
        PhysicsDomainError: cutoff at or below the resonant radius, or w <= 0
        QuadratureError: a piece misses its tolerance within the panel budget
    """
    _check_sign(sign)
    _check_pair(ga, gb)
    r_star = dispersion.resonant_radius(omega)
    if not cutoff > r_star:
        raise PhysicsDomainError(f"cutoff {cutoff} must exceed the resonant radius {r_star}")
    f = _radial_integrand(ga, gb, occupation, dispersion, sign, r_star)

    def shifted(r):
        return f(r) / (r - r_star)

    edges = [0.0] + _panel_breaks(ga, gb, occupation, r_star, cutoff) + [cutoff]
    pieces = list(zip(edges[:-1], edges[1:]))
    share = tolerance / len(pieces)
    label = f"QAWC(g{ga.polarization}{ga.transition}|g{gb.polarization}{gb.transition}){sign}"

    total = 0.0
    for a, b in pieces:
        if a < r_star < b:
            piece = _adaptive_quad(
                f, a, b, None, share, panel_limit, label, weight="cauchy", wvar=r_star
            )
        else:
            piece = _adaptive_quad(shifted, a, b, None, share, panel_limit, label)
        total += piece.value
    return -total


def susceptivity(i: int, alpha: int, beta: int, sign: str, config: BathConfig) -> complex:
    """(g_i,alpha | g_i,beta)^sign_w = resonant part + i * principal part."""
    ga = config.formfactor(i, alpha)
    gb = config.formfactor(i, beta)
    occupation = config.occupation(i)
    re = resonant_part(ga, gb, occupation, config.dispersion, config.bohr_frequency, sign)
    im = principal_part(
        ga, gb, occupation, config.dispersion, config.bohr_frequency, sign,
        config.effective_cutoff, config.tolerance, config.panel_limit,
    )
    return complex(re, im)


# =============================================================================
# Susceptivity set
# =============================================================================

def _frozen(values, shape=(2, 2, 2, 2)) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise UsageError(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SusceptivitySet:
    """
    All generalized susceptivities of one bath at one Bohr frequency.

    resonant[i, a, b, s] and principal[i, a, b, s] (0-based, s = 0 for '+',
    1 for '-') hold the real numbers Re and Im of (g_ia|g_ib)^s; errors holds
    the quadrature error estimate of the principal part.
    """

    bohr_frequency: float
    resonant: np.ndarray
    principal: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "resonant", _frozen(self.resonant))
        object.__setattr__(self, "principal", _frozen(self.principal))
        object.__setattr__(self, "errors", _frozen(self.errors))

    # --- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, omega: float = 1.0) -> "SusceptivitySet":
        z = np.zeros((2, 2, 2, 2))
        return cls(omega, z, z, z)

    @classmethod
    def uniform(
        cls,
        re_minus: float,
        re_plus: float,
        im_minus: float = 0.0,
        im_plus: float = 0.0,
        omega: float = 1.0,
    ) -> "SusceptivitySet":
        """
        Alpha/beta-independent set with the given polarization sums, split
        evenly over the two polarizations.
        """
        re = np.zeros((2, 2, 2, 2))
        im = np.zeros((2, 2, 2, 2))
        re[..., 0], re[..., 1] = re_plus / 2, re_minus / 2
        im[..., 0], im[..., 1] = im_plus / 2, im_minus / 2
        return cls(omega, re, im, np.zeros((2, 2, 2, 2)))

    # --- accessors (1-based indices, as in the physics) ----------------------

    def _index(self, i, alpha, beta, sign):
        _check_sign(sign)
        return (i - 1, alpha - 1, beta - 1, SIGN_INDEX[sign])

    def re(self, i: int, alpha: int, beta: int, sign: str) -> float:
        return float(self.resonant[self._index(i, alpha, beta, sign)])

    def im(self, i: int, alpha: int, beta: int, sign: str) -> float:
        return float(self.principal[self._index(i, alpha, beta, sign)])

    def value(self, i: int, alpha: int, beta: int, sign: str) -> complex:
        return complex(self.re(i, alpha, beta, sign), self.im(i, alpha, beta, sign))

    def bar(self, i: int, alpha: int, beta: int, sign: str) -> complex:
        """Conjugate notation: Re - i Im."""
        return complex(self.re(i, alpha, beta, sign), -self.im(i, alpha, beta, sign))

    def re_sum(self, alpha: int, beta: int, sign: str) -> float:
        return float(self.resonant[:, alpha - 1, beta - 1, SIGN_INDEX[sign]].sum())

    def im_sum(self, alpha: int, beta: int, sign: str) -> float:
        return float(self.principal[:, alpha - 1, beta - 1, SIGN_INDEX[sign]].sum())

    def polarization_sum(self, alpha: int, beta: int, sign: str) -> complex:
        """(g_alpha|g_beta)^sign = sum_i (g_i,alpha|g_i,beta)^sign."""
        _check_sign(sign)
        return complex(self.re_sum(alpha, beta, sign), self.im_sum(alpha, beta, sign))

    def polarization_bar(self, alpha: int, beta: int, sign: str) -> complex:
        return self.polarization_sum(alpha, beta, sign).conjugate()

    # --- derived quantities ---------------------------------------------------

    @property
    def einstein_ratio(self) -> Optional[float]:
        """Re(g|g)^+ / Re(g|g)^- over the diagonal transitions; None if undefined."""
        minus = self.re_sum(1, 1, "-") + self.re_sum(2, 2, "-")
        if not minus > 0:
            return None
        return (self.re_sum(1, 1, "+") + self.re_sum(2, 2, "+")) / minus

    def is_zero(self) -> bool:
        return not (np.any(self.resonant) or np.any(self.principal))

    def is_alpha_independent(self, rtol: float = 1e-12, atol: float = 1e-15) -> bool:
        """True when every polarization sum is the same for all (alpha, beta)."""
        for part in (self.resonant, self.principal):
            sums = part.sum(axis=0)  # [a, b, s]
            ref = sums[0, 0, :]
            if not np.allclose(sums, ref[np.newaxis, np.newaxis, :], rtol=rtol, atol=atol):
                return False
        return True

    def hermitian_defect(self) -> float:
        """
        Largest violation of conj(c[i][a][b][s]) = bar(c[i][b][a][s]).

        For real values that relation says the Re and Im tables are each
        symmetric in (a, b).
        """
        d_re = np.abs(self.resonant - self.resonant.transpose(0, 2, 1, 3)).max()
        d_im = np.abs(self.principal - self.principal.transpose(0, 2, 1, 3)).max()
        return float(max(d_re, d_im))

    def to_document(self) -> dict:
        entries = []
        for i in (1, 2):
            for a in (1, 2):
                for b in (1, 2):
                    for s in SIGNS:
                        idx = self._index(i, a, b, s)
                        entries.append({
                            "polarization": i,
                            "alpha": a,
                            "beta": b,
                            "sign": s,
                            "re": float(self.resonant[idx]),
                            "im": float(self.principal[idx]),
                            "error_estimate": float(self.errors[idx]),
                        })
        sums = []
        for a in (1, 2):
            for b in (1, 2):
                for s in SIGNS:
                    sums.append({
                        "alpha": a,
                        "beta": b,
                        "sign": s,
                        "re": self.re_sum(a, b, s),
                        "im": self.im_sum(a, b, s),
                        "error_estimate": float(
                            self.errors[:, a - 1, b - 1, SIGN_INDEX[s]].sum()
                        ),
                    })
        return {
            "bohr_frequency": self.bohr_frequency,
            "entries": entries,
            "polarization_sums": sums,
            "einstein_ratio": self.einstein_ratio,
        }


def build_susceptivity_set(config: BathConfig) -> SusceptivitySet:
    """Evaluate all 16 entries (2 polarizations x 2x2 transitions x 2 signs)."""
    resonant = np.zeros((2, 2, 2, 2))
    principal = np.zeros((2, 2, 2, 2))
    errors = np.zeros((2, 2, 2, 2))
    omega = config.bohr_frequency
    cutoff = config.effective_cutoff

    for i in (1, 2):
        occupation = config.occupation(i)
        for a in (1, 2):
            for b in (1, 2):
                ga, gb = config.formfactor(i, a), config.formfactor(i, b)
                for s in SIGNS:
                    idx = (i - 1, a - 1, b - 1, SIGN_INDEX[s])
                    resonant[idx] = resonant_part(ga, gb, occupation, config.dispersion, omega, s)
                    estimate = principal_value_integral(
                        ga, gb, occupation, config.dispersion, omega, s, cutoff,
                        config.tolerance, config.panel_limit,
                    )
                    principal[idx] = -estimate.value
                    errors[idx] = estimate.error

    result = SusceptivitySet(omega, resonant, principal, errors)
    logger.info(
        f"Susceptivity set built at w={omega} (cutoff {cutoff:.6g}); "
        f"Re(g|g)- = {result.re_sum(1, 1, '-'):.6g}, R = {result.einstein_ratio}"
    )
    return result


def einstein_ratio(sus: SusceptivitySet) -> float:
    """
    R_w = Re(g|g)^+ / Re(g|g)^-, in [0, 1).

    Raises:
        UndefinedRatioError: Re(g|g)^- <= 0, i.e. the formfactor support
            misses the resonant surface.
    """
    ratio = sus.einstein_ratio
    if ratio is None:
        raise UndefinedRatioError(
            "Re(g|g)^- vanishes: formfactor support does not meet the resonant surface"
        )
    return ratio


def decay_bound_rate(sus: SusceptivitySet) -> float:
    """c with 2c = min over (j, alpha, sign) of Re(g_j,alpha|g_j,alpha)^sign."""
    diagonal = [sus.resonant[j, a, a, s] for j in (0, 1) for a in (0, 1) for s in (0, 1)]
    return 0.5 * float(min(diagonal))
