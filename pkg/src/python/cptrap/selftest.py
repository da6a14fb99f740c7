"""
CPTrap - Acceptance Self-Test

Seeded end-to-end checks of the toolkit against closed-form results and
independent oracles. Each suite draws from its own numpy Generator seeded
with (seed, suite index), so a suite's outcome does not depend on which
other suites ran. The report holds measured quantities only (no timings),
so two runs with the same seed produce identical reports.
"""

import logging
import math
from typing import Callable, Dict, List, Tuple

import numpy as np
from scipy import linalg

from cptrap.bath import (
    BathConfig,
    FormFactor,
    OccupationSpectrum,
    build_susceptivity_set,
    einstein_ratio,
)
from cptrap.errors import UsageError
from cptrap.generator import (
    DensityMatrix3,
    build_generator,
    decompose_blocks,
    evolve_exact,
    evolve_rk,
    excited_decay_rate,
    expm_taylor,
    sample_exact,
    v0_decay_check,
)
from cptrap.stationary import (
    FamilyDescriptor,
    admissible_interval,
    beats,
    family_state,
    min_ground_population,
    orthogonal_determinant,
    population_determinant,
    predict_stationary,
    preset_state,
    solve_nullspace,
)

logger = logging.getLogger(__name__)

SuiteResult = Tuple[bool, Dict[str, object]]

_SUITES: List[Tuple[str, Callable]] = []


def suite(name: str):
    def register(func):
        _SUITES.append((name, func))
        return func
    return register


class Budget:
    """Instance counts: full sizes, or at most 3 per suite in quick mode."""

    def __init__(self, quick: bool):
        self.quick = quick

    def __call__(self, n: int) -> int:
        return min(n, 3) if self.quick else n


# =============================================================================
# Random instances
# =============================================================================

_KINDS = ("gaussian", "lorentzian")


def random_profile(rng, i: int = 1, alpha: int = 1) -> FormFactor:
    kind = _KINDS[int(rng.integers(len(_KINDS)))]
    return FormFactor(
        i, alpha, kind,
        amplitude=float(rng.uniform(0.5, 1.5)),
        center=float(rng.uniform(0.6, 1.4)),
        width=float(rng.uniform(0.3, 0.8)),
    )


def random_occupation(rng, thermal: bool = False) -> OccupationSpectrum:
    if thermal or rng.random() < 0.5:
        return OccupationSpectrum("planck", beta=float(rng.uniform(0.5, 3.0)))
    return OccupationSpectrum("flat", level=float(rng.uniform(0.2, 5.0)))


def random_equal_bath(rng, thermal: bool = False) -> BathConfig:
    return BathConfig.with_equal_formfactors(random_profile(rng), random_occupation(rng, thermal))


def random_general_bath(rng) -> BathConfig:
    table = tuple(tuple(random_profile(rng, i, a) for a in (1, 2)) for i in (1, 2))
    return BathConfig(table, (random_occupation(rng), random_occupation(rng)))


def random_state(rng) -> DensityMatrix3:
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = g @ g.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix3(m / np.trace(m).real)


def orthogonal_bath(occupation: OccupationSpectrum) -> BathConfig:
    """Transition 1 couples only to polarization 1, transition 2 only to polarization 2."""
    g1 = FormFactor(1, 1, "gaussian", amplitude=1.0, center=1.0, width=0.7)
    g2 = FormFactor(2, 2, "lorentzian", amplitude=0.8, center=1.2, width=0.5)
    off = dict(kind="gaussian", amplitude=0.0, center=1.0, width=1.0)
    table = ((g1, FormFactor(1, 2, **off)), (FormFactor(2, 1, **off), g2))
    return BathConfig(table, (occupation, occupation))


def beats_bath() -> BathConfig:
    """Occupation confined to 3 <= |k| <= 4, away from the resonant sphere at |k| = 1."""
    return BathConfig.with_equal_formfactors(
        FormFactor(1, 1, "gaussian", amplitude=1.0, center=1.0, width=1.0),
        OccupationSpectrum("shifted-window", level=1.0, inner=3.0, outer=4.0),
    )


# =============================================================================
# Suites
# =============================================================================

@suite("family_fixed_points")
def _family_fixed_points(rng, budget) -> SuiteResult:
    worst = 0.0
    for _ in range(budget(50)):
        sus = build_susceptivity_set(random_equal_bath(rng))
        L = build_generator(sus)
        R = einstein_ratio(sus)
        s_min, s_max = admissible_interval(R)
        rho = family_state(R, float(rng.uniform(s_min, s_max)))
        ratio = np.linalg.norm(L.matrix @ rho.to_vector()) / np.linalg.norm(L.matrix)
        worst = max(worst, float(ratio))
    return worst < 1e-9, {"max_relative_residual": worst}


@suite("convergence_to_predicted_member")
def _convergence(rng, budget) -> SuiteResult:
    sus = build_susceptivity_set(random_equal_bath(rng, thermal=True))
    L = build_generator(sus)
    horizon = 40.0 / decompose_blocks(L).v1_spectral_gap
    worst, drift = 0.0, 0.0
    for _ in range(budget(100)):
        rho0 = random_state(rng)
        final = evolve_exact(L, rho0, horizon)
        predicted = predict_stationary(rho0, sus)
        worst = max(worst, float(np.abs(final.matrix - predicted.matrix).max()))
        c = sample_exact(L, rho0, np.linspace(0.0, horizon, 21)).C()
        drift = max(drift, float(np.abs(c - c[0]).max()))
    return worst < 1e-6 and drift < 1e-9, {"max_entry_error": worst, "max_C_drift": drift}


@suite("extremal_states")
def _extremal_states(rng, budget) -> SuiteResult:
    dark = preset_state("NC").matrix
    exact = True
    for R in [0.0, 1.0] + [float(x) for x in rng.uniform(0.0, 1.0, size=budget(5))]:
        exact &= bool(np.array_equal(family_state(R, -0.5).matrix, dark))
    rho_max = np.array([[0.25, 0.25, 0], [0.25, 0.25, 0], [0, 0, 0.5]], dtype=complex)
    exact &= bool(np.array_equal(family_state(1.0, 0.25).matrix, rho_max))
    return exact, {"exact": exact}


@suite("einstein_ratio_formfactor_independence")
def _einstein_ratio(rng, budget) -> SuiteResult:
    planck = OccupationSpectrum("planck", beta=1.0)
    profiles = (
        FormFactor(1, 1, "gaussian", amplitude=1.0, center=1.0, width=0.5),
        FormFactor(1, 1, "lorentzian", amplitude=2.0, center=0.5, width=0.4),
        FormFactor(1, 1, "shell", amplitude=0.7, inner=0.5, outer=1.5),
    )
    ratios = [einstein_ratio(build_susceptivity_set(BathConfig.with_equal_formfactors(g, planck))) for g in profiles]
    error = max(abs(r - math.exp(-1.0)) for r in ratios)
    return error < 1e-6, {"ratios": ratios, "max_error": error}


@suite("block_structure")
def _block_structure(rng, budget) -> SuiteResult:
    worst = 0.0
    for _ in range(budget(20)):
        report = decompose_blocks(build_generator(build_susceptivity_set(random_general_bath(rng))))
        worst = max(worst, report.max_leakage)
    return worst < 1e-12, {"max_leakage": worst}


@suite("v0_decay_bound")
def _v0_decay(rng, budget) -> SuiteResult:
    checked, ok, worst_ratio = 0, True, 0.0
    for _ in range(budget(5)):
        sus = build_susceptivity_set(random_equal_bath(rng, thermal=True))
        L = build_generator(sus)
        c = decompose_blocks(L).decay_bound
        if not c > 0:
            continue
        report = v0_decay_check(L, random_state(rng), 5.0 / c)
        checked += 1
        ok &= report.bound_satisfied
        worst_ratio = max(worst_ratio, report.max_bound_ratio)
    return ok and checked > 0, {"baths_checked": checked, "max_norm_to_envelope": worst_ratio}


@suite("integrator_oracle")
def _integrator_oracle(rng, budget) -> SuiteResult:
    worst, semigroup = 0.0, 0.0
    for _ in range(budget(20)):
        L = build_generator(build_susceptivity_set(random_equal_bath(rng)))
        rho0 = random_state(rng)
        horizon = float(rng.uniform(0.5, 2.0)) / decompose_blocks(L).v1_spectral_gap
        rk = evolve_rk(L, rho0, horizon, samples=10).final
        worst = max(worst, rk.distance(evolve_exact(L, rho0, horizon)))
        t1, t2 = (float(x) for x in rng.uniform(0.0, horizon, size=2))
        joint = expm_taylor((t1 + t2) * L.matrix)
        split = expm_taylor(t2 * L.matrix) @ expm_taylor(t1 * L.matrix)
        semigroup = max(semigroup, float(np.abs(joint - split).max()))
    return worst < 1e-8 and semigroup < 1e-10, {"max_rk_error": worst, "max_semigroup_defect": semigroup}


@suite("nullspace_matches_family")
def _nullspace_family(rng, budget) -> SuiteResult:
    worst_angle, worst_coeff = 0.0, 0.0
    for _ in range(budget(5)):
        sus = build_susceptivity_set(random_equal_bath(rng, thermal=True))
        result = solve_nullspace(build_generator(sus))
        if result.kind != "family":
            return False, {"classification": result.kind}
        R = einstein_ratio(sus)
        span = np.column_stack([family_state(R, s).to_vector()[:5] for s in (-0.5, 0.0)])
        angle = float(np.max(linalg.subspace_angles(result.payload.kernel_basis, span)))
        analytic = FamilyDescriptor.from_ratio(R)
        coeff = max(
            float(np.max(np.abs(np.subtract(result.payload.excited_coefficients, analytic.excited_coefficients)))),
            float(np.max(np.abs(np.subtract(result.payload.ground_coefficients, analytic.ground_coefficients)))),
        )
        worst_angle, worst_coeff = max(worst_angle, angle), max(worst_coeff, coeff)
    return worst_angle < 1e-8 and worst_coeff < 1e-9, {
        "max_principal_angle": worst_angle,
        "max_coefficient_error": worst_coeff,
    }


@suite("orthogonal_uniqueness")
def _orthogonal(rng, budget) -> SuiteResult:
    sus = build_susceptivity_set(orthogonal_bath(random_occupation(rng, thermal=True)))
    L = build_generator(sus)
    result = solve_nullspace(L)
    computed, closed_form = population_determinant(L), orthogonal_determinant(sus)
    error = abs(computed - closed_form) / abs(closed_form)
    return result.kind == "unique" and error < 1e-10, {
        "classification": result.kind,
        "kernel_dimension": result.kernel_dimension,
        "determinant": computed,
        "relative_error": error,
    }


@suite("fock_family")
def _fock(rng, budget) -> SuiteResult:
    bath = BathConfig.with_equal_formfactors(random_profile(rng), OccupationSpectrum("fock"))
    sus = build_susceptivity_set(bath)
    L = build_generator(sus)
    result = solve_nullspace(L)
    basis = result.payload.kernel_basis if result.kind == "family" else np.ones((5, 1))
    excited_in_kernel = float(np.abs(basis[2]).max())

    rate = excited_decay_rate(sus)
    times = np.linspace(0.0, 5.0 / rate, 51)
    rho33 = sample_exact(L, preset_state("excited"), times).populations()[:, 2]
    fitted = -float(np.polyfit(times, np.log(rho33), 1)[0])
    error = abs(fitted - rate) / rate
    ok = result.kind == "family" and result.kernel_dimension == 4 and excited_in_kernel < 1e-10 and error < 0.01
    return ok, {
        "kernel_dimension": result.kernel_dimension,
        "max_excited_component": excited_in_kernel,
        "fitted_rate": fitted,
        "expected_rate": rate,
    }


@suite("quantum_beats")
def _beats(rng, budget) -> SuiteResult:
    sus = build_susceptivity_set(beats_bath())
    kappa = sus.im_sum(1, 1, "+")
    rho0 = random_state(rng)
    descriptor = beats(sus, rho0)
    traj = descriptor.trajectory
    d = traj.D()
    slope = float(np.polyfit(traj.times, np.unwrap(np.angle(d)), 1)[0])
    phase_error = abs(slope - 2.0 * kappa) / abs(2.0 * kappa)
    modulus_drift = float(np.abs(np.abs(d) - descriptor.initial_modulus).max())
    final_s = float(traj.s()[-1])
    ok = phase_error < 1e-6 and modulus_drift < 1e-8 and -0.5 <= final_s <= 0.5
    return ok, {
        "kappa": kappa,
        "frequency": descriptor.frequency,
        "phase_rate_error": phase_error,
        "modulus_drift": modulus_drift,
        "final_s": final_s,
    }


@suite("ground_population_bound")
def _ground_population(rng, budget) -> SuiteResult:
    grid = (0.0, 0.5, 1.0, 10.0, 100.0, 1e6)
    values = [min_ground_population(n) for n in grid]
    ok = (
        all(v > 0.25 for v in values)
        and all(a > b for a, b in zip(values, values[1:]))
        and values[0] == 0.5
        and abs(values[-1] - 0.25) < 1e-6
    )
    return ok, {"values": values}


# =============================================================================
# Runner
# =============================================================================

def suite_names() -> List[str]:
    return [name for name, _ in _SUITES]


def run_selftest(seed: int = 0, quick: bool = False, only=None) -> Dict[str, object]:
    if only:
        unknown = sorted(set(only) - set(suite_names()))
        if unknown:
            raise UsageError(f"unknown self-test suite(s): {', '.join(unknown)}")
    budget = Budget(quick)
    entries = []
    for index, (name, func) in enumerate(_SUITES):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, index])
        try:
            passed, measurements = func(rng, budget)
        except Exception as e:
            logger.error(f"Suite {name} raised {type(e).__name__}: {e}")
            passed, measurements = False, {"error": f"{type(e).__name__}: {e}"}
        entries.append({"name": name, "passed": bool(passed), "measurements": measurements})
        logger.info(f"Suite {name}: {'PASS' if passed else 'FAIL'}")

    passed = sum(1 for e in entries if e["passed"])
    return {
        "seed": seed,
        "quick": quick,
        "suites": entries,
        "passed": passed,
        "failed": len(entries) - passed,
    }
