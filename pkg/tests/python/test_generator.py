"""
CPTrap - Master Equation Generator Unit Tests

Tests the 9x9 generator for:
- Trace preservation and the V1/V0 block structure
- Closed-form rates (excited decay, D rotation, conserved C)
- RK4 against the exact propagator
- The V0 decay envelope
"""

import numpy as np
import pytest
from scipy import linalg

from cptrap.bath import SusceptivitySet
from cptrap.errors import UsageError
from cptrap.generator import (
    DensityMatrix3,
    V0,
    V1,
    apply,
    build_generator,
    decompose_blocks,
    default_step,
    evolve_exact,
    evolve_rk,
    excited_decay_rate,
    expm_taylor,
    from_coordinates,
    master_equation_rhs,
    reduced_v1_system,
    sample_exact,
    to_coordinates,
    v0_decay_check,
)
from cptrap.stationary import family_state, preset_state


# =============================================================================
# Fixtures
# =============================================================================

@pytest.fixture
def thermal():
    """Equal-formfactor set with R = 1/2."""
    return SusceptivitySet.uniform(re_minus=2.0, re_plus=1.0, im_minus=0.3, im_plus=0.7)


@pytest.fixture
def fock():
    return SusceptivitySet.uniform(re_minus=1.5, re_plus=0.0, im_minus=0.4)


@pytest.fixture
def general():
    """Alpha-dependent set shaped like a real bath: Re[i, :, :, s] = u u^T, Im symmetric."""
    rng = np.random.default_rng(11)
    u = rng.uniform(0.3, 1.0, (2, 2, 2))  # [i, a, s]
    re = np.einsum("ias,ibs->iabs", u, u)
    im = rng.uniform(-1.0, 1.0, (2, 2, 2, 2))
    im = 0.5 * (im + im.transpose(0, 2, 1, 3))
    return SusceptivitySet(1.0, re, im, np.zeros((2, 2, 2, 2)))


@pytest.fixture
def state():
    ket = np.array([1.0, 0.5j, 0.3 - 0.2j])
    return DensityMatrix3.from_ket(ket / np.linalg.norm(ket))


# =============================================================================
# Coordinates and states
# =============================================================================

class TestCoordinates:

    def test_coordinates_invert(self, state):
        assert np.allclose(from_coordinates(to_coordinates(state.matrix)), state.matrix, atol=1e-15)

    def test_non_hermitian_rejected(self):
        with pytest.raises(UsageError):
            DensityMatrix3(np.array([[1, 1, 0], [0, 0, 0], [0, 0, 0]]))

    def test_state_quantities(self):
        rho = preset_state("NC")
        assert rho.s == -0.5
        assert rho.C == 2.0
        assert rho.D == 0
        assert rho.v0_norm == 0.0


# =============================================================================
# Generator assembly
# =============================================================================

class TestGenerator:

    def test_zero_set_gives_zero_generator(self, state):
        L = build_generator(SusceptivitySet.zero())
        assert L.is_zero
        assert not np.any(apply(L, state))

    @pytest.mark.parametrize("name", ["thermal", "fock", "general"])
    def test_trace_preserved(self, name, request):
        L = build_generator(request.getfixturevalue(name))
        assert np.abs(L.trace_row()).max() < 1e-14

    def test_output_is_hermitian(self, general, state):
        d = master_equation_rhs(state, general)
        assert np.abs(d - d.conj().T).max() < 1e-14

    def test_fock_excited_decay_row(self, fock):
        L = build_generator(fock)
        assert L.matrix[2, 2] == pytest.approx(-4.0 * 1.5, rel=1e-14)
        assert excited_decay_rate(fock) == pytest.approx(6.0)

    def test_dark_state_is_stationary(self, thermal):
        d = apply(build_generator(thermal), preset_state("NC"))
        assert np.abs(d).max() < 1e-12

    @pytest.mark.parametrize("s", [-0.5, -0.2, 0.0, 0.1, 1.0 / 3.0])
    def test_family_members_are_stationary(self, thermal, s):
        d = apply(build_generator(thermal), family_state(0.5, s))
        assert np.abs(d).max() < 1e-10

    def test_reduced_system_matches_generator(self, general):
        L = build_generator(general)
        rows = reduced_v1_system(general)
        m = np.array([[0.3, 0.1 - 0.2j, 0], [0.1 + 0.2j, 0.5, 0], [0, 0, 0.2]])
        d = apply(L, DensityMatrix3(m))
        variables = np.array([m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[1, 0]])
        expected = rows @ variables
        assert d[0, 0] == pytest.approx(expected[0], abs=1e-14)
        assert d[1, 1] == pytest.approx(expected[1], abs=1e-14)
        assert d[0, 1] == pytest.approx(expected[2], abs=1e-14)


# =============================================================================
# Conservation laws
# =============================================================================

class TestConservationLaws:

    def test_c_is_conserved(self, thermal):
        L = build_generator(thermal).matrix
        c_row = L[0] + L[1] - 2.0 * L[3]
        assert np.abs(c_row).max() < 1e-14

    def test_d_rotates_and_damps(self, thermal, state):
        L = build_generator(thermal)
        d = apply(L, state)
        m = state.matrix
        dD = d[1, 1] - d[0, 0] + d[0, 1] - d[1, 0]
        D = m[1, 1] - m[0, 0] + m[0, 1] - m[1, 0]
        rate = -2.0 * thermal.re_sum(1, 1, "+") + 2j * thermal.im_sum(1, 1, "+")
        assert dD == pytest.approx(rate * D, abs=1e-13)


# =============================================================================
# Block structure
# =============================================================================

class TestBlocks:

    @pytest.mark.parametrize("name", ["thermal", "fock", "general"])
    def test_blocks_do_not_leak(self, name, request):
        report = decompose_blocks(build_generator(request.getfixturevalue(name)))
        assert report.max_leakage < 1e-12

    def test_v0_decays_when_rates_positive(self, general):
        report = decompose_blocks(build_generator(general))
        assert report.v0_spectral_abscissa < 0
        assert report.v0_spectral_abscissa <= -report.decay_bound

    def test_thermal_gap(self, thermal):
        report = decompose_blocks(build_generator(thermal))
        assert report.v1_spectral_gap == pytest.approx(2.0 * thermal.re_sum(1, 1, "+"), rel=1e-10)

    def test_zero_generator_report(self):
        report = decompose_blocks(build_generator(SusceptivitySet.zero()))
        assert report.v0_spectral_abscissa == 0.0
        assert report.v1_spectral_gap == 0.0
        assert report.decay_bound == 0.0


# =============================================================================
# Integrators
# =============================================================================

class TestIntegrators:

    def test_zero_generator_keeps_state(self, state):
        L = build_generator(SusceptivitySet.zero())
        trajectory = evolve_rk(L, state, 5.0, samples=10)
        assert np.allclose(trajectory.vectors, state.to_vector(), atol=0)
        assert evolve_exact(L, state, 3.0) is state

    def test_dark_state_trajectory_is_constant(self, thermal):
        rho = preset_state("NC")
        trajectory = evolve_rk(build_generator(thermal), rho, 2.0, samples=10)
        assert np.abs(trajectory.vectors - rho.to_vector()).max() < 1e-10

    @pytest.mark.parametrize("name", ["thermal", "general"])
    def test_rk4_matches_exact(self, name, request, state):
        L = build_generator(request.getfixturevalue(name))
        horizon = 10.0 / max(decompose_blocks(L).v1_spectral_gap, 1.0)
        trajectory = evolve_rk(L, state, horizon, samples=20)
        exact = evolve_exact(L, state, horizon)
        assert np.abs(trajectory.final.matrix - exact.matrix).max() < 1e-8
        assert trajectory.metadata["steps"] >= 20

    def test_zero_horizon(self, thermal, state):
        trajectory = evolve_rk(build_generator(thermal), state, 0.0)
        assert len(trajectory) == 1
        assert evolve_exact(build_generator(thermal), state, 0.0) is state

    def test_stability_guard(self, thermal, state):
        with pytest.raises(UsageError) as exc:
            evolve_rk(build_generator(thermal), state, 1.0, dt=10.0)
        assert exc.value.exit_code == 2

    def test_default_step(self, thermal):
        L = build_generator(thermal)
        assert default_step(L) == pytest.approx(1e-3 / L.norm_inf)

    def test_semigroup(self, general, state):
        L = build_generator(general)
        split = evolve_exact(L, evolve_exact(L, state, 0.3), 0.4)
        whole = evolve_exact(L, state, 0.7)
        assert np.abs(split.matrix - whole.matrix).max() < 1e-10

    def test_taylor_exponential_matches_scipy(self, general):
        m = 3.0 * build_generator(general).matrix
        assert np.allclose(expm_taylor(m), linalg.expm(m), rtol=1e-10, atol=1e-12)

    def test_sample_exact_requires_increasing_times(self, thermal, state):
        with pytest.raises(UsageError):
            sample_exact(build_generator(thermal), state, [0.0, 1.0, 1.0])

    def test_trace_preserved_along_trajectory(self, general, state):
        trajectory = sample_exact(build_generator(general), state, np.linspace(0, 5, 11))
        assert np.abs(trajectory.traces() - 1.0).max() < 1e-12
        assert trajectory.min_eigenvalues().min() > -1e-10


# =============================================================================
# V0 decay
# =============================================================================

class TestV0Decay:

    def test_fock_fitted_rate_matches_spectrum(self, fock):
        rho = DensityMatrix3(np.array([[0.4, 0, 0.3], [0, 0.3, 0], [0.3, 0, 0.3]]))
        report = v0_decay_check(build_generator(fock), rho, horizon=4.0)
        assert report.fitted_rate == pytest.approx(-report.spectral_abscissa, rel=1e-2)

    def test_thermal_envelope(self, thermal, state):
        report = v0_decay_check(build_generator(thermal), state, horizon=3.0)
        assert report.decay_bound > 0
        assert report.bound_satisfied
        assert report.max_bound_ratio <= 1.0 + 1e-6

    def test_zero_generator_rate(self, state):
        report = v0_decay_check(build_generator(SusceptivitySet.zero()), state, horizon=1.0)
        assert report.fitted_rate == 0.0

    def test_state_without_v0_component(self, thermal):
        with pytest.raises(UsageError):
            v0_decay_check(build_generator(thermal), preset_state("mixed"), horizon=1.0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
