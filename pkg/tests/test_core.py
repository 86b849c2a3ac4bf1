import math

import numpy as np
import pytest
from scipy.optimize import brentq

from hubspoke import (
    GEO_MEAN_MOTION,
    SystemParams,
    SystemState,
    integrate,
    potential_hessian,
    relative_energy,
    stability_deputy,
    stability_rigid,
    validate_params,
    vertical_equilibrium,
)
from hubspoke.errors import EquilibriumInfeasibleError
from hubspoke.lindyn import com_relative_matrix, deputy_relative_matrix

from conftest import random_params


def equilibrium_state(p, flip=False):
    eq = vertical_equilibrium(p)
    sign = -1.0 if flip else 1.0
    dep = np.zeros((p.n_deputies, 3))
    dep[:, 2] = sign * eq.z_deputy
    return SystemState(
        t=0.0,
        main_position=[0.0, 0.0, sign * eq.z_main],
        main_velocity=np.zeros(3),
        deputy_positions=dep,
        deputy_velocities=np.zeros((p.n_deputies, 3)),
    )


class TestValidateParams:
    def test_valid_geo_set(self, geo_params):
        assert validate_params(geo_params) == []

    def test_zero_stiffness(self, geo_params):
        bad = SystemParams(3, geo_params.m_main, geo_params.m_deputy, 0.0, 0.0, 1e4, GEO_MEAN_MOTION)
        violations = validate_params(bad)
        assert len(violations) == 1
        assert "stiffness" in violations[0]

    def test_two_sign_violations(self, geo_params):
        bad = SystemParams(3, -1.0, geo_params.m_deputy, geo_params.stiffness, -1.0, 1e4, GEO_MEAN_MOTION)
        violations = validate_params(bad)
        assert len(violations) == 2
        assert any("m_main" in v for v in violations)
        assert any("damping" in v for v in violations)


class TestVerticalEquilibrium:
    def test_rigid_limit(self):
        p = SystemParams.from_design(5, 8.0, 1e9)
        eq = vertical_equilibrium(p)
        assert eq.stretched_length == pytest.approx(p.slack_length, rel=1e-8)
        expected = p.slack_length * p.m_main / (5 * p.m_deputy + p.m_main)
        assert eq.z_deputy == pytest.approx(expected, rel=1e-8)

    def test_center_of_mass_identity(self, rng):
        for _ in range(50):
            p = random_params(rng)
            if not stability_rigid(p):
                continue
            eq = vertical_equilibrium(p)
            com = p.m_main * eq.z_main + p.n_deputies * p.m_deputy * eq.z_deputy
            assert abs(com) < 1e-9 * p.m_main * abs(eq.z_main)
            assert eq.stretched_length > p.slack_length
            assert eq.tension_magnitude > 0.0

    def test_against_static_force_balance_rootfinder(self):
        # Independent oracle: find the stretched length that zeroes the
        # deputy's vertical acceleration in the resting tethered chain,
        # then compare the closed-form solution against it.
        p = SystemParams.from_design(5, 8.0, 1000.0)
        k, m_d, m_c, w, l0 = p.stiffness, p.m_deputy, p.m_main, p.mean_motion, p.slack_length
        n = p.n_deputies

        def residual(l_star):
            z_dep = l_star * m_c / (m_c + n * m_d)  # CoM at origin
            tension = k * (l_star - l0)
            return 3.0 * w**2 * z_dep - tension / m_d

        l_oracle = brentq(residual, l0 * (1.0 + 1e-15), 2.0 * l0, xtol=1e-12)
        eq = vertical_equilibrium(p)
        assert eq.stretched_length == pytest.approx(l_oracle, rel=1e-12)
        assert eq.z_deputy == pytest.approx(l_oracle * m_c / (m_c + n * m_d), rel=1e-12)

    def test_infeasible_raises(self):
        p = SystemParams.from_design(3, 8.0, 1000.0)
        weak = SystemParams(3, p.m_main, p.m_deputy, 2.9 * p.mean_motion**2 * p.reduced_mass,
                            0.0, p.slack_length, p.mean_motion)
        with pytest.raises(EquilibriumInfeasibleError):
            vertical_equilibrium(weak)


class TestStabilityPredicates:
    def test_rigid_examples(self, geo_params):
        p = geo_params
        thresh = 3.0 * p.mean_motion**2 * p.reduced_mass
        strong = SystemParams(3, p.m_main, p.m_deputy, 10.0 * thresh, 0.0, 1e4, p.mean_motion)
        boundary = SystemParams(3, p.m_main, p.m_deputy, thresh, 0.0, 1e4, p.mean_motion)
        assert stability_rigid(strong)
        assert not stability_rigid(boundary)

    def test_deputy_boundary_included(self, geo_params):
        p = geo_params
        thresh = 3.0 * p.mean_motion**2 * p.m_deputy
        assert stability_deputy(SystemParams(3, p.m_main, p.m_deputy, thresh, 0.0, 1e4, p.mean_motion))
        weak = SystemParams(3, p.m_main, p.m_deputy, 0.5 * thresh, 0.0, 1e4, p.mean_motion)
        assert not stability_deputy(weak)
        eigs = np.linalg.eigvals(deputy_relative_matrix(weak))
        assert eigs.real.max() > 0.0

    def test_rigid_agrees_with_eigenvalue_sign(self, rng):
        # Damped centroid-relative block: asymptotically stable exactly when
        # the rigidity condition holds.
        checked = 0
        while checked < 200:
            p = random_params(rng)
            margin = p.stiffness / (3.0 * p.mean_motion**2 * p.reduced_mass) - 1.0
            if abs(margin) < 1e-4:
                continue
            eigs = np.linalg.eigvals(com_relative_matrix(p))
            assert (eigs.real.max() < 0.0) == stability_rigid(p)
            checked += 1

    def test_deputy_implies_rigid_sweep(self, rng):
        for _ in range(10_000):
            n = int(rng.integers(2, 9))
            m_c = float(np.exp(rng.uniform(0.0, 6.0)))
            m_d = float(np.exp(rng.uniform(0.0, 6.0)))
            k = float(np.exp(rng.uniform(-25.0, 0.0)))
            p = SystemParams(n, m_c, m_d, k, 0.0, 1e4, GEO_MEAN_MOTION)
            if stability_deputy(p):
                assert stability_rigid(p)


class TestRelativeEnergy:
    def test_minimum_at_equilibrium(self, geo_params):
        p = geo_params
        state = equilibrium_state(p)
        e0 = relative_energy(p, state)
        vec = state.to_vector()
        # Kinetic term vanishes at rest, so E equals the potential there.
        assert e0 == pytest.approx(
            relative_energy(p, equilibrium_state(p)), rel=1e-15
        )
        for slot in range(vec.size):
            bumped = vec.copy()
            bumped[slot] += 0.5 if slot % 6 < 3 else 1e-4
            s = SystemState.from_vector(0.0, bumped, p.n_deputies)
            assert relative_energy(p, s) > e0

    def test_conserved_without_damping(self, geo_params):
        from hubspoke.formation import FormationKind, FormationSpec, synthesize_initial_state
        from fractions import Fraction

        p = geo_params
        eq = vertical_equilibrium(p)
        amp = math.radians(1.0) * p.slack_length
        spec = FormationSpec.from_phi0(FormationKind.TYPE_I, 1, 2, 3, amp, Fraction(1, 4))
        s0 = synthesize_initial_state(p, spec, eq)
        t_end = 0.4 * p.orbit_period
        traj = integrate(p, s0, t_end, rtol=1e-10, output_stride=t_end / 100.0)
        energies = np.array([relative_energy(p, traj.state_at(i)) for i in range(len(traj))])
        assert np.max(np.abs(energies - energies[0])) < 1e-8 * abs(energies[0])

    def test_nonincreasing_with_damping(self):
        from hubspoke.formation import FormationKind, FormationSpec, synthesize_initial_state
        from fractions import Fraction

        p = SystemParams.from_design(3, 8.0, 1000.0, damping_ratio=0.05)
        eq = vertical_equilibrium(p)
        amp = math.radians(1.0) * p.slack_length
        spec = FormationSpec.from_phi0(FormationKind.TYPE_I, 1, 2, 3, amp, Fraction(1, 4))
        s0 = synthesize_initial_state(p, spec, eq)
        t_end = 0.4 * p.orbit_period
        traj = integrate(p, s0, t_end, rtol=1e-10, output_stride=t_end / 100.0)
        energies = np.array([relative_energy(p, traj.state_at(i)) for i in range(len(traj))])
        assert energies[-1] < energies[0]
        assert np.all(np.diff(energies) <= 1e-9 * abs(energies[0]))


class TestPotentialHessian:
    def test_positive_definite_when_both_conditions_hold(self, geo_params):
        eigs = np.linalg.eigvalsh(potential_hessian(geo_params))
        assert eigs.min() > 0.0

    def test_nonpositive_direction_when_deputy_condition_fails(self, geo_params):
        p = geo_params
        # Stiffness between the two thresholds: equilibrium exists but the
        # deputy-difference block is unstable.
        k = 2.0 * 3.0 * p.mean_motion**2 * p.reduced_mass
        assert k < 3.0 * p.mean_motion**2 * p.m_deputy
        weak = SystemParams(3, p.m_main, p.m_deputy, k, 0.0, p.slack_length, p.mean_motion)
        assert stability_rigid(weak) and not stability_deputy(weak)
        eigs = np.linalg.eigvalsh(potential_hessian(weak))
        assert eigs.min() <= 0.0

    def test_deputy_exchange_symmetry(self):
        p = SystemParams.from_design(2, 8.0, 500.0)
        h = potential_hessian(p)
        swap = np.r_[3:6, 0:3]
        assert np.allclose(h[np.ix_(swap, swap)], h, rtol=1e-6, atol=1e-9 * np.abs(h).max())

    def test_minimum_iff_both_conditions(self, rng):
        # Random sets straddling both stiffness thresholds.
        done = 0
        while done < 100:
            n = int(rng.integers(2, 5))
            ratio = float(np.exp(rng.uniform(np.log(0.5), np.log(30.0))))
            p0 = SystemParams.from_design(n, ratio, 1.0)
            t_rigid = 3.0 * p0.mean_motion**2 * p0.reduced_mass
            t_dep = 3.0 * p0.mean_motion**2 * p0.m_deputy
            k = float(t_rigid * np.exp(rng.uniform(-0.7, np.log(t_dep / t_rigid) + 2.0)))
            if min(abs(k / t_rigid - 1.0), abs(k / t_dep - 1.0)) < 0.05:
                continue
            p = SystemParams(n, p0.m_main, p0.m_deputy, k, 0.0, p0.slack_length, p0.mean_motion)
            if not stability_rigid(p):
                continue
            eigs = np.linalg.eigvalsh(potential_hessian(p))
            strict_minimum = eigs.min() > 0.0
            assert strict_minimum == (stability_rigid(p) and stability_deputy(p))
            done += 1


class TestStretchRatioProperties:
    def test_stretch_ratio_consistency(self, rng):
        for _ in range(100):
            p = random_params(rng)
            lam = p.stretch_ratio
            if stability_rigid(p):
                assert 0.0 < lam < 1.0
                eq = vertical_equilibrium(p)
                geometric = (eq.stretched_length - p.slack_length) / eq.stretched_length
                assert geometric == pytest.approx(lam, rel=1e-12)
            else:
                assert lam >= 1.0
