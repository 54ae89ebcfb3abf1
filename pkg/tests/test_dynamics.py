import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from geomphase import (
    ContractError,
    PathSpec,
    SystemParams,
    ValidationError,
    Waveform,
    adiabatic_phases,
    coherence,
    evolve_branch,
    evolve_joint,
    lorentzian_response,
    make_path,
    mean_photon_number,
    measured_phase,
    straight_reference,
    to_angular,
)
from geomphase.dynamics import (
    DETUNING_PHASE_STEP,
    MAX_PHASE_STEP,
    BranchTrajectory,
    coherent_overlap,
    substeps_for,
    write_trajectories_csv,
)

DELTA = to_angular(40.0)
EPS = to_angular(370.0)


def constant_drive(E, t_end, n=2000):
    return Waveform(t_end / n, np.full(n + 1, E, dtype=complex))


def circle_exact(eps, T, delta, sign, t):
    """Closed-form alpha(t) for the circle drive (eps/2)(1 - exp(i s W t))."""
    w = sign * 2 * np.pi / T
    steady = -eps / (4 * delta)
    ring = eps / (4 * (delta + w))
    return steady + ring * np.exp(1j * w * t) + (-steady - ring) * np.exp(-1j * delta * t)


def reference_solution(w, delta_s, kappa=0.0):
    """High-accuracy solve_ivp integration of (alpha, theta) on the waveform grid."""

    def rhs(t, y):
        a = y[0] + 1j * y[1]
        e = w.at(t)
        da = -(1j * delta_s + kappa / 2) * a - 0.5j * e
        return [da.real, da.imag, -0.5 * (np.conj(e) * a).real]

    sol = solve_ivp(rhs, (0, w.duration), [0, 0, 0], t_eval=w.times, rtol=1e-11, atol=1e-12, method="DOP853")
    return sol.y[0] + 1j * sol.y[1], sol.y[2]


class TestEvolveBranch:
    def test_undriven(self):
        tr = evolve_branch(Waveform(1.0, np.zeros(50)), DELTA)
        assert np.all(tr.alpha == 0) and np.all(tr.theta == 0)

    def test_constant_drive_closed_form(self):
        tr = evolve_branch(constant_drive(1.0, 12.5), 0.2513)
        exact = -(1 / (2 * 0.2513)) * (1 - np.exp(-1j * 0.2513 * tr.times))
        np.testing.assert_allclose(tr.alpha, exact, atol=1e-6)
        assert tr.final_alpha.real == pytest.approx(-3.979, abs=1e-3)
        # with the exact 40 MHz detuning, delta * 12.5 ns = pi and alpha is real
        exact_pi = evolve_branch(constant_drive(1.0, 12.5), DELTA).final_alpha
        assert exact_pi == pytest.approx(-1 / DELTA, abs=1e-6)

    def test_constant_drive_theta_closed_form(self):
        d = 0.2513
        tr = evolve_branch(constant_drive(1.0, 12.5), d)
        t = tr.times
        np.testing.assert_allclose(tr.theta, (t - np.sin(d * t) / d) / (4 * d), atol=1e-9)

    @pytest.mark.parametrize("orientation, sign", [("ccw", 1), ("cw", -1)])
    @pytest.mark.parametrize("T", [30.0, 137.0, 600.0])
    def test_circle_closed_form(self, orientation, sign, T):
        w = make_path(PathSpec("circle", orientation, EPS, T, 512))
        tr = evolve_branch(w, DELTA)
        exact = circle_exact(EPS, T, DELTA, sign, tr.times)
        assert np.max(np.abs(tr.alpha - exact)) <= 1e-6 * np.max(np.abs(exact))

    @pytest.mark.parametrize("shape", ["square", "figure8", "semicircle"])
    def test_matches_solve_ivp(self, shape):
        w = make_path(PathSpec(shape, "cw", to_angular(190.0), 45.0, 128))
        tr = evolve_branch(w, DELTA, kappa=0.01)
        alpha, theta = reference_solution(w, DELTA, kappa=0.01)
        np.testing.assert_allclose(tr.alpha, alpha, atol=1e-7)
        np.testing.assert_allclose(tr.theta, theta, atol=1e-7)

    def test_adiabatic_circle_follows_ground_state(self):
        w = make_path(PathSpec("circle", "ccw", EPS, 3000.0))
        tr = evolve_branch(w, DELTA)
        dev = np.abs(tr.alpha + w.values / (2 * DELTA))
        assert dev.max() <= 1e-2 * np.abs(tr.alpha).max()

    def test_cyclic_return(self):
        T = 100 * 2 * np.pi / DELTA
        tr = evolve_branch(make_path(PathSpec("circle", "cw", EPS, T)), DELTA)
        assert abs(tr.final_alpha) <= 1e-2 * np.abs(tr.alpha).max()

    @pytest.mark.parametrize("shape", ["circle", "square", "straight"])
    def test_linear_response_bound(self, shape):
        w = make_path(PathSpec(shape, "cw", EPS, 25.0))
        tr = evolve_branch(w, DELTA)
        assert np.abs(tr.alpha).max() <= 2 * w.max_amplitude() / DELTA

    def test_starts_in_vacuum(self):
        tr = evolve_branch(make_path(PathSpec("square", "ccw", EPS, 70.0)), DELTA)
        assert tr.alpha[0] == 0 and tr.theta[0] == 0
        assert tr.alpha.size == 513

    def test_step_rule(self):
        w = make_path(PathSpec("circle", "ccw", EPS, 300.0, 64))
        sub = substeps_for(w, DELTA)
        h = w.dt / sub
        assert max(DELTA, w.max_amplitude()) * h <= MAX_PHASE_STEP
        assert DELTA * h <= DETUNING_PHASE_STEP
        assert w.steps * sub >= 2000

    def test_damping(self):
        kappa = to_angular(5.0)
        tr = evolve_branch(constant_drive(0.1, 2000.0, 4000), DELTA, kappa)
        assert tr.final_alpha == pytest.approx(lorentzian_response(DELTA, kappa, 0.1), abs=1e-6)
        assert tr.approximate

    def test_negative_kappa(self):
        with pytest.raises(ValidationError):
            evolve_branch(constant_drive(1.0, 1.0), DELTA, -1.0)

    def test_energy_free(self):
        tr = evolve_branch(Waveform(0.1, np.zeros(200)), -DELTA)
        assert np.abs(tr.alpha).max() == 0

    @given(st.sampled_from(["circle", "square", "figure8", "straight"]), st.sampled_from(["ccw", "cw"]),
           st.floats(10.0, 200.0), st.sampled_from([0.5, 2.0, -1.5]))
    @settings(max_examples=15, deadline=None)
    def test_linear_scaling(self, shape, o, T, c):
        w = make_path(PathSpec(shape, o, to_angular(190.0), T, 64))
        base = evolve_branch(w, DELTA)
        tr = evolve_branch(w.scaled(c), DELTA)
        scale_a = np.abs(c * base.alpha).max()
        scale_t = max(np.abs(c**2 * base.theta).max(), 1e-300)
        assert np.abs(tr.alpha - c * base.alpha).max() <= 1e-9 * scale_a
        assert np.abs(tr.theta - c**2 * base.theta).max() <= 1e-9 * scale_t

    def test_detuning_sign_reversal_straight(self):
        w = make_path(PathSpec("straight", "ccw", EPS, 40.0))
        a = evolve_branch(w, DELTA)
        b = evolve_branch(w, -DELTA)
        # a real drive maps alpha -> -conj(alpha) and theta -> -theta
        np.testing.assert_allclose(b.alpha, -np.conj(a.alpha), atol=1e-13)
        np.testing.assert_allclose(b.theta, -a.theta, atol=1e-12)


class TestJoint:
    def test_no_shift(self):
        p = SystemParams(DELTA, 0.0)
        tg, te = evolve_joint(make_path(PathSpec("circle", "cw", EPS, 40.0)), p)
        c = coherence(tg, te)
        assert c.R == pytest.approx(1.0) and c.gamma == pytest.approx(0.0)

    def test_zero_amplitude(self, params):
        tg, te = evolve_joint(make_path(PathSpec("circle", "cw", 0.0, 40.0)), params)
        assert np.all(tg.alpha == 0) and np.all(te.alpha == 0)

    def test_excited_branch_responds_more(self, params):
        tg, te = evolve_joint(make_path(PathSpec("circle", "ccw", EPS, 3000.0)), params)
        inner = slice(5, -5)
        assert np.all(np.abs(te.alpha[inner]) > np.abs(tg.alpha[inner]))


class TestCoherence:
    def traj(self, a, theta):
        return BranchTrajectory(1.0, np.array([0, a]), np.array([0, theta]), DELTA)

    def test_pure_phase(self):
        c = coherence(self.traj(0, 0), self.traj(0, 0.7))
        assert c.C == pytest.approx(np.exp(0.7j)) and c.R == pytest.approx(1) and c.gamma == pytest.approx(0.7)

    def test_unit_separation(self):
        assert coherence(self.traj(0.3, 0), self.traj(1.3, 0)).R == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_grid_mismatch(self):
        other = BranchTrajectory(1.0, np.zeros(3, complex), np.zeros(3), DELTA)
        with pytest.raises(ContractError):
            coherence(self.traj(0, 0), other)

    def test_ramsey(self):
        c = coherence(self.traj(0, 0), self.traj(0, 0.7))
        assert c.ramsey_population(0.7) == pytest.approx(1.0)
        assert c.ramsey_population(0.7 + np.pi) == pytest.approx(0.0, abs=1e-12)
        assert c.x == pytest.approx(math.cos(0.7)) and c.y == pytest.approx(math.sin(0.7))

    @given(st.complex_numbers(max_magnitude=6), st.complex_numbers(max_magnitude=6), st.floats(-50, 50))
    def test_R_bounded(self, a, b, dtheta):
        c = coherence(self.traj(a, 0), self.traj(b, dtheta))
        assert c.R <= 1 + 1e-12
        assert c.R == pytest.approx(math.exp(-abs(a - b) ** 2 / 2), rel=1e-9, abs=1e-300)
        # tracked phase agrees with the wrapped argument
        assert math.remainder(c.phase - c.gamma, 2 * math.pi) == pytest.approx(0, abs=1e-9)

    def test_overlap_identity(self):
        assert abs(coherent_overlap(1 + 1j, 1 + 1j)) == pytest.approx(1.0)

    def test_fast_cw_dephases_strongly(self, params):
        # close to n = 5 and well inside the non-adiabatic regime
        R = measured_phase(make_path(PathSpec("circle", "cw", to_angular(190.0), 30.0)), params).R
        assert R < 0.5


class TestAdiabatic:
    def test_circle_value(self, params):
        ad = adiabatic_phases(make_path(PathSpec("circle", "ccw", EPS, 300.0, 4096)), params)
        # disc of radius eps0/2 scaled by 1/(4 delta_s^2)
        area = np.pi * EPS**2 / 4
        exact = -2 * area * (1 / (4 * params.delta_e**2) - 1 / (4 * params.delta_g**2))
        assert ad.gamma_geo == pytest.approx(exact, rel=1e-4)
        assert ad.gamma_geo == pytest.approx(-3.63, abs=0.005)

    def test_dynamical_phase_closed_form(self, params):
        T = 300.0
        ad = adiabatic_phases(make_path(PathSpec("circle", "ccw", EPS, T, 4096)), params)
        exact = EPS**2 * T / 8 * (1 / params.delta_e - 1 / params.delta_g)
        assert ad.gamma_dyn == pytest.approx(exact, rel=1e-6)

    def test_straight(self, params):
        w = make_path(PathSpec("square", "cw", EPS, 300.0))
        shaped, ref = adiabatic_phases(w, params), adiabatic_phases(straight_reference(w), params)
        assert ref.gamma_geo == 0 and ref.gamma_dyn == pytest.approx(shaped.gamma_dyn, rel=1e-12)

    def test_no_shift(self):
        ad = adiabatic_phases(make_path(PathSpec("circle")), SystemParams(DELTA, 0.0))
        assert ad.gamma_dyn == 0 and ad.gamma_geo == 0

    def test_orientation(self, params):
        a = adiabatic_phases(make_path(PathSpec("circle", "ccw")), params).gamma_geo
        b = adiabatic_phases(make_path(PathSpec("circle", "cw")), params).gamma_geo
        assert b == pytest.approx(-a, rel=1e-12)

    def test_measured_phase_converges_as_inverse_T(self, params):
        errs = []
        for T in (1000.0, 2000.0, 4000.0):
            w = make_path(PathSpec("circle", "ccw", EPS, T))
            ad = adiabatic_phases(w, params)
            errs.append(abs(measured_phase(w, params).phase - ad.gamma_dyn - ad.gamma_geo))
        assert errs[0] > errs[1] > errs[2]
        # roughly halves with each doubling
        assert 1.5 < errs[0] / errs[1] < 2.7 and 1.5 < errs[1] / errs[2] < 2.7


class TestSmallHelpers:
    def test_photon_number(self):
        assert mean_photon_number(to_angular(370), DELTA) == pytest.approx(21.390625, abs=1e-9)
        with pytest.raises(ValidationError):
            mean_photon_number(1.0, 0.0)

    def test_lorentzian(self):
        assert lorentzian_response(DELTA, 0, 1.0) == pytest.approx(-1 / (2 * DELTA))
        kappa = 0.01
        assert lorentzian_response(0, kappa, 1.0) == pytest.approx(-1j / kappa)
        full = abs(lorentzian_response(0, kappa, 1.0)) ** 2
        assert abs(lorentzian_response(kappa / 2, kappa, 1.0)) ** 2 == pytest.approx(full / 2)
        with pytest.raises(ValidationError):
            lorentzian_response(0, 0, 1.0)

    def test_trajectory_csv(self, tmp_path, params):
        tg, te = evolve_joint(make_path(PathSpec("circle", "cw", EPS, 30.0, 32)), params)
        path = tmp_path / "t.csv"
        write_trajectories_csv(tg, te, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t_ns,re_alpha_g,im_alpha_g,theta_g,re_alpha_e,im_alpha_e,theta_e"
        assert len(lines) == 34
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 4] + 1j * data[:, 5], te.alpha)
