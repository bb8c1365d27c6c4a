"""Error propagation, Lyapunov dissipation, plant/observer consistency."""

import math

import numpy as np
import pytest

from beamobs import (
    ErrorState,
    ModalSystem,
    PlantState,
    Trajectory,
    assemble_error_generator,
    decay_metrics,
    lyapunov,
    lyapunov_rate,
    modal_initial_error,
    propagate_error,
    propagate_plant_observer,
)
from beamobs.errors import (
    ConfigurationError,
    InsufficientDataError,
    ParameterError,
    UndefinedMetricError,
)


@pytest.fixture(scope="module")
def unit_system():
    """Single mode, single output, everything 1: the textbook 2x2 case."""
    return ModalSystem(omegas=np.array([1.0]), C1=np.array([[1.0]]),
                       gammas=np.array([1.0]))


def closed_form_error(t):
    """Solution of D'' + D' + D = 0 with D(0)=1, d(0)=0 for unit_system."""
    nu = math.sqrt(3.0) / 2.0
    damp = np.exp(-0.5 * t)
    Delta = damp * (np.cos(nu * t) - np.sin(nu * t) / math.sqrt(3.0))
    delta = -2.0 / math.sqrt(3.0) * damp * np.sin(nu * t)
    return Delta, delta


class TestStates:
    def test_vector_round_trip(self):
        e = ErrorState(Delta=np.array([1.0, 2.0]), delta=np.array([3.0, 4.0]))
        assert np.array_equal(e.vector, [1.0, 2.0, 3.0, 4.0])
        back = ErrorState.from_vector(e.vector)
        assert np.array_equal(back.Delta, e.Delta)
        assert np.array_equal(back.delta, e.delta)
        z = PlantState.from_vector(np.arange(4.0))
        assert np.array_equal(z.xi, [0.0, 1.0])

    def test_rejects_bad_components(self):
        with pytest.raises(ParameterError):
            ErrorState(Delta=np.array([1.0]), delta=np.array([1.0, 2.0]))
        with pytest.raises(ParameterError):
            ErrorState(Delta=np.array([np.nan]), delta=np.array([1.0]))
        with pytest.raises(ParameterError):
            ErrorState.from_vector(np.arange(3.0))

    def test_components_are_frozen(self):
        e = ErrorState(Delta=np.array([1.0]), delta=np.array([2.0]))
        with pytest.raises(ValueError):
            e.Delta[0] = 5.0


class TestTrajectoryInvariants:
    def test_rejects_inconsistent_norms(self):
        t = np.array([0.0, 1.0])
        s = np.ones((2, 2))
        good = np.array([2.0, 2.0])
        Trajectory(times=t, states=s, lyapunov=good, norm_sq=good)
        with pytest.raises(ParameterError):
            Trajectory(times=t, states=s, lyapunov=good + 1.0, norm_sq=good)

    def test_rejects_decreasing_times(self):
        s = np.ones((2, 2))
        w = np.array([2.0, 2.0])
        with pytest.raises(ParameterError):
            Trajectory(times=np.array([1.0, 0.0]), states=s, lyapunov=w,
                       norm_sq=w)

    def test_state_accessor_kind(self, unit_system):
        e0 = ErrorState(Delta=np.array([1.0]), delta=np.array([0.0]))
        traj = propagate_error(unit_system, e0, np.array([0.0, 1.0]))
        assert isinstance(traj.state(0), ErrorState)
        assert len(traj) == 2 and traj.n_modes == 1


class TestGenerator:
    def test_unit_system_matrix(self, unit_system):
        A = assemble_error_generator(unit_system)
        assert np.array_equal(A, [[-1.0, 1.0], [-1.0, 0.0]])
        eigs = np.linalg.eigvals(A)
        assert np.all(eigs.real == pytest.approx(-0.5, rel=1e-12))

    def test_block_structure(self, system6):
        n = system6.n_modes
        A = assemble_error_generator(system6)
        Om = np.diag(system6.omegas)
        assert np.array_equal(A[:n, n:], Om)
        assert np.array_equal(A[n:, :n], -Om)
        assert np.all(A[n:, n:] == 0.0)
        # upper-left is -sum_s gamma_s c_s c_s^T: symmetric NSD, rank <= r
        UL = A[:n, :n]
        assert np.max(np.abs(UL - UL.T)) < 1e-14 * np.max(np.abs(UL))
        assert np.all(np.linalg.eigvalsh(UL) < 1e-10)
        assert np.linalg.matrix_rank(UL) <= system6.n_outputs

    def test_zero_gain_generator_is_skew(self, system6):
        A0 = assemble_error_generator(system6, zero_gain=True)
        assert np.array_equal(A0, -A0.T)

    def test_spectrum_location(self, system6, system16):
        for sys_ in (system6, system16):
            eigs = np.linalg.eigvals(assemble_error_generator(sys_))
            assert np.all(eigs.real < 0.0)
        skew = np.linalg.eigvals(
            assemble_error_generator(system6, zero_gain=True)
        )
        assert np.max(np.abs(skew.real)) < 1e-10


class TestPropagateError:
    def test_zero_initial_error_stays_zero(self, system6):
        e0 = ErrorState(Delta=np.zeros(6), delta=np.zeros(6))
        traj = propagate_error(system6, e0, np.linspace(0.0, 2.0, 9))
        assert np.all(traj.states == 0.0)
        assert np.all(traj.lyapunov == 0.0)

    def test_matches_closed_form_single_mode(self, unit_system):
        t = np.linspace(0.0, 6.0, 61)
        e0 = ErrorState(Delta=np.array([1.0]), delta=np.array([0.0]))
        traj = propagate_error(unit_system, e0, t)
        Delta, delta = closed_form_error(t)
        assert np.max(np.abs(traj.states[:, 0] - Delta)) < 1e-8
        assert np.max(np.abs(traj.states[:, 1] - delta)) < 1e-8

    def test_dissipation_monotone(self, system6):
        e0 = modal_initial_error(system6.omegas)
        traj = propagate_error(system6, e0, np.linspace(0.0, 20.0, 400))
        w = traj.lyapunov
        assert np.all(w[1:] <= w[:-1] * (1.0 + 1e-10))

    def test_zero_gain_conserves_quadratic_form(self, system6):
        e0 = modal_initial_error(system6.omegas)
        traj = propagate_error(system6, e0, np.linspace(0.0, 20.0, 400),
                               zero_gain=True)
        w = traj.lyapunov
        assert np.max(np.abs(w - w[0])) < 1e-10 * w[0]

    def test_grid_validation(self, unit_system):
        e0 = ErrorState(Delta=np.array([1.0]), delta=np.array([0.0]))
        with pytest.raises(ConfigurationError):
            propagate_error(unit_system, e0, np.array([0.5, 1.0]))
        with pytest.raises(ConfigurationError):
            propagate_error(unit_system, e0, np.array([0.0, 1.0, 1.0]))
        with pytest.raises(ConfigurationError):
            propagate_error(unit_system, e0, np.array([0.0, np.inf]))

    def test_dimension_mismatch(self, system6):
        with pytest.raises(ParameterError):
            propagate_error(
                system6,
                ErrorState(Delta=np.zeros(3), delta=np.zeros(3)),
                np.array([0.0, 1.0]),
            )


class TestLyapunov:
    def test_origin(self, system6):
        e = ErrorState(Delta=np.zeros(6), delta=np.zeros(6))
        assert lyapunov(system6, e) == 0.0
        assert lyapunov_rate(system6, e) == 0.0

    def test_rate_vanishes_on_output_kernel(self, system6):
        _, _, Vt = np.linalg.svd(system6.C1)
        kernel = Vt[-1]  # C1 is 5 x 6, one-dimensional null space
        e = ErrorState(Delta=kernel, delta=np.ones(6))
        assert lyapunov(system6, e) > 1.0
        assert abs(lyapunov_rate(system6, e)) < 1e-20

    def test_rate_is_directional_derivative(self, system6):
        rng = np.random.default_rng(7)
        A = assemble_error_generator(system6)
        for _ in range(5):
            vec = rng.standard_normal(12)
            e = ErrorState.from_vector(vec)
            direct = 2.0 * vec @ (A @ vec)
            rate = lyapunov_rate(system6, e)
            assert rate == pytest.approx(direct, rel=1e-10)
            assert rate <= 0.0

    def test_rate_matches_finite_differences_at_second_order(self, system6):
        e0 = modal_initial_error(system6.omegas)
        errs = []
        hs = (1e-2, 1e-3, 1e-4)
        for h in hs:
            grid = np.array([0.0, 1.0 - h, 1.0, 1.0 + h])
            traj = propagate_error(system6, e0, grid)
            fd = (traj.lyapunov[3] - traj.lyapunov[1]) / (2.0 * h)
            rate = lyapunov_rate(system6, traj.state(2))
            errs.append(abs(rate - fd))
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert 1.8 < slope < 2.3


class TestPlantObserver:
    def test_identical_initial_states_track_exactly(self, body_system6):
        z0 = PlantState(xi=np.ones(6) * 0.1, eta=np.zeros(6))
        u = lambda t: np.array([math.sin(t)])
        plant, obs = propagate_plant_observer(
            body_system6, z0, z0, u, np.linspace(0.0, 1.0, 11)
        )
        assert np.max(np.abs(plant.states - obs.states)) < 1e-12

    def test_difference_matches_exact_error_dynamics_stiff(self, system6):
        # curvature outputs make the coupled generator stiff; short horizon
        z0 = PlantState.from_vector(modal_initial_error(system6.omegas).vector)
        zbar0 = PlantState(xi=np.zeros(6), eta=np.zeros(6))
        grid = np.linspace(0.0, 0.05, 6)
        plant, obs = propagate_plant_observer(system6, z0, zbar0, None, grid)
        exact = propagate_error(
            system6, ErrorState.from_vector(z0.vector), grid
        )
        diff = (plant.states - obs.states) - exact.states
        rel = np.max(np.linalg.norm(diff, axis=1)) / np.linalg.norm(
            exact.states[0]
        )
        assert rel < 1e-6

    def test_difference_matches_exact_error_dynamics_mild(self, body_system6):
        z0 = PlantState.from_vector(
            modal_initial_error(body_system6.omegas).vector
        )
        zbar0 = PlantState(xi=np.zeros(6), eta=np.zeros(6))
        grid = np.linspace(0.0, 1.0, 51)
        plant, obs = propagate_plant_observer(body_system6, z0, zbar0, None,
                                              grid)
        exact = propagate_error(
            body_system6, ErrorState.from_vector(z0.vector), grid
        )
        err_rk = plant.states[-1] - obs.states[-1]
        rel = np.linalg.norm(err_rk - exact.states[-1]) / np.linalg.norm(
            exact.states[-1]
        )
        assert rel < 1e-3

    def test_error_is_input_independent(self, body_system6):
        zbar0 = PlantState(xi=np.zeros(6), eta=np.zeros(6))
        z0 = PlantState(xi=np.full(6, 0.2), eta=np.full(6, -0.1))
        grid = np.linspace(0.0, 1.0, 21)
        drive = lambda t: np.array([math.sin(3.0 * t)])
        p1, o1 = propagate_plant_observer(body_system6, z0, zbar0, drive, grid)
        p2, o2 = propagate_plant_observer(body_system6, z0, zbar0, None, grid)
        e_driven = p1.states - o1.states
        e_free = p2.states - o2.states
        scale = np.linalg.norm(e_free[0])
        assert np.max(np.abs(e_driven - e_free)) / scale < 1e-6

    def test_rejects_misshapen_input_signal(self, body_system6):
        z0 = PlantState(xi=np.zeros(6), eta=np.zeros(6))
        bad = lambda t: np.array([1.0, 2.0])
        with pytest.raises(ConfigurationError):
            propagate_plant_observer(body_system6, z0, z0, bad,
                                     np.array([0.0, 0.1]))

    def test_rejects_noncallable_input(self, body_system6):
        z0 = PlantState(xi=np.zeros(6), eta=np.zeros(6))
        with pytest.raises(ParameterError):
            propagate_plant_observer(body_system6, z0, z0, 3.0,
                                     np.array([0.0, 0.1]))


class TestDecayMetrics:
    def test_skew_trajectory_has_no_trend(self, system6):
        e0 = modal_initial_error(system6.omegas)
        traj = propagate_error(system6, e0, np.linspace(0.0, 10.0, 200),
                               zero_gain=True)
        report = decay_metrics(traj)
        assert abs(report.fitted_rate) < 1e-6
        assert report.ratio == pytest.approx(1.0, rel=1e-10)

    def test_single_mode_rate_matches_eigenvalue(self, unit_system):
        e0 = ErrorState(Delta=np.array([1.0]), delta=np.array([0.0]))
        traj = propagate_error(unit_system, e0, np.linspace(0.0, 24.0, 1200))
        report = decay_metrics(traj, unit_system)
        assert report.fitted_rate == pytest.approx(-0.5, rel=0.05)
        assert report.slowest_eig_real == pytest.approx(-0.5, rel=1e-10)

    def test_default_rate_tracks_spectrum(self, system6):
        e0 = modal_initial_error(system6.omegas)
        traj = propagate_error(system6, e0, np.linspace(0.0, 20.0, 2000))
        report = decay_metrics(traj, system6)
        assert report.ratio < 1e-2
        assert abs(report.fitted_rate - report.slowest_eig_real) < 0.2 * abs(
            report.slowest_eig_real
        )

    def test_zero_initial_norm_is_undefined(self, system6):
        e0 = ErrorState(Delta=np.zeros(6), delta=np.zeros(6))
        traj = propagate_error(system6, e0, np.linspace(0.0, 1.0, 5))
        with pytest.raises(UndefinedMetricError):
            decay_metrics(traj)

    def test_dead_tail_is_insufficient(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        s = np.zeros((4, 2))
        s[0, 0] = 1.0
        w = np.array([1.0, 0.0, 0.0, 0.0])
        traj = Trajectory(times=t, states=s, lyapunov=w, norm_sq=w)
        with pytest.raises(InsufficientDataError):
            decay_metrics(traj)

    def test_report_text_mentions_rate(self, unit_system):
        e0 = ErrorState(Delta=np.array([1.0]), delta=np.array([0.0]))
        traj = propagate_error(unit_system, e0, np.linspace(0.0, 4.0, 40))
        text = decay_metrics(traj, unit_system).as_text()
        assert "fitted exponential rate" in text
        assert "slowest generator eigenvalue" in text


class TestModalInitialError:
    def test_values(self):
        e = modal_initial_error(np.array([2.0, 4.0]))
        assert np.array_equal(e.Delta, [0.5, 0.125])
        assert np.array_equal(e.delta, e.Delta)

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            modal_initial_error(np.array([1.0, -1.0]))
