import numpy as np
import numpy.testing as npt
import pytest

from hybridnodes.config import CaseConfig, build_domain
from hybridnodes.nodegen import hybrid_discretize
from hybridnodes.operators import FieldState
from hybridnodes.solver import (PhysicsParams, PoissonSolveSettings, TimeControls,
                                apply_temperature_bc, apply_velocity_bc, build_operators,
                                interior_divergence, momentum_predict, nusselt_average,
                                pressure_solve, run, temperature_step, velocity_correct)


@pytest.fixture(scope="module")
def dvd_setup(dvd_coarse):
    config, spec, ns = dvd_coarse
    settings = PoissonSolveSettings()
    ops = build_operators(ns, config.cold_origins(spec), settings)
    params = PhysicsParams(config.Ra, config.Pr)
    return config, ns, ops, params, settings


def solved_setup(h, **overrides):
    config = CaseConfig(case="dvd", h_r=h, **overrides)
    spec = build_domain(config)
    ns = hybrid_discretize(config, spec)
    settings = PoissonSolveSettings()
    ops = build_operators(ns, config.cold_origins(spec), settings)
    return config, ns, ops, settings


class TestTimeControls:
    def test_dt_formula(self):
        tc = TimeControls.from_spacing(0.01, 1.0)
        assert tc.dt == pytest.approx(0.1 * 0.01**2 / 2)

    def test_advective_cap_only_binds_when_coarse(self):
        fine = TimeControls.from_spacing(0.005, 1.0, Ra=1e6)
        assert fine.dt == pytest.approx(0.1 * 0.005**2 / 2)
        coarse = TimeControls.from_spacing(0.04, 1.0, Ra=1e6)
        assert coarse.dt == pytest.approx(40.0 / 1e6)


class TestMomentumPredict:
    def test_quiescent_stays_quiescent(self, dvd_setup):
        _, ns, ops, params, _ = dvd_setup
        state = FieldState.zeros(len(ns), 2)
        vstar = momentum_predict(state, ops, params, 1e-5)
        npt.assert_array_equal(vstar, 0.0)

    def test_pure_buoyancy_kick(self, dvd_setup):
        _, ns, ops, params, _ = dvd_setup
        state = FieldState.zeros(len(ns), 2)
        state.temperature[:] = 1.0
        dt = 1e-5
        vstar = momentum_predict(state, ops, params, dt)
        inter = ns.interior_mask
        npt.assert_allclose(vstar[inter, 1], dt * params.Ra * params.Pr, rtol=1e-12)
        assert np.abs(vstar[inter, 0]).max() <= 1e-9 * dt * params.Ra * params.Pr

    def test_linear_advection_matches_analytic(self, dvd_setup):
        _, ns, ops, params, _ = dvd_setup
        x, y = ns.positions[:, 0], ns.positions[:, 1]
        state = FieldState.zeros(len(ns), 2)
        state.velocity[:, 0] = 1.0 + 2 * x - y
        state.velocity[:, 1] = 0.5 - x + 3 * y
        dt = 1e-6
        vstar = momentum_predict(state, ops, params, dt)
        u, w = state.velocity[:, 0], state.velocity[:, 1]
        adv_u = u * 2 + w * (-1)
        adv_w = u * (-1) + w * 3
        inter = ns.interior_mask
        # linear velocity: advection is exact for both bases, diffusion is zero
        npt.assert_allclose((vstar[:, 0] - u)[inter] / dt, -adv_u[inter], rtol=2e-6)
        npt.assert_allclose((vstar[:, 1] - w)[inter] / dt, -adv_w[inter], rtol=2e-6)


class TestPressureSolve:
    def test_divergence_free_gives_constant_pressure(self, dvd_setup):
        _, ns, ops, _, settings = dvd_setup
        x, y = ns.positions[:, 0], ns.positions[:, 1]
        # v = curl of a streamfunction vanishing with all derivatives at walls
        psi_like = np.stack([np.sin(np.pi * y) ** 2 * np.sin(np.pi * x) ** 2 * (y - 0.5),
                             -np.sin(np.pi * x) ** 2 * np.sin(np.pi * y) ** 2 * (x - 0.5)],
                            axis=1)
        vstar = psi_like * 0  # strictly zero: trivially divergence free
        p = pressure_solve(vstar, ops, settings, 1e-5)
        assert np.abs(p).max() < 1e-8

    def test_manufactured_solution_second_order(self):
        """Method of manufactured solutions: p = cos(pi x) cos(pi y)."""
        errs = []
        for h in (0.05, 0.025):
            _, ns, ops, settings = solved_setup(h)
            x, y = ns.positions[:, 0], ns.positions[:, 1]
            exact = np.cos(np.pi * x) * np.cos(np.pi * y)
            n = len(ns)
            rhs = np.empty(n + 1)
            rhs[:n] = -2 * np.pi**2 * exact
            rhs[ops.boundary_idx] = 0.0
            rhs[n] = 0.0
            from scipy.sparse.linalg import splu
            sol = splu(ops.poisson_matrix.tocsc()).solve(rhs)[:n]
            diff = sol - (exact - exact[ops.gauge])
            errs.append(np.abs(diff[ops.interior_idx]).max())
        assert errs[0] < 0.1  # absolute sanity at h = 0.05
        assert errs[1] < errs[0] / 2.5  # ~O(h^2) between the two resolutions

    def test_residual_contract(self, dvd_setup):
        _, ns, ops, _, settings = dvd_setup
        rng = np.random.default_rng(0)
        vstar = rng.normal(size=(len(ns), 2))
        apply_velocity_bc(vstar, ops)
        dt = 1e-5
        p = pressure_solve(vstar, ops, settings, dt)
        n = len(ns)
        rhs = np.empty(n + 1)
        div = ops.partials[0].apply(vstar[:, 0]) + ops.partials[1].apply(vstar[:, 1])
        rhs[:n] = div / dt
        rhs[ops.boundary_idx] = 0.0
        rhs[n] = 0.0
        full = np.concatenate([p, [ops._poisson_lambda]])
        res = np.linalg.norm(rhs - ops.poisson_matrix @ full) / np.linalg.norm(rhs)
        assert res <= 10 * settings.tol

    def test_gauge_pinned_to_zero(self, dvd_setup):
        _, ns, ops, _, settings = dvd_setup
        rng = np.random.default_rng(1)
        vstar = rng.normal(size=(len(ns), 2))
        apply_velocity_bc(vstar, ops)
        p = pressure_solve(vstar, ops, settings, 1e-5)
        assert abs(p[ops.gauge]) < 1e-10 * np.abs(p).max()


class TestVelocityCorrect:
    def test_constant_pressure_is_identity_inside(self, dvd_setup):
        _, ns, ops, _, _ = dvd_setup
        rng = np.random.default_rng(2)
        vstar = rng.normal(size=(len(ns), 2))
        apply_velocity_bc(vstar, ops)
        v = velocity_correct(vstar, np.ones(len(ns)), ops, 1e-5)
        npt.assert_allclose(v[ops.interior_idx], vstar[ops.interior_idx], atol=1e-12)

    def test_boundary_is_noslip(self, dvd_setup):
        _, ns, ops, _, settings = dvd_setup
        rng = np.random.default_rng(3)
        vstar = rng.normal(size=(len(ns), 2))
        apply_velocity_bc(vstar, ops)
        p = pressure_solve(vstar, ops, settings, 1e-5)
        v = velocity_correct(vstar, p, ops, 1e-5)
        npt.assert_array_equal(v[ops.boundary_idx], 0.0)

    def test_projection_reduces_divergence_bulk(self, dvd_setup):
        """Bulk-supported fields project below 0.1x the intermediate
        divergence (the wall-consistent Poisson rows only leak where the
        pressure has tangential wall gradients)."""
        _, ns, ops, _, settings = dvd_setup
        x, y = ns.positions[:, 0], ns.positions[:, 1]
        bump = (np.sin(np.pi * x) * np.sin(np.pi * y)) ** 4
        vstar = np.stack([bump * np.cos(2 * np.pi * y), bump * np.sin(2 * np.pi * x)], axis=1)
        apply_velocity_bc(vstar, ops)
        dt = 1e-5
        before = interior_divergence(vstar, ops)
        p = pressure_solve(vstar, ops, settings, dt)
        v = velocity_correct(vstar, p, ops, dt)
        after = interior_divergence(v, ops)
        assert after < 0.1 * before

    def test_projection_wall_leak_bounded(self, dvd_setup):
        """Fields with strong wall gradients stay within the documented 0.5x bound."""
        _, ns, ops, _, settings = dvd_setup
        x, y = ns.positions[:, 0], ns.positions[:, 1]
        vstar = np.stack([np.sin(np.pi * x) * np.cos(np.pi * y),
                          np.cos(np.pi * x) * np.sin(np.pi * y)], axis=1)
        apply_velocity_bc(vstar, ops)
        dt = 1e-5
        before = interior_divergence(vstar, ops)
        p = pressure_solve(vstar, ops, settings, dt)
        v = velocity_correct(vstar, p, ops, dt)
        after = interior_divergence(v, ops)
        assert after < 0.5 * before


class TestTemperatureStep:
    def test_conduction_profile_is_steady(self, dvd_setup):
        _, ns, ops, _, _ = dvd_setup
        state = FieldState.zeros(len(ns), 2)
        state.temperature = ns.positions[:, 0] - 0.5
        out = temperature_step(state, ops, 2e-5)
        assert np.abs(out - state.temperature).max() < 1e-9

    def test_heat_decay_rate_second_order(self):
        """T = sin(pi x) decays at exp(-pi^2 t); error shrinks ~h^2."""
        rates = []
        for h in (0.05, 0.025):
            config, ns, ops, _ = solved_setup(h)
            state = FieldState.zeros(len(ns), 2)
            state.temperature = np.sin(np.pi * ns.positions[:, 0])
            # make the Dirichlet walls consistent with the test profile
            ops.dirichlet_values = np.zeros(len(ops.dirichlet_idx))
            apply_temperature_bc(state.temperature, ops)
            dt = 0.1 * h * h / 2
            for _ in range(100):
                state.temperature = temperature_step(state, ops, dt)
            probe = ns.interior_mask & (np.abs(np.sin(np.pi * ns.positions[:, 0])) > 0.3)
            ratio = state.temperature[probe] / np.sin(np.pi * ns.positions[probe, 0])
            rate = -np.log(np.mean(ratio)) / (100 * dt)
            rates.append(rate)
        err = [abs(r - np.pi**2) for r in rates]
        assert err[0] < 0.05 * np.pi**2
        assert err[1] < err[0] / 2.5

    def test_insulated_walls_have_zero_normal_gradient(self, dvd_setup):
        _, ns, ops, _, _ = dvd_setup
        rng = np.random.default_rng(4)
        state = FieldState.zeros(len(ns), 2)
        state.temperature = rng.normal(size=len(ns))
        out = temperature_step(state, ops, 1e-6)
        resid = ops._w_neumann @ out
        assert np.abs(resid).max() <= 1e-6 * np.abs(out).max()


class TestNusselt:
    def test_conduction_limit_is_one(self, dvd_setup):
        _, ns, ops, _, _ = dvd_setup
        state = FieldState.zeros(len(ns), 2)
        state.temperature = ns.positions[:, 0] - 0.5
        assert nusselt_average(state, ops) == pytest.approx(1.0, abs=1e-8)

    def test_constant_temperature_is_zero(self, dvd_setup):
        _, ns, ops, _, _ = dvd_setup
        state = FieldState.zeros(len(ns), 2)
        state.temperature[:] = 0.25
        assert nusselt_average(state, ops) == pytest.approx(0.0, abs=1e-10)


class TestRun:
    def test_no_temperature_difference_no_flow(self):
        config = CaseConfig(case="dvd", h_r=0.05, t_end=0.002,
                            t_cold=0.2, t_hot=0.2, t_init=0.2)
        result = run(config)
        assert result.final_nu == pytest.approx(0.0, abs=1e-9)
        assert np.abs(result.state.velocity).max() < 1e-9

    def test_bitwise_deterministic(self):
        config = CaseConfig(case="dvd", h_r=0.05, t_end=0.002)
        a = run(config)
        b = run(config)
        assert a.nu_values.tobytes() == b.nu_values.tobytes()
        assert a.state.velocity.tobytes() == b.state.velocity.tobytes()

    def test_velocity_zero_on_boundary_after_run(self):
        config = CaseConfig(case="dvd", h_r=0.05, t_end=0.002)
        result = run(config)
        bnd = result.nodeset.boundary_mask
        npt.assert_array_equal(result.state.velocity[bnd], 0.0)

    def test_dirichlet_values_exact_after_run(self):
        config = CaseConfig(case="dvd", h_r=0.05, t_end=0.002)
        result = run(config)
        ns = result.nodeset
        from hybridnodes.nodegen import ROLE_DIRICHLET
        mask = ns.role == ROLE_DIRICHLET
        npt.assert_array_equal(result.state.temperature[mask], ns.bc_value[mask])
