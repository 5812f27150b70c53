import numpy as np
import pytest

from causalab.causal import DiscreteMeasure, action_and_constraints, causal_action
from causalab.errors import ContractViolation, FeasibilityError
from causalab.linop import as_spacetime_point, selfadjoint
from causalab.minimizer import (
    ChartLayout,
    MinimizeProblem,
    Schedule,
    measure_from_params,
    minimize,
    parameterize_point,
    penalty_gradient,
    penalty_objective,
    project_params,
    rectifier,
    rectifier_inverse,
)

FAST = Schedule(anneal_steps=1200, descent_steps=150)


def grid_oracle_action(target_trace, nu_max=4.0, steps=4001):
    """Dense search over diagonal representatives x = diag(nu, -mu) of the
    single-point ambient_dim=2 problem at unit volume; unitary invariance
    makes diagonal representatives exhaustive."""
    best = np.inf
    for nu in np.linspace(0.0, nu_max, steps):
        mu = nu - target_trace
        if mu < 0:
            continue
        val = nu**4 + mu**4 - 0.5 * (nu**2 + mu**2) ** 2
        best = min(best, val)
    return best


class TestChart:
    def test_zero_parameters_zero_operator(self):
        lay = ChartLayout(2, 1, 1)
        x = parameterize_point(np.zeros(lay.per_point), 2, 1)
        assert np.linalg.norm(x.matrix) == 0.0

    def test_round_trip_eigenvalues(self):
        rng = np.random.default_rng(0)
        lay = ChartLayout(3, 1, 1)
        for _ in range(50):
            th = rng.normal(size=lay.per_point)
            x = parameterize_point(th, 3, 1)
            nu, mu = rectifier(th[0]), rectifier(th[1])
            got = np.sort(x.eigenvalues)
            want = np.sort([nu, -mu, 0.0])
            assert np.max(np.abs(got - want)) < 1e-9

    def test_membership_by_construction(self):
        rng = np.random.default_rng(1)
        lay = ChartLayout(4, 2, 1)
        for _ in range(10_000):
            th = rng.normal(scale=1.5, size=lay.per_point)
            x = parameterize_point(th, 4, 2)
            assert x.signature.positives <= 2
            assert x.signature.negatives <= 2

    def test_rectifier_inverse(self):
        for y in (0.0, 1e-8, 0.1, 1.0, 7.5):
            z = rectifier_inverse(y)
            assert rectifier(z) == pytest.approx(y, rel=1e-12, abs=1e-13)

    def test_wrong_length_rejected(self):
        with pytest.raises(ContractViolation):
            parameterize_point(np.zeros(3), 2, 1)


class TestProjection:
    def test_volume_and_trace_exact(self):
        rng = np.random.default_rng(2)
        prob = MinimizeProblem(ambient_dim=3, spin_dim=1, num_points=3,
                               target_volume=2.5, target_trace=-0.7, seed=0)
        params = rng.normal(size=prob.layout.total)
        projected = project_params(prob, params)
        rho = measure_from_params(prob, projected)
        _, rep = action_and_constraints(rho)
        assert rep.volume == pytest.approx(2.5, rel=1e-12)
        assert rep.trace_integral == pytest.approx(-0.7, abs=1e-10)

    def test_projection_idempotent_on_feasible(self):
        rng = np.random.default_rng(3)
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=2,
                               target_volume=1.0, target_trace=0.4, seed=0)
        once = project_params(prob, rng.normal(size=prob.layout.total))
        twice = project_params(prob, once)
        assert np.max(np.abs(once - twice)) < 1e-9


class TestPenaltyObjective:
    def test_zero_weights_reduce_to_action(self):
        rng = np.random.default_rng(4)
        sched = Schedule(vol_weight=0.0, trace_weight=0.0, bound_weight=0.0)
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=2,
                               target_volume=1.0, target_trace=0.0, seed=0,
                               boundedness_cap=0.01, schedule=sched)
        params = rng.normal(size=prob.layout.total)
        rho = measure_from_params(prob, params)
        assert penalty_objective(prob, params) == pytest.approx(
            causal_action(rho), rel=1e-12
        )

    def test_satisfied_constraints_no_penalty(self):
        rng = np.random.default_rng(5)
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=0.8,
                               boundedness_cap=1e9, seed=0)
        params = project_params(prob, rng.normal(size=prob.layout.total))
        rho = measure_from_params(prob, params)
        assert penalty_objective(prob, params) == pytest.approx(
            causal_action(rho), rel=1e-10, abs=1e-12
        )

    @pytest.mark.parametrize("cap", [None, 0.05])
    def test_gradient_matches_finite_differences(self, cap):
        rng = np.random.default_rng(6)
        prob = MinimizeProblem(ambient_dim=3, spin_dim=1, num_points=2,
                               target_volume=1.3, target_trace=0.5,
                               boundedness_cap=cap, seed=0)
        for _ in range(3):
            params = rng.normal(size=prob.layout.total)
            ga = penalty_gradient(prob, params, method="analytic")
            gf = penalty_gradient(prob, params, method="fd")
            rel = np.linalg.norm(ga - gf) / max(np.linalg.norm(ga), 1e-12)
            assert rel < 1e-5


class TestMinimize:
    def test_balanced_trace_zero_optimum(self):
        # Trace 0 forces nu = mu: self-spacelike point, zero action.
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=0.0, seed=0,
                               schedule=FAST)
        res = minimize(prob)
        assert res.action <= 1e-8
        assert res.constraint_residuals["volume"] <= 1e-6
        assert res.constraint_residuals["trace"] <= 1e-6

    def test_unit_trace_matches_grid_oracle(self):
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=1.0, seed=0,
                               schedule=FAST)
        res = minimize(prob)
        oracle = grid_oracle_action(1.0)
        assert abs(res.action - oracle) <= 1e-4
        assert res.trace_spread <= 1e-4

    def test_two_point_splits_into_orthogonal_projectors(self):
        # Derivation: with f=2, n=1, V=1, T=1, two rank-1 projectors on
        # orthogonal lines give zero cross terms and diagonal terms
        # (1/2) w_i^2; weights (1/2, 1/2) give S = 1/4, beating any
        # single-point configuration (1/2).
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=2,
                               target_volume=1.0, target_trace=1.0, seed=1,
                               schedule=Schedule(anneal_steps=4000,
                                                 descent_steps=400))
        res = minimize(prob)
        assert res.action <= 0.25 + 5e-3
        assert res.action >= 0.25 - 1e-6
        assert res.trace_spread <= 1e-3

    def test_history_monotone_and_residuals(self):
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=1.0, seed=3,
                               schedule=FAST)
        res = minimize(prob)
        actions = [h.action for h in res.history]
        assert all(b <= a + 1e-12 for a, b in zip(actions, actions[1:]))
        assert all(h.vol_residual <= 1e-9 for h in res.history)
        assert all(h.trace_residual <= 1e-9 for h in res.history)
        assert res.iterations > 0

    def test_determinism(self):
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=1.0, seed=7,
                               schedule=Schedule(anneal_steps=300,
                                                 descent_steps=40))
        res_a = minimize(prob)
        res_b = minimize(prob)
        assert len(res_a.history) == len(res_b.history)
        for ha, hb in zip(res_a.history, res_b.history):
            assert ha == hb
        assert res_a.action == res_b.action

    def test_unitary_gauge_invariance(self):
        rng = np.random.default_rng(8)
        prob = MinimizeProblem(ambient_dim=3, spin_dim=1, num_points=2,
                               target_volume=1.0, target_trace=0.3, seed=0)
        params = project_params(prob, rng.normal(size=prob.layout.total))
        rho = measure_from_params(prob, params)
        z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        u, _ = np.linalg.qr(z)
        pts = tuple(
            as_spacetime_point(selfadjoint(u @ p.matrix @ u.conj().T), 1)
            for p in rho.points
        )
        rho_u = DiscreteMeasure(points=pts, weights=np.array(rho.weights))
        act, rep = action_and_constraints(rho)
        act_u, rep_u = action_and_constraints(rho_u)
        assert act_u == pytest.approx(act, rel=1e-9, abs=1e-12)
        assert rep_u.volume == pytest.approx(rep.volume, rel=1e-12)
        assert rep_u.trace_integral == pytest.approx(rep.trace_integral, abs=1e-9)
        assert rep_u.boundedness == pytest.approx(rep.boundedness, rel=1e-9)

    def test_infeasible_targets(self):
        with pytest.raises(FeasibilityError):
            MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                            target_volume=-1.0)
        with pytest.raises(FeasibilityError):
            MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=0,
                            target_volume=1.0)
        with pytest.raises(FeasibilityError):
            MinimizeProblem(ambient_dim=1, spin_dim=1, num_points=1,
                            target_volume=1.0)
        with pytest.raises(FeasibilityError):
            MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                            target_volume=1.0, boundedness_cap=-2.0)
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0)
        with pytest.raises(FeasibilityError):
            minimize(prob, driver="bogus")

    def test_boundedness_cap_enforced(self):
        # Cap far below the unconstrained optimum's boundedness value: the
        # penalty pushes the measure toward the cap.
        prob = MinimizeProblem(ambient_dim=2, spin_dim=1, num_points=1,
                               target_volume=1.0, target_trace=0.0,
                               boundedness_cap=0.5, seed=0, schedule=FAST)
        res = minimize(prob)
        assert res.constraint_residuals["boundedness"] <= 1e-6
