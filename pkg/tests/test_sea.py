import numpy as np
import pytest

from causalab.causal import classify
from causalab.errors import ConfigError, ContractViolation
from causalab.sea import (
    DiracSeaConfig,
    LatticeSpec,
    build_sea,
    local_correlation,
    local_trace,
    nonzero_eigenvalues,
    pushforward_measure,
)
from oracles import dirac_residual_1p1


def config(mass=1.0, box=2 * np.pi, K=3, eps=0.05, nt=3, nx=8, t0=0.0, t1=1.0):
    return DiracSeaConfig(
        mass=mass, box_length=box, cutoff_K=K, epsilon=eps,
        lattice=LatticeSpec(nt=nt, nx=nx, t0=t0, t1=t1),
    )


class TestBuildSea:
    def test_rest_frame_mode(self):
        # Single mode at K=0: constant in x, phase rotating as exp(+i t).
        sea = build_sea(config(mass=1.0, K=0, nx=2))
        v0 = sea.evaluate(0.0, 0.0, regularized=False)
        v1 = sea.evaluate(0.7, 0.0, regularized=False)
        vx = sea.evaluate(0.7, sea.sites[1], regularized=False)
        assert np.allclose(v1, vx, atol=1e-14)
        assert np.allclose(v1, np.exp(1j * 0.7) * v0, atol=1e-12)
        # Rest-frame spinor sits in the lower component.
        assert abs(v0[0, 0]) < 1e-14 and abs(v0[0, 1]) > 0

    def test_orthonormality(self):
        sea = build_sea(config())
        gram = sea.gram(t=0.4)
        assert np.max(np.abs(gram - np.eye(sea.num_modes))) < 1e-10

    def test_dirac_residual(self):
        sea = build_sea(config())
        scale = float(np.max(np.abs(sea.omegas)) + np.max(np.abs(sea.momenta)))
        worst = 0.0
        for t in sea.times:
            for x in sea.sites[::2]:
                worst = max(worst, dirac_residual_1p1(
                    sea.evaluate, t, x, sea.config.mass, scale))
        assert worst < 1e-10

    def test_massless_zero_mode_rejected(self):
        with pytest.raises(ContractViolation):
            build_sea(config(mass=0.0, K=0))

    def test_aliasing_rejected(self):
        with pytest.raises(ConfigError):
            config(K=5, nx=7)

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            config(eps=0.0)
        with pytest.raises(ConfigError):
            config(box=-1.0)
        with pytest.raises(ConfigError):
            LatticeSpec(nt=2, nx=4, t0=1.0, t1=0.5)


class TestLocalCorrelation:
    def test_membership_rank_signature(self):
        sea = build_sea(config())
        for t in sea.times:
            for x in sea.sites:
                p = local_correlation(sea, t, x)
                assert p.spin_dim == 1
                assert p.rank <= 2
                assert p.signature.positives <= 1
                assert p.signature.negatives <= 1

    def test_translation_covariance(self):
        sea = build_sea(config())
        t = sea.times[1]
        base = np.sort(local_correlation(sea, t, sea.sites[0]).eigenvalues)
        for x in sea.sites[1:]:
            other = np.sort(local_correlation(sea, t, x).eigenvalues)
            assert np.max(np.abs(base - other)) < 1e-9

    def test_local_trace_constant(self):
        sea = build_sea(config())
        traces = [local_trace(sea, t, x) for t in sea.times for x in sea.sites]
        assert max(traces) - min(traces) < 1e-9 * max(1.0, abs(traces[0]))

    def test_off_lattice_rejected(self):
        sea = build_sea(config())
        with pytest.raises(ContractViolation):
            local_correlation(sea, 0.123456, sea.sites[0])

    def test_monotone_regularization(self):
        # Removing damping can only grow the correlation operators.
        norms = []
        for eps in (0.4, 0.1, 0.025):
            sea = build_sea(config(eps=eps, nt=1, nx=8))
            norms.append(local_correlation(sea, sea.times[0], 0.0).norm())
        assert norms[0] <= norms[1] <= norms[2]


class TestPushforward:
    def test_cell_volumes_add(self):
        # 2x2 lattice with cell volume 0.25.
        sea = build_sea(config(mass=1.0, box=1.0, K=0, nt=2, nx=2, t0=0.0, t1=0.5))
        out = pushforward_measure(sea)
        assert out.measure.total_volume == pytest.approx(0.5 * 1.0, rel=1e-12)
        assert all(
            0 <= idx < len(out.measure) for idx in out.point_index.values()
        )

    def test_homogeneous_merges(self):
        # K=0 gives an x- and t-independent correlation operator: all four
        # lattice cells merge onto one measure point.
        sea = build_sea(config(mass=1.0, box=1.0, K=0, nt=2, nx=2, t0=0.0, t1=2.0))
        out = pushforward_measure(sea)
        assert len(out.measure) == 1
        assert out.measure.weights[0] == pytest.approx(2.0)

    def test_distinct_points_not_merged(self):
        sea = build_sea(config(K=2, nt=2, nx=6))
        out = pushforward_measure(sea)
        assert len(out.measure) > 1

    def test_causal_sanity_experiment_runs(self):
        # Recorded, not asserted:荷 classification of spatially dominated
        # separations at finite cutoff.
        sea = build_sea(config(K=2, nt=2, nx=6, t0=0.0, t1=0.2))
        out = pushforward_measure(sea)
        keys = list(out.point_index)
        (t1, x1), (t2, x2) = keys[0], keys[3]
        a = out.measure.points[out.point_index[(t1, x1)]]
        b = out.measure.points[out.point_index[(t2, x2)]]
        cls = classify(a, b)
        assert cls.value in {"spacelike", "timelike", "lightlike"}

    def test_nonzero_eigenvalue_report(self):
        sea = build_sea(config())
        p = local_correlation(sea, sea.times[0], sea.sites[0])
        neg, pos = nonzero_eigenvalues(p)
        assert neg <= 0 <= pos
