import numpy as np
import pytest

from hamlink.core import PeriodicSequence
from hamlink.functional import i_value, make_context, quadratic_part_matrix
from hamlink.potential import Sampling, table_potential, zero_potential
from hamlink.solver import (
    SolverConfig,
    SolverError,
    ascent_runs,
    classify,
    dedupe_orbits,
    find_critical_points,
    make_record,
    maximize_I,
    morse_info,
    morse_of_matrix,
    orbit_representatives,
    sigma_for,
    two_solution_certificate,
    verify_linking_geometry,
)
from hamlink.spectral import lambda_min

C0 = 256.6504203595796


@pytest.fixture(scope="module")
def runs(ctx6):
    return ascent_runs(ctx6, SolverConfig())


@pytest.fixture(scope="module")
def records(ctx6, runs):
    return find_critical_points(ctx6, SolverConfig(), runs)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs", [{"restarts": 1}, {"seed": -1}, {"grad_tol": 0}, {"max_iters": 0}, {"shrink": 1.0}, {"init_radius": 0}]
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv("HAMLINK_THREADS", "3")
        assert SolverConfig().n_workers() == 3
        assert SolverConfig(workers=2).n_workers() == 2


class TestMaximize:
    def test_positive_nonconstant_maximizer(self, ctx6, runs):
        rec = maximize_I(ctx6, SolverConfig(), runs)
        assert rec.value > 0 and rec.classification == "nonconstant"
        assert rec.grad_norm <= 1e-8
        assert rec.value == pytest.approx(C0, rel=1e-10)
        assert rec.morse.index == 6 - rec.morse.near_null

    def test_maximizer_is_local_max_by_sampling(self, ctx6, runs, rng):
        x = maximize_I(ctx6, SolverConfig(), runs).point.values
        v = i_value(x, ctx6)
        for _ in range(500):
            d = rng.standard_normal(6)
            assert i_value(x + 1e-3 * d / np.linalg.norm(d), ctx6) <= v

    def test_sup_dominates_random_samples(self, ctx6, rng):
        pts = rng.standard_normal((20000, 6)) * rng.uniform(0, 8, (20000, 1))
        assert max(i_value(p, ctx6) for p in pts[:2000]) <= C0 + 1e-9

    def test_ascent_histories_are_monotone(self, runs):
        for run in runs:
            h = np.asarray(run.history)
            assert np.all(np.diff(h) >= -1e-9 * (1 + np.abs(h[1:])))

    def test_zero_potential_is_unbounded(self):
        ctx = make_context(6, 0.01, 3.0, zero_potential(6), d2=0.001)
        with pytest.raises(SolverError):
            maximize_I(ctx, SolverConfig(restarts=4, max_iters=200))


class TestCriticalPoints:
    def test_two_nontrivial_orbits_plus_origin(self, records):
        trivial = [r for r in records if r.classification == "trivial"]
        assert len(trivial) == 1 and trivial[0].value == 0
        assert np.all(trivial[0].point.values == 0)
        reps = [r for r in orbit_representatives(records) if r.classification == "nonconstant" and r.value > 0]
        assert len(reps) >= 2
        for r in records:
            assert r.grad_norm <= 1e-8
            assert abs(r.residual.at_n0) <= 1e-6
        for i, a in enumerate(reps):
            for b in reps[i + 1 :]:
                for img in (b.point.values, -b.point.values):
                    assert np.linalg.norm(a.point.values - img) > 1e-4

    def test_regression_values(self, records):
        values = sorted({round(r.value, 6) for r in records}, reverse=True)
        assert values == [256.65042, 247.943893, 223.346244, 10.763952, 10.638274, 8.894358, 0.0]

    def test_sorted_by_value(self, records):
        vals = [r.value for r in records]
        assert vals == sorted(vals, reverse=True)

    def test_discovery_is_monotone_in_restarts(self, ctx6):
        small = find_critical_points(ctx6, SolverConfig(restarts=8))
        large = find_critical_points(ctx6, SolverConfig(restarts=16))
        for r in small:
            assert any(np.linalg.norm(r.point.values - q.point.values) < 1e-4 for q in large)

    def test_worker_count_does_not_change_results(self, ctx6):
        a = find_critical_points(ctx6, SolverConfig(restarts=8, workers=1))
        b = find_critical_points(ctx6, SolverConfig(restarts=8, workers=4))
        assert [r.point for r in a] == [r.point for r in b]
        assert [r.value for r in a] == [r.value for r in b]


class TestMorse:
    def test_origin_matches_closed_form(self, ctx6):
        info = morse_info(np.zeros(6), ctx6)
        w = np.linalg.eigvalsh(2 * quadratic_part_matrix(ctx6))
        assert info.index == int(np.sum(w < -1e-7))
        assert info.near_null == int(np.sum(np.abs(w) <= 1e-7))
        assert (info.index, info.near_null) == (1, 1)

    def test_shift_sanity(self, ctx6, rng):
        h = rng.standard_normal((6, 6))
        h = h + h.T
        shifted = h - (np.abs(np.linalg.eigvalsh(h)).max() + 10) * np.eye(6)
        assert morse_of_matrix(shifted).index == 6
        assert morse_of_matrix(-shifted).index == 0

    def test_caveat_for_small_beta(self):
        ctx = make_context(6, 1.0, 2.5)
        assert morse_info(np.zeros(6), ctx).caveat


class TestDedupe:
    def test_negation_merges(self, ctx6, records):
        r = next(r for r in records if r.classification == "nonconstant")
        a, b = make_record(r.point.values, ctx6), make_record(-r.point.values, ctx6)
        out = dedupe_orbits([a, b], ctx6.potential)
        assert out[0].orbit_id == out[1].orbit_id == 0

    def test_shifts_merge_only_certified_solutions(self):
        # F = (λ₁/2)·y² makes u_n = cos(2πn/6) an exact solution of the system
        lam = lambda_min(6)
        f = table_potential({"period": 6, "terms": [{"arg": "y", "kind": "square", "coeff": lam / 2}]})
        ctx = make_context(6, 1.0, 3.0, f)
        u = PeriodicSequence(np.cos(2 * np.pi * np.arange(1, 7) / 6))
        a, b = make_record(u.values, ctx), make_record(u.shift(1).values, ctx)
        assert a.residual.max_abs <= 1e-12 and b.residual.max_abs <= 1e-12
        out = dedupe_orbits([a, b], f)
        assert out[0].orbit_id == out[1].orbit_id
        # the same pair without residual certification stays apart
        out = dedupe_orbits([a, b], f, residual_tol=-1.0)
        assert out[0].orbit_id != out[1].orbit_id
        # a non-autonomous declaration also keeps them apart
        out = dedupe_orbits([a, b], f, autonomous=False)
        assert out[0].orbit_id != out[1].orbit_id

    def test_distinct_points_stay_apart(self, ctx6):
        a = make_record(np.array([1.0, 0, 0, 0, 0, 0]), ctx6)
        b = make_record(np.array([0, 2.0, 0, 0, 0, 0]), ctx6)
        assert [r.orbit_id for r in dedupe_orbits([a, b], ctx6.potential)] == [0, 1]

    def test_representative_is_lexicographically_smallest(self, ctx6):
        u = np.array([1.0, -2.0, 0.5, 0, 0, 3.0])
        recs = dedupe_orbits([make_record(u, ctx6), make_record(-u, ctx6)], ctx6.potential)
        (rep,) = orbit_representatives(recs)
        assert tuple(rep.point.values) == tuple(-u)

    def test_classify(self):
        assert classify(np.zeros(6)) == "trivial"
        assert classify(np.full(6, 2.0)) == "constant-nonzero"
        assert classify(np.arange(6.0)) == "nonconstant"


class TestLinking:
    def test_example31_geometry(self, ctx6):
        rep = verify_linking_geometry(ctx6, SolverConfig(), samples=1000)
        assert rep.sigma == pytest.approx(0.5 * ctx6.rho**2)
        assert rep.a1_min_on_sphere >= rep.sigma - 1e-9
        assert rep.a2_max_on_boundary <= 1e-9
        assert rep.r_outer_plus is not None and rep.r_outer_minus is not None
        assert rep.a1_ok and rep.a2_ok and rep.ok
        assert rep.z_max <= 1e-9

    def test_sigma_formula(self):
        assert sigma_for(1.0, 0.5) == 0.125

    def test_i_nonpositive_on_z(self, ctx6, rng):
        for _ in range(1000):
            c = rng.standard_normal(2) * 10 ** rng.uniform(-3, 3)
            assert i_value(c @ ctx6.spectral.basis_z, ctx6) <= 1e-9


class TestCertificate:
    def test_example31_certified(self, ctx6):
        cert = two_solution_certificate(ctx6, SolverConfig())
        assert cert.verdict == "certified", cert.failures
        assert len({r.orbit_id for r in cert.qualifying}) >= 2
        assert cert.c0 == pytest.approx(C0, rel=1e-10)
        assert cert.case in ("c = c0", "c != c0")
        for conv in cert.residuals.values():
            assert set(conv) == {"pointwise", "summed-action"}

    def test_plus_y_cubed_fails_at_d3(self):
        f = table_potential({"period": 6, "terms": [{"arg": "y", "kind": "abspow", "coeff": 1.0, "power": 3}]})
        ctx = make_context(6, 1.0, 3.0, f)
        cert = two_solution_certificate(ctx, SolverConfig(restarts=4, max_iters=100), Sampling(d3_points=64))
        assert cert.verdict == "fail"
        assert "hypotheses:D3" in cert.failures
