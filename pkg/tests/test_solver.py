import warnings

import numpy as np
import pytest

from sbsol import (DomainSpec, ModelSpec, PotentialSpec, ScalarField,
                   SolverConfig, State, build_grid, c_map, default_init,
                   find_peaks, quartic_form, quotient_objective,
                   solve_ground_state, solve_whole_space)
from sbsol.errors import InitFailed, NoBoxConvergence, NotProjectable


def constant_model(beta=1.0, mu1=0.0, mu2=0.0, m=1, eps=1.0, half_width=20.0,
                   dim=1, lam=1.0, kind="box"):
    extents = (half_width,) if kind == "ball" else (half_width,) * dim
    dom = DomainSpec(kind, dim, extents)
    return ModelSpec(eps, beta, mu1, mu2, m, PotentialSpec.constant(lam),
                     PotentialSpec.constant(lam), dom)


@pytest.fixture(scope="module")
def oracle_report():
    mdl = constant_model()
    return mdl, solve_ground_state(mdl, SolverConfig(), nodes_per_axis=801)


class TestDefaultInit:
    def test_plain_coupling_accepts_alpha_one(self):
        mdl = constant_model(beta=1.0)
        g = build_grid(mdl.domain, 201)
        s = default_init(mdl, SolverConfig(), g)
        np.testing.assert_array_equal(s.u.values, s.v[0].values)
        assert quartic_form(s, mdl) > 0.0

    def test_uncoupled_fails(self):
        mdl = constant_model(beta=0.0)
        g = build_grid(mdl.domain, 201)
        with pytest.raises(InitFailed):
            default_init(mdl, SolverConfig(), g)

    def test_self_repulsive_supercritical_accepted(self):
        mdl = constant_model(beta=2.0, mu1=-1.0, mu2=-1.0)
        g = build_grid(mdl.domain, 201)
        s = default_init(mdl, SolverConfig(), g)
        assert quartic_form(s, mdl) > 0.0

    def test_subcritical_refused_without_override(self):
        mdl = constant_model(beta=0.5, mu1=-1.0, mu2=-1.0)
        g = build_grid(mdl.domain, 201)
        with pytest.raises(InitFailed):
            default_init(mdl, SolverConfig(), g)
        # override still ends in InitFailed, after honest trials
        with pytest.raises(InitFailed):
            default_init(mdl, SolverConfig(allow_subcritical=True), g)

    def test_bump_tracks_potential_minimum(self):
        dom = DomainSpec("box", 1, (4.0,))
        mdl = ModelSpec(0.2, 2.0, -0.2, -0.2, 1,
                        PotentialSpec.harmonic((1.0,), (1.0,), lam=1.0),
                        PotentialSpec.harmonic((1.0,), (1.0,), lam=1.0), dom)
        g = build_grid(dom, 401)
        s = default_init(mdl, SolverConfig(), g)
        peak = g.coords[int(np.argmax(s.u.values)), 0]
        assert peak == pytest.approx(1.0, abs=2 * g.spacing[0])


class TestSolveGroundState:
    def test_soliton_oracle(self, oracle_report):
        mdl, rep = oracle_report
        assert rep.converged
        assert rep.residual_norm <= 1e-6
        assert rep.c == pytest.approx(8.0 / 3.0, rel=1e-3)
        pk = find_peaks(rep.state, mdl)
        x = rep.state.grid.coords[:, 0]
        oracle = np.sqrt(2.0) / np.cosh(x - pk.P[0])
        assert np.abs(rep.state.u.values - oracle).max() <= 1e-3
        assert np.abs(rep.state.u.values - rep.state.v[0].values).max() <= 1e-6

    def test_report_invariants(self, oracle_report):
        _, rep = oracle_report
        f = rep.forms
        assert abs(f.G) <= 1e-10 * f.A
        assert rep.c == pytest.approx(f.A / 4.0, rel=1e-10)
        assert np.all(rep.state.u.values >= 0.0)
        assert np.all(rep.state.v[0].values >= 0.0)

    def test_merit_monotone(self, oracle_report):
        _, rep = oracle_report
        e = [row[1] for row in rep.history]
        for a, b in zip(e, e[1:]):
            assert b <= a + 1e-12 * abs(a)

    def test_quotient_local_min_under_perturbations(self, oracle_report):
        mdl, rep = oracle_report
        g = rep.state.grid
        rng = np.random.default_rng(17)
        j_star = quotient_objective(rep.state, mdl)
        scale = 1e-3 * rep.state.u.values.max()
        for _ in range(10):
            du = ScalarField(g, scale * rng.standard_normal(g.interior_count))
            dv = ScalarField(g, scale * rng.standard_normal(g.interior_count))
            pert = State(rep.state.u + du, (rep.state.v[0] + dv,))
            assert quartic_form(pert, mdl) > 0.0
            assert quotient_objective(pert, mdl) >= j_star - 1e-8

    def test_uncoupled_produces_no_state(self):
        mdl = constant_model(beta=0.0)
        with pytest.raises((InitFailed, NotProjectable)):
            solve_ground_state(mdl, SolverConfig(), nodes_per_axis=201)

    def test_warm_start_from_projected_oracle(self, oracle_report):
        mdl, rep = oracle_report
        again = solve_ground_state(mdl, SolverConfig(), init=rep.state)
        assert again.converged
        assert again.iterations <= 20
        assert again.c == pytest.approx(rep.c, rel=1e-10)

    def test_deterministic_reruns(self):
        mdl = constant_model(beta=2.0, mu1=-0.5, mu2=-0.5, half_width=10.0)
        a = solve_ground_state(mdl, SolverConfig(), nodes_per_axis=201)
        b = solve_ground_state(mdl, SolverConfig(), nodes_per_axis=201)
        assert a.c == b.c
        np.testing.assert_array_equal(a.state.u.values, b.state.u.values)
        assert a.history == b.history

    def test_max_iters_reports_unconverged(self):
        mdl = constant_model(beta=2.0, mu1=-0.5, mu2=-0.5, half_width=10.0)
        rep = solve_ground_state(mdl, SolverConfig(max_iters=3),
                                 nodes_per_axis=201)
        assert not rep.converged

    def test_m2_symmetric_components(self):
        mdl = constant_model(beta=2.0, mu1=-0.5, mu2=-0.5, m=2,
                             half_width=10.0)
        rep = solve_ground_state(mdl, SolverConfig(), nodes_per_axis=201)
        assert rep.converged
        np.testing.assert_array_equal(rep.state.v[0].values,
                                      rep.state.v[1].values)


class TestWholeSpace:
    def test_doubling_settles_on_soliton(self):
        mdl = constant_model(half_width=10.0)
        cfg = SolverConfig(box_doubling=True)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = solve_whole_space(mdl, cfg, nodes_per_axis=201)
        sizes = [s for s, _ in rep.box_sequence]
        cs = [c for _, c in rep.box_sequence]
        assert sizes[:2] == [10.0, 20.0]
        for a, b in zip(cs, cs[1:]):
            assert b <= a + 1e-9 * abs(a)
        assert abs(cs[-1] - cs[-2]) <= 1e-6 * abs(cs[-2])
        assert cs[-1] == pytest.approx(8.0 / 3.0, rel=1e-3)

    def test_trap_converges_in_one_doubling(self):
        dom = DomainSpec("box", 1, (10.0,))
        mdl = ModelSpec(1.0, 1.0, 0.0, 0.0, 1,
                        PotentialSpec.harmonic((1.0,), (0.0,), lam=1.0),
                        PotentialSpec.harmonic((1.0,), (0.0,), lam=1.0), dom)
        rep = solve_whole_space(mdl, SolverConfig(box_doubling=True),
                                nodes_per_axis=201)
        assert len(rep.box_sequence) == 2
        # tail mass beyond the original box is negligible
        x = rep.state.grid.coords[:, 0]
        tail = rep.state.u.values[np.abs(x) > 10.0]
        assert float(np.sum(tail**2)) * rep.state.grid.cell_volume <= 1e-12

    def test_requires_flag(self):
        mdl = constant_model(half_width=10.0)
        with pytest.raises(ValueError):
            solve_whole_space(mdl, SolverConfig(), nodes_per_axis=201)

    def test_flat_potential_warns(self):
        mdl = constant_model(half_width=10.0)
        with pytest.warns(UserWarning):
            solve_whole_space(mdl, SolverConfig(box_doubling=True),
                              nodes_per_axis=201)

    def test_no_convergence_raises(self):
        mdl = constant_model(half_width=10.0)
        cfg = SolverConfig(box_doubling=True, box_tol=1e-30, max_doublings=1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(NoBoxConvergence):
                solve_whole_space(mdl, cfg, nodes_per_axis=201)


@pytest.fixture(scope="module")
def trap_model():
    dom = DomainSpec("box", 1, (4.0,))
    return ModelSpec(1.0, 1.0, 0.0, 0.0, 1,
                     PotentialSpec.harmonic((1.0,), (0.0,), lam=1.0),
                     PotentialSpec.harmonic((1.0,), (0.0,), lam=1.0), dom)


class TestCMap:
    def test_argmin_nearest_origin(self, trap_model):
        pts = [(x,) for x in np.linspace(-1.0, 1.0, 5)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = c_map(trap_model, pts, SolverConfig(), nodes_per_axis=161)
        assert res.argmin == (0.0,)
        cs = {e.point: e.c for e in res.entries}
        assert cs[(1.0,)] > cs[(0.5,)] > cs[(0.0,)]

    def test_constant_potentials_flat(self):
        mdl = constant_model(half_width=4.0)
        pts = [(x,) for x in np.linspace(-1.0, 1.0, 5)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = c_map(mdl, pts, SolverConfig(), nodes_per_axis=161)
        cs = [e.c for e in res.entries]
        assert (max(cs) - min(cs)) <= 1e-8 * abs(cs[0])
        # ties resolve to the lexicographically smallest point
        assert res.argmin == (-1.0,)

    def test_doubling_lambda_increases_c(self, trap_model):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = c_map(trap_model, [(0.0,), (1.0,)], SolverConfig(),
                        nodes_per_axis=161)
        # lam(1.0) = 2 = 2 * lam(0.0); c must strictly increase with V
        cs = {e.point: e.c for e in res.entries}
        assert cs[(1.0,)] > cs[(0.0,)]


class TestDomainMonotonicity:
    def test_ball_radius_doubling_changes_c_negligibly(self):
        # tails at radius 12 are ~e^{-12}; doubling the ball leaves c alone
        cfg = SolverConfig()
        cs = []
        for radius, nodes in ((12.0, 97), (24.0, 193)):
            mdl = constant_model(beta=2.0, mu1=-0.5, mu2=-0.5, dim=2,
                                 half_width=radius, kind="ball")
            rep = solve_ground_state(mdl, cfg, nodes_per_axis=nodes)
            assert rep.converged
            cs.append(rep.c)
        assert abs(cs[1] - cs[0]) <= 1e-6 * abs(cs[0])

    def test_c_nonincreasing_in_box_size(self):
        cfg = SolverConfig()
        cs = []
        for hw, nodes in ((6.0, 121), (12.0, 241)):
            mdl = constant_model(beta=2.0, mu1=-0.5, mu2=-0.5, half_width=hw)
            cs.append(solve_ground_state(mdl, cfg, nodes_per_axis=nodes).c)
        assert cs[1] <= cs[0] + 1e-9 * abs(cs[0])


class TestEpsilonScaling:
    def test_c_scales_with_eps(self):
        # same box, h refined with eps: the discrete problems rescale exactly
        cfg = SolverConfig()
        mdl1 = constant_model(eps=1.0, half_width=20.0)
        mdl2 = constant_model(eps=0.5, half_width=20.0)
        c1 = solve_ground_state(mdl1, cfg, nodes_per_axis=401).c
        c2 = solve_ground_state(mdl2, cfg, nodes_per_axis=801).c
        assert c2 / 0.5 == pytest.approx(c1, rel=1e-8)
