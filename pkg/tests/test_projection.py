"""Projection engine: elementary projectors, the intersection solver, its
KKT certificate, and agreement with the independent penalty oracle."""

import numpy as np
import pytest

from safectrl.errors import InvalidParams, ZeroNormal
from safectrl.gainset import GainSet, membership
from safectrl.projection import (ProjectionConfig, feasibility_probe,
                                 kkt_residual, project_gain_set,
                                 project_halfspace, project_row_norm,
                                 project_spectral_ball)

from oracles import penalty_projection, random_small_gain_set


class TestProjectHalfspace:
    def test_orthogonal_drop(self):
        k = np.eye(2)
        g = np.array([[1.0, 0.0], [0.0, 0.0]])
        out = project_halfspace(k, g, 0.0)
        assert np.allclose(out, [[0, 0], [0, 1]])

    def test_feasible_unchanged(self):
        k = np.eye(2)
        out = project_halfspace(k, np.ones((2, 2)), 10.0)
        assert np.array_equal(out, k)

    def test_scalar_formula(self):
        out = project_halfspace(np.array([[2.0]]), np.array([[1.0]]), 1.0)
        assert np.allclose(out, [[1.0]])

    def test_idempotent_and_feasible(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = rng.normal(size=(2, 3))
            g = rng.normal(size=(2, 3))
            b = rng.normal()
            p1 = project_halfspace(k, g, b)
            assert float(np.sum(g * p1)) <= b + 1e-12
            assert np.allclose(project_halfspace(p1, g, b), p1, atol=1e-12)

    def test_zero_normal_raises(self):
        with pytest.raises(ZeroNormal):
            project_halfspace(np.eye(2), np.zeros((2, 2)), 0.0)


class TestProjectSpectralBall:
    def test_clip_one_value(self):
        out = project_spectral_ball(np.diag([2.0, 0.5]), 1.0)
        assert np.allclose(out, np.diag([1.0, 0.5]))

    def test_inside_identity(self):
        k = 0.3 * np.eye(3)
        assert np.array_equal(project_spectral_ball(k, 1.0), k)

    def test_negative_radius_raises(self):
        with pytest.raises(InvalidParams):
            project_spectral_ball(np.eye(2), -1.0)

    def test_grid_oracle_2x2(self):
        # coarse nearest-feasible grid search on a 2x2 instance
        rng = np.random.default_rng(1)
        k = rng.normal(size=(2, 2))
        proj = project_spectral_ball(k, 1.0)
        step = 0.1
        axis = np.arange(-1.5, 1.5 + step, step)
        grid = np.stack(np.meshgrid(axis, axis, axis, axis,
                                    indexing="ij"), axis=-1)
        cand = grid.reshape(-1, 2, 2)
        svals = np.linalg.svd(cand, compute_uv=False)[:, 0]
        cand = cand[svals <= 1.0]
        dists = np.linalg.norm(cand - k, axis=(1, 2))
        best = cand[dists.argmin()]
        assert np.linalg.norm(proj - k) <= dists.min() + 1e-9
        assert np.linalg.norm(proj - best) <= 2 * step

    def test_operator_norm_bound(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            k = rng.normal(size=(3, 4)) * 3
            out = project_spectral_ball(k, 1.5)
            assert np.linalg.norm(out, 2) <= 1.5 + 1e-12


class TestProjectRowNorm:
    def test_shrinks_to_boundary(self):
        k = np.array([[3.0, 0.0], [0.0, 1.0]])
        v = np.array([1.0, 0.0])
        out = project_row_norm(k, v, 1.0)
        assert np.linalg.norm(out.T @ v) == pytest.approx(1.0)
        assert np.allclose(out[1], k[1])

    def test_feasible_unchanged(self):
        k = np.array([[0.5, 0.0]])
        assert np.array_equal(project_row_norm(k, np.array([1.0]), 1.0), k)


class TestProjectGainSet:
    def test_member_is_fixed_point(self):
        gs = GainSet(spectral_cap=2.0)
        res = project_gain_set(gs, np.eye(2))
        assert res.iterations == 0 and res.distance == 0.0

    def test_scalar_interval(self):
        # [0.5, 1.5] realized as contraction |1 - K| <= 0.5 with cap 3
        gs = GainSet(spectral_cap=3.0,
                     contraction=(np.array([[1.0]]), np.array([[1.0]]), 0.5))
        res = project_gain_set(gs, np.array([[3.0]]))
        assert res.point == pytest.approx(np.array([[1.5]]), abs=1e-8)

    def test_oracle_agreement_small_sets(self):
        rng = np.random.default_rng(3)
        for trial in range(25):
            gs = random_small_gain_set(rng, weighted=(trial % 5 == 4))
            d_u, d_x = gs.contraction[1].shape[1], gs.contraction[0].shape[0]
            k_prime = rng.normal(size=(d_u, d_x)) * 2.0
            res = project_gain_set(gs, k_prime)
            oracle = penalty_projection(gs, k_prime)
            assert np.linalg.norm(res.point - oracle) <= 1e-6, trial

    def test_idempotence(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            gs = random_small_gain_set(rng)
            d_u, d_x = gs.contraction[1].shape[1], gs.contraction[0].shape[0]
            k_prime = rng.normal(size=(d_u, d_x)) * 2.0
            p1 = project_gain_set(gs, k_prime).point
            p2 = project_gain_set(gs, p1).point
            assert np.linalg.norm(p1 - p2) <= 1e-9

    def test_non_expansiveness(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            gs = random_small_gain_set(rng)
            d_u, d_x = gs.contraction[1].shape[1], gs.contraction[0].shape[0]
            k1 = rng.normal(size=(d_u, d_x)) * 2.0
            k2 = rng.normal(size=(d_u, d_x)) * 2.0
            p1 = project_gain_set(gs, k1).point
            p2 = project_gain_set(gs, k2).point
            assert (np.linalg.norm(p1 - p2)
                    <= np.linalg.norm(k1 - k2) + 1e-9)

    def test_membership_and_certificate(self):
        cfg = ProjectionConfig()
        rng = np.random.default_rng(6)
        for _ in range(50):
            gs = random_small_gain_set(rng)
            d_u, d_x = gs.contraction[1].shape[1], gs.contraction[0].shape[0]
            res = project_gain_set(gs, rng.normal(size=(d_u, d_x)) * 3.0, cfg)
            ok, _ = membership(gs, res.point, cfg.feasibility_slack)
            assert ok
            assert res.kkt_residual <= cfg.kkt_tol


class TestKktResidual:
    def test_zero_move_zero_residual(self):
        gs = GainSet(spectral_cap=1.0)
        assert kkt_residual(gs, 0.5 * np.eye(2), 0.5 * np.eye(2)) == 0.0

    def test_spectral_cap_certificate(self):
        gs = GainSet(spectral_cap=1.0)
        k_prime = np.diag([2.0, 0.5])
        k = np.diag([1.0, 0.5])
        assert kkt_residual(gs, k_prime, k) <= 1e-10

    def test_wrong_point_flagged(self):
        gs = GainSet(spectral_cap=1.0)
        k_prime = np.diag([2.0, 0.5])
        wrong = np.diag([1.0, 0.2])     # feasible but not the projection
        assert kkt_residual(gs, k_prime, wrong) > 1e-3


class TestFeasibilityProbe:
    def test_cap_only_witness_zero(self):
        gs = GainSet(spectral_cap=2.0,
                     contraction=(np.zeros((2, 2)), np.eye(2), 0.9))
        feasible, witness = feasibility_probe(gs)
        assert feasible and np.allclose(witness, 0.0)

    def test_scalar_interval_witness(self):
        gs = GainSet(spectral_cap=3.0,
                     contraction=(np.array([[1.0]]), np.array([[1.0]]), 0.5))
        feasible, witness = feasibility_probe(gs)
        assert feasible and 0.5 - 1e-9 <= witness[0, 0] <= 1.5 + 1e-9

    def test_contradictory_halfspaces_infeasible(self):
        # K <= -1 and K >= 1 in scalar form
        gs = GainSet(halfspaces=((np.array([[1.0]]), -1.0),
                                 (np.array([[-1.0]]), -1.0)),
                     spectral_cap=10.0)
        feasible, witness = feasibility_probe(gs)
        assert not feasible and witness is None


class TestProjectionConfig:
    def test_validation(self):
        with pytest.raises(InvalidParams):
            ProjectionConfig(kkt_tol=0.0)
        with pytest.raises(InvalidParams):
            ProjectionConfig(max_iters=0)
