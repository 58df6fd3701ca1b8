import math

import numpy as np
import pytest

from sketchsearch.belief import (
    DegenerateWeights,
    ParticleBelief,
    ess,
    reweight,
    systematic_resample,
)
from sketchsearch.pipeline import compile_sketch
from sketchsearch.planner import Codebook, register_sketch
from sketchsearch.queries import ANSWER_YES, NEAR, Query, Statement
from sketchsearch.world import (
    OFF_ROAD,
    ON_ROAD,
    TerrainGrid,
    WorldParams,
    default_network,
    random_road_state,
    state_to_arrays,
    step_target,
)

PARAMS = WorldParams()


@pytest.fixture(scope="module")
def net():
    return default_network()


@pytest.fixture()
def codebook(net):
    cb = Codebook()
    grid = TerrainGrid()
    sq = np.array([[450.0, 350.0], [550.0, 350.0], [550.0, 450.0], [450.0, 450.0]])
    register_sketch(cb, compile_sketch("Pond", sq, 1.0), grid)
    return cb


class TestSharedDynamics:
    def test_predict_matches_ground_truth_stepper(self, net):
        """The filter and the world advance states through the same kernel."""
        seed = 2718
        t0 = random_road_state(net, np.random.default_rng(1))
        grid = TerrainGrid()

        truth_rng = np.random.default_rng(seed)
        state = t0
        truth_path = []
        for _ in range(50):
            state = step_target(state, 1.0, grid, net, truth_rng, PARAMS)
            truth_path.append((state.x, state.y, state.mode))

        filt_rng = np.random.default_rng(seed)
        belief = ParticleBelief(states=state_to_arrays(t0), weights=np.array([1.0]))
        filt_path = []
        for _ in range(50):
            belief.predict(1.0, grid, net, filt_rng, PARAMS)
            filt_path.append((float(belief.states.pos[0, 0]),
                              float(belief.states.pos[0, 1]),
                              int(belief.states.mode[0])))
        assert truth_path == filt_path

    def test_zero_dt_identity(self, net):
        rng = np.random.default_rng(2)
        b = ParticleBelief.uniform_on_roads(net, 200, rng)
        before = b.states.pos.copy()
        b.predict(0.0, TerrainGrid(), net, rng, PARAMS)
        assert np.array_equal(before, b.states.pos)

    def test_onroad_mean_displacement(self, net):
        params = WorldParams(mode_stay_prob=1.0)
        rng = np.random.default_rng(3)
        b = ParticleBelief.uniform_on_roads(net, 5000, rng)
        start = b.states.pos.copy()
        for _ in range(10):
            b.predict(1.0, TerrainGrid(), net, rng, params)
        # per-tick displacement magnitude ~ N(20, 5); path bends lower the
        # euclidean distance, so check the first-step magnitude instead
        b2 = ParticleBelief.uniform_on_roads(net, 5000, np.random.default_rng(4))
        s2 = b2.states.pos.copy()
        b2.predict(1.0, TerrainGrid(), net, np.random.default_rng(5), params)
        d = np.hypot(*(b2.states.pos - s2).T)
        assert abs(d.mean() - 20.0) < 3 * 5.0 / math.sqrt(5000) + 0.3


class TestWeighting:
    def test_weights_sum_to_one_after_updates(self, net, codebook):
        rng = np.random.default_rng(6)
        b = ParticleBelief.uniform_on_roads(net, 2000, rng)
        for obs in ("none", "none", "detected"):
            b.weight_and_resample(obs, "null", None, (500.0, 400.0), 0.5, codebook,
                                  0.95, net, rng, PARAMS)
            assert b.weights.sum() == pytest.approx(1.0, abs=1e-9)
            assert len(b) == 2000

    def test_null_answer_changes_nothing(self, net, codebook):
        rng = np.random.default_rng(7)
        b = ParticleBelief.uniform_on_roads(net, 1000, rng)
        before = b.weights.copy()
        # robot far away so every particle is out of the cone: likelihood 1
        b.weight_and_resample("none", "null", Query(NEAR, "Pond"), (-5000.0, -5000.0),
                              0.0, codebook, 0.95, net, rng, PARAMS)
        assert np.allclose(b.weights, before)

    def test_yes_to_near_increases_near_mass(self, net, codebook):
        rng = np.random.default_rng(8)
        b = ParticleBelief.uniform_on_roads(net, 4000, rng)
        sk = codebook.sketches["Pond"]
        near = sk.range_model.near_probability(b.states.pos) > 0.5
        before = float(b.weights[near].sum())
        b.weight_and_resample("none", ANSWER_YES, Query(NEAR, "Pond"),
                              (-5000.0, -5000.0), 0.0, codebook, 0.95, net, rng, PARAMS)
        near2 = sk.range_model.near_probability(b.states.pos) > 0.5
        after = float(b.weights[near2].sum())
        assert after > before

    def test_detected_zeroes_out_of_cone(self, net, codebook):
        rng = np.random.default_rng(9)
        b = ParticleBelief.uniform_on_roads(net, 3000, rng)
        robot = (500.0, 500.0)
        b.weight_and_resample("detected", "null", None, robot, 0.0, codebook,
                              0.95, net, rng, PARAMS)
        rel = b.states.pos - np.asarray(robot)
        ang = np.abs((np.arctan2(rel[:, 1], rel[:, 0]) + math.pi) % (2 * math.pi) - math.pi)
        outside = ang > PARAMS.cone_half_angle
        assert float(b.weights[outside].sum()) == pytest.approx(0.0, abs=1e-12)

    def test_mode_probability(self, net):
        rng = np.random.default_rng(10)
        b = ParticleBelief.uniform_on_roads(net, 1000, rng)
        assert b.mode_probability(ON_ROAD) == pytest.approx(1.0)
        b.states.mode[:500] = OFF_ROAD
        assert b.mode_probability(OFF_ROAD) == pytest.approx(0.5)
        assert b.mode_probability(ON_ROAD) + b.mode_probability(OFF_ROAD) == pytest.approx(1.0)

    def test_offroad_answer_raises_offroad_probability(self, net, codebook):
        from sketchsearch.queries import MODE_QUERY

        rng = np.random.default_rng(11)
        b = ParticleBelief.uniform_on_roads(net, 2000, rng)
        b.states.mode[:400] = OFF_ROAD
        p0 = b.mode_probability(OFF_ROAD)
        b.weight_and_resample("none", ANSWER_YES, MODE_QUERY, (-5000.0, -5000.0),
                              0.0, codebook, 0.95, net, rng, PARAMS)
        assert b.mode_probability(OFF_ROAD) > p0


class TestStatements:
    def test_inside_statement_with_no_inside_mass_degenerates(self, net, codebook):
        rng = np.random.default_rng(12)
        b = ParticleBelief.uniform_on_roads(net, 500, rng)
        # move every particle away from the sketch
        b.states.pos[:] = np.array([50.0, 900.0])
        b.fuse_statement(Statement(True, "Inside", "Pond"), codebook, net, rng)
        assert b.degenerate_events == 1
        assert b.weights.sum() == pytest.approx(1.0, abs=1e-9)
        # fallback prior restores the configured on-road share
        assert b.mode_probability(ON_ROAD) == pytest.approx(0.8, abs=0.05)

    def test_not_inside_suppresses_inside_mass(self, net, codebook):
        from sketchsearch.geometry import contains_many

        rng = np.random.default_rng(13)
        b = ParticleBelief.uniform_on_roads(net, 4000, rng)
        b.resample_threshold = 0.0
        sk = codebook.sketches["Pond"]
        inside = contains_many(sk.polygon, b.states.pos)
        if not inside.any():
            b.states.pos[:100] = np.asarray(sk.centroid)
            inside = contains_many(sk.polygon, b.states.pos)
        b.fuse_statement(Statement(False, "Inside", "Pond"), codebook, net, rng)
        assert float(b.weights[inside].sum()) == pytest.approx(0.0, abs=1e-12)

    def test_statement_then_negation_algebra(self, net, codebook):
        rng = np.random.default_rng(14)
        b = ParticleBelief.uniform_on_roads(net, 1000, rng)
        b.resample_threshold = 0.0  # keep weights analytic
        from sketchsearch.queries import statement_likelihood

        # two co-located particles (equal likelihood) with distinct weights
        sk = codebook.sketches["Pond"]
        cx, cy = sk.centroid
        b.states.pos[0] = b.states.pos[1] = (cx + 180.0, cy + 140.0)
        b.weights[0], b.weights[1] = 0.003, 0.001
        b.weights /= b.weights.sum()
        w0 = b.weights.copy()

        pos = Statement(True, "North", "Pond")
        neg = Statement(False, "North", "Pond")
        lik = statement_likelihood(pos, b.states.pos, codebook)
        b.fuse_statement(pos, codebook, net, rng)
        b.fuse_statement(neg, codebook, net, rng)
        expect = w0 * lik * (1.0 - lik)
        expect /= expect.sum()
        assert np.abs(b.weights - expect).max() < 1e-12
        # complementary fusion cancels: the pair's prior ratio comes back
        r_prior = w0[0] / w0[1]
        r_post = b.weights[0] / b.weights[1]
        assert abs(r_post - r_prior) < 1e-6

    def test_unknown_reference_raises(self, net, codebook):
        from sketchsearch.queries import UnknownReference

        rng = np.random.default_rng(15)
        b = ParticleBelief.uniform_on_roads(net, 100, rng)
        with pytest.raises(UnknownReference):
            b.fuse_statement(Statement(True, "Near", "Atlantis"), codebook, net, rng)


class TestResampling:
    def test_systematic_preserves_big_weights(self):
        rng = np.random.default_rng(16)
        w = np.array([0.7, 0.1, 0.1, 0.05, 0.05])
        idx = systematic_resample(w, rng)
        assert (idx == 0).sum() >= 3

    def test_ess_uniform(self):
        assert ess(np.full(100, 0.01)) == pytest.approx(100.0)

    def test_reweight_triggers_resample_below_half_ess(self):
        rng = np.random.default_rng(17)
        w = np.full(100, 0.01)
        lik = np.zeros(100)
        lik[:5] = 1.0
        w2, idx = reweight(w, lik, rng, 0.5)
        assert idx is not None
        assert np.allclose(w2, 0.01)
        assert set(idx.tolist()) <= set(range(5))

    def test_reweight_degenerate_raises(self):
        rng = np.random.default_rng(18)
        with pytest.raises(DegenerateWeights):
            reweight(np.full(10, 0.1), np.zeros(10), rng)


class TestGridOracle:
    """Particle machinery vs exact Bayes on a discretized 10x10 instance."""

    def test_total_variation_bound(self):
        from helpers import grid_oracle_max_tv

        assert grid_oracle_max_tv(100_000, 20, seed=99) <= 0.05


class TestTelemetry:
    def test_downsample_cap(self, net):
        rng = np.random.default_rng(20)
        b = ParticleBelief.uniform_on_roads(net, 3000, rng)
        pts = b.downsample(500, rng)
        assert len(pts) <= 500
        small = ParticleBelief.uniform_on_roads(net, 120, rng)
        assert len(small.downsample(500, rng)) == 120
