"""Exploration module: intrinsic reward, decay schedule, coverage grid."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from croprl import rnd
from croprl.errors import ContractViolation
from croprl.surrogate import OBS_DIM, ObservedEnv, florida_scenario


def make_nets(seed=0, obs_dim=OBS_DIM, **kw):
    cfg = rnd.RndConfig(**kw)
    return rnd.RndNets(obs_dim, cfg, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# lambda_int
# ---------------------------------------------------------------------------

def test_lambda_int_values():
    assert rnd.lambda_int(0.2) == 1.0
    assert rnd.lambda_int(0.29) == 1.0
    assert rnd.lambda_int(0.5) == pytest.approx(0.5, abs=1e-12)
    assert rnd.lambda_int(0.7) == 0.0
    assert rnd.lambda_int(0.9) == 0.0


def test_lambda_int_rejects_out_of_range():
    with pytest.raises(ContractViolation):
        rnd.lambda_int(-0.01)
    with pytest.raises(ContractViolation):
        rnd.lambda_int(1.01)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0))
def test_lambda_int_continuous_and_monotone(p):
    v = rnd.lambda_int(p)
    assert 0.0 <= v <= 1.0
    eps = 1e-9
    if p + eps <= 1.0:
        assert rnd.lambda_int(p + eps) <= v + 1e-6


def test_lambda_decay_completes_before_phase3_end():
    # decay end (0.7) sits above the full-augmentation boundary (0.6)
    assert rnd.lambda_int(0.7) == 0.0
    assert rnd.DECAY_END_P > 0.6


# ---------------------------------------------------------------------------
# intrinsic reward
# ---------------------------------------------------------------------------

def test_intrinsic_reward_zero_when_predictor_copies_target():
    nets = make_nets(1)
    nets.predictor = nets.target.copy()
    x = np.random.default_rng(2).normal(size=OBS_DIM)
    assert rnd.intrinsic_reward(nets, x) == 0.0


def test_intrinsic_reward_non_negative_and_distinct():
    nets = make_nets(3)
    g = np.random.default_rng(4)
    r1 = rnd.intrinsic_reward(nets, g.normal(size=OBS_DIM))
    r2 = rnd.intrinsic_reward(nets, g.normal(size=OBS_DIM))
    assert r1 >= 0.0 and r2 >= 0.0
    assert r1 != r2


def test_train_predictor_reduces_loss_on_fixed_state():
    nets = make_nets(5, hidden_units=32, embedding_dim=8)
    x = np.random.default_rng(6).normal(size=OBS_DIM)
    initial = rnd.intrinsic_reward(nets, x)
    for _ in range(500):
        rnd.train_predictor(nets, x[None, :])
    final = rnd.intrinsic_reward(nets, x)
    assert final < 0.01 * initial


def test_trained_state_less_novel_than_held_out():
    nets = make_nets(7, hidden_units=32, embedding_dim=8)
    g = np.random.default_rng(8)
    seen = g.normal(size=OBS_DIM)
    novel = g.normal(size=OBS_DIM)
    for _ in range(300):
        rnd.train_predictor(nets, seen[None, :])
    assert rnd.intrinsic_reward(nets, seen) < rnd.intrinsic_reward(nets, novel)


def test_train_predictor_rejects_empty_batch():
    nets = make_nets(9)
    with pytest.raises(ContractViolation):
        rnd.train_predictor(nets, np.empty((0, OBS_DIM)))


def test_target_network_frozen_by_training():
    nets = make_nets(10, hidden_units=16, embedding_dim=4)
    before = [p.tobytes() for p in nets.target.params()]
    g = np.random.default_rng(11)
    for _ in range(50):
        rnd.train_predictor(nets, g.normal(size=(8, OBS_DIM)))
    after = [p.tobytes() for p in nets.target.params()]
    assert before == after


def test_own_training_step_reduces_own_reward():
    nets = make_nets(12, hidden_units=16, embedding_dim=4)
    x = np.random.default_rng(13).normal(size=OBS_DIM)
    r_before = rnd.intrinsic_reward(nets, x)
    rnd.train_predictor(nets, x[None, :])
    assert rnd.intrinsic_reward(nets, x) < r_before


# ---------------------------------------------------------------------------
# observation normalizer
# ---------------------------------------------------------------------------

def test_normalizer_identity_during_warmup():
    norm = rnd.ObservationNormalizer(3, warmup=10)
    x = np.array([5.0, -2.0, 100.0])
    for _ in range(9):
        norm.update(x)
    assert np.array_equal(norm.normalize(x), x)


def test_normalizer_standardizes_after_warmup():
    norm = rnd.ObservationNormalizer(2, warmup=10)
    g = np.random.default_rng(14)
    data = g.normal(loc=[3.0, -1.0], scale=[2.0, 0.5], size=(5000, 2))
    for row in data:
        norm.update(row)
    z = np.array([norm.normalize(row) for row in data[:1000]])
    assert np.abs(z.mean(axis=0)).max() < 0.1
    assert np.abs(z.std(axis=0) - 1.0).max() < 0.1


def test_scalar_running_std():
    s = rnd.ScalarRunningStd()
    s.update(10.0)
    assert s.scale(5.0) == 5.0  # identity until 2 samples
    for v in (12.0, 8.0, 11.0, 9.0):
        s.update(v)
    assert s.std > 0
    assert s.scale(s.std) == pytest.approx(1.0, rel=1e-6)


# ---------------------------------------------------------------------------
# coverage grid
# ---------------------------------------------------------------------------

def test_grid_dimensions_default():
    grid = rnd.CoverageGrid()
    assert grid.n_bins == (2, 200, 10, 21)
    assert grid.total_bins == 84000


def test_bin_arithmetic_stated_widths():
    grid = rnd.CoverageGrid()
    assert grid.bin_of(50, 0.0, 0.35, 0.0) == (0, 0, 3, 0)
    assert grid.bin_of(150, 0.0, 0.0, 0.0)[0] == 1


def test_agronomically_equivalent_irrigation_shares_bin():
    grid = rnd.CoverageGrid()
    a = grid.bin_of(10, 500.0, 0.3, 121.2)
    b = grid.bin_of(10, 500.0, 0.3, 123.0)
    assert a == b


def test_out_of_bounds_clamps_to_edge():
    grid = rnd.CoverageGrid()
    assert grid.bin_of(200, 25000.0, 1.0, 5000.0) == (1, 199, 9, 20)
    assert grid.bin_of(-5, -1.0, -0.2, -3.0) == (0, 0, 0, 0)


def test_coverage_empty_and_full():
    grid = rnd.CoverageGrid(bounds=((0, 200), (0, 200), (0, 1), (0, 200)))
    assert rnd.coverage(grid) == 0.0
    for t in np.ndindex(*grid.n_bins):
        grid.record(t)
    assert rnd.coverage(grid) == 1.0


def test_coverage_counted_by_hand():
    # bounds chosen so the grid has 2*2*10*21 = 840 bins
    grid = rnd.CoverageGrid(bounds=((0, 200), (0, 200), (0, 1), (0, 2100)))
    assert grid.total_bins == 840
    visits = [
        (0, 0.0, 0.05, 0.0),
        (50, 0.0, 0.05, 0.0),     # same bin as above
        (120, 0.0, 0.05, 0.0),
        (120, 150.0, 0.05, 0.0),
        (120, 150.0, 0.55, 0.0),
        (120, 150.0, 0.55, 150.0),
        (120, 150.0, 0.55, 350.0),
        (10, 199.0, 0.95, 2050.0),
    ]
    for v in visits:
        grid.record(grid.bin_of(*v))
    assert len(grid.occupied) == 7
    assert rnd.coverage(grid) == pytest.approx(7 / 840)


def test_record_visit_from_state():
    env = ObservedEnv(florida_scenario())
    env.reset(3)
    grid = rnd.CoverageGrid()
    rnd.record_visit(grid, env.env.state)
    assert len(grid.occupied) == 1


def test_coverage_monotone_over_run():
    grid = rnd.CoverageGrid()
    g = np.random.default_rng(15)
    last = 0.0
    for _ in range(500):
        grid.record(grid.bin_of(g.uniform(0, 200), g.uniform(0, 20000),
                                g.uniform(0, 1), g.uniform(0, 2100)))
        cov = rnd.coverage(grid)
        assert cov >= last
        last = cov


def test_union_coverage():
    g1 = rnd.CoverageGrid(bounds=((0, 200), (0, 200), (0, 1), (0, 2100)))
    g2 = rnd.CoverageGrid(bounds=((0, 200), (0, 200), (0, 1), (0, 2100)))
    g1.record((0, 0, 0, 0))
    g2.record((1, 1, 1, 1))
    assert rnd.union_coverage([g1, g2]) == pytest.approx(2 / 840)
    g2.record((0, 0, 0, 0))
    assert rnd.union_coverage([g1, g2]) == pytest.approx(2 / 840)
    assert rnd.union_coverage([g1]) == pytest.approx(1 / 840)
