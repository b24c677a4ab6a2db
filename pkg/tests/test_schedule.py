"""Augmentation curriculum: alpha(p), phases, masking, weather perturbation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from croprl import schedule
from croprl.errors import ContractViolation
from croprl.surrogate import ObservedEnv, florida_scenario


def test_alpha_piecewise_values():
    assert schedule.alpha(0.3) == 0.0
    assert schedule.alpha(0.5) == pytest.approx(0.5, abs=1e-12)
    assert schedule.alpha(0.75) == 1.0
    assert schedule.alpha(0.39) == 0.0
    assert schedule.alpha(0.61) == 1.0


def test_alpha_boundaries_exact():
    assert schedule.alpha(0.4) == 0.0
    assert schedule.alpha(0.6) == 1.0
    assert schedule.alpha(0.0) == 0.0
    assert schedule.alpha(1.0) == 1.0


def test_alpha_rejects_out_of_range():
    with pytest.raises(ContractViolation):
        schedule.alpha(-0.1)
    with pytest.raises(ContractViolation):
        schedule.alpha(1.1)


def test_phase_boundaries():
    assert schedule.phase(0.0) == 1
    assert schedule.phase(0.4) == 2
    assert schedule.phase(0.6) == 3
    assert schedule.phase(1.0) == 3


def test_phase_episode_boundaries_default_run():
    cfg = schedule.PgaConfig(total_episodes=2000)
    assert schedule.schedule_state(799, cfg).phase == 1
    assert schedule.schedule_state(800, cfg).phase == 2
    assert schedule.schedule_state(1199, cfg).phase == 2
    assert schedule.schedule_state(1200, cfg).phase == 3


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
def test_alpha_monotone_and_bounded(p1, p2):
    a1, a2 = schedule.alpha(p1), schedule.alpha(p2)
    assert 0.0 <= a1 <= 1.0
    if p1 <= p2:
        assert a1 <= a2


def test_alpha_continuity_at_boundaries():
    for p0 in (0.4, 0.6):
        below = schedule.alpha(p0 - 1e-9)
        at = schedule.alpha(p0)
        assert abs(below - at) < 1e-6


def test_mask_gate_alpha_zero_never_fires():
    rng = np.random.default_rng(0)
    assert not any(schedule.action_mask_gate(0.0, rng) for _ in range(10_000))


def test_mask_gate_empirical_rates():
    rng = np.random.default_rng(1)
    n = 100_000
    rate_full = sum(schedule.action_mask_gate(1.0, rng) for _ in range(n)) / n
    assert rate_full == pytest.approx(0.10, abs=0.01)
    rate_half = sum(schedule.action_mask_gate(0.5, rng) for _ in range(n)) / n
    assert rate_half == pytest.approx(0.05, abs=0.01)


def test_masked_action_resample_excludes_original():
    rng = np.random.default_rng(2)
    seen = set()
    for _ in range(2000):
        a = schedule.resample_masked_action(7, 25, rng)
        assert a != 7
        assert 0 <= a < 25
        seen.add(a)
    assert len(seen) == 24


def test_weather_perturbation_identity_at_zero():
    env = ObservedEnv(florida_scenario())
    env.reset(3)
    state = env.env.state
    rng = np.random.default_rng(4)
    out = schedule.weather_perturbation(0.0, state, rng)
    assert out is state


def test_weather_perturbation_deterministic():
    env = ObservedEnv(florida_scenario())
    env.reset(5)
    state = env.env.state
    a = schedule.weather_perturbation(1.0, state, np.random.default_rng(9))
    b = schedule.weather_perturbation(1.0, state, np.random.default_rng(9))
    assert a.temperature == b.temperature
    assert a.rainfall == b.rainfall
    assert a.temperature != state.temperature
    assert a.day == state.day  # nothing but the weather fields moved


def test_weather_perturbation_rain_floor():
    env = ObservedEnv(florida_scenario())
    env.reset(6)
    state = env.env.state
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        out = schedule.weather_perturbation(1.0, state, rng)
        assert out.rainfall >= 0.0


def test_schedule_state_progress():
    cfg = schedule.PgaConfig(total_episodes=100)
    s = schedule.schedule_state(50, cfg)
    assert s.p == pytest.approx(0.5)
    assert s.alpha == pytest.approx(0.5)
    assert s.phase == 2
