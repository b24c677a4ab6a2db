"""Observation noise channels: gating, magnitudes, eval perturbations."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from croprl import noise
from croprl.errors import ConfigurationError, ContractViolation
from croprl.surrogate import (
    OBS_DIM, OBS_RAINFALL, OBS_SOIL_MOISTURE, OBS_SOLAR, OBS_TEMPERATURE,
)

CFG = noise.NoiseConfig()


def streams(seed=0):
    return noise.NoiseStreams(
        temp=np.random.default_rng(seed),
        rain=np.random.default_rng(seed + 1),
        moisture=np.random.default_rng(seed + 2),
    )


def base_obs():
    obs = np.arange(OBS_DIM, dtype=np.float64)
    obs[OBS_TEMPERATURE] = 25.0
    obs[OBS_RAINFALL] = 5.0
    obs[OBS_SOIL_MOISTURE] = 0.3
    return obs


def changed_indices(a, b):
    return {int(i) for i in np.nonzero(a != b)[0]}


def test_gating_below_all_thresholds():
    obs = base_obs()
    out = noise.inject(obs, 0.2, CFG, streams())
    assert np.array_equal(out, obs)


def test_gating_temp_only():
    obs = base_obs()
    out = noise.inject(obs, 0.4, CFG, streams())
    assert changed_indices(obs, out) == {OBS_TEMPERATURE}


def test_gating_temp_and_rain():
    obs = base_obs()
    out = noise.inject(obs, 0.6, CFG, streams())
    assert changed_indices(obs, out) == {OBS_TEMPERATURE, OBS_RAINFALL}


def test_gating_all_three():
    obs = base_obs()
    out = noise.inject(obs, 0.8, CFG, streams())
    assert changed_indices(obs, out) == {OBS_TEMPERATURE, OBS_RAINFALL, OBS_SOIL_MOISTURE}


def test_threshold_boundary_is_strict():
    obs = base_obs()
    out = noise.inject(obs, 0.3, CFG, streams())
    assert np.array_equal(out, obs)


def test_channels_use_independent_streams():
    obs = base_obs()
    # disabling rain+moisture (higher thresholds) must not change the temp
    # channel's draw at the same alpha
    all_on = noise.inject(obs, 0.8, CFG, streams(5))
    temp_only_cfg = noise.NoiseConfig(rain_threshold=0.85, moisture_threshold=0.9)
    temp_only = noise.inject(obs, 0.8, temp_only_cfg, streams(5))
    assert all_on[OBS_TEMPERATURE] == temp_only[OBS_TEMPERATURE]
    assert temp_only[OBS_RAINFALL] == obs[OBS_RAINFALL]
    assert temp_only[OBS_SOIL_MOISTURE] == obs[OBS_SOIL_MOISTURE]


def test_inject_rejects_bad_alpha():
    with pytest.raises(ContractViolation):
        noise.inject(base_obs(), 1.2, CFG, streams())


def test_temp_noise_std_tracks_alpha():
    rng = np.random.default_rng(11)
    n = 100_000
    for alpha, sigma in ((0.31, 0.62), (1.0, 2.0)):
        draws = np.array([noise.temp_noise(0.0, alpha, rng) for _ in range(n)])
        assert draws.std() == pytest.approx(sigma, rel=0.02)
        assert abs(draws.mean()) < 0.02 * max(sigma, 1.0)


def test_rain_noise_bias_and_std():
    rng = np.random.default_rng(12)
    n = 100_000
    draws = np.array([noise.rain_noise(10.0, 1.0, rng) for _ in range(n)])
    assert draws.mean() == pytest.approx(10.5, abs=0.005)
    assert draws.std() == pytest.approx(0.01, rel=0.02)


def test_rain_noise_floor_at_zero():
    rng = np.random.default_rng(13)
    draws = [noise.rain_noise(0.0, 1.0, rng) for _ in range(100_000)]
    assert min(draws) >= 0.0
    positive = np.array([d for d in draws if d > 0.0])
    # pre-floor the noise is N(0, 0.01): positive half has RMS 0.01
    assert np.sqrt(np.mean(positive**2)) == pytest.approx(0.01, rel=0.02)


def test_moisture_noise_properties():
    rng = np.random.default_rng(14)
    alpha = 0.8
    outs = np.array([noise.moisture_noise(0.0, alpha, rng) for _ in range(100_000)])
    assert np.all(outs >= 0.0) and np.all(outs <= 1.0)
    # the added term is clip(N(0, 0.016), 0, 1): recover sigma from the
    # positive half (E[n^2 | n>0] = sigma^2)
    positive = outs[outs > 0.0]
    assert np.sqrt(np.mean(positive**2)) == pytest.approx(0.016, rel=0.02)
    assert positive.size == pytest.approx(outs.size / 2, rel=0.02)


def test_moisture_noise_bias_is_non_negative():
    rng = np.random.default_rng(15)
    outs = [noise.moisture_noise(0.5, 0.9, rng) for _ in range(10_000)]
    assert min(outs) >= 0.5  # the clipped term can only add


def test_variance_interpretation():
    cfg = noise.NoiseConfig(rain_param_interpretation="variance",
                            moisture_param_interpretation="variance")
    rng = np.random.default_rng(16)
    outs = np.array([noise.rain_noise(100.0, 1.0, rng, cfg) for _ in range(100_000)])
    assert outs.std() == pytest.approx(np.sqrt(0.01), rel=0.02)


def test_noise_config_validation():
    with pytest.raises(ConfigurationError):
        noise.NoiseConfig(temp_threshold=0.6, rain_threshold=0.5)
    with pytest.raises(ConfigurationError):
        noise.NoiseConfig(rain_param_interpretation="weird")


# ---------------------------------------------------------------------------
# eval perturbations
# ---------------------------------------------------------------------------

def test_eval_clean_is_identity():
    obs = base_obs()
    out = noise.eval_perturbation(obs, "clean", np.random.default_rng(0))
    assert np.array_equal(out, obs)


def test_eval_combined_touches_temp_and_rain_only():
    obs = base_obs()
    out = noise.eval_perturbation(obs, "combined", np.random.default_rng(1))
    assert changed_indices(obs, out) == {OBS_TEMPERATURE, OBS_RAINFALL}


def test_eval_rain_within_ten_percent():
    obs = base_obs()
    obs[OBS_RAINFALL] = 5.0
    rng = np.random.default_rng(2)
    for _ in range(1000):
        out = noise.eval_perturbation(obs, "rain", rng)
        assert 4.5 <= out[OBS_RAINFALL] <= 5.5


def test_eval_solar_multiplicative():
    obs = base_obs()
    obs[OBS_SOLAR] = 20.0
    rng = np.random.default_rng(3)
    for _ in range(1000):
        out = noise.eval_perturbation(obs, "solar", rng)
        assert 18.0 <= out[OBS_SOLAR] <= 22.0
        assert changed_indices(obs, out) == {OBS_SOLAR}


def test_eval_moisture_additive_and_clipped():
    obs = base_obs()
    obs[OBS_SOIL_MOISTURE] = 0.01
    rng = np.random.default_rng(4)
    for _ in range(1000):
        out = noise.eval_perturbation(obs, "moisture", rng)
        assert 0.0 <= out[OBS_SOIL_MOISTURE] <= 0.03


def test_eval_unknown_condition():
    with pytest.raises(ContractViolation):
        noise.eval_perturbation(base_obs(), "hail", np.random.default_rng(0))


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0), st.integers(0, 2**30))
def test_untouched_dimensions_bitwise_identical(alpha, seed):
    obs = base_obs()
    out = noise.inject(obs, alpha, CFG, streams(seed))
    touched = set()
    if alpha > CFG.temp_threshold:
        touched.add(OBS_TEMPERATURE)
    if alpha > CFG.rain_threshold:
        touched.add(OBS_RAINFALL)
    if alpha > CFG.moisture_threshold:
        touched.add(OBS_SOIL_MOISTURE)
    for i in range(OBS_DIM):
        if i not in touched:
            assert out[i] == obs[i]
