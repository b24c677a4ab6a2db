"""Evaluation harness: perturbed sweeps, sensitivity and robustness tables."""

import numpy as np
import pytest

from croprl import evaluation, noise
from croprl.errors import ContractViolation
from croprl.surrogate import (
    FixedManagementPolicy, ObservedEnv, florida_scenario, OBS_DIM,
)

SEEDS = [42, 123]


class RecordingPolicy:
    """Fixed-management actions, but records every observation it sees."""

    def __init__(self):
        self.inner = FixedManagementPolicy()
        self.seen = []

    def action(self, obs, rng=None, deterministic=True):
        self.seen.append(np.array(obs))
        return self.inner.action(obs)


class WeatherBlindPolicy:
    """Ignores every weather input; decisions depend on the day only."""

    def action(self, obs, rng=None, deterministic=True):
        day = int(round(obs[0]))
        return 5 if day % 5 == 0 else 0


def test_evaluate_returns_populated_record():
    rec = evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "clean",
                              3, SEEDS)
    assert rec.n_samples == 6
    assert rec.score_mean != 0.0
    assert rec.yield_mean > 0.0
    assert rec.wue_mean is not None and rec.nue_mean is not None
    assert set(rec.per_seed_scores) == set(SEEDS)


def test_evaluate_deterministic():
    a = evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "combined",
                            2, SEEDS)
    b = evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "combined",
                            2, SEEDS)
    assert a.score_mean == b.score_mean
    assert a.score_std == b.score_std


def test_wue_absent_when_no_irrigation():
    class NoInput:
        def action(self, obs, rng=None, deterministic=True):
            return 0

    rec = evaluation.evaluate(NoInput(), florida_scenario(), "clean", 2, SEEDS)
    assert rec.wue_mean is None
    assert rec.nue_mean is None


def test_perturbation_touches_observations_not_dynamics():
    clean_policy = RecordingPolicy()
    noisy_policy = RecordingPolicy()
    evaluation.evaluate(clean_policy, florida_scenario(), "clean", 1, [42])
    evaluation.evaluate(noisy_policy, florida_scenario(), "temp", 1, [42])
    clean_seen = np.array(clean_policy.seen)
    noisy_seen = np.array(noisy_policy.seen)
    # same actions (fixed calendar) -> same true trajectory; only the
    # temperature the policy SAW may differ
    assert clean_seen.shape == noisy_seen.shape
    temp_idx = 1
    other = [i for i in range(OBS_DIM) if i != temp_idx]
    assert np.array_equal(clean_seen[:, other], noisy_seen[:, other])
    assert not np.array_equal(clean_seen[:, temp_idx], noisy_seen[:, temp_idx])


def test_weather_blind_policy_immune_to_weather_noise():
    pol = WeatherBlindPolicy()
    clean = evaluation.evaluate(pol, florida_scenario(), "clean", 3, SEEDS)
    for cond in ("temp", "rain", "combined"):
        perturbed = evaluation.evaluate(pol, florida_scenario(), cond, 3, SEEDS)
        assert perturbed.score_mean == clean.score_mean


def test_retention_of_clean_is_one():
    rec = evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "clean",
                              2, SEEDS)
    assert rec.retention(rec) == pytest.approx(1.0)


def test_evaluate_validation():
    with pytest.raises(ContractViolation):
        evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "hail",
                            2, SEEDS)
    with pytest.raises(ContractViolation):
        evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "clean",
                            0, SEEDS)


def test_sensitivity_table_shape_and_arithmetic():
    table = evaluation.sensitivity_analysis(FixedManagementPolicy(),
                                            florida_scenario(), SEEDS, n_episodes=2)
    assert [r.condition for r in table.rows] == ["temp", "rain", "moisture", "solar"]
    for row in table.rows:
        expected = 100.0 * (table.clean.score_mean - row.score_mean) / table.clean.score_mean
        assert row.score_reduction_pct == pytest.approx(expected)
    text = table.text()
    assert "clean" in text and "temp" in text


def test_sensitivity_zero_rows_for_blind_policy():
    table = evaluation.sensitivity_analysis(WeatherBlindPolicy(), florida_scenario(),
                                            SEEDS, n_episodes=2)
    for row in table.rows:
        if row.condition in ("temp", "rain", "solar"):
            assert row.score_reduction_pct == pytest.approx(0.0)
            assert row.yield_reduction_pct == pytest.approx(0.0)


def test_robustness_report_identical_policies():
    a = FixedManagementPolicy()
    report = evaluation.robustness_report(a, a, florida_scenario(), SEEDS,
                                          n_episodes=2, labels=("x", "y"))
    for cond in evaluation.ROBUSTNESS_CONDITIONS:
        ra, rb = report.records[cond]
        assert ra.score_mean == rb.score_mean
        assert ra.score_std == rb.score_std
    assert report.retention("clean", 0) == pytest.approx(1.0)
    assert report.retention("clean", 1) == pytest.approx(1.0)
    payload = report.to_json()
    assert set(payload["conditions"]) == set(evaluation.ROBUSTNESS_CONDITIONS)
    assert "x" in payload["conditions"]["clean"]
    text = report.text()
    assert "combined" in text


def test_robustness_retention_uses_own_clean_score():
    report = evaluation.robustness_report(
        FixedManagementPolicy(), WeatherBlindPolicy(), florida_scenario(), SEEDS,
        n_episodes=2, labels=("calendar", "blind"))
    ra, rb = report.records["combined"]
    ca, cb = report.records["clean"]
    assert report.retention("combined", 0) == pytest.approx(ra.score_mean / ca.score_mean)
    assert report.retention("combined", 1) == pytest.approx(rb.score_mean / cb.score_mean)


def test_coverage_comparison():
    from croprl import rnd
    bounds = ((0, 200), (0, 200), (0, 1), (0, 2100))
    g1 = rnd.CoverageGrid(bounds=bounds)
    g2 = rnd.CoverageGrid(bounds=bounds)
    g1.record((0, 0, 0, 0))
    g2.record((1, 0, 0, 0))
    out = evaluation.coverage_comparison({"a": [g1, g2], "b": [g1]})
    assert out["a"] == pytest.approx(2 / 840)
    assert out["b"] == pytest.approx(1 / 840)
    with pytest.raises(ContractViolation):
        evaluation.coverage_comparison({})


def test_records_csv(tmp_path):
    rec = evaluation.evaluate(FixedManagementPolicy(), florida_scenario(), "clean",
                              1, [42])
    path = tmp_path / "records.csv"
    evaluation.write_records_csv(path, [rec])
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("condition,")
