"""Sampling, likelihood maximization, and the adaptive protocol.

Distributional checks use scipy.stats as an independent oracle; the
protocol's abort paths are exercised with a sampler that deliberately
switches the hidden coupling between stages.
"""

import math
from dataclasses import dataclass

import numpy as np
import pytest
from scipy import stats

from ppsm.core import (
    GaussianPointer,
    branch_interference,
    optimal_setup,
    post_selection_probability,
)
from ppsm.errors import BoundaryMaximum, RegionMiss, ZeroDensity, ZeroPostSelection
from ppsm.estimation import (
    BUDGET_SPLIT,
    EstimationReport,
    HiddenCouplingSampler,
    MeasurementRecord,
    PHI_ROUGH,
    adaptive_protocol,
    log_likelihood,
    mle,
    replicate_mle,
    sample_record,
)
from ppsm.fisher import cfi
from ppsm.numerics import RngStream


def _peak_setup(g_true=0.08, phi=0.2, sigma=1.0):
    pointer = GaussianPointer(0.0, sigma)
    return optimal_setup(pointer, phi, g=g_true, g_M=-g_true)


def test_sample_record_deterministic():
    setup = _peak_setup()
    a = sample_record(setup, 5000, RngStream(3, 1))
    b = sample_record(setup, 5000, RngStream(3, 1))
    assert a.n_total == b.n_total
    np.testing.assert_array_equal(a.successes, b.successes)
    c = sample_record(setup, 5000, RngStream(3, 2))
    assert not np.array_equal(a.successes, c.successes)


def test_sample_record_acceptance_rate():
    setup = _peak_setup()
    p = post_selection_probability(setup)
    n = 200_000
    record = sample_record(setup, n, RngStream(5))
    expected = n * p
    spread = math.sqrt(n * p * (1.0 - p))
    assert abs(record.n_success - expected) < 5.0 * spread


def test_sample_record_distribution_ks():
    # Bright configuration so the accepted sample is large.
    setup = optimal_setup(GaussianPointer(0.0, 1.0), 2.0, g=0.4)
    record = sample_record(setup, 40_000, RngStream(7))
    assert record.n_success > 5000
    lo, hi = setup.pointer.support()
    qs = np.linspace(lo, hi, 20_001)
    w = branch_interference(setup, qs) * setup.pointer.density(qs)
    c = np.concatenate(([0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(qs))))
    c /= c[-1]
    result = stats.kstest(record.successes, lambda x: np.interp(x, qs, c))
    assert result.pvalue > 0.01


def test_sample_record_zero_acceptance():
    setup = optimal_setup(GaussianPointer(0.0, 1.0), 0.0, g=0.0)
    with pytest.raises(ZeroPostSelection):
        sample_record(setup, 100, RngStream(1))


def test_measurement_record_validation():
    with pytest.raises(ValueError):
        MeasurementRecord(successes=np.zeros(3), n_total=2, seed=RngStream(0))
    with pytest.raises(ValueError):
        MeasurementRecord(successes=np.zeros((2, 2)), n_total=10, seed=RngStream(0))
    rec = MeasurementRecord(successes=np.zeros(3), n_total=10, seed=RngStream(0))
    assert rec.n_success == 3


def test_log_likelihood_matches_direct_sum():
    setup = _peak_setup()
    record = sample_record(setup, 20_000, RngStream(9))
    value = log_likelihood(record, setup, setup.coupling.g)
    p = post_selection_probability(setup)
    direct = float(
        np.sum(
            np.log(
                branch_interference(setup, record.successes)
                * setup.pointer.density(record.successes)
                / p
            )
        )
    )
    assert value == pytest.approx(direct, rel=1e-12)


def test_log_likelihood_zero_density():
    setup = _peak_setup()
    far = setup.pointer.q0 + 40.0 * setup.pointer.sigma
    record = MeasurementRecord(successes=np.array([far]), n_total=10, seed=RngStream(0))
    with pytest.raises(ZeroDensity):
        log_likelihood(record, setup, setup.coupling.g)


def test_log_likelihood_empty_record():
    setup = _peak_setup()
    record = MeasurementRecord(successes=np.empty(0), n_total=10, seed=RngStream(0))
    with pytest.raises(ValueError):
        log_likelihood(record, setup, 0.0)


def test_mle_recovers_truth():
    g_true = 0.08
    setup = _peak_setup(g_true=g_true)
    record = sample_record(setup, 100_000, RngStream(11, 3))
    report = mle(record, setup, (g_true - 0.5, g_true + 0.5))
    assert abs(report.g_hat - g_true) < 4.0 * report.stderr_hat
    assert 0.3 < report.crb_ratio < 3.0
    assert report.fisher_bound == pytest.approx(
        1.0 / (record.n_total * cfi(setup.with_coupling(g=report.g_hat))), rel=1e-12
    )


def test_mle_boundary_maximum():
    setup = _peak_setup(g_true=0.08)
    record = sample_record(setup, 20_000, RngStream(13))
    with pytest.raises(BoundaryMaximum):
        mle(record, setup, (0.3, 0.9))  # truth far left of the window


def test_estimation_report_validation():
    with pytest.raises(ValueError):
        EstimationReport(g_hat=0.0, stderr_hat=0.0, n_total=10, fisher_bound=1.0, crb_ratio=1.0)
    with pytest.raises(ValueError):
        EstimationReport(g_hat=0.0, stderr_hat=0.1, n_total=0, fisher_bound=1.0, crb_ratio=1.0)


def test_replicate_mle_summary():
    g_true = 0.05
    setup = _peak_setup(g_true=g_true)
    reports, summary = replicate_mle(
        setup, 20_000, 30, RngStream(17), (g_true - 0.4, g_true + 0.4)
    )
    assert len(reports) == 30
    assert summary.replications == 30
    assert abs(summary.g_mean - g_true) < 4.0 * math.sqrt(summary.g_var / 30.0)
    assert summary.crb == pytest.approx(1.0 / (20_000 * cfi(setup)), rel=1e-12)
    assert 0.4 < summary.ratio < 2.5
    # independent substreams: repeating the whole sweep reproduces it
    _, summary2 = replicate_mle(
        setup, 20_000, 30, RngStream(17), (g_true - 0.4, g_true + 0.4)
    )
    assert summary2.g_var == summary.g_var


def test_replicate_mle_validation():
    setup = _peak_setup()
    with pytest.raises(ValueError):
        replicate_mle(setup, 1000, 1, RngStream(0), (-0.5, 0.5))


def test_adaptive_balanced_recovers_large_coupling():
    pointer = GaussianPointer(0.0, 1.0)
    g_true = 0.3  # |g sigma| far outside any small-angle linearization
    sampler = HiddenCouplingSampler(pointer=pointer, g_true=g_true)
    trace, report = adaptive_protocol(
        sampler, "balanced", 100_000, pointer, 0.05, RngStream(42)
    )
    assert trace.stages == ("rough", "modulated", "final")
    assert trace.phi_used[0] == pytest.approx(PHI_ROUGH)
    assert trace.phi_used[1] == trace.phi_used[2] == 0.05
    assert trace.budget_split == pytest.approx(BUDGET_SPLIT)
    assert trace.g_M_used[1] == pytest.approx(-trace.estimates[0], rel=1e-12)
    assert abs(report.g_hat - g_true) < 5.0 * report.stderr_hat
    # deterministic given the stream
    trace2, report2 = adaptive_protocol(
        sampler, "balanced", 100_000, pointer, 0.05, RngStream(42)
    )
    assert report2.g_hat == report.g_hat
    assert trace2.estimates == trace.estimates


def test_adaptive_unbalanced_recovers_coupling():
    pointer = GaussianPointer(2400.0, 200.0)
    g_true = 1.0e-4
    sampler = HiddenCouplingSampler(pointer=pointer, g_true=g_true)
    trace, report = adaptive_protocol(
        sampler, "unbalanced", 200_000, pointer, 0.75, RngStream(7)
    )
    assert abs(report.g_hat - g_true) < 5.0 * report.stderr_hat
    assert trace.g_M_used[1] == pytest.approx(
        0.75 / (2.0 * 2400.0) - trace.estimates[0], rel=1e-10
    )
    # the dark operating point makes the final stage dramatically informative
    assert report.stderr_hat < 5.0e-6


@dataclass(frozen=True)
class _StageLyingSampler:
    """Honest in stage one, then switches the hidden coupling: the settled
    modulation no longer matches reality and verification must catch it."""

    pointer: GaussianPointer
    g_first: float
    g_later: float

    def sample(self, selection_angle, g_M, n_total, rng):
        calls = getattr(self, "_calls", [0])
        g = self.g_first if calls[0] == 0 else self.g_later
        calls[0] += 1
        object.__setattr__(self, "_calls", calls)
        setup = optimal_setup(self.pointer, selection_angle, g=g, g_M=g_M)
        return sample_record(setup, n_total, rng)


def test_adaptive_region_miss_balanced():
    pointer = GaussianPointer(0.0, 1.0)
    sampler = _StageLyingSampler(pointer=pointer, g_first=0.3, g_later=0.8)
    with pytest.raises(RegionMiss) as excinfo:
        adaptive_protocol(sampler, "balanced", 100_000, pointer, 0.2, RngStream(21))
    trace = excinfo.value.trace
    assert trace is not None
    assert trace.stages == ("rough", "modulated", "final")
    assert math.isnan(trace.estimates[2])


def test_adaptive_region_miss_dark_point_brightness():
    # Unbalanced small-angle case: the verification batch is expected to be
    # almost entirely dark; a bright record reveals the stage-one miss.
    pointer = GaussianPointer(2400.0, 200.0)
    sampler = _StageLyingSampler(pointer=pointer, g_first=1.0e-4, g_later=3.0e-4)
    with pytest.raises(RegionMiss):
        adaptive_protocol(sampler, "unbalanced", 100_000, pointer, 0.2, RngStream(23))


def test_adaptive_dark_final_stage_raises():
    # Minimal budget at a very dark operating point: the final stage cannot
    # collect enough accepted trials and says so.
    pointer = GaussianPointer(2400.0, 200.0)
    sampler = HiddenCouplingSampler(pointer=pointer, g_true=1.0e-4)
    with pytest.raises(ZeroPostSelection):
        adaptive_protocol(sampler, "unbalanced", 30_000, pointer, 0.2, RngStream(29))


def test_adaptive_validation():
    pointer = GaussianPointer(0.0, 1.0)
    sampler = HiddenCouplingSampler(pointer=pointer, g_true=0.1)
    with pytest.raises(ValueError):
        adaptive_protocol(sampler, "balanced", 100, pointer, 0.05, RngStream(1))
    with pytest.raises(ValueError):
        adaptive_protocol(sampler, "balanced", 10_000, pointer, 1.0, RngStream(1))
    with pytest.raises(ValueError):
        adaptive_protocol(sampler, "tilted", 10_000, pointer, 0.05, RngStream(1))
