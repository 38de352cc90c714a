"""Simulated measurement records, likelihood estimation, and the adaptive
three-stage coupling-estimation protocol.

A record keeps only the post-selected ("accepted") readouts; the success
probability enters the error accounting through the per-trial Fisher
information, not through the likelihood, so estimates are conditioned on
acceptance exactly as an experiment would be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    GaussianPointer,
    PPSMSetup,
    branch_interference,
    optimal_setup,
    pointer_shift,
    post_selection_probability,
)
from .errors import (
    BoundaryMaximum,
    DegeneratePointer,
    RegionMiss,
    ZeroDensity,
    ZeroPostSelection,
)
from .fisher import cfi, optimal_modulation, region_bounds, sensitivity
from .numerics import DENSITY_FLOOR, P_D_FLOOR, RngStream, argmax_1d

N_CDF = 1 << 14  # inverse-CDF table resolution; adequate for n <= 1e7 draws
BUDGET_SPLIT = (0.2, 0.1, 0.7)  # rough / settling-verification / final
PHI_ROUGH = math.pi / 4.0
MIN_VERIFY_SUCCESS = 8  # below this, stage-2 verification uses the acceptance rate


@dataclass(frozen=True)
class MeasurementRecord:
    """Accepted readouts from n_total trials of one fixed configuration."""

    successes: np.ndarray
    n_total: int
    seed: RngStream

    def __post_init__(self):
        object.__setattr__(self, "successes", np.asarray(self.successes, dtype=float))
        if self.n_total < 1:
            raise ValueError("n_total must be at least 1")
        if self.successes.ndim != 1:
            raise ValueError("successes must be a 1-d array")
        if self.successes.size > self.n_total:
            raise ValueError("cannot have more successes than trials")

    @property
    def n_success(self):
        return int(self.successes.size)


def sample_record(setup, n_total, rng):
    """Draw a measurement record: Bernoulli acceptance, then conditional readouts.

    Readouts are drawn by inverse transform on a tabulated CDF of the
    conditional density (linear interpolation between table nodes).  The
    same (seed, stream) always reproduces the same record.
    """
    if n_total < 1:
        raise ValueError("n_total must be at least 1")
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    gen = rng.generator()
    accepted = gen.random(n_total) < p_d
    n_s = int(np.count_nonzero(accepted))
    if n_s == 0:
        return MeasurementRecord(successes=np.empty(0), n_total=n_total, seed=rng)
    lower, upper = setup.pointer.support()
    q_grid = np.linspace(lower, upper, N_CDF)
    weight = branch_interference(setup, q_grid) * setup.pointer.density(q_grid)
    cdf = np.concatenate(
        ([0.0], np.cumsum(0.5 * (weight[1:] + weight[:-1]) * np.diff(q_grid)))
    )
    cdf /= cdf[-1]
    keep = np.concatenate(([True], np.diff(cdf) > 0.0))
    u = gen.random(n_s)
    successes = np.interp(u, cdf[keep], q_grid[keep])
    return MeasurementRecord(successes=successes, n_total=n_total, seed=rng)


def log_likelihood(record, setup_template, g):
    """Conditional log-likelihood of the accepted readouts at coupling g."""
    if record.n_success == 0:
        raise ValueError("record has no accepted trials")
    candidate = setup_template.with_coupling(g=g)
    p_d = post_selection_probability(candidate)
    if p_d <= P_D_FLOOR:
        raise ZeroDensity(f"candidate coupling {g} gives vanishing acceptance")
    q = record.successes
    density = branch_interference(candidate, q) * candidate.pointer.density(q) / p_d
    if np.any(density < DENSITY_FLOOR):
        raise ZeroDensity(f"candidate coupling {g} assigns zero density to a readout")
    return float(np.sum(np.log(density)))


@dataclass(frozen=True)
class EstimationReport:
    """Point estimate with its uncertainty and information accounting.

    fisher_bound is the per-experiment lower bound 1 / (n_total * I(g_hat));
    crb_ratio compares the squared standard error against it.
    """

    g_hat: float
    stderr_hat: float
    n_total: int
    fisher_bound: float
    crb_ratio: float

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be at least 1")
        if not (self.stderr_hat > 0.0):
            raise ValueError("stderr_hat must be positive")


def _auto_coarse_n(setup_template, width):
    # Resolve the fastest likelihood oscillation (rate ~ 2(|q0| + 3 sigma)).
    pointer = setup_template.pointer
    rate = abs(pointer.q0) + 3.0 * pointer.sigma
    return int(max(201, min(4001, 8.0 * width * rate / math.pi + 1)))


def mle(record, setup_template, search, coarse_n=None, refine_tol=None):
    """Maximum-likelihood coupling estimate over a search interval.

    The maximizer comes from a coarse scan plus golden-section refinement;
    the standard error from the observed information (negative second
    difference of the log-likelihood, step 1e-3 of the interval width).
    Raises :class:`BoundaryMaximum` when the maximizer sits within 1% of an
    interval edge.
    """
    lo, hi = float(search[0]), float(search[1])
    if hi <= lo:
        raise ValueError("search interval must satisfy lower < upper")
    width = hi - lo
    if coarse_n is None:
        coarse_n = _auto_coarse_n(setup_template, width)
    if refine_tol is None:
        refine_tol = 1e-9 * width

    def objective(g):
        try:
            return log_likelihood(record, setup_template, g)
        except (ZeroDensity, ZeroPostSelection):
            return -math.inf

    g_hat = argmax_1d(objective, (lo, hi), coarse_n=coarse_n, refine_tol=refine_tol)
    edge = 0.01 * width
    if (g_hat - lo) < edge or (hi - g_hat) < edge:
        raise BoundaryMaximum(
            f"maximizer {g_hat} sits within 1% of the search edge [{lo}, {hi}]"
        )
    h = 1e-3 * width
    ll_mid = objective(g_hat)
    curvature = -(objective(g_hat + h) - 2.0 * ll_mid + objective(g_hat - h)) / h**2
    info = cfi(setup_template.with_coupling(g=g_hat))
    fisher_bound = math.inf if info <= 0.0 else 1.0 / (record.n_total * info)
    if curvature > 0.0 and math.isfinite(curvature):
        stderr = 1.0 / math.sqrt(curvature)
    else:
        # Degenerate local curvature (finite-sample noise): fall back to the
        # information bound so the report stays usable.
        stderr = math.sqrt(fisher_bound)
    ratio = stderr**2 / fisher_bound if math.isfinite(fisher_bound) else math.nan
    return EstimationReport(
        g_hat=float(g_hat),
        stderr_hat=stderr,
        n_total=record.n_total,
        fisher_bound=fisher_bound,
        crb_ratio=ratio,
    )


@dataclass(frozen=True)
class ReplicationSummary:
    """Across-replication aggregate of repeated sample + estimate runs."""

    replications: int
    g_mean: float
    g_var: float
    crb: float
    ratio: float


def replicate_mle(setup, n_total, replications, rng, search, coarse_n=None):
    """Repeat sample_record + mle with independent substreams.

    Returns (reports, summary); the summary's ratio compares the empirical
    across-replication variance of g_hat with the bound at the true coupling.
    """
    if replications < 2:
        raise ValueError("need at least 2 replications")
    reports = []
    for r in range(replications):
        record = sample_record(setup, n_total, rng.child(r))
        reports.append(mle(record, setup, search, coarse_n=coarse_n))
    estimates = np.array([rep.g_hat for rep in reports])
    crb = 1.0 / (n_total * cfi(setup))
    g_var = float(np.var(estimates, ddof=1))
    return reports, ReplicationSummary(
        replications=replications,
        g_mean=float(np.mean(estimates)),
        g_var=g_var,
        crb=crb,
        ratio=g_var / crb,
    )


# --- adaptive three-stage protocol ------------------------------------------

@dataclass(frozen=True)
class HiddenCouplingSampler:
    """Measurement black box drawing records at a coupling hidden from the caller.

    The estimation protocol interacts with it only through :meth:`sample`,
    choosing the selection angle, the modulation, and the trial count.
    """

    pointer: GaussianPointer
    g_true: float

    def sample(self, selection_angle, g_M, n_total, rng):
        setup = optimal_setup(self.pointer, selection_angle, g=self.g_true, g_M=g_M)
        return sample_record(setup, n_total, rng)


@dataclass(frozen=True)
class AdaptiveTrace:
    """Per-stage log of the adaptive protocol."""

    stages: tuple
    phi_used: tuple
    g_M_used: tuple
    estimates: tuple
    budget_split: tuple

    def __post_init__(self):
        n = len(self.stages)
        for field_value in (self.phi_used, self.g_M_used, self.estimates, self.budget_split):
            if len(field_value) != n:
                raise ValueError("trace fields must have one entry per stage")
        if abs(sum(self.budget_split) - 1.0) > 1e-12:
            raise ValueError("budget fractions must sum to 1")


def _shift_roots(setup_template, observed_shift, interval, n_scan=4096):
    """Couplings where the exact mean-shift curve crosses the observed shift."""
    gs = np.linspace(interval[0], interval[1], n_scan)
    values = np.empty(n_scan)
    for i, g in enumerate(gs):
        try:
            values[i] = pointer_shift(setup_template.with_coupling(g=g)) - observed_shift
        except ZeroPostSelection:
            values[i] = math.nan
    roots = []
    for i in range(n_scan - 1):
        v0, v1 = values[i], values[i + 1]
        if math.isnan(v0) or math.isnan(v1):
            continue
        if v0 == 0.0:
            roots.append(float(gs[i]))
        elif v0 * v1 < 0.0:
            # Linear interpolation inside one fine cell is ample here.
            roots.append(float(gs[i] + (gs[i + 1] - gs[i]) * v0 / (v0 - v1)))
    if values[-1] == 0.0:
        roots.append(float(gs[-1]))
    return roots


def _rough_unbalanced_estimate(record, setup_template, interval):
    """Stage-one estimate for an offset pointer: invert the exact mean shift.

    Candidate roots of the shift equation are disambiguated by matching the
    observed acceptance rate; if the observed mean is unreachable, fall
    back to a likelihood scan.
    """
    observed_shift = float(np.mean(record.successes)) - setup_template.pointer.q0
    roots = _shift_roots(setup_template, observed_shift, interval)
    if roots:
        rate = record.n_success / record.n_total
        g0 = min(
            roots,
            key=lambda g: abs(
                post_selection_probability(setup_template.with_coupling(g=g)) - rate
            ),
        )
        spread = float(np.std(record.successes))
        slope = sensitivity(setup_template.with_coupling(g=g0))
        stderr = math.inf
        if slope != 0.0 and record.n_success > 1:
            stderr = spread / (math.sqrt(record.n_success) * abs(slope))
        # The moment estimator cannot beat the information bound; flooring
        # the stderr there keeps later search windows honest when the
        # delta-method number is optimistic at small success counts.
        info = cfi(setup_template.with_coupling(g=g0))
        floor = 1.0 / math.sqrt(record.n_total * info)
        if not math.isfinite(stderr) or stderr <= 0.0:
            stderr = floor
        return g0, max(stderr, floor)
    report = mle(record, setup_template, interval)
    return report.g_hat, report.stderr_hat


def adaptive_protocol(sampler, case, budget, pointer, phi_final, rng, g_search=None, fraction=0.1):
    """Three-stage adaptive estimation of an unknown coupling.

    1. rough:    a wide-angle configuration localizes the coupling as g0;
    2. modulated: the modulation is reset so the informative operating
       point sits on g0, and a small verification batch checks that the
       residual is consistent with the modulated region (within three
       stage-one standard errors, else :class:`RegionMiss`).  When the
       operating point is too dark to collect MIN_VERIFY_SUCCESS readouts,
       the check falls back to the acceptance rate: an unexpectedly bright
       record means the rough estimate missed the fringe;
    3. final:    the remaining budget is spent at the modulated
       configuration and maximized over the likelihood.

    Returns (trace, report); report.g_hat is the final coupling estimate.
    """
    if budget < 3000:
        raise ValueError("budget must be at least 3000 trials")
    if not 0.0 < phi_final < math.pi / 4.0:
        raise ValueError("phi_final must lie in (0, pi/4)")
    if case not in ("balanced", "unbalanced"):
        raise ValueError(f"unknown case {case!r}")
    n1 = int(round(BUDGET_SPLIT[0] * budget))
    n2 = int(round(BUDGET_SPLIT[1] * budget))
    n3 = budget - n1 - n2
    fractions = (n1 / budget, n2 / budget, n3 / budget)

    if case == "balanced":
        g_M1 = 0.0
        if g_search is None:
            g_search = (-2.5 / pointer.sigma, 2.5 / pointer.sigma)
    else:
        if abs(pointer.q0) < 1e-12 * pointer.sigma:
            raise DegeneratePointer("unbalanced protocol requires a pointer offset")
        g_M1 = PHI_ROUGH / (8.0 * pointer.q0)
        if g_search is None:
            g_search = (0.0, math.pi / (2.0 * abs(pointer.q0)))

    record1 = sampler.sample(PHI_ROUGH, g_M1, n1, rng.child(1))
    template1 = optimal_setup(pointer, PHI_ROUGH, g=0.0, g_M=g_M1)
    if case == "balanced":
        report1 = mle(record1, template1, g_search)
        g0, se1 = report1.g_hat, report1.stderr_hat
    else:
        if record1.n_success == 0:
            raise ZeroPostSelection("rough stage produced no accepted trials")
        g0, se1 = _rough_unbalanced_estimate(record1, template1, g_search)

    g_M2 = optimal_modulation(g0, pointer, phi_final, case)
    template2 = optimal_setup(pointer, phi_final, g=0.0, g_M=g_M2)
    region = region_bounds(template2.with_coupling(g=g0), case, fraction=fraction)
    window = max(8.0 * se1, 4.0 * (region.upper_g - region.lower_g))
    search2 = (g0 - window, g0 + window)

    record2 = sampler.sample(phi_final, g_M2, n2, rng.child(2))
    partial = AdaptiveTrace(
        stages=("rough", "modulated", "final"),
        phi_used=(PHI_ROUGH, phi_final, phi_final),
        g_M_used=(g_M1, g_M2, g_M2),
        estimates=(float(g0), math.nan, math.nan),
        budget_split=fractions,
    )
    if record2.n_success >= MIN_VERIFY_SUCCESS:
        try:
            report2 = mle(record2, template2, search2)
        except BoundaryMaximum as exc:
            raise RegionMiss(
                f"verification estimate pinned to the search edge: {exc}", trace=partial
            ) from exc
        g2 = report2.g_hat
        outside = max(region.lower_g - g2, g2 - region.upper_g, 0.0)
        if outside > 3.0 * se1:
            raise RegionMiss(
                f"verified residual sits {outside:.3e} outside the modulated region "
                f"(> 3 x stage-one stderr {se1:.3e})",
                trace=AdaptiveTrace(
                    stages=partial.stages,
                    phi_used=partial.phi_used,
                    g_M_used=partial.g_M_used,
                    estimates=(float(g0), float(g2), math.nan),
                    budget_split=fractions,
                ),
            )
    else:
        # Dark operating point: verify by brightness.  Compare the accepted
        # count against its expectation at g0; a bright record means the
        # rough estimate missed the fringe.
        expected = n2 * post_selection_probability(template2.with_coupling(g=g0))
        tolerance = 3.0 * math.sqrt(expected) + 3.0
        g2 = math.nan
        if abs(record2.n_success - expected) > tolerance:
            raise RegionMiss(
                f"verification batch collected {record2.n_success} accepted trials "
                f"against {expected:.2f} expected at the dark operating point",
                trace=partial,
            )

    record3 = sampler.sample(phi_final, g_M2, n3, rng.child(3))
    if record3.n_success < 2:
        raise ZeroPostSelection(
            f"final stage accepted only {record3.n_success} trials; the operating "
            "point is too dark for this budget - increase the budget or phi_final"
        )
    report3 = mle(record3, template2, search2)
    trace = AdaptiveTrace(
        stages=("rough", "modulated", "final"),
        phi_used=(PHI_ROUGH, phi_final, phi_final),
        g_M_used=(g_M1, g_M2, g_M2),
        estimates=(float(g0), float(g2), float(report3.g_hat)),
        budget_split=fractions,
    )
    return trace, report3
