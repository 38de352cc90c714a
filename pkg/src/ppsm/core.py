"""Two-level system coupled to a Gaussian pointer, with post-selection.

States are parameterized by Bloch angles; the pointer starts in a Gaussian
wavepacket f(q) centered on q0 with width sigma.  The system observable
(+1 on |0>, -1 on |1>) couples to the pointer with total strength
g' = g + g_M, where g is the unknown coupling and g_M an optional
deliberate modulation.  Keeping only trials whose system part lands in the
post-selected state leaves the two-branch pointer amplitude

    A(q) = [a e^{i g' q} + b e^{i dphi} e^{-i g' q}] f(q),

with branch weights a = cos(theta_i/2) cos(theta_f/2),
b = sin(theta_i/2) sin(theta_f/2) and phase gap dphi = phi_i - phi_f.
Gaussian moments then give exact closed forms, used throughout:

    p_d      = a^2 + b^2 + 2 a b E cos(D),
    <q> - q0 = -2 a b sigma^2 g' E sin(D) / p_d,

with E = exp(-sigma^2 g'^2) and D = 2 q0 g' - dphi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import OrthogonalSelection, RegimeViolation, ZeroPostSelection
from .numerics import (
    GAUSSIAN_TAIL_SIGMAS,
    OVERLAP_FLOOR,
    P_D_FLOOR,
    QuadratureSpec,
    integrate,
)

TWO_PI = 2.0 * math.pi


def wrap_angle(phi):
    """Map an angle to the canonical branch [-pi, pi); -pi included, pi excluded."""
    return (float(phi) + math.pi) % TWO_PI - math.pi


@dataclass(frozen=True)
class QubitState:
    """Pure two-level state cos(theta/2)|0> + sin(theta/2) e^{i phi}|1>.

    theta must lie in [0, pi]; phi is stored on the canonical branch.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not (0.0 <= theta <= math.pi):
            raise ValueError(f"theta must lie in [0, pi], got {theta}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", wrap_angle(self.phi))

    def amplitudes(self):
        """Complex amplitudes (c0, c1) on the computational basis."""
        half = 0.5 * self.theta
        return math.cos(half), math.sin(half) * complex(math.cos(self.phi), math.sin(self.phi))


def optimal_pre():
    """Balanced superposition (|0> + |1>) / sqrt(2)."""
    return QubitState(theta=0.5 * math.pi, phi=0.0)


def optimal_post(selection_angle):
    """Near-orthogonal partner of :func:`optimal_pre`.

    ``selection_angle`` is the phase offset from perfect orthogonality: at
    0 the pair is orthogonal and every trial is rejected; small angles give
    strongly amplified conditional pointer shifts.
    """
    return QubitState(theta=0.5 * math.pi, phi=wrap_angle(math.pi - selection_angle))


@dataclass(frozen=True)
class GaussianPointer:
    """Gaussian pointer wavepacket, mean q0 and width sigma (position space)."""

    q0: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be positive and finite, got {self.sigma}")
        if not math.isfinite(self.q0):
            raise ValueError("q0 must be finite")

    def wavefunction(self, q):
        """Real amplitude f(q) = (pi sigma^2)^(-1/4) exp(-(q-q0)^2 / (2 sigma^2))."""
        q = np.asarray(q, dtype=float)
        norm = (math.pi * self.sigma**2) ** -0.25
        return norm * np.exp(-((q - self.q0) ** 2) / (2.0 * self.sigma**2))

    def density(self, q):
        """Probability density f(q)^2 (a normal law with variance sigma^2 / 2)."""
        q = np.asarray(q, dtype=float)
        norm = (math.pi * self.sigma**2) ** -0.5
        return norm * np.exp(-((q - self.q0) ** 2) / self.sigma**2)

    def support(self):
        """Truncated support used for quadrature and sampling."""
        half = GAUSSIAN_TAIL_SIGMAS * self.sigma
        return self.q0 - half, self.q0 + half


@dataclass(frozen=True)
class CouplingConfig:
    """Unknown coupling g plus deliberate modulation g_M; g' = g + g_M."""

    g: float
    g_M: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.g) and math.isfinite(self.g_M)):
            raise ValueError("couplings must be finite")

    @property
    def total(self):
        return self.g + self.g_M


@dataclass(frozen=True)
class PPSMSetup:
    """Complete measurement configuration: states, pointer and couplings."""

    pre: QubitState
    post: QubitState
    pointer: GaussianPointer
    coupling: CouplingConfig

    @property
    def phase_gap(self):
        """Relative phase pre.phi - post.phi on the canonical branch."""
        return wrap_angle(self.pre.phi - self.post.phi)

    @property
    def selection_angle(self):
        """Phase offset of the post-selection from perfect orthogonality.

        For the balanced-superposition pair this is the angle phi in
        p_d = [1 - e^{-sigma^2 g'^2} cos(2 q0 g' - phi)] / 2.
        """
        return wrap_angle(self.phase_gap + math.pi)

    def branch_weights(self):
        """(a, b) weights of the two interfering pointer branches."""
        a = math.cos(0.5 * self.pre.theta) * math.cos(0.5 * self.post.theta)
        b = math.sin(0.5 * self.pre.theta) * math.sin(0.5 * self.post.theta)
        return a, b

    def with_coupling(self, g=None, g_M=None):
        """Copy of this setup with replaced coupling entries."""
        new = CouplingConfig(
            g=self.coupling.g if g is None else g,
            g_M=self.coupling.g_M if g_M is None else g_M,
        )
        return replace(self, coupling=new)


def optimal_setup(pointer, selection_angle, g, g_M=0.0):
    """Setup with the balanced-superposition state pair at the given angle."""
    return PPSMSetup(
        pre=optimal_pre(),
        post=optimal_post(selection_angle),
        pointer=pointer,
        coupling=CouplingConfig(g=g, g_M=g_M),
    )


# --- state-only quantities --------------------------------------------------

def weak_value(pre, post):
    """Weak value of the +/-1 system observable for a pre/post-selected pair.

    Raises :class:`OrthogonalSelection` when the selection overlap is below
    the orthogonality floor.
    """
    i0, i1 = pre.amplitudes()
    f0, f1 = post.amplitudes()
    overlap = np.conjugate(f0) * i0 + np.conjugate(f1) * i1
    if abs(overlap) < OVERLAP_FLOOR:
        raise OrthogonalSelection(
            f"selection overlap {abs(overlap):.3e} is below {OVERLAP_FLOOR:.0e}"
        )
    return complex((np.conjugate(f0) * i0 - np.conjugate(f1) * i1) / overlap)


# --- closed-form ingredients ------------------------------------------------

def _envelope(setup):
    gp = setup.coupling.total
    return math.exp(-((setup.pointer.sigma * gp) ** 2))


def _phase_mismatch(setup):
    return 2.0 * setup.pointer.q0 * setup.coupling.total - setup.phase_gap


def post_selected_amplitude(setup, q):
    """Unnormalized conditional pointer amplitude A(q) (accepts arrays)."""
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    q = np.asarray(q, dtype=float)
    phase = np.exp(1j * gp * q)
    gap = complex(math.cos(setup.phase_gap), math.sin(setup.phase_gap))
    return (a * phase + b * gap / phase) * setup.pointer.wavefunction(q)


def branch_interference(setup, q):
    """Squared modulus of the two-branch phase factor, |A(q) / f(q)|^2.

    Uses the half-angle form (a-b)^2 + 4ab cos^2(x/2), which stays accurate
    near destructive interference where the naive expression cancels.
    """
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    q = np.asarray(q, dtype=float)
    half = 0.5 * (2.0 * gp * q - setup.phase_gap)
    return (a - b) ** 2 + 4.0 * a * b * np.cos(half) ** 2


def post_selection_probability(setup):
    """Probability p_d that a trial survives post-selection (closed form)."""
    a, b = setup.branch_weights()
    p = a * a + b * b + 2.0 * a * b * _envelope(setup) * math.cos(_phase_mismatch(setup))
    return max(p, 0.0)


def post_selection_probability_derivative(setup):
    """Exact derivative d p_d / d g at the setup's coupling."""
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    sigma, q0 = setup.pointer.sigma, setup.pointer.q0
    mismatch = _phase_mismatch(setup)
    return (
        -4.0
        * a
        * b
        * _envelope(setup)
        * (sigma**2 * gp * math.cos(mismatch) + q0 * math.sin(mismatch))
    )


def default_quadrature_spec(setup, max_nodes=100_000):
    """Quadrature spec over the pointer support, resolving the fringe pattern.

    The conditional density oscillates at angular frequency 2 g'; the
    starting node count keeps at least 20 nodes per oscillation period.
    """
    lower, upper = setup.pointer.support()
    periods = (upper - lower) * abs(setup.coupling.total) / math.pi
    min_nodes = int(max(64, 32 * math.ceil(periods)))
    min_nodes = min(min_nodes, max_nodes)
    return QuadratureSpec(lower=lower, upper=upper, max_nodes=max_nodes, min_nodes=min_nodes)


def post_selection_probability_quadrature(setup, spec=None):
    """p_d evaluated by direct quadrature of |A(q)|^2 (cross-check route)."""
    spec = spec or default_quadrature_spec(setup)
    return integrate(
        lambda q: branch_interference(setup, q) * setup.pointer.density(q), spec
    )


def readout_density(setup, q):
    """Conditional readout density P(q | accepted) (accepts arrays)."""
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    return branch_interference(setup, q) * setup.pointer.density(q) / p_d


@dataclass(frozen=True)
class PointerGrid:
    """Uniform evaluation grid for tabulated conditional densities."""

    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if self.upper <= self.lower:
            raise ValueError("grid must satisfy lower < upper")
        if self.n < 2:
            raise ValueError("grid needs at least 2 nodes")

    def points(self):
        return np.linspace(self.lower, self.upper, self.n)


@dataclass(frozen=True)
class PointerDistribution:
    """Conditional readout distribution: tabulated values plus exact pdf."""

    setup: PPSMSetup
    grid: PointerGrid
    q: np.ndarray
    values: np.ndarray
    p_d: float

    def pdf(self, q):
        """Exact (closed-form) density at arbitrary points."""
        return readout_density(self.setup, q)


def pointer_pdf(setup, grid=None):
    """Conditional readout distribution after post-selection.

    Raises :class:`ZeroPostSelection` when p_d is below the floor.  The
    default grid covers the truncated pointer support with enough nodes to
    resolve the interference fringes (at least 20 per period).
    """
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    if grid is None:
        lower, upper = setup.pointer.support()
        periods = (upper - lower) * abs(setup.coupling.total) / math.pi
        n = int(max(4097, 32 * math.ceil(periods) + 1))
        grid = PointerGrid(lower=lower, upper=upper, n=n)
    q = grid.points()
    values = branch_interference(setup, q) * setup.pointer.density(q) / p_d
    return PointerDistribution(setup=setup, grid=grid, q=q, values=values, p_d=p_d)


# --- conditional pointer shift ----------------------------------------------

def pointer_shift(setup):
    """Exact shift of the conditional pointer mean, <q>_accepted - q0."""
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    sigma2 = setup.pointer.sigma**2
    return -2.0 * a * b * sigma2 * gp * _envelope(setup) * math.sin(_phase_mismatch(setup)) / p_d


def linearized_shift(setup, case):
    """Small-coupling approximation of :func:`pointer_shift`.

    balanced   : -sigma^2 g' cot(phi/2), valid for |g' sigma| < |phi| / 2;
    unbalanced : (2 q0 g' - phi) / g', valid near the zero crossing and
                 requiring g' != 0.

    phi is the setup's selection angle.  Raises :class:`RegimeViolation`
    outside the stated validity region.
    """
    gp = setup.coupling.total
    sigma = setup.pointer.sigma
    phi = setup.selection_angle
    if case == "balanced":
        if not abs(gp * sigma) < 0.5 * abs(phi):
            raise RegimeViolation(
                f"|g' sigma| = {abs(gp * sigma):.3e} is not below |phi|/2 = {0.5 * abs(phi):.3e}"
            )
        return -(sigma**2) * gp / math.tan(0.5 * phi)
    if case == "unbalanced":
        if gp == 0.0:
            raise RegimeViolation("unbalanced approximation requires g' != 0")
        return (2.0 * setup.pointer.q0 * gp - phi) / gp
    raise ValueError(f"unknown case {case!r}")
