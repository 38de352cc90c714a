"""Information metrics for the coupled system-pointer model.

Three quantities are tracked, always in the same units (inverse squared
coupling):

* joint QFI of the full entangled state before any selection,
* F_d, the post-selected QFI weighted by the success probability,
* the classical Fisher information of the conditional position readout,
  also weighted by the success probability.

They obey cfi <= F_d <= max joint QFI, which is asserted wherever reports
are assembled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    PPSMSetup,
    branch_interference,
    default_quadrature_spec,
    post_selection_probability,
    post_selection_probability_derivative,
)
from .errors import (
    DegeneratePointer,
    EmptyRegion,
    HierarchyViolation,
    ZeroPostSelection,
)
from .numerics import HIERARCHY_RTOL, P_D_FLOOR, QuadratureSpec, integrate


# --- joint-state QFI --------------------------------------------------------

def qfi_joint(pre, pointer):
    """Joint QFI of the coupled state, 4 q0^2 + 2 sigma^2 - 4 cos^2(theta_i) q0^2.

    Independent of g and of the post-selected state; maximal when the
    initial system state is an equal superposition (cos theta_i = 0).
    """
    c = math.cos(pre.theta)
    q0, sigma = pointer.q0, pointer.sigma
    return 4.0 * q0**2 + 2.0 * sigma**2 - 4.0 * c**2 * q0**2


def qfi_joint_max(pointer):
    """Joint QFI maximized over the initial system state: 4 q0^2 + 2 sigma^2."""
    return 4.0 * pointer.q0**2 + 2.0 * pointer.sigma**2


def qfi_joint_quadrature(pre, pointer, max_nodes=100_000):
    """Joint QFI from the variance definition with numerically evaluated moments.

    Both pointer branches pick up phase derivatives +/- i q, so the QFI
    reduces to 4 (<q^2> - cos^2(theta_i) <q>^2) over the initial packet;
    the two moments are integrated numerically as a cross-check of
    :func:`qfi_joint`.
    """
    lower, upper = pointer.support()
    spec = QuadratureSpec(lower=lower, upper=upper, max_nodes=max_nodes)
    m1 = integrate(lambda q: q * pointer.density(q), spec)
    m2 = integrate(lambda q: q**2 * pointer.density(q), spec)
    c = math.cos(pre.theta)
    return 4.0 * (m2 - c**2 * m1**2)


# --- post-selected QFI ------------------------------------------------------

def qfi_postselected(setup, spec=None):
    """Success-weighted QFI of the normalized post-selected pointer state.

    Evaluates F_d = 4 p_d (<dPhi|dPhi> - |<Phi|dPhi>|^2) by quadrature.
    The derivative of the normalized state is assembled analytically from
    the branch amplitudes and the closed-form p_d and its derivative, so no
    numerical differentiation enters.
    """
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    spec = spec or default_quadrature_spec(setup)
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    gap = complex(math.cos(setup.phase_gap), math.sin(setup.phase_gap))
    xi = math.sqrt(p_d)
    xi_prime = post_selection_probability_derivative(setup) / (2.0 * xi)
    pointer = setup.pointer

    def dphi(q):
        phase = np.exp(1j * gp * q)
        u = a * phase + b * gap / phase
        v = a * phase - b * gap / phase
        f = pointer.wavefunction(q)
        return (1j * q * v * xi - u * xi_prime) * f / p_d

    def phi(q):
        phase = np.exp(1j * gp * q)
        return (a * phase + b * gap / phase) * pointer.wavefunction(q) / xi

    norm2 = integrate(lambda q: np.abs(dphi(q)) ** 2, spec)
    # |<Phi|dPhi>| <= sqrt(norm2) by Cauchy-Schwarz; both overlap components
    # may vanish identically through pointwise cancellation, so their
    # tolerance must come from that bound rather than from their own size.
    inner_spec = replace(
        spec, abs_tol=max(spec.abs_tol, spec.rel_tol * math.sqrt(max(norm2, 1.0)))
    )
    inner_re = integrate(lambda q: np.real(np.conjugate(phi(q)) * dphi(q)), inner_spec)
    inner_im = integrate(lambda q: np.imag(np.conjugate(phi(q)) * dphi(q)), inner_spec)
    return 4.0 * p_d * (norm2 - (inner_re**2 + inner_im**2))


# --- classical Fisher information of the readout ----------------------------

def cfi(setup, spec=None):
    """Success-weighted classical Fisher information of the position readout.

    Computes p_d * Integral P (d_g ln P)^2 dq with the score taken
    analytically from the closed-form density.  Expanding the square gives

        cfi = Integral (d_g W)^2 / W dq  -  (d_g p_d)^2 / p_d,

    where W is the unnormalized density; the first integrand is evaluated
    in a half-angle form that stays finite at interference zeros.
    """
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    spec = spec or default_quadrature_spec(setup)
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    gap = setup.phase_gap
    pointer = setup.pointer

    def score_weight(q):
        # (d_g W)^2 / W with W = |u|^2 f^2: the ratio
        # 64 a^2 b^2 s^2 c^2 / ((a-b)^2 + 4 a b c^2) is bounded and smooth;
        # at an exact zero of the denominator (a = b and c = 0) its limit
        # is 16 a b s^2.
        half = 0.5 * (2.0 * gp * q - gap)
        s2 = np.sin(half) ** 2
        c2 = np.cos(half) ** 2
        denom = (a - b) ** 2 + 4.0 * a * b * c2
        safe = np.where(denom > 0.0, denom, 1.0)
        ratio = np.where(denom > 0.0, 64.0 * a**2 * b**2 * s2 * c2 / safe, 16.0 * a * b * s2)
        return q**2 * ratio * pointer.density(q)

    t1 = integrate(score_weight, spec)
    dp = post_selection_probability_derivative(setup)
    return t1 - dp**2 / p_d


# --- operating point helpers ------------------------------------------------

def optimal_modulation(g_nominal, pointer, phi, case):
    """Modulation that centers the informative operating point on g_nominal.

    balanced   : g_M = -g_nominal (null the total coupling);
    unbalanced : g_M = phi / (2 q0) - g_nominal (place the fringe minimum
                 of the success probability at the nominal coupling).
    """
    if case == "balanced":
        return -g_nominal
    if case == "unbalanced":
        if abs(pointer.q0) < 1e-12 * pointer.sigma:
            raise DegeneratePointer(
                "unbalanced modulation requires a pointer offset |q0| >> 0"
            )
        return phi / (2.0 * pointer.q0) - g_nominal
    raise ValueError(f"unknown case {case!r}")


def sensitivity(setup):
    """Exact slope d(shift)/dg of the conditional pointer-mean shift."""
    p_d = post_selection_probability(setup)
    if p_d <= P_D_FLOOR:
        raise ZeroPostSelection(f"post-selection probability {p_d:.3e} is below the floor")
    a, b = setup.branch_weights()
    gp = setup.coupling.total
    sigma2 = setup.pointer.sigma**2
    q0 = setup.pointer.q0
    mism = 2.0 * q0 * gp - setup.phase_gap
    env = math.exp(-sigma2 * gp**2)
    # shift = -2 a b sigma^2 G / P with G = g' E sin(D), P = p_d.
    g_term = gp * env * math.sin(mism)
    g_slope = env * ((1.0 - 2.0 * sigma2 * gp**2) * math.sin(mism) + 2.0 * q0 * gp * math.cos(mism))
    p_slope = post_selection_probability_derivative(setup)
    return -2.0 * a * b * sigma2 * (g_slope * p_d - g_term * p_slope) / p_d**2


@dataclass(frozen=True)
class RegionBounds:
    """Coupling interval where the linearized response is trusted."""

    case: str
    center_g: float
    lower_g: float
    upper_g: float
    fraction: float

    def __post_init__(self):
        if not self.lower_g < self.center_g < self.upper_g:
            raise ValueError("region must satisfy lower < center < upper")

    def contains(self, g):
        return self.lower_g <= g <= self.upper_g


def region_bounds(setup, case, fraction=0.1):
    """Operating region of the linear response around the modulated point.

    balanced   : |g' sigma| <= fraction * |phi|, centered on g' = 0;
    unbalanced : |g' q0 - phi/2| <= fraction * |g' sigma|, an interval of
                 couplings sharing the sign of phi / q0.

    Raises :class:`EmptyRegion` when the unbalanced inequalities admit no
    bounded interval (phi = 0, or |q0| <= fraction * sigma).
    """
    if not 0.0 < fraction < 0.5:
        raise ValueError(f"fraction must lie in (0, 1/2), got {fraction}")
    phi = setup.selection_angle
    sigma = setup.pointer.sigma
    q0 = setup.pointer.q0
    g_M = setup.coupling.g_M
    if case == "balanced":
        half = fraction * abs(phi) / sigma
        if half == 0.0:
            raise EmptyRegion("balanced region is empty at phi = 0")
        return RegionBounds(
            case=case,
            center_g=-g_M,
            lower_g=-g_M - half,
            upper_g=-g_M + half,
            fraction=fraction,
        )
    if case == "unbalanced":
        if phi == 0.0:
            raise EmptyRegion("unbalanced region is undefined at phi = 0")
        d_minus = abs(q0) - fraction * sigma
        if d_minus <= 0.0:
            raise EmptyRegion(
                f"no bounded region: |q0| = {abs(q0)} does not exceed fraction*sigma = {fraction * sigma}"
            )
        d_plus = abs(q0) + fraction * sigma
        sign = math.copysign(1.0, phi) * math.copysign(1.0, q0)
        magnitude = 0.5 * abs(phi)
        ends = sorted((sign * magnitude / d_plus, sign * magnitude / d_minus))
        return RegionBounds(
            case=case,
            center_g=phi / (2.0 * q0) - g_M,
            lower_g=ends[0] - g_M,
            upper_g=ends[1] - g_M,
            fraction=fraction,
        )
    raise ValueError(f"unknown case {case!r}")


# --- consolidated report ----------------------------------------------------

@dataclass(frozen=True)
class FisherReport:
    """All three information quantities at one coupling value."""

    at_g: float
    qfi_joint: float
    qfi_joint_max: float
    fd_postselected: float
    cfi: float

    def __post_init__(self):
        tol = HIERARCHY_RTOL * max(1.0, self.qfi_joint_max)
        if self.cfi > self.fd_postselected + tol:
            raise HierarchyViolation(
                f"cfi {self.cfi} exceeds F_d {self.fd_postselected} beyond tolerance"
            )
        if self.fd_postselected > self.qfi_joint_max + tol:
            raise HierarchyViolation(
                f"F_d {self.fd_postselected} exceeds the joint maximum {self.qfi_joint_max}"
            )
        if self.cfi < -tol:
            raise HierarchyViolation(f"cfi {self.cfi} is negative beyond tolerance")


def fisher_report(setup):
    """Assemble a validated :class:`FisherReport` at the setup's coupling."""
    return FisherReport(
        at_g=setup.coupling.g,
        qfi_joint=qfi_joint(setup.pre, setup.pointer),
        qfi_joint_max=qfi_joint_max(setup.pointer),
        fd_postselected=qfi_postselected(setup),
        cfi=cfi(setup),
    )
