"""Shared numerical services: adaptive quadrature, finite differences,
scalar search, and deterministic random streams.

Package-wide tolerance and truncation constants are defined here, in one
place, so every module applies the same numerical policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FlatFunction, NoConvergence

# --- numerical policy -------------------------------------------------------
GAUSSIAN_TAIL_SIGMAS = 12.0  # truncation half-width; tail mass beyond is < 1e-31
P_D_FLOOR = 1e-15            # success probabilities below this are treated as zero
OVERLAP_FLOOR = 1e-12        # state overlaps below this count as orthogonal
QUAD_ABS_TOL = 1e-12
QUAD_REL_TOL = 1e-12
HIERARCHY_RTOL = 1e-6        # slack for information-inequality checks
DENSITY_FLOOR = 1e-300       # likelihood evaluations below this abort

_NODES_PER_PANEL = 16
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration request over a fixed interval.

    ``min_nodes`` sets the starting resolution (the caller should scale it
    with the fastest oscillation of the integrand, at least 20 nodes per
    period); the node count is doubled until two successive estimates agree
    to tolerance or ``max_nodes`` is exceeded.
    """

    lower: float
    upper: float
    max_nodes: int = 100_000
    abs_tol: float = QUAD_ABS_TOL
    rel_tol: float = QUAD_REL_TOL
    min_nodes: int = 64

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("integration bounds must be finite")
        if self.upper <= self.lower:
            raise ValueError(f"empty integration interval [{self.lower}, {self.upper}]")
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.min_nodes < _NODES_PER_PANEL:
            raise ValueError(f"min_nodes must be >= {_NODES_PER_PANEL}")
        if self.max_nodes < self.min_nodes:
            raise ValueError("max_nodes must be >= min_nodes")


@lru_cache(maxsize=None)
def _panel_rule():
    return np.polynomial.legendre.leggauss(_NODES_PER_PANEL)


def _composite_rule(lower, upper, panels):
    """Gauss-Legendre nodes/weights for `panels` equal panels of the interval."""
    base_x, base_w = _panel_rule()
    edges = np.linspace(lower, upper, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    centers = 0.5 * (edges[:-1] + edges[1:])
    x = (centers[:, None] + half * base_x[None, :]).ravel()
    w = np.broadcast_to(half * base_w, (panels, _NODES_PER_PANEL)).ravel()
    return x, w


def integrate(f, spec):
    """Adaptive composite Gauss-Legendre integral of a vectorized callable.

    ``f`` must accept an ndarray of evaluation points and return an ndarray
    of the same shape.  Panel count doubles until two successive estimates
    agree within ``max(abs_tol, rel_tol * L1)`` where L1 is the integral of
    |f|; judging convergence against the L1 mass keeps cancellation-dominated
    integrals (true value near zero, large oscillating integrand) from
    chasing an unreachable absolute tolerance.  Raises :class:`NoConvergence`
    if ``max_nodes`` is reached first.
    """
    panels = max(1, -(-spec.min_nodes // _NODES_PER_PANEL))
    previous = None
    while panels * _NODES_PER_PANEL <= spec.max_nodes:
        x, w = _composite_rule(spec.lower, spec.upper, panels)
        fx = np.asarray(f(x), dtype=float)
        estimate = float(np.dot(w, fx))
        l1_mass = float(np.dot(w, np.abs(fx)))
        if previous is not None:
            if abs(estimate - previous) <= max(spec.abs_tol, spec.rel_tol * l1_mass):
                return estimate
        previous = estimate
        panels *= 2
    raise NoConvergence(
        f"quadrature did not reach tolerance within {spec.max_nodes} nodes "
        f"on [{spec.lower}, {spec.upper}]"
    )


def central_diff(f, x, h):
    """Symmetric two-point derivative estimate (f(x+h) - f(x-h)) / (2h)."""
    if h <= 0.0:
        raise ValueError("step h must be positive")
    return (f(x + h) - f(x - h)) / (2.0 * h)


def golden_section_max(f, lo, hi, tol):
    """Golden-section refinement of a maximum bracketed by [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def argmax_1d(f, interval, coarse_n=201, refine_tol=1e-10):
    """Locate the maximizer of a scalar function on a closed interval.

    A uniform coarse scan picks the best bracket, then golden-section
    refinement narrows it to ``refine_tol``.  Raises :class:`FlatFunction`
    when the coarse scan sees no variation above 1e-14 (relative).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if hi <= lo:
        raise ValueError("interval must satisfy lower < upper")
    if coarse_n < 3:
        raise ValueError("coarse_n must be at least 3")
    xs = np.linspace(lo, hi, coarse_n)
    values = np.array([f(x) for x in xs], dtype=float)
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        raise FlatFunction("function has no finite values on the interval")
    fmax, fmin = float(np.max(finite)), float(np.min(finite))
    if finite.size == values.size and (fmax - fmin) <= 1e-14 * max(1.0, abs(fmax)):
        raise FlatFunction("function is flat over the search interval")
    best = int(np.nanargmax(np.where(np.isfinite(values), values, -np.inf)))
    a = xs[max(best - 1, 0)]
    b = xs[min(best + 1, coarse_n - 1)]
    return golden_section_max(f, a, b, refine_tol)


def find_root(f, lo, hi, tol=1e-14, max_iter=200):
    """Bisection root of a scalar function with a sign change on [lo, hi]."""
    a, b = float(lo), float(hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise ValueError("no sign change on the bracket")
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0 or (b - a) <= tol * max(1.0, abs(m)):
            return m
        if fa * fm < 0.0:
            b, fb = m, fm
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


_MASK64 = (1 << 64) - 1
_SPLIT_MIX = 0x9E3779B97F4A7C15  # odd multiplier for deterministic stream splitting


@dataclass(frozen=True)
class RngStream:
    """Deterministic, forkable random stream keyed by (seed, stream_id).

    Identical (seed, stream_id, draw count) always reproduces identical
    output, independent of any other stream, which keeps replicated
    simulations order-independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if not (0 <= self.stream_id <= _MASK64):
            raise ValueError("stream_id must fit in 64 unsigned bits")

    def generator(self):
        """Fresh counter-based generator for this stream."""
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index):
        """Derive a distinct stream deterministically (index >= 0)."""
        if index < 0:
            raise ValueError("child index must be non-negative")
        mixed = (self.stream_id * _SPLIT_MIX + index + 1) & _MASK64
        return RngStream(self.seed, mixed)
