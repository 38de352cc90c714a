"""Quadrature, scalar search, and random-stream utilities."""

import math

import numpy as np
import pytest

from ppsm.errors import FlatFunction, NoConvergence
from ppsm.numerics import (
    QuadratureSpec,
    RngStream,
    argmax_1d,
    central_diff,
    find_root,
    golden_section_max,
    integrate,
)


def test_integrate_gaussian_moments():
    # Moments of exp(-q^2) have exact values via the error function.
    spec = QuadratureSpec(lower=-10.0, upper=10.0)
    total = integrate(lambda q: np.exp(-(q**2)), spec)
    second = integrate(lambda q: q**2 * np.exp(-(q**2)), spec)
    assert total == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert second == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-13)


def test_integrate_oscillatory():
    # int cos(w q) exp(-q^2/2) dq = sqrt(2 pi) exp(-w^2/2)
    w = 9.0
    spec = QuadratureSpec(lower=-12.0, upper=12.0, min_nodes=256)
    value = integrate(lambda q: np.cos(w * q) * np.exp(-0.5 * q**2), spec)
    exact = math.sqrt(2.0 * math.pi) * math.exp(-0.5 * w**2)
    assert value == pytest.approx(exact, abs=1e-13)


def test_integrate_no_convergence():
    # A 1/sqrt singularity at the edge defeats panel doubling at tight tolerance.
    spec = QuadratureSpec(lower=0.0, upper=1.0, max_nodes=2000, abs_tol=1e-15, rel_tol=1e-15)
    with pytest.raises(NoConvergence):
        integrate(lambda q: 1.0 / np.sqrt(np.abs(q) + 1e-300), spec)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(lower=1.0, upper=0.0)
    with pytest.raises(ValueError):
        QuadratureSpec(lower=0.0, upper=1.0, max_nodes=0)


def test_central_diff():
    f = math.sin
    for x in (0.0, 0.7, 2.0):
        assert central_diff(f, x, 1e-6) == pytest.approx(math.cos(x), abs=1e-9)


def test_golden_section_max():
    x_star = golden_section_max(lambda x: -((x - 0.37) ** 2), 0.0, 1.0, tol=1e-12)
    assert x_star == pytest.approx(0.37, abs=1e-10)


def test_argmax_1d_multimodal():
    # Global maximum of a two-bump function; the coarse scan must pick the
    # right basin before refinement.
    def f(x):
        return math.exp(-50.0 * (x - 1.0) ** 2) + 1.5 * math.exp(-50.0 * (x + 1.2) ** 2)

    x_star = argmax_1d(f, (-3.0, 3.0), coarse_n=301, refine_tol=1e-12)
    assert x_star == pytest.approx(-1.2, abs=1e-6)


def test_argmax_1d_handles_minus_inf():
    def f(x):
        return -math.inf if x < 0.0 else -((x - 0.5) ** 2)

    x_star = argmax_1d(f, (-1.0, 1.0), coarse_n=401, refine_tol=1e-12)
    assert x_star == pytest.approx(0.5, abs=1e-8)


def test_argmax_1d_flat():
    with pytest.raises(FlatFunction):
        argmax_1d(lambda x: 1.0, (0.0, 1.0), coarse_n=51, refine_tol=1e-10)


def test_find_root():
    root = find_root(lambda x: x**3 - 2.0, 0.0, 2.0)
    assert root == pytest.approx(2.0 ** (1.0 / 3.0), abs=1e-12)


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(123, 4).generator().random(8)
        b = RngStream(123, 4).generator().random(8)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 0).generator().random(8)
        b = RngStream(123, 1).generator().random(8)
        assert not np.array_equal(a, b)

    def test_child_streams_distinct(self):
        parent = RngStream(9)
        ids = {parent.child(i).stream_id for i in range(64)}
        assert len(ids) == 64
        assert all(parent.child(i) == parent.child(i) for i in range(4))

    def test_child_differs_from_parent(self):
        parent = RngStream(9, 5)
        assert parent.child(0).stream_id != parent.stream_id
