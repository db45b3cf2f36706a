import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rhtau.contour import (
    EXTERIOR,
    INTERIOR,
    ContourGrid,
    boundary_value,
    cauchy_project,
    cauchy_transform,
    continuous_log,
    contour_integral,
    derivative_along,
    laurent_transform,
    sample_on_grid,
    spectral_derivative,
    winding_number,
)
from rhtau.errors import EvaluationError, NearZeroOnContour, PhaseJumpTooLarge


def series_of(func, n=64, radius=1.0):
    g = ContourGrid(radius, n)
    return laurent_transform(sample_on_grid(func, g), g), g


# grid construction -----------------------------------------------------------

@pytest.mark.parametrize("radius", [0.3, 1.0, 2.5])
@pytest.mark.parametrize("n", [16, 256])
def test_weights_integrate_one_and_inverse(radius, n):
    g = ContourGrid(radius, n)
    assert abs(np.sum(g.weights)) < 1e-14 * radius
    assert abs(np.sum(g.weights / g.nodes) - 2j * np.pi) < 1e-13
    assert np.allclose(np.abs(g.nodes), radius, rtol=0, atol=1e-15 * radius)


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        ContourGrid(1.0, 12)
    with pytest.raises(ValueError):
        ContourGrid(-1.0, 16)


@pytest.mark.parametrize("j", range(-31, 32))
def test_quadrature_exact_on_monomials(j):
    g = ContourGrid(1.0, 64)
    expected = 2j * np.pi if j == -1 else 0
    assert abs(contour_integral(g.nodes ** j, g) - expected) < 1e-12


# sampling ---------------------------------------------------------------------

def test_sample_constant_and_identity():
    g = ContourGrid(1.0, 8)
    assert np.array_equal(sample_on_grid(lambda z: 1.0, g), np.ones(8))
    four = sample_on_grid(lambda z: z, ContourGrid(1.0, 4))
    assert np.allclose(four, [1, 1j, -1, -1j], atol=1e-15)


def test_sample_reports_failing_node():
    g = ContourGrid(1.0, 8)

    def bad(z):
        if z.size > 1:
            raise RuntimeError("vectorized")
        if abs(z[0] + 1) < 1e-12:
            raise ZeroDivisionError("boom")
        return z

    with pytest.raises(EvaluationError) as info:
        sample_on_grid(bad, g)
    assert info.value.index == 4


def test_exp_taylor_coefficients():
    s, _ = series_of(np.exp, 256)
    for j in range(20):
        assert abs(s.coefficient(j) - 1 / math.factorial(j)) < 1e-12
    assert max(abs(s.coefficient(j)) for j in range(-128, 0)) < 1e-14


# Laurent transform ---------------------------------------------------------------

def test_monomial_and_two_term():
    s, _ = series_of(lambda z: z ** 2)
    assert abs(s.coefficient(2) - 1) < 1e-14
    others = [abs(c) for j, c in s.coefficients.items() if j != 2]
    assert max(others) < 1e-13
    s, _ = series_of(lambda z: z + 1 / z)
    assert abs(s.coefficient(1) - 1) < 1e-14 and abs(s.coefficient(-1) - 1) < 1e-14


def test_bessel_constant_term():
    # I_0(1) from its power series sum (1/4)^k / (k!)^2
    i0 = sum(0.25 ** k / math.factorial(k) ** 2 for k in range(30))
    s, _ = series_of(lambda z: np.exp(0.5 * (z + 1 / z)))
    assert abs(s.coefficient(0) - i0) < 1e-14
    assert abs(i0 - 1.2660658777520082) < 1e-15


def test_coefficients_on_other_radius():
    s, _ = series_of(lambda z: 3 * z ** 2 - 1 / z, radius=0.4)
    assert abs(s.coefficient(2) - 3) < 1e-12 and abs(s.coefficient(-1) + 1) < 1e-12


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=32, max_size=32),
       st.sampled_from([0.5, 1.0, 1.7]))
def test_inverse_transform_round_trip(values, radius):
    g = ContourGrid(radius, 32)
    x = np.array(values)
    back = laurent_transform(x, g).to_samples(g)
    assert np.max(np.abs(back - x)) <= 1e-12 * max(1.0, np.max(np.abs(x)))


def test_evaluate_matches_samples_off_grid():
    f = lambda z: np.exp(z) / (z - 3)
    s, _ = series_of(f, 128)
    z = np.exp(1j * np.linspace(0, 6, 17)) * 1.05
    assert np.max(np.abs(s.evaluate(z) - f(z))) < 1e-12


def test_spectral_convergence_geometric():
    # exp(z + 1/z) has entire coefficients decaying like 1/j!^2; aliasing
    # error drops superexponentially once n resolves them
    f = lambda z: np.exp(z + 1 / z)
    exact = {j: sum(1 / (math.factorial(k) * math.factorial(k + abs(j))) for k in range(40))
             for j in range(-6, 7)}

    def residual(n):
        s, _ = series_of(f, n)
        return max(abs(s.coefficient(j) - c) for j, c in exact.items())

    assert residual(16) / max(residual(32), 1e-300) > 1e4
    assert residual(64) < 1e-14 and residual(128) < 1e-14


# projections and derivatives --------------------------------------------------------

def test_projection_examples():
    s, g = series_of(lambda z: z + 5 + 1 / z)
    plus = cauchy_project(s, INTERIOR)
    minus = cauchy_project(s, EXTERIOR)
    z = np.array([0.9, 1.1j, -1.0])
    assert np.allclose(plus.evaluate(z), z + 5, atol=1e-13)
    assert np.allclose(minus.evaluate(z), 1 / z, atol=1e-13)
    assert np.array_equal((plus + minus).normalized, s.normalized)


def test_projection_rejects_unknown_side():
    s, _ = series_of(lambda z: z)
    with pytest.raises(ValueError):
        cauchy_project(s, "left")


@given(st.integers(0, 2 ** 31 - 1))
def test_projection_idempotent_and_complementary(seed):
    r = np.random.default_rng(seed)
    g = ContourGrid(1.0, 32)
    s = laurent_transform(r.normal(size=32) + 1j * r.normal(size=32), g)
    for side in (INTERIOR, EXTERIOR):
        once = cauchy_project(s, side)
        assert np.array_equal(cauchy_project(once, side).normalized, once.normalized)
    total = cauchy_project(s, INTERIOR) + cauchy_project(s, EXTERIOR)
    assert np.array_equal(total.normalized, s.normalized)


def test_derivative_examples():
    s, _ = series_of(lambda z: z ** 2)
    d = derivative_along(s)
    assert abs(d.coefficient(1) - 2) < 1e-13
    s, _ = series_of(lambda z: 1 / z)
    d = derivative_along(s)
    assert abs(d.coefficient(-2) + 1) < 1e-13
    g = ContourGrid(1.0, 256)
    ds = derivative_along(laurent_transform(np.exp(g.nodes), g))
    assert np.max(np.abs(ds.evaluate(g.nodes) - np.exp(g.nodes))) < 1e-10
    assert np.max(np.abs(spectral_derivative(np.exp(g.nodes), g) - np.exp(g.nodes))) < 1e-10


# winding and logarithms --------------------------------------------------------------

def test_winding_examples():
    g = ContourGrid(1.0, 256)
    z = g.nodes
    assert winding_number(z) == 1
    assert winding_number(3 + z) == 0
    assert winding_number((z - 0.5) ** 2 / z) == 1


def test_winding_errors():
    g = ContourGrid(1.0, 256)
    with pytest.raises(NearZeroOnContour):
        winding_number(g.nodes - 1)
    with pytest.raises(PhaseJumpTooLarge):
        winding_number(ContourGrid(1.0, 8).nodes ** 3)


@given(st.floats(1e-3, 1e3), st.integers(-3, 3))
def test_winding_invariant_under_positive_scaling(c, k):
    z = ContourGrid(1.0, 64).nodes
    samples = z ** k * (2 + 0.5 * z)
    assert winding_number(c * samples) == winding_number(samples) == k


def test_continuous_log_examples():
    g = ContourGrid(1.0, 256)
    z = g.nodes
    ell = continuous_log(np.exp(z), 0, g)
    assert np.max(np.abs(ell - z)) < 1e-13
    assert np.max(np.abs(continuous_log(z, 1, g))) < 1e-14


@given(st.integers(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_continuous_log_round_trip(k, a, b):
    g = ContourGrid(1.0, 128)
    z = g.nodes
    s = z ** k * np.exp(a * z + b / z) * (3 - z)
    ell = continuous_log(s, k, g)
    assert -np.pi < ell[0].imag <= np.pi
    assert np.max(np.abs(np.exp(ell) * z ** k - s)) < 1e-12 * np.max(np.abs(s))


def test_continuous_log_rejects_wrong_index():
    g = ContourGrid(1.0, 64)
    with pytest.raises(ValueError):
        continuous_log(g.nodes, 0, g)


# Cauchy transform ----------------------------------------------------------------

def test_cauchy_transform_of_rational():
    # phi = 1/(z - a) with |a| < 1: exterior transform is phi, interior is 0
    g = ContourGrid(1.0, 128)
    a = 0.3 + 0.2j
    phi = 1 / (g.nodes - a)
    z_out = np.array([2.0, -1.5j, 1.02, 10.0])
    z_in = np.array([0.0, 0.5j, -0.97])
    assert np.max(np.abs(cauchy_transform(phi, g, z_out) + 1 / (z_out - a))) < 1e-12
    assert np.max(np.abs(cauchy_transform(phi, g, z_in))) < 1e-12


@given(st.integers(0, 2 ** 31 - 1))
def test_plemelj_jump(seed):
    r = np.random.default_rng(seed)
    g = ContourGrid(1.0, 64)
    c = r.normal(size=9) + 1j * r.normal(size=9)
    phi = sum(c[i] * g.nodes ** (i - 4) for i in range(9))
    jump = boundary_value(phi, g, INTERIOR) - boundary_value(phi, g, EXTERIOR)
    assert np.max(np.abs(jump - phi)) < 1e-12
