import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ssm_beam.projection import CubicProjector, cube_coefficients, cubic_projection, quartic_integral

coeffs = arrays(np.float64, st.integers(1, 12), elements=st.floats(-2, 2))


def collocation_cube(a, kappa, oversample=4):
    """Sample on a 4N interior grid, cube pointwise, project back with sine quadrature."""
    n = a.size
    m = oversample * n
    x = np.pi * np.arange(1, m) / m
    s = np.sin(np.outer(np.arange(1, n + 1), x))
    return -kappa * (2 / m) * s @ ((a @ s) ** 3)


def test_sine_cubed_identity():
    e1 = np.zeros(4)
    e1[0] = 1.0
    assert np.array_equal(cubic_projection(e1, 1.0), [-0.75, 0.0, 0.25, 0.0])


def test_zero_kappa():
    assert np.array_equal(cubic_projection(np.ones(5), 0.0), np.zeros(5))


def test_against_collocation(rng):
    a = rng.normal(size=8)
    assert np.max(np.abs(cubic_projection(a, 1.3) - collocation_cube(a, 1.3))) < 1e-12


def test_against_quadrature(rng):
    from scipy.integrate import quad

    a = rng.normal(size=5)

    def u(x):
        return sum(c * np.sin((k + 1) * x) for k, c in enumerate(a))

    ref = [2 / np.pi * quad(lambda x: u(x) ** 3 * np.sin(n * x), 0, np.pi, limit=200)[0] for n in range(1, 6)]
    assert np.allclose(cube_coefficients(a), ref, atol=1e-12)


def test_extended_output_reaches_triple_index(rng):
    a = rng.normal(size=3)
    full = cube_coefficients(a, n_out=12)
    assert np.all(full[9:] == 0)
    assert abs(full[8]) > 0


@settings(max_examples=60, deadline=None)
@given(coeffs, st.floats(0, 3))
def test_odd(a, kappa):
    assert np.allclose(cubic_projection(-a, kappa), -cubic_projection(a, kappa), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(coeffs)
def test_matrix_form_agrees(a):
    if a.size < 1:
        return
    scale = 1 + np.max(np.abs(a)) ** 3
    assert np.allclose(CubicProjector(a.size)(a, 1.0), cubic_projection(a, 1.0), atol=1e-12 * scale)


def test_batched(rng):
    a = rng.normal(size=(3, 7))
    batched = cubic_projection(a, 2.0)
    for row, out in zip(a, batched):
        assert np.allclose(cubic_projection(row, 2.0), out, atol=1e-13)


def test_quartic_integral_single_mode():
    # int_0^pi sin^4 = 3 pi / 8
    assert quartic_integral(np.array([1.0, 0, 0])) == pytest.approx(3 * np.pi / 8, rel=1e-14)


def test_quartic_integral_against_quadrature(rng):
    from scipy.integrate import quad

    a = rng.normal(size=6)
    ref = quad(lambda x: np.dot(a, np.sin(np.arange(1, 7) * x)) ** 4, 0, np.pi, limit=200)[0]
    assert quartic_integral(a) == pytest.approx(ref, rel=1e-12)
