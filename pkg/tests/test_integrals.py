import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from tiltbound.integrals import (
    QuadratureDidNotConverge,
    QuadratureSpec,
    SingularBase,
    adaptive_integrate,
    change_of_variables_check,
    divided_differences,
    dlog,
    dlog_lieb_quadrature,
    extremal_decomposition,
    integral_quotient,
    layercake,
    tracial_min_integral,
)
from tiltbound.linalg import (
    ScalarFn,
    positive_part,
    random_density,
    random_hermitian,
    random_psd,
    support_projector,
    tr,
    trace_norm,
)

REFINE = QuadratureSpec(mode="refine")
HAD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
A12 = np.diag([1.0, 2.0])
B31 = np.diag([3.0, 1.0])


def _full(d, seed):
    a = random_psd(d, seed)
    return a / tr(a) + 0.05 * np.eye(d)


def test_divided_differences_limits():
    w = np.array([1.0, 1.0 + 1e-12, np.e])
    dd = divided_differences(w)
    assert dd[0, 1] == pytest.approx(1.0, rel=1e-10)
    assert dd[0, 2] == pytest.approx(1 / (np.e - 1), rel=1e-14)
    assert_allclose(np.diag(dd), 1 / w)


def test_dlog_examples():
    assert_allclose(dlog(A12, B31), np.diag([3.0, 0.5]))
    b = random_hermitian(3, 4)
    assert_allclose(dlog(np.eye(3), b), b, atol=1e-15)
    out = dlog(np.diag([1.0, np.e]), np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert out[0, 1].real == pytest.approx(0.581977, abs=1e-6)
    assert abs(out[0, 0]) < 1e-15 and abs(out[1, 1]) < 1e-15


def test_dlog_needs_full_support():
    with pytest.raises(SingularBase):
        dlog(np.diag([1.0, 0.0]), np.eye(2))


def test_lieb_quadrature_examples():
    assert_allclose(dlog_lieb_quadrature(np.eye(2), np.diag([1.0, -1.0])), np.diag([1.0, -1.0]), atol=1e-7)
    assert_allclose(dlog_lieb_quadrature(A12, B31), np.diag([3.0, 0.5]), atol=1e-7)


@pytest.mark.parametrize("q", [QuadratureSpec(), REFINE], ids=["panel", "refine"])
def test_layercake_commuting(q):
    assert_allclose(layercake(A12, B31, q), np.diag([3.0, 0.5]), atol=1e-9)
    assert_allclose(layercake(A12, np.zeros((2, 2)), q), np.zeros((2, 2)), atol=1e-15)
    assert_allclose(layercake(A12, -B31, q), -np.diag([3.0, 0.5]), atol=1e-9)


def test_layercake_random_dim4():
    a, b = _full(4, 11), random_hermitian(4, 12)
    assert_allclose(layercake(a, b, REFINE), dlog(a, b), atol=1e-5)
    assert_allclose(layercake(a, b), dlog(a, b), atol=1e-10)


def test_extremal_examples():
    rho = random_density(3, 2, rank=2)
    assert_allclose(extremal_decomposition(np.zeros((3, 3)), rho), support_projector(rho), atol=1e-12)
    assert_allclose(extremal_decomposition(rho, rho), 0.5 * support_projector(rho), atol=1e-12)
    a, b = random_psd(3, 5), random_psd(3, 6)
    assert_allclose(extremal_decomposition(a, b, REFINE), dlog(a + b, b), atol=1e-5)


def test_integral_quotient_examples():
    a, b = np.diag([1.0, 3.0]), np.diag([2.0, 1.0])
    assert_allclose(integral_quotient(a, b), np.diag([2 / 3, 0.25]))
    rho = random_density(3, 8, rank=2)
    assert_allclose(integral_quotient(np.zeros((3, 3)), rho), support_projector(rho), atol=1e-12)
    a = 0.5 * np.diag([0.7, 0.3])
    b = 0.5 * HAD @ np.diag([0.2, 0.8]) @ HAD
    w = np.linalg.eigvalsh(integral_quotient(a, b))
    assert w[0] >= -1e-12 and w[-1] <= 1 + 1e-12


def test_change_of_variables_examples():
    a, b = np.diag([1.0, 2.0]), np.diag([0.5, 3.0])
    lhs, rhs, gap = change_of_variables_check(a, b, ScalarFn.polynomial([1.0]))
    assert_allclose(lhs, np.diag([0.5, 1.5]), atol=1e-9)
    assert gap < 1e-9
    b = random_psd(3, 3)
    lhs, rhs, gap = change_of_variables_check(np.eye(3), b, ScalarFn.polynomial([0.0, 1.0]))
    assert_allclose(lhs, positive_part(b) @ positive_part(b) / 2, atol=1e-6)
    assert_allclose(rhs, lhs, atol=1e-6)
    _, _, gap = change_of_variables_check(_full(3, 1), random_psd(3, 2), ScalarFn.polynomial([1.0, -2.0, 0.5, 1.0]))
    assert gap <= 1e-5
    table = ScalarFn.table([0.0, 0.3, 1.0, 5.0], [0.0, 1.0, 1.5, 4.0])
    _, _, gap = change_of_variables_check(_full(3, 4), random_psd(3, 5), table)
    assert gap <= 1e-5


def test_tracial_min_examples():
    assert tracial_min_integral(np.diag([1.0, 4.0]), np.diag([3.0, 2.0])) == pytest.approx(3.0)
    a = random_psd(3, 3)
    assert tracial_min_integral(a, a) == pytest.approx(tr(a))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32))
def test_tracial_min_matches_helstrom_expression(seed):
    a, b = random_psd(2, seed), random_psd(2, seed + 1)
    want = 0.5 * (tr(a + b) - trace_norm(a - b))
    assert tracial_min_integral(a, b) == pytest.approx(want, abs=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 4))
def test_layercake_property(seed, d):
    a, b = _full(d, seed), random_hermitian(d, seed + 7)
    assert np.max(np.abs(layercake(a, b) - dlog(a, b))) <= 1e-10 * max(1, np.max(np.abs(dlog(a, b))))


def test_adaptive_integrate_polynomial_and_failure():
    def f(x, _tags):
        return np.cos(x)

    val = adaptive_integrate(f, np.array([0.0, 1.0]), np.zeros(1, dtype=int), rel_tol=1e-12, max_depth=20)
    assert val == pytest.approx(np.sin(1.0), rel=1e-13)

    def rough(x, _tags):
        return np.sign(np.sin(1e4 * x))

    with pytest.raises(QuadratureDidNotConverge) as exc:
        adaptive_integrate(rough, np.array([0.0, 1.0]), np.zeros(1, dtype=int), rel_tol=1e-14, max_depth=2)
    assert np.isfinite(exc.value.gap)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(mode="bogus")
    with pytest.raises(ValueError):
        QuadratureSpec(base_nodes=0)
