import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from tiltbound.info import CqEnsemble, random_cq_ensemble
from tiltbound.integrals import extremal_decomposition, integral_quotient
from tiltbound.linalg import mpow, random_density, random_psd, support_projector, tr
from tiltbound.measure import (
    LabelMismatch,
    Povm,
    c1,
    c2,
    c_alpha,
    c_alpha_sup,
    chernoff_bound,
    collision_quantities,
    conventional_pgm,
    helstrom_error,
    helstrom_test,
    inequality_suite,
    integral_pgm,
    povm_error,
    test_error as error_of_test,
    tilting_report,
)

HAD = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])


def test_helstrom_examples():
    assert helstrom_error(0.5 * np.diag([0.7, 0.3]), 0.5 * np.diag([0.2, 0.8])) == pytest.approx(0.25)
    rho = random_density(3, 1)
    assert helstrom_error(rho / 2, rho / 2) == pytest.approx(0.5)
    assert helstrom_error(KET0 / 2, KET1 / 2) == pytest.approx(0.0, abs=1e-15)


def test_helstrom_test_examples():
    a = np.diag([2.0, 3.0])
    assert_allclose(helstrom_test(a, np.diag([1.0, 1.0])).test, np.eye(2))
    rho = random_density(2, 3)
    t = helstrom_test(rho, rho, 0.5).test
    assert_allclose(t, np.eye(2) / 2, atol=1e-12)
    assert error_of_test(rho, rho, t) == pytest.approx(tr(rho))
    with pytest.raises(ValueError):
        helstrom_test(rho, rho, 1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.floats(0, 1))
def test_helstrom_test_is_optimal(seed, delta):
    a, b = 0.4 * random_density(2, seed), 0.6 * random_density(2, seed + 1)
    t = helstrom_test(a, b, delta).test
    assert error_of_test(a, b, t) == pytest.approx(helstrom_error(a, b), abs=1e-10)


def test_chernoff_examples():
    rho = random_density(2, 4)
    bound, _ = chernoff_bound(rho / 2, rho / 2)
    assert bound == pytest.approx(0.5)
    assert chernoff_bound(KET0 / 2, KET1 / 2)[0] == pytest.approx(0.0, abs=1e-15)
    a, b = 0.3 * random_density(2, 5), 0.7 * random_density(2, 6)
    assert chernoff_bound(a, b)[0] >= helstrom_error(a, b) - 1e-12


def test_pgm_examples():
    orth = CqEnsemble([0.5, 0.5], [KET0, KET1])
    m = conventional_pgm(orth, 1.0)
    assert_allclose(m.effects[0], KET0, atol=1e-12)
    assert povm_error(orth, m) == pytest.approx(0.0, abs=1e-12)
    rho = random_density(3, 2, rank=2)
    single = conventional_pgm(CqEnsemble([1.0], [rho]))
    assert_allclose(single.effects[0], support_projector(rho), atol=1e-12)


def test_pgm_commuting_and_binary():
    ens = CqEnsemble([0.3, 0.7], [np.diag([0.6, 0.4]), np.diag([0.1, 0.9])])
    for a in (0.5, 1.0):
        for e1, e2 in zip(conventional_pgm(ens, a).effects, integral_pgm(ens, a).effects):
            assert_allclose(e1, e2, atol=1e-12)
    ens = random_cq_ensemble(2, 2, 7)
    w = ens.weighted()
    ip = integral_pgm(ens, 1.0)
    assert_allclose(ip.effects[1], integral_quotient(w[0], w[1]), atol=1e-12)
    assert_allclose(ip.effects[1], extremal_decomposition(w[0], w[1]), atol=1e-10)


def test_pgm_relation_and_invariants():
    for seed in range(20):
        ens = random_cq_ensemble(3, 2, seed)
        conv, integ = conventional_pgm(ens), integral_pgm(ens)
        assert povm_error(ens, conv) <= povm_error(ens, integ) + 1e-10
        half = integral_pgm(ens, 0.5)
        assert np.linalg.eigvalsh(sum(half.effects))[-1] <= 1 + 1e-9
        qs, _ = collision_quantities(ens)
        assert 1 - povm_error(ens, conv) == pytest.approx(qs, rel=1e-10)


def test_uninformative_povm_and_labels():
    ens = random_cq_ensemble(3, 2, 1)
    m = Povm([np.eye(2) / 3] * 3)
    assert povm_error(ens, m) == pytest.approx(2 / 3)
    with pytest.raises(LabelMismatch):
        povm_error(ens, m, [0, 1])
    with pytest.raises(ValueError):
        Povm([np.eye(2), np.eye(2)])


def test_collision_examples():
    qs, qi = collision_quantities(CqEnsemble([1.0], [KET0]))
    assert qs == pytest.approx(1.0) and qi == pytest.approx(1.0)
    ens = CqEnsemble([0.4, 0.6], [np.diag([0.6, 0.4]), np.diag([0.1, 0.9])])
    qs, qi = collision_quantities(ens)
    assert qs == pytest.approx(qi, rel=1e-12)
    qs, qi = collision_quantities(random_cq_ensemble(2, 2, 3))
    assert qs > qi


def test_constants():
    a_star, value = c_alpha_sup()
    assert value == pytest.approx(1.1019112437185, abs=1e-8)
    assert 0.5 < a_star < 1
    assert c_alpha(1.0) == 1.0
    assert c_alpha(0.5) == pytest.approx(1.0)
    grid = np.linspace(0.5, 1.0, 201)
    assert max(min(c1(a), c2(a)) for a in grid) <= 1.102
    with pytest.raises(ValueError):
        c_alpha(0.4)


def test_tilting_examples():
    rho = random_density(3, 5)
    rep = tilting_report(rho, rho, 0.5)
    assert rep.lhs == pytest.approx(0.5)
    assert rep.rhs_core == pytest.approx(1.0)
    assert rep.c == pytest.approx(1.0)
    assert rep.margin == pytest.approx(0.5)
    a, b = np.diag([0.3, 1.2]), np.diag([0.8, 0.1])
    al = 0.7
    lhs = sum(x * y**al / (x**al + y**al) for x, y in zip([0.3, 1.2], [0.8, 0.1]))
    rhs = sum(x**al * y ** (1 - al) for x, y in zip([0.3, 1.2], [0.8, 0.1]))
    rep = tilting_report(a, b, al)
    assert rep.margin == pytest.approx(c_alpha(al) * rhs - lhs, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 4))
def test_tilting_holds(seed, d):
    a, b = random_psd(d, seed), random_psd(d, seed + 1)
    for al in np.linspace(0.5, 1, 21):
        assert tilting_report(a, b, al).margin >= -1e-10


def test_inequality_suite_small():
    rep = inequality_suite(seed=3, trials=30, dims=(2, 3))
    assert rep.ok, rep.violations
    assert 0 < rep.worst_tilting_ratio < c_alpha_sup()[1]


def test_inequality_suite_commuting_edge():
    # quotient vs minimum with A = B: Tr[A]/2 <= Tr[A]
    a = random_psd(2, 4)
    assert tr(a @ integral_quotient(a, a)) == pytest.approx(tr(a) / 2)
    assert tr(mpow(a, 1.0)) == pytest.approx(tr(a))
    assert math.isfinite(tr(a))
