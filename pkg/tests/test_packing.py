import math
from collections import Counter

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import chisquare

from tiltbound.info import CqEnsemble, augustin_info, petz_divergence, random_cq_ensemble
from tiltbound.integrals import integral_quotient
from tiltbound.linalg import kron, random_density, random_kraus, tr
from tiltbound.measure import c_alpha
from tiltbound.packing import (
    DimensionTooLarge,
    EmptyConstraint,
    EnumerationTooLarge,
    SimConfig,
    TypeSpec,
    cc_exponent_bound,
    cc_random_coding,
    constrained_bound,
    constrained_random_coding,
    cq_decode_error,
    cq_random_coding,
    cqsw_random_binning,
    ea_position_coding,
    sample_type_class,
    unassisted_coding,
)

KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])
ORTH = CqEnsemble([0.5, 0.5], [KET0, KET1])
ALPHAS = np.linspace(0.5, 1.0, 6)
BELL = np.zeros((4, 4))
BELL[np.ix_([0, 3], [0, 3])] = 0.5


def test_decode_error_examples():
    rho = random_density(2, 1)
    assert cq_decode_error([rho], [0, 0], 0.8) == pytest.approx(0.5)
    assert cq_decode_error([KET0, KET1], [0, 1], 1.0) == pytest.approx(0.0, abs=1e-14)


def test_decode_error_binary_matches_quotient():
    a, b = random_density(2, 3), random_density(2, 4)
    want = 1 - 0.5 * (tr(a @ integral_quotient(b, a)) + tr(b @ integral_quotient(a, b)))
    assert cq_decode_error([a, b], [0, 1], 1.0) == pytest.approx(want, abs=1e-12)


def test_cq_single_letter_and_orthogonal():
    rho = random_density(2, 2)
    for M in (2, 3):
        res = cq_random_coding(CqEnsemble([1.0], [rho]), SimConfig(M, 0.9))
        assert res.error_estimate == pytest.approx((M - 1) / M)
        assert res.holds
    res = cq_random_coding(ORTH, SimConfig(2, 1.0))
    assert res.error_estimate == pytest.approx(0.25)
    assert res.bound == pytest.approx(c_alpha(1.0))
    assert res.margin > 0


def test_cq_random_channels_hold():
    for seed in range(10):
        ens = random_cq_ensemble(2 + seed % 2, 2, seed)
        for M in (2, 3):
            for al in ALPHAS:
                assert cq_random_coding(ens, SimConfig(M, al)).holds


def test_montecarlo_tracks_enumeration_and_is_deterministic():
    ens = random_cq_ensemble(3, 2, 8)
    exact = cq_random_coding(ens, SimConfig(3, 0.75)).error_estimate
    cfg = SimConfig(3, 0.75, mode="montecarlo", samples=3000, seed=11)
    a = cq_random_coding(ens, cfg)
    b = cq_random_coding(ens, SimConfig(3, 0.75, mode="montecarlo", samples=3000, seed=11, workers=4))
    assert a == b
    assert abs(a.error_estimate - exact) <= 4 * a.std_err


def test_enumeration_cap():
    ens = random_cq_ensemble(10, 2, 1)
    with pytest.raises(EnumerationTooLarge):
        cq_random_coding(ens, SimConfig(7, 0.8))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(0, 0.8)
    with pytest.raises(ValueError):
        SimConfig(2, 0.3)
    with pytest.raises(ValueError):
        SimConfig(2, 0.8, mode="guess")


def test_constrained_examples():
    ens = random_cq_ensemble(3, 2, 5)
    for al in ALPHAS:
        assert constrained_random_coding(ens, [0, 2], SimConfig(2, al)).holds
        assert constrained_random_coding(ens, [0, 1, 2], SimConfig(3, al)).holds
    mean = augustin_info(ens, 0.7).mean
    d = petz_divergence(ens.states[1], mean, 0.7)
    e = 0.3 / 0.7
    want = c_alpha(0.7) / ens.prior[1] ** (1 / 0.7) * 2 ** (-e * d)
    assert constrained_bound(ens, [1], 2, 0.7) == pytest.approx(want)
    with pytest.raises(EmptyConstraint):
        constrained_bound(ens, [], 2, 0.7)


def test_type_class_sampler_uniform():
    q = TypeSpec([1, 1])
    assert q.class_size() == 2 and q.members() == [(0, 1), (1, 0)]
    counts = Counter(sample_type_class(q, s) for s in range(10_000))
    assert set(counts) == {(0, 1), (1, 0)}
    assert chisquare(list(counts.values())).pvalue > 1e-3
    assert sample_type_class(TypeSpec([0, 3]), 1) == (1, 1, 1)


def test_cc_bound_single_letter_and_hold():
    states = [random_density(2, 1), random_density(2, 2)]
    q = TypeSpec([0, 1])
    b = cc_exponent_bound(q, states, 0.5, 0.8)
    core = math.log2(c_alpha(0.8))
    assert b.augustin == pytest.approx(0.0, abs=1e-12)
    assert b.log2_poly == pytest.approx(core + 0.25 * 0.5 + 2 / 0.8 * 1.0)
    for al in ALPHAS:
        for M in (2, 3):
            assert cc_random_coding(TypeSpec([1, 1]), states, SimConfig(M, al)).holds


def test_cc_commuting_augustin_matches_classical():
    states = [np.diag([0.9, 0.1]), np.diag([0.2, 0.8])]
    b = cc_exponent_bound(TypeSpec([1, 1]), states, 0.0, 0.5)
    ens = CqEnsemble([0.5, 0.5], states)
    assert b.augustin == pytest.approx(augustin_info(ens, 0.5).value)


def test_cqsw_examples():
    res = cqsw_random_binning(ORTH, SimConfig(2, 1.0))
    # bins collide with probability 1/2, then the pure orthogonal side information still resolves them
    assert res.error_estimate == pytest.approx(0.0, abs=1e-12)
    rho = random_density(2, 3)
    res = cqsw_random_binning(CqEnsemble([0.5, 0.5], [rho, rho]), SimConfig(1, 0.8))
    assert res.error_estimate == pytest.approx(0.5)
    for seed in range(8):
        src = random_cq_ensemble(2 + seed % 2, 2, seed)
        for al in ALPHAS:
            assert cqsw_random_binning(src, SimConfig(2 + seed % 2, al)).holds


def test_ea_examples():
    theta = kron(random_density(2, 1), random_density(2, 2))
    res = ea_position_coding([np.eye(2)], theta, (2, 2), 2, 0.8)
    assert res.error_estimate == pytest.approx(0.5)
    res = ea_position_coding([np.eye(2)], BELL, (2, 2), 2, 1.0)
    assert res.holds
    for seed in range(4):
        kraus = random_kraus(2, 2, 2, seed)
        for M in (2, 3):
            for al in ALPHAS:
                assert ea_position_coding(kraus, BELL, (2, 2), M, al).holds
    with pytest.raises(DimensionTooLarge):
        ea_position_coding([np.eye(2)], BELL, (2, 2), 12, 0.8)


def test_unassisted_examples():
    inputs = CqEnsemble([0.5, 0.5], [KET0, KET1])
    ident = unassisted_coding([np.eye(2)], inputs, SimConfig(2, 0.8))
    direct = cq_random_coding(inputs, SimConfig(2, 0.8))
    assert ident.error_estimate == pytest.approx(direct.error_estimate)
    assert ident.bound == pytest.approx(direct.bound)
    paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
    depol = [p / 2 for p in paulis]
    for M in (2, 3):
        res = unassisted_coding(depol, inputs, SimConfig(M, 0.99))
        assert res.error_estimate == pytest.approx((M - 1) / M)
        assert res.holds
    assert_allclose(sum(k.conj().T @ k for k in depol), np.eye(2))
