"""Binary tests, pretty-good measurements, the tilting constants and an inequality harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .info import (
    CqEnsemble,
    hayashi_sides,
    petz_divergence,
    random_cq_ensemble,
)
from .integrals import dlog, dlog_on_support, integral_quotient
from .linalg import (
    _herm,
    derive_seed,
    hermitian,
    mpow,
    noncommutative_min,
    partial_trace,
    positive_part_projection,
    psd,
    random_density,
    random_psd,
    rng_from,
    same_dim,
    tr,
    trace_norm,
    zero_projection,
)
from .parallel import ordered_map

POVM_TOL = 1e-9


class LabelMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Povm:
    """PSD effects with ``Σ effects ≤ I``; the completion ``I - Σ`` is implicit."""

    effects: tuple

    def __init__(self, effects: Sequence[np.ndarray]):
        effs = tuple(_herm(np.asarray(e, dtype=complex)) for e in effects)
        if not effs:
            raise ValueError("a POVM needs at least one effect")
        same_dim(*effs)
        for e in effs:
            w = np.linalg.eigvalsh(e)
            if w[0] < -1e-10 * max(1.0, w[-1]):
                raise ValueError(f"effect has negative eigenvalue {w[0]:.3e}")
        top = np.linalg.eigvalsh(sum(effs))[-1]
        if top > 1 + POVM_TOL:
            raise ValueError(f"effects sum beyond identity ({top:.12f})")
        object.__setattr__(self, "effects", effs)

    def completion(self) -> np.ndarray:
        d = self.effects[0].shape[0]
        return _herm(np.eye(d) - sum(self.effects))


# -- binary discrimination ---------------------------------------------------------

def helstrom_error(a, b) -> float:
    """``Tr[A ∧ B] = (Tr[A+B] - ||A-B||_1)/2``."""
    a = psd(a)
    b = psd(b)
    same_dim(a, b)
    return 0.5 * (tr(a + b) - trace_norm(a - b))


@dataclass(frozen=True)
class HelstromTest:
    test: np.ndarray
    delta: float


def helstrom_test(a, b, delta: float = 0.0) -> HelstromTest:
    """``T = {A > B} + δ {A = B}``; ``T`` is the effect for guessing ``A``."""
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    x = hermitian(a) - hermitian(b)
    t = positive_part_projection(x)
    if delta:
        t = t + delta * zero_projection(x)
    return HelstromTest(_herm(t), float(delta))


def test_error(a, b, t: np.ndarray) -> float:
    """``Tr[A(I - T)] + Tr[B T]``."""
    d = t.shape[0]
    return tr(a @ (np.eye(d) - t)) + tr(b @ t)


def chernoff_bound(a, b, alphas=None) -> tuple[float, float]:
    """``min_α Tr[A^α B^{1-α}]`` over a grid (101 points on ``[0, 1]`` by default)."""
    a = psd(a)
    b = psd(b)
    grid = np.linspace(0.0, 1.0, 101) if alphas is None else np.asarray(alphas, dtype=float)
    vals = np.array([tr(mpow(a, al) @ mpow(b, 1 - al)) for al in grid])
    j = int(np.argmin(vals))
    return max(float(vals[j]), 0.0), float(grid[j])


# -- pretty-good measurements -------------------------------------------------------

def _likelihoods(ens: CqEnsemble, alpha: float) -> list[np.ndarray]:
    return [mpow(w, alpha) for w in ens.weighted()]


def conventional_pgm(ens: CqEnsemble, alpha: float = 1.0) -> Povm:
    """Effects ``S^{-1/2} (p ρ)^α S^{-1/2}`` with ``S = Σ (p ρ)^α``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lik = _likelihoods(ens, alpha)
    isq = mpow(sum(lik), -0.5)
    return Povm([isq @ x @ isq for x in lik])


def integral_pgm(ens: CqEnsemble, alpha: float = 1.0) -> Povm:
    """Effects ``D log[S]((p ρ)^α)`` on ``supp(S)``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lik = _likelihoods(ens, alpha)
    s = sum(lik)
    return Povm([dlog_on_support(s, x) for x in lik])


def povm_error(ens: CqEnsemble, m: Povm, label_map: Sequence[int] | None = None) -> float:
    """``1 - Σ_x p(x) Tr[ρ^x Λ^{label(x)}]``."""
    label_map = list(range(ens.k)) if label_map is None else list(label_map)
    if len(label_map) != ens.k or any(not 0 <= j < len(m.effects) for j in label_map):
        raise LabelMismatch("label map does not match the ensemble and POVM")
    success = sum(px * tr(s @ m.effects[j]) for px, s, j in zip(ens.prior, ens.states, label_map))
    return 1.0 - success


def collision_quantities(ens: CqEnsemble) -> tuple[float, float]:
    """``(Q̃_2, Q̊_2)`` of ``ρ_XB`` against ``I ⊗ ρ̄``, computed blockwise."""
    avg = ens.average()
    q4 = mpow(avg, -0.25)
    q_sand = 0.0
    q_int = 0.0
    for w in ens.weighted():
        y = q4 @ w @ q4
        q_sand += tr(y @ y)
        q_int += tr(w @ dlog_on_support(avg, w))
    return q_sand, q_int


# -- tilting constants ------------------------------------------------------------------

def c1(alpha: float) -> float:
    x = (1 - alpha) / alpha
    if x <= 0:
        return 1.0
    if x >= 1:
        return math.inf
    return x * math.pi / math.sin(x * math.pi)


def c2(alpha: float) -> float:
    if alpha >= 1:
        return math.inf
    kappa = (2 * alpha) ** (-1 / alpha) * (1 - 1 / (2 * alpha)) ** (2 - 1 / alpha)
    return kappa * alpha / (1 - alpha)


def c_alpha(alpha: float) -> float:
    if not 0.5 <= alpha <= 1:
        raise ValueError("the tilting constant is defined for alpha in [1/2, 1]")
    return min(c1(alpha), c2(alpha))


def c_alpha_sup() -> tuple[float, float]:
    """Location and value of ``max_α min(c1, c2)``: the crossing of the two branches.

    ``c1`` decreases and ``c2`` increases on ``(1/2, 1)``, so the maximum of
    the minimum sits at their unique crossing.
    """
    a = brentq(lambda t: c1(t) - c2(t), 0.55, 0.99, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return a, c_alpha(a)


@dataclass
class TiltingReport:
    alpha: float
    lhs: float
    rhs_core: float
    c1: float
    c2: float
    c: float

    @property
    def margin(self) -> float:
        return self.c * self.rhs_core - self.lhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs_core if self.rhs_core > 0 else math.nan


def tilting_report(a, b, alpha: float) -> TiltingReport:
    """Both sides of ``Tr[A B^α/(A^α + B^α)] ≤ c_α Tr[A^α B^{1-α}]``."""
    a = psd(a)
    b = psd(b)
    aa = mpow(a, alpha)
    ba = mpow(b, alpha)
    lhs = tr(a @ dlog_on_support(aa + ba, ba))
    rhs = tr(aa @ mpow(b, 1 - alpha))
    return TiltingReport(alpha, lhs, rhs, c1(alpha), c2(alpha), c_alpha(alpha))


# -- named inequalities ---------------------------------------------------------------------

def audenaert_sides(a, b, alpha: float) -> tuple[float, float]:
    aa, ba = mpow(a, alpha), mpow(b, alpha)
    p = positive_part_projection(ba - aa)
    return tr(a @ p), tr(aa @ mpow(b, 1 - alpha) @ p)


def araki_sides(x, y, s: float, g) -> tuple[float, float]:
    """``Tr[g(X)(X^{1/2} Y X^{1/2})^s]`` and ``Tr[g(X) X^s Y^s]`` with ``g`` a scalar map."""
    w, u = np.linalg.eigh(_herm(x))
    gx = (u * g(w)) @ u.conj().T
    xh = mpow(x, 0.5)
    lhs = tr(gx @ mpow(xh @ y @ xh, s))
    rhs = tr(gx @ mpow(x, s) @ mpow(y, s))
    return lhs, rhs


def araki_tilting_sides(a, b, alpha: float, t: float) -> tuple[float, float]:
    """The Araki-type step of the tilting bound with ``X = (t + A^α)^{-1}``, ``Y = B^α``."""
    d = a.shape[0]
    x = np.linalg.inv(mpow(a, alpha) + t * np.eye(d))
    s = 1 / alpha - 1

    def g(v):
        v = np.clip(v, 1e-300, None)
        return v ** (1 - 1 / alpha) * np.clip(1 - t * v, 0.0, None) ** (1 / alpha)

    return araki_sides(_herm(x), mpow(b, alpha), s, g)


def jensen_margin(y_ab, tau_b, dims: tuple[int, int], alpha: float) -> float:
    """Least eigenvalue of ``(Tr_B[Y τ^{1-α}])^{(1-α)/α} - Tr_B[τ^α Y^{(1-α)/α}]`` on A."""
    d_a, _ = dims
    e = (1 - alpha) / alpha
    lhs = partial_trace(np.kron(np.eye(d_a), mpow(tau_b, alpha)) @ mpow(y_ab, e), dims, [0])
    rhs = mpow(_herm(partial_trace(y_ab @ np.kron(np.eye(d_a), mpow(tau_b, 1 - alpha)), dims, [0])), e)
    return float(np.linalg.eigvalsh(_herm(rhs - lhs))[0])


SUITE_PROPERTIES = (
    "audenaert",
    "araki_tilting",
    "araki_generic",
    "beigi_tomamichel",
    "operator_jensen",
    "collision",
    "quotient_vs_min",
    "petz_monotone",
    "hayashi",
    "tilting",
)


@dataclass
class SuiteReport:
    trials: int
    worst: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)
    worst_tilting_ratio: float = 0.0
    tolerance: float = 1e-9

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())


def _suite_trial(seed: int, index: int, dims: Sequence[int]) -> dict:
    rng = rng_from(derive_seed(seed, index))
    d = int(dims[index % len(dims)])
    alphas = (0.5, 0.6, 0.75, 0.9, 1.0)
    al = float(rng.uniform(0.5, 1.0))
    a = random_psd(d, rng)
    b = random_psd(d, rng)
    a, b = a / tr(a), b / tr(b)
    m: dict[str, float] = {}

    m["audenaert"] = min(r - l for l, r in (audenaert_sides(a, b, x) for x in alphas + (al,)))

    t = float(rng.exponential(1.0))
    l, r = araki_tilting_sides(a, b, al, t)
    m["araki_tilting"] = r - l
    s = float(rng.uniform(0.0, 1.0))
    c = float(rng.exponential(1.0))
    l, r = araki_sides(a, b, s, lambda v: np.clip(v, 1e-300, None) ** (-s) * np.exp(-c * v))
    m["araki_generic"] = r - l

    full = a + 1e-3 * np.eye(d)
    diff = dlog(full, b) - dlog(full + b, b)
    m["beigi_tomamichel"] = float(np.linalg.eigvalsh(diff)[0])

    d_b = 2 if d <= 3 else 1
    y = random_psd(d * d_b, rng)
    tau = random_density(d_b, rng)
    m["operator_jensen"] = jensen_margin(y / tr(y), tau, (d, d_b), al)

    ens = random_cq_ensemble(int(rng.integers(2, 4)), d, rng)
    qs, qi = collision_quantities(ens)
    m["collision"] = qs - qi

    a2, b2 = 0.5 * a, 0.5 * b
    m["quotient_vs_min"] = tr(noncommutative_min(a2, b2)) - tr(a2 @ integral_quotient(a2, b2))

    rho, sig = random_density(d, rng), random_density(d, rng)
    ds = [petz_divergence(rho, sig, x) for x in np.linspace(0.1, 1.0, 10)]
    m["petz_monotone"] = float(np.min(np.diff(ds)))

    l, r = hayashi_sides(ens, al)
    m["hayashi"] = r - l

    reports = [tilting_report(a, b, x) for x in np.linspace(0.5, 1.0, 6)]
    m["tilting"] = min(rep.margin for rep in reports)
    m["_ratio"] = max(rep.ratio for rep in reports)
    return m


def inequality_suite(seed: int = 0, trials: int = 100, dims: Sequence[int] = (2, 3), workers: int = 1) -> SuiteReport:
    """Evaluate every named inequality on seeded random instances.

    Margins are ``rhs - lhs`` (or a least eigenvalue for operator
    inequalities); a margin below ``-1e-9`` is a violation. Trials are
    independent and reduced in index order.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rows = ordered_map(lambda i: _suite_trial(seed, i, dims), range(trials), workers)
    rep = SuiteReport(trials)
    for name in SUITE_PROPERTIES:
        vals = np.array([row[name] for row in rows])
        rep.worst[name] = float(vals.min())
        rep.violations[name] = int(np.sum(vals < -rep.tolerance))
    rep.worst_tilting_ratio = float(max(row["_ratio"] for row in rows))
    return rep
