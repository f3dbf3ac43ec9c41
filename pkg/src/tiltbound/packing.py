"""Exact and Monte-Carlo random-coding simulators paired with their one-shot bounds.

Every decoder is the integral α-PGM: effects ``D log[S](L_m)`` with
``S = Σ_m L_m`` restricted to ``supp(S)``. Mass outside the support counts as
error. Enumeration is sharded into fixed-size chunks and reduced in chunk
order, so results do not depend on the worker count.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .info import (
    CqEnsemble,
    augustin_info,
    cond_trace,
    ea_trace,
    maximize_tilted,
    cond_renyi_entropy,
    _entropy,
    petz_divergence,
    sibson_trace,
)
from .integrals import dlog_on_support
from .linalg import (
    _herm,
    density,
    derive_seed,
    mpow,
    partial_trace,
    permute_subsystems,
    rng_from,
    tr,
)
from .measure import c_alpha
from .parallel import chunks, ordered_map

ENUM_CAP = 1_000_000
EA_DIM_CAP = 4096
SHARD = 512


class EnumerationTooLarge(ValueError):
    pass


class DimensionTooLarge(ValueError):
    pass


class EmptyConstraint(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    M: int
    alpha: float
    mode: str = "enumerate"
    samples: int = 1000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be positive")
        if not 0.5 <= self.alpha <= 1:
            raise ValueError("alpha must lie in [1/2, 1]")
        if self.mode not in {"enumerate", "montecarlo"}:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "montecarlo" and self.samples < 2:
            raise ValueError("montecarlo mode needs at least two samples")


@dataclass(frozen=True)
class SimResult:
    task: str
    M: int
    alpha: float
    error_estimate: float
    std_err: float
    samples: int
    seed: int
    bound: float
    bound_ref: str

    @property
    def margin(self) -> float:
        return self.bound - self.error_estimate

    @property
    def holds(self) -> bool:
        return self.error_estimate <= self.bound + 3 * self.std_err + 1e-9


def pgm_success(likelihoods: Sequence[np.ndarray], states: Sequence[np.ndarray], weights: Sequence[float]) -> float:
    """``Σ_m w_m Tr[ρ_m D log[S](L_m)]`` with ``S = Σ L_m`` on its support."""
    s = _herm(sum(likelihoods))
    return float(sum(w * tr(st @ dlog_on_support(s, lik)) for lik, st, w in zip(likelihoods, states, weights)))


# -- c-q channel coding ------------------------------------------------------------

def cq_decode_error(states: Sequence[np.ndarray], codebook: Sequence[int], alpha: float,
                    powers: Sequence[np.ndarray] | None = None) -> float:
    """Average error of the integral α-PGM decoder on one codebook."""
    powers = [mpow(s, alpha) for s in states] if powers is None else powers
    m = len(codebook)
    lik = [powers[x] for x in codebook]
    sts = [states[x] for x in codebook]
    return 1.0 - pgm_success(lik, sts, [1.0 / m] * m)


def cq_bound(ens: CqEnsemble, M: int, alpha: float) -> float:
    """``c_α (M-1)^{(1-α)/α} Tr[(Σ_x p(x)(ρ^x)^α)^{1/α}]``."""
    return c_alpha(alpha) * (M - 1) ** ((1 - alpha) / alpha) * sibson_trace(ens, alpha)


def _enumerate(k: int, n: int, weight_fn, value_fn, workers: int) -> float:
    total = k ** n
    if total > ENUM_CAP:
        raise EnumerationTooLarge(f"{k}^{n} = {total} exceeds {ENUM_CAP}")

    def shard(rg: range) -> float:
        acc = 0.0
        for idx in rg:
            word = np.unravel_index(idx, (k,) * n) if n else ()
            word = tuple(int(v) for v in word)
            w = weight_fn(word)
            if w > 0:
                acc += w * value_fn(word)
        return acc

    parts = ordered_map(shard, chunks(total, SHARD), workers)
    return float(math.fsum(parts))


def _montecarlo(cfg: SimConfig, draw, value_fn) -> tuple[float, float]:
    def shard(rg: range) -> list[float]:
        out = []
        for i in rg:
            rng = rng_from(derive_seed(cfg.seed, i))
            out.append(value_fn(draw(rng)))
        return out

    parts = ordered_map(shard, chunks(cfg.samples, SHARD), cfg.workers)
    vals = np.array([v for part in parts for v in part])
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(vals.size))


def cq_random_coding(ens: CqEnsemble, cfg: SimConfig, task: str = "cq") -> SimResult:
    """Random-coding error of i.i.d. codebooks drawn from ``ens.prior``."""
    states = ens.states
    powers = [mpow(s, cfg.alpha) for s in states]
    p = ens.prior

    def value(word):
        return cq_decode_error(states, word, cfg.alpha, powers)

    if cfg.mode == "enumerate":
        err = _enumerate(ens.k, cfg.M, lambda w: float(np.prod(p[list(w)])), value, cfg.workers)
        std, n = 0.0, ens.k ** cfg.M
    else:
        err, std = _montecarlo(cfg, lambda rng: tuple(rng.choice(ens.k, size=cfg.M, p=p)), value)
        n = cfg.samples
    bound = cq_bound(ens, cfg.M, cfg.alpha)
    return SimResult(task, cfg.M, cfg.alpha, min(max(err, 0.0), 1.0), std, n, cfg.seed, bound, "cq")


# -- constrained and constant-composition coding ----------------------------------------

def constrained_bound(ens: CqEnsemble, letters: Sequence[int], M: int, alpha: float) -> float:
    """``c_α p(Z)^{-1/α} 2^{-(1-α)/α [min_{x∈Z} D_α(ρ^x‖σ*) - log2(M-1)]}``.

    ``σ*`` is the Augustin mean of the full prior.
    """
    letters = sorted(set(int(x) for x in letters))
    if not letters:
        raise EmptyConstraint("constraint set is empty")
    pz = float(ens.prior[letters].sum())
    if pz <= 0:
        raise EmptyConstraint("constraint set has zero prior mass")
    mean = augustin_info(ens, alpha).mean
    dmin = min(petz_divergence(ens.states[x], mean, alpha) for x in letters)
    e = (1 - alpha) / alpha
    return c_alpha(alpha) / pz ** (1 / alpha) * 2.0 ** (-e * (dmin - math.log2(max(M - 1, 1))))


def constrained_random_coding(ens: CqEnsemble, letters: Sequence[int], cfg: SimConfig) -> SimResult:
    """Random coding from the prior conditioned on ``letters``, checked against :func:`constrained_bound`."""
    sub = ens.restrict(sorted(set(letters)))
    sim = cq_random_coding(sub, cfg, task="constrained")
    bound = constrained_bound(ens, letters, cfg.M, cfg.alpha)
    return SimResult("constrained", cfg.M, cfg.alpha, sim.error_estimate, sim.std_err, sim.samples,
                     cfg.seed, bound, "constrained")


@dataclass(frozen=True)
class TypeSpec:
    counts: tuple

    def __init__(self, counts: Sequence[int]):
        c = tuple(int(v) for v in counts)
        if not c or any(v < 0 for v in c) or sum(c) == 0:
            raise ValueError("type counts must be nonnegative with a positive total")
        object.__setattr__(self, "counts", c)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def distribution(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def class_size(self) -> int:
        out = math.factorial(self.n)
        for c in self.counts:
            out //= math.factorial(c)
        return out

    def members(self) -> list[tuple[int, ...]]:
        letters = [x for x, c in enumerate(self.counts) for _ in range(c)]
        return sorted(set(itertools.permutations(letters)))

    def log2_probability(self, prior: Sequence[float]) -> float:
        """``log2 p^{⊗n}(T)`` for the type class ``T``."""
        p = np.asarray(prior, dtype=float)
        out = math.log2(self.class_size())
        for px, c in zip(p, self.counts):
            if c:
                if px <= 0:
                    return -math.inf
                out += c * math.log2(px)
        return out


def sample_type_class(q: TypeSpec, seed) -> tuple[int, ...]:
    """Uniform member of the type class by shuffling the letter multiset."""
    rng = rng_from(seed)
    letters = np.array([x for x, c in enumerate(q.counts) for _ in range(c)], dtype=int)
    rng.shuffle(letters)
    return tuple(int(v) for v in letters)


@dataclass(frozen=True)
class CcBound:
    log2_poly: float
    log2_exact: float
    augustin: float


def cc_exponent_bound(q: TypeSpec, states: Sequence[np.ndarray], rate: float, alpha: float) -> CcBound:
    """Log-domain constant-composition bound in two forms.

    ``log2_poly = -n(1-α)/α [I^Aug_α(q) - R] + (|X|/α) log2(n+1) + log2 c_α`` and
    ``log2_exact = log2 c_α - (1/α) log2 q^{⊗n}(T) - n(1-α)/α [I^Aug_α(q) - R]``
    with the exact type-class probability.
    """
    qd = q.distribution
    used = [x for x, c in enumerate(q.counts) if c]
    ens = CqEnsemble(qd[used], [states[x] for x in used])
    ia = augustin_info(ens, alpha).value
    n = q.n
    e = (1 - alpha) / alpha
    core = -n * e * (ia - rate) + math.log2(c_alpha(alpha))
    poly = core + len(q.counts) / alpha * math.log2(n + 1)
    exact = core - q.log2_probability(qd) / alpha
    return CcBound(poly, exact, ia)


def cc_random_coding(q: TypeSpec, states: Sequence[np.ndarray], cfg: SimConfig) -> SimResult:
    """Constant-composition codes: codewords uniform on the type class, product outputs."""
    members = q.members()
    prod = []
    for word in members:
        op = np.ones((1, 1), dtype=complex)
        for x in word:
            op = np.kron(op, states[x])
        prod.append(op)
    ens = CqEnsemble(np.full(len(members), 1.0 / len(members)), prod)
    sim = cq_random_coding(ens, cfg, task="cc")
    rate = math.log2(cfg.M) / q.n
    b = cc_exponent_bound(q, states, rate, cfg.alpha)
    return SimResult("cc", cfg.M, cfg.alpha, sim.error_estimate, sim.std_err, sim.samples, cfg.seed,
                     2.0 ** min(b.log2_poly, b.log2_exact), "cc")


# -- source coding with quantum side information -----------------------------------------

def cqsw_decode_error(ens: CqEnsemble, assignment: Sequence[int], alpha: float,
                      powers: Sequence[np.ndarray] | None = None) -> float:
    """Error of per-bin integral α-PGM decoding for one bin assignment ``x -> m``."""
    weighted = ens.weighted()
    powers = [mpow(w, alpha) for w in weighted] if powers is None else powers
    bins: dict[int, list[int]] = {}
    for x, m in enumerate(assignment):
        bins.setdefault(int(m), []).append(x)
    success = 0.0
    for m in sorted(bins):
        xs = bins[m]
        success += pgm_success([powers[x] for x in xs], [weighted[x] for x in xs], [1.0] * len(xs))
    return 1.0 - success


def cqsw_bound(ens: CqEnsemble, M: int, alpha: float) -> float:
    """``c_α M^{(α-1)/α} Tr[(Σ_x (p(x) ρ^x)^α)^{1/α}]``."""
    return c_alpha(alpha) * M ** ((alpha - 1) / alpha) * cond_trace(ens, alpha)


def cqsw_random_binning(ens: CqEnsemble, cfg: SimConfig) -> SimResult:
    powers = [mpow(w, cfg.alpha) for w in ens.weighted()]

    def value(assign):
        return cqsw_decode_error(ens, assign, cfg.alpha, powers)

    if cfg.mode == "enumerate":
        w = float(cfg.M) ** (-ens.k)
        err = _enumerate(cfg.M, ens.k, lambda _a: w, value, cfg.workers)
        std, n = 0.0, cfg.M ** ens.k
    else:
        err, std = _montecarlo(cfg, lambda rng: tuple(rng.integers(0, cfg.M, size=ens.k)), value)
        n = cfg.samples
    return SimResult("cqsw", cfg.M, cfg.alpha, min(max(err, 0.0), 1.0), std, n, cfg.seed,
                     cqsw_bound(ens, cfg.M, cfg.alpha), "cqsw")


def cqsw_exponent(kind: str, ens: CqEnsemble, rates, type_prior: Sequence[float] | None = None):
    """Source-coding exponents as functions of the rate.

    ``iid``: ``sup (1-α)/α [R - H_α(X|B)]``; ``cc`` and ``variable``:
    ``sup (1-α)/α [R - H(X) + I^Aug_α]`` with the type (``cc``) or the source
    prior (``variable``, where the rate is the average rate).
    """
    if kind == "iid":
        return maximize_tilted(lambda a: cond_renyi_entropy(ens, a)[0], rates, sign=-1.0)
    if kind in {"cc", "variable"}:
        use = ens if kind == "variable" or type_prior is None else CqEnsemble(type_prior, ens.states)
        h = _entropy(use.prior)
        return maximize_tilted(lambda a: h - augustin_info(use, a).value, rates, sign=-1.0)
    raise ValueError(f"unknown source exponent kind {kind!r}")


# -- entanglement-assisted position-based coding ------------------------------------------

def apply_kraus(kraus: Sequence[np.ndarray], rho: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Apply a channel given by Kraus operators to the second factor of ``rho``."""
    d_r, _ = dims
    out = sum(np.kron(np.eye(d_r), k) @ rho @ np.kron(np.eye(d_r), k).conj().T for k in kraus)
    return _herm(out)


def check_kraus(kraus: Sequence[np.ndarray], tol: float = 1e-9) -> None:
    d_in = kraus[0].shape[1]
    s = sum(k.conj().T @ k for k in kraus)
    if np.max(np.abs(s - np.eye(d_in))) > tol:
        raise ValueError("Kraus operators are not trace preserving")


def position_states(rho_rb: np.ndarray, theta_r: np.ndarray, d_b: int, M: int) -> list[np.ndarray]:
    """Hypotheses ``θ^{⊗(m-1)} ⊗ ρ_{R_m B} ⊗ θ^{⊗(M-m)}`` ordered as ``R_1 ... R_M B``."""
    d_r = theta_r.shape[0]
    out = []
    for m in range(M):
        factors = [theta_r] * m + [rho_rb] + [theta_r] * (M - m - 1)
        op = np.ones((1, 1), dtype=complex)
        for f in factors:
            op = np.kron(op, f)
        # current order: R_1..R_m, B, R_{m+1}..R_M
        dims = [d_r] * (m + 1) + [d_b] + [d_r] * (M - m - 1)
        order = list(range(m + 1)) + list(range(m + 2, M + 1)) + [m + 1]
        out.append(permute_subsystems(op, dims, order))
    return out


def ea_bound(rho_rb: np.ndarray, dims: tuple[int, int], M: int, alpha: float) -> float:
    """``c_α (M-1)^{(1-α)/α} Tr_B[(Tr_R[ρ_RB^α θ_R^{1-α}])^{1/α}]``."""
    return c_alpha(alpha) * max(M - 1, 0) ** ((1 - alpha) / alpha) * ea_trace(rho_rb, dims, alpha)


def ea_position_coding(kraus: Sequence[np.ndarray], theta_ra: np.ndarray, dims: tuple[int, int],
                       M: int, alpha: float, seed: int = 0) -> SimResult:
    """Exact error of position-based coding with the integral α-PGM decoder."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    check_kraus(kraus)
    d_r, d_a = dims
    d_b = kraus[0].shape[0]
    if d_r ** M * d_b > EA_DIM_CAP:
        raise DimensionTooLarge(f"{d_r}^{M}*{d_b} exceeds {EA_DIM_CAP}")
    theta = density(theta_ra)
    theta_r = partial_trace(theta, dims, [0])
    rho_rb = apply_kraus(kraus, theta, (d_r, d_a))
    hyps = position_states(rho_rb, theta_r, d_b, M)
    lik = [mpow(h, alpha) for h in hyps]
    err = 1.0 - pgm_success(lik, hyps, [1.0 / M] * M)
    bound = ea_bound(rho_rb, (d_r, d_b), M, alpha)
    return SimResult("ea", M, alpha, min(max(err, 0.0), 1.0), 0.0, 1, seed, bound, "ea")


def unassisted_coding(kraus: Sequence[np.ndarray], inputs: CqEnsemble, cfg: SimConfig) -> SimResult:
    """Unassisted coding with a quantum input ensemble, via the image c-q channel."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    check_kraus(kraus)
    images = [apply_kraus(kraus, s, (1, s.shape[0])) for s in inputs.states]
    sim = cq_random_coding(CqEnsemble(inputs.prior, images), cfg, task="unassisted")
    return SimResult("unassisted", sim.M, sim.alpha, sim.error_estimate, sim.std_err, sim.samples,
                     sim.seed, sim.bound, "unassisted")


def trace_factor_product(ens: CqEnsemble, alpha: float) -> tuple[float, float]:
    """Sibson trace of the 2-fold product ensemble and the square of the single-copy one."""
    return sibson_trace(ens.tensor(ens), alpha), sibson_trace(ens, alpha) ** 2


def type_counts(word: Sequence[int], k: int) -> TypeSpec:
    c = Counter(int(x) for x in word)
    return TypeSpec([c.get(x, 0) for x in range(k)])
