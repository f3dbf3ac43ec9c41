"""Petz-Rényi divergences and the informations built from them (all in bits)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import (
    DimensionMismatch,
    _herm,
    density,
    mlog2,
    mpow,
    partial_trace,
    rng_from,
    random_density,
    support_projector,
    trace_norm,
    tr,
)

PRIOR_TOL = 1e-10
SUPPORT_TOL = 1e-10


class SupportViolation(ValueError):
    pass


class DidNotConverge(RuntimeError):
    def __init__(self, residuals: list[float]):
        super().__init__(f"fixed point not reached after {len(residuals)} steps "
                         f"(last residual {residuals[-1]:.3e})")
        self.residuals = residuals


@dataclass(frozen=True)
class CqEnsemble:
    """A prior over ``k`` letters and one density operator per letter."""

    prior: np.ndarray
    states: tuple

    def __init__(self, prior, states):
        p = np.asarray(prior, dtype=float).ravel()
        if p.size == 0 or np.any(p < 0) or abs(p.sum() - 1.0) > PRIOR_TOL:
            raise ValueError("prior must be a probability vector")
        if len(states) != p.size:
            raise ValueError(f"{p.size} prior entries but {len(states)} states")
        sts = tuple(density(s) for s in states)
        if len({s.shape for s in sts}) != 1:
            raise DimensionMismatch("states must share one dimension")
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "states", sts)

    @property
    def k(self) -> int:
        return self.prior.size

    @property
    def dim(self) -> int:
        return self.states[0].shape[0]

    def average(self) -> np.ndarray:
        return _herm(sum(px * s for px, s in zip(self.prior, self.states)))

    def weighted(self) -> list[np.ndarray]:
        return [px * s for px, s in zip(self.prior, self.states)]

    def cq_state(self) -> np.ndarray:
        """Block-diagonal ``Σ_x p(x)|x><x| ⊗ ρ^x``."""
        d = self.dim
        out = np.zeros((self.k * d, self.k * d), dtype=complex)
        for x, (px, s) in enumerate(zip(self.prior, self.states)):
            out[x * d:(x + 1) * d, x * d:(x + 1) * d] = px * s
        return out

    def restrict(self, letters: Sequence[int]) -> "CqEnsemble":
        """Conditional ensemble on a subset of letters."""
        letters = list(letters)
        mass = float(self.prior[letters].sum())
        if mass <= 0:
            raise ValueError("subset has zero prior mass")
        return CqEnsemble(self.prior[letters] / mass, [self.states[x] for x in letters])

    def tensor(self, other: "CqEnsemble") -> "CqEnsemble":
        prior = np.kron(self.prior, other.prior)
        states = [np.kron(a, b) for a in self.states for b in other.states]
        return CqEnsemble(prior / prior.sum(), states)


def random_cq_ensemble(k: int, dim: int, seed, rank: int | None = None) -> CqEnsemble:
    """``k`` Ginibre densities and a flat-Dirichlet prior from one generator."""
    rng = rng_from(seed)
    states = [random_density(dim, rng, rank) for _ in range(k)]
    prior = rng.dirichlet(np.ones(k))
    return CqEnsemble(prior, states)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha <= 1:
        raise ValueError(f"order must lie in (0, 1], got {alpha}")
    return alpha


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(_herm(rho))
    return _entropy(np.clip(w, 0.0, None))


def supported_in(a: np.ndarray, b: np.ndarray) -> bool:
    """``supp(a) ⊆ supp(b)`` up to a relative leakage of ``1e-10``."""
    leak = np.eye(a.shape[0]) - support_projector(b)
    return tr(leak @ a @ leak) <= SUPPORT_TOL * max(tr(a), 1e-300)


# -- divergences ---------------------------------------------------------------------

def petz_q(a: np.ndarray, b: np.ndarray, alpha: float) -> float:
    """``Tr[A^α B^{1-α}]`` with powers on supports."""
    return tr(mpow(a, alpha) @ mpow(b, 1 - alpha))


def petz_divergence(a, b, alpha: float) -> float:
    """Petz-Rényi divergence in bits; ``+inf`` flags orthogonality or a support violation."""
    alpha = _check_alpha(alpha)
    if alpha == 1:
        if not supported_in(a, b):
            return math.inf
        return tr(a @ (mlog2(a) - mlog2(b)))
    q = petz_q(a, b, alpha)
    ref = tr(mpow(a, alpha)) * tr(mpow(b, 1 - alpha))
    if q <= 1e-14 * ref:
        return math.inf
    return math.log2(q) / (alpha - 1)


def relative_entropy_variance(rho, sigma) -> float:
    if not supported_in(rho, sigma):
        raise SupportViolation("supp(rho) is not contained in supp(sigma)")
    x = mlog2(rho) - mlog2(sigma)
    d1 = tr(rho @ x)
    return tr(rho @ x @ x) - d1 * d1


# -- Sibson-type closed forms ------------------------------------------------------------

def holevo_info(ens: CqEnsemble) -> float:
    avg = ens.average()
    return float(sum(px * petz_divergence(s, avg, 1.0) for px, s in zip(ens.prior, ens.states) if px > 0))


def sibson_radius_info(ens: CqEnsemble, alpha: float) -> tuple[float, np.ndarray]:
    """Order-α mutual information ``I_α(X:B)`` and its minimizing state."""
    alpha = _check_alpha(alpha)
    if alpha == 1:
        return holevo_info(ens), ens.average()
    m = mpow(sum(px * mpow(s, alpha) for px, s in zip(ens.prior, ens.states)), 1 / alpha)
    t = tr(m)
    return alpha / (alpha - 1) * math.log2(t), m / t


def sibson_trace(ens: CqEnsemble, alpha: float) -> float:
    """``Tr[(Σ_x p(x) (ρ^x)^α)^{1/α}]``."""
    return tr(mpow(sum(px * mpow(s, alpha) for px, s in zip(ens.prior, ens.states)), 1 / alpha))


def cond_trace(ens: CqEnsemble, alpha: float) -> float:
    """``Tr[(Σ_x (p(x) ρ^x)^α)^{1/α}]``."""
    return tr(mpow(sum(mpow(w, alpha) for w in ens.weighted()), 1 / alpha))


def cond_renyi_entropy(ens: CqEnsemble, alpha: float) -> tuple[float, np.ndarray]:
    """Order-α conditional entropy ``H_α(X|B)`` and its minimizing state."""
    alpha = _check_alpha(alpha)
    if alpha == 1:
        return _entropy(ens.prior) - holevo_info(ens), ens.average()
    m = mpow(sum(mpow(w, alpha) for w in ens.weighted()), 1 / alpha)
    t = tr(m)
    return alpha / (1 - alpha) * math.log2(t), m / t


# -- Augustin information ---------------------------------------------------------------

@dataclass
class AugustinResult:
    value: float
    mean: np.ndarray
    iterations: int
    residual: float
    residuals: list = field(default_factory=list, repr=False)


def augustin_info(
    ens: CqEnsemble,
    alpha: float,
    damping: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    stall: int = 5,
) -> AugustinResult:
    """Augustin information by fixed-point iteration from the average state.

    The map is ``σ -> normalize[(Σ_x p(x) (ρ^x)^α / Tr[(ρ^x)^α σ^{1-α}])^{1/α}]``.
    ``damping`` is the weight on the new iterate; if the step size fails to
    shrink for ``stall`` consecutive steps it drops to ``min(damping, 0.5)``.
    """
    alpha = _check_alpha(alpha)
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    sigma = ens.average()
    if alpha == 1:
        return AugustinResult(holevo_info(ens), sigma, 0, 0.0, [])
    live = [(px, mpow(s, alpha)) for px, s in zip(ens.prior, ens.states) if px > 0]
    lam = damping
    residuals: list[float] = []
    best = math.inf
    since_best = 0
    for it in range(1, max_iter + 1):
        sp = mpow(sigma, 1 - alpha)
        acc = sum(px / tr(ra @ sp) * ra for px, ra in live)
        new = mpow(acc, 1 / alpha)
        new = new / tr(new)
        if lam < 1:
            new = _herm((1 - lam) * sigma + lam * new)
        res = trace_norm(new - sigma)
        residuals.append(res)
        sigma = new
        if res <= tol:
            value = sum(px * petz_divergence(s, sigma, alpha) for px, s in zip(ens.prior, ens.states) if px > 0)
            return AugustinResult(float(value), sigma, it, res, residuals)
        if res < best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= stall and lam > 0.5:
                lam, since_best = 0.5, 0
    raise DidNotConverge(residuals)


# -- entanglement-assisted ----------------------------------------------------------------

def ea_renyi_info(rho_rb, dims: tuple[int, int], alpha: float) -> tuple[float, np.ndarray]:
    """Order-α mutual information ``I_α(R:B)`` of a bipartite state and its minimizer."""
    alpha = _check_alpha(alpha)
    rho = density(rho_rb)
    d_r, d_b = dims
    if rho.shape[0] != d_r * d_b:
        raise DimensionMismatch(f"state of size {rho.shape[0]} does not match dims {dims}")
    rho_r = partial_trace(rho, dims, [0])
    rho_b = partial_trace(rho, dims, [1])
    if alpha == 1:
        value = von_neumann_entropy(rho_r) + von_neumann_entropy(rho_b) - von_neumann_entropy(rho)
        return value, rho_b
    x_b = _herm(partial_trace(mpow(rho, alpha) @ np.kron(mpow(rho_r, 1 - alpha), np.eye(d_b)), dims, [1]))
    m = mpow(x_b, 1 / alpha)
    t = tr(m)
    return alpha / (alpha - 1) * math.log2(t), m / t


def ea_trace(rho_rb, dims: tuple[int, int], alpha: float, theta_r=None) -> float:
    """``Tr_B[(Tr_R[ρ_RB^α (θ_R^{1-α} ⊗ I)])^{1/α}]`` with ``θ_R`` defaulting to the marginal."""
    d_r, d_b = dims
    rho_r = partial_trace(rho_rb, dims, [0]) if theta_r is None else theta_r
    x_b = _herm(partial_trace(mpow(rho_rb, alpha) @ np.kron(mpow(rho_r, 1 - alpha), np.eye(d_b)), dims, [1]))
    return tr(mpow(x_b, 1 / alpha))


# -- dispersion ------------------------------------------------------------------------------

def dispersion_for_input(ens: CqEnsemble) -> tuple[float, float]:
    avg = ens.average()
    i1 = 0.0
    v = 0.0
    for px, s in zip(ens.prior, ens.states):
        if px <= 0:
            continue
        i1 += px * petz_divergence(s, avg, 1.0)
        v += px * relative_entropy_variance(s, avg)
    return float(i1), float(v)


def hayashi_sides(ens: CqEnsemble, alpha: float) -> tuple[float, float]:
    """``(Tr[(Σ p (ρ^x)^α)^{1/α}], Σ p Tr[(ρ^x)^{2-1/α} ρ̄^{(1-α)/α}])``."""
    avg_pow = mpow(ens.average(), (1 - alpha) / alpha)
    rhs = sum(px * tr(mpow(s, 2 - 1 / alpha) @ avg_pow) for px, s in zip(ens.prior, ens.states))
    return sibson_trace(ens, alpha), float(rhs)


# -- exponent curves ----------------------------------------------------------------------------

@dataclass
class ExponentCurve:
    rates: np.ndarray
    values: np.ndarray
    alphas: np.ndarray


_GOLD = (math.sqrt(5) - 1) / 2
# objective values below this are rounding noise around a zero exponent
CLIP_TOL = 1e-13


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    x1 = hi - _GOLD * (hi - lo)
    x2 = lo + _GOLD * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLD * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLD * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def maximize_tilted(info: Callable[[float], float], rates, sign: float = 1.0,
                    offset: float = 0.0, grid: int = 64) -> ExponentCurve:
    """``E(R) = max(0, sup_{α∈[1/2,1]} (1-α)/α · sign·(info(α) + offset - R))``.

    ``sign = -1`` gives the source-coding orientation ``(1-α)/α (R - info(α))``.
    The supremum is located on a ``grid``-point α grid and polished by
    golden-section search in the neighbouring cells.
    """
    rates = np.asarray(rates, dtype=float)
    memo: dict[float, float] = {}

    def val(a: float) -> float:
        if a not in memo:
            memo[a] = info(a)
        return memo[a]

    alphas = np.linspace(0.5, 1.0, grid)
    for a in alphas:
        val(float(a))
    values = np.zeros(rates.size)
    best_alpha = np.ones(rates.size)
    for i, r in enumerate(rates):
        def obj(a: float) -> float:
            if a >= 1:
                return 0.0
            return (1 - a) / a * sign * (val(a) + offset - r)

        grid_vals = np.array([obj(float(a)) for a in alphas])
        j = int(np.argmax(grid_vals))
        lo = float(alphas[max(j - 1, 0)])
        hi = float(alphas[min(j + 1, grid - 1)])
        a_star, e_star = _golden_max(obj, lo, hi)
        if grid_vals[j] > e_star:
            a_star, e_star = float(alphas[j]), float(grid_vals[j])
        if e_star > CLIP_TOL:
            values[i], best_alpha[i] = e_star, a_star
    return ExponentCurve(rates, values, best_alpha)


def exponent_curve(kind: str, params, rates) -> ExponentCurve:
    """Exponent curve for one of ``sibson``, ``augustin``, ``cond_entropy_gap`` or ``ea``.

    ``params`` is a :class:`CqEnsemble`, or ``(rho_RB, dims)`` for ``ea``.
    """
    if kind == "sibson":
        return maximize_tilted(lambda a: sibson_radius_info(params, a)[0], rates)
    if kind == "augustin":
        return maximize_tilted(lambda a: augustin_info(params, a).value, rates)
    if kind == "cond_entropy_gap":
        return maximize_tilted(lambda a: cond_renyi_entropy(params, a)[0], rates, sign=-1.0)
    if kind == "ea":
        rho, dims = params
        return maximize_tilted(lambda a: ea_renyi_info(rho, dims, a)[0], rates)
    raise ValueError(f"unknown exponent kind {kind!r}")
