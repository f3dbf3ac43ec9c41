"""Derivative of the operator logarithm and its integral representations.

Closed forms use divided differences in the eigenbasis of the base point.
Integral forms share one adaptive Gauss-Legendre engine whose panels carry an
integer tag; projection integrands use the tag as the rank of the projection
on that panel, which is constant between singular points of the pencil.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .linalg import (
    SUPPORT_RTOL,
    ScalarFn,
    _herm,
    hermitian,
    op_norm,
    same_dim,
    support_basis,
)

DD_RTOL = 1e-8
EXACT_RTOL = 1e-13

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class QuadratureDidNotConverge(RuntimeError):
    def __init__(self, previous, current, gap: float):
        super().__init__(f"quadrature did not converge (gap {gap:.3e})")
        self.previous = previous
        self.current = current
        self.gap = gap


class SingularBase(ValueError):
    pass


class EmptySupport(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the integral evaluators.

    ``mode="panel"`` splits at singular points read off a spectrum and
    integrates each analytic panel to near machine precision.
    ``mode="refine"`` locates the same points by rank changes on a uniform
    grid of ``base_nodes`` cells, refined 4-fold per round, and integrates to
    ``target_rel_err``.
    """

    radius: float | None = None
    base_nodes: int = 2048
    max_refinements: int = 12
    target_rel_err: float = 1e-7
    mode: str = "panel"

    def __post_init__(self):
        if self.base_nodes < 16:
            raise ValueError("base_nodes must be at least 16")
        if not self.target_rel_err > 0:
            raise ValueError("target_rel_err must be positive")
        if self.max_refinements < 1:
            raise ValueError("max_refinements must be positive")
        if self.mode not in {"panel", "refine"}:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.radius is not None and not self.radius >= 0:
            raise ValueError("radius must be nonnegative")

    @property
    def rel_tol(self) -> float:
        return EXACT_RTOL if self.mode == "panel" else self.target_rel_err


DEFAULT_SPEC = QuadratureSpec()


# -- closed forms ---------------------------------------------------------------

def divided_differences(w: np.ndarray) -> np.ndarray:
    """Matrix of ``(ln x - ln y)/(x - y)`` with the ``1/x`` limit on the diagonal band."""
    x = w[:, None]
    y = w[None, :]
    delta = x - y
    close = np.abs(delta) <= DD_RTOL * np.maximum(x, y)
    safe = np.where(close, 1.0, delta)
    dd = np.log1p(safe / y) / safe
    return np.where(close, 1.0 / np.broadcast_to(x, delta.shape), dd)


def _dlog_eig(w: np.ndarray, u: np.ndarray, b: np.ndarray) -> np.ndarray:
    bt = u.conj().T @ b @ u
    return _herm(u @ (divided_differences(w) * bt) @ u.conj().T)


def dlog(a, b) -> np.ndarray:
    """``D log[A](B)`` for full-support ``A`` via divided differences."""
    a = hermitian(a)
    b = hermitian(b)
    same_dim(a, b)
    w, u = np.linalg.eigh(a)
    if w.size and w[0] <= SUPPORT_RTOL * np.max(np.abs(w)):
        raise SingularBase(f"base point has eigenvalue {w[0]:.3e}")
    return _dlog_eig(w, u, b)


def dlog_on_support(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``D log[S](X)`` computed on ``supp(S)`` and zero outside it."""
    v = support_basis(s)
    if v.shape[1] == 0:
        return np.zeros_like(s, dtype=complex)
    sr = _herm(v.conj().T @ s @ v)
    xr = v.conj().T @ x @ v
    w, u = np.linalg.eigh(sr)
    w = np.clip(w, SUPPORT_RTOL * w[-1], None)
    inner = _dlog_eig(w, u, xr)
    return _herm(v @ inner @ v.conj().T)


def integral_quotient(a, b) -> np.ndarray:
    """The quotient ``B/(A+B) = D log[A+B](B)`` on ``supp(A+B)``."""
    a = hermitian(a)
    b = hermitian(b)
    same_dim(a, b)
    s = a + b
    if op_norm(s) == 0:
        raise EmptySupport("A + B vanishes")
    return dlog_on_support(s, b)


# -- adaptive Gauss-Legendre engine ----------------------------------------------

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _eval_panels(fn: Integrand, lo: np.ndarray, hi: np.ndarray, tags: np.ndarray) -> np.ndarray:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    node_tags = np.repeat(tags, _GL_X.size)
    vals = fn(nodes, node_tags)
    vals = vals.reshape((lo.size, _GL_X.size) + vals.shape[1:])
    return half.reshape((-1,) + (1,) * (vals.ndim - 2)) * np.tensordot(vals, _GL_W, axes=([1], [0]))


def adaptive_integrate(
    fn: Integrand,
    breaks,
    tags=None,
    rel_tol: float = 1e-10,
    max_depth: int = 30,
    abs_floor: float = 0.0,
):
    """Integrate ``fn`` over consecutive panels ``[breaks[i], breaks[i+1]]``.

    ``fn(x, tags)`` receives a flat array of nodes and their panel tags and
    returns one value (scalar or matrix) per node. Each panel is compared with
    its two halves and bisected until the halves agree.
    """
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    tags = np.zeros(breaks.size - 1, dtype=int) if tags is None else np.asarray(tags, dtype=int)
    tags = tags[keep]
    if lo.size == 0:
        probe = fn(np.zeros(1), np.zeros(1, dtype=int))
        return np.zeros(probe.shape[1:], dtype=probe.dtype)
    length = float(np.sum(hi - lo))
    coarse = _eval_panels(fn, lo, hi, tags)
    accepted = np.zeros(coarse.shape[1:], dtype=coarse.dtype)
    previous = None
    for _ in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        half_lo = np.ravel(np.column_stack((lo, mid)))
        half_hi = np.ravel(np.column_stack((mid, hi)))
        half_tags = np.repeat(tags, 2)
        halves = _eval_panels(fn, half_lo, half_hi, half_tags)
        fine = halves[0::2] + halves[1::2]
        axes = tuple(range(1, fine.ndim))
        err = np.max(np.abs(fine - coarse), axis=axes) if axes else np.abs(fine - coarse)
        estimate = accepted + fine.sum(axis=0)
        scale = max(float(np.max(np.abs(estimate))), abs_floor)
        width = (hi - lo) / length
        ok = err <= rel_tol * scale * np.maximum(width, 1.0 / 64) + 1e-300
        accepted = accepted + fine[ok].sum(axis=0)
        if np.all(ok):
            return accepted
        bad = np.repeat(~ok, 2)
        lo, hi, tags = half_lo[bad], half_hi[bad], half_tags[bad]
        coarse = halves[bad]
        previous = estimate
    current = accepted + coarse.sum(axis=0)
    raise QuadratureDidNotConverge(previous, current, float(np.max(np.abs(current - previous))))


def _graded_breaks(levels: int = 60) -> np.ndarray:
    """``0, 2^-levels, ..., 1/2, 1``: resolves integrands peaked at ``s = 0``."""
    return np.concatenate(([0.0], 2.0 ** -np.arange(levels, 0, -1, dtype=float), [1.0]))


# -- Lieb formula -----------------------------------------------------------------

def dlog_lieb_quadrature(a, b, q: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``∫_0^∞ (A+t)^{-1} B (A+t)^{-1} dt`` by compactified quadrature.

    With ``t = c s/(1-s)`` and ``c = ||A||`` the integrand becomes
    ``c C^{-1} B C^{-1}``, ``C = (1-s)A + c s I``.
    """
    a = hermitian(a)
    b = hermitian(b)
    d = same_dim(a, b)
    w = np.linalg.eigvalsh(a)
    if w[0] <= SUPPORT_RTOL * np.max(np.abs(w)):
        raise SingularBase(f"base point has eigenvalue {w[0]:.3e}")
    c = float(w[-1])
    eye = np.eye(d)

    def integrand(s, _tags):
        cs = (1 - s)[:, None, None] * a + (c * s)[:, None, None] * eye
        inv = np.linalg.inv(cs)
        return c * inv @ b @ inv

    out = adaptive_integrate(
        integrand, _graded_breaks(), rel_tol=min(q.target_rel_err, 1e-9) * 1e-2,
        max_depth=q.max_refinements * 2,
    )
    return _herm(out)


# -- projection integrals -----------------------------------------------------------

def _rank_projector_integrand(base: np.ndarray, target: np.ndarray, weight: Callable | None = None):
    """Integrand ``u -> P_k(target - u*base) * weight(u)``.

    A positive tag ``k`` selects the top ``k`` eigenvectors, a negative tag the
    bottom ``|k|``; tag 0 contributes zero.
    """
    d = base.shape[0]

    def fn(u, tags):
        out = np.zeros((u.size, d, d), dtype=complex)
        nz = tags != 0
        if not np.any(nz):
            return out
        mats = target[None] - u[nz][:, None, None] * base[None]
        _, vecs = np.linalg.eigh(mats)
        idx = np.arange(d)
        t = tags[nz]
        mask = np.where(t[:, None] > 0, idx[None, :] >= d - t[:, None], idx[None, :] < -t[:, None])
        v = vecs * mask[:, None, :]
        proj = v @ v.conj().transpose(0, 2, 1)
        if weight is not None:
            proj = proj * np.asarray(weight(u[nz]), dtype=float)[:, None, None]
        out[nz] = proj
        return out

    return fn


def _rank_on_grid(base: np.ndarray, target: np.ndarray, u: np.ndarray, sign: int) -> np.ndarray:
    # no zero band here: a band shifts the located crossing by band/slope,
    # which is large when the crossing eigenvector sees little of ``base``
    mats = target[None] - u[:, None, None] * base[None]
    w = np.linalg.eigvalsh(mats)
    return np.sum(sign * w > 0, axis=1)


def _refine_jumps(base, target, lo: float, hi: float, sign: int, q: QuadratureSpec) -> np.ndarray:
    """Locate rank changes of ``{sign*(target - u*base) > 0}`` on ``[lo, hi]``."""
    grid = np.linspace(lo, hi, q.base_nodes + 1)
    ranks = _rank_on_grid(base, target, grid, sign)
    cells = np.flatnonzero(ranks[1:] != ranks[:-1])
    left, right = grid[cells], grid[cells + 1]
    for _ in range(q.max_refinements):
        if left.size == 0:
            break
        sub = left[:, None] + (right - left)[:, None] * np.linspace(0, 1, 5)[None, :]
        r = _rank_on_grid(base, target, sub.ravel(), sign).reshape(sub.shape)
        new_left, new_right = [], []
        for row, rk in zip(sub, r):
            idx = np.flatnonzero(rk[1:] != rk[:-1])
            new_left.extend(row[idx])
            new_right.extend(row[idx + 1])
        left, right = np.array(new_left), np.array(new_right)
    return np.unique(0.5 * (left + right))


def _tags_for(base, target, breaks: np.ndarray, sign: int) -> np.ndarray:
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    if mids.size == 0:
        return np.zeros(0, dtype=int)
    return sign * _rank_on_grid(base, target, mids, sign)


def _projection_integral(base, target, lo, hi, sign, q: QuadratureSpec, jumps=None, weight=None, knots=()):
    """``∫_lo^hi {sign*(target - u*base) > 0} weight(u) du``."""
    if hi <= lo:
        return np.zeros_like(base, dtype=complex)
    if q.mode == "refine" or jumps is None:
        jumps = _refine_jumps(base, target, lo, hi, sign, q)
    pts = np.concatenate(([lo], jumps, knots, [hi]))
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    tags = _tags_for(base, target, pts, sign)
    fn = _rank_projector_integrand(base, target, weight)
    return adaptive_integrate(fn, pts, tags, rel_tol=q.rel_tol, max_depth=q.max_refinements * 3, abs_floor=1e-300)


def _whitened_spectrum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(a)
    if w[0] <= SUPPORT_RTOL * np.max(np.abs(w)):
        raise SingularBase(f"base point has eigenvalue {w[0]:.3e}")
    isq = (u / np.sqrt(w)) @ u.conj().T
    return np.linalg.eigvalsh(_herm(isq @ b @ isq))


def layercake(a, b, q: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``∫_0^r {uA < B} du - ∫_{-r}^0 {uA > B} du`` for full-support ``A``."""
    a = hermitian(a)
    b = hermitian(b)
    same_dim(a, b)
    spec = _whitened_spectrum(a, b)
    r = float(np.max(np.abs(spec))) if q.radius is None else float(q.radius)
    pos = _projection_integral(a, b, 0.0, r, +1, q, jumps=spec[spec > 0])
    neg = _projection_integral(a, b, -r, 0.0, -1, q, jumps=spec[spec < 0])
    return _herm(pos - neg)


def extremal_decomposition(a, b, q: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """``∫_0^1 {uA < (1-u)B} du`` on ``supp(A+B)``, zero elsewhere."""
    a = hermitian(a)
    b = hermitian(b)
    same_dim(a, b)
    v = support_basis(a + b)
    if v.shape[1] == 0:
        raise EmptySupport("A + B vanishes")
    ar = _herm(v.conj().T @ a @ v)
    br = _herm(v.conj().T @ b @ v)
    # (1-u)B - uA = B - u(A+B)
    s = ar + br
    spec = _whitened_spectrum(s, br)
    inner = _projection_integral(s, br, 0.0, 1.0, +1, q, jumps=spec[(spec > 0) & (spec < 1)])
    return _herm(v @ inner @ v.conj().T)


def change_of_variables_check(a, b, h: ScalarFn, q: QuadratureSpec = DEFAULT_SPEC):
    """Both sides of the operator change-of-variables identity.

    ``lhs = ∫_0^r {B > γA} h(γ) dγ`` and
    ``rhs = ∫_0^∞ (A+t)^{-1/2} Q_t h(Q_t) (A+t)^{-1/2} dt`` with
    ``Q_t = (A+t)^{-1/2} B (A+t)^{-1/2}``. Returns ``(lhs, rhs, gap)``.
    """
    a = hermitian(a)
    b = hermitian(b)
    d = same_dim(a, b)
    spec = _whitened_spectrum(a, b)
    r = float(max(spec[-1], 0.0)) if q.radius is None else float(q.radius)
    knots = np.asarray(h.xs, dtype=float) if h.kind == "table" else np.zeros(0)
    lhs = _herm(_projection_integral(a, b, 0.0, r, +1, q, jumps=spec[spec > 0], weight=h, knots=knots))

    c = float(np.linalg.eigvalsh(a)[-1])
    eye = np.eye(d)

    def integrand(s, _tags):
        cs = (1 - s)[:, None, None] * a + (c * s)[:, None, None] * eye
        w, u = np.linalg.eigh(cs)
        isq = (u / np.sqrt(w)[:, None, :]) @ u.conj().transpose(0, 2, 1)
        k = isq @ b @ isq
        kw, ku = np.linalg.eigh(k)
        qw = np.clip((1 - s)[:, None] * kw, 0.0, None)
        fw = np.zeros_like(kw)
        pos = qw > 0
        fw[pos] = kw[pos] * h(qw[pos])
        mid = (ku * fw[:, None, :]) @ ku.conj().transpose(0, 2, 1)
        return c * isq @ mid @ isq

    rhs = _herm(adaptive_integrate(
        integrand, _graded_breaks(), rel_tol=min(q.target_rel_err, 1e-9) * 1e-2,
        max_depth=q.max_refinements * 3,
    ))
    gap = op_norm(lhs - rhs) / max(1.0, op_norm(lhs))
    return lhs, rhs, gap


def tracial_min_integral(a, b, q: QuadratureSpec = DEFAULT_SPEC) -> float:
    """``∫_0^1 Tr[A {uA < B}] du`` for a Hermitian pair."""
    a = hermitian(a)
    b = hermitian(b)
    same_dim(a, b)
    with np.errstate(all="ignore"):
        gen = scipy.linalg.eigvals(b, a)
    gen = gen[np.isfinite(gen)]
    # real parts of all finite pencil roots; extra breakpoints are harmless
    pts = np.sort(gen.real[(gen.real > 0) & (gen.real < 1)])
    breaks = np.unique(np.concatenate(([0.0], pts, [1.0])))
    tags = _tags_for(a, b, breaks, +1)
    proj = _rank_projector_integrand(a, b)

    def fn(u, t):
        return np.einsum("ij,nji->n", a, proj(u, t)).real

    return float(adaptive_integrate(fn, breaks, tags, rel_tol=1e-12, max_depth=q.max_refinements * 3, abs_floor=1e-300))
