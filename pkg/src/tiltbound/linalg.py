"""Dense Hermitian linear algebra and functional calculus.

Operators are plain complex ``numpy`` arrays. The ``hermitian``, ``psd`` and
``density`` helpers validate (and lightly repair) inputs; every other function
assumes validated input and returns hermitized results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12
PSD_RTOL = 1e-10
TRACE_TOL = 1e-10
SUPPORT_RTOL = 1e-12
POSITIVE_RTOL = 1e-10


class NonHermitianInput(ValueError):
    pass


class NotPositive(ValueError):
    pass


class NotDensity(ValueError):
    pass


class DomainError(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class EigenSystem(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return _herm((u * self.eigenvalues) @ u.conj().T)


def _herm(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.conj().T)


def _scale(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


def hermitian(x) -> np.ndarray:
    """Return ``x`` as a hermitized complex square matrix.

    Raises :class:`NonHermitianInput` when ``x - x^dagger`` exceeds
    ``1e-12`` times the largest absolute entry.
    """
    x = np.array(x, dtype=complex)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise NonHermitianInput(f"expected a square matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonHermitianInput("matrix has non-finite entries")
    gap = np.max(np.abs(x - x.conj().T)) if x.size else 0.0
    if gap > HERMITIAN_RTOL * max(_scale(x), 1e-300):
        raise NonHermitianInput(f"asymmetry {gap:.3e} exceeds tolerance")
    return _herm(x)


def psd(x) -> np.ndarray:
    """Validate a positive semi-definite operator.

    Eigenvalues in ``[-1e-10 * ||x||, 0)`` are clamped to zero; anything more
    negative raises :class:`NotPositive`.
    """
    h = hermitian(x)
    w, u = np.linalg.eigh(h)
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -PSD_RTOL * norm:
        raise NotPositive(f"minimum eigenvalue {w[0]:.3e} is negative")
    if w.size and w[0] < 0:
        w = np.clip(w, 0.0, None)
        return _herm((u * w) @ u.conj().T)
    return h


def density(x) -> np.ndarray:
    rho = psd(x)
    tr = float(np.trace(rho).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotDensity(f"trace {tr!r} is not 1")
    return rho


def same_dim(*ops: np.ndarray) -> int:
    dims = {op.shape[0] for op in ops}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimensions differ: {sorted(dims)}")
    return dims.pop()


def eig_hermitian(h) -> EigenSystem:
    h = hermitian(h)
    w, u = np.linalg.eigh(h)
    return EigenSystem(w, u)


def op_norm(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(_herm(x)))))


def trace_norm(x: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    return float(np.sum(np.abs(np.linalg.eigvalsh(_herm(x)))))


def tr(x: np.ndarray) -> float:
    """Real part of the trace."""
    return float(np.trace(x).real)


@dataclass(frozen=True)
class ScalarFn:
    """A real scalar function that can be lifted to Hermitian operators.

    ``kind`` is one of ``"power"``, ``"ln"``, ``"log2"``, ``"exp"``,
    ``"polynomial"`` or ``"table"``. Tables are piecewise linear through
    strictly increasing nodes and constant beyond the end nodes.
    """

    kind: str
    p: float = 1.0
    coeffs: tuple[float, ...] = ()
    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in {"power", "ln", "log2", "exp", "polynomial", "table"}:
            raise ValueError(f"unknown function kind {self.kind!r}")
        if self.kind == "polynomial" and not 1 <= len(self.coeffs) <= 17:
            raise ValueError("polynomial degree must be between 0 and 16")
        if self.kind == "table":
            xs = np.asarray(self.xs, dtype=float)
            if xs.size < 2 or len(self.ys) != xs.size or np.any(np.diff(xs) <= 0):
                raise ValueError("table nodes must be strictly increasing with matching values")

    @classmethod
    def power(cls, p: float) -> "ScalarFn":
        return cls("power", p=float(p))

    @classmethod
    def ln(cls) -> "ScalarFn":
        return cls("ln")

    @classmethod
    def log2(cls) -> "ScalarFn":
        return cls("log2")

    @classmethod
    def exp(cls) -> "ScalarFn":
        return cls("exp")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "ScalarFn":
        """Coefficients in ascending order: ``c0 + c1 x + c2 x^2 + ...``."""
        return cls("polynomial", coeffs=tuple(float(c) for c in coeffs))

    @classmethod
    def table(cls, xs: Sequence[float], ys: Sequence[float]) -> "ScalarFn":
        return cls("table", xs=tuple(float(v) for v in xs), ys=tuple(float(v) for v in ys))

    @property
    def singular_at_zero(self) -> bool:
        return self.kind in {"ln", "log2"} or (self.kind == "power" and not self.p > 0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power":
            return np.power(x, self.p)
        if self.kind == "ln":
            return np.log(x)
        if self.kind == "log2":
            return np.log2(x)
        if self.kind == "exp":
            return np.exp(x)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coeffs)
        return np.interp(x, self.xs, self.ys)

    def integral(self, a: float, b: float) -> float:
        """Exact integral over ``[a, b]`` for polynomials and tables."""
        if self.kind == "polynomial":
            anti = np.polynomial.polynomial.polyint(self.coeffs)
            return float(np.polynomial.polynomial.polyval(b, anti) - np.polynomial.polynomial.polyval(a, anti))
        if self.kind == "table":
            xs = np.asarray(self.xs)
            inner = xs[(xs > a) & (xs < b)]
            pts = np.concatenate(([a], inner, [b]))
            vals = self(pts)
            return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)))
        nodes, weights = np.polynomial.legendre.leggauss(32)
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return float(half * np.sum(weights * self(mid + half * nodes)))


def _eval_spectrum(w: np.ndarray, f: ScalarFn, cutoff: float) -> np.ndarray:
    out = np.zeros_like(w)
    integer_power = f.kind == "power" and f.p > 0 and float(f.p).is_integer()
    if f.kind in {"exp", "polynomial", "table"} or integer_power:
        return np.asarray(f(w), dtype=float)
    # support convention: eigenvalues at (numerical) zero map to zero
    keep = np.abs(w) > cutoff
    bad = keep & (w < 0)
    if np.any(bad):
        raise DomainError(f"{f.kind} undefined on eigenvalue {w[bad][0]:.3e}")
    out[keep] = f(w[keep])
    return out


def apply_fn(h: np.ndarray, f: ScalarFn) -> np.ndarray:
    """Lift ``f`` through the spectral decomposition of ``h``."""
    w, u = np.linalg.eigh(_herm(h))
    cutoff = SUPPORT_RTOL * (float(np.max(np.abs(w))) if w.size else 0.0)
    fw = _eval_spectrum(w, f, cutoff)
    return _herm((u * fw) @ u.conj().T)


def mpow(h: np.ndarray, p: float) -> np.ndarray:
    """Power on the support; negative eigenvalues are clamped for ``p > 0``."""
    if p == 1:
        return _herm(h)
    w, u = np.linalg.eigh(_herm(h))
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    cutoff = SUPPORT_RTOL * norm
    fw = np.zeros_like(w)
    keep = w > cutoff
    fw[keep] = w[keep] ** p
    return _herm((u * fw) @ u.conj().T)


def mlog2(h: np.ndarray) -> np.ndarray:
    """Base-2 logarithm on the support of a PSD operator."""
    return apply_fn(h, ScalarFn.log2())


def support_basis(h: np.ndarray, rtol: float = SUPPORT_RTOL) -> np.ndarray:
    """Orthonormal columns spanning the eigenvalues above ``rtol * ||h||``."""
    w, u = np.linalg.eigh(_herm(h))
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    return u[:, w > rtol * norm]


def support_projector(h: np.ndarray) -> np.ndarray:
    v = support_basis(h)
    return v @ v.conj().T


def _band(w: np.ndarray) -> float:
    return POSITIVE_RTOL * (float(np.max(np.abs(w))) if w.size else 0.0)


def positive_part_projection(x: np.ndarray) -> np.ndarray:
    """Projection ``{x > 0}``; eigenvalues within ``1e-10 ||x||`` of zero excluded."""
    w, u = np.linalg.eigh(_herm(x))
    v = u[:, w > _band(w)]
    return v @ v.conj().T


def zero_projection(x: np.ndarray) -> np.ndarray:
    """Projection onto the numerical kernel ``{x = 0}``."""
    w, u = np.linalg.eigh(_herm(x))
    v = u[:, np.abs(w) <= _band(w)]
    return v @ v.conj().T


def positive_part(x: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(_herm(x))
    keep = w > _band(w)
    return _herm((u[:, keep] * w[keep]) @ u[:, keep].conj().T)


def absolute_value(x: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(_herm(x))
    return _herm((u * np.abs(w)) @ u.conj().T)


def noncommutative_min(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``A ∧ B = (A + B - |A - B|) / 2``."""
    same_dim(a, b)
    return _herm(0.5 * (a + b - absolute_value(a - b)))


def kron(*ops: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def partial_trace(x: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(keep)
    t = x.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # trace highest index first so remaining axis numbers stay valid
    for i in sorted(traced, reverse=True):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(d, d)


def permute_subsystems(x: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``j`` is input factor ``order[j]``."""
    dims = list(dims)
    n = len(dims)
    t = x.reshape(dims + dims)
    t = t.transpose(list(order) + [n + i for i in order])
    d = int(np.prod(dims))
    return t.reshape(d, d)


# -- seeded instance generation ------------------------------------------------

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 output function."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, index: int) -> int:
    """Per-item seed: ``splitmix64(seed XOR index)``."""
    return splitmix64((int(seed) ^ int(index)) & _MASK64)


def rng_from(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def _ginibre(d: int, rng: np.random.Generator, cols: int | None = None) -> np.ndarray:
    cols = d if cols is None else cols
    return rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))


def random_psd(dim: int, seed, rank: int | None = None) -> np.ndarray:
    rng = rng_from(seed)
    g = _ginibre(dim, rng, rank)
    return _herm(g @ g.conj().T)


def random_density(dim: int, seed, rank: int | None = None) -> np.ndarray:
    p = random_psd(dim, seed, rank)
    return _herm(p / np.trace(p).real)


def random_hermitian(dim: int, seed) -> np.ndarray:
    rng = rng_from(seed)
    return _herm(_ginibre(dim, rng))


def random_unitary(dim: int, seed) -> np.ndarray:
    rng = rng_from(seed)
    q, r = np.linalg.qr(_ginibre(dim, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_kraus(d_in: int, d_out: int, n_kraus: int, seed) -> list[np.ndarray]:
    """Kraus operators of a random channel: blocks of a random isometry."""
    rng = rng_from(seed)
    g = _ginibre(n_kraus * d_out, rng, d_in)
    w, u = np.linalg.eigh(_herm(g.conj().T @ g))
    v = g @ (u / np.sqrt(w)) @ u.conj().T
    return [v[i * d_out:(i + 1) * d_out] for i in range(n_kraus)]
