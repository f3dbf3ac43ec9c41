"""Seeded property suites behind ``tiltbound verify``.

Each trial draws its own generator from ``derive_seed(seed, index)`` and
returns one number per property; trials are reduced in index order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .info import random_cq_ensemble
from .integrals import (
    QuadratureSpec,
    change_of_variables_check,
    dlog,
    dlog_lieb_quadrature,
    extremal_decomposition,
    integral_quotient,
    layercake,
    tracial_min_integral,
)
from .linalg import (
    ScalarFn,
    derive_seed,
    mpow,
    op_norm,
    random_density,
    random_hermitian,
    random_kraus,
    random_psd,
    rng_from,
    support_projector,
    tr,
    trace_norm,
)
from .measure import (
    chernoff_bound,
    helstrom_error,
    helstrom_test,
    inequality_suite,
    test_error,
    tilting_report,
)
from .packing import (
    SimConfig,
    constrained_random_coding,
    cq_random_coding,
    cqsw_random_binning,
    ea_position_coding,
)
from .parallel import ordered_map

SUITES = ("calculus", "inequalities", "bounds")
REFINE = QuadratureSpec(mode="refine")


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    name: str
    sense: str  # "max_error" or "min_margin"
    trials: int
    worst: float
    tolerance: float
    violations: int

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _maxabs(x: np.ndarray) -> float:
    return float(np.max(np.abs(x))) if x.size else 0.0


# -- calculus ---------------------------------------------------------------------------

CALCULUS = {
    # name: (sense, tolerance)
    "layercake_panel": ("max_error", 1e-10),
    "layercake_refine": ("max_error", 1e-5),
    "lieb_quadrature": ("max_error", 1e-6),
    "extremal_panel": ("max_error", 1e-10),
    "extremal_refine": ("max_error", 1e-5),
    "change_of_variables": ("max_error", 1e-5),
    "tracial_min": ("max_error", 1e-7),
    "dlog_identity": ("max_error", 1e-10),
    "dlog_scaling": ("max_error", 1e-10),
    "dlog_linearity": ("max_error", 1e-10),
    "dlog_positivity": ("min_margin", -1e-10),
    "dlog_inversion": ("max_error", 1e-9),
    "beigi_tomamichel": ("min_margin", -1e-9),
    "dlog_norm_bound": ("min_margin", -1e-9),
    "quotient_completeness": ("max_error", 1e-9),
}


def _calculus_trial(seed: int, index: int, dims: Sequence[int]) -> dict:
    rng = rng_from(derive_seed(seed, index))
    d = int(dims[index % len(dims)])
    a = random_psd(d, rng)
    a = a / tr(a) + 0.05 * np.eye(d)
    b = random_hermitian(d, rng)
    bp = random_psd(d, rng)
    bp = bp / tr(bp)
    ex = dlog(a, b)
    scale = max(1.0, _maxabs(ex))
    out = {
        "layercake_panel": _maxabs(layercake(a, b) - ex) / scale,
        "layercake_refine": _maxabs(layercake(a, b, REFINE) - ex) / scale,
        "lieb_quadrature": _maxabs(dlog_lieb_quadrature(a, b) - ex) / scale,
    }
    q = integral_quotient(a, bp)
    out["extremal_panel"] = _maxabs(extremal_decomposition(a, bp) - q)
    out["extremal_refine"] = _maxabs(extremal_decomposition(a, bp, REFINE) - q)
    out["change_of_variables"] = change_of_variables_check(a, bp, ScalarFn.polynomial([0.0, 0.0, 1.0]))[2]
    out["tracial_min"] = abs(tracial_min_integral(a, bp) - 0.5 * (tr(a + bp) - trace_norm(a - bp)))
    out["dlog_identity"] = _maxabs(dlog(a, a) - np.eye(d))
    z = float(rng.uniform(0.1, 10.0))
    out["dlog_scaling"] = _maxabs(dlog(z * a, b) - ex / z) / scale
    b2 = random_hermitian(d, rng)
    c1, c2 = rng.standard_normal(2)
    lin = dlog(a, c1 * b + c2 * b2) - (c1 * ex + c2 * dlog(a, b2))
    out["dlog_linearity"] = _maxabs(lin) / max(scale, _maxabs(dlog(a, b2)))
    pos = dlog(a, bp)
    out["dlog_positivity"] = float(np.linalg.eigvalsh(pos)[0])
    ih = mpow(a, -0.5)
    inv = ih @ dlog(np.linalg.inv(a), ih @ b @ ih) @ ih
    out["dlog_inversion"] = _maxabs(inv - ex) / scale
    out["beigi_tomamichel"] = float(np.linalg.eigvalsh(pos - dlog(a + bp, bp))[0])
    out["dlog_norm_bound"] = op_norm(ih @ bp @ ih) - op_norm(pos)
    s = a + bp
    out["quotient_completeness"] = _maxabs(q + integral_quotient(bp, a) - support_projector(s))
    return out


# -- inequalities --------------------------------------------------------------------------

BINARY = {
    "helstrom_le_chernoff": ("min_margin", -1e-10),
    "chernoff_le_min_trace": ("min_margin", -1e-10),
    "helstrom_test_error": ("max_error", 1e-9),
    "tracial_min_vs_helstrom": ("max_error", 1e-7),
    "tilting_grid": ("min_margin", -1e-10),
}


def _binary_trial(seed: int, index: int, dims: Sequence[int]) -> dict:
    rng = rng_from(derive_seed(seed ^ 0x5EED, index))
    d = int(dims[index % len(dims)])
    w = float(rng.uniform(0.05, 0.95))
    a = w * random_density(d, rng)
    b = (1 - w) * random_density(d, rng)
    h = helstrom_error(a, b)
    ch, _ = chernoff_bound(a, b)
    delta = float(rng.uniform())
    t = helstrom_test(a, b, delta).test
    reports = [tilting_report(a, b, al) for al in np.linspace(0.5, 1.0, 21)]
    return {
        "helstrom_le_chernoff": ch - h,
        "chernoff_le_min_trace": min(tr(a), tr(b)) - ch,
        "helstrom_test_error": abs(test_error(a, b, t) - h),
        "tracial_min_vs_helstrom": abs(tracial_min_integral(a, b) - h),
        "tilting_grid": min(r.margin for r in reports),
    }


# -- bounds -------------------------------------------------------------------------------------

BOUNDS = {
    "cq_channel_coding": ("min_margin", -1e-9),
    "source_coding": ("min_margin", -1e-9),
    "constrained": ("min_margin", -1e-9),
    "entanglement_assisted": ("min_margin", -1e-9),
}

_BOUND_ALPHAS = (0.5, 0.625, 0.75, 0.875, 1.0)


def _bounds_trial(seed: int, index: int, dims: Sequence[int]) -> dict:
    rng = rng_from(derive_seed(seed ^ 0xB0B0, index))
    d = min(int(dims[index % len(dims)]), 3)
    k = 2 + index % 2
    M = 2 + (index // 2) % 2
    ens = random_cq_ensemble(k, d, rng)
    src = random_cq_ensemble(k, d, rng)
    ens3 = random_cq_ensemble(3, d, rng)
    theta = random_density(4, rng)
    kraus = random_kraus(2, 2, 2, rng)
    out = {name: np.inf for name in BOUNDS}
    for al in _BOUND_ALPHAS:
        cfg = SimConfig(M, al)
        out["cq_channel_coding"] = min(out["cq_channel_coding"], cq_random_coding(ens, cfg).margin)
        out["source_coding"] = min(out["source_coding"], cqsw_random_binning(src, cfg).margin)
        z = [index % 3, (index + 1) % 3]
        out["constrained"] = min(out["constrained"], constrained_random_coding(ens3, z, cfg).margin)
        ea = ea_position_coding(kraus, theta, (2, 2), M, al)
        out["entanglement_assisted"] = min(out["entanglement_assisted"], ea.margin)
    return out


def _reduce(suite: str, table: dict, rows: list[dict]) -> list[PropertyResult]:
    out = []
    for name, (sense, tol) in table.items():
        vals = np.array([row[name] for row in rows], dtype=float)
        if sense == "max_error":
            worst = float(vals.max())
            bad = int(np.sum(~(vals <= tol)))
        else:
            worst = float(vals.min())
            bad = int(np.sum(~(vals >= tol)))
        out.append(PropertyResult(suite, name, sense, len(rows), worst, tol, bad))
    return out


def _run(trial: Callable, seed: int, trials: int, dims: Sequence[int], workers: int) -> list[dict]:
    return ordered_map(lambda i: trial(seed, i, dims), range(trials), workers)


def run_suite(suite: str, seed: int = 0, trials: int = 20, dims: Sequence[int] = (2, 3),
              workers: int = 1) -> list[PropertyResult]:
    if suite == "all":
        return [r for s in SUITES for r in run_suite(s, seed, trials, dims, workers)]
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    if suite == "calculus":
        return _reduce(suite, CALCULUS, _run(_calculus_trial, seed, trials, dims, workers))
    if suite == "bounds":
        return _reduce(suite, BOUNDS, _run(_bounds_trial, seed, trials, dims, workers))
    rep = inequality_suite(seed, trials, dims, workers)
    results = [
        PropertyResult(suite, name, "min_margin", trials, rep.worst[name], -rep.tolerance, rep.violations[name])
        for name in rep.worst
    ]
    results += _reduce(suite, BINARY, _run(_binary_trial, seed, trials, dims, workers))
    results.append(PropertyResult(suite, "worst_tilting_ratio", "observed", trials,
                                  rep.worst_tilting_ratio, float("nan"), 0))
    return results

