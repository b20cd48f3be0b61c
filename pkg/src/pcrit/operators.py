"""The p-Laplacian, the p-Schrödinger operator and the energy functional.

A vertex function is a dense float array indexed by host vertex ids; values
outside a subset are taken to be zero unless the caller says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import PreconditionError
from .graph import SubsetSpec, WeightedGraph
from .reports import Certificate

__all__ = [
    "OperatorParams",
    "phi_p",
    "apply_H",
    "apply_L",
    "energy",
    "bracket",
    "lp_norm",
    "greens_formula_residual",
    "gateaux_residual",
    "hardy_weight",
    "verify_hardy",
    "is_superharmonic",
    "is_harmonic",
    "is_subharmonic",
]


@dataclass(frozen=True, eq=False)
class OperatorParams:
    """Exponent ``p > 1`` together with the host graph carrying ``b, m, c``."""

    graph: WeightedGraph
    p: float

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 1:
            raise ValueError(f"exponent p must satisfy p > 1, got {self.p}")
        object.__setattr__(self, "p", p)

    def with_potential(self, c):
        return OperatorParams(self.graph.with_potential(c), self.p)


def phi_p(a, p):
    """Odd power map ``|a|^(p-2) a``, exactly zero at ``a = 0``.

    >>> float(phi_p(-2.0, 3)), float(phi_p(4.0, 1.5)), float(phi_p(0.0, 1.5))
    (-4.0, 2.0, 0.0)
    """
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.abs(a) ** (p - 1)


def _as_function(g: WeightedGraph, f):
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise ValueError(f"vertex function has shape {f.shape}, expected ({g.n},)")
    return f


def _laplace_sum(params, f):
    g, p = params.graph, params.p
    t = g.eb * phi_p(f[g.eu] - f[g.ev], p)
    return np.bincount(g.eu, t, g.n) - np.bincount(g.ev, t, g.n)


def apply_L(params: OperatorParams, f, at=None):
    """p-Laplacian ``Lf(x) = (1/m) sum_y b(x,y) phi_p(f(x) - f(y))``."""
    f = _as_function(params.graph, f)
    out = _laplace_sum(params, f) / params.graph.m
    return out if at is None else out[at]


def apply_H(params: OperatorParams, f, at=None):
    """Schrödinger operator ``Hf = Lf + (c/m) phi_p(f)``.

    Returns the full vector, or its value(s) at ``at`` when given.

    Examples
    --------
    >>> from pcrit.graph import ExhaustionSpec, build_family
    >>> g, K = build_family(ExhaustionSpec("z", [1]), 0)
    >>> f = np.zeros(g.n); f[0] = 2.0
    >>> float(apply_H(OperatorParams(g, 3), f, at=0))
    8.0
    """
    f = _as_function(params.graph, f)
    g = params.graph
    out = (_laplace_sum(params, f) + g.c * phi_p(f, params.p)) / g.m
    return out if at is None else out[at]


def energy(params: OperatorParams, f) -> float:
    """``h(f) = sum over edges b |grad f|^p + sum_x c |f|^p``."""
    f = _as_function(params.graph, f)
    g, p = params.graph, params.p
    return float(np.dot(g.eb, np.abs(f[g.eu] - f[g.ev]) ** p) + np.dot(g.c, np.abs(f) ** p))


def bracket(params: OperatorParams, f, g, V=None) -> float:
    """``<f, g>_V = sum_{x in V} f(x) g(x) m(x)``; all vertices when ``V`` is None."""
    w = params.graph.m * np.asarray(f, float) * np.asarray(g, float)
    if V is None:
        return float(w.sum())
    idx = V.interior if isinstance(V, SubsetSpec) else np.asarray(V, dtype=np.int64)
    return float(w[idx].sum())


def lp_norm(params: OperatorParams, f) -> float:
    """``||f||_{p,m}``."""
    return float(np.dot(params.graph.m, np.abs(np.asarray(f, float)) ** params.p) ** (1 / params.p))


def greens_formula_residual(params: OperatorParams, K: SubsetSpec, f, phi, return_scale=False):
    """Absolute defect of the discrete Green formula on ``K``.

    Compares ``<Hf, phi>_K`` with the sum of the interior edge term, the
    potential term and the boundary flux term, each evaluated term by term.
    ``scale`` is the sum of absolute values of all terms on both sides.
    """
    g, p = params.graph, params.p
    f = _as_function(g, f)
    phi = _as_function(g, phi)
    mask = K.mask
    Hf = apply_H(params, f)
    lhs_terms = (Hf * phi * g.m)[mask]

    inu, inv = mask[g.eu], mask[g.ev]
    both = inu & inv
    d = phi_p(f[g.eu] - f[g.ev], p)
    edge_terms = (g.eb * d * (phi[g.eu] - phi[g.ev]))[both]
    pot_terms = (g.c * phi_p(f, p) * phi)[mask]
    # flux through edges leaving K, oriented from the interior endpoint
    out_u = inu & ~inv
    out_v = inv & ~inu
    flux_terms = np.concatenate([
        (g.eb * d * phi[g.eu])[out_u],
        (g.eb * -d * phi[g.ev])[out_v],
    ])
    lhs = lhs_terms.sum()
    rhs = edge_terms.sum() + pot_terms.sum() + flux_terms.sum()
    res = float(abs(lhs - rhs))
    if return_scale:
        scale = float(np.abs(lhs_terms).sum() + np.abs(edge_terms).sum()
                      + np.abs(pot_terms).sum() + np.abs(flux_terms).sum())
        return res, scale
    return res


def gateaux_residual(params: OperatorParams, phi, psi, step=1e-5, relative=False):
    """Central-difference defect of ``d/dt h(phi + t psi) = p <H phi, psi>``.

    With ``relative=True`` the defect is divided by
    ``p (sum b |grad phi|^(p-1) |grad psi| + sum |c| |phi|^(p-1) |psi|)``,
    the natural size of the derivative, or returned as is when that is 0.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    g, p = params.graph, params.p
    phi = _as_function(g, phi)
    psi = _as_function(g, psi)
    fd = (energy(params, phi + step * psi) - energy(params, phi - step * psi)) / (2 * step)
    exact = p * bracket(params, apply_H(params, phi), psi)
    res = abs(fd - exact)
    if not relative:
        return float(res)
    scale = p * (np.dot(g.eb, np.abs(phi[g.eu] - phi[g.ev]) ** (p - 1) * np.abs(psi[g.eu] - psi[g.ev]))
                 + np.dot(np.abs(g.c), np.abs(phi) ** (p - 1) * np.abs(psi)))
    return float(res / scale) if scale > 0 else float(res)


def _check_certificate(name, values, V, tol, sign):
    idx = V.interior
    vals = np.asarray(values, float)[idx]
    if tol is None:
        tol = 1e-10 * (1 + (np.abs(vals).max() if vals.size else 0.0))
    if sign > 0:
        resid = np.minimum(vals, 0.0)
        bad = vals < -tol
    elif sign < 0:
        resid = np.maximum(vals, 0.0)
        bad = vals > tol
    else:
        resid = vals
        bad = np.abs(vals) > tol
    if vals.size:
        k = int(np.argmax(np.abs(resid)))
        worst, where = float(resid[k]), int(idx[k])
    else:
        worst, where = 0.0, None
    return Certificate(
        name=name,
        gap=-abs(worst) if sign == 0 else sign * worst,
        passed=not bad.any(),
        min_term=float(vals.min()) if vals.size else 0.0,
        argmin=where,
        tolerances={"residual": float(tol)},
        details={"failing_vertices": idx[bad].tolist(), "residuals": resid},
    )


def is_superharmonic(params, u, V: SubsetSpec, tol=None) -> Certificate:
    """Check ``Hu >= -tol`` on ``V``; default ``tol = 1e-10 (1 + sup|Hu|)``."""
    return _check_certificate("superharmonic", apply_H(params, u), V, tol, +1)


def is_subharmonic(params, u, V: SubsetSpec, tol=None) -> Certificate:
    """Check ``Hu <= tol`` on ``V``."""
    return _check_certificate("subharmonic", apply_H(params, u), V, tol, -1)


def is_harmonic(params, u, V: SubsetSpec, tol=None) -> Certificate:
    """Check ``|Hu| <= tol`` on ``V``."""
    return _check_certificate("harmonic", apply_H(params, u), V, tol, 0)


def hardy_weight(params: OperatorParams, u, V: SubsetSpec, tol=None):
    """Hardy weight ``w = Hu / u^(p-1)`` of a positive superharmonic ``u``.

    The result vanishes outside ``V``. By the ground-state representation
    ``h(phi) >= sum w |phi|^p m`` for every ``phi`` supported in ``V``.

    Raises
    ------
    PreconditionError
        If ``u`` is not strictly positive on ``V`` or ``Hu < -tol`` there,
        with ``tol`` defaulting to ``1e-12 (1 + sup|Hu|)``.
    """
    u = _as_function(params.graph, u)
    idx = V.interior
    if np.any(~(u[idx] > 0)):
        bad = idx[~(u[idx] > 0)]
        raise PreconditionError(f"u is not strictly positive at vertices {bad.tolist()[:10]}")
    Hu = apply_H(params, u)
    if tol is None:
        tol = 1e-12 * (1 + np.abs(Hu[idx]).max(initial=0.0))
    if np.any(Hu[idx] < -tol):
        bad = idx[Hu[idx] < -tol]
        raise PreconditionError(f"u is not superharmonic at vertices {bad.tolist()[:10]}")
    w = np.zeros(params.graph.n)
    w[idx] = Hu[idx] / u[idx] ** (params.p - 1)
    return w


def verify_hardy(params, w, V: SubsetSpec, trials=1000, seed=0, tol=1e-12) -> Certificate:
    """Spot-check ``h(phi) >= sum w |phi|^p m`` on random ``phi`` supported in ``V``."""
    rng = np.random.default_rng(seed)
    g, p = params.graph, params.p
    w = np.asarray(w, float)
    idx = V.interior
    worst, worst_phi = np.inf, None
    for _ in range(trials):
        phi = np.zeros(g.n)
        phi[idx] = rng.standard_normal(idx.size)
        if rng.random() < 0.5:
            phi[idx] = np.abs(phi[idx])
        h = energy(params, phi)
        rhs = float(np.dot(w * g.m, np.abs(phi) ** p))
        gap = (h - rhs) / (1 + abs(h) + abs(rhs))
        if gap < worst:
            worst, worst_phi = gap, phi
    return Certificate(
        name="hardy",
        gap=float(worst),
        passed=bool(worst >= -tol),
        min_term=float(worst),
        tolerances={"nonneg": tol},
        details={"trials": trials, "seed": seed, "worst_phi": worst_phi},
    )
