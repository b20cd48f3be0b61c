"""Numerical certificates for Picone, Anane-Díaz-Saá, Harnack and Barta inequalities.

Every function returns a :class:`~pcrit.reports.Certificate` whose ``gap`` is
LHS minus RHS, so ``gap >= -tol`` means the inequality was observed to hold.
Equality characterisations use a looser relative gate (``1e-9``) than the
nonnegativity checks, since they are the numerically fragile part.
"""

from __future__ import annotations

import numpy as np

from .exceptions import PreconditionError
from .graph import SubsetSpec
from .operators import OperatorParams, apply_H, apply_L, phi_p
from .reports import Certificate

__all__ = [
    "EQUALITY_TOL",
    "pointwise_picone",
    "pointwise_picone_terms",
    "picone_gap",
    "ads_gap",
    "ads_finite_gap",
    "harnack_ratio",
    "harnack_constant",
    "barta_bounds",
]

EQUALITY_TOL = 1e-9


def pointwise_picone_terms(a, b, c, p):
    """Vectorised ``f(a,b,c) = |a-b|^p + a^p phi_p(c-1) + b^p phi_p(1/c-1)``.

    Returns ``(f, scale)`` with ``scale = 1 + a^p + b^p``.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    ap, bp = np.abs(a) ** p, np.abs(b) ** p
    f = np.abs(a - b) ** p + ap * phi_p(c - 1, p) + bp * phi_p(1 / c - 1, p)
    return f, 1 + ap + bp


def pointwise_picone(a, b, c, p, tol=1e-12) -> Certificate:
    """Certificate for ``f(a,b,c) >= 0`` on ``a, b >= 0, c > 0``.

    ``equality_flag`` is set iff ``b = ac`` to relative ``1e-9`` and the gap
    vanishes to the same relative accuracy.

    >>> pointwise_picone(1.0, 2.0, 2.0, 3.0).equality_flag
    True
    >>> round(pointwise_picone(1.0, 0.0, 0.5, 2.0).gap, 12)
    0.5
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    if not (a >= 0 and b >= 0 and c > 0):
        raise PreconditionError(f"need a, b >= 0 and c > 0, got a={a}, b={b}, c={c}")
    f, scale = pointwise_picone_terms(a, b, c, p)
    f, scale = float(f), float(scale)
    rel = abs(b - a * c) <= EQUALITY_TOL * max(1.0, abs(b), abs(a * c))
    eq = bool(rel and abs(f) <= EQUALITY_TOL * scale)
    return Certificate(
        name="pointwise-picone",
        gap=f,
        passed=f >= -tol * scale,
        min_term=f,
        equality_flag=eq,
        tolerances={"nonneg": tol * scale, "equality": EQUALITY_TOL},
        details={"a": a, "b": b, "c": c, "p": p, "scale": scale},
    )


def _log_ratio_power(u_abs, v, p):
    """``|u|^p / v^(p-1)`` evaluated in log space where ``u != 0``."""
    out = np.zeros_like(v)
    nz = u_abs > 0
    out[nz] = np.exp(p * np.log(u_abs[nz]) - (p - 1) * np.log(v[nz]))
    return out


def _proportionality(u, v, idx):
    """Best constant ``C`` with ``u = C v`` on ``idx`` and the relative defect."""
    r = u[idx] / v[idx]
    C = float(np.median(r))
    defect = float(np.max(np.abs(u[idx] - C * v[idx]))) / max(1e-300, float(np.max(np.abs(u[idx]))))
    return C, defect


def picone_gap(params: OperatorParams, u, v, V: SubsetSpec, tol=1e-11) -> Certificate:
    """Summed Picone inequality over ordered pairs of ``V``.

    The gap is ``sum_{x,y in V} b (|grad u|^p - phi_p(grad v) grad(|u|^p / v^(p-1)))``.
    Sign-changing ``u`` is replaced by ``|u|`` first (recorded in
    ``details['substituted_abs']``). For connected ``V`` the equality flag
    requires ``u = C v`` on ``V``.
    """
    g, p = params.graph, params.p
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    idx = V.interior
    if np.any(~(v[idx] > 0)):
        raise PreconditionError("v must be strictly positive on V")
    substituted = bool(np.any(u[idx] < 0))
    ua = np.abs(u)
    mask = V.mask
    both = mask[g.eu] & mask[g.ev]
    x, y, b = g.eu[both], g.ev[both], g.eb[both]
    vv = np.where(mask, v, 1.0)
    q = _log_ratio_power(ua, vv, p)
    # one undirected edge carries the two ordered pairs (x,y) and (y,x)
    t_xy = np.abs(ua[x] - ua[y]) ** p - phi_p(v[x] - v[y], p) * (q[x] - q[y])
    terms = 2 * b * t_xy
    gap = float(terms.sum())
    scale = float(np.sum(2 * b * (np.abs(ua[x] - ua[y]) ** p
                                  + np.abs(phi_p(v[x] - v[y], p) * (q[x] - q[y])))))
    k = int(np.argmin(terms)) if terms.size else None
    C, defect = _proportionality(ua, v, idx)
    eq = bool(V.is_connected and defect <= EQUALITY_TOL
              and abs(gap) <= EQUALITY_TOL * (1 + scale))
    return Certificate(
        name="picone",
        gap=gap,
        passed=gap >= -tol * (1 + scale),
        min_term=float(terms[k]) if k is not None else 0.0,
        argmin=[int(x[k]), int(y[k])] if k is not None else None,
        equality_flag=eq,
        tolerances={"nonneg": tol * (1 + scale), "equality": EQUALITY_TOL},
        details={"substituted_abs": substituted, "C": C, "proportionality_defect": defect,
                 "scale": scale},
    )


def _positive_on(u, idx, label):
    if np.any(~(u[idx] > 0)):
        raise PreconditionError(f"{label} must be strictly positive on K")


def ads_gap(params: OperatorParams, u1, u2, K: SubsetSpec, tol=1e-11) -> Certificate:
    """General Anane-Díaz-Saá inequality with boundary flux terms.

    LHS is ``<Lu1/u1^(p-1) - Lu2/u2^(p-1), u1^p - u2^p>_K`` and RHS the sum
    over edges ``(x, y)`` from ``K`` to its boundary of
    ``b (u1^p(x) - u2^p(x)) (phi_p(1 - u1(y)/u1(x)) - phi_p(1 - u2(y)/u2(x)))``.
    ``details['conditions']`` reports, per boundary edge, which of the four
    sufficient sign conditions for ``RHS >= 0`` holds.
    """
    g, p = params.graph, params.p
    u1 = np.asarray(u1, float)
    u2 = np.asarray(u2, float)
    idx = K.interior
    _positive_on(u1, idx, "u1")
    _positive_on(u2, idx, "u2")
    mask = K.mask
    L1, L2 = apply_L(params, u1), apply_L(params, u2)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.where(mask, L1 / u1 ** (p - 1) - L2 / u2 ** (p - 1), 0.0)
        pw = np.where(mask, np.abs(u1) ** p - np.abs(u2) ** p, 0.0)
    lhs_terms = (diff * pw * g.m)[idx]
    lhs = float(lhs_terms.sum())

    out_u = mask[g.eu] & ~mask[g.ev]
    out_v = mask[g.ev] & ~mask[g.eu]
    x = np.concatenate([g.eu[out_u], g.ev[out_v]])
    y = np.concatenate([g.ev[out_u], g.eu[out_v]])
    b = np.concatenate([g.eb[out_u], g.eb[out_v]])
    r1 = u1[y] / u1[x]
    r2 = u2[y] / u2[x]
    rhs_terms = b * pw[x] * (phi_p(1 - r1, p) - phi_p(1 - r2, p))
    rhs = float(rhs_terms.sum())

    eps = 1e-12
    s1 = u1[x] - u2[x]
    s2 = u1[x] * u2[y] - u1[y] * u2[x]
    sc1 = eps * (np.abs(u1[x]) + np.abs(u2[x]))
    sc2 = eps * (np.abs(u1[x] * u2[y]) + np.abs(u1[y] * u2[x]))
    cond = {
        "a": np.abs(s1) <= sc1,
        "b": np.abs(s2) <= sc2,
        "c": (s1 > sc1) & (s2 < -sc2),
        "d": (s1 < -sc1) & (s2 > sc2),
    }
    any_cond = cond["a"] | cond["b"] | cond["c"] | cond["d"]
    scale = float(np.abs(lhs_terms).sum() + np.abs(rhs_terms).sum())
    gap = lhs - rhs
    C, defect = _proportionality(u1, u2, idx)
    eq = bool(K.is_connected and defect <= EQUALITY_TOL and abs(gap) <= EQUALITY_TOL * (1 + scale))
    return Certificate(
        name="ads",
        gap=gap,
        passed=gap >= -tol * (1 + scale),
        min_term=float(rhs_terms.min()) if rhs_terms.size else 0.0,
        equality_flag=eq,
        tolerances={"nonneg": tol * (1 + scale), "equality": EQUALITY_TOL},
        details={
            "lhs": lhs,
            "rhs": rhs,
            "conditions": {k: int(v.sum()) for k, v in cond.items()},
            "boundary_pairs": int(x.size),
            "rhs_nonneg_guaranteed": bool(any_cond.all()),
            "C": C,
            "proportionality_defect": defect,
        },
    )


def ads_finite_gap(params: OperatorParams, phi, psi, K: SubsetSpec, tol=1e-11) -> Certificate:
    """Anane-Díaz-Saá inequality for functions supported in ``K``.

    ``phi`` and ``psi`` are set to zero outside ``K`` before evaluating
    ``<L phi, (phi^p - psi^p)/phi^(p-1)>_K + <L psi, (psi^p - phi^p)/psi^(p-1)>_K``.
    """
    g, p = params.graph, params.p
    idx = K.interior
    mask = K.mask
    phi = np.where(mask, np.asarray(phi, float), 0.0)
    psi = np.where(mask, np.asarray(psi, float), 0.0)
    _positive_on(phi, idx, "phi")
    _positive_on(psi, idx, "psi")
    Lphi, Lpsi = apply_L(params, phi), apply_L(params, psi)
    a, b = phi[idx], psi[idx]
    t1 = Lphi[idx] * (a - b * (b / a) ** (p - 1)) * g.m[idx]
    t2 = Lpsi[idx] * (b - a * (a / b) ** (p - 1)) * g.m[idx]
    terms = t1 + t2
    gap = float(terms.sum())
    scale = float(np.abs(t1).sum() + np.abs(t2).sum())
    C, defect = _proportionality(phi, psi, idx)
    eq = bool(K.is_connected and defect <= EQUALITY_TOL and abs(gap) <= EQUALITY_TOL * (1 + scale))
    k = int(np.argmin(terms))
    return Certificate(
        name="ads-finite",
        gap=gap,
        passed=gap >= -tol * (1 + scale),
        min_term=float(terms[k]),
        argmin=int(idx[k]),
        equality_flag=eq,
        tolerances={"nonneg": tol * (1 + scale), "equality": EQUALITY_TOL},
        details={"C": C, "proportionality_defect": defect, "scale": scale},
    )


def harnack_ratio(params: OperatorParams, u, K: SubsetSpec, f=None, tol=1e-10) -> Certificate:
    """Ratio ``max_K u / min_K u`` for ``u >= 0`` with ``Hu >= f u^(p-1)`` on ``K``.

    A zero minimum with a positive maximum gives an infinite ratio and a
    failed certificate: on connected ``K`` such ``u`` must vanish on ``K``
    and its boundary. An identically zero ``u`` gives ratio 1.

    Raises
    ------
    PreconditionError
        If ``K`` is disconnected, ``u`` is negative somewhere, or the
        supersolution inequality fails by more than ``tol``.
    """
    g, p = params.graph, params.p
    if not K.is_connected:
        raise PreconditionError("K must be connected")
    u = np.asarray(u, float)
    if np.any(u < -tol):
        raise PreconditionError("u must be nonnegative")
    f = np.zeros(g.n) if f is None else np.broadcast_to(np.asarray(f, float), (g.n,))
    idx = K.interior
    resid = apply_H(params, u)[idx] - f[idx] * np.abs(u[idx]) ** (p - 1)
    if np.any(resid < -tol):
        raise PreconditionError(
            f"Hu >= f u^(p-1) fails by {-resid.min():.3e} at vertex {int(idx[np.argmin(resid)])}")
    umax, umin = float(u[idx].max()), float(u[idx].min())
    if umax <= 0:
        ratio = 1.0
    elif umin <= 0:
        ratio = np.inf
    else:
        ratio = umax / umin
    violation = bool(np.isinf(ratio))
    closure = np.concatenate([idx, K.boundary])
    return Certificate(
        name="harnack",
        gap=0.0 if not violation else -np.inf,
        passed=not violation,
        min_term=umin,
        argmin=int(idx[np.argmin(u[idx])]),
        tolerances={"precondition": tol},
        details={"ratio": ratio, "max": umax, "min": umin, "violation": violation,
                 "vanishes_on_closure": bool(np.all(np.abs(u[closure]) <= tol))},
    )


def harnack_constant(params: OperatorParams, us, K: SubsetSpec, f=None, tol=1e-10) -> Certificate:
    """Empirical Harnack constant: the largest ratio over a batch of supersolutions."""
    certs = [harnack_ratio(params, u, K, f, tol) for u in us]
    ratios = np.array([c.details["ratio"] for c in certs])
    C = float(ratios.max()) if ratios.size else np.nan
    return Certificate(
        name="harnack-batch",
        gap=0.0 if np.isfinite(C) else -np.inf,
        passed=bool(all(c.passed for c in certs)),
        min_term=float(ratios.min()) if ratios.size else np.nan,
        argmin=int(np.argmax(ratios)) if ratios.size else None,
        tolerances={"precondition": tol},
        details={"C": C, "ratios": ratios, "batch": len(certs)},
    )


def barta_bounds(params: OperatorParams, u, V: SubsetSpec):
    """Barta bracket ``(inf_V Hu/u^(p-1), sup_V Hu/u^(p-1))`` for ``u > 0`` on ``V``.

    ``u`` is set to zero outside ``V`` first, which makes the upper bound
    valid and, by the Picone ground-state representation, keeps the lower
    bound valid without any sign assumption on the energy.
    """
    u = np.asarray(u, float)
    idx = V.interior
    if idx.size == 0:
        raise PreconditionError("V is empty")
    if np.any(~(u[idx] > 0)):
        raise PreconditionError("u must be strictly positive on V")
    w = np.where(V.mask, u, 0.0)
    q = apply_H(params, w)[idx] / w[idx] ** (params.p - 1)
    return float(q.min()), float(q.max())
