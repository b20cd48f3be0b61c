"""Damped Newton with smoothing continuation for the Poisson-Dirichlet energy.

Minimises ``J(u) = h(u)/p - sum_{x in F} g(x) m(x) u(x)`` over the values on
the free vertices ``F`` with all other values held fixed. The gradient of
``J`` at a free vertex is ``m (Hu - g)``, so stationarity is ``Hu = g`` on F.

For ``p != 2`` the summands ``|t|^p`` are replaced by
``rho_eps(t) = (t^2 + eps^2)^(p/2) - eps^p`` with ``eps`` driven to zero;
the final stage uses the exact energy with a small Hessian floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .operators import OperatorParams, apply_H, energy, phi_p

DENSE_LIMIT = 1500
DEFAULT_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 0.0)
# below p = 2 tiny edge gradients need a long descent before the exact stage
FINE_SCHEDULE = tuple(10.0 ** -k for k in range(1, 15)) + (0.0,)


@dataclass
class NewtonResult:
    u: np.ndarray
    residual: float
    iterations: int
    converged: bool
    objective: float
    precision_floor: float = 0.0
    precision_limited: bool = False


# below this smoothing level the smoothed powers under- or overflow; treat it as 0
_EPS_MIN = 1e-100


def _rho(t, eps, p):
    if eps < _EPS_MIN:
        return np.abs(t) ** p
    return (t * t + eps * eps) ** (p / 2) - eps ** p


def _drho(t, eps, p):
    """``rho'(t) / p``."""
    if eps < _EPS_MIN:
        return phi_p(t, p)
    return t * (t * t + eps * eps) ** (p / 2 - 1)


def _d2rho(t, eps, p, floor):
    """``rho''(t) / p`` with a lower floor on the magnitude of the curvature."""
    if eps < _EPS_MIN:
        a = np.abs(t)
        # clamping |t| from below by the floor bounds the curvature for p < 2
        # and keeps it positive for p > 2
        return (p - 1) * np.maximum(a, floor) ** (p - 2)
    s = t * t + eps * eps
    return s ** (p / 2 - 2) * ((p - 1) * t * t + eps * eps)


class DirichletEnergy:
    """Objective, gradient and Hessian of ``J`` restricted to free vertices."""

    def __init__(self, params: OperatorParams, free, g=None):
        G = params.graph
        self.params = params
        self.p = params.p
        self.free = np.asarray(free, dtype=np.int64)
        self.pos = np.full(G.n, -1, dtype=np.int64)
        self.pos[self.free] = np.arange(self.free.size)
        self.g = np.zeros(G.n) if g is None else np.asarray(g, float)
        iu, iv = self.pos[G.eu], self.pos[G.ev]
        act = (iu >= 0) | (iv >= 0)
        self.eu, self.ev, self.eb = G.eu[act], G.ev[act], G.eb[act]
        self.iu, self.iv = iu[act], iv[act]
        both = (self.iu >= 0) & (self.iv >= 0)
        self.both = both
        self.m = G.m[self.free]
        self.c = G.c[self.free]
        self.gm = self.g[self.free] * self.m

    def objective(self, u, eps):
        p = self.p
        t = u[self.eu] - u[self.ev]
        uf = u[self.free]
        return float((np.dot(self.eb, _rho(t, eps, p)) + np.dot(self.c, _rho(uf, eps, p))) / p
                     - np.dot(self.gm, uf))

    def gradient(self, u, eps):
        k = self.free.size
        t = u[self.eu] - u[self.ev]
        w = self.eb * _drho(t, eps, self.p)
        gr = np.zeros(k)
        mu, mv = self.iu >= 0, self.iv >= 0
        gr += np.bincount(self.iu[mu], w[mu], k)
        gr -= np.bincount(self.iv[mv], w[mv], k)
        gr += self.c * _drho(u[self.free], eps, self.p) - self.gm
        return gr

    def hessian(self, u, eps, floor):
        k = self.free.size
        t = u[self.eu] - u[self.ev]
        w = self.eb * _d2rho(t, eps, self.p, floor)
        diag = self.c * _d2rho(u[self.free], eps, self.p, floor)
        mu, mv = self.iu >= 0, self.iv >= 0
        diag = diag + np.bincount(self.iu[mu], w[mu], k) + np.bincount(self.iv[mv], w[mv], k)
        b = self.both
        rows = np.concatenate([self.iu[b], self.iv[b], np.arange(k)])
        cols = np.concatenate([self.iv[b], self.iu[b], np.arange(k)])
        vals = np.concatenate([-w[b], -w[b], diag])
        return sparse.csc_matrix((vals, (rows, cols)), shape=(k, k))

    def precision_floor(self, u):
        """Smallest residual resolvable in double precision near ``u``.

        Perturbing each gradient by a few ulps of its endpoint values moves
        ``phi_p(grad u)`` by this much; for ``p`` near 1 and tiny gradients it
        dominates any tolerance.
        """
        if self.free.size == 0:
            return 0.0
        p = self.p
        t = np.abs(u[self.eu] - u[self.ev])
        delta = 4 * np.spacing(np.maximum(np.abs(u[self.eu]), np.abs(u[self.ev])))
        jump = self.eb * (phi_p(t + delta, p) - phi_p(t, p))
        k = self.free.size
        mu, mv = self.iu >= 0, self.iv >= 0
        acc = np.bincount(self.iu[mu], jump[mu], k) + np.bincount(self.iv[mv], jump[mv], k)
        uf = np.abs(u[self.free])
        acc += np.abs(self.c) * (phi_p(uf + 4 * np.spacing(uf), p) - phi_p(uf, p))
        return float(np.max(acc / self.m))

    def residual(self, u):
        """``sup_F |Hu - g|``."""
        if self.free.size == 0:
            return 0.0
        return float(np.max(np.abs(apply_H(self.params, u)[self.free] - self.g[self.free])))


def _newton_direction(H, gr, m, shift0):
    """Solve ``(H + mu diag(m)) d = -gr`` with ``mu`` raised until ``d`` descends."""
    k = gr.size
    mu = shift0
    dense = k <= DENSE_LIMIT
    Hd = H.toarray() if dense else None
    scale = float(np.max(np.abs(H.diagonal()))) if k else 1.0
    scale = scale if scale > 0 else 1.0
    for _ in range(60):
        try:
            if dense:
                A = Hd + mu * np.diag(m)
                cf = linalg.cho_factor(A, check_finite=False)
                d = -linalg.cho_solve(cf, gr, check_finite=False)
            else:
                A = (H + mu * sparse.diags(m)).tocsc()
                d = -splinalg.splu(A).solve(gr)
                if not np.all(np.isfinite(d)) or np.dot(d, gr) >= 0:
                    raise linalg.LinAlgError("not a descent direction")
            if np.all(np.isfinite(d)):
                return d, mu
        except (linalg.LinAlgError, RuntimeError, ValueError):
            pass
        mu = max(10 * mu, 1e-10 * scale / max(float(m.min()), 1e-300))
    return -gr / m, mu


def _run_stage(E: DirichletEnergy, u, eps, tol, max_iter, floor, final):
    """Newton iterations for one smoothing level; returns (u, iterations, ok)."""
    free = E.free
    it = 0
    mu = 0.0
    best, stall = np.inf, 0
    for it in range(1, max_iter + 1):
        gr = E.gradient(u, eps)
        if final:
            r = E.residual(u)
            if r < 0.5 * best:
                best, stall = r, 0
            else:
                stall += 1
                if stall >= 8:
                    return u, it - 1, False
        gres = float(np.max(np.abs(gr / E.m))) if gr.size else 0.0
        if final and E.residual(u) <= tol:
            return u, it - 1, True
        if not final and gres <= tol:
            return u, it - 1, True
        H = E.hessian(u, eps, floor)
        d, mu = _newton_direction(H, gr, E.m, mu * 0.1 if mu > 1e-300 else 0.0)
        J0 = E.objective(u, eps)
        slope = float(np.dot(gr, d))
        gnorm0 = float(np.linalg.norm(gr))
        step = 1.0
        accepted = False
        for _ in range(50):
            trial = u.copy()
            trial[free] = u[free] + step * d
            # an overflowing trial gives J1 = inf and is backtracked
            with np.errstate(over="ignore", invalid="ignore"):
                J1 = E.objective(trial, eps)
            if J1 <= J0 + 1e-4 * step * slope:
                accepted = True
                break
            # near the optimum J is flat to rounding; fall back to gradient decrease
            if J1 <= J0 + 1e-13 * (1 + abs(J0)):
                if np.linalg.norm(E.gradient(trial, eps)) < gnorm0:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            return u, it, False
        u = trial
    if final:
        return u, it, E.residual(u) <= tol
    return u, it, True


def _mixed_polish(E: DirichletEnergy, u, tol, max_iter=100):
    """Newton on the flux form of ``Hu = g`` for ``p < 2``.

    Unknowns are the free values and one flux per active edge, with the
    potential term treated as an edge to a ground vertex held at zero. The
    constitutive law ``grad u = phi_q(flux)`` with ``q = p/(p-1) > 2`` has a
    bounded derivative, so tiny gradients no longer cause Newton overshoot.
    """
    p = E.p
    q = p / (p - 1)
    k = E.free.size
    fi = np.flatnonzero(E.c != 0)
    ne, ns = E.eb.size, fi.size
    mu, mv = E.iu >= 0, E.iv >= 0
    ar_e = np.arange(ne)

    def unpack(z):
        uu = u.copy()
        uu[E.free] = z[:k]
        return uu, z[k:k + ne], z[k + ne:]

    def resid(z):
        uu, fl, sl = unpack(z)
        bf = E.eb * fl
        rv = np.bincount(E.iu[mu], bf[mu], k) - np.bincount(E.iv[mv], bf[mv], k) - E.gm
        rv[fi] += E.c[fi] * sl
        re = (uu[E.eu] - uu[E.ev]) - phi_p(fl, q)
        rs = uu[E.free][fi] - phi_p(sl, q)
        return np.concatenate([rv / E.m, re, rs])

    t = u[E.eu] - u[E.ev]
    z = np.concatenate([u[E.free], phi_p(t, p), phi_p(u[E.free][fi], p)])
    rows_v = np.concatenate([E.iu[mu], E.iv[mv]])
    cols_v = k + np.concatenate([ar_e[mu], ar_e[mv]])
    vals_v = np.concatenate([E.eb[mu], -E.eb[mv]])
    rows_e = k + np.concatenate([ar_e[mu], ar_e[mv]])
    cols_e = np.concatenate([E.iu[mu], E.iv[mv]])
    vals_e = np.concatenate([np.ones(mu.sum()), -np.ones(mv.sum())])
    rows_s = np.concatenate([fi, k + ne + np.arange(ns)])
    cols_s = np.concatenate([k + ne + np.arange(ns), fi])
    vals_s = np.concatenate([E.c[fi], np.ones(ns)])
    N = k + ne + ns
    scale_rows = np.concatenate([1 / E.m, np.ones(ne + ns)])
    r = resid(z)
    rscale = 1.0 + float(np.max(np.abs(E.g[E.free]))) + float(np.max(np.abs(u)))
    for it in range(max_iter):
        uu = unpack(z)[0]
        if E.residual(uu) <= tol:
            return uu, it, True
        if np.max(np.abs(r)) <= 1e-14 * rscale:
            # the flux system is solved; what remains is rounding in grad u
            return uu, it, E.residual(uu) <= max(tol, 10 * E.precision_floor(uu))
        fl, sl = z[k:k + ne], z[k + ne:]
        lam = np.concatenate([(q - 1) * np.abs(fl) ** (q - 2), (q - 1) * np.abs(sl) ** (q - 2)])
        diag_rows = k + np.arange(ne + ns)
        J = sparse.csc_matrix((np.concatenate([vals_v, vals_e, vals_s, -lam]),
                               (np.concatenate([rows_v, rows_e, rows_s, diag_rows]),
                                np.concatenate([cols_v, cols_e, cols_s, diag_rows]))),
                              shape=(N, N))
        J = sparse.diags(scale_rows) @ J
        try:
            d = splinalg.splu(J.tocsc()).solve(-r)
        except RuntimeError:
            return unpack(z)[0], it, False
        if not np.all(np.isfinite(d)):
            return unpack(z)[0], it, False
        n0 = np.linalg.norm(r)
        step = 1.0
        for _ in range(40):
            zt = z + step * d
            rt = resid(zt)
            if np.linalg.norm(rt) <= (1 - 1e-4 * step) * n0:
                break
            step *= 0.5
        else:
            return unpack(z)[0], it, False
        z, r = zt, rt
    uu = unpack(z)[0]
    return uu, max_iter, E.residual(uu) <= tol


def solve_dirichlet(params: OperatorParams, free, g, u0, tol=1e-10, max_iter=200,
                    schedule=None, warm=False) -> NewtonResult:
    """Minimise ``J`` over the free vertices starting from ``u0``.

    ``u0`` supplies the fixed values outside ``free``. ``schedule`` lists
    relative smoothing levels (multiplied by the data scale) and must end at
    zero; with ``warm=True`` only the exact stage is run unless it fails.
    """
    p = params.p
    u = np.array(u0, dtype=float)
    E = DirichletEnergy(params, free, g)
    if E.free.size == 0:
        return NewtonResult(u, 0.0, 0, True, E.objective(u, 0.0))
    scale = max(float(np.max(np.abs(u))), 1e-300)
    floor = (1e-15 if p < 2 else 1e-9) * scale
    if p == 2:
        stages = [0.0]
    elif schedule is not None:
        stages = list(schedule)
    elif warm:
        stages = [0.0]
    else:
        stages = list(FINE_SCHEDULE if p < 2 else DEFAULT_SCHEDULE)
    total = 0
    ok = False
    if p < 2 and stages[-1] == 0.0:
        # smoothing brings the iterate close, the flux form finishes the job
        for eps_rel in stages[:-1]:
            if eps_rel < 1e-6:
                break
            u, it, _ = _run_stage(E, u, eps_rel * scale, max(tol, 1e-6 * scale ** (p - 1) * eps_rel),
                                  50, floor, False)
            total += it
        u_mixed, it, ok = _mixed_polish(E, u, tol)
        total += it
        if ok or E.residual(u_mixed) < E.residual(u):
            u = u_mixed
        if ok:
            res = E.residual(u)
            return NewtonResult(u, res, total, True, E.objective(u, 0.0), E.precision_floor(u),
                                res > tol)
        stages = [e for e in stages if e < 1e-6]
    for k, eps_rel in enumerate(stages):
        final = k == len(stages) - 1
        stage_tol = tol if final else max(tol, 1e-6 * scale ** (p - 1) * max(eps_rel, 1e-6))
        u, it, ok = _run_stage(E, u, eps_rel * scale, stage_tol,
                               max_iter if final else 50, floor, final)
        total += it
    if not ok and p != 2 and len(stages) == 1:
        for eps_rel in DEFAULT_SCHEDULE:
            final = eps_rel == 0.0
            u, it, ok = _run_stage(E, u, eps_rel * scale, tol if final else max(tol, 1e-8),
                                   max_iter if final else 50, floor, final)
            total += it
    res = E.residual(u)
    floor_res = E.precision_floor(u)
    limited = bool(not ok and res <= max(tol, 10 * floor_res))
    return NewtonResult(u, res, total, ok or limited, E.objective(u, 0.0), floor_res, limited)


def linear_initial_guess(params: OperatorParams, free, g, fixed):
    """Solution of the ``p = 2`` problem with potential ``max(c, 0)``.

    For zero boundary data the guess is rescaled along its ray to the
    minimiser of ``J`` on that ray, which matches the ``p`` scaling.
    """
    G = params.graph
    p = params.p
    u = np.array(fixed, dtype=float)
    free = np.asarray(free, dtype=np.int64)
    if free.size == 0:
        return u
    lin = OperatorParams(G.with_potential(np.maximum(G.c, 0.0) + 1e-12 * G.m), 2.0)
    E = DirichletEnergy(lin, free, g)
    H = E.hessian(u, 0.0, 1.0)
    gr = E.gradient(u, 0.0)
    try:
        d = splinalg.spsolve(H.tocsc(), -gr)
    except Exception:
        d = np.zeros(free.size)
    if not np.all(np.isfinite(d)):
        d = np.zeros(free.size)
    u[free] = u[free] + d
    outside = np.ones(G.n, bool)
    outside[free] = False
    if p != 2 and not np.any(u[outside] != 0):
        t = u[free]
        hu = energy(params, u)
        lin_term = float(np.dot(E.gm, t))
        if hu > 0 and lin_term > 0:
            u[free] = t * (lin_term / hu) ** (1 / (p - 1))
    return u
