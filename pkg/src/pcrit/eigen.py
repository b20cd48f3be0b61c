"""Principal eigenvalue of the p-Schrödinger operator on finite subsets.

``lambda0(K)`` is the minimum of ``h(phi) / ||phi||_{p,m}^p`` over functions
supported in ``K``. It is computed per connected component by shifted
nonlinear inverse iteration, where each step solves a coercive Dirichlet
problem, followed by Newton polish on the bordered stationarity system.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from ._newton import DirichletEnergy, solve_dirichlet
from .exceptions import ConvergenceError, PreconditionError
from .graph import SubsetSpec
from .operators import OperatorParams, apply_H, energy, lp_norm, phi_p
from .reports import Certificate, Report

__all__ = [
    "EigenConfig",
    "EigenReport",
    "principal_eigenvalue",
    "rayleigh_quotient",
    "eigenpair_newton",
    "linear_dirichlet_matrix",
    "check_domain_monotonicity",
    "check_maximum_principle",
]


def _threads():
    try:
        return max(1, int(os.environ.get("PCRIT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class EigenConfig:
    """Solver settings; ``restarts`` counts starts beyond the deterministic one."""

    restarts: int = 4
    seed: int = 0
    tol: float = 1e-10
    max_outer: int = 500
    newton_iter: int = 60


@dataclass
class EigenReport(Report):
    """Principal eigenpair of ``H`` on ``K``.

    ``eigenfunction`` is normalised to ``||phi||_{p,m} = 1``, nonnegative and
    zero outside ``K``. For disconnected ``K`` it is the eigenfunction of the
    minimising component; ``components`` lists every component's eigenvalue.
    """

    lambda0: float
    eigenfunction: np.ndarray
    residual_sup: float
    restarts_agreement: float
    restart_values: list
    positive: bool
    iterations: int
    components: list = field(default_factory=list)
    precision_floor: float = 0.0
    precision_limited: bool = False
    _kind = "eigen"


def rayleigh_quotient(params: OperatorParams, phi) -> float:
    """``h(phi) / ||phi||_{p,m}^p``."""
    return energy(params, phi) / lp_norm(params, phi) ** params.p


def linear_dirichlet_matrix(params: OperatorParams, K):
    """Sparse matrix of the ``p = 2`` form ``h`` on ``C(K)`` and the measure.

    Returns ``(A, m)`` with ``h(phi) = phi_K^T A phi_K`` for ``phi`` supported
    in ``K``, so the ``p = 2`` eigenvalues solve ``A x = lambda diag(m) x``.
    """
    g = params.graph
    idx = K.interior if isinstance(K, SubsetSpec) else np.asarray(K, dtype=np.int64)
    lin = OperatorParams(g, 2.0)
    E = DirichletEnergy(lin, idx)
    return E.hessian(np.zeros(g.n), 0.0, 1.0), g.m[idx]


def _shift(params, idx):
    g = params.graph
    ratio = g.c[idx] / g.m[idx]
    return max(0.0, -float(ratio.min())) + 1.0


def _normalize(params, phi):
    nrm = lp_norm(params, phi)
    return phi / nrm if nrm > 0 else phi


def _residual(params, phi, lam, idx):
    r = apply_H(params, phi)[idx] - lam * phi_p(phi[idx], params.p)
    return float(np.max(np.abs(r))) if idx.size else 0.0


def _precision_floor(params, phi, lam, idx):
    E = DirichletEnergy(params, idx)
    ph = np.abs(phi[idx])
    p = params.p
    vert = abs(lam) * (phi_p(ph + 4 * np.spacing(ph), p) - phi_p(ph, p))
    return E.precision_floor(phi) + float(vert.max(initial=0.0))


def _accept(params, phi, lam, res, idx, tol):
    return res <= max(tol * (1 + abs(lam)), 10 * _precision_floor(params, phi, lam, idx))


def _linear_start(params, idx):
    """Positive ``p = 2`` ground state used as the deterministic start."""
    g = params.graph
    A, m = linear_dirichlet_matrix(params, idx)
    k = idx.size
    if k <= 800:
        w, V = linalg.eigh(A.toarray(), np.diag(m))
        x = V[:, 0]
    else:
        try:
            w, V = splinalg.eigsh(A.tocsc(), k=1, M=sparse.diags(m).tocsc(), sigma=-_shift(params, idx) - 1.0,
                                  which="LM")
            x = V[:, 0]
        except Exception:
            x = np.ones(k)
    x = np.abs(x)
    x = np.maximum(x, 1e-3 * x.max()) if x.max() > 0 else np.ones(k)
    phi = np.zeros(g.n)
    phi[idx] = x
    return phi


def eigenpair_newton(params: OperatorParams, K, phi0, lam0=None, tol=1e-10, max_iter=60):
    """Newton on ``H phi = lam phi_p(phi)`` on ``K`` with ``||phi||_{p,m} = 1``.

    Starts from ``phi0`` (any sign pattern) and returns
    ``(lam, phi, residual, converged)``. Useful both as the polish step of
    :func:`principal_eigenvalue` and to locate higher eigenpairs from
    sign-changing starts.
    """
    g, p = params.graph, params.p
    idx = K.interior if isinstance(K, SubsetSpec) else np.asarray(K, dtype=np.int64)
    phi = np.zeros(g.n)
    phi[idx] = np.asarray(phi0, float)[idx]
    phi = _normalize(params, phi)
    lam = rayleigh_quotient(params, phi) if lam0 is None else float(lam0)
    E = DirichletEnergy(params, idx)
    m = g.m[idx]
    k = idx.size
    scale = float(np.max(np.abs(phi[idx])))
    floor = 1e-12 * scale

    def F(ph, la):
        r1 = m * (apply_H(params, ph)[idx] - la * phi_p(ph[idx], p))
        r2 = (np.dot(m, np.abs(ph[idx]) ** p) - 1.0) / p
        return np.concatenate([r1, [r2]])

    r = F(phi, lam)
    prev = np.inf
    for it in range(max_iter):
        res = _residual(params, phi, lam, idx)
        # once inside the tolerance keep going while Newton still gains a lot
        if res <= tol * (1 + abs(lam)) and (res > 0.1 * prev or res <= 1e-3 * tol):
            return lam, phi, res, True
        prev = res
        Hh = E.hessian(phi, 0.0, floor)
        ph = phi[idx]
        dphi = (p - 1) * np.maximum(np.abs(ph), floor) ** (p - 2)
        J11 = Hh - sparse.diags(lam * m * dphi)
        col = -(m * phi_p(ph, p))
        J = sparse.bmat([[J11, col[:, None]], [(m * phi_p(ph, p))[None, :], None]], format="csc")
        try:
            if k <= 1500:
                d = linalg.solve(J.toarray(), -r, check_finite=False)
            else:
                d = splinalg.splu(J).solve(-r)
        except (linalg.LinAlgError, RuntimeError, ValueError):
            return lam, phi, res, False
        if not np.all(np.isfinite(d)):
            return lam, phi, res, False
        n0 = np.linalg.norm(r)
        step = 1.0
        for _ in range(40):
            trial = phi.copy()
            trial[idx] = ph + step * d[:k]
            lt = lam + step * d[k]
            rt = F(trial, lt)
            if np.linalg.norm(rt) <= (1 - 1e-4 * step) * n0:
                break
            step *= 0.5
        else:
            return lam, phi, res, res <= tol * (1 + abs(lam))
        phi, lam, r = trial, lt, rt
    res = _residual(params, phi, lam, idx)
    return lam, phi, res, res <= tol * (1 + abs(lam))


def _mixed_eigen_newton(params, idx, phi, lam, tol, max_iter=80):
    """Bordered Newton on the flux form, for ``p < 2``.

    Unknowns are ``phi`` on ``K``, one flux per active edge, one vertex
    variable ``s = phi_p(phi)`` and ``lam``. The constitutive laws use the
    conjugate exponent ``q > 2``, which keeps the Jacobian bounded where
    gradients or values of ``phi`` are tiny.
    """
    g, p = params.graph, params.p
    q = p / (p - 1)
    E = DirichletEnergy(params, idx)
    k, ne = idx.size, E.eb.size
    mu, mv = E.iu >= 0, E.iv >= 0
    ar_e, ar_k = np.arange(ne), np.arange(k)

    def unpack(z):
        ph = np.zeros(g.n)
        ph[idx] = z[:k]
        return ph, z[k:k + ne], z[k + ne:2 * k + ne], z[-1]

    def resid(z):
        ph, fl, sl, la = unpack(z)
        bf = E.eb * fl
        rv = np.bincount(E.iu[mu], bf[mu], k) - np.bincount(E.iv[mv], bf[mv], k)
        rv += (E.c - la * E.m) * sl
        re = (ph[E.eu] - ph[E.ev]) - phi_p(fl, q)
        rs = ph[idx] - phi_p(sl, q)
        rn = (np.dot(E.m, np.abs(sl) ** q) - 1.0) / p
        return np.concatenate([rv / E.m, re, rs, [rn]])

    z = np.concatenate([phi[idx], phi_p(phi[E.eu] - phi[E.ev], p), phi_p(phi[idx], p), [lam]])
    N = z.size
    il = N - 1
    # constant sparsity: flux columns in vertex rows, phi columns in edge and vertex-law rows
    rows_c = np.concatenate([E.iu[mu], E.iv[mv], k + ar_e[mu], k + ar_e[mv], k + ne + ar_k])
    cols_c = np.concatenate([k + ar_e[mu], k + ar_e[mv], E.iu[mu], E.iv[mv], ar_k])
    vals_c = np.concatenate([(E.eb / 1.0)[mu], -E.eb[mv], np.ones(mu.sum()), -np.ones(mv.sum()), np.ones(k)])
    vals_c[: mu.sum() + mv.sum()] /= E.m[rows_c[: mu.sum() + mv.sum()]]
    best = None
    r = resid(z)
    for it in range(max_iter):
        ph, fl, sl, la = unpack(z)
        res = _residual(params, ph, la, idx)
        if best is None or res < best[2]:
            best = (la, ph, res)
        if res <= 1e-3 * tol * (1 + abs(la)):
            break
        dl = np.concatenate([-(q - 1) * np.abs(fl) ** (q - 2), -(q - 1) * np.abs(sl) ** (q - 2)])
        rows = np.concatenate([rows_c, k + np.arange(ne + k), ar_k, ar_k, np.full(k, il)])
        cols = np.concatenate([cols_c, k + np.arange(ne + k), k + ne + ar_k, np.full(k, il), k + ne + ar_k])
        vals = np.concatenate([vals_c, dl, (E.c - la * E.m) / E.m, -sl,
                               E.m * phi_p(sl, q) / (p - 1)])
        J = sparse.csc_matrix((vals, (rows, cols)), shape=(N, N))
        try:
            d = splinalg.splu(J).solve(-r)
        except RuntimeError:
            break
        if not np.all(np.isfinite(d)):
            break
        # a step may also count as progress relative to the size of gradients and values
        tiny = 4 * np.spacing(np.max(np.abs(ph)))
        w = np.concatenate([np.ones(k), 1 / np.maximum(np.abs(ph[E.eu] - ph[E.ev]), tiny),
                            1 / np.maximum(np.abs(ph[idx]), tiny), [1.0]])
        n0, n1 = np.linalg.norm(r), np.linalg.norm(w * r)
        step = 1.0
        for _ in range(40):
            zt = z + step * d
            rt = resid(zt)
            shrink = 1 - 1e-4 * step
            if np.linalg.norm(rt) <= shrink * n0 or np.linalg.norm(w * rt) <= shrink * n1:
                break
            step *= 0.5
        else:
            break
        z, r = zt, rt
    ph, _, _, la = unpack(z)
    res = _residual(params, ph, la, idx)
    if res < best[2]:
        best = (la, ph, res)
    return best


def _continuation_in_p(params, idx, cfg, steps=16):
    """Follow the principal eigenpair from ``p = 2`` down to ``params.p < 2``.

    For ``p`` near 1 the eigenfunction can be many orders of magnitude
    smaller on parts of ``K``; a path in ``p`` reaches that regime gradually.
    """
    g = params.graph
    lin = OperatorParams(g, 2.0)
    phi = _normalize(lin, _linear_start(params, idx))
    lam = rayleigh_quotient(lin, phi)
    best = (lam, phi, np.inf)
    for pj in np.linspace(2.0, params.p, steps + 1)[1:]:
        Pj = OperatorParams(g, pj)
        phi = _normalize(Pj, phi)
        best = _mixed_eigen_newton(Pj, idx, phi, rayleigh_quotient(Pj, phi), cfg.tol)
        lam, phi = best[0], np.abs(best[1])
    return best


def _inverse_iteration(params, idx, phi, cfg, stop_rel=1e-9):
    """Shifted nonlinear inverse iteration; returns ``(phi, lam, iterations)``."""
    g, p = params.graph, params.p
    sigma = _shift(params, idx)
    shifted = OperatorParams(g.with_potential(g.c + sigma * g.m), p)
    phi = _normalize(params, np.abs(phi))
    lam = rayleigh_quotient(params, phi)
    w = phi.copy()
    for it in range(1, cfg.max_outer + 1):
        rhs = np.zeros(g.n)
        rhs[idx] = phi_p(phi[idx], p)
        res = solve_dirichlet(shifted, idx, rhs, w, tol=1e-12, warm=it > 1)
        w = np.abs(res.u)
        new = _normalize(params, w)
        lam_new = rayleigh_quotient(params, new)
        change = float(np.max(np.abs(new - phi)))
        phi, lam_old, lam = new, lam, lam_new
        if abs(lam_old - lam) <= stop_rel * (1 + abs(lam)) and change <= 1e-6:
            return phi, lam, it
    return phi, lam, cfg.max_outer


def _solve_component(params, idx, start, cfg):
    phi, lam, its = start, None, 0
    # a Newton attempt first: cheap when the start is already an eigenvector
    lam_n, phi_n, res, ok = eigenpair_newton(params, idx, phi, tol=cfg.tol, max_iter=cfg.newton_iter)
    if ok and np.all(phi_n[idx] > 0) or ok and np.all(phi_n[idx] < 0):
        phi_n = np.abs(phi_n)
        return lam_n, phi_n, res, 0
    phi, lam, its = _inverse_iteration(params, idx, phi, cfg)
    lam_n, phi_n, res, ok = eigenpair_newton(params, idx, phi, lam, tol=cfg.tol, max_iter=cfg.newton_iter)
    if ok and (np.all(phi_n[idx] > 0) or np.all(phi_n[idx] < 0)):
        return lam_n, np.abs(phi_n), res, its
    cands = [(lam, phi, _residual(params, phi, lam, idx))]
    if np.all(phi_n[idx] > 0):
        cands.append((lam_n, phi_n, res))
    if params.p < 2:
        lm, pm, rm = _mixed_eigen_newton(params, idx, phi, lam, cfg.tol)
        if np.all(pm[idx] > 0):
            cands.append((lm, pm, rm))
    lam, phi, res = min(cands, key=lambda c: c[2])
    if params.p < 2 and res > cfg.tol * (1 + abs(lam)):
        cands.append(_continuation_in_p(params, idx, cfg))
        lam, phi, res = min(cands, key=lambda c: c[2])
    more = 0
    if not _accept(params, phi, lam, res, idx, cfg.tol):
        # Newton strayed; finish with more inverse iteration
        phi, lam, more = _inverse_iteration(params, idx, phi, cfg, stop_rel=1e-14)
        res = _residual(params, phi, lam, idx)
    if not _accept(params, phi, lam, res, idx, cfg.tol):
        raise ConvergenceError(f"eigen solve did not converge (residual {res:.3e})", res, its + more)
    return lam, phi, res, its + more


def principal_eigenvalue(params: OperatorParams, K: SubsetSpec, cfg: EigenConfig | None = None,
                         per_component: bool = True) -> EigenReport:
    """Principal eigenvalue and positive eigenfunction of ``H`` on ``K``.

    Parameters
    ----------
    params : OperatorParams
    K : SubsetSpec
        Finite subset; disconnected subsets are handled component by
        component when ``per_component`` is true and rejected otherwise.
    cfg : EigenConfig, optional

    Returns
    -------
    EigenReport

    Examples
    --------
    >>> from pcrit.graph import ExhaustionSpec, build_family
    >>> g, _ = build_family(ExhaustionSpec("z", [3]), 0)
    >>> K = SubsetSpec(g, [2, 4])          # the sites 1 and 2 of Z
    >>> round(principal_eigenvalue(OperatorParams(g, 2), K).lambda0, 12)
    1.0
    """
    cfg = cfg or EigenConfig()
    if len(K) == 0:
        raise PreconditionError("K is empty")
    comps = K.components
    if len(comps) > 1 and not per_component:
        raise PreconditionError("K is disconnected; pass per_component=True")
    results = []
    for idx in comps:
        results.append(_component_report(params, idx, cfg))
    best = min(range(len(results)), key=lambda i: results[i]["lambda0"])
    r = results[best]
    return EigenReport(
        lambda0=r["lambda0"],
        eigenfunction=r["phi"],
        residual_sup=r["residual"],
        restarts_agreement=r["agreement"],
        restart_values=r["values"],
        positive=bool(np.all(r["phi"][comps[best]] > 0)),
        iterations=r["iterations"],
        components=[{"vertices": c, "lambda0": res["lambda0"], "eigenfunction": res["phi"]}
                    for c, res in zip(comps, results)],
        precision_floor=r["floor"],
        precision_limited=r["limited"],
    )


def _component_report(params, idx, cfg):
    g = params.graph
    if idx.size == 1:
        x = int(idx[0])
        phi = np.zeros(g.n)
        phi[x] = g.m[x] ** (-1 / params.p)
        lam = (g.deg[x] + g.c[x]) / g.m[x]
        return {"lambda0": float(lam), "phi": phi, "residual": _residual(params, phi, lam, idx),
                "agreement": 0.0, "values": [float(lam)], "iterations": 0, "floor": 0.0,
                "limited": False}
    rng = np.random.default_rng(cfg.seed)
    starts = [_linear_start(params, idx)]
    for _ in range(cfg.restarts):
        s = np.zeros(g.n)
        s[idx] = rng.uniform(0.1, 1.0, idx.size)
        starts.append(s)

    def run(start):
        return _solve_component(params, idx, start, cfg)

    workers = _threads()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(run, starts))
    else:
        outs = [run(s) for s in starts]
    lams = [o[0] for o in outs]
    k = int(np.argmin(lams))
    lam, phi, res, its = outs[k]
    phi = _normalize(params, phi)
    agreement = max(float(np.max(np.abs(_normalize(params, o[1]) - phi))) for o in outs)
    floor = _precision_floor(params, phi, lam, idx)
    return {"lambda0": float(lam), "phi": phi, "residual": float(res), "agreement": agreement,
            "values": [float(x) for x in lams], "iterations": int(sum(o[3] for o in outs)),
            "floor": floor, "limited": bool(res > cfg.tol * (1 + abs(lam)))}


def check_domain_monotonicity(params: OperatorParams, K: SubsetSpec, K_tilde: SubsetSpec,
                              cfg: EigenConfig | None = None) -> Certificate:
    """Strict monotonicity ``lambda0(K) > lambda0(K_tilde)`` for ``K`` strictly inside ``K_tilde``.

    Also checks ``lambda0(K) > 0``, which follows when ``lambda0(K_tilde) >= 0``.
    """
    a, b = set(K.interior.tolist()), set(K_tilde.interior.tolist())
    if not a < b:
        raise PreconditionError("K must be a proper subset of K_tilde")
    if not (K.is_connected and K_tilde.is_connected):
        raise PreconditionError("both subsets must be connected")
    r_small = principal_eigenvalue(params, K, cfg)
    r_big = principal_eigenvalue(params, K_tilde, cfg)
    margin = r_small.lambda0 - r_big.lambda0
    applies = r_big.lambda0 >= 0
    return Certificate(
        name="domain-monotonicity",
        gap=float(margin),
        passed=bool(margin > 0 and (r_small.lambda0 > 0 or not applies)),
        min_term=float(r_small.lambda0),
        tolerances={"residual": (cfg or EigenConfig()).tol},
        details={"lambda0_K": r_small.lambda0, "lambda0_K_tilde": r_big.lambda0,
                 "hypothesis_nonneg": bool(applies), "lambda0_K_positive": bool(r_small.lambda0 > 0)},
    )


def check_maximum_principle(params: OperatorParams, K: SubsetSpec, trials: int = 20, seed: int = 0,
                            margin: float = 1e-10, tol: float = 1e-9) -> Certificate:
    """Test the equivalent forms of the maximum principle on ``K``.

    When ``lambda0(K) > margin`` it solves random problems ``Hs = g`` with
    ``g >= 0`` on ``K`` and ``s = f >= 0`` outside and checks the weak
    principle (``s >= -tol``), the strong principle (``s`` vanishes or is
    positive on each component), solvability with positive solutions for
    ``g != 0``, and positivity of local Green's functions ``H G = 1_x``.
    Otherwise it verifies that ``s = -phi0`` is a supersolution with zero
    boundary values that is negative on ``K``.
    """
    from .dirichlet import DirichletProblem, SolverConfig, minimize_j

    if not K.is_connected:
        raise PreconditionError("K must be connected")
    g = params.graph
    eig = principal_eigenvalue(params, K)
    lam = eig.lambda0
    idx = K.interior
    details = {"lambda0": lam}
    if lam > margin:
        rng = np.random.default_rng(seed)
        cfg = SolverConfig(check_coercivity=False)
        checks = {"weak": 0, "strong": 0, "solvable": 0, "green": 0}
        failures = []
        for t in range(trials):
            gg = np.zeros(g.n)
            f = np.zeros(g.n)
            mode = t % 3
            if mode != 1:
                sel = rng.random(idx.size) < 0.5
                sel[rng.integers(idx.size)] = True
                gg[idx[sel]] = rng.uniform(0, 1, sel.sum())
            if mode != 0 and K.boundary.size:
                f[K.boundary] = rng.uniform(0, 1, K.boundary.size) * (rng.random(K.boundary.size) < 0.7)
            rep = minimize_j(params, DirichletProblem(K, gg, f), cfg)
            s = rep.solution[idx]
            weak = bool(s.min() >= -tol)
            nonzero = np.any(gg[idx] > 0) or np.any(f != 0)
            strong = bool(np.all(s > 0)) if nonzero else bool(np.all(np.abs(s) <= tol))
            solvable = bool(rep.residual_sup <= max(cfg.tol_residual, 10 * rep.precision_floor)
                            and (not np.any(gg[idx] > 0) or np.all(s > 0)))
            checks["weak"] += weak
            checks["strong"] += strong
            checks["solvable"] += solvable
            if not (weak and strong and solvable):
                failures.append(t)
        for x in idx[: min(idx.size, trials)]:
            gg = np.zeros(g.n)
            gg[x] = 1.0
            rep = minimize_j(params, DirichletProblem(K, gg, np.zeros(g.n)), cfg)
            ok = bool(np.all(rep.solution[idx] > 0))
            checks["green"] += ok
            if not ok:
                failures.append(f"green@{int(x)}")
        details.update({"regime": "lambda0>0", "checks": checks, "trials": trials, "failures": failures})
        passed = not failures
        return Certificate(name="maximum-principle", gap=lam, passed=passed, min_term=lam,
                           tolerances={"margin": margin, "tol": tol}, details=details)
    s = -eig.eigenfunction
    Hs = apply_H(params, s)[idx]
    super_ok = bool(Hs.min() >= -tol * (1 + np.abs(Hs).max()))
    negative = bool(np.all(s[idx] < 0))
    boundary_zero = bool(np.all(s[K.boundary] == 0))
    details.update({"regime": "lambda0<=0", "counterexample": s, "supersolution": super_ok,
                    "negative_on_K": negative, "zero_on_boundary": boundary_zero})
    return Certificate(name="maximum-principle", gap=lam, passed=super_ok and negative and boundary_zero,
                       min_term=float(s[idx].min()), argmin=int(idx[np.argmin(s[idx])]),
                       tolerances={"margin": margin, "tol": tol}, details=details)
