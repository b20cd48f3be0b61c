"""Poisson-Dirichlet problems ``Hu = g`` on finite ``K`` with ``u = f`` outside.

Two solvers are provided: direct minimisation of
``j(phi) = h(phi) - p <g, phi>_K`` over the admissible class, and the
monotone sandwich iteration between a sub- and a supersolution, whose inner
solves only ever see the nonnegative potential ``|c|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._newton import linear_initial_guess, solve_dirichlet
from .exceptions import CoercivityError, ConvergenceError, PreconditionError
from .graph import ExhaustionSpec, SubsetSpec, WeightedGraph, build_family
from .limits import extrapolate
from .operators import OperatorParams, apply_H, bracket, energy
from .reports import Certificate, Report

__all__ = [
    "DirichletProblem",
    "SolverConfig",
    "SolveReport",
    "ExtensionReport",
    "certify_coercivity",
    "minimize_j",
    "sandwich_solve",
    "eigen_supersolution",
    "harmonic_extension",
    "check_weak_comparison",
]


def _vertex_function(graph: WeightedGraph, data, name):
    if data is None:
        return np.zeros(graph.n)
    if isinstance(data, dict):
        out = np.zeros(graph.n)
        for k, v in data.items():
            k = int(k)
            if not 0 <= k < graph.n:
                raise PreconditionError(f"{name} refers to unknown vertex {k}")
            out[k] = float(v)
        return out
    out = np.array(data, dtype=float)
    if out.shape != (graph.n,):
        raise PreconditionError(f"{name} has shape {out.shape}, expected ({graph.n},)")
    return out


@dataclass(eq=False)
class DirichletProblem:
    """``Hu = g`` on ``K.interior`` and ``u = f`` elsewhere.

    ``g`` and ``f`` may be dense arrays or ``{vertex: value}`` mappings.
    Values of ``g`` outside ``K`` are ignored; ``f`` must vanish on ``K``.
    """

    K: SubsetSpec
    g: object = None
    f: object = None

    def __post_init__(self):
        G = self.K.graph
        g = _vertex_function(G, self.g, "g")
        f = _vertex_function(G, self.f, "f")
        mask = self.K.mask
        if np.any(f[mask] != 0):
            raise PreconditionError("boundary data f must vanish on K")
        g[~mask] = 0.0
        self.g, self.f = g, f

    @property
    def graph(self):
        return self.K.graph

    @property
    def support_f(self):
        return np.flatnonzero(self.f)


@dataclass
class SolverConfig:
    """Settings for the Dirichlet solvers.

    ``epsilon_schedule`` lists relative smoothing levels ending at 0; ``None``
    picks a default by ``p``. ``restarts`` adds seeded random starts whose
    spread is reported as uniqueness evidence.
    """

    method: str = "direct-minimize"
    tol_residual: float = 1e-10
    max_iter: int = 200
    epsilon_schedule: tuple | None = None
    seed: int = 0
    restarts: int = 0
    lambda_margin: float = 1e-10
    check_coercivity: bool = True

    def __post_init__(self):
        if self.method not in ("direct-minimize", "sandwich"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.epsilon_schedule is not None:
            e = list(self.epsilon_schedule)
            if not e or e[-1] < 0 or any(b >= a for a, b in zip(e, e[1:])):
                raise ValueError("epsilon_schedule must be strictly decreasing to a floor >= 0")


@dataclass
class SolveReport(Report):
    """Outcome of a Dirichlet solve.

    ``precision_limited`` marks solves whose residual is bounded below by
    double-precision rounding of tiny gradients (only for ``p`` near 1);
    ``precision_floor`` estimates that bound.
    """

    solution: np.ndarray
    residual_sup: float
    objective: float
    iterations: int
    positivity: bool
    uniqueness_evidence: float = float("nan")
    method: str = "direct-minimize"
    converged: bool = True
    precision_limited: bool = False
    precision_floor: float = 0.0
    coercivity: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    _kind = "dirichlet"


def _positive_lambda_combinatorial(params, V: SubsetSpec):
    """For ``c >= 0`` on ``V``: ``lambda0(V) > 0`` iff every component leaks.

    A component leaks when it has a boundary vertex or a vertex with
    ``c > 0``; otherwise constants on it have zero energy.
    """
    g = params.graph
    for comp in V.components:
        if np.any(g.c[comp] > 0):
            continue
        sub = V.restrict(comp)
        if sub.boundary.size == 0:
            return False
    return True


def certify_coercivity(params: OperatorParams, V: SubsetSpec, margin=1e-10):
    """Certify ``lambda0(V) > margin``; returns an evidence dict.

    Nonnegative potentials are settled combinatorially; otherwise the
    principal eigenvalue is computed.

    Raises
    ------
    CoercivityError
        With the eigenvalue and a witness ``phi`` with ``h(phi) <= margin``.
    """
    from .eigen import principal_eigenvalue

    g = params.graph
    if len(V) == 0:
        return {"method": "empty", "lambda0": None}
    if np.all(g.c[V.interior] >= 0):
        if _positive_lambda_combinatorial(params, V):
            return {"method": "nonnegative-potential", "lambda0": None}
        raise CoercivityError("a component of the domain carries zero-energy constants",
                              lambda0=0.0)
    rep = principal_eigenvalue(params, V)
    if not rep.lambda0 > margin:
        raise CoercivityError(f"lambda0 = {rep.lambda0:.6g} is not above the margin {margin:g}",
                              lambda0=rep.lambda0, witness=rep.eigenfunction)
    return {"method": "principal-eigenvalue", "lambda0": rep.lambda0}


def _closure(prob: DirichletProblem):
    K = prob.K
    return K.restrict(np.union1d(K.interior, prob.support_f))


def _objective(params, u, prob):
    return energy(params, u) - params.p * bracket(params, prob.g, u, prob.K)


def _solve_once(params, prob, cfg, u0, warm=False):
    res = solve_dirichlet(params, prob.K.interior, prob.g, u0, tol=cfg.tol_residual,
                          max_iter=cfg.max_iter, schedule=cfg.epsilon_schedule, warm=warm)
    return res


def minimize_j(params: OperatorParams, prob: DirichletProblem, cfg: SolverConfig | None = None,
               u0=None) -> SolveReport:
    """Minimise ``j`` over functions equal to ``f`` outside ``K``.

    Parameters
    ----------
    params : OperatorParams
    prob : DirichletProblem
    cfg : SolverConfig, optional
    u0 : array_like, optional
        Warm start; its values outside ``K`` are replaced by ``f``.

    Returns
    -------
    SolveReport
        The stationary point, with ``Hu = g`` on ``K`` to ``tol_residual``.

    Raises
    ------
    CoercivityError
        If ``lambda0(K + supp f)`` cannot be certified above the margin.
    ConvergenceError
        If the residual target is not met within the budget.

    Examples
    --------
    >>> from pcrit.graph import ExhaustionSpec, build_family
    >>> g, _ = build_family(ExhaustionSpec("z", [1]), 0)
    >>> K = SubsetSpec(g, [0])
    >>> rep = minimize_j(OperatorParams(g, 3), DirichletProblem(K, {0: 1.0}))
    >>> abs(float(rep.solution[0]) - 0.5 ** 0.5) < 1e-10
    True
    """
    cfg = cfg or SolverConfig()
    K = prob.K
    if K.graph is not params.graph and K.graph.n != params.graph.n:
        raise PreconditionError("problem and operator live on different graphs")
    if len(K) == 0:
        return SolveReport(prob.f.copy(), 0.0, _objective(params, prob.f, prob), 0, True,
                           details={"empty_K": True})
    coerc = certify_coercivity(params, _closure(prob), cfg.lambda_margin) if cfg.check_coercivity else {}
    idx = K.interior
    if u0 is None:
        start = linear_initial_guess(params, idx, prob.g, prob.f)
        warm = False
    else:
        start = np.where(K.mask, np.asarray(u0, float), prob.f)
        warm = True
    res = _solve_once(params, prob, cfg, start, warm)
    if not res.converged and warm:
        res = _solve_once(params, prob, cfg, linear_initial_guess(params, idx, prob.g, prob.f))
    if not res.converged:
        raise ConvergenceError(f"Dirichlet solve stalled at residual {res.residual:.3e}",
                               res.residual, res.iterations)
    u = res.u
    details = {}
    nonneg_data = np.all(prob.f >= 0) and np.all(prob.g >= 0)
    if nonneg_data and np.any(u[idx] < -10 * cfg.tol_residual):
        # a sign-changing stationary point; |u| has no larger energy
        details["restarted_from_abs"] = True
        alt = _solve_once(params, prob, cfg, np.where(K.mask, np.abs(u), prob.f), warm=True)
        if alt.converged:
            res, u = alt, alt.u
    spread = np.nan
    if cfg.restarts:
        rng = np.random.default_rng(cfg.seed)
        amp = max(float(np.max(np.abs(u[idx]))), 1e-12)
        spread = 0.0
        for _ in range(cfg.restarts):
            s = prob.f.copy()
            s[idx] = rng.uniform(0, 2 * amp, idx.size) if nonneg_data else rng.uniform(-amp, amp, idx.size)
            alt = _solve_once(params, prob, cfg, s)
            if not alt.converged:
                alt = _solve_once(params, prob, cfg, s, warm=True)
            spread = max(spread, float(np.max(np.abs(alt.u[idx] - u[idx]))))
    return SolveReport(
        solution=u,
        residual_sup=res.residual,
        objective=_objective(params, u, prob),
        iterations=res.iterations,
        positivity=bool(np.all(u[idx] >= 0)),
        uniqueness_evidence=spread,
        converged=True,
        precision_limited=res.precision_limited,
        precision_floor=res.precision_floor,
        coercivity=coerc,
        details=details,
    )


def eigen_supersolution(params: OperatorParams, prob: DirichletProblem):
    """Supersolution ``t phi0`` built from principal eigenfunctions of ``K + supp f``.

    On each component of ``K + supp f`` the eigenfunction is scaled so that
    ``H v >= g`` on ``K`` and ``v >= f`` on the support of ``f``. Requires
    every component eigenvalue to be positive.
    """
    from .eigen import principal_eigenvalue

    p = params.p
    V = _closure(prob)
    rep = principal_eigenvalue(params, V)
    v = np.zeros(params.graph.n)
    for comp in rep.components:
        lam, phi = comp["lambda0"], comp["eigenfunction"]
        if not lam > 0:
            raise CoercivityError("a component has nonpositive principal eigenvalue", lambda0=lam,
                                  witness=phi)
        verts = comp["vertices"]
        inK = verts[prob.K.mask[verts]]
        t = 1.0
        if inK.size:
            need = prob.g[inK] / (lam * phi[inK] ** (p - 1))
            t = max(t, float(need.max()) ** (1 / (p - 1)) if need.max() > 0 else 0.0)
        outK = verts[~prob.K.mask[verts]]
        if outK.size:
            t = max(t, float(np.max(prob.f[outK] / phi[outK])))
        v[verts] = t * phi[verts] * (1 + 1e-9)
    return v


def sandwich_solve(params: OperatorParams, prob: DirichletProblem, u_sub=None, v_super=None,
                   cfg: SolverConfig | None = None, check_preconditions=True) -> SolveReport:
    """Monotone iteration between a subsolution and a supersolution.

    Each step solves ``H_|c| w' = g + 2 (c_-/m) w^(p-1)`` on ``K`` with
    ``w' = f`` outside. Starting from ``u_sub`` the iterates increase, from
    ``v_super`` they decrease, and both limits solve ``Hw = g``. Defaults:
    ``u_sub = 0`` and ``v_super`` from :func:`eigen_supersolution`.

    Raises
    ------
    PreconditionError
        When the data or the ordering of the iterates violates the
        hypotheses; the message names the offending vertex.
    ConvergenceError
        When ``max_iter`` sweeps do not reach the residual target.
    """
    cfg = cfg or SolverConfig(method="sandwich")
    G, p = params.graph, params.p
    K = prob.K
    idx = K.interior
    mask = K.mask
    if len(K) == 0:
        return SolveReport(prob.f.copy(), 0.0, _objective(params, prob.f, prob), 0, True, method="sandwich")
    if np.any(prob.g[idx] < 0) or np.any(prob.f < 0):
        raise PreconditionError("sandwich iteration needs g >= 0 and f >= 0")
    coerc = certify_coercivity(params, _closure(prob), cfg.lambda_margin) if cfg.check_coercivity else {}
    u = np.where(mask, 0.0, prob.f) if u_sub is None else np.asarray(u_sub, float).copy()
    v = eigen_supersolution(params, prob) if v_super is None else np.asarray(v_super, float).copy()
    scale = 1.0 + float(np.max(np.abs(v)))
    slack = 1e-9 * scale
    if check_preconditions:
        Hu, Hv = apply_H(params, u)[idx], apply_H(params, v)[idx]
        tolH = 1e-9 * (1 + np.abs(prob.g[idx]).max() + np.abs(Hv).max())
        rim = np.union1d(K.boundary, prob.support_f)
        checks = [
            ("Hu_sub <= g", Hu - prob.g[idx] > tolH, idx),
            ("g <= Hv_super", prob.g[idx] - Hv > tolH, idx),
            ("0 <= u_sub", u[idx] < -slack, idx),
            ("u_sub <= v_super", u[idx] - v[idx] > slack, idx),
            ("u_sub <= f", u[rim] - prob.f[rim] > slack, rim),
            ("f <= v_super", prob.f[rim] - v[rim] > slack, rim),
        ]
        for name, bad, where in checks:
            if np.any(bad):
                raise PreconditionError(f"sandwich precondition {name} fails at vertex {int(where[np.argmax(bad)])}")
    c = G.c
    c_minus = np.maximum(-c, 0.0)
    absp = OperatorParams(G.with_potential(np.abs(c)), p)
    inner = SolverConfig(tol_residual=min(cfg.tol_residual * 1e-2, 1e-12), max_iter=cfg.max_iter,
                         epsilon_schedule=cfg.epsilon_schedule)

    def T(w, warm):
        rhs = np.zeros(G.n)
        rhs[idx] = prob.g[idx] + 2 * c_minus[idx] / G.m[idx] * np.abs(w[idx]) ** (p - 1)
        start = np.where(mask, warm, prob.f)
        r = solve_dirichlet(absp, idx, rhs, start, tol=inner.tol_residual, max_iter=inner.max_iter,
                            schedule=inner.epsilon_schedule, warm=True)
        if not r.converged:
            r = solve_dirichlet(absp, idx, rhs, linear_initial_guess(absp, idx, rhs, prob.f),
                                tol=inner.tol_residual, max_iter=inner.max_iter)
        if not r.converged:
            raise ConvergenceError("inner sandwich solve failed", r.residual, r.iterations)
        return r.u, r.precision_floor

    u = np.where(mask, u, prob.f)
    v = np.where(mask, v, prob.f)
    trace = []
    floor = 0.0
    monotone = True
    for it in range(1, cfg.max_iter * 50 + 1):
        ru = float(np.max(np.abs(apply_H(params, u)[idx] - prob.g[idx])))
        rv = float(np.max(np.abs(apply_H(params, v)[idx] - prob.g[idx])))
        gap = float(np.max(v[idx] - u[idx]))
        trace.append((ru, rv, gap))
        target = max(cfg.tol_residual, 10 * floor)
        if ru <= target and rv <= target:
            break
        u_new, f1 = T(u, u)
        v_new, f2 = T(v, v)
        floor = max(f1, f2)
        d_up = u_new[idx] - u[idx]
        d_dn = v[idx] - v_new[idx]
        order = v_new[idx] - u_new[idx]
        for name, arr in (("lower sequence decreased", d_up), ("upper sequence increased", d_dn),
                          ("lower iterate exceeds upper", order)):
            if arr.min() < -slack:
                monotone = False
                raise PreconditionError(
                    f"sandwich ordering violated ({name}) at vertex {int(idx[np.argmin(arr)])} "
                    f"by {-arr.min():.3e} in sweep {it}")
        u, v = u_new, v_new
    else:
        raise ConvergenceError(f"sandwich iteration did not converge in {it} sweeps", min(ru, rv), it)
    best = u if ru <= rv else v
    return SolveReport(
        solution=best,
        residual_sup=min(ru, rv),
        objective=_objective(params, best, prob),
        iterations=len(trace) - 1,
        positivity=bool(np.all(best[idx] >= 0)),
        uniqueness_evidence=float(np.max(np.abs(v[idx] - u[idx]))),
        method="sandwich",
        precision_limited=bool(min(ru, rv) > cfg.tol_residual),
        precision_floor=floor,
        coercivity=coerc,
        details={"lower": u, "upper": v, "monotone": monotone,
                 "trace": [list(t) for t in trace]},
    )


@dataclass
class ExtensionReport(Report):
    """Harmonic extensions ``u_n`` of data on ``K`` to growing truncations.

    ``values`` is an array of shape ``(N, |ball_0|)`` holding each ``u_n`` on
    the vertices of the first truncation's host; ``limit`` is the pointwise
    extrapolated limit there.
    """

    vertices: np.ndarray
    values: np.ndarray
    limit: np.ndarray
    monotone: bool
    max_decrease: float
    radii: list
    solves: list = field(default_factory=list)
    _kind = "harmonic-extension"


def _as_p(params):
    return params.p if isinstance(params, OperatorParams) else float(params)


def harmonic_extension(params, K_vertices, u_data, spec: ExhaustionSpec,
                       cfg: SolverConfig | None = None) -> ExtensionReport:
    """Extend positive data on ``K`` harmonically to each truncation of ``spec``.

    For each truncation ``(G_n, V_n)`` solves ``Hw = 0`` on ``V_n`` minus
    ``K`` with ``w = u_data`` on ``K`` and ``w = 0`` outside ``V_n``. Vertex
    ids are shared across truncations, so ``K_vertices`` and ``u_data``
    (aligned with it) refer to family ids. ``params`` may be an
    :class:`OperatorParams` (only ``p`` is used) or ``p`` itself.
    """
    cfg = cfg or SolverConfig()
    p = _as_p(params)
    Kv = np.asarray(K_vertices, dtype=np.int64)
    data = np.asarray(u_data, float).reshape(-1)
    if data.size != Kv.size:
        raise PreconditionError("u_data must align with K_vertices")
    if np.any(~(data > 0)):
        raise PreconditionError("u_data must be strictly positive")
    g0, _ = build_family(spec, 0)
    verts = np.arange(g0.n)
    rows, solves = [], []
    prev = None
    for n in range(len(spec.radii)):
        G, V = build_family(spec, n)
        if not np.all(np.isin(Kv, V.interior)):
            raise PreconditionError(f"K is not inside truncation {n}")
        P = OperatorParams(G, p)
        free = np.setdiff1d(V.interior, Kv)
        f = np.zeros(G.n)
        f[Kv] = data
        prob = DirichletProblem(SubsetSpec(G, free), None, f)
        warm = None
        if prev is not None:
            warm = np.zeros(G.n)
            warm[: prev.size] = prev
        rep = minimize_j(P, prob, cfg, u0=warm)
        prev = rep.solution
        rows.append(rep.solution[verts])
        solves.append({"radius": spec.radii[n], "residual": rep.residual_sup,
                       "iterations": rep.iterations})
    vals = np.array(rows)
    dec = float(np.max(vals[:-1] - vals[1:])) if len(rows) > 1 else 0.0
    return ExtensionReport(
        vertices=verts,
        values=vals,
        limit=extrapolate(vals, spec.radii)[0],
        monotone=bool(dec <= 1e-8 * (1 + float(np.max(np.abs(vals))))),
        max_decrease=max(dec, 0.0),
        radii=list(spec.radii),
        solves=solves,
    )


def check_weak_comparison(params: OperatorParams, K: SubsetSpec, u, v, K_tilde=None,
                          tol=1e-9) -> Certificate:
    """Check the hypotheses and the conclusion ``u <= v`` of weak comparison.

    Two results are checked. If ``c >= 0`` on ``K``, the hypotheses are
    ``Hu <= Hv`` on ``K`` and ``u <= v`` on the boundary; the conclusion adds
    a per-component report of whether ``u = v`` or ``u < v`` there.
    Otherwise the hypotheses are those of comparison on ``K`` inside
    ``K_tilde`` (default: ``K`` plus the supports of ``u`` and ``v``) with
    ``lambda0(K_tilde) > 0`` and side condition (a) or (b).

    ``passed`` means the implication was observed to hold; when the
    hypotheses fail no conclusion is drawn and ``details['conclusion']`` is
    None.
    """
    from .eigen import principal_eigenvalue

    G = params.graph
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    idx = K.interior
    Hu, Hv = apply_H(params, u), apply_H(params, v)
    sc = tol * (1 + np.abs(Hu[idx]).max(initial=0) + np.abs(Hv[idx]).max(initial=0))
    su = tol * (1 + np.abs(u).max() + np.abs(v).max())
    hyp = {}
    hyp["Hu<=Hv on K"] = bool(np.all(Hu[idx] - Hv[idx] <= sc))
    hyp["u<=v on boundary"] = bool(np.all(u[K.boundary] - v[K.boundary] <= su))
    nonneg_c = bool(np.all(G.c[idx] >= 0))
    if nonneg_c:
        regime = "nonnegative-potential"
    else:
        regime = "finite-subset"
        if K_tilde is None:
            K_tilde = K.restrict(np.union1d(idx, np.union1d(np.flatnonzero(u), np.flatnonzero(v))))
        rim = np.setdiff1d(np.union1d(K.boundary, K_tilde.interior), idx)
        lam = principal_eigenvalue(params, K_tilde).lambda0
        hyp["lambda0(K_tilde)>0"] = bool(lam > 0)
        hyp["Hv>=0 on K"] = bool(np.all(Hv[idx] >= -sc))
        hyp["v>=0 on rim"] = bool(np.all(v[rim] >= -su))
        hyp["u<=v on rim"] = bool(np.all(u[rim] - v[rim] <= su))
        outside = ~K_tilde.mask
        cond_a = bool(np.all(v[outside] == 0))
        cond_b = bool(np.all(u[outside] == 0) and np.all(Hu[idx] >= -sc) and np.all(u[rim] >= -su))
        hyp["(a) or (b)"] = cond_a or cond_b
    holds = all(hyp.values())
    details = {"regime": regime, "hypotheses": hyp, "hypotheses_hold": holds, "conclusion": None}
    diff = v[idx] - u[idx]
    if holds:
        concl = bool(np.all(diff >= -su))
        details["conclusion"] = concl
        if nonneg_c:
            dich = []
            for comp in K.components:
                d = v[comp] - u[comp]
                if np.all(np.abs(d) <= su):
                    dich.append("equal")
                elif np.all(d > su):
                    dich.append("strict")
                else:
                    dich.append("neither")
            details["dichotomy"] = dich
        passed = concl
    else:
        passed = True
    k = int(np.argmin(diff)) if diff.size else None
    return Certificate(
        name="weak-comparison",
        gap=float(diff.min()) if diff.size else 0.0,
        passed=bool(passed),
        min_term=float(diff.min()) if diff.size else 0.0,
        argmin=int(idx[k]) if k is not None else None,
        tolerances={"operator": float(sc), "values": float(su)},
        details=details,
    )
