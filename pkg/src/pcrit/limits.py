"""Limit estimates for sequences indexed by truncation radius.

Along an exhaustion a quantity either approaches its limit geometrically in
the radius (transient families such as trees) or algebraically (recurrent
families such as Z). Aitken extrapolation is exact for the first kind and
polynomial extrapolation in ``1 / (radius + 1)`` for the second, so both
are tried and the one that is more stable under dropping the last term wins.
"""

from __future__ import annotations

import numpy as np

__all__ = ["aitken", "richardson", "extrapolate"]

METHODS = ("last", "aitken", "aitken2", "richardson2", "richardson3", "richardson4")


def aitken(seq, axis=0):
    """Aitken delta-squared extrapolation of the last three terms.

    Falls back to the last term where the second difference vanishes or the
    extrapolation would move by more than the last step times 1e3.

    >>> float(aitken([1.0, 0.5, 0.25]))
    0.0
    """
    a = np.moveaxis(np.asarray(seq, float), axis, 0)
    if a.shape[0] < 3:
        return a[-1]
    x0, x1, x2 = a[-3], a[-2], a[-1]
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    with np.errstate(divide="ignore", invalid="ignore"):
        est = x2 - d2 * d2 / den
    bad = ~np.isfinite(est) | (np.abs(den) <= 1e-15 * (1 + np.abs(x2))) | (np.abs(est - x2) > 1e3 * np.abs(d2) + 1e-300)
    return np.where(bad, x2, est)


def _aitken_twice(a):
    inner = np.array([aitken(a[i:i + 3]) for i in range(a.shape[0] - 2)])
    return aitken(inner)


def richardson(seq, radii, degree):
    """Value at ``h = 0`` of the polynomial in ``h = 1/(radius+1)`` through the last terms.

    >>> r = np.array([2, 4, 6, 8])
    >>> h = 1 / (r + 1)
    >>> round(float(richardson(1 + h - 3 * h ** 3, r, 3)), 12)
    1.0
    """
    a = np.asarray(seq, float)
    h = 1.0 / (np.asarray(radii, float) + 1.0)
    k = degree + 1
    a, h = a[-k:], h[-k:]
    # Neville's scheme evaluated at zero
    P = [a[i] for i in range(k)]
    for j in range(1, k):
        P = [(h[i + j] * P[i] - h[i] * P[i + 1]) / (h[i + j] - h[i]) for i in range(k - j)]
    return P[0]


def _estimators(a, r):
    n = a.shape[0]
    out = {"last": a[-1]}
    if n >= 3:
        out["aitken"] = aitken(a)
        out["richardson2"] = richardson(a, r, 2)
    if n >= 4:
        out["richardson3"] = richardson(a, r, 3)
    if n >= 5:
        out["aitken2"] = _aitken_twice(a)
        out["richardson4"] = richardson(a, r, 4)
    return out


def extrapolate(seq, radii):
    """Limit estimate with an error indicator, element-wise along axis 0.

    Each estimator is applied to the full sequence and to the sequence
    without its last term; per element the estimator whose two results agree
    best is chosen and their gap is returned as the error indicator.

    Returns
    -------
    (estimate, error, method) : arrays shaped like one term of ``seq``;
        ``method`` indexes :data:`METHODS`.

    Examples
    --------
    >>> r = [1, 3, 7, 15, 31]
    >>> est, err, _ = extrapolate([2.0 / (x + 1) for x in r], r)
    >>> abs(float(est)) < 1e-15
    True
    """
    a = np.asarray(seq, float)
    r = np.asarray(radii, float)
    if a.shape[0] != r.size:
        raise ValueError("sequence and radii differ in length")
    if a.shape[0] == 1:
        return a[0], np.full(a.shape[1:], np.inf), np.zeros(a.shape[1:], int)
    full = _estimators(a, r)
    short = _estimators(a[:-1], r[:-1])
    best = np.asarray(a[-1]).copy()
    err = np.abs(a[-1] - a[-2])
    meth = np.zeros(a.shape[1:], int)
    for name in METHODS[1:]:
        if name in full and name in short:
            gap = np.abs(full[name] - short[name])
            gap = np.where(np.isfinite(gap), gap, np.inf)
            take = gap < err
            best = np.where(take, full[name], best)
            err = np.where(take, gap, err)
            meth = np.where(take, METHODS.index(name), meth)
    return best, err, meth
