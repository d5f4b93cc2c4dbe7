"""Compiled coordinate-descent kernels.

Family codes: 0 gaussian-identity, 1 poisson-log, 2 binomial-logit.
Coefficient layout everywhere is ``[intercept, slope_1, ..., slope_p]``.

The minimized objective is

    -(1/n) loglik(beta) + lam * ((1-alpha)/2 * ||b||^2 + alpha * ||b||_1)

over the slopes ``b``; the intercept is unpenalized.  Non-Gaussian families
use an outer IRLS loop with step halving so the objective never increases
between outer iterations.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ETA_CAP = 30.0
NULL_SLACK = 1e-10
STALL_SWEEPS = 20
PROX_REL = 1e-9


@njit(cache=True, nogil=True)
def soft_threshold(z, g):
    if z > g:
        return z - g
    if z < -g:
        return z + g
    return 0.0


@njit(cache=True, nogil=True)
def link_mean(fam, ybar):
    if fam == 0:
        return ybar
    if fam == 1:
        return math.log(ybar)
    return math.log(ybar) - math.log(1.0 - ybar)


@njit(cache=True, nogil=True)
def objective(X, y, fam, beta, lam, alpha):
    n, p = X.shape
    loss = 0.0
    for i in range(n):
        eta = beta[0]
        for j in range(p):
            eta += X[i, j] * beta[j + 1]
        if fam == 0:
            loss += 0.5 * (y[i] - eta) ** 2
        elif fam == 1:
            loss += math.exp(min(eta, 700.0)) - y[i] * eta
        else:
            if eta > 0:
                loss += eta + math.log1p(math.exp(-eta)) - y[i] * eta
            else:
                loss += math.log1p(math.exp(eta)) - y[i] * eta
    pen = 0.0
    for j in range(1, p + 1):
        pen += 0.5 * (1.0 - alpha) * beta[j] * beta[j] + alpha * abs(beta[j])
    return loss / n + lam * pen


@njit(cache=True, nogil=True)
def _eval(X, y, fam, beta, lam, alpha, eta, mu):
    """Objective for a non-Gaussian family, filling ``eta`` and the fitted
    mean ``mu`` (uncapped) with one exponential per row."""
    n, p = X.shape
    loss = 0.0
    for i in range(n):
        e = beta[0]
        for j in range(p):
            e += X[i, j] * beta[j + 1]
        eta[i] = e
        if fam == 1:
            m = math.exp(min(e, 700.0))
            mu[i] = m
            loss += m - y[i] * e
        else:
            t = math.exp(-abs(e))
            if e > 0:
                mu[i] = 1.0 / (1.0 + t)
                loss += e + math.log1p(t) - y[i] * e
            else:
                mu[i] = t / (1.0 + t)
                loss += math.log1p(t) - y[i] * e
    pen = 0.0
    for j in range(1, p + 1):
        pen += 0.5 * (1.0 - alpha) * beta[j] * beta[j] + alpha * abs(beta[j])
    return loss / n + lam * pen


@njit(cache=True, nogil=True)
def _coord(X, w, r, beta, j, xm_j, xwx_j, l1, l2, n):
    """Exact minimization over slope ``j`` with the intercept moving along
    (it absorbs ``-xm_j`` per unit of slope, ``xm_j`` being the weighted
    column mean), which decouples the two; returns the slope change."""
    g = 0.0
    for i in range(n):
        g += w[i] * (X[i, j] - xm_j) * r[i]
    old = beta[j + 1]
    g = g / n + xwx_j * old
    den = xwx_j + l2
    new = soft_threshold(g, l1) / den if den > 0.0 else 0.0
    diff = new - old
    if diff != 0.0:
        for i in range(n):
            r[i] -= (X[i, j] - xm_j) * diff
        beta[j + 1] = new
        beta[0] -= xm_j * diff
    return diff


@njit(cache=True, nogil=True)
def _intercept(w, r, beta, sw, n):
    s = 0.0
    for i in range(n):
        s += w[i] * r[i]
    d = s / sw
    if d != 0.0:
        for i in range(n):
            r[i] -= d
        beta[0] += d
    return d


@njit(cache=True, nogil=True)
def _gauss_obj(r, beta, lam, alpha, n):
    loss = 0.0
    for i in range(n):
        loss += r[i] * r[i]
    pen = 0.0
    for j in range(1, beta.shape[0]):
        pen += 0.5 * (1.0 - alpha) * beta[j] * beta[j] + alpha * abs(beta[j])
    return 0.5 * loss / n + lam * pen


@njit(cache=True, nogil=True)
def _linsolve(M, b):
    """Gaussian elimination with partial pivoting; ``ok`` is False when a
    pivot is negligible relative to the largest diagonal entry."""
    m = b.shape[0]
    A = M.copy()
    x = b.copy()
    scale = 0.0
    for i in range(m):
        if abs(A[i, i]) > scale:
            scale = abs(A[i, i])
    if scale == 0.0:
        return x, False
    for c in range(m):
        piv = c
        for r in range(c + 1, m):
            if abs(A[r, c]) > abs(A[piv, c]):
                piv = r
        if abs(A[piv, c]) <= 1e-13 * scale:
            return x, False
        if piv != c:
            for k in range(m):
                t = A[c, k]
                A[c, k] = A[piv, k]
                A[piv, k] = t
            t = x[c]
            x[c] = x[piv]
            x[piv] = t
        for r in range(c + 1, m):
            f = A[r, c] / A[c, c]
            if f != 0.0:
                for k in range(c, m):
                    A[r, k] -= f * A[c, k]
                x[r] -= f * x[c]
    for c in range(m - 1, -1, -1):
        s = x[c]
        for k in range(c + 1, m):
            s -= A[c, k] * x[k]
        x[c] = s / A[c, c]
    return x, True


@njit(cache=True, nogil=True)
def _active_solve(X, w, r, beta, l1, l2, n):
    """Minimizer of the weighted quadratic over the current orthant face,
    plus a tiny proximal term pulling towards the current iterate so that
    exactly collinear active columns still give a unique, descending step.

    Slopes at zero stay at zero and active slopes keep their signs; the step
    is taken only if the solution respects those signs.  Returns True when
    the step was taken.
    """
    p = X.shape[1]
    na = 0
    for j in range(p):
        if beta[j + 1] != 0.0:
            na += 1
    if na == 0:
        return False
    idx = np.empty(na, dtype=np.int64)
    k = 0
    for j in range(p):
        if beta[j + 1] != 0.0:
            idx[k] = j
            k += 1
    m = na + 1
    M = np.zeros((m, m))
    rhs = np.zeros(m)
    z = np.empty(n)
    for i in range(n):
        eta = beta[0]
        for a in range(na):
            eta += X[i, idx[a]] * beta[idx[a] + 1]
        z[i] = r[i] + eta
    for i in range(n):
        wi = w[i] / n
        M[0, 0] += wi
        rhs[0] += wi * z[i]
        for a in range(na):
            xa = X[i, idx[a]] * wi
            M[0, a + 1] += xa
            rhs[a + 1] += xa * z[i]
            for c in range(a, na):
                M[a + 1, c + 1] += xa * X[i, idx[c]]
    for a in range(na):
        M[a + 1, 0] = M[0, a + 1]
        for c in range(a + 1, na):
            M[c + 1, a + 1] = M[a + 1, c + 1]
        M[a + 1, a + 1] += l2
        sgn = 1.0 if beta[idx[a] + 1] > 0.0 else -1.0
        rhs[a + 1] -= l1 * sgn
    big = 0.0
    for a in range(m):
        if M[a, a] > big:
            big = M[a, a]
    prox = PROX_REL * big
    for a in range(m):
        M[a, a] += prox
    rhs[0] += prox * beta[0]
    for a in range(na):
        rhs[a + 1] += prox * beta[idx[a] + 1]
    sol, ok = _linsolve(M, rhs)
    if not ok:
        return False
    for a in range(na):
        if sol[a + 1] * beta[idx[a] + 1] <= 0.0:
            return False
    for i in range(n):
        eta = sol[0]
        for a in range(na):
            eta += X[i, idx[a]] * sol[a + 1]
        r[i] = z[i] - eta
    beta[0] = sol[0]
    for a in range(na):
        beta[idx[a] + 1] = sol[a + 1]
    return True


@njit(cache=True, nogil=True)
def weighted_cd(X, w, r, beta, lam, alpha, tol, max_sweeps, hist, nhist, record):
    """Penalized weighted least squares by cyclic coordinate descent.

    ``r`` is the working residual ``z - eta`` and is updated in place along
    with ``beta``.  After each full sweep that has not converged the loop
    cycles over the active set until it settles; if that stalls (strongly
    correlated columns under a weak ridge term), the quadratic restricted to
    the active set with signs fixed is solved directly.
    Convergence is only ever declared by a full sweep whose largest
    coefficient change is below ``tol``.  When ``record`` is set the Gaussian
    objective after every sweep is appended to ``hist``.  Returns
    ``(sweeps, converged, nhist)``.
    """
    n, p = X.shape
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    sw = 0.0
    for i in range(n):
        sw += w[i]
    xm = np.zeros(p)
    xwx = np.zeros(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += w[i] * X[i, j]
        xm[j] = s / sw
        s = 0.0
        for i in range(n):
            d = X[i, j] - xm[j]
            s += w[i] * d * d
        xwx[j] = s / n
    sweeps = 0
    while True:
        maxd = 0.0
        for j in range(p):
            d = abs(_coord(X, w, r, beta, j, xm[j], xwx[j], l1, l2, n))
            if d > maxd:
                maxd = d
        d = abs(_intercept(w, r, beta, sw, n))
        if d > maxd:
            maxd = d
        sweeps += 1
        if record and nhist < hist.shape[0]:
            hist[nhist] = _gauss_obj(r, beta, lam, alpha, n)
            nhist += 1
        if maxd < tol:
            return sweeps, True, nhist
        if sweeps >= max_sweeps:
            return sweeps, False, nhist
        inner = 0
        while True:
            maxd = 0.0
            for j in range(p):
                if beta[j + 1] != 0.0:
                    d = abs(_coord(X, w, r, beta, j, xm[j], xwx[j], l1, l2, n))
                    if d > maxd:
                        maxd = d
            d = abs(_intercept(w, r, beta, sw, n))
            if d > maxd:
                maxd = d
            sweeps += 1
            if record and nhist < hist.shape[0]:
                hist[nhist] = _gauss_obj(r, beta, lam, alpha, n)
                nhist += 1
            if maxd < tol:
                break
            if sweeps >= max_sweeps:
                return sweeps, False, nhist
            inner += 1
            if inner % STALL_SWEEPS == 0 and _active_solve(X, w, r, beta, l1, l2, n):
                if record and nhist < hist.shape[0]:
                    hist[nhist] = _gauss_obj(r, beta, lam, alpha, n)
                    nhist += 1
                break


@njit(cache=True, nogil=True)
def null_gradient(X, y):
    """max_j |(1/n) sum_i x_ij (y_i - ybar)|, the slope gradient at the null model."""
    n, p = X.shape
    ybar = 0.0
    for i in range(n):
        ybar += y[i]
    ybar /= n
    best = 0.0
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * (y[i] - ybar)
        s = abs(s / n)
        if s > best:
            best = s
    return best, ybar


@njit(cache=True, nogil=True)
def solve(X, y, fam, lam, alpha, beta, tol_in, tol_out, max_outer, max_sweeps, hist, gnull, ybar):
    """Minimize the penalized objective at one ``lam``, warm-started from ``beta``.

    ``beta`` is overwritten with the solution.  Returns
    ``(converged, outer_iterations, total_sweeps, nhist)``.
    """
    n, p = X.shape
    nhist = 0
    # Null model satisfies the optimality conditions: return it exactly.
    if gnull <= lam * alpha * (1.0 + NULL_SLACK):
        beta[0] = link_mean(fam, ybar)
        for j in range(p):
            beta[j + 1] = 0.0
        if hist.shape[0] > 0:
            hist[0] = objective(X, y, fam, beta, lam, alpha)
            nhist = 1
        return True, 0, 0, nhist

    if fam == 0:
        w = np.ones(n)
        r = np.empty(n)
        for i in range(n):
            eta = beta[0]
            for j in range(p):
                eta += X[i, j] * beta[j + 1]
            r[i] = y[i] - eta
        if hist.shape[0] > 0:
            hist[0] = _gauss_obj(r, beta, lam, alpha, n)
            nhist = 1
        sweeps, ok, nhist = weighted_cd(X, w, r, beta, lam, alpha, tol_in, max_sweeps, hist, nhist, True)
        return ok, 1, sweeps, nhist

    w = np.empty(n)
    r = np.empty(n)
    eta = np.empty(n)
    mu = np.empty(n)
    old = beta.copy()
    f_old = _eval(X, y, fam, beta, lam, alpha, eta, mu)
    if hist.shape[0] > 0:
        hist[0] = f_old
        nhist = 1
    total = 0
    for it in range(1, max_outer + 1):
        # eta and mu hold the current iterate, so no extra pass is needed here
        for i in range(n):
            e = eta[i]
            m = mu[i]
            if e > ETA_CAP or e < -ETA_CAP:
                e = min(max(e, -ETA_CAP), ETA_CAP)
                m = math.exp(e) if fam == 1 else 1.0 / (1.0 + math.exp(-e))
            v = m if fam == 1 else m * (1.0 - m)
            w[i] = v
            r[i] = (y[i] - m) / v + (e - eta[i])
        for j in range(p + 1):
            old[j] = beta[j]
        sweeps, ok, _ = weighted_cd(X, w, r, beta, lam, alpha, tol_in, max_sweeps, hist[:0], 0, False)
        total += sweeps
        if not ok:
            return False, it, total, nhist
        f_new = _eval(X, y, fam, beta, lam, alpha, eta, mu)
        halvings = 0
        while f_new > f_old and halvings < 40:
            for j in range(p + 1):
                beta[j] = 0.5 * (beta[j] + old[j])
            f_new = _eval(X, y, fam, beta, lam, alpha, eta, mu)
            halvings += 1
        if f_new > f_old:
            for j in range(p + 1):
                beta[j] = old[j]
            f_new = _eval(X, y, fam, beta, lam, alpha, eta, mu)
        step = 0.0
        for j in range(p + 1):
            d = abs(beta[j] - old[j])
            if d > step:
                step = d
        f_old = f_new
        if nhist < hist.shape[0]:
            hist[nhist] = f_new
            nhist += 1
        if step < tol_out:
            return True, it, total, nhist
    return False, max_outer, total, nhist


@njit(cache=True, nogil=True)
def path(X, y, fam, alpha, lambdas, tol_in, tol_out, max_outer, max_sweeps):
    """Warm-started solutions along ``lambdas`` starting from the null model."""
    n, p = X.shape
    K = lambdas.shape[0]
    coefs = np.zeros((K, p + 1))
    conv = np.zeros(K, dtype=np.bool_)
    gnull, ybar = null_gradient(X, y)
    beta = np.zeros(p + 1)
    beta[0] = link_mean(fam, ybar)
    hist = np.zeros(0)
    for k in range(K):
        ok, _, _, _ = solve(X, y, fam, lambdas[k], alpha, beta, tol_in, tol_out, max_outer, max_sweeps,
                            hist, gnull, ybar)
        conv[k] = ok
        for j in range(p + 1):
            coefs[k, j] = beta[j]
        if not ok:
            # later fits would start from a garbage iterate
            for kk in range(k + 1, K):
                conv[kk] = False
            break
    return coefs, conv
