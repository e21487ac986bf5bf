"""Pure-numpy implementations of the hot numerical kernels.

Same call signatures as the compiled ``_kernels`` extension; used as a
fallback when the extension is not built (and for benchmarking).  All
matrix arguments are float64 and C-contiguous; trajectory arrays are
absolute-indexed (entry ``k`` is the quantity at time ``k``).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

STATUS_OK = 0
STATUS_NOT_PD = 1
STATUS_NOT_CONVERGED = 2

ASCEND_OPTIMAL = 0
ASCEND_NOT_PD = 1
ASCEND_INFEASIBLE = 2
ASCEND_ITER_LIMIT = 3
ASCEND_NOT_STABILIZABLE = 4


def _is_pd(mat):
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        return False
    return True


def _sym(mat):
    return (mat + mat.T) / 2.0


def _a_powers(A, d):
    out = np.empty((d, A.shape[0], A.shape[0]))
    out[0] = np.eye(A.shape[0])
    for i in range(1, d):
        out[i] = out[i - 1] @ A
    return out


def riccati_finite(A, Ab, B, Bb, sigma2, Q, R, F, d, N):
    """Backward recursion k = N..d; L is zero-extended for k > N."""
    n, m = A.shape[0], B.shape[1]
    Z = np.zeros((N + 2, n, n))
    X = np.zeros((N + 2, n, n))
    L = np.zeros((N + d, n, n))
    Ups = np.zeros((N + 1, m, m))
    M = np.zeros((N + 1, m, n))
    Z[N + 1] = F
    X[N + 1] = F
    Ap = _a_powers(A, d)
    for k in range(N, d - 1, -1):
        Ups[k] = _sym(B.T @ Z[k + 1] @ B + sigma2 * (Bb.T @ X[k + 1] @ Bb) + R)
        if not _is_pd(Ups[k]):
            return Z, X, L, Ups, M, STATUS_NOT_PD
        M[k] = B.T @ Z[k + 1] @ A + sigma2 * (Bb.T @ X[k + 1] @ Ab)
        L[k] = _sym(M[k].T @ np.linalg.solve(Ups[k], M[k]))
        Z[k] = _sym(A.T @ Z[k + 1] @ A + sigma2 * (Ab.T @ X[k + 1] @ Ab) + Q - L[k])
        Xk = Z[k].copy()
        for i in range(d):
            Xk += Ap[i].T @ L[k + i] @ Ap[i]
        X[k] = _sym(Xk)
    return Z, X, L, Ups, M, STATUS_OK


def riccati_infinite(A, Ab, B, Bb, sigma2, Q, R, d, tol, max_iter, cap):
    """Fixed-point iteration of the steady recursion from Z = X = Q."""
    Z = Q.copy()
    X = Q.copy()
    L = np.zeros_like(Q)
    Ups = R.copy()
    M = np.zeros((B.shape[1], A.shape[0]))
    Ap = _a_powers(A, d)
    for it in range(1, int(max_iter) + 1):
        Ups = _sym(B.T @ Z @ B + sigma2 * (Bb.T @ X @ Bb) + R)
        if not _is_pd(Ups):
            return Z, X, L, Ups, M, it, STATUS_NOT_PD
        M = B.T @ Z @ A + sigma2 * (Bb.T @ X @ Ab)
        L = _sym(M.T @ np.linalg.solve(Ups, M))
        Zn = _sym(A.T @ Z @ A + sigma2 * (Ab.T @ X @ Ab) + Q - L)
        Xn = Zn.copy()
        for i in range(d):
            Xn += Ap[i].T @ L @ Ap[i]
        Xn = _sym(Xn)
        delta = max(np.abs(Zn - Z).max(), np.abs(Xn - X).max())
        Z, X = Zn, Xn
        if delta < tol:
            return Z, X, L, Ups, M, it, STATUS_OK
        if np.abs(Z).max() > cap or np.abs(X).max() > cap:
            return Z, X, L, Ups, M, it, STATUS_NOT_CONVERGED
    return Z, X, L, Ups, M, int(max_iter), STATUS_NOT_CONVERGED


def gradient_finite(A, Ab, B, Bb, sigma2, Qi, Ri, Fi, d, N, Z, X, Ups, M):
    """Backward derivative recursion at the trajectory's multiplier."""
    n = A.shape[0]
    m = B.shape[1]
    dZ = np.zeros((N + 2, n, n))
    dX = np.zeros((N + 2, n, n))
    dL = np.zeros((N + d, n, n))
    dUps = np.zeros((N + 1, m, m))
    dM = np.zeros((N + 1, m, n))
    dZ[N + 1] = Fi
    dX[N + 1] = Fi
    Ap = _a_powers(A, d)
    for k in range(N, d - 1, -1):
        dUps[k] = _sym(B.T @ dZ[k + 1] @ B + sigma2 * (Bb.T @ dX[k + 1] @ Bb) + Ri)
        dM[k] = B.T @ dZ[k + 1] @ A + sigma2 * (Bb.T @ dX[k + 1] @ Ab)
        W = np.linalg.solve(Ups[k], M[k])
        dL[k] = _sym(dM[k].T @ W + W.T @ dM[k] - W.T @ dUps[k] @ W)
        dZ[k] = _sym(A.T @ dZ[k + 1] @ A + sigma2 * (Ab.T @ dX[k + 1] @ Ab) + Qi - dL[k])
        dXk = dZ[k].copy()
        for i in range(d):
            dXk += Ap[i].T @ dL[k + i] @ Ap[i]
        dX[k] = _sym(dXk)
    return dZ, dX, dL, dUps, dM, STATUS_OK


def gradient_infinite(A, Ab, B, Bb, sigma2, Qi, Ri, d, Z, X, Ups, M, tol, max_iter):
    """Iterates the linear steady derivative system from dZ = dX = Qi."""
    dZ = Qi.copy()
    dX = Qi.copy()
    dL = np.zeros_like(Qi)
    dUps = Ri.copy()
    dM = np.zeros_like(M)
    W = np.linalg.solve(Ups, M)
    Ap = _a_powers(A, d)
    for it in range(1, int(max_iter) + 1):
        dUps = _sym(B.T @ dZ @ B + sigma2 * (Bb.T @ dX @ Bb) + Ri)
        dM = B.T @ dZ @ A + sigma2 * (Bb.T @ dX @ Ab)
        dL = _sym(dM.T @ W + W.T @ dM - W.T @ dUps @ W)
        dZn = _sym(A.T @ dZ @ A + sigma2 * (Ab.T @ dX @ Ab) + Qi - dL)
        dXn = dZn.copy()
        for i in range(d):
            dXn += Ap[i].T @ dL @ Ap[i]
        dXn = _sym(dXn)
        delta = max(np.abs(dZn - dZ).max(), np.abs(dXn - dX).max())
        dZ, dX = dZn, dXn
        if delta < tol:
            return dZ, dX, dL, dUps, dM, it, STATUS_OK
    return dZ, dX, dL, dUps, dM, int(max_iter), STATUS_NOT_CONVERGED


class _Trace:
    """Bounded per-iteration trace with stride-doubling thinning."""

    def __init__(self, width, cap):
        self.cap = int(cap)
        self.rows = np.empty((self.cap, width))
        self.len = 0
        self.stride = 1

    def record(self, it, row):
        if it % self.stride != 0:
            return
        if self.len == self.cap:
            self.rows[: self.cap // 2] = self.rows[0 : self.cap : 2]
            self.len = self.cap // 2
            self.stride *= 2
            if it % self.stride != 0:
                return
        self.rows[self.len] = row
        self.len += 1

    def result(self):
        return self.rows[: self.len].copy()


def ascend_finite(A, Ab, B, Bb, sigma2, d, N, Qs, Rs, Fs, c, S, Shat,
                  lam0, alpha, tol, max_iter, div_cap, trace_cap):
    """Projected dual ascent, finite horizon.

    ``Qs``/``Rs``/``Fs`` stack the objective (index 0) and constraint
    weights; ``S`` holds open-loop second moments E[x_k x_k'] for
    k = 0..d, ``Shat`` the rotated predictor second moments
    A^j E[xhat_{d|j} xhat_{d|j}'] A'^j for j = 0..d-1, ready to be
    contracted against L_{d+j}.
    """
    mc = len(c)
    lam = np.asarray(lam0, dtype=float).copy()
    trace = _Trace(2 * mc + 2, trace_cap)
    g = np.zeros(mc)
    status = ASCEND_ITER_LIMIT
    it = 0
    for it in range(1, int(max_iter) + 1):
        Ql = Qs[0] + np.tensordot(lam, Qs[1:], axes=1) if mc else Qs[0]
        Rl = Rs[0] + np.tensordot(lam, Rs[1:], axes=1) if mc else Rs[0]
        Fl = Fs[0] + (np.tensordot(lam, Fs[1:], axes=1) if mc else 0.0)
        Z, X, L, Ups, M, st = riccati_finite(A, Ab, B, Bb, sigma2, Ql, Rl, Fl, d, N)
        if st != STATUS_OK:
            return ASCEND_NOT_PD, lam, it, trace.result()
        value = (
            sum(np.trace(Ql @ S[k]) for k in range(d))
            + np.trace(X[d] @ S[d])
            - sum(np.trace(L[d + j] @ Shat[j]) for j in range(d))
            - float(lam @ c)
        )
        for i in range(mc):
            dZ, dX, dL, _, _, _ = gradient_finite(
                A, Ab, B, Bb, sigma2, Qs[i + 1], Rs[i + 1], Fs[i + 1], d, N, Z, X, Ups, M
            )
            g[i] = (
                sum(np.trace(Qs[i + 1] @ S[k]) for k in range(d))
                + np.trace(dX[d] @ S[d])
                - sum(np.trace(dL[d + j] @ Shat[j]) for j in range(d))
                - c[i]
            )
        trace.record(it - 1, np.concatenate(([it - 1], lam, g, [value])))
        new = np.maximum(0.0, lam + alpha * g)
        if np.abs(new - lam).max() <= tol:
            lam = new
            status = ASCEND_OPTIMAL
            break
        if np.any((new > div_cap) & (g > 0)):
            lam = new
            status = ASCEND_INFEASIBLE
            break
        lam = new
    return status, lam, it, trace.result()


def ascend_infinite(A, Ab, B, Bb, sigma2, d, Qs, Rs, c, x0, U, Xh,
                    lam0, alpha, tol, max_iter, div_cap,
                    fp_tol, fp_max_iter, fp_cap, trace_cap):
    """Projected dual ascent, infinite horizon.

    ``U`` stacks the initial controls (d, m), ``Xh`` the deterministic
    predictors xhat_{k|k-d} for k = 0..d-1 (d, n).
    """
    mc = len(c)
    lam = np.asarray(lam0, dtype=float).copy()
    trace = _Trace(2 * mc + 2, trace_cap)
    g = np.zeros(mc)
    status = ASCEND_ITER_LIMIT
    it = 0
    for it in range(1, int(max_iter) + 1):
        Ql = Qs[0] + np.tensordot(lam, Qs[1:], axes=1) if mc else Qs[0]
        Rl = Rs[0] + np.tensordot(lam, Rs[1:], axes=1) if mc else Rs[0]
        Z, X, L, Ups, M, _, st = riccati_infinite(
            A, Ab, B, Bb, sigma2, Ql, Rl, d, fp_tol, fp_max_iter, fp_cap
        )
        if st == STATUS_NOT_PD:
            return ASCEND_NOT_PD, lam, it, trace.result()
        if st == STATUS_NOT_CONVERGED:
            return ASCEND_NOT_STABILIZABLE, lam, it, trace.result()
        value = float(x0 @ Z @ x0) - float(lam @ c)
        for k in range(d):
            u, xh = U[k], Xh[k]
            value += float(-u @ Rl @ u + 2 * (u @ M @ xh) + xh @ L @ xh + u @ Ups @ u)
        for i in range(mc):
            dZ, dX, dL, dUps, dM, _, st = gradient_infinite(
                A, Ab, B, Bb, sigma2, Qs[i + 1], Rs[i + 1], d, Z, X, Ups, M,
                fp_tol, fp_max_iter,
            )
            if st != STATUS_OK:
                return ASCEND_NOT_STABILIZABLE, lam, it, trace.result()
            gi = float(x0 @ dZ @ x0) - c[i]
            for k in range(d):
                u, xh = U[k], Xh[k]
                gi += float(
                    -u @ Rs[i + 1] @ u + 2 * (u @ dM @ xh) + xh @ dL @ xh + u @ dUps @ u
                )
            g[i] = gi
        trace.record(it - 1, np.concatenate(([it - 1], lam, g, [value])))
        new = np.maximum(0.0, lam + alpha * g)
        if np.abs(new - lam).max() <= tol:
            lam = new
            status = ASCEND_OPTIMAL
            break
        if np.any((new > div_cap) & (g > 0)):
            lam = new
            status = ASCEND_INFEASIBLE
            break
        lam = new
    return status, lam, it, trace.result()
