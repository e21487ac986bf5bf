# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot numerical kernels.

Same call signatures as ``_kernels_py``; the backward recursions, steady
fixed-point iterations and the fused dual-ascent loops run as C loops so
that ascents with millions of inner Riccati solves stay fast.
"""

import numpy as np

from libc.math cimport fabs, sqrt

BACKEND = "cython"

STATUS_OK = 0
STATUS_NOT_PD = 1
STATUS_NOT_CONVERGED = 2

ASCEND_OPTIMAL = 0
ASCEND_NOT_PD = 1
ASCEND_INFEASIBLE = 2
ASCEND_ITER_LIMIT = 3
ASCEND_NOT_STABILIZABLE = 4

cdef int C_OK = 0
cdef int C_NOT_PD = 1
cdef int C_NOT_CONVERGED = 2

cdef int CA_OPTIMAL = 0
cdef int CA_NOT_PD = 1
cdef int CA_INFEASIBLE = 2
cdef int CA_ITER_LIMIT = 3
cdef int CA_NOT_STABILIZABLE = 4


# ---------------------------------------------------------------- helpers

cdef inline void mat_mul(double[:, :] A, double[:, :] B, double[:, :] C) noexcept nogil:
    # C = A @ B
    cdef Py_ssize_t i, j, k, p = A.shape[0], q = A.shape[1], r = B.shape[1]
    cdef double s
    for i in range(p):
        for j in range(r):
            s = 0.0
            for k in range(q):
                s += A[i, k] * B[k, j]
            C[i, j] = s


cdef inline void mat_tmul(double[:, :] A, double[:, :] B, double[:, :] C) noexcept nogil:
    # C = A.T @ B with A: (q, p), B: (q, r)
    cdef Py_ssize_t i, j, k, q = A.shape[0], p = A.shape[1], r = B.shape[1]
    cdef double s
    for i in range(p):
        for j in range(r):
            s = 0.0
            for k in range(q):
                s += A[k, i] * B[k, j]
            C[i, j] = s


cdef inline void symmetrize(double[:, :] C) noexcept nogil:
    cdef Py_ssize_t i, j, n = C.shape[0]
    cdef double v
    for i in range(n):
        for j in range(i):
            v = 0.5 * (C[i, j] + C[j, i])
            C[i, j] = v
            C[j, i] = v


cdef inline int cholesky(double[:, :] A, double[:, :] Lf) noexcept nogil:
    # Lower factor of SPD A; -1 when a pivot is not strictly positive.
    cdef Py_ssize_t i, j, k, n = A.shape[0]
    cdef double s
    for i in range(n):
        for j in range(i + 1):
            s = A[i, j]
            for k in range(j):
                s -= Lf[i, k] * Lf[j, k]
            if i == j:
                if s <= 0.0:
                    return -1
                Lf[i, i] = sqrt(s)
            else:
                Lf[i, j] = s / Lf[j, j]
        for j in range(i + 1, n):
            Lf[i, j] = 0.0
    return 0


cdef inline void chol_solve(double[:, :] Lf, double[:, :] B, double[:, :] X) noexcept nogil:
    # Solve (Lf Lf.T) X = B column-wise.
    cdef Py_ssize_t i, k, j, n = Lf.shape[0], r = B.shape[1]
    cdef double s
    for j in range(r):
        for i in range(n):
            s = B[i, j]
            for k in range(i):
                s -= Lf[i, k] * X[k, j]
            X[i, j] = s / Lf[i, i]
        for i in range(n - 1, -1, -1):
            s = X[i, j]
            for k in range(i + 1, n):
                s -= Lf[k, i] * X[k, j]
            X[i, j] = s / Lf[i, i]


cdef inline double trace_prod(double[:, :] W, double[:, :] S) noexcept nogil:
    # tr(W @ S)
    cdef Py_ssize_t i, j, n = W.shape[0]
    cdef double s = 0.0
    for i in range(n):
        for j in range(n):
            s += W[i, j] * S[j, i]
    return s


cdef inline double quad_form(double[:] x, double[:, :] W, double[:] y) noexcept nogil:
    # x.T @ W @ y
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            s += x[i] * W[i, j] * y[j]
    return s


cdef inline double max_abs_diff(double[:, :] A, double[:, :] B) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v, out = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            v = fabs(A[i, j] - B[i, j])
            if v > out:
                out = v
    return out


cdef inline double max_abs(double[:, :] A) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double v, out = 0.0
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            v = fabs(A[i, j])
            if v > out:
                out = v
    return out


cdef inline void copy_into(double[:, :] src, double[:, :] dst) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(src.shape[0]):
        for j in range(src.shape[1]):
            dst[i, j] = src[i, j]



def _carr(x):
    out = np.ascontiguousarray(x, dtype=float)
    if not out.flags.writeable:
        out = out.copy()
    return out

def _a_powers(A, int d):
    n = A.shape[0]
    out = np.empty((d, n, n))
    out[0] = np.eye(n)
    for i in range(1, d):
        out[i] = out[i - 1] @ A
    return out


# ---------------------------------------------------------------- finite recursion

cdef int _riccati_finite_core(
    double[:, ::1] A, double[:, ::1] Ab, double[:, ::1] B, double[:, ::1] Bb,
    double sigma2, double[:, :] Q, double[:, :] R, double[:, :] F,
    int d, int N, double[:, :, ::1] Ap,
    double[:, :, ::1] Z, double[:, :, ::1] X, double[:, :, ::1] L,
    double[:, :, ::1] Ups, double[:, :, ::1] M,
    double[:, ::1] Tnm, double[:, ::1] Tnn, double[:, ::1] Tnn2,
    double[:, ::1] Tmm, double[:, ::1] Tmn, double[:, ::1] W, double[:, ::1] Lf,
) noexcept nogil:
    cdef Py_ssize_t i, j, n = A.shape[0], m = B.shape[1]
    cdef int k, p
    for i in range(n):
        for j in range(n):
            Z[N + 1, i, j] = F[i, j]
            X[N + 1, i, j] = F[i, j]
    for k in range(N, d - 1, -1):
        # Ups_k = B'Z_{k+1}B + s2 Bb'X_{k+1}Bb + R
        mat_mul(Z[k + 1], B, Tnm)
        mat_tmul(B, Tnm, Ups[k])
        mat_mul(X[k + 1], Bb, Tnm)
        mat_tmul(Bb, Tnm, Tmm)
        for i in range(m):
            for j in range(m):
                Ups[k, i, j] += sigma2 * Tmm[i, j] + R[i, j]
        symmetrize(Ups[k])
        if cholesky(Ups[k], Lf) != 0:
            return C_NOT_PD
        # M_k = B'Z_{k+1}A + s2 Bb'X_{k+1}Ab
        mat_mul(Z[k + 1], A, Tnn)
        mat_tmul(B, Tnn, M[k])
        mat_mul(X[k + 1], Ab, Tnn)
        mat_tmul(Bb, Tnn, Tmn)
        for i in range(m):
            for j in range(n):
                M[k, i, j] += sigma2 * Tmn[i, j]
        # L_k = M_k' Ups_k^{-1} M_k
        chol_solve(Lf, M[k], W)
        mat_tmul(M[k], W, L[k])
        symmetrize(L[k])
        # Z_k = A'Z_{k+1}A + s2 Ab'X_{k+1}Ab + Q - L_k
        mat_mul(Z[k + 1], A, Tnn)
        mat_tmul(A, Tnn, Z[k])
        mat_mul(X[k + 1], Ab, Tnn)
        mat_tmul(Ab, Tnn, Tnn2)
        for i in range(n):
            for j in range(n):
                Z[k, i, j] += sigma2 * Tnn2[i, j] + Q[i, j] - L[k, i, j]
        symmetrize(Z[k])
        # X_k = Z_k + sum_i Ap_i' L_{k+i} Ap_i
        for i in range(n):
            for j in range(n):
                X[k, i, j] = Z[k, i, j]
        for p in range(d):
            mat_mul(L[k + p], Ap[p], Tnn)
            mat_tmul(Ap[p], Tnn, Tnn2)
            for i in range(n):
                for j in range(n):
                    X[k, i, j] += Tnn2[i, j]
        symmetrize(X[k])
    return C_OK


cdef int _gradient_finite_core(
    double[:, ::1] A, double[:, ::1] Ab, double[:, ::1] B, double[:, ::1] Bb,
    double sigma2, double[:, :] Qi, double[:, :] Ri, double[:, :] Fi,
    int d, int N, double[:, :, ::1] Ap,
    double[:, :, ::1] Ups, double[:, :, ::1] M,
    double[:, :, ::1] dZ, double[:, :, ::1] dX, double[:, :, ::1] dL,
    double[:, :, ::1] dUps, double[:, :, ::1] dM,
    double[:, ::1] Tnm, double[:, ::1] Tnn, double[:, ::1] Tnn2,
    double[:, ::1] Tmm, double[:, ::1] Tmn, double[:, ::1] W,
    double[:, ::1] W2, double[:, ::1] Lf,
) noexcept nogil:
    cdef Py_ssize_t i, j, k2, n = A.shape[0], m = B.shape[1]
    cdef int k, p
    for i in range(n):
        for j in range(n):
            dZ[N + 1, i, j] = Fi[i, j]
            dX[N + 1, i, j] = Fi[i, j]
    for k in range(N, d - 1, -1):
        mat_mul(dZ[k + 1], B, Tnm)
        mat_tmul(B, Tnm, dUps[k])
        mat_mul(dX[k + 1], Bb, Tnm)
        mat_tmul(Bb, Tnm, Tmm)
        for i in range(m):
            for j in range(m):
                dUps[k, i, j] += sigma2 * Tmm[i, j] + Ri[i, j]
        symmetrize(dUps[k])
        mat_mul(dZ[k + 1], A, Tnn)
        mat_tmul(B, Tnn, dM[k])
        mat_mul(dX[k + 1], Ab, Tnn)
        mat_tmul(Bb, Tnn, Tmn)
        for i in range(m):
            for j in range(n):
                dM[k, i, j] += sigma2 * Tmn[i, j]
        # W = Ups_k^{-1} M_k (refactor from the stored trajectory)
        if cholesky(Ups[k], Lf) != 0:
            return C_NOT_PD
        chol_solve(Lf, M[k], W)
        # dL_k = dM'W + W'dM - W'dUps W
        mat_tmul(dM[k], W, Tnn)
        for i in range(n):
            for j in range(n):
                dL[k, i, j] = Tnn[i, j] + Tnn[j, i]
        mat_mul(dUps[k], W, W2)
        mat_tmul(W, W2, Tnn)
        for i in range(n):
            for j in range(n):
                dL[k, i, j] -= Tnn[i, j]
        symmetrize(dL[k])
        mat_mul(dZ[k + 1], A, Tnn)
        mat_tmul(A, Tnn, dZ[k])
        mat_mul(dX[k + 1], Ab, Tnn)
        mat_tmul(Ab, Tnn, Tnn2)
        for i in range(n):
            for j in range(n):
                dZ[k, i, j] += sigma2 * Tnn2[i, j] + Qi[i, j] - dL[k, i, j]
        symmetrize(dZ[k])
        for i in range(n):
            for j in range(n):
                dX[k, i, j] = dZ[k, i, j]
        for p in range(d):
            mat_mul(dL[k + p], Ap[p], Tnn)
            mat_tmul(Ap[p], Tnn, Tnn2)
            for i in range(n):
                for j in range(n):
                    dX[k, i, j] += Tnn2[i, j]
        symmetrize(dX[k])
    return C_OK


# ---------------------------------------------------------------- infinite recursion

cdef int _riccati_infinite_core(
    double[:, ::1] A, double[:, ::1] Ab, double[:, ::1] B, double[:, ::1] Bb,
    double sigma2, double[:, :] Q, double[:, :] R,
    int d, double tol, long max_iter, double cap, double[:, :, ::1] Ap,
    double[:, ::1] Z, double[:, ::1] X, double[:, ::1] L,
    double[:, ::1] Ups, double[:, ::1] M,
    double[:, ::1] Zn, double[:, ::1] Xn,
    double[:, ::1] Tnm, double[:, ::1] Tnn, double[:, ::1] Tnn2,
    double[:, ::1] Tmm, double[:, ::1] Tmn, double[:, ::1] W, double[:, ::1] Lf,
    long* iters,
) noexcept nogil:
    cdef Py_ssize_t i, j, n = A.shape[0], m = B.shape[1]
    cdef int p
    cdef long it
    cdef double delta
    copy_into(Q, Z)
    copy_into(Q, X)
    for it in range(1, max_iter + 1):
        mat_mul(Z, B, Tnm)
        mat_tmul(B, Tnm, Ups)
        mat_mul(X, Bb, Tnm)
        mat_tmul(Bb, Tnm, Tmm)
        for i in range(m):
            for j in range(m):
                Ups[i, j] += sigma2 * Tmm[i, j] + R[i, j]
        symmetrize(Ups)
        if cholesky(Ups, Lf) != 0:
            iters[0] = it
            return C_NOT_PD
        mat_mul(Z, A, Tnn)
        mat_tmul(B, Tnn, M)
        mat_mul(X, Ab, Tnn)
        mat_tmul(Bb, Tnn, Tmn)
        for i in range(m):
            for j in range(n):
                M[i, j] += sigma2 * Tmn[i, j]
        chol_solve(Lf, M, W)
        mat_tmul(M, W, L)
        symmetrize(L)
        mat_mul(Z, A, Tnn)
        mat_tmul(A, Tnn, Zn)
        mat_mul(X, Ab, Tnn)
        mat_tmul(Ab, Tnn, Tnn2)
        for i in range(n):
            for j in range(n):
                Zn[i, j] += sigma2 * Tnn2[i, j] + Q[i, j] - L[i, j]
        symmetrize(Zn)
        copy_into(Zn, Xn)
        for p in range(d):
            mat_mul(L, Ap[p], Tnn)
            mat_tmul(Ap[p], Tnn, Tnn2)
            for i in range(n):
                for j in range(n):
                    Xn[i, j] += Tnn2[i, j]
        symmetrize(Xn)
        delta = max_abs_diff(Zn, Z)
        if max_abs_diff(Xn, X) > delta:
            delta = max_abs_diff(Xn, X)
        copy_into(Zn, Z)
        copy_into(Xn, X)
        if delta < tol:
            iters[0] = it
            return C_OK
        if max_abs(Z) > cap or max_abs(X) > cap:
            iters[0] = it
            return C_NOT_CONVERGED
    iters[0] = max_iter
    return C_NOT_CONVERGED


cdef int _gradient_infinite_core(
    double[:, ::1] A, double[:, ::1] Ab, double[:, ::1] B, double[:, ::1] Bb,
    double sigma2, double[:, :] Qi, double[:, :] Ri,
    int d, double tol, long max_iter, double[:, :, ::1] Ap,
    double[:, ::1] Ups, double[:, ::1] M,
    double[:, ::1] dZ, double[:, ::1] dX, double[:, ::1] dL,
    double[:, ::1] dUps, double[:, ::1] dM,
    double[:, ::1] dZn, double[:, ::1] dXn,
    double[:, ::1] Tnm, double[:, ::1] Tnn, double[:, ::1] Tnn2,
    double[:, ::1] Tmm, double[:, ::1] Tmn, double[:, ::1] W,
    double[:, ::1] W2, double[:, ::1] Lf,
    long* iters,
) noexcept nogil:
    cdef Py_ssize_t i, j, n = A.shape[0], m = B.shape[1]
    cdef int p
    cdef long it
    cdef double delta
    if cholesky(Ups, Lf) != 0:
        iters[0] = 0
        return C_NOT_PD
    chol_solve(Lf, M, W)
    copy_into(Qi, dZ)
    copy_into(Qi, dX)
    for it in range(1, max_iter + 1):
        mat_mul(dZ, B, Tnm)
        mat_tmul(B, Tnm, dUps)
        mat_mul(dX, Bb, Tnm)
        mat_tmul(Bb, Tnm, Tmm)
        for i in range(m):
            for j in range(m):
                dUps[i, j] += sigma2 * Tmm[i, j] + Ri[i, j]
        symmetrize(dUps)
        mat_mul(dZ, A, Tnn)
        mat_tmul(B, Tnn, dM)
        mat_mul(dX, Ab, Tnn)
        mat_tmul(Bb, Tnn, Tmn)
        for i in range(m):
            for j in range(n):
                dM[i, j] += sigma2 * Tmn[i, j]
        mat_tmul(dM, W, Tnn)
        for i in range(n):
            for j in range(n):
                dL[i, j] = Tnn[i, j] + Tnn[j, i]
        mat_mul(dUps, W, W2)
        mat_tmul(W, W2, Tnn)
        for i in range(n):
            for j in range(n):
                dL[i, j] -= Tnn[i, j]
        symmetrize(dL)
        mat_mul(dZ, A, Tnn)
        mat_tmul(A, Tnn, dZn)
        mat_mul(dX, Ab, Tnn)
        mat_tmul(Ab, Tnn, Tnn2)
        for i in range(n):
            for j in range(n):
                dZn[i, j] += sigma2 * Tnn2[i, j] + Qi[i, j] - dL[i, j]
        symmetrize(dZn)
        copy_into(dZn, dXn)
        for p in range(d):
            mat_mul(dL, Ap[p], Tnn)
            mat_tmul(Ap[p], Tnn, Tnn2)
            for i in range(n):
                for j in range(n):
                    dXn[i, j] += Tnn2[i, j]
        symmetrize(dXn)
        delta = max_abs_diff(dZn, dZ)
        if max_abs_diff(dXn, dX) > delta:
            delta = max_abs_diff(dXn, dX)
        copy_into(dZn, dZ)
        copy_into(dXn, dX)
        if delta < tol:
            iters[0] = it
            return C_OK
    iters[0] = max_iter
    return C_NOT_CONVERGED


# ---------------------------------------------------------------- wrappers

def riccati_finite(A, Ab, B, Bb, double sigma2, Q, R, F, int d, int N):
    """Backward recursion k = N..d; L is zero-extended for k > N."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    Q = _carr(Q)
    R = _carr(R)
    F = _carr(F)
    cdef int n = A.shape[0], m = B.shape[1]
    Z = np.zeros((N + 2, n, n))
    X = np.zeros((N + 2, n, n))
    L = np.zeros((N + d, n, n))
    Ups = np.zeros((N + 1, m, m))
    M = np.zeros((N + 1, m, n))
    Ap = _a_powers(A, d)
    cdef int status = _riccati_finite_core(
        A, Ab, B, Bb, sigma2, Q, R, F, d, N, Ap, Z, X, L, Ups, M,
        np.empty((n, m)), np.empty((n, n)), np.empty((n, n)),
        np.empty((m, m)), np.empty((m, n)), np.empty((m, n)), np.empty((m, m)),
    )
    return Z, X, L, Ups, M, status


def riccati_infinite(A, Ab, B, Bb, double sigma2, Q, R, int d,
                     double tol, max_iter, double cap):
    """Fixed-point iteration of the steady recursion from Z = X = Q."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    Q = _carr(Q)
    R = _carr(R)
    cdef int n = A.shape[0], m = B.shape[1]
    Z = np.zeros((n, n))
    X = np.zeros((n, n))
    L = np.zeros((n, n))
    Ups = np.zeros((m, m))
    M = np.zeros((m, n))
    Ap = _a_powers(A, d)
    cdef long iters = 0
    cdef long mi = int(max_iter)
    cdef int status = _riccati_infinite_core(
        A, Ab, B, Bb, sigma2, Q, R, d, tol, mi, cap, Ap, Z, X, L, Ups, M,
        np.empty((n, n)), np.empty((n, n)),
        np.empty((n, m)), np.empty((n, n)), np.empty((n, n)),
        np.empty((m, m)), np.empty((m, n)), np.empty((m, n)), np.empty((m, m)),
        &iters,
    )
    return Z, X, L, Ups, M, iters, status


def gradient_finite(A, Ab, B, Bb, double sigma2, Qi, Ri, Fi, int d, int N, Z, X, Ups, M):
    """Backward derivative recursion at the trajectory's multiplier."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    Qi = _carr(Qi)
    Ri = _carr(Ri)
    Fi = _carr(Fi)
    Ups = _carr(Ups)
    M = _carr(M)
    cdef int n = A.shape[0], m = B.shape[1]
    dZ = np.zeros((N + 2, n, n))
    dX = np.zeros((N + 2, n, n))
    dL = np.zeros((N + d, n, n))
    dUps = np.zeros((N + 1, m, m))
    dM = np.zeros((N + 1, m, n))
    Ap = _a_powers(A, d)
    cdef int status = _gradient_finite_core(
        A, Ab, B, Bb, sigma2, Qi, Ri, Fi, d, N, Ap, Ups, M,
        dZ, dX, dL, dUps, dM,
        np.empty((n, m)), np.empty((n, n)), np.empty((n, n)),
        np.empty((m, m)), np.empty((m, n)), np.empty((m, n)),
        np.empty((m, n)), np.empty((m, m)),
    )
    return dZ, dX, dL, dUps, dM, status


def gradient_infinite(A, Ab, B, Bb, double sigma2, Qi, Ri, int d, Z, X, Ups, M,
                      double tol, max_iter):
    """Iterates the linear steady derivative system from dZ = dX = Qi."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    Qi = _carr(Qi)
    Ri = _carr(Ri)
    Ups = _carr(Ups)
    M = _carr(M)
    cdef int n = A.shape[0], m = B.shape[1]
    dZ = np.zeros((n, n))
    dX = np.zeros((n, n))
    dL = np.zeros((n, n))
    dUps = np.zeros((m, m))
    dM = np.zeros((m, n))
    Ap = _a_powers(A, d)
    cdef long iters = 0
    cdef long mi = int(max_iter)
    cdef int status = _gradient_infinite_core(
        A, Ab, B, Bb, sigma2, Qi, Ri, d, tol, mi, Ap, Ups, M,
        dZ, dX, dL, dUps, dM,
        np.empty((n, n)), np.empty((n, n)),
        np.empty((n, m)), np.empty((n, n)), np.empty((n, n)),
        np.empty((m, m)), np.empty((m, n)), np.empty((m, n)),
        np.empty((m, n)), np.empty((m, m)),
        &iters,
    )
    return dZ, dX, dL, dUps, dM, iters, status


# ---------------------------------------------------------------- fused ascents

cdef inline int trace_record(double[:, ::1] rows, long* tlen, long* stride,
                             long it, double[:] lam, double[:] g, double value) noexcept nogil:
    cdef Py_ssize_t i, mc = lam.shape[0]
    cdef long cap = rows.shape[0], half, j
    if it % stride[0] != 0:
        return 0
    if tlen[0] == cap:
        half = cap // 2
        for j in range(half):
            for i in range(rows.shape[1]):
                rows[j, i] = rows[2 * j, i]
        tlen[0] = half
        stride[0] *= 2
        if it % stride[0] != 0:
            return 0
    rows[tlen[0], 0] = it
    for i in range(mc):
        rows[tlen[0], 1 + i] = lam[i]
        rows[tlen[0], 1 + mc + i] = g[i]
    rows[tlen[0], 1 + 2 * mc] = value
    tlen[0] += 1
    return 0


def ascend_finite(A, Ab, B, Bb, double sigma2, int d, int N, Qs, Rs, Fs, c, S, Shat,
                  lam0, double alpha, double tol, max_iter, double div_cap, trace_cap):
    """Projected dual ascent, finite horizon (see ``_kernels_py`` for semantics)."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    cdef double[:, :, ::1] Qv = _carr(Qs)
    cdef double[:, :, ::1] Rv = _carr(Rs)
    cdef double[:, :, ::1] Fv = _carr(Fs)
    cdef double[:] cv = _carr(c)
    cdef double[:, :, ::1] Sv = _carr(S)
    cdef double[:, :, ::1] Shv = _carr(Shat)
    cdef int n = A.shape[0], m = B.shape[1], mc = len(c)
    lam_arr = np.asarray(lam0, dtype=float).copy()
    cdef double[:] lam = lam_arr
    g_arr = np.zeros(mc)
    cdef double[:] g = g_arr
    new_arr = np.zeros(mc)
    cdef double[:] lnew = new_arr

    Ql = np.zeros((n, n)); Rl = np.zeros((m, m)); Fl = np.zeros((n, n))
    cdef double[:, ::1] Qlv = Ql, Rlv = Rl, Flv = Fl
    Z = np.zeros((N + 2, n, n)); X = np.zeros((N + 2, n, n)); L = np.zeros((N + d, n, n))
    Ups = np.zeros((N + 1, m, m)); M = np.zeros((N + 1, m, n))
    cdef double[:, :, ::1] Zv = Z, Xv = X, Lv = L, Uv = Ups, Mv = M
    dZ = np.zeros((N + 2, n, n)); dX = np.zeros((N + 2, n, n)); dL = np.zeros((N + d, n, n))
    dUps = np.zeros((N + 1, m, m)); dM = np.zeros((N + 1, m, n))
    cdef double[:, :, ::1] dZv = dZ, dXv = dX, dLv = dL, dUv = dUps, dMv = dM
    cdef double[:, :, ::1] Ap = _a_powers(A, d)
    cdef double[:, ::1] Tnm = np.empty((n, m)), Tnn = np.empty((n, n)), Tnn2 = np.empty((n, n))
    cdef double[:, ::1] Tmm = np.empty((m, m)), Tmn = np.empty((m, n)), W = np.empty((m, n))
    cdef double[:, ::1] W2 = np.empty((m, n)), Lf = np.empty((m, m))
    trace_rows = np.empty((int(trace_cap), 2 * mc + 2))
    cdef double[:, ::1] Tr = trace_rows
    cdef long tlen = 0, stride = 1, it = 0, mi = int(max_iter)
    cdef double[:, ::1] Av = A, Abv = Ab, Bv = B, Bbv = Bb
    cdef int i, k, st
    cdef long itv
    cdef double value, step, diff
    cdef int status = CA_ITER_LIMIT
    cdef bint stop, infeasible

    with nogil:
        for itv in range(1, mi + 1):
            it = itv
            # lambda-weighted costs
            copy_into(Qv[0], Qlv)
            copy_into(Rv[0], Rlv)
            copy_into(Fv[0], Flv)
            for i in range(mc):
                for k in range(n * n):
                    Qlv[k // n, k % n] += lam[i] * Qv[1 + i, k // n, k % n]
                    Flv[k // n, k % n] += lam[i] * Fv[1 + i, k // n, k % n]
                for k in range(m * m):
                    Rlv[k // m, k % m] += lam[i] * Rv[1 + i, k // m, k % m]
            st = _riccati_finite_core(
                Av, Abv, Bv, Bbv, sigma2, Qlv, Rlv, Flv, d, N, Ap,
                Zv, Xv, Lv, Uv, Mv, Tnm, Tnn, Tnn2, Tmm, Tmn, W, Lf,
            )
            if st != C_OK:
                status = CA_NOT_PD
                break
            value = 0.0
            for k in range(d):
                value += trace_prod(Qlv, Sv[k])
                value -= trace_prod(Lv[d + k], Shv[k])
            value += trace_prod(Xv[d], Sv[d])
            for i in range(mc):
                value -= lam[i] * cv[i]
            for i in range(mc):
                st = _gradient_finite_core(
                    Av, Abv, Bv, Bbv, sigma2, Qv[1 + i], Rv[1 + i], Fv[1 + i],
                    d, N, Ap, Uv, Mv, dZv, dXv, dLv, dUv, dMv,
                    Tnm, Tnn, Tnn2, Tmm, Tmn, W, W2, Lf,
                )
                if st != C_OK:
                    status = CA_NOT_PD
                    break
                g[i] = -cv[i] + trace_prod(dXv[d], Sv[d])
                for k in range(d):
                    g[i] += trace_prod(Qv[1 + i], Sv[k])
                    g[i] -= trace_prod(dLv[d + k], Shv[k])
            if status == CA_NOT_PD:
                break
            trace_record(Tr, &tlen, &stride, itv - 1, lam, g, value)
            stop = True
            infeasible = False
            for i in range(mc):
                step = lam[i] + alpha * g[i]
                if step < 0.0:
                    step = 0.0
                lnew[i] = step
                diff = fabs(step - lam[i])
                if diff > tol:
                    stop = False
                if step > div_cap and g[i] > 0.0:
                    infeasible = True
            for i in range(mc):
                lam[i] = lnew[i]
            if stop:
                status = CA_OPTIMAL
                break
            if infeasible:
                status = CA_INFEASIBLE
                break

    return status, lam_arr, int(it), trace_rows[:tlen].copy()


def ascend_infinite(A, Ab, B, Bb, double sigma2, int d, Qs, Rs, c, x0, U, Xh,
                    lam0, double alpha, double tol, max_iter, double div_cap,
                    double fp_tol, fp_max_iter, double fp_cap, trace_cap):
    """Projected dual ascent, infinite horizon (see ``_kernels_py`` for semantics)."""
    A = _carr(A)
    Ab = _carr(Ab)
    B = _carr(B)
    Bb = _carr(Bb)
    cdef double[:, :, ::1] Qv = _carr(Qs)
    cdef double[:, :, ::1] Rv = _carr(Rs)
    cdef double[:] cv = _carr(c)
    cdef double[:] x0v = _carr(x0)
    cdef double[:, ::1] Uv2 = _carr(U)
    cdef double[:, ::1] Xhv = _carr(Xh)
    cdef int n = A.shape[0], m = B.shape[1], mc = len(c)
    lam_arr = np.asarray(lam0, dtype=float).copy()
    cdef double[:] lam = lam_arr
    g_arr = np.zeros(mc)
    cdef double[:] g = g_arr
    new_arr = np.zeros(mc)
    cdef double[:] lnew = new_arr

    Ql = np.zeros((n, n)); Rl = np.zeros((m, m))
    cdef double[:, ::1] Qlv = Ql, Rlv = Rl
    Z = np.zeros((n, n)); X = np.zeros((n, n)); L = np.zeros((n, n))
    Ups = np.zeros((m, m)); M = np.zeros((m, n))
    cdef double[:, ::1] Zv = Z, Xv = X, Lv = L, Uv = Ups, Mv = M
    dZ = np.zeros((n, n)); dX = np.zeros((n, n)); dL = np.zeros((n, n))
    dUps = np.zeros((m, m)); dM = np.zeros((m, n))
    cdef double[:, ::1] dZv = dZ, dXv = dX, dLv = dL, dUv = dUps, dMv = dM
    cdef double[:, :, ::1] Ap = _a_powers(A, d)
    cdef double[:, ::1] Zn = np.empty((n, n)), Xn = np.empty((n, n))
    cdef double[:, ::1] Tnm = np.empty((n, m)), Tnn = np.empty((n, n)), Tnn2 = np.empty((n, n))
    cdef double[:, ::1] Tmm = np.empty((m, m)), Tmn = np.empty((m, n)), W = np.empty((m, n))
    cdef double[:, ::1] W2 = np.empty((m, n)), Lf = np.empty((m, m))
    trace_rows = np.empty((int(trace_cap), 2 * mc + 2))
    cdef double[:, ::1] Tr = trace_rows
    cdef long tlen = 0, stride = 1, it = 0, mi = int(max_iter), fmi = int(fp_max_iter)
    cdef double[:, ::1] Av = A, Abv = Ab, Bv = B, Bbv = Bb
    cdef int i, k, st
    cdef long itv, fp_iters
    cdef double value, step, diff
    cdef int status = CA_ITER_LIMIT
    cdef bint stop, infeasible

    with nogil:
        for itv in range(1, mi + 1):
            it = itv
            copy_into(Qv[0], Qlv)
            copy_into(Rv[0], Rlv)
            for i in range(mc):
                for k in range(n * n):
                    Qlv[k // n, k % n] += lam[i] * Qv[1 + i, k // n, k % n]
                for k in range(m * m):
                    Rlv[k // m, k % m] += lam[i] * Rv[1 + i, k // m, k % m]
            st = _riccati_infinite_core(
                Av, Abv, Bv, Bbv, sigma2, Qlv, Rlv, d, fp_tol, fmi, fp_cap, Ap,
                Zv, Xv, Lv, Uv, Mv, Zn, Xn, Tnm, Tnn, Tnn2, Tmm, Tmn, W, Lf,
                &fp_iters,
            )
            if st == C_NOT_PD:
                status = CA_NOT_PD
                break
            if st == C_NOT_CONVERGED:
                status = CA_NOT_STABILIZABLE
                break
            value = quad_form(x0v, Zv, x0v)
            for i in range(mc):
                value -= lam[i] * cv[i]
            for k in range(d):
                value -= quad_form(Uv2[k], Rlv, Uv2[k])
                value += 2.0 * quad_form(Uv2[k], Mv, Xhv[k])
                value += quad_form(Xhv[k], Lv, Xhv[k])
                value += quad_form(Uv2[k], Uv, Uv2[k])
            for i in range(mc):
                st = _gradient_infinite_core(
                    Av, Abv, Bv, Bbv, sigma2, Qv[1 + i], Rv[1 + i], d,
                    fp_tol, fmi, Ap, Uv, Mv,
                    dZv, dXv, dLv, dUv, dMv, Zn, Xn,
                    Tnm, Tnn, Tnn2, Tmm, Tmn, W, W2, Lf, &fp_iters,
                )
                if st != C_OK:
                    status = CA_NOT_STABILIZABLE
                    break
                g[i] = quad_form(x0v, dZv, x0v) - cv[i]
                for k in range(d):
                    g[i] -= quad_form(Uv2[k], Rv[1 + i], Uv2[k])
                    g[i] += 2.0 * quad_form(Uv2[k], dMv, Xhv[k])
                    g[i] += quad_form(Xhv[k], dLv, Xhv[k])
                    g[i] += quad_form(Uv2[k], dUv, Uv2[k])
            if status == CA_NOT_STABILIZABLE:
                break
            trace_record(Tr, &tlen, &stride, itv - 1, lam, g, value)
            stop = True
            infeasible = False
            for i in range(mc):
                step = lam[i] + alpha * g[i]
                if step < 0.0:
                    step = 0.0
                lnew[i] = step
                diff = fabs(step - lam[i])
                if diff > tol:
                    stop = False
                if step > div_cap and g[i] > 0.0:
                    infeasible = True
            for i in range(mc):
                lam[i] = lnew[i]
            if stop:
                status = CA_OPTIMAL
                break
            if infeasible:
                status = CA_INFEASIBLE
                break

    return status, lam_arr, int(it), trace_rows[:tlen].copy()
