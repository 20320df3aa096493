# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: grid scan and dwell-switched simulation.

Mirrors _kernels_py exactly; the dispatcher in kernels.py picks whichever
imported.  Eigenvalues use closed forms for 1x1 and 2x2 blocks and a cyclic
Jacobi iteration up to MAX_COMPILED_N; larger blocks are routed to the numpy
fallback by the dispatcher before this module is called.
"""

from libc.math cimport sqrt, fabs

import numpy as np

BACKEND_NAME = "compiled"
MAX_COMPILED_N = 12


cdef double _sym_max_eig(double[:, ::1] a, int n):
    """Largest eigenvalue of symmetric a (destroyed)."""
    cdef double half_tr, half_gap, off, diag_norm, app, aqq, apq
    cdef double theta, t, c, s, tau, aip, aiq, best
    cdef int sweep, p, q, i
    if n == 1:
        return a[0, 0]
    if n == 2:
        half_tr = (a[0, 0] + a[1, 1]) / 2.0
        half_gap = (a[0, 0] - a[1, 1]) / 2.0
        return half_tr + sqrt(half_gap * half_gap + a[0, 1] * a[0, 1])
    for sweep in range(60):
        off = 0.0
        diag_norm = 0.0
        for p in range(n):
            diag_norm += fabs(a[p, p])
            for q in range(p + 1, n):
                off += fabs(a[p, q])
        if off == 0.0 or off <= 1e-14 * (diag_norm + off):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip = a[i, p]
                    aiq = a[i, q]
                    a[i, p] = aip - s * (aiq + tau * aip)
                    a[p, i] = a[i, p]
                    a[i, q] = aiq + s * (aip - tau * aiq)
                    a[q, i] = a[i, q]
    best = a[0, 0]
    for p in range(1, n):
        if a[p, p] > best:
            best = a[p, p]
    return best


def grid_worst(phi, int m):
    """Worst max eigenvalue of Phi(h) over the order-m simplex grid.

    Same contract as the numpy fallback: (worst_value, worst_counts,
    points_checked), counts enumerated in lexicographic order and ties kept at
    the first occurrence.
    """
    phi_arr = np.ascontiguousarray(phi, dtype=np.float64)
    cdef int r = phi_arr.shape[0]
    cdef int n = phi_arr.shape[2]
    if m < 1:
        raise ValueError(f"grid order m must be >= 1, got {m}")
    if r < 2:
        raise ValueError(f"need r >= 2, got {r}")
    if n > MAX_COMPILED_N:
        raise ValueError(f"compiled kernel handles n <= {MAX_COMPILED_N}, got {n}")

    cdef int npairs = r * (r - 1) // 2
    diag_arr = np.empty((r, n, n), dtype=np.float64)
    pairs_arr = np.empty((npairs, n, n), dtype=np.float64)
    pi_arr = np.empty(npairs, dtype=np.int64)
    pj_arr = np.empty(npairs, dtype=np.int64)
    cdef int i, j, idx = 0
    for i in range(r):
        diag_arr[i] = phi_arr[i, i]
        for j in range(i + 1, r):
            pairs_arr[idx] = phi_arr[i, j] + phi_arr[j, i]
            pi_arr[idx] = i
            pj_arr[idx] = j
            idx += 1

    cdef double[:, :, ::1] diag = diag_arr
    cdef double[:, :, ::1] pairs = pairs_arr
    cdef long[::1] pi = pi_arr
    cdef long[::1] pj = pj_arr

    k_arr = np.zeros(r, dtype=np.int64)
    k_arr[r - 1] = m
    cdef long[::1] k = k_arr
    h_arr = np.empty(r, dtype=np.float64)
    cdef double[::1] h = h_arr
    g_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] g = g_arr
    best_arr = np.empty(r, dtype=np.int64)
    cdef long[::1] best_k = best_arr

    cdef double best = -np.inf
    cdef double w, val
    cdef long npts = 0, v
    cdef int a, b, p, jj, done = 0

    while not done:
        for i in range(r):
            h[i] = <double> k[i] / <double> m
        for a in range(n):
            for b in range(n):
                g[a, b] = 0.0
        for i in range(r):
            w = h[i] * h[i]
            if w != 0.0:
                for a in range(n):
                    for b in range(n):
                        g[a, b] += w * diag[i, a, b]
        for p in range(npairs):
            w = h[pi[p]] * h[pj[p]]
            if w != 0.0:
                for a in range(n):
                    for b in range(n):
                        g[a, b] += w * pairs[p, a, b]
        val = _sym_max_eig(g, n)
        if val > best:
            best = val
            for i in range(r):
                best_k[i] = k[i]
        npts += 1
        # lexicographic odometer: zero the last nonzero tail entry, bump its
        # left neighbour, park the remainder at the end
        if k[0] == m:
            done = 1
        else:
            jj = r - 1
            while k[jj] == 0:
                jj -= 1
            v = k[jj]
            k[jj] = 0
            k[jj - 1] += 1
            k[r - 1] = v - 1
    return float(best), tuple(int(best_arr[i]) for i in range(r)), int(npts)


def simulate_dwell(A, B, K, schedule, x0, double dt, int steps):
    """Dwell-switched closed-loop integration, states at dwell boundaries.

    Classic fourth-order stepping; within one dwell the vector field is the
    fixed matrix M = A(h) + B(h) K(h), so this agrees with the fallback's
    Taylor step matrix to rounding.
    """
    A_arr = np.ascontiguousarray(A, dtype=np.float64)
    B_arr = np.ascontiguousarray(B, dtype=np.float64)
    K_arr = np.ascontiguousarray(K, dtype=np.float64)
    sched_arr = np.ascontiguousarray(schedule, dtype=np.float64)
    cdef int r = A_arr.shape[0]
    cdef int nx = A_arr.shape[1]
    cdef int nu = B_arr.shape[2]
    cdef int ndwell = sched_arr.shape[0]

    states_arr = np.empty((ndwell + 1, nx), dtype=np.float64)
    x_arr = np.asarray(x0, dtype=np.float64).reshape(nx).copy()

    cdef const double[:, :, ::1] Av = A_arr
    cdef const double[:, :, ::1] Bv = B_arr
    cdef const double[:, :, ::1] Kv = K_arr
    cdef const double[:, ::1] sched = sched_arr
    cdef double[:, ::1] states = states_arr
    cdef double[::1] x = x_arr

    M_arr = np.empty((nx, nx), dtype=np.float64)
    Bh_arr = np.empty((nx, nu), dtype=np.float64)
    Kh_arr = np.empty((nu, nx), dtype=np.float64)
    scratch_arr = np.empty((5, nx), dtype=np.float64)
    cdef double[:, ::1] M = M_arr
    cdef double[:, ::1] Bh = Bh_arr
    cdef double[:, ::1] Kh = Kh_arr
    cdef double[:, ::1] sc = scratch_arr

    cdef int d, s, i, a, b, u
    cdef double hw, acc

    for a in range(nx):
        states[0, a] = x[a]
    for d in range(ndwell):
        for a in range(nx):
            for b in range(nx):
                M[a, b] = 0.0
            for u in range(nu):
                Bh[a, u] = 0.0
        for u in range(nu):
            for b in range(nx):
                Kh[u, b] = 0.0
        for i in range(r):
            hw = sched[d, i]
            if hw == 0.0:
                continue
            for a in range(nx):
                for b in range(nx):
                    M[a, b] += hw * Av[i, a, b]
                for u in range(nu):
                    Bh[a, u] += hw * Bv[i, a, u]
            for u in range(nu):
                for b in range(nx):
                    Kh[u, b] += hw * Kv[i, u, b]
        for a in range(nx):
            for b in range(nx):
                acc = 0.0
                for u in range(nu):
                    acc += Bh[a, u] * Kh[u, b]
                M[a, b] += acc

        for s in range(steps):
            # sc rows: 0 k1, 1 k2, 2 k3, 3 k4, 4 staging vector
            for a in range(nx):
                acc = 0.0
                for b in range(nx):
                    acc += M[a, b] * x[b]
                sc[0, a] = acc
            for a in range(nx):
                sc[4, a] = x[a] + (dt / 2.0) * sc[0, a]
            for a in range(nx):
                acc = 0.0
                for b in range(nx):
                    acc += M[a, b] * sc[4, b]
                sc[1, a] = acc
            for a in range(nx):
                sc[4, a] = x[a] + (dt / 2.0) * sc[1, a]
            for a in range(nx):
                acc = 0.0
                for b in range(nx):
                    acc += M[a, b] * sc[4, b]
                sc[2, a] = acc
            for a in range(nx):
                sc[4, a] = x[a] + dt * sc[2, a]
            for a in range(nx):
                acc = 0.0
                for b in range(nx):
                    acc += M[a, b] * sc[4, b]
                sc[3, a] = acc
            for a in range(nx):
                x[a] = x[a] + (dt / 6.0) * (sc[0, a] + 2.0 * sc[1, a] + 2.0 * sc[2, a] + sc[3, a])
        for a in range(nx):
            states[d + 1, a] = x[a]
    return states_arr
