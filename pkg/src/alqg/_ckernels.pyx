# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled micro-step loop; see ``_pykernels.integrate_interval`` for the contract."""

import numpy as np
from libc.math cimport log, sqrt, isfinite

cdef enum:
    ACC_R = 0
    ACC_COST_PREV = 1
    ACC_COST_INT = 2
    ACC_XSQ_PREV = 3
    ACC_XSQ_INT = 4
    ACC_MAX_NORM = 5
    ACC_STEPS = 6

cdef double E_CONST = 2.718281828459045


def integrate_interval(double[::1] x, double[:, ::1] theta, double[:, ::1] P,
                       double[:, ::1] gram, double[::1] acc,
                       const double[:, ::1] A, const double[:, ::1] B,
                       const double[:, ::1] D, const double[:, ::1] L,
                       const double[:, ::1] Q, const double[:, ::1] R,
                       double gamma, double[::1] v, const double[::1] v_anchor,
                       const double[:, ::1] dw, const double[:, ::1] dv,
                       double h, long log_every, double blowup_cap,
                       double[:, ::1] log_buf, bint adapt, long symmetrize_every):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = v.shape[0]
    cdef Py_ssize_t p = dw.shape[1]
    cdef Py_ssize_t N = n + m
    cdef Py_ssize_t nsteps = dw.shape[0]
    cdef Py_ssize_t i, j, l, rows = 0, done = 0
    cdef double r = acc[ACC_R]
    cdef double cost_prev = acc[ACC_COST_PREV], cost_int = acc[ACC_COST_INT]
    cdef double xsq_prev = acc[ACC_XSQ_PREV], xsq_int = acc[ACC_XSQ_INT]
    cdef double max_norm = acc[ACC_MAX_NORM]
    cdef long steps = <long>acc[ACC_STEPS]
    cdef int status = 0
    cdef double cost, xsq, t, s, a, denom, pp, c, nx, tmp

    u_arr = np.empty(m)
    phi_arr = np.empty(N)
    pphi_arr = np.empty(N)
    dx_arr = np.empty(n)
    innov_arr = np.empty(n)
    cdef double[::1] u = u_arr
    cdef double[::1] phi = phi_arr
    cdef double[::1] Pphi = pphi_arr
    cdef double[::1] dx = dx_arr
    cdef double[::1] innov = innov_arr

    for i in range(nsteps):
        for j in range(m):
            s = 0.0
            for l in range(n):
                s += L[j, l] * x[l]
            u[j] = s + gamma * (v[j] - v_anchor[j])
        cost = 0.0
        for j in range(n):
            s = 0.0
            for l in range(n):
                s += Q[j, l] * x[l]
            cost += x[j] * s
        tmp = 0.0
        for j in range(m):
            s = 0.0
            for l in range(m):
                s += R[j, l] * u[l]
            tmp += u[j] * s
        cost += tmp
        xsq = 0.0
        for j in range(n):
            xsq += x[j] * x[j]
        if steps > 0:
            cost_int += 0.5 * h * (cost_prev + cost)
            xsq_int += 0.5 * h * (xsq_prev + xsq)
        cost_prev = cost
        xsq_prev = xsq
        if steps % log_every == 0:
            t = steps * h
            log_buf[rows, 0] = t
            for j in range(n):
                log_buf[rows, 1 + j] = x[j]
            for j in range(m):
                log_buf[rows, 1 + n + j] = u[j]
            log_buf[rows, 1 + n + m] = cost
            log_buf[rows, 2 + n + m] = cost_int / t if t > 0 else cost
            log_buf[rows, 3 + n + m] = r
            rows += 1
        for j in range(n):
            s = 0.0
            for l in range(n):
                s += A[j, l] * x[l]
            for l in range(m):
                s += B[j, l] * u[l]
            tmp = 0.0
            for l in range(p):
                tmp += D[j, l] * dw[i, l]
            dx[j] = s * h + tmp
        if adapt:
            for j in range(n):
                phi[j] = x[j]
            for j in range(m):
                phi[n + j] = u[j]
            s = 0.0
            for j in range(N):
                s += phi[j] * phi[j]
            r += s * h
            tmp = log(r if r > E_CONST else E_CONST)
            a = 1.0 / (tmp * tmp)
            pp = 0.0
            for j in range(N):
                s = 0.0
                for l in range(N):
                    s += P[j, l] * phi[l]
                Pphi[j] = s
                pp += phi[j] * s
            denom = 1.0 + a * h * pp
            c = a * h / denom
            for j in range(N):
                for l in range(N):
                    P[j, l] -= c * Pphi[j] * Pphi[l]
            for l in range(n):
                s = 0.0
                for j in range(N):
                    s += theta[j, l] * phi[j]
                innov[l] = dx[l] - s * h
            c = a / denom
            for j in range(N):
                for l in range(n):
                    theta[j, l] += c * Pphi[j] * innov[l]
            for j in range(N):
                for l in range(N):
                    gram[j, l] += phi[j] * phi[l] * h
        for j in range(n):
            x[j] += dx[j]
        for j in range(m):
            v[j] += dv[i, j]
        steps += 1
        done += 1
        if adapt and steps % symmetrize_every == 0:
            for j in range(N):
                for l in range(j + 1, N):
                    tmp = 0.5 * (P[j, l] + P[l, j])
                    P[j, l] = tmp
                    P[l, j] = tmp
        nx = 0.0
        for j in range(n):
            nx += x[j] * x[j]
        nx = sqrt(nx)
        if not isfinite(nx):
            status = 3
            break
        if nx > max_norm:
            max_norm = nx
        if nx > blowup_cap:
            status = 2
            break

    acc[ACC_R] = r
    acc[ACC_COST_PREV] = cost_prev
    acc[ACC_COST_INT] = cost_int
    acc[ACC_XSQ_PREV] = xsq_prev
    acc[ACC_XSQ_INT] = xsq_int
    acc[ACC_MAX_NORM] = max_norm
    acc[ACC_STEPS] = steps
    return done, rows, status
