"""Pure-Python/numpy implementation of the micro-step loop.

Mirrors ``_ckernels.pyx`` operation for operation; used when the compiled
extension is unavailable or ``ALQG_PURE_PYTHON`` is set.
"""

import math

import numpy as np

# Layout of the ``acc`` scalar array shared with the compiled kernel.
ACC_R, ACC_COST_PREV, ACC_COST_INT, ACC_XSQ_PREV, ACC_XSQ_INT, ACC_MAX_NORM, ACC_STEPS = range(7)
ACC_LEN = 7

STATUS_OK, STATUS_BLOWUP, STATUS_NONFINITE = 0, 2, 3


def integrate_interval(x, theta, P, gram, acc, A, B, D, L, Q, R,
                       gamma, v, v_anchor, dw, dv, h, log_every, blowup_cap,
                       log_buf, adapt, symmetrize_every):
    """Advance the closed loop over ``len(dw)`` Euler-Maruyama micro-steps.

    ``x``, ``theta``, ``P``, ``gram``, ``acc``, ``v`` and ``log_buf`` are
    updated in place. Each logged row is ``[t, x, u, cost, running_avg, r]``
    taken at the pre-step time.

    Returns
    -------
    steps_done, rows_written, status : int
    """
    n = x.shape[0]
    m = v.shape[0]
    nsteps = dw.shape[0]
    rows = 0
    r = acc[ACC_R]
    cost_prev, cost_int = acc[ACC_COST_PREV], acc[ACC_COST_INT]
    xsq_prev, xsq_int = acc[ACC_XSQ_PREV], acc[ACC_XSQ_INT]
    max_norm = acc[ACC_MAX_NORM]
    steps = int(acc[ACC_STEPS])
    status = STATUS_OK
    done = 0
    phi = np.empty(n + m)
    for i in range(nsteps):
        u = L @ x + gamma * (v - v_anchor)
        cost = float(x @ Q @ x + u @ R @ u)
        xsq = float(x @ x)
        if steps > 0:
            cost_int += 0.5 * h * (cost_prev + cost)
            xsq_int += 0.5 * h * (xsq_prev + xsq)
        cost_prev, xsq_prev = cost, xsq
        if steps % log_every == 0:
            t = steps * h
            row = log_buf[rows]
            row[0] = t
            row[1:1 + n] = x
            row[1 + n:1 + n + m] = u
            row[1 + n + m] = cost
            row[2 + n + m] = cost_int / t if t > 0 else cost
            row[3 + n + m] = r
            rows += 1
        dx = (A @ x + B @ u) * h + D @ dw[i]
        if adapt:
            phi[:n] = x
            phi[n:] = u
            r += float(phi @ phi) * h
            a = 1.0 / math.log(max(r, math.e)) ** 2
            Pphi = P @ phi
            denom = 1.0 + a * h * float(phi @ Pphi)
            P -= (a * h / denom) * np.outer(Pphi, Pphi)
            innov = dx - (theta.T @ phi) * h
            theta += (a / denom) * np.outer(Pphi, innov)
            gram += np.outer(phi, phi) * h
        x += dx
        v += dv[i]
        steps += 1
        done += 1
        if adapt and steps % symmetrize_every == 0:
            P[:] = 0.5 * (P + P.T)
        nx = math.sqrt(float(x @ x))
        if not math.isfinite(nx):
            status = STATUS_NONFINITE
            break
        if nx > max_norm:
            max_norm = nx
        if nx > blowup_cap:
            status = STATUS_BLOWUP
            break
    acc[ACC_R] = r
    acc[ACC_COST_PREV], acc[ACC_COST_INT] = cost_prev, cost_int
    acc[ACC_XSQ_PREV], acc[ACC_XSQ_INT] = xsq_prev, xsq_int
    acc[ACC_MAX_NORM] = max_norm
    acc[ACC_STEPS] = steps
    return done, rows, status
