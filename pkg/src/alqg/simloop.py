"""Closed-loop simulation of the adaptive controller.

One run is sequential: at each integer time the regularizer and controller
are refreshed, then the compiled (or fallback) kernel integrates the next
unit interval with Euler-Maruyama while feeding the estimator.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import controller, kernels, regularize
from .riccati import CareProblem, solve_care
from .stabcheck import f_objective, pbh_detectable, pbh_stabilizable, q_sqrt, split_theta
from .subspace import build_decomposition, masked_estimate, strong_block_lambda_min
from .wls import SYMMETRIZE_EVERY, weight
from .wls import init as wls_init

log = logging.getLogger(__name__)

STREAM_W, STREAM_V, STREAM_ETA = 0, 1, 2
FIXED_METRICS = ["cost_integrand", "running_avg_cost", "theta_err_full", "theta_err_masked", "r", "log_f"]


class SimulationError(RuntimeError):
    pass


def stream(seed, tag):
    """Independent generator for one noise source; ``tag`` separates w, v and eta."""
    return np.random.default_rng([int(seed), int(tag)])


def trajectory_columns(n, m):
    return ["t"] + [f"x_{i}" for i in range(n)] + [f"u_{j}" for j in range(m)] + FIXED_METRICS


@dataclass
class RunRecord:
    columns: list
    series: np.ndarray
    intervals: dict
    events: list
    checkpoints: dict
    gram_snapshots: dict
    summary: dict
    theta_hat: np.ndarray
    noise: np.ndarray = None
    noise_columns: list = field(default_factory=list)

    @property
    def status(self):
        return self.summary["status"]

    def column(self, name):
        return self.series[:, self.columns.index(name)]


def _is_checkpoint(k):
    return k >= 1 and (k & (k - 1)) == 0


def _run(model, cfg, adaptive, backend=None):
    kernel = kernels.get_kernel(backend)
    n, m, p = model.n, model.m, model.p
    N = n + m
    h = cfg.h
    S = cfg.steps_per_unit
    total = cfg.total_steps
    K = math.ceil(total / S)
    log_every = int(cfg.decimation)
    Q = np.ascontiguousarray(model.Q)
    R = np.ascontiguousarray(model.R)
    Qh = q_sqrt(Q)
    A = np.ascontiguousarray(model.A)
    B = np.ascontiguousarray(model.B)
    D = np.ascontiguousarray(model.D)
    theta_true = model.theta

    rng_w = stream(cfg.seed_w, STREAM_W)
    rng_v = stream(cfg.seed_v, STREAM_V)
    rng_eta = stream(cfg.seed_eta, STREAM_ETA)

    x = np.array(model.x0, dtype=float)
    v = np.zeros(m)
    acc = np.zeros(kernels.ACC_LEN)
    dec = build_decomposition(A, B, D, cfg.rank_tol)
    masked_true = masked_estimate(theta_true, dec)

    if adaptive:
        theta0 = cfg.theta0()
        est = wls_init(theta0, n, m, Q)
        theta = np.ascontiguousarray(est.theta)
        P = np.ascontiguousarray(est.P)
        gram = np.ascontiguousarray(est.gram_unweighted)
        acc[kernels.ACC_R] = est.r
        reg = regularize.init(theta0, cfg.gamma_reg, rng_eta)
        ctrl = controller.refresh(theta0, Q, R, controller.initial_state(n, m), 0,
                                  v_anchor=v, exponent=cfg.excitation_exponent, tol=cfg.care_tol)
        if ctrl.fallback:
            raise SimulationError("no stabilizing gain for the initial estimate")
        log_f0 = f_objective(theta0, Qh).log_value
    else:
        theta = np.ascontiguousarray(theta_true.copy())
        P = np.eye(N)
        gram = np.zeros((N, N))
        acc[kernels.ACC_R] = 1.0
        sol = solve_care(CareProblem(A, B, Q, R), cfg.care_tol)
        ctrl = controller.ControllerState(sol.L, sol.X, 0, 0.0, v.copy(), A + B @ sol.L)
        log_f0 = np.nan

    n_rows_max = total // log_every + 2
    log_buf = np.zeros((n_rows_max, 4 + n + m))
    rows_total = 0
    row_interval = np.zeros(n_rows_max, dtype=np.int64)
    noise_rows = [] if cfg.noise_probe else None
    w_path = np.zeros(p)

    iv = {name: np.full(K, np.nan) for name in (
        "log_f", "theta_err_full", "theta_err_masked", "lambda_min_strong", "gamma_k")}
    for name in ("switched", "degenerate", "fallback", "stabilizable", "detectable"):
        iv[name] = np.zeros(K, dtype=bool)
    iv["k"] = np.arange(K)
    theta_hist = np.zeros((K, N, n))
    theta_wls = np.zeros((K, N, n))
    gains = np.zeros((K, m, n))
    events = []
    checkpoints = {}
    snapshots = {}
    snapshot_ks = set(int(k) for k in cfg.gram_checkpoints)
    status = kernels.STATUS_OK
    sqrt_h = math.sqrt(h)
    completed = 0

    for k in range(K):
        if adaptive:
            if k == 0:
                theta_hat = reg.theta_hat
                log_f = log_f0
            else:
                reg, info = regularize.regularize_step(reg, theta, P, Qh, k)
                theta_hat = reg.theta_hat
                log_f = reg.log_f_current
                if info.switched:
                    events.append((k, "beta_switch", info.log_f_prev, info.log_f_eta))
                if info.degenerate:
                    events.append((k, "degenerate", info.log_f_prev, info.log_f_eta))
                    ctrl = controller.ControllerState(
                        ctrl.L, ctrl.X, k, controller.excitation_gain(k, cfg.excitation_exponent),
                        v.copy(), ctrl.closed_loop, True)
                else:
                    ctrl = controller.refresh(theta_hat, Q, R, ctrl, k, v_anchor=v,
                                              exponent=cfg.excitation_exponent, tol=cfg.care_tol)
                if ctrl.fallback:
                    events.append((k, "fallback", log_f, log_f))
                else:
                    events.append((k, "gain_refresh", log_f, log_f))
            Ah, Bh = split_theta(theta_hat, n)
            iv["stabilizable"][k] = pbh_stabilizable(Ah, Bh)
            iv["detectable"][k] = pbh_detectable(Ah, Qh)
            iv["switched"][k] = k > 0 and reg.switched
            iv["degenerate"][k] = k > 0 and reg.degenerate
            iv["fallback"][k] = ctrl.fallback
            iv["log_f"][k] = log_f
            iv["theta_err_full"][k] = np.linalg.norm(theta_hat - theta_true, 2)
            iv["theta_err_masked"][k] = np.linalg.norm(masked_estimate(theta_hat, dec) - masked_true, 2)
            if k > 0:
                iv["lambda_min_strong"][k] = strong_block_lambda_min(gram, dec)
            theta_hist[k] = theta_hat
            theta_wls[k] = theta
        else:
            theta_hist[k] = theta_true
        iv["gamma_k"][k] = ctrl.gamma_k
        gains[k] = ctrl.L

        steps_k = min(S, total - k * S)
        dw = rng_w.standard_normal((steps_k, p)) * sqrt_h
        dv = rng_v.standard_normal((steps_k, m)) * sqrt_h
        step0 = int(acc[kernels.ACC_STEPS])
        done, rows, status = kernel(
            x, theta, P, gram, acc, A, B, D, np.ascontiguousarray(ctrl.L), Q, R,
            float(ctrl.gamma_k), v, np.ascontiguousarray(ctrl.v_anchor, dtype=float),
            dw, dv, h, log_every, float(cfg.blowup_cap),
            log_buf[rows_total:], bool(adaptive), SYMMETRIZE_EVERY,
        )
        row_interval[rows_total:rows_total + rows] = k
        if noise_rows is not None:
            cum = np.vstack([np.zeros((1, p)), np.cumsum(dw[:done], axis=0)]) + w_path
            cumv = np.vstack([np.zeros((1, m)), np.cumsum(dv[:done], axis=0)])
            v_start = v - cumv[-1]
            for j in range(done):
                if (step0 + j) % log_every == 0:
                    noise_rows.append(np.concatenate([[(step0 + j) * h], cum[j], v_start + cumv[j]]))
            w_path = cum[done]
        rows_total += rows
        if status != kernels.STATUS_OK:
            log.warning("run aborted in interval %d (status %d)", k, status)
            events.append((k, "abort", np.nan, np.nan))
            break
        completed = k + 1
        T_here = (k * S + done) * h
        if _is_checkpoint(k + 1) or k + 1 == K:
            closing = 0.5 * h * (acc[kernels.ACC_XSQ_PREV] + float(x @ x))
            checkpoints[T_here] = (acc[kernels.ACC_XSQ_INT] + closing) / T_here
        if adaptive and (k + 1) in snapshot_ks:
            snapshots[k + 1] = gram.copy()

    if adaptive:
        snapshots.setdefault(completed, gram.copy())

    # terminal point: close the last trapezoid and log t = T when due
    steps = int(acc[kernels.ACC_STEPS])
    t_end = steps * h
    if status == kernels.STATUS_OK:
        u_end = controller.control(ctrl, x, v)
        c_end = float(x @ Q @ x + u_end @ R @ u_end)
        acc[kernels.ACC_COST_INT] += 0.5 * h * (acc[kernels.ACC_COST_PREV] + c_end)
        acc[kernels.ACC_XSQ_INT] += 0.5 * h * (acc[kernels.ACC_XSQ_PREV] + float(x @ x))
        if steps % log_every == 0:
            row = log_buf[rows_total]
            row[0] = t_end
            row[1:1 + n] = x
            row[1 + n:1 + n + m] = u_end
            row[1 + n + m] = c_end
            row[2 + n + m] = acc[kernels.ACC_COST_INT] / t_end
            row[3 + n + m] = acc[kernels.ACC_R]
            row_interval[rows_total] = K - 1
            rows_total += 1
            if noise_rows is not None:
                noise_rows.append(np.concatenate([[t_end], w_path, v]))

    ri = row_interval[:rows_total]
    series = np.column_stack([
        log_buf[:rows_total, :3 + n + m],
        iv["theta_err_full"][ri],
        iv["theta_err_masked"][ri],
        log_buf[:rows_total, 3 + n + m],
        iv["log_f"][ri],
    ])

    J_star = float(np.trace(D.T @ solve_care(CareProblem(A, B, Q, R), cfg.care_tol).X @ D))
    ok = status == kernels.STATUS_OK
    last = max(completed - 1, 0)
    summary = {
        "mode": "adaptive" if adaptive else "oracle",
        "status": {kernels.STATUS_OK: "ok", kernels.STATUS_BLOWUP: "blowup",
                   kernels.STATUS_NONFINITE: "nonfinite"}[status],
        "T": t_end,
        "J_hat": float(acc[kernels.ACC_COST_INT] / t_end) if ok and t_end > 0 else None,
        "J_star": J_star,
        "theta_err_full": _num(iv["theta_err_full"][last]),
        "theta_err_masked": _num(iv["theta_err_masked"][last]),
        "stability_stat": None,
        "beta_switches": int(iv["switched"].sum()),
        "fallback_intervals": int(iv["fallback"].sum()),
        "max_norm_x": float(acc[kernels.ACC_MAX_NORM]),
        "mean_sq_x": float(acc[kernels.ACC_XSQ_INT] / t_end) if t_end > 0 else 0.0,
        "r_final": float(acc[kernels.ACC_R]),
        "a_final": float(weight(acc[kernels.ACC_R])),
        "n1": int(dec.n1),
        "seeds": {"seed_w": int(cfg.seed_w), "seed_v": int(cfg.seed_v), "seed_eta": int(cfg.seed_eta)},
        "config_hash": cfg.config_hash(),
        "backend": kernels.BACKEND if backend is None else backend,
    }
    iv["gain"] = gains
    iv["theta_wls"] = theta_wls
    rec = RunRecord(
        columns=trajectory_columns(n, m),
        series=series,
        intervals=iv,
        events=events,
        checkpoints=checkpoints,
        gram_snapshots=snapshots,
        summary=summary,
        theta_hat=theta_hist,
    )
    if noise_rows is not None:
        rec.noise = np.array(noise_rows).reshape(-1, 1 + p + m)
        rec.noise_columns = ["t"] + [f"w_{i}" for i in range(p)] + [f"v_{j}" for j in range(m)]
    summary["stability_stat"] = _num(stability_statistic(rec))
    return rec


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else None


def simulate(model, cfg, backend=None):
    """Run the adaptive controller on ``model`` for ``cfg.T`` time units."""
    return _run(model, cfg, adaptive=True, backend=backend)


def run_oracle(model, cfg, backend=None):
    """Same integration with the true optimal gain and no excitation."""
    return _run(model, cfg, adaptive=False, backend=backend)


def stability_statistic(rec):
    """Largest time-average of ``|x|^2`` over the dyadic checkpoints; ``inf`` for aborted runs."""
    if rec.summary["status"] != "ok":
        return math.inf
    if not rec.checkpoints:
        return 0.0
    return float(max(rec.checkpoints.values()))
