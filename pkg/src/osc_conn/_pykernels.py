"""Pure numpy fallback for the compiled oscillator advancer.

Same contract as ``_ckernels.advance``; rows are vectorized instead of looped.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def _rhs(th, om, k, v, active, amp, tau_rise, tau_leak):
    cs = np.cos(th)
    sn = np.sin(th)
    n = th.shape[1]
    zc = cs.sum(axis=1) / n
    zs = sn.sum(axis=1) / n
    dth = om + k[:, None] * (zs[:, None] * cs - zc[:, None] * sn)
    if not active:
        return dth, np.zeros_like(v)
    drive = np.maximum(np.abs(amp * zc) - v, 0.0)
    return dth, drive / tau_rise - v / tau_leak


def _wrap(th):
    th = np.mod(th, TWO_PI)
    th[th >= TWO_PI] = 0.0
    return th


def advance(theta, omega, coupling, vpd, dt, step0, nsteps, n_del,
            amplitude, tau_rise, tau_leak, threads=1):
    bad = np.full(theta.shape[0], -1, dtype=np.int64)
    if theta.shape[0] == 0 or nsteps <= 0:
        return bad
    th = theta.copy()
    v = vpd.copy()
    k = np.asarray(coupling, dtype=float)
    h2 = 0.5 * dt
    h6 = dt / 6.0
    live = np.ones(theta.shape[0], dtype=bool)
    for s in range(nsteps):
        step = step0 + s
        active = step >= n_del
        k1, d1 = _rhs(th, omega, k, v, active, amplitude, tau_rise, tau_leak)
        k2, d2 = _rhs(th + h2 * k1, omega, k, v + h2 * d1, active, amplitude, tau_rise, tau_leak)
        k3, d3 = _rhs(th + h2 * k2, omega, k, v + h2 * d2, active, amplitude, tau_rise, tau_leak)
        k4, d4 = _rhs(th + dt * k3, omega, k, v + dt * d3, active, amplitude, tau_rise, tau_leak)
        new_th = th + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        finite = np.all(np.isfinite(new_th), axis=1)
        newly_bad = live & ~finite
        bad[newly_bad] = step
        live &= finite
        th[live] = _wrap(new_th[live])
        if step + 1 <= n_del:
            v[live] = 0.0
        else:
            nv = v + h6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
            v[live] = np.maximum(nv[live], 0.0)
        if not live.any():
            break
    theta[...] = th
    vpd[...] = v
    return bad
