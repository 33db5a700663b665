"""Compiled fixed-step RK4 integration loop for the closed-loop platoon.

State vector layout (length 3 + 4N):

    y[0:3]            leader (p0, v0, a0), ideal linear lag model
    y[3     : 3+N]    follower positions
    y[3+N   : 3+2N]   follower velocities
    y[3+2N  : 3+3N]   follower engine torques
    y[3+3N  : 3+4N]   follower spacing-error integrals

Follower acceleration is algebraic in (v, T) and the environment.  The
environment (slope, wind, input bias, leader input) is sampled once per
outer step and held through the four RK4 stages, so disturbance steps land
between integration steps and never inside one.

``mode`` 0 integrates the nonlinear plant with the linearizing torque law;
``mode`` 1 integrates the linear third-order follower model (the torque slot
then holds the acceleration state and slope/wind are ignored; disturbances
enter through the input bias only).

The formulas here mirror platoonkit.dynamics; the unit tests cross-check the
two implementations against each other.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_BLOWUP = 1

BLOWUP_LIMIT = 1.0e9


@njit(cache=True)
def _sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True)
def _derivative(
    y, dy, n, mode,
    adjacency, pin, nvec, const_p,
    ks, kp, kv, ka,
    m, eta, wr, rho, cd, g, mu, tau,
    mh, etah, wrh, rhoh, cdh, gh, muh, tauh,
    theta, vw, psi, u0,
    a_out, u_out,
):
    p0, v0, a0 = y[0], y[1], y[2]
    dy[0] = v0
    dy[1] = a0
    dy[2] = (u0 - a0) / tau

    p = y[3 : 3 + n]
    v = y[3 + n : 3 + 2 * n]
    tq = y[3 + 2 * n : 3 + 3 * n]
    s = y[3 + 3 * n : 3 + 4 * n]

    # algebraic acceleration of each follower
    for i in range(n):
        if mode == 0:
            vb = v[i] + vw[i]
            drive = eta / wr * tq[i]
            drag = 0.5 * rho * cd * vb * abs(vb)
            grade = m * g * np.sin(theta[i])
            roll = m * g * mu * np.cos(theta[i]) * _sgn(vb)
            a_out[i] = (drive - drag - grade - roll) / m
        else:
            a_out[i] = tq[i]

    for i in range(n):
        sp = nvec[i] * p[i] - pin[i] * p0 + const_p[i]
        sv = nvec[i] * v[i] - pin[i] * v0
        sa = nvec[i] * a_out[i] - pin[i] * a0
        for j in range(n):
            if adjacency[i, j] != 0.0:
                sp -= p[j]
                sv -= v[j]
                sa -= a_out[j]
        u = -(ks * s[i] + kp * sp + kv * sv + ka * sa) + psi[i]
        u_out[i] = u

        dy[3 + i] = v[i]
        dy[3 + n + i] = a_out[i]
        dy[3 + 3 * n + i] = sp
        if mode == 0:
            # linearizing torque with the controller's estimates; the
            # controller assumes a disturbance-free environment
            vbh = v[i]
            dragh = 0.5 * rhoh * cdh * (vbh * abs(vbh) + 2.0 * tauh * a_out[i] * abs(vbh))
            rollh = mh * gh * muh * _sgn(vbh)
            torque_cmd = wrh / etah * (dragh + rollh + mh * u)
            dy[3 + 2 * n + i] = (torque_cmd - tq[i]) / tau
        else:
            dy[3 + 2 * n + i] = (u - tq[i]) / tau


@njit(cache=True)
def run_kernel(
    y0, n, mode, dt, n_steps, record_stride,
    adjacency, pin, nvec, const_p,
    ks, kp, kv, ka,
    params_true, params_hat,
    pulse_mag, pulse_t0, pulse_t1,
    slope_angle, slope_trigger, slope_per_vehicle,
    wind_speed, wind_t0,
    psi_mag, psi_t0,
):
    m, eta, wr, rho, cd, g, mu, tau = params_true
    mh, etah, wrh, rhoh, cdh, gh, muh, tauh = params_hat

    n_rec = n_steps // record_stride + 1
    times = np.empty(n_rec)
    rec_p = np.empty((n_rec, n + 1))
    rec_v = np.empty((n_rec, n + 1))
    rec_a = np.empty((n_rec, n + 1))
    rec_u = np.empty((n_rec, n + 1))
    rec_t = np.empty((n_rec, n + 1))

    y = y0.copy()
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    ytmp = np.empty_like(y)
    theta = np.empty(n)
    vw = np.empty(n)
    psi = np.empty(n)
    a_buf = np.empty(n)
    u_buf = np.empty(n)

    rec = 0
    status = STATUS_OK
    t_fail = 0.0

    for step in range(n_steps + 1):
        t = step * dt

        # environment held constant across the RK4 stages of this step
        # half-open pulse window keeps the applied impulse independent of dt
        u0 = pulse_mag if (pulse_t0 <= t < pulse_t1) else 0.0
        wind_now = wind_speed if t >= wind_t0 else 0.0
        for i in range(n):
            vw[i] = wind_now
            if slope_per_vehicle == 1:
                on = y[3 + i] >= slope_trigger
            else:
                on = y[0] >= slope_trigger
            theta[i] = slope_angle if on else 0.0
            psi[i] = psi_mag[i] if t >= psi_t0[i] else 0.0

        _derivative(y, k1, n, mode, adjacency, pin, nvec, const_p,
                    ks, kp, kv, ka,
                    m, eta, wr, rho, cd, g, mu, tau,
                    mh, etah, wrh, rhoh, cdh, gh, muh, tauh,
                    theta, vw, psi, u0, a_buf, u_buf)

        if step % record_stride == 0:
            times[rec] = t
            rec_p[rec, 0] = y[0]
            rec_v[rec, 0] = y[1]
            rec_a[rec, 0] = y[2]
            rec_u[rec, 0] = u0
            rec_t[rec, 0] = 0.0
            for i in range(n):
                rec_p[rec, i + 1] = y[3 + i]
                rec_v[rec, i + 1] = y[3 + n + i]
                rec_a[rec, i + 1] = a_buf[i]
                rec_u[rec, i + 1] = u_buf[i]
                rec_t[rec, i + 1] = y[3 + 2 * n + i]
            rec += 1

        if step == n_steps:
            break

        for idx in range(y.shape[0]):
            ytmp[idx] = y[idx] + 0.5 * dt * k1[idx]
        _derivative(ytmp, k2, n, mode, adjacency, pin, nvec, const_p,
                    ks, kp, kv, ka,
                    m, eta, wr, rho, cd, g, mu, tau,
                    mh, etah, wrh, rhoh, cdh, gh, muh, tauh,
                    theta, vw, psi, u0, a_buf, u_buf)
        for idx in range(y.shape[0]):
            ytmp[idx] = y[idx] + 0.5 * dt * k2[idx]
        _derivative(ytmp, k3, n, mode, adjacency, pin, nvec, const_p,
                    ks, kp, kv, ka,
                    m, eta, wr, rho, cd, g, mu, tau,
                    mh, etah, wrh, rhoh, cdh, gh, muh, tauh,
                    theta, vw, psi, u0, a_buf, u_buf)
        for idx in range(y.shape[0]):
            ytmp[idx] = y[idx] + dt * k3[idx]
        _derivative(ytmp, k4, n, mode, adjacency, pin, nvec, const_p,
                    ks, kp, kv, ka,
                    m, eta, wr, rho, cd, g, mu, tau,
                    mh, etah, wrh, rhoh, cdh, gh, muh, tauh,
                    theta, vw, psi, u0, a_buf, u_buf)
        for idx in range(y.shape[0]):
            y[idx] = y[idx] + dt / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx])

        bad = False
        for idx in range(y.shape[0]):
            if not np.isfinite(y[idx]) or abs(y[idx]) > BLOWUP_LIMIT:
                bad = True
        if bad:
            status = STATUS_BLOWUP
            t_fail = t + dt
            return times[:rec], rec_p[:rec], rec_v[:rec], rec_a[:rec], rec_u[:rec], rec_t[:rec], status, t_fail

    return times[:rec], rec_p[:rec], rec_v[:rec], rec_a[:rec], rec_u[:rec], rec_t[:rec], status, t_fail
