"""Compiled scalar cores and chunked time-stepping loops.

Everything numerical that must agree bitwise between the public step
functions, single-trajectory runs and network runs lives here, written
once as scalar helpers and reused by every loop. No fastmath: results
must be reproducible bit for bit across runs and chunk boundaries.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 6.283185307179586


@njit(cache=True, nogil=True)
def rhs_core(mx, my, mz, hx, hy, hz, px, py, pz, alpha, gamma, beta_eps):
    """Explicit form of the damped precession equation with spin torque.

    dm/dt = [ -g m x h - a g m x (m x h)
              + g be m x (p x m) + a g be (m x p) ] / (1 + a^2)

    Every term is a cross product with m, so the result is orthogonal to
    m up to rounding. beta_eps is the spin-torque field amplitude
    (tesla), already multiplied by the polarization efficiency.
    """
    pre = gamma / (1.0 + alpha * alpha)

    # m x h
    cx = my * hz - mz * hy
    cy = mz * hx - mx * hz
    cz = mx * hy - my * hx

    # m x (m x h)
    dx = my * cz - mz * cy
    dy = mz * cx - mx * cz
    dz = mx * cy - my * cx

    # p x m
    ex = py * mz - pz * my
    ey = pz * mx - px * mz
    ez = px * my - py * mx

    # m x (p x m)
    sx = my * ez - mz * ey
    sy = mz * ex - mx * ez
    sz = mx * ey - my * ex

    # m x p
    fx = my * pz - mz * py
    fy = mz * px - mx * pz
    fz = mx * py - my * px

    ox = pre * (-cx - alpha * dx + beta_eps * sx + alpha * beta_eps * fx)
    oy = pre * (-cy - alpha * dy + beta_eps * sy + alpha * beta_eps * fy)
    oz = pre * (-cz - alpha * dz + beta_eps * sz + alpha * beta_eps * fz)
    return ox, oy, oz


@njit(cache=True, nogil=True)
def field_core(mx, my, mz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz):
    """h_ext + K1 m + K2 m with K1, K2 stored as tensor diagonals [T]."""
    fx = hx + k1x * mx + k2x * mx
    fy = hy + k1y * my + k2y * my
    fz = hz + k1z * mz + k2z * mz
    return fx, fy, fz


@njit(cache=True, nogil=True)
def normalize_core(mx, my, mz):
    n = math.sqrt(mx * mx + my * my + mz * mz)
    if n == 0.0:
        # poison the state so the caller's finite check reports the step
        return np.nan, np.nan, np.nan
    return mx / n, my / n, mz / n


@njit(cache=True, nogil=True)
def heun_core(mx, my, mz,
              k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz,
              px, py, pz, alpha, gamma, beta_eps,
              bx, by, bz, dt, renorm):
    """One stochastic Heun step.

    The thermal field sample (bx, by, bz) is added to the deterministic
    field and held fixed for both the predictor and the corrector, which
    makes the scheme consistent with the Stratonovich interpretation.
    """
    fx, fy, fz = field_core(mx, my, mz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    ax, ay, az = rhs_core(mx, my, mz, fx + bx, fy + by, fz + bz,
                          px, py, pz, alpha, gamma, beta_eps)
    qx = mx + dt * ax
    qy = my + dt * ay
    qz = mz + dt * az
    fx, fy, fz = field_core(qx, qy, qz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    cx, cy, cz = rhs_core(qx, qy, qz, fx + bx, fy + by, fz + bz,
                          px, py, pz, alpha, gamma, beta_eps)
    nx = mx + 0.5 * dt * (ax + cx)
    ny = my + 0.5 * dt * (ay + cy)
    nz = mz + 0.5 * dt * (az + cz)
    if renorm:
        nx, ny, nz = normalize_core(nx, ny, nz)
    return nx, ny, nz


@njit(cache=True, nogil=True)
def rk4_core(mx, my, mz,
             k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz,
             px, py, pz, alpha, gamma, beta_eps, dt, renorm):
    """One classical 4th-order step (deterministic only)."""
    fx, fy, fz = field_core(mx, my, mz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    ax, ay, az = rhs_core(mx, my, mz, fx, fy, fz, px, py, pz, alpha, gamma, beta_eps)

    qx = mx + 0.5 * dt * ax
    qy = my + 0.5 * dt * ay
    qz = mz + 0.5 * dt * az
    fx, fy, fz = field_core(qx, qy, qz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    bx, by, bz = rhs_core(qx, qy, qz, fx, fy, fz, px, py, pz, alpha, gamma, beta_eps)

    qx = mx + 0.5 * dt * bx
    qy = my + 0.5 * dt * by
    qz = mz + 0.5 * dt * bz
    fx, fy, fz = field_core(qx, qy, qz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    cx, cy, cz = rhs_core(qx, qy, qz, fx, fy, fz, px, py, pz, alpha, gamma, beta_eps)

    qx = mx + dt * cx
    qy = my + dt * cy
    qz = mz + dt * cz
    fx, fy, fz = field_core(qx, qy, qz, k1x, k1y, k1z, k2x, k2y, k2z, hx, hy, hz)
    dx, dy, dz = rhs_core(qx, qy, qz, fx, fy, fz, px, py, pz, alpha, gamma, beta_eps)

    nx = mx + dt / 6.0 * (ax + 2.0 * bx + 2.0 * cx + dx)
    ny = my + dt / 6.0 * (ay + 2.0 * by + 2.0 * cy + dy)
    nz = mz + dt / 6.0 * (az + 2.0 * bz + 2.0 * cz + dz)
    if renorm:
        nx, ny, nz = normalize_core(nx, ny, nz)
    return nx, ny, nz


@njit(cache=True, nogil=True)
def resistance_core(mdotp, r_av, dr_half):
    return r_av - dr_half * mdotp


@njit(cache=True, nogil=True)
def highpass_core(x_prev, y_prev, x, a):
    """y[n] = a * (y[n-1] + x[n] - x[n-1]) — discrete series capacitor."""
    return a * (y_prev + x - x_prev)


@njit(cache=True, nogil=True)
def trajectory_chunk(m, k1, k2, hext, mp,
                     alpha, gamma, stt_coeff, r_av, dr_half,
                     drive, noise, dt,
                     s0, n_chunk, s_last, stride, use_rk4, renorm,
                     out_m, out_r, out_v, out_i):
    """Advance a single oscillator over one chunk of steps.

    m: (3,) state, mutated in place. drive: (n_chunk,) total current [A].
    noise: (n_chunk, 3) thermal field samples [T], already scaled.
    Samples are recorded at global steps that are multiples of stride.
    Returns -1 on success, else the global step index that went
    non-finite.
    """
    mx, my, mz = m[0], m[1], m[2]
    for i in range(n_chunk):
        s = s0 + i
        i_tot = drive[i]
        mdotp = mx * mp[0] + my * mp[1] + mz * mp[2]
        r = resistance_core(mdotp, r_av, dr_half)
        v = i_tot * r
        if s % stride == 0:
            kk = s // stride
            out_m[kk, 0] = mx
            out_m[kk, 1] = my
            out_m[kk, 2] = mz
            out_r[kk] = r
            out_v[kk] = v
            out_i[kk] = 0.0
        if s == s_last:
            break
        beta_eps = stt_coeff * i_tot
        if use_rk4:
            mx, my, mz = rk4_core(mx, my, mz,
                                  k1[0], k1[1], k1[2], k2[0], k2[1], k2[2],
                                  hext[0], hext[1], hext[2],
                                  mp[0], mp[1], mp[2],
                                  alpha, gamma, beta_eps, dt, renorm)
        else:
            mx, my, mz = heun_core(mx, my, mz,
                                   k1[0], k1[1], k1[2], k2[0], k2[1], k2[2],
                                   hext[0], hext[1], hext[2],
                                   mp[0], mp[1], mp[2],
                                   alpha, gamma, beta_eps,
                                   noise[i, 0], noise[i, 1], noise[i, 2],
                                   dt, renorm)
        if not (math.isfinite(mx) and math.isfinite(my) and math.isfinite(mz)):
            return s
    m[0], m[1], m[2] = mx, my, mz
    return -1


@njit(cache=True, nogil=True)
def network_chunk(m, hp_x, hp_y,
                  k1, k2, hext, mp,
                  alpha, gamma, stt_coeff, r_av, dr_half, i_dc,
                  tone_amp, tone_freq, tone_phase, tone_target,
                  g_m, hp_a, dt, noise,
                  s0, n_chunk, s_last, stride, use_rk4, renorm,
                  out_m, out_r, out_v, out_i):
    """Advance N coupled oscillators over one chunk of steps.

    m: (N, 3), hp_x/hp_y: (N,) high-pass filter state, all mutated in
    place. noise: (n_chunk, N, 3) scaled thermal field samples [T].

    Per step: injected currents are formed from the high-pass outputs of
    the PREVIOUS step (one-step-delayed coupling), voltages are computed
    and recorded, filters are updated with this step's voltages, then
    every oscillator is advanced with its total current frozen over the
    step. out_i records the injected (tone + coupling) current.
    """
    n = m.shape[0]
    n_tones = tone_amp.shape[0]
    i_inj = np.empty(n)
    i_tot = np.empty(n)
    volt = np.empty(n)
    res = np.empty(n)
    for i in range(n_chunk):
        s = s0 + i
        t = s * dt
        for j in range(n):
            coup = 0.0
            if g_m != 0.0:
                acc = 0.0
                for l in range(n):
                    if l != j:
                        acc += hp_y[l]
                coup = g_m * acc
            rf = 0.0
            for k in range(n_tones):
                if tone_target[k] == j:
                    rf += tone_amp[k] * math.sin(TWO_PI * tone_freq[k] * t + tone_phase[k])
            i_inj[j] = coup + rf
            i_tot[j] = i_dc[j] + i_inj[j]
            mdotp = m[j, 0] * mp[j, 0] + m[j, 1] * mp[j, 1] + m[j, 2] * mp[j, 2]
            res[j] = resistance_core(mdotp, r_av[j], dr_half[j])
            volt[j] = i_tot[j] * res[j]
        if s % stride == 0:
            kk = s // stride
            for j in range(n):
                out_m[j, kk, 0] = m[j, 0]
                out_m[j, kk, 1] = m[j, 1]
                out_m[j, kk, 2] = m[j, 2]
                out_r[j, kk] = res[j]
                out_v[j, kk] = volt[j]
                out_i[j, kk] = i_inj[j]
        if s == s_last:
            break
        for j in range(n):
            y = highpass_core(hp_x[j], hp_y[j], volt[j], hp_a)
            hp_x[j] = volt[j]
            hp_y[j] = y
        for j in range(n):
            beta_eps = stt_coeff[j] * i_tot[j]
            if use_rk4:
                nx, ny, nz = rk4_core(m[j, 0], m[j, 1], m[j, 2],
                                      k1[j, 0], k1[j, 1], k1[j, 2],
                                      k2[j, 0], k2[j, 1], k2[j, 2],
                                      hext[j, 0], hext[j, 1], hext[j, 2],
                                      mp[j, 0], mp[j, 1], mp[j, 2],
                                      alpha[j], gamma[j], beta_eps, dt, renorm)
            else:
                nx, ny, nz = heun_core(m[j, 0], m[j, 1], m[j, 2],
                                       k1[j, 0], k1[j, 1], k1[j, 2],
                                       k2[j, 0], k2[j, 1], k2[j, 2],
                                       hext[j, 0], hext[j, 1], hext[j, 2],
                                       mp[j, 0], mp[j, 1], mp[j, 2],
                                       alpha[j], gamma[j], beta_eps,
                                       noise[i, j, 0], noise[i, j, 1], noise[i, j, 2],
                                       dt, renorm)
            if not (math.isfinite(nx) and math.isfinite(ny) and math.isfinite(nz)):
                return s
            m[j, 0], m[j, 1], m[j, 2] = nx, ny, nz
    return -1
