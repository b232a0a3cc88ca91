"""Compiled stencils for the reduced (warped) Ricci flow.

Profiles are sampled at ``x_j = j*h``, ``j = 0..m-1``, ``h = 1/(m-1)``, with
both poles on grid points.  Derivatives use 4th-order centered stencils on an
array extended by the pole parities (psi odd, phi and curvatures even).

The solver works in the arclength-proportional gauge: phi == L(t) is a single
number and x is the normalized arclength sigma = s/L.  Keeping that gauge adds
the tangential term ``-v * psi_sigma`` to the psi equation, where

    v(sigma) = (n-1) * (sigma*J(L) - J(s)) / L,   J(s) = int_0^s K_rad ds,

is also the sigma-velocity of material points.  The two samples nearest each
pole get their curvature from an even extrapolation of the next three samples;
the direct quotients there are both inaccurate and (through J) destabilizing.
"""

import numpy as np
from numba import njit

# status codes returned by advance()
REACHED = 0
CEILING = 1
STEP_FLOOR = 2
BAD_STATE = 3

# even-polynomial (a + b k^2 + c k^4) extrapolation from k = 2, 3, 4 to k = 0, 1
_U = (4.0, 9.0, 16.0)


@njit(cache=True)
def _even_weights(u):
    w0 = (u - _U[1]) * (u - _U[2]) / ((_U[0] - _U[1]) * (_U[0] - _U[2]))
    w1 = (u - _U[0]) * (u - _U[2]) / ((_U[1] - _U[0]) * (_U[1] - _U[2]))
    w2 = (u - _U[0]) * (u - _U[1]) / ((_U[2] - _U[0]) * (_U[2] - _U[1]))
    return w0, w1, w2


@njit(cache=True)
def fill_poles(f):
    """Overwrite f[0], f[1], f[-2], f[-1] by even extrapolation (in place)."""
    m = f.shape[0]
    for k in range(2):
        w0, w1, w2 = _even_weights(float(k * k))
        f[k] = w0 * f[2] + w1 * f[3] + w2 * f[4]
        f[m - 1 - k] = w0 * f[m - 3] + w1 * f[m - 4] + w2 * f[m - 5]


@njit(cache=True)
def extend(f, odd):
    m = f.shape[0]
    e = np.empty(m + 4)
    e[2:m + 2] = f
    sg = -1.0 if odd else 1.0
    e[0] = sg * f[2]
    e[1] = sg * f[1]
    e[m + 2] = sg * f[m - 2]
    e[m + 3] = sg * f[m - 3]
    return e


@njit(cache=True)
def d1(f, h, odd):
    m = f.shape[0]
    e = extend(f, odd)
    out = np.empty(m)
    c = 1.0 / (12.0 * h)
    for j in range(m):
        k = j + 2
        out[j] = (e[k - 2] - 8.0 * e[k - 1] + 8.0 * e[k + 1] - e[k + 2]) * c
    return out


@njit(cache=True)
def d2(f, h, odd):
    m = f.shape[0]
    e = extend(f, odd)
    out = np.empty(m)
    c = 1.0 / (12.0 * h * h)
    for j in range(m):
        k = j + 2
        out[j] = (-e[k - 2] + 16.0 * e[k - 1] - 30.0 * e[k] + 16.0 * e[k + 1] - e[k + 2]) * c
    return out


@njit(cache=True)
def cumint_even(f, h):
    """Cumulative integral from x=0 of an even-at-poles field (4th order)."""
    m = f.shape[0]
    e = extend(f, False)
    out = np.empty(m)
    out[0] = 0.0
    c = h / 24.0
    for j in range(m - 1):
        k = j + 2
        out[j + 1] = out[j] + c * (-e[k - 1] + 13.0 * e[k] + 13.0 * e[k + 1] - e[k + 2])
    return out


@njit(cache=True)
def pole_slopes(psi, phi, h):
    """d(psi)/ds at both poles (outward-positive), from an odd quintic fit."""
    m = psi.shape[0]
    b_n = (1.5 * psi[1] - 0.3 * psi[2] + psi[3] / 30.0) / h
    b_s = (1.5 * psi[m - 2] - 0.3 * psi[m - 3] + psi[m - 4] / 30.0) / h
    return b_n / phi[0], b_s / phi[m - 1]


@njit(cache=True)
def s_derivatives(psi, phi, h):
    """``(psi_s, psi_ss)`` for a general radial factor phi."""
    px = d1(psi, h, True)
    pxx = d2(psi, h, True)
    fx = d1(phi, h, False)
    psi_s = px / phi
    psi_ss = (pxx - fx * px / phi) / (phi * phi)
    return psi_s, psi_ss


@njit(cache=True)
def sectional(psi, phi, h):
    """Radial and spherical sectional curvatures, pole values regularized."""
    m = psi.shape[0]
    psi_s, psi_ss = s_derivatives(psi, phi, h)
    k_rad = np.zeros(m)
    k_sph = np.zeros(m)
    for j in range(2, m - 2):
        k_rad[j] = -psi_ss[j] / psi[j]
        k_sph[j] = (1.0 - psi_s[j] * psi_s[j]) / (psi[j] * psi[j])
    fill_poles(k_rad)
    fill_poles(k_sph)
    return k_rad, k_sph


@njit(cache=True)
def gauge_rhs(psi, L, h, n):
    """Time derivatives ``(dpsi, dL, v)`` in the arclength-proportional gauge."""
    m = psi.shape[0]
    psi_s = d1(psi, h, True) / L
    psi_ss = d2(psi, h, True) / (L * L)
    k_rad = np.zeros(m)
    for j in range(2, m - 2):
        k_rad[j] = -psi_ss[j] / psi[j]
    fill_poles(k_rad)
    J = L * cumint_even(k_rad, h)
    jtot = J[m - 1]
    v = np.empty(m)
    dpsi = np.zeros(m)
    for j in range(m):
        sig = j * h
        v[j] = (n - 1) * (sig * jtot - J[j]) / L
    v[0] = 0.0
    v[m - 1] = 0.0
    for j in range(1, m - 1):
        dpsi[j] = (psi_ss[j] + (n - 2) * (psi_s[j] * psi_s[j] - 1.0) / psi[j]
                   - v[j] * L * psi_s[j])
    return dpsi, -(n - 1) * jtot, v


@njit(cache=True)
def interp_odd(v, h, pts):
    """Cubic Lagrange interpolation of a pole-odd grid field at ``pts``."""
    m = v.shape[0]
    e = extend(v, True)
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        q = pts[i] / h
        j = int(np.floor(q))
        if j < 0:
            j = 0
        if j > m - 2:
            j = m - 2
        u = q - j
        # samples at j-1, j, j+1, j+2 live at e[j+1 .. j+4]
        f0 = e[j + 1]
        f1 = e[j + 2]
        f2 = e[j + 3]
        f3 = e[j + 4]
        out[i] = (-u * (u - 1.0) * (u - 2.0) / 6.0 * f0
                  + (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0 * f1
                  - (u + 1.0) * u * (u - 2.0) / 2.0 * f2
                  + (u + 1.0) * u * (u - 1.0) / 6.0 * f3)
    return out


@njit(cache=True)
def rk4_step(psi, L, mat, h, n, dt):
    a1, l1, v1 = gauge_rhs(psi, L, h, n)
    m1 = interp_odd(v1, h, mat)
    a2, l2, v2 = gauge_rhs(psi + 0.5 * dt * a1, L + 0.5 * dt * l1, h, n)
    m2 = interp_odd(v2, h, mat + 0.5 * dt * m1)
    a3, l3, v3 = gauge_rhs(psi + 0.5 * dt * a2, L + 0.5 * dt * l2, h, n)
    m3 = interp_odd(v3, h, mat + 0.5 * dt * m2)
    a4, l4, v4 = gauge_rhs(psi + dt * a3, L + dt * l3, h, n)
    m4 = interp_odd(v4, h, mat + dt * m3)
    w = dt / 6.0
    psi_new = psi + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    L_new = L + w * (l1 + 2.0 * l2 + 2.0 * l3 + l4)
    mat_new = mat + w * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
    psi_new[0] = 0.0
    psi_new[-1] = 0.0
    return psi_new, L_new, mat_new


@njit(cache=True)
def scalar_extremes(psi, L, h, n):
    phi = np.full(psi.shape[0], L)
    k_rad, k_sph = sectional(psi, phi, h)
    r = 2.0 * (n - 1) * k_rad + (n - 1) * (n - 2) * k_sph
    return r.min(), r.max()


@njit(cache=True)
def advance(psi, L, mat, h, n, t, t_target, cfl, ceiling, dt_floor, check_every):
    """Step from ``t`` to ``t_target`` (landing exactly on it) or stop early.

    Returns ``(psi, L, mat, t, steps, status)``.
    """
    steps = 0
    while t < t_target:
        if steps % check_every == 0:
            if scalar_extremes(psi, L, h, n)[1] >= ceiling:
                return psi, L, mat, t, steps, CEILING
        ds = L * h
        dt = cfl * ds * ds
        if dt < dt_floor:
            return psi, L, mat, t, steps, STEP_FLOOR
        if t + dt >= t_target:
            dt = t_target - t
            t_next = t_target
        else:
            t_next = t + dt
        psi, L, mat = rk4_step(psi, L, mat, h, n, dt)
        steps += 1
        t = t_next
        if not (L > 0.0):
            return psi, L, mat, t, steps, BAD_STATE
        for j in range(1, psi.shape[0] - 1):
            if not (psi[j] > 0.0):
                return psi, L, mat, t, steps, BAD_STATE
    if scalar_extremes(psi, L, h, n)[1] >= ceiling:
        return psi, L, mat, t, steps, CEILING
    return psi, L, mat, t, steps, REACHED
