"""Numerov integration kernels on uniform radial grids.

The bound-state search uses Sturm node counting on a single outward sweep
(the count equals the number of Dirichlet eigenvalues below E), so the
eigenvalue refinement is a plain bisection on an integer.  Wavefunctions are
composed from an outward and an inward sweep joined at the outermost
classical turning point, which keeps both partial integrations in their
stable (growing) direction.

The two-channel solver propagates renormalized 2x2 ratio matrices
R_n = u_{n+1} u_n^{-1} outward and L_n = u_n u_{n+1}^{-1} inward in the
transformed variable u = (I - h^2 F / 12) psi; an eigenvalue is a zero of
det(I - L_m R_m) at the match point.

All kernels assume h^2 * max(f) < 12 so the Numerov weight (1 - h^2 f / 12)
never changes sign; grid construction enforces this.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_RESCALE = 1.0e250


@njit(cache=True)
def count_nodes(f, h):
    """Sign changes of the outward Dirichlet solution psi'' = f psi.

    Equals the number of eigenvalues below the energy baked into f.
    """
    n = f.shape[0]
    w = h * h / 12.0
    # seeds: psi_0 = 0, psi_1 = tiny
    u_prev = 0.0
    psi = 1.0e-200
    u_cur = (1.0 - w * f[1]) * psi
    sign_prev = 1.0 if psi > 0.0 else -1.0
    count = 0
    for i in range(1, n - 1):
        psi_i = u_cur / (1.0 - w * f[i])
        u_next = 2.0 * u_cur - u_prev + h * h * f[i] * psi_i
        u_prev = u_cur
        u_cur = u_next
        if abs(u_cur) > _RESCALE:
            u_cur /= _RESCALE
            u_prev /= _RESCALE
        psi_next = u_cur / (1.0 - w * f[i + 1])
        if psi_next != 0.0:
            s = 1.0 if psi_next > 0.0 else -1.0
            if s * sign_prev < 0.0:
                count += 1
            sign_prev = s
    return count


@njit(cache=True)
def sweep_outward(f, h, i_end):
    """Outward sweep; returns psi[0..i_end] with a tiny Dirichlet seed.

    The filled prefix is rescaled on overflow risk, so the result is the
    solution up to an overall positive factor.
    """
    w = h * h / 12.0
    psi = np.zeros(i_end + 1)
    psi[0] = 0.0
    psi[1] = 1.0e-120
    u_prev = 0.0
    u_cur = (1.0 - w * f[1]) * psi[1]
    for i in range(1, i_end):
        u_next = 2.0 * u_cur - u_prev + h * h * f[i] * psi[i]
        u_prev = u_cur
        u_cur = u_next
        psi[i + 1] = u_cur / (1.0 - w * f[i + 1])
        if abs(psi[i + 1]) > _RESCALE:
            inv = 1.0 / abs(psi[i + 1])
            for j in range(i + 2):
                psi[j] *= inv
            u_prev *= inv
            u_cur *= inv
    return psi


@njit(cache=True)
def sweep_inward(f, h, i_start):
    """Inward sweep from the outer boundary; returns psi[i_start..n-1]."""
    n = f.shape[0]
    w = h * h / 12.0
    m = n - i_start
    psi = np.zeros(m)
    psi[m - 1] = 0.0
    psi[m - 2] = 1.0e-120
    u_prev = 0.0
    u_cur = (1.0 - w * f[n - 2]) * psi[m - 2]
    for i in range(n - 2, i_start, -1):
        k = i - i_start
        u_next = 2.0 * u_cur - u_prev + h * h * f[i] * psi[k]
        u_prev = u_cur
        u_cur = u_next
        psi[k - 1] = u_cur / (1.0 - w * f[i - 1])
        if abs(psi[k - 1]) > _RESCALE:
            inv = 1.0 / abs(psi[k - 1])
            for j in range(k - 1, m):
                psi[j] *= inv
            u_prev *= inv
            u_cur *= inv
    return psi


# ---------------------------------------------------------------------------
# two-channel renormalized Numerov
# ---------------------------------------------------------------------------


@njit(cache=True)
def _inv2(a, out):
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    out[0, 0] = a[1, 1] / det
    out[0, 1] = -a[0, 1] / det
    out[1, 0] = -a[1, 0] / det
    out[1, 1] = a[0, 0] / det


@njit(cache=True)
def _u_matrix(fmat_i, h, out):
    # U = (2I + 10T)(I - T)^{-1},  T = (h^2/12) F
    w = h * h / 12.0
    t00 = w * fmat_i[0, 0]
    t01 = w * fmat_i[0, 1]
    t10 = w * fmat_i[1, 0]
    t11 = w * fmat_i[1, 1]
    a = np.empty((2, 2))
    a[0, 0] = 1.0 - t00
    a[0, 1] = -t01
    a[1, 0] = -t10
    a[1, 1] = 1.0 - t11
    inv = np.empty((2, 2))
    _inv2(a, inv)
    b00 = 2.0 + 10.0 * t00
    b01 = 10.0 * t01
    b10 = 10.0 * t10
    b11 = 2.0 + 10.0 * t11
    out[0, 0] = b00 * inv[0, 0] + b01 * inv[1, 0]
    out[0, 1] = b00 * inv[0, 1] + b01 * inv[1, 1]
    out[1, 0] = b10 * inv[0, 0] + b11 * inv[1, 0]
    out[1, 1] = b10 * inv[0, 1] + b11 * inv[1, 1]


@njit(cache=True)
def coupled_match_det(fmat, h, i_m):
    """det(I - L_m R_m) at the match index for the 2x2 problem."""
    n = fmat.shape[0]
    u = np.empty((2, 2))
    r = np.empty((2, 2))
    rinv = np.empty((2, 2))
    # outward: R_1 = U_1, R_k = U_k - R_{k-1}^{-1}
    _u_matrix(fmat[1], h, r)
    for k in range(2, i_m + 1):
        _inv2(r, rinv)
        _u_matrix(fmat[k], h, u)
        r[0, 0] = u[0, 0] - rinv[0, 0]
        r[0, 1] = u[0, 1] - rinv[0, 1]
        r[1, 0] = u[1, 0] - rinv[1, 0]
        r[1, 1] = u[1, 1] - rinv[1, 1]
    # inward ratios L_k = u_k u_{k+1}^{-1}: the Dirichlet end (u_{n-1} = 0)
    # seeds L_{n-3} = U_{n-2}; the recurrence L_{k-1} = U_k - L_k^{-1} then
    # walks down to L_{i_m}
    lmat = np.empty((2, 2))
    linv = np.empty((2, 2))
    _u_matrix(fmat[n - 2], h, lmat)
    for k in range(n - 3, i_m, -1):
        _inv2(lmat, linv)
        _u_matrix(fmat[k], h, u)
        lmat[0, 0] = u[0, 0] - linv[0, 0]
        lmat[0, 1] = u[0, 1] - linv[0, 1]
        lmat[1, 0] = u[1, 0] - linv[1, 0]
        lmat[1, 1] = u[1, 1] - linv[1, 1]
    # lmat now is L_m = u_m u_{m+1}^{-1}
    p00 = lmat[0, 0] * r[0, 0] + lmat[0, 1] * r[1, 0]
    p01 = lmat[0, 0] * r[0, 1] + lmat[0, 1] * r[1, 1]
    p10 = lmat[1, 0] * r[0, 0] + lmat[1, 1] * r[1, 0]
    p11 = lmat[1, 0] * r[0, 1] + lmat[1, 1] * r[1, 1]
    a00 = 1.0 - p00
    a01 = -p01
    a10 = -p10
    a11 = 1.0 - p11
    return a00 * a11 - a01 * a10


@njit(cache=True)
def coupled_reconstruct(fmat, h, i_m):
    """Two-channel wavefunction at an eigenvalue, unnormalized (n, 2)."""
    n = fmat.shape[0]
    rs = np.empty((i_m + 1, 2, 2))
    u = np.empty((2, 2))
    rinv = np.empty((2, 2))
    _u_matrix(fmat[1], h, rs[1])
    for k in range(2, i_m + 1):
        _inv2(rs[k - 1], rinv)
        _u_matrix(fmat[k], h, u)
        rs[k, 0, 0] = u[0, 0] - rinv[0, 0]
        rs[k, 0, 1] = u[0, 1] - rinv[0, 1]
        rs[k, 1, 0] = u[1, 0] - rinv[1, 0]
        rs[k, 1, 1] = u[1, 1] - rinv[1, 1]
    # ls[k] holds the true inward ratio L_k = u_k u_{k+1}^{-1}
    ls = np.empty((n, 2, 2))
    linv = np.empty((2, 2))
    _u_matrix(fmat[n - 2], h, ls[n - 3])
    for k in range(n - 4, i_m - 1, -1):
        _inv2(ls[k + 1], linv)
        _u_matrix(fmat[k + 1], h, u)
        ls[k, 0, 0] = u[0, 0] - linv[0, 0]
        ls[k, 0, 1] = u[0, 1] - linv[0, 1]
        ls[k, 1, 0] = u[1, 0] - linv[1, 0]
        ls[k, 1, 1] = u[1, 1] - linv[1, 1]
    # null vector of A = I - L_m R_m
    lm = ls[i_m]
    rm = rs[i_m]
    p00 = lm[0, 0] * rm[0, 0] + lm[0, 1] * rm[1, 0]
    p01 = lm[0, 0] * rm[0, 1] + lm[0, 1] * rm[1, 1]
    p10 = lm[1, 0] * rm[0, 0] + lm[1, 1] * rm[1, 0]
    p11 = lm[1, 0] * rm[0, 1] + lm[1, 1] * rm[1, 1]
    a00 = 1.0 - p00
    a01 = -p01
    a10 = -p10
    a11 = 1.0 - p11
    x = np.empty(2)
    if a00 * a00 + a01 * a01 >= a10 * a10 + a11 * a11:
        x[0] = a01
        x[1] = -a00
    else:
        x[0] = a11
        x[1] = -a10
    nx = np.sqrt(x[0] * x[0] + x[1] * x[1])
    if nx == 0.0:
        x[0] = 1.0
        x[1] = 0.0
    else:
        x[0] /= nx
        x[1] /= nx

    uu = np.zeros((n, 2))
    uu[i_m, 0] = x[0]
    uu[i_m, 1] = x[1]
    # backward fill through the stored outward ratios: R_k u_k = u_{k+1}
    for k in range(i_m - 1, 0, -1):
        _inv2(rs[k], rinv)
        uu[k, 0] = rinv[0, 0] * uu[k + 1, 0] + rinv[0, 1] * uu[k + 1, 1]
        uu[k, 1] = rinv[1, 0] * uu[k + 1, 0] + rinv[1, 1] * uu[k + 1, 1]
    # forward fill: L_k u_{k+1} = u_k; the last point stays at the Dirichlet 0
    for k in range(i_m, n - 2):
        _inv2(ls[k], linv)
        uu[k + 1, 0] = linv[0, 0] * uu[k, 0] + linv[0, 1] * uu[k, 1]
        uu[k + 1, 1] = linv[1, 0] * uu[k, 0] + linv[1, 1] * uu[k, 1]
    uu[n - 1, 0] = 0.0
    uu[n - 1, 1] = 0.0
    # transform back: (I - T) psi = u
    w = h * h / 12.0
    psi = np.zeros((n, 2))
    a = np.empty((2, 2))
    ainv = np.empty((2, 2))
    for k in range(n):
        a[0, 0] = 1.0 - w * fmat[k, 0, 0]
        a[0, 1] = -w * fmat[k, 0, 1]
        a[1, 0] = -w * fmat[k, 1, 0]
        a[1, 1] = 1.0 - w * fmat[k, 1, 1]
        _inv2(a, ainv)
        psi[k, 0] = ainv[0, 0] * uu[k, 0] + ainv[0, 1] * uu[k, 1]
        psi[k, 1] = ainv[1, 0] * uu[k, 0] + ainv[1, 1] * uu[k, 1]
    return psi
