"""Compiled core of the stochastic hierarchy integrator.

The hierarchy state is a stack of 4-component system vectors, one per
multi-index k with |k| <= k_max (simplex truncation), plus one auxiliary
scalar per exponential BCF term carrying the nonlinear memory shift.  The
equations of motion per auxiliary vector read

    d psi^(k) = (-iH - k.W + L ztilde*) psi^(k)
                + L sum_j k_j G_j psi^(k-e_j)
                - (L - <L>) sum_j psi^(k+e_j)

with ztilde* = z*(t) + sum_j s_j,  d s_j = -W_j* s_j + G_j* <L>  and
<L> the normalized expectation in psi^(0) (the nonlinear variant; the
linear one sets <L> = 0 and uses the bare noise).  Coupling to indices
beyond the truncation surface is zero.

Time stepping is an adaptive embedded Dormand-Prince 5(4) pair on the full
stacked state; the driving noise is sampled on a uniform grid and
interpolated by a local 4-point cubic.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_NORM_COLLAPSE = 2


def build_hierarchy_tables(n_terms: int, k_max: int):
    """Multi-index enumeration and neighbor maps for the simplex |k| <= k_max.

    Returns (indices, down, up) where indices is (n_aux, n_terms) int64,
    down[a, j] / up[a, j] give the row of k -+ e_j (or -1 outside the
    simplex).  Row 0 is k = 0.
    """
    # enumerate by total order so row 0 is k = 0 and depth grows monotonically
    by_order = []
    for total in range(k_max + 1):
        level = []

        def rec2(prefix, left):
            if len(prefix) == n_terms - 1:
                level.append(tuple(prefix + [left]))
                return
            for v in range(left + 1):
                rec2(prefix + [v], left - v)

        rec2([], total)
        by_order.extend(sorted(level))
    idx_arr = np.array(by_order, dtype=np.int64).reshape(len(by_order), n_terms)
    lookup = {tuple(row): a for a, row in enumerate(idx_arr)}

    n_aux = len(idx_arr)
    down = -np.ones((n_aux, n_terms), dtype=np.int64)
    up = -np.ones((n_aux, n_terms), dtype=np.int64)
    for a, row in enumerate(idx_arr):
        for j in range(n_terms):
            if row[j] > 0:
                key = tuple(row[:j]) + (row[j] - 1,) + tuple(row[j + 1:])
                down[a, j] = lookup[key]
            key = tuple(row[:j]) + (row[j] + 1,) + tuple(row[j + 1:])
            if sum(key) <= k_max:
                up[a, j] = lookup[key]
    return idx_arr, down, up


@njit(cache=True, fastmath=True)
def _interp_noise(t, zc, t0, h, n):
    """Local cubic Lagrange interpolation on the uniform noise grid."""
    x = (t - t0) / h
    m = int(np.floor(x))
    if m < 1:
        m = 1
    if m > n - 3:
        m = n - 3
    th = x - m
    a = -th * (th - 1.0) * (th - 2.0) / 6.0
    b = (th * th - 1.0) * (th - 2.0) / 2.0
    c = -th * (th + 1.0) * (th - 2.0) / 2.0
    d = th * (th * th - 1.0) / 6.0
    return a * zc[m - 1] + b * zc[m] + c * zc[m + 1] + d * zc[m + 2]


@njit(cache=True, fastmath=True)
def _rhs(t, y, dy, n_aux, n_terms, m_h, l_op, k_w, down, up, k_g,
         conj_w, conj_g, zc, tn0, hn, n_noise, nonlinear, a_mat, dvec, uvec):
    # nonlinear expectation <L> from the top-level vector
    exp_l = 0.0
    if nonlinear:
        nrm2 = 0.0
        for r in range(4):
            nrm2 += (y[r].real * y[r].real + y[r].imag * y[r].imag)
        if nrm2 > 1e-24:
            acc = 0.0 + 0.0j
            for r in range(4):
                lv = 0.0 + 0.0j
                for c in range(4):
                    lv += l_op[r, c] * y[c]
                acc += np.conj(y[r]) * lv
            exp_l = acc.real / nrm2

    zt = _interp_noise(t, zc, tn0, hn, n_noise)
    ztilde = np.conj(zt)
    if nonlinear:
        for j in range(n_terms):
            ztilde += y[4 * n_aux + j]

    # A = -iH + ztilde * L
    for r in range(4):
        for c in range(4):
            a_mat[r, c] = m_h[r, c] + ztilde * l_op[r, c]

    for a in range(n_aux):
        base = 4 * a
        for r in range(4):
            dvec[r] = 0.0 + 0.0j
            uvec[r] = 0.0 + 0.0j
        for j in range(n_terms):
            dn = down[a, j]
            if dn >= 0:
                coef = k_g[a, j]
                for r in range(4):
                    dvec[r] += coef * y[4 * dn + r]
            un = up[a, j]
            if un >= 0:
                for r in range(4):
                    uvec[r] += y[4 * un + r]
        for r in range(4):
            acc = -k_w[a] * y[base + r]
            for c in range(4):
                acc += a_mat[r, c] * y[base + c]
                acc += l_op[r, c] * (dvec[c] - uvec[c])
            acc += exp_l * uvec[r]
            dy[base + r] = acc

    for j in range(n_terms):
        dy[4 * n_aux + j] = (-conj_w[j] * y[4 * n_aux + j] + conj_g[j] * exp_l)


# Dormand-Prince 5(4) coefficients
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, 0] = 1 / 5
_DP_A[2, :2] = (3 / 40, 9 / 40)
_DP_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_DP_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_DP_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_DP_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])


@njit(cache=True, fastmath=True)
def integrate_hops(y0, t_out, rtol, atol, m_h, l_op, k_w, down, up, k_g,
                   conj_w, conj_g, zc, tn0, hn, dp_a, dp_b5, dp_b4, dp_c,
                   nonlinear, out_psi, out_norm):
    """Adaptive DP5(4) integration of the stacked hierarchy state.

    Writes the raw (unnormalized) top-level vector and its norm at every
    output time.  Returns (status, t_reached).
    """
    n_terms = conj_w.shape[0]
    n_aux = (y0.shape[0] - n_terms) // 4
    n_noise = zc.shape[0]
    dim = y0.shape[0]
    n_out = t_out.shape[0]

    y = y0.copy()
    t = t_out[0]
    k = np.empty((7, dim), dtype=np.complex128)
    ytmp = np.empty(dim, dtype=np.complex128)
    y5 = np.empty(dim, dtype=np.complex128)
    a_mat = np.empty((4, 4), dtype=np.complex128)
    dvec = np.empty(4, dtype=np.complex128)
    uvec = np.empty(4, dtype=np.complex128)

    for r in range(4):
        out_psi[0, r] = y[r]
    nrm0 = 0.0
    for r in range(4):
        nrm0 += (y[r].real ** 2 + y[r].imag ** 2)
    out_norm[0] = np.sqrt(nrm0)

    t_end = t_out[n_out - 1]
    h = (t_end - t) * 1e-4
    if h <= 0:
        return STATUS_OK, t
    h_min = (t_end - t) * 1e-14
    have_k1 = False

    for i_out in range(1, n_out):
        t_target = t_out[i_out]
        while t < t_target - 1e-14 * t_end:
            if h < h_min:
                return STATUS_STEP_UNDERFLOW, t
            h_try = h
            clipped = False
            if t + h_try > t_target:
                h_try = t_target - t
                clipped = True
            # stages
            if not have_k1:
                _rhs(t, y, k[0], n_aux, n_terms, m_h, l_op, k_w, down, up,
                     k_g, conj_w, conj_g, zc, tn0, hn, n_noise, nonlinear,
                     a_mat, dvec, uvec)
                have_k1 = True
            for st in range(1, 7):
                for d in range(dim):
                    acc = 0.0 + 0.0j
                    for pr in range(st):
                        aa = dp_a[st, pr]
                        if aa != 0.0:
                            acc += aa * k[pr, d]
                    ytmp[d] = y[d] + h_try * acc
                _rhs(t + dp_c[st] * h_try, ytmp, k[st], n_aux, n_terms, m_h,
                     l_op, k_w, down, up, k_g, conj_w, conj_g, zc, tn0, hn,
                     n_noise, nonlinear, a_mat, dvec, uvec)
            # 5th order solution and error estimate
            err2 = 0.0
            for d in range(dim):
                acc5 = 0.0 + 0.0j
                acce = 0.0 + 0.0j
                for st in range(7):
                    b5 = dp_b5[st]
                    be = dp_b5[st] - dp_b4[st]
                    if b5 != 0.0:
                        acc5 += b5 * k[st, d]
                    if be != 0.0:
                        acce += be * k[st, d]
                y5[d] = y[d] + h_try * acc5
                sc = atol + rtol * max(abs(y[d]), abs(y5[d]))
                e = h_try * abs(acce) / sc
                err2 += e * e
            err = np.sqrt(err2 / dim)
            if err <= 1.0:
                t = t + h_try
                for d in range(dim):
                    y[d] = y5[d]
                # FSAL: stage 7 was evaluated at (t+h, y5)
                for d in range(dim):
                    k[0, d] = k[6, d]
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * err ** (-0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                if not clipped:
                    h = h_try * fac
                # a clipped accepted step keeps the previous full h
                nrm = 0.0
                for r in range(4):
                    nrm += (y[r].real ** 2 + y[r].imag ** 2)
                if nonlinear and nrm < 1e-24:
                    return STATUS_NORM_COLLAPSE, t
            else:
                fac = 0.9 * err ** (-0.2)
                if fac < 0.1:
                    fac = 0.1
                h = h_try * fac
                # k[0] is still the RHS at the unchanged (t, y)

        for r in range(4):
            out_psi[i_out, r] = y[r]
        nrm = 0.0
        for r in range(4):
            nrm += (y[r].real ** 2 + y[r].imag ** 2)
        out_norm[i_out] = np.sqrt(nrm)

    return STATUS_OK, t
