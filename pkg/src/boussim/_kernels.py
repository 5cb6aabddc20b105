"""Hot loops compiled with numba.

Every kernel is sequential and writes each output cell exactly once, so
results are bitwise reproducible regardless of threading configuration.
Arrays arrive padded with the two-cell ghost frame; ``gl`` is the frame
width and ``nx``/``ny`` the interior extent.

Face arrays are per cell: ``wE``/``wW`` hold the reconstructed values on
the east/west faces of each cell (north/south for the y direction).  Flux
arrays are per interface: ``fx*[jj, ii]`` is the flux through the face
between padded cells ``(gl+jj, gl-1+ii)`` and ``(gl+jj, gl+ii)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _minmod3(a1, a2, a3):
    if a1 > 0.0 and a2 > 0.0 and a3 > 0.0:
        return min(a1, min(a2, a3))
    if a1 < 0.0 and a2 < 0.0 and a3 < 0.0:
        return max(a1, max(a2, a3))
    return 0.0


@njit(cache=True)
def faces_x(w, p, q, bfx, theta, wE, wW, pE, pW, qE, qW):
    """Limited linear reconstruction onto east/west faces of every cell
    that has both neighbours, with the surface kept above the face bed.

    If a face value of w dips below the bed there, the cell's two face
    values are shifted to pin the low face at the bed while preserving the
    cell average, which keeps both face water columns non-negative.
    """
    ny_t, nx_t = w.shape
    for j in range(1, ny_t - 1):
        for i in range(1, nx_t - 1):
            wc = w[j, i]
            s = _minmod3(theta * (wc - w[j, i - 1]),
                         0.5 * (w[j, i + 1] - w[j, i - 1]),
                         theta * (w[j, i + 1] - wc))
            we = wc + 0.5 * s
            ww = wc - 0.5 * s
            be = bfx[j, i]
            bw = bfx[j, i - 1]
            if we < be:
                we = be
                ww = 2.0 * wc - be
            elif ww < bw:
                ww = bw
                we = 2.0 * wc - bw
            wE[j, i] = we
            wW[j, i] = ww
            pc = p[j, i]
            s = _minmod3(theta * (pc - p[j, i - 1]),
                         0.5 * (p[j, i + 1] - p[j, i - 1]),
                         theta * (p[j, i + 1] - pc))
            pE[j, i] = pc + 0.5 * s
            pW[j, i] = pc - 0.5 * s
            qc = q[j, i]
            s = _minmod3(theta * (qc - q[j, i - 1]),
                         0.5 * (q[j, i + 1] - q[j, i - 1]),
                         theta * (q[j, i + 1] - qc))
            qE[j, i] = qc + 0.5 * s
            qW[j, i] = qc - 0.5 * s


@njit(cache=True)
def faces_y(w, p, q, bfy, theta, wN, wS, pN, pS, qN, qS):
    ny_t, nx_t = w.shape
    for j in range(1, ny_t - 1):
        for i in range(1, nx_t - 1):
            wc = w[j, i]
            s = _minmod3(theta * (wc - w[j - 1, i]),
                         0.5 * (w[j + 1, i] - w[j - 1, i]),
                         theta * (w[j + 1, i] - wc))
            wn = wc + 0.5 * s
            wsv = wc - 0.5 * s
            bn = bfy[j, i]
            bs = bfy[j - 1, i]
            if wn < bn:
                wn = bn
                wsv = 2.0 * wc - bn
            elif wsv < bs:
                wsv = bs
                wn = 2.0 * wc - bs
            wN[j, i] = wn
            wS[j, i] = wsv
            pc = p[j, i]
            s = _minmod3(theta * (pc - p[j - 1, i]),
                         0.5 * (p[j + 1, i] - p[j - 1, i]),
                         theta * (p[j + 1, i] - pc))
            pN[j, i] = pc + 0.5 * s
            pS[j, i] = pc - 0.5 * s
            qc = q[j, i]
            s = _minmod3(theta * (qc - q[j - 1, i]),
                         0.5 * (q[j + 1, i] - q[j - 1, i]),
                         theta * (q[j + 1, i] - qc))
            qN[j, i] = qc + 0.5 * s
            qS[j, i] = qc - 0.5 * s


@njit(cache=True)
def flux_x(wE, wW, pE, pW, qE, qW, bfx, g, h_eps, gl, nx, ny, fx1, fx2, fx3):
    """Central-upwind flux through every x interface bordering the interior."""
    for jj in range(ny):
        j = gl + jj
        for ii in range(nx + 1):
            i = gl - 1 + ii  # left cell of the interface
            bf = bfx[j, i]
            hl = wE[j, i] - bf
            if hl < 0.0:
                hl = 0.0
            hr = wW[j, i + 1] - bf
            if hr < 0.0:
                hr = 0.0
            # A side with no water carries nothing: discard any momentum the
            # limiter extrapolated there, else P/h_eps invents huge speeds.
            if hl > 0.0:
                pl = pE[j, i]
                ql = qE[j, i]
            else:
                pl = 0.0
                ql = 0.0
            if hr > 0.0:
                pr = pW[j, i + 1]
                qr = qW[j, i + 1]
            else:
                pr = 0.0
                qr = 0.0
            dl = hl if hl > h_eps else h_eps
            dr = hr if hr > h_eps else h_eps
            ul = pl / dl
            ur = pr / dr
            cl = np.sqrt(g * hl)
            cr = np.sqrt(g * hr)
            ap = max(ul + cl, ur + cr, 0.0)
            am = min(ul - cl, ur - cr, 0.0)
            if ap == 0.0 and am == 0.0:
                fx1[jj, ii] = 0.0
                fx2[jj, ii] = 0.0
                fx3[jj, ii] = 0.0
                continue
            inv = 1.0 / (ap - am)
            diff = ap * am * inv
            f1l = pl
            f1r = pr
            f2l = pl * ul + 0.5 * g * hl * hl
            f2r = pr * ur + 0.5 * g * hr * hr
            f3l = pl * ql / dl
            f3r = pr * qr / dr
            wl = wE[j, i]
            wr = wW[j, i + 1]
            fx1[jj, ii] = (ap * f1l - am * f1r) * inv + diff * (wr - wl)
            fx2[jj, ii] = (ap * f2l - am * f2r) * inv + diff * (pr - pl)
            fx3[jj, ii] = (ap * f3l - am * f3r) * inv + diff * (qr - ql)


@njit(cache=True)
def flux_y(wN, wS, pN, pS, qN, qS, bfy, g, h_eps, gl, nx, ny, fy1, fy2, fy3):
    for jj in range(ny + 1):
        j = gl - 1 + jj  # south cell of the interface
        for ii in range(nx):
            i = gl + ii
            bf = bfy[j, i]
            hl = wN[j, i] - bf
            if hl < 0.0:
                hl = 0.0
            hr = wS[j + 1, i] - bf
            if hr < 0.0:
                hr = 0.0
            if hl > 0.0:
                pl = pN[j, i]
                ql = qN[j, i]
            else:
                pl = 0.0
                ql = 0.0
            if hr > 0.0:
                pr = pS[j + 1, i]
                qr = qS[j + 1, i]
            else:
                pr = 0.0
                qr = 0.0
            dl = hl if hl > h_eps else h_eps
            dr = hr if hr > h_eps else h_eps
            vl = ql / dl
            vr = qr / dr
            cl = np.sqrt(g * hl)
            cr = np.sqrt(g * hr)
            ap = max(vl + cl, vr + cr, 0.0)
            am = min(vl - cl, vr - cr, 0.0)
            if ap == 0.0 and am == 0.0:
                fy1[jj, ii] = 0.0
                fy2[jj, ii] = 0.0
                fy3[jj, ii] = 0.0
                continue
            inv = 1.0 / (ap - am)
            diff = ap * am * inv
            f1l = ql
            f1r = qr
            f2l = ql * pl / dl
            f2r = qr * pr / dr
            f3l = ql * vl + 0.5 * g * hl * hl
            f3r = qr * vr + 0.5 * g * hr * hr
            wl = wN[j, i]
            wr = wS[j + 1, i]
            fy1[jj, ii] = (ap * f1l - am * f1r) * inv + diff * (wr - wl)
            fy2[jj, ii] = (ap * f2l - am * f2r) * inv + diff * (pr - pl)
            fy3[jj, ii] = (ap * f3l - am * f3r) * inv + diff * (qr - ql)


@njit(cache=True)
def fv_rates(fx1, fx2, fx3, fy1, fy2, fy3, w, p, q, bed, bfx, bfy,
             g, c_f, h_eps, dx, dy, gl, nx, ny, rw, rp, rq):
    """Flux divergence, bed-slope source and bottom friction per cell.

    The bed source balances the pressure flux with the cell bed taken as
    the mean of the two interface values in each direction, so a flat
    surface over any submerged bed produces exactly zero rates.
    """
    inv_dx = 1.0 / dx
    inv_dy = 1.0 / dy
    for jj in range(ny):
        j = gl + jj
        for ii in range(nx):
            i = gl + ii
            rw[jj, ii] = -(fx1[jj, ii + 1] - fx1[jj, ii]) * inv_dx \
                         - (fy1[jj + 1, ii] - fy1[jj, ii]) * inv_dy
            be = bfx[j, i]
            bw = bfx[j, i - 1]
            bn = bfy[j, i]
            bs = bfy[j - 1, i]
            wc = w[j, i]
            src_x = -g * (wc - 0.5 * (be + bw)) * (be - bw) * inv_dx
            src_y = -g * (wc - 0.5 * (bn + bs)) * (bn - bs) * inv_dy
            h = wc - bed[j, i]
            if h < 0.0:
                h = 0.0
            hstar = h if h > h_eps else h_eps
            fric = 0.0
            if c_f > 0.0:
                fric = c_f * np.sqrt(p[j, i] ** 2 + q[j, i] ** 2) / (hstar * hstar)
            rp[jj, ii] = -(fx2[jj, ii + 1] - fx2[jj, ii]) * inv_dx \
                         - (fy2[jj + 1, ii] - fy2[jj, ii]) * inv_dy \
                         + src_x - fric * p[j, i]
            rq[jj, ii] = -(fx3[jj, ii + 1] - fx3[jj, ii]) * inv_dx \
                         - (fy3[jj + 1, ii] - fy3[jj, ii]) * inv_dy \
                         + src_y - fric * q[j, i]


@njit(cache=True)
def dispersive_rates(eta, depth, ddx, ddy, g, b_disp, dx, dy, gl, nx, ny, rp, rq):
    """Add the third-order surface-derivative corrections to the momentum
    rates.  Cells with zero still-water depth contribute nothing."""
    inv_dx = 1.0 / dx
    inv_dy = 1.0 / dy
    inv_dx2 = inv_dx * inv_dx
    inv_dy2 = inv_dy * inv_dy
    for jj in range(ny):
        j = gl + jj
        for ii in range(nx):
            i = gl + ii
            d = depth[j, i]
            if d <= 0.0:
                continue
            e_xx = (eta[j, i + 1] - 2.0 * eta[j, i] + eta[j, i - 1]) * inv_dx2
            e_yy = (eta[j + 1, i] - 2.0 * eta[j, i] + eta[j - 1, i]) * inv_dy2
            e_xy = (eta[j + 1, i + 1] - eta[j + 1, i - 1]
                    - eta[j - 1, i + 1] + eta[j - 1, i - 1]) * 0.25 * inv_dx * inv_dy
            e_xxx = (eta[j, i + 2] - 2.0 * eta[j, i + 1]
                     + 2.0 * eta[j, i - 1] - eta[j, i - 2]) * 0.5 * inv_dx * inv_dx2
            e_yyy = (eta[j + 2, i] - 2.0 * eta[j + 1, i]
                     + 2.0 * eta[j - 1, i] - eta[j - 2, i]) * 0.5 * inv_dy * inv_dy2
            e_xyy = ((eta[j + 1, i + 1] - 2.0 * eta[j, i + 1] + eta[j - 1, i + 1])
                     - (eta[j + 1, i - 1] - 2.0 * eta[j, i - 1] + eta[j - 1, i - 1])) \
                    * 0.5 * inv_dx * inv_dy2
            e_xxy = ((eta[j + 1, i + 1] - 2.0 * eta[j + 1, i] + eta[j + 1, i - 1])
                     - (eta[j - 1, i + 1] - 2.0 * eta[j - 1, i] + eta[j - 1, i - 1])) \
                    * 0.5 * inv_dy * inv_dx2
            gd2 = g * d * d
            gd3 = gd2 * d
            rp[jj, ii] += b_disp * gd3 * (e_xxx + e_xyy) \
                + b_disp * gd2 * (ddx[j, i] * (2.0 * e_xx + e_yy) + ddy[j, i] * e_xy)
            rq[jj, ii] += b_disp * gd3 * (e_yyy + e_xxy) \
                + b_disp * gd2 * (ddy[j, i] * (2.0 * e_yy + e_xx) + ddx[j, i] * e_xy)


@njit(cache=True)
def cross_rates(p, q, depth, ddx, ddy, bp13, dx, dy, gl, nx, ny, sp, sq):
    """Mixed-derivative groups that are advanced through stored history.

    ``sp`` couples the x-momentum to derivatives of q, ``sq`` the
    y-momentum to derivatives of p; ``bp13`` is the dispersion coefficient
    plus one third.
    """
    inv_dx = 1.0 / dx
    inv_dy = 1.0 / dy
    for jj in range(ny):
        j = gl + jj
        for ii in range(nx):
            i = gl + ii
            d = depth[j, i]
            if d <= 0.0:
                sp[jj, ii] = 0.0
                sq[jj, ii] = 0.0
                continue
            q_x = (q[j, i + 1] - q[j, i - 1]) * 0.5 * inv_dx
            q_y = (q[j + 1, i] - q[j - 1, i]) * 0.5 * inv_dy
            q_xy = (q[j + 1, i + 1] - q[j + 1, i - 1]
                    - q[j - 1, i + 1] + q[j - 1, i - 1]) * 0.25 * inv_dx * inv_dy
            p_x = (p[j, i + 1] - p[j, i - 1]) * 0.5 * inv_dx
            p_y = (p[j + 1, i] - p[j - 1, i]) * 0.5 * inv_dy
            p_xy = (p[j + 1, i + 1] - p[j + 1, i - 1]
                    - p[j - 1, i + 1] + p[j - 1, i - 1]) * 0.25 * inv_dx * inv_dy
            sixth = d / 6.0
            d2 = bp13 * d * d
            sp[jj, ii] = sixth * (ddx[j, i] * q_y + ddy[j, i] * q_x) + d2 * q_xy
            sq[jj, ii] = sixth * (ddx[j, i] * p_y + ddy[j, i] * p_x) + d2 * p_xy


@njit(cache=True)
def speed_extrema(w, p, q, bed, g, h_eps, dx, dy, gl, nx, ny):
    """Max of (|u|+c)/dx and (|v|+c)/dy over the interior, plus the raw
    signal-speed and depth maxima for the step log."""
    max_rate = 0.0
    max_speed = 0.0
    max_depth = 0.0
    inv_dx = 1.0 / dx
    inv_dy = 1.0 / dy
    for jj in range(ny):
        j = gl + jj
        for ii in range(nx):
            i = gl + ii
            h = w[j, i] - bed[j, i]
            if h < 0.0:
                h = 0.0
            if h > max_depth:
                max_depth = h
            hstar = h if h > h_eps else h_eps
            c = np.sqrt(g * h)
            su = abs(p[j, i]) / hstar + c
            sv = abs(q[j, i]) / hstar + c
            if su > max_speed:
                max_speed = su
            if sv > max_speed:
                max_speed = sv
            rate = max(su * inv_dx, sv * inv_dy)
            if rate > max_rate:
                max_rate = rate
    return max_rate, max_speed, max_depth


# ---------------------------------------------------------------------------
# batched tridiagonal solvers (one independent system per row of the inputs)


@njit(cache=True)
def thomas_batch(dl, dd, du, rhs, out):
    """Gaussian elimination without pivoting on each row's tridiagonal
    system; raises on an exactly singular pivot."""
    m, n = dd.shape
    cw = np.empty(n)
    dw = np.empty(n)
    for k in range(m):
        den = dd[k, 0]
        if den == 0.0:
            raise ZeroDivisionError("singular tridiagonal system: zero pivot")
        cw[0] = du[k, 0] / den
        dw[0] = rhs[k, 0] / den
        for i in range(1, n):
            den = dd[k, i] - dl[k, i] * cw[i - 1]
            if den == 0.0:
                raise ZeroDivisionError("singular tridiagonal system: zero pivot")
            cw[i] = du[k, i] / den
            dw[i] = (rhs[k, i] - dl[k, i] * dw[i - 1]) / den
        out[k, n - 1] = dw[n - 1]
        for i in range(n - 2, -1, -1):
            out[k, i] = dw[i] - cw[i] * out[k, i + 1]


@njit(cache=True)
def cyclic_reduction_batch(dl, dd, du, rhs, out):
    """Odd-even cyclic reduction on each row's tridiagonal system.

    Systems are padded with decoupled identity rows up to a power of two;
    reduction halves the unknowns until a 2x2 core remains, then back
    substitution fills the eliminated entries level by level.
    """
    m, n = dd.shape
    n2 = 1
    while n2 < n:
        n2 *= 2
    if n2 < 2:
        n2 = 2
    a = np.empty(n2)
    b = np.empty(n2)
    c = np.empty(n2)
    r = np.empty(n2)
    x = np.empty(n2)
    for k in range(m):
        for i in range(n):
            a[i] = dl[k, i]
            b[i] = dd[k, i]
            c[i] = du[k, i]
            r[i] = rhs[k, i]
        for i in range(n, n2):
            a[i] = 0.0
            b[i] = 1.0
            c[i] = 0.0
            r[i] = 0.0
        stride = 1
        while stride < n2 // 2:
            for idx in range(2 * stride - 1, n2, 2 * stride):
                il = idx - stride
                if b[il] == 0.0:
                    raise ZeroDivisionError("singular tridiagonal system in reduction")
                alpha = -a[idx] / b[il]
                a[idx] = alpha * a[il]
                b[idx] += alpha * c[il]
                r[idx] += alpha * r[il]
                ir = idx + stride
                if ir < n2:
                    if b[ir] == 0.0:
                        raise ZeroDivisionError("singular tridiagonal system in reduction")
                    beta = -c[idx] / b[ir]
                    c[idx] = beta * c[ir]
                    b[idx] += beta * a[ir]
                    r[idx] += beta * r[ir]
                else:
                    c[idx] = 0.0
            stride *= 2
        i1 = n2 // 2 - 1
        i2 = n2 - 1
        det = b[i1] * b[i2] - c[i1] * a[i2]
        if det == 0.0:
            raise ZeroDivisionError("singular tridiagonal system: zero core determinant")
        x[i1] = (r[i1] * b[i2] - c[i1] * r[i2]) / det
        x[i2] = (b[i1] * r[i2] - a[i2] * r[i1]) / det
        stride = n2 // 4
        while stride >= 1:
            for idx in range(stride - 1, n2, 2 * stride):
                if b[idx] == 0.0:
                    raise ZeroDivisionError("singular tridiagonal system in back substitution")
                lower = x[idx - stride] if idx - stride >= 0 else 0.0
                x[idx] = (r[idx] - a[idx] * lower - c[idx] * x[idx + stride]) / b[idx]
            stride //= 2
        for i in range(n):
            out[k, i] = x[i]
