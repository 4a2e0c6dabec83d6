"""Compiled inner loops shared by the solvers.

The 1D and radial solvers use the same conservative flux kernel; they only
differ in the face weights (1 vs. face circumference) and cell measures.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

CASE_NONE = 0
CASE_A = 1
CASE_B1 = 2
CASE_B2 = 3
CASE_C1 = 4
CASE_C2 = 5

STATUS_OK = 0
STATUS_DT_UNDERFLOW = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3
STATUS_NEGATIVE = 4


@njit(cache=True)
def sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def hill_pair(x, theta, q):
    """``(x^q/(theta^q+x^q), theta^q/(theta^q+x^q))`` without forming powers."""
    if x <= 0.0:
        return 0.0, 1.0
    z = q * math.log(x / theta)
    return sigmoid(z), sigmoid(-z)


@njit(cache=True)
def rates(case, mu, q, nbar, rho, s):
    if case == CASE_NONE:
        return 0.0, 0.0
    if case == CASE_A:
        return mu, mu
    if case == CASE_B1 or case == CASE_B2:
        up, down = hill_pair(rho, 1.0, q)
    else:
        up, down = hill_pair(s, nbar, q)
    if case == CASE_B1 or case == CASE_C1:
        return mu * up, mu * down
    return mu * down, mu * up


@njit(cache=True)
def fv_rhs(y, out, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar):
    """Method-of-lines right-hand side on a line of cells.

    ``y``/``out`` have shape (3, N) holding (n0, n1, s). ``wface[i]`` is the
    weight of the face between cells i and i+1, ``inv_vol[i]`` the inverse
    cell measure divided by the same weight convention. Boundary faces carry
    no flux.
    """
    n0 = y[0]
    n1 = y[1]
    s = y[2]
    N = n0.shape[0]
    for i in range(N):
        out[0, i] = 0.0
        out[1, i] = 0.0
        out[2, i] = 0.0
    inv_h = 1.0 / h
    for i in range(N - 1):
        w = wface[i]
        ds = (s[i + 1] - s[i]) * inv_h
        b = chi * ds
        bp = b if b > 0.0 else 0.0
        bm = -b if b < 0.0 else 0.0
        f_s = ds * w
        if minimal:
            f0 = (D * (n0[i + 1] - n0[i]) * inv_h - bp * n0[i] + bm * n0[i + 1]) * w
            f1 = 0.0
        else:
            f0 = D * (n0[i + 1] - n0[i]) * inv_h * w
            f1 = (D * (n1[i + 1] - n1[i]) * inv_h - bp * n1[i] + bm * n1[i + 1]) * w
        out[0, i] += f0
        out[0, i + 1] -= f0
        out[1, i] += f1
        out[1, i + 1] -= f1
        out[2, i] += f_s
        out[2, i + 1] -= f_s
    for i in range(N):
        iv = inv_vol[i]
        out[0, i] *= iv
        out[1, i] *= iv
        out[2, i] *= iv
        out[2, i] += n0[i] - s[i]
        if not minimal:
            mu01, mu10 = rates(case, mu, q, nbar, n0[i] + n1[i], s[i])
            G = -mu01 * n0[i] + mu10 * n1[i]
            out[0, i] += G
            out[1, i] -= G


@njit(cache=True)
def _store_clipped(ynew, y, inv_vol):
    """Copy ``ynew`` into ``y`` with negatives set to 0.

    The positive entries of an affected row are rescaled so that its
    volume-weighted total is unchanged. Returns True if anything was clipped.
    """
    rows, cols = ynew.shape
    clipped = False
    for r in range(rows):
        pos = 0.0
        neg = 0.0
        for c in range(cols):
            v = ynew[r, c]
            if v < 0.0:
                neg -= v / inv_vol[c]
            else:
                pos += v / inv_vol[c]
        fac = 1.0
        if neg > 0.0:
            clipped = True
            if pos > neg:
                fac = (pos - neg) / pos
        for c in range(cols):
            v = ynew[r, c]
            y[r, c] = 0.0 if v < 0.0 else v * fac
    return clipped


@njit(cache=True)
def bs23_advance(y, t, t_stop, dt, dt_min, dt_max, rtol, atol, max_steps,
                 h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar):
    """Advance ``y`` in place from ``t`` to ``t_stop`` with Bogacki-Shampine 3(2).

    Returns ``(t, dt_next, status, n_accepted, n_rejected)``. Accepted steps
    must keep every entry >= -atol; entries in [-atol, 0) are set to 0 and
    the rest of their row is rescaled to keep its volume-weighted total.
    """
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    ynew = np.empty_like(y)
    fv_rhs(y, k1, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
    n_acc = 0
    n_rej = 0
    rows, cols = y.shape
    while t < t_stop:
        if n_acc + n_rej >= max_steps:
            return t, dt, STATUS_MAX_STEPS, n_acc, n_rej
        if dt < dt_min:
            return t, dt, STATUS_DT_UNDERFLOW, n_acc, n_rej
        last = False
        step = dt
        if t + step >= t_stop:
            step = t_stop - t
            last = True
        for r in range(rows):
            for c in range(cols):
                tmp[r, c] = y[r, c] + 0.5 * step * k1[r, c]
        fv_rhs(tmp, k2, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        for r in range(rows):
            for c in range(cols):
                tmp[r, c] = y[r, c] + 0.75 * step * k2[r, c]
        fv_rhs(tmp, k3, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        finite = True
        for r in range(rows):
            for c in range(cols):
                v = y[r, c] + step * (2.0 / 9.0 * k1[r, c] + 1.0 / 3.0 * k2[r, c] + 4.0 / 9.0 * k3[r, c])
                ynew[r, c] = v
                if not math.isfinite(v):
                    finite = False
        if not finite:
            if step <= dt_min:
                return t, step, STATUS_NONFINITE, n_acc, n_rej
            dt = 0.25 * step
            n_rej += 1
            continue
        fv_rhs(ynew, k4, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        err = 0.0
        lowest = 0.0
        for r in range(rows):
            for c in range(cols):
                e = step * (-5.0 / 72.0 * k1[r, c] + 1.0 / 12.0 * k2[r, c]
                            + 1.0 / 9.0 * k3[r, c] - 0.125 * k4[r, c])
                scale = atol + rtol * max(abs(y[r, c]), abs(ynew[r, c]))
                ratio = abs(e) / scale
                if not ratio <= err:
                    err = ratio
                if ynew[r, c] < lowest:
                    lowest = ynew[r, c]
        if not math.isfinite(err):
            dt = 0.25 * step
            n_rej += 1
            continue
        if err > 1.0:
            fac = 0.9 * err ** (-1.0 / 3.0)
            if fac < 0.2:
                fac = 0.2
            dt = step * fac
            n_rej += 1
            continue
        if lowest < -atol:
            dt = 0.5 * step
            n_rej += 1
            continue
        clipped = _store_clipped(ynew, y, inv_vol)
        if clipped:
            fv_rhs(y, k1, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        else:
            for r in range(rows):
                for c in range(cols):
                    k1[r, c] = k4[r, c]
        n_acc += 1
        t = t_stop if last else t + step
        fac = 5.0 if err == 0.0 else 0.9 * err ** (-1.0 / 3.0)
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        new_dt = step * fac
        if last and new_dt < dt:
            # a truncated final step says nothing about the natural step size
            new_dt = dt
        dt = min(new_dt, dt_max)
    return t, dt, STATUS_OK, n_acc, n_rej


RKC_EPS = 2.0 / 13.0
RKC_MAX_STAGES = 2000
RKC_RHO_EVERY = 25


@njit(cache=True)
def diffusion_radius(h, wface, inv_vol, D):
    """Gershgorin bound for the diffusive part of the Jacobian."""
    n = inv_vol.shape[0]
    dmax = D if D > 1.0 else 1.0
    best = 0.0
    for i in range(n):
        w = 0.0
        if i > 0:
            w += wface[i - 1]
        if i < n - 1:
            w += wface[i]
        g = 2.0 * dmax * w * inv_vol[i] / h
        if g > best:
            best = g
    return best


@njit(cache=True)
def spectral_radius(y, fy, v, work, fwork, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar):
    """Power-iteration estimate of the Jacobian's spectral radius at ``y``.

    ``v`` carries the previous eigenvector guess in and the new one out.
    """
    rows, cols = y.shape
    ynorm = 0.0
    vnorm = 0.0
    for r in range(rows):
        for c in range(cols):
            ynorm += y[r, c] * y[r, c]
            vnorm += v[r, c] * v[r, c]
    ynorm = math.sqrt(ynorm)
    vnorm = math.sqrt(vnorm)
    if vnorm == 0.0 or not math.isfinite(vnorm):
        for r in range(rows):
            for c in range(cols):
                v[r, c] = 1.0 + 0.1 * ((r * 7919 + c * 104729) % 17)
        vnorm = 0.0
        for r in range(rows):
            for c in range(cols):
                vnorm += v[r, c] * v[r, c]
        vnorm = math.sqrt(vnorm)
    dynrm = 1e-7 * ynorm if ynorm > 0.0 else 1e-7
    rho = 0.0
    for it in range(50):
        for r in range(rows):
            for c in range(cols):
                work[r, c] = y[r, c] + v[r, c] * (dynrm / vnorm)
        fv_rhs(work, fwork, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        nrm = 0.0
        for r in range(rows):
            for c in range(cols):
                d = fwork[r, c] - fy[r, c]
                v[r, c] = d
                nrm += d * d
        nrm = math.sqrt(nrm)
        old = rho
        rho = nrm / dynrm
        if nrm == 0.0:
            break
        vnorm = nrm
        if it >= 3 and abs(rho - old) <= 0.01 * rho:
            break
    return rho


@njit(cache=True)
def rkc_advance(y, t, t_stop, dt, dt_min, dt_max, rtol, atol, max_steps,
                h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar):
    """Advance ``y`` in place with the second-order Runge-Kutta-Chebyshev method.

    Explicit, with a damped Chebyshev stability interval that grows with the
    square of the stage count, and an embedded local error estimate. Same
    return tuple and positivity handling as :func:`bs23_advance`.
    """
    rows, cols = y.shape
    f0 = np.empty_like(y)
    fj = np.empty_like(y)
    y0 = np.empty_like(y)
    yjm1 = np.empty_like(y)
    yjm2 = np.empty_like(y)
    yj = np.empty_like(y)
    eig = np.zeros_like(y)
    work = np.empty_like(y)
    tval = np.empty(RKC_MAX_STAGES + 1)
    dval = np.empty(RKC_MAX_STAGES + 1)
    ddval = np.empty(RKC_MAX_STAGES + 1)
    bval = np.empty(RKC_MAX_STAGES + 1)
    fv_rhs(y, f0, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
    rho_diff = diffusion_radius(h, wface, inv_vol, D)
    rho = 0.0
    since_rho = RKC_RHO_EVERY
    n_acc = 0
    n_rej = 0
    while t < t_stop:
        if n_acc + n_rej >= max_steps:
            return t, dt, STATUS_MAX_STEPS, n_acc, n_rej
        if dt < dt_min:
            return t, dt, STATUS_DT_UNDERFLOW, n_acc, n_rej
        if since_rho >= RKC_RHO_EVERY:
            est = 1.2 * spectral_radius(y, f0, eig, work, fj, h, wface, inv_vol, D, chi, minimal,
                                        case, mu, q, nbar)
            rho = est if est > rho_diff else rho_diff
            since_rho = 0
        last = False
        step = dt
        # stability interval of s stages is about 0.653 s^2
        smax_step = 0.653 * RKC_MAX_STAGES * RKC_MAX_STAGES / rho
        if step > smax_step:
            step = smax_step
        if t + step >= t_stop:
            step = t_stop - t
            last = True
        ns = 1 + int(math.sqrt(1.0 + 1.54 * step * rho))
        if ns < 2:
            ns = 2
        if ns > RKC_MAX_STAGES:
            ns = RKC_MAX_STAGES
        w0 = 1.0 + RKC_EPS / (ns * ns)
        tval[0] = 1.0
        tval[1] = w0
        dval[0] = 0.0
        dval[1] = 1.0
        ddval[0] = 0.0
        ddval[1] = 0.0
        for j in range(2, ns + 1):
            tval[j] = 2.0 * w0 * tval[j - 1] - tval[j - 2]
            dval[j] = 2.0 * tval[j - 1] + 2.0 * w0 * dval[j - 1] - dval[j - 2]
            ddval[j] = 4.0 * dval[j - 1] + 2.0 * w0 * ddval[j - 1] - ddval[j - 2]
        w1 = dval[ns] / ddval[ns]
        for j in range(2, ns + 1):
            bval[j] = ddval[j] / (dval[j] * dval[j])
        bval[0] = bval[2]
        bval[1] = bval[2]
        mut1 = bval[1] * w1
        for r in range(rows):
            for c in range(cols):
                y0[r, c] = y[r, c]
                yjm2[r, c] = y[r, c]
                yjm1[r, c] = y[r, c] + mut1 * step * f0[r, c]
        finite = True
        for j in range(2, ns + 1):
            fv_rhs(yjm1, fj, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
            muj = 2.0 * bval[j] * w0 / bval[j - 1]
            nuj = -bval[j] / bval[j - 2]
            mutj = 2.0 * bval[j] * w1 / bval[j - 1]
            gamj = -(1.0 - bval[j - 1] * tval[j - 1]) * mutj
            for r in range(rows):
                for c in range(cols):
                    yj[r, c] = ((1.0 - muj - nuj) * y0[r, c] + muj * yjm1[r, c] + nuj * yjm2[r, c]
                                + mutj * step * fj[r, c] + gamj * step * f0[r, c])
            for r in range(rows):
                for c in range(cols):
                    yjm2[r, c] = yjm1[r, c]
                    yjm1[r, c] = yj[r, c]
        for r in range(rows):
            for c in range(cols):
                if not math.isfinite(yjm1[r, c]):
                    finite = False
        if not finite:
            if step <= dt_min:
                return t, step, STATUS_NONFINITE, n_acc, n_rej
            dt = 0.25 * step
            n_rej += 1
            since_rho = RKC_RHO_EVERY
            continue
        fv_rhs(yjm1, fj, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        err = 0.0
        lowest = 0.0
        for r in range(rows):
            for c in range(cols):
                e = (12.0 * (y0[r, c] - yjm1[r, c]) + 6.0 * step * (f0[r, c] + fj[r, c])) / 15.0
                scale = atol + rtol * max(abs(y0[r, c]), abs(yjm1[r, c]))
                ratio = abs(e) / scale
                if not ratio <= err:
                    err = ratio
                if yjm1[r, c] < lowest:
                    lowest = yjm1[r, c]
        if not math.isfinite(err):
            dt = 0.25 * step
            n_rej += 1
            since_rho = RKC_RHO_EVERY
            continue
        if err > 1.0:
            fac = 0.8 * err ** (-1.0 / 3.0)
            if fac < 0.1:
                fac = 0.1
            dt = step * fac
            n_rej += 1
            since_rho = RKC_RHO_EVERY
            continue
        if lowest < -atol:
            dt = 0.5 * step
            n_rej += 1
            continue
        if _store_clipped(yjm1, y, inv_vol):
            fv_rhs(y, f0, h, wface, inv_vol, D, chi, minimal, case, mu, q, nbar)
        else:
            for r in range(rows):
                for c in range(cols):
                    f0[r, c] = fj[r, c]
        n_acc += 1
        since_rho += 1
        t = t_stop if last else t + step
        fac = 10.0 if err == 0.0 else 0.8 * err ** (-1.0 / 3.0)
        if fac > 10.0:
            fac = 10.0
        if fac < 0.1:
            fac = 0.1
        new_dt = step * fac
        if last and new_dt < dt:
            new_dt = dt
        dt = min(new_dt, dt_max)
    return t, dt, STATUS_OK, n_acc, n_rej


@njit(cache=True)
def fe2d_steps(u, v, w, n_steps, tau, h, D, chi, case, mu, q, nbar, bound_factor):
    """Explicit finite-volume updates on an N x N grid (all terms at step k).

    Order within a step: w, then u, then v; every right-hand side only reads
    step-k values. Zero-flux boundaries use mirrored ghost values for the
    Laplacians and vanishing boundary fluxes for v.

    Stops early on non-finite or negative values.

    Returns ``(steps_done, status, bound_violations, max_b)``.
    """
    N = u.shape[0]
    un = np.empty_like(u)
    vn = np.empty_like(v)
    wn = np.empty_like(w)
    inv_h2 = 1.0 / (h * h)
    inv_h = 1.0 / h
    diff_bound = h * h / (4.0 * (D + 1.0))
    violations = 0
    max_b_seen = 0.0
    for step in range(n_steps):
        max_b = 0.0
        for i in range(N):
            im = i - 1 if i > 0 else 0
            ip = i + 1 if i < N - 1 else N - 1
            for j in range(N):
                jm = j - 1 if j > 0 else 0
                jp = j + 1 if j < N - 1 else N - 1
                wc = w[i, j]
                uc = u[i, j]
                vc = v[i, j]
                lap_w = (w[ip, j] - 2.0 * wc + w[im, j]) * inv_h2 + (w[i, jp] - 2.0 * wc + w[i, jm]) * inv_h2
                wn[i, j] = wc + tau * (lap_w + uc - wc)
                mu01, mu10 = rates(case, mu, q, nbar, uc + vc, wc)
                lap_u = (u[ip, j] - 2.0 * uc + u[im, j]) * inv_h2 + (u[i, jp] - 2.0 * uc + u[i, jm]) * inv_h2
                un[i, j] = uc + tau * (D * lap_u - mu01 * uc + mu10 * vc)
                # v fluxes through the four faces of cell (i, j)
                div = 0.0
                if i < N - 1:
                    b = chi * (w[i + 1, j] - wc) * inv_h
                    bp = b if b > 0.0 else 0.0
                    bm = -b if b < 0.0 else 0.0
                    if abs(b) > max_b:
                        max_b = abs(b)
                    div += D * (v[i + 1, j] - vc) * inv_h - bp * vc + bm * v[i + 1, j]
                if i > 0:
                    b = chi * (wc - w[i - 1, j]) * inv_h
                    bp = b if b > 0.0 else 0.0
                    bm = -b if b < 0.0 else 0.0
                    div -= D * (vc - v[i - 1, j]) * inv_h - bp * v[i - 1, j] + bm * vc
                if j < N - 1:
                    b = chi * (w[i, j + 1] - wc) * inv_h
                    bp = b if b > 0.0 else 0.0
                    bm = -b if b < 0.0 else 0.0
                    if abs(b) > max_b:
                        max_b = abs(b)
                    div += D * (v[i, j + 1] - vc) * inv_h - bp * vc + bm * v[i, j + 1]
                if j > 0:
                    b = chi * (wc - w[i, j - 1]) * inv_h
                    bp = b if b > 0.0 else 0.0
                    bm = -b if b < 0.0 else 0.0
                    div -= D * (vc - v[i, j - 1]) * inv_h - bp * v[i, j - 1] + bm * vc
                vn[i, j] = vc + tau * (div * inv_h + mu01 * uc - mu10 * vc)
        bound = diff_bound
        if max_b > 0.0:
            adv_bound = h / (2.0 * max_b)
            if adv_bound < bound:
                bound = adv_bound
        if tau > bound_factor * bound:
            violations += 1
        if max_b > max_b_seen:
            max_b_seen = max_b
        finite = True
        negative = False
        for i in range(N):
            for j in range(N):
                u[i, j] = un[i, j]
                v[i, j] = vn[i, j]
                w[i, j] = wn[i, j]
                if not (math.isfinite(un[i, j]) and math.isfinite(vn[i, j]) and math.isfinite(wn[i, j])):
                    finite = False
                elif un[i, j] < 0.0 or vn[i, j] < 0.0 or wn[i, j] < 0.0:
                    negative = True
        if not finite:
            return step + 1, STATUS_NONFINITE, violations, max_b_seen
        if negative:
            return step + 1, STATUS_NEGATIVE, violations, max_b_seen
    return n_steps, STATUS_OK, violations, max_b_seen
