"""Compiled explicit time-advance loop.

Mirrors ``FVScheme.stable_dt`` / ``FVScheme.step`` operation by operation so
that the many thousands of small explicit steps of a run do not pay Python
call overhead.  ``tests/test_kernel.py`` checks both paths against each other.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NEGATIVE = 1
NONFINITE = 2
STEADY = 3
MAX_STEPS = 4

RULE_CODES = {"fraction-weighted": 0, "fixed": 1}

# stats slots
N_STEPS, DT_MIN, DT_MAX, DT_SUM, MAX_TOTAL, EXCEEDED = range(6)


@njit(cache=True)
def _pow(v, g):
    if g == 1.0:
        return v
    if g == 2.0:
        return v * v
    if g == 3.0:
        return v * v * v
    return v**g


@njit(cache=True)
def _law(v, k, g):
    return k * _pow(v, g)


@njit(cache=True)
def _law_deriv(v, k, g):
    if g == 1.0:
        return k
    return k * g * _pow(v, g - 1.0)


@njit(cache=True)
def _law_potential(v, k, g):
    return k * g / (g + 1.0) * _pow(v, g + 1.0)


@njit(cache=True)
def _interface_massflux(phi, f, out, Pk, Pg, pk, pg, mt, rule, alpha, beta):
    N = phi.shape[0]
    cl = f - 1
    PhiL = 0.0
    PhiR = 0.0
    for n in range(N):
        PhiL += phi[n, cl]
        PhiR += phi[n, f]
    PiL = _law_potential(PhiL, Pk, Pg)
    PiR = _law_potential(PhiR, Pk, Pg)
    for n in range(N):
        jump = _law_potential(phi[n, f], pk[n], pg[n]) - _law_potential(phi[n, cl], pk[n], pg[n])
        q = jump
        if Pk != 0.0:
            if rule == 0:
                a = phi[n, f] / PhiR if PhiR > 0.0 else 1.0 / N
                b = phi[n, cl] / PhiL if PhiL > 0.0 else 1.0 / N
            else:
                a = alpha[n]
                b = beta[n]
            q = a * PiR - b * PiL + jump
        out[n] = -mt[n] * q


@njit(cache=True)
def _fluxes(phi, F, s, trans, Pk, Pg, pk, pg, dirichlet, bc_phi_l, bc_phi_r, bc_s_l, bc_s_r,
            bc_t_l, bc_t_r, iface, mt, rule, alpha, beta, qbuf):
    N, nc = phi.shape
    for c in range(nc):
        Phi = 0.0
        for n in range(N):
            Phi += phi[n, c]
        base = _law(Phi, Pk, Pg)
        for n in range(N):
            s[n, c] = base + _law(phi[n, c], pk[n], pg[n])
    for n in range(N):
        F[n, 0] = 0.0
        F[n, nc] = 0.0
        for c in range(nc - 1):
            ds = s[n, c + 1] - s[n, c]
            up = phi[n, c] if ds < 0.0 else phi[n, c + 1]
            F[n, c + 1] = -trans[n, c] * up * ds
        if dirichlet:
            dl = s[n, 0] - bc_s_l[n]
            F[n, 0] = -bc_t_l[n] * (bc_phi_l[n] if dl < 0.0 else phi[n, 0]) * dl
            dr = bc_s_r[n] - s[n, nc - 1]
            F[n, nc] = -bc_t_r[n] * (phi[n, nc - 1] if dr < 0.0 else bc_phi_r[n]) * dr
    if iface >= 0:
        _interface_massflux(phi, iface, qbuf, Pk, Pg, pk, pg, mt, rule, alpha, beta)
        for n in range(N):
            F[n, iface] = qbuf[n]


@njit(cache=True)
def _stable_dt(phi, widths, mob, dt_factor, Pk, Pg, pk, pg, grate, gcap, has_growth,
               iface, mt_max, cfl, dt_max):
    N, nc = phi.shape
    dt = np.inf
    rmax = 0.0
    for c in range(nc):
        Phi = 0.0
        for n in range(N):
            Phi += phi[n, c]
        dP = Phi * _law_deriv(Phi, Pk, Pg) if Pk != 0.0 else 0.0
        w2 = widths[c] * widths[c]
        for n in range(N):
            D = dP
            if pk[n] != 0.0:
                D += phi[n, c] * _law_deriv(phi[n, c], pk[n], pg[n])
            if D < 1e-12:
                D = 1e-12
            cand = cfl * w2 / (2.0 * mob[n, c] * D * dt_factor[c] + 1e-300)
            if cand < dt:
                dt = cand
            if has_growth:
                r = abs(grate[n, c] * (1.0 - Phi / gcap[n, c]))
                if r > rmax:
                    rmax = r
    if rmax > 0.0:
        cand = cfl / rmax
        if cand < dt:
            dt = cand
    if iface >= 0:
        rate = 0.0
        for c in (iface - 1, iface):
            Phi = 0.0
            for n in range(N):
                Phi += phi[n, c]
            dPi = Phi * _law_deriv(Phi, Pk, Pg) if Pk != 0.0 else 0.0
            dpi = 0.0
            for n in range(N):
                if pk[n] != 0.0:
                    v = phi[n, c] * _law_deriv(phi[n, c], pk[n], pg[n])
                    if v > dpi:
                        dpi = v
            r = mt_max * (dPi + dpi)
            if r > rate:
                rate = r
        wmin = min(widths[iface - 1], widths[iface])
        cand = cfl * wmin / (rate + 1e-300)
        if cand < dt:
            dt = cand
    if dt_max < dt:
        dt = dt_max
    return dt


@njit(cache=True)
def advance(phi, t, t_target, widths, mob, dt_factor, trans, Pk, Pg, pk, pg,
            grate, gcap, has_growth, dirichlet, bc_phi_l, bc_phi_r, bc_s_l, bc_s_r, bc_t_l, bc_t_r,
            iface, mt, rule, alpha, beta, mt_max,
            cfl, dt_max, phi_max, steady_tol, check_every, max_steps, stats, info):
    """Step ``phi`` in place from ``t`` to ``t_target``; returns ``(status, t)``.

    On failure ``info`` holds ``(population, cell or face, value)``.
    """
    N, nc = phi.shape
    F = np.zeros((N, nc + 1))
    s = np.empty((N, nc))
    new = np.empty((N, nc))
    qbuf = np.empty(N)
    while True:
        dt = _stable_dt(phi, widths, mob, dt_factor, Pk, Pg, pk, pg, grate, gcap, has_growth,
                        iface, mt_max, cfl, dt_max)
        hit = t + dt >= t_target * (1.0 - 1e-14)
        if hit:
            dt = t_target - t
        if dt <= 0.0:
            return OK, t_target
        _fluxes(phi, F, s, trans, Pk, Pg, pk, pg, dirichlet, bc_phi_l, bc_phi_r, bc_s_l, bc_s_r,
                bc_t_l, bc_t_r, iface, mt, rule, alpha, beta, qbuf)
        for n in range(N):
            for f in range(nc + 1):
                if not np.isfinite(F[n, f]):
                    info[0] = n
                    info[1] = f
                    return NONFINITE, t
        lo = 0.0
        for n in range(N):
            for c in range(nc):
                v = phi[n, c] - dt / widths[c] * (F[n, c + 1] - F[n, c])
                if has_growth:
                    Phi = 0.0
                    for m in range(N):
                        Phi += phi[m, c]
                    v += dt * grate[n, c] * phi[n, c] * (1.0 - Phi / gcap[n, c])
                new[n, c] = v
                if v < lo:
                    lo = v
                    info[0] = n
                    info[1] = c
                    info[2] = v
        if lo < -1e-13:
            return NEGATIVE, t + dt
        maxrate = 0.0
        step_total = 0.0
        stats[N_STEPS] += 1.0
        check = steady_tol > 0.0 and int(stats[N_STEPS]) % check_every == 0
        for c in range(nc):
            Phi = 0.0
            for n in range(N):
                v = new[n, c]
                if v < 0.0:
                    v = 0.0
                if check:
                    r = abs(v - phi[n, c])
                    if r > maxrate:
                        maxrate = r
                if not np.isfinite(v):
                    info[0] = n
                    info[1] = c
                    return NONFINITE, t + dt
                phi[n, c] = v
                Phi += v
            if Phi > step_total:
                step_total = Phi
        if step_total > stats[MAX_TOTAL]:
            stats[MAX_TOTAL] = step_total
        if step_total > phi_max + 1e-10:
            stats[EXCEEDED] += 1.0
        if dt < stats[DT_MIN]:
            stats[DT_MIN] = dt
        if dt > stats[DT_MAX]:
            stats[DT_MAX] = dt
        stats[DT_SUM] += dt
        t = t_target if hit else t + dt
        if check and maxrate / dt <= steady_tol:
            return STEADY, t
        if hit:
            return OK, t
        if max_steps > 0 and stats[N_STEPS] >= max_steps:
            return MAX_STEPS, t
