"""Compiled Yee-grid update kernels (2D, both polarisations).

Units: eps0 = mu0 = c = 1, lengths in um.  Arrays are indexed [i, j] with i
along x and j along y.  Ez (TE) / Hz (TM) live at cell centres; the in-plane
components sit half a cell along their own axis.

Update coefficients are stored per cell (ca, cb arrays shaped like the
fields) so the inner loops vectorise.  Drude currents only exist on a sparse
list of cells and are handled by separate passes.

Every kernel touches each cell independently, so splitting the outer loop
across threads (the ``parallel`` table) gives bit-identical results.
"""
import numpy as np
from numba import njit, prange


def _te_h(ez, hx, hy, dt_dx, dt_dy, ikhx, ikhy, periodic_x):
    nx, ny = ez.shape
    for i in prange(nx):
        ip = i + 1
        if ip == nx:
            ip = 0
        ezr = ez[i]
        hxr = hx[i]
        for j in range(ny - 1):
            hxr[j] -= dt_dy * ikhy[j] * (ezr[j + 1] - ezr[j])
        if i < nx - 1 or periodic_x:
            a = dt_dx * ikhx[i]
            ezp = ez[ip]
            hyr = hy[i]
            for j in range(ny):
                hyr[j] += a * (ezp[j] - ezr[j])


def _te_e(ez, hx, hy, ca, cb, ikex, ikey, inv_dx, inv_dy, periodic_x):
    nx, ny = ez.shape
    i_lo = 0 if periodic_x else 1
    i_hi = nx if periodic_x else nx - 1
    for i in prange(i_lo, i_hi):
        im = i - 1
        if im < 0:
            im = nx - 1
        a = ikex[i] * inv_dx
        ezr = ez[i]
        hyr = hy[i]
        hym = hy[im]
        hxr = hx[i]
        car = ca[i]
        cbr = cb[i]
        for j in range(1, ny - 1):
            curl = a * (hyr[j] - hym[j]) - ikey[j] * inv_dy * (hxr[j] - hxr[j - 1])
            ezr[j] = car[j] * ezr[j] + cbr[j] * curl


def _drude_current(f, jd, ci, cj, kd, bd):
    """J^{n+1/2} = kd J^{n-1/2} + bd E^n on the listed cells."""
    for k in prange(ci.size):
        jd[k] = kd[k] * jd[k] + bd[k] * f[ci[k], cj[k]]


def _drude_apply(f, jd, ci, cj, cb):
    for k in prange(ci.size):
        i = ci[k]
        j = cj[k]
        f[i, j] -= cb[i, j] * jd[k]


def _te_h_pml(ez, hx, hy, xs, ys, psi_hyx, psi_hxy, bhx, chx, bhy, chy, dt, inv_dx, inv_dy):
    nx, ny = ez.shape
    for k in prange(xs.size):
        i = xs[k]
        if i >= nx - 1:
            continue
        for j in range(ny):
            d = (ez[i + 1, j] - ez[i, j]) * inv_dx
            psi_hyx[k, j] = bhx[i] * psi_hyx[k, j] + chx[i] * d
            hy[i, j] += dt * psi_hyx[k, j]
    for i in prange(nx):
        for k in range(ys.size):
            j = ys[k]
            if j >= ny - 1:
                continue
            d = (ez[i, j + 1] - ez[i, j]) * inv_dy
            psi_hxy[i, k] = bhy[j] * psi_hxy[i, k] + chy[j] * d
            hx[i, j] -= dt * psi_hxy[i, k]


def _te_e_pml(ez, hx, hy, cb, xs, ys, psi_ezx, psi_ezy, bex, cex, bey, cey, inv_dx, inv_dy, periodic_x):
    nx, ny = ez.shape
    i_lo = 0 if periodic_x else 1
    i_hi = nx if periodic_x else nx - 1
    for k in prange(xs.size):
        i = xs[k]
        if i < 1 or i >= nx - 1:
            continue
        for j in range(1, ny - 1):
            d = (hy[i, j] - hy[i - 1, j]) * inv_dx
            psi_ezx[k, j] = bex[i] * psi_ezx[k, j] + cex[i] * d
            ez[i, j] += cb[i, j] * psi_ezx[k, j]
    for i in prange(i_lo, i_hi):
        for k in range(ys.size):
            j = ys[k]
            if j < 1 or j >= ny - 1:
                continue
            d = (hx[i, j] - hx[i, j - 1]) * inv_dy
            psi_ezy[i, k] = bey[j] * psi_ezy[i, k] + cey[j] * d
            ez[i, j] -= cb[i, j] * psi_ezy[i, k]


# --- TM: Hz at cell centres, Ex at (i, j+1/2), Ey at (i+1/2, j)

def _tm_e(hz, ex, ey, cax, cbx, cay, cby, ikhx, ikhy, inv_dx, inv_dy, periodic_x):
    nx, ny = hz.shape
    for i in prange(nx):
        ip = i + 1
        if ip == nx:
            ip = 0
        hzr = hz[i]
        exr = ex[i]
        for j in range(ny - 1):
            exr[j] = cax[i, j] * exr[j] + cbx[i, j] * ikhy[j] * (hzr[j + 1] - hzr[j]) * inv_dy
        if i < nx - 1 or periodic_x:
            a = ikhx[i] * inv_dx
            hzp = hz[ip]
            eyr = ey[i]
            for j in range(ny):
                eyr[j] = cay[i, j] * eyr[j] - cby[i, j] * a * (hzp[j] - hzr[j])


def _tm_h(hz, ex, ey, ikex, ikey, dt_dx, dt_dy, periodic_x):
    nx, ny = hz.shape
    i_lo = 0 if periodic_x else 1
    i_hi = nx if periodic_x else nx - 1
    for i in prange(i_lo, i_hi):
        im = i - 1
        if im < 0:
            im = nx - 1
        a = dt_dx * ikex[i]
        hzr = hz[i]
        exr = ex[i]
        eyr = ey[i]
        eym = ey[im]
        for j in range(1, ny - 1):
            hzr[j] += dt_dy * ikey[j] * (exr[j] - exr[j - 1]) - a * (eyr[j] - eym[j])


def _tm_e_pml(hz, ex, ey, cbx, cby, xs, ys, psi_eyx, psi_exy, bhx, chx, bhy, chy, inv_dx, inv_dy):
    nx, ny = hz.shape
    for k in prange(xs.size):
        i = xs[k]
        if i >= nx - 1:
            continue
        for j in range(ny):
            d = (hz[i + 1, j] - hz[i, j]) * inv_dx
            psi_eyx[k, j] = bhx[i] * psi_eyx[k, j] + chx[i] * d
            ey[i, j] -= cby[i, j] * psi_eyx[k, j]
    for i in prange(nx):
        for k in range(ys.size):
            j = ys[k]
            if j >= ny - 1:
                continue
            d = (hz[i, j + 1] - hz[i, j]) * inv_dy
            psi_exy[i, k] = bhy[j] * psi_exy[i, k] + chy[j] * d
            ex[i, j] += cbx[i, j] * psi_exy[i, k]


def _tm_h_pml(hz, ex, ey, xs, ys, psi_hzx, psi_hzy, bex, cex, bey, cey, dt, inv_dx, inv_dy, periodic_x):
    nx, ny = hz.shape
    i_lo = 0 if periodic_x else 1
    i_hi = nx if periodic_x else nx - 1
    for k in prange(xs.size):
        i = xs[k]
        if i < 1 or i >= nx - 1:
            continue
        for j in range(1, ny - 1):
            d = (ey[i, j] - ey[i - 1, j]) * inv_dx
            psi_hzx[k, j] = bex[i] * psi_hzx[k, j] + cex[i] * d
            hz[i, j] -= dt * psi_hzx[k, j]
    for i in prange(i_lo, i_hi):
        for k in range(ys.size):
            j = ys[k]
            if j < 1 or j >= ny - 1:
                continue
            d = (ex[i, j] - ex[i, j - 1]) * inv_dy
            psi_hzy[i, k] = bey[j] * psi_hzy[i, k] + cey[j] * d
            hz[i, j] += dt * psi_hzy[i, k]


def _dft_lines(arr, i0, j0, di, dj, ai, aj, length, offset, phasors, out):
    """Accumulate arr along many lines; (ai, aj) != 0 averages with a neighbour."""
    nl = i0.size
    nw = phasors.size
    for l in range(nl):
        for k in range(length[l]):
            i = i0[l] + k * di[l]
            j = j0[l] + k * dj[l]
            v = np.float64(arr[i, j])
            if ai[l] != 0 or aj[l] != 0:
                v = 0.5 * (v + np.float64(arr[i + ai[l], j + aj[l]]))
            for w in range(nw):
                out[w, offset[l] + k] += v * phasors[w]


def _dft_area(arr, stride, phasors, out):
    nw = phasors.size
    nxs, nys = out.shape[1], out.shape[2]
    for a in range(nxs):
        for b in range(nys):
            v = np.float64(arr[a * stride, b * stride])
            for w in range(nw):
                out[w, a, b] += v * phasors[w]


def _energy(f1, f2, f3, weight, i0, i1, j0, j1):
    """Half the sum of weight*f1^2 + f2^2 + f3^2 over [i0, i1) x [j0, j1)."""
    s = 0.0
    for i in range(i0, i1):
        r = 0.0
        for j in range(j0, j1):
            a = np.float64(f1[i, j])
            b = np.float64(f2[i, j])
            c = np.float64(f3[i, j])
            r += np.float64(weight[i, j]) * a * a + b * b + c * c
        s += r
    return 0.5 * s


_NAMES = ["_te_h", "_te_e", "_te_h_pml", "_te_e_pml", "_tm_e", "_tm_h", "_tm_e_pml", "_tm_h_pml",
          "_drude_current", "_drude_apply"]

serial = {n.strip("_"): njit(cache=True)(globals()[n]) for n in _NAMES}
parallel = {n.strip("_"): njit(cache=True, parallel=True)(globals()[n]) for n in _NAMES}

dft_lines = njit(cache=True)(_dft_lines)
dft_area = njit(cache=True)(_dft_area)
energy = njit(cache=True)(_energy)
