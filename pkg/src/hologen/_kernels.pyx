# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_kernels_py`` exactly in signature and arithmetic."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fmod, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

ctypedef fused cplx:
    float complex
    double complex

cdef double TWO_PI = 6.283185307179586


def phase_quantise(double[:, ::1] theta, illum_arg, cplx[::1] table, double min_arg,
                   double spac, double span, int levels, bint full_circle, out=None, lev=None):
    cdef Py_ssize_t ny = theta.shape[0], nx = theta.shape[1], i, j
    if out is None:
        out = np.empty((ny, nx), dtype=np.asarray(table).dtype)
    if lev is None:
        lev = np.empty((ny, nx), dtype=np.int32)
    cdef cplx[:, ::1] vout = out
    cdef int[:, ::1] vlev = lev
    cdef double[:, ::1] ia
    cdef bint has_illum = illum_arg is not None
    if has_illum:
        ia = np.ascontiguousarray(illum_arg, dtype=np.float64)
    cdef double t, mid = span + (TWO_PI - span) * 0.5
    cdef int k
    with nogil:
        for i in range(ny):
            for j in range(nx):
                t = theta[i, j]
                if has_illum:
                    t = t - ia[i, j]
                t = t - min_arg
                if t >= TWO_PI or t < -TWO_PI:
                    t = fmod(t, TWO_PI)
                # conditional moves rather than branches: the sign of t is random
                t = t + (TWO_PI if t < 0 else 0.0)
                t = t - (TWO_PI if t >= TWO_PI else 0.0)
                # t >= 0 here, so truncation is floor
                k = <int>(t / spac + 0.5)
                if full_circle:
                    k = k - (levels if k >= levels else 0)
                elif t <= span:
                    if k > levels - 1:
                        k = levels - 1
                elif t < mid:
                    k = levels - 1
                else:
                    k = 0
                vlev[i, j] = k
                vout[i, j] = table[k]
    return out, lev


def amplitude_quantise(cplx[:, ::1] field, illum_abs, double[::1] table, double min_amp,
                       double step, int levels, out=None, lev=None):
    cdef Py_ssize_t ny = field.shape[0], nx = field.shape[1], i, j
    if out is None:
        out = np.empty((ny, nx), dtype=np.asarray(field).dtype)
    if lev is None:
        lev = np.empty((ny, nx), dtype=np.int32)
    cdef cplx[:, ::1] vout = out
    cdef int[:, ::1] vlev = lev
    cdef double[:, ::1] ib
    cdef bint has_illum = illum_abs is not None
    if has_illum:
        ib = np.ascontiguousarray(illum_abs, dtype=np.float64)
    cdef double a, kf, re, im
    cdef int k
    with nogil:
        for i in range(ny):
            for j in range(nx):
                re = <double>field[i, j].real
                im = <double>field[i, j].imag
                a = sqrt(re * re + im * im)
                if has_illum:
                    a = a / ib[i, j]
                kf = floor((a - min_amp) / step + 0.5)
                if kf < 0:
                    k = 0
                elif kf > levels - 1:
                    k = levels - 1
                else:
                    k = <int>kf
                vlev[i, j] = k
                vout[i, j] = table[k]
    return out, lev


def enforce_amplitude(cplx[:, ::1] replay, double[:, ::1] amp, cnp.uint8_t[:, ::1] code,
                      ephase, cnp.uint8_t[:, ::1] roi, double[:, ::1] target):
    cdef Py_ssize_t ny = replay.shape[0], nx = replay.shape[1], i, j
    cdef double complex[:, ::1] ep
    cdef bint has_phase = ephase is not None
    if has_phase:
        ep = np.ascontiguousarray(ephase, dtype=np.complex128)
    cdef double re, im, m, s, t
    cdef double s_ta = 0.0, s_rr = 0.0, s_dd = 0.0
    cdef int c
    with nogil:
        for i in range(ny):
            for j in range(nx):
                re = replay[i, j].real
                im = replay[i, j].imag
                m = sqrt(re * re + im * im)
                if roi[i, j]:
                    t = target[i, j]
                    s_ta += t * m
                    s_rr += m * m
                    s_dd += (t - m) * (t - m)
                c = code[i, j]
                if c == 0:
                    continue
                if c == 1:
                    if m > 0:
                        s = amp[i, j] / m
                        re = re * s
                        im = im * s
                    else:
                        re = amp[i, j]
                        im = 0.0
                elif c == 2 and has_phase:
                    re = amp[i, j] * ep[i, j].real
                    im = amp[i, j] * ep[i, j].imag
                elif c == 3:
                    re = 0.0
                    im = 0.0
                replay[i, j].real = re
                replay[i, j].imag = im
    return s_ta, s_rr, s_dd


cdef inline void _twiddle_tables(double d_re, double d_im, Py_ssize_t x, Py_ssize_t y,
                                 double complex[::1] wx, double complex[::1] wy,
                                 double* ty, double* tx) noexcept nogil:
    # ty[v] = d * wy[(v y) mod Ny], tx[u] = wx[(u x) mod Nx], interleaved re/im
    cdef Py_ssize_t ny = wy.shape[0], nx = wx.shape[0], v, u, iy = 0, ix = 0
    cdef double ar, ai
    for v in range(ny):
        ar = wy[iy].real
        ai = wy[iy].imag
        ty[2 * v] = d_re * ar - d_im * ai
        ty[2 * v + 1] = d_re * ai + d_im * ar
        iy += y
        if iy >= ny:
            iy = iy % ny
    for u in range(nx):
        tx[2 * u] = wx[ix].real
        tx[2 * u + 1] = wx[ix].imag
        ix += x
        if ix >= nx:
            ix = ix % nx


def trial_sums(cplx[:, ::1] replay, lo, double d_re, double d_im, Py_ssize_t x, Py_ssize_t y,
               double complex[::1] wx, double complex[::1] wy,
               cnp.int64_t[::1] mv, cnp.int64_t[::1] mu, double[::1] tvals, ephi):
    cdef Py_ssize_t ny = replay.shape[0], nx = replay.shape[1], n = mv.shape[0], j, v, u
    cdef double complex[::1] ev
    cdef cplx[:, ::1] vlo
    cdef bint sensitive = ephi is not None
    cdef bint has_lo = lo is not None
    if sensitive:
        ev = np.ascontiguousarray(ephi, dtype=np.complex128)
    if has_lo:
        vlo = lo
    cdef double pr, pi, br, bi, rr, ri, a, ci, t
    cdef double s_a = 0.0, s_aa = 0.0, s_ta = 0.0, s_rr = 0.0, s_dd = 0.0
    cdef double* ty = <double*> malloc(2 * (ny + nx) * sizeof(double))
    if ty == NULL:
        raise MemoryError()
    cdef double* tx = ty + 2 * ny
    with nogil:
        _twiddle_tables(d_re, d_im, x, y, wx, wy, ty, tx)
        for j in range(n):
            v = mv[j]
            u = mu[j]
            pr = ty[2 * v]
            pi = ty[2 * v + 1]
            br = tx[2 * u]
            bi = tx[2 * u + 1]
            rr = <double>replay[v, u].real
            ri = <double>replay[v, u].imag
            if has_lo:
                rr = rr + <double>vlo[v, u].real
                ri = ri + <double>vlo[v, u].imag
            rr = rr + (pr * br - pi * bi)
            ri = ri + (pr * bi + pi * br)
            t = tvals[j]
            if sensitive:
                a = rr * ev[j].real - ri * ev[j].imag
                ci = rr * ev[j].imag + ri * ev[j].real
                s_dd += (t - a) * (t - a) + ci * ci
            else:
                a = sqrt(rr * rr + ri * ri)
                s_dd += (t - a) * (t - a)
            s_a += a
            s_aa += a * a
            s_ta += t * a
            s_rr += rr * rr + ri * ri
    free(ty)
    return s_a, s_aa, s_ta, s_rr, s_dd


def commit_update(cplx[:, ::1] replay, lo, double d_re, double d_im, Py_ssize_t x, Py_ssize_t y,
                  double complex[::1] wx, double complex[::1] wy):
    """replay += d * twiddle. With ``lo`` the pair (replay, lo) is a float-float accumulator."""
    cdef Py_ssize_t ny = replay.shape[0], nx = replay.shape[1], v, u
    cdef cplx[:, ::1] vlo
    cdef bint has_lo = lo is not None
    if has_lo:
        vlo = lo
    cdef double pr, pi, br, bi, sr, si
    cdef float hr, hi
    cdef double* ty = <double*> malloc(2 * (ny + nx) * sizeof(double))
    if ty == NULL:
        raise MemoryError()
    cdef double* tx = ty + 2 * ny
    with nogil:
        _twiddle_tables(d_re, d_im, x, y, wx, wy, ty, tx)
        for v in range(ny):
            pr = ty[2 * v]
            pi = ty[2 * v + 1]
            for u in range(nx):
                br = tx[2 * u]
                bi = tx[2 * u + 1]
                sr = <double>replay[v, u].real
                si = <double>replay[v, u].imag
                if has_lo:
                    sr = sr + <double>vlo[v, u].real
                    si = si + <double>vlo[v, u].imag
                sr = sr + (pr * br - pi * bi)
                si = si + (pr * bi + pi * br)
                if has_lo:
                    # round explicitly; the split must see the stored single value
                    hr = <float>sr
                    hi = <float>si
                    replay[v, u].real = hr
                    replay[v, u].imag = hi
                    vlo[v, u].real = sr - <double>hr
                    vlo[v, u].imag = si - <double>hi
                else:
                    replay[v, u].real = sr
                    replay[v, u].imag = si
    free(ty)
