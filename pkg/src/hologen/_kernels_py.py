"""Pure numpy implementations of the hot kernels.

Same signatures and arithmetic as the compiled ``_kernels`` module; the
level decisions are identical, accumulated sums may differ in the last
bits because numpy sums pairwise.
"""
import numpy as np

TWO_PI = 6.283185307179586


def _wrap(t):
    # fmod is exact, and so is the single add/subtract below for |t| < 4 pi
    t = np.fmod(t, TWO_PI)
    t = np.where(t < 0, t + TWO_PI, t)
    return np.where(t >= TWO_PI, t - TWO_PI, t)


def _store(values, k, out, lev):
    if out is None:
        return values, k
    out[...] = values
    lev[...] = k
    return out, lev


def phase_quantise(theta, illum_arg, table, min_arg, spac, span, levels, full_circle, out=None, lev=None):
    """Nearest phase level of each angle in ``theta``; returns (table values, level indices)."""
    if illum_arg is not None:
        theta = theta - illum_arg
    t = _wrap(theta - min_arg)
    k = np.floor(t / spac + 0.5)
    if full_circle:
        k = np.where(k >= levels, k - levels, k)
    else:
        mid = span + (TWO_PI - span) * 0.5
        k = np.minimum(k, levels - 1)
        k = np.where(t <= span, k, np.where(t < mid, levels - 1, 0))
    k = k.astype(np.int32)
    return _store(table[k], k, out, lev)


def amplitude_quantise(field, illum_abs, table, min_amp, step, levels, out=None, lev=None):
    re = field.real.astype(np.float64)
    im = field.imag.astype(np.float64)
    a = np.sqrt(re * re + im * im)
    if illum_abs is not None:
        a = a / illum_abs
    k = np.floor((a - min_amp) / step + 0.5)
    k = np.clip(k, 0, levels - 1).astype(np.int32)
    return _store(table[k].astype(field.dtype), k, out, lev)


def enforce_amplitude(replay, amp, code, ephase, roi, target):
    """Apply replay-plane constraints in place; return roi sums of the incoming field.

    code: 0 untouched, 1 set modulus to amp keeping phase, 2 set to amp*ephase, 3 zero.
    Returns (sum T|R|, sum |R|^2, sum (T - |R|)^2) over ``roi`` before enforcement.
    """
    re = replay.real.astype(np.float64)
    im = replay.imag.astype(np.float64)
    m = np.sqrt(re * re + im * im)
    sel = roi.astype(bool)
    t = target[sel]
    ms = m[sel]
    sums = (float(np.sum(t * ms)), float(np.sum(ms * ms)), float(np.sum((t - ms) ** 2)))

    c1 = code == 1
    pos = c1 & (m > 0)
    scale = np.divide(amp, m, out=np.zeros_like(m), where=pos)
    new_re = np.where(pos, re * scale, re)
    new_im = np.where(pos, im * scale, im)
    zero_mod = c1 & ~pos
    new_re = np.where(zero_mod, amp, new_re)
    new_im = np.where(zero_mod, 0.0, new_im)
    if ephase is not None:
        c2 = code == 2
        new_re = np.where(c2, amp * ephase.real, new_re)
        new_im = np.where(c2, amp * ephase.imag, new_im)
    c3 = code == 3
    new_re = np.where(c3, 0.0, new_re)
    new_im = np.where(c3, 0.0, new_im)
    replay.real = new_re
    replay.imag = new_im
    return sums


def _twiddles(d, x, y, wx, wy):
    ny, nx = wy.size, wx.size
    return d * wy[(np.arange(ny) * y) % ny], wx[(np.arange(nx) * x) % nx]


def trial_sums(replay, lo, d_re, d_im, x, y, wx, wy, mv, mu, tvals, ephi):
    """Masked statistics of ``replay (+ lo) + d * twiddle(x, y)`` without modifying replay.

    Returns (sum a, sum a^2, sum T a, sum |r|^2, sum err) where a is |r|
    (ephi None) or Re(r * ephi), and err is (T - |r|)^2 or |T - r*ephi|^2.
    """
    ty, tx = _twiddles(complex(d_re, d_im), x, y, wx, wy)
    r = replay[mv, mu].astype(np.complex128)
    if lo is not None:
        r = r + lo[mv, mu].astype(np.complex128)
    r = r + ty[mv] * tx[mu]
    rr = r.real * r.real + r.imag * r.imag
    if ephi is None:
        a = np.sqrt(rr)
        err = (tvals - a) ** 2
    else:
        c = r * ephi
        a = c.real
        err = (tvals - c.real) ** 2 + c.imag * c.imag
    return (float(np.sum(a)), float(np.sum(a * a)), float(np.sum(tvals * a)),
            float(np.sum(rr)), float(np.sum(err)))


def commit_update(replay, lo, d_re, d_im, x, y, wx, wy):
    """replay += d * twiddle. With ``lo`` the pair (replay, lo) is a float-float accumulator."""
    ty, tx = _twiddles(complex(d_re, d_im), x, y, wx, wy)
    s = replay.astype(np.complex128)
    if lo is not None:
        s += lo
    s += np.outer(ty, tx)
    replay[...] = s
    if lo is not None:
        lo[...] = s - replay.astype(np.complex128)
