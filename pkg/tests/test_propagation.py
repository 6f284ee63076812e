import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import naive_dft, random_field
from hologen.field import ComplexField, Domain
from hologen.propagation import (
    FresnelParams, NaiveDFTBackend, Propagator, ScipyBackend, fft_forward, fft_inverse, fftshift,
    fresnel_forward, fresnel_inverse, ifftshift, quadratic_phase, use_backend,
)

A = Domain.APERTURE
R = Domain.REPLAY


def test_delta_transforms_to_constant():
    f = np.zeros((4, 4), complex)
    f[0, 0] = 1
    out = fft_forward(ComplexField(f, A))
    assert out.domain is R
    np.testing.assert_allclose(out.data, np.full((4, 4), 0.25), atol=1e-16)


def test_constant_transforms_to_delta():
    c = 0.3 - 0.7j
    out = fft_forward(ComplexField(np.full((8, 8), c), A)).data
    expected = np.zeros((8, 8), complex)
    expected[0, 0] = 8 * c
    np.testing.assert_allclose(out, expected, atol=1e-14)


@pytest.mark.parametrize("shape", [(8, 8), (5, 7), (1, 6)])
def test_matches_naive_double_sum(rng, shape):
    f = random_field(rng, shape)
    np.testing.assert_allclose(fft_forward(ComplexField(f, A)).data, naive_dft(f, -1), atol=1e-10, rtol=0)
    np.testing.assert_allclose(fft_inverse(ComplexField(f, R)).data, naive_dft(f, +1), atol=1e-10, rtol=0)


def test_naive_backend_matches_oracle(rng):
    f = random_field(rng, (6, 4))
    with use_backend(NaiveDFTBackend()):
        out = fft_forward(ComplexField(f, A)).data
    np.testing.assert_allclose(out, naive_dft(f), atol=1e-12)


def test_roundtrip_and_zero(rng):
    f = random_field(rng, (64, 64))
    back = fft_inverse(fft_forward(ComplexField(f, A))).data
    assert np.max(np.abs(back - f)) < 1e-10
    assert np.all(fft_inverse(ComplexField(np.zeros((4, 4), complex), R)).data == 0)


def test_domain_tags_enforced(rng):
    with pytest.raises(ValueError):
        fft_forward(ComplexField(random_field(rng, (2, 2)), R))
    with pytest.raises(ValueError):
        fft_inverse(ComplexField(random_field(rng, (2, 2)), A))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32), ny=st.integers(1, 40), nx=st.integers(1, 40),
       a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_linearity_and_parseval(seed, ny, nx, a, b):
    rng = np.random.default_rng(seed)
    f, g = random_field(rng, (ny, nx)), random_field(rng, (ny, nx))
    p = Propagator()
    lhs = p.forward(a * f + b * g)
    rhs = a * p.forward(f) + b * p.forward(g)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(rhs)))
    e_in, e_out = np.sum(np.abs(f) ** 2), np.sum(np.abs(p.forward(f)) ** 2)
    assert abs(e_out - e_in) <= 1e-9 * e_in


def test_quadratic_phase_formula():
    p = FresnelParams(532e-9, 0.1, 8e-6, 6e-6)
    q = quadratic_phase((3, 4), p)
    y, x = 2, 1
    expected = np.exp(1j * math.pi * (((x - 2.0) * 8e-6) ** 2 + ((y - 1.5) * 6e-6) ** 2) / (532e-9 * 0.1))
    assert q[y, x] == pytest.approx(expected, abs=1e-15)
    np.testing.assert_allclose(np.abs(q), 1.0, atol=1e-15)


def test_fresnel_matches_explicit_q_oracle(rng):
    p = FresnelParams(532e-9, 0.1, 8e-6, 8e-6)
    f = random_field(rng, (8, 8))
    ny, nx = f.shape
    ys, xs = np.mgrid[0:ny, 0:nx]
    q = np.exp(1j * np.pi * (((xs - nx / 2) * 8e-6) ** 2 + ((ys - ny / 2) * 8e-6) ** 2) / (532e-9 * 0.1))
    out = fresnel_forward(ComplexField(f, A), p).data
    np.testing.assert_allclose(out, naive_dft(f * q), atol=1e-10)


def test_fresnel_far_limit_and_energy(rng):
    f = random_field(rng, (32, 32))
    far = FresnelParams(532e-9, 1e9, 1e-5, 1e-5)
    ref = fft_forward(ComplexField(f, A)).data
    out = fresnel_forward(ComplexField(f, A), far).data
    assert np.max(np.abs(out - ref)) <= 1e-6 * np.max(np.abs(ref))
    near = FresnelParams(532e-9, 0.05, 8e-6, 8e-6)
    out = fresnel_forward(ComplexField(f, A), near).data
    assert np.sum(np.abs(out) ** 2) == pytest.approx(np.sum(np.abs(f) ** 2), rel=1e-10)


def test_fresnel_converges_monotonically_to_far_field(rng):
    f = random_field(rng, (32, 32))
    ref = fft_forward(ComplexField(f, A)).data
    devs = []
    for z in np.logspace(0, 4, 9):
        out = fresnel_forward(ComplexField(f, A), FresnelParams(532e-9, z, 8e-6, 8e-6)).data
        devs.append(np.max(np.abs(out - ref)))
    assert all(b < a for a, b in zip(devs, devs[1:]))


def test_fresnel_roundtrip(rng):
    p = FresnelParams(633e-9, -0.2, 8e-6, 8e-6)
    f = random_field(rng, (16, 16))
    back = fresnel_inverse(fresnel_forward(ComplexField(f, A), p), p).data
    assert np.max(np.abs(back - f)) < 1e-10
    f32 = random_field(rng, (8, 8), np.complex64)
    back = fresnel_inverse(fresnel_forward(ComplexField(f32, A), p), p).data
    assert np.max(np.abs(back - f32)) < 1e-4
    zero = fresnel_inverse(ComplexField(np.zeros((4, 4), complex), R), p)
    assert np.all(zero.data == 0)


def test_fresnel_params_validation():
    for bad in [(0, 1, 1, 1), (1, 0, 1, 1), (1, 1, -1, 1), (1, math.inf, 1, 1)]:
        with pytest.raises(ValueError):
            FresnelParams(*bad)


def test_propagator_fresnel_matches_functions(rng):
    p = FresnelParams(532e-9, 0.1, 8e-6, 8e-6)
    prop = Propagator(p)
    f = random_field(rng, (16, 16))
    np.testing.assert_allclose(prop.forward(f), fresnel_forward(ComplexField(f, A), p).data, atol=1e-14)
    np.testing.assert_allclose(prop.inverse(prop.forward(f)), f, atol=1e-12)


def test_fftshift_index_formula():
    d = np.zeros((4, 4))
    d[0, 0] = 1
    assert np.argwhere(fftshift(d)).tolist() == [[2, 2]]
    d3 = np.zeros((3, 3))
    d3[0, 0] = 1
    assert np.argwhere(fftshift(d3)).tolist() == [[2, 2]]
    # general index: (i + ceil(N/2)) mod N
    for n in (3, 5, 6):
        a = np.arange(n * n).reshape(n, n)
        s = fftshift(a)
        c = -(-n // 2)
        for i in range(n):
            for j in range(n):
                assert s[(i + c) % n, (j + c) % n] == a[i, j]


@settings(max_examples=30, deadline=None)
@given(ny=st.integers(1, 12), nx=st.integers(1, 12))
def test_shift_inverses(ny, nx):
    a = np.arange(ny * nx).reshape(ny, nx)
    assert np.array_equal(ifftshift(fftshift(a)), a)
    if ny % 2 == 0 and nx % 2 == 0:
        assert np.array_equal(fftshift(fftshift(a)), a)
    f = ComplexField(a.astype(complex), R)
    assert fftshift(f).domain is R


def test_scipy_backend_threads_respect_cap(monkeypatch):
    monkeypatch.setenv("HOLOGEN_THREADS", "1")
    assert ScipyBackend(4).threads == 1
