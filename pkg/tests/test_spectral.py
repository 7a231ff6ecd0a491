import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualedge.errors import ShapeError, SpectralResidueError
from dualedge.rng import SplitMix64
from dualedge.spectral import Spectrum, dft2_naive, fft2, idft2, log_magnitude_image, reconstruct


def test_two_by_two_by_hand():
    f = dft2_naive(np.array([[1.0, 2.0], [3.0, 4.0]])).values
    np.testing.assert_allclose(f.real, [[10, -2], [-4, 0]], atol=1e-12)
    np.testing.assert_allclose(f.imag, 0, atol=1e-12)
    np.testing.assert_allclose(fft2(np.array([[1.0, 2.0], [3.0, 4.0]])).values, f, atol=1e-12)


def test_constant_and_delta_spectra():
    f = fft2(np.full((5, 6), 2.0)).values
    assert f[0, 0] == pytest.approx(60.0)
    f[0, 0] = 0
    assert np.abs(f).max() < 1e-12
    d = np.zeros((7, 4))
    d[0, 0] = 1
    np.testing.assert_allclose(fft2(d).values, np.ones((7, 4)), atol=1e-12)


def test_parseval_by_hand():
    x = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert (np.abs(fft2(x).values) ** 2).sum() == pytest.approx(4 * 30)


@pytest.mark.parametrize("shape", [(16, 16), (13, 17), (1, 1), (1, 7), (9, 1), (24, 20), (31, 64), (49, 27)])
def test_fft_matches_direct_sum(shape):
    x = SplitMix64(7).uniform(-1, 1, shape)
    np.testing.assert_allclose(fft2(x).values, dft2_naive(x).values, atol=1e-9)


def test_batched_planes_are_independent():
    x = SplitMix64(3).uniform(-1, 1, (2, 3, 10, 11))
    f = fft2(x).values
    for i in range(2):
        for j in range(3):
            np.testing.assert_allclose(f[i, j], fft2(x[i, j]).values, atol=1e-12)


def test_linearity():
    g = SplitMix64(11)
    a, b = g.uniform(-1, 1, (6, 10)), g.uniform(-1, 1, (6, 10))
    lhs = fft2(2.5 * a - 0.75 * b).values
    np.testing.assert_allclose(lhs, 2.5 * fft2(a).values - 0.75 * fft2(b).values, atol=1e-12)


def test_deterministic_bitwise():
    x = SplitMix64(5).uniform(-1, 1, (13, 17))
    assert np.array_equal(fft2(x).values, fft2(x.copy()).values)


def test_inverse_examples():
    dc = np.zeros((4, 5), complex)
    dc[0, 0] = 20 * 1.5
    np.testing.assert_allclose(idft2(Spectrum(dc)), 1.5, atol=1e-12)
    assert np.all(idft2(Spectrum(np.zeros((3, 3)))) == 0)
    bad = np.zeros((4, 4), complex)
    bad[0, 1] = 1.0  # no conjugate partner: the inverse is complex
    with pytest.raises(SpectralResidueError):
        idft2(Spectrum(bad))
    assert idft2(Spectrum(bad), strict=False).shape == (4, 4)


def test_reconstruct_cases():
    s = reconstruct(np.array([[1.0, 2.0]]), np.array([[0.0, np.pi / 2]])).values
    assert s[0, 0] == 1 + 0j
    assert s[0, 1].real == pytest.approx(0, abs=1e-6) and s[0, 1].imag == pytest.approx(2, abs=1e-6)
    with pytest.raises(ValueError):
        reconstruct(np.array([[-1.0]]), np.array([[0.0]]))
    with pytest.raises(ShapeError):
        reconstruct(np.ones((2, 2)), np.ones((2, 3)))


def test_zero_bins_have_zero_phase():
    s = Spectrum(np.array([[0.0 + 0.0j, -0.0 - 0.0j], [1j, -1]]))
    np.testing.assert_array_equal(s.phase, [[0, 0], [np.pi / 2, np.pi]])


def test_rejects_bad_planes():
    with pytest.raises(ShapeError):
        fft2(np.ones(4))
    with pytest.raises(ValueError):
        fft2(np.array([[1.0, np.inf]]))


def test_log_magnitude_range():
    img = log_magnitude_image(fft2(SplitMix64(1).uniform(0, 1, (8, 8))))
    assert img.max() == 1.0 and img.min() >= 0
    assert np.all(log_magnitude_image(Spectrum(np.zeros((2, 2)))) == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32))
def test_roundtrip_and_parseval_property(m, n, seed):
    x = SplitMix64(seed).uniform(-1, 1, (m, n))
    f = fft2(x)
    np.testing.assert_allclose(idft2(f), x, atol=1e-10)
    energy = (x ** 2).sum()
    assert abs((np.abs(f.values) ** 2).sum() / (m * n) - energy) <= 1e-9 * max(energy, 1)
