import numpy as np
import pytest

from vortexcensus import circular_shift, filter_coefficients, modwt2d_forward, mra

from oracles import pyramid_modwt2d, pyramid_mra2d

FILTERS = ["haar", "d4", "la8"]


@pytest.mark.parametrize("name", FILTERS)
def test_filter_normalization(name):
    filt = filter_coefficients(name)
    assert abs(filt.g.sum() - np.sqrt(2.0)) <= 1e-12
    assert abs(filt.h.sum()) <= 1e-12
    assert abs(np.sum(filt.g**2) - 1.0) <= 1e-12
    assert abs(np.sum(filt.h**2) - 1.0) <= 1e-12
    assert abs(np.sum(filt.g_working**2) - 0.5) <= 1e-12
    assert abs(np.sum(filt.h_working**2) - 0.5) <= 1e-12


@pytest.mark.parametrize("name", FILTERS)
def test_quadrature_mirror_relation(name):
    filt = filter_coefficients(name)
    length = filt.length
    for l in range(length):
        assert abs(filt.h[l] - (-1.0) ** l * filt.g[length - 1 - l]) <= 1e-12


def test_haar_canonical_values():
    filt = filter_coefficients("haar")
    np.testing.assert_allclose(filt.g, [1 / np.sqrt(2), 1 / np.sqrt(2)], rtol=0, atol=1e-15)
    np.testing.assert_allclose(filt.h, [1 / np.sqrt(2), -1 / np.sqrt(2)], rtol=0, atol=1e-15)


def test_unknown_filter_rejected():
    with pytest.raises(ValueError):
        filter_coefficients("db12")


def test_constant_field_annihilated():
    filt = filter_coefficients("la8")
    coeffs = modwt2d_forward(np.full((16, 16), 3.7), filt, 2)
    np.testing.assert_allclose(coeffs.details, 0.0, atol=1e-12)
    # Level-J scaling cascade preserves the mean up to the working-filter gain
    # (sum g_working = 1 per application, two axes, J levels).
    np.testing.assert_allclose(coeffs.smooth, 3.7, rtol=1e-12)


@pytest.mark.parametrize("name", FILTERS)
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_coefficients_match_pyramid_oracle(name, levels):
    rng = np.random.default_rng(42)
    values = rng.normal(size=(16, 16))
    filt = filter_coefficients(name)
    coeffs = modwt2d_forward(values, filt, levels)
    details, smooth = pyramid_modwt2d(values, filt.g, filt.h, levels)
    np.testing.assert_allclose(coeffs.details, details, rtol=0, atol=1e-12)
    np.testing.assert_allclose(coeffs.smooth, smooth, rtol=0, atol=1e-12)


def test_haar_delta_matches_two_by_two_kernels():
    # Haar J=1 channels are circular convolutions with separable 2x2 kernels.
    values = np.zeros((8, 8))
    values[3, 5] = 1.0
    filt = filter_coefficients("haar")
    coeffs = modwt2d_forward(values, filt, 1)
    low = np.array([0.5, 0.5])
    high = np.array([0.5, -0.5])

    def kernel_conv(kr, kc):
        out = np.zeros_like(values)
        for a, ta in enumerate(kr):
            for b, tb in enumerate(kc):
                out += ta * tb * np.roll(values, (a, b), axis=(0, 1))
        return out

    np.testing.assert_allclose(coeffs.details[0, 0], kernel_conv(high, low), atol=1e-14)
    np.testing.assert_allclose(coeffs.details[0, 1], kernel_conv(low, high), atol=1e-14)
    np.testing.assert_allclose(coeffs.details[0, 2], kernel_conv(high, high), atol=1e-14)
    np.testing.assert_allclose(coeffs.smooth, kernel_conv(low, low), atol=1e-14)


@pytest.mark.parametrize("name", FILTERS)
def test_energy_identity(name):
    rng = np.random.default_rng(1)
    values = rng.normal(size=(16, 16))
    coeffs = modwt2d_forward(values, filter_coefficients(name), 2)
    total = np.sum(values**2)
    assert abs(coeffs.energy() - total) <= 1e-10 * total


@pytest.mark.parametrize("name", FILTERS)
@pytest.mark.parametrize("shape", [(32, 32), (33, 40), (40, 33)])
def test_mra_additive_reconstruction(name, shape):
    rng = np.random.default_rng(2)
    values = rng.normal(size=shape)
    stack = mra(values, filter_coefficients(name), 3)
    np.testing.assert_allclose(stack.reconstruct(), values, rtol=0, atol=1e-8)


def test_mra_reconstruction_many_random_fields():
    rng = np.random.default_rng(3)
    filt = filter_coefficients("la8")
    for _ in range(50):
        values = rng.normal(size=(32, 32))
        stack = mra(values, filt, 5)
        assert np.max(np.abs(stack.reconstruct() - values)) <= 1e-8


@pytest.mark.parametrize("name", FILTERS)
def test_mra_matches_pyramid_synthesis_oracle(name):
    rng = np.random.default_rng(4)
    values = rng.normal(size=(16, 16))
    filt = filter_coefficients(name)
    stack = mra(values, filt, 2)
    details, smooth = pyramid_mra2d(values, filt.g, filt.h, 2)
    np.testing.assert_allclose(stack.details, details, rtol=0, atol=1e-12)
    np.testing.assert_allclose(stack.smooth, smooth, rtol=0, atol=1e-12)


def test_detail_fields_have_zero_mean():
    rng = np.random.default_rng(5)
    values = rng.normal(size=(32, 32)) + 4.0
    stack = mra(values, filter_coefficients("la8"), 4)
    means = stack.details.mean(axis=(2, 3))
    assert np.max(np.abs(means)) <= 1e-10


def test_shift_equivariance():
    rng = np.random.default_rng(6)
    values = rng.normal(size=(32, 32))
    filt = filter_coefficients("la8")
    base = mra(values, filt, 3)
    for dr, dc in [(1, 0), (0, 1), (7, 12), (-3, 5)]:
        shifted = mra(circular_shift(values, dr, dc), filt, 3)
        np.testing.assert_allclose(
            shifted.details, np.roll(base.details, (dr, dc), axis=(2, 3)), atol=1e-10
        )
        np.testing.assert_allclose(
            shifted.smooth, circular_shift(base.smooth, dr, dc), atol=1e-10
        )


def test_separability_row_column_1d_application():
    # The 2D coefficients factor into sequential 1D transforms along rows then
    # columns; the pyramid oracle is built exactly that way, so agreement at
    # 1e-12 pins the separable structure.
    rng = np.random.default_rng(7)
    values = rng.normal(size=(16, 24))
    filt = filter_coefficients("d4")
    coeffs = modwt2d_forward(values, filt, 2)
    details, smooth = pyramid_modwt2d(values, filt.g, filt.h, 2)
    assert np.max(np.abs(coeffs.details - details)) <= 1e-12
    assert np.max(np.abs(coeffs.smooth - smooth)) <= 1e-12


def test_level_error_when_grid_too_small():
    with pytest.raises(ValueError):
        modwt2d_forward(np.zeros((16, 16)), filter_coefficients("haar"), 5)
    with pytest.raises(ValueError):
        mra(np.zeros((16, 16)), filter_coefficients("haar"), 5)


def test_channel_stack_order():
    rng = np.random.default_rng(8)
    stack = mra(rng.normal(size=(16, 16)), filter_coefficients("haar"), 2)
    flat = stack.channel_stack()
    assert flat.shape == (7, 16, 16)
    np.testing.assert_array_equal(flat[0], stack.details[0, 0])
    np.testing.assert_array_equal(flat[5], stack.details[1, 2])
    np.testing.assert_array_equal(flat[6], stack.smooth)
