import numpy as np
import pytest

from vortexcensus import (
    TemplateSpec,
    build_template,
    circular_shift,
    filter_coefficients,
    find_candidates,
    fit_all_locations,
    lambda_map,
    mra,
    scan_field,
    smooth_lambda,
)
from oracles import direct_location_fit


def small_basis(shape=(32, 32), filter_name="haar", levels=3, sigma2=4.0, support=17):
    spec = TemplateSpec(sigma2=sigma2, support=support, filter_name=filter_name, levels=levels)
    return build_template(spec, *shape)


def plant_template(basis, center, amplitude=1.0):
    """Field containing only the template translated to `center`."""
    patch_sum = basis.channels.sum(axis=0)
    return amplitude * np.roll(patch_sum, center, axis=(0, 1))


def test_fit_matches_materialized_least_squares():
    rng = np.random.default_rng(31)
    basis = small_basis()
    values = rng.normal(size=(32, 32))
    response = mra(values, filter_coefficients("haar"), 3)
    fits = fit_all_locations(response, basis)
    stack = response.channel_stack()
    for _ in range(5):
        r = int(rng.integers(0, 32))
        c = int(rng.integers(0, 32))
        direct = direct_location_fit(stack, basis.channels, (r, c))
        np.testing.assert_allclose(fits.coefficients[:, :, r, c], direct, rtol=0, atol=1e-8)


def test_self_fit_recovers_identity():
    basis = small_basis(shape=(64, 64))
    center = (20, 41)
    field = plant_template(basis, center)
    response = mra(field, filter_coefficients("haar"), 3)
    fits = fit_all_locations(response, basis)
    coeff = fits.at(*center)
    np.testing.assert_allclose(coeff.beta, np.eye(basis.n_channels), rtol=0, atol=1e-6)
    assert abs(coeff.intercept_phi) <= 1e-6


def test_negative_template_recovers_negative_identity():
    basis = small_basis(shape=(64, 64))
    center = (5, 7)
    field = plant_template(basis, center, amplitude=-1.0)
    response = mra(field, filter_coefficients("haar"), 3)
    fits = fit_all_locations(response, basis)
    coeff = fits.at(*center)
    np.testing.assert_allclose(coeff.beta, -np.eye(basis.n_channels), rtol=0, atol=1e-6)


def test_lambda_trivial_values():
    basis = small_basis()
    n_chan = basis.n_channels
    rng = np.random.default_rng(2)
    coeffs = np.zeros((n_chan + 1, n_chan, 3, 3))
    from vortexcensus.scan import LocationFits

    # beta = 0 everywhere -> lambda = 3J+1
    lam = lambda_map(LocationFits(coeffs.copy(), np.zeros(n_chan + 1)))
    np.testing.assert_allclose(lam, n_chan)

    # beta = +/- identity -> lambda = 0
    for sign in (1.0, -1.0):
        arr = coeffs.copy()
        for i in range(n_chan):
            arr[i, i] = sign
        lam = lambda_map(LocationFits(arr, np.zeros(n_chan + 1)))
        np.testing.assert_allclose(lam, 0.0, atol=1e-12)


def test_lambda_matches_direct_frobenius_form():
    rng = np.random.default_rng(3)
    n_chan = 7
    coeffs = rng.normal(size=(n_chan + 1, n_chan, 4, 5))
    from vortexcensus.scan import LocationFits

    lam = lambda_map(LocationFits(coeffs, np.zeros(n_chan + 1)))
    eye = np.eye(n_chan)
    for r in range(4):
        for c in range(5):
            beta = coeffs[:n_chan, :, r, c]
            direct = min(np.sum((beta - eye) ** 2), np.sum((beta + eye) ** 2))
            assert abs(lam[r, c] - direct) <= 1e-10 * max(1.0, direct)


def test_smooth_constant_fixed_point():
    out = smooth_lambda(np.full((9, 9), 2.5))
    np.testing.assert_allclose(out, 2.5, rtol=1e-14)


def test_smooth_delta_kernel_weights():
    values = np.zeros((9, 9))
    values[4, 4] = 1.0
    out = smooth_lambda(values)
    w0 = 1.0
    w1 = 1.0 / 2.0
    wd = 1.0 / (1.0 + np.sqrt(2.0))
    total = w0 + 4 * w1 + 4 * wd
    assert abs(out[4, 4] - w0 / total) <= 1e-14
    assert abs(out[4, 5] - w1 / total) <= 1e-14
    assert abs(out[3, 4] - w1 / total) <= 1e-14
    assert abs(out[3, 3] - wd / total) <= 1e-14
    assert abs(out[5, 5] - wd / total) <= 1e-14
    assert abs(out.sum() - 1.0) <= 1e-12


def test_smooth_shift_equivariance():
    rng = np.random.default_rng(4)
    values = rng.normal(size=(12, 17))
    for dr, dc in [(1, 0), (0, 3), (5, 9)]:
        lhs = smooth_lambda(circular_shift(values, dr, dc))
        rhs = circular_shift(smooth_lambda(values), dr, dc)
        np.testing.assert_allclose(lhs, rhs, atol=1e-13)


def test_find_candidates_unique_bowl_minimum():
    rows = np.arange(16)
    bowl = np.minimum((rows[:, None] - 6) % 16, 16 - (rows[:, None] - 6) % 16) ** 2 + np.minimum(
        (rows[None, :] - 11) % 16, 16 - (rows[None, :] - 11) % 16
    ) ** 2
    cands = find_candidates(bowl.astype(float), 10)
    assert len(cands.points) == 1
    assert cands.points[0][:2] == (6, 11)


def test_find_candidates_constant_map_empty():
    cands = find_candidates(np.ones((8, 8)), 10)
    assert cands.points == []


def test_find_candidates_sorted_and_truncated():
    rng = np.random.default_rng(5)
    values = rng.normal(size=(32, 32))
    cands = find_candidates(values, 4)
    assert len(cands.points) == 4
    lams = [p[2] for p in cands.points]
    assert lams == sorted(lams)


def test_scan_planted_pair_candidates():
    basis = small_basis(shape=(128, 128))
    field = plant_template(basis, (30, 30)) + plant_template(basis, (70, 90), amplitude=-1.0)
    response = mra(field, filter_coefficients("haar"), 3)
    cands = scan_field(response, basis, max_candidates=64)
    found = [(r, c) for r, c, _ in cands.points[:2]]
    for truth in [(30, 30), (70, 90)]:
        dist = min(np.hypot(r - truth[0], c - truth[1]) for r, c in found)
        assert dist <= 2.0


def test_scan_lambda_matches_fit_all_locations():
    rng = np.random.default_rng(6)
    basis = small_basis()
    values = rng.normal(size=(32, 32))
    response = mra(values, filter_coefficients("haar"), 3)
    streamed = scan_field(response, basis)
    full = lambda_map(fit_all_locations(response, basis))
    np.testing.assert_allclose(streamed.lambda_map, full, rtol=1e-10, atol=1e-10)


def test_scan_shift_equivariance_and_sign_symmetry():
    rng = np.random.default_rng(7)
    basis = small_basis()
    values = rng.normal(size=(32, 32)) + plant_template(basis, (10, 20), 2.0)
    filt = filter_coefficients("haar")
    base = scan_field(mra(values, filt, 3), basis)
    for dr, dc in [(3, 0), (0, 5), (11, 23)]:
        shifted = scan_field(mra(circular_shift(values, dr, dc), filt, 3), basis)
        np.testing.assert_allclose(
            shifted.lambda_map, circular_shift(base.lambda_map, dr, dc), atol=1e-8
        )
    flipped = scan_field(mra(-values, filt, 3), basis)
    np.testing.assert_allclose(flipped.lambda_map, base.lambda_map, atol=1e-10)


def test_scan_scale_response_keeps_minimum_location():
    # The location of the planted template's feasibility minimum survives
    # amplitude rescaling; the background needs some noise because on an
    # exactly empty field amplitude 2 makes the center value K*(a-1)^2 tie
    # with the all-zero-fit background level K.
    rng = np.random.default_rng(8)
    basis = small_basis(shape=(64, 64))
    center = (25, 40)
    noise = 0.02 * rng.normal(size=(64, 64))
    filt = filter_coefficients("haar")
    for amp in (0.5, 1.0, 2.0):
        field = plant_template(basis, center, amplitude=amp) + noise
        cands = scan_field(mra(field, filt, 3), basis)
        dists = [np.hypot(r - center[0], c - center[1]) for r, c, _ in cands.points]
        assert min(dists) <= 2.0


def test_shape_mismatch_rejected():
    basis = small_basis()
    response = mra(np.zeros((16, 16)), filter_coefficients("haar"), 3)
    with pytest.raises(ValueError):
        fit_all_locations(response, basis)
    with pytest.raises(ValueError):
        scan_field(response, basis)
