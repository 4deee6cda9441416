"""Independent brute-force reference implementations used by the test suite.

Everything here is deliberately slow and literal: direct double sums, the
time-domain pyramid algorithm with explicitly upsampled filters, and
explicitly materialized regression design matrices. Nothing is shared with
the production code paths these oracles check.
"""

from __future__ import annotations

import numpy as np


def brute_cross_correlation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Direct O((MN)^2) circular cross-correlation double sum."""
    m, n = a.shape
    out = np.zeros((m, n))
    for r in range(m):
        for c in range(n):
            acc = 0.0
            for i in range(m):
                for j in range(n):
                    acc += a[i, j] * b[(i - r) % m, (j - c) % n]
            out[r, c] = acc
    return out


def upsampled(taps: np.ndarray, factor: int) -> np.ndarray:
    """Insert factor-1 zeros between consecutive filter taps."""
    out = np.zeros((len(taps) - 1) * factor + 1)
    out[::factor] = taps
    return out


def circular_filter_rows(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """y[t, :] = sum_l taps[l] * x[(t - l) mod M, :]."""
    out = np.zeros_like(x)
    for l, tap in enumerate(taps):
        if tap != 0.0:
            out += tap * np.roll(x, l, axis=0)
    return out


def pyramid_modwt2d(values: np.ndarray, g: np.ndarray, h: np.ndarray, levels: int):
    """Time-domain 2D maximal-overlap pyramid with upsampled working filters.

    Returns (details, smooth) with details shaped (levels, 3, M, N) ordered
    (wavelet-rows, wavelet-cols, wavelet-both) per level.
    """
    g = np.asarray(g) / np.sqrt(2.0)
    h = np.asarray(h) / np.sqrt(2.0)
    m, n = values.shape
    details = np.zeros((levels, 3, m, n))
    approx = values.astype(np.float64)
    for j in range(levels):
        gj = upsampled(g, 2**j)
        hj = upsampled(h, 2**j)
        low_r = circular_filter_rows(approx, gj)
        high_r = circular_filter_rows(approx, hj)
        details[j, 0] = circular_filter_rows(high_r.T, gj).T  # h: difference rows, smooth cols
        details[j, 1] = circular_filter_rows(low_r.T, hj).T  # v: smooth rows, difference cols
        details[j, 2] = circular_filter_rows(high_r.T, hj).T  # d: difference both
        approx = circular_filter_rows(low_r.T, gj).T
    return details, approx


def pyramid_mra2d(values: np.ndarray, g: np.ndarray, h: np.ndarray, levels: int):
    """Time-domain additive decomposition via analysis + synthesis cascades.

    The synthesis step cross-correlates each coefficient field with the same
    upsampled filters (the adjoint of the analysis), recursing back to level
    zero. Returns (details, smooth) shaped like pyramid_modwt2d.
    """

    def unfilter_rows(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        for l, tap in enumerate(taps):
            if tap != 0.0:
                out += tap * np.roll(x, -l, axis=0)
        return out

    m, n = values.shape
    coeff_details, coeff_smooth = pyramid_modwt2d(values, g, h, levels)
    g = np.asarray(g) / np.sqrt(2.0)
    h = np.asarray(h) / np.sqrt(2.0)

    def synthesize(field: np.ndarray, row_taps_per_level, col_taps_per_level) -> np.ndarray:
        out = field
        for row_taps, col_taps in zip(row_taps_per_level, col_taps_per_level):
            out = unfilter_rows(out, row_taps)
            out = unfilter_rows(out.T, col_taps).T
        return out

    details = np.zeros((levels, 3, m, n))
    for j in range(levels):
        gj = upsampled(g, 2**j)
        hj = upsampled(h, 2**j)
        lower_g = [upsampled(g, 2**jj) for jj in reversed(range(j))]
        details[j, 0] = synthesize(coeff_details[j, 0], [hj] + lower_g, [gj] + lower_g)
        details[j, 1] = synthesize(coeff_details[j, 1], [gj] + lower_g, [hj] + lower_g)
        details[j, 2] = synthesize(coeff_details[j, 2], [hj] + lower_g, [hj] + lower_g)
    top_g = upsampled(g, 2 ** (levels - 1))
    lower_g = [upsampled(g, 2**jj) for jj in reversed(range(levels - 1))]
    smooth = synthesize(coeff_smooth, [top_g] + lower_g, [top_g] + lower_g)
    return details, smooth


def materialized_design(channels: np.ndarray, center: tuple[int, int]) -> np.ndarray:
    """Explicit design matrix: each template channel rolled to `center`, plus ones.

    channels: (K-1, M, N) template channel fields centered at (0, 0).
    Returns (M*N, K) with the constant column last.
    """
    k, m, n = channels.shape
    cols = [np.roll(channels[i], center, axis=(0, 1)).ravel() for i in range(k)]
    cols.append(np.ones(m * n))
    return np.column_stack(cols)


def direct_location_fit(
    response_stack: np.ndarray,
    channels: np.ndarray,
    center: tuple[int, int],
    ridge_scale: float = 1e-10,
) -> np.ndarray:
    """Ridge-stabilized normal equations with an explicitly materialized design.

    Applies the shared stabilization contract (per-column ridge proportional
    to column energy, floored at 1e-6 of the mean energy) but everything else
    is literal: explicit design columns, dense products, a generic solver.

    response_stack: (R, M, N); returns B of shape (K, R) with intercept row last.
    """
    design = materialized_design(channels, center)
    y = response_stack.reshape(response_stack.shape[0], -1).T  # (MN, R)
    gram = design.T @ design
    diag = np.diag(gram)
    ridge = ridge_scale * np.maximum(diag, 1e-6 * diag.mean())
    rhs = design.T @ y
    return np.linalg.solve(gram + np.diag(ridge), rhs)
