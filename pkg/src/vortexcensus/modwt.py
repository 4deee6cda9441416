"""One-dimensional wavelet filter banks and the 2D maximal-overlap DWT.

The maximal-overlap transform filters the image without subsampling, so every
level keeps the full M-by-N extent and the transform commutes with integer
circular shifts. A field decomposes additively into 3J+1 components: detail
fields in three directions (h, v, d) per level plus one smooth field.

All filtering is circular (doubly periodic boundaries) and is carried out in
the frequency domain with precomposed per-level equivalent filters, which is
exactly equivalent to the pyramid algorithm with upsampled filters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

DIRECTIONS = ("h", "v", "d")

_SQRT2 = np.sqrt(2.0)

# Daubechies least-asymmetric L=8 scaling coefficients (unit norm).
_LA8_G = np.array(
    [
        -0.07576571478950221,
        -0.02963552764600249,
        0.49761866763277500,
        0.80373875180513210,
        0.29785779560530606,
        -0.09921954357663353,
        -0.01260396726203130,
        0.03222310060405147,
    ]
)


@dataclass(frozen=True)
class WaveletFilter:
    """A quadrature-mirror filter pair in its unit-norm (orthonormal) form.

    `g` is the scaling (low-pass) filter with sum sqrt(2) and unit squared
    norm; `h` is its quadrature mirror, h[l] = (-1)^l g[L-1-l]. The working
    filters used by the maximal-overlap transform are these divided by
    sqrt(2), so their squared norms are 1/2 and coefficient energy matches
    field energy.
    """

    name: str
    g: np.ndarray
    h: np.ndarray

    @property
    def length(self) -> int:
        return len(self.g)

    @property
    def g_working(self) -> np.ndarray:
        return self.g / _SQRT2

    @property
    def h_working(self) -> np.ndarray:
        return self.h / _SQRT2


def _mirror(g: np.ndarray) -> np.ndarray:
    signs = (-1.0) ** np.arange(len(g))
    return signs * g[::-1]


def filter_coefficients(name: str) -> WaveletFilter:
    """Return the named filter pair: one of haar, d4, la8 (case-insensitive)."""
    key = name.strip().lower()
    if key == "haar":
        g = np.array([1.0, 1.0]) / _SQRT2
    elif key == "d4":
        root3 = np.sqrt(3.0)
        g = np.array([1.0 + root3, 3.0 + root3, 3.0 - root3, 1.0 - root3]) / (4.0 * _SQRT2)
    elif key == "la8":
        g = _LA8_G.copy()
    else:
        raise ValueError(f"unknown wavelet filter {name!r}; choose from haar, d4, la8")
    arr = np.asarray(g, dtype=np.float64)
    arr.flags.writeable = False
    h = _mirror(arr)
    h.flags.writeable = False
    return WaveletFilter(name=key, g=arr, h=h)


@dataclass(frozen=True)
class ModwtCoefficients:
    """Wavelet coefficient stack: details[j, d] per (level, direction), plus smooth."""

    details: np.ndarray  # (J, 3, M, N)
    smooth: np.ndarray  # (M, N)
    levels: int
    filter_name: str

    def energy(self) -> float:
        return float(np.sum(self.details**2) + np.sum(self.smooth**2))


@dataclass(frozen=True)
class MraStack:
    """Additive multiresolution analysis: 3J+1 fields that sum to the input.

    details[j, d] holds the detail field at level j+1 (scale 2^j) and
    direction d in (h, v, d); `smooth` is the level-J approximation. Every
    detail field has zero mean for filters with a vanishing moment.
    """

    details: np.ndarray  # (J, 3, M, N)
    smooth: np.ndarray  # (M, N)
    levels: int
    filter_name: str

    @property
    def shape(self) -> tuple[int, int]:
        return self.smooth.shape

    def reconstruct(self) -> np.ndarray:
        """Sum of all 3J+1 components."""
        return self.details.sum(axis=(0, 1)) + self.smooth

    def channel_stack(self) -> np.ndarray:
        """All components as one (3J+1, M, N) array.

        Channel order is h, v, d within each level, levels ascending, smooth
        last. This is the canonical ordering used by the template basis and
        every coefficient matrix.
        """
        j, _, m, n = self.details.shape
        out = np.empty((3 * j + 1, m, n))
        out[: 3 * j] = self.details.reshape(3 * j, m, n)
        out[3 * j] = self.smooth
        return out


def _check_levels(shape: tuple[int, int], filt: WaveletFilter, levels: int) -> None:
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    side = min(shape)
    if 2**levels > side:
        raise ValueError(f"levels={levels} needs min(M,N) >= {2**levels}, got {side}")
    if filt.length > side:
        raise ValueError(f"filter {filt.name} (L={filt.length}) does not fit a side of {side}")


@lru_cache(maxsize=8)
def _axis_transfers(filter_name: str, levels: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-level equivalent filter DFTs along one axis of length n.

    Returns (wavelet_transfers, scaling_transfers), each complex of shape
    (levels, n): row j-1 is the DFT of the level-j equivalent working filter.
    The level-j filters are the base working filters upsampled by 2^(j-1) and
    composed with the scaling cascade of the previous levels, which in the
    DFT domain is a product over decimated frequency indices.
    """
    filt = filter_coefficients(filter_name)
    g = np.zeros(n)
    h = np.zeros(n)
    g[: filt.length] = filt.g_working
    h[: filt.length] = filt.h_working
    g_dft = np.fft.fft(g)
    h_dft = np.fft.fft(h)

    wavelet = np.empty((levels, n), dtype=np.complex128)
    scaling = np.empty((levels, n), dtype=np.complex128)
    cascade = np.ones(n, dtype=np.complex128)
    k = np.arange(n)
    for j in range(levels):
        idx = (k << j) % n  # frequency decimation = time upsampling by 2^j
        wavelet[j] = h_dft[idx] * cascade
        cascade = g_dft[idx] * cascade
        scaling[j] = cascade
    return wavelet, scaling


def _transfer_2d(filter_name: str, levels: int, shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """2D separable transfer functions on the rfft2 grid.

    Returns (detail_transfers, smooth_transfer): detail_transfers has shape
    (levels, 3, M, N//2+1) ordered (h, v, d); the h channel smooths along
    columns and differences along rows, favoring horizontally elongated
    features, and v is the converse.
    """
    m, n = shape
    wav_r, sca_r = _axis_transfers(filter_name, levels, m)
    wav_c, sca_c = _axis_transfers(filter_name, levels, n)
    half = n // 2 + 1
    wav_c = wav_c[:, :half]
    sca_c = sca_c[:, :half]

    details = np.empty((levels, 3, m, half), dtype=np.complex128)
    for j in range(levels):
        details[j, 0] = np.outer(wav_r[j], sca_c[j])
        details[j, 1] = np.outer(sca_r[j], wav_c[j])
        details[j, 2] = np.outer(wav_r[j], wav_c[j])
    smooth = np.outer(sca_r[levels - 1], sca_c[levels - 1])
    return details, smooth


def modwt2d_forward(values: np.ndarray, filt: WaveletFilter, levels: int) -> ModwtCoefficients:
    """Maximal-overlap wavelet coefficients of a periodic 2D field.

    Equivalent to the pyramid algorithm with upsampled working filters and
    circular wrap-around; the coefficient stack satisfies the energy identity
    sum(f^2) = sum(smooth^2) + sum_jD(details^2).
    """
    values = np.asarray(values, dtype=np.float64)
    _check_levels(values.shape, filt, levels)
    det_t, smooth_t = _transfer_2d(filt.name, levels, values.shape)
    spectrum = np.fft.rfft2(values)
    details = np.fft.irfft2(det_t * spectrum, s=values.shape)
    smooth = np.fft.irfft2(smooth_t * spectrum, s=values.shape)
    return ModwtCoefficients(details=details, smooth=smooth, levels=levels, filter_name=filt.name)


def finest_detail_noise_factor(filter_name: str, shape: tuple[int, int]) -> float:
    """Sd of the level-1 diagonal MRA detail produced by unit-sd white noise.

    Used to turn a robust spread estimate of the finest diagonal detail field
    into an estimate of the pixel noise level: that channel carries almost no
    smooth-field content, so its spread is essentially all noise.
    """
    det_t, _ = _transfer_2d(filter_name, 1, shape)
    power = det_t[0, 2].real ** 2 + det_t[0, 2].imag ** 2
    m, n = shape
    weights = np.full(power.shape[1], 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return float(np.sqrt(np.sum(power**2 * weights) / (m * n)))


def mra(values: np.ndarray, filt: WaveletFilter, levels: int) -> MraStack:
    """Additive multiresolution analysis of a periodic 2D field.

    Each detail field is the one-level synthesis of its coefficient field
    (all other inputs zeroed) cascaded back to level zero; in the frequency
    domain that is multiplication by the squared magnitude of the equivalent
    transfer function. The 3J+1 components sum to the input.
    """
    values = np.asarray(values, dtype=np.float64)
    _check_levels(values.shape, filt, levels)
    det_t, smooth_t = _transfer_2d(filt.name, levels, values.shape)
    spectrum = np.fft.rfft2(values)
    details = np.fft.irfft2((det_t.real**2 + det_t.imag**2) * spectrum, s=values.shape)
    smooth = np.fft.irfft2((smooth_t.real**2 + smooth_t.imag**2) * spectrum, s=values.shape)
    return MraStack(details=details, smooth=smooth, levels=levels, filter_name=filt.name)
