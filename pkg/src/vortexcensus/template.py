"""Gaussian vortex template and its multiresolution regression basis.

The template is a radially symmetric Gaussian patch embedded in the periodic
grid. Its 3J+1 multiresolution channels, re-centered so the template peak
sits at index (0, 0), form the columns of the regression design matrix; the
Gram matrix of those columns plus a constant intercept column is identical
for every template location, which is what makes all-location fitting a pure
cross-correlation problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .modwt import filter_coefficients, mra


@dataclass(frozen=True)
class TemplateSpec:
    """Parameters of the Gaussian vortex template.

    eta is the peak amplitude (vorticity units), sigma2 the squared width in
    pixels^2, and support the odd patch side P before periodic embedding.
    The patch must be wide enough that the template decays to well below
    1e-7 * eta at its edge (P >= 8 * sigma).
    """

    eta: float = 1.0
    sigma2: float = 9.0
    support: int = 33
    filter_name: str = "la8"
    levels: int = 6

    def __post_init__(self) -> None:
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.support % 2 == 0 or self.support < 3:
            raise ValueError(f"support must be an odd integer >= 3, got {self.support}")
        if self.support < 8.0 * np.sqrt(self.sigma2):
            raise ValueError(
                f"support {self.support} too small for sigma2 {self.sigma2}; need >= {8.0 * np.sqrt(self.sigma2):.1f}"
            )


def gaussian_patch(eta: float, sigma2: float, support: int) -> np.ndarray:
    """Discretized template patch: eta * exp(-(r^2)/sigma2) on a support x support grid."""
    offsets = np.arange(support) - support // 2
    rsq = offsets[:, None] ** 2 + offsets[None, :] ** 2
    return eta * np.exp(-rsq / sigma2)


class TemplateBasis:
    """The template's channel basis and precomputed regression structures.

    Attributes
    ----------
    channels : ndarray (3J+1, M, N)
        Multiresolution channels of the embedded template, circularly
        shifted so the template center is at index (0, 0). Order: h, v, d
        per level, levels ascending, smooth last.
    gram : ndarray (3J+2, 3J+2)
        Z'Z for the design matrix Z = [channels, constant column], identical
        for every template center.
    spectra : ndarray (3J+1, M, N//2+1)
        rfft2 of each channel, used for all-location cross-correlations.
    """

    def __init__(
        self,
        channels: np.ndarray,
        shape: tuple[int, int],
        spec: TemplateSpec | None,
        levels: int,
        filter_name: str,
        patch_extent: int,
    ):
        n_chan = channels.shape[0]
        self.channels = channels
        self.shape = shape
        self.spec = spec
        self.levels = levels
        self.filter_name = filter_name
        self.patch_extent = patch_extent
        self.channel_sums = channels.reshape(n_chan, -1).sum(axis=1)

        flat = channels.reshape(n_chan, -1)
        gram = np.empty((n_chan + 1, n_chan + 1))
        gram[:n_chan, :n_chan] = flat @ flat.T
        gram[:n_chan, n_chan] = self.channel_sums
        gram[n_chan, :n_chan] = self.channel_sums
        gram[n_chan, n_chan] = shape[0] * shape[1]
        self.gram = gram

        self.spectra = np.fft.rfft2(channels)
        self._pair_maps: np.ndarray | None = None

    @property
    def n_channels(self) -> int:
        return self.channels.shape[0]

    def pair_correlation_maps(self) -> np.ndarray:
        """Cross-correlation maps between every ordered channel pair.

        maps[i, k, dr, dc] = sum_x channels[i](x) * channels[k](x + (dr, dc)),
        i.e. the inner product between channel i centered at any location mu
        and channel k centered at mu + (dr, dc). Computed once and cached;
        the census uses these for the cross-Gram blocks between vortices.
        """
        if self._pair_maps is None:
            n_chan = self.n_channels
            m, n = self.shape
            maps = np.empty((n_chan, n_chan, m, n))
            for i in range(n_chan):
                prod = self.spectra * np.conj(self.spectra[i])
                maps[i] = np.fft.irfft2(prod, s=(m, n))
            self._pair_maps = maps
        return self._pair_maps


def build_template_from_patch(
    patch: np.ndarray,
    shape: tuple[int, int],
    filter_name: str = "la8",
    levels: int = 6,
    spec: TemplateSpec | None = None,
) -> TemplateBasis:
    """Build a regression basis from an arbitrary template patch.

    The patch is embedded centered at (M//2, N//2) of an M x N zero grid,
    decomposed, and every channel is circularly shifted so the patch center
    lands at index (0, 0).
    """
    patch = np.asarray(patch, dtype=np.float64)
    m, n = shape
    pr, pc = patch.shape
    if pr > m or pc > n:
        raise ValueError(f"patch {patch.shape} larger than grid {shape}")
    embedded = np.zeros(shape)
    r0 = m // 2 - pr // 2
    c0 = n // 2 - pc // 2
    embedded[r0 : r0 + pr, c0 : c0 + pc] = patch

    stack = mra(embedded, filter_coefficients(filter_name), levels)
    center = (m // 2, n // 2)
    channels = np.roll(stack.channel_stack(), (-center[0], -center[1]), axis=(1, 2))
    extent = max(pr, pc)
    if extent % 2 == 0:
        extent += 1
    extent = min(extent, min(m, n) - 1 if min(m, n) % 2 == 0 else min(m, n))
    return TemplateBasis(channels, shape, spec, levels, filter_name, patch_extent=extent)


def build_template(spec: TemplateSpec, m: int, n: int) -> TemplateBasis:
    """Build the Gaussian template basis for an M x N periodic grid."""
    if spec.support > min(m, n):
        raise ValueError(f"template support {spec.support} exceeds grid {m}x{n}")
    patch = gaussian_patch(spec.eta, spec.sigma2, spec.support)
    return build_template_from_patch(patch, (m, n), spec.filter_name, spec.levels, spec=spec)


def gram_condition(basis: TemplateBasis | np.ndarray, ridge: float = 0.0) -> float:
    """2-norm condition number of (gram + ridge * I), +inf when singular."""
    gram = basis.gram if isinstance(basis, TemplateBasis) else np.asarray(basis, dtype=np.float64)
    eigs = np.linalg.eigvalsh(gram + ridge * np.eye(gram.shape[0]))
    low, high = eigs[0], eigs[-1]
    if low <= 0.0 or high <= 0.0:
        return np.inf
    return float(high / low)
