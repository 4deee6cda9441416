"""All-location template regression, the feasibility map, and candidate centers.

Fitting the single-vortex model at a location mu solves the ridge-stabilized
normal equations (G + ridge*I) B = C(mu), where G is the template Gram matrix
and C(mu) collects inner products between the translated template channels
(plus the intercept column) and the field's multiresolution channels. Because
the grid is periodic, every entry of C is a circular cross-correlation map
evaluated at mu, so one FFT per (channel, response) pair fits all M*N
locations at once.

The feasibility statistic compares the fitted coefficient matrix against plus
and minus the identity; near-identity fits mark template-like structures of
either spin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .modwt import MraStack
from .template import TemplateBasis

DEFAULT_RIDGE_SCALE = 1e-10
DEFAULT_MAX_CANDIDATES = 512


@dataclass(frozen=True)
class CoefficientMatrix:
    """Regression coefficients for one location or vortex.

    `beta` is the (3J+1) x (3J+1) block whose rows index template channels
    and columns index response channels; `intercept_phi` is the constant
    offset fitted to the smooth response channel.
    """

    beta: np.ndarray
    intercept_phi: float


@dataclass(frozen=True)
class CandidateSet:
    """Strict local minima of the smoothed feasibility map, best first.

    `gain_map`, when present, holds the explained energy of the solo fit at
    every location (the residual-sum-of-squares drop a single vortex there
    would achieve). Feasibility ranks how template-like a fit is; gain ranks
    how much signal it captures, which is the better entry order for forward
    selection when strong vortices need reshaping away from the identity.
    """

    points: list[tuple[int, int, float]]
    lambda_map: np.ndarray
    smoothed_map: np.ndarray
    gain_map: np.ndarray | None = None
    peak_map: np.ndarray | None = None
    noise_scale: float | None = None


def ridge_vector(gram: np.ndarray, ridge_scale: float = DEFAULT_RIDGE_SCALE) -> np.ndarray:
    """Per-column ridge added to the normal equations.

    The template channels have squared norms spanning many decades (the
    level-1 diagonal channel of a smooth template is almost empty), so a flat
    ridge would swamp the weak channels. Each column gets ridge proportional
    to its own energy, floored at a small fraction of the mean energy so that
    identically zero columns stay solvable (their coefficients come out 0).
    """
    diag = np.diag(gram)
    floor = 1e-6 * float(diag.mean())
    return ridge_scale * np.maximum(diag, floor)


class NormalEquations:
    """Ridge-stabilized, column-equilibrated solver for (G + ridge) B = C.

    Equilibration rescales columns to unit energy before factoring; the raw
    Gram can be conditioned like 1e12 purely from scale heterogeneity while
    the underlying correlation matrix is benign.
    """

    def __init__(self, gram: np.ndarray, ridge_scale: float = DEFAULT_RIDGE_SCALE):
        self.gram = gram
        self.ridge = ridge_vector(gram, ridge_scale)
        diag = np.diag(gram) + self.ridge
        self.scale = 1.0 / np.sqrt(diag)
        self.equilibrated = (gram + np.diag(self.ridge)) * self.scale[:, None] * self.scale[None, :]
        try:
            np.linalg.cholesky(self.equilibrated)
        except np.linalg.LinAlgError as exc:
            eigs = np.linalg.eigvalsh(self.equilibrated)
            raise NumericalError(
                f"normal equations not positive definite even with ridge scale {ridge_scale:g} "
                f"(equilibrated eigenvalue range [{eigs[0]:g}, {eigs[-1]:g}])"
            ) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve for coefficients given right-hand sides stacked along axis 1."""
        scaled = np.linalg.solve(self.equilibrated, rhs * self.scale[:, None])
        return scaled * self.scale[:, None]

    def condition(self) -> float:
        eigs = np.linalg.eigvalsh(self.equilibrated)
        return float(eigs[-1] / eigs[0]) if eigs[0] > 0 else np.inf


class LocationFits:
    """Per-location regression coefficients for a whole field.

    Stores the solved coefficient array of shape (3J+2, 3J+1, M, N): first
    axis indexes template channels plus the trailing intercept row, second
    axis the response channels.
    """

    def __init__(self, coefficients: np.ndarray, ridge: np.ndarray):
        self.coefficients = coefficients
        self.ridge = ridge
        self.n_channels = coefficients.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape[2:]

    def at(self, row: int, col: int) -> CoefficientMatrix:
        """Coefficient matrix for the location (row, col)."""
        n_chan = self.n_channels
        beta = np.array(self.coefficients[:n_chan, :, row, col])
        intercept = float(self.coefficients[n_chan, n_chan - 1, row, col])
        return CoefficientMatrix(beta=beta, intercept_phi=intercept)


def _response_spectra(response: MraStack) -> np.ndarray:
    return np.fft.rfft2(response.channel_stack())


def estimate_noise(response: MraStack) -> float:
    """Robust pixel-noise estimate from the finest diagonal detail field."""
    from .modwt import finest_detail_noise_factor

    d1 = response.details[0, 2]
    factor = finest_detail_noise_factor(response.filter_name, d1.shape)
    return 1.4826 * float(np.median(np.abs(d1 - np.median(d1)))) / factor


def fit_all_locations(
    response: MraStack,
    basis: TemplateBasis,
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
) -> LocationFits:
    """Fit the single-vortex model at every grid location.

    Returns the full coefficient array; memory is O((3J)^2 * M * N), so
    prefer :func:`scan_field` when only the feasibility map is needed.
    """
    if response.shape != basis.shape:
        raise ValueError(f"field shape {response.shape} != basis shape {basis.shape}")
    m, n = basis.shape
    n_chan = basis.n_channels
    y_spectra = _response_spectra(response)
    solver = NormalEquations(basis.gram, ridge_scale)

    cross = np.empty((n_chan + 1, n_chan, m, n))
    for i in range(n_chan):
        cross[i] = np.fft.irfft2(y_spectra * np.conj(basis.spectra[i]), s=(m, n))
    # Intercept row: correlating a constant regressor with each response gives
    # the response sum at every offset.
    totals = y_spectra[:, 0, 0].real
    cross[n_chan] = totals[:, None, None]

    solved = solver.solve(cross.reshape(n_chan + 1, -1)).reshape(n_chan + 1, n_chan, m, n)
    return LocationFits(solved, solver.ridge)


def lambda_map(fits: LocationFits) -> np.ndarray:
    """Feasibility map: min over signs of the squared distance of beta from +/- identity.

    Uses ||B - I||_F^2 = ||B||_F^2 - 2 tr(B) + (3J+1); the minimum over both
    signs is ||B||_F^2 + (3J+1) - 2|tr(B)|, which is zero exactly when the
    coefficient block equals plus or minus the identity.
    """
    n_chan = fits.n_channels
    block = fits.coefficients[:n_chan]
    frob = np.einsum("ijmn,ijmn->mn", block, block)
    trace = np.einsum("iimn->mn", block)
    return np.maximum(frob + n_chan - 2.0 * np.abs(trace), 0.0)


def scan_field(
    response: MraStack,
    basis: TemplateBasis,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
) -> CandidateSet:
    """Compute the feasibility map and candidate centers for a field.

    Streams over response channels so peak memory stays at O((3J) * M * N)
    instead of materializing every per-location coefficient matrix.
    """
    if response.shape != basis.shape:
        raise ValueError(f"field shape {response.shape} != basis shape {basis.shape}")
    m, n = basis.shape
    n_chan = basis.n_channels
    solver = NormalEquations(basis.gram, ridge_scale)

    y_spectra = _response_spectra(response)
    frob = np.zeros((m, n))
    trace = np.zeros((m, n))
    gain = np.zeros((m, n))
    peak = np.zeros((m, n))
    center_values = basis.channels[:, 0, 0]
    cross_j = np.empty((n_chan + 1, m, n))
    for j in range(n_chan):
        cross_j[:n_chan] = np.fft.irfft2(y_spectra[j][None] * np.conj(basis.spectra), s=(m, n))
        cross_j[n_chan] = y_spectra[j, 0, 0].real
        solved = solver.solve(cross_j.reshape(n_chan + 1, -1)).reshape(n_chan + 1, m, n)
        frob += np.einsum("imn,imn->mn", solved[:n_chan], solved[:n_chan])
        trace += solved[j]
        gain += np.einsum("imn,imn->mn", solved, cross_j)
        peak += np.einsum("imn,i->mn", solved[:n_chan], center_values)
    lam = np.maximum(frob + n_chan - 2.0 * np.abs(trace), 0.0)
    smoothed = smooth_lambda(lam)
    return find_candidates(
        smoothed,
        max_candidates,
        lambda_values=lam,
        gain_map=gain,
        peak_map=peak,
        noise_scale=estimate_noise(response),
    )


_SMOOTH_OFFSETS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1)]
_SMOOTH_WEIGHTS = np.array([1.0 / (1.0 + float(np.hypot(dr, dc))) for dr, dc in _SMOOTH_OFFSETS])
_SMOOTH_WEIGHTS /= _SMOOTH_WEIGHTS.sum()


def smooth_lambda(values: np.ndarray) -> np.ndarray:
    """Nine-point periodic smoothing with inverse-distance weights w(d) = 1/(1+d)."""
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros_like(values)
    for (dr, dc), w in zip(_SMOOTH_OFFSETS, _SMOOTH_WEIGHTS):
        out += w * np.roll(values, (dr, dc), axis=(0, 1))
    return out


def find_candidates(
    smoothed: np.ndarray,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    lambda_values: np.ndarray | None = None,
    gain_map: np.ndarray | None = None,
    peak_map: np.ndarray | None = None,
    noise_scale: float | None = None,
) -> CandidateSet:
    """Strict 8-neighborhood local minima of the smoothed map, best first.

    Plateau points are discarded: a candidate must be strictly smaller than
    all eight periodic neighbors. Minimum LOCATIONS come from the smoothed
    map (which suppresses pixel-scale noise dimples), but candidates are
    ranked by the raw feasibility value at each location when available:
    a sharply matching vortex keeps a tiny raw value even when its immediate
    neighborhood fits poorly and drags the smoothed average up. The list is
    truncated to max_candidates.
    """
    smoothed = np.asarray(smoothed, dtype=np.float64)
    lam = smoothed if lambda_values is None else np.asarray(lambda_values, dtype=np.float64)
    is_min = np.ones(smoothed.shape, dtype=bool)
    for dr, dc in _SMOOTH_OFFSETS:
        if dr == 0 and dc == 0:
            continue
        is_min &= smoothed < np.roll(smoothed, (dr, dc), axis=(0, 1))
    rows, cols = np.nonzero(is_min)
    if gain_map is not None:
        # Keep the highest-gain minima so truncation never drops a strong
        # vortex whose reshaped fit has a mediocre feasibility value.
        keep = np.argsort(-gain_map[rows, cols], kind="stable")[:max_candidates]
    else:
        keep = np.argsort(lam[rows, cols], kind="stable")[:max_candidates]
    rows, cols = rows[keep], cols[keep]
    order = np.argsort(lam[rows, cols], kind="stable")
    points = [(int(rows[i]), int(cols[i]), float(lam[rows[i], cols[i]])) for i in order]
    return CandidateSet(
        points=points,
        lambda_map=lam,
        smoothed_map=smoothed,
        gain_map=gain_map,
        peak_map=peak_map,
        noise_scale=noise_scale,
    )
