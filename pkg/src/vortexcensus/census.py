"""Vortex selection by GCV forward search, multi-vortex backfitting, and statistics.

The multi-vortex model is linear: the field's multiresolution channels are a
sum of translated template-channel blocks, one coefficient matrix per vortex.
Backfitting cycles through the vortices, refitting each against the partial
residual of the others. Because the grid is periodic, every inner product the
sweeps need reduces to a lookup into precomputed cross-correlation maps, so a
sweep is pure small-matrix algebra regardless of grid size.

Model size is chosen by forward selection over candidate centers in ascending
feasibility order, scored by generalized cross-validation with an effective
parameter count (entries of each coefficient matrix larger than twice that
matrix's entry standard deviation).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyVortexError
from .fields import VorticityField, as_values
from .modwt import MraStack, filter_coefficients, mra
from .scan import (
    DEFAULT_MAX_CANDIDATES,
    DEFAULT_RIDGE_SCALE,
    CandidateSet,
    CoefficientMatrix,
    NormalEquations,
    estimate_noise,
    scan_field,
)
from .template import TemplateBasis, TemplateSpec, build_template

BACKFIT_TOL = 1e-6
BACKFIT_MAX_SWEEPS = 50
DEFAULT_PATIENCE = 5
DEFAULT_COALESCE_RADIUS = 3.0


@dataclass(frozen=True)
class VortexStats:
    """Physical statistics of one reconstructed vortex field."""

    circulation: float
    enstrophy: float
    peak: float
    size: float


@dataclass(frozen=True)
class VortexRecord:
    """One selected vortex: center, coefficients, stored patch, statistics."""

    center: tuple[int, int]
    beta: CoefficientMatrix
    patch: np.ndarray
    circulation: float
    enstrophy_contrib: float
    peak_amplitude: float
    size: float

    @property
    def sign(self) -> int:
        return 1 if self.peak_amplitude >= 0 else -1


@dataclass(frozen=True)
class GcvStep:
    """One forward-selection step: model size, score, fit, parameter count."""

    n_vortices: int
    gcv: float
    rss: float
    n_params: int


@dataclass(frozen=True)
class FieldStats:
    count: int
    mean_abs_circulation: float
    mean_enstrophy: float
    mean_abs_peak: float


@dataclass(frozen=True)
class CensusResult:
    """Selected vortices, the selection path, and the residual decomposition."""

    vortices: list[VortexRecord]
    gcv_path: list[GcvStep]
    residual_field: np.ndarray
    field_stats: FieldStats
    metadata: dict = field(default_factory=dict)

    @property
    def n_vortices(self) -> int:
        return len(self.vortices)


@dataclass(frozen=True)
class BackfitResult:
    """Backfit output: per-vortex coefficient arrays and the fit quality."""

    coefficients: list[np.ndarray]  # (3J+2, 3J+1) each, intercept row last
    rss: float
    sweeps: int
    converged: bool
    degenerate: bool

    def coefficient_matrices(self) -> list[CoefficientMatrix]:
        out = []
        for arr in self.coefficients:
            n_chan = arr.shape[1]
            out.append(CoefficientMatrix(beta=np.array(arr[:n_chan]), intercept_phi=float(arr[n_chan, n_chan - 1])))
        return out


def gcv(rss: float, n_params: int, m: int, n: int) -> float:
    """Generalized cross-validation score (rss/(MN)) / (1 - p/(MN))^2."""
    mn = m * n
    if n_params >= mn:
        raise ValueError(f"effective parameters {n_params} must be < MN = {mn}")
    return (rss / mn) / (1.0 - n_params / mn) ** 2


def effective_params(betas: list) -> int:
    """Total count of coefficients exceeding twice their matrix's entry spread.

    For each vortex the rule is applied to the flattened coefficient block:
    entries with |b| strictly greater than 2 * sample standard deviation of
    that block's entries count as effective parameters.
    """
    if not betas:
        raise ValueError("effective_params needs at least one coefficient matrix")
    total = 0
    for beta in betas:
        block = beta.beta if isinstance(beta, CoefficientMatrix) else np.asarray(beta)
        if block.shape[0] == block.shape[1] + 1:
            block = block[: block.shape[1]]  # drop intercept row
        flat = block.ravel()
        threshold = 2.0 * float(np.std(flat, ddof=1))
        total += int(np.sum(np.abs(flat) > threshold))
    return total


class _CensusProblem:
    """Shared workspace: response stack, precomputed sums, and lookup helpers."""

    def __init__(self, response: MraStack, basis: TemplateBasis, ridge_scale: float):
        if response.shape != basis.shape:
            raise ValueError(f"field shape {response.shape} != basis shape {basis.shape}")
        self.basis = basis
        self.shape = basis.shape
        self.n_chan = basis.n_channels
        self.ystack = response.channel_stack()
        self.ynorm2 = float(np.sum(self.ystack**2))
        self.ysums = self.ystack.reshape(self.n_chan, -1).sum(axis=1)
        self.solver = NormalEquations(basis.gram, ridge_scale)
        self._targets: dict[tuple[int, int], np.ndarray] = {}
        self._cross_grams: dict[tuple[tuple[int, int], tuple[int, int]], np.ndarray] = {}

    def target(self, center: tuple[int, int]) -> np.ndarray:
        """T[i, j] = <template channel i at `center`, response channel j>."""
        cached = self._targets.get(center)
        if cached is not None:
            return cached
        n_chan = self.n_chan
        rolled = np.roll(self.ystack, (-center[0], -center[1]), axis=(1, 2))
        target = np.empty((n_chan + 1, n_chan))
        target[:n_chan] = self.basis.channels.reshape(n_chan, -1) @ rolled.reshape(n_chan, -1).T
        target[n_chan] = self.ysums
        self._targets[center] = target
        return target

    def cross_gram(self, a: tuple[int, int], b: tuple[int, int]) -> np.ndarray:
        """X[i, k] = <template channel i at `a`, template channel k at `b`>."""
        if a == b:
            return self.basis.gram
        cached = self._cross_grams.get((a, b))
        if cached is not None:
            return cached
        maps = self.basis.pair_correlation_maps()
        m, n = self.shape
        dr = (a[0] - b[0]) % m
        dc = (a[1] - b[1]) % n
        n_chan = self.n_chan
        out = np.empty((n_chan + 1, n_chan + 1))
        out[:n_chan, :n_chan] = maps[:, :, dr, dc]
        out[:n_chan, n_chan] = self.basis.channel_sums
        out[n_chan, :n_chan] = self.basis.channel_sums
        out[n_chan, n_chan] = m * n
        self._cross_grams[(a, b)] = out
        return out


def _periodic_distance(a: tuple[int, int], b: tuple[int, int], shape: tuple[int, int]) -> float:
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    dr = min(dr, shape[0] - dr)
    dc = min(dc, shape[1] - dc)
    return float(np.hypot(dr, dc))


def _backfit_sweeps(
    problem: _CensusProblem,
    centers: list[tuple[int, int]],
    initial: list[np.ndarray] | None,
    tol: float = BACKFIT_TOL,
    max_sweeps: int = BACKFIT_MAX_SWEEPS,
) -> BackfitResult:
    n_chan = problem.n_chan
    n_vortices = len(centers)
    if initial is None:
        betas = [np.zeros((n_chan + 1, n_chan)) for _ in centers]
    else:
        betas = [np.array(b) for b in initial]
        betas.extend(np.zeros((n_chan + 1, n_chan)) for _ in range(n_vortices - len(betas)))

    targets = [problem.target(c) for c in centers]
    grams = {
        (s, u): problem.cross_gram(centers[s], centers[u])
        for s in range(n_vortices)
        for u in range(n_vortices)
        if s != u
    }

    sweeps = 0
    converged = n_vortices == 0
    for sweeps in range(1, max_sweeps + 1):
        delta = 0.0
        for s in range(n_vortices):
            rhs = targets[s].copy()
            for u in range(n_vortices):
                if u != s:
                    rhs -= grams[(s, u)] @ betas[u]
            updated = problem.solver.solve(rhs)
            delta = max(delta, float(np.max(np.abs(updated - betas[s]))))
            betas[s] = updated
        if delta < tol:
            converged = True
            break

    # RSS via inner products: ||Y||^2 - 2 sum_s <B_s, T_s> + sum_{s,u} <B_s, X_su B_u>
    rss = problem.ynorm2
    for s in range(n_vortices):
        rss -= 2.0 * float(np.vdot(betas[s], targets[s]))
        rss += float(np.vdot(betas[s], problem.basis.gram @ betas[s]))
        for u in range(n_vortices):
            if u != s:
                rss += float(np.vdot(betas[s], grams[(s, u)] @ betas[u]))
    rss = max(rss, 0.0)

    degenerate = any(
        _periodic_distance(centers[s], centers[u], problem.shape) < 1.0
        for s in range(n_vortices)
        for u in range(s + 1, n_vortices)
    )
    return BackfitResult(coefficients=betas, rss=rss, sweeps=sweeps, converged=converged, degenerate=degenerate)


def backfit(
    response: MraStack,
    basis: TemplateBasis,
    centers: list[tuple[int, int]],
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
    tol: float = BACKFIT_TOL,
    max_sweeps: int = BACKFIT_MAX_SWEEPS,
) -> BackfitResult:
    """Fit the multi-vortex model at fixed centers by cyclic refitting.

    Each vortex is refit against the partial residual of the others with the
    same stabilized per-location solve used by the all-location scan; sweeps
    stop when no coefficient moves by more than `tol` (convergence typically
    takes a few sweeps because vortices are spatially isolated).
    """
    if not centers:
        raise ValueError("backfit needs at least one center")
    centers = [(int(r), int(c)) for r, c in centers]
    problem = _CensusProblem(response, basis, ridge_scale)
    return _backfit_sweeps(problem, centers, initial=None, tol=tol, max_sweeps=max_sweeps)


def vortex_statistics(
    vortex_field: np.ndarray,
    dx: float = 1.0,
    domain_area: float | None = None,
) -> VortexStats:
    """Circulation, enstrophy contribution, signed peak, and e-folding size.

    circulation = dx^2 * sum(v); enstrophy contribution = dx^2 * sum(v^2) / A
    with A the full-field area (defaults to the area of `vortex_field`);
    size counts pixels above exp(-1) of the peak magnitude.
    """
    values = np.asarray(vortex_field, dtype=np.float64)
    peak_idx = np.argmax(np.abs(values))
    peak = float(values.ravel()[peak_idx])
    if peak == 0.0:
        raise EmptyVortexError("vortex field is identically zero")
    area = float(domain_area) if domain_area is not None else values.size * dx * dx
    circulation = float(values.sum()) * dx * dx
    enstrophy = float(np.sum(values**2)) * dx * dx / area
    size = float(np.count_nonzero(np.abs(values) > abs(peak) / np.e)) * dx * dx
    return VortexStats(circulation=circulation, enstrophy=enstrophy, peak=peak, size=size)


def _coalesce(points: list[tuple[int, int, float]], radius: float, shape: tuple[int, int]) -> list[tuple[int, int]]:
    """Drop candidates within `radius` of an already-kept (better) candidate."""
    kept: list[tuple[int, int]] = []
    for r, c, _ in points:
        if all(_periodic_distance((r, c), k, shape) >= radius for k in kept):
            kept.append((r, c))
    return kept


def _materialize_vortex(basis: TemplateBasis, center: tuple[int, int], coeff: np.ndarray) -> np.ndarray:
    """Full-grid vortex field: response-summed channel weights, intercept excluded."""
    n_chan = basis.n_channels
    weights = coeff[:n_chan].sum(axis=1)
    combined = np.tensordot(weights, basis.channels, axes=(0, 0))
    return np.roll(combined, center, axis=(0, 1))


def _extract_patch(values: np.ndarray, center: tuple[int, int], extent: int) -> np.ndarray:
    half = extent // 2
    rows = (center[0] + np.arange(-half, half + 1)) % values.shape[0]
    cols = (center[1] + np.arange(-half, half + 1)) % values.shape[1]
    return values[np.ix_(rows, cols)]


def _paint_patch(canvas: np.ndarray, patch: np.ndarray, center: tuple[int, int]) -> None:
    half = patch.shape[0] // 2
    rows = (center[0] + np.arange(-half, half + 1)) % canvas.shape[0]
    cols = (center[1] + np.arange(-half, half + 1)) % canvas.shape[1]
    canvas[np.ix_(rows, cols)] += patch


DEFAULT_MIN_IMPROVEMENT = 1e-3
DEFAULT_MIN_PEAK_SIGMA = 3.0


def forward_select(
    response: MraStack,
    basis: TemplateBasis,
    candidates: CandidateSet,
    patience: int = DEFAULT_PATIENCE,
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
    coalesce_radius: float = DEFAULT_COALESCE_RADIUS,
    max_vortices: int | None = None,
    exhaustive: bool = False,
    min_improvement: float = DEFAULT_MIN_IMPROVEMENT,
    min_peak_sigma: float = DEFAULT_MIN_PEAK_SIGMA,
    dx: float = 1.0,
) -> CensusResult:
    """Grow the vortex set candidate by candidate, keeping the GCV minimum.

    Candidates enter in descending solo-fit gain when the candidate set
    carries a gain map (biggest expected RSS reduction first), otherwise in
    the stored ascending-feasibility order; with `exhaustive` each step tries
    every remaining candidate and keeps the best scorer. A step counts as
    progress only when it beats the running GCV minimum by a relative margin
    of `min_improvement`: location-selected noise fits shave RSS slightly
    faster than the parameter-count penalty grows, so an unguarded argmin
    creeps into overfitting. The search stops after `patience` consecutive
    steps without progress and returns the model at the last significant
    improvement, which may be the empty model.
    """
    if not candidates.points:
        raise ValueError("forward selection needs a nonempty candidate set")
    problem = _CensusProblem(response, basis, ridge_scale)
    m, n = problem.shape
    ordered = candidates.points
    if candidates.peak_map is not None and candidates.noise_scale is not None:
        # Prune candidates whose solo-fit amplitude stays below the noise
        # floor: location-selected noise fits are otherwise indistinguishable
        # from weak vortices by explained energy alone.
        floor = min_peak_sigma * candidates.noise_scale
        ordered = [p for p in ordered if abs(candidates.peak_map[p[0], p[1]]) >= floor]
    if candidates.gain_map is not None:
        ordered = sorted(ordered, key=lambda p: -candidates.gain_map[p[0], p[1]])
    pool = _coalesce(ordered, coalesce_radius, (m, n))
    limit = len(pool) if max_vortices is None else min(max_vortices, len(pool))

    path = [GcvStep(0, gcv(problem.ynorm2, 0, m, n), problem.ynorm2, 0)]
    best_step = path[0]
    best_state: tuple[list[tuple[int, int]], list[np.ndarray]] = ([], [])
    centers: list[tuple[int, int]] = []
    betas: list[np.ndarray] = []
    since_best = 0

    while len(centers) < limit:
        if exhaustive:
            trial_results = []
            for cand in pool:
                if cand in centers:
                    continue
                fit = _backfit_sweeps(problem, centers + [cand], initial=betas)
                p = effective_params(fit.coefficients)
                trial_results.append((gcv(fit.rss, p, m, n), cand, fit, p))
            score, chosen, fit, p = min(trial_results, key=lambda t: t[0])
        else:
            chosen = next(c for c in pool if c not in centers)
            fit = _backfit_sweeps(problem, centers + [chosen], initial=betas)
            p = effective_params(fit.coefficients)
            score = gcv(fit.rss, p, m, n)

        centers = centers + [chosen]
        betas = fit.coefficients
        step = GcvStep(len(centers), score, fit.rss, p)
        path.append(step)
        if score < best_step.gcv * (1.0 - min_improvement):
            best_step = step
            best_state = (list(centers), [np.array(b) for b in betas])
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience:
                break

    return _build_result(problem, response, best_state, path, dx, min_peak_sigma)


def _build_result(
    problem: _CensusProblem,
    response: MraStack,
    state: tuple[list[tuple[int, int]], list[np.ndarray]],
    path: list[GcvStep],
    dx: float,
    min_peak_sigma: float,
) -> CensusResult:
    basis = problem.basis
    centers, betas = state
    m, n = problem.shape
    field_values = response.reconstruct()
    extent = basis.patch_extent
    domain_area = m * n * dx * dx

    records = []
    residual = field_values.copy()
    converged = True
    max_sweeps = 0
    n_insignificant = 0
    if centers:
        final = _backfit_sweeps(problem, centers, initial=betas)
        converged = final.converged
        max_sweeps = final.sweeps
        fields = [_materialize_vortex(basis, c, coeff) for c, coeff in zip(centers, final.coefficients)]
        # Significance floor: a fitted structure whose peak does not clear the
        # pixel-noise level is a background feature the GCV search picked up,
        # not a vortex. The noise scale comes from the finest diagonal detail
        # field, which carries almost no coherent-structure content.
        noise_scale = estimate_noise(response)
        for center, coeff, full in zip(centers, final.coefficients, fields):
            patch = _extract_patch(full, center, extent)
            if np.max(np.abs(patch)) < min_peak_sigma * noise_scale:
                n_insignificant += 1
                continue
            stats = vortex_statistics(patch, dx, domain_area=domain_area)
            n_chan = problem.n_chan
            records.append(
                VortexRecord(
                    center=center,
                    beta=CoefficientMatrix(beta=np.array(coeff[:n_chan]), intercept_phi=float(coeff[n_chan, n_chan - 1])),
                    patch=patch,
                    circulation=stats.circulation,
                    enstrophy_contrib=stats.enstrophy,
                    peak_amplitude=stats.peak,
                    size=stats.size,
                )
            )
            _paint_patch(residual, -patch, center)

    count = len(records)
    field_stats = FieldStats(
        count=count,
        mean_abs_circulation=float(np.mean([abs(r.circulation) for r in records])) if count else 0.0,
        mean_enstrophy=float(np.mean([r.enstrophy_contrib for r in records])) if count else 0.0,
        mean_abs_peak=float(np.mean([abs(r.peak_amplitude) for r in records])) if count else 0.0,
    )
    metadata = {
        "backfit_converged": converged,
        "backfit_sweeps": max_sweeps,
        "gram_condition_equilibrated": problem.solver.condition(),
        "n_insignificant_dropped": n_insignificant,
    }
    return CensusResult(
        vortices=records,
        gcv_path=path,
        residual_field=residual,
        field_stats=field_stats,
        metadata=metadata,
    )


def run_census(
    field: VorticityField | np.ndarray,
    basis: TemplateBasis | None = None,
    spec: TemplateSpec | None = None,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    patience: int = DEFAULT_PATIENCE,
    ridge_scale: float = DEFAULT_RIDGE_SCALE,
    coalesce_radius: float = DEFAULT_COALESCE_RADIUS,
    max_vortices: int | None = None,
    exhaustive: bool = False,
    min_improvement: float = DEFAULT_MIN_IMPROVEMENT,
    min_peak_sigma: float = DEFAULT_MIN_PEAK_SIGMA,
    dx: float = 1.0,
) -> CensusResult:
    """Full pipeline on one field: decompose, scan, forward-select, summarize."""
    values = as_values(field)
    if basis is None:
        spec = spec or TemplateSpec()
        basis = build_template(spec, *values.shape)
    filt = filter_coefficients(basis.filter_name)
    response = mra(values, filt, basis.levels)
    candidates = scan_field(response, basis, max_candidates=max_candidates, ridge_scale=ridge_scale)
    if not candidates.points:
        problem = _CensusProblem(response, basis, ridge_scale)
        m, n = problem.shape
        path = [GcvStep(0, gcv(problem.ynorm2, 0, m, n), problem.ynorm2, 0)]
        result = _build_result(problem, response, ([], []), path, dx, min_peak_sigma)
    else:
        result = forward_select(
            response,
            basis,
            candidates,
            patience=patience,
            ridge_scale=ridge_scale,
            coalesce_radius=coalesce_radius,
            max_vortices=max_vortices,
            exhaustive=exhaustive,
            min_improvement=min_improvement,
            min_peak_sigma=min_peak_sigma,
            dx=dx,
        )
    result.metadata["n_candidates"] = len(candidates.points)
    return result
