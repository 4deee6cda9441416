"""Multiresolution census of coherent vortices in periodic 2D vorticity fields.

The library decomposes a vorticity field with a non-decimated 2D wavelet
transform, regresses a Gaussian vortex template against the decomposition at
every grid location via FFT cross-correlations, and selects the final vortex
set by forward stepwise search under generalized cross-validation. A
pseudo-spectral decaying-turbulence simulator and a planted-vortex
synthesizer generate test fields with known ground truth.
"""

from .census import (
    BackfitResult,
    CensusResult,
    VortexRecord,
    backfit,
    effective_params,
    forward_select,
    gcv,
    run_census,
    vortex_statistics,
)
from .fields import (
    VorticityField,
    circular_shift,
    cross_correlation_map,
    read_field,
    write_field,
)
from .modwt import (
    MraStack,
    ModwtCoefficients,
    WaveletFilter,
    filter_coefficients,
    modwt2d_forward,
    mra,
)
from .scaling import ScalingFit, census_series, scaling_fit
from .scan import (
    CandidateSet,
    CoefficientMatrix,
    LocationFits,
    find_candidates,
    fit_all_locations,
    lambda_map,
    scan_field,
    smooth_lambda,
)
from .simulate import PlantedVortex, SimConfig, simulate, synthesize
from .template import TemplateBasis, TemplateSpec, build_template, build_template_from_patch, gram_condition

__version__ = "0.1.0"

__all__ = [
    "BackfitResult",
    "CandidateSet",
    "CensusResult",
    "CoefficientMatrix",
    "LocationFits",
    "ModwtCoefficients",
    "MraStack",
    "PlantedVortex",
    "ScalingFit",
    "SimConfig",
    "TemplateBasis",
    "TemplateSpec",
    "VortexRecord",
    "VorticityField",
    "WaveletFilter",
    "backfit",
    "build_template",
    "build_template_from_patch",
    "census_series",
    "circular_shift",
    "cross_correlation_map",
    "effective_params",
    "filter_coefficients",
    "find_candidates",
    "fit_all_locations",
    "forward_select",
    "gcv",
    "gram_condition",
    "lambda_map",
    "modwt2d_forward",
    "mra",
    "read_field",
    "run_census",
    "scaling_fit",
    "scan_field",
    "simulate",
    "smooth_lambda",
    "synthesize",
    "vortex_statistics",
    "write_field",
]
