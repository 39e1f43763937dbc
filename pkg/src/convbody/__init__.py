"""Convolution bodies of symmetric convex bodies from support and membership oracles."""
from .bodies import (
    Ball, Body, Box, CrossPolytope, Ellipsoid, HPolytope, SupportResult, VPolytope,
    body_from_spec, gauge, membership, support,
)
from .convolution import (
    DeficitModel, DeviationReport, ProbeReport, RadialSolve, RateFit, convexity_probe,
    cube_radial_closed, deviation_T, limit_radius, monotonicity_probe, normalized_radial,
    fit_rate, radial_lambda, rate_fit,
)
from .errors import (
    ConvBodyError, EmptyBodyError, InvalidArgumentError, NonConvergenceError,
    NumericalFailureError, OutOfRangeError,
)
from .geom import SphereSample, cn_closed_form, sample_sphere
from .intersection import (
    ShiftedIntersection, SupportSolveReport, infconv_support, lens_support, lp_support,
    support_intersection,
)
from .meanwidth import (
    MeanWidthEstimate, box_mean_width_closed, lens_mean_width_quadrature, mean_width_mc,
)

__version__ = "0.1.0"
