"""Computational convex geometry for L_p centroid-type inequalities.

Convex bodies with support/radial/gauge evaluation, L_p moment and centroid
bodies of bodies/domains/functions, L_r mixed volumes (body-pair and
functional), star-shaped symmetrization of compact domains, layer-cake
functionals, and a verification harness that reports deficit ratios for the
associated sharp inequalities.
"""

from .domains import CompactDomain, StarBody, domain_moment, domain_volume, sm_symmetrize
from .errors import DegenerateSourceError, NumericFailure
from .fields import (DiscreteSphereMeasure, GridField, LevelContour, RadialField,
                     RadialProfile, bump_profile, cone_profile, extract_contour,
                     gradient_eval, indicator_profile, layer_integral, layer_profile,
                     level_volume, lq_norm, sobolev_profile,
                     surface_measure_of_function)
from .geometry import (ConvexBody, Ellipsoid, Polytope, SphereGrid, SupportSampled,
                       body_from_json, body_to_json, lr_combination)
from .mixed import (SurfaceMeasureAtoms, dual_mixed_volume, functional_mixed_volume,
                    level_mixed_volume, mixed_volume, polar_projection_body,
                    support_dual_integral, surface_measure_atoms)
from .moments import MomentBody, centroid_body, moment_body, radial_moment_factor
from .params import (ConstantBundle, LayerConstant, ParamSet, centroid_normalization,
                     constant_bundle, extremal_profile, fr_exponent, layer_constant,
                     layer_extremal, level_sobolev_constant, main_constant,
                     minimize_power_sum, sharp_sobolev_constant, sobolev_extremal,
                     unit_ball_volume)
from .verify import (DEFAULT_KIND, DEFAULT_SLACK, INEQUALITY_IDS, DeficitReport,
                     InstanceSpec, check_inequality, extremal_pair, lambda_sweep,
                     random_instance, resolution_study, run_batch,
                     transform_instance)

__version__ = "0.1.0"
