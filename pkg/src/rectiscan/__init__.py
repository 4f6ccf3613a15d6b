"""Multiscale density and flatness analysis of discrete measures.

The package tabulates density-difference square functions, smoothed
variants and their derivatives, beta/alpha flatness numbers, best
constant-density defects, and wavelet coefficient tables, with a CLI
wrapping the common workflows.
"""

from .datasets import KINDS, GeneratorSpec, generate
from .geometry import (alpha_coeff, alpha_packing_audit, beta1, beta2,
                       flat_norm_distance)
from .kernels import (KernelSpec, convex_weight, difference_radial,
                      discrete_difference_kernel, parse_kernel, phi_t)
from .lattice import CubeLattice, DavidCube, build_lattice, cube_ball, lattice_audit
from .measure import (DiscreteMeasure, SpatialIndex, ad_regularity_profile,
                      ball_mass_brute, load_csv, min_spacing, save_csv)
from .squares import (CarlesonReport, CoefficientField, Functional,
                      carleson_norm, coefficient_field, delta_density,
                      delta_k, delta_smooth, delta_smooth_dt, geometric_scales)
from .uniformity import sqrt2_scales, uniformity_identity_check, wcd_defect
from .wavelets import (cascade_tables, decay_regressions, h_coefficient,
                       inner_product, reconstruction_check)

__version__ = "0.1.0"

__all__ = [
    "KINDS", "GeneratorSpec", "generate",
    "alpha_coeff", "alpha_packing_audit", "beta1", "beta2",
    "flat_norm_distance",
    "KernelSpec", "convex_weight", "difference_radial",
    "discrete_difference_kernel", "parse_kernel", "phi_t",
    "CubeLattice", "DavidCube", "build_lattice", "cube_ball", "lattice_audit",
    "DiscreteMeasure", "SpatialIndex", "ad_regularity_profile",
    "ball_mass_brute", "load_csv", "min_spacing", "save_csv",
    "CarlesonReport", "CoefficientField", "Functional", "carleson_norm",
    "coefficient_field", "delta_density", "delta_k", "delta_smooth",
    "delta_smooth_dt", "geometric_scales",
    "sqrt2_scales", "uniformity_identity_check", "wcd_defect",
    "cascade_tables", "decay_regressions", "h_coefficient", "inner_product",
    "reconstruction_check",
    "__version__",
]
