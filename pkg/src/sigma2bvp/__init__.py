"""Numerics for modified sigma_2 curvature boundary value problems.

Layers, bottom to top:

* ``symfunc``   - elementary symmetric functions, Gamma_2+ diagnostics,
  sigma_2 derivative algebra (dimension generic, batched).
* ``geometry``  - discretized model charts (spherical cap, torus band,
  warped slab, seeded perturbations), curvature, boundary geometry.
* ``conformal`` - modified Schouten tensor, conformal deformation law,
  equation residuals, linearization, weighted volumes.
* ``solver``    - cone-safeguarded Newton, the two continuation drivers
  (nonlinear eigenvalue sweep, three-manifold path to the round target),
  and the a priori estimate monitor.
* ``cli``       - configuration-driven entry point (`sigma2bvp ...`).
"""

from . import symfunc, geometry, conformal, solver
from .errors import (
    Sigma2BVPError,
    InvalidArgumentError,
    InvalidMetricError,
    NumericFailureError,
    UnsupportedModelError,
    InvalidModelError,
    ConeExitError,
    LineSearchStallError,
    NonConvergenceError,
    ContinuationError,
)

__version__ = "0.1.0"

__all__ = [
    "symfunc",
    "geometry",
    "conformal",
    "solver",
    "Sigma2BVPError",
    "InvalidArgumentError",
    "InvalidMetricError",
    "NumericFailureError",
    "UnsupportedModelError",
    "InvalidModelError",
    "ConeExitError",
    "LineSearchStallError",
    "NonConvergenceError",
    "ContinuationError",
]
