"""Discretized model manifolds with boundary: charts, metrics, curvature,
boundary geometry, and the container file format."""

from .grid import Axis, ChartGrid
from .models import (
    Model,
    ModelSpec,
    MetricField,
    WarpData,
    build_model,
    sphere_area,
)
from .curvature import (
    CurvaturePack,
    RadialConnection,
    curvature_exact,
    curvature_fd,
    christoffels_fd,
)
from .boundary import (
    BoundaryGeometry,
    FaceGeometry,
    DistanceField,
    FermiReport,
    boundary_geometry,
    boundary_distance,
    fermi_identity_report,
)
from .container import save_container, load_container, save_model, load_model

__all__ = [
    "Axis",
    "ChartGrid",
    "Model",
    "ModelSpec",
    "MetricField",
    "WarpData",
    "build_model",
    "sphere_area",
    "CurvaturePack",
    "RadialConnection",
    "curvature_exact",
    "curvature_fd",
    "christoffels_fd",
    "BoundaryGeometry",
    "FaceGeometry",
    "DistanceField",
    "FermiReport",
    "boundary_geometry",
    "boundary_distance",
    "fermi_identity_report",
    "save_container",
    "load_container",
    "save_model",
    "load_model",
]
