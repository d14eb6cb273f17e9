"""Printable meshes for mathematical objects: generators, measures, codecs."""
__version__ = "0.1.0"

from .geomcore import (  # noqa: E402
    IndexedMesh, MeshError, ParameterError, TopologyError, Transform,
    euler_characteristic, merge, signed_volume, surface_area, total_curvature, weld,
)
