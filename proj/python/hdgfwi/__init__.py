"""HDG frequency-domain acoustic full-waveform inversion."""

from ._core import (
    Config,
    ConfigError,
    Error,
    IoError,
    MeshError,
    NumericalError,
    StructuralError,
    __version__,
    dof_count,
    gradient_check,
    invert,
    mesh_info,
    observed_data,
)

__all__ = [
    "Config",
    "ConfigError",
    "Error",
    "IoError",
    "MeshError",
    "NumericalError",
    "StructuralError",
    "__version__",
    "dof_count",
    "gradient_check",
    "invert",
    "mesh_info",
    "observed_data",
]
