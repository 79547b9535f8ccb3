"""Medial axis transform of tetrahedral meshes with topology and feature preservation."""

from ._mattopo import (
    MattopoError,
    PipelineConfig,
    PipelineResult,
    TetMesh,
    export,
    fixture,
    fixture_names,
    ground_truth_euler,
    load_mesh,
    ma_string,
    power_diagram,
    run,
    stats,
)

__all__ = [
    "MattopoError",
    "PipelineConfig",
    "PipelineResult",
    "TetMesh",
    "export",
    "fixture",
    "fixture_names",
    "ground_truth_euler",
    "load_mesh",
    "ma_string",
    "power_diagram",
    "run",
    "stats",
]


def config(**fields) -> PipelineConfig:
    """PipelineConfig with the given fields set."""
    c = PipelineConfig()
    for name, value in fields.items():
        if not hasattr(c, name):
            raise AttributeError(f"PipelineConfig has no field {name!r}")
        setattr(c, name, value)
    return c
