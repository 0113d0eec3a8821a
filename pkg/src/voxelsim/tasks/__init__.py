from .cantilever import (
    CantileverConfig,
    CantileverSeries,
    build_cantilever,
    lobe_peaks,
    oscillation_period,
    zero_crossings,
    run_cantilever_dynamic,
    run_cantilever_static,
)
from .locomotion import (
    LocomotionConfig,
    MeasureKind,
    Outcome,
    Snapshot,
    VoxelRecord,
    build_locomotion,
    run_locomotion,
)
from .perf import PerfReport, measure_svsps, svsps
from .terrain import FlatTerrain, TerrainSpec, UnevenTerrain, make_terrain
