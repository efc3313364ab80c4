"""polyseg: semi-automatic zero-shot 3D segmentation.

Sparse 3D polyline prompts are propagated onto 2D slices taken along
multiple rotationally equispaced axes, each slice is segmented by a
pluggable promptable 2D model, and the redundant 2D masks are voted back
into a filtered 3D voxel mask and surface mesh.
"""

from .backends import (
    BackendSpec,
    FaultBackend,
    FloodOracleBackend,
    Mask2D,
    RemoteBackend,
    ThresholdOracleBackend,
    build_backend,
    flood_oracle,
    parse_backend_spec,
    segment2d,
)
from .errors import (
    BackendUnavailable,
    CorruptInput,
    EmptyMask,
    GridMismatch,
    InvalidAxis,
    InvalidMetadata,
    IoError,
    NoPositivePrompts,
    OffPlane,
    PolysegError,
    ProtocolError,
    UnsupportedAxisCount,
    UnsupportedFormat,
)
from .geometry import (
    AxisSet,
    Polyline,
    PromptPoint2D,
    SliceFrame,
    axis_set,
    intersect_polyline_plane,
    load_prompts,
    pixel_to_world,
    plane_basis,
    save_prompts,
    slice_frames,
    world_to_pixel,
)
from .metrics import MaskStats, dice, stats
from .pipeline import RunConfig, RunResult, experiment_transforms, run_pipeline, segment_votes
from .recompose import (
    Mesh,
    PointBatch,
    VoteGrid,
    accumulate,
    export_mesh,
    marching_cubes,
    mask_to_points,
    mesh_area,
    mesh_volume,
    postprocess,
    threshold_votes,
)
from .slicing import Slice2D, SliceTask, extract_slice, schedule, slice_to_png
from .volume import (
    Grid,
    MaskVolume,
    NormalizedVolume,
    Volume,
    load_mask,
    load_volume,
    resample_isotropic,
    sample_trilinear,
    save_mask,
    window_normalize,
)

__version__ = "0.1.0"
