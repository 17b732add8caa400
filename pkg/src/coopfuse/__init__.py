"""Object-level cooperative perception with pose-error correction.

Two vehicles exchange 3D bounding boxes instead of raw sensor data.  The
pipeline matches co-visible boxes with an entropic optimal-transport solver,
re-estimates the noisy inter-vehicle transform from the matched centers by
robust point registration, and merges the aligned detections with
non-maximum suppression.  Synthetic scenes, accuracy metrics, and a Monte
Carlo noise sweep close the loop for end-to-end evaluation.
"""

from .association import (
    AssignmentResult,
    AssociationConfig,
    ConvergenceError,
    associate,
    augment,
    build_cost,
    empty_assignment,
    extract_pairs,
    hungarian_oracle,
    sinkhorn_solve,
)
from .experiment import (
    AXES,
    METHODS,
    ComparisonRow,
    ExperimentRecord,
    GridMismatchError,
    SweepConfig,
    compare_methods,
    format_comparison,
    records_to_dicts,
    run_sweep,
    write_records_csv,
)
from .fusion import (
    CooperativeMode,
    Detection,
    FusionOutput,
    PipelineConfig,
    cooperative_mode,
    fuse_frame,
    nms,
)
from .geometry import (
    OrientedBox,
    Pose,
    RigidTransform,
    apply_transform,
    box_corners_bev,
    box_iou_3d,
    compose,
    identity_transform,
    invert_transform,
    log_rotation,
    pose_transform,
    relative_transform,
    rotation_about_x,
    rotation_about_y,
    rotation_about_z,
    rotation_from_euler,
    transform_points,
    wrap_angle,
    yaw_of_rotation,
)
from .metrics import (
    BandwidthSpec,
    EmptyGroundTruthError,
    PrecisionRecallCurve,
    TransformError,
    average_precision,
    bandwidth,
    rre,
    rte,
)
from .registration import (
    DegenerateGeometryError,
    EstimationFailedError,
    InsufficientPairsError,
    RansacConfig,
    RegistrationResult,
    compose_final,
    estimate_correction,
    inlier_ratio,
    kabsch,
)
from .rng import stream, substream_seed
from .scenario import (
    LAYOUTS,
    NoiseSpec,
    PlacementError,
    Scene,
    SensorSpec,
    covisible_count,
    generate_scene,
    observe,
    perturb_pose,
    visible_indices,
)
from .serialization import (
    MalformedDocumentError,
    fusion_report_dict,
    load_document,
    load_scene,
    records_document,
    save_document,
    save_scene,
    scene_from_dict,
    scene_to_dict,
    validate_document,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # geometry
    "Pose",
    "RigidTransform",
    "OrientedBox",
    "wrap_angle",
    "rotation_about_x",
    "rotation_about_y",
    "rotation_about_z",
    "rotation_from_euler",
    "yaw_of_rotation",
    "relative_transform",
    "pose_transform",
    "invert_transform",
    "compose",
    "identity_transform",
    "transform_points",
    "apply_transform",
    "log_rotation",
    "box_corners_bev",
    "box_iou_3d",
    # association
    "AssociationConfig",
    "AssignmentResult",
    "ConvergenceError",
    "build_cost",
    "augment",
    "sinkhorn_solve",
    "extract_pairs",
    "hungarian_oracle",
    "empty_assignment",
    "associate",
    # registration
    "RansacConfig",
    "RegistrationResult",
    "DegenerateGeometryError",
    "InsufficientPairsError",
    "EstimationFailedError",
    "kabsch",
    "inlier_ratio",
    "estimate_correction",
    "compose_final",
    # fusion
    "Detection",
    "CooperativeMode",
    "PipelineConfig",
    "FusionOutput",
    "nms",
    "cooperative_mode",
    "fuse_frame",
    # scenario
    "Scene",
    "NoiseSpec",
    "SensorSpec",
    "PlacementError",
    "LAYOUTS",
    "generate_scene",
    "perturb_pose",
    "observe",
    "visible_indices",
    "covisible_count",
    # metrics
    "PrecisionRecallCurve",
    "TransformError",
    "BandwidthSpec",
    "EmptyGroundTruthError",
    "rre",
    "rte",
    "average_precision",
    "bandwidth",
    # experiment
    "METHODS",
    "AXES",
    "SweepConfig",
    "ExperimentRecord",
    "ComparisonRow",
    "GridMismatchError",
    "run_sweep",
    "compare_methods",
    "format_comparison",
    "write_records_csv",
    "records_to_dicts",
    # serialization
    "MalformedDocumentError",
    "scene_to_dict",
    "scene_from_dict",
    "save_scene",
    "load_scene",
    "fusion_report_dict",
    "records_document",
    "save_document",
    "load_document",
    "validate_document",
    # rng
    "stream",
    "substream_seed",
]
