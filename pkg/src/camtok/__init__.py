"""Geometry-grounded camera conditioning toolkit.

Depth-based point reprojection rendering with visibility masks, camera and
visual tokenization with zero-initialized conditioning, flow-matching math,
pose-trajectory metrics, parametric trajectory synthesis, and a raw-video
filtering pipeline, plus the file formats and CLI tying them together.
"""

from .camera import (
    CameraPose,
    CompactCamera,
    Intrinsics,
    Quaternion,
    Trajectory,
    TrajectoryEntry,
    compact_camera,
    compose,
    delta_rotation,
    delta_translation,
    normalize_to_first_frame,
    quat_to_rotmat,
    relative_pose,
    rotmat_to_quat,
)
from .conditioning import (
    ContextBlock,
    FlowSample,
    ZeroProjection,
    flow_interpolate,
    flow_matching_loss,
    zero_project_add,
)
from .errors import (
    AlignmentError,
    BehindCameraError,
    CamtokError,
    EmptySourceWarning,
    InvalidInputError,
    MissingScoreWarning,
    ParseError,
    ValidationError,
)
from .filtering import (
    ClipDecision,
    FilterReport,
    FilterThresholds,
    MotionStats,
    evaluate_clip,
    motion_stats,
    pipeline_report,
    pose_validity_check,
    quality_gates,
    shot_boundaries,
    static_camera_reject,
)
from .geometry import (
    ColorImage,
    DepthMap,
    PointCloud,
    Rendering,
    VisibilityMask,
    backproject,
    project_point,
    render_sequence,
    render_view,
)
from .metrics import (
    AlignmentResult,
    PoseErrorReport,
    align_trajectories,
    ate,
    pose_error_report,
    rpe,
    rre,
)
from .tokenizer import (
    CameraEmbedWeights,
    PatchEmbedderWeights,
    TokenLayout,
    TokenSequence,
    assemble_tokens,
    embed_camera,
    embed_rendering_mask,
)
from .trajgen import PRESET_NAMES, TrajectorySpec, generate, preset_names

__version__ = "0.1.0"
