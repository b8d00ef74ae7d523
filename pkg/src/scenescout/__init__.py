"""Zero-shot 3D scene understanding through VLM-guided view planning.

A colored mesh is rendered to an annotated bird's-eye view; a pluggable
vision-language model picks camera viewpoints on the printed grid; those
views are rendered with a deterministic software rasterizer and drive scene
reasoning (QA, caption, task decomposition, dialog) and 3D semantic
segmentation via back-projection, scored with a caption-metric suite.
"""

from .agent_core import (
    PlanConfig,
    PlanState,
    SceneContext,
    TaskKind,
    parse_numbered_answers,
    plan_views,
    prepare_scene,
    random_plan,
    run_task,
    surface_coverage,
)
from .camera import CameraIntrinsics, CameraPose, project, unproject
from .errors import SceneScoutError
from .harness import (
    RunReport,
    SceneManifest,
    SegOptions,
    load_manifest,
    run_ablation,
    run_eval,
    run_segmentation,
)
from .pose_grammar import (
    CameraRigConfig,
    ViewProposal,
    parse_view_proposals,
    pose_from_proposal,
    sanitize_proposals,
)
from .renderer import BevImage, ViewBundle, render_bev, render_perspective
from .scene_io import (
    LabeledPointCloud,
    SceneBounds,
    ToyRoomSpec,
    TriangleMesh,
    build_toy_room,
    compute_bounds,
    load_mesh,
    sample_surface_points,
    save_mesh,
    strip_ceiling,
)
from .seg3d import REJECTED, Region2D, RegionLabel, builtin_segment, fuse_labels, miou
from .solp import GridSpec, OverlayStyle, annotate_bev, grid_to_world, make_grid, world_to_grid
from .text_metrics import MetricReport, bleu, cider_d, exact_match, meteor_lite, normalize, rouge_l
from .vlm_gateway import (
    CacheBackend,
    ChatRequest,
    HttpBackend,
    ScriptedBackend,
    ScriptedTranscript,
    VlmReply,
    encode_image,
)

__version__ = "0.1.0"
