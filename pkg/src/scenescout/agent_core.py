"""Iterative viewpoint planning over the annotated BEV, plus task execution (QA,
caption, task decomposition, dialog) against the collected views."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import project_many
from .errors import AnswerParseError, EmptyScene, LatticeExhausted, PlanningError
from .image_io import write_pfm, write_png
from .pose_grammar import (
    CameraRigConfig,
    ViewProposal,
    all_lattice_pairs,
    parse_view_proposals,
    pose_from_proposal,
    sanitize_proposals,
)
from .renderer import BevImage, ViewBundle, render_bev, render_perspective
from .scene_io import SceneBounds, TriangleMesh, compute_bounds, strip_ceiling
from .solp import GridSpec, OverlayStyle, annotate_bev, make_grid
from .vlm_gateway import ChatRequest, VlmReply

SYSTEM_TEXT = (
    "You are a careful assistant that understands 3D scenes from rendered images."
)

GOAL_TEMPLATE = (
    "Given a bird's-eye view of a scene, please provide {n} pictures to "
    "comprehensively understand the scene. Could you suggest camera positions "
    "and orientations for each shot?"
)
FORMAT_CONTROL = (
    "The position can be present as the grid point in the picture, like (0, 0). "
    "The orientations can be chosen from ['left', 'right', 'front', 'back']."
)
LATTICE_RANGE_TEMPLATE = (
    "Grid point indices range from (0, 0) to ({d}, {d}). "
    "Reply with one line per view in the form '(i, j) orientation'."
)
SCENE_TYPE_TEMPLATE = "The scene type is: {hint}."
PRIOR_VIEWS_TEMPLATE = (
    "Already chosen views: {pairs}. "
    "Choose complementary viewpoints that cover parts of the scene not yet observed."
)
PARSE_RETRY_SUFFIX = (
    "Your previous reply could not be parsed; reply ONLY with lines of the "
    "form '(i, j) orientation'."
)

QA_INSTRUCTION = (
    "Understand a 3D scene without direct access to the point clouds but only "
    "images from different viewpoints. Later, I'll ask you a series of "
    "questions about the scene, and I'd like your responses one-by-one with "
    "correspondence number, in the order the questions are presented. "
    "Please keep each response short and clear."
)
QA_EXAMPLE_BLOCK = (
    "Examples: questions: [1. How many chairs are around the table? "
    "2. what's the color of the table? 3. Where is the beige wooden working "
    "table placed? 4. What is in the corner of the bath? ]. "
    "Answers: [1. 3 2. Brown 3. right of tall cabinet 4. shower]"
)
CAPTION_INSTRUCTION = (
    "These images show one 3D scene from different viewpoints. Write a single "
    "coherent caption describing the scene: the room type, the main objects, "
    "and their spatial arrangement."
)
DECOMPOSITION_INSTRUCTION = (
    "These images show one 3D scene from different viewpoints. Break the "
    "following task into a short numbered list of concrete steps an embodied "
    "agent could carry out in this scene."
)
DECOMPOSITION_DEFAULT_TASK = (
    "Propose one practical task for this scene and decompose it."
)
DIALOG_INSTRUCTION = (
    "These images show one 3D scene from different viewpoints. Continue the "
    "conversation about this scene, answering as the assistant."
)
ANSWER_RETRY_SUFFIX = (
    "Your previous reply could not be parsed; answer again as a numbered list "
    "1..{n} with one item per question."
)


class TaskKind(str, enum.Enum):
    QA_BATCH = "qa"
    CAPTION = "caption"
    TASK_DECOMPOSITION = "decompose"
    DIALOG = "dialog"


@dataclass
class PlanConfig:
    """Planner knobs: total views, views per iteration, grid density, retries."""

    n_total: int = 24
    n_per_iter: int = 3
    density: int = 8
    max_parse_retries: int = 3
    rig: CameraRigConfig = field(default_factory=CameraRigConfig)
    seed: int = 0
    max_images: int = 24

    def __post_init__(self):
        if not (1 <= self.n_per_iter <= self.n_total):
            raise ValueError("need 1 <= n_per_iter <= n_total")
        if self.n_total > self.max_images:
            raise ValueError(f"n_total exceeds the image budget ({self.max_images})")

    def to_json(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_per_iter": self.n_per_iter,
            "density": self.density,
            "max_parse_retries": self.max_parse_retries,
            "seed": self.seed,
            "max_images": self.max_images,
            "rig": {
                "eye_height": self.rig.eye_height,
                "pitch_down_deg": self.rig.pitch_down_deg,
                "image_size": [self.rig.intrinsics.width, self.rig.intrinsics.height],
                "focal_px": [self.rig.intrinsics.fx, self.rig.intrinsics.fy],
            },
        }


@dataclass
class SceneContext:
    """Everything planning needs about one scene: geometry, lattice, annotated BEV."""

    mesh: TriangleMesh
    bounds: SceneBounds
    grid: GridSpec
    annotated_bev: np.ndarray
    bev: BevImage
    floor_z: float
    scene_type: str | None = None


def prepare_scene(
    mesh: TriangleMesh,
    density: int = 8,
    cut_height: float = 2.2,
    px_per_meter: float = 100.0,
    margin_m: float = 0.5,
    style: OverlayStyle | None = None,
    scene_type: str | None = None,
) -> SceneContext:
    """Strip the ceiling, render the BEV, and overlay the planning grid."""
    bounds = compute_bounds(mesh)
    try:
        bev_mesh = strip_ceiling(mesh, cut_height)
    except EmptyScene:
        bev_mesh = mesh
    bev = render_bev(bev_mesh, bounds, px_per_meter=px_per_meter, margin_m=margin_m)
    grid = make_grid(bounds, density)
    annotated = annotate_bev(bev, grid, style)
    return SceneContext(
        mesh=mesh,
        bounds=bounds,
        grid=grid,
        annotated_bev=annotated,
        bev=bev,
        floor_z=float(bounds.min[2]),
        scene_type=scene_type,
    )


@dataclass
class PlanState:
    """Accumulated planning session: accepted proposals/poses/views and the
    full prompt/reply log."""

    scene: SceneContext
    proposals: list[ViewProposal] = field(default_factory=list)
    poses: list = field(default_factory=list)
    views: list[ViewBundle] = field(default_factory=list)
    iteration: int = 0
    log: list[dict] = field(default_factory=list)

    def log_call(self, purpose: str, request: ChatRequest, reply: VlmReply) -> None:
        self.log.append({
            "purpose": purpose,
            "iteration": self.iteration,
            "system": request.system_text,
            "user_texts": request.texts,
            "n_images": len(request.images),
            "reply": reply.text,
            "backend": reply.backend_id,
        })

    def pose_pairs_text(self) -> str:
        return "; ".join(
            f"({p.grid_point[0]}, {p.grid_point[1]}) {p.orientation}"
            for p in self.proposals
        )

    def save(self, run_dir: str | Path) -> None:
        """Persist poses.json, numbered view images/depths, and transcript.json."""
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        poses = [
            {
                "grid_point": list(p.grid_point),
                "orientation": p.orientation,
                "position": [float(x) for x in pose.position],
                "rotation": [[float(x) for x in row] for row in pose.rotation],
            }
            for p, pose in zip(self.proposals, self.poses)
        ]
        (run_dir / "poses.json").write_text(json.dumps(poses, indent=2))
        for k, view in enumerate(self.views):
            write_png(view.color, run_dir / f"view_{k:02d}.png")
            write_pfm(view.depth, run_dir / f"view_{k:02d}.pfm")
        (run_dir / "transcript.json").write_text(json.dumps(self.log, indent=2))


def build_view_selection_prompt(state: PlanState, cfg: PlanConfig) -> ChatRequest:
    """Compose the next view-selection request: goal, format control, grid
    range, optional scene hint, prior picks, and the annotated BEV image."""
    n = min(cfg.n_per_iter, cfg.n_total - len(state.poses))
    lines = [GOAL_TEMPLATE.format(n=n), FORMAT_CONTROL,
             LATTICE_RANGE_TEMPLATE.format(d=cfg.density)]
    if state.scene.scene_type:
        lines.append(SCENE_TYPE_TEMPLATE.format(hint=state.scene.scene_type))
    if state.proposals:
        lines.append(PRIOR_VIEWS_TEMPLATE.format(pairs=state.pose_pairs_text()))
    return ChatRequest(
        system_text=SYSTEM_TEXT,
        user_parts=["\n".join(lines), state.scene.annotated_bev],
    )


def _realize(state: PlanState, proposals: list[ViewProposal], cfg: PlanConfig) -> None:
    for prop in proposals:
        pose = pose_from_proposal(prop, state.scene.grid, cfg.rig, state.scene.floor_z)
        view = render_perspective(state.scene.mesh, cfg.rig.intrinsics, pose)
        state.proposals.append(prop)
        state.poses.append(pose)
        state.views.append(view)


def plan_views(scene: SceneContext, cfg: PlanConfig, backend) -> PlanState:
    """Iteratively ask the model for viewpoints until n_total views are planned.

    Each round requests up to n_per_iter proposals, re-prompting with a
    corrective suffix on unparseable replies (max_parse_retries times), then
    clamps/dedups them and renders the accepted views.

    Raises:
        PlanningError: a round stayed unparseable after all retries.
    """
    state = PlanState(scene=scene)
    rng = np.random.default_rng(cfg.seed)
    while len(state.poses) < cfg.n_total:
        state.iteration += 1
        base = build_view_selection_prompt(state, cfg)
        request = base
        proposals: list[ViewProposal] = []
        for attempt in range(cfg.max_parse_retries + 1):
            if attempt:
                request = ChatRequest(
                    system_text=base.system_text,
                    user_parts=[base.user_parts[0] + "\n" + PARSE_RETRY_SUFFIX,
                                *base.user_parts[1:]],
                    temperature=base.temperature,
                    max_tokens=base.max_tokens,
                    model_name=base.model_name,
                )
            reply = backend.complete(request)
            state.log_call("plan", request, reply)
            proposals = parse_view_proposals(reply.text)
            if proposals:
                break
        if not proposals:
            raise PlanningError(
                f"iteration {state.iteration}: no parseable proposals after "
                f"{cfg.max_parse_retries} re-prompts")
        remaining = cfg.n_total - len(state.poses)
        proposals = sanitize_proposals(proposals[:remaining], state.proposals,
                                       scene.grid, rng)
        _realize(state, proposals, cfg)
    return state


def random_plan(scene: SceneContext, cfg: PlanConfig, seed: int = 0) -> PlanState:
    """Uniform random baseline: n_total distinct (point, orientation) pairs,
    no model calls. Prefix-stable in n_total for a fixed seed.
    """
    pairs = all_lattice_pairs(scene.grid)
    if cfg.n_total > len(pairs):
        raise LatticeExhausted(
            f"want {cfg.n_total} views but the lattice only offers {len(pairs)} pairs")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    state = PlanState(scene=scene)
    state.log.append({"purpose": "random_plan", "seed": seed})
    chosen = [ViewProposal((pairs[k][0], pairs[k][1]), pairs[k][2], raw_span="<random>")
              for k in order[:cfg.n_total]]
    _realize(state, chosen, cfg)
    return state


# ---------------------------------------------------------------------------
# Task execution


@dataclass
class TaskAnswer:
    kind: TaskKind
    raw_reply: str
    answers: list[str] | None = None  # QA: one string per question
    text: str | None = None           # caption / decomposition / dialog turn


def parse_numbered_answers(text: str, n: int) -> list[str]:
    """Split a reply on 'k.' / 'k)' markers for k = 1..n appearing in order.

    Answer k is the text between marker k and marker k+1 (or the end),
    trimmed of whitespace and brackets.

    Raises:
        AnswerParseError: some marker is missing.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spans = []
    cursor = 0
    for k in range(1, n + 1):
        m = re.compile(rf"(?<!\d){k}\s*[.)]").search(text, cursor)
        if m is None:
            raise AnswerParseError(f"marker {k}. not found in reply")
        spans.append((m.start(), m.end()))
        cursor = m.end()
    answers = []
    for idx, (_, end) in enumerate(spans):
        stop = spans[idx + 1][0] if idx + 1 < len(spans) else len(text)
        answers.append(text[end:stop].strip().strip("[]").strip())
    return answers


def _task_request(views: list[ViewBundle], kind: TaskKind, payload) -> ChatRequest:
    images = [v.color for v in views]
    if kind == TaskKind.QA_BATCH:
        questions = list(payload)
        qblock = "Questions: [" + " ".join(
            f"{k}. {q}" for k, q in enumerate(questions, start=1)) + "]"
        parts = [QA_INSTRUCTION + "\n" + QA_EXAMPLE_BLOCK, *images,
                 qblock + "\nAnswers:"]
    elif kind == TaskKind.CAPTION:
        parts = [CAPTION_INSTRUCTION, *images]
    elif kind == TaskKind.TASK_DECOMPOSITION:
        task = payload if isinstance(payload, str) and payload else DECOMPOSITION_DEFAULT_TASK
        parts = [DECOMPOSITION_INSTRUCTION, *images, "Task: " + task]
    elif kind == TaskKind.DIALOG:
        history = payload.get("history", [])
        message = payload["message"]
        lines = ["Conversation so far:"] if history else []
        for turn in history:
            speaker = "User" if turn.get("role", "user") == "user" else "Assistant"
            lines.append(f"{speaker}: {turn['text']}")
        lines.append(f"User: {message}")
        lines.append("Assistant:")
        parts = [DIALOG_INSTRUCTION, *images, "\n".join(lines)]
    else:
        raise ValueError(f"unknown task kind {kind}")
    return ChatRequest(system_text=SYSTEM_TEXT, user_parts=parts)


def run_task(views: list[ViewBundle], kind: TaskKind, payload, backend,
             log: list[dict] | None = None) -> TaskAnswer:
    """Send one task request with every view attached and parse the reply.

    QA replies must parse into exactly len(questions) numbered answers; one
    corrective re-prompt is attempted before giving up.

    Raises:
        AnswerParseError: QA reply count still wrong after the re-prompt.
    """
    if not views:
        raise ValueError("run_task needs at least one view")
    request = _task_request(views, kind, payload)
    reply = backend.complete(request)
    if log is not None:
        log.append({"purpose": f"task:{kind.value}", "user_texts": request.texts,
                    "n_images": len(request.images), "reply": reply.text})
    if kind == TaskKind.QA_BATCH:
        n = len(list(payload))
        try:
            answers = parse_numbered_answers(reply.text, n)
        except AnswerParseError:
            retry = ChatRequest(
                system_text=request.system_text,
                user_parts=[*request.user_parts,
                            ANSWER_RETRY_SUFFIX.format(n=n)],
            )
            reply = backend.complete(retry)
            if log is not None:
                log.append({"purpose": "task:qa-retry", "user_texts": retry.texts,
                            "n_images": len(retry.images), "reply": reply.text})
            answers = parse_numbered_answers(reply.text, n)
        return TaskAnswer(kind=kind, raw_reply=reply.text, answers=answers)
    return TaskAnswer(kind=kind, raw_reply=reply.text, text=reply.text)


# ---------------------------------------------------------------------------
# Geometric coverage


def surface_coverage(views: list[ViewBundle], points: np.ndarray,
                     depth_tol: float = 0.02) -> float:
    """Fraction of sample points visible (unoccluded, in frame) in >= 1 view."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    visible = np.zeros(len(points), dtype=bool)
    for view in views:
        intr = view.intrinsics
        uv, z, in_front = project_many(intr, view.pose, points)
        px = np.floor(uv[:, 0]).astype(np.int64)
        py = np.floor(uv[:, 1]).astype(np.int64)
        ok = (in_front & (z > view.near) & (z < view.far)
              & (px >= 0) & (px < intr.width) & (py >= 0) & (py < intr.height))
        if not ok.any():
            continue
        buffered = view.depth[py[ok], px[ok]].astype(np.float64)
        close = np.isfinite(buffered) & (np.abs(buffered - z[ok]) < depth_tol)
        idx = np.nonzero(ok)[0][close]
        visible[idx] = True
    return float(visible.mean()) if len(points) else 0.0
