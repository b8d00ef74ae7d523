"""Dataset manifests and end-to-end evaluation runs: planning, tasks, scoring,
ablation sweeps, and report files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent_core import (
    PlanConfig,
    PlanState,
    SceneContext,
    TaskKind,
    plan_views,
    prepare_scene,
    random_plan,
    run_task,
    surface_coverage,
)
from .errors import ManifestError, SceneScoutError
from .image_io import write_png
from .scene_io import (
    LabeledPointCloud,
    load_labeled_cloud,
    load_mesh,
    sample_surface_points,
    save_labeled_cloud,
)
from .seg3d import (
    backproject_view,
    builtin_segment,
    fuse_labels,
    ingest_masks,
    label_regions,
    miou,
    overlay_marks,
    write_masks,
)
from .text_metrics import MetricReport, score_batch

MARKDOWN_METRIC_HEADER = "B-1 | B-4 | METEOR | ROUGE-L | CIDEr | EM"
COVERAGE_SAMPLE_POINTS = 1500


# ---------------------------------------------------------------------------
# Manifests


@dataclass
class QAItem:
    question: str
    answers: list[str]


@dataclass
class SceneManifest:
    """One scene's evaluation inputs: mesh path, optional GT labels, QA pairs,
    and optional reference texts for the generation tasks."""

    scene_id: str
    mesh_path: Path
    scene_type: str | None = None
    gt_labels_path: Path | None = None
    qa: list[QAItem] = field(default_factory=list)
    class_names: list[str] | None = None
    caption_refs: list[str] | None = None
    decompose: dict | None = None  # {"task": str, "refs": [str]}
    dialog: dict | None = None     # {"history": [...], "message": str, "refs": [str]}

    def to_json(self) -> dict:
        data = {
            "scene_id": self.scene_id,
            "mesh_path": str(self.mesh_path),
            "qa": [{"question": q.question, "answers": q.answers} for q in self.qa],
        }
        if self.scene_type:
            data["scene_type"] = self.scene_type
        if self.gt_labels_path:
            data["gt_labels_path"] = str(self.gt_labels_path)
        if self.class_names:
            data["class_names"] = self.class_names
        if self.caption_refs:
            data["caption_refs"] = self.caption_refs
        if self.decompose:
            data["decompose"] = self.decompose
        if self.dialog:
            data["dialog"] = self.dialog
        return data

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True))


def load_manifest(path: str | Path) -> SceneManifest:
    """Load and validate a scene manifest, resolving paths relative to it.

    Raises:
        ManifestError: missing/invalid fields; the message names the field path.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    base = path.parent

    def fail(where: str, why: str):
        raise ManifestError(f"{where}: {why} (in {path})")

    scene_id = data.get("scene_id")
    if not isinstance(scene_id, str) or not scene_id:
        fail("scene_id", "required non-empty string")
    mesh_path = data.get("mesh_path")
    if not isinstance(mesh_path, str) or not mesh_path:
        fail("mesh_path", "required non-empty string")
    mesh_path = (base / mesh_path).resolve()
    if not mesh_path.exists():
        fail("mesh_path", f"file not found: {mesh_path}")

    qa_items = []
    for i, item in enumerate(data.get("qa", [])):
        question = item.get("question")
        answers = item.get("answers")
        if not isinstance(question, str) or not question:
            fail(f"qa[{i}].question", "required non-empty string")
        if not isinstance(answers, list) or not answers or not all(
                isinstance(a, str) and a for a in answers):
            fail(f"qa[{i}].answers", "required non-empty list of strings")
        qa_items.append(QAItem(question=question, answers=list(answers)))

    gt_path = data.get("gt_labels_path")
    if gt_path is not None:
        gt_path = (base / gt_path).resolve()
        if not gt_path.exists():
            fail("gt_labels_path", f"file not found: {gt_path}")

    for key in ("caption_refs",):
        refs = data.get(key)
        if refs is not None and (not isinstance(refs, list) or not refs):
            fail(key, "must be a non-empty list when present")
    dialog = data.get("dialog")
    if dialog is not None and "message" not in dialog:
        fail("dialog.message", "required when dialog is present")

    return SceneManifest(
        scene_id=scene_id,
        mesh_path=mesh_path,
        scene_type=data.get("scene_type"),
        gt_labels_path=gt_path,
        qa=qa_items,
        class_names=data.get("class_names"),
        caption_refs=data.get("caption_refs"),
        decompose=data.get("decompose"),
        dialog=dialog,
    )


# ---------------------------------------------------------------------------
# Run configuration and reporting


@dataclass
class SegOptions:
    stride_px: int = 4
    radius_m: float | None = None  # None: 2x median GT nearest-neighbor spacing
    min_region_px: int = 64
    quant_levels: int = 4
    masks_dir: Path | None = None  # external per-view mask PNGs instead of builtin

    def to_json(self) -> dict:
        return {
            "stride_px": self.stride_px,
            "radius_m": self.radius_m,
            "min_region_px": self.min_region_px,
            "quant_levels": self.quant_levels,
            "masks_dir": str(self.masks_dir) if self.masks_dir else None,
        }


@dataclass
class SceneRow:
    scene_id: str
    metrics: MetricReport | None = None
    miou: float | None = None
    per_class_iou: dict[str, float] | None = None
    labeled_fraction: float | None = None
    coverage: float | None = None
    vlm_calls: int = 0
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "metrics": self.metrics.to_json() if self.metrics else None,
            "miou": self.miou,
            "per_class_iou": self.per_class_iou,
            "labeled_fraction": self.labeled_fraction,
            "coverage": self.coverage,
            "vlm_calls": self.vlm_calls,
            "error": self.error,
        }


@dataclass
class RunReport:
    config: dict
    task: str
    plan_mode: str
    rows: list[SceneRow]
    aggregate: MetricReport | None
    aggregate_miou: float | None
    aggregate_coverage: float | None
    vlm_calls: int
    wall_clock_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "task": self.task,
            "plan_mode": self.plan_mode,
            "rows": [r.to_json() for r in self.rows],
            "aggregate": self.aggregate.to_json() if self.aggregate else None,
            "aggregate_miou": self.aggregate_miou,
            "aggregate_coverage": self.aggregate_coverage,
            "vlm_calls": self.vlm_calls,
        }


class _CountingBackend:
    """Passthrough that counts completions for the report."""

    def __init__(self, delegate):
        self.delegate = delegate
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        return self.delegate.complete(request)


def config_digest(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")).hexdigest()[:12]


def _aggregate_rows(rows: list[SceneRow]) -> tuple[MetricReport | None, float | None, float | None]:
    scored = [r.metrics for r in rows if r.metrics is not None]
    aggregate = None
    if scored:
        mean = lambda xs: sum(xs) / len(xs)
        ciders = [m.cider for m in scored if m.cider is not None]
        aggregate = MetricReport(
            bleu1=mean([m.bleu1 for m in scored]),
            bleu4=mean([m.bleu4 for m in scored]),
            meteor=mean([m.meteor for m in scored]),
            rouge_l=mean([m.rouge_l for m in scored]),
            cider=mean(ciders) if ciders else None,
            em=mean([m.em for m in scored]),
            n_items=sum(m.n_items for m in scored),
        )
    mious = [r.miou for r in rows if r.miou is not None]
    coverages = [r.coverage for r in rows if r.coverage is not None]
    agg_miou = sum(mious) / len(mious) if mious else None
    agg_cov = sum(coverages) / len(coverages) if coverages else None
    return aggregate, agg_miou, agg_cov


# ---------------------------------------------------------------------------
# Segmentation pipeline for one planned scene


def run_segmentation(
    scene: SceneContext,
    state: PlanState,
    gt_cloud: LabeledPointCloud,
    backend,
    options: SegOptions | None = None,
    scene_dir: Path | None = None,
) -> tuple[np.ndarray, dict[str, float], float, float]:
    """Segment, mark, label, back-project, and fuse every planned view.

    Returns (predictions on the GT points, per-class IoU by name, mIoU,
    labeled fraction of GT points).
    """
    options = options or SegOptions()
    class_names = gt_cloud.class_names
    all_points, all_classes = [], []
    for k, view in enumerate(state.views):
        tag = f"view_{k:02d}"
        if options.masks_dir is not None:
            regions = ingest_masks(Path(options.masks_dir) / f"{tag}.mask.png")
        else:
            regions = builtin_segment(view.color, min_region_px=options.min_region_px,
                                      color_quant_levels=options.quant_levels)
        marked = overlay_marks(view.color, regions)
        labels = label_regions(marked, regions, class_names, backend,
                               view_tag=tag, log=state.log)
        points, classes = backproject_view(regions, labels, view,
                                           stride_px=options.stride_px)
        if len(points):
            all_points.append(points)
            all_classes.append(classes)
        if scene_dir is not None:
            write_masks(regions, view.depth.shape, scene_dir / f"{tag}.mask.png")
            write_png(marked, scene_dir / f"{tag}.marked.png")

    if all_points:
        points = np.vstack(all_points)
        classes = np.concatenate(all_classes)
    else:
        points = np.zeros((0, 3))
        classes = np.zeros(0, dtype=np.int64)
    predictions = fuse_labels(points, classes, gt_cloud, radius_m=options.radius_m)
    per_class, mean_iou = miou(predictions, gt_cloud.labels, len(class_names))
    per_class_named = {class_names[c]: v for c, v in per_class.items()}
    labeled_fraction = float((predictions != gt_cloud.unlabeled_id).mean())

    if scene_dir is not None:
        save_labeled_cloud(
            LabeledPointCloud(gt_cloud.points, predictions, class_names),
            scene_dir / "labels.ply")
        (scene_dir / "miou.json").write_text(json.dumps(
            {"per_class": per_class_named, "miou": mean_iou,
             "labeled_fraction": labeled_fraction}, indent=2, sort_keys=True))
    return predictions, per_class_named, mean_iou, labeled_fraction


# ---------------------------------------------------------------------------
# Evaluation runs


def _answers_and_refs(task: str, manifest: SceneManifest, state: PlanState, backend):
    """Run the task against the planned views; returns (candidates, references)."""
    if task == "qa":
        if not manifest.qa:
            raise ManifestError(f"qa: scene {manifest.scene_id} has no qa entries")
        questions = [q.question for q in manifest.qa]
        answer = run_task(state.views, TaskKind.QA_BATCH, questions, backend,
                          log=state.log)
        return answer.answers, [q.answers for q in manifest.qa]
    if task == "caption":
        answer = run_task(state.views, TaskKind.CAPTION, None, backend, log=state.log)
        refs = manifest.caption_refs
        return [answer.text], [refs] if refs else None
    if task == "decompose":
        payload = (manifest.decompose or {}).get("task")
        answer = run_task(state.views, TaskKind.TASK_DECOMPOSITION, payload, backend,
                          log=state.log)
        refs = (manifest.decompose or {}).get("refs")
        return [answer.text], [refs] if refs else None
    if task == "dialog":
        if not manifest.dialog:
            raise ManifestError(f"dialog: scene {manifest.scene_id} has no dialog entry")
        payload = {"history": manifest.dialog.get("history", []),
                   "message": manifest.dialog["message"]}
        answer = run_task(state.views, TaskKind.DIALOG, payload, backend,
                          log=state.log)
        refs = manifest.dialog.get("refs")
        return [answer.text], [refs] if refs else None
    raise ValueError(f"unknown task {task!r}")


def _load_gt(manifest: SceneManifest) -> LabeledPointCloud:
    if not manifest.gt_labels_path:
        raise ManifestError(
            f"gt_labels_path: scene {manifest.scene_id} needs GT labels for segmentation")
    return load_labeled_cloud(manifest.gt_labels_path, class_names=manifest.class_names)


def run_eval(
    manifests: list[SceneManifest],
    task: str,
    plan_mode: str,
    cfg: PlanConfig,
    backend,
    out_dir: str | Path | None = None,
    seg: SegOptions | None = None,
    random_seed: int = 0,
) -> RunReport:
    """Evaluate every scene: plan views, run the task, score, persist artifacts.

    Per-scene failures are recorded in their row and the run continues;
    aggregates cover the surviving scenes. The run directory is keyed by a
    hash of the config unless out_dir is given.
    """
    if plan_mode not in ("selected", "random"):
        raise ValueError("plan_mode must be 'selected' or 'random'")
    if task not in ("qa", "caption", "decompose", "dialog", "segment"):
        raise ValueError(f"unknown task {task!r}")
    config = {
        "task": task,
        "plan_mode": plan_mode,
        "random_seed": random_seed,
        "plan": cfg.to_json(),
        "seg": (seg or SegOptions()).to_json() if task == "segment" else None,
        "scenes": [m.scene_id for m in manifests],
    }
    run_dir = Path(out_dir) if out_dir else Path("runs") / config_digest(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True))

    counting = _CountingBackend(backend)
    rows: list[SceneRow] = []
    started = time.perf_counter()
    for manifest in manifests:
        scene_dir = run_dir / manifest.scene_id
        scene_dir.mkdir(parents=True, exist_ok=True)
        calls_before = counting.calls
        try:
            mesh = load_mesh(manifest.mesh_path)
            scene = prepare_scene(mesh, density=cfg.density,
                                  scene_type=manifest.scene_type)
            write_png(scene.annotated_bev, scene_dir / "bev_annotated.png")
            if plan_mode == "selected":
                state = plan_views(scene, cfg, counting)
            else:
                state = random_plan(scene, cfg, seed=random_seed)

            sample = sample_surface_points(mesh, COVERAGE_SAMPLE_POINTS, seed=0)
            coverage = surface_coverage(state.views, sample)

            row = SceneRow(scene_id=manifest.scene_id, coverage=coverage)
            if task == "segment":
                gt_cloud = _load_gt(manifest)
                _, per_class, mean_iou, labeled = run_segmentation(
                    scene, state, gt_cloud, counting, options=seg,
                    scene_dir=scene_dir)
                row.miou = mean_iou
                row.per_class_iou = per_class
                row.labeled_fraction = labeled
            else:
                candidates, references = _answers_and_refs(
                    task, manifest, state, counting)
                (scene_dir / "answers.json").write_text(json.dumps(
                    {"task": task, "candidates": candidates,
                     "references": references}, indent=2, sort_keys=True))
                if references is not None:
                    row.metrics = score_batch(candidates, references)
            state.save(scene_dir)
            row.vlm_calls = counting.calls - calls_before
            rows.append(row)
        except (SceneScoutError, ValueError, OSError) as exc:
            rows.append(SceneRow(scene_id=manifest.scene_id,
                                 vlm_calls=counting.calls - calls_before,
                                 error=f"{type(exc).__name__}: {exc}"))

    aggregate, agg_miou, agg_cov = _aggregate_rows(rows)
    report = RunReport(
        config=config, task=task, plan_mode=plan_mode, rows=rows,
        aggregate=aggregate, aggregate_miou=agg_miou, aggregate_coverage=agg_cov,
        vlm_calls=counting.calls, wall_clock_s=time.perf_counter() - started,
    )
    (run_dir / "report.json").write_text(
        json.dumps(report.to_json(), indent=2, sort_keys=True))
    (run_dir / "timing.json").write_text(json.dumps(
        {"wall_clock_s": report.wall_clock_s}, indent=2))
    (run_dir / "report.md").write_text(report_markdown(report))
    return report


# ---------------------------------------------------------------------------
# Report rendering


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _metric_cells(metrics: MetricReport | None) -> list[str]:
    if metrics is None:
        return ["-"] * 6
    return [_fmt(metrics.bleu1), _fmt(metrics.bleu4), _fmt(metrics.meteor),
            _fmt(metrics.rouge_l), _fmt(metrics.cider), _fmt(metrics.em)]


def report_markdown(report: RunReport) -> str:
    """Markdown mirror of the report; metric columns follow B-1, B-4, METEOR,
    ROUGE-L, CIDEr, EM order. JSON remains the source of truth."""
    lines = [
        "# Evaluation report",
        "",
        f"task: {report.task} | plan: {report.plan_mode} | "
        f"scenes: {len(report.rows)} | vlm_calls: {report.vlm_calls}",
        "",
        f"| scene | {MARKDOWN_METRIC_HEADER} | mIoU | coverage |",
        "|" + "---|" * 9,
    ]
    for row in report.rows:
        if row.error:
            cells = [row.scene_id] + ["-"] * 8
        else:
            cells = ([row.scene_id] + _metric_cells(row.metrics)
                     + [_fmt(row.miou), _fmt(row.coverage)])
        lines.append("| " + " | ".join(cells) + " |")
    mean_cells = (["mean"] + _metric_cells(report.aggregate)
                  + [_fmt(report.aggregate_miou), _fmt(report.aggregate_coverage)])
    lines.append("| " + " | ".join(mean_cells) + " |")
    errors = [row for row in report.rows if row.error]
    if errors:
        lines.append("")
        lines.extend(f"- failed {row.scene_id}: {row.error}" for row in errors)
    lines.append("")
    lines.append("note: METEOR is the reduced exact+stem variant; values are "
                 "self-consistent, not toolkit-comparable.")
    return "\n".join(lines) + "\n"


def parse_markdown_table(text: str) -> list[dict]:
    """Parse the first markdown table back into row dicts ('-' -> None,
    numeric cells -> float). Used to check the json/markdown mirror."""
    lines = [ln for ln in text.splitlines() if ln.strip().startswith("|")]
    if len(lines) < 2:
        return []
    header = [c.strip() for c in lines[0].strip().strip("|").split("|")]
    rows = []
    for line in lines[2:]:
        cells = [c.strip() for c in line.strip().strip("|").split("|")]
        if len(cells) != len(header):
            continue
        row = {}
        for key, cell in zip(header, cells):
            if cell == "-":
                row[key] = None
            else:
                try:
                    row[key] = float(cell)
                except ValueError:
                    row[key] = cell
        rows.append(row)
    return rows


def emit_report(report: RunReport, fmt: str, path: str | Path) -> Path:
    """Write the report as json or markdown and return the path."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True))
    elif fmt == "markdown":
        path.write_text(report_markdown(report))
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    return path


def load_report(run_dir: str | Path) -> RunReport:
    """Rebuild a RunReport object from a run directory's report.json."""
    data = json.loads((Path(run_dir) / "report.json").read_text())
    rows = []
    for r in data["rows"]:
        rows.append(SceneRow(
            scene_id=r["scene_id"],
            metrics=MetricReport.from_json(r["metrics"]) if r["metrics"] else None,
            miou=r["miou"],
            per_class_iou=r["per_class_iou"],
            labeled_fraction=r.get("labeled_fraction"),
            coverage=r["coverage"],
            vlm_calls=r["vlm_calls"],
            error=r["error"],
        ))
    aggregate = MetricReport.from_json(data["aggregate"]) if data["aggregate"] else None
    return RunReport(
        config=data["config"], task=data["task"], plan_mode=data["plan_mode"],
        rows=rows, aggregate=aggregate, aggregate_miou=data["aggregate_miou"],
        aggregate_coverage=data["aggregate_coverage"], vlm_calls=data["vlm_calls"],
    )


# ---------------------------------------------------------------------------
# Ablations


ABLATION_AXES = {
    "n_views": [6, 12, 24],
    "density": [4, 8, 16],
}


def run_ablation(
    manifests: list[SceneManifest],
    axis: str,
    cfg: PlanConfig,
    backend,
    values: list[int] | None = None,
    task: str = "qa",
    plan_mode: str = "selected",
    out_dir: str | Path | None = None,
) -> dict:
    """One run_eval per axis value with otherwise-fixed config.

    Returns a table dict; rows whose run produced no scored scenes render
    as "-" in the markdown table.
    """
    if axis not in ABLATION_AXES:
        raise ValueError(f"axis must be one of {sorted(ABLATION_AXES)}")
    values = values or ABLATION_AXES[axis]
    out_root = Path(out_dir) if out_dir else Path("runs") / f"ablate_{axis}"
    out_root.mkdir(parents=True, exist_ok=True)

    rows = []
    for value in values:
        if axis == "n_views":
            sub_cfg = dataclasses.replace(
                cfg, n_total=value, n_per_iter=min(cfg.n_per_iter, value),
                max_images=max(cfg.max_images, value))
        else:
            sub_cfg = dataclasses.replace(cfg, density=value)
        report = run_eval(manifests, task, plan_mode, sub_cfg, backend,
                          out_dir=out_root / f"{axis}_{value}")
        rows.append({
            "value": value,
            "aggregate": report.aggregate.to_json() if report.aggregate else None,
            "coverage": report.aggregate_coverage,
            "miou": report.aggregate_miou,
            "errors": [r.error for r in report.rows if r.error],
        })

    table = {"axis": axis, "values": values, "rows": rows}
    (out_root / "ablation.json").write_text(json.dumps(table, indent=2, sort_keys=True))
    (out_root / "ablation.md").write_text(ablation_markdown(table))
    return table


def ablation_markdown(table: dict) -> str:
    lines = [
        f"# Ablation: {table['axis']}",
        "",
        f"| {table['axis']} | {MARKDOWN_METRIC_HEADER} | coverage |",
        "|" + "---|" * 8,
    ]
    for row in table["rows"]:
        agg = row["aggregate"]
        metrics = MetricReport.from_json(agg) if agg else None
        cells = [str(row["value"])] + _metric_cells(metrics) + [_fmt(row["coverage"])]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
