"""Command-line interface: scene generation, rendering, planning, tasks, evaluation."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agent_core import PlanConfig, plan_views, prepare_scene, random_plan
from .errors import SceneScoutError
from .harness import (
    ABLATION_AXES,
    QAItem,
    SceneManifest,
    SegOptions,
    emit_report,
    load_manifest,
    load_report,
    run_ablation,
    run_eval,
)
from .image_io import write_png
from .renderer import render_bev
from .scene_io import (
    ToyRoomSpec,
    build_toy_room,
    compute_bounds,
    default_toy_room,
    load_mesh,
    save_labeled_cloud,
    save_mesh,
    strip_ceiling,
)
from .solp import OverlayStyle, annotate_bev, make_grid
from .vlm_gateway import CacheBackend, HttpBackend, ScriptedBackend, ScriptedTranscript


def _add_plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--views", type=int, default=6, help="total views N")
    p.add_argument("--per-iter", type=int, default=3, help="views requested per iteration")
    p.add_argument("--density", type=int, default=8, help="grid cells per axis")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--plan", choices=("selected", "random"), default="selected")
    p.add_argument("--eye-height", type=float, default=1.6)
    p.add_argument("--pitch-down", type=float, default=15.0)
    p.add_argument("--image-size", type=int, default=512)


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=("http", "scripted", "cache"), default="scripted")
    p.add_argument("--transcript", type=Path, help="scripted transcript JSON")
    p.add_argument("--cache-dir", type=Path, default=Path("vlm_cache"))
    p.add_argument("--endpoint", help="override VLM_ENDPOINT")
    p.add_argument("--model", default=None, help="model name sent to the HTTP backend")


def _make_backend(args):
    if args.backend == "scripted":
        if not args.transcript:
            raise SceneScoutError("--backend scripted needs --transcript PATH")
        return ScriptedBackend(ScriptedTranscript.load(args.transcript))
    if args.backend == "http":
        return HttpBackend(endpoint=args.endpoint)
    delegate = (ScriptedBackend(ScriptedTranscript.load(args.transcript))
                if args.transcript else HttpBackend(endpoint=args.endpoint))
    return CacheBackend(delegate, args.cache_dir)


def _make_cfg(args) -> PlanConfig:
    from .camera import CameraIntrinsics
    from .pose_grammar import CameraRigConfig

    size = args.image_size
    rig = CameraRigConfig(
        eye_height=args.eye_height,
        pitch_down_deg=args.pitch_down,
        intrinsics=CameraIntrinsics.default(size),
    )
    return PlanConfig(
        n_total=args.views,
        n_per_iter=min(args.per_iter, args.views),
        density=args.density,
        rig=rig,
        seed=args.seed,
        max_images=max(24, args.views),
    )


def _manifests(args) -> list[SceneManifest]:
    return [load_manifest(p) for p in args.manifest]


def cmd_gen_toy(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.spec:
        spec = ToyRoomSpec.load(args.spec)
    else:
        spec = default_toy_room(n_classes=args.classes, seed=args.seed)
    mesh, cloud = build_toy_room(spec)
    save_mesh(mesh, out / "scene.ply")
    save_labeled_cloud(cloud, out / "gt_labels.ply")
    spec.save(out / "spec.json")

    counts: dict[str, int] = {}
    for box in spec.boxes:
        counts[box.class_name] = counts.get(box.class_name, 0) + 1
    qa = [QAItem(question=f"How many {name}s are in the room?", answers=[str(n)])
          for name, n in sorted(counts.items())]
    manifest = SceneManifest(
        scene_id=args.scene_id,
        mesh_path=out / "scene.ply",
        scene_type="indoor room",
        gt_labels_path=out / "gt_labels.ply",
        qa=qa,
        class_names=cloud.class_names,
    )
    data = manifest.to_json()
    data["mesh_path"] = "scene.ply"  # keep the manifest relocatable
    data["gt_labels_path"] = "gt_labels.ply"
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True))
    print(f"wrote toy scene ({mesh.n_faces} faces, {len(cloud.points)} GT points) to {out}")
    return 0


def _load_scene_mesh(args):
    if getattr(args, "scene", None):
        return load_mesh(args.scene)
    if getattr(args, "manifest", None):
        return load_mesh(load_manifest(args.manifest[0]).mesh_path)
    raise SceneScoutError("need --scene PLY or --manifest JSON")


def cmd_render_bev(args) -> int:
    mesh = _load_scene_mesh(args)
    bounds = compute_bounds(mesh)
    bev = render_bev(strip_ceiling(mesh, args.cut_height), bounds,
                     px_per_meter=args.ppm, margin_m=args.margin)
    write_png(bev.color, args.out)
    print(f"wrote {bev.width}x{bev.height} BEV to {args.out}")
    return 0


def cmd_annotate(args) -> int:
    mesh = _load_scene_mesh(args)
    bounds = compute_bounds(mesh)
    bev = render_bev(strip_ceiling(mesh, args.cut_height), bounds,
                     px_per_meter=args.ppm, margin_m=args.margin)
    grid = make_grid(bounds, args.density)
    annotated = annotate_bev(bev, grid, OverlayStyle(font_px=args.font_px))
    write_png(annotated, args.out)
    print(f"wrote annotated BEV (density {args.density}) to {args.out}")
    return 0


def cmd_plan_views(args) -> int:
    mesh = _load_scene_mesh(args)
    scene_type = None
    if args.manifest:
        scene_type = load_manifest(args.manifest[0]).scene_type
    cfg = _make_cfg(args)
    scene = prepare_scene(mesh, density=cfg.density, scene_type=scene_type)
    if args.plan == "selected":
        state = plan_views(scene, cfg, _make_backend(args))
    else:
        state = random_plan(scene, cfg, seed=args.seed)
    out = Path(args.out)
    state.save(out)
    write_png(scene.annotated_bev, out / "bev_annotated.png")
    print(f"planned {len(state.views)} views in {state.iteration} iterations -> {out}")
    return 0


def _run_eval_cmd(args, task: str) -> int:
    manifests = _manifests(args)
    if task == "dialog" and getattr(args, "message", None):
        for m in manifests:
            m.dialog = dict(m.dialog or {}, message=args.message)
    if task == "decompose" and getattr(args, "task_text", None):
        for m in manifests:
            m.decompose = dict(m.decompose or {}, task=args.task_text)
    seg = None
    if task == "segment":
        seg = SegOptions(
            stride_px=args.stride,
            radius_m=args.radius,
            min_region_px=args.min_region_px,
            quant_levels=args.quant_levels,
            masks_dir=args.masks,
        )
    report = run_eval(manifests, task, args.plan, _make_cfg(args),
                      _make_backend(args), out_dir=args.out, seg=seg,
                      random_seed=args.seed)
    ok = sum(1 for r in report.rows if not r.error)
    print(f"evaluated {ok}/{len(report.rows)} scenes | task={task} "
          f"plan={args.plan} vlm_calls={report.vlm_calls}")
    if report.aggregate:
        a = report.aggregate
        cider = "-" if a.cider is None else f"{a.cider:.4f}"
        print(f"  B-1 {a.bleu1:.4f} | B-4 {a.bleu4:.4f} | METEOR {a.meteor:.4f} | "
              f"ROUGE-L {a.rouge_l:.4f} | CIDEr {cider} | EM {a.em:.4f}")
    if report.aggregate_miou is not None:
        print(f"  mIoU {report.aggregate_miou:.4f}")
    if report.aggregate_coverage is not None:
        print(f"  coverage {report.aggregate_coverage:.4f}")
    for row in report.rows:
        if row.error:
            print(f"  failed {row.scene_id}: {row.error}")
    return 0 if ok else 1


def cmd_ablate(args) -> int:
    values = [int(v) for v in args.values.split(",")] if args.values else None
    table = run_ablation(_manifests(args), args.axis, _make_cfg(args),
                         _make_backend(args), values=values, task=args.task,
                         plan_mode=args.plan, out_dir=args.out)
    for row in table["rows"]:
        status = "ok" if row["aggregate"] else "-"
        print(f"  {args.axis}={row['value']}: {status} coverage={row['coverage']}")
    return 0


def cmd_report(args) -> int:
    report = load_report(args.run)
    suffix = "md" if args.format == "markdown" else "json"
    out = Path(args.out) if args.out else Path(args.run) / f"report.{suffix}"
    emit_report(report, args.format, out)
    print(f"wrote {args.format} report to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenescout",
        description="Zero-shot 3D scene understanding via VLM-planned viewpoints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-toy", help="generate a synthetic room + GT labels + manifest")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--classes", type=int, default=3, choices=(3, 4))
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--spec", type=Path, help="room spec JSON instead of the default room")
    p.add_argument("--scene-id", default="toy_room")
    p.set_defaults(func=cmd_gen_toy)

    for name, fn in (("render-bev", cmd_render_bev), ("annotate", cmd_annotate)):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} for a scene")
        p.add_argument("--scene", type=Path, help="mesh PLY")
        p.add_argument("--manifest", nargs="*", type=Path, default=[])
        p.add_argument("--out", required=True, type=Path)
        p.add_argument("--ppm", type=float, default=100.0, help="pixels per meter")
        p.add_argument("--margin", type=float, default=0.5)
        p.add_argument("--cut-height", type=float, default=2.2)
        if name == "annotate":
            p.add_argument("--density", type=int, default=8)
            p.add_argument("--font-px", type=int, default=10)
        p.set_defaults(func=fn)

    p = sub.add_parser("plan-views", help="plan and render viewpoints")
    p.add_argument("--scene", type=Path)
    p.add_argument("--manifest", nargs="*", type=Path, default=[])
    p.add_argument("--out", required=True, type=Path)
    _add_plan_flags(p)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_plan_views)

    task_specs = {
        "ask": "qa",
        "caption": "caption",
        "decompose": "decompose",
        "dialog": "dialog",
        "segment": "segment",
    }
    for name, task in task_specs.items():
        p = sub.add_parser(name, help=f"run the {task} task end to end")
        p.add_argument("--manifest", nargs="+", required=True, type=Path)
        p.add_argument("--out", type=Path)
        _add_plan_flags(p)
        _add_backend_flags(p)
        if name == "dialog":
            p.add_argument("--message", help="new user message (overrides manifest)")
        if name == "decompose":
            p.add_argument("--task-text", help="task to decompose (overrides manifest)")
        if name == "segment":
            p.add_argument("--stride", type=int, default=4)
            p.add_argument("--radius", type=float, default=None)
            p.add_argument("--min-region-px", type=int, default=64)
            p.add_argument("--quant-levels", type=int, default=4)
            p.add_argument("--masks", type=Path, help="dir of external view_XX.mask.png files")
        p.set_defaults(func=lambda a, t=task: _run_eval_cmd(a, t))

    p = sub.add_parser("eval", help="evaluate any task over one or more scenes")
    p.add_argument("--manifest", nargs="+", required=True, type=Path)
    p.add_argument("--task", choices=("qa", "caption", "decompose", "dialog", "segment"),
                   default="qa")
    p.add_argument("--out", type=Path)
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--min-region-px", type=int, default=64)
    p.add_argument("--quant-levels", type=int, default=4)
    p.add_argument("--masks", type=Path)
    _add_plan_flags(p)
    _add_backend_flags(p)
    p.set_defaults(func=lambda a: _run_eval_cmd(a, a.task))

    p = sub.add_parser("ablate", help="sweep view count or grid density")
    p.add_argument("--manifest", nargs="+", required=True, type=Path)
    p.add_argument("--axis", choices=sorted(ABLATION_AXES), required=True)
    p.add_argument("--values", help="comma-separated override, e.g. 6,12,24")
    p.add_argument("--task", choices=("qa", "caption", "decompose", "dialog", "segment"),
                   default="qa")
    p.add_argument("--out", type=Path)
    _add_plan_flags(p)
    _add_backend_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="re-emit a report from a run directory")
    p.add_argument("--run", required=True, type=Path)
    p.add_argument("--format", choices=("json", "markdown"), default="markdown")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SceneScoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
