"""Zero-shot 3D semantic segmentation: 2D region proposals, numbered-mark
overlays, model-assigned labels, depth back-projection, and multi-view fusion."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import _font
from .camera import unproject_many
from .errors import LengthMismatch, NonConsecutiveIndices
from .image_io import read_index_png, write_index_png
from .renderer import ViewBundle
from .scene_io import LabeledPointCloud
from .vlm_gateway import ChatRequest

REJECTED = -1  # label for regions the model could not place in the class list


@dataclass
class Region2D:
    """A connected image region carrying a display mark id (1..K per image)."""

    mark_id: int
    mask: np.ndarray  # (H, W) bool
    centroid: tuple[int, int]  # (u, v) pixel

    @property
    def area(self) -> int:
        return int(self.mask.sum())


@dataclass
class RegionLabel:
    mark_id: int
    class_id: int  # index into the class list, or REJECTED


def _centroid(mask: np.ndarray) -> tuple[int, int]:
    ys, xs = np.nonzero(mask)
    return (int(round(xs.mean())), int(round(ys.mean())))


def builtin_segment(
    image: np.ndarray,
    min_region_px: int = 64,
    color_quant_levels: int = 4,
) -> list[Region2D]:
    """Deterministic color-quantization segmenter (stand-in for an external
    segmentation model on synthetic scenes).

    Quantizes each channel, takes 4-connected components of uniform quantized
    color, drops components below min_region_px, and numbers the survivors
    1..K by descending area.
    """
    if image.size == 0:
        raise ValueError("cannot segment an empty image")
    levels = int(color_quant_levels)
    q = (image.astype(np.int64) * levels) // 256
    qid = (q[..., 0] * levels + q[..., 1]) * levels + q[..., 2]

    masks: list[np.ndarray] = []
    for value in np.unique(qid):
        labeled, n = ndimage.label(qid == value)
        if n == 0:
            continue
        counts = np.bincount(labeled.ravel())
        for comp in range(1, n + 1):
            if counts[comp] >= min_region_px:
                masks.append(labeled == comp)

    # Descending area; ties broken by first-pixel scan order for determinism.
    def sort_key(m: np.ndarray):
        first = np.argmax(m.ravel())
        return (-int(m.sum()), int(first))

    masks.sort(key=sort_key)
    return [Region2D(mark_id=k, mask=m, centroid=_centroid(m))
            for k, m in enumerate(masks, start=1)]


def regions_to_index_image(regions: list[Region2D], shape: tuple[int, int]) -> np.ndarray:
    """Flatten regions into a (H, W) index image; 0 = unsegmented."""
    out = np.zeros(shape, dtype=np.int64)
    for region in regions:
        out[region.mask] = region.mark_id
    return out


def write_masks(regions: list[Region2D], shape: tuple[int, int], path: str | Path) -> None:
    write_index_png(regions_to_index_image(regions, shape), path)


def ingest_masks(path: str | Path) -> list[Region2D]:
    """Load externally produced regions from an indexed PNG (0 = unsegmented,
    1..K = regions).

    Raises:
        NonConsecutiveIndices: present indices are not exactly 1..K.
    """
    indices = read_index_png(path)
    present = sorted(int(v) for v in np.unique(indices) if v != 0)
    if present != list(range(1, len(present) + 1)):
        raise NonConsecutiveIndices(f"mask indices {present} are not 1..K")
    regions = []
    for mark in present:
        mask = indices == mark
        regions.append(Region2D(mark_id=mark, mask=mask, centroid=_centroid(mask)))
    return regions


def overlay_marks(image: np.ndarray, regions: list[Region2D]) -> np.ndarray:
    """Stamp each region's mark id at its centroid with a contrasting halo."""
    out = image.copy()
    for region in regions:
        text = str(region.mark_id)
        w, h = _font.text_size(text, scale=2)
        x = min(max(region.centroid[0] - w // 2, 0), max(out.shape[1] - w, 0))
        y = min(max(region.centroid[1] - h // 2, 0), max(out.shape[0] - h, 0))
        _font.draw_text(out, text, x, y, (255, 255, 255), scale=2, halo=(0, 0, 0))
    return out


LABEL_PROMPT_TEMPLATE = (
    "The image shows a scene with {k} marked regions, numbered 1..{k} at their "
    "centers. Assign each numbered region exactly one class from this list: "
    "[{classes}]. Reply with one line per region in the form 'k: class'. "
    "Use only classes from the list."
)

_LABEL_LINE_RE = re.compile(r"(?<!\d)(\d+)\s*[:.)-]\s*(.+)")


def label_regions(
    marked_image: np.ndarray,
    regions: list[Region2D],
    class_names: list[str],
    backend,
    view_tag: str | None = None,
    log: list[dict] | None = None,
) -> list[RegionLabel]:
    """Ask the model for one class per mark; anything outside the closed class
    list (or missing from the reply) degrades to REJECTED, never an error."""
    if not regions:
        return []
    if len(class_names) < 2:
        raise ValueError("need at least two classes")
    prompt = LABEL_PROMPT_TEMPLATE.format(
        k=len(regions), classes=", ".join(class_names))
    if view_tag:
        prompt += f"\nImage tag: {view_tag}"
    request = ChatRequest(system_text="", user_parts=[prompt, marked_image])
    reply = backend.complete(request)
    if log is not None:
        log.append({"purpose": "label_regions", "view_tag": view_tag,
                    "user_texts": request.texts, "n_images": 1, "reply": reply.text})

    lookup = {name.strip().lower(): idx for idx, name in enumerate(class_names)}
    assigned: dict[int, int] = {}
    for line in reply.text.splitlines():
        m = _LABEL_LINE_RE.search(line)
        if not m:
            continue
        mark = int(m.group(1))
        class_id = lookup.get(m.group(2).strip().strip(".").lower(), REJECTED)
        if mark not in assigned:
            assigned[mark] = class_id
    return [RegionLabel(r.mark_id, assigned.get(r.mark_id, REJECTED)) for r in regions]


def backproject_view(
    regions: list[Region2D],
    labels: list[RegionLabel],
    view: ViewBundle,
    stride_px: int = 4,
) -> tuple[np.ndarray, np.ndarray]:
    """Lift labeled region pixels (on the stride lattice, finite depth) to
    world points.

    Returns (points (P, 3), classes (P,)); REJECTED regions contribute nothing.
    """
    if stride_px < 1:
        raise ValueError("stride must be >= 1")
    by_mark = {lab.mark_id: lab.class_id for lab in labels}
    points, classes = [], []
    height, width = view.depth.shape
    lattice = np.zeros((height, width), dtype=bool)
    lattice[::stride_px, ::stride_px] = True
    finite = np.isfinite(view.depth)
    for region in regions:
        class_id = by_mark.get(region.mark_id, REJECTED)
        if class_id == REJECTED:
            continue
        ys, xs = np.nonzero(region.mask & lattice & finite)
        if len(xs) == 0:
            continue
        depths = view.depth[ys, xs].astype(np.float64)
        uv = np.stack([xs + 0.5, ys + 0.5], axis=1)  # depth samples live at pixel centers
        pts = unproject_many(view.intrinsics, view.pose, uv, depths)
        points.append(pts)
        classes.append(np.full(len(pts), class_id, dtype=np.int64))
    if not points:
        return np.zeros((0, 3)), np.zeros(0, dtype=np.int64)
    return np.vstack(points), np.concatenate(classes)


def median_nn_spacing(points: np.ndarray) -> float:
    """Median nearest-neighbor distance; anchors the scale-free fusion radius."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 2:
        return 0.0
    distances, _ = cKDTree(points).query(points, k=2)
    return float(np.median(distances[:, 1]))


def fuse_labels(
    points: np.ndarray,
    classes: np.ndarray,
    gt_cloud: LabeledPointCloud,
    radius_m: float | None = None,
) -> np.ndarray:
    """Vote back-projected labels onto the ground-truth points.

    Each GT point takes the majority class among back-projected points within
    radius (ties to the smallest class id); with no neighbors it stays
    unlabeled. Default radius is twice the GT median nearest-neighbor spacing.
    """
    n_classes = len(gt_cloud.class_names)
    unlabeled = gt_cloud.unlabeled_id
    if radius_m is None:
        radius_m = 2.0 * median_nn_spacing(gt_cloud.points)
    if radius_m <= 0:
        raise ValueError("fusion radius must be > 0")
    predictions = np.full(len(gt_cloud.points), unlabeled, dtype=np.int64)
    if len(points) == 0:
        return predictions
    tree = cKDTree(np.asarray(points, dtype=np.float64))
    neighbor_lists = tree.query_ball_point(gt_cloud.points, r=radius_m)
    classes = np.asarray(classes, dtype=np.int64)
    for idx, neighbors in enumerate(neighbor_lists):
        if neighbors:
            votes = np.bincount(classes[neighbors], minlength=n_classes)
            predictions[idx] = int(votes.argmax())  # argmax ties -> smaller id
    return predictions


def miou(pred: np.ndarray, gt: np.ndarray, n_classes: int) -> tuple[dict[int, float], float]:
    """Per-class IoU and their mean.

    Unlabeled predictions (id == n_classes) count in the union but never the
    intersection; classes absent from both pred and gt are excluded from the
    mean. GT points marked unlabeled are ignored entirely.
    """
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    gt = np.asarray(gt, dtype=np.int64).reshape(-1)
    if len(pred) != len(gt):
        raise LengthMismatch(f"pred has {len(pred)} labels, gt has {len(gt)}")
    keep = gt < n_classes
    pred, gt = pred[keep], gt[keep]
    per_class: dict[int, float] = {}
    total = 0.0
    counted = 0
    for c in range(n_classes):
        inter = int(((pred == c) & (gt == c)).sum())
        union = int(((pred == c) | (gt == c)).sum())
        if union == 0:
            continue
        iou = inter / union
        per_class[c] = iou
        total += iou
        counted += 1
    return per_class, (total / counted if counted else 0.0)
