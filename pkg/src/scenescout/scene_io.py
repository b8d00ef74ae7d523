"""Scene loading, generation, and preprocessing: colored meshes, labeled point clouds, toy rooms."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyScene, InvalidSpec, ParseError, UnsupportedFormat

_PLY_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

WALL_BAND_HEIGHT = 0.5


@dataclass
class TriangleMesh:
    """Colored triangle soup. Vertices in meters, colors in [0, 255]."""

    vertices: np.ndarray       # (N, 3) float64
    vertex_colors: np.ndarray  # (N, 3) uint8
    faces: np.ndarray          # (M, 3) int64

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.vertex_colors = np.asarray(self.vertex_colors, dtype=np.uint8).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)

    def validate(self) -> None:
        if len(self.vertex_colors) != len(self.vertices):
            raise ParseError("vertex_colors length differs from vertex count")
        if not np.all(np.isfinite(self.vertices)):
            raise ParseError("non-finite vertex coordinate")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ParseError(f"face index out of range (have {len(self.vertices)} vertices)")
        degenerate = (
            (self.faces[:, 0] == self.faces[:, 1])
            | (self.faces[:, 1] == self.faces[:, 2])
            | (self.faces[:, 0] == self.faces[:, 2])
        )
        if degenerate.any():
            raise ParseError("degenerate face (repeated vertex index)")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass
class SceneBounds:
    """Axis-aligned scene bounding box."""

    min: np.ndarray  # (3,)
    max: np.ndarray  # (3,)

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=np.float64).reshape(3)
        self.max = np.asarray(self.max, dtype=np.float64).reshape(3)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min


@dataclass
class LabeledPointCloud:
    """3D points with per-point semantic class ids; label == n_classes means unlabeled."""

    points: np.ndarray  # (N, 3) float64
    labels: np.ndarray  # (N,) int64
    class_names: list[str]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(self.labels) != len(self.points):
            raise ParseError("points and labels length mismatch")

    @property
    def unlabeled_id(self) -> int:
        return len(self.class_names)


@dataclass
class BoxSpec:
    """One piece of furniture: an axis-aligned colored box resting on the floor."""

    class_name: str
    size: tuple[float, float, float]
    color: tuple[int, int, int]
    position: tuple[float, float] | None = None  # floor-plane center; sampled if None


@dataclass
class ToyRoomSpec:
    """Desk-scale synthetic room: floor, banded walls, ceiling, and furniture boxes."""

    extent: tuple[float, float, float] = (6.0, 4.0, 2.5)
    boxes: list[BoxSpec] = field(default_factory=list)
    seed: int = 0
    n_points: int = 20000

    def to_json(self) -> dict:
        return {
            "extent": list(self.extent),
            "seed": self.seed,
            "n_points": self.n_points,
            "boxes": [
                {
                    "class_name": b.class_name,
                    "size": list(b.size),
                    "color": list(b.color),
                    "position": list(b.position) if b.position is not None else None,
                }
                for b in self.boxes
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ToyRoomSpec":
        boxes = [
            BoxSpec(
                class_name=b["class_name"],
                size=tuple(b["size"]),
                color=tuple(b["color"]),
                position=tuple(b["position"]) if b.get("position") is not None else None,
            )
            for b in data.get("boxes", [])
        ]
        return cls(
            extent=tuple(data.get("extent", (6.0, 4.0, 2.5))),
            boxes=boxes,
            seed=int(data.get("seed", 0)),
            n_points=int(data.get("n_points", 20000)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ToyRoomSpec":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)


def default_toy_room(n_classes: int = 3, seed: int = 7) -> ToyRoomSpec:
    """Standard fixture room: structure plus table/chair (and sofa at 4 classes)."""
    boxes = [
        BoxSpec("table", (1.6, 0.9, 0.75), (139, 69, 19), (3.0, 2.0)),
        BoxSpec("chair", (0.5, 0.5, 0.9), (200, 40, 40), (1.8, 2.0)),
        BoxSpec("chair", (0.5, 0.5, 0.9), (200, 40, 40), (4.2, 2.0)),
    ]
    if n_classes >= 4:
        boxes.append(BoxSpec("sofa", (1.8, 0.8, 0.8), (40, 60, 200), (3.0, 0.6)))
    return ToyRoomSpec(extent=(6.0, 4.0, 2.5), boxes=boxes, seed=seed)


# ---------------------------------------------------------------------------
# PLY parsing


def _parse_ply_header(raw: bytes) -> tuple[str, list, int]:
    """Returns (format, elements, body_offset). Elements are (name, count, props);
    each prop is ("scalar", name, np_type) or ("list", name, count_type, item_type)."""
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise ParseError("not a PLY file (missing 'ply'/'end_header')")
    end_line = raw.find(b"\n", end)
    if end_line < 0:
        raise ParseError("truncated header")
    header = raw[:end_line].decode("ascii", errors="replace")
    body_offset = end_line + 1

    fmt = None
    elements: list = []
    for line in header.splitlines():
        tokens = line.strip().split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info"):
            continue
        if tokens[0] == "format":
            if len(tokens) < 2:
                raise ParseError("malformed format line")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(f"malformed element line: {line!r}")
            try:
                count = int(tokens[2])
            except ValueError as exc:
                raise ParseError(f"bad element count: {line!r}") from exc
            elements.append((tokens[1], count, []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError("property before any element")
            if tokens[1] == "list":
                if len(tokens) != 5:
                    raise ParseError(f"malformed list property: {line!r}")
                ct, it = tokens[2], tokens[3]
                if ct not in _PLY_TYPES or it not in _PLY_TYPES:
                    raise ParseError(f"unknown list types: {line!r}")
                elements[-1][2].append(("list", tokens[4], _PLY_TYPES[ct], _PLY_TYPES[it]))
            else:
                if len(tokens) != 3 or tokens[1] not in _PLY_TYPES:
                    raise ParseError(f"malformed property: {line!r}")
                elements[-1][2].append(("scalar", tokens[2], _PLY_TYPES[tokens[1]]))
    if fmt is None:
        raise ParseError("missing format line")
    if fmt == "binary_big_endian":
        raise UnsupportedFormat("binary_big_endian PLY not supported")
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"unknown PLY format {fmt!r}")
    return fmt, elements, body_offset


def _read_ply(path: str | Path) -> dict[str, dict[str, np.ndarray]]:
    """Reads every element of a PLY file into {element: {property: array}}.

    List properties come back as (count, n_items) arrays and require every row
    to have the same length (triangle-only faces, in practice).
    """
    raw = Path(path).read_bytes()
    fmt, elements, offset = _parse_ply_header(raw)
    out: dict[str, dict[str, np.ndarray]] = {}

    if fmt == "ascii":
        text = raw[offset:].decode("ascii", errors="replace")
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        cursor = 0
        for name, count, props in elements:
            if cursor + count > len(rows):
                raise ParseError(f"element {name!r}: expected {count} rows, file has fewer")
            chunk = rows[cursor:cursor + count]
            cursor += count
            data: dict[str, np.ndarray] = {}
            if any(p[0] == "list" for p in props):
                if len(props) != 1:
                    raise UnsupportedFormat("mixed list/scalar element not supported")
                _, pname, _, item_t = props[0]
                parsed = []
                for row in chunk:
                    try:
                        n = int(row[0])
                        items = [int(x) for x in row[1:1 + n]]
                    except (ValueError, IndexError) as exc:
                        raise ParseError(f"bad list row in element {name!r}") from exc
                    if len(items) != n:
                        raise ParseError(f"short list row in element {name!r}")
                    if n != 3:
                        raise UnsupportedFormat("only triangular faces supported")
                    parsed.append(items)
                data[pname] = np.asarray(parsed, dtype=item_t) if parsed else np.zeros((0, 3), dtype=item_t)
            else:
                ncols = len(props)
                try:
                    arr = np.asarray([[float(x) for x in row[:ncols]] for row in chunk], dtype=np.float64)
                except ValueError as exc:
                    raise ParseError(f"bad scalar row in element {name!r}") from exc
                if arr.size and arr.shape[1] != ncols:
                    raise ParseError(f"element {name!r}: wrong column count")
                for idx, (_, pname, np_t) in enumerate(props):
                    col = arr[:, idx] if arr.size else np.zeros(0)
                    data[pname] = col.astype(np_t)
            out[name] = data
        return out

    # binary_little_endian
    buf = raw[offset:]
    pos = 0
    for name, count, props in elements:
        data = {}
        if any(p[0] == "list" for p in props):
            if len(props) != 1:
                raise UnsupportedFormat("mixed list/scalar element not supported")
            _, pname, count_t, item_t = props[0]
            rec = np.dtype([("n", "<" + count_t), ("v", "<" + item_t, (3,))])
            nbytes = rec.itemsize * count
            if pos + nbytes > len(buf):
                raise ParseError(f"element {name!r}: truncated binary data")
            arr = np.frombuffer(buf, dtype=rec, count=count, offset=pos)
            if count and not np.all(arr["n"] == 3):
                # Could be variable-length polygons; either way we cannot take them.
                raise UnsupportedFormat("only triangular faces supported")
            data[pname] = arr["v"].astype(np.int64)
            pos += nbytes
        else:
            rec = np.dtype([(p[1], "<" + p[2]) for p in props])
            nbytes = rec.itemsize * count
            if pos + nbytes > len(buf):
                raise ParseError(f"element {name!r}: truncated binary data")
            arr = np.frombuffer(buf, dtype=rec, count=count, offset=pos)
            for _, pname, _np_t in props:
                data[pname] = np.ascontiguousarray(arr[pname])
            pos += nbytes
        out[name] = data
    return out


def load_mesh(path: str | Path) -> TriangleMesh:
    """Load a colored triangle mesh from an ascii or binary little-endian PLY.

    The vertex element must carry x, y, z and red, green, blue; the face
    element must carry a vertex_indices list of triangles. Vertex order is
    preserved from the file.

    Raises:
        ParseError: malformed header, bad counts, or invalid face indices.
        UnsupportedFormat: missing colors/faces or non-triangular faces.
    """
    elements = _read_ply(path)
    if "vertex" not in elements:
        raise UnsupportedFormat("PLY has no vertex element")
    vert = elements["vertex"]
    for key in ("x", "y", "z"):
        if key not in vert:
            raise UnsupportedFormat(f"vertex element missing {key!r}")
    for key in ("red", "green", "blue"):
        if key not in vert:
            raise UnsupportedFormat("vertex element has no red/green/blue colors")
    if "face" not in elements or "vertex_indices" not in elements["face"]:
        raise UnsupportedFormat("PLY has no face element with vertex_indices")

    vertices = np.stack([vert["x"], vert["y"], vert["z"]], axis=1).astype(np.float64)
    colors = np.stack([vert["red"], vert["green"], vert["blue"]], axis=1).astype(np.uint8)
    faces = elements["face"]["vertex_indices"].astype(np.int64)
    mesh = TriangleMesh(vertices, colors, faces)
    mesh.validate()
    return mesh


def save_mesh(mesh: TriangleMesh, path: str | Path, fmt: str = "binary_little_endian") -> None:
    """Write a mesh as PLY with per-vertex uchar colors and triangle faces."""
    if fmt not in ("ascii", "binary_little_endian"):
        raise ValueError(f"unsupported PLY format {fmt!r}")
    header = [
        "ply",
        f"format {fmt} 1.0",
        f"element vertex {mesh.n_vertices}",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    path = Path(path)
    if fmt == "ascii":
        lines = list(header)
        verts32 = mesh.vertices.astype(np.float32)
        for p, c in zip(verts32, mesh.vertex_colors):
            lines.append(f"{p[0]:.9g} {p[1]:.9g} {p[2]:.9g} {c[0]} {c[1]} {c[2]}")
        for f in mesh.faces:
            lines.append(f"3 {f[0]} {f[1]} {f[2]}")
        path.write_text("\n".join(lines) + "\n")
        return
    vrec = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                     ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    varr = np.zeros(mesh.n_vertices, dtype=vrec)
    varr["x"], varr["y"], varr["z"] = mesh.vertices.T.astype(np.float32)
    varr["red"], varr["green"], varr["blue"] = mesh.vertex_colors.T
    frec = np.dtype([("n", "u1"), ("v", "<i4", (3,))])
    farr = np.zeros(mesh.n_faces, dtype=frec)
    farr["n"] = 3
    farr["v"] = mesh.faces.astype(np.int32)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(varr.tobytes())
        fh.write(farr.tobytes())


def save_labeled_cloud(cloud: LabeledPointCloud, path: str | Path) -> None:
    """Write a labeled point cloud as binary PLY with a ushort label property."""
    header = [
        "ply",
        "format binary_little_endian 1.0",
        "comment classes " + ",".join(cloud.class_names),
        f"element vertex {len(cloud.points)}",
        "property float x",
        "property float y",
        "property float z",
        "property ushort label",
        "end_header",
    ]
    rec = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"), ("label", "<u2")])
    arr = np.zeros(len(cloud.points), dtype=rec)
    arr["x"], arr["y"], arr["z"] = cloud.points.T.astype(np.float32)
    arr["label"] = cloud.labels.astype(np.uint16)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(arr.tobytes())


def load_labeled_cloud(path: str | Path, class_names: list[str] | None = None) -> LabeledPointCloud:
    """Load a labeled point cloud PLY; class names come from the header comment
    unless overridden."""
    raw = Path(path).read_bytes()
    if class_names is None:
        for line in raw[:raw.find(b"end_header")].decode("ascii", errors="replace").splitlines():
            if line.startswith("comment classes "):
                class_names = line[len("comment classes "):].split(",")
                break
    elements = _read_ply(path)
    if "vertex" not in elements or "label" not in elements["vertex"]:
        raise UnsupportedFormat("labeled cloud PLY needs vertex x/y/z and label")
    vert = elements["vertex"]
    points = np.stack([vert["x"], vert["y"], vert["z"]], axis=1).astype(np.float64)
    labels = vert["label"].astype(np.int64)
    if class_names is None:
        class_names = [f"class_{i}" for i in range(int(labels.max()) + 1 if len(labels) else 0)]
    cloud = LabeledPointCloud(points, labels, class_names)
    bad = labels[labels != cloud.unlabeled_id]
    if len(bad) and bad.max() >= len(class_names):
        raise ParseError("label id exceeds class count")
    return cloud


# ---------------------------------------------------------------------------
# Geometry operations


def compute_bounds(mesh: TriangleMesh) -> SceneBounds:
    """Exact componentwise extrema of the vertex set."""
    if mesh.n_vertices == 0:
        raise EmptyScene("cannot bound an empty mesh")
    return SceneBounds(mesh.vertices.min(axis=0), mesh.vertices.max(axis=0))


def strip_ceiling(mesh: TriangleMesh, cut_height: float = 2.2) -> TriangleMesh:
    """Drop every face with any vertex at or above floor_z + cut_height.

    Keeps exactly the faces whose three vertices all satisfy z < threshold,
    compacting unused vertices afterwards.
    """
    if cut_height <= 0:
        raise ValueError("cut_height must be > 0")
    if mesh.n_vertices == 0 or mesh.n_faces == 0:
        raise EmptyScene("mesh has no faces")
    floor_z = mesh.vertices[:, 2].min()
    below = mesh.vertices[:, 2] < floor_z + cut_height
    keep = below[mesh.faces].all(axis=1)
    if not keep.any():
        raise EmptyScene(f"no faces below floor + {cut_height} m")
    faces = mesh.faces[keep]
    used = np.unique(faces)
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriangleMesh(mesh.vertices[used], mesh.vertex_colors[used], remap[faces])


def _box_mesh(x0, x1, y0, y1, z0, z1, color) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    verts = np.array(
        [[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
         [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]],
        dtype=np.float64,
    )
    faces = np.array(
        [[0, 2, 1], [0, 3, 2],        # bottom
         [4, 5, 6], [4, 6, 7],        # top
         [0, 1, 5], [0, 5, 4],        # y0 side
         [2, 3, 7], [2, 7, 6],        # y1 side
         [1, 2, 6], [1, 6, 5],        # x1 side
         [3, 0, 4], [3, 4, 7]],       # x0 side
        dtype=np.int64,
    )
    colors = np.tile(np.asarray(color, dtype=np.uint8), (8, 1))
    return verts, colors, faces


def _quad_mesh(x0, x1, y0, y1, z, color) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    verts = np.array([[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]], dtype=np.float64)
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    colors = np.tile(np.asarray(color, dtype=np.uint8), (4, 1))
    return verts, colors, faces


def _wall_quad(axis: str, c: float, a0: float, a1: float, z0: float, z1: float,
               color) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vertical quad in the plane x=c (axis 'x') or y=c (axis 'y')."""
    if axis == "x":
        verts = np.array([[c, a0, z0], [c, a1, z0], [c, a1, z1], [c, a0, z1]],
                         dtype=np.float64)
    else:
        verts = np.array([[a0, c, z0], [a1, c, z0], [a1, c, z1], [a0, c, z1]],
                         dtype=np.float64)
    faces = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    colors = np.tile(np.asarray(color, dtype=np.uint8), (4, 1))
    return verts, colors, faces


FLOOR_COLOR = (180, 180, 180)
WALL_COLOR = (210, 210, 190)
CEILING_COLOR = (235, 235, 235)


def build_toy_room(spec: ToyRoomSpec) -> tuple[TriangleMesh, LabeledPointCloud]:
    """Generate the synthetic room mesh and its ground-truth labeled point cloud.

    Deterministic for a given spec (seed included): box placement, geometry
    order, and surface sampling all derive from one seeded generator.

    Raises:
        InvalidSpec: a box does not fit inside the room.
    """
    w, d, h = spec.extent
    if w <= 0 or d <= 0 or h <= 0:
        raise InvalidSpec("room extent must be positive")
    if not spec.boxes:
        raise InvalidSpec("need at least one furniture box (two distinct classes)")
    rng = np.random.default_rng(spec.seed)

    class_names = ["structure"]
    for b in spec.boxes:
        if b.class_name not in class_names:
            class_names.append(b.class_name)

    parts: list[tuple[np.ndarray, np.ndarray, np.ndarray, int]] = []

    def add(part, class_id):
        parts.append((*part, class_id))

    add(_quad_mesh(0, w, 0, d, 0.0, FLOOR_COLOR), 0)
    add(_quad_mesh(0, w, 0, d, h, CEILING_COLOR), 0)
    # walls are boundary-plane quads split into height bands so that ceiling
    # stripping keeps the lower parts; a camera standing on a wall plane
    # never sees the wall it stands on (zero-area / behind the near plane)
    z = 0.0
    while z < h - 1e-9:
        z1 = min(z + WALL_BAND_HEIGHT, h)
        add(_wall_quad("y", 0.0, 0, w, z, z1, WALL_COLOR), 0)
        add(_wall_quad("y", d, 0, w, z, z1, WALL_COLOR), 0)
        add(_wall_quad("x", 0.0, 0, d, z, z1, WALL_COLOR), 0)
        add(_wall_quad("x", w, 0, d, z, z1, WALL_COLOR), 0)
        z = z1

    for box in spec.boxes:
        sx, sy, sz = box.size
        if sx <= 0 or sy <= 0 or sz <= 0:
            raise InvalidSpec(f"box {box.class_name!r} has non-positive size")
        if sx > w or sy > d or sz > h:
            raise InvalidSpec(f"box {box.class_name!r} larger than the room")
        if box.position is not None:
            cx, cy = box.position
        else:
            cx = rng.uniform(sx / 2, w - sx / 2)
            cy = rng.uniform(sy / 2, d - sy / 2)
        x0, x1 = cx - sx / 2, cx + sx / 2
        y0, y1 = cy - sy / 2, cy + sy / 2
        if x0 < -1e-9 or x1 > w + 1e-9 or y0 < -1e-9 or y1 > d + 1e-9:
            raise InvalidSpec(f"box {box.class_name!r} extends past a wall")
        add(_box_mesh(x0, x1, y0, y1, 0.0, sz, box.color), class_names.index(box.class_name))

    all_verts, all_colors, all_faces, face_classes = [], [], [], []
    offset = 0
    for verts, colors, faces, class_id in parts:
        all_verts.append(verts)
        all_colors.append(colors)
        all_faces.append(faces + offset)
        face_classes.append(np.full(len(faces), class_id, dtype=np.int64))
        offset += len(verts)
    mesh = TriangleMesh(np.vstack(all_verts), np.vstack(all_colors), np.vstack(all_faces))
    face_classes = np.concatenate(face_classes)

    points, face_idx = _sample_mesh_surface(mesh.vertices, mesh.faces, spec.n_points, rng)
    cloud = LabeledPointCloud(points, face_classes[face_idx], class_names)
    return mesh, cloud


def _triangle_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def _sample_mesh_surface(vertices, faces, n, rng) -> tuple[np.ndarray, np.ndarray]:
    areas = _triangle_areas(vertices, faces)
    total = areas.sum()
    if total <= 0:
        raise EmptyScene("mesh has zero surface area")
    face_idx = rng.choice(len(faces), size=n, p=areas / total)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    a = vertices[faces[face_idx, 0]]
    b = vertices[faces[face_idx, 1]]
    c = vertices[faces[face_idx, 2]]
    points = (1 - r1)[:, None] * a + (r1 * (1 - r2))[:, None] * b + (r1 * r2)[:, None] * c
    return points, face_idx


def sample_surface_points(mesh: TriangleMesh, n: int, seed: int = 0) -> np.ndarray:
    """Sample n points uniformly by area over the mesh surface; deterministic per seed."""
    if n <= 0:
        raise ValueError("n must be > 0")
    if mesh.n_faces == 0:
        raise EmptyScene("mesh has no faces to sample")
    rng = np.random.default_rng(seed)
    points, _ = _sample_mesh_surface(mesh.vertices, mesh.faces, n, rng)
    return points
