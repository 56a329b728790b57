"""Triangular meshes with labeled boundary edges, plus file I/O.

Boundary labels: 1 = traction boundary, 2 = slip boundary (zero normal
displacement, zero tangential traction), 3 = clamped boundary (prescribed
displacement).  Node coordinates always describe the *current*
configuration; a load step produces a new :class:`Mesh` via
:meth:`Mesh.with_nodes`.

Native text format::

    nodes N triangles M edges K
    x y            (N lines)
    i j k          (M lines)
    i j label      (K lines)

Blank lines and ``#`` comments are ignored.  Indices may be 0- or 1-based.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MeshError

__all__ = [
    "Mesh",
    "TRACTION",
    "SLIP",
    "CLAMPED",
    "load_mesh",
    "save_mesh",
    "build_mesh",
    "rectangle_mesh",
    "edge_normal",
    "write_vtk",
    "read_vtk_points",
    "write_csv",
]

TRACTION, SLIP, CLAMPED = 1, 2, 3
SIDES = ("bottom", "right", "top", "left")


@dataclass(frozen=True, eq=False)
class Mesh:
    nodes: np.ndarray           # (N, 2) current coordinates
    triangles: np.ndarray       # (M, 3) counter-clockwise
    boundary_edges: np.ndarray  # (K, 2) oriented along the adjacent triangle
    edge_labels: np.ndarray     # (K,)
    edge_elements: np.ndarray   # (K,) triangle owning each boundary edge

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def with_nodes(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.shape != self.nodes.shape:
            raise MeshError("new coordinates must match the node count")
        return Mesh(nodes, self.triangles, self.boundary_edges,
                    self.edge_labels, self.edge_elements)

    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def areas(self):
        return np.abs(self.signed_areas())

    def gradients(self):
        """Constant P1 shape-function gradients, shape ``(M, 3, 2)``."""
        p = self.nodes[self.triangles]
        x, y = p[..., 0], p[..., 1]
        twice = 2.0 * self.signed_areas()
        if np.any(twice <= 0):
            bad = int(np.flatnonzero(twice <= 0)[0])
            raise MeshError(f"triangle {bad} has non-positive area")
        G = np.empty(p.shape)
        G[:, 0, 0] = y[:, 1] - y[:, 2]
        G[:, 1, 0] = y[:, 2] - y[:, 0]
        G[:, 2, 0] = y[:, 0] - y[:, 1]
        G[:, 0, 1] = x[:, 2] - x[:, 1]
        G[:, 1, 1] = x[:, 0] - x[:, 2]
        G[:, 2, 1] = x[:, 1] - x[:, 0]
        return G / twice[:, None, None]

    def edge_lengths(self):
        d = self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def normals(self):
        """Outward unit normals of all boundary edges, shape ``(K, 2)``."""
        d = self.nodes[self.boundary_edges[:, 1]] - self.nodes[self.boundary_edges[:, 0]]
        length = np.hypot(d[:, 0], d[:, 1])
        if np.any(length < 1e-14):
            raise MeshError("degenerate boundary edge (length < 1e-14)")
        return np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]

    def edges_with_label(self, label):
        return np.flatnonzero(self.edge_labels == label)

    def boundary_area(self):
        """Area enclosed by the boundary loops (shoelace over oriented edges)."""
        a = self.nodes[self.boundary_edges[:, 0]]
        b = self.nodes[self.boundary_edges[:, 1]]
        return 0.5 * float(np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))


def _topological_boundary(triangles):
    """Directed boundary edges ``{frozenset: (i, j, element)}``."""
    seen = {}
    for t, (a, b, c) in enumerate(triangles):
        for i, j in ((a, b), (b, c), (c, a)):
            key = frozenset((int(i), int(j)))
            if key in seen:
                seen[key] = None
            else:
                seen[key] = (int(i), int(j), t)
    return {k: v for k, v in seen.items() if v is not None}


def build_mesh(nodes, triangles, edges, require_clamped=True):
    """Validate raw arrays and assemble a :class:`Mesh`.

    Clockwise triangles are reordered with a warning.  ``edges`` rows are
    ``(i, j, label)`` with 0-based indices.
    """
    nodes = np.asarray(nodes, dtype=float).reshape(-1, 2)
    triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    n = len(nodes)
    if not np.all(np.isfinite(nodes)):
        raise MeshError("node coordinates must be finite")
    if triangles.size and (triangles.min() < 0 or triangles.max() >= n):
        raise MeshError("triangle references a missing node")
    if edges.size and (edges[:, :2].min() < 0 or edges[:, :2].max() >= n):
        raise MeshError("boundary edge references a missing node")

    p = nodes[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.maximum(np.abs(e1).max(axis=1), np.abs(e2).max(axis=1)) ** 2
    flat = np.abs(area2) <= 1e-14 * np.maximum(scale, 1e-300)
    if np.any(flat):
        raise MeshError(f"triangle {int(np.flatnonzero(flat)[0])} has zero area")
    cw = area2 < 0
    if np.any(cw):
        warnings.warn(f"{int(cw.sum())} clockwise triangle(s) reordered to counter-clockwise",
                      stacklevel=2)
        triangles[cw] = triangles[cw][:, [0, 2, 1]]

    boundary = _topological_boundary(triangles)
    labels = {}
    for i, j, lab in edges:
        key = frozenset((int(i), int(j)))
        if lab not in (TRACTION, SLIP, CLAMPED):
            raise MeshError(f"edge ({i}, {j}) has invalid label {lab}")
        if key not in boundary:
            raise MeshError(f"labeled edge ({i}, {j}) is not on the boundary")
        if key in labels:
            raise MeshError(f"edge ({i}, {j}) is labeled twice")
        labels[key] = int(lab)
    for key, (i, j, _) in boundary.items():
        if key not in labels:
            raise MeshError(f"boundary edge ({i}, {j}) has no label")

    ordered = sorted(boundary.values(), key=lambda v: (v[2], v[0], v[1]))
    bedges = np.array([(i, j) for i, j, _ in ordered], dtype=np.int64).reshape(-1, 2)
    owner = np.array([t for _, _, t in ordered], dtype=np.int64)
    blabels = np.array([labels[frozenset((i, j))] for i, j, _ in ordered], dtype=np.int64)
    if require_clamped and not np.any(blabels == CLAMPED):
        raise MeshError("no clamped (label 3) boundary: the problem may be singular; "
                        "pass require_clamped=False to override")
    return Mesh(nodes, triangles, bedges, blabels, owner)


def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def load_mesh(path, require_clamped=True):
    """Read a mesh in the native text format."""
    text = Path(path).read_text()
    lines = list(_data_lines(text))
    if not lines:
        raise MeshError(f"{path}: empty mesh file")
    lineno, head = lines[0]
    try:
        if [head[0], head[2], head[4]] != ["nodes", "triangles", "edges"] or len(head) != 6:
            raise ValueError
        n, m, k = int(head[1]), int(head[3]), int(head[5])
    except (ValueError, IndexError):
        raise MeshError(f"line {lineno}: expected 'nodes N triangles M edges K'") from None
    if len(lines) - 1 < n + m + k:
        raise MeshError(f"{path}: expected {n + m + k} data lines, found {len(lines) - 1}")

    def rows(chunk, width, conv, what):
        out = []
        for lineno, toks in chunk:
            if len(toks) != width:
                raise MeshError(f"line {lineno}: {what} needs {width} values")
            try:
                out.append([conv(t) for t in toks])
            except ValueError:
                raise MeshError(f"line {lineno}: cannot parse {what}") from None
        return out

    body = lines[1:]
    nodes = rows(body[:n], 2, float, "node")
    tris = np.array(rows(body[n:n + m], 3, int, "triangle"), dtype=np.int64).reshape(-1, 3)
    edges = np.array(rows(body[n + m:n + m + k], 3, int, "edge"), dtype=np.int64).reshape(-1, 3)
    if len(body) > n + m + k:
        raise MeshError(f"line {body[n + m + k][0]}: unexpected trailing data")
    idx = np.concatenate([tris.ravel(), edges[:, :2].ravel()])
    if idx.size and idx.min() >= 1 and idx.max() == n:
        tris = tris - 1
        edges[:, :2] -= 1
    return build_mesh(nodes, tris, edges, require_clamped=require_clamped)


def save_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"nodes {mesh.n_nodes} triangles {mesh.n_triangles} "
                 f"edges {len(mesh.boundary_edges)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{x:.17g} {y:.17g}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        for (i, j), lab in zip(mesh.boundary_edges, mesh.edge_labels):
            fh.write(f"{i} {j} {lab}\n")


def rectangle_mesh(width=1.0, height=1.0, nx=4, ny=4, labels=None, origin=(0.0, 0.0),
                   require_clamped=True):
    """Structured rectangle, each cell split into four triangles by its diagonals.

    ``labels`` maps ``bottom``/``right``/``top``/``left`` to boundary labels
    (default: all clamped).
    """
    lab = dict.fromkeys(SIDES, CLAMPED)
    if labels:
        unknown = set(labels) - set(SIDES)
        if unknown:
            raise MeshError(f"unknown side(s) {sorted(unknown)}")
        lab.update(labels)
    if nx < 1 or ny < 1:
        raise MeshError("nx and ny must be at least 1")
    x0, y0 = origin
    xs = x0 + width * np.arange(nx + 1) / nx
    ys = y0 + height * np.arange(ny + 1) / ny
    X, Y = np.meshgrid(xs, ys)
    corners = np.column_stack([X.ravel(), Y.ravel()])
    cx = x0 + width * (np.arange(nx) + 0.5) / nx
    cy = y0 + height * (np.arange(ny) + 0.5) / ny
    CX, CY = np.meshgrid(cx, cy)
    nodes = np.vstack([corners, np.column_stack([CX.ravel(), CY.ravel()])])

    def v(i, j):
        return j * (nx + 1) + i

    base = (nx + 1) * (ny + 1)
    tris = []
    for j in range(ny):
        for i in range(nx):
            c = base + j * nx + i
            a, b, d, e = v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)
            tris += [(a, b, c), (b, d, c), (d, e, c), (e, a, c)]
    edges = []
    for i in range(nx):
        edges.append((v(i, 0), v(i + 1, 0), lab["bottom"]))
        edges.append((v(i + 1, ny), v(i, ny), lab["top"]))
    for j in range(ny):
        edges.append((v(nx, j), v(nx, j + 1), lab["right"]))
        edges.append((v(0, j + 1), v(0, j), lab["left"]))
    return build_mesh(nodes, tris, edges, require_clamped=require_clamped)


def edge_normal(mesh, edge):
    """Outward unit normal of a boundary edge from current coordinates.

    ``edge`` is a boundary-edge index or an ``(i, j)`` node pair.
    """
    if np.ndim(edge) == 0:
        idx = int(edge)
    else:
        key = {int(edge[0]), int(edge[1])}
        hits = [k for k, (i, j) in enumerate(mesh.boundary_edges) if {int(i), int(j)} == key]
        if not hits:
            raise MeshError(f"({edge[0]}, {edge[1]}) is not a boundary edge")
        idx = hits[0]
    i, j = mesh.boundary_edges[idx]
    d = mesh.nodes[j] - mesh.nodes[i]
    length = float(np.hypot(d[0], d[1]))
    if length < 1e-14:
        raise MeshError(f"degenerate boundary edge ({i}, {j})")
    return np.array([d[1], -d[0]]) / length


def _fmt(values):
    return " ".join(f"{v:.17g}" for v in values)


def write_vtk(mesh, path, point_data=None, cell_data=None, title="mooney_sla"):
    """Write a legacy ASCII VTK unstructured grid.

    ``point_data`` maps names to ``(N,)`` or ``(N, 2)`` arrays (2-vectors
    become VECTORS with z = 0); ``cell_data`` maps names to ``(M,)`` or
    ``(M, 2, 2)`` arrays, tensors being flattened row-major into four
    components.
    """
    n, m = mesh.n_nodes, mesh.n_triangles
    point_data = point_data or {}
    cell_data = cell_data or {}
    for name, arr in point_data.items():
        if len(arr) != n:
            raise ValueError(f"point field '{name}' has {len(arr)} rows, mesh has {n} nodes")
    for name, arr in cell_data.items():
        if len(arr) != m:
            raise ValueError(f"cell field '{name}' has {len(arr)} rows, mesh has {m} cells")
    out = ["# vtk DataFile Version 2.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {n} double"]
    out += [_fmt((x, y, 0.0)) for x, y in mesh.nodes]
    out.append(f"CELLS {m} {4 * m}")
    out += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    out.append(f"CELL_TYPES {m}")
    out += ["5"] * m
    if point_data:
        out.append(f"POINT_DATA {n}")
        out += _vtk_fields(point_data)
    if cell_data:
        out.append(f"CELL_DATA {m}")
        out += _vtk_fields(cell_data)
    Path(path).write_text("\n".join(out) + "\n")


def _vtk_fields(fields):
    out = []
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        flat = arr.reshape(len(arr), -1)
        if flat.shape[1] == 2:
            out.append(f"VECTORS {name} double")
            out += [_fmt((a, b, 0.0)) for a, b in flat]
        elif flat.shape[1] in (1, 4):
            out.append(f"SCALARS {name} double {flat.shape[1]}")
            out.append("LOOKUP_TABLE default")
            out += [_fmt(row) for row in flat]
        else:
            raise ValueError(f"field '{name}' must have 1, 2 or 4 components")
    return out


def read_vtk_points(path):
    """Node coordinates ``(N, 2)`` from a file written by :func:`write_vtk`."""
    lines = Path(path).read_text().splitlines()
    for k, line in enumerate(lines):
        if line.startswith("POINTS"):
            n = int(line.split()[1])
            pts = np.array([[float(t) for t in lines[k + 1 + i].split()] for i in range(n)])
            return pts[:, :2]
    raise MeshError(f"{path}: no POINTS section")


def write_csv(path, nodes, displacement):
    """Per-node table ``node_id,x,y,ux,uy`` with 17 significant digits."""
    with open(path, "w", newline="\n") as fh:
        fh.write("node_id,x,y,ux,uy\n")
        for i, ((x, y), (ux, uy)) in enumerate(zip(nodes, displacement)):
            fh.write(f"{i},{x:.17g},{y:.17g},{ux:.17g},{uy:.17g}\n")
