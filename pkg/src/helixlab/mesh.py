"""Quad meshes sampled from surface patches, written as OBJ."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .surfaces import SurfacePatch, _cross3

TOL_SING = 1e-9


@dataclass
class MeshGrid:
    nu: int
    nv: int
    vertices: np.ndarray  # (nu * nv, 3), row-major: index = i * nv + j
    faces: list  # 0-based index quadruples
    normals: np.ndarray | None = None
    excluded_cells: list = field(default_factory=list)  # (i, j) of dropped cells

    def validate(self):
        n = len(self.vertices)
        bad = set(self.excluded_vertices)
        for f in self.faces:
            if any(not 0 <= k < n for k in f):
                raise ValueError(f"face {f} references a missing vertex")
            if bad.intersection(f):
                raise ValueError(f"face {f} references an excluded vertex")

    @property
    def excluded_vertices(self):
        return getattr(self, "_excluded_vertices", [])


def build_mesh(p: SurfacePatch, nu: int, nv: int, tol_sing: float = TOL_SING) -> MeshGrid:
    """Sample ``p`` on an nu x nv grid and connect neighbours by quads.

    A cell is dropped when a corner is singular or when its corner normals
    disagree in orientation, which happens when the cell straddles a
    singular curve (an edge of regression).
    """
    if nu < 2 or nv < 2:
        raise ValueError("mesh grid needs at least 2 samples in each direction")
    jet, _, _ = p.grid_jet(nu, nv)
    verts = jet[0].reshape(p.dim, -1).T
    cr = _cross3(jet[1], jet[2])
    area = np.sqrt(np.sum(cr * cr, axis=0))
    singular = area <= tol_sing
    with np.errstate(invalid="ignore", divide="ignore"):
        normals = np.where(singular, 0.0, cr / area)

    faces, excluded = [], []
    for i in range(nu - 1):
        for j in range(nv - 1):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            if any(singular[c] for c in corners):
                excluded.append((i, j))
                continue
            ns = [normals[:, a, b] for a, b in corners]
            if any(ns[a] @ ns[b] < 0 for a in range(4) for b in range(a + 1, 4)):
                excluded.append((i, j))
                continue
            faces.append(tuple(a * nv + b for a, b in corners))
    mesh = MeshGrid(nu, nv, verts, faces, normals.reshape(3, -1).T, excluded)
    mesh._excluded_vertices = [int(k) for k in np.flatnonzero(singular.ravel())]
    return mesh


def export_obj(mesh: MeshGrid, path) -> Path:
    """Write ``v x y z`` lines then ``f i j k l`` lines (1-based)."""
    mesh.validate()
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += ["f " + " ".join(str(k + 1) for k in f) for f in mesh.faces]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
