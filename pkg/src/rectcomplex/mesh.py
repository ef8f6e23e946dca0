"""Uniform axis-aligned rectangular meshes.

Numbering conventions (all deterministic functions of the domain and cell counts):

* vertices and cells are row-major, x fastest;
* horizontal edges come first (row-major over rows ``j = 0..ny``), then
  vertical edges (row-major over rows ``j = 0..ny-1``, columns ``i = 0..nx``);
* the local vertices of a cell are V1..V4 counterclockwise from the lower-left
  corner and the local edge ``E_i`` joins ``V_i`` to ``V_{i+1}``, so E1 is the
  bottom, E2 the right, E3 the top and E4 the left side.

Every edge carries a fixed unit normal ``n_E`` (+y for horizontal, +x for
vertical edges) and the tangent ``t_E`` obtained by rotating ``n_E`` by ninety
degrees counterclockwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

HORIZONTAL = 0
VERTICAL = 1

# Outward unit normals of the local edges E1..E4.
LOCAL_NORMALS = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
# Counterclockwise unit tangents of the local edges E1..E4.
LOCAL_TANGENTS = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
# +1 where the outward normal of local edge E_i agrees with the fixed n_E.
LOCAL_NORMAL_SIGNS = np.array([-1.0, 1.0, 1.0, -1.0])
LOCAL_EDGE_AXES = np.array([HORIZONTAL, VERTICAL, HORIZONTAL, VERTICAL])


class MeshError(ValueError):
    """Invalid domain, cell count or entity index."""


@dataclass(frozen=True)
class Domain:
    x_min: float = 0.0
    x_max: float = 2.0
    y_min: float = 0.0
    y_max: float = 1.0

    def __post_init__(self) -> None:
        if not (np.isfinite([self.x_min, self.x_max, self.y_min, self.y_max]).all()):
            raise MeshError("domain bounds must be finite")
        if not self.x_min < self.x_max or not self.y_min < self.y_max:
            raise MeshError(f"degenerate domain {self}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


class CellGeometry(NamedTuple):
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    vertices: tuple[int, int, int, int]
    edges: tuple[int, int, int, int]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    domain: Domain
    nx: int
    ny: int
    vertices: np.ndarray = field(repr=False)
    cells: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    edge_axis: np.ndarray = field(repr=False)
    cell_edges: np.ndarray = field(repr=False)
    edge_cells: np.ndarray = field(repr=False)
    boundary_vertices: np.ndarray = field(repr=False)
    boundary_edges: np.ndarray = field(repr=False)

    @property
    def hx(self) -> float:
        return (self.domain.x_max - self.domain.x_min) / self.nx

    @property
    def hy(self) -> float:
        return (self.domain.y_max - self.domain.y_min) / self.ny

    @property
    def h(self) -> float:
        """Diagonal length of a cell."""
        return float(np.hypot(self.hx, self.hy))

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertices)

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_edges)

    @property
    def cell_origins(self) -> np.ndarray:
        """Lower-left corners (x', y') of all cells, shape (n_cells, 2)."""
        return self.vertices[self.cells[:, 0]]

    @property
    def cell_centers(self) -> np.ndarray:
        return self.cell_origins + 0.5 * np.array([self.hx, self.hy])

    def edge_normal(self, edge: int) -> np.ndarray:
        return np.array([0.0, 1.0]) if self.edge_axis[edge] == HORIZONTAL else np.array([1.0, 0.0])

    def edge_tangent(self, edge: int) -> np.ndarray:
        nx_, ny_ = self.edge_normal(edge)
        return np.array([-ny_, nx_])

    def edge_length(self, edge: int) -> float:
        return self.hx if self.edge_axis[edge] == HORIZONTAL else self.hy

    def check_cell(self, cell: int) -> int:
        if not 0 <= cell < self.n_cells:
            raise MeshError(f"cell index {cell} out of range [0, {self.n_cells})")
        return int(cell)

    def check_edge(self, edge: int) -> int:
        if not 0 <= edge < self.n_edges:
            raise MeshError(f"edge index {edge} out of range [0, {self.n_edges})")
        return int(edge)


def build_uniform_mesh(domain: Domain, nx: int, ny: int) -> Mesh:
    """Partition ``domain`` into ``nx`` by ``ny`` congruent rectangles."""
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise MeshError(f"cell counts must be positive integers, got ({nx}, {ny})")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(domain.x_min, domain.x_max, nx + 1)
    ys = np.linspace(domain.y_min, domain.y_max, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    cells = np.column_stack([vid(ci, cj), vid(ci + 1, cj), vid(ci + 1, cj + 1), vid(ci, cj + 1)])

    n_hor = nx * (ny + 1)
    hi, hj = np.meshgrid(np.arange(nx), np.arange(ny + 1))
    hi, hj = hi.ravel(), hj.ravel()
    vi, vj = np.meshgrid(np.arange(nx + 1), np.arange(ny))
    vi, vj = vi.ravel(), vj.ravel()
    edges = np.vstack([
        np.column_stack([vid(hi, hj), vid(hi + 1, hj)]),
        np.column_stack([vid(vi, vj), vid(vi, vj + 1)]),
    ])
    edge_axis = np.concatenate([np.full(n_hor, HORIZONTAL), np.full(nx * ny + ny, VERTICAL)])

    def hid(i, j):
        return j * nx + i

    def vert_id(i, j):
        return n_hor + j * (nx + 1) + i

    cell_edges = np.column_stack([hid(ci, cj), vert_id(ci + 1, cj), hid(ci, cj + 1), vert_id(ci, cj)])

    # edge_cells[e] = (cell on the -n_E side, cell on the +n_E side), -1 outside.
    edge_cells = np.full((len(edges), 2), -1, dtype=np.int64)
    cell_ids = np.arange(nx * ny)
    edge_cells[cell_edges[:, 2], 0] = cell_ids  # top edge: cell lies below
    edge_cells[cell_edges[:, 0], 1] = cell_ids  # bottom edge: cell lies above
    edge_cells[cell_edges[:, 1], 0] = cell_ids  # right edge: cell lies to the left
    edge_cells[cell_edges[:, 3], 1] = cell_ids

    boundary_edges = (edge_cells < 0).any(axis=1)
    boundary_vertices = np.zeros(len(vertices), dtype=bool)
    boundary_vertices[edges[boundary_edges].ravel()] = True

    return Mesh(
        domain=domain,
        nx=nx,
        ny=ny,
        vertices=_frozen(vertices),
        cells=_frozen(cells.astype(np.int64)),
        edges=_frozen(edges.astype(np.int64)),
        edge_axis=_frozen(edge_axis.astype(np.int64)),
        cell_edges=_frozen(cell_edges.astype(np.int64)),
        edge_cells=_frozen(edge_cells),
        boundary_vertices=_frozen(boundary_vertices),
        boundary_edges=_frozen(boundary_edges),
    )


def cell_geometry(mesh: Mesh, cell: int) -> CellGeometry:
    cell = mesh.check_cell(cell)
    vs = mesh.cells[cell]
    x_lo, y_lo = mesh.vertices[vs[0]]
    x_hi, y_hi = mesh.vertices[vs[2]]
    return CellGeometry(
        float(x_lo), float(x_hi), float(y_lo), float(y_hi),
        tuple(int(v) for v in vs), tuple(int(e) for e in mesh.cell_edges[cell]),
    )
