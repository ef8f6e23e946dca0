"""Gauss-Legendre rules on [-1, 1], on mesh cells and on mesh edges."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .mesh import HORIZONTAL, Mesh

MAX_POINTS = 20

# Default orders: products of shape functions are integrated exactly with 5
# points per direction; loads and error norms use 10.
ASSEMBLY_ORDER = 5
ERROR_ORDER = 10
DOF_EXACT_ORDER = 3
DOF_GENERAL_ORDER = 10


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadRule1D:
    nodes: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True, eq=False)
class QuadRuleCell:
    points: np.ndarray  # (npts, 2)
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_1d(m: int) -> QuadRule1D:
    """``m``-point Gauss-Legendre rule, exact for degree ``2m - 1``."""
    if int(m) != m or not 1 <= m <= MAX_POINTS:
        raise QuadratureError(f"number of Gauss points must be in [1, {MAX_POINTS}], got {m}")
    x, w = legendre.leggauss(int(m))
    x.setflags(write=False)
    w.setflags(write=False)
    return QuadRule1D(x, w)


def reference_tensor_rule(mx: int, my: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor rule on [-1, 1]^2 as flat arrays (xhat, yhat, weights)."""
    rx = gauss_1d(mx)
    ry = gauss_1d(mx if my is None else my)
    X, Y = np.meshgrid(rx.nodes, ry.nodes, indexing="ij")
    W = np.outer(rx.weights, ry.weights)
    return X.ravel(), Y.ravel(), W.ravel()


def cell_rule(mesh: Mesh, cell: int, mx: int, my: int) -> QuadRuleCell:
    cell = mesh.check_cell(cell)
    xh, yh, w = reference_tensor_rule(mx, my)
    x0, y0 = mesh.cell_origins[cell]
    pts = np.column_stack([x0 + 0.5 * mesh.hx * (1 + xh), y0 + 0.5 * mesh.hy * (1 + yh)])
    return QuadRuleCell(pts, 0.25 * mesh.hx * mesh.hy * w)


def edge_rule(mesh: Mesh, edge: int, m: int) -> QuadRuleCell:
    """Gauss rule on an edge, parametrized by increasing coordinate."""
    edge = mesh.check_edge(edge)
    r = gauss_1d(m)
    a = mesh.vertices[mesh.edges[edge, 0]]
    b = mesh.vertices[mesh.edges[edge, 1]]
    t = 0.5 * (1 + r.nodes)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    length = mesh.hx if mesh.edge_axis[edge] == HORIZONTAL else mesh.hy
    return QuadRuleCell(pts, 0.5 * length * r.weights)


def cell_points(mesh: Mesh, mx: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Tensor Gauss points of every cell at once.

    Returns ``(X, Y, w, xhat, yhat)`` with ``X, Y`` of shape (n_cells, npts),
    physical weights ``w`` and the shared reference coordinates.
    """
    xh, yh, w = reference_tensor_rule(mx)
    org = mesh.cell_origins
    X = org[:, :1] + 0.5 * mesh.hx * (1 + xh)[None, :]
    Y = org[:, 1:] + 0.5 * mesh.hy * (1 + yh)[None, :]
    return X, Y, 0.25 * mesh.cell_area * w, xh, yh
