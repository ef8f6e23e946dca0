"""Global DoF maps, finite element fields and interpolation operators.

Homogeneous boundary conditions are imposed by elimination: constrained local
DoFs map to global index ``-1``.  Normal-type DoFs on an edge are stored
globally with respect to the fixed edge normal ``n_E``; the per-cell sign
factor converts between the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .elements import ElementBasis, local_dofs, reference_basis
from .mesh import LOCAL_NORMAL_SIGNS, Mesh
from .quadrature import DOF_GENERAL_ORDER, ERROR_ORDER, cell_points

SPACE_FAMILY = {
    "W_h": "plate12",
    "A_h": "adini",
    "V_h": "velocity12",
    "P_h": "pressure_p0",
}


@dataclass(frozen=True, eq=False)
class DofMap:
    mesh: Mesh = field(repr=False)
    space: str
    ndofs: int
    cell_dofs: np.ndarray = field(repr=False)  # (n_cells, nloc), -1 where eliminated
    cell_signs: np.ndarray = field(repr=False)  # (n_cells, nloc)
    kinds: np.ndarray = field(repr=False)

    @property
    def family(self) -> str:
        return SPACE_FAMILY[self.space]

    @property
    def nloc(self) -> int:
        return self.cell_dofs.shape[1]

    def basis(self) -> ElementBasis:
        return reference_basis(self.family, self.mesh.hx, self.mesh.hy)


def _numbering(mask: np.ndarray, start: int) -> np.ndarray:
    ids = np.full(len(mask), -1, dtype=np.int64)
    ids[mask] = start + np.arange(mask.sum())
    return ids


def build_dofmap(mesh: Mesh, space: str) -> DofMap:
    """Number the free DoFs of ``space`` (one of W_h, A_h, V_h, P_h)."""
    if space not in SPACE_FAMILY:
        raise ValueError(f"unknown space {space!r}; expected one of {sorted(SPACE_FAMILY)}")
    iv = ~mesh.boundary_vertices
    ie = ~mesh.boundary_edges
    nvi, nei = int(iv.sum()), int(ie.sum())
    ones = np.ones(4)

    if space == "W_h":
        blocks = [
            (_numbering(iv, 0)[mesh.cells], ones, "vertex-value", nvi),
            (_numbering(ie, nvi)[mesh.cell_edges], ones, "edge-mean", nei),
            (_numbering(ie, nvi + nei)[mesh.cell_edges], LOCAL_NORMAL_SIGNS, "edge-normal-deriv-mean", nei),
        ]
    elif space == "A_h":
        blocks = [
            (_numbering(iv, k * nvi)[mesh.cells], ones, kind, nvi)
            for k, kind in enumerate(["vertex-value", "vertex-gradient-x", "vertex-gradient-y"])
        ]
    elif space == "V_h":
        blocks = [
            (_numbering(ie, k * nei)[mesh.cell_edges], LOCAL_NORMAL_SIGNS, kind, nei)
            for k, kind in enumerate(["edge-normal-mean", "edge-normal-moment", "edge-tangential-mean"])
        ]
    else:
        blocks = [(np.arange(mesh.n_cells)[:, None], np.ones(1), "cell-mean", mesh.n_cells)]

    cell_dofs = np.concatenate([b[0] for b in blocks], axis=1)
    signs = np.concatenate([np.broadcast_to(b[1], b[0].shape) for b in blocks], axis=1)
    signs = np.where(cell_dofs >= 0, signs, 0.0)
    kinds = np.concatenate([np.full(b[3], b[2], dtype=object) for b in blocks])
    for a in (cell_dofs, signs, kinds):
        a.setflags(write=False)
    return DofMap(mesh, space, int(sum(b[3] for b in blocks)), cell_dofs, signs, kinds)


@dataclass(eq=False)
class FEField:
    dofmap: DofMap
    coeffs: np.ndarray
    multiplier: float | None = None

    @property
    def mesh(self) -> Mesh:
        return self.dofmap.mesh

    def local_coefficients(self) -> np.ndarray:
        """Per-cell coefficients w.r.t. the local nodal basis, (n_cells, nloc)."""
        return local_from_global(self.dofmap, self.coeffs)


def local_from_global(dofmap: DofMap, coeffs: np.ndarray) -> np.ndarray:
    idx = dofmap.cell_dofs
    vals = np.asarray(coeffs, dtype=float)[np.clip(idx, 0, None)] if dofmap.ndofs else np.zeros(idx.shape)
    return np.where(idx >= 0, vals * dofmap.cell_signs, 0.0)


def global_from_local(dofmap: DofMap, local: np.ndarray) -> tuple[np.ndarray, float]:
    """Gather per-cell DoF values into global slots.

    Each shared global DoF takes its value from the first cell (in cell order)
    that sees it.  Also returns the largest disagreement between the cells
    sharing a DoF, which vanishes for fields that lie in the global space.
    """
    idx = dofmap.cell_dofs.ravel()
    vals = (local * dofmap.cell_signs).ravel()
    keep = idx >= 0
    idx, vals = idx[keep], vals[keep]
    coeffs = np.zeros(dofmap.ndofs)
    if not len(idx):
        return coeffs, 0.0
    uniq, first = np.unique(idx, return_index=True)
    coeffs[uniq] = vals[first]
    defect = float(np.abs(vals - coeffs[idx]).max())
    return coeffs, defect


def interpolate_scalar(mesh: Mesh, dofmap: DofMap, u: Callable, grad: Callable,
                       m: int = DOF_GENERAL_ORDER) -> FEField:
    """Global interpolant I_h u (boundary DoFs are dropped, i.e. set to 0)."""
    local = local_dofs(mesh, dofmap.family, u, grad, m)
    return FEField(dofmap, global_from_local(dofmap, local)[0])


def interpolate_velocity(mesh: Mesh, dofmap: DofMap, v: Callable, m: int = DOF_GENERAL_ORDER) -> FEField:
    """Global interpolant Pi_h v (boundary DoFs are dropped, i.e. set to 0)."""
    local = local_dofs(mesh, dofmap.family, v, None, m)
    return FEField(dofmap, global_from_local(dofmap, local)[0])


def cell_means(mesh: Mesh, q: Callable, m: int = ERROR_ORDER) -> np.ndarray:
    X, Y, w, _, _ = cell_points(mesh, m)
    return (np.broadcast_to(np.asarray(q(X, Y), dtype=float), X.shape) * w).sum(axis=1) / mesh.cell_area


def project_pressure(mesh: Mesh, q: Callable, m: int = ERROR_ORDER, dofmap: DofMap | None = None) -> FEField:
    """L2 projection onto piecewise constants with zero mean."""
    dofmap = dofmap or build_dofmap(mesh, "P_h")
    vals = cell_means(mesh, q, m)
    return FEField(dofmap, vals - vals.mean())
