"""Assembly and solution of the discrete biharmonic and Stokes problems.

On a uniform mesh every cell carries the same local nodal basis, so local
matrices are computed once and scattered with the per-cell index and sign maps.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .elements import reference_basis
from .mesh import Mesh
from .quadrature import ASSEMBLY_ORDER, ERROR_ORDER, cell_points, reference_tensor_rule
from .spaces import DofMap, FEField, build_dofmap

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message: str, report: "SolveReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class SparseSystem:
    matrix: sps.csr_matrix
    rhs: np.ndarray
    nconstraints: int = 0
    blocks: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        A = self.matrix
        scale = abs(A).max() or 1.0
        d = A - A.T
        return float(abs(d).max() / scale) if d.nnz else 0.0


@dataclass
class SolveReport:
    size: int
    nnz: int
    factor_nnz: int
    relative_residual: float  # normwise backward error ||r|| / (||A|| ||x|| + ||b||), infinity norms
    residual_over_rhs: float  # ||r|| / ||b||
    wall_time: float


def local_hessian_stiffness(family: str, hx: float, hy: float, mq: int = ASSEMBLY_ORDER) -> np.ndarray:
    """sum_K (Hess phi_j, Hess phi_i)_K on one cell (Poisson ratio 0)."""
    basis = reference_basis(family, hx, hy)
    xh, yh, w = reference_tensor_rule(mq)
    w = 0.25 * hx * hy * w
    K = np.zeros((basis.ndofs, basis.ndofs))
    for d, mult in (((2, 0), 1.0), ((1, 1), 2.0), ((0, 2), 1.0)):
        D = basis.eval_hat(xh, yh, d)
        K += mult * (D * w) @ D.T
    return K


def local_gradient_stiffness(family: str, hx: float, hy: float, mq: int = ASSEMBLY_ORDER) -> np.ndarray:
    """(grad phi_j, grad phi_i)_K summed over vector components."""
    basis = reference_basis(family, hx, hy)
    xh, yh, w = reference_tensor_rule(mq)
    w = 0.25 * hx * hy * w
    K = np.zeros((basis.ndofs, basis.ndofs))
    for d in ((1, 0), (0, 1)):
        D = basis.eval_hat(xh, yh, d)  # (ndofs, 2, npts)
        for c in range(D.shape[1]):
            K += (D[:, c] * w) @ D[:, c].T
    return K


def local_divergence(hx: float, hy: float, mq: int = ASSEMBLY_ORDER) -> np.ndarray:
    """Integral of div phi_j over one cell for the velocity basis."""
    basis = reference_basis("velocity12", hx, hy)
    xh, yh, w = reference_tensor_rule(mq)
    div = basis.eval_hat(xh, yh, (1, 0))[:, 0] + basis.eval_hat(xh, yh, (0, 1))[:, 1]
    return div @ (0.25 * hx * hy * w)


def scatter_matrix(row_map: DofMap, col_map: DofMap, local: np.ndarray) -> sps.csr_matrix:
    """Assemble sum over cells of sign_i sign_j local[i, j] into a sparse matrix."""
    ri, rs = row_map.cell_dofs, row_map.cell_signs
    ci, cs = col_map.cell_dofs, col_map.cell_signs
    rows = np.broadcast_to(ri[:, :, None], (len(ri), ri.shape[1], ci.shape[1]))
    cols = np.broadcast_to(ci[:, None, :], rows.shape)
    vals = rs[:, :, None] * cs[:, None, :] * local[None, :, :]
    keep = (rows >= 0) & (cols >= 0)
    A = sps.coo_matrix((vals[keep], (rows[keep], cols[keep])), shape=(row_map.ndofs, col_map.ndofs))
    return A.tocsr()


def scatter_vector(dofmap: DofMap, local: np.ndarray) -> np.ndarray:
    idx = dofmap.cell_dofs.ravel()
    vals = (local * dofmap.cell_signs).ravel()
    keep = idx >= 0
    return np.bincount(idx[keep], weights=vals[keep], minlength=dofmap.ndofs)


def assemble_load(dofmap: DofMap, f: Callable, mq: int = ERROR_ORDER) -> np.ndarray:
    """(f, phi_i) for every global basis function."""
    mesh = dofmap.mesh
    basis = dofmap.basis()
    X, Y, w, xh, yh = cell_points(mesh, mq)
    phi = basis.eval_hat(xh, yh)
    fv = np.asarray(f(X, Y), dtype=float)
    if basis.family.rank == 0:
        local = (np.broadcast_to(fv, X.shape) * w) @ phi.T
    else:
        fv = np.broadcast_to(fv, (2,) + X.shape)
        local = sum((fv[c] * w) @ phi[:, c].T for c in range(2))
    return scatter_vector(dofmap, local)


def assemble_biharmonic(mesh: Mesh, dofmap: DofMap, f: Callable, mq_assembly: int = ASSEMBLY_ORDER,
                        mq_load: int = ERROR_ORDER) -> SparseSystem:
    K = local_hessian_stiffness(dofmap.family, mesh.hx, mesh.hy, mq_assembly)
    A = scatter_matrix(dofmap, dofmap, K)
    return SparseSystem(A, assemble_load(dofmap, f, mq_load))


def assemble_stokes(mesh: Mesh, dofmap_v: DofMap, dofmap_p: DofMap, f: Callable,
                    mq_assembly: int = ASSEMBLY_ORDER, mq_load: int = ERROR_ORDER) -> SparseSystem:
    """Bordered saddle-point system for (u, p, lambda).

        [ A   -B^T  0 ] [u]   [F]
        [-B    0    m ] [p] = [0]
        [ 0    m^T  0 ] [l]   [0]

    with ``m`` the cell areas, which enforces a zero-mean pressure.
    """
    A = scatter_matrix(dofmap_v, dofmap_v, local_gradient_stiffness("velocity12", mesh.hx, mesh.hy, mq_assembly))
    B = scatter_matrix(dofmap_p, dofmap_v, local_divergence(mesh.hx, mesh.hy, mq_assembly)[None, :])
    areas = sps.csr_matrix(np.full((dofmap_p.ndofs, 1), mesh.cell_area))
    M = sps.bmat([[A, -B.T, None], [-B, None, areas], [None, areas.T, None]], format="csr")
    rhs = np.concatenate([assemble_load(dofmap_v, f, mq_load), np.zeros(dofmap_p.ndofs + 1)])
    return SparseSystem(M, rhs, nconstraints=1, blocks={"A": A, "B": B})


def residuals(A: sps.spmatrix, x: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(backward error, residual relative to the right-hand side), infinity norms.

    The rhs-relative residual of a plate system at n=64 sits near 1e-9 for any
    float64 solution (rounding in A @ x alone), so acceptance uses the
    backward error.
    """
    r = float(np.abs(A @ x - b).max())
    bn = float(np.abs(b).max())
    an = float(abs(A).sum(axis=1).max())
    denom = an * float(np.abs(x).max()) + bn
    return (r / denom if denom > 0 else r), (r / bn if bn > 0 else r)


def solve_system(system: SparseSystem, tol: float = DEFAULT_TOL, refine: int = 1) -> tuple[np.ndarray, SolveReport]:
    """Direct sparse LU solve with a relative-residual acceptance check.

    ``refine`` steps of iterative refinement reuse the factorization; one step
    brings the constraint rows of the Stokes system down to round-off, which
    the per-cell divergence (a residual divided by the cell area) needs.
    """
    A = system.matrix.tocsc()
    start = time.perf_counter()
    n = A.shape[0]
    if n == 0:
        return np.zeros(0), SolveReport(0, 0, 0, 0.0, 0.0, 0.0)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    x = lu.solve(system.rhs)
    for _ in range(refine):
        x = x + lu.solve(system.rhs - A @ x)
    rel, over_rhs = residuals(A, x, system.rhs)
    report = SolveReport(n, A.nnz, lu.L.nnz + lu.U.nnz, rel, over_rhs, time.perf_counter() - start)
    if not np.isfinite(rel) or rel > tol:
        raise SolverError(f"relative residual {rel:.3e} exceeds tolerance {tol:.1e}", report)
    return x, report


def solve_biharmonic(mesh: Mesh, family: str, case, tol: float = DEFAULT_TOL,
                     mq_assembly: int = ASSEMBLY_ORDER, mq_load: int = ERROR_ORDER) -> tuple[FEField, SolveReport]:
    """Solve the clamped plate problem with the plate12 (W_h) or Adini element."""
    space = {"plate12": "W_h", "adini": "A_h"}.get(family)
    if space is None:
        raise ValueError(f"biharmonic element must be 'plate12' or 'adini', got {family!r}")
    dofmap = build_dofmap(mesh, space)
    system = assemble_biharmonic(mesh, dofmap, case.f, mq_assembly, mq_load)
    x, report = solve_system(system, tol)
    return FEField(dofmap, x), report


def solve_stokes(mesh: Mesh, case, tol: float = DEFAULT_TOL, mq_assembly: int = ASSEMBLY_ORDER,
                 mq_load: int = ERROR_ORDER) -> tuple[FEField, FEField, SolveReport]:
    dv = build_dofmap(mesh, "V_h")
    dp = build_dofmap(mesh, "P_h")
    system = assemble_stokes(mesh, dv, dp, case.f, mq_assembly, mq_load)
    x, report = solve_system(system, tol)
    nv = dv.ndofs
    p = x[nv:nv + dp.ndofs]
    return FEField(dv, x[:nv]), FEField(dp, p, multiplier=float(x[-1])), report
