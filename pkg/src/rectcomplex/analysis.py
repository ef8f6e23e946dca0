"""Broken-norm errors, divergence checks, pressure postprocessing and the
structural verification of the discrete complex W_h -> V_h -> P_h."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .assembly import local_divergence, scatter_matrix
from .elements import dof_values, polynomial_functions, reference_basis
from .mesh import Mesh
from .quadrature import ERROR_ORDER, cell_points
from .spaces import DofMap, FEField, build_dofmap, interpolate_scalar, interpolate_velocity, project_pressure

# ---------------------------------------------------------------------------
# errors


def _derivs(order: int):
    return [(order - k, k) for k in range(order + 1)]


def broken_error_local(mesh: Mesh, family: str, local: np.ndarray, exact, m: int,
                       mq: int = ERROR_ORDER) -> float:
    """Broken seminorm |u - u_h|_{m,h} for per-cell coefficients ``local``.

    ``exact`` provides ``derivative(dx, dy, component)``; ``None`` stands for
    the zero function.  The order-2 seminorm counts the mixed derivative once.
    """
    if m not in (0, 1, 2):
        raise ValueError(f"error order must be 0, 1 or 2, got {m}")
    basis = reference_basis(family, mesh.hx, mesh.hy)
    X, Y, w, xh, yh = cell_points(mesh, mq)
    ncomp = 2 if basis.family.rank else 1
    total = 0.0
    for d in _derivs(m):
        D = basis.eval_hat(xh, yh, d)
        if ncomp == 1:
            D = D[:, None, :]
        for c in range(ncomp):
            uh = local @ D[:, c]
            ue = 0.0 if exact is None else exact.derivative(d[0], d[1], c)(X, Y)
            total += float((((ue - uh) ** 2) * w).sum())
    return math.sqrt(total)


def broken_error(mesh: Mesh, field_: FEField, exact, m: int, mq: int = ERROR_ORDER) -> float:
    return broken_error_local(mesh, field_.dofmap.family, field_.local_coefficients(), exact, m, mq)


def pressure_error(mesh: Mesh, pressure: FEField, exact_p: Callable, mq: int = ERROR_ORDER) -> float:
    """L2 error of a piecewise-constant pressure against the zero-mean exact one."""
    X, Y, w, _, _ = cell_points(mesh, mq)
    pe = exact_p(X, Y)
    pe = pe - (pe * w).sum() / mesh.domain.area
    return math.sqrt(float((((pe - pressure.coeffs[:, None]) ** 2) * w).sum()))


# ---------------------------------------------------------------------------
# divergence


def cell_divergence_local(mesh: Mesh, local: np.ndarray) -> np.ndarray:
    """Constant divergence of a V_K function on each cell."""
    return local @ local_divergence(mesh.hx, mesh.hy) / mesh.cell_area


def cell_divergence(velocity: FEField) -> np.ndarray:
    return cell_divergence_local(velocity.mesh, velocity.local_coefficients())


def divergence_residual(mesh: Mesh, velocity: FEField) -> float:
    """Largest per-cell |div u_h|, evaluated at the cell centers."""
    basis = reference_basis("velocity12", mesh.hx, mesh.hy)
    div = basis.eval_hat(0.0, 0.0, (1, 0))[:, 0] + basis.eval_hat(0.0, 0.0, (0, 1))[:, 1]
    vals = velocity.local_coefficients() @ div
    return float(np.abs(vals).max()) if len(vals) else 0.0


# ---------------------------------------------------------------------------
# pressure postprocessing


@dataclass
class P1Field:
    """Discontinuous piecewise-linear field: value = mean + gradient . (x - center)."""

    mesh: Mesh
    means: np.ndarray
    gradients: np.ndarray  # (n_cells, 2)

    def values(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        c = self.mesh.cell_centers
        return (self.means[:, None] + self.gradients[:, :1] * (X - c[:, :1])
                + self.gradients[:, 1:] * (Y - c[:, 1:]))


def postprocess_pressure(mesh: Mesh, velocity: FEField, pressure: FEField, f: Callable,
                         mq: int = ERROR_ORDER) -> P1Field:
    """Per cell: grad p* solves (grad p*, grad q)_K = (lap u_h + f, grad q)_K for
    linear q, and the cell mean of p* equals that of p_h."""
    basis = reference_basis("velocity12", mesh.hx, mesh.hy)
    X, Y, w, xh, yh = cell_points(mesh, mq)
    lap = basis.eval_hat(xh, yh, (2, 0)) + basis.eval_hat(xh, yh, (0, 2))  # (12, 2, npts)
    local = velocity.local_coefficients()
    fv = np.broadcast_to(np.asarray(f(X, Y), dtype=float), (2,) + X.shape)
    rhs = np.stack([((local @ lap[:, c] + fv[c]) * w).sum(axis=1) for c in range(2)], axis=1)
    # Gram matrix of grad(x), grad(y) over K is |K| * identity.
    gram = mesh.cell_area * np.eye(2)
    grads = np.linalg.solve(gram, rhs.T).T
    return P1Field(mesh, np.asarray(pressure.coeffs, dtype=float).copy(), grads)


def p1_error(field_: P1Field, exact_p: Callable, mq: int = ERROR_ORDER) -> float:
    mesh = field_.mesh
    X, Y, w, _, _ = cell_points(mesh, mq)
    pe = exact_p(X, Y)
    pe = pe - (pe * w).sum() / mesh.domain.area
    return math.sqrt(float((((pe - field_.values(X, Y)) ** 2) * w).sum()))


# ---------------------------------------------------------------------------
# convergence tables


def observed_orders(hs: Sequence[float], errors: Sequence[float]) -> list[float | None]:
    """log(e_coarse / e_fine) / log(h_coarse / h_fine); ``None`` on the first level."""
    out: list[float | None] = [None]
    for k in range(1, len(errors)):
        e0, e1 = errors[k - 1], errors[k]
        if e0 > 0 and e1 > 0:
            out.append(math.log(e0 / e1) / math.log(hs[k - 1] / hs[k]))
        else:
            out.append(float("nan"))
    return out


@dataclass
class ErrorReport:
    """Rows of a convergence study: one entry per level in every column."""

    norms: list[str]
    n: list[int] = field(default_factory=list)
    h: list[float] = field(default_factory=list)
    dofs: list[int] = field(default_factory=list)
    errors: dict[str, list[float]] = field(default_factory=dict)
    extras: dict[str, list[float]] = field(default_factory=dict)

    def add(self, n: int, h: float, dofs: int, errors: dict[str, float], **extras: float) -> None:
        self.n.append(n)
        self.h.append(h)
        self.dofs.append(dofs)
        for name in self.norms:
            self.errors.setdefault(name, []).append(errors[name])
        for k, v in extras.items():
            self.extras.setdefault(k, []).append(v)

    def orders(self, name: str) -> list[float | None]:
        return observed_orders(self.h, self.errors[name])

    def row(self, k: int) -> dict[str, float]:
        return {name: self.errors[name][k] for name in self.norms}


# ---------------------------------------------------------------------------
# the discrete complex


def local_curl_matrix(hx: float, hy: float) -> np.ndarray:
    """R[i, j] = sigma_i(curl phi_j) for the plate12 basis phi_j."""
    wb = reference_basis("plate12", hx, hy)
    R = np.empty((12, 12))
    origin = np.array([0.0, 0.0])
    for j in range(12):
        _, grad = polynomial_functions(wb.coeffs[j], origin, hx, hy)

        def curl(x, y, grad=grad):
            g = grad(x, y)
            return np.stack([g[1], -g[0]])

        R[:, j] = dof_values("velocity12", origin, hx, hy, curl, None, 3)[0]
    return R


def curl_operator(dofmap_w: DofMap, dofmap_v: DofMap) -> tuple[sps.csr_matrix, float]:
    """DoF-level matrix of curl_h : W_h -> V_h.

    Every V_h DoF lives on an interior edge and is computed once from each of
    the two adjacent cells.  The matrix uses the first cell; the returned
    conformity defect is the largest disagreement between the two, which is
    zero exactly when curl_h maps W_h into V_h.
    """
    mesh = dofmap_w.mesh
    R = local_curl_matrix(mesh.hx, mesh.hy)
    vi = dofmap_v.cell_dofs.ravel()
    _, first = np.unique(vi, return_index=True)
    side = np.ones(vi.shape, dtype=bool)
    side[first] = False
    side = side.reshape(dofmap_v.cell_dofs.shape)
    halves = []
    for s_ in (False, True):
        rows = np.where((side == s_) & (dofmap_v.cell_dofs >= 0), dofmap_v.cell_dofs, -1)
        half = DofMap(mesh, dofmap_v.space, dofmap_v.ndofs, rows, dofmap_v.cell_signs, dofmap_v.kinds)
        halves.append(scatter_matrix(half, dofmap_w, R))
    gap = halves[0] - halves[1]
    defect = float(abs(gap).max()) if gap.nnz else 0.0
    return halves[0], defect


def divergence_operator(dofmap_v: DofMap, dofmap_p: DofMap) -> sps.csr_matrix:
    """D[K, j] = div phi_j on K (per-cell constant)."""
    mesh = dofmap_v.mesh
    return scatter_matrix(dofmap_p, dofmap_v, local_divergence(mesh.hx, mesh.hy)[None, :] / mesh.cell_area)


def smooth_battery(mesh: Mesh) -> dict[str, tuple[Callable, Callable]]:
    """Smooth velocity fields vanishing on the boundary, with exact divergences."""
    import sympy as sp

    from .cases import X, Y, _compile

    d = mesh.domain
    b = (X - d.x_min) * (d.x_max - X) * (Y - d.y_min) * (d.y_max - Y)

    def curl(s):
        return (sp.diff(s, Y), -sp.diff(s, X))

    fields = {
        "curl_bubble2": curl(b**2),
        "curl_exp_bubble2": curl(sp.exp(X + 2 * Y) * b**2),
        "bubble_e1": (b, sp.Integer(0) * X),
        "bubble_poly": (b * X, b * Y**2),
        "bubble_trig": (b * sp.sin(3 * X), b * sp.cos(2 * Y) * X),
        "bubble_exp": (b * sp.exp(X), b * X * Y),
    }
    out = {}
    for name, (vx, vy) in fields.items():
        fx, fy = _compile(vx), _compile(vy)
        out[name] = (lambda x, y, fx=fx, fy=fy: np.stack([fx(x, y), fy(x, y)]),
                     _compile(sp.diff(vx, X) + sp.diff(vy, Y)))
    return out


def commutativity_defect(mesh: Mesh, v: Callable, div_v: Callable, dofmap_v: DofMap | None = None) -> float:
    """max_K |div_h Pi_h v - P_h div v|."""
    dofmap_v = dofmap_v or build_dofmap(mesh, "V_h")
    pv = interpolate_velocity(mesh, dofmap_v, v)
    lhs = cell_divergence(pv)
    rhs = project_pressure(mesh, div_v).coeffs
    return float(np.abs(lhs - rhs).max())


def curl_commutativity_defect(mesh: Mesh, phi: Callable, grad_phi: Callable,
                              dofmap_w: DofMap, dofmap_v: DofMap, C: sps.csr_matrix) -> float:
    """max |Pi_h curl phi - curl_h I_h phi| over V_h DoFs, relative to max(1, |Pi_h curl phi|)."""
    Ih = interpolate_scalar(mesh, dofmap_w, phi, grad_phi)

    def curl(x, y):
        g = grad_phi(x, y)
        return np.stack([g[1], -g[0]])

    Pi = interpolate_velocity(mesh, dofmap_v, curl)
    if not len(Pi.coeffs):
        return 0.0
    diff = Pi.coeffs - C @ Ih.coeffs
    return float(np.abs(diff).max() / max(1.0, float(np.abs(Pi.coeffs).max())))


def _rank_dense(A: sps.spmatrix) -> tuple[int, float]:
    if min(A.shape) == 0:
        return 0, 0.0
    s = np.linalg.svd(A.toarray(), compute_uv=False)
    tol = s.max() * max(A.shape) * np.finfo(float).eps
    r = int((s > tol).sum())
    smin = float(s[r - 1]) if r else 0.0
    return r, smin


def _spd_pivots_ok(A: sps.spmatrix, rtol: float = 1e-12) -> bool:
    """Nonsingularity of a symmetric positive semidefinite matrix via sparse LU."""
    if A.shape[0] == 0:
        return True
    try:
        lu = spla.splu(sps.csc_matrix(A), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0)
    except RuntimeError:
        return False
    d = np.abs(lu.U.diagonal())
    return bool(d.min() > rtol * d.max())


@dataclass
class ComplexReport:
    n_cells: int
    dim_w: int
    dim_v: int
    dim_p: int
    dim_identity: bool
    div_rank: int
    div_nullity: int
    curl_rank: int
    div_curl_defect: float
    curl_conformity_defect: float
    commutativity_defect: float
    curl_commutativity_defect: float
    curl_min_singular_value: float | None
    method: str
    tol: float = 1e-10

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "dim_identity": self.dim_identity,
            "div_rank": self.div_rank == self.n_cells - 1 if self.dim_v else self.div_rank == 0,
            "div_nullity": self.div_nullity == self.dim_w,
            "curl_injective": self.curl_rank == self.dim_w,
            "div_curl": self.div_curl_defect <= self.tol,
            "curl_conformity": self.curl_conformity_defect <= self.tol,
            "commutativity": self.commutativity_defect <= self.tol,
            "curl_commutativity": self.curl_commutativity_defect <= self.tol,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def verify_complex(mesh: Mesh, method: str = "auto", tol: float = 1e-10) -> ComplexReport:
    """Check exactness of W_h -> V_h -> P_h and the commuting interpolants.

    ``method`` is ``"dense"`` (SVD ranks), ``"factorization"`` (sparse LU of
    the normal-equation matrices) or ``"auto"`` (dense for up to 4x4 meshes).
    """
    dw = build_dofmap(mesh, "W_h")
    dv = build_dofmap(mesh, "V_h")
    dp = build_dofmap(mesh, "P_h")
    ncells = mesh.n_cells
    if method == "auto":
        method = "dense" if max(mesh.nx, mesh.ny) <= 4 else "factorization"

    D = divergence_operator(dv, dp)
    C, conformity = curl_operator(dw, dv)
    DC = D @ C
    # relative to the entry scale of D (~1/|K|) and C
    div_curl = float(abs(DC).max() / (abs(D).max() * abs(C).max())) if DC.nnz else 0.0

    smin = None
    if method == "dense":
        div_rank, _ = _rank_dense(D)
        curl_rank, smin = _rank_dense(C)
    elif method == "factorization":
        # D^T 1 = 0 always; D D^T with one cell pinned is nonsingular iff rank D = ncells - 1.
        DDt = (D @ D.T).tocsc()
        ones_defect = float(np.abs(D.T @ np.ones(ncells)).max() / abs(D).max()) if dv.ndofs else 0.0
        pinned = DDt[1:, 1:]
        div_rank = ncells - 1 if (ones_defect <= tol and _spd_pivots_ok(pinned)) else -1
        curl_rank = dw.ndofs if _spd_pivots_ok(C.T @ C) else -1
    else:
        raise ValueError(f"unknown rank method {method!r}")

    comm = max(commutativity_defect(mesh, v, div_v, dv) for v, div_v in smooth_battery(mesh).values())

    d = mesh.domain

    def phi(x, y):
        return ((x - d.x_min) * (d.x_max - x) * (y - d.y_min) * (d.y_max - y)) ** 2 * np.exp(x + 2 * y)

    def grad_phi(x, y):
        b = (x - d.x_min) * (d.x_max - x) * (y - d.y_min) * (d.y_max - y)
        bx = ((d.x_max - x) - (x - d.x_min)) * (y - d.y_min) * (d.y_max - y)
        by = ((d.y_max - y) - (y - d.y_min)) * (x - d.x_min) * (d.x_max - x)
        e = np.exp(x + 2 * y)
        return np.stack([e * b * b + 2 * e * b * bx, 2 * e * b * b + 2 * e * b * by])

    curl_comm = curl_commutativity_defect(mesh, phi, grad_phi, dw, dv, C)

    return ComplexReport(
        n_cells=ncells,
        dim_w=dw.ndofs,
        dim_v=dv.ndofs,
        dim_p=dp.ndofs,
        dim_identity=dw.ndofs + ncells - 1 == dv.ndofs,
        div_rank=div_rank,
        div_nullity=dv.ndofs - div_rank if div_rank >= 0 else -1,
        curl_rank=curl_rank,
        div_curl_defect=div_curl,
        curl_conformity_defect=conformity,
        commutativity_defect=comm,
        curl_commutativity_defect=curl_comm,
        curl_min_singular_value=smin,
        method=method,
        tol=tol,
    )
