"""Local finite elements on a rectangle.

Shape functions are stored as polynomials in the scaled cell coordinates

    xhat = (2x - x' - x'') / hx,   yhat = (2y - y' - y'') / hy,

as coefficient arrays ``c[a, b]`` multiplying ``xhat**a * yhat**b`` (degree at
most 4 in each variable).  A nodal basis is obtained by evaluating every DoF
functional on a set of generators and inverting the resulting DoF matrix.

Families
--------
plate12
    P3 + span{x^4, y^4}; DoFs: vertex values, edge integrals of w and edge
    integrals of the outward normal derivative.
velocity12
    [P1]^2 + curl span{x^3, x^2 y, x y^2, y^3, x^4, y^4}; DoFs: edge integrals
    of v.n, of (v.n) xi and of v.t, with xi the edge-linear weight.
adini
    P3 + span{x^3 y, x y^3}; DoFs: value and gradient at the vertices.
pressure_p0
    constants; DoF: cell integral.
local_p1
    P1; DoFs: cell integrals of q, q*xhat and q*yhat.

Local DoF ordering follows the local entities: vertices V1..V4, edges E1..E4
(see :mod:`rectcomplex.mesh`).  Normal-type DoFs use the cell-outward normal;
reconciliation with the fixed edge normal happens in the DoF map.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .mesh import LOCAL_NORMALS, LOCAL_TANGENTS, Mesh
from .quadrature import DOF_EXACT_ORDER, DOF_GENERAL_ORDER, gauss_1d, reference_tensor_rule

NPOW = 5
COND_LIMIT = 1e12


class ElementDefinitionError(RuntimeError):
    """The DoF matrix of a family is (numerically) singular."""


@dataclass(frozen=True)
class ElementFamily:
    tag: str
    rank: int  # 0 scalar, 1 two-vector
    ndofs: int
    max_deriv: int
    dof_kinds: tuple[str, ...]


def _repeat(kind: str) -> tuple[str, ...]:
    return (kind,) * 4


FAMILIES: dict[str, ElementFamily] = {
    "plate12": ElementFamily(
        "plate12", 0, 12, 2,
        _repeat("point_value") + _repeat("edge_mean") + _repeat("edge_normal_deriv_mean"),
    ),
    "velocity12": ElementFamily(
        "velocity12", 1, 12, 2,
        _repeat("edge_normal_component_mean")
        + _repeat("edge_normal_component_first_moment")
        + _repeat("edge_tangential_component_mean"),
    ),
    "adini": ElementFamily(
        "adini", 0, 12, 2,
        _repeat("point_value") + _repeat("point_gradient_x") + _repeat("point_gradient_y"),
    ),
    "pressure_p0": ElementFamily("pressure_p0", 0, 1, 0, ("cell_mean",)),
    "local_p1": ElementFamily("local_p1", 0, 3, 1, ("cell_mean", "cell_moment", "cell_moment")),
}


def get_family(family: str | ElementFamily) -> ElementFamily:
    if isinstance(family, ElementFamily):
        return family
    try:
        return FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown element family {family!r}; expected one of {sorted(FAMILIES)}") from None


# ---------------------------------------------------------------------------
# polynomial helpers


def monomial(a: int, b: int) -> np.ndarray:
    c = np.zeros((NPOW, NPOW))
    c[a, b] = 1.0
    return c


def poly_diff(c: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
    """Derivative with respect to the scaled coordinates."""
    c = np.asarray(c, dtype=float)
    for _ in range(dx):
        d = np.zeros_like(c)
        d[..., :-1, :] = c[..., 1:, :] * np.arange(1, NPOW)[:, None]
        c = d
    for _ in range(dy):
        d = np.zeros_like(c)
        d[..., :, :-1] = c[..., :, 1:] * np.arange(1, NPOW)[None, :]
        c = d
    return c


def poly_eval(c: np.ndarray, xh, yh) -> np.ndarray:
    """Evaluate coefficient arrays ``c[..., a, b]`` at scaled points.

    The result has shape ``c.shape[:-2] + np.shape(xh)``.
    """
    xh = np.asarray(xh, dtype=float)
    yh = np.asarray(yh, dtype=float)
    shape = np.broadcast_shapes(xh.shape, yh.shape)
    xf = np.broadcast_to(xh, shape).ravel()
    yf = np.broadcast_to(yh, shape).ravel()
    pw = np.arange(NPOW)[:, None]
    vx = xf[None, :] ** pw
    vy = yf[None, :] ** pw
    out = np.einsum("...ab,ap,bp->...p", c, vx, vy)
    return out.reshape(c.shape[:-2] + shape)


def scalar_curl(c: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """Physical curl (d/dy, -d/dx) of a scalar polynomial, times hy/2."""
    return np.stack([poly_diff(c, 0, 1), -(hy / hx) * poly_diff(c, 1, 0)])


# ---------------------------------------------------------------------------
# shape-space generators

_P3 = [(a, b) for a in range(4) for b in range(4 - a)]


def generators(family: str | ElementFamily, hx: float, hy: float) -> np.ndarray:
    """Spanning set of the shape space as coefficient arrays.

    Shape ``(ndofs, 5, 5)`` for scalar and ``(ndofs, 2, 5, 5)`` for vector families.
    """
    fam = get_family(family)
    if fam.tag == "plate12":
        return np.array([monomial(a, b) for a, b in _P3 + [(4, 0), (0, 4)]])
    if fam.tag == "adini":
        return np.array([monomial(a, b) for a, b in _P3 + [(3, 1), (1, 3)]])
    if fam.tag == "pressure_p0":
        return np.array([monomial(0, 0)])
    if fam.tag == "local_p1":
        return np.array([monomial(0, 0), monomial(1, 0), monomial(0, 1)])
    # velocity12
    gens = []
    for comp in range(2):
        for a, b in [(0, 0), (1, 0), (0, 1)]:
            g = np.zeros((2, NPOW, NPOW))
            g[comp] = monomial(a, b)
            gens.append(g)
    for a, b in [(3, 0), (2, 1), (1, 2), (0, 3), (4, 0), (0, 4)]:
        gens.append(scalar_curl(monomial(a, b), hx, hy))
    return np.array(gens)


# ---------------------------------------------------------------------------
# DoF functionals, vectorized over cells

ScalarFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _call(f, X, Y, ncomp: int) -> np.ndarray:
    v = np.asarray(f(X, Y), dtype=float)
    shape = (ncomp,) + X.shape if ncomp > 1 else X.shape
    return np.broadcast_to(v, shape)


def _edge_points(x0, y0, hx, hy, m):
    """Edge Gauss points of local edges E1..E4 for every cell.

    Returns X, Y of shape (ncells, 4, m), ds weights (4, m) and the edge
    parameter xi in [-1, 1] (increasing coordinate, shape (m,)).
    """
    r = gauss_1d(m)
    t = 0.5 * (1.0 + r.nodes)
    x0 = np.asarray(x0, dtype=float)[:, None]
    y0 = np.asarray(y0, dtype=float)[:, None]
    X = np.stack([x0 + hx * t, np.broadcast_to(x0 + hx, (len(x0), m)), x0 + hx * t,
                  np.broadcast_to(x0, (len(x0), m))], axis=1)
    Y = np.stack([np.broadcast_to(y0, (len(y0), m)), y0 + hy * t,
                  np.broadcast_to(y0 + hy, (len(y0), m)), y0 + hy * t], axis=1)
    lengths = np.array([hx, hy, hx, hy])
    ds = 0.5 * lengths[:, None] * r.weights[None, :]
    return X, Y, ds, r.nodes


def _vertex_points(x0, y0, hx, hy):
    x0 = np.asarray(x0, dtype=float)[:, None]
    y0 = np.asarray(y0, dtype=float)[:, None]
    X = x0 + hx * np.array([0.0, 1.0, 1.0, 0.0])
    Y = y0 + hy * np.array([0.0, 0.0, 1.0, 1.0])
    return X, Y


def dof_values(family: str | ElementFamily, origins: np.ndarray, hx: float, hy: float,
               f: Callable, grad: Callable | None = None, m: int = DOF_GENERAL_ORDER) -> np.ndarray:
    """Apply the DoF functionals of ``family`` to ``f`` on many cells.

    ``origins`` holds the lower-left corners, shape (ncells, 2).  Scalar
    ``f(x, y)`` returns an array shaped like ``x``; vector ``f`` returns a
    leading axis of length 2, as does ``grad``.  Edge and cell integrals use
    ``m``-point Gauss rules.  Returns an array of shape (ncells, ndofs).
    """
    fam = get_family(family)
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    x0, y0 = origins[:, 0], origins[:, 1]

    if fam.tag in ("pressure_p0", "local_p1"):
        xh, yh, w = reference_tensor_rule(m)
        X = x0[:, None] + 0.5 * hx * (1 + xh)
        Y = y0[:, None] + 0.5 * hy * (1 + yh)
        q = _call(f, X, Y, 1) * (0.25 * hx * hy * w)
        if fam.tag == "pressure_p0":
            return q.sum(axis=1, keepdims=True)
        return np.stack([q.sum(axis=1), q @ xh, q @ yh], axis=1)

    if fam.tag == "adini":
        if grad is None:
            raise ValueError("adini DoFs need the gradient of f")
        XV, YV = _vertex_points(x0, y0, hx, hy)
        g = _call(grad, XV, YV, 2)
        return np.concatenate([_call(f, XV, YV, 1), g[0], g[1]], axis=1)

    XE, YE, ds, xi = _edge_points(x0, y0, hx, hy, m)
    normals = LOCAL_NORMALS[None, :, :, None]
    if fam.tag == "plate12":
        if grad is None:
            raise ValueError("plate12 DoFs need the gradient of f")
        XV, YV = _vertex_points(x0, y0, hx, hy)
        vals = _call(f, XV, YV, 1)
        means = (_call(f, XE, YE, 1) * ds).sum(axis=-1)
        g = _call(grad, XE, YE, 2)
        dn = g[0] * normals[:, :, 0] + g[1] * normals[:, :, 1]
        return np.concatenate([vals, means, (dn * ds).sum(axis=-1)], axis=1)

    # velocity12
    v = _call(f, XE, YE, 2)
    tangents = LOCAL_TANGENTS[None, :, :, None]
    vn = v[0] * normals[:, :, 0] + v[1] * normals[:, :, 1]
    vt = v[0] * tangents[:, :, 0] + v[1] * tangents[:, :, 1]
    return np.concatenate([
        (vn * ds).sum(axis=-1),
        (vn * ds * xi).sum(axis=-1),
        (vt * ds).sum(axis=-1),
    ], axis=1)


def local_dofs(mesh: Mesh, family: str, f: Callable, grad: Callable | None = None,
               m: int = DOF_GENERAL_ORDER) -> np.ndarray:
    """DoFs of ``f`` on every cell of ``mesh``, shape (n_cells, ndofs)."""
    return dof_values(family, mesh.cell_origins, mesh.hx, mesh.hy, f, grad, m)


def apply_dofs(mesh: Mesh, cell: int, family: str, f: Callable, grad: Callable | None = None,
               m: int = DOF_GENERAL_ORDER) -> np.ndarray:
    cell = mesh.check_cell(cell)
    return dof_values(family, mesh.cell_origins[cell], mesh.hx, mesh.hy, f, grad, m)[0]


# ---------------------------------------------------------------------------
# nodal bases


def polynomial_functions(coeffs: np.ndarray, origin, hx: float, hy: float):
    """Wrap a polynomial (in scaled coordinates of the cell at ``origin``) as
    physical callables ``(f, grad)``."""
    x0, y0 = float(origin[0]), float(origin[1])

    def to_hat(x, y):
        return (2 * (np.asarray(x) - x0) - hx) / hx, (2 * (np.asarray(y) - y0) - hy) / hy

    def f(x, y):
        return poly_eval(coeffs, *to_hat(x, y))

    def grad(x, y):
        xh, yh = to_hat(x, y)
        return np.stack([(2 / hx) * poly_eval(poly_diff(coeffs, 1, 0), xh, yh),
                         (2 / hy) * poly_eval(poly_diff(coeffs, 0, 1), xh, yh)])

    return f, grad


def _dof_matrix(fam: ElementFamily, origin, hx: float, hy: float, m: int = DOF_EXACT_ORDER) -> np.ndarray:
    gens = generators(fam, hx, hy)
    M = np.empty((fam.ndofs, len(gens)))
    for j, g in enumerate(gens):
        f, grad = polynomial_functions(g, origin, hx, hy)
        M[:, j] = dof_values(fam, np.asarray(origin, dtype=float), hx, hy, f, grad, m)[0]
    return M


def dof_matrix(mesh: Mesh, cell: int, family: str) -> np.ndarray:
    """``M[i, j] = tau_i(g_j)`` for the shape-space generators ``g_j``."""
    cell = mesh.check_cell(cell)
    return _dof_matrix(get_family(family), mesh.cell_origins[cell], mesh.hx, mesh.hy)


@dataclass(frozen=True, eq=False)
class ElementBasis:
    family: ElementFamily
    hx: float
    hy: float
    coeffs: np.ndarray  # (ndofs, [2,] 5, 5): coefficients of each nodal function
    dof_matrix: np.ndarray
    condition: float
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def ndofs(self) -> int:
        return self.family.ndofs

    def at(self, origin) -> "ElementBasis":
        """Same basis placed on the cell with lower-left corner ``origin``."""
        return ElementBasis(self.family, self.hx, self.hy, self.coeffs, self.dof_matrix,
                            self.condition, (float(origin[0]), float(origin[1])))

    def derivative_coeffs(self, dx: int, dy: int) -> np.ndarray:
        """Coefficients of the physical derivative d^(dx+dy) / dx^dx dy^dy."""
        scale = (2.0 / self.hx) ** dx * (2.0 / self.hy) ** dy
        return scale * poly_diff(self.coeffs, dx, dy)

    def eval_hat(self, xh, yh, deriv: tuple[int, int] = (0, 0)) -> np.ndarray:
        """Physical derivatives of all basis functions at scaled points."""
        dx, dy = deriv
        if dx < 0 or dy < 0 or dx + dy > 2:
            raise ValueError(f"unsupported derivative order {deriv}")
        return poly_eval(self.derivative_coeffs(dx, dy), xh, yh)

    def to_hat(self, x, y):
        x0, y0 = self.origin
        return (2 * (np.asarray(x, float) - x0) - self.hx) / self.hx, \
               (2 * (np.asarray(y, float) - y0) - self.hy) / self.hy


@lru_cache(maxsize=64)
def reference_basis(family: str, hx: float, hy: float) -> ElementBasis:
    """Nodal basis on a cell of size hx by hy (shared by all congruent cells)."""
    fam = get_family(family)
    origin = (-0.5 * hx, -0.5 * hy)
    M = _dof_matrix(fam, origin, hx, hy)
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ElementDefinitionError(f"{fam.tag}: DoF matrix is singular (condition {cond:.3e})")
    C = np.linalg.solve(M, np.eye(fam.ndofs))
    gens = generators(fam, hx, hy)
    coeffs = np.tensordot(C.T, gens, axes=1)
    coeffs.setflags(write=False)
    M.setflags(write=False)
    return ElementBasis(fam, hx, hy, coeffs, M, cond)


def nodal_basis(mesh: Mesh, cell: int, family: str) -> ElementBasis:
    cell = mesh.check_cell(cell)
    return reference_basis(get_family(family).tag, mesh.hx, mesh.hy).at(mesh.cell_origins[cell])


def eval_basis(basis: ElementBasis, point, deriv: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Derivative ``deriv`` of every nodal function at a physical point.

    Returns shape (ndofs,) for scalar and (ndofs, 2) for vector families.
    """
    if sum(deriv) > 2:
        raise ValueError(f"unsupported derivative order {deriv}")
    xh, yh = basis.to_hat(point[0], point[1])
    return basis.eval_hat(xh, yh, deriv)


def basis_dofs(basis: ElementBasis, m: int = DOF_EXACT_ORDER) -> np.ndarray:
    """Matrix ``T[i, j] = tau_i(phi_j)``, recomputed from the stored polynomials."""
    T = np.empty((basis.ndofs, basis.ndofs))
    for j in range(basis.ndofs):
        f, grad = polynomial_functions(basis.coeffs[j], basis.origin, basis.hx, basis.hy)
        T[:, j] = dof_values(basis.family, np.asarray(basis.origin), basis.hx, basis.hy, f, grad, m)[0]
    return T
