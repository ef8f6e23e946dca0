import math

import numpy as np
import pytest

from rectcomplex.analysis import (
    ErrorReport,
    P1Field,
    broken_error,
    broken_error_local,
    cell_divergence,
    cell_divergence_local,
    commutativity_defect,
    divergence_residual,
    observed_orders,
    p1_error,
    postprocess_pressure,
    pressure_error,
    smooth_battery,
    verify_complex,
)
from rectcomplex.assembly import solve_biharmonic, solve_stokes
from rectcomplex.cases import X, Y, biharmonic_case, benchmark_biharmonic, benchmark_stokes
from rectcomplex.elements import local_dofs
from rectcomplex.mesh import Domain, build_uniform_mesh
from rectcomplex.quadrature import cell_points
from rectcomplex.spaces import FEField, build_dofmap, interpolate_scalar, interpolate_velocity, project_pressure

DOMAIN = Domain()


def _fd(fn, x, y, axis, h=1e-5):
    dx, dy = (h, 0.0) if axis == 0 else (0.0, h)
    return (fn(x + dx, y + dy) - fn(x - dx, y - dy)) / (2 * h)


@pytest.mark.parametrize("which", ["biharmonic", "stokes"])
def test_derivative_oracles_match_finite_differences(which):
    case = benchmark_biharmonic() if which == "biharmonic" else benchmark_stokes()
    rng = np.random.default_rng(7)
    pts = rng.uniform([0.05, 0.05], [1.95, 0.95], (20, 2))
    ncomp = 2 if case.is_vector else 1
    top = 4 if which == "biharmonic" else 3
    for c in range(ncomp):
        for order in range(top):
            for k in range(order + 1):
                d = (order - k, k)
                base = case.derivative(*d, component=c)
                for axis in (0, 1):
                    up = case.derivative(d[0] + (axis == 0), d[1] + (axis == 1), component=c)
                    exact = up(pts[:, 0], pts[:, 1])
                    approx = _fd(base, pts[:, 0], pts[:, 1], axis)
                    scale = max(1.0, np.abs(exact).max())
                    assert np.abs(exact - approx).max() <= 1e-6 * scale


def test_biharmonic_load_is_bilaplacian():
    case = benchmark_biharmonic()
    rng = np.random.default_rng(8)
    x, y = rng.uniform([0, 0], [2, 1], (20, 2)).T
    d = case.derivative
    lap2 = d(4, 0)(x, y) + 2 * d(2, 2)(x, y) + d(0, 4)(x, y)
    np.testing.assert_allclose(case.f(x, y), lap2, rtol=1e-12, atol=1e-9)


def test_stokes_load_consistent():
    case = benchmark_stokes()
    rng = np.random.default_rng(9)
    x, y = rng.uniform([0, 0], [2, 1], (20, 2)).T
    px = 2 * np.pi * np.sin(2 * np.pi * y) * -np.cos(2 * np.pi * x)
    py = 2 * np.pi * np.sin(2 * np.pi * x) * -np.cos(2 * np.pi * y)
    for c, pd in enumerate((px, py)):
        lap = case.derivative(2, 0, c)(x, y) + case.derivative(0, 2, c)(x, y)
        np.testing.assert_allclose(case.f(x, y)[c], -lap + pd, rtol=1e-11, atol=1e-9)
    div = case.derivative(1, 0, 0)(x, y) + case.derivative(0, 1, 1)(x, y)
    assert np.abs(div).max() < 1e-10


def test_pressure_missing_on_scalar_case():
    with pytest.raises(ValueError):
        benchmark_biharmonic().p(0.0, 0.0)


def test_zero_field_zero_error():
    mesh = build_uniform_mesh(DOMAIN, 3, 3)
    dm = build_dofmap(mesh, "W_h")
    zero = FEField(dm, np.zeros(dm.ndofs))
    for m in (0, 1, 2):
        assert broken_error(mesh, zero, None, m) == 0.0


def test_error_of_polynomial_against_itself():
    mesh = build_uniform_mesh(DOMAIN, 4, 2)
    case = biharmonic_case(X**3 + X * Y**2 - 3 * Y)
    local = local_dofs(mesh, "adini", case.value, case.gradient)
    for m in (0, 1, 2):
        assert broken_error_local(mesh, "adini", local, case, m) <= 1e-10


def test_error_order_validated():
    mesh = build_uniform_mesh(DOMAIN, 2, 2)
    with pytest.raises(ValueError):
        broken_error_local(mesh, "plate12", np.zeros((4, 12)), None, 3)


def test_broken_l2_norm_of_known_field():
    # P_h field with value 1 on every cell: L2 norm sqrt(area) against zero
    mesh = build_uniform_mesh(DOMAIN, 3, 3)
    p = FEField(build_dofmap(mesh, "P_h"), np.ones(9))
    assert pressure_error(mesh, p, lambda x, y: 0 * x) == pytest.approx(math.sqrt(2.0), rel=1e-13)


def test_divergence_residual_values():
    mesh = build_uniform_mesh(DOMAIN, 4, 4)
    dv = build_dofmap(mesh, "V_h")
    v, div_v = smooth_battery(mesh)["curl_bubble2"]
    assert divergence_residual(mesh, interpolate_velocity(mesh, dv, v)) <= 1e-12
    local = local_dofs(mesh, "velocity12", lambda x, y: np.stack([x, 0 * y]), None)
    np.testing.assert_allclose(cell_divergence_local(mesh, local), 1.0, atol=1e-12)


def test_postprocessed_means_equal_pressure():
    mesh = build_uniform_mesh(DOMAIN, 4, 4)
    case = benchmark_stokes()
    u, p, _ = solve_stokes(mesh, case)
    pstar = postprocess_pressure(mesh, u, p, case.f)
    X_, Y_, w, _, _ = cell_points(mesh, 6)
    means = (pstar.values(X_, Y_) * w).sum(axis=1) / mesh.cell_area
    np.testing.assert_allclose(means, p.coeffs, atol=1e-12)


def test_postprocessing_constant_load_zero_velocity():
    mesh = build_uniform_mesh(DOMAIN, 3, 3)
    dv, dp = build_dofmap(mesh, "V_h"), build_dofmap(mesh, "P_h")
    u = FEField(dv, np.zeros(dv.ndofs))
    p = FEField(dp, np.linspace(-1, 1, 9))
    pstar = postprocess_pressure(mesh, u, p, lambda x, y: np.stack([2.0 + 0 * x, -0.5 + 0 * y]))
    np.testing.assert_allclose(pstar.gradients, np.tile([2.0, -0.5], (9, 1)), atol=1e-13)
    pz = postprocess_pressure(mesh, u, p, lambda x, y: np.zeros((2,) + np.shape(x)))
    assert not pz.gradients.any()
    np.testing.assert_array_equal(pz.means, p.coeffs)


def test_p1_error_of_exact_linear():
    mesh = build_uniform_mesh(DOMAIN, 2, 2)
    q = lambda x, y: 3 * x - y - (3.0 - 0.5)  # zero mean on [0,2]x[0,1]
    c = mesh.cell_centers
    f = P1Field(mesh, q(c[:, 0], c[:, 1]), np.tile([3.0, -1.0], (4, 1)))
    assert p1_error(f, q) <= 1e-13


def test_observed_orders():
    hs = [1 / 4, 1 / 8, 1 / 16]
    assert observed_orders(hs, [1.0, 0.25, 0.0625]) == [None, pytest.approx(2.0), pytest.approx(2.0)]
    non_dyadic = observed_orders([0.3, 0.1], [0.09, 0.01])
    assert non_dyadic[1] == pytest.approx(2.0)
    assert math.isnan(observed_orders([1, 0.5], [1.0, 0.0])[1])


def test_error_report_rows():
    r = ErrorReport(["a", "b"])
    r.add(4, 0.5, 10, {"a": 1.0, "b": 2.0}, extra=0.0)
    r.add(8, 0.25, 40, {"a": 0.5, "b": 0.5}, extra=1.0)
    assert r.orders("a") == [None, pytest.approx(1.0)]
    assert r.orders("b")[1] == pytest.approx(2.0)
    assert r.row(1) == {"a": 0.5, "b": 0.5}
    assert r.extras["extra"] == [0.0, 1.0]


@pytest.mark.parametrize("n,dims", [(2, (9, 12, 4)), (4, (57, 72, 16))])
def test_verify_complex_small(n, dims):
    r = verify_complex(build_uniform_mesh(DOMAIN, n, n))
    assert (r.dim_w, r.dim_v, r.dim_p) == dims
    assert r.dim_identity and r.div_rank == n * n - 1 and r.div_nullity == r.dim_w
    assert r.curl_rank == r.dim_w and r.curl_min_singular_value > 1e-8
    assert r.passed, r.checks


def test_verify_complex_methods_agree():
    mesh = build_uniform_mesh(DOMAIN, 4, 4)
    a, b = verify_complex(mesh, "dense"), verify_complex(mesh, "factorization")
    assert (a.div_rank, a.curl_rank, a.div_nullity) == (b.div_rank, b.curl_rank, b.div_nullity)
    assert a.passed and b.passed


def test_verify_complex_unknown_method():
    with pytest.raises(ValueError):
        verify_complex(build_uniform_mesh(DOMAIN, 2, 2), "qr")


def test_verify_complex_rectangular_cells():
    r = verify_complex(build_uniform_mesh(Domain(0, 1, 0, 3), 3, 5))
    assert r.passed, r.checks


def test_battery_divergences_match_sympy():
    mesh = build_uniform_mesh(DOMAIN, 2, 2)
    battery = smooth_battery(mesh)
    assert len(battery) >= 5
    x0, y0 = 0.7, 0.3
    h = 1e-6
    for v, div_v in battery.values():
        fd = ((v(x0 + h, y0)[0] - v(x0 - h, y0)[0]) + (v(x0, y0 + h)[1] - v(x0, y0 - h)[1])) / (2 * h)
        assert float(div_v(x0, y0)) == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_commutativity_for_non_solenoidal_field():
    mesh = build_uniform_mesh(DOMAIN, 5, 3)
    v, div_v = smooth_battery(mesh)["bubble_trig"]
    assert commutativity_defect(mesh, v, div_v) <= 1e-10
    pv = interpolate_velocity(mesh, build_dofmap(mesh, "V_h"), v)
    np.testing.assert_allclose(cell_divergence(pv), project_pressure(mesh, div_v).coeffs, atol=1e-10)


def test_interpolation_error_small_for_smooth_field():
    mesh = build_uniform_mesh(DOMAIN, 8, 8)
    case = benchmark_biharmonic()
    Ih = interpolate_scalar(mesh, build_dofmap(mesh, "W_h"), case.value, case.gradient)
    uh, _ = solve_biharmonic(mesh, "plate12", case)
    # interpolation and Galerkin errors are of comparable size
    ratio = broken_error(mesh, Ih, case, 2) / broken_error(mesh, uh, case, 2)
    assert 0.2 < ratio < 5


@pytest.mark.parametrize("n,h2,h1", [(8, 0.3528, None), (16, None, 1.063e-3)])
def test_plate_spot_values(n, h2, h1):
    mesh = build_uniform_mesh(DOMAIN, n, n)
    case = benchmark_biharmonic()
    u, _ = solve_biharmonic(mesh, "plate12", case)
    if h2:
        assert broken_error(mesh, u, case, 2) == pytest.approx(h2, rel=0.05)
    if h1:
        assert broken_error(mesh, u, case, 1) == pytest.approx(h1, rel=0.05)


def test_adini_spot_value():
    mesh = build_uniform_mesh(DOMAIN, 8, 8)
    case = benchmark_biharmonic()
    u, _ = solve_biharmonic(mesh, "adini", case)
    assert broken_error(mesh, u, case, 2) == pytest.approx(0.3113, rel=0.05)


def test_stokes_spot_values_n16():
    mesh = build_uniform_mesh(DOMAIN, 16, 16)
    case = benchmark_stokes()
    u, p, _ = solve_stokes(mesh, case)
    assert broken_error(mesh, u, case, 1) == pytest.approx(0.1968, rel=0.05)
    assert pressure_error(mesh, p, case.p) == pytest.approx(0.1772, rel=0.05)
    pstar = postprocess_pressure(mesh, u, p, case.f)
    assert p1_error(pstar, case.p) == pytest.approx(6.173e-2, rel=0.05)

