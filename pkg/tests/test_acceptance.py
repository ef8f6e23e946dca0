"""Acceptance suite: each test checks one criterion and logs a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also collected into the "acceptance criteria" section of the summary.
"""

import math

import numpy as np
import pytest

from rectcomplex.analysis import (
    broken_error,
    commutativity_defect,
    curl_commutativity_defect,
    curl_operator,
    divergence_residual,
    p1_error,
    postprocess_pressure,
    pressure_error,
    smooth_battery,
    verify_complex,
)
from rectcomplex.assembly import solve_biharmonic, solve_stokes
from rectcomplex.cases import benchmark_biharmonic, benchmark_stokes
from rectcomplex.elements import basis_dofs, generators, nodal_basis, poly_diff, poly_eval
from rectcomplex.mesh import Domain, build_uniform_mesh
from rectcomplex.spaces import build_dofmap, interpolate_scalar

pytestmark = pytest.mark.slow

LEVELS = [4, 8, 16, 32, 64]
DOMAIN = Domain()

REF_PLATE = {
    "H2": [1.209e0, 3.528e-1, 8.880e-2, 2.140e-2, 5.198e-3],
    "H1": [7.041e-2, 9.173e-3, 1.063e-3, 1.242e-4, 1.487e-5],
    "L2": [9.209e-3, 4.139e-4, 2.060e-5, 1.202e-6, 7.428e-8],
}
REF_ADINI = {
    "H2": [1.112e0, 3.113e-1, 7.681e-2, 1.901e-2, 4.738e-3],
    "H1": [1.270e-1, 3.060e-2, 7.642e-3, 1.915e-3, 4.791e-4],
    "L2": [2.195e-2, 6.283e-3, 1.636e-3, 4.137e-4, 1.037e-4],
}
REF_STOKES = {
    "u_H1": [2.473e0, 7.505e-1, 1.968e-1, 4.846e-2, 1.188e-2],
    "u_L2": [1.100e-1, 1.657e-2, 2.305e-3, 2.399e-4, 2.878e-5],
    "p_L2": [6.569e-1, 3.485e-1, 1.772e-1, 8.932e-2, 4.477e-2],
    "pstar_L2": [1.045e0, 3.187e-1, 6.173e-2, 9.938e-3, 1.869e-3],
}


def _order(errs):
    return math.log(errs[-2] / errs[-1]) / math.log(2.0)


def _compare(table, computed, tol, overrides=()):
    """Relative deviations beyond tolerance, as readable strings."""
    bad = []
    for name, refs in table.items():
        for k, (ref, got) in enumerate(zip(refs, computed[name])):
            t = dict(overrides).get((name, LEVELS[k]), tol)
            dev = abs(got - ref) / ref
            if dev > t:
                bad.append(f"{name} n={LEVELS[k]}: {got:.4e} vs {ref:.3e} ({100 * dev:.1f}%)")
    return bad


@pytest.fixture(scope="module")
def plate_sweep():
    case = benchmark_biharmonic()
    out = {k: [] for k in REF_PLATE}
    for n in LEVELS:
        mesh = build_uniform_mesh(DOMAIN, n, n)
        u, _ = solve_biharmonic(mesh, "plate12", case)
        for name, m in zip(REF_PLATE, (2, 1, 0)):
            out[name].append(broken_error(mesh, u, case, m))
    return out


@pytest.fixture(scope="module")
def adini_sweep():
    case = benchmark_biharmonic()
    out = {k: [] for k in REF_ADINI}
    for n in LEVELS:
        mesh = build_uniform_mesh(DOMAIN, n, n)
        u, _ = solve_biharmonic(mesh, "adini", case)
        for name, m in zip(REF_ADINI, (2, 1, 0)):
            out[name].append(broken_error(mesh, u, case, m))
    return out


@pytest.fixture(scope="module")
def stokes_sweep():
    case = benchmark_stokes()
    out = {k: [] for k in REF_STOKES}
    out["div_ratio"] = []
    for n in LEVELS:
        mesh = build_uniform_mesh(DOMAIN, n, n)
        u, p, _ = solve_stokes(mesh, case)
        h1 = broken_error(mesh, u, case, 1)
        out["u_H1"].append(h1)
        out["u_L2"].append(broken_error(mesh, u, case, 0))
        out["p_L2"].append(pressure_error(mesh, p, case.p))
        out["pstar_L2"].append(p1_error(postprocess_pressure(mesh, u, p, case.f), case.p))
        out["div_ratio"].append(divergence_residual(mesh, u) / broken_error(mesh, u, None, 1))
    return out


def test_criterion_1_plate_table(plate_sweep, record):
    bad = _compare(REF_PLATE, plate_sweep, 0.05, {("L2", 64): 0.10})
    orders = [_order(plate_sweep[k]) for k in REF_PLATE]
    bad += [f"{k} order {o:.2f} vs {t}" for k, o, t in zip(REF_PLATE, orders, (2, 3, 4)) if abs(o - t) > 0.15]
    record("1 plate12 biharmonic table", not bad,
           "; ".join(bad) or "orders " + ", ".join(f"{o:.2f}" for o in orders))
    assert not bad, bad


def test_criterion_2_adini_table(adini_sweep, record):
    bad = _compare(REF_ADINI, adini_sweep, 0.05)
    orders = [_order(adini_sweep[k]) for k in REF_ADINI]
    bad += [f"{k} order {o:.2f} vs 2" for k, o in zip(REF_ADINI, orders) if abs(o - 2) > 0.1]
    record("2 Adini biharmonic table", not bad,
           "; ".join(bad) or "orders " + ", ".join(f"{o:.2f}" for o in orders))
    assert not bad, bad


def test_criterion_3_stokes_table(stokes_sweep, record):
    bad = _compare(REF_STOKES, stokes_sweep, 0.05)
    orders = [_order(stokes_sweep[k]) for k in ("u_H1", "u_L2", "p_L2")]
    bad += [f"{k} order {o:.2f} vs {t}" for k, o, t in zip(("u_H1", "u_L2", "p_L2"), orders, (2, 3, 1))
            if abs(o - t) > 0.15]
    record("3 Stokes table", not bad,
           "; ".join(bad) or "orders " + ", ".join(f"{o:.2f}" for o in orders))
    assert not bad, bad


def test_stokes_velocity_l2_consistent_with_reference_orders(stokes_sweep):
    """The reference velocity L2 orders around n=16 (3.03, 3.08) pin that entry from its neighbours."""
    refs = REF_STOKES["u_L2"]
    from_coarse = refs[1] / 2**3.03
    from_fine = refs[3] * 2**3.08
    assert from_coarse == pytest.approx(from_fine, rel=0.01)
    assert stokes_sweep["u_L2"][2] == pytest.approx(from_coarse, rel=0.01)


def test_criterion_4_exactness(record):
    bad = []
    for n in (2, 4, 8, 16):
        r = verify_complex(build_uniform_mesh(DOMAIN, n, n))
        ok = r.dim_identity and r.div_rank == n * n - 1 and r.div_nullity == r.dim_w
        if not ok:
            bad.append(f"n={n}: dims {r.dim_w},{r.dim_v},{r.dim_p} rank {r.div_rank}")
    record("4 exactness of the discrete complex", not bad, "; ".join(bad) or "n = 2, 4, 8, 16")
    assert not bad, bad


def test_criterion_5_commutativity(record):
    worst_div, worst_curl, nfields = 0.0, 0.0, 0
    for domain, n in ((DOMAIN, 4), (DOMAIN, 8), (DOMAIN, 16), (Domain(0, 1, 0, 3), 5)):
        mesh = build_uniform_mesh(domain, n, n)
        dv = build_dofmap(mesh, "V_h")
        battery = smooth_battery(mesh)
        nfields = len(battery)
        for v, div_v in battery.values():
            worst_div = max(worst_div, commutativity_defect(mesh, v, div_v, dv))
        dw = build_dofmap(mesh, "W_h")
        C, _ = curl_operator(dw, dv)
        d = domain
        b = lambda x, y: (x - d.x_min) * (d.x_max - x) * (y - d.y_min) * (d.y_max - y)  # noqa: E731
        phi = lambda x, y: b(x, y) ** 2 * np.sin(x + y)  # noqa: E731

        def grad_phi(x, y):
            bx = ((d.x_max - x) - (x - d.x_min)) * (y - d.y_min) * (d.y_max - y)
            by = ((d.y_max - y) - (y - d.y_min)) * (x - d.x_min) * (d.x_max - x)
            s, c = np.sin(x + y), np.cos(x + y)
            return np.stack([2 * b(x, y) * bx * s + b(x, y) ** 2 * c, 2 * b(x, y) * by * s + b(x, y) ** 2 * c])

        worst_curl = max(worst_curl, curl_commutativity_defect(mesh, phi, grad_phi, dw, dv, C))
    ok = nfields >= 5 and worst_div <= 1e-10 and worst_curl <= 1e-10
    record("5 commutativity", ok, f"{nfields} fields, div defect {worst_div:.1e}, curl defect {worst_curl:.1e}")
    assert ok


def test_criterion_6_divergence_free(stokes_sweep, record):
    worst = max(stokes_sweep["div_ratio"])
    record("6 divergence-free Stokes velocity", worst <= 1e-10, f"max |div u_h| / |u_h|_1 = {worst:.1e}")
    assert worst <= 1e-10


def _simpson_residual(rng, basis):
    """Worst violation of the Simpson identity on the horizontal edges for one random w in W_K."""
    w = np.tensordot(rng.standard_normal(12), generators("plate12", basis.hx, basis.hy), axes=1)
    wy = (2 / basis.hy) * poly_diff(w, 0, 1)
    wxy = (2 / basis.hx) * poly_diff(wy, 1, 0)
    t, wt = np.polynomial.legendre.leggauss(8)
    worst = 0.0
    for yh in (-1.0, 1.0):
        vals = poly_eval(wy, t, yh)
        mean = 0.5 * wt @ vals
        lhs = 0.5 * wt @ ((vals - mean) * t)  # (1/hx) * (hx/2) * sum
        lhs_plain = 0.5 * wt @ (vals * t)
        rhs = (poly_eval(wy, 1.0, yh) - poly_eval(wy, -1.0, yh)) / 6
        rhs_int = (basis.hx / 2) * (wt @ poly_eval(wxy, t, yh)) / 6
        scale = max(1.0, np.abs(vals).max())
        worst = max(worst, abs(lhs - rhs) / scale, abs(lhs_plain - rhs) / scale, abs(rhs_int - rhs) / scale)
    return worst


def test_criterion_7_unisolvency(record):
    kron = 0.0
    ref = build_uniform_mesh(Domain(-1, 1, -1, 1), 1, 1)
    cells = [(ref, 0)] + [(build_uniform_mesh(d, n, n), c) for d, n, c in
                          ((DOMAIN, 8, 11), (DOMAIN, 64, 1000), (Domain(0, 1, 0, 3), 5, 7))]
    for family in ("plate12", "velocity12", "adini"):
        for mesh, cell in cells:
            T = basis_dofs(nodal_basis(mesh, cell, family))
            kron = max(kron, float(np.abs(T - np.eye(12)).max()))
    rng = np.random.default_rng(2024)
    simpson = max(_simpson_residual(rng, nodal_basis(mesh, cell, "plate12"))
                  for mesh, cell in cells for _ in range(50))
    ok = kron <= 1e-10 and simpson <= 1e-12
    record("7 unisolvency and Simpson identity", ok, f"Kronecker {kron:.1e}, Simpson {simpson:.1e}")
    assert ok


def test_criterion_8_interpolation_orders(record):
    case = benchmark_biharmonic()
    errs = {1: [], 2: []}
    for n in LEVELS:
        mesh = build_uniform_mesh(DOMAIN, n, n)
        Ih = interpolate_scalar(mesh, build_dofmap(mesh, "W_h"), case.value, case.gradient)
        for j in errs:
            errs[j].append(broken_error(mesh, Ih, case, j))
    slopes = {j: _order(e) for j, e in errs.items()}
    ok = all(slopes[j] >= (4 - j) - 0.15 for j in slopes)
    record("8 interpolation orders", ok, ", ".join(f"j={j}: {s:.2f}" for j, s in slopes.items()))
    assert ok
