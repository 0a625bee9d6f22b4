import math

import numpy as np
import pytest

from polyelliptic.atlas import TWO_PI, sector_partition
from polyelliptic.errors import ConvergenceFailure
from polyelliptic.geometry import build_polygon
from polyelliptic.metric import stackel_factors
from polyelliptic.separated import (AngularProblem, angular_spectrum, helmholtz_residual,
                                    in_piece_grid, mathieu_characteristic,
                                    mathieu_periodic_spectrum, modified_mathieu, radial_defect,
                                    radial_solution)


@pytest.fixture(scope="module")
def degenerate_table():
    return sector_partition(build_polygon((1.0, 1.0, 1e-6)))


def test_mathieu_q0():
    for n in range(6):
        assert mathieu_characteristic(0.0, n, "even") == float(n * n)
        if n:
            assert mathieu_characteristic(0.0, n, "odd") == float(n * n)


def test_mathieu_reference_values():
    # standard tabulated values at q = 1
    assert mathieu_characteristic(1.0, 0) == pytest.approx(-0.4551386041, abs=1e-9)
    assert mathieu_characteristic(1.0, 1) == pytest.approx(1.8591080725, abs=1e-9)
    assert mathieu_characteristic(1.0, 1, "odd") == pytest.approx(-0.1102488170, abs=1e-9)
    assert mathieu_characteristic(1.0, 2, "odd") == pytest.approx(3.9170247729, abs=1e-9)


def test_mathieu_truncation_doubling():
    for n in range(6):
        for parity in ("even", "odd"):
            if parity == "odd" and n == 0:
                continue
            a = mathieu_characteristic(5.0, n, parity, size=20)
            b = mathieu_characteristic(5.0, n, parity, size=40)
            assert abs(a - b) < 1e-10


def test_mathieu_interlacing():
    a = [mathieu_characteristic(1.0, n) for n in range(5)]
    b = [mathieu_characteristic(1.0, n, "odd") for n in range(1, 6)]
    seq = [a[0], b[0], a[1], b[1], a[2], b[2], a[3], b[3], a[4], b[4]]
    assert all(x < y for x, y in zip(seq, seq[1:]))


@pytest.mark.parametrize("q", [0.5, 1.0, 5.0])
def test_mathieu_limit(degenerate_table, q):
    lam = np.array([e.lam for e in angular_spectrum(degenerate_table, 2 * math.sqrt(q), 5)])
    ref = mathieu_periodic_spectrum(q, 5) + 2 * q
    assert np.max(np.abs(lam - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-5


def test_k0_constant_mode(equi_table):
    e = angular_spectrum(equi_table, 0.0, 3)
    assert abs(e[0].lam) < 1e-9
    assert np.ptp(e[0].psi) < 1e-8


def test_eigenpair_properties(ref_table):
    pairs = angular_spectrum(ref_table, 1.0, 6)
    lam = [p.lam for p in pairs]
    assert all(x <= y for x, y in zip(lam, lam[1:]))
    nodes = pairs[0].theta
    w = np.diff(np.append(nodes, TWO_PI))
    mass = 0.5 * (w + np.roll(w, 1))
    gram = np.array([[np.sum(mass * p.psi * q.psi) for q in pairs] for p in pairs])
    assert np.max(np.abs(gram - np.eye(len(pairs)))) < 1e-8
    # sector boundaries are grid nodes
    assert np.all(np.min(np.abs(nodes[None, :] - ref_table.boundaries[:-1, None]), axis=1) == 0)


def test_equilateral_symmetry(equi_table):
    prob = AngularProblem(equi_table)
    th = np.linspace(0, TWO_PI, 1001)
    assert np.max(np.abs(prob.h2(th + TWO_PI / 3) - prob.h2(th))) < 1e-12
    lam = [p.lam for p in angular_spectrum(equi_table, 1.0, 5)]
    assert abs(lam[1] - lam[2]) < 1e-8 and abs(lam[3] - lam[4]) < 1e-8


def test_coefficients_come_from_stackel_factors(ref_table):
    prob = AngularProblem(ref_table)
    rng = np.random.default_rng(2)
    for i, sec in enumerate(prob.pieces):
        fac = stackel_factors(ref_table, sec, check=False)
        th = rng.uniform(ref_table.sectors[i].theta_lo, ref_table.sectors[i].theta_hi, 50)
        assert np.all(fac.g1(th) == 1.0)
        assert np.allclose(prob.h2_in(i, th), fac.h2(th), rtol=1e-14, atol=1e-14)


def test_convergence_failure(ref_table):
    with pytest.raises(ConvergenceFailure):
        angular_spectrum(ref_table, 1.0, 3, grid=64, rtol=1e-15, max_grid=256)


def test_determinism(ref_table):
    a = angular_spectrum(ref_table, 1.0, 3)
    b = angular_spectrum(ref_table, 1.0, 3)
    assert [x.lam for x in a] == [x.lam for x in b]
    assert all(np.array_equal(x.psi, y.psi) for x, y in zip(a, b))


def test_radial_trivial(ref_table):
    sol = radial_solution(ref_table, 0.0, 0.0, "unit")
    assert np.all(sol.psi == 1.0)
    sol = radial_solution(ref_table, 1.0, 2.0, "dirichlet")
    assert sol.psi[0] == 0.0 and sol.psi[1] > 0


@pytest.mark.parametrize("n", range(5))
def test_radial_vs_modified_mathieu(degenerate_table, n):
    q, k = 1.0, 2.0
    lam = angular_spectrum(degenerate_table, k, 5)[n].lam
    sol = radial_solution(degenerate_table, k, lam, mu_max=3.0, steps=3000, sector="A2")
    sec = degenerate_table.piece("A2")
    ae = degenerate_table.scale * np.cosh(sol.mu) - sec.offset
    nu = np.arccosh(np.maximum(ae / sec.frame.f, 1.0))
    ref = modified_mathieu(q, lam - 2 * q, 0.0, 1.0, 0.0, nu)
    assert np.max(np.abs(sol.psi - ref)) < 1e-5 * np.max(np.abs(ref))


def test_radial_defect_order(ref_table):
    lam = angular_spectrum(ref_table, 1.0, 2)[1].lam
    d1 = np.max(np.abs(radial_defect(ref_table, radial_solution(ref_table, 1.0, lam, steps=1500))))
    d2 = np.max(np.abs(radial_defect(ref_table, radial_solution(ref_table, 1.0, lam, steps=3000))))
    assert 3.2 < d1 / d2 < 4.8


def test_helmholtz_trivial(equi_table):
    pair = angular_spectrum(equi_table, 0.0, 1)[0]
    sol = radial_solution(equi_table, 0.0, pair.lam, sector="Abar2")
    mu, th = in_piece_grid(equi_table, "Abar2")
    assert helmholtz_residual(equi_table, 0.0, pair, sol, mu, th) < 1e-8


def test_helmholtz_mathieu_pair(degenerate_table):
    k = 2.0
    pair = angular_spectrum(degenerate_table, k, 2)[1]
    sol = radial_solution(degenerate_table, k, pair.lam, sector="A2")
    mu, th = in_piece_grid(degenerate_table, "A2", mu_range=(0.5, 1.5))
    r1 = helmholtz_residual(degenerate_table, k, pair, sol, mu, th, h=1e-3)
    r2 = helmholtz_residual(degenerate_table, k, pair, sol, mu, th, h=5e-4)
    assert r1 < 1e-3
    assert 3.2 < r1 / r2 < 4.8


@pytest.mark.parametrize("index", [1, 2, 3])
def test_helmholtz_reference_triangle(ref_table, index):
    pair = angular_spectrum(ref_table, 1.0, index + 1)[index]
    sol = radial_solution(ref_table, 1.0, pair.lam, sector="Abar2")
    mu, th = in_piece_grid(ref_table, "Abar2")
    r1 = helmholtz_residual(ref_table, 1.0, pair, sol, mu, th, h=1e-3)
    r2 = helmholtz_residual(ref_table, 1.0, pair, sol, mu, th, h=5e-4)
    assert r1 < 1e-3
    assert 3.2 < r1 / r2 < 4.8


def test_helmholtz_rejects_samples_outside_piece(ref_table):
    pair = angular_spectrum(ref_table, 1.0, 2)[1]
    sol = radial_solution(ref_table, 1.0, pair.lam, sector="Abar2")
    with pytest.raises(ValueError):
        helmholtz_residual(ref_table, 1.0, pair, sol, np.array([0.3]), np.array([2.0]))
