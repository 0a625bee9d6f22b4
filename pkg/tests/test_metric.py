import math

import numpy as np
import pytest

from polyelliptic.atlas import TWO_PI, sector_partition
from polyelliptic.errors import BoundaryPoint
from polyelliptic.geometry import build_polygon
from polyelliptic.metric import (elliptic_control_residual, jacobian, metric_profile,
                                 sample_in_piece, scale_factors, separability_residual,
                                 stackel_factors)


def _interior_samples(table, n=1000, seed=0):
    rng = np.random.default_rng(seed)
    mu = rng.uniform(0.02, 4.0, n)
    th = rng.uniform(0, TWO_PI, n)
    b = table.boundaries
    # keep finite-difference stencils off the angular boundaries
    near = np.min(np.abs(th[:, None] - b[None, :]), axis=1) < 1e-4
    return mu[~near], th[~near]


def test_abar2_on_vertex_hyperbola(ref_table):
    F, f2 = ref_table.scale, ref_table.spec.f[1]
    mu = np.linspace(0.1, 3.0, 7)
    th0 = np.full_like(mu, ref_table.theta_v1 - 1e-3)
    # the vertex hyperbola is a boundary; approach it from the wedge side
    _, hth = scale_factors(ref_table, mu, th0, pieces="Abar2")
    expect = F ** 2 * np.cosh(mu) ** 2 - f2 ** 2 * np.cos(th0 - ref_table.theta_v1) ** 2
    assert np.allclose(hth, expect, rtol=1e-13)
    _, hth = scale_factors(ref_table, mu, np.full_like(mu, ref_table.theta_v1), pieces="Abar2")
    assert np.allclose(hth, F ** 2 * np.cosh(mu) ** 2 - f2 ** 2, rtol=1e-13)


def test_wedge_h_theta_closed_form_point(ref_table):
    F, f2 = ref_table.scale, ref_table.spec.f[1]
    th = ref_table.theta_v1 + math.pi / 6
    assert str(ref_table.piece("Abar2").label) == "Abar2"
    # theta_v1 + pi/6 lies in the A1 angular range; evaluate the Abar2 piece there
    _, hth = scale_factors(ref_table, 1.1, th, pieces="Abar2")
    assert hth[0] == pytest.approx(F ** 2 * math.cosh(1.1) ** 2 - f2 ** 2 * math.cos(math.pi / 6) ** 2,
                                   rel=1e-14)


def test_analytic_vs_fd(any_table):
    mu, th = _interior_samples(any_table)
    a = jacobian(any_table, mu, th)
    d = jacobian(any_table, mu, th, mode="fd")
    assert np.max(np.abs(d.H_mu / a.H_mu - 1)) < 1e-6
    assert np.max(np.abs(d.H_theta / a.H_theta - 1)) < 1e-6
    assert np.max(a.normalized_offdiag) < 1e-10
    assert np.max(d.normalized_offdiag) < 1e-7


def test_scale_factors_match_jacobian(any_table):
    mu, th = _interior_samples(any_table, seed=1)
    hmu, hth = scale_factors(any_table, mu, th)
    a = jacobian(any_table, mu, th)
    assert np.allclose(hmu, a.H_mu ** 2, rtol=1e-10)
    assert np.allclose(hth, a.H_theta ** 2, rtol=1e-10)


def test_boundary_point_raises(ref_table):
    b = ref_table.boundaries[3]
    with pytest.raises(BoundaryPoint):
        jacobian(ref_table, 1.0, b)
    jacobian(ref_table, 1.0, b, on_boundary="lower")


def test_stackel_factors_all_pieces(any_table):
    rng = np.random.default_rng(5)
    for sec in any_table.all_pieces:
        fac = stackel_factors(any_table, sec)
        mu, th = sample_in_piece(any_table, sec, 200, rng)
        hmu, hth = scale_factors(any_table, mu, th, pieces=sec.label)
        core = fac.h1(mu) + fac.h2(th)
        assert np.all(fac.g1(th) > 0) and np.all(fac.g2(mu) > 0) and np.all(core > 0)
        assert np.allclose(hth / fac.g1(th), hmu / fac.g2(mu), rtol=1e-10)


def test_abar2_gauge(ref_table):
    fac = stackel_factors(ref_table, "Abar2")
    F, f2, tv = ref_table.scale, ref_table.spec.f[1], ref_table.theta_v1
    rng = np.random.default_rng(9)
    mu = rng.uniform(0.05, 3, 100)
    th = rng.uniform(-0.5, 0.5, 100)
    assert np.all(fac.g1(th) == 1.0)
    assert np.allclose(fac.h1(mu), F ** 2 * np.cosh(mu) ** 2, rtol=1e-14)
    assert np.allclose(fac.h2(th), -(f2 * np.cos(th - tv)) ** 2, rtol=1e-13, atol=1e-14)
    corrected = F ** 2 * np.sinh(mu) ** 2 / (F ** 2 * np.cosh(mu) ** 2 - f2 ** 2)
    assert np.allclose(fac.g2(mu), corrected, rtol=1e-12)


@pytest.mark.parametrize("f", [(1.39, 2.595, 2.44), (1.0, 1.0, 1.0, 1.0)])
def test_separability(f):
    table = sector_partition(build_polygon(f))
    assert separability_residual(table, 10_000) < 1e-8


def test_elliptic_control():
    assert elliptic_control_residual() < 1e-12


def test_mathieu_control():
    table = sector_partition(build_polygon((1.0, 1.0, 1e-9)))
    mu, th = np.meshgrid(np.linspace(0.1, 3, 20), np.linspace(-0.3, 0.3, 20))
    th = np.mod(th + table.theta_v1 - math.pi / 2, TWO_PI)
    hmu, hth = scale_factors(table, mu, th, pieces="Abar2")
    assert np.max(np.abs(hth - hmu) / hth) < 1e-6


def test_profile_continuous_and_periodic(ref_table, equi_table):
    for table in (ref_table, equi_table):
        th, hth, hmu, _ = metric_profile(table, 1.1, 3601)
        assert th[0] == 0.0 and th[-1] == pytest.approx(TWO_PI)
        assert hth[0] == pytest.approx(hth[-1], rel=1e-12)
        # no jumps: increments shrink with the step
        assert np.max(np.abs(np.diff(hth))) < 0.02 * np.max(hth)
        assert np.all(hth > 0) and np.all(hmu > 0)
    th = np.linspace(0, TWO_PI, 997)
    hmu, hth = scale_factors(equi_table, 1.1, th)
    hmu2, hth2 = scale_factors(equi_table, 1.1, th + TWO_PI / 3)
    assert np.max(np.abs(hth2 - hth)) < 1e-9 * np.max(hth)
    assert np.max(np.abs(hmu2 - hmu)) < 1e-9 * np.max(hmu)
