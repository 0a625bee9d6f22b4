import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from polyelliptic.charts import (cartesian_to_local, local_to_cartesian, point_from_axes,
                                 ray_equations, ray_in_local, semi_axes, tangent_mismatch)
from polyelliptic.errors import OutOfDomain, WrongSide
from polyelliptic.geometry import (LEFT, RIGHT, LocalFrame, build_polygon, ray, side_frame,
                                   vertex_frame)

from conftest import SHAPES

PLAIN = LocalFrame(0, 1, 0.0, (0.0, 0.0), 2.0, RIGHT)


def test_forward_examples():
    assert np.allclose(local_to_cartesian(PLAIN, 0.0, 0.0), (2.0, 0.0))
    assert np.allclose(local_to_cartesian(PLAIN, 1.0, math.pi / 2), (0.0, 2 * math.sinh(1.0)),
                       atol=1e-15)
    fr = LocalFrame(0, 1, math.pi, (1.39, 0.0), 1.39, RIGHT)
    p = local_to_cartesian(fr, 0.7, 1.1)
    ax = semi_axes(fr, p)
    assert ax.r_plus + ax.r_minus == pytest.approx(2 * 1.39 * math.cosh(0.7), rel=1e-14)


def test_inverse_examples():
    c = cartesian_to_local(PLAIN, (2.0, 0.0))
    assert (c.mu, c.theta) == (0.0, 0.0)
    c = cartesian_to_local(PLAIN, (0.0, 2 * math.sinh(1.0)))
    assert c.mu == pytest.approx(1.0, abs=1e-14)
    assert c.theta == pytest.approx(math.pi / 2, abs=1e-14)


def test_wrong_side():
    with pytest.raises(WrongSide):
        cartesian_to_local(PLAIN, (0.3, -1.0))
    left = LocalFrame(0, 1, 0.0, (0.0, 0.0), 2.0, LEFT)
    with pytest.raises(WrongSide):
        cartesian_to_local(left, (0.3, 1.0))
    assert math.pi < cartesian_to_local(left, (0.3, -1.0)).theta < 2 * math.pi


def test_round_trip_sweep():
    rng = np.random.default_rng(1)
    for polarity, lo in ((RIGHT, 0.0), (LEFT, math.pi)):
        fr = LocalFrame(0, 1, 2.1, (0.4, -1.0), 1.7, polarity)
        mu = rng.uniform(1e-3, 4.0, 1000)
        th = rng.uniform(lo + 1e-3, lo + math.pi - 1e-3, 1000)
        p = local_to_cartesian(fr, mu, th)
        back = np.array([[c.mu, c.theta] for c in (cartesian_to_local(fr, q) for q in p)])
        assert np.max(np.abs(back[:, 0] - mu)) < 1e-10
        assert np.max(np.abs(back[:, 1] - th)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 5.0), st.floats(0.0, 2 * math.pi), st.floats(0.1, 3.0), st.floats(0, 6.28))
def test_confocal(mu, th, f, beta):
    fr = LocalFrame(0, 1, beta, (0.3, 0.2), f, RIGHT)
    ax = semi_axes(fr, local_to_cartesian(fr, mu, th))
    assert ax.ae == pytest.approx(f * math.cosh(mu), rel=1e-12, abs=1e-12 * f)
    assert ax.ah == pytest.approx(f * math.cos(th), abs=1e-10 * f * math.cosh(mu))


def printed_ray_formulas(spec, r=0):
    """The four printed dashed-line relations, rotated by ``r`` index steps."""
    f1 = spec.f[r % 3]
    g1, g2 = spec.gamma[r % 3], spec.gamma[(r + 1) % 3]
    side, bar = side_frame(spec, r), vertex_frame(spec, r + 2)
    return [
        (side, ray(spec, r, "prev"), lambda a: f1 * (a * math.cos(g1) + f1) / (a + f1 * math.cos(g1))),
        (side, ray(spec, r + 1, "next"), lambda a: -f1 * (a * math.cos(g2) + f1) / (a + f1 * math.cos(g2))),
        (bar, ray(spec, r + 2, "next"), lambda a: -f1 * (a * math.cos(g1) - f1) / (a - f1 * math.cos(g1))),
        (bar, ray(spec, r + 2, "prev"), lambda a: f1 * (a * math.cos(g2) - f1) / (a - f1 * math.cos(g2))),
    ]


def _ae_start(frame, r):
    o = np.asarray(r.origin)
    return 0.5 * (np.linalg.norm(o - frame.focus_plus) + np.linalg.norm(o - frame.focus_minus))


def test_printed_ray_formulas(ref_spec):
    labels = [r.label for _, r, _ in printed_ray_formulas(ref_spec)]
    assert labels == ["1_31", "2_23", "3_31", "3_23"]
    for frame, r, formula in printed_ray_formulas(ref_spec):
        for ae in np.linspace(_ae_start(frame, r), 40.0, 25):
            assert ray_in_local(frame, r, ae) == pytest.approx(formula(ae), abs=1e-12)


@pytest.mark.parametrize("rot", [1, 2])
def test_rotated_ray_formulas(ref_spec, rot):
    for frame, r, formula in printed_ray_formulas(ref_spec, rot):
        for ae in np.linspace(_ae_start(frame, r), 40.0, 25):
            assert ray_in_local(frame, r, ae) == pytest.approx(formula(ae), abs=1e-12)


def test_ray_limits(ref_spec):
    frame, r, _ = printed_ray_formulas(ref_spec)[0]
    f1, g1 = ref_spec.f[0], ref_spec.gamma[0]
    assert ray_in_local(frame, r, f1) == pytest.approx(f1, abs=1e-15)
    assert ray_in_local(frame, r, 1e9) == pytest.approx(f1 * math.cos(g1), abs=1e-8)
    with pytest.raises(OutOfDomain):
        ray_in_local(frame, r, 0.5 * f1)


def test_ray_geometric_oracle(ref_spec):
    frame, r, _ = printed_ray_formulas(ref_spec)[0]
    ae = 3.0

    def excess(t):
        ax = semi_axes(frame, r.point(np.array([t]))[0])
        return ax.ae - ae

    t = brentq(excess, 0.0, 50.0, xtol=1e-15)
    ah = semi_axes(frame, r.point(np.array([t]))[0]).ah
    assert ray_in_local(frame, r, ae) == pytest.approx(ah, abs=1e-12)


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_all_ray_curves_are_straight(name):
    spec = build_polygon(SHAPES[name])
    pairs = ray_equations(spec)
    assert len(pairs) == 4 * spec.n
    for frame, r in pairs:
        ae = np.geomspace(_ae_start(frame, r), 200.0, 60)
        ah = ray_in_local(frame, r, ae)
        assert np.all(np.abs(ah) <= frame.f * (1 + 1e-14))
        assert np.all(np.diff(ah) * np.sign(ah[-1] - ah[0]) >= -1e-14)
        th = np.arccos(np.clip(ah / frame.f, -1, 1))
        if frame.polarity == LEFT:
            th = 2 * math.pi - th
        pts = point_from_axes(frame, ae, th)
        d = np.asarray(r.direction)
        rel = pts - np.asarray(r.origin)
        assert np.max(np.abs(d[0] * rel[:, 1] - d[1] * rel[:, 0])) < 1e-10 * ae.max()
        assert np.all(rel @ d >= -1e-12)


@pytest.mark.parametrize("name", sorted(SHAPES))
def test_tangent_matching(name):
    assert tangent_mismatch(build_polygon(SHAPES[name]), 100) < 1e-10
