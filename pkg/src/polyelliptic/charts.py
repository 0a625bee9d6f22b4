"""Single-segment elliptic charts.

A chart is a :class:`LocalFrame`; points are written either in the classical
``(mu, theta)`` pair or in the semi-axis pair ``(ae, theta)`` with
``ae = f cosh(mu)``.  The hyperbolic semi-axis is ``ah = f cos(theta)``, equal
to half the difference of the distances to the negative and positive foci.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain, WrongSide
from .geometry import LEFT, RIGHT, DashedRay, LocalFrame, PolygonSpec, side_frame, vertex_frame

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LocalCoord:
    mu: float
    theta: float
    frame: LocalFrame


@dataclass(frozen=True)
class SemiAxes:
    ae: float
    ah: float
    r_plus: float
    r_minus: float


def arccosh1p(x):
    """``arccosh(1 + x)`` without the cancellation of forming ``1 + x`` first."""
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    return np.log1p(x + np.sqrt(x * (2.0 + x)))


def safe_arccosh(z):
    z = np.asarray(z, dtype=float)
    # clamp rounding just below 1 at the focal segment
    z = np.where((z < 1.0) & (z > 1.0 - 1e-14), 1.0, z)
    return np.log(z + np.sqrt(np.maximum(z * z - 1.0, 0.0)))


def to_global(frame: LocalFrame, a, b) -> np.ndarray:
    cb, sb = math.cos(frame.beta), math.sin(frame.beta)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = a * cb - b * sb + frame.midpoint[0]
    y = a * sb + b * cb + frame.midpoint[1]
    return np.stack([x, y], axis=-1)


def to_local_ab(frame: LocalFrame, p) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(p, dtype=float)
    dx = p[..., 0] - frame.midpoint[0]
    dy = p[..., 1] - frame.midpoint[1]
    cb, sb = math.cos(frame.beta), math.sin(frame.beta)
    return dx * cb + dy * sb, -dx * sb + dy * cb


def local_to_cartesian(frame: LocalFrame, mu, theta) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a = frame.f * np.cosh(mu) * np.cos(theta)
    b = frame.f * np.sinh(mu) * np.sin(theta)
    return to_global(frame, a, b)


def point_from_axes(frame: LocalFrame, ae, theta) -> np.ndarray:
    """Chart point with elliptic semi-axis ``ae`` and local angle ``theta``."""
    ae = np.asarray(ae, dtype=float)
    theta = np.asarray(theta, dtype=float)
    minor = np.sqrt(np.maximum(ae * ae - frame.f ** 2, 0.0))
    return to_global(frame, ae * np.cos(theta), minor * np.sin(theta))


def semi_axes(frame: LocalFrame, p) -> SemiAxes:
    p = np.asarray(p, dtype=float)
    rp = np.hypot(*(p - frame.focus_plus).T) if p.ndim > 1 else float(np.hypot(*(p - frame.focus_plus)))
    rm = np.hypot(*(p - frame.focus_minus).T) if p.ndim > 1 else float(np.hypot(*(p - frame.focus_minus)))
    return SemiAxes(0.5 * (rp + rm), 0.5 * (rm - rp), rp, rm)


def cartesian_to_local(frame: LocalFrame, p) -> LocalCoord:
    """Invert :func:`local_to_cartesian` for one point on the frame's side."""
    p = np.asarray(p, dtype=float)
    f = frame.f
    ax = semi_axes(frame, p)
    a, b = to_local_ab(frame, p)
    a, b = float(a), float(b)
    mu = float(safe_arccosh(max(ax.ae / f, 1.0)))
    on_line = abs(b) < 1e-13 * f
    if not on_line:
        if frame.polarity == RIGHT and b < 0:
            raise WrongSide(f"point {p.tolist()} is left of {frame.label}")
        if frame.polarity == LEFT and b > 0:
            raise WrongSide(f"point {p.tolist()} is right of {frame.label}")
    if mu > 0.0 and not on_line:
        theta = math.atan2(b / math.sinh(mu), a / math.cosh(mu))
    else:
        theta = math.acos(min(1.0, max(-1.0, ax.ah / f)))
        if frame.polarity == LEFT and 0.0 < theta < math.pi:
            theta = TWO_PI - theta
    return LocalCoord(mu, theta % TWO_PI, frame)


def _focus_on_line(frame: LocalFrame, ray: DashedRay):
    u = np.asarray(ray.direction)
    o = np.asarray(ray.origin)
    best = None
    for sign, focus, other in ((1.0, frame.focus_plus, frame.focus_minus),
                               (-1.0, frame.focus_minus, frame.focus_plus)):
        rel = o - focus
        off_line = abs(rel[0] * u[1] - rel[1] * u[0])
        t0 = float(rel @ u)
        if off_line < 1e-9 * frame.f and t0 > -1e-9 * frame.f:
            c = float((focus - other) @ u) / (2.0 * frame.f)
            cand = (sign, max(t0, 0.0), c)
            if best is None or cand[1] < best[1]:
                best = cand
    if best is None:
        raise OutOfDomain(f"ray {ray.label} does not pass through a focus of {frame.label}")
    return best


def ray_in_local(frame: LocalFrame, ray: DashedRay, ae):
    """Hyperbolic semi-axis at which ``ray`` meets the confocal ellipse ``ae``.

    Every dashed ray lies on a line through one focus of the charts bordering
    it, so the intersection is closed form: with ``c`` the cosine between the
    focus-to-focus vector and the ray, the distance from that focus is
    ``(ae^2 - f^2) / (ae + f c)``.
    """
    ae = np.asarray(ae, dtype=float)
    f = frame.f
    if np.any(ae < f * (1 - 1e-14)):
        raise OutOfDomain(f"ae below semifocal distance {f}")
    sign, t0, c = _focus_on_line(frame, ray)
    t = (ae * ae - f * f) / (ae + f * c)
    if np.any(t < t0 - 1e-12 * max(f, t0)):
        raise OutOfDomain(f"ellipse ae={ae} does not reach ray {ray.label}")
    # ae - t, rearranged to avoid cancellation at large ae
    return sign * f * (ae * c + f) / (ae + f * c)


def ray_ae_from_ah(frame: LocalFrame, ray: DashedRay, ah):
    """Inverse of :func:`ray_in_local`: the ellipse on which the ray hits hyperbola ``ah``.

    Returns ``inf`` where the hyperbola is asymptotic to the ray or never meets it.
    """
    sign, _, c = _focus_on_line(frame, ray)
    f = frame.f
    h = sign * np.asarray(ah, dtype=float)
    den = h - f * c
    with np.errstate(divide="ignore", invalid="ignore"):
        ae = f * (f - h * c) / den
    return np.where(den > 0, ae, np.inf)


def ray_equations(spec: PolygonSpec) -> list[tuple[LocalFrame, DashedRay]]:
    """All (chart, ray) pairs where a ray bounds the chart's region: 4n in total.

    Ray ``N`` extending the previous side borders the region of side (N, N+1)
    and the wedge at N; the one extending the next side borders side (N-1, N)
    and the same wedge.
    """
    from .geometry import dashed_rays

    out = []
    for r in dashed_rays(spec):
        k = r.vertex
        if r.side[1] == k:   # extends previous side
            out.append((side_frame(spec, k), r))
        else:
            out.append((side_frame(spec, k - 1), r))
        out.append((vertex_frame(spec, k), r))
    return out


def ellipse_normal(frame: LocalFrame, p) -> np.ndarray:
    """Unit normal of the chart's confocal ellipse through ``p`` (gradient of r+ + r-)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    up = p - frame.focus_plus
    um = p - frame.focus_minus
    n = up / np.hypot(up[:, 0], up[:, 1])[:, None] + um / np.hypot(um[:, 0], um[:, 1])[:, None]
    return n / np.hypot(n[:, 0], n[:, 1])[:, None]


def tangent_mismatch(spec: PolygonSpec, n_points: int = 100, reach: float = 20.0) -> float:
    """Max ``|sin|`` of the angle between the two ellipses meeting on each dashed ray.

    Each ray bounds a side chart whose focus is the ray's vertex ``N`` and the
    wedge chart at ``N`` (the pairs of :func:`ray_equations`); their ellipses
    through a ray point should share a tangent.
    """
    from .geometry import dashed_rays

    t = np.geomspace(1e-3, reach, n_points) * spec.semiperimeter
    worst = 0.0
    for r in dashed_rays(spec):
        k = r.vertex
        side = side_frame(spec, k) if r.side[1] == k else side_frame(spec, k - 1)
        pts = r.point(t)
        a = ellipse_normal(side, pts)
        b = ellipse_normal(vertex_frame(spec, k), pts)
        worst = max(worst, float(np.max(np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))))
    return worst


__all__ = [
    "LocalCoord", "SemiAxes", "local_to_cartesian", "cartesian_to_local",
    "point_from_axes", "semi_axes", "ray_in_local", "ray_ae_from_ah", "ray_equations",
    "arccosh1p", "safe_arccosh", "to_global", "to_local_ab", "LEFT", "RIGHT",
    "ellipse_normal", "tangent_mismatch",
]
