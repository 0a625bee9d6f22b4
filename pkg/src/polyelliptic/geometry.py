"""Convex polygon construction: vertices, interior angles, side frames, dashed rays.

Vertices are numbered from 0 internally and traversed counterclockwise.  Side
``k`` joins vertex ``k`` to vertex ``k + 1`` and has semifocal distance
``f[k]`` (half its length).  Labels shown to users are 1-based, matching the
usual ``1_31``-style ray names.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometry, Unsupported

RIGHT = "right"
LEFT = "left"


@dataclass(frozen=True)
class PolygonSpec:
    n: int
    f: tuple[float, ...]
    gamma: tuple[float, ...]
    vertices: tuple[tuple[float, float], ...]
    orientation: str = "ccw"

    @property
    def kind(self) -> str:
        return "triangle" if self.n == 3 else "square"

    @property
    def verts(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def side_lengths(self) -> tuple[float, ...]:
        return tuple(2.0 * fi for fi in self.f)

    @property
    def semiperimeter(self) -> float:
        return float(sum(self.f))

    @property
    def centroid(self) -> np.ndarray:
        return self.verts.mean(axis=0)

    def vertex(self, k: int) -> np.ndarray:
        return self.verts[k % self.n]

    def signed_area(self) -> float:
        v = self.verts
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def scaled(self, s: float) -> "PolygonSpec":
        return build_polygon([s * fi for fi in self.f])


@dataclass(frozen=True)
class LocalFrame:
    """Elliptic chart whose positive focus is vertex ``i`` and negative focus vertex ``j``.

    ``beta`` is the direction angle of the local A-axis, which points from the
    negative focus to the positive one.  Right polarity hosts local angles in
    [0, pi] (left of the A-axis), left polarity hosts [pi, 2 pi].
    """

    i: int
    j: int
    beta: float
    midpoint: tuple[float, float]
    f: float
    polarity: str

    @property
    def label(self) -> str:
        bar = "bar" if self.polarity == LEFT else ""
        return f"L{self.i + 1}{self.j + 1}{bar}"

    @property
    def axis(self) -> np.ndarray:
        return np.array([math.cos(self.beta), math.sin(self.beta)])

    @property
    def center(self) -> np.ndarray:
        return np.asarray(self.midpoint, dtype=float)

    @property
    def focus_plus(self) -> np.ndarray:
        return self.center + self.f * self.axis

    @property
    def focus_minus(self) -> np.ndarray:
        return self.center - self.f * self.axis


@dataclass(frozen=True)
class DashedRay:
    """Extension of side ``side`` beyond vertex ``vertex``."""

    vertex: int
    side: tuple[int, int]
    origin: tuple[float, float]
    direction: tuple[float, float]

    @property
    def label(self) -> str:
        i, j = self.side
        return f"{self.vertex + 1}_{i + 1}{j + 1}"

    @property
    def angle(self) -> float:
        return math.atan2(self.direction[1], self.direction[0]) % (2 * math.pi)

    def point(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.origin) + t[..., None] * np.asarray(self.direction)


def _kahan_area(a: float, b: float, c: float) -> float:
    a, b, c = sorted((a, b, c), reverse=True)
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(prod, 0.0))


def build_polygon(f: Sequence[float]) -> PolygonSpec:
    """Build the canonical convex polygon from semifocal distances.

    Triangles accept any three lengths obeying the strict triangle inequality;
    four sides must be equal (square).  Vertex 1 sits at the origin, vertex 2
    on the positive x axis, the rest in the upper half-plane.
    """
    f = tuple(float(x) for x in f)
    n = len(f)
    if n < 3:
        raise DegenerateGeometry(f"need at least 3 sides, got {n}")
    if any(not math.isfinite(x) or x <= 0.0 for x in f):
        raise DegenerateGeometry(f"semifocal distances must be positive: {f}")
    if n == 3:
        return _triangle(f)
    if n == 4:
        if max(f) - min(f) > 1e-12 * max(f):
            raise Unsupported("only the square is supported among quadrilaterals")
        return _square(f[0])
    raise Unsupported(f"{n}-gons are not supported")


def _triangle(f: tuple[float, float, float]) -> PolygonSpec:
    l12, l23, l31 = (2 * x for x in f)
    for a, b, c in ((l12, l23, l31), (l23, l31, l12), (l31, l12, l23)):
        if not a < b + c:
            raise DegenerateGeometry(f"triangle inequality fails for sides {(l12, l23, l31)}")
    area4 = 4.0 * _kahan_area(l12, l23, l31)
    if area4 <= 0.0:
        raise DegenerateGeometry("zero-area triangle")
    # each angle from its two adjacent sides and the opposite one
    g1 = math.atan2(area4, l12 * l12 + l31 * l31 - l23 * l23)
    g2 = math.atan2(area4, l12 * l12 + l23 * l23 - l31 * l31)
    g3 = math.atan2(area4, l23 * l23 + l31 * l31 - l12 * l12)
    v3 = (l31 * math.cos(g1), l31 * math.sin(g1))
    return PolygonSpec(3, f, (g1, g2, g3), ((0.0, 0.0), (l12, 0.0), v3))


def _square(f: float) -> PolygonSpec:
    s = 2.0 * f
    verts = ((0.0, 0.0), (s, 0.0), (s, s), (0.0, s))
    return PolygonSpec(4, (f,) * 4, (math.pi / 2,) * 4, verts)


def frame_between(spec: PolygonSpec, i: int, j: int, polarity: str) -> LocalFrame:
    """Chart with foci at vertices ``i`` (positive) and ``j`` (negative)."""
    vi, vj = spec.vertex(i), spec.vertex(j)
    d = vi - vj
    beta = math.atan2(d[1], d[0]) % (2 * math.pi)
    mid = 0.5 * (vi + vj)
    return LocalFrame(i % spec.n, j % spec.n, beta, (float(mid[0]), float(mid[1])),
                      0.5 * float(np.hypot(*d)), polarity)


def side_frame(spec: PolygonSpec, k: int, polarity: str = RIGHT) -> LocalFrame:
    return frame_between(spec, k, k + 1, polarity)


def vertex_frame(spec: PolygonSpec, k: int) -> LocalFrame:
    """Chart covering the exterior wedge at vertex ``k``: foci at its two neighbours.

    For a triangle this is the left side of the opposite edge; for the square
    it is the diagonal through the neighbouring vertices.
    """
    return frame_between(spec, k + 1, k - 1, LEFT)


def side_frames(spec: PolygonSpec) -> list[LocalFrame]:
    out = []
    for k in range(spec.n):
        out.append(side_frame(spec, k, RIGHT))
        out.append(side_frame(spec, k, LEFT))
    return out


def dashed_rays(spec: PolygonSpec) -> list[DashedRay]:
    """The 2n side extensions, two per vertex, in counterclockwise vertex order."""
    rays = []
    for k in range(spec.n):
        vk = spec.vertex(k)
        for other, side in ((k - 1, ((k - 1) % spec.n, k)), (k + 1, (k, (k + 1) % spec.n))):
            d = vk - spec.vertex(other)
            d = d / np.hypot(*d)
            rays.append(DashedRay(k, side, (float(vk[0]), float(vk[1])),
                                  (float(d[0]), float(d[1]))))
    return rays


def ray(spec: PolygonSpec, vertex: int, toward_side_of: str) -> DashedRay:
    """Ray at ``vertex`` extending the previous (``"prev"``) or next (``"next"``) side."""
    rays = dashed_rays(spec)
    return rays[2 * (vertex % spec.n) + (0 if toward_side_of == "prev" else 1)]
