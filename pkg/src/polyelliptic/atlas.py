"""The common exterior coordinates ``(mu_c, theta_c)`` glued from local elliptic charts.

Geometry used throughout: for an exterior point ``p`` let ``s(p)`` be half the
excess perimeter of the convex hull of the polygon and ``p`` over the
polygon's own perimeter.  Level sets of ``s`` are the closed ``mu_c`` curves;
inside each region they are confocal ellipses of the region's chart with
semi-axis ``ae = s + c`` (``c`` depends on the chart only).  The common radial
variable is ``ae_c = s + f_1 + f_n`` so that ``ae_c = f_1 + f_n`` on the
perimeter.

``theta_c`` labels the orthogonal trajectories.  Each trajectory ends at
infinity inside exactly one chart, where it is a confocal hyperbola whose
local angle is ``theta_c`` plus a chart constant; ``theta_c = 0`` is the
hyperbola through vertex 1 in the wedge chart at vertex 1.  Trajectories that
start on a side but end in a vertex wedge cross a dashed ray and are made of
two hyperbola pieces; their angular sectors ("B" before and "F" after a wedge,
counterclockwise) carry a near piece in the side chart and a far piece in the
wedge chart, switched on the ray.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .charts import arccosh1p, point_from_axes, ray_ae_from_ah, to_local_ab
from .errors import OutOfDomain, OutOfRange, ProtectedRegion, Unsupported
from .geometry import DashedRay, LocalFrame, PolygonSpec, dashed_rays, side_frame, vertex_frame

TWO_PI = 2.0 * math.pi
TRUE, BAR, BEFORE, FRONT = "true", "bar", "B", "F"


@dataclass(frozen=True)
class CommonCoord:
    mu_c: float
    theta_c: float
    scale: float = 1.0   # f_1 + f_n

    @property
    def ae_c(self) -> float:
        return self.scale * math.cosh(self.mu_c)


@dataclass(frozen=True)
class Sector:
    """One coefficient piece of the common map.

    ``true`` and ``bar`` pieces use ``theta_loc = theta_c + kappa`` in ``frame``.
    ``B``/``F`` pieces are the near (side chart) half of a compressed angular
    sector: ``cos(theta_loc) = (a0 + a1 cos(theta_c + kappa)) / frame.f``, valid
    while the local ellipse stays below the ray crossing; beyond it the
    ``far`` bar piece takes over.
    """

    label: str
    kind: str
    theta_lo: float
    theta_hi: float
    frame: LocalFrame
    offset: float
    kappa: float
    vertex: Optional[int] = None
    a0: float = 0.0
    a1: float = 0.0
    ray: Optional[DashedRay] = None
    far: Optional["Sector"] = field(default=None, repr=False)

    @property
    def width(self) -> float:
        return self.theta_hi - self.theta_lo

    @property
    def compressed(self) -> bool:
        return self.kind in (BEFORE, FRONT)

    def local_ae(self, ae_c):
        return np.asarray(ae_c, dtype=float) - self.offset

    def local_angle(self, theta_c):
        """Local chart angle of the piece (near chart for B/F pieces)."""
        theta_c = np.asarray(theta_c, dtype=float)
        if not self.compressed:
            return theta_c + self.kappa
        c = np.clip((self.a0 + self.a1 * np.cos(theta_c + self.kappa)) / self.frame.f, -1.0, 1.0)
        return np.arccos(c)

    def local_angle_rate(self, theta_c):
        """d theta_loc / d theta_c."""
        theta_c = np.asarray(theta_c, dtype=float)
        if not self.compressed:
            return np.ones_like(theta_c)
        th = self.local_angle(theta_c)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.a1 * np.sin(theta_c + self.kappa) / (self.frame.f * np.sin(th))

    def switch_ae_c(self, theta_c):
        """Common radial value where the near piece meets the ray (inf if never)."""
        theta_c = np.asarray(theta_c, dtype=float)
        if not self.compressed:
            return np.full_like(theta_c, np.inf)
        ah = self.frame.f * np.cos(self.local_angle(theta_c))
        return ray_ae_from_ah(self.frame, self.ray, ah) + self.offset

    def point(self, ae_c, theta_c) -> np.ndarray:
        """Evaluate this piece only (no switching)."""
        return point_from_axes(self.frame, self.local_ae(ae_c), self.local_angle(theta_c))

    def coefficients(self, ae_c, theta_c):
        """Local (A, B) of the chart before rotation and translation."""
        ae = self.local_ae(ae_c)
        th = self.local_angle(theta_c)
        minor = np.sqrt(np.maximum(ae * ae - self.frame.f ** 2, 0.0))
        return ae * np.cos(th), minor * np.sin(th)


@dataclass(frozen=True)
class SectorTable:
    spec: PolygonSpec
    sectors: tuple[Sector, ...]        # angular partition, in theta_c order
    bars: tuple[Sector, ...]           # wedge pieces, one per vertex
    theta_v: tuple[float, ...]         # vertex-hyperbola local angles
    alpha0: float
    scale: float                       # f_1 + f_n

    @property
    def theta_v1(self) -> float:
        return self.theta_v[0]

    @property
    def phi1(self) -> float:
        return self.sectors[0].width

    @property
    def boundaries(self) -> np.ndarray:
        return np.array([s.theta_lo for s in self.sectors] + [self.sectors[-1].theta_hi])

    @property
    def all_pieces(self) -> tuple[Sector, ...]:
        return self.sectors + self.bars

    def piece(self, label: str) -> Sector:
        for s in self.all_pieces:
            if s.label == label:
                return s
        raise KeyError(label)

    def locate(self, theta_c) -> np.ndarray:
        """Index of the angular sector; boundary points go to the lower sector."""
        th = np.mod(np.asarray(theta_c, dtype=float), TWO_PI)
        idx = np.searchsorted(self.boundaries, th, side="left") - 1
        return np.clip(idx, 0, len(self.sectors) - 1)


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % TWO_PI - math.pi


def _angle(v) -> float:
    return math.atan2(v[1], v[0])


def vertex_hyperbola_angle(spec: PolygonSpec, k: int) -> float:
    """Local wedge-chart angle of the hyperbola through vertex ``k``, in (0, pi)."""
    fv = vertex_frame(spec, k).f
    return math.acos(max(-1.0, min(1.0, (spec.f[k - 1] - spec.f[k]) / fv)))


def sector_partition(spec: PolygonSpec) -> SectorTable:
    """Split [0, 2 pi) of ``theta_c`` into angular sectors and build every piece."""
    if spec.n not in (3, 4):
        raise Unsupported(f"no sector construction for n={spec.n}")
    n, f = spec.n, spec.f
    scale = f[0] + f[-1]
    tv = tuple(vertex_hyperbola_angle(spec, k) for k in range(n))
    vframes = [vertex_frame(spec, k) for k in range(n)]
    sframes = [side_frame(spec, k) for k in range(n)]
    alpha0 = vframes[0].beta - tv[0]
    rays = dashed_rays(spec)

    def name(k: int) -> int:
        return k % n + 1

    def kappa(frame: LocalFrame) -> float:
        return alpha0 - frame.beta

    bars = []
    for k in range(n):
        fr = vframes[k]
        bars.append(Sector(f"Abar{name(k + 1)}", BAR, 0.0, 0.0, fr,
                           scale - (f[k - 1] + f[k]), _wrap_pi(kappa(fr)), vertex=k))

    # asymptotic direction of each boundary, walked counterclockwise from vertex 1
    marks = []
    for k in range(n):
        vk, vp, vq = spec.vertex(k), spec.vertex(k - 1), spec.vertex(k + 1)
        q = (k + 1) % n
        marks.append((FRONT, k, _angle(vk - vp)))                     # wedge k, F half
        marks.append((TRUE, k, _angle(spec.vertex(q) - spec.vertex(q + 1))))  # side k
        marks.append((BEFORE, q, vframes[q].beta - tv[q]))           # wedge q, B half
    sectors = []
    lo = 0.0
    prev_alpha = alpha0
    for kind, k, alpha in marks:
        step = _wrap_pi(alpha - prev_alpha)
        if step < -1e-12:
            raise Unsupported("sector walk is not counterclockwise; polygon not convex?")
        step = max(step, 0.0)
        hi = lo + step
        prev_alpha = alpha
        if step <= 1e-14:
            lo = hi
            continue
        if kind == TRUE:
            fr = sframes[k]
            sec = Sector(f"A{name(k)}", TRUE, lo, hi, fr, scale - f[k], _wrap_pi(kappa(fr)))
        elif kind == FRONT:
            fr = sframes[k]
            sec = Sector(f"Abar{name(k + 1)}F", FRONT, lo, hi, fr, scale - f[k],
                         bars[k].kappa, vertex=k, a0=f[k - 1], a1=-vframes[k].f,
                         ray=rays[2 * k], far=bars[k])
        else:
            fr = sframes[k - 1]
            sec = Sector(f"Abar{name(k + 1)}B", BEFORE, lo, hi, fr, scale - f[k - 1],
                         bars[k].kappa, vertex=k, a0=-f[k], a1=-vframes[k].f,
                         ray=rays[2 * k + 1], far=bars[k])
        sectors.append(sec)
        lo = hi
    if abs(lo - TWO_PI) > 1e-9:
        raise Unsupported(f"sector widths sum to {lo}, not 2 pi")
    last = sectors[-1]
    sectors[-1] = Sector(last.label, last.kind, last.theta_lo, TWO_PI, last.frame, last.offset,
                         last.kappa, last.vertex, last.a0, last.a1, last.ray, last.far)
    # bar pieces span their wedge's B and F halves
    full_bars = []
    for b in bars:
        halves = [s for s in sectors if s.far is b]
        lo_b = min(s.theta_lo for s in halves)
        hi_b = max(s.theta_hi for s in halves)
        if b.vertex == 0:   # wedge at vertex 1 wraps through theta_c = 0
            lo_b, hi_b = halves[-1].theta_lo - TWO_PI, halves[0].theta_hi
        full_bars.append(Sector(b.label, BAR, lo_b, hi_b, b.frame, b.offset, b.kappa, b.vertex))
    lookup = {b.label: fb for b, fb in zip(bars, full_bars)}
    sectors = [Sector(s.label, s.kind, s.theta_lo, s.theta_hi, s.frame, s.offset, s.kappa,
                      s.vertex, s.a0, s.a1, s.ray, lookup[s.far.label]) if s.far else s
               for s in sectors]
    return SectorTable(spec, tuple(sectors), tuple(full_bars), tv, alpha0, scale)


def ae_c_from_mu_c(spec_or_table, mu_c):
    scale = _scale(spec_or_table)
    mu_c = np.asarray(mu_c, dtype=float)
    if np.any(mu_c < 0):
        raise OutOfDomain("mu_c must be non-negative")
    return scale * np.cosh(mu_c)


def mu_c_from_ae_c(spec_or_table, ae_c):
    scale = _scale(spec_or_table)
    ae_c = np.asarray(ae_c, dtype=float)
    if np.any(ae_c < scale * (1 - 1e-14)):
        raise OutOfDomain(f"ae_c below its minimum {scale}")
    return arccosh1p((ae_c - scale) / scale)


def _scale(obj) -> float:
    if isinstance(obj, SectorTable):
        return obj.scale
    return obj.f[0] + obj.f[-1]


def local_ae_from_common(table: SectorTable, sector, ae_c):
    """Local elliptic semi-axis of a piece's chart for common radius ``ae_c``."""
    sec = table.piece(sector) if isinstance(sector, str) else sector
    ae_c = np.asarray(ae_c, dtype=float)
    if np.any(ae_c < table.scale * (1 - 1e-14)):
        raise OutOfDomain(f"ae_c below its minimum {table.scale}")
    return sec.local_ae(ae_c)


def hyperbola_ranges(spec: PolygonSpec) -> list[tuple[float, float]]:
    """Range of ``ah / f`` of the side hyperbolas that run to infinity uncut, per side."""
    g = spec.gamma
    return [(-math.cos(g[(k + 1) % spec.n]), math.cos(g[k])) for k in range(spec.n)]


def angle_transfer(spec: PolygonSpec, vertex: int, which: str, theta_local):
    """Side-chart angle at a ray crossing -> wedge-chart angle of the same trajectory.

    ``which="prev"`` is the ray extending the side entering ``vertex``
    (e.g. ``1_31`` for vertex 0); ``"next"`` the one extending the side
    leaving it (``1_12``).  The returned angle is the magnitude of the wedge
    chart's local angle.
    """
    k = vertex % spec.n
    f = spec.f
    fv = vertex_frame(spec, k).f
    c = np.cos(np.asarray(theta_local, dtype=float))
    if which == "prev":
        arg = (f[k - 1] - f[k] * c) / fv
    elif which == "next":
        arg = (-f[k] - f[k - 1] * c) / fv
    else:
        raise ValueError(which)
    if np.any(np.abs(arg) > 1 + 1e-12):
        raise OutOfRange("angle outside the ray's admissible range")
    return np.arccos(np.clip(arg, -1.0, 1.0))


def forward(table: SectorTable, mu_c, theta_c, return_piece: bool = False):
    """Map common coordinates to the plane (vectorized)."""
    mu_c = np.asarray(mu_c, dtype=float)
    theta_c = np.asarray(theta_c, dtype=float)
    mu_c, theta_c = np.broadcast_arrays(mu_c, theta_c)
    ae_c = table.scale * np.cosh(mu_c)
    th = np.mod(theta_c, TWO_PI)
    idx = table.locate(th)
    out = np.empty(mu_c.shape + (2,))
    piece = np.empty(mu_c.shape, dtype=object)
    for i, sec in enumerate(table.sectors):
        m = idx == i
        if not np.any(m):
            continue
        a, t = ae_c[m], th[m]
        if sec.compressed:
            near = a <= sec.switch_ae_c(t)
            res = np.empty(a.shape + (2,))
            res[near] = sec.point(a[near], t[near])
            res[~near] = sec.far.point(a[~near], t[~near])
            out[m] = res
            piece[m] = np.where(near, sec.label, sec.far.label)
        else:
            out[m] = sec.point(a, t)
            piece[m] = sec.label
    if return_piece:
        return out, piece
    return out


def piece_at(table: SectorTable, mu_c, theta_c) -> np.ndarray:
    return forward(table, mu_c, theta_c, return_piece=True)[1]


def _local_angle(frame: LocalFrame, p, ae):
    a, b = to_local_ab(frame, p)
    minor = np.sqrt(np.maximum(ae * ae - frame.f ** 2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        sin_t = np.where(minor > 0, b / minor, 0.0)
    return np.arctan2(sin_t, a / ae)


def classify(spec: PolygonSpec, p) -> np.ndarray:
    """Region code per point: ``k`` for side region k, ``n + k`` for the wedge at vertex k,
    ``-1`` inside or on the polygon.  Points on a ray count as side-region points."""
    p = np.asarray(p, dtype=float).reshape(-1, 2)
    n = spec.n
    v = spec.verts
    vis = np.empty((p.shape[0], n), dtype=bool)
    for k in range(n):
        e = v[(k + 1) % n] - v[k]
        rel = p - v[k]
        cross = e[0] * rel[:, 1] - e[1] * rel[:, 0]
        vis[:, k] = cross < 0.0
    count = vis.sum(axis=1)
    code = np.full(p.shape[0], -1, dtype=int)
    one = count == 1
    code[one] = np.argmax(vis[one], axis=1)
    two = count == 2
    for k in range(n):
        both = two & vis[:, k] & vis[:, k - 1]
        code[both] = n + k
    return code


def inverse(table: SectorTable, p, return_piece: bool = False):
    """Closed-form inverse of :func:`forward` for exterior points.

    Returns arrays ``(mu_c, theta_c)`` (and piece labels when requested).
    Raises :class:`ProtectedRegion` if any point is inside or on the polygon.
    """
    spec = table.spec
    pts = np.asarray(p, dtype=float).reshape(-1, 2)
    code = classify(spec, pts)
    if np.any(code < 0):
        bad = pts[code < 0][0]
        raise ProtectedRegion(f"point {bad.tolist()} is inside or on the polygon")
    n, f = spec.n, spec.f
    v = spec.verts
    r = np.stack([np.hypot(*(pts - v[k]).T) for k in range(n)], axis=1)
    s = np.empty(len(pts))
    theta = np.empty(len(pts))
    labels = np.empty(len(pts), dtype=object)
    by_label = {sec.label: sec for sec in table.all_pieces}
    for k in range(n):
        # wedge at vertex k: the far (bar) piece
        m = code == n + k
        if np.any(m):
            sk = 0.5 * (r[m, (k - 1) % n] + r[m, (k + 1) % n]) - f[k - 1] - f[k]
            bar = table.bars[k]
            ae = sk + f[k - 1] + f[k]
            th_v = _local_angle(bar.frame, pts[m], ae)
            s[m] = sk
            theta[m] = th_v - bar.kappa
            labels[m] = bar.label
        # side region k
        m = code == k
        if np.any(m):
            q = (k + 1) % n
            sk = 0.5 * (r[m, k] + r[m, q]) - f[k]
            fr = side_frame(spec, k)
            ae = sk + f[k]
            th = _local_angle(fr, pts[m], ae)
            g = spec.gamma
            out = np.empty(th.shape)
            lab = np.empty(th.shape, dtype=object)
            true = (th >= g[k]) & (th <= math.pi - g[q])
            front = th < g[k]
            before = th > math.pi - g[q]
            a_true = [sec for sec in table.sectors if sec.kind == TRUE and sec.frame.i == k]
            if np.any(true):
                sec = a_true[0] if a_true else None
                kap = sec.kappa if sec else _wrap_pi(table.alpha0 - fr.beta)
                out[true] = th[true] - kap
                lab[true] = sec.label if sec else f"A{k + 1}"
            if np.any(front):
                bar = table.bars[k]
                arg = (f[k - 1] - f[k] * np.cos(th[front])) / bar.frame.f
                out[front] = -np.arccos(np.clip(arg, -1, 1)) - bar.kappa
                lab[front] = f"{bar.label}F"
            if np.any(before):
                bar = table.bars[q]
                arg = (-f[q] - f[k] * np.cos(th[before])) / bar.frame.f
                out[before] = -np.arccos(np.clip(arg, -1, 1)) - bar.kappa
                lab[before] = f"{bar.label}B"
            s[m] = sk
            theta[m] = out
            labels[m] = lab
    mu = arccosh1p(np.maximum(s, 0.0) / table.scale)
    theta = np.mod(theta, TWO_PI)
    theta = np.where(theta >= TWO_PI, 0.0, theta)
    shape = np.shape(p)[:-1]
    mu, theta, labels = mu.reshape(shape), theta.reshape(shape), labels.reshape(shape)
    if return_piece:
        return mu, theta, labels
    return mu, theta


def inverse_point(table: SectorTable, p) -> tuple[CommonCoord, str]:
    mu, th, lab = inverse(table, np.asarray(p, dtype=float)[None, :], return_piece=True)
    return CommonCoord(float(mu[0]), float(th[0]), table.scale), str(lab[0])


def perimeter_distance(spec: PolygonSpec, pts) -> np.ndarray:
    """Distance from each point to the polygon boundary."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    v = spec.verts
    best = np.full(len(pts), np.inf)
    for k in range(spec.n):
        a, b = v[k], v[(k + 1) % spec.n]
        e = b - a
        t = np.clip(((pts - a) @ e) / (e @ e), 0.0, 1.0)
        d = np.hypot(*(pts - (a + t[:, None] * e)).T)
        best = np.minimum(best, d)
    return best


def classical_elliptic(f: float, mu, theta) -> np.ndarray:
    """Single elliptic chart on the segment from (0, 0) to (2f, 0), positive focus at the origin."""
    mu = np.asarray(mu, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a = f * np.cosh(mu) * np.cos(theta)
    b = f * np.sinh(mu) * np.sin(theta)
    return np.stack([f - a, -b], axis=-1)


def _branch_point(sec: Sector, ae_c, theta_c) -> np.ndarray:
    """Closed form of one angular sector, continued to ``theta_c`` regardless of range."""
    if not sec.compressed:
        return sec.point(ae_c, theta_c)
    near = ae_c <= sec.switch_ae_c(theta_c)
    out = np.empty(np.shape(ae_c) + (2,))
    out[near] = sec.point(ae_c[near], theta_c[near])
    out[~near] = sec.far.point(ae_c[~near], theta_c[~near])
    return out


def boundary_mismatch(table: SectorTable, mu_c) -> float:
    """Largest gap between the two neighbouring sector maps on every angular boundary.

    Normalized by the radial scale ``f_1 + f_n``.
    """
    mu_c = np.asarray(mu_c, dtype=float)
    ae_c = table.scale * np.cosh(mu_c)
    secs = table.sectors
    worst = 0.0
    for i, sec in enumerate(secs):
        prev = secs[i - 1]
        th_lo = np.full(ae_c.shape, sec.theta_lo)
        # the first boundary is reached by the last sector at theta + 2 pi
        th_prev = np.full(ae_c.shape, prev.theta_hi if i else prev.theta_hi - TWO_PI)
        gap = _branch_point(sec, ae_c, th_lo) - _branch_point(prev, ae_c, th_prev)
        worst = max(worst, float(np.max(np.hypot(gap[..., 0], gap[..., 1]))))
    return worst / table.scale


def degeneration_offset(spec: PolygonSpec) -> float:
    """theta_c of the classical angle origin: the vertex-1 hyperbola angle less gamma_1 + gamma_n."""
    return vertex_hyperbola_angle(spec, 0) - spec.gamma[0] - spec.gamma[-1]


def degeneration_deviation(ratio: float, f1: float = 1.0, n_mu: int = 20, n_theta: int = 40,
                           mu_max: float = 2.0) -> float:
    """Sup-norm distance to classical elliptic coordinates for ``f = (f1, f1, ratio f1)``.

    The grid is fixed (``mu_c`` in ``(0, mu_max]``, ``theta_c`` uniform); the
    classical angle is measured from the common system's vertex-1 origin.
    """
    from .geometry import build_polygon

    spec = build_polygon((f1, f1, ratio * f1))
    table = sector_partition(spec)
    mu, th = np.meshgrid(np.linspace(mu_max / n_mu, mu_max, n_mu),
                         np.linspace(0.0, TWO_PI, n_theta, endpoint=False))
    p = forward(table, mu, th)
    q = classical_elliptic(f1, mu, th - degeneration_offset(spec))
    return float(np.max(np.hypot(*(p - q).reshape(-1, 2).T))) / f1
