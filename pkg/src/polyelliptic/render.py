"""Deterministic SVG and CSV rendering of coordinate nets.

Isolines are sampled adaptively: an interval is bisected until the sagitta of
its chord (distance of the midpoint image from the chord) falls below a
fraction of the radial scale ``f_1 + f_n``.
"""
from __future__ import annotations

import io
import math

import numpy as np

from .atlas import TWO_PI, SectorTable, forward, sector_partition
from .config import RunConfig
from .geometry import dashed_rays

SAGITTA_FRACTION = 0.002
MAX_DEPTH = 18


def fmt(x: float) -> str:
    """Round-trip float formatting used for every CSV/JSON number."""
    return format(float(x), ".17g")


def _sagitta(p0, pm, p1):
    chord = p1 - p0
    length = np.hypot(chord[:, 0], chord[:, 1])
    rel = pm - p0
    cross = np.abs(chord[:, 0] * rel[:, 1] - chord[:, 1] * rel[:, 0])
    direct = np.hypot(rel[:, 0], rel[:, 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(length > 0, cross / length, direct)


def adaptive_curve(fn, breaks, tol: float, min_pieces: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Sample the planar curve ``fn(t)`` over the sorted ``breaks``.

    Every break is kept as a node; intervals are refined (all at once per
    level) until the chord sagitta is below ``tol``.
    """
    breaks = np.asarray(breaks, dtype=float)
    nodes = [np.linspace(breaks[i], breaks[i + 1], min_pieces + 1)[:-1]
             for i in range(len(breaks) - 1)]
    t = np.append(np.concatenate(nodes), breaks[-1])
    for _ in range(MAX_DEPTH):
        a, b = t[:-1], t[1:]
        mid = 0.5 * (a + b)
        pts = fn(t)
        pm = fn(mid)
        bad = _sagitta(pts[:-1], pm, pts[1:]) > tol
        if not np.any(bad):
            break
        t = np.sort(np.concatenate([t, mid[bad]]))
    return t, fn(t)


def mu_isoline(table: SectorTable, mu: float, tol: float):
    """Closed curve ``mu_c = mu`` (first point repeated at the end)."""
    def fn(th):
        return forward(table, np.full_like(th, mu), th)

    return adaptive_curve(fn, table.boundaries, tol)


def theta_isoline(table: SectorTable, theta: float, mu_max: float, tol: float):
    """Open curve ``theta_c = theta`` from the perimeter out to ``mu_max``."""
    def fn(m):
        return forward(table, m, np.full_like(m, theta))

    return adaptive_curve(fn, [0.0, mu_max], tol)


def net_polylines(cfg: RunConfig, table: SectorTable | None = None) -> list[tuple[str, int, float, np.ndarray]]:
    """All polylines of the net as ``(kind, index, value, points)``."""
    table = table or sector_partition(cfg.polygon)
    spec = cfg.polygon
    tol = SAGITTA_FRACTION * table.scale
    mu_max = max(cfg.mu_values)
    lines = []
    for i, mu in enumerate(cfg.mu_values):
        _, pts = mu_isoline(table, mu, tol)
        lines.append(("mu", i, float(mu), pts))
    for i in range(cfg.theta_count):
        th = TWO_PI * i / cfg.theta_count
        _, pts = theta_isoline(table, th, mu_max, tol)
        lines.append(("theta", i, th, pts))
    v = spec.verts
    lines.append(("polygon", 0, 0.0, np.vstack([v, v[:1]])))
    reach = table.scale * math.cosh(mu_max) * 1.25
    for i, r in enumerate(dashed_rays(spec)):
        lines.append(("ray", i, r.angle, r.point(np.array([0.0, reach]))))
    if cfg.interior_grid and spec.n == 4:
        lo, hi = v.min(axis=0), v.max(axis=0)
        for i, s in enumerate(np.linspace(0.0, 1.0, 9)[1:-1]):
            x = lo[0] + s * (hi[0] - lo[0])
            y = lo[1] + s * (hi[1] - lo[1])
            lines.append(("interior", 2 * i, float(x), np.array([[x, lo[1]], [x, hi[1]]])))
            lines.append(("interior", 2 * i + 1, float(y), np.array([[lo[0], y], [hi[0], y]])))
    return lines


def polylines_csv(lines) -> str:
    out = io.StringIO()
    out.write("kind,index,value,point,x,y\n")
    for kind, idx, val, pts in lines:
        for j, (x, y) in enumerate(pts):
            out.write(f"{kind},{idx},{fmt(val)},{j},{fmt(x)},{fmt(y)}\n")
    return out.getvalue()


STYLE = {
    "mu": 'stroke="#1f4e9c" stroke-width="1"',
    "theta": 'stroke="#b03a2e" stroke-width="1"',
    "polygon": 'stroke="#000000" stroke-width="2" fill="#e8e8e8"',
    "ray": 'stroke="#444444" stroke-width="1" stroke-dasharray="6,4"',
    "interior": 'stroke="#7a7a7a" stroke-width="0.5"',
    "boundary": 'stroke="#888888" stroke-width="0.5"',
}


def _svg(lines, bbox, size: float = 800.0, flip: bool = True, axes: str = "") -> str:
    (x0, y0), (x1, y1) = bbox
    scale = size / max(x1 - x0, y1 - y0)
    w, h = (x1 - x0) * scale, (y1 - y0) * scale

    def path(pts):
        xs = (pts[:, 0] - x0) * scale
        ys = (y1 - pts[:, 1]) * scale if flip else (pts[:, 1] - y0) * scale
        return " ".join(f"{x:.3f},{y:.3f}" for x, y in zip(xs, ys))

    out = io.StringIO()
    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
              f'width="{w:.3f}" height="{h:.3f}" viewBox="0 0 {w:.3f} {h:.3f}">\n')
    out.write(axes)
    order = {"polygon": 0, "interior": 1, "mu": 2, "theta": 3, "boundary": 3, "ray": 4}
    for kind, idx, val, pts in sorted(lines, key=lambda e: (order[e[0]], e[1])):
        tag = "polygon" if kind == "polygon" else "polyline"
        fill = "" if kind == "polygon" else ' fill="none"'
        pts = pts[:-1] if kind == "polygon" else pts
        out.write(f'<{tag} class="{kind}" data-index="{idx}" {STYLE[kind]}{fill} '
                  f'points="{path(pts)}"/>\n')
    out.write("</svg>\n")
    return out.getvalue()


def render_net(cfg: RunConfig, with_csv: bool = False):
    """SVG of the net (and the CSV of its polylines when ``with_csv``)."""
    lines = net_polylines(cfg)
    # frame on the outermost closed isoline so rays do not set the extent
    outer = np.vstack([pts for kind, _, _, pts in lines if kind in ("mu", "polygon")])
    pad = 0.05 * np.ptp(outer, axis=0).max()
    bbox = (outer.min(axis=0) - pad, outer.max(axis=0) + pad)
    clipped = [(k, i, v, _clip_ray(pts, bbox)) if k == "ray" else (k, i, v, pts)
               for k, i, v, pts in lines]
    svg = _svg(clipped, bbox)
    return (svg, polylines_csv(lines)) if with_csv else svg


def _clip_ray(pts, bbox):
    """Shorten a two-point ray so it ends on the bounding box."""
    (x0, y0), (x1, y1) = bbox
    p, q = pts[0], pts[-1]
    d = q - p
    tmax = 1.0
    for lo, hi, pc, dc in ((x0, x1, p[0], d[0]), (y0, y1, p[1], d[1])):
        if dc > 0:
            tmax = min(tmax, (hi - pc) / dc)
        elif dc < 0:
            tmax = min(tmax, (lo - pc) / dc)
    return np.array([p, p + max(tmax, 0.0) * d])


def rect_polylines(cfg: RunConfig, table: SectorTable | None = None):
    """Diagnostic curves in the (log ae_c, theta_c) rectangle.

    Horizontal lines are the theta_c isolines and sector boundaries; each
    dashed ray appears as the curve where a compressed sector switches from
    its side-chart piece to its wedge piece.
    """
    table = table or sector_partition(cfg.polygon)
    F = table.scale
    lo = math.log(F)
    hi = math.log(F * math.cosh(max(cfg.mu_values)))
    lines = []
    for i in range(cfg.theta_count):
        th = TWO_PI * i / cfg.theta_count
        lines.append(("theta", i, th, np.array([[lo, th], [hi, th]])))
    for i, b in enumerate(table.boundaries):
        lines.append(("boundary", i, float(b), np.array([[lo, b], [hi, b]])))
    n_ray = 0
    for sec in table.sectors:
        if not sec.compressed:
            continue
        th = np.linspace(sec.theta_lo, sec.theta_hi, 801)
        ae = sec.switch_ae_c(th)
        ok = np.isfinite(ae) & (ae >= F) & (np.log(np.where(ae > 0, ae, 1.0)) <= hi)
        pts = np.column_stack([np.log(ae[ok]), th[ok]])
        lines.append(("ray", n_ray, float(sec.theta_lo), pts))
        n_ray += 1
    return lines


def render_rect(cfg: RunConfig, with_csv: bool = False):
    lines = rect_polylines(cfg)
    F = sector_partition(cfg.polygon).scale
    lo = math.log(F)
    hi = math.log(F * math.cosh(max(cfg.mu_values)))
    # stretch the log axis to the height of the theta_c range
    sx = TWO_PI / max(hi - lo, 1e-12)
    scaled = [(k, i, v, np.column_stack([(p[:, 0] - lo) * sx, p[:, 1]])) for k, i, v, p in lines]
    bbox = (np.array([0.0, 0.0]), np.array([TWO_PI, TWO_PI]))
    svg = _svg(scaled, bbox, flip=True)
    return (svg, polylines_csv(lines)) if with_csv else svg
