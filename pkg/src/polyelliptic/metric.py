"""Jacobians, scale factors and Stäckel factors of the common coordinates.

Inside one coefficient piece the point is ``R(beta) (A, B) + m`` with
``A = ae cos(t)``, ``B = sqrt(ae^2 - f^2) sin(t)``, ``ae = F cosh(mu_c) - offset``
and ``t`` a function of ``theta_c`` alone, so every piece has the Stäckel form

    H_theta^2 = g1(theta_c) [h1(mu_c) + h2(theta_c)]
    H_mu^2    = g2(mu_c)    [h1(mu_c) + h2(theta_c)]

with ``g1 = t'^2``, ``h1 = ae^2``, ``h2 = -f^2 cos^2 t`` and
``g2 = F^2 sinh^2(mu_c) / (ae^2 - f^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .atlas import TWO_PI, Sector, SectorTable, forward, piece_at
from .errors import BoundaryPoint, SeparabilityFailure


@dataclass
class MetricSample:
    mu_c: np.ndarray
    theta_c: np.ndarray
    dx_dmu: np.ndarray
    dx_dtheta: np.ndarray
    dy_dmu: np.ndarray
    dy_dtheta: np.ndarray

    @property
    def H_mu(self) -> np.ndarray:
        return np.hypot(self.dx_dmu, self.dy_dmu)

    @property
    def H_theta(self) -> np.ndarray:
        return np.hypot(self.dx_dtheta, self.dy_dtheta)

    @property
    def g12(self) -> np.ndarray:
        return self.dx_dmu * self.dx_dtheta + self.dy_dmu * self.dy_dtheta

    @property
    def normalized_offdiag(self) -> np.ndarray:
        return np.abs(self.g12) / (self.H_mu * self.H_theta)


def _pieces(table: SectorTable) -> dict[str, Sector]:
    return {s.label: s for s in table.all_pieces}


def _minor_sq(sec: Sector, table: SectorTable, mu):
    """ae^2 - f^2 written to stay accurate where a side piece touches its segment."""
    f = sec.frame.f
    F = table.scale
    d0 = (F - sec.offset) - f           # ae - f at mu_c = 0
    ae = F * np.cosh(mu) - sec.offset
    return (d0 + 2.0 * F * np.sinh(0.5 * mu) ** 2) * (ae + f)


def _analytic(table: SectorTable, sec: Sector, mu, th):
    F = table.scale
    f = sec.frame.f
    ae = F * np.cosh(mu) - sec.offset
    ae_mu = F * np.sinh(mu)
    t = sec.local_angle(th)
    rate = sec.local_angle_rate(th)
    minor = np.sqrt(np.maximum(_minor_sq(sec, table, mu), 0.0))
    ct, st = np.cos(t), np.sin(t)
    da_mu = ae_mu * ct
    with np.errstate(divide="ignore", invalid="ignore"):
        db_mu = ae * ae_mu / minor * st
    da_th = -ae * st * rate
    db_th = minor * ct * rate
    cb, sb = np.cos(sec.frame.beta), np.sin(sec.frame.beta)
    return (da_mu * cb - db_mu * sb, da_th * cb - db_th * sb,
            da_mu * sb + db_mu * cb, da_th * sb + db_th * cb)


def jacobian(table: SectorTable, mu_c, theta_c, mode: str = "analytic",
             on_boundary: str = "raise") -> MetricSample:
    """Partial derivatives of (x, y) with respect to (mu_c, theta_c).

    ``mode="analytic"`` differentiates the piece's closed form;
    ``mode="fd"`` uses central differences with step ``1e-6 max(1, mu_c)``
    (five-point where the stencil fits in one piece, three-point otherwise)
    and one-sided stencils whenever a central one would straddle two pieces.
    Analytic evaluation exactly on an angular sector boundary raises :class:`BoundaryPoint` unless ``on_boundary="lower"``.
    """
    mu = np.atleast_1d(np.asarray(mu_c, dtype=float))
    th = np.atleast_1d(np.mod(np.asarray(theta_c, dtype=float), TWO_PI))
    mu, th = np.broadcast_arrays(mu, th)
    if mode == "analytic":
        if on_boundary == "raise":
            b = table.boundaries
            near = np.min(np.abs(th[..., None] - b), axis=-1) < 1e-14
            if np.any(near):
                raise BoundaryPoint("analytic Jacobian requested on a sector boundary")
        labels = piece_at(table, mu, th)
        parts = [np.empty(mu.shape) for _ in range(4)]
        for lab, sec in _pieces(table).items():
            m = labels == lab
            if np.any(m):
                vals = _analytic(table, sec, mu[m], th[m])
                for p, v in zip(parts, vals):
                    p[m] = v
        return MetricSample(mu, th, *parts)
    if mode == "fd":
        return _finite_difference(table, mu, th)
    raise ValueError(f"unknown mode {mode!r}")


def _fd_axis(table, mu, th, along_mu: bool):
    h = 1e-6 * np.maximum(1.0, mu)

    def at(k):
        if along_mu:
            return forward(table, mu + k * h, th, return_piece=True)
        return forward(table, mu, th + k * h, return_piece=True)

    p0, l0 = at(0)
    pp, lp = at(1)
    pm, lm = at(-1)
    p2, l2 = at(2)
    pm2, lm2 = at(-2)
    hh = h[..., None]
    same_c = (lp == l0) & (lm == l0)
    if along_mu:
        same_c &= mu - h >= 0
    wide = same_c & (l2 == l0) & (lm2 == l0)
    if along_mu:
        wide &= mu - 2 * h >= 0
    out = (pp - pm) / (2 * hh)
    out[wide] = ((8 * (pp - pm) - (p2 - pm2)) / (12 * hh))[wide]
    if not np.all(same_c):
        fwd = (-3 * p0 + 4 * pp - p2) / (2 * hh)
        bwd = (3 * p0 - 4 * pm + pm2) / (2 * hh)
        use_f = ~same_c & (lp == l0) & (l2 == l0)
        use_b = ~same_c & ~use_f
        out[use_f] = fwd[use_f]
        out[use_b] = bwd[use_b]
    return out


def _finite_difference(table, mu, th) -> MetricSample:
    d_mu = _fd_axis(table, mu, th, True)
    d_th = _fd_axis(table, mu, th, False)
    return MetricSample(mu, th, d_mu[..., 0], d_th[..., 0], d_mu[..., 1], d_th[..., 1])


def scale_factors(table: SectorTable, mu_c, theta_c, pieces=None):
    """Closed-form squared scale factors ``(H_mu^2, H_theta^2)``."""
    mu = np.atleast_1d(np.asarray(mu_c, dtype=float))
    th = np.atleast_1d(np.mod(np.asarray(theta_c, dtype=float), TWO_PI))
    mu, th = np.broadcast_arrays(mu, th)
    labels = piece_at(table, mu, th) if pieces is None else np.broadcast_to(pieces, mu.shape)
    hmu = np.empty(mu.shape)
    hth = np.empty(mu.shape)
    for lab, sec in _pieces(table).items():
        m = labels == lab
        if not np.any(m):
            continue
        fac = stackel_factors(table, sec, check=False)
        core = fac.h1(mu[m]) + fac.h2(th[m])
        hth[m] = fac.g1(th[m]) * core
        hmu[m] = fac.g2(mu[m]) * core
    return hmu, hth


@dataclass(frozen=True)
class StackelFactors:
    sector: str
    theta_range: tuple[float, float]
    g1: Callable
    g2: Callable
    h1: Callable
    h2: Callable


def stackel_factors(table: SectorTable, sector, check: bool = True, tol: float = 1e-10,
                    n_check: int = 64) -> StackelFactors:
    """Stäckel factors of one piece.

    The gauge is ``g1 = t'^2`` and ``h1 = ae^2`` in every piece, which on the
    wedge piece at vertex 1 reproduces ``g1 = 1``, ``h1 = (f1 + f3)^2 cosh^2 mu_c``.
    With ``check`` the factors are compared with the Jacobian on random
    in-piece samples and :class:`SeparabilityFailure` is raised on mismatch.
    """
    sec = table.piece(sector) if isinstance(sector, str) else sector
    F = table.scale
    f = sec.frame.f

    def g1(theta):
        return sec.local_angle_rate(theta) ** 2

    def h2(theta):
        return -(f * np.cos(sec.local_angle(theta))) ** 2

    def h1(mu):
        return (F * np.cosh(np.asarray(mu, dtype=float)) - sec.offset) ** 2

    def g2(mu):
        mu = np.asarray(mu, dtype=float)
        return (F * np.sinh(mu)) ** 2 / _minor_sq(sec, table, mu)

    fac = StackelFactors(sec.label, (sec.theta_lo, sec.theta_hi), g1, g2, h1, h2)
    if check:
        rng = np.random.default_rng(0)
        mu, th = sample_in_piece(table, sec, n_check, rng)
        js = jacobian(table, mu, th, on_boundary="lower")
        core = h1(mu) + h2(th)
        r1 = np.abs(js.H_theta ** 2 - g1(th) * core) / (js.H_theta ** 2)
        r2 = np.abs(js.H_mu ** 2 - g2(mu) * core) / (js.H_mu ** 2)
        worst = float(max(r1.max(), r2.max()))
        if not worst < tol:
            raise SeparabilityFailure(f"{sec.label}: Stäckel mismatch {worst:.3e}")
    return fac


def _mu_switch(table: SectorTable, sec: Sector, theta):
    from .atlas import mu_c_from_ae_c

    ae = sec.switch_ae_c(theta)
    with np.errstate(invalid="ignore"):
        return np.where(np.isfinite(ae), mu_c_from_ae_c(table, np.maximum(ae, table.scale)), np.inf)


def piece_mu_window(table: SectorTable, sec: Sector, theta, mu_max: float = 4.0):
    """(lo, hi) of mu_c for which (mu_c, theta) lies in piece ``sec``."""
    theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    if sec.kind == "bar":
        idx = table.locate(theta)
        lo = np.empty(theta.shape)
        for i, s in enumerate(table.sectors):
            m = idx == i
            if np.any(m):
                lo[m] = _mu_switch(table, s, theta[m]) if s.far is not None and s.far.label == sec.label else np.inf
        return lo, np.full(theta.shape, mu_max)
    if sec.compressed:
        return np.zeros(theta.shape), np.minimum(_mu_switch(table, sec, theta), mu_max)
    return np.zeros(theta.shape), np.full(theta.shape, mu_max)


def _theta_draw(sec: Sector, rng, size, margin: float):
    lo, hi = sec.theta_lo, sec.theta_hi
    w = hi - lo
    return lo + w * (margin + (1 - 2 * margin) * rng.random(size))


def sample_in_piece(table: SectorTable, sec: Sector, size: int, rng, mu_max: float = 4.0,
                    margin: float = 0.02):
    """Random interior points of one piece, away from its borders."""
    mus, ths = [], []
    got = 0
    while got < size:
        th = _theta_draw(sec, rng, 4 * size, margin)
        lo, hi = piece_mu_window(table, sec, th, mu_max)
        lo = np.maximum(lo, 1e-3)
        ok = hi - lo > 0.05
        th, lo, hi = th[ok], lo[ok], hi[ok]
        mu = lo + (hi - lo) * (0.02 + 0.96 * rng.random(th.shape))
        mus.append(mu)
        ths.append(np.mod(th, TWO_PI))
        got += len(mu)
    return np.concatenate(mus)[:size], np.concatenate(ths)[:size]


def sample_quadruples(table: SectorTable, sec: Sector, size: int, rng, mu_max: float = 4.0):
    """Pairs (mu1, mu2) x (theta1, theta2) with all four corners inside ``sec``."""
    out = []
    got = 0
    while got < size:
        th = _theta_draw(sec, rng, (4 * size, 2), 0.02)
        lo1, hi1 = piece_mu_window(table, sec, th[:, 0], mu_max)
        lo2, hi2 = piece_mu_window(table, sec, th[:, 1], mu_max)
        lo = np.maximum(np.maximum(lo1, lo2), 1e-3)
        hi = np.minimum(hi1, hi2)
        ok = hi - lo > 0.05
        th, lo, hi = th[ok], lo[ok], hi[ok]
        mu = lo[:, None] + (hi - lo)[:, None] * (0.02 + 0.96 * rng.random((len(lo), 2)))
        out.append(np.concatenate([mu, np.mod(th, TWO_PI)], axis=1))
        got += len(lo)
    return np.concatenate(out)[:size]


def separability_residual(table: SectorTable, samples: int | np.ndarray = 10_000,
                          seed: int = 0) -> float:
    """Largest normalized mixed difference of ``S = H_theta^2 / g1`` over in-piece quadruples.

    ``S(m1,t1) - S(m1,t2) - S(m2,t1) + S(m2,t2)`` vanishes for a Stäckel
    metric; ``H_theta`` comes from the analytic Jacobian, not from the factors.
    ``samples`` is either a count (spread over all pieces) or an array of
    rows ``(piece_index, mu1, mu2, theta1, theta2)``.
    """
    pieces = table.all_pieces
    if np.isscalar(samples):
        rng = np.random.default_rng(seed)
        per = max(1, int(samples) // len(pieces))
        rows = []
        for i, sec in enumerate(pieces):
            q = sample_quadruples(table, sec, per, rng)
            rows.append(np.concatenate([np.full((len(q), 1), i), q], axis=1))
        samples = np.concatenate(rows)
    samples = np.asarray(samples, dtype=float)
    worst = 0.0
    for i, sec in enumerate(pieces):
        rows = samples[samples[:, 0] == i]
        if len(rows) == 0:
            continue
        fac = stackel_factors(table, sec, check=False)
        m1, m2, t1, t2 = rows[:, 1], rows[:, 2], rows[:, 3], rows[:, 4]
        vals = []
        for mu, th in ((m1, t1), (m1, t2), (m2, t1), (m2, t2)):
            js = jacobian(table, mu, th, on_boundary="lower")
            vals.append(js.H_theta ** 2 / fac.g1(th))
        mixed = vals[0] - vals[1] - vals[2] + vals[3]
        scale = np.max(np.abs(vals), axis=0)
        worst = max(worst, float(np.max(np.abs(mixed) / scale)))
    return worst


def elliptic_control_residual(f: float = 1.0, samples: int = 1000, seed: int = 0) -> float:
    """Same mixed-difference statistic for a single classical elliptic chart."""
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.05, 4.0, (samples, 2))
    t = rng.uniform(0.0, TWO_PI, (samples, 2))

    def s(mu, th):
        # |d(x, y)/d theta|^2 for x = f cosh mu cos th, y = f sinh mu sin th
        return (f * np.cosh(mu) * np.sin(th)) ** 2 + (f * np.sinh(mu) * np.cos(th)) ** 2

    vals = [s(m[:, 0], t[:, 0]), s(m[:, 0], t[:, 1]), s(m[:, 1], t[:, 0]), s(m[:, 1], t[:, 1])]
    mixed = vals[0] - vals[1] - vals[2] + vals[3]
    return float(np.max(np.abs(mixed) / np.max(vals, axis=0)))


def metric_profile(table: SectorTable, mu_c: float, n_theta: int = 721):
    """``(theta_c, H_theta^2, H_mu^2, piece)`` along one ``mu_c`` isoline.

    Sector boundaries and the dashed-ray crossings (where a compressed
    sector switches piece) are inserted as extra samples so kinks sit on nodes.
    """
    th = np.linspace(0.0, TWO_PI, n_theta)
    th = np.unique(np.concatenate([th, table.boundaries]))
    mu = np.full(th.shape, float(mu_c))
    labels = piece_at(table, mu, th)
    crossings = []
    for i in np.nonzero(labels[1:] != labels[:-1])[0]:
        lo, hi = th[i], th[i + 1]
        if table.locate(lo) != table.locate(hi) or lo in table.boundaries:
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if piece_at(table, mu_c, mid) == labels[i]:
                lo = mid
            else:
                hi = mid
        crossings.append(lo)
    if crossings:
        th = np.unique(np.concatenate([th, crossings]))
        mu = np.full(th.shape, float(mu_c))
        labels = piece_at(table, mu, th)
    hmu, hth = scale_factors(table, mu, th, labels)
    return th, hth, hmu, labels
