"""Solvers for the two separated Helmholtz ODEs and the classical Mathieu oracle.

Angular equation (periodic in theta_c)::

    Psi1'' - g1'/(2 g1) Psi1' + g1 (lam + k^2 h2) Psi1 = 0

Radial equation::

    Psi2'' - g2'/(2 g2) Psi2' - g2 (lam - k^2 h1) Psi2 = 0

The angular coefficients are taken from the chart in which each theta_c
isoline runs to infinity.  There the local angle is theta_c plus a constant,
so ``g1 = 1`` and the angular problem is the Hill equation
``Psi1'' + (lam + k^2 h2(theta_c)) Psi1 = 0`` with ``h2`` piecewise
``-f^2 cos^2``.  The radial equation depends on the piece; it is integrated
for one named piece at a time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .atlas import TWO_PI, Sector, SectorTable, piece_at
from .errors import ConvergenceFailure
from .metric import scale_factors

# ---------------------------------------------------------------- Mathieu oracle


def _mathieu_matrix(q: float, parity: str, odd_order: bool, size: int):
    """Tridiagonal (diag, offdiag) of the Fourier-mode recurrences of y'' + (a - 2q cos 2t) y = 0."""
    if not odd_order:
        m = np.arange(size)
        d = (2.0 * m) ** 2
        e = np.full(size - 1, q, dtype=float)
        if parity == "even":
            # basis 1/sqrt(2), cos 2t, cos 4t, ...: symmetrized first coupling
            e[0] = math.sqrt(2.0) * q
        else:
            d = (2.0 * (m + 1)) ** 2
    else:
        m = np.arange(size)
        d = (2.0 * m + 1) ** 2
        d[0] += q if parity == "even" else -q
        e = np.full(size - 1, q, dtype=float)
    return d.astype(float), e


def mathieu_characteristic(q: float, n: int, parity: str = "even", size: int | None = None) -> float:
    """Characteristic value ``a_n(q)`` (``parity="even"``) or ``b_n(q)`` (``"odd"``).

    Eigenvalue of the truncated tridiagonal Fourier-coefficient matrix; the
    truncation grows with ``n`` and ``|q|``.
    """
    if parity not in ("even", "odd"):
        raise ValueError(parity)
    if parity == "odd" and n < 1:
        raise ValueError("b_n is defined for n >= 1")
    if size is None:
        size = 40 + n + int(4 * math.sqrt(abs(q)))
    odd_order = n % 2 == 1
    if odd_order:
        idx = (n - 1) // 2
    elif parity == "even":
        idx = n // 2
    else:
        idx = n // 2 - 1
    d, e = _mathieu_matrix(q, parity, odd_order, size)
    vals = sla.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(idx, idx))
    return float(vals[0])


def mathieu_periodic_spectrum(q: float, count: int, size: int | None = None) -> np.ndarray:
    """First ``count`` eigenvalues of ``y'' + (a - 2q cos 2t) y = 0`` with period 2 pi."""
    vals = []
    for n in range(count + 1):
        vals.append(mathieu_characteristic(q, n, "even", size))
        if n >= 1:
            vals.append(mathieu_characteristic(q, n, "odd", size))
    return np.sort(vals)[:count]


# ------------------------------------------------------------ angular problem


@dataclass
class AngularEigenpair:
    n: int
    lam: float
    theta: np.ndarray
    psi: np.ndarray
    convergence_estimate: float
    weight: str = "sqrt(g1) = 1"


@dataclass
class AngularProblem:
    """Piecewise angular coefficients: ``h2`` per sector from its asymptotic chart."""

    table: SectorTable
    pieces: tuple[Sector, ...] = field(init=False)

    def __post_init__(self):
        self.pieces = tuple(s.far if s.compressed else s for s in self.table.sectors)

    @property
    def bounds(self) -> np.ndarray:
        return self.table.boundaries

    def g1(self, theta):
        return np.ones_like(np.asarray(theta, dtype=float))

    def h2_in(self, i: int, theta):
        sec = self.pieces[i]
        return -(sec.frame.f * np.cos(np.asarray(theta, dtype=float) + sec.kappa)) ** 2

    def h2(self, theta):
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        idx = self.table.locate(th)
        out = np.empty(th.shape)
        for i in range(len(self.pieces)):
            m = idx == i
            if np.any(m):
                out[m] = self.h2_in(i, th[m])
        return out

    def grid(self, n_target: int):
        """Nodes (without the 2 pi endpoint) containing every sector boundary."""
        b = self.bounds
        h = TWO_PI / n_target
        nodes, owner = [], []
        for i in range(len(b) - 1):
            m = max(1, int(math.ceil((b[i + 1] - b[i]) / h)))
            nodes.append(np.linspace(b[i], b[i + 1], m + 1)[:-1])
            owner.append(np.full(m, i))
        return np.concatenate(nodes), np.concatenate(owner)

    def assemble(self, k: float, n_target: int):
        """Periodic stiffness, lumped mass and potential (P1 elements, lumped quadrature)."""
        nodes, owner = self.grid(n_target)
        npts = len(nodes)
        hr = np.diff(np.append(nodes, TWO_PI))     # interval to the right of each node
        hl = np.roll(hr, 1)
        mass = 0.5 * (hl + hr)
        # one-sided h2 values at each node, weighted by the half cells they cover
        right = np.array([self.h2_in(o, t) for o, t in zip(owner, nodes)])
        left_owner = np.roll(owner, 1)
        left = np.array([self.h2_in(o, t) for o, t in zip(left_owner, nodes)])
        pot = (0.5 * hl * left + 0.5 * hr * right) / mass
        main = 1.0 / hl + 1.0 / hr - k * k * pot * mass
        off = -1.0 / hr
        rows = np.concatenate([np.arange(npts), np.arange(npts), (np.arange(npts) + 1) % npts])
        cols = np.concatenate([np.arange(npts), (np.arange(npts) + 1) % npts, np.arange(npts)])
        vals = np.concatenate([main, off, off])
        stiff = sp.csc_matrix((vals, (rows, cols)), shape=(npts, npts))
        return nodes, stiff, mass, pot

    def solve(self, k: float, count: int, n_target: int):
        nodes, stiff, mass, _ = self.assemble(k, n_target)
        s = 1.0 / np.sqrt(mass)
        sym = sp.diags(s) @ stiff @ sp.diags(s)
        npts = len(nodes)
        if npts <= 1200:
            vals, vecs = sla.eigh(sym.toarray(), subset_by_index=(0, count - 1))
        else:
            sigma = -1.0 - abs(k) ** 2 * 1e-3
            # fixed start vector: ARPACK would otherwise draw a random one
            v0 = 1.0 + 0.5 * np.cos(0.37 * np.arange(npts))
            vals, vecs = spla.eigsh(sym.tocsc(), k=count, sigma=sigma, which="LM", tol=1e-14, v0=v0)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
        psi = vecs * s[:, None]
        for j in range(psi.shape[1]):
            # fix the arbitrary eigenvector sign deterministically
            if psi[np.argmax(np.abs(psi[:, j])), j] < 0:
                psi[:, j] = -psi[:, j]
        return nodes, vals, psi, mass


def angular_spectrum(table: SectorTable, k: float, count: int, grid: int = 2048,
                     rtol: float = 1e-6, max_grid: int = 65536) -> list[AngularEigenpair]:
    """First ``count`` periodic eigenpairs of the angular equation.

    Eigenvalues are Richardson-extrapolated from grids ``N`` and ``2N``; the
    grid is doubled until the extrapolation correction is below ``rtol``
    relative (absolute for eigenvalues below 1), else
    :class:`ConvergenceFailure`.  Eigenfunctions come from the finer grid and
    are normalized so that the trapezoidal integral of ``Psi1^2`` is 1.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    prob = AngularProblem(table)
    n = grid
    _, coarse, _, _ = prob.solve(k, count, n)
    while True:
        nodes, fine, psi, mass = prob.solve(k, count, 2 * n)
        extrap = (4.0 * fine - coarse) / 3.0
        est = np.abs(extrap - fine)
        ok = est <= rtol * np.maximum(1.0, np.abs(extrap))
        if np.all(ok):
            break
        if 4 * n > max_grid:
            raise ConvergenceFailure(f"angular eigenvalues not converged: {est.max():.2e}")
        n *= 2
        coarse = fine
    out = []
    for j in range(count):
        v = psi[:, j] / math.sqrt(float(np.sum(mass * psi[:, j] ** 2)))
        out.append(AngularEigenpair(j, float(extrap[j]), nodes, v, float(est[j])))
    return out


def angular_solution(table: SectorTable, k: float, lam: float, theta0: float,
                     psi0: float, dpsi0: float, theta):
    """Integrate the angular equation from ``theta0`` to the points ``theta`` (same sector)."""
    prob = AngularProblem(table)
    i = int(table.locate(theta0))

    def rhs(t, y):
        return [y[1], -(lam + k * k * float(prob.h2_in(i, t))) * y[0]]

    theta = np.asarray(theta, dtype=float)
    res = np.empty(theta.shape)
    for sel, pick in ((theta >= theta0, np.max), (theta < theta0, np.min)):
        if not np.any(sel):
            continue
        end = float(pick(theta[sel]))
        if end == theta0:
            res[sel] = psi0
            continue
        sol = solve_ivp(rhs, (theta0, end), [psi0, dpsi0], method="DOP853", rtol=1e-13,
                        atol=1e-15, dense_output=True)
        res[sel] = sol.sol(theta[sel])[0]
    return res


# ------------------------------------------------------------- radial problem


@dataclass
class RadialSolution:
    k: float
    lam: float
    bc: str
    sector: str
    mu: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray

    def __call__(self, mu):
        spline = CubicHermiteSpline(self.mu, self.psi, self.dpsi)
        return spline(np.asarray(mu, dtype=float))


def _radial_coefficients(table: SectorTable, sec: Sector):
    F = table.scale
    f = sec.frame.f
    d0 = (F - sec.offset) - f

    def sqrt_g2(mu):
        ae = F * math.cosh(mu) - sec.offset
        sh = math.sinh(0.5 * mu)
        if d0 <= 1e-15 * F:
            # side charts touch their segment at mu_c = 0; cancel the sinh(mu/2)
            return math.sqrt(2.0 * F / (ae + f)) * math.cosh(0.5 * mu)
        return F * math.sinh(mu) / math.sqrt((d0 + 2.0 * F * sh * sh) * (ae + f))

    def h1(mu):
        return (F * math.cosh(mu) - sec.offset) ** 2

    return sqrt_g2, h1


def radial_solution(table: SectorTable, k: float, lam: float, bc: str = "unit",
                    mu_max: float = 3.0, steps: int = 3000, sector: str = "Abar2") -> RadialSolution:
    """Integrate the radial equation of one piece from mu_c = 0.

    Works on the first-order system ``Psi' = sqrt(g2) W``,
    ``W' = sqrt(g2) (lam - k^2 h1) Psi`` (``W = Psi'/sqrt(g2)``), which is the
    radial equation without the removable ``g2'/g2`` singularity at the
    perimeter.  Classic fixed-step RK4.  ``bc="unit"`` starts from
    ``Psi = 1, W = 0``; ``bc="dirichlet"`` from ``Psi = 0, W = 1``.
    """
    if mu_max <= 0 or steps < 2:
        raise ValueError("need mu_max > 0 and at least 2 steps")
    sec = table.piece(sector)
    sqrt_g2, h1 = _radial_coefficients(table, sec)
    k2 = k * k

    def rhs(mu, y):
        s = sqrt_g2(mu)
        return np.array([s * y[1], s * (lam - k2 * h1(mu)) * y[0]])

    if bc == "unit":
        y = np.array([1.0, 0.0])
    elif bc == "dirichlet":
        y = np.array([0.0, 1.0])
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    h = mu_max / steps
    mu = np.linspace(0.0, mu_max, steps + 1)
    ys = np.empty((steps + 1, 2))
    ys[0] = y
    for i in range(steps):
        m = mu[i]
        k1 = rhs(m, y)
        k2_ = rhs(m + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(m + 0.5 * h, y + 0.5 * h * k2_)
        k4 = rhs(m + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2_ + 2 * k3 + k4)
        ys[i + 1] = y
    dpsi = np.array([sqrt_g2(m) for m in mu]) * ys[:, 1]
    return RadialSolution(k, lam, bc, sector, mu, ys[:, 0], dpsi)


def radial_continue(table: SectorTable, sol: RadialSolution, mu) -> np.ndarray:
    """Continue ``Psi2`` off the RK4 nodes with a high-order integration from the nearest node."""
    mu = np.asarray(mu, dtype=float)
    sec = table.piece(sol.sector)
    sqrt_g2, h1 = _radial_coefficients(table, sec)
    k2 = sol.k ** 2
    j = int(np.argmin(np.abs(sol.mu - float(np.median(mu)))))
    s0 = sqrt_g2(float(sol.mu[j]))
    y0 = [float(sol.psi[j]), float(sol.dpsi[j]) / s0]

    def rhs(m, y):
        s = sqrt_g2(m)
        return [s * y[1], s * (sol.lam - k2 * h1(m)) * y[0]]

    out = np.empty(mu.shape)
    m0 = float(sol.mu[j])
    for sel, pick in ((mu >= m0, np.max), (mu < m0, np.min)):
        if not np.any(sel):
            continue
        end = float(pick(mu[sel]))
        if end == m0:
            out[sel] = y0[0]
            continue
        r = solve_ivp(rhs, (m0, end), y0, method="DOP853", rtol=1e-13, atol=1e-15,
                      dense_output=True)
        out[sel] = r.sol(mu[sel])[0]
    return out


def radial_defect(table: SectorTable, sol: RadialSolution) -> np.ndarray:
    """Pointwise finite-difference defect of the radial equation at interior nodes."""
    sec = table.piece(sol.sector)
    F = table.scale
    f = sec.frame.f
    mu = sol.mu[1:-1]
    h = sol.mu[1] - sol.mu[0]
    psi = sol.psi
    d2 = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / h ** 2
    d1 = (psi[2:] - psi[:-2]) / (2 * h)
    ae = F * np.cosh(mu) - sec.offset
    minor_sq = ae * ae - f * f
    g2 = (F * np.sinh(mu)) ** 2 / minor_sq
    half_log_g2p = 1.0 / np.tanh(mu) - ae * F * np.sinh(mu) / minor_sq
    h1 = ae * ae
    return d2 - half_log_g2p * d1 - g2 * (sol.lam - sol.k ** 2 * h1) * psi[1:-1]


def modified_mathieu(q: float, a: float, nu0: float, y0: float, dy0: float, nu):
    """Independent integration of ``y'' - (a - 2q cosh 2nu) y = 0`` from ``nu0``."""
    nu = np.asarray(nu, dtype=float)

    def rhs(t, y):
        return [y[1], (a - 2.0 * q * math.cosh(2.0 * t)) * y[0]]

    sol = solve_ivp(rhs, (nu0, float(nu.max())), [y0, dy0], method="DOP853",
                    rtol=1e-12, atol=1e-14, dense_output=True)
    return sol.sol(nu)[0]


# ------------------------------------------------------ recomposition check


def in_piece_grid(table: SectorTable, label: str, n_mu: int = 8, n_theta: int = 8,
                  mu_range: tuple[float, float] = (2.0, 2.6), margin: float = 0.05):
    """Tensor grid ``(mu, theta)`` lying wholly inside one piece, away from its edges."""
    from .metric import piece_mu_window

    sec = table.piece(label)
    th = np.linspace(sec.theta_lo, sec.theta_hi, 401)[1:-1]
    lo, hi = piece_mu_window(table, sec, np.mod(th, TWO_PI))
    ok = (lo < mu_range[0] - margin) & (hi > mu_range[1] + margin)
    if not np.any(ok):
        raise ValueError(f"piece {label} holds no grid on mu in {mu_range}")
    # the admissible theta set of a piece is an interval
    a, b = th[ok][0] + margin, th[ok][-1] - margin
    mu, theta = np.meshgrid(np.linspace(*mu_range, n_mu), np.linspace(a, b, n_theta))
    return mu, np.mod(theta, TWO_PI)


def helmholtz_residual(table: SectorTable, k: float, eigenpair: AngularEigenpair,
                       radial: RadialSolution, mu, theta, h: float = 1e-3) -> float:
    """Max of ``|Lap(Psi) + k^2 Psi| / (k^2 max|Psi|)`` for ``Psi = Psi1 Psi2`` on samples.

    The Laplacian is the conservative curvilinear form with closed-form scale
    factors, discretized by centered differences of step ``h`` in both
    coordinates.  ``Psi1`` is continued off the eigenvector grid by
    integrating the angular equation from the node nearest the samples.
    All samples must lie inside the piece named by ``radial.sector``.
    """
    mu = np.asarray(mu, dtype=float).ravel()
    theta = np.mod(np.asarray(theta, dtype=float).ravel(), TWO_PI)
    labels = piece_at(table, mu, theta)
    if np.any(labels != radial.sector):
        raise ValueError(f"samples leave piece {radial.sector}")
    for m, t in ((mu + h, theta), (mu - h, theta), (mu, theta + h), (mu, theta - h)):
        if np.any(piece_at(table, m, t) != radial.sector):
            raise ValueError("finite-difference stencil leaves the piece")
    nodes, vec = eigenpair.theta, eigenpair.psi
    tc = float(np.angle(np.mean(np.exp(1j * theta)))) % TWO_PI
    j = int(np.argmin(np.abs(((nodes - tc) + math.pi) % TWO_PI - math.pi)))
    hn = nodes[(j + 1) % len(nodes)] - nodes[j]
    hp = nodes[j] - nodes[j - 1]
    hn = hn % TWO_PI
    hp = hp % TWO_PI
    # three-point derivative on the non-uniform grid
    d = (vec[(j + 1) % len(vec)] * hp * hp - vec[j - 1] * hn * hn
         - vec[j] * (hp * hp - hn * hn)) / (hp * hn * (hp + hn))
    t0 = float(nodes[j])
    theta_u = theta.copy()
    theta_u = t0 + ((theta_u - t0 + math.pi) % TWO_PI - math.pi)

    def psi1(t):
        return angular_solution(table, k, eigenpair.lam, t0, float(vec[j]), float(d), t)

    def hmu_hth(m, t):
        hm2, ht2 = scale_factors(table, m, t, pieces=radial.sector)
        return np.sqrt(hm2), np.sqrt(ht2)

    p1 = {s: psi1(theta_u + s * h) for s in (-1, 0, 1)}
    p2 = {s: radial_continue(table, radial, mu + s * h) for s in (-1, 0, 1)}
    hm, ht = hmu_hth(mu, theta)
    hm_p, ht_p = hmu_hth(mu + 0.5 * h, theta)
    hm_m, ht_m = hmu_hth(mu - 0.5 * h, theta)
    radial_term = p1[0] * ((ht_p / hm_p) * (p2[1] - p2[0]) - (ht_m / hm_m) * (p2[0] - p2[-1])) / h ** 2
    hm_p, ht_p = hmu_hth(mu, theta + 0.5 * h)
    hm_m, ht_m = hmu_hth(mu, theta - 0.5 * h)
    angular_term = p2[0] * ((hm_p / ht_p) * (p1[1] - p1[0]) - (hm_m / ht_m) * (p1[0] - p1[-1])) / h ** 2
    psi = p1[0] * p2[0]
    lap = (radial_term + angular_term) / (hm * ht)
    # k = 0 has no natural scale; fall back to max|Psi|
    scale = (k * k if k != 0 else 1.0) * np.max(np.abs(psi))
    return float(np.max(np.abs(lap + k * k * psi)) / scale)
