"""Half-plane model quantities: the essential-spectrum bottom and sigma(theta).

``s_ess`` is the bottom of the spectrum coming from the upper face of the
sector, a one-dimensional minimization over an auxiliary Fourier variable of
an expression built from the de Gennes eigenvalue.  ``sigma(theta)`` is the
ground energy of the half-plane operator

    D_s^2 + D_t^2 + (t cos(theta) - s sin(theta))^2,   t > 0,

with Neumann condition on ``t = 0``.  It is computed by fourth-order finite
differences on a box; the Neumann closure is the one used in ``model1d``
with the local parameter ``s sin(theta) cos(theta)`` playing the role of tau,
because ``u_ttt(0, s) = V_t(0, s) u(0, s)`` on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from . import model1d
from .errors import BracketError, SolverError
from .linalg import HermitianPencil, smallest_eigenpair

__all__ = [
    "FieldSpec",
    "EssSpectrumValue",
    "Disc2D",
    "beta_angle",
    "s_ess",
    "sigma",
    "default_disc2d",
    "lower_face_bottom",
]

THETA0 = model1d.THETA0_REFERENCE
XI0 = model1d.XI0_REFERENCE

# cheap grid used only to locate the basin of the xi2 objective
_SCAN_DISC = model1d.Disc1D(t_max=12.0, n=241)


@dataclass(frozen=True)
class FieldSpec:
    """Unit field tangent to the upper face of the sector of opening ``alpha``.

    ``gamma`` is the angle between the field and the edge; the second
    spherical angle is fixed to ``(pi - alpha)/2`` by tangency.
    """

    gamma: float
    alpha: float
    b: tuple = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.gamma <= math.pi / 2 + 1e-15:
            raise ValueError("gamma must lie in [0, pi/2]")
        if not 0.0 < self.alpha < math.pi:
            raise ValueError("alpha must lie in (0, pi)")
        sg, cg = math.sin(self.gamma), math.cos(self.gamma)
        # cos(pi/2) is 6e-17 in floating point; a normal field must give an
        # exactly real problem
        b = tuple(0.0 if abs(c) < 1e-15 else c
                  for c in (sg * math.cos(self.alpha / 2), sg * math.sin(self.alpha / 2), cg))
        object.__setattr__(self, "b", b)

    @property
    def theta(self):
        return (math.pi - self.alpha) / 2


@dataclass(frozen=True)
class EssSpectrumValue:
    tau: float
    value: float
    xi2_star: float
    branch: str  # "generic" or "tangent_edge"


@dataclass(frozen=True)
class Disc2D:
    """Box ``[c - s_extent, c + s_extent] x [0, t_extent]`` for the half-plane.

    ``s_center`` (``c``) defaults to the point where the ground state
    concentrates, ``xi0 sqrt(cos theta) / sin theta``.
    """

    s_extent: float
    t_extent: float
    n_s: int
    n_t: int
    s_center: float | None = None

    def __post_init__(self):
        if not (self.s_extent > 0 and self.t_extent > 0):
            raise ValueError("extents must be positive")
        if self.n_s < 32 or self.n_t < 32:
            raise ValueError("n_s and n_t must be at least 32")


def default_disc2d(theta, h=0.15):
    """Box sized to the ground state of ``sigma(theta)``, spacing about ``h``.

    Across the zero line of the potential the state has width of order
    ``sin(theta)^(-1/2)`` around ``xi0 sqrt(cos theta) / sin theta``.  For
    ``theta >= pi/4`` it also spreads along the zero line ``s = t cot theta``
    into the bulk, so the box follows that line up to ``t_extent``,
    grown like ``1/cos(theta)`` and capped at 60 (a wall at distance T costs
    about ``(pi / 2T)^2``).
    """
    st, ct = math.sin(theta), math.cos(theta)
    half = 8.0 / math.sqrt(st)
    c = XI0 * math.sqrt(ct) / st
    t_ext = min(60.0, max(12.0, 20.0 / max(ct, 1e-300)))
    lo, hi = c - half, c + half
    if theta >= math.pi / 4:
        hi = max(hi, t_ext * ct / st + half)
    n_s = max(32, int(math.ceil((hi - lo) / h)) + 1)
    n_t = max(32, int(math.ceil(t_ext / h)) + 1)
    return Disc2D((hi - lo) / 2, t_ext, n_s, n_t, (hi + lo) / 2)


def beta_angle(alpha, gamma):
    """Angle between the field and the lower face: ``arcsin(sin a sin g)``."""
    return math.asin(min(1.0, math.sin(alpha) * math.sin(gamma)))


def _objective(field_, tau, disc):
    sg, cg = math.sin(field_.gamma), math.cos(field_.gamma)

    def f(x2):
        return model1d.mu1(x2 * cg + tau * sg, disc).mu1 + (x2 * sg - tau * cg) ** 2

    return f


def s_ess(field_, tau, disc=model1d.DEFAULT_DISC, npts=401, window=8.0):
    """Bottom of the essential spectrum of the sector operator at ``tau``.

    A scan on ``npts`` points of the window centred at ``tau cot(gamma)``
    with half-width ``window / sin(gamma)`` (coarse de Gennes grid) locates the
    basin; Brent's method on the neighbouring samples, with the accurate
    grid, gives the minimum.  The window is widened up to twice when the
    scan minimum sits on its edge.
    """
    tau = float(tau)
    g = field_.gamma
    if g == 0.0:
        return EssSpectrumValue(tau, THETA0 + tau * tau, 0.0, "tangent_edge")
    sg = math.sin(g)
    center, half = tau * math.cos(g) / sg, window / sg
    coarse = _objective(field_, tau, _SCAN_DISC)
    for _ in range(3):
        xs = np.linspace(center - half, center + half, npts)
        vals = np.array([coarse(x) for x in xs])
        k = int(np.argmin(vals))  # first index on ties
        if 0 < k < npts - 1:
            break
        half *= 2.0
    else:
        raise BracketError(f"xi2 minimizer left the scan window at tau={tau}")
    fine = _objective(field_, tau, disc)
    res = minimize_scalar(fine, bounds=(xs[k - 1], xs[k + 1]), method="bounded",
                          options=dict(xatol=1e-9, maxiter=200))
    return EssSpectrumValue(tau, float(res.fun), float(res.x), "generic")


def _sigma_pencil(theta, disc):
    st, ct = math.sin(theta), math.cos(theta)
    c0 = disc.s_center
    if c0 is None:
        c0 = XI0 * math.sqrt(ct) / st
    hs = 2 * disc.s_extent / (disc.n_s - 1)
    ht = disc.t_extent / (disc.n_t - 1)
    s = c0 - disc.s_extent + hs * np.arange(1, disc.n_s - 1)  # Dirichlet ends dropped
    t = ht * np.arange(disc.n_t - 1)  # Dirichlet at t_extent dropped
    Ns, Nt = s.size, t.size

    def five(n, h, neumann):
        c = 12.0 * h * h
        d0 = np.full(n, 30.0 / c)
        if neumann:
            d0[0], d0[1] = 15.0 / c, 31.0 / c
        return sp.diags([np.full(n - 2, 1.0 / c), np.full(n - 1, -16.0 / c), d0,
                         np.full(n - 1, -16.0 / c), np.full(n - 2, 1.0 / c)],
                        [-2, -1, 0, 1, 2])

    wt = np.ones(Nt)
    wt[0] = 0.5
    W = sp.diags(wt)
    K = sp.kron(sp.identity(Ns), five(Nt, ht, True)) + sp.kron(five(Ns, hs, False), W)
    S, T = np.meshgrid(s, t, indexing="ij")
    V = (T * ct - S * st) ** 2
    K = K + sp.diags((V * wt).ravel())
    # Taylor-corrected Neumann closure, effective tau(s) = s sin cos
    tau_s = s * st * ct
    row0 = np.arange(Ns) * Nt
    corr = sp.coo_matrix(
        (np.concatenate([-2.0 * tau_s * ht / 9.0, tau_s * ht / 36.0, tau_s * ht / 36.0]),
         (np.concatenate([row0, row0, row0 + 1]), np.concatenate([row0, row0 + 1, row0]))),
        shape=K.shape)
    K = (K + corr).tocsr()
    M = sp.diags(np.tile(wt, Ns)).tocsr()
    return HermitianPencil(K, M)


def sigma(theta, disc=None, tol=1e-9):
    """Ground energy of the half-plane operator with field angle ``theta``."""
    if not 0.0 < theta <= math.pi / 2 + 1e-15:
        raise ValueError("theta must lie in (0, pi/2]")
    theta = min(theta, math.pi / 2)
    if disc is None:
        disc = default_disc2d(theta)
    pencil = _sigma_pencil(theta, disc)
    try:
        res = smallest_eigenpair(pencil, tol=tol, shift=THETA0 - 0.05)
    except SolverError as exc:
        if "not below" not in str(exc):
            raise
        res = smallest_eigenpair(pencil, tol=tol, shift=0.0)
    return res.value


def lower_face_bottom(field_, disc=None):
    """``sigma(beta)`` with ``beta`` the field angle to the lower face."""
    if field_.gamma <= 0:
        raise ValueError("lower face model needs gamma > 0")
    return sigma(beta_angle(field_.alpha, field_.gamma), disc)
