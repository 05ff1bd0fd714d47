"""The de Gennes operator ``-u'' + (t - tau)^2 u`` on the half-line.

Neumann condition at ``t = 0``, Dirichlet at the truncation point ``t_max``.
Two finite-difference schemes on the nodes ``t_i = i h``:

``second_order_fd``
    three-point Laplacian with the mirror ghost node ``u_{-1} = u_1``.
``fourth_order_fd``
    five-point Laplacian.  A plain mirror would lose two orders, because the
    even extension of the eigenfunction has a jump in its third derivative
    at 0.  The ghost values come from the Taylor expansion with
    ``u'(0) = 0`` and ``u'''(0) = V'(0) u(0) = -2 tau u(0)`` (read off the
    equation), and the small O(h) off-diagonal defect this creates is
    symmetrized.  The leading error is then negative, so the discrete value
    approaches the true one from below.

Node 0 carries trapezoid weight 1/2; a diagonal similarity with that weight
makes both schemes symmetric banded.  Eigenvalues come from LAPACK bisection
on the banded matrix and are polished by Rayleigh-quotient and inverse
iteration steps whose residuals are evaluated in difference form.  That keeps
the rounding error of the residual at the size of the differences rather than
of the ``1/h^2`` diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eig_banded, solve_banded
from scipy.optimize import minimize_scalar

from .errors import BracketError, SolverError

__all__ = [
    "Disc1D",
    "DEFAULT_DISC",
    "DeGennesValue",
    "BandMinimum",
    "mu1",
    "mu1_curve",
    "groundstate1d",
    "find_band_minimum",
    "THETA0_REFERENCE",
    "XI0_REFERENCE",
]

THETA0_REFERENCE = 0.590106125
XI0_REFERENCE = 0.76818365314

SCHEMES = ("second_order_fd", "fourth_order_fd")
MIN_MARGIN = 10.0  # t_max >= max(tau, 0) + MIN_MARGIN


@dataclass(frozen=True)
class Disc1D:
    """Grid on ``[0, t_max]`` with ``n`` nodes (the last one is Dirichlet)."""

    t_max: float = 12.0
    n: int = 2001
    scheme: str = "fourth_order_fd"

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.n < 16:
            raise ValueError("need at least 16 grid points")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")

    @property
    def h(self):
        return self.t_max / (self.n - 1)

    def for_tau(self, tau):
        """Same spacing, domain stretched to ``max(tau, 0) + 10`` if needed."""
        need = max(tau, 0.0) + MIN_MARGIN
        if self.t_max >= need:
            return self
        cells = math.ceil(need / self.h - 1e-9)
        return replace(self, t_max=cells * self.h, n=cells + 1)

    def refined(self):
        """Grid with half the spacing on the same interval."""
        return replace(self, n=2 * self.n - 1)


DEFAULT_DISC = Disc1D()


@dataclass(frozen=True)
class DeGennesValue:
    tau: float
    mu1: float
    residual: float
    t_max_used: float


@dataclass(frozen=True)
class BandMinimum:
    xi0: float
    theta0: float
    tolerance: float


class _Grid:
    """Symmetrized banded operator for one (tau, t_max, n, scheme)."""

    def __init__(self, tau, t_max, n, scheme):
        h = self.h = t_max / (n - 1)
        N = n - 1  # the Dirichlet node is dropped
        self.tau = tau
        self.fourth = scheme == "fourth_order_fd"
        self.t = np.arange(N) * h
        self.V = (self.t - tau) ** 2
        w = np.ones(N)
        w[0] = 0.5
        self.s = np.sqrt(w)
        # weighted form W A, stored by diagonals 0, 1 (, 2)
        if self.fourth:
            c = 12.0 * h * h
            d0 = np.full(N, 30.0 / c)
            d0[0] = 15.0 / c - 2.0 * tau * h / 9.0
            d0[1] = 31.0 / c
            d1 = np.full(N - 1, -16.0 / c)
            d1[0] += tau * h / 36.0
            bands = [d0, d1, np.full(N - 2, 1.0 / c)]
        else:
            d0 = np.full(N, 2.0 / (h * h))
            d0[0] = 1.0 / (h * h)
            bands = [d0, np.full(N - 1, -1.0 / (h * h))]
        bands[0] = bands[0] + w * self.V
        s = self.s
        self.bands = [b / (s[: N - k] * s[k:]) for k, b in enumerate(bands)]
        self.bw = len(self.bands) - 1

    def upper_band(self):
        N, b = self.V.size, self.bw
        ab = np.zeros((b + 1, N))
        for k, band in enumerate(self.bands):
            ab[b - k, k:] = band
        return ab

    def shifted_band(self, mu):
        N, b = self.V.size, self.bw
        ab = np.zeros((2 * b + 1, N))
        for k, band in enumerate(self.bands):
            ab[b - k, k:] = band
            if k:
                ab[b + k, :-k] = band
        ab[b] -= mu
        return ab

    def apply_minus_mu(self, u, mu):
        """``(H - mu) u`` for the symmetric vector ``u``, in difference form."""
        h, y = self.h, u / self.s
        N = y.size
        ext = np.concatenate([y[2:0:-1], y, [0.0, 0.0]])  # mirror | Dirichlet
        d = np.diff(ext)  # d[k + 2] = y_{k+1} - y_k
        if self.fourth:
            lap = (d[3:N + 3] - 15.0 * d[2:N + 2] + 15.0 * d[1:N + 1] - d[0:N]) / (12.0 * h * h)
            th = self.tau * h
            lap[0] += -4.0 * th / 9.0 * y[0] + th / 18.0 * y[1]
            lap[1] += th / 36.0 * y[0]
        else:
            lap = (d[1:N + 1] - d[2:N + 2]) / (h * h)
        return (lap + (self.V - mu) * y) * self.s


def _polished_eigenpair(grid, sweeps=3):
    b = grid.bw
    mu = float(eig_banded(grid.upper_band(), eigvals_only=True, select="i",
                          select_range=(0, 0), check_finite=False)[0])
    # inverse iteration from the all-ones vector, then Rayleigh polishing
    u = np.ones_like(grid.V)
    ab = grid.shifted_band(mu - 1e-9 * max(1.0, abs(mu)))
    for _ in range(3):
        u = solve_banded((b, b), ab, u, check_finite=False)
        u /= np.linalg.norm(u)
    mu += float(u @ grid.apply_minus_mu(u, mu))
    r = grid.apply_minus_mu(u, mu)
    res = float(np.linalg.norm(r))
    for _ in range(sweeps):
        # once converged, K - mu is singular to rounding and further
        # corrections only amplify noise: keep the best iterate
        du = solve_banded((b, b), grid.shifted_band(mu), -r, check_finite=False)
        du -= u * (u @ du)
        v = u + du
        v /= np.linalg.norm(v)
        nu = mu + float(v @ grid.apply_minus_mu(v, mu))
        rv = grid.apply_minus_mu(v, nu)
        rn = float(np.linalg.norm(rv))
        if not rn < res:
            break
        u, mu, r, res = v, nu, rv, rn
    if not np.isfinite(mu) or res > 1e-10:
        raise SolverError("banded eigen-iteration did not converge", value=mu, residual=res)
    return mu, u, res


def _solve(tau, disc):
    d = disc.for_tau(tau)
    g = _Grid(tau, d.t_max, d.n, d.scheme)
    mu, u, res = _polished_eigenpair(g)
    return d, g, mu, u, res


def mu1(tau, disc=DEFAULT_DISC):
    """Smallest eigenvalue of the discretized de Gennes operator at ``tau``."""
    tau = float(tau)
    d, _, mu, _, res = _solve(tau, disc)
    return DeGennesValue(tau, mu, res, d.t_max)


def groundstate1d(tau, disc=DEFAULT_DISC):
    """Eigenvalue and nodal ground state on the (possibly extended) grid.

    The vector excludes the Dirichlet node, is normalized in the trapezoid
    L2 norm ``h * (u_0^2 / 2 + sum_{i>0} u_i^2) = 1`` and has ``u[0] > 0``.
    """
    tau = float(tau)
    d, g, mu, u, res = _solve(tau, disc)
    y = u / g.s
    y /= math.sqrt(g.h * (0.5 * y[0] ** 2 + np.sum(y[1:] ** 2)))
    if y[0] < 0:
        y = -y
    return DeGennesValue(tau, mu, res, d.t_max), y


def mu1_curve(tau_grid, disc=DEFAULT_DISC):
    """``mu1`` at every point of ``tau_grid`` (order preserved)."""
    out = []
    for tau in tau_grid:
        if not math.isfinite(tau):
            raise ValueError(f"non-finite tau {tau!r}")
        try:
            out.append(mu1(tau, disc))
        except SolverError as exc:
            raise SolverError(f"mu1 failed at tau={tau}: {exc}", exc.value, exc.residual) from exc
    return out


def find_band_minimum(disc=DEFAULT_DISC, tol=1e-7):
    """Locate ``xi0 = argmin mu1`` and ``Theta0 = min mu1`` on ``[0, 2]``.

    Brent's bounded method (golden section with parabolic steps); ``mu1`` is
    unimodal, so no global search is needed.  ``tol`` is the absolute
    tolerance on ``xi0``.
    """
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    f = lambda x: mu1(x, disc).mu1
    res = minimize_scalar(f, bounds=(0.0, 2.0), method="bounded",
                          options=dict(xatol=tol, maxiter=500))
    xi0 = float(res.x)
    if not (res.success and 10 * tol < xi0 < 2.0 - 10 * tol):
        raise BracketError(f"no interior minimum of mu1 on [0, 2] (got tau={xi0})")
    return BandMinimum(xi0, float(res.fun), tol)
