"""Band function of the wedge and its infimum.

``s(tau)`` is the ground energy of the sector fiber at edge frequency
``tau``; the bottom of the spectrum of the wedge is ``inf_tau s(tau)``.
The minimum is located by a sweep on a fixed grid followed by Brent's
method on the neighbourhood of the smallest sample, and then compared with
the essential spectrum of the fiber at the minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from . import halfplane
from .errors import BracketError, SolverError
from .halfplane import FieldSpec
from .sector2d import DEFAULT_RESOLUTION, SectorProblem, s_sector

__all__ = [
    "BandSample",
    "BandCurve",
    "WedgeBottom",
    "band_sweep",
    "lambda_wedge",
    "quasimode_rayleigh",
    "simple_upper_bound",
    "sinc",
    "default_tau_grid",
]

SQRT3 = math.sqrt(3.0)


def sinc(x):
    return 1.0 if x == 0 else math.sin(x) / x


def default_tau_grid(tau_min=-1.0, tau_max=1.8, step=0.1):
    n = int(round((tau_max - tau_min) / step))
    return [round(tau_min + k * step, 12) for k in range(n + 1)]


@dataclass
class BandSample:
    tau: float
    s: float
    s_ess: float
    residual: float
    error: str = ""

    @property
    def ok(self):
        return not self.error

    @property
    def in_essential(self):
        """The discrete value lies at or above the essential spectrum."""
        return self.ok and not self.s < self.s_ess - 1e-9


@dataclass
class BandCurve:
    samples: list
    field: FieldSpec
    L: float
    resolution: int

    @property
    def alpha(self):
        return self.field.alpha

    def taus(self):
        return np.array([p.tau for p in self.samples])

    def values(self):
        return np.array([p.s for p in self.samples])

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("tau,s,s_ess,residual\n")
            for p in self.samples:
                fh.write(f"{p.tau!r},{p.s!r},{p.s_ess!r},{p.residual!r}\n")


@dataclass
class WedgeBottom:
    lam: float
    tau_star: float
    classification: str  # "discrete_eigenvalue" or "essential_bottom"
    gap: float
    s_ess: float = float("nan")
    threshold: float = float("nan")
    error_estimate: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    def record(self):
        """Plain-text record with one ``key: value`` line per field."""
        lines = [
            "{",
            f"  lambda: {self.lam!r}",
            f"  tau_star: {self.tau_star!r}",
            f"  classification: {self.classification}",
            f"  gap: {self.gap!r}",
            f"  s_ess: {self.s_ess!r}",
            f"  threshold: {self.threshold!r}",
            f"  error_estimate: {self.error_estimate!r}",
        ]
        for k, v in sorted(self.diagnostics.items()):
            lines.append(f"  {k}: {v!r}")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _problem(field_, tau, L, resolution, gauge="landau"):
    return SectorProblem(field_, float(tau), gauge=gauge, L=L, resolution=resolution)


def band_sweep(field_, tau_grid, L=None, resolution=DEFAULT_RESOLUTION, with_ess=True,
               tol=1e-9):
    """Band function (and essential spectrum) at each point of ``tau_grid``.

    A failing solve is kept in the curve with ``nan`` values and its error
    message; the sweep only fails when no sample could be computed.
    """
    taus = [float(t) for t in tau_grid]
    if not all(map(math.isfinite, taus)):
        raise ValueError("tau grid must be finite")
    samples = []
    for tau in taus:
        ess = halfplane.s_ess(field_, tau).value if with_ess else float("nan")
        try:
            r = s_sector(_problem(field_, tau, L, resolution), tol=tol)
            samples.append(BandSample(tau, r.value, ess, r.residual))
        except SolverError as exc:
            samples.append(BandSample(tau, float("nan"), ess, float("nan"), str(exc)))
    if not any(p.ok for p in samples):
        raise SolverError("every sample of the band sweep failed")
    Lval = L if L is not None else _problem(field_, 0.0, L, resolution).length
    return BandCurve(samples, field_, Lval, resolution)


def lambda_wedge(field_, tol=1e-3, L=None, resolution=DEFAULT_RESOLUTION,
                 tau_range=(-1.0, 1.8), step=0.1, max_extend=6, estimate_error=True):
    """Infimum over tau of the band function, with its classification.

    The sweep runs on a shorter sector (``max(8, L/2)``, never longer than
    ``L``): truncation only shifts the values upwards there, and the sweep is
    only used to bracket the minimizer.  Brent's method on the full sector
    then refines ``tau`` to the absolute tolerance ``tol``.  The sweep is
    extended by 0.5 on a side while its minimum sits on that edge.

    The minimum counts as a discrete eigenvalue when it lies below
    ``s_ess(tau*)`` by more than ``max(1e-3, 3 e)``, where ``e`` is a
    discretization error estimate from a solve at 1.5 times the resolution.
    """
    prob = _problem(field_, 0.0, L, resolution)
    L_full = prob.length
    L_sweep = min(L_full, max(8.0, L_full / 2))
    lo, hi = tau_range
    cache = {}

    def s_coarse(t):
        t = round(t, 12)
        if t not in cache:
            cache[t] = s_sector(_problem(field_, t, L_sweep, resolution)).value
        return cache[t]

    for _ in range(max_extend + 1):
        grid = default_tau_grid(lo, hi, step)
        vals = np.array([s_coarse(t) for t in grid])
        k = int(np.argmin(vals))
        if k == 0:
            lo -= 0.5
        elif k == len(grid) - 1:
            hi += 0.5
        else:
            break
    else:
        raise BracketError(f"band minimum still on the sweep edge for tau in [{lo}, {hi}]; "
                           "try a wider tau range")
    ties = [grid[j] for j in range(len(grid)) if vals[j] - vals[k] <= 1e-9]

    full = {}

    def s_full(t):
        if t not in full:
            full[t] = s_sector(_problem(field_, t, L_full, resolution)).value
        return full[t]

    a, b = grid[k] - step, grid[k] + step
    for _ in range(4):
        res = minimize_scalar(s_full, bounds=(a, b), method="bounded",
                              options=dict(xatol=tol, maxiter=100))
        t_star = float(res.x)
        if t_star - a < 2 * tol:
            a, b = a - step, a + step
        elif b - t_star < 2 * tol:
            a, b = b - step, b + step
        else:
            break
    else:
        raise BracketError("refinement of the band minimum did not settle inside a bracket")
    lam = float(res.fun)

    ess = halfplane.s_ess(field_, t_star).value
    est = 0.0
    if estimate_error:
        fine = s_sector(_problem(field_, t_star, L_full, int(math.ceil(1.5 * resolution))))
        # second order: e(h) - e(2h/3) = e(h) (1 - 4/9)
        est = abs(lam - fine.value) / (1.0 - 4.0 / 9.0)
    threshold = max(1e-3, 3.0 * est)
    gap = ess - lam
    cls = "discrete_eigenvalue" if gap > threshold else "essential_bottom"
    diag = dict(sweep_min=float(vals[k]), sweep_tau=float(grid[k]), sweep_L=L_sweep,
                L=L_full, resolution=resolution, evaluations=len(full))
    if len(ties) > 1:
        diag["tied_sweep_taus"] = tuple(ties)
    return WedgeBottom(lam, t_star, cls, gap, ess, threshold, est, diag)


def quasimode_rayleigh(alpha, gamma):
    """Rayleigh quotient of the Gaussian quasimode ``exp(-alpha rho^2/(4 sqrt3))``."""
    if not 0.0 < alpha <= math.pi:
        raise ValueError("alpha must lie in (0, pi]")
    s2 = math.sin(gamma) ** 2
    c2 = math.cos(gamma) ** 2
    bracket = (1.0 / (2 * SQRT3)
               + 0.5 * SQRT3 * sinc(alpha / 2) ** 2 * s2
               + c2 / (2 * SQRT3)
               + SQRT3 * (1.0 - sinc(alpha)) / alpha**2 * math.cos(alpha) * s2)
    return alpha * bracket


def simple_upper_bound(alpha, gamma):
    """``alpha (1/sqrt3 + (sqrt3/2) sin^2 gamma)``."""
    return alpha * (1.0 / SQRT3 + 0.5 * SQRT3 * math.sin(gamma) ** 2)
