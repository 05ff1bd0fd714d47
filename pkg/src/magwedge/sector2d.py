"""Finite elements for the fiber operator on a truncated sector.

The sector ``{|x2| < x1 tan(alpha/2)}`` is cut at ``x1 = L``.  Its two faces
carry the natural (Neumann) condition and the cut carries a Dirichlet
condition.  The operator is ``(-i grad - A)^2 + V`` with ``curl A = b3`` and
``V = (x1 b2 - x2 b1 - tau)^2``, discretized by piecewise-linear elements.
All element integrals use a degree-4 Gauss rule, which is exact for every
term because ``A`` is linear and ``V`` quadratic.

Two assemblies are available.  ``standard`` expands the magnetic form into
gradient, cross and ``|A|^2`` terms.  ``link`` (the default) assembles the
real form ``|grad u|^2 + V |u|^2`` and the mass matrix, then multiplies
every coupling between nodes a and b by the parallel transport
``exp(-i int_a^b A.dl)`` along the edge.  Plane waves ``exp(i k.x)`` with
``k = A`` are then exact zero modes for constant ``A``, and a change of gauge
``A -> A + grad chi`` maps the discrete pencil to ``D K D*``, ``D M D*`` with
``D = diag(exp(i chi(x_a)))``.  The discrete spectrum is therefore gauge
independent, as the continuous one is.

The mesh is made of vertical node columns ``x1 = i L / N``.  Column ``i``
spans the full width of the sector with roughly ``resolution`` nodes per
unit length, and neighbouring columns are stitched together by a merge of
their normalized heights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import SolverError
from .halfplane import FieldSpec
from .linalg import EigenResult, HermitianPencil, smallest_eigenpair

__all__ = [
    "SectorProblem",
    "Mesh",
    "ZeroLine",
    "potential",
    "zero_line",
    "build_mesh",
    "assemble",
    "s_sector",
    "solve_sector",
    "default_length",
    "export_eigenfunction",
    "agmon_decay_rate",
    "GAUGES",
    "DEFAULT_RESOLUTION",
]

GAUGES = ("landau", "symmetric")
SCHEMES = ("link", "standard")
DEFAULT_RESOLUTION = 8
TAGS = ("neumann_upper", "neumann_lower", "dirichlet_artificial")
WIDE_TAIL = 1e-2  # fallback upper end of the decay-fit window

# 6-point degree-4 rule on the reference triangle (barycentric, weights sum 1)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
_QP = np.array([[_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
                [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2]])
_QW = np.array([_W1] * 3 + [_W2] * 3)


def default_length(alpha, gamma=math.pi / 2):
    """Truncation length used when none is given.

    Small openings: the ground state spreads like ``alpha^(-1/2)``, so
    ``L = max(14, 7/sqrt(lam))`` with the guess ``lam = alpha/sqrt(3)``.

    Openings ``alpha >= pi/2`` with a field component normal to the edge:
    the band minimum may be the bottom of the essential spectrum, carried by
    states spread along the upper face.  The cut then acts like a pair of
    Dirichlet walls a face length ``L / cos(alpha/2)`` apart and raises the
    value by about ``pi^2 cos(alpha/2)^2 / L^2``.  The face is made about 63
    long (cost near 2.5e-3) and at least 6 units of depth are kept in front
    of it when the face is almost parallel to the cut.  (The wide triangle
    has area ``L^2 tan(alpha/2)``, so no floor of 14 is applied there.)
    """
    if alpha >= math.pi / 2 and gamma > 0:
        c = math.cos(alpha / 2)
        return max(63.0 * c, 6.0 + 50.0 * c)
    lam = alpha / math.sqrt(3.0)
    return max(14.0, 7.0 / math.sqrt(lam))


@dataclass(frozen=True)
class SectorProblem:
    field: FieldSpec
    tau: float
    gauge: str = "landau"
    L: float | None = None
    resolution: int = DEFAULT_RESOLUTION
    scheme: str = "link"

    def __post_init__(self):
        if self.gauge not in GAUGES:
            raise ValueError(f"gauge must be one of {GAUGES}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.L is not None and not self.L > 0:
            raise ValueError("L must be positive")
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8")

    @property
    def alpha(self):
        return self.field.alpha

    @property
    def length(self):
        return self.L if self.L is not None else default_length(self.alpha, self.field.gamma)


@dataclass
class Mesh:
    nodes: np.ndarray  # (n, 2)
    elements: np.ndarray  # (m, 3), counter-clockwise
    boundary_edges: np.ndarray  # (k, 2)
    boundary_tags: list  # one of TAGS per boundary edge
    alpha: float
    L: float

    @property
    def dirichlet_nodes(self):
        e = self.boundary_edges[[t == "dirichlet_artificial" for t in self.boundary_tags]]
        return np.unique(e)

    @property
    def free_nodes(self):
        mask = np.ones(len(self.nodes), bool)
        mask[self.dirichlet_nodes] = False
        return np.flatnonzero(mask)

    def areas(self):
        p = self.nodes[self.elements]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self):
        e = np.sort(self.elements[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)


@dataclass(frozen=True)
class ZeroLine:
    """The line where ``V`` vanishes: ``x1 b2 - x2 b1 = tau``.

    ``V(x) = sin(gamma)^2 dist(x, line)^2``; for a field normal to the edge
    that is exactly the squared distance.
    """

    direction: tuple
    offset: float
    point: tuple  # foot of the perpendicular from the origin
    scale: float  # sin(gamma)

    def distance(self, x):
        x = np.asarray(x, float)
        n = np.array([self.direction[1], -self.direction[0]])
        return np.abs((x - np.array(self.point)) @ n)


def zero_line(field_, tau):
    b1, b2, _ = field_.b
    s = math.hypot(b1, b2)
    if s == 0:
        raise ValueError("V is constant when the field is parallel to the edge")
    d = (b1 / s, b2 / s)
    p = (tau * b2 / s**2, -tau * b1 / s**2)
    return ZeroLine(d, float(tau), p, s)


def potential(field_, tau, x):
    """``V = (x1 b2 - x2 b1 - tau)^2`` at points ``x`` (shape (..., 2))."""
    b1, b2, _ = field_.b
    x = np.asarray(x, float)
    return (x[..., 0] * b2 - x[..., 1] * b1 - tau) ** 2


def _gauge(problem, x):
    b3 = problem.field.b[2]
    if problem.gauge == "landau":
        return np.stack([-x[..., 1] * b3, np.zeros(x.shape[:-1])], axis=-1)
    return 0.5 * b3 * np.stack([-x[..., 1], x[..., 0]], axis=-1)


def build_mesh(alpha, L, resolution):
    """Structured triangulation of ``{0 < x1 < L, |x2| < x1 tan(alpha/2)}``."""
    if not 0.0 < alpha < math.pi:
        raise ValueError("alpha must lie in (0, pi)")
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if not L > 0:
        raise ValueError("L must be positive")
    ta = math.tan(alpha / 2)
    N = max(2, math.ceil(resolution * L))
    x1 = L * np.arange(N + 1) / N
    m = np.maximum(1, np.ceil(2 * x1 * ta * resolution - 1e-9).astype(int))
    m[0] = 0
    nodes = []
    start = np.concatenate([[0], np.cumsum(m + 1)[:-1]]).tolist()
    start[1:] = [s - m[0] for s in start[1:]]  # column 0 is the single tip node
    for i in range(N + 1):
        eta = np.arange(m[i] + 1) / max(m[i], 1)
        h = x1[i] * ta
        col = np.column_stack([np.full(m[i] + 1, x1[i]), h * (2 * eta - 1)])
        if i == 0:
            col = np.zeros((1, 2))
        nodes.append(col)
    P = np.vstack(nodes)
    tris = []
    for i in range(N):
        a0, b0, ma, mb = start[i], start[i + 1], m[i], m[i + 1]
        p = q = 0
        # merge the two columns by normalized height; ties advance the left one
        while p < ma or q < mb:
            ea = (p + 1) / ma if p < ma else math.inf
            eb = (q + 1) / mb if q < mb else math.inf
            if ea <= eb:
                tris.append((a0 + p, b0 + q, a0 + p + 1))
                p += 1
            else:
                tris.append((a0 + p, b0 + q, b0 + q + 1))
                q += 1
    T = np.array(tris, dtype=np.int64)
    # orient counter-clockwise
    d1, d2 = P[T[:, 1]] - P[T[:, 0]], P[T[:, 2]] - P[T[:, 0]]
    neg = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    T[neg] = T[neg][:, [0, 2, 1]]
    edges, tags = [], []
    for i in range(N):
        edges.append((start[i], start[i + 1]))
        tags.append("neumann_lower")
        edges.append((start[i] + m[i], start[i + 1] + m[i + 1]))
        tags.append("neumann_upper")
    for j in range(m[N]):
        edges.append((start[N] + j, start[N] + j + 1))
        tags.append("dirichlet_artificial")
    return Mesh(P, T, np.array(edges, dtype=np.int64), tags, float(alpha), float(L))


def _element_matrices(problem, mesh):
    P, T = mesh.nodes, mesh.elements
    p = P[T]  # (m, 3, 2)
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * det
    # gradients of the barycentric coordinates
    g = np.empty((len(T), 3, 2))
    g[:, 1] = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g[:, 2] = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    g[:, 0] = -g[:, 1] - g[:, 2]
    xq = np.einsum("qa,mad->mqd", _QP, p)  # quadrature points
    wq = area[:, None] * _QW[None, :]  # (m, q)
    Aq = _gauge(problem, xq)
    Vq = potential(problem.field, problem.tau, xq)
    Me = np.einsum("mq,qa,qb->mab", wq, _QP, _QP)
    Ke = area[:, None, None] * np.einsum("mad,mbd->mab", g, g)
    if problem.scheme == "link":
        Ke = Ke + np.einsum("mq,qa,qb->mab", wq * Vq, _QP, _QP)
        # A is linear, so the midpoint rule gives the exact line integral
        mid = 0.5 * (p[:, :, None, :] + p[:, None, :, :])
        theta = np.einsum("mabd,mabd->mab", _gauge(problem, mid),
                          p[:, None, :, :] - p[:, :, None, :])
        if not np.any(theta):
            return Ke, Me
        ph = np.exp(-1j * theta)
        return Ke * ph, Me * ph
    Ke = Ke + np.einsum("mq,qa,qb->mab", wq * (np.sum(Aq**2, -1) + Vq), _QP, _QP)
    # i A.(phi_a grad phi_b - phi_b grad phi_a)
    Ag = np.einsum("mqd,mbd->mqb", Aq, g)  # A . grad phi_b at q
    C = np.einsum("mq,qa,mqb->mab", wq, _QP, Ag)
    Ke = Ke + 1j * (C - C.transpose(0, 2, 1))
    return Ke, Me


def assemble(problem, mesh):
    """Stiffness/mass pencil with the Dirichlet nodes eliminated."""
    Ke, Me = _element_matrices(problem, mesh)
    T = mesh.elements
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    n = len(mesh.nodes)
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    free = mesh.free_nodes
    K = K[free][:, free]
    M = M[free][:, free]
    if problem.field.b[2] == 0.0:
        K, M = K.real, M.real
    return HermitianPencil(K, M)


def _inflate(mesh, x):
    u = np.zeros(len(mesh.nodes), dtype=x.dtype)
    u[mesh.free_nodes] = x
    return u


def solve_sector(problem, mesh=None, tol=1e-9, shift=None):
    """Mesh, assemble and solve; returns ``(EigenResult, Mesh)``.

    The eigenvector of the result is re-inflated with zeros on the
    Dirichlet nodes, so it has one entry per mesh node.  ``shift`` is a
    guess below the ground energy (checked by an inertia count; 0 is used
    when the guess turns out to be too high).
    """
    if mesh is None:
        mesh = build_mesh(problem.alpha, problem.length, problem.resolution)
    pencil = assemble(problem, mesh)
    res = None
    if shift is not None and shift > 0:
        try:
            res = smallest_eigenpair(pencil, tol=tol, shift=shift)
        except SolverError as exc:
            if "not below" not in str(exc):
                raise
    if res is None:
        res = smallest_eigenpair(pencil, tol=tol, shift=0.0)
    res.vector = _inflate(mesh, res.vector)
    return res, mesh


def s_sector(problem, tol=1e-9, shift=None):
    """Discrete ground energy of the fiber operator for ``problem``."""
    return solve_sector(problem, tol=tol, shift=shift)[0]


def _fmt(v):
    return repr(float(v))


def export_eigenfunction(result, mesh, path_prefix, problem=None):
    """Write ``<prefix>.csv`` (nodal fields) and ``<prefix>.meta.txt``.

    Columns: ``x1,x2,re,im,abs,log10abs,phase``; ``log10abs`` is clamped
    at -13 and ``phase = arcsin(Im u / |u|)`` (0 where ``u = 0``), which is
    the phase modulo pi.
    """
    u = np.asarray(result.vector)
    if u.shape[0] != len(mesh.nodes):
        raise ValueError("vector does not match the mesh node count")
    u = u.astype(complex)
    mod = np.abs(u)
    with np.errstate(divide="ignore"):
        lg = np.where(mod < 1e-13, -13.0, np.log10(np.maximum(mod, 1e-300)))
    ph = np.zeros_like(mod)
    nz = mod > 0
    ph[nz] = np.arcsin(np.clip(u.imag[nz] / mod[nz], -1.0, 1.0))
    csv_path = f"{path_prefix}.csv"
    with open(csv_path, "w") as fh:
        fh.write("x1,x2,re,im,abs,log10abs,phase\n")
        for (a, b), z, r, l, f in zip(mesh.nodes, u, mod, lg, ph):
            fh.write(",".join(map(_fmt, (a, b, z.real, z.imag, r, l, f))) + "\n")
    meta = {
        "alpha": mesh.alpha,
        "L": mesh.L,
        "eigenvalue": result.value,
        "residual": result.residual,
        "nodes": len(mesh.nodes),
        "log10abs_clamp": -13.0,
        "phase_convention": "arcsin(Im u/|u|); 0 where |u| = 0",
    }
    if problem is not None:
        line = zero_line(problem.field, problem.tau) if problem.field.gamma > 0 else None
        meta.update(gamma=problem.field.gamma, tau=problem.tau, resolution=problem.resolution,
                    gauge=problem.gauge)
        if line is not None:
            meta.update(upsilon_direction=f"{_fmt(line.direction[0])} {_fmt(line.direction[1])}",
                        upsilon_point=f"{_fmt(line.point[0])} {_fmt(line.point[1])}",
                        upsilon_offset=line.offset)
    meta_path = f"{path_prefix}.meta.txt"
    with open(meta_path, "w") as fh:
        for k, v in meta.items():
            fh.write(f"{k} = {_fmt(v) if isinstance(v, float) else v}\n")
    return csv_path, meta_path


def agmon_decay_rate(result, mesh, s_ess_value, tail=1e-4, floor=1e-11, wall=1.0,
                     bin_width=0.5):
    """Fitted exponential decay rate of ``|u|`` in the far field.

    ``|u|`` (scaled to unit maximum) is reduced to its envelope, the maximum
    over each ring ``|x| in [k w, (k + 1) w)``.  The rate is the
    least-squares slope of ``-log`` of the envelope over the rings where it
    lies between ``floor`` and ``tail``, i.e. past the core of the state and
    above rounding.  When the truncated sector is too short for that window
    (slowly decaying states), ``tail`` is raised to ``WIDE_TAIL``.  Rings
    reaching within ``wall`` of the Dirichlet cut are left out.  Fitting the envelope rather than every node keeps the
    estimate from depending on how many nodes each region contributes.
    """
    if not result.value < s_ess_value:
        raise ValueError("decay is only defined below the essential spectrum")
    mod = np.abs(result.vector)
    mod = mod / mod.max()
    rho = np.hypot(mesh.nodes[:, 0], mesh.nodes[:, 1])
    ring = np.floor(rho / bin_width).astype(int)
    last = int(np.floor((mesh.L - wall) / bin_width))  # rings [k w, (k+1) w) with k < last
    env = np.zeros(last)
    inside = ring < last
    np.maximum.at(env, ring[inside], mod[inside])
    k = np.arange(last)
    keep = (env > floor) & (env < tail)
    # only the tail beyond the last ring still above ``tail``
    above = np.nonzero(env >= tail)[0]
    if above.size:
        keep &= k > above.max()
    nodes_in = inside & keep[np.minimum(ring, last - 1)] & (mod > floor) & (mod < tail)
    if np.count_nonzero(keep) < 4 or np.count_nonzero(nodes_in) < 50:
        if tail < WIDE_TAIL:
            # slowly decaying state: the cut comes before the deep tail
            return agmon_decay_rate(result, mesh, s_ess_value, WIDE_TAIL, floor, wall, bin_width)
        raise SolverError("too few nodes in the decay window to fit a rate")
    centers = (k[keep] + 0.5) * bin_width
    slope = np.polyfit(centers, -np.log(env[keep]), 1)[0]
    return float(slope)
