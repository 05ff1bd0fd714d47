"""Smallest eigenpairs of sparse Hermitian positive pencils ``K x = lam M x``.

The eigensolver is a shift-invert Krylov method: the Krylov space is built
with ``(K - shift M)^{-1} M`` (one sparse LU factorization, reused for every
step), M-orthonormalized with full reorthogonalization, and the *original*
pencil is projected onto it (Rayleigh-Ritz).  Because the subspaces are
nested, the reported Rayleigh quotients can only go down as the iteration
proceeds.  Restarts keep the current Ritz vector, which preserves that
property.

The same factorization is used for a Sylvester inertia count, so a shift that
is not below the spectrum is detected instead of silently giving the wrong
eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu

from .errors import SolverError

__all__ = [
    "SparseHermitian",
    "HermitianPencil",
    "EigenResult",
    "smallest_eigenpair",
    "solve_shifted",
    "rayleigh",
    "dump_matrix_market",
]


@dataclass(frozen=True)
class SparseHermitian:
    """Hermitian matrix stored by its upper triangle (diagonal included).

    ``rows``, ``cols``, ``vals`` are coordinate triples with ``row <= col``.
    Duplicates are summed when converting.
    """

    dimension: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError("dimension must be positive")
        if np.any(self.rows > self.cols):
            raise ValueError("only the upper triangle may be stored")
        diag = self.rows == self.cols
        if np.any(np.abs(np.imag(self.vals[diag])) > 0):
            raise ValueError("diagonal entries of a Hermitian matrix must be real")

    @classmethod
    def from_matrix(cls, A, atol=1e-13):
        """Build from a full sparse matrix, checking Hermiticity."""
        A = sp.csr_matrix(A)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("matrix must be square")
        defect = abs(A - A.conj().T)
        scale = max(abs(A).max(), 1.0)
        if defect.nnz and defect.max() > atol * scale:
            raise ValueError("matrix is not Hermitian")
        U = sp.triu(A).tocoo()
        vals = U.data.astype(complex)
        vals[U.row == U.col] = vals[U.row == U.col].real
        return cls(n, U.row.copy(), U.col.copy(), vals)

    def tocsr(self):
        n = self.dimension
        U = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(n, n)).tocsr()
        strict = sp.triu(U, k=1)
        full = (U + strict.conj().T).tocsr()
        full.sum_duplicates()
        full.sort_indices()
        return full


def _as_csr(A):
    if isinstance(A, SparseHermitian):
        return A.tocsr()
    A = sp.csr_matrix(A)
    A.sum_duplicates()
    A.sort_indices()
    return A


@dataclass
class HermitianPencil:
    """Stiffness/mass pair. Both are held as full CSR matrices."""

    K: sp.csr_matrix
    M: sp.csr_matrix

    def __post_init__(self):
        self.K = _as_csr(self.K)
        self.M = _as_csr(self.M)
        if self.K.shape != self.M.shape or self.K.shape[0] != self.K.shape[1]:
            raise ValueError("K and M must be square and of equal size")
        if self.K.shape[0] == 0:
            raise ValueError("empty pencil")

    @property
    def dimension(self):
        return self.K.shape[0]

    @property
    def is_real(self):
        return not any(np.iscomplexobj(A.data) and np.any(A.data.imag != 0)
                       for A in (self.K, self.M))

    def check(self, atol=1e-12):
        """Raise ``ValueError`` unless K, M are Hermitian and M is positive."""
        for name, A in (("K", self.K), ("M", self.M)):
            d = abs(A - A.conj().T)
            if d.nnz and d.max() > atol * max(abs(A).max(), 1.0):
                raise ValueError(f"{name} is not Hermitian")
        Md = self.M.diagonal().real
        if np.any(Md <= 0):
            raise ValueError("M has a non-positive diagonal entry")
        return self


@dataclass
class EigenResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    history: list = field(default_factory=list)
    degenerate: bool = False
    gap: float = float("nan")


def rayleigh(pencil, x):
    """Rayleigh quotient ``x* K x / x* M x``."""
    x = np.asarray(x)
    den = np.vdot(x, pencil.M @ x).real
    if not np.any(x) or den <= 0:
        raise ValueError("Rayleigh quotient of a zero vector")
    return float(np.vdot(x, pencil.K @ x).real / den)


def _factorize(A):
    """LU of a Hermitian matrix with symmetric pivoting, plus its inertia."""
    A = sp.csc_matrix(A)
    lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
              options=dict(SymmetricMode=True))
    d = lu.U.diagonal().real
    return lu, int(np.count_nonzero(d <= 0))


def _shifted(pencil, shift):
    A = pencil.K - shift * pencil.M
    if not pencil.is_real:
        A = A.astype(complex)
    elif np.iscomplexobj(A.data):
        A = A.real
    return A


def solve_shifted(pencil, shift, rhs, tol=1e-10, method="direct", maxiter=None):
    """Solve ``(K - shift M) x = rhs`` to relative residual ``tol``.

    ``method="direct"`` uses a sparse LU with one step of iterative
    refinement; ``method="cg"`` runs Jacobi-preconditioned conjugate
    gradients.  Either way the residual is checked before returning.
    """
    A = _shifted(pencil, shift).tocsr()
    rhs = np.asarray(rhs)
    if np.iscomplexobj(rhs) and not np.iscomplexobj(A.data):
        A = A.astype(complex)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        return np.zeros_like(rhs, dtype=np.result_type(A.dtype, rhs.dtype))
    trace = []
    if method == "direct":
        lu, _ = _factorize(A)
        x = lu.solve(rhs.astype(np.result_type(A.dtype, rhs.dtype)))
        for _ in range(3):
            r = rhs - A @ x
            rel = np.linalg.norm(r) / bnorm
            trace.append(rel)
            if rel <= tol:
                return x
            x = x + lu.solve(r)
        raise SolverError("direct solve did not reach tolerance", residual=trace[-1], trace=trace)
    if method == "cg":
        diag = A.diagonal()
        if np.any(diag.real <= 0):
            raise SolverError("matrix is not positive definite (non-positive diagonal)")
        prec = sp.diags(1.0 / diag)

        def cb(xk):
            trace.append(np.linalg.norm(rhs - A @ xk) / bnorm)

        x, info = cg(A, rhs, rtol=tol, atol=0.0, M=prec, callback=cb,
                     maxiter=maxiter or 10 * A.shape[0])
        rel = np.linalg.norm(rhs - A @ x) / bnorm
        if info != 0 or rel > tol:
            raise SolverError(f"conjugate gradients stopped with info={info}", residual=rel, trace=trace)
        return x
    raise ValueError(f"unknown method {method!r}")


def smallest_eigenpair(pencil, tol=1e-9, shift=0.0, max_iter=600, krylov_dim=60,
                       check_every=4, check_degeneracy=True):
    """Smallest eigenpair of ``K x = lam M x``.

    ``shift`` must lie strictly below the smallest eigenvalue; this is
    verified by an inertia count of ``K - shift M``.  The returned vector is
    M-normalized and its residual ``|Kx - lam Mx| / |Mx|`` is at most ``tol``.
    With ``check_degeneracy`` a second inertia count just above ``lam``
    detects a repeated smallest eigenvalue (``degenerate`` and ``gap = 0``).
    """
    if not 0 < tol <= 1e-4:
        raise ValueError("tol must lie in (0, 1e-4]")
    K, M = pencil.K, pencil.M
    n = pencil.dimension
    if np.any(M.diagonal().real <= 0):
        raise SolverError("mass matrix is not positive definite")
    lu, negatives = _factorize(_shifted(pencil, shift))
    if negatives:
        raise SolverError(f"shift {shift} is not below the spectrum "
                          f"({negatives} eigenvalues at or below it)")
    dtype = complex if not pencil.is_real else float
    if dtype is float:
        K = K.real if np.iscomplexobj(K.data) else K
        M = M.real if np.iscomplexobj(M.data) else M

    if n <= 3:
        # too small for a Krylov space of useful size
        import scipy.linalg as sla
        w, v = sla.eigh(K.toarray(), M.toarray())
        x = v[:, 0].astype(dtype)
        x /= np.sqrt(np.vdot(x, M @ x).real)
        lam = float(w[0])
        r = np.linalg.norm(K @ x - lam * (M @ x)) / np.linalg.norm(M @ x)
        gap = float(w[1] - w[0]) if n > 1 else float("inf")
        return EigenResult(lam, x, float(r), 1, [lam], gap < 1e-10, gap)

    m = min(krylov_dim, n)
    start = np.ones(n, dtype=dtype)
    history = []
    best = (np.inf, np.inf)
    total = 0

    while True:
        V = np.zeros((m, n), dtype=dtype)
        MV = np.zeros((m, n), dtype=dtype)
        H = np.zeros((m, m), dtype=dtype)
        v = start / np.sqrt(np.vdot(start, M @ start).real)
        j = 0
        while j < m:
            Mv = M @ v
            V[j], MV[j] = v, Mv
            Kv = K @ v
            H[: j + 1, j] = V[: j + 1].conj() @ Kv
            H[j, : j] = H[: j, j].conj()
            H[j, j] = H[j, j].real
            j += 1
            total += 1
            w_ = lu.solve(Mv)
            w_norm = np.sqrt(max(np.vdot(w_, M @ w_).real, 0.0))
            # two passes of classical Gram-Schmidt in the M inner product
            for _ in range(2):
                w_ -= V[:j].T @ (MV[:j].conj() @ w_)
            beta = np.sqrt(max(np.vdot(w_, M @ w_).real, 0.0))
            if beta <= 1e-10 * w_norm:
                beta = 0.0  # invariant subspace: the remainder is rounding noise

            last = j == m or beta == 0 or total >= max_iter
            if j % check_every and not last:
                v = w_ / beta
                continue
            theta, S = np.linalg.eigh(H[:j, :j])
            y = V[:j].T @ S[:, 0]
            lam = float(theta[0])
            My = M @ y
            r = np.linalg.norm(K @ y - lam * My) / np.linalg.norm(My)
            history.append(lam)
            if r < best[1]:
                best = (lam, r)
            if r <= tol:
                y /= np.sqrt(np.vdot(y, My).real)
                # deterministic phase: largest-modulus entry real positive
                k = int(np.argmax(np.abs(y)))
                y *= np.conj(y[k]) / abs(y[k]) if dtype is complex else np.sign(y[k])
                gap = float(theta[1] - theta[0]) if j > 1 else float("inf")
                if check_degeneracy and gap >= 1e-10:
                    # a single Krylov sequence never sees a repeated eigenvalue;
                    # the inertia just above lam counts its multiplicity
                    _, count = _factorize(_shifted(pencil, lam + 1e-10 * max(1.0, abs(lam))))
                    if count > 1:
                        gap = 0.0
                return EigenResult(lam, y, float(r), total, history, gap < 1e-10, gap)
            if total >= max_iter:
                raise SolverError("eigensolver hit the iteration limit",
                                  value=best[0], residual=best[1], trace=history)
            if beta == 0 or j == m:
                break
            v = w_ / beta
        start = y


def dump_matrix_market(A, path, comment=""):
    """Write a sparse matrix as ``coordinate complex hermitian`` MatrixMarket."""
    A = sp.coo_matrix(_as_csr(A).astype(complex))
    scipy.io.mmwrite(str(path), A, comment=comment, field="complex",
                     symmetry="hermitian")
