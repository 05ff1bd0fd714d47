import numpy as np
import pytest
import scipy.io
import scipy.linalg as sla
import scipy.sparse as sp

from magwedge.errors import SolverError
from magwedge.linalg import (HermitianPencil, SparseHermitian, dump_matrix_market,
                             rayleigh, smallest_eigenpair, solve_shifted)


def laplacian(n):
    h = 1.0 / (n + 1)
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2


def random_pencil(n, seed):
    rng = np.random.default_rng(seed)
    B = sp.random(n, n, density=0.03, random_state=rng) + 1j * sp.random(n, n, density=0.03,
                                                                        random_state=rng)
    K = B @ B.conj().T + sp.diags(rng.uniform(0.5, 2.0, n))
    C = sp.random(n, n, density=0.01, random_state=rng)
    M = sp.identity(n) * 2.0 + 0.1 * (C + C.T)
    return HermitianPencil(K, M)


def test_diagonal_pencil():
    p = HermitianPencil(sp.diags([1.0, 2.0, 3.0]), sp.identity(3))
    r = smallest_eigenpair(p)
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert abs(abs(r.vector[0]) - 1.0) <= 1e-12
    assert r.residual <= 1e-9


@pytest.mark.parametrize("n", [20, 300])
def test_dirichlet_laplacian(n):
    r = smallest_eigenpair(HermitianPencil(laplacian(n), sp.identity(n)))
    h = 1.0 / (n + 1)
    exact = 4 / h**2 * np.sin(np.pi * h / 2) ** 2
    assert r.value == pytest.approx(exact, rel=1e-12)


def test_random_complex_pencil_against_dense():
    p = random_pencil(200, 1)
    assert not p.is_real
    r = smallest_eigenpair(p, tol=1e-10)
    w = sla.eigh(p.K.toarray(), p.M.toarray(), eigvals_only=True)
    assert r.value == pytest.approx(w[0], abs=1e-10 * max(1.0, abs(w[0])))
    x = r.vector
    assert np.vdot(x, p.M @ x).real == pytest.approx(1.0, abs=1e-12)
    res = np.linalg.norm(p.K @ x - r.value * (p.M @ x)) / np.linalg.norm(p.M @ x)
    assert res <= 1e-10 and res == pytest.approx(r.residual, rel=1e-6, abs=1e-14)


def test_phase_convention():
    r = smallest_eigenpair(random_pencil(120, 3))
    k = int(np.argmax(np.abs(r.vector)))
    assert abs(r.vector[k].imag) <= 1e-14 and r.vector[k].real > 0


def test_shift_invariance():
    p = random_pencil(150, 2)
    lam0 = sla.eigh(p.K.toarray(), p.M.toarray(), eigvals_only=True)[0]
    vals = [smallest_eigenpair(p, tol=1e-11, shift=s).value for s in (0.0, lam0 - 0.3, lam0 - 1e-3)]
    assert max(vals) - min(vals) <= 1e-10


def test_shift_above_spectrum_rejected():
    p = HermitianPencil(sp.diags([1.0, 2.0, 3.0, 4.0]), sp.identity(4))
    with pytest.raises(SolverError):
        smallest_eigenpair(p, shift=1.5)


def test_indefinite_mass_rejected():
    p = HermitianPencil(sp.diags([1.0, 2.0, 3.0, 4.0]), sp.diags([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(SolverError):
        smallest_eigenpair(p)
    with pytest.raises(ValueError):
        p.check()


def test_iteration_limit_reports_best_value():
    p = random_pencil(200, 4)
    with pytest.raises(SolverError) as info:
        smallest_eigenpair(p, tol=1e-12, max_iter=2, check_every=1)
    assert info.value.value is not None and len(info.value.trace) >= 1


def test_bad_tolerance():
    p = HermitianPencil(sp.diags([1.0, 2.0]), sp.identity(2))
    with pytest.raises(ValueError):
        smallest_eigenpair(p, tol=0.1)


def test_history_converges_monotonically():
    r = smallest_eigenpair(HermitianPencil(laplacian(400), sp.identity(400)),
                           check_every=1)
    hist = np.array(r.history)
    assert np.all(np.diff(hist) <= 1e-9 * abs(hist[0]))


def test_deterministic():
    p = random_pencil(150, 5)
    a = smallest_eigenpair(p)
    b = smallest_eigenpair(p)
    assert a.value == b.value and np.array_equal(a.vector, b.vector)


def test_degenerate_flag():
    p = HermitianPencil(sp.diags([1.0, 1.0, 2.0, 3.0, 5.0, 6.0]), sp.identity(6))
    r = smallest_eigenpair(p)
    assert r.value == pytest.approx(1.0) and r.degenerate


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_solve_shifted(method):
    p = random_pencil(100, 6)
    rng = np.random.default_rng(0)
    b = rng.normal(size=100) + 1j * rng.normal(size=100)
    x = solve_shifted(p, -0.5, b, tol=1e-10, method=method)
    A = p.K + 0.5 * p.M
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_solve_shifted_zero_rhs_and_bad_method():
    p = HermitianPencil(laplacian(10), sp.identity(10))
    assert not np.any(solve_shifted(p, 0.0, np.zeros(10)))
    with pytest.raises(ValueError):
        solve_shifted(p, 0.0, np.ones(10), method="gmres")


def test_rayleigh():
    p = HermitianPencil(sp.diags([1.0, 2.0, 3.0]), sp.diags([1.0, 1.0, 2.0]))
    assert rayleigh(p, np.array([0, 0, 1.0])) == pytest.approx(1.5)
    assert rayleigh(p, np.array([1, 1, 0.0])) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        rayleigh(p, np.zeros(3))


def test_sparse_hermitian_roundtrip():
    A = sp.csr_matrix(np.array([[2.0, 1 - 1j, 0], [1 + 1j, 3.0, 2j], [0, -2j, 1.0]]))
    H = SparseHermitian.from_matrix(A)
    assert np.all(H.rows <= H.cols)
    assert np.allclose(H.tocsr().toarray(), A.toarray())
    with pytest.raises(ValueError):
        SparseHermitian.from_matrix(sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 1.0]])))
    with pytest.raises(ValueError):
        SparseHermitian(2, np.array([1]), np.array([0]), np.array([1.0]))
    with pytest.raises(ValueError):
        SparseHermitian(2, np.array([0]), np.array([0]), np.array([1j]))


def test_pencil_validation():
    with pytest.raises(ValueError):
        HermitianPencil(sp.identity(3), sp.identity(4))
    with pytest.raises(ValueError):
        HermitianPencil(sp.csr_matrix(np.array([[1.0, 1j], [1j, 1.0]])), sp.identity(2)).check()
    assert HermitianPencil(sp.identity(3), sp.identity(3)).is_real


def test_matrix_market_export(tmp_path):
    A = sp.csr_matrix(np.array([[2.0, 1 - 1j], [1 + 1j, 3.0]]))
    path = tmp_path / "K.mtx"
    dump_matrix_market(A, path, comment="stiffness")
    head = path.read_text().splitlines()[0]
    assert head.startswith("%%MatrixMarket matrix coordinate complex hermitian")
    back = scipy.io.mmread(str(path)).toarray()
    assert np.allclose(back, A.toarray())
