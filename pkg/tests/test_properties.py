import math

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from magwedge import halfplane, model1d, sector2d
from magwedge.band import quasimode_rayleigh, simple_upper_bound, sinc
from magwedge.halfplane import FieldSpec, beta_angle
from magwedge.linalg import HermitianPencil, smallest_eigenpair
from magwedge.sector2d import SectorProblem, build_mesh, potential, s_sector, zero_line

PI = math.pi
THETA0 = model1d.THETA0_REFERENCE
SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
FAST = settings(max_examples=60, deadline=None)

alphas = st.floats(0.05, PI - 0.05)
gammas = st.floats(0.0, PI / 2)
taus = st.floats(-2.0, 3.0)


@FAST
@given(st.floats(-5.0, 8.0))
def test_mu1_lower_bounds(tau):
    v = model1d.mu1(tau)
    floor = tau * tau if tau < 0 else 0.0
    assert v.mu1 >= floor - v.residual
    assert v.mu1 >= THETA0 - 1e-6
    assert 0 <= v.residual <= 1e-10


@FAST
@given(gammas, alphas)
def test_field_is_unit(g, a):
    f = FieldSpec(g, a)
    assert abs(math.hypot(*f.b) - 1) <= 1e-14
    assert 0 <= beta_angle(a, g) <= PI / 2 + 1e-15


@SLOW
@given(st.floats(0.05, PI / 2), alphas, taus)
def test_s_ess_above_theta0(g, a, tau):
    v = halfplane.s_ess(FieldSpec(g, a), tau)
    assert v.value >= THETA0 - 1e-6
    assert v.value <= model1d.mu1(tau * math.sin(g)).mu1 + (tau * math.cos(g)) ** 2 + 1e-9


@FAST
@given(st.floats(0.05, PI / 2), alphas, taus,
       st.lists(st.floats(-20, 20), min_size=2, max_size=2))
def test_potential_is_scaled_squared_distance(g, a, tau, x):
    f = FieldSpec(g, a)
    d = zero_line(f, tau).distance(np.array(x))
    assert math.isclose(potential(f, tau, x), math.sin(g) ** 2 * d * d, rel_tol=1e-9, abs_tol=1e-9)


@FAST
@given(alphas, gammas)
def test_quasimode_bounds(a, g):
    q = quasimode_rayleigh(a, g)
    assert 0 < q <= simple_upper_bound(a, g) + 1e-12
    assert abs(sinc(a / 2)) <= 1


@SLOW
@given(alphas, st.floats(0.5, 4.0), st.integers(8, 12))
def test_mesh_invariants(a, L, res):
    m = build_mesh(a, L, res)
    x1, x2 = m.nodes.T
    assert np.all(np.abs(x2) <= x1 * math.tan(a / 2) + 1e-12)
    assert np.all(m.areas() > 0)
    assert math.isclose(m.areas().sum(), L * L * math.tan(a / 2), rel_tol=1e-12)
    assert len(m.boundary_tags) == len(m.boundary_edges)


@SLOW
@given(alphas, st.floats(0.05, PI / 2), taus)
def test_gauge_invariance(a, g, tau):
    f = FieldSpec(g, a)
    L = 3.0
    v = [s_sector(SectorProblem(f, tau, gauge=gg, L=L)).value for gg in sector2d.GAUGES]
    assert abs(v[0] - v[1]) <= 1e-8 * max(1.0, abs(v[0]))


@SLOW
@given(alphas, st.floats(-1.5, 1.5))
def test_tangent_field_shift(a, tau):
    f = FieldSpec(0.0, a)
    s0 = s_sector(SectorProblem(f, 0.0, L=3.0)).value
    s1 = s_sector(SectorProblem(f, tau, L=3.0)).value
    assert abs(s1 - s0 - tau * tau) <= 1e-10


@SLOW
@given(st.integers(0, 10**6), st.integers(5, 60), st.floats(0.01, 2.0))
def test_eigensolver_against_dense(seed, n, c):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    K = B @ B.conj().T / n + np.eye(n)
    C = rng.normal(size=(n, n)) * 0.05
    M = np.eye(n) + C @ C.T
    p = HermitianPencil(sp.csr_matrix(K), sp.csr_matrix(M))
    w = sla.eigh(K, M, eigvals_only=True)
    r0 = smallest_eigenpair(p, tol=1e-10)
    r1 = smallest_eigenpair(p, tol=1e-10, shift=w[0] - c)
    assert abs(r0.value - w[0]) <= 1e-9 * max(1, abs(w[0]))
    assert abs(r0.value - r1.value) <= 1e-10 * max(1, abs(w[0]))
    x = r0.vector
    assert abs(np.vdot(x, M @ x).real - 1) <= 1e-12
