import math
import time

import numpy as np
import pytest

from magwedge import model1d
from magwedge.errors import BracketError
from magwedge.model1d import Disc1D, find_band_minimum, groundstate1d, mu1, mu1_curve

from oracles import mu1_exact, mu1_richardson

XI0 = model1d.XI0_REFERENCE
THETA0 = model1d.THETA0_REFERENCE


@pytest.fixture(scope="module")
def band_min():
    return find_band_minimum(tol=1e-7)


def test_disc_validation():
    with pytest.raises(ValueError):
        Disc1D(t_max=0.0)
    with pytest.raises(ValueError):
        Disc1D(n=15)
    with pytest.raises(ValueError):
        Disc1D(scheme="spectral")
    d = Disc1D(t_max=12.0, n=2001)
    assert d.h == pytest.approx(0.006)


def test_domain_extended_for_large_tau():
    v = mu1(15.0)
    assert v.t_max_used >= 25.0


def test_mu1_at_xi0_reproduces_theta0():
    assert mu1(XI0).mu1 == pytest.approx(0.590106125, abs=1e-6)


def test_mu1_at_zero_is_oscillator_ground_state():
    assert abs(mu1(0.0).mu1 - 1.0) <= 1e-8


def test_mu1_negative_tau_above_potential_minimum():
    assert mu1(-2.0).mu1 >= 4.0


@pytest.mark.parametrize("tau", [-2.0, -1.0, 0.0, 0.3, XI0, 1.5, 3.0, 5.0, 10.0])
def test_mu1_against_parabolic_cylinder_oracle(tau):
    assert mu1(tau).mu1 == pytest.approx(mu1_exact(tau), abs=1e-9)


def test_mu1_at_5_against_richardson_oracle():
    v = mu1(5.0).mu1
    assert 0.5901 < v < 1.0
    assert abs(v - mu1_richardson(5.0)) <= 1e-6


def test_residual_contract():
    for tau in (-3.0, 0.0, XI0, 4.0):
        v = mu1(tau)
        assert 0 <= v.residual <= 1e-10


def test_mu1_10_below_one():
    v = mu1(10.0).mu1
    assert THETA0 < v < 1.0
    assert 1.0 - v <= 1e-3


def test_second_order_scheme_available():
    v = mu1(XI0, Disc1D(scheme="second_order_fd")).mu1
    assert v == pytest.approx(THETA0, abs=1e-5)


def test_band_minimum(band_min):
    assert band_min.theta0 == pytest.approx(0.590106125, abs=1e-6)
    assert band_min.xi0 == pytest.approx(0.76818365, abs=1e-4)
    assert abs(band_min.xi0**2 - band_min.theta0) <= 1e-5


def test_band_minimum_is_strict(band_min):
    for d in (-0.05, 0.05):
        assert mu1(band_min.xi0 + d).mu1 > band_min.theta0


def test_band_minimum_tolerance_guard():
    with pytest.raises(ValueError):
        find_band_minimum(tol=0.0)
    with pytest.raises(ValueError):
        find_band_minimum(tol=1e-2)


def test_bracket_failure_reported(monkeypatch):
    # a monotone objective has no interior minimum on [0, 2]
    monkeypatch.setattr(model1d, "mu1", lambda x, disc=None: model1d.DeGennesValue(x, x, 0, 12))
    with pytest.raises(BracketError):
        find_band_minimum(tol=1e-6)


def test_curve_matches_pointwise():
    grid = [-1.0, XI0, 3.0]
    vals = mu1_curve(grid)
    assert [v.mu1 for v in vals] == [mu1(t).mu1 for t in grid]
    assert vals[0].mu1 > vals[1].mu1 < vals[2].mu1
    assert mu1_curve([0.0])[0].mu1 == pytest.approx(1.0, abs=1e-8)
    assert mu1_curve([10.0])[0].mu1 == pytest.approx(1.0, abs=1e-3)


def test_curve_rejects_nonfinite():
    with pytest.raises(ValueError):
        mu1_curve([0.0, math.nan])


def test_groundstate_at_zero_is_gaussian():
    val, u = groundstate1d(0.0)
    h = model1d.DEFAULT_DISC.h
    t = np.arange(u.size) * h
    exact = np.exp(-t**2 / 2) / math.sqrt(math.sqrt(math.pi) / 2)
    near = t <= 6.0
    assert np.max(np.abs(u[near] - exact[near]) / exact[near]) <= 1e-4


def test_groundstate_normalization_and_sign():
    val, u = groundstate1d(XI0)
    h = model1d.DEFAULT_DISC.h
    assert h * (0.5 * u[0] ** 2 + np.sum(u[1:] ** 2)) == pytest.approx(1.0, abs=1e-12)
    assert u[0] > 0
    assert np.all(u[:-1] > 0)  # no sign change before the Dirichlet end
    # at tau = xi0 the potential at the wall equals the eigenvalue, so u''(0) = 0
    # and u'''(0) = -2 xi0 u(0) < 0: the profile decreases from the wall
    assert np.all(np.diff(u) <= 0)


def test_groundstate_matches_dense_eigenvector():
    # dense symmetric eigensolve of the same three-point matrix, coarse grid
    disc = Disc1D(t_max=12.0, n=401, scheme="second_order_fd")
    val, u = groundstate1d(XI0, disc)
    h = disc.h
    t = np.arange(400) * h
    A = np.diag(2 / h**2 + (t - XI0) ** 2) - np.diag(np.ones(399) / h**2, 1) \
        - np.diag(np.ones(399) / h**2, -1)
    A[0, 1] *= 2  # mirror ghost node
    w, V = np.linalg.eig(A)
    i = int(np.argmin(w.real))
    v = np.abs(V[:, i].real)
    v /= math.sqrt(h * (0.5 * v[0] ** 2 + np.sum(v[1:] ** 2)))
    assert w[i].real == pytest.approx(val.mu1, abs=1e-10)
    assert np.max(np.abs(v - u)) <= 1e-8


def test_mesh_convergence_second_order():
    exact = mu1_exact(XI0)
    errs = [abs(mu1(XI0, Disc1D(t_max=12.0, n=n, scheme="second_order_fd")).mu1 - exact)
            for n in (401, 801, 1601)]
    assert errs[0] / errs[1] >= 3 and errs[1] / errs[2] >= 3


def test_fourth_order_scheme_order():
    exact = mu1_exact(XI0)
    errs = [abs(mu1(XI0, Disc1D(t_max=12.0, n=n)).mu1 - exact) for n in (101, 201)]
    assert errs[0] / errs[1] >= 12


def test_fourth_order_approaches_from_below():
    for tau in (0.0, XI0, 5.0, 10.0):
        assert mu1(tau).mu1 < mu1_exact(tau)


def test_truncation_robustness():
    for tau in (-1.0, XI0, 3.0):
        a = mu1(tau, Disc1D(t_max=max(tau, 0) + 10, n=1668)).mu1
        b = mu1(tau, Disc1D(t_max=max(tau, 0) + 15, n=2502)).mu1
        assert abs(a - b) <= 1e-9


def test_band_minimum_runtime():
    t0 = time.perf_counter()
    find_band_minimum(tol=1e-7)
    assert time.perf_counter() - t0 < 10.0


@pytest.mark.parametrize("disc", [Disc1D(t_max=12.0, n=241), Disc1D()])
def test_polish_robust_over_wide_tau_range(disc):
    # strongly negative tau squeezes the state against the wall; the
    # polishing step must stop at its best iterate instead of amplifying noise
    for tau in np.linspace(-60.0, 30.0, 46):
        v = mu1(float(tau), disc)
        assert v.residual <= 1e-10
