"""Kernel correctness and numba/numpy backend parity."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from breaklab._backend import HAVE_NUMBA
from breaklab.kernels import (
    GRAM_PIVOT_RTOL,
    IMPLEMENTATIONS,
    ar1_path,
    bridge_sup,
    lur_cusum_sup,
    qp_sup,
    wald_scan,
)

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not available")


def _both(name, *args):
    res_np = IMPLEMENTATIONS[name]["numpy"](*args)
    res_nb = IMPLEMENTATIONS[name]["numba"](*args)
    return res_np, res_nb


# ---------------------------------------------------------------------------
# ar1_path
# ---------------------------------------------------------------------------

def test_ar1_path_pure_sum():
    shocks = np.array([1.0, 1.0, 1.0, 1.0])
    assert_allclose(ar1_path(shocks, 1.0, 0.0), [1.0, 2.0, 3.0, 4.0], rtol=0, atol=0)


def test_ar1_path_initial_condition():
    out = ar1_path(np.zeros(3), 0.5, 8.0)
    assert_allclose(out, [4.0, 2.0, 1.0], rtol=0, atol=0)


def test_ar1_path_matches_direct_recursion():
    rng = np.random.default_rng(11)
    shocks = rng.standard_normal(200)
    rho, x0 = 0.93, 0.7
    expected = np.empty(200)
    prev = x0
    for i, s in enumerate(shocks):
        prev = rho * prev + s
        expected[i] = prev
    assert_allclose(ar1_path(shocks, rho, x0), expected, rtol=1e-14)


@needs_numba
def test_ar1_path_backend_parity():
    rng = np.random.default_rng(5)
    shocks = rng.standard_normal(500)
    out_np, out_nb = _both("ar1_path", shocks, 0.98, 0.3)
    assert_allclose(out_np, out_nb, rtol=0, atol=0)


# ---------------------------------------------------------------------------
# wald_scan
# ---------------------------------------------------------------------------

def _wald_refit(X, y, k_lo, k_hi, sigma2):
    vals = []
    for k in range(k_lo, k_hi + 1):
        g1 = X[:k].T @ X[:k]
        g2 = X[k:].T @ X[k:]
        th1 = np.linalg.solve(g1, X[:k].T @ y[:k])
        th2 = np.linalg.solve(g2, X[k:].T @ y[k:])
        d = th1 - th2
        middle = np.linalg.inv(np.linalg.inv(g1) + np.linalg.inv(g2))
        vals.append(d @ middle @ d / sigma2)
    return np.array(vals)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_wald_scan_matches_per_k_refits(p):
    rng = np.random.default_rng(100 + p)
    T = 80
    X = np.column_stack([np.ones(T)] + [rng.standard_normal(T) for _ in range(p - 1)])
    y = X @ rng.standard_normal(p) + rng.standard_normal(T)
    resid = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]
    sigma2 = resid @ resid / T
    k_lo, k_hi = p, T - p
    vals, ok = wald_scan(X, y, k_lo, k_hi, sigma2)
    assert ok.all()
    assert_allclose(vals, _wald_refit(X, y, k_lo, k_hi, sigma2), rtol=1e-10)


@needs_numba
def test_wald_scan_backend_parity():
    rng = np.random.default_rng(42)
    T = 120
    X = np.column_stack([np.ones(T), rng.standard_normal(T)])
    y = X @ np.array([1.0, 0.5]) + rng.standard_normal(T)
    args = (X, y, 5, T - 5, 1.3, GRAM_PIVOT_RTOL)
    (v_np, ok_np), (v_nb, ok_nb) = _both("wald_scan", *args)
    assert np.array_equal(ok_np, ok_nb)
    assert_allclose(v_np, v_nb, rtol=1e-12)


def test_wald_scan_flags_singular_regimes():
    # second column is constant inside the first regime, so the regime Gram
    # matrix is exactly collinear with the intercept until x varies
    X = np.column_stack([np.ones(12), np.r_[np.full(6, 2.0), np.arange(6.0)]])
    y = np.arange(12.0)
    vals, ok = wald_scan(X, y, 2, 10, 1.0)
    assert not ok[: 6 - 2 + 1].any()  # k = 2..6 leave regime 1 collinear
    assert ok[-1]
    assert np.isnan(vals[~ok]).all()


# ---------------------------------------------------------------------------
# bridge_sup / qp_sup / lur_cusum_sup
# ---------------------------------------------------------------------------

def test_bridge_sup_brute_force():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((5, 64))
    n = 64
    w = np.cumsum(z, axis=1) / np.sqrt(n)
    bridge = w - (np.arange(1, n + 1) / n) * w[:, -1][:, None]
    expected = np.abs(bridge).max(axis=1)
    assert_allclose(bridge_sup(z, 0, n), expected, rtol=1e-12)


def test_bridge_sup_trimming_restricts_grid():
    rng = np.random.default_rng(8)
    z = rng.standard_normal((50, 100))
    full = bridge_sup(z, 0, 100)
    inner = bridge_sup(z, 30, 70)
    assert (inner <= full + 1e-15).all()
    assert (inner < full).any()


def test_qp_sup_p1_is_squared_normalized_bridge():
    rng = np.random.default_rng(9)
    z = rng.standard_normal((8, 200))
    n = 200
    w = np.cumsum(z, axis=1) / np.sqrt(n)
    frac = np.arange(1, n + 1) / n
    bridge = w - frac * w[:, -1][:, None]
    q = bridge[:, 29:170] ** 2 / (frac[29:170] * (1 - frac[29:170]))
    expected = q.max(axis=1)  # grid points 30..170
    assert_allclose(qp_sup(z[:, None, :], 30, 170), expected, rtol=1e-12)


def test_qp_sup_nonnegative_and_monotone_in_p():
    rng = np.random.default_rng(10)
    z = rng.standard_normal((2000, 2, 128))
    q2 = qp_sup(z, 13, 115)
    q1 = qp_sup(z[:, :1, :], 13, 115)
    assert (q2 >= 0).all()
    # adding an independent nonnegative component shifts quantiles up
    for level in (0.5, 0.9, 0.95):
        assert np.quantile(q2, level) > np.quantile(q1, level)


@needs_numba
@pytest.mark.parametrize(
    "name,maker",
    [
        ("bridge_sup", lambda rng: (rng.standard_normal((40, 256)), 0, 256)),
        ("qp_sup", lambda rng: (rng.standard_normal((40, 2, 256)), 39, 217)),
    ],
)
def test_sup_kernels_backend_parity(name, maker):
    rng = np.random.default_rng(13)
    args = maker(rng)
    res_np, res_nb = _both(name, *args)
    assert_allclose(res_np, res_nb, rtol=1e-12)


@needs_numba
def test_lur_kernel_backend_parity():
    rng = np.random.default_rng(14)
    n = 400
    z = rng.standard_normal((30, 2, n))
    sdt = np.sqrt(1.0 / n)
    dbe = z[:, 0, :] * sdt
    dbu = (0.5 * z[:, 0, :] + np.sqrt(0.75) * z[:, 1, :]) * sdt
    for c in (0.0, -5.0, -200.0):
        res_np, res_nb = _both("lur_cusum_sup", dbe, dbu, c)
        assert_allclose(res_np, res_nb, rtol=1e-10)


def test_lur_kernel_c_zero_reduces_toward_plain_bridge():
    # with c = 0 the correction uses the running integral of the driving
    # motion itself; the statistic stays finite and nonnegative
    rng = np.random.default_rng(15)
    n = 500
    z = rng.standard_normal((100, 2, n))
    sdt = np.sqrt(1.0 / n)
    out = lur_cusum_sup(z[:, 0, :] * sdt, z[:, 1, :] * sdt, 0.0)
    assert np.isfinite(out).all()
    assert (out >= 0).all()
