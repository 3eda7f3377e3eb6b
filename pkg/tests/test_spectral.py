import cmath
import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from shuffle_spectra.spectral import (RootSolveError, all_gamma_roots,
                                      apply_renewal, dense_eigenvalues,
                                      eigen_residual, eigenfunction,
                                      renewal_matrix, renewal_row, solve_gamma,
                                      solve_zeta, special_eigenvectors)

ZETA_1 = complex(2.088843015613044, 7.461489285654254)


def multiset_distance(a, b) -> float:
    """Optimal-matching distance between two complex multisets."""
    a, b = np.asarray(a), np.asarray(b)
    assert a.size == b.size
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# ---------------------------------------------------------------------------
# Renewal matrix
# ---------------------------------------------------------------------------

def test_renewal_rows_n4():
    assert renewal_row(4, 0) == {0: 0.25, 1: 0.25, 2: 0.25, 3: 0.25}
    assert renewal_row(4, 2) == {1: 0.25, 3: 0.75}
    assert renewal_row(4, 3) == {0: 0.75, 1: 0.25}


def test_renewal_row_errors():
    with pytest.raises(ValueError):
        renewal_row(4, 4)
    with pytest.raises(ValueError):
        renewal_row(1, 0)


@pytest.mark.parametrize("n", [2, 3, 8, 33])
def test_doubly_stochastic(n):
    m = renewal_matrix(n)
    assert np.abs(m.sum(axis=1) - 1).max() <= 1e-12
    assert np.abs(m.sum(axis=0) - 1).max() <= 1e-12
    rows = [renewal_row(n, i) for i in range(n)]
    for i, row in enumerate(rows):
        assert abs(sum(row.values()) - 1) <= 1e-12
        dense = np.zeros(n)
        for k, v in row.items():
            dense[k] = v
        assert np.array_equal(dense, m[i])


def test_apply_renewal_matches_dense():
    n = 9
    m = renewal_matrix(n)
    rng = np.random.default_rng(0)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    assert np.abs(apply_renewal(v) - m @ v).max() <= 1e-14


# ---------------------------------------------------------------------------
# Roots of psi
# ---------------------------------------------------------------------------

def test_zeta_branch_one_digits():
    z = solve_zeta(1)
    # truncated digits quoted for the branch-1 root
    assert 2.088 <= z.real < 2.089
    assert 7.461 <= z.imag < 7.462
    assert 8.075 <= abs(1 + z) < 8.076
    assert abs(cmath.exp(z) - z - 1) <= 1e-12
    assert z.real == pytest.approx(
        z.imag * math.cos(z.imag) / math.sin(z.imag) - 1.0, abs=1e-9)


def _bisect_y(m: int) -> float:
    """Independent bisection oracle for the reduced real equation."""
    def g(y):
        return y / math.sin(y) - math.exp(y * math.cos(y) / math.sin(y) - 1.0)
    lo, hi = 2 * math.pi * m + math.pi / 4, 2 * math.pi * m + math.pi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_zeta_branches_localized(m):
    z = solve_zeta(m)
    lo = 2 * math.pi * m + math.pi / 4
    hi = 2 * math.pi * m + math.pi / 2
    assert lo < z.imag < hi
    assert abs(z.imag - _bisect_y(m)) <= 1e-9
    assert abs(cmath.exp(z) - z - 1) <= 1e-12
    assert abs(z) > 1e-6  # never the trivial root


def test_zeta_rejects_bad_args():
    with pytest.raises(ValueError):
        solve_zeta(0)
    with pytest.raises(ValueError):
        solve_zeta(1, tol=-1)


# ---------------------------------------------------------------------------
# Characteristic roots
# ---------------------------------------------------------------------------

def test_all_gamma_roots_n3():
    roots = np.sort_complex(all_gamma_roots(3))
    assert np.allclose(roots, [-0.5, 1.0, 1.0], atol=1e-12)


def test_all_gamma_roots_n2():
    assert np.allclose(np.sort_complex(all_gamma_roots(2)), [1.0, 1.0])


@pytest.mark.parametrize("n", range(3, 13))
def test_gamma_roots_map_to_dense_spectrum(n):
    roots = all_gamma_roots(n)
    nontrivial = roots[np.abs(roots - 1.0) > 1e-6]
    assert nontrivial.size == n - 2
    lams = np.concatenate([(1 - 1 / n) * nontrivial, [1.0, 0.0]])
    assert multiset_distance(lams, dense_eigenvalues(n)) <= 1e-8


@pytest.mark.parametrize("n", [2, 5, 16, 64])
def test_gamma_roots_inside_unit_disk(n):
    assert np.abs(all_gamma_roots(n)).max() <= 1 + 1e-8


def test_gamma_root_polynomial_residual():
    for n in (5, 12, 40):
        for g in all_gamma_roots(n):
            val = (n - 1) * g ** n - n * g ** (n - 1) + 1
            assert abs(val) <= 1e-10


@pytest.mark.parametrize("n", [8, 64, 1024, 10_000])
def test_solve_gamma_postconditions(n):
    pair = solve_gamma(n, ZETA_1)
    assert abs(pair.gamma) <= 1 + 1e-12
    assert pair.lam == (1 - 1 / n) * pair.gamma  # exact by construction
    assert pair.charpoly_residual <= 1e-12
    assert abs(pair.omega * pair.gamma - 1) <= 1e-14
    # closeness to 1 with the documented +1/n slack (asymptotic regime)
    if n >= 64:
        assert abs(1 - pair.gamma) <= (abs(ZETA_1) + 1) / n
        assert abs(1 - pair.lam) <= (abs(1 + ZETA_1) + 1) / n


def test_solve_gamma_n1e4_rho_close():
    pair = solve_gamma(10_000, ZETA_1)
    assert abs(pair.rho - abs(1 + ZETA_1)) <= 0.01


def test_solve_gamma_rejects_non_root_seed():
    with pytest.raises(ValueError):
        solve_gamma(64, 1.0 + 1.0j)


def test_solve_gamma_small_n_guard():
    with pytest.raises(ValueError):
        solve_gamma(4, ZETA_1)


# ---------------------------------------------------------------------------
# Eigenfunctions
# ---------------------------------------------------------------------------

def test_eigenfunction_n3():
    eig = eigenfunction(3, -0.5)
    assert np.allclose(eig.values, [0, 1, -1], atol=1e-14)
    assert eig.lam == pytest.approx(-1 / 3, abs=1e-15)
    assert eig.norm2 ** 2 == pytest.approx(2 / 3, abs=1e-14)
    assert eig.norm_inf == pytest.approx(1.0)
    assert eigen_residual(eig) <= 1e-14


@pytest.mark.parametrize("n", [8, 64, 1024])
def test_eigenfunction_identities(n):
    pair = solve_gamma(n, ZETA_1)
    eig = eigenfunction(n, pair.gamma)
    f = eig.values
    assert f[0] == 0
    assert f[1] == 1
    assert abs(f.sum()) <= 1e-10 * n * eig.norm_inf
    assert eigen_residual(eig) <= 1e-10 * eig.norm_inf
    # wrap-around consistency: the recursion's f_n equals f_0 = 0
    y1 = pair.gamma - n / (n - 1)
    f_n = 1 + y1 * (1 - pair.gamma ** (n - 1)) / (1 - pair.gamma)
    assert abs(f_n) <= 1e-9 * n


def test_eigenfunction_rejects_special_gammas():
    with pytest.raises(ValueError):
        eigenfunction(5, 1.0)
    with pytest.raises(ValueError):
        eigenfunction(5, 0.0)


def test_norm_bounds_against_gamma_distance():
    """|f_k| <= 1 + c and ||f||_2 >= 1/(2 sqrt(2c)) for c = n|1-gamma|,
    the variational sanity bounds behind the norm-ratio control."""
    for n in (64, 256, 1024):
        pair = solve_gamma(n, ZETA_1)
        c = n * abs(1 - pair.gamma)
        assert c > 1
        eig = eigenfunction(n, pair.gamma)
        assert eig.norm_inf <= 1 + c + 1e-9
        assert eig.norm2 >= 1 / (2 * math.sqrt(2 * c)) - 1e-9


def test_special_eigenvectors():
    n = 3
    ones, v0 = special_eigenvectors(n)
    assert np.array_equal(v0, [-1, 2, -1])
    m = renewal_matrix(n)
    assert np.abs(m @ ones - ones).max() <= 1e-12
    assert np.abs(m @ v0).max() <= 1e-12


@pytest.mark.parametrize("n", [2, 7, 50])
def test_special_eigenvectors_general(n):
    ones, v0 = special_eigenvectors(n)
    assert np.abs(apply_renewal(ones) - ones).max() <= 1e-12
    assert np.abs(apply_renewal(v0)).max() <= 1e-12
