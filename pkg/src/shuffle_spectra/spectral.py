"""Spectrum of the single-card renewal chain.

The renewal matrix M has a uniform row at state 0; from any other state i
the card is refreshed into state 1 with probability 1/n and otherwise
drifts to state i+1 mod n.  Its nontrivial eigenvalues are lam = (1-1/n)g
for the roots g != 1 of

    (n-1) g^n - n g^{n-1} + 1 = 0.

Writing g = 1/omega and omega = 1 + z/n turns the root equation into
phi_n(z) = (1 + z/n)^n - z - 1 = 0, whose solutions converge to the
nonzero roots of psi(z) = e^z - z - 1.  Those limit roots come in
branches indexed by m >= 1 with Im(zeta_m) in (2*pi*m + pi/4,
2*pi*m + pi/2); the branch-1 root controls the mixing-time lower bound
through rho = n |1 - lam| -> |zeta + 1|.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class RootSolveError(RuntimeError):
    """Root iteration failed; carries the last iterate."""

    def __init__(self, message: str, last_iterate: complex):
        super().__init__(f"{message} (last iterate {last_iterate})")
        self.last_iterate = last_iterate


# ---------------------------------------------------------------------------
# Renewal matrix
# ---------------------------------------------------------------------------

DENSE_LIMIT = 4096


def renewal_row(n: int, i: int) -> dict[int, float]:
    """Nonzero entries of row i of M as {state: probability}."""
    if n < 2:
        raise ValueError("deck size must be >= 2")
    if not 0 <= i < n:
        raise ValueError(f"row index {i} out of range for n={n}")
    if i == 0:
        return {j: 1.0 / n for j in range(n)}
    return {1: 1.0 / n, (i + 1) % n: 1.0 - 1.0 / n}


def renewal_matrix(n: int) -> np.ndarray:
    """Dense n x n view of M (guarded; use apply_renewal for large n)."""
    if n > DENSE_LIMIT:
        raise ValueError(f"dense M capped at n={DENSE_LIMIT}")
    m = np.zeros((n, n))
    m[0, :] = 1.0 / n
    idx = np.arange(1, n)
    m[idx, 1] += 1.0 / n
    m[idx, (idx + 1) % n] += 1.0 - 1.0 / n
    return m


def apply_renewal(vec: np.ndarray) -> np.ndarray:
    """Matrix-free M @ vec for a length-n vector (any n)."""
    v = np.asarray(vec)
    n = v.size
    out = np.empty_like(v, dtype=complex if np.iscomplexobj(v) else float)
    out[0] = v.mean()
    shifted = np.roll(v, -1)[1:]          # v[(i+1) % n] for i = 1..n-1
    out[1:] = v[1] / n + (1.0 - 1.0 / n) * shifted
    return out


# ---------------------------------------------------------------------------
# Roots of psi(z) = e^z - z - 1 and of the characteristic polynomial
# ---------------------------------------------------------------------------

def _clog1p(w: complex) -> complex:
    """log(1 + w) to full relative precision for complex w (Kahan form)."""
    u = 1.0 + w
    if u == 1.0:
        return w
    return cmath.log(u) * (w / (u - 1.0))


def psi(z: complex) -> complex:
    return cmath.exp(z) - z - 1.0


def phi_n(n: int, z: complex) -> complex:
    """(1 + z/n)^n - z - 1, evaluated as exp(n log1p(z/n))."""
    return cmath.exp(n * _clog1p(z / n)) - z - 1.0


def solve_zeta(m: int, tol: float = 1e-12, max_iter: int = 200) -> complex:
    """The branch-m nonzero root of e^z - z - 1 = 0.

    Writing z = x + iy with x = y*cos(y)/sin(y) - 1 reduces psi(z) = 0 to
    a real equation in y that changes sign on (2*pi*m + pi/4,
    2*pi*m + pi/2); bracketed bisection there is followed by a complex
    Newton polish.  The trivial root z = 0 is never returned.
    """
    if m < 1:
        raise ValueError("branch index must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo = TWO_PI * m + math.pi / 4.0
    hi = TWO_PI * m + math.pi / 2.0

    def g(y: float) -> float:
        return y / math.sin(y) - math.exp(y * math.cos(y) / math.sin(y) - 1.0)

    if not (g(lo) < 0.0 < g(hi)):
        raise RootSolveError(f"no sign change on branch m={m}", complex(lo, hi))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    y = 0.5 * (lo + hi)
    z = complex(y * math.cos(y) / math.sin(y) - 1.0, y)
    for _ in range(8):
        step = psi(z) / (cmath.exp(z) - 1.0)
        z -= step
        if abs(step) <= 1e-16 * abs(z):
            break
    if abs(psi(z)) > tol:
        raise RootSolveError(f"psi residual {abs(psi(z)):.3e} above tol", z)
    if not (TWO_PI * m + math.pi / 4.0 < z.imag < TWO_PI * m + math.pi / 2.0):
        raise RootSolveError("root left its branch window", z)
    return z


@dataclass(frozen=True)
class SpectralPair:
    """One eigenvalue of M with its full root pedigree."""
    n: int
    m: int                 # branch index of the seeding root of psi
    zeta: complex          # root of e^z - z - 1
    z_n: complex           # root of (1 + z/n)^n - z - 1 near zeta
    omega: complex         # 1 + z_n / n
    gamma: complex         # 1 / omega, root of (n-1)g^n - n g^{n-1} + 1
    lam: complex           # (1 - 1/n) gamma, eigenvalue of M
    rho: float             # n |1 - lam|
    psi_residual: float
    charpoly_residual: float


def charpoly_residual(n: int, z: complex) -> float:
    """|(n-1)g^n - n g^{n-1} + 1| for g = 1/(1 + z/n), evaluated without
    forming g^n explicitly:  1 - g^{n-1} (n - (n-1) g)."""
    omega = 1.0 + z / n
    val = 1.0 - cmath.exp(-(n - 1) * _clog1p(z / n)) * (1.0 + z) / omega
    return abs(val)


def _gamma_poly_coeffs(n: int) -> np.ndarray:
    """Coefficients (descending) of the deflated characteristic polynomial
    q(g) = ((n-1)g^n - n g^{n-1} + 1) / (g - 1)^2 = (n-1)g^{n-2} + ... + 2g + 1."""
    return np.arange(n - 1, 0, -1, dtype=float)


def all_gamma_roots(n: int) -> np.ndarray:
    """All n roots of (n-1)g^n - n g^{n-1} + 1, including g = 1 twice.

    The double root at 1 is divided off exactly (integer synthetic
    division) before the companion-matrix solve, so the remaining simple
    roots are well conditioned.
    """
    if not 2 <= n <= 64:
        raise ValueError("all_gamma_roots supports 2 <= n <= 64")
    ones = np.array([1.0 + 0.0j, 1.0 + 0.0j])
    if n == 2:
        return ones
    rest = np.roots(_gamma_poly_coeffs(n)).astype(complex)
    return np.concatenate([ones, rest])


def solve_gamma(n: int, zeta: complex, tol: float = 1e-12,
                max_iter: int = 200) -> SpectralPair:
    """Track the root of phi_n(z) = (1+z/n)^n - z - 1 attached to ``zeta``.

    For n above the asymptotic threshold plain Newton from zeta converges;
    in the small-n regime (n <= 128) the seed is taken from the exact
    characteristic-polynomial roots instead, picking the one nearest zeta
    under z = n (1/g - 1).  Either way the result is Newton-polished on
    the stable phi_n form and validated.
    """
    if n < 8:
        raise ValueError("solve_gamma needs n >= 8")
    if abs(psi(zeta)) > 1e-9:
        raise ValueError("zeta is not a root of e^z - z - 1")

    if n <= 128:
        roots = np.roots(_gamma_poly_coeffs(n)).astype(complex)
        zs = n * (1.0 / roots - 1.0)
        z = complex(zs[np.argmin(np.abs(zs - zeta))])
    else:
        z = zeta

    scale = max(1.0, abs(cmath.exp(z)))
    for _ in range(max_iter):
        ph = phi_n(n, z)
        if abs(ph) <= 0.25 * tol * scale:
            break
        dphi = cmath.exp((n - 1) * _clog1p(z / n)) - 1.0
        if dphi == 0:
            raise RootSolveError("phi_n' vanished", z)
        step = ph / dphi
        z -= step
        if abs(step) <= 1e-15 * max(abs(z), 1.0):
            break
    else:
        raise RootSolveError("Newton did not converge", z)

    if abs(z) < 1e-3:
        raise RootSolveError("Newton collapsed to the trivial root z=0", z)
    if abs(phi_n(n, z)) > tol * max(1.0, abs(cmath.exp(z))):
        raise RootSolveError(f"phi_n residual {abs(phi_n(n, z)):.3e} above tol", z)

    omega = 1.0 + z / n
    gamma = 1.0 / omega
    lam = (1.0 - 1.0 / n) * gamma
    return SpectralPair(
        n=n, m=max(1, int(z.imag // TWO_PI)), zeta=zeta, z_n=z, omega=omega,
        gamma=gamma, lam=lam, rho=n * abs(1.0 - lam),
        psi_residual=abs(psi(zeta)),
        charpoly_residual=charpoly_residual(n, z),
    )


# ---------------------------------------------------------------------------
# Eigenfunctions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Eigenfunction:
    """Right eigenvector of M for an eigenvalue lam not in {0, 1},
    normalized to f_0 = 0, f_1 = 1."""
    n: int
    values: np.ndarray     # complex, length n
    gamma: complex
    lam: complex
    norm2: float           # sqrt((1/n) sum |f_i|^2)
    norm_inf: float

    @property
    def norm2_sq(self) -> float:
        return self.norm2 * self.norm2


def eigenfunction(n: int, gamma: complex) -> Eigenfunction:
    """Build f from a characteristic root via the increment recursion
    f_k = 1 + (gamma - n/(n-1)) * sum_{j<k} gamma^{j-1}.

    The running geometric sum avoids the 1/(1-gamma) form, which loses
    precision when |1 - gamma| = O(1/n).
    """
    if n < 2:
        raise ValueError("deck size must be >= 2")
    g = complex(gamma)
    if abs(g) < 1e-12 or abs(g - 1.0) < 1e-12:
        raise ValueError("gamma in {0, 1}: use special_eigenvectors for "
                         "the lam = 0, 1 eigenpairs")
    y1 = g - n / (n - 1.0)
    powers = g ** np.arange(max(n - 2, 0))
    geom = np.concatenate([[0.0 + 0.0j], np.cumsum(powers)])  # G_0..G_{n-2}
    f = np.empty(n, dtype=complex)
    f[0] = 0.0
    f[1:] = 1.0 + y1 * geom
    lam = (1.0 - 1.0 / n) * g
    norm2 = math.sqrt(float(np.mean(np.abs(f) ** 2)))
    return Eigenfunction(n=n, values=f, gamma=g, lam=lam, norm2=norm2,
                         norm_inf=float(np.abs(f).max()))


def eigen_residual(eig: Eigenfunction) -> float:
    """max_i |(M f)_i - lam f_i|."""
    return float(np.abs(apply_renewal(eig.values) - eig.lam * eig.values).max())


def special_eigenvectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The eigenvectors for lam = 1 (all ones) and lam = 0
    ((-1, n-1, -1, ..., -1))."""
    if n < 2:
        raise ValueError("deck size must be >= 2")
    ones = np.ones(n)
    v0 = -np.ones(n)
    v0[1] = n - 1.0
    return ones, v0


def dense_eigenvalues(n: int) -> np.ndarray:
    """Eigenvalues of the dense M (oracle for small n)."""
    return np.linalg.eigvals(renewal_matrix(n))
