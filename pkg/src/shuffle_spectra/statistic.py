"""The eigenfunction test statistic and its moment formulas.

F(sigma) = (1/n) sum_i f(sigma(i)) conj(f(i)) evaluated on renewal-frame
permutations.  Its mean under the shuffle started at the identity is
exactly lam^t ||f||_2^2 at every t and n, its mean under the uniform
distribution is 0, and its second moment admits the explicit bound
(|lam|^{2t} + (12t + n)/n^2) ||f||_inf^4, which together yield a
closed-form total-variation lower bound.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._rng import CHUNK, chunk_bounds, stream
from .engine import KernelEnsemble
from .permutation import Permutation
from .spectral import Eigenfunction, eigenfunction, solve_gamma, solve_zeta

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TestStatistic:
    """An eigenfunction packaged with the cached pieces F needs."""

    __test__ = False  # not a pytest class, despite the name

    eigenfunction: Eigenfunction

    @property
    def n(self) -> int:
        return self.eigenfunction.n

    @property
    def f(self) -> np.ndarray:
        return self.eigenfunction.values

    @property
    def f_conj(self) -> np.ndarray:
        return np.conj(self.eigenfunction.values)

    @property
    def lam(self) -> complex:
        return self.eigenfunction.lam

    @property
    def norm2_sq(self) -> float:
        return self.eigenfunction.norm2_sq

    @property
    def norm_inf(self) -> float:
        return self.eigenfunction.norm_inf

    @classmethod
    def from_branch(cls, n: int, m: int = 1, tol: float = 1e-12) -> "TestStatistic":
        """Statistic for the branch-m eigenpair (default: the branch with
        the largest |lam|, which gives the strongest bound)."""
        pair = solve_gamma(n, solve_zeta(m, tol), tol)
        return cls(eigenfunction(n, pair.gamma))

    @classmethod
    def from_gamma(cls, n: int, gamma: complex) -> "TestStatistic":
        return cls(eigenfunction(n, gamma))


@dataclass(frozen=True)
class MomentReport:
    """Monte Carlo moments of F at one time against the closed forms."""
    t: int
    predicted_mean: complex
    empirical_mean: complex
    empirical_second_moment: float
    second_moment_bound: float
    tv_lower_bound: float
    replicas: int
    std_error: float


def evaluate_F(perm: Permutation, stat: TestStatistic) -> complex:
    """(1/n) sum_i f(sigma(i)) conj(f(i)) for a renewal-frame sigma."""
    if perm.n != stat.n:
        raise ValueError(f"permutation size {perm.n} != statistic size {stat.n}")
    f = stat.f
    return complex((f[perm.card_to_state] * stat.f_conj).sum() / stat.n)


def _phase_mod_two_pi(t: int, angle: float) -> float:
    """t * angle reduced mod 2*pi without losing precision at large t.

    The float ``angle`` is treated as the exact rational it represents, so
    the reduction commutes exactly with incrementing t (up to one final
    rounding), which keeps the recursion pm(t+1) = lam * pm(t) tight.
    """
    if t == 0:
        return 0.0
    r = (Fraction(t) * Fraction(angle)) % Fraction(TWO_PI)
    return float(r)


def predicted_mean(stat: TestStatistic, t: int) -> complex:
    """lam^t ||f||_2^2 in log-polar form (survives t >> 1/|1-lam|)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = stat.lam
    mag = math.exp(t * math.log(abs(lam))) if t else 1.0
    phase = _phase_mod_two_pi(t, cmath.phase(lam))
    return stat.norm2_sq * mag * cmath.exp(1j * phase)


def lam_abs_power(stat: TestStatistic, exponent: float) -> float:
    """|lam|^exponent via exp(exponent * log|lam|)."""
    return math.exp(exponent * math.log(abs(stat.lam)))


def stationary_second_moment(stat: TestStatistic) -> float:
    """E_U |F|^2 = ||f||_2^4 / (n - 1)."""
    if stat.n < 2:
        raise ValueError("needs n >= 2")
    return stat.norm2_sq ** 2 / (stat.n - 1)


def second_moment_bound(stat: TestStatistic, t: int) -> float:
    """E |F(sigma_t)|^2 <= (|lam|^{2t} + (12t + n)/n^2) ||f||_inf^4."""
    if t < 0:
        raise ValueError("t must be >= 0")
    n = stat.n
    return (lam_abs_power(stat, 2 * t) + (12.0 * t + n) / n ** 2) * stat.norm_inf ** 4


def tv_lower_bound(stat: TestStatistic, t: int) -> float:
    """Total-variation lower bound
    |lam|^{2t} ||f||_2^4 / (4 ||f||_inf^4 (|lam|^{2t} + (12t + 3n)/n^2)),
    clamped to [0, 1]."""
    if t < 0:
        raise ValueError("t must be >= 0")
    n = stat.n
    p = lam_abs_power(stat, 2 * t)
    num = p * stat.norm2_sq ** 2
    den = 4.0 * stat.norm_inf ** 4 * (p + (12.0 * t + 3.0 * n) / n ** 2)
    return min(max(num / den, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

def sample_F_trajectories(stat: TestStatistic, times: list[int], replicas: int,
                          seed: int, *, stream_name: str = "moment",
                          chunk: int = CHUNK,
                          workers=None) -> dict[int, np.ndarray]:
    """F(sigma_t) samples at each requested time, one kernel-frame shuffle
    per replica, all from the identity.

    Replicas are processed in fixed-size chunks with per-chunk Philox
    streams, so results are independent of scheduling; ``workers`` may map
    the chunk jobs in any order (results are reassembled by index).
    """
    times = sorted(set(int(t) for t in times))
    if any(t < 0 for t in times):
        raise ValueError("times must be >= 0")
    out = {t: np.empty(replicas, dtype=complex) for t in times}

    def one_chunk(args):
        ci, (lo, hi) = args
        rng = stream(seed, stream_name, ci)
        ens = KernelEnsemble(stat.n, hi - lo)
        vals = {}
        prev = 0
        for t in times:
            ens.run(rng, t - prev)
            prev = t
            vals[t] = ens.overlap(stat.f, stat.f_conj)
        return lo, hi, vals

    jobs = list(enumerate(chunk_bounds(replicas, chunk)))
    mapper = map if workers is None else workers.map
    for lo, hi, vals in mapper(one_chunk, jobs):
        for t, arr in vals.items():
            out[t][lo:hi] = arr
    return out


def sample_F_uniform(stat: TestStatistic, replicas: int, seed: int, *,
                     stream_name: str = "uniform-control",
                     chunk: int = CHUNK, workers=None) -> np.ndarray:
    """F over uniformly random permutations (the stationary control)."""
    out = np.empty(replicas, dtype=complex)

    def one_chunk(args):
        ci, (lo, hi) = args
        rng = stream(seed, stream_name, ci)
        perms = rng.permuted(
            np.tile(np.arange(stat.n), (hi - lo, 1)), axis=1)
        vals = (stat.f[perms] * stat.f_conj[np.newaxis, :]).sum(axis=1) / stat.n
        return lo, hi, vals

    jobs = list(enumerate(chunk_bounds(replicas, chunk)))
    mapper = map if workers is None else workers.map
    for lo, hi, vals in mapper(one_chunk, jobs):
        out[lo:hi] = vals
    return out


def _mean_std_error(samples: np.ndarray) -> tuple[complex, float]:
    mean = complex(samples.mean())
    var = float(np.abs(samples - mean).__pow__(2).mean())
    return mean, math.sqrt(var / samples.size)


def moment_experiment(n: int, m: int, times: list[int], replicas: int,
                      seed: int, *, workers=None) -> list[MomentReport]:
    """Run the kernel-frame shuffle and compare F's moments with the
    closed forms at each listed time."""
    if replicas < 100:
        raise ValueError("needs replicas >= 100")
    stat = TestStatistic.from_branch(n, m)
    samples = sample_F_trajectories(stat, times, replicas, seed, workers=workers)
    reports = []
    for t in sorted(samples):
        vals = samples[t]
        mean, se = _mean_std_error(vals)
        reports.append(MomentReport(
            t=t,
            predicted_mean=predicted_mean(stat, t),
            empirical_mean=mean,
            empirical_second_moment=float((np.abs(vals) ** 2).mean()),
            second_moment_bound=second_moment_bound(stat, t),
            tv_lower_bound=tv_lower_bound(stat, t),
            replicas=replicas,
            std_error=se,
        ))
    return reports


def distinguisher_advantage(samples_shuffle, samples_uniform, *,
                            phase: float = 0.0, bins: int = 64,
                            span_sigmas: float = 6.0) -> float:
    """Empirical total-variation separation of the two projected samples.

    Both complex sample sets are projected onto Re(F e^{-i phase}) (the
    caller passes phase = arg of the predicted mean), then binned into
    ``bins`` equal cells spanning +-``span_sigmas`` pooled standard
    deviations around the pooled mean; outliers fall into the edge cells.
    """
    a = np.asarray(samples_shuffle)
    b = np.asarray(samples_uniform)
    if a.size == 0 or b.size == 0:
        raise ValueError("sample lists must be nonempty")
    rot = cmath.exp(-1j * phase)
    xa = np.real(a * rot)
    xb = np.real(b * rot)
    pooled = np.concatenate([xa, xb])
    center = float(pooled.mean())
    scale = float(pooled.std())
    if scale == 0.0:
        return 0.0 if np.array_equal(np.sort(xa), np.sort(xb)) else 1.0
    lo = center - span_sigmas * scale
    hi = center + span_sigmas * scale
    ia = np.clip(((xa - lo) / (hi - lo) * bins).astype(np.int64), 0, bins - 1)
    ib = np.clip(((xb - lo) / (hi - lo) * bins).astype(np.int64), 0, bins - 1)
    pa = np.bincount(ia, minlength=bins) / xa.size
    pb = np.bincount(ib, minlength=bins) / xb.size
    return float(0.5 * np.abs(pa - pb).sum())
