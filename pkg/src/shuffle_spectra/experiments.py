"""Config-driven experiment runner.

Each experiment kind has a declarative parameter schema (validated before
anything runs; every violation is reported, not just the first) and a
runner that writes deterministic CSV/JSON artifacts plus a manifest.
Reruns with the same config and seed are byte-identical except for the
manifest's timestamp and wall time, independent of the worker count:
replicas are processed in fixed-size chunks with per-chunk streams and
partial results are combined in chunk order.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .coupling import coupling_ensemble
from .exact import ExactDistribution, exact_mixing_time, perm_unrank, step_kernel
from .marking import marking_ensemble, theta_constants
from .rules import make_rule
from .spectral import (all_gamma_roots, eigen_residual, eigenfunction,
                       solve_gamma, solve_zeta)
from .statistic import (TestStatistic, distinguisher_advantage, predicted_mean,
                        sample_F_trajectories, sample_F_uniform,
                        second_moment_bound, stationary_second_moment,
                        tv_lower_bound)


class ConfigError(ValueError):
    """Invalid experiment config; ``violations`` lists every problem."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(violations))
        self.violations = violations


# ---------------------------------------------------------------------------
# Schema machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    name: str
    type: str                      # int | number | string | bool | list | times
    required: bool = False
    default: Any = None
    constraint: str = ""
    check: Callable[[Any, dict], str | None] | None = None


_TIME_EXPR = re.compile(r"^\s*([0-9]*\.?[0-9]+)\s*\*\s*n\s*\*\s*(?:ln|log)\(n\)\s*$")


def eval_time_expr(value, n: int) -> int:
    """A time entry: a literal count, or "c*n*ln(n)" with natural log,
    floored."""
    if isinstance(value, bool):
        raise ValueError(f"bad time entry {value!r}")
    if isinstance(value, (int, float)):
        if value < 0:
            raise ValueError(f"negative time {value!r}")
        return int(math.floor(value))
    if isinstance(value, str):
        m = _TIME_EXPR.match(value)
        if m:
            return int(math.floor(float(m.group(1)) * n * math.log(n)))
    raise ValueError(f"bad time entry {value!r} (want int or 'c*n*ln(n)')")


def _typecheck(field: Field, value) -> str | None:
    t = field.type
    if t == "int":
        if not isinstance(value, int) or isinstance(value, bool):
            return f"{field.name}: expected integer, got {value!r}"
    elif t == "number":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            return f"{field.name}: expected number, got {value!r}"
    elif t == "string":
        if not isinstance(value, str):
            return f"{field.name}: expected string, got {value!r}"
    elif t == "bool":
        if not isinstance(value, bool):
            return f"{field.name}: expected bool, got {value!r}"
    elif t == "time":
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            return f"{field.name}: expected count or 'c*n*ln(n)', got {value!r}"
    elif t in ("list", "times"):
        if not isinstance(value, list) or not value:
            return f"{field.name}: expected nonempty list, got {value!r}"
    return None


def validate_config(kind: str, config: dict) -> dict:
    """Fill defaults and collect all violations for an experiment config."""
    if kind not in EXPERIMENTS:
        raise ConfigError(
            [f"experiment: unknown kind {kind!r}; valid kinds: "
             f"{', '.join(sorted(EXPERIMENTS))}"])
    schema = EXPERIMENTS[kind].schema
    known = {f.name for f in schema} | {"experiment", "seed"}
    violations = [f"{k}: unknown parameter" for k in config if k not in known]
    merged: dict[str, Any] = {}
    for f in schema:
        if f.name in config:
            val = config[f.name]
            err = _typecheck(f, val)
            if err:
                violations.append(err + (f" ({f.constraint})" if f.constraint else ""))
                continue
            merged[f.name] = val
        elif f.required:
            violations.append(f"{f.name}: required"
                              + (f" ({f.constraint})" if f.constraint else ""))
            continue
        else:
            merged[f.name] = f.default
    for f in schema:
        if f.check and f.name in merged and merged[f.name] is not None:
            err = f.check(merged[f.name], merged)
            if err:
                violations.append(f"{f.name}: {err}")
    if violations:
        raise ConfigError(violations)
    if "seed" in config:
        merged["seed"] = config["seed"]
    return merged


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _times_list(cfg: dict, key: str = "times") -> list[int]:
    return sorted({eval_time_expr(v, cfg["n"]) for v in cfg[key]})


# ---------------------------------------------------------------------------
# Runners (each returns outputs, check failures, manifest extras)
# ---------------------------------------------------------------------------

def _run_spectra(cfg, out: Path, seed: int, workers):
    n, m, tol = cfg["n"], cfg["branch"], cfg["tol"]
    zeta = solve_zeta(m, tol)
    pair = solve_gamma(n, zeta, tol)
    eig = eigenfunction(n, pair.gamma)
    resid = eigen_residual(eig)
    payload = {
        "n": n, "m": m,
        "zeta": [zeta.real, zeta.imag],
        "z_n": [pair.z_n.real, pair.z_n.imag],
        "gamma": [pair.gamma.real, pair.gamma.imag],
        "lambda": [pair.lam.real, pair.lam.imag],
        "rho": pair.rho,
        "abs_one_plus_zeta": abs(1 + zeta),
        "norm2": eig.norm2, "norm_inf": eig.norm_inf,
        "residuals": {"psi": pair.psi_residual,
                      "charpoly": pair.charpoly_residual,
                      "eigen": resid},
    }
    if n <= 64:
        roots = all_gamma_roots(n)
        payload["gamma_roots"] = [[z.real, z.imag] for z in roots]
    path = out / "spectra.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    outputs = [path.name]
    if cfg["dump_f"]:
        fpath = out / "eigenfunction.csv"
        write_csv(fpath, ["k", "f_re", "f_im"],
                  ((k, v.real, v.imag) for k, v in enumerate(eig.values)))
        outputs.append(fpath.name)
    failures = []
    if pair.psi_residual > tol:
        failures.append(f"psi residual {pair.psi_residual:.3e} > tol")
    if pair.charpoly_residual > tol:
        failures.append(f"charpoly residual {pair.charpoly_residual:.3e} > tol")
    if abs(pair.gamma) > 1 + 1e-12:
        failures.append(f"|gamma| = {abs(pair.gamma)} > 1")
    if resid > 1e-10 * eig.norm_inf:
        failures.append(f"eigen residual {resid:.3e} > 1e-10 ||f||_inf")
    return outputs, failures, {"rho": pair.rho}


def _moment_rows(stat: TestStatistic, samples: dict[int, np.ndarray]):
    rows = []
    for t in sorted(samples):
        vals = samples[t]
        mean = complex(vals.mean())
        se = math.sqrt(float(np.abs(vals - mean).__pow__(2).mean()) / vals.size)
        m2 = np.abs(vals) ** 2
        m2_mean = float(m2.mean())
        m2_se = math.sqrt(float(m2.var()) / vals.size)
        pred = predicted_mean(stat, t)
        rows.append({
            "t": t, "pred": pred, "mean": mean, "se": se,
            "m2": m2_mean, "m2_se": m2_se,
            "bound": second_moment_bound(stat, t),
            "tv_lb": tv_lower_bound(stat, t),
        })
    return rows


def _run_moment(cfg, out: Path, seed: int, workers):
    n, m = cfg["n"], cfg["branch"]
    times = _times_list(cfg)
    stat = TestStatistic.from_branch(n, m)
    samples = sample_F_trajectories(stat, times, cfg["replicas"], seed,
                                    workers=workers)
    rows = _moment_rows(stat, samples)
    path = out / "moment.csv"
    write_csv(path, ["t", "pred_re", "pred_im", "emp_re", "emp_im",
                     "emp_m2", "bound_m2", "stderr", "replicas"],
              ((r["t"], r["pred"].real, r["pred"].imag, r["mean"].real,
                r["mean"].imag, r["m2"], r["bound"], r["se"],
                cfg["replicas"]) for r in rows))
    failures = []
    for r in rows:
        if abs(r["mean"] - r["pred"]) > 4 * r["se"] + 1e-15:
            failures.append(f"t={r['t']}: mean off by "
                            f"{abs(r['mean'] - r['pred']):.3e} > 4 se")
        if r["m2"] > r["bound"] + 4 * r["m2_se"]:
            failures.append(f"t={r['t']}: second moment above bound")
    extras = {"stationary_second_moment": stationary_second_moment(stat)}
    return [path.name], failures, extras


def _run_lowerbound(cfg, out: Path, seed: int, workers):
    n, m = cfg["n"], cfg["branch"]
    times = _times_list(cfg)
    stat = TestStatistic.from_branch(n, m)
    samples = sample_F_trajectories(stat, times, cfg["replicas"], seed,
                                    stream_name="lowerbound", workers=workers)
    uniform = sample_F_uniform(stat, cfg["replicas"], seed, workers=workers)
    rows = _moment_rows(stat, samples)
    for r in rows:
        r["advantage"] = distinguisher_advantage(
            samples[r["t"]], uniform, phase=np.angle(r["pred"]),
            bins=cfg["bins"], span_sigmas=cfg["span_sigmas"])
    path = out / "lowerbound.csv"
    write_csv(path, ["t", "pred_re", "pred_im", "emp_re", "emp_im", "emp_m2",
                     "bound_m2", "tv_lb", "advantage", "stderr"],
              ((r["t"], r["pred"].real, r["pred"].imag, r["mean"].real,
                r["mean"].imag, r["m2"], r["bound"], r["tv_lb"],
                r["advantage"], r["se"]) for r in rows))
    failures = [f"t={r['t']}: advantage {r['advantage']} outside [0,1]"
                for r in rows if not 0.0 <= r["advantage"] <= 1.0]
    extras = {"binning": {"bins": cfg["bins"], "span_sigmas": cfg["span_sigmas"],
                          "projection": "Re(F * exp(-i arg predicted_mean))"}}
    return [path.name], failures, extras


def _run_couple(cfg, out: Path, seed: int, workers):
    n, i, j, t = cfg["n"], cfg["i"], cfg["j"], eval_time_expr(cfg["t"], cfg["n"])
    ens = coupling_ensemble(n, i, j, t, cfg["replicas"], seed, workers=workers)
    stat = TestStatistic.from_branch(n, cfg["branch"]) if n >= 8 else None
    if stat is not None:
        prod = stat.f[ens.sigma_pair[:, 0]] * np.conj(stat.f[ens.sigma_pair[:, 1]])
    else:
        prod = np.zeros(cfg["replicas"], dtype=complex)
    path = out / "couple.csv"
    write_csv(path, ["replica", "unglue_time", "n_ij", "product_re", "product_im"],
              ((r, int(ens.unglue_time[r]), ens.n_ij[r], prod[r].real,
                prod[r].imag) for r in range(cfg["replicas"])))
    nbar = float(ens.n_ij.mean())
    frac = ens.unglued_fraction
    se = math.sqrt(max(frac * (1 - frac), 1e-12) / cfg["replicas"])
    bound = 2.0 * nbar / n + 2.0 * t / n ** 2
    failures = []
    if frac > bound + 4 * se:
        failures.append(f"unglue fraction {frac:.4f} > bound {bound:.4f} + 4 se")
    extras = {"unglued_fraction": frac, "n_ij_mean": nbar,
              "unglue_bound": bound}
    return [path.name], failures, extras


def _run_uniform_time(cfg, out: Path, seed: int, workers):
    n, runs = cfg["n"], cfg["runs"]
    cap = eval_time_expr(cfg["cap"], n)
    theta, _ = theta_constants()
    ens = marking_ensemble(n, cfg["rule"], runs, seed, cap, workers=workers)
    runs_path = out / "runs.csv"
    write_csv(runs_path, ["run", "T"],
              ((r, int(ens.T[r])) for r in range(runs)))
    outputs = [runs_path.name]
    failures = []
    mmat = ens.m()
    if cfg["epochs"]:
        rows = []
        K = ens.epochs
        for r in range(runs):
            for k in range(1, K):
                m_k, m_next = mmat[r, k - 1], mmat[r, k]
                if k > 1 and m_k >= 1.0:
                    break
                growth = m_next >= (1.0 + theta / 2.0) * m_k
                rows.append((r, k, 1.0 - m_k, m_k, int(ens.d[r, k - 1]),
                             growth, growth or m_k >= 0.5))
        ep_path = out / "epochs.csv"
        write_csv(ep_path, ["run", "k", "u_k", "m_k", "d_k", "growth", "good"],
                  rows)
        outputs.append(ep_path.name)
        bad = (mmat[:, 1:] < mmat[:, :-1] + ens.d[:, :-1] / n - 1e-12).any()
        if bad:
            failures.append("m_{k+1} >= m_k + D_k/n violated")
    capped = int((ens.T < 0).sum())
    extras = {"capped_runs": capped, "mean_T": float(ens.T[ens.T >= 0].mean())
              if (ens.T >= 0).any() else None}
    return outputs, failures, extras


def _run_exact_tv(cfg, out: Path, seed: int, workers):
    n = cfg["n"]
    horizon = eval_time_expr(cfg["horizon"], n)
    rule = make_rule(cfg["rule"], n)
    res = exact_mixing_time(n, rule, threshold=cfg["threshold"], horizon=horizon)
    path = out / "tv.csv"
    write_csv(path, ["t", "tv"], res.tv_curve)
    outputs = [path.name]
    for t_dump in cfg["dump_times"] or []:
        td = eval_time_expr(t_dump, n)
        mu = ExactDistribution.point_mass(perm_unrank(n, 0))
        rule.reset()
        for t in range(1, td + 1):
            mu = step_kernel(mu, rule.location(t))
        dpath = out / f"dist_t{td}.csv"
        write_csv(dpath, ["rank", "prob"], enumerate(mu.probs))
        outputs.append(dpath.name)
    failures = []
    if res.tau_mix is None:
        failures.append(f"no crossing of {cfg['threshold']} within horizon")
    extras = {"tau_mix": res.tau_mix, "threshold": res.threshold}
    return outputs, failures, extras


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

def _pos(v, c):
    return None if v > 0 else f"must be > 0, got {v}"


def _ge(limit):
    return lambda v, c: None if v >= limit else f"must be >= {limit}, got {v}"


def _int_range(lo, hi):
    return lambda v, c: (None if lo <= v <= hi
                         else f"must be in [{lo}, {hi}], got {v}")


def _valid_time(v, c):
    try:
        eval_time_expr(v, c.get("n", 2))
    except ValueError as exc:
        return str(exc)
    return None


def _valid_times(v, c):
    try:
        for entry in v:
            eval_time_expr(entry, c.get("n", 2))
    except ValueError as exc:
        return str(exc)
    return None


def _card_index(other: str):
    def chk(v, c):
        if "n" in c and not 0 <= v < c["n"]:
            return f"must be in [0, n), got {v}"
        if other in c and v == c[other]:
            return f"must differ from {other}"
        return None
    return chk


@dataclass(frozen=True)
class ExperimentKind:
    name: str
    description: str
    schema: tuple[Field, ...]
    runner: Callable


EXPERIMENTS: dict[str, ExperimentKind] = {}


def _register(kind: ExperimentKind) -> None:
    EXPERIMENTS[kind.name] = kind


_register(ExperimentKind(
    "spectra",
    "branch root of e^z-z-1, tracked eigenvalue, eigenfunction norms",
    (Field("n", "int", required=True, constraint="n >= 8", check=_ge(8)),
     Field("branch", "int", default=1, constraint="m >= 1", check=_ge(1)),
     Field("tol", "number", default=1e-12, constraint="tol > 0", check=_pos),
     Field("dump_f", "bool", default=False)),
    _run_spectra))

_register(ExperimentKind(
    "moment",
    "Monte Carlo moments of the test statistic against the closed forms",
    (Field("n", "int", required=True, constraint="n >= 8", check=_ge(8)),
     Field("branch", "int", default=1, check=_ge(1)),
     Field("times", "times", required=True,
           constraint="ints or 'c*n*ln(n)'", check=_valid_times),
     Field("replicas", "int", required=True, constraint="replicas >= 100",
           check=_ge(100))),
    _run_moment))

_register(ExperimentKind(
    "lowerbound",
    "distinguisher advantage and TV lower bound along a time grid",
    (Field("n", "int", required=True, constraint="n >= 8", check=_ge(8)),
     Field("branch", "int", default=1, check=_ge(1)),
     Field("times", "times", required=True,
           constraint="ints or 'c*n*ln(n)'", check=_valid_times),
     Field("replicas", "int", required=True, constraint="replicas >= 100",
           check=_ge(100)),
     Field("bins", "int", default=64, check=_ge(2)),
     Field("span_sigmas", "number", default=6.0, check=_pos)),
    _run_lowerbound))

_register(ExperimentKind(
    "couple",
    "coupled pair runs: unglue times, N_ij, product samples",
    (Field("n", "int", required=True, check=_ge(2)),
     Field("i", "int", required=True, constraint="0 <= i < n",
           check=_card_index("j")),
     Field("j", "int", required=True, constraint="0 <= j < n, j != i",
           check=_card_index("i")),
     Field("t", "time", required=True, constraint="count or 'c*n*ln(n)'",
           check=_valid_time),
     Field("replicas", "int", required=True, check=_ge(1)),
     Field("branch", "int", default=1, check=_ge(1))),
    _run_couple))

_register(ExperimentKind(
    "uniform-time",
    "strong uniform time runs and epoch marking statistics",
    (Field("n", "int", required=True, check=_ge(2)),
     Field("rule", "string", default="cyclic",
           constraint="cyclic | star | uniform-iid",
           check=lambda v, c: None if v in ("cyclic", "star", "uniform-iid")
           else f"unknown rule {v!r}"),
     Field("runs", "int", required=True, check=_ge(1)),
     Field("cap", "time", default="8*n*ln(n)",
           constraint="count or 'c*n*ln(n)'", check=_valid_time),
     Field("epochs", "bool", default=True)),
    _run_uniform_time))

_register(ExperimentKind(
    "exact-tv",
    "exact TV-to-uniform curve and mixing time over S_n (n <= 8)",
    (Field("n", "int", required=True, constraint="2 <= n <= 8",
           check=_int_range(2, 8)),
     Field("rule", "string", default="cyclic",
           constraint="cyclic | star",
           check=lambda v, c: None if v in ("cyclic", "star")
           else f"unknown rule {v!r}"),
     Field("threshold", "number", default=1.0 / (2 * math.e), check=_pos),
     Field("horizon", "time", default="4*n*ln(n)",
           constraint="count or 'c*n*ln(n)'", check=_valid_time),
     Field("dump_times", "times", default=None, check=_valid_times)),
    _run_exact_tv))


def list_experiments() -> dict:
    """Catalog of experiment kinds with parameter schemas."""
    out = {}
    for kind in sorted(EXPERIMENTS):
        exp = EXPERIMENTS[kind]
        out[kind] = {
            "description": exp.description,
            "parameters": {
                f.name: {"type": f.type, "required": f.required,
                         "default": f.default,
                         **({"constraint": f.constraint} if f.constraint else {})}
                for f in exp.schema},
        }
    return out


def run_experiment(config: dict, out_dir, *, seed: int | None = None,
                   threads: int = 1, check: bool = False) -> dict:
    """Validate, run, write artifacts + manifest, return the manifest."""
    kind = config.get("experiment")
    if not kind:
        raise ConfigError(["experiment: required (one of "
                           + ", ".join(sorted(EXPERIMENTS)) + ")"])
    body = {k: v for k, v in config.items() if k != "experiment"}
    merged = validate_config(kind, body)
    if seed is None:
        seed = int(merged.get("seed", 0) or 0)
    merged["seed"] = seed
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    full_config = {"experiment": kind, **merged}
    started = time.time()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    complete, failures, outputs, extras = False, [], [], {}
    try:
        outputs, failures, extras = EXPERIMENTS[kind].runner(
            merged, out, seed, pool)
        complete = True
    finally:
        if pool is not None:
            pool.shutdown()
        manifest = {
            "experiment": kind,
            "config": full_config,
            "config_hash": config_hash(full_config),
            "seed": seed,
            "threads": threads,
            "versions": {"artifact": __version__,
                         "numpy": np.__version__,
                         "python": sys.version.split()[0]},
            "outputs": outputs,
            "complete": complete,
            "check": {"requested": check,
                      "passed": not failures,
                      "failures": failures},
            "wall_time_s": round(time.time() - started, 3),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
            **extras,
        }
        (out / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return manifest
