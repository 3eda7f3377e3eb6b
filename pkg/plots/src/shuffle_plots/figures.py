"""The figure kinds.

* ``locus``   - characteristic roots in the complex plane with the unit
                circle (input: spectra.json with gamma_roots).
* ``decay``   - |E F| against t on a log scale with the predicted
                |lam|^t ||f||_2^2 overlay (input: moment or lowerbound CSV).
* ``curves``  - TV lower bound / advantage / exact TV against t or
                t/(n ln n) (inputs: lowerbound and/or exact-tv CSVs).
* ``marking`` - marked-fraction trajectories m_k per epoch with the
                half-deck threshold and the minimal growth-epoch guide
                (input: epochs.csv).

Rendering is deterministic: Agg backend, fixed figure geometry, pinned
metadata (no timestamps), salted SVG ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .schemas import SchemaError, read_csv, read_spectra_json  # noqa: E402

plt.rcParams["svg.hashsalt"] = "shuffle-plots"

_THETA = math.exp(-2.0) * (1.0 - math.exp(-1.0)) / 2.0
_FIGSIZE = (6.4, 4.8)
_DPI = 120


@dataclass
class FigureSpec:
    """What to draw: kind, input paths, output path, and options."""
    kind: str
    inputs: dict[str, str]
    output: str
    options: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, payload: dict) -> "FigureSpec":
        missing = [k for k in ("kind", "inputs", "output") if k not in payload]
        if missing:
            raise SchemaError(f"figure spec missing {', '.join(missing)}")
        return cls(kind=payload["kind"], inputs=dict(payload["inputs"]),
                   output=payload["output"],
                   options=dict(payload.get("options", {})))


@dataclass
class FigureResult:
    """Summary of what was drawn (used by tests and callers)."""
    output: str
    kind: str
    markers: int = 0
    series: int = 0
    notes: dict = field(default_factory=dict)


def _save(fig, output: str) -> None:
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = out.suffix.lstrip(".").lower() or "png"
    if fmt == "svg":
        metadata = {"Date": None, "Creator": "shuffle-plots"}
    else:
        metadata = {"Software": "shuffle-plots"}
    try:
        fig.savefig(out, format=fmt, dpi=_DPI, metadata=metadata)
    except OSError as exc:
        raise OSError(f"cannot write figure to {out}: {exc}") from exc
    finally:
        plt.close(fig)


def _require(inputs: dict[str, str], *names: str) -> None:
    missing = [n for n in names if n not in inputs]
    if missing:
        raise SchemaError(f"missing input(s): {', '.join(missing)}")


def plot_locus(spec: FigureSpec) -> FigureResult:
    _require(spec.inputs, "spectra")
    payload = read_spectra_json(spec.inputs["spectra"], need_roots=True)
    roots = np.array([complex(re, im) for re, im in payload["gamma_roots"]])
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    angles = np.linspace(0, 2 * np.pi, 512)
    ax.plot(np.cos(angles), np.sin(angles), lw=0.8, color="0.6",
            label="unit circle")
    ax.scatter(roots.real, roots.imag, s=18, color="C0", zorder=3,
               label=f"characteristic roots (n={payload['n']})")
    ax.axhline(0, lw=0.4, color="0.85")
    ax.axvline(0, lw=0.4, color="0.85")
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(spec.options.get("title", "Characteristic roots"))
    ax.legend(loc="upper left", fontsize=8)
    _save(fig, spec.output)
    return FigureResult(
        output=spec.output, kind="locus", markers=len(roots),
        notes={"max_abs_root": float(np.abs(roots).max()),
               "all_in_unit_disk": bool(np.abs(roots).max() <= 1 + 1e-8)})


def plot_decay(spec: FigureSpec) -> FigureResult:
    _require(spec.inputs, "moment")
    schema = spec.options.get("schema", "moment")
    if schema not in ("moment", "lowerbound"):
        raise SchemaError(f"decay schema must be moment or lowerbound, "
                          f"got {schema!r}")
    cols = read_csv(spec.inputs["moment"], schema)
    order = np.argsort(cols["t"])
    t = cols["t"][order]
    pred = np.hypot(cols["pred_re"], cols["pred_im"])[order]
    emp = np.hypot(cols["emp_re"], cols["emp_im"])[order]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.semilogy(t, pred, "-", color="C1", label=r"predicted $|\lambda|^t\,\|f\|_2^2$")
    ax.semilogy(t, emp, "o", color="C0", ms=4, label="empirical $|E\\,F|$")
    ax.set_xlabel("t (steps)")
    ax.set_ylabel("|mean of F|")
    ax.set_title(spec.options.get("title", "Test-statistic mean decay"))
    ax.legend(fontsize=8)
    _save(fig, spec.output)
    gap0 = float(abs(pred[0] - emp[0])) if t[0] == 0 else float("nan")
    return FigureResult(output=spec.output, kind="decay", markers=len(t),
                        series=2, notes={"t0_gap": gap0})


def plot_curves(spec: FigureSpec) -> FigureResult:
    if not spec.inputs:
        raise SchemaError("curves figure needs lowerbound and/or tv inputs")
    n = spec.options.get("n")
    scale = n * math.log(n) if n else 1.0
    xlabel = "t / (n ln n)" if n else "t (steps)"
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    series = 0
    if "lowerbound" in spec.inputs:
        cols = read_csv(spec.inputs["lowerbound"], "lowerbound")
        order = np.argsort(cols["t"])
        ax.plot(cols["t"][order] / scale, cols["advantage"][order], "o-",
                color="C0", label="distinguisher advantage")
        ax.plot(cols["t"][order] / scale, cols["tv_lb"][order], "s--",
                color="C1", label="TV lower bound")
        series += 2
    if "tv" in spec.inputs:
        cols = read_csv(spec.inputs["tv"], "tv")
        order = np.argsort(cols["t"])
        ax.plot(cols["t"][order] / scale, cols["tv"][order], "-",
                color="C2", label="exact TV to uniform")
        series += 1
    ax.set_xlabel(xlabel)
    ax.set_ylabel("distance / advantage")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(spec.options.get("title", "Mixing curves"))
    ax.legend(fontsize=8)
    _save(fig, spec.output)
    return FigureResult(output=spec.output, kind="curves", series=series)


def plot_marking(spec: FigureSpec) -> FigureResult:
    _require(spec.inputs, "epochs")
    cols = read_csv(spec.inputs["epochs"], "epochs")
    runs = np.unique(cols["run"].astype(int))
    max_runs = int(spec.options.get("max_runs", 30))
    shown = runs[:max_runs]
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    k_max = 1
    for run in shown:
        sel = cols["run"].astype(int) == run
        k = cols["k"][sel]
        ax.plot(k, cols["m_k"][sel], "-", color="C0", alpha=0.25, lw=0.8)
        k_max = max(k_max, int(k.max()))
    ax.axhline(0.5, color="C3", ls="--", lw=1.0,
               label="half-deck threshold (good epoch)")
    n = spec.options.get("n")
    if n:
        ks = np.arange(1, k_max + 1)
        guide = np.minimum((1 + _THETA / 2) ** (ks - 1) / n, 1.0)
        ax.plot(ks, guide, ":", color="C2",
                label=r"minimal growth $(1+\theta/2)^{k-1}/n$")
    ax.set_xlabel("epoch k")
    ax.set_ylabel("marked fraction $m_k$")
    ax.set_ylim(0, 1.02)
    ax.set_title(spec.options.get("title", "Marking progress by epoch"))
    ax.legend(fontsize=8, loc="lower right")
    _save(fig, spec.output)
    return FigureResult(output=spec.output, kind="marking",
                        series=len(shown), notes={"epochs": k_max})


_KINDS = {
    "locus": plot_locus,
    "decay": plot_decay,
    "curves": plot_curves,
    "marking": plot_marking,
}


def plot(spec: FigureSpec) -> FigureResult:
    """Render one figure; raises SchemaError on malformed inputs."""
    if spec.kind not in _KINDS:
        raise SchemaError(f"unknown figure kind {spec.kind!r}; "
                          f"valid: {', '.join(sorted(_KINDS))}")
    return _KINDS[spec.kind](spec)
