"""Render the three figure kinds from validated CSV tables.

kinds:
  peres   -- scatter of the invariant's Peres lattice with horizontal band
             lines and an NPC inset
  overlay -- exact Peres points (circles) with the per-band semiclassical
             curves drawn on top
  scaling -- log-log size scaling of the mean requantization error with the
             fitted power law annotated
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .figspec import FigureSpec, SchemaError, floats, read_table

plt.rcParams["svg.hashsalt"] = "plotkit"


@dataclass(frozen=True)
class RenderResult:
    paths: tuple[str, ...]
    annotations: dict


def _axis_limits(spec: FigureSpec, ax) -> None:
    if "e_min" in spec.axis or "e_max" in spec.axis:
        ax.set_xlim(spec.axis.get("e_min"), spec.axis.get("e_max"))


def _finish(fig, spec: FigureSpec, annotations: dict) -> RenderResult:
    from pathlib import Path

    stem = Path(spec.output)
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = (str(stem.with_suffix(".png")), str(stem.with_suffix(".svg")))
    for p in paths:
        # no embedded creation date: reruns must be byte-identical
        fig.savefig(p, dpi=160, metadata={"Date": None} if p.endswith(".svg") else None)
    plt.close(fig)
    return RenderResult(paths=paths, annotations=annotations)


def _render_peres(spec: FigureSpec) -> RenderResult:
    table = read_table(spec.inputs["peres_csv"], "peres_csv")
    obs = np.array(table["observable_name"])
    conv = np.array(table["converged"]) == "1"
    keep = (obs == "Jzprime") & conv
    if not keep.any():
        raise SchemaError("peres_csv holds no converged Jzprime rows")
    e = np.array(floats(table, "energy_norm"))[keep]
    val = np.array(floats(table, "value"))[keep]
    npc = np.array(floats(table, "npc"))[keep]

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.scatter(e, val, s=6, c="tab:blue", alpha=0.7, linewidths=0)
    for line in np.arange(np.floor(val.min()), np.ceil(val.max()) + 0.5):
        ax.axhline(line, color="0.82", lw=0.6, zorder=0)
    ax.set_xlabel(r"$E/(j\omega_0)$")
    ax.set_ylabel(r"$\langle J_{z'} \rangle$")
    if spec.title:
        ax.set_title(spec.title)
    _axis_limits(spec, ax)

    inset = ax.inset_axes([0.08, 0.58, 0.38, 0.36])
    inset.scatter(e, npc, s=3, c="tab:red", alpha=0.7, linewidths=0)
    inset.axhline(1.0, color="k", lw=0.8)
    inset.set_ylabel("NPC", fontsize=8)
    inset.tick_params(labelsize=7)
    _axis_limits(spec, inset)
    return _finish(fig, spec, {"n_points": int(keep.sum())})


def _render_overlay(spec: FigureSpec) -> RenderResult:
    peres = read_table(spec.inputs["peres_csv"], "peres_csv")
    curves = read_table(spec.inputs["semiclassical_csv"], "semiclassical_csv")
    obs = np.array(peres["observable_name"])
    conv = np.array(peres["converged"]) == "1"
    keep = (obs == spec.observable) & conv
    if not keep.any():
        raise SchemaError(f"peres_csv holds no converged {spec.observable!r} rows")
    e = np.array(floats(peres, "energy_norm"))[keep]
    val = np.array(floats(peres, "value"))[keep]

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.scatter(e, val, s=14, facecolors="none", edgecolors="tab:red", lw=0.7, label="exact")
    c_obs = np.array(curves["observable_name"]) == spec.observable
    if not c_obs.any():
        raise SchemaError(f"semiclassical_csv holds no {spec.observable!r} rows")
    mp = np.array(floats(curves, "m_prime"))[c_obs]
    ce = np.array(floats(curves, "energy_norm"))[c_obs]
    cv = np.array(floats(curves, "value"))[c_obs]
    n_curves = 0
    for band in np.unique(mp):
        sel = mp == band
        order = np.argsort(ce[sel])
        ax.plot(ce[sel][order], cv[sel][order], "-", color="k", lw=0.9, zorder=3)
        n_curves += 1
    ax.set_xlabel(r"$E/(j\omega_0)$")
    ax.set_ylabel(r"$\langle a^\dagger a \rangle$" if spec.observable == "adag_a" else spec.observable)
    ax.legend(loc="upper left", fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    _axis_limits(spec, ax)
    return _finish(fig, spec, {"n_points": int(keep.sum()), "n_curves": n_curves})


def _render_scaling(spec: FigureSpec) -> RenderResult:
    table = read_table(spec.inputs["scaling_csv"], "scaling_csv")
    fit = read_table(spec.inputs["fit_csv"], "fit_csv")
    model = np.array(table["model"])
    j = np.array(floats(table, "j"))
    mean = np.array(floats(table, "mean_delta_e"))

    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    styles = {"boa": dict(marker="s", color="tab:red"), "harmonic": dict(marker="o", color="tab:green")}
    for name in np.unique(model):
        sel = model == name
        ax.loglog(j[sel], mean[sel], ls="none", ms=5,
                  label=name, **styles.get(name, dict(marker="x", color="k")))

    fit_models = list(fit["model"])
    if "boa" not in fit_models:
        raise SchemaError("fit_csv has no 'boa' row")
    row = fit_models.index("boa")
    alpha = float(fit["alpha"][row])
    intercept = float(fit["intercept"][row])
    sel = model == "boa"
    jj = np.linspace(j[sel].min(), j[sel].max(), 50)
    ax.loglog(jj, np.exp(intercept) * jj ** (-alpha), "k-", lw=1.0)
    label = f"$\\alpha = {alpha:.2f}$"
    ax.annotate(label, xy=(0.05, 0.08), xycoords="axes fraction")
    ax.set_xlabel(r"$j$")
    ax.set_ylabel(r"$\langle \Delta E \rangle$")
    ax.legend(fontsize=8)
    if spec.title:
        ax.set_title(spec.title)
    return _finish(fig, spec, {"alpha": alpha, "alpha_label": f"{alpha:.2f}"})


_RENDERERS = {"peres": _render_peres, "overlay": _render_overlay, "scaling": _render_scaling}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure; raises SchemaError on malformed inputs."""
    return _RENDERERS[spec.kind](spec)
