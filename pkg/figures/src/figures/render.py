"""Panel assembly for each figure kind."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from figures.spec import (
    FIT_COLUMNS,
    FigureSpec,
    SchemaError,
    SX_COLUMNS,
    TRAJECTORY_COLUMNS,
    metadata_for,
    read_csv_columns,
    require_columns,
)

# deterministic output: fixed style, salted stable SVG ids, no dates
plt.rcParams.update({
    "svg.hashsalt": "entbath-figures",
    "figure.dpi": 100,
    "font.size": 9,
})
_SAVEFIG_KW = dict(format="svg", metadata={"Date": None})


def _save(fig, out_dir: Path, name: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.svg"
    fig.savefig(path, **_SAVEFIG_KW)
    plt.close(fig)
    return path


def _time_axis(cols, rescaled):
    return (cols["rescaled_time"], r"$\tilde\alpha t\,\omega_A$") if rescaled \
        else (cols["time"], r"$t\,\omega_A$")


def _label_from_meta(meta) -> str:
    label = meta.get("method", "?")
    parts = meta.get("parts")
    if parts and sorted(parts) != ["dissipator", "hamiltonian", "lamb_shift"]:
        kept = [p for p in parts if p != "hamiltonian"]
        label += " (" + "+".join(kept) + " only)" if kept else " (unitary)"
    if meta.get("include_counterterm"):
        label += " + counterterm"
    return label


def _load_trajectories(spec: FigureSpec):
    if not spec.inputs:
        raise SchemaError("no input files matched the spec globs")
    loaded = []
    for path in spec.inputs:
        cols = read_csv_columns(path)
        require_columns(cols, TRAJECTORY_COLUMNS, path)
        meta = metadata_for(path)
        loaded.append((Path(path), cols, meta))
    return loaded


def render(spec: FigureSpec, out_dir) -> list:
    """Render the figure described by ``spec`` into ``out_dir``.

    Returns the list of written files.  Raises :class:`SchemaError` for
    empty input sets, schema mismatches or missing metadata hashes; no
    file is written in that case.
    """
    out_dir = Path(out_dir)
    name = spec.out_name or spec.figure
    if spec.figure in ("dynamics", "longtime"):
        return [_render_dynamics(spec, out_dir, name)]
    if spec.figure == "rwa-compare":
        return [_render_rwa_compare(spec, out_dir, name)]
    if spec.figure == "counterterm":
        return [_render_counterterm(spec, out_dir, name)]
    if spec.figure == "spectral":
        return [_render_spectral(spec, out_dir, name)]
    if spec.figure == "fit":
        return [_render_fit(spec, out_dir, name)]
    if spec.figure == "adiabatic":
        return [_render_adiabatic(spec, out_dir, name)]
    raise SchemaError(f"unhandled figure kind {spec.figure!r}")


def _render_dynamics(spec, out_dir, name):
    loaded = _load_trajectories(spec)
    long_view = spec.figure == "longtime"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for _, cols, meta in loaded:
        x, xlabel = _time_axis(cols, spec.rescaled_time)
        c = cols["concurrence"]
        se = cols["concurrence_stderr"]
        (line,) = ax.plot(x, c, lw=1.2, label=_label_from_meta(meta))
        if np.any(se > 0):
            ax.fill_between(x, c - 2 * se, c + 2 * se,
                            color=line.get_color(), alpha=0.2, lw=0)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("concurrence")
    ax.set_yscale(spec.yscale)
    if long_view:
        ax.set_xscale("log")
        ax.set_xlim(left=max(x[1], 1e-3))
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_rwa_compare(spec, out_dir, name):
    loaded = _load_trajectories(spec)
    detunings = sorted({round(m.get("detuning", 1.0), 12)
                        for _, _, m in loaded})
    n_rows = len(detunings)
    fig, axes = plt.subplots(n_rows, 2, figsize=(7.5, 2.6 * n_rows),
                             squeeze=False)
    for row, det in enumerate(detunings):
        for _, cols, meta in loaded:
            if round(meta.get("detuning", 1.0), 12) != det:
                continue
            x, xlabel = _time_axis(cols, spec.rescaled_time)
            c = cols["concurrence"]
            n_short = max(2, len(x) // 3)
            axes[row, 0].plot(x[:n_short], c[:n_short], lw=1.1,
                              label=_label_from_meta(meta))
            axes[row, 1].plot(x, c, lw=1.1)
        axes[row, 0].set_ylabel(f"detuning {det}\nconcurrence")
    axes[0, 0].legend(fontsize=7)
    axes[0, 0].set_title("short time")
    axes[0, 1].set_title("full range")
    for ax in axes[-1]:
        ax.set_xlabel(xlabel)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_counterterm(spec, out_dir, name):
    loaded = _load_trajectories(spec)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    styles = {True: "-", False: "--"}
    for _, cols, meta in loaded:
        x, xlabel = _time_axis(cols, spec.rescaled_time)
        ls = styles[bool(meta.get("method") == "hops")]
        ax.plot(x, cols["concurrence"], ls, lw=1.2,
                label=_label_from_meta(meta))
    ax.set_xlabel(xlabel)
    ax.set_ylabel("concurrence")
    ax.axhline(0.0, color="gray", lw=0.6)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_spectral(spec, out_dir, name):
    if not spec.inputs:
        raise SchemaError("no input files matched the spec globs")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for path in spec.inputs:
        cols = read_csv_columns(path)
        require_columns(cols, SX_COLUMNS, path)
        for s in np.unique(cols["s"]):
            m = cols["s"] == s
            (line,) = ax.plot(cols["x"][m], cols["S_exact"][m], "-",
                              lw=1.3, label=f"s = {s:g}")
            ax.plot(cols["x"][m], cols["S_expansion"][m], "--",
                    color=line.get_color(), lw=1.0, alpha=0.8)
            ax.plot(cols["x"][m][::3], cols["S_quadrature"][m][::3], ".",
                    color=line.get_color(), ms=4)
    ax.set_xlabel(r"$x = \omega/\omega_c$")
    ax.set_ylabel(r"$S(x)$")
    ax.legend(fontsize=8)
    ax.set_title("solid: exact, dashed: expansion, dots: numeric integral")
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_fit(spec, out_dir, name):
    if not spec.inputs:
        raise SchemaError("no input files matched the spec globs")
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.5))
    for path in spec.inputs:
        cols = read_csv_columns(path)
        require_columns(cols, FIT_COLUMNS, path)
        meta = metadata_for(path)
        scale = float(meta.get("norm_scale", 1.0))
        tau = cols["tau"]
        lbl = f"s = {meta.get('s', '?')}"
        (line,) = axes[0].plot(tau, cols["fit_re"] / scale, lw=0.9, label=lbl)
        color = line.get_color()
        axes[0].plot(tau, cols["bcf_re"] / scale, "k-", lw=0.5)
        axes[0].plot(tau, cols["fit_im"] / scale, "--", color=color, lw=0.9)
        axes[0].plot(tau, cols["bcf_im"] / scale, "k--", lw=0.5)
        axes[1].semilogy(tau, cols["abs_err"] / scale, color=color, lw=0.9)
        pos = tau > 0
        axes[2].loglog(tau[pos],
                       np.hypot(cols["bcf_re"], cols["bcf_im"])[pos] / scale,
                       "k-", lw=0.5)
        axes[2].loglog(tau[pos],
                       np.hypot(cols["fit_re"], cols["fit_im"])[pos] / scale,
                       color=color, lw=0.9)
    axes[0].set_ylabel("Re/Im BCF (normalized)")
    axes[0].set_xlim(0, min(5.0, tau[-1]))
    axes[0].legend(fontsize=7)
    axes[1].axhline(1e-3, color="gray", ls=":", lw=0.8)
    axes[1].set_ylabel("abs error")
    axes[2].set_ylabel("|BCF|")
    axes[2].set_xlabel(r"$\tau$")
    fig.tight_layout()
    return _save(fig, out_dir, name)


def _render_adiabatic(spec, out_dir, name):
    if not spec.inputs:
        raise SchemaError("no input files matched the spec globs")
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for path in spec.inputs:
        doc = json.loads(Path(path).read_text())
        if not doc.get("config_hash"):
            raise SchemaError(f"{path}: missing config hash")
        for key in ("omega_c", "delta_s", "gamma"):
            if key not in doc:
                raise SchemaError(f"{path}: missing field {key}")
        ax.loglog(doc["omega_c"], doc["delta_s"], "o-", label=r"$|\Delta S|$")
        ax.loglog(doc["omega_c"], doc["gamma"], "s-", label=r"$\gamma$")
    ax.set_xlabel(r"$\omega_c/\omega_A$")
    ax.set_ylabel(r"residual shift and damping ($\omega_A$)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, name)
