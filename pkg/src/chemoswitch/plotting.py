"""PNG figures for finished runs. Imported only when ``--plot`` is given.

Figures are written to ``<run_dir>/figures`` and the manifest is refreshed
so that it keeps covering every file in the run directory.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import Mode  # noqa: E402
from .experiment import _read_csv, read_metadata, write_manifest  # noqa: E402

FIELDS = ("n0", "n1", "s")
# fixed metadata keeps repeated renders byte-identical
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path


def _blocks(data: np.ndarray) -> list[np.ndarray]:
    times = data[:, 0]
    starts = np.flatnonzero(np.r_[True, np.diff(times) != 0])
    return np.split(data, starts[1:])


def plot_profiles(run_dir: Path, run_id: str, coord: str, out: Path) -> list[Path]:
    """Snapshot profiles and, for 1D runs, an n1 kymograph."""
    _, data = _read_csv(run_dir / f"{run_id}_snapshots.csv")
    blocks = _blocks(data)
    files = []
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4), sharex=True)
    cmap = plt.get_cmap("viridis")
    for i, block in enumerate(blocks):
        colour = cmap(i / max(1, len(blocks) - 1))
        for ax, j in zip(axes, (2, 3, 4)):
            ax.plot(block[:, 1], block[:, j], color=colour, lw=1, label=f"t={block[0, 0]:g}")
    for ax, name in zip(axes, FIELDS):
        ax.set_title(name)
        ax.set_xlabel(coord)
    if len(blocks) <= 8:
        axes[-1].legend(fontsize=7)
    fig.tight_layout()
    files.append(_save(fig, out / f"{run_id}_profiles.png"))

    if coord == "x" and len(blocks) > 2:
        t = np.array([b[0, 0] for b in blocks])
        x = blocks[0][:, 1]
        img = np.vstack([b[:, 3] for b in blocks])
        fig, ax = plt.subplots(figsize=(6, 4))
        mesh = ax.pcolormesh(x, t, img, shading="nearest", cmap="magma")
        fig.colorbar(mesh, ax=ax, label="n1")
        ax.set_xlabel("x")
        ax.set_ylabel("t")
        fig.tight_layout()
        files.append(_save(fig, out / f"{run_id}_kymograph.png"))
    return files


def plot_probe(run_dir: Path, run_id: str, out: Path) -> list[Path]:
    _, probe = _read_csv(run_dir / f"{run_id}_probe.csv")
    _, md = _read_csv(run_dir / f"{run_id}_max_density.csv")
    fig, (a, b) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for j, name in enumerate(FIELDS, start=1):
        a.plot(probe[:, 0], probe[:, j], lw=0.8, label=name)
    a.set_ylabel("probe value")
    a.legend(fontsize=8)
    b.semilogy(md[:, 0], md[:, 1], lw=0.8, color="k")
    b.set_ylabel("max n0 + n1")
    b.set_xlabel("t")
    fig.tight_layout()
    return [_save(fig, out / f"{run_id}_probe.png")]


def plot_fields_2d(run_dir: Path, run_id: str, out: Path) -> list[Path]:
    files = []
    for path in sorted(run_dir.glob(f"{run_id}_t*.csv")):
        _, data = _read_csv(path)
        n = int(round(np.sqrt(data.shape[0])))
        x = data[::n, 0]
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.8))
        for ax, j, name in zip(axes, (2, 3, 4), FIELDS):
            img = ax.imshow(data[:, j].reshape(n, n).T, origin="lower", cmap="magma",
                            extent=(0, x[-1] + x[0], 0, x[-1] + x[0]))
            fig.colorbar(img, ax=ax, fraction=0.046)
            ax.set_title(name)
        fig.suptitle(path.stem[len(run_id) + 1:])
        fig.tight_layout()
        files.append(_save(fig, out / f"{path.stem}.png"))
    return files


def plot_dispersion(run_dir: Path, run_id: str, out: Path) -> list[Path]:
    _, data = _read_csv(run_dir / f"{run_id}_dispersion.csv")
    if data.size == 0:
        return []
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in (5, 7, 9):
        ax.plot(data[:, 1], data[:, j], ".", ms=3)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("k^2")
    ax.set_ylabel("Re(lambda)")
    fig.tight_layout()
    return [_save(fig, out / f"{run_id}_dispersion.png")]


def plot_eigenmap(run_dir: Path, run_id: str, out: Path, log_mu: bool) -> list[Path]:
    _, data = _read_csv(run_dir / f"{run_id}_eigenmap.csv")
    chi = np.unique(data[:, 0])
    mu = np.unique(data[:, 1])
    shape = (chi.size, mu.size)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for ax, j, label in zip(axes, (2, 3), ("max Re(lambda)", "max |Im(lambda)|")):
        val = data[:, j].reshape(shape).T
        if j == 2:
            lim = max(float(np.max(np.abs(val))), 1e-12)
            mesh = ax.pcolormesh(chi, mu, val, shading="nearest", cmap="RdBu_r", vmin=-lim, vmax=lim)
            ax.contour(chi, mu, val, levels=[0.0], colors="k", linewidths=0.8)
        else:
            mesh = ax.pcolormesh(chi, mu, val, shading="nearest", cmap="viridis")
        fig.colorbar(mesh, ax=ax, label=label)
        ax.set_xlabel("chi")
        ax.set_ylabel("mu")
        if log_mu:
            ax.set_yscale("log")
    fig.tight_layout()
    return [_save(fig, out / f"{run_id}_eigenmap.png")]


def render_directory(run_dir: str | Path) -> list[Path]:
    """Render every figure that applies to the run in ``run_dir``."""
    run_dir = Path(run_dir)
    meta = read_metadata(run_dir)
    run_id = meta["run.id"]
    mode = Mode(meta["run.mode"])
    out = run_dir / "figures"
    files: list[Path] = []
    if mode is Mode.SIM1D:
        files += plot_profiles(run_dir, run_id, "x", out) + plot_probe(run_dir, run_id, out)
    elif mode is Mode.RADIAL:
        files += plot_profiles(run_dir, run_id, "r", out) + plot_probe(run_dir, run_id, out)
    elif mode is Mode.SIM2D:
        files += plot_fields_2d(run_dir, run_id, out) + plot_probe(run_dir, run_id, out)
    elif mode is Mode.STABILITY:
        files += plot_dispersion(run_dir, run_id, out)
    elif mode is Mode.EIGENMAP:
        files += plot_eigenmap(run_dir, run_id, out, meta.get("eigenmap.mu_scale", "log") == "log")
    elif mode is Mode.SWEEP:
        for sub in sorted(p for p in run_dir.iterdir() if p.is_dir() and p.name != "figures"):
            if any(sub.glob("*_metadata.txt")):
                files += render_directory(sub)
    if (run_dir / "manifest.txt").exists():
        write_manifest(run_dir)
    return files
