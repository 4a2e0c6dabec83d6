"""Run experiments described by an :class:`ExperimentConfig` and write their files.

Every run owns one directory ``<output_root>/<run_id>`` holding CSV data,
PGM previews (2D), a ``<run_id>_metadata.txt`` key-value file and a
``manifest.txt`` with a SHA-256 digest per file. Output contains no
timestamps, so identical configs reproduce byte-identical files.
"""
from __future__ import annotations

import hashlib
import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import Mode, ExperimentConfig, Provenance, parse_config, split_kv_lines
from .grid1d import Grid1D, initial_condition_1d, integrate_1d
from .grid2d import Grid2D, Rng2DSeed, initial_condition_2d, run_2d
from .model import Case
from .patterns import PatternSummary, summarize
from .radial import RadialGrid, radial_initial_condition, run_radial
from .runs import RunArtifacts
from .stability import StabilityReport, eigenvalue_map, stability_report
from .timestep import TimeController

OUTPUT_ROOT_ENV = "CHEMOSWITCH_OUTPUT_ROOT"
FLOAT_FMT = "%.17g"


@dataclass
class ExperimentResult:
    run_id: str
    mode: Mode
    run_dir: Path
    status: str = "completed"
    message: str = ""
    files: list[Path] = field(default_factory=list)
    run: RunArtifacts | None = None
    summary: PatternSummary | None = None
    report: StabilityReport | None = None
    rows: list[dict[str, str]] = field(default_factory=list)

    @property
    def aborted(self) -> bool:
        return self.status in ("blowup", "stiff")


def output_root(config: ExperimentConfig, override: str | Path | None = None) -> Path:
    """Explicit override, then the environment variable, then ``run.output_dir``."""
    if override is not None:
        return Path(override)
    env = os.environ.get(OUTPUT_ROOT_ENV)
    if env:
        return Path(env)
    return Path(config["run.output_dir"])


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _write_csv(path: Path, header: str, columns: list[np.ndarray]) -> Path:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns[0].size else np.empty((0, len(columns)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")
    return path


def write_pgm(path: Path, field2d: np.ndarray, vmin: float | None = None, vmax: float | None = None):
    """8-bit binary graymap (P5); returns the ``(vmin, vmax)`` used for scaling."""
    f = np.asarray(field2d, dtype=float)
    lo = float(f.min()) if vmin is None else vmin
    hi = float(f.max()) if vmax is None else vmax
    span = hi - lo
    scaled = np.zeros_like(f) if span <= 0 else (f - lo) / span
    pixels = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        # first array index is x; write rows of constant y, top row = largest y
        fh.write(np.ascontiguousarray(pixels.T[::-1]).tobytes())
    return lo, hi


def read_pgm(path: Path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path} is not a binary PGM file")
    cols, rows = (int(v) for v in parts[1].split())
    pixels = np.frombuffer(parts[3], dtype=np.uint8).reshape(rows, cols)
    return pixels[::-1].T.copy()


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(run_dir: Path) -> Path:
    """List every file under ``run_dir`` (except the manifest) with its digest."""
    manifest = run_dir / "manifest.txt"
    entries = []
    for path in sorted(p for p in run_dir.rglob("*") if p.is_file() and p != manifest):
        entries.append(f"{sha256_file(path)}  {path.relative_to(run_dir).as_posix()}")
    manifest.write_text("\n".join(entries) + "\n", encoding="utf-8")
    return manifest


def verify_manifest(run_dir: Path) -> list[str]:
    """Names of files whose digest does not match, or that are missing or unlisted."""
    run_dir = Path(run_dir)
    manifest = run_dir / "manifest.txt"
    listed = {}
    for line in manifest.read_text(encoding="utf-8").splitlines():
        digest, name = line.split("  ", 1)
        listed[name] = digest
    problems = []
    for name, digest in listed.items():
        path = run_dir / name
        if not path.is_file() or sha256_file(path) != digest:
            problems.append(name)
    for path in run_dir.rglob("*"):
        if path.is_file() and path != manifest and path.relative_to(run_dir).as_posix() not in listed:
            problems.append(path.relative_to(run_dir).as_posix())
    return sorted(problems)


# ---- per-mode writers -------------------------------------------------------

def _write_snapshots_1d(run: RunArtifacts, path: Path, coord: str) -> Path:
    x = run.coords[coord]
    cols = [[], [], [], [], []]
    for snap in run.snapshots:
        cols[0].append(np.full(x.size, snap.t))
        cols[1].append(x)
        cols[2].append(snap.n0)
        cols[3].append(snap.n1)
        cols[4].append(snap.s)
    return _write_csv(path, f"t,{coord},n0,n1,s", [np.concatenate(c) for c in cols])


def _write_probe(run: RunArtifacts, path: Path) -> Path:
    a = run.probe.arrays()
    return _write_csv(path, "t,n0,n1,s", [a["t"], a["n0"], a["n1"], a["s"]])


def _write_max_density(run: RunArtifacts, path: Path) -> Path:
    t = np.array([p[0] for p in run.max_density])
    m = np.array([p[1] for p in run.max_density])
    return _write_csv(path, "t,max_density", [t, m])


def _time_tag(t: float) -> str:
    return f"t{t:.6g}".replace("+", "")


def _write_snapshots_2d(run: RunArtifacts, run_dir: Path, run_id: str) -> tuple[list[Path], list[str]]:
    files, scale_lines = [], []
    x = run.coords["x"]
    X, Y = np.meshgrid(x, run.coords["y"], indexing="ij")
    for snap in run.snapshots:
        tag = _time_tag(snap.t)
        files.append(_write_csv(run_dir / f"{run_id}_{tag}.csv", "x,y,n0,n1,s",
                                [X.ravel(), Y.ravel(), snap.n0.ravel(), snap.n1.ravel(), snap.s.ravel()]))
        for name in ("n0", "n1", "s"):
            path = run_dir / f"{run_id}_{tag}_{name}.pgm"
            lo, hi = write_pgm(path, getattr(snap, name))
            files.append(path)
            scale_lines.append(f"pgm.{path.name} = {_fmt(lo)}, {_fmt(hi)}")
    return files, scale_lines


def _metadata(config: ExperimentConfig, extra: list[tuple[str, str]]) -> str:
    lines = [f"meta.code_version = {__version__}", f"meta.seed = {config.seed}",
             f"meta.mode = {config.mode.value}"]
    lines.append(config.emit(with_provenance=False).rstrip("\n"))
    prov = [f"provenance.{k} = {v.value}" for k, v in sorted(config.provenance.items())
            if config.values.get(k) is not None]
    lines.extend(prov)
    lines.extend(f"{k} = {v}" for k, v in extra)
    return "\n".join(lines) + "\n"


def _run_pairs(run: RunArtifacts) -> list[tuple[str, str]]:
    pairs = [("result.status", run.status), ("result.message", run.message.replace("\n", " ")),
             ("result.geometry", run.geometry),
             ("result.blowup_time", _fmt(run.blowup_time) if run.blowup_time is not None else "")]
    for key in sorted(run.stats):
        value = run.stats[key]
        pairs.append((f"stats.{key}", _fmt(value) if isinstance(value, float) else str(value)))
    for i, text in enumerate(run.warnings):
        pairs.append((f"warning.{i}", text.replace("\n", " ")))
    return pairs


def analysis_kwargs(config: ExperimentConfig) -> dict:
    t0, t1 = config["analysis.oscillation_t0"], config["analysis.oscillation_t1"]
    return dict(
        pattern_threshold=config["analysis.pattern_threshold"],
        peak_threshold_ratio=config["analysis.peak_threshold_ratio"],
        extinction_threshold=config["analysis.extinction_threshold"],
        oscillation_window=(t0, t1) if t0 is not None else None,
        oscillation_field=config["analysis.oscillation_field"],
    )


def _summary_pairs(summary: PatternSummary, config: ExperimentConfig) -> list[tuple[str, str]]:
    pairs = [(f"summary.{k}", v) for k, v in summary.to_pairs()]
    pairs += [
        ("summary.convention.pattern_threshold", _fmt(config["analysis.pattern_threshold"])),
        ("summary.convention.peak_threshold_ratio", _fmt(config["analysis.peak_threshold_ratio"])),
        ("summary.convention.oscillation_power_fraction", "0.2"),
        ("summary.convention.oscillation_envelope_decay", "0.2"),
    ]
    pairs += [(f"summary.note.{i}", n) for i, n in enumerate(summary.notes)]
    return pairs


# ---- mode runners --------------------------------------------------------

def controller_from(config: ExperimentConfig) -> TimeController:
    return TimeController(
        t_end=config["time.t_end"], dt_init=config["time.dt_init"], dt_min=config["time.dt_min"],
        dt_max=config["time.dt_max"], rel_tol=config["time.rel_tol"], abs_tol=config["time.abs_tol"],
        snapshot_every=config["time.snapshot_every"], probe_every=config["time.probe_every"],
        method=config["time.method"],
    )


def simulate(config: ExperimentConfig, mode: Mode | None = None) -> RunArtifacts:
    """Run the solver for ``mode`` (default: the config's mode) without writing files."""
    mode = mode or config.mode
    params = config.model_params()
    if mode is Mode.SIM1D:
        grid = Grid1D.from_spacing(config["grid.L"], config["grid.dx"])
        ic = initial_condition_1d(grid, config["ic.nbar"], config["ic.amplitude"], config["ic.A_focus"],
                                  config["ic.sampling"])
        return integrate_1d(params, grid, ic, controller_from(config))
    if mode is Mode.SIM2D:
        grid = Grid2D.from_spacing(config["grid.L"], config["grid.dx"])
        ic = initial_condition_2d(grid, config["ic.nbar"], config["ic.amplitude"], Rng2DSeed(config.seed))
        return run_2d(params, grid, ic, config["time.tau"], config["time.t_end"],
                      config["time.snapshot_times"], config["time.probe_every"],
                      config["analysis.blowup_threshold"])
    if mode is Mode.RADIAL:
        grid = RadialGrid.from_spacing(config["grid.L_r"], config["grid.dr"])
        ic = radial_initial_condition(grid, config["ic.nbar"], config["ic.amplitude"])
        return run_radial(params, grid, controller_from(config), ic, config["analysis.blowup_threshold"],
                          config["analysis.converge_window"], config["analysis.converge_tol"])
    raise ValueError(f"mode {mode.value} is not a simulation mode")


def _finish(result: ExperimentResult, config: ExperimentConfig, extra: list[tuple[str, str]]) -> ExperimentResult:
    meta = result.run_dir / f"{result.run_id}_metadata.txt"
    meta.write_text(_metadata(config, extra), encoding="utf-8")
    result.files.append(meta)
    result.files.append(write_manifest(result.run_dir))
    return result


def _run_simulation(config: ExperimentConfig, run_dir: Path, mode: Mode) -> ExperimentResult:
    run_id = config.run_id
    result = ExperimentResult(run_id, mode, run_dir)
    run = simulate(config, mode)
    summary = summarize(run, **analysis_kwargs(config))
    run.summary = summary
    result.run, result.summary = run, summary
    result.status, result.message = run.status, run.message
    extra = _run_pairs(run) + _summary_pairs(summary, config)
    if mode is Mode.SIM2D:
        files, scales = _write_snapshots_2d(run, run_dir, run_id)
        result.files += files
        extra += [tuple(s.split(" = ", 1)) for s in scales]
    else:
        coord = "r" if mode is Mode.RADIAL else "x"
        result.files.append(_write_snapshots_1d(run, run_dir / f"{run_id}_snapshots.csv", coord))
    result.files.append(_write_probe(run, run_dir / f"{run_id}_probe.csv"))
    result.files.append(_write_max_density(run, run_dir / f"{run_id}_max_density.csv"))
    return _finish(result, config, extra)


def format_stability_report(report: StabilityReport, params, L: float) -> tuple[str, list[list[float]]]:
    """Key-value header text and dispersion-table rows."""
    h = report.h
    header = [
        ("case", params.switching.case.value), ("D", _fmt(params.D)), ("chi", _fmt(params.chi)),
        ("mu", _fmt(params.switching.mu)), ("q", _fmt(params.switching.q)), ("L", _fmt(L)),
        ("n0_star", _fmt(report.steady.n0_star)), ("n1_star", _fmt(report.steady.n1_star)),
        ("s_star", _fmt(report.steady.s_star)),
        ("H0", _fmt(h.H0)), ("H1", _fmt(h.H1)), ("Hs", _fmt(h.Hs)),
        ("H1_minus_H0", _fmt(h.h1_minus_h0)), ("homogeneous_margin", _fmt(report.homogeneous_margin)),
        ("homogeneous_stable", "true" if report.homogeneous_stable else "false"),
        ("homogeneous_status", report.homogeneous_status),
        ("chi_threshold", _fmt(report.chi_threshold) if report.chi_threshold is not None else "none"),
        ("threshold_branch", report.threshold_branch.value),
        ("unstable_modes", ";".join(str(m) for m in report.unstable_modes)),
        ("predicts_oscillation", "true" if report.predicts_oscillation else "false"),
    ]
    for m, length in report.min_lengths:
        header.append((f"min_length_m{m}", _fmt(length) if length is not None else "none"))
    text = "\n".join(f"{k} = {v}" for k, v in header) + "\n"
    rows = []
    for p in report.dispersion:
        row = [p.m, p.k_sq, *p.coeffs]
        for ev in p.eigenvalues:
            row += [ev.real, ev.imag]
        rows.append(row)
    return text, rows


def _run_stability(config: ExperimentConfig, run_dir: Path) -> ExperimentResult:
    run_id = config.run_id
    params = config.model_params()
    L = config["grid.L"]
    report = stability_report(params, L, config["ic.nbar"])
    text, rows = format_stability_report(report, params, L)
    result = ExperimentResult(run_id, Mode.STABILITY, run_dir, report=report)
    path = run_dir / f"{run_id}_stability.txt"
    path.write_text(text, encoding="utf-8")
    result.files.append(path)
    cols = [np.array([r[i] for r in rows], dtype=float) for i in range(11)] if rows else [np.empty(0)] * 11
    result.files.append(_write_csv(run_dir / f"{run_id}_dispersion.csv",
                                   "m,k_sq,A,B,C,re1,im1,re2,im2,re3,im3", cols))
    return _finish(result, config, [(f"report.{k}", v) for k, v in
                                    (line.split(" = ", 1) for line in text.splitlines())])


def eigenmap_axes(config: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    chi = np.linspace(config["eigenmap.chi_min"], config["eigenmap.chi_max"], config["eigenmap.chi_n"])
    if config["eigenmap.mu_scale"] == "log":
        mu = np.geomspace(config["eigenmap.mu_min"], config["eigenmap.mu_max"], config["eigenmap.mu_n"])
    else:
        mu = np.linspace(config["eigenmap.mu_min"], config["eigenmap.mu_max"], config["eigenmap.mu_n"])
    return chi, mu


def _run_eigenmap(config: ExperimentConfig, run_dir: Path) -> ExperimentResult:
    run_id = config.run_id
    chi, mu = eigenmap_axes(config)
    max_re, max_im = eigenvalue_map(config.switching(), config["model.D"], chi, mu, config["grid.L"],
                                    config["ic.nbar"])
    C, M = np.meshgrid(chi, mu, indexing="ij")
    result = ExperimentResult(run_id, Mode.EIGENMAP, run_dir)
    result.files.append(_write_csv(run_dir / f"{run_id}_eigenmap.csv", "chi,mu,max_re,max_abs_im",
                                   [C.ravel(), M.ravel(), max_re.ravel(), max_im.ravel()]))
    n_osc = int(np.sum((max_re > 0) & (max_im > 0)))
    return _finish(result, config, [("result.eigenmap_points", str(max_re.size)),
                                    ("result.eigenmap_unstable_points", str(int(np.sum(max_re > 0)))),
                                    ("result.eigenmap_oscillatory_unstable_points", str(n_osc))])


# ---- sweeps ---------------------------------------------------------------

def sweep_points(config: ExperimentConfig) -> list[dict[str, object]]:
    axes = config.sweep_axes()
    names = [name for name, _ in axes]
    if config["sweep.combine"] == "zip":
        combos = zip(*(values for _, values in axes))
    else:
        combos = itertools.product(*(values for _, values in axes))
    return [dict(zip(names, combo)) for combo in combos]


def _point_config(config: ExperimentConfig, point: dict[str, object], index: int) -> ExperimentConfig:
    sub = config.replace()
    sub.values["run.mode"] = Mode(config["sweep.mode"])
    tags = []
    for name, value in point.items():
        if name == "case":
            sub.set("model.case", Case.parse(str(value)))
            tags.append(f"case{Case.parse(str(value)).value}")
        elif name == "seed":
            sub.set("run.seed", int(value))
            tags.append(f"seed{int(value)}")
        else:
            sub.set(f"model.{name}", float(value))
            tags.append(f"{name}{float(value):g}")
    sub.set("run.id", f"{config.run_id}_{index:03d}_" + "_".join(tags))
    return sub


def _sweep_worker(args) -> tuple[int, dict[str, str]]:
    index, text, run_dir = args
    sub = parse_config(text)
    row = {"index": str(index), "run_id": sub.run_id, "case": sub["model.case"].value,
           "chi": _fmt(sub["model.chi"]), "mu": _fmt(sub["model.mu"]), "q": _fmt(sub["model.q"]),
           "D": _fmt(sub["model.D"]), "seed": str(sub.seed)}
    try:
        res = _dispatch(sub, Path(run_dir) / sub.run_id)
    except Exception as exc:  # one failed point must not sink the sweep
        row.update(status="error", message=str(exc).replace(",", ";"))
        return index, row
    row.update(status=res.status, message=res.message.replace(",", ";"))
    if res.summary is not None:
        row.update(dict(res.summary.to_pairs()))
    if res.report is not None:
        rep = res.report
        row.update(chi_threshold=_fmt(rep.chi_threshold) if rep.chi_threshold is not None else "none",
                   homogeneous_stable="true" if rep.homogeneous_stable else "false",
                   unstable_modes=";".join(str(m) for m in rep.unstable_modes),
                   predicts_oscillation="true" if rep.predicts_oscillation else "false")
    return index, row


def _run_sweep(config: ExperimentConfig, run_dir: Path) -> ExperimentResult:
    points = sweep_points(config)
    jobs = []
    for i, point in enumerate(points):
        sub = _point_config(config, point, i)
        jobs.append((i, sub.emit(with_provenance=False), str(run_dir)))
    workers = min(config["run.workers"], len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(job) for job in jobs]
    rows.sort(key=lambda r: r[0])
    result = ExperimentResult(config.run_id, Mode.SWEEP, run_dir, rows=[r for _, r in rows])
    columns: list[str] = []
    for _, row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    path = run_dir / f"{config.run_id}_summary.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for _, row in rows:
            fh.write(",".join(row.get(c, "") for c in columns) + "\n")
    result.files.append(path)
    statuses = [row["status"] for _, row in rows]
    if any(s in ("blowup", "stiff") for s in statuses):
        result.status = "blowup" if "blowup" in statuses else "stiff"
        result.message = "at least one sweep point aborted"
    if "error" in statuses:
        result.message = "at least one sweep point raised an error"
    return _finish(result, config, [("result.sweep_points", str(len(rows)))])


def _dispatch(config: ExperimentConfig, run_dir: Path) -> ExperimentResult:
    run_dir.mkdir(parents=True, exist_ok=True)
    mode = config.mode
    if mode in (Mode.SIM1D, Mode.SIM2D, Mode.RADIAL):
        return _run_simulation(config, run_dir, mode)
    if mode is Mode.STABILITY:
        return _run_stability(config, run_dir)
    if mode is Mode.EIGENMAP:
        return _run_eigenmap(config, run_dir)
    if mode is Mode.SWEEP:
        return _run_sweep(config, run_dir)
    raise ValueError(f"unsupported mode {mode}")


def run_experiment(config: ExperimentConfig, root: str | Path | None = None) -> ExperimentResult:
    """Run ``config`` and write its files under ``<root>/<run_id>``."""
    run_dir = output_root(config, root) / config.run_id
    if run_dir.exists():
        for path in sorted(run_dir.rglob("*"), reverse=True):
            if path.is_file():
                path.unlink()
            elif path.is_dir():
                path.rmdir()
    return _dispatch(config, run_dir)


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    new = config.replace()
    new.set("run.seed", int(seed), Provenance.USER)
    return new


# ---- reading results back ---------------------------------------------------

def read_metadata(run_dir: Path) -> dict[str, str]:
    run_dir = Path(run_dir)
    matches = sorted(run_dir.glob("*_metadata.txt"))
    if not matches:
        raise FileNotFoundError(f"no metadata file in {run_dir}")
    return {key: value for _, key, value in split_kv_lines(matches[0].read_text(encoding="utf-8"))}


def config_from_metadata(meta: dict[str, str]) -> ExperimentConfig:
    sections = ("run.", "model.", "dimensional.", "grid.", "time.", "ic.", "analysis.", "sweep.", "eigenmap.")
    text = "\n".join(f"{k} = {v}" for k, v in meta.items() if k.startswith(sections))
    return parse_config(text + "\n")


def _read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def load_run(run_dir: str | Path) -> tuple[ExperimentConfig, RunArtifacts]:
    """Rebuild :class:`RunArtifacts` from a simulation output directory."""
    from .runs import Snapshot

    run_dir = Path(run_dir)
    meta = read_metadata(run_dir)
    config = config_from_metadata(meta)
    mode = config.mode
    run_id = config.run_id
    if mode not in (Mode.SIM1D, Mode.SIM2D, Mode.RADIAL):
        raise ValueError(f"{run_dir} holds a {mode.value} result, not a simulation")
    params = config.model_params()
    if mode is Mode.SIM2D:
        grid = Grid2D.from_spacing(config["grid.L"], config["grid.dx"])
        x = grid.centers
        run = RunArtifacts("2d", params, {"x": x, "y": x}, np.full((grid.N, grid.N), grid.dx**2))
        snaps = []
        for path in run_dir.glob(f"{run_id}_t*.csv"):
            _, data = _read_csv(path)
            t = float(path.stem[len(run_id) + 2:])
            shape = (grid.N, grid.N)
            snaps.append(Snapshot(t, data[:, 2].reshape(shape), data[:, 3].reshape(shape), data[:, 4].reshape(shape)))
        run.snapshots = sorted(snaps, key=lambda s: s.t)
        run.stats["dx"] = grid.dx
    else:
        coord = "r" if mode is Mode.RADIAL else "x"
        _, data = _read_csv(run_dir / f"{run_id}_snapshots.csv")
        times = np.unique(data[:, 0])
        first = data[data[:, 0] == times[0]]
        coords = first[:, 1]
        if mode is Mode.RADIAL:
            grid = RadialGrid.from_spacing(config["grid.L_r"], config["grid.dr"])
            measure = grid.volumes
            run = RunArtifacts("radial", params, {"r": coords}, measure)
            run.stats["dr"] = grid.dr
        else:
            grid = Grid1D.from_spacing(config["grid.L"], config["grid.dx"])
            run = RunArtifacts("1d", params, {"x": coords}, grid.measure)
            run.stats["dx"] = grid.dx
        # snapshot rows are written in time order, one block per snapshot
        n = coords.size
        for k in range(data.shape[0] // n):
            block = data[k * n:(k + 1) * n]
            run.snapshots.append(Snapshot(float(block[0, 0]), block[:, 2].copy(), block[:, 3].copy(), block[:, 4].copy()))
    _, probe = _read_csv(run_dir / f"{run_id}_probe.csv")
    for row in probe:
        run.probe.append(row[0], row[1:4])
    _, md = _read_csv(run_dir / f"{run_id}_max_density.csv")
    run.max_density = [(float(a), float(b)) for a, b in md]
    run.status = meta.get("result.status", "completed")
    run.message = meta.get("result.message", "")
    bt = meta.get("result.blowup_time", "")
    run.blowup_time = float(bt) if bt else None
    return config, run

