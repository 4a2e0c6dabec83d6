"""Quantitative summaries of solver output: peaks, oscillations, extinction, mass."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, signal

from .runs import RunArtifacts, Snapshot

MERGE_CELLS = 3


class Phenotype(str, enum.Enum):
    SECRETING = "Secreting"
    CHEMOTACTIC = "Chemotactic"


@dataclass(frozen=True)
class Oscillation:
    period: float
    amplitude: float
    power_fraction: float
    envelope_decay: float


@dataclass
class PatternSummary:
    peak_count: int = 0
    peak_heights: list[float] = field(default_factory=list)
    peak_widths: list[float] = field(default_factory=list)
    pattern_formed: bool = False
    oscillation: Oscillation | None = None
    extinct_phenotype: Phenotype | None = None
    blowup: float | None = None
    mass_drift: float = 0.0
    max_density: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_pairs(self) -> list[tuple[str, str]]:
        """Flat ``key = value`` pairs for metadata files and sweep rows."""
        osc = self.oscillation
        return [
            ("peak_count", str(self.peak_count)),
            ("peak_heights", ";".join(f"{h:.17g}" for h in self.peak_heights)),
            ("peak_widths", ";".join(f"{w:.17g}" for w in self.peak_widths)),
            ("pattern_formed", "true" if self.pattern_formed else "false"),
            ("oscillation", "true" if osc else "false"),
            ("oscillation_period", f"{osc.period:.17g}" if osc else ""),
            ("oscillation_amplitude", f"{osc.amplitude:.17g}" if osc else ""),
            ("extinct_phenotype", self.extinct_phenotype.value if self.extinct_phenotype else ""),
            ("blowup_time", f"{self.blowup:.17g}" if self.blowup is not None else ""),
            ("mass_drift", f"{self.mass_drift:.17g}"),
            ("max_density", f"{self.max_density:.17g}"),
        ]


def _merge(indices: np.ndarray, heights: np.ndarray, n: int, periodic: bool) -> np.ndarray:
    """Keep the higher of any two maxima closer than ``MERGE_CELLS`` cells."""
    kept: list[int] = []
    for i in np.argsort(-heights, kind="stable"):
        pos = indices[i]
        close = False
        for other in kept:
            gap = abs(pos - other)
            if periodic:
                gap = min(gap, n - gap)
            if gap < MERGE_CELLS:
                close = True
                break
        if not close:
            kept.append(int(pos))
    return np.array(sorted(kept), dtype=int)


def count_peaks(profile, dx: float = 1.0, threshold_ratio: float = 1.05,
                boundary: str = "reflect") -> tuple[int, list[float], list[float]]:
    """Count local maxima above ``threshold_ratio`` times the spatial mean.

    A maximum is a cell, or a flat run of equal cells, higher than both
    neighbours. Profiles symmetric about a cell face peak on two equal
    cells, so flat runs must count. ``boundary`` sets how the end cells are
    treated. ``"reflect"`` uses a zero-flux mirror, so an end cell is a
    maximum when it exceeds its one neighbour. ``"periodic"`` wraps around,
    and ``"none"`` looks at interior cells only. Maxima closer than three
    cells are merged, keeping the higher one. Widths are full widths at half
    prominence, in units of ``dx``.
    """
    p = np.asarray(profile, dtype=float)
    if p.ndim != 1 or p.size < 3:
        raise ValueError("profile must be one-dimensional with at least 3 entries")
    if not np.all(np.isfinite(p)):
        raise ValueError("profile contains non-finite values")
    if boundary not in ("reflect", "periodic", "none"):
        raise ValueError(f"unknown boundary mode {boundary!r}")
    n = p.size
    threshold = threshold_ratio * p.mean()

    if boundary == "periodic":
        padded, offset = np.concatenate([p, p, p]), n
    elif boundary == "reflect":
        padded, offset = np.concatenate([p[::-1], p, p[::-1]]), n
    else:
        padded, offset = p, 0
    found, props = signal.find_peaks(padded, plateau_size=1)
    positions = []
    for left, right in zip(props["left_edges"], props["right_edges"]):
        lo, hi = max(left, offset), min(right, offset + n - 1)
        if lo > hi:
            continue
        mid = (left + right) // 2
        positions.append(min(max(mid, lo), hi) - offset)
    candidates = np.array(sorted(set(positions)), dtype=int)
    if candidates.size:
        candidates = candidates[p[candidates] > threshold]
    if candidates.size == 0:
        return 0, [], []
    peaks = _merge(candidates, p[candidates], n, boundary == "periodic")
    widths, *_ = signal.peak_widths(padded, peaks + offset, rel_height=0.5)
    return int(peaks.size), [float(v) for v in p[peaks]], [float(w * dx) for w in widths]


def count_spots_2d(field2d, threshold_ratio: float = 1.05, sigma: float = 1.0):
    """Spots of a 2D field: maxima of the Gaussian-smoothed field above ``threshold_ratio`` x mean.

    Returns ``(count, positions, heights)`` where heights are taken from the
    unsmoothed field at the maxima.
    """
    f = np.asarray(field2d, dtype=float)
    if f.ndim != 2:
        raise ValueError("expected a 2D array")
    smooth = ndimage.gaussian_filter(f, sigma=sigma, mode="reflect")
    local_max = smooth == ndimage.maximum_filter(smooth, size=3, mode="reflect")
    mask = local_max & (smooth > threshold_ratio * smooth.mean())
    # a flat field has every cell as a (non-strict) maximum
    if np.ptp(smooth) <= 1e-14 * max(1.0, abs(smooth.mean())):
        mask[:] = False
    cand = np.argwhere(mask)
    order = np.argsort(-smooth[mask], kind="stable")
    kept: list[tuple[int, int]] = []
    for idx in order:
        i, j = cand[idx]
        if all(max(abs(i - a), abs(j - b)) >= MERGE_CELLS for a, b in kept):
            kept.append((int(i), int(j)))
    kept.sort()
    return len(kept), kept, [float(f[i, j]) for i, j in kept]


def pattern_formed(profile, threshold: float = 1e-3) -> bool:
    """True when the spatial range of ``profile`` exceeds ``threshold``."""
    p = np.asarray(profile, dtype=float)
    return bool(np.ptp(p) > threshold)


def detect_oscillation(t, series, window: tuple[float, float], min_power_fraction: float = 0.2,
                       max_envelope_decay: float = 0.2, min_amplitude: float = 1e-6,
                       min_window: float = 50.0) -> Oscillation | None:
    """Sustained periodic behaviour of a probe series inside ``window``.

    The windowed series is resampled uniformly and linearly detrended. An
    oscillation is reported when the dominant Fourier peak (the top bin and
    its two neighbours, searched from two cycles per window upward) holds
    at least ``min_power_fraction`` of the variance and the RMS over the
    final stretch is no more than ``max_envelope_decay`` below that over
    the first. Both stretches span a whole number of periods, about a
    quarter of the window.
    """
    t0, t1 = window
    if t1 - t0 < min_window:
        raise ValueError(f"oscillation window must span at least {min_window} time units")
    t = np.asarray(t, dtype=float)
    y = np.asarray(series, dtype=float)
    sel = (t >= t0 - 1e-9) & (t <= t1 + 1e-9)
    if sel.sum() < 16:
        raise ValueError("too few samples inside the oscillation window")
    ts, ys = t[sel], y[sel]
    step = float(np.median(np.diff(ts)))
    grid = np.arange(ts[0], ts[-1] + 0.5 * step, step)
    yu = signal.detrend(np.interp(grid, ts, ys))
    amplitude = np.sqrt(2.0) * yu.std()
    if not amplitude > min_amplitude:
        return None

    n = yu.size
    spec = np.abs(np.fft.rfft(yu)) ** 2
    spec[0] = 0.0
    # one-sided spectrum: interior bins count twice in Parseval's sum
    weights = np.full(spec.size, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    power = spec * weights
    total = power.sum()
    if power.size < 4 or not total > 0:
        return None
    # at least two full cycles must fit in the window, otherwise slow drift
    # left over after detrending would pass for an oscillation
    k = 2 + int(np.argmax(power[2:]))
    fraction = power[max(k - 1, 2):k + 2].sum() / total
    if fraction < min_power_fraction:
        return None

    # zero-padded spectrum refines the peak frequency
    pad = 16 * n
    fine = np.abs(np.fft.rfft(yu * np.hanning(n), n=pad)) ** 2
    freqs = np.fft.rfftfreq(pad, d=step)
    lo = max(1, int((k - 1.5) * pad / n))
    hi = min(fine.size, int((k + 1.5) * pad / n) + 1)
    f_peak = freqs[lo + int(np.argmax(fine[lo:hi]))]
    if f_peak <= 0:
        return None

    # envelope: RMS over a whole number of periods (about a quarter window)
    # at each end, so the comparison does not depend on the phase
    per = 1.0 / (f_peak * step)
    cycles = max(1, int(round(0.25 * n / per)))
    seg = min(max(int(round(cycles * per)), 1), n // 2)
    head = np.sqrt(np.mean(yu[:seg] ** 2))
    tail = np.sqrt(np.mean(yu[-seg:] ** 2))
    decay = 1.0 - tail / head if head > 0 else 1.0
    if decay >= max_envelope_decay:
        return None
    return Oscillation(float(1.0 / f_peak), float(amplitude), float(fraction), float(decay))


def detect_extinction(snapshot: Snapshot, threshold: float = 1e-2, measure=None) -> Phenotype | None:
    """Phenotype whose spatial mean has fallen below ``threshold``, if any."""
    if measure is None:
        m0, m1 = float(np.mean(snapshot.n0)), float(np.mean(snapshot.n1))
    else:
        w = np.asarray(measure, dtype=float)
        m0 = float(np.sum(snapshot.n0 * w) / w.sum())
        m1 = float(np.sum(snapshot.n1 * w) / w.sum())
    if m0 < threshold:
        return Phenotype.SECRETING
    if m1 < threshold:
        return Phenotype.CHEMOTACTIC
    return None


def mass_audit(run: RunArtifacts) -> float:
    """Largest relative deviation of total cell mass from its first snapshot."""
    if not run.snapshots:
        return 0.0
    m0 = run.total_mass(run.snapshots[0])
    worst = 0.0
    for snap in run.snapshots[1:]:
        worst = max(worst, abs(run.total_mass(snap) - m0) / abs(m0))
    return worst


def default_oscillation_window(t_end: float) -> tuple[float, float] | None:
    """Last 100 time units, never starting before t = 300; ``None`` if too short."""
    t0 = max(300.0, t_end - 100.0)
    if t_end - t0 < 50.0:
        return None
    return t0, t_end


def summarize(run: RunArtifacts, pattern_threshold: float = 1e-3, peak_threshold_ratio: float = 1.05,
              extinction_threshold: float = 1e-2, oscillation_window: tuple[float, float] | None = None,
              oscillation_field: str = "n1") -> PatternSummary:
    """Build a :class:`PatternSummary` from a finished (or aborted) run."""
    final = run.final
    summary = PatternSummary()
    summary.mass_drift = mass_audit(run)
    summary.max_density = max((m for _, m in run.max_density), default=float(np.max(final.rho)))
    if run.status == "blowup" or (run.aborted and run.blowup_time is not None):
        summary.blowup = run.blowup_time
    summary.pattern_formed = pattern_formed(final.n1, pattern_threshold)

    if run.geometry == "2d":
        count, _, heights = count_spots_2d(final.n1, peak_threshold_ratio)
        summary.peak_count, summary.peak_heights = count, heights
    else:
        h = float(run.stats.get("dx", run.stats.get("dr", 1.0)))
        count, heights, widths = count_peaks(final.n1, h, peak_threshold_ratio, boundary="reflect")
        summary.peak_count, summary.peak_heights, summary.peak_widths = count, heights, widths

    summary.extinct_phenotype = detect_extinction(final, extinction_threshold, run.measure)

    t_final = final.t
    window = oscillation_window or default_oscillation_window(t_final)
    if window is None:
        summary.notes.append("oscillation check skipped: run shorter than the analysis window")
    elif len(run.probe) < 16:
        summary.notes.append("oscillation check skipped: probe series too short")
    else:
        try:
            summary.oscillation = detect_oscillation(run.probe.field("t"), run.probe.field(oscillation_field), window)
        except ValueError as exc:
            summary.notes.append(f"oscillation check skipped: {exc}")
    return summary
