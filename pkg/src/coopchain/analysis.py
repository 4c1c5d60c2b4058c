"""Decay-constant and beat extraction from simulated emission traces.

Traces are probabilities |d(t)|^2 on a uniform, noiseless grid.  The decay
constant Gamma_f is the slope of a log-linear fit to the envelope maxima,
so it describes the probability (not the amplitude).  Its error bar is the
half-difference between fits with and without the t=0 point.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .geometry import ChainGeometry
from .interaction import build_coupling_matrix
from .spectral_dynamics import (
    default_time_grid,
    diagonalize,
    evolve_dm,
    spectral_beat,
    weightings,
)
from .states import dm_state

MIN_MAXIMA = 3
# relative slack when comparing a maximum against later samples
_PEAK_RTOL = 1e-9


@dataclass
class DecayFitReport:
    gamma_f: float
    spread: float
    gamma_with_origin: float
    gamma_without_origin: float
    window: tuple
    n_points: int
    beat_frequency: float | None = None
    spectral_beat: float | None = None
    dominant_weighting: float | None = None
    m_star: int | None = None

    @property
    def gamma_half(self):
        """Gamma_f / (2 Gamma), the decay rate of the amplitude envelope."""
        return 0.5 * self.gamma_f

    @property
    def beat_error(self):
        if self.beat_frequency is None or not self.spectral_beat:
            return None
        return abs(self.beat_frequency - self.spectral_beat) / self.spectral_beat

    def to_dict(self):
        d = asdict(self)
        d["window"] = list(self.window)
        d["gamma_half"] = self.gamma_half
        d["beat_error"] = self.beat_error
        return d

    @classmethod
    def from_dict(cls, d):
        keys = cls.__dataclass_fields__
        kwargs = {k: v for k, v in d.items() if k in keys}
        kwargs["window"] = tuple(kwargs["window"])
        return cls(**kwargs)


def _local_maxima(values):
    """Indices of envelope maxima: strict local maxima not exceeded later on.

    The second condition drops secondary peaks that sit inside the troughs
    of a dominant beat (weakly weighted third modes produce them).
    """
    p = values
    idx = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
    if len(idx) == 0:
        return idx
    later = np.maximum.accumulate(p[::-1])[::-1]
    later = np.append(later[1:], -np.inf)
    keep = p[idx] >= later[idx] * (1.0 - _PEAK_RTOL)
    return idx[keep]


def _check_series(times, values):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise DomainError("times and values must be 1-D arrays of equal length")
    if len(times) < 5:
        raise DomainError("need at least 5 samples")
    if np.any(np.diff(times) <= 0):
        raise DomainError("times must be strictly increasing")
    return times, values


def envelope(times, values):
    """Envelope maxima (t, p) of a probability trace.

    Traces with fewer than three maxima are treated as non-oscillatory and
    the whole series after the first grid point is returned.
    """
    times, values = _check_series(times, values)
    idx = _local_maxima(values)
    if len(idx) < MIN_MAXIMA:
        return times[1:], values[1:]
    return times[idx], values[idx]


def _log_slope(t, p):
    slope, _ = np.polyfit(t, np.log(p), 1)
    return -float(slope)


def fit_decay(times, values, origin=None, window=None) -> DecayFitReport:
    """Log-linear fit of ``values ~ exp(-Gamma_f t)``.

    ``origin`` is the (t0, p0) point used for the "with t=0" fit; without it
    both fits coincide.  ``window`` restricts the envelope points to
    ``t_lo <= t <= t_hi``.
    """
    t = np.asarray(times, dtype=float)
    p = np.asarray(values, dtype=float)
    if window is not None:
        lo, hi = window
        sel = (t >= lo) & (t <= hi)
        t, p = t[sel], p[sel]
    if len(t) < 3:
        raise DomainError(f"need at least 3 envelope points, got {len(t)}")
    if np.any(p <= 0):
        raise DomainError("envelope values must be positive")

    without = _log_slope(t, p)
    if origin is None:
        with_origin = without
    else:
        t0, p0 = origin
        if p0 <= 0:
            raise DomainError("origin value must be positive")
        with_origin = _log_slope(np.r_[t0, t], np.r_[p0, p])

    return DecayFitReport(
        gamma_f=0.5 * (with_origin + without),
        spread=0.5 * abs(with_origin - without),
        gamma_with_origin=with_origin,
        gamma_without_origin=without,
        window=(float(t[0]), float(t[-1])),
        n_points=len(t),
    )


def beat_frequency(times, values):
    """Angular frequency 2 pi / <spacing> of the envelope maxima, or None.

    For a two-mode state the probability beats at |Im lambda_a - Im lambda_b|.
    """
    times, values = _check_series(times, values)
    idx = _local_maxima(values)
    if len(idx) < MIN_MAXIMA:
        return None
    spacing = (times[idx[-1]] - times[idx[0]]) / (len(idx) - 1)
    return float(2.0 * np.pi / spacing)


def analyze_trace(times, prob, window=None) -> DecayFitReport:
    """Envelope, decay fit and beat of a probability trace starting at t=0."""
    times = np.asarray(times, dtype=float)
    prob = np.asarray(prob, dtype=float)
    t_env, p_env = envelope(times, prob)
    report = fit_decay(t_env, p_env, origin=(times[0], prob[0]), window=window)
    report.beat_frequency = beat_frequency(times, prob)
    return report


def analyze_dm(geom: ChainGeometry, m: int, decomp=None, state=None, times=None, window=None):
    """Evolve the m-th DM amplitude and fit its probability trace.

    Returns ``(times, d, report)``.  ``state`` replaces the ideal initial
    DM state (e.g. one with a phase error); the default time grid is taken
    from the ideal state's weightings so perturbed runs share one grid.
    """
    if decomp is None:
        decomp = diagonalize(build_coupling_matrix(geom))
    phi = dm_state(geom, m)
    ideal = weightings(decomp, phi)
    if times is None:
        times = default_time_grid(decomp, ideal)
    d = evolve_dm(decomp, geom, m, times, state=state)
    report = analyze_trace(times, np.abs(d) ** 2, window=window)
    table = ideal if state is None else weightings(decomp, state)
    pair = ideal.top(2)
    report.dominant_weighting = table.subset_weight(pair)
    report.spectral_beat = spectral_beat(decomp, ideal) if geom.n_atoms > 1 else None
    report.m_star = m
    return times, d, report


@dataclass
class ScanRow:
    n: int
    spacing: float
    m_star: int
    gamma_f: float
    spread: float


def lowest_decay(geom: ChainGeometry):
    """Fit every DM state of ``geom``; return (m_star, report, all_reports)."""
    decomp = diagonalize(build_coupling_matrix(geom))
    reports = []
    for m in range(1, geom.n_atoms + 1):
        _, _, rep = analyze_dm(geom, m, decomp=decomp)
        reports.append(rep)
    best = min(range(len(reports)), key=lambda i: (reports[i].gamma_f, i))
    return best + 1, reports[best], reports


def _scan_case(args):
    n, spacing, alignment, axial = args
    geom = ChainGeometry(n, spacing, alignment, axial)
    m_star, rep, _ = lowest_decay(geom)
    return ScanRow(n, spacing, m_star, rep.gamma_f, rep.spread)


def scan_lowest_decay(n_list, spacing_list, alignment=0.0, axial=True, workers=1):
    """Lowest fitted decay constant over all DM states for each (N, d_s).

    Rows come back in (n_list x spacing_list) order regardless of
    ``workers``.
    """
    n_list = list(n_list)
    spacing_list = list(spacing_list)
    if not n_list or not spacing_list:
        raise DomainError("scan needs non-empty atom-number and spacing lists")
    cases = [(int(n), float(s), alignment, axial) for n in n_list for s in spacing_list]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(cases) == 1:
        return [_scan_case(c) for c in cases]
    with ProcessPoolExecutor(max_workers=min(workers, len(cases))) as pool:
        return list(pool.map(_scan_case, cases))
