"""Coherence and partial coherence, static and time-varying.

Coherency tau_pq(w) = f_pq / sqrt(f_pp f_qq) and coherence |tau|^2 come from
a cross-spectral matrix.  Band coherence works directly on band-filtered
signals as the maximal squared lagged cross-correlation.  Partial coherence
conditions on all remaining channels through the inverse spectral matrix, or
on a single channel through regression residuals of filtered signals.
Time-varying versions slide a window and repeat the static estimate.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, MultiChannelSeries, max_lag_sq_correlation
from .filters import apply_filter, default_order, design_fir_bandpass
from .spectrum import (CrossSpectralMatrix, SmoothingKernel, default_bandwidth,
                       periodogram, smooth_periodogram)

__all__ = [
    "CoherenceResult",
    "TimeVaryingResult",
    "coherency",
    "coherence",
    "coherence_matrix",
    "band_coherence",
    "partial_coherence",
    "partial_coherence_residual",
    "estimate_spectrum",
    "tv_coherence",
    "tv_partial_coherence",
    "coherence_to_csv",
    "edge_list",
]


@dataclass
class CoherenceResult:
    """Per-frequency coherence matrices with the coherency kept alongside."""

    grid: object
    values: np.ndarray            # (n, P, P) real in [0, 1]
    coherency: np.ndarray = None  # (n, P, P) complex, optional
    sample_rate_hz: float = None
    channel_labels: list = None


@dataclass
class TimeVaryingResult:
    """Sliding-window results indexed by rescaled time u = t/T in (0, 1)."""

    centers: np.ndarray
    window: int
    step: int
    grid: object
    values: np.ndarray            # (n_windows, n, P, P)
    kind: str = "coherence"
    sample_rate_hz: float = None


def _auto_ok(f, p, q):
    app = np.real(f.values[:, p, p])
    aqq = np.real(f.values[:, q, q])
    if np.any(app <= 0) or np.any(aqq <= 0):
        raise ValueError("zero auto-spectrum at some frequency; smooth or "
                         "shrink the spectral estimate first")
    return app, aqq


def coherency(f, p, q):
    """Complex coherency tau_pq(w) = f_pq / sqrt(f_pp f_qq) over the grid."""
    app, aqq = _auto_ok(f, p, q)
    tau = f.values[:, p, q] / np.sqrt(app * aqq)
    return tau


def coherence(f, p, q):
    """Coherence rho_pq(w) = |tau_pq(w)|^2, in [0, 1] per frequency."""
    return np.abs(coherency(f, p, q)) ** 2


def coherence_matrix(f):
    """All-pairs coherence as a CoherenceResult (diagonal is exactly 1)."""
    d = np.real(np.einsum("kpp->kp", f.values))
    if np.any(d <= 0):
        raise ValueError("zero auto-spectrum at some frequency")
    norm = np.sqrt(d[:, :, None] * d[:, None, :])
    tau = f.values / norm
    vals = np.abs(tau) ** 2
    idx = np.arange(f.n_channels)
    vals[:, idx, idx] = 1.0
    return CoherenceResult(f.grid, vals, tau, f.sample_rate_hz, f.channel_labels)


def band_coherence(series, p, q, band, filter_order=None, max_lag=None):
    """Coherence of a channel pair within a band, from filtered signals.

    Both channels are zero-phase filtered to the band, start-up transients
    trimmed, and the maximal squared lagged cross-correlation is returned
    together with its lag (see :func:`core.max_lag_sq_correlation`).  The
    default search range is one cycle of the band's centre frequency.

    Returns
    -------
    (value, lag) : (float in [0, 1], int)
    """
    fs = series.sample_rate_hz
    band.validate_for(fs)
    if filter_order is None:
        filter_order = default_order(band, fs)
    if max_lag is None:
        max_lag = int(round(fs / band.center_hz))
    if p == q:
        return 1.0, 0
    filt = design_fir_bandpass(band, filter_order, fs, mode="zero_phase")
    pair = MultiChannelSeries(series.samples[:, [p, q]], fs,
                              [series.channel_labels[p], series.channel_labels[q]])
    k = filter_order
    if series.n_samples <= 2 * k + 2 * max_lag:
        raise ValueError("series too short for this filter order and max_lag")
    y = apply_filter(filt, pair).samples[k:-k]
    return max_lag_sq_correlation(y[:, 0], y[:, 1], max_lag)


def partial_coherence(f, cond_cap=1e10):
    """Partial coherence matrix from the inverse spectral matrix.

    With g = f^{-1} and h = diag(g_rr^{-1/2}), Lambda = -h g h and the
    partial coherence between p and q (given all other channels) is
    |Lambda_pq|^2.  The diagonal is reported as 1 by convention.  Raises
    when the spectral matrix condition number exceeds ``cond_cap``; shrink
    the estimate (see spectrum.shrink_spectral_estimate) in that case.

    Returns
    -------
    ndarray, shape (n, P, P), real, entries in [0, 1]
    """
    v = f.values
    ev = np.linalg.eigvalsh(0.5 * (v + v.conj().transpose(0, 2, 1)))
    lo, hi = ev[:, 0], ev[:, -1]
    bad = (lo <= 0) | (hi > cond_cap * np.maximum(lo, 1e-300))
    if np.any(bad):
        k = int(np.nonzero(bad)[0][0])
        raise ValueError(
            f"spectral matrix ill-conditioned at grid index {k} (frequency "
            f"{f.grid.frequencies[k]:.6f}); use shrink_spectral_estimate to "
            f"obtain a well-conditioned estimate")
    g = np.linalg.inv(v)
    d = np.real(np.einsum("kpp->kp", g))
    norm = np.sqrt(d[:, :, None] * d[:, None, :])
    lam = -g / norm
    out = np.abs(lam) ** 2
    idx = np.arange(f.n_channels)
    out[:, idx, idx] = 1.0
    return out


def partial_coherence_residual(series, p, q, c, band, filter_order=None):
    """Band partial coherence of (p, q) given channel c, via regression.

    All three channels are zero-phase filtered to the band; p and q are each
    regressed on c (lag 0, with intercept) and the squared correlation of
    the residuals is returned.  A residual that is numerically zero (e.g.
    q == c) gives 0 by convention.
    """
    if c == p or c == q:
        raise ConfigError("conditioning channel must differ from p and q")
    if p == q:
        return 1.0
    fs = series.sample_rate_hz
    band.validate_for(fs)
    if filter_order is None:
        filter_order = default_order(band, fs)
    filt = design_fir_bandpass(band, filter_order, fs, mode="zero_phase")
    trio = MultiChannelSeries(series.samples[:, [p, q, c]], fs,
                              [series.channel_labels[i] for i in (p, q, c)])
    k = filter_order
    y = apply_filter(filt, trio).samples[k:-k]
    y = y - y.mean(axis=0, keepdims=True)
    xc = y[:, 2]
    vc = np.dot(xc, xc)
    if vc <= 0:
        raise ValueError("degenerate conditioning channel (no in-band power)")
    resid = []
    scale = np.sqrt(np.mean(y ** 2, axis=0))
    for i in (0, 1):
        beta = np.dot(xc, y[:, i]) / vc
        r = y[:, i] - beta * xc
        if np.sqrt(np.mean(r ** 2)) < 1e-10 * max(scale[i], 1e-300):
            return 0.0
        resid.append(r)
    rho = np.dot(resid[0], resid[1]) / np.sqrt(
        np.dot(resid[0], resid[0]) * np.dot(resid[1], resid[1]))
    return float(rho ** 2)


def estimate_spectrum(series, kernel=None, shrink_order=None):
    """Smoothed-periodogram spectral estimate, optionally shrunk.

    The workhorse for coherence/partial-coherence estimation: periodogram,
    kernel smoothing (Daniell with the default bandwidth unless given), and,
    when ``shrink_order`` is set, shrinkage toward a VAR(shrink_order)
    parametric spectrum.
    """
    if kernel is None:
        kernel = SmoothingKernel("daniell", default_bandwidth(series.n_samples))
    f = smooth_periodogram(periodogram(series), kernel)
    if shrink_order is not None:
        from .var import fit_ols
        from .spectrum import var_spectrum, shrink_spectral_estimate
        model = fit_ols(series, shrink_order)
        h = var_spectrum(model, f.grid, series.sample_rate_hz)
        f = shrink_spectral_estimate(f, h, kernel)
    return f


def _windows(T, N, step):
    if N % 2 != 0 or N > T:
        raise ConfigError("window length N must be even and <= T")
    if step < 1:
        raise ConfigError("step must be >= 1")
    return list(range(0, T - N + 1, step))


def tv_coherence(series, N, step, kernel=None):
    """Sliding-window coherence: smoothed local periodogram per window.

    Windows of N samples advance by ``step``; each is demeaned, its
    periodogram smoothed across frequency, and the full coherence matrix
    stored.  Window centres are reported in rescaled time u = t/T.  With
    N == T this reduces exactly to the static estimate.
    """
    return _tv(series, N, step, kernel, partial=False)


def tv_partial_coherence(series, N, step, kernel=None, cond_cap=1e10):
    """Sliding-window partial coherence; see :func:`tv_coherence`."""
    return _tv(series, N, step, kernel, partial=True, cond_cap=cond_cap)


def _tv(series, N, step, kernel, partial, cond_cap=1e10):
    T = series.n_samples
    starts = _windows(T, N, step)
    if kernel is None:
        kernel = SmoothingKernel("daniell", default_bandwidth(N))
    if kernel.bandwidth >= N / 4:
        raise ConfigError(f"window N={N} too small for kernel bandwidth "
                          f"{kernel.bandwidth}")
    out = []
    centers = []
    grid = None
    for s in starts:
        win = MultiChannelSeries(series.samples[s:s + N], series.sample_rate_hz,
                                 series.channel_labels)
        f = smooth_periodogram(periodogram(win), kernel)
        grid = f.grid
        if partial:
            out.append(partial_coherence(f, cond_cap))
        else:
            out.append(coherence_matrix(f).values)
        centers.append((s + N // 2) / T)
    return TimeVaryingResult(np.asarray(centers), N, int(step), grid,
                             np.stack(out),
                             "partial_coherence" if partial else "coherence",
                             series.sample_rate_hz)


def coherence_to_csv(result, path):
    """Long-format CSV of a CoherenceResult: freq, p, q, value."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["freq", "p", "q", "value"])
        for k, f in enumerate(result.grid.frequencies):
            P = result.values.shape[1]
            for p in range(P):
                for q in range(P):
                    wr.writerow([f"{f:.17g}", p, q, f"{result.values[k, p, q]:.17g}"])


def edge_list(series, bands, threshold=0.0, filter_order=None):
    """Band-coherence network edges: (p, q, band, value, lag) per pair/band."""
    edges = []
    P = series.n_channels
    for band in bands:
        for p in range(P):
            for q in range(p + 1, P):
                val, lag = band_coherence(series, p, q, band, filter_order)
                if val > threshold:
                    edges.append({"p": p, "q": q, "band": band.name,
                                  "value": val, "lag": lag})
    return edges
