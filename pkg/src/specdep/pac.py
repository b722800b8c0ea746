"""Phase-amplitude coupling via the Tort modulation index.

The analytic signal of a band-filtered series provides instantaneous phase
and amplitude.  Binning the amplitude of a fast rhythm by the phase of a
slow one gives a distribution over phase bins; its normalized KL divergence
from uniform is the modulation index, 0 for no coupling and 1 for amplitude
concentrated at a single phase.
"""

import csv
import json

import numpy as np
from scipy.signal import hilbert

from .core import ConfigError, MultiChannelSeries
from .filters import apply_filter, default_order, design_fir_bandpass

__all__ = [
    "AnalyticSignal",
    "PhaseAmplitudeDistribution",
    "analytic_signal",
    "phase_amplitude_distribution",
    "kl_divergence",
    "modulation_index",
    "pac_scan",
    "mi_table_to_csv",
]


class AnalyticSignal:
    """Complex analytic extension of a real signal.

    ``values`` has the input as its real part; modulus and angle give the
    instantaneous amplitude and phase (phase mapped to [0, 2 pi)).
    """

    def __init__(self, values, band=None):
        self.values = np.asarray(values, dtype=complex)
        self.band = band

    @property
    def amplitude(self):
        return np.abs(self.values)

    @property
    def phase(self):
        return np.mod(np.angle(self.values), 2 * np.pi)


def analytic_signal(x, band=None):
    """Analytic signal via the frequency-domain Hilbert construction.

    Negative-frequency bins are zeroed, strictly positive ones doubled, DC
    and Nyquist kept, and the result inverse-transformed; the real part
    equals the input.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 16:
        raise ConfigError("analytic_signal expects a 1-D signal with T >= 16")
    return AnalyticSignal(hilbert(x), band)


class PhaseAmplitudeDistribution:
    """Mean amplitude per phase bin, normalized to a distribution.

    Bin j covers [2 pi (j-1)/N, 2 pi j/N); ``probs`` sums to one.
    """

    def __init__(self, n_bins, probs, mean_amplitudes):
        self.n_bins = int(n_bins)
        self.probs = np.asarray(probs, dtype=float)
        self.mean_amplitudes = np.asarray(mean_amplitudes, dtype=float)

    @property
    def bin_edges(self):
        return 2 * np.pi * np.arange(self.n_bins + 1) / self.n_bins

    @property
    def bin_centers(self):
        return 2 * np.pi * (np.arange(self.n_bins) + 0.5) / self.n_bins


def phase_amplitude_distribution(phase, amplitude, n_bins):
    """Bin amplitudes by phase and normalize the bin means to sum to one.

    Phases are wrapped into [0, 2 pi).  Every bin must receive at least one
    sample.  The bin means are a conditional expectation; dividing by their
    sum turns them into the distribution compared against uniform by the
    modulation index.
    """
    phase = np.mod(np.asarray(phase, dtype=float), 2 * np.pi)
    amplitude = np.asarray(amplitude, dtype=float)
    if phase.shape != amplitude.shape or phase.ndim != 1:
        raise ConfigError("phase and amplitude must be 1-D arrays of equal length")
    n_bins = int(n_bins)
    if n_bins < 1:
        raise ConfigError("need at least one bin")
    which = np.minimum((phase * n_bins / (2 * np.pi)).astype(int), n_bins - 1)
    counts = np.bincount(which, minlength=n_bins)
    if np.any(counts == 0):
        empty = int(np.nonzero(counts == 0)[0][0])
        raise ValueError(f"phase bin {empty} of {n_bins} is empty")
    sums = np.bincount(which, weights=amplitude, minlength=n_bins)
    means = sums / counts
    total = means.sum()
    if total <= 0:
        raise ValueError("all-zero amplitudes; distribution undefined")
    return PhaseAmplitudeDistribution(n_bins, means / total, means)


def kl_divergence(p, q):
    """Kullback-Leibler divergence sum_k p_k log(p_k / q_k), with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ConfigError("p and q must be 1-D of equal length")
    if np.any(p < 0) or np.any(q < 0):
        raise ConfigError("distributions must be non-negative")
    if abs(p.sum() - 1) > 1e-8 or abs(q.sum() - 1) > 1e-8:
        raise ConfigError("distributions must each sum to 1")
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise ValueError("support violation: p > 0 where q == 0")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def modulation_index(series, channel_phase, band_low, channel_amp, band_high,
                     n_bins=18, filter_order=None):
    """Tort modulation index between a slow phase and a fast amplitude.

    ``channel_phase`` is zero-phase filtered to ``band_low`` and its analytic
    phase extracted; ``channel_amp`` is filtered to ``band_high`` for the
    analytic amplitude (the two channels may coincide, and usually do).
    Filter/Hilbert edge transients (max(filter order, 64) samples per end)
    are excluded from binning.  MI = D_KL(P, uniform) / log(N), in [0, 1].
    """
    if n_bins < 4:
        raise ConfigError("need at least 4 phase bins")
    fs = series.sample_rate_hz
    sigs = {}
    trims = []
    for ch, band in ((channel_phase, band_low), (channel_amp, band_high)):
        band.validate_for(fs)
        k = filter_order if filter_order is not None else default_order(band, fs)
        trims.append(max(k, 64))
        filt = design_fir_bandpass(band, k, fs, mode="zero_phase")
        one = MultiChannelSeries(series.samples[:, [ch]], fs,
                                 [series.channel_labels[ch]])
        y = apply_filter(filt, one).samples[:, 0]
        sigs[(ch, band.name)] = analytic_signal(y - y.mean(), band)
    trim = max(trims)
    if series.n_samples <= 2 * trim + n_bins:
        raise ValueError("series too short after trimming filter transients")
    sl = slice(trim, series.n_samples - trim)
    phase = sigs[(channel_phase, band_low.name)].phase[sl]
    amp = sigs[(channel_amp, band_high.name)].amplitude[sl]
    dist = phase_amplitude_distribution(phase, amp, n_bins)
    uniform = np.full(n_bins, 1.0 / n_bins)
    mi = kl_divergence(dist.probs, uniform) / np.log(n_bins)
    assert -1e-12 <= mi <= 1 + 1e-12
    return float(min(max(mi, 0.0), 1.0))


def pac_scan(series, low_bands, high_bands, n_bins=18, pairs=None,
             filter_order=None):
    """Modulation indices over a grid of band pairs.

    ``pairs`` lists (phase_channel, amplitude_channel) tuples; by default
    each channel is scanned against itself.  Returns an array of shape
    (n_pairs, n_low_bands, n_high_bands).
    """
    if pairs is None:
        pairs = [(c, c) for c in range(series.n_channels)]
    out = np.zeros((len(pairs), len(low_bands), len(high_bands)))
    for i, (cp, ca) in enumerate(pairs):
        for j, bl in enumerate(low_bands):
            for k, bh in enumerate(high_bands):
                out[i, j, k] = modulation_index(series, cp, bl, ca, bh,
                                                n_bins, filter_order)
    return out


def mi_table_to_csv(path, mi, pairs, low_bands, high_bands):
    """CSV export: low_band, high_band, channel_low, channel_high, MI."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["low_band", "high_band", "channel_low", "channel_high", "MI"])
        for i, (cp, ca) in enumerate(pairs):
            for j, bl in enumerate(low_bands):
                for k, bh in enumerate(high_bands):
                    wr.writerow([bl.name, bh.name, cp, ca, f"{mi[i, j, k]:.17g}"])


def distribution_to_json(dist):
    """Phase-bin distribution as plain data for comodulogram plotting."""
    return {
        "n_bins": dist.n_bins,
        "bin_centers": dist.bin_centers.tolist(),
        "probs": dist.probs.tolist(),
        "mean_amplitudes": dist.mean_amplitudes.tolist(),
    }


def save_distribution_json(dist, path):
    with open(path, "w") as fh:
        json.dump(distribution_to_json(dist), fh)
