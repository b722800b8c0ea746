"""Seeded generators for the worked examples.

Latent sources are unit-variance AR(2) oscillators (standardized by their
closed-form stationary standard deviation, so mixing weights stay comparable
across bandwidths).  :func:`example` builds the named scenario and returns
the observed series together with a ground-truth descriptor listing the
structure an analysis should recover.  Identical (name, T, seed, overrides)
reproduce output bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .core import ConfigError, MultiChannelSeries
from .spectrum import Ar2Params, ar2_from_peak, ar2_stationary_var
from .var import VarModel, simulate_var

__all__ = [
    "MixtureSpec",
    "gen_sources",
    "mix",
    "example",
    "example_names",
    "pdc_net_model",
]

DEFAULT_FS = 128.0
DEFAULT_M = 1.05


@dataclass
class MixtureSpec:
    """A lagged linear mixture X_p(t) = sum_k C[p,k] Z_k(t - H[p,k]) + noise.

    ``source_params`` lists Ar2Params (or the string "white" for a unit
    white-noise source); ``mixing`` is P x K, ``lags`` P x K non-negative
    integers (zeros when omitted), ``noise_std`` scalar or length P.
    """

    source_params: list
    mixing: np.ndarray
    lags: np.ndarray = None
    noise_std: object = 0.0

    def __post_init__(self):
        self.mixing = np.asarray(self.mixing, dtype=float)
        if self.mixing.ndim != 2:
            raise ConfigError("mixing must be a P x K matrix")
        P, K = self.mixing.shape
        if len(self.source_params) != K:
            raise ConfigError("one source parameter set per mixing column required")
        if self.lags is None:
            self.lags = np.zeros((P, K), dtype=int)
        self.lags = np.asarray(self.lags, dtype=int)
        if self.lags.shape != (P, K) or np.any(self.lags < 0):
            raise ConfigError("lags must be a P x K matrix of non-negative ints")
        self.noise_std = np.broadcast_to(np.asarray(self.noise_std, dtype=float),
                                         (P,)).copy()


def gen_sources(params_list, T, seed, sample_rate_hz=DEFAULT_FS):
    """Independent standardized latent sources, one channel each.

    AR(2) sources are divided by their closed-form stationary standard
    deviation so each has (population) unit variance; "white" entries are
    unit Gaussian noise.  Per-source RNG streams derive from ``seed``.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    streams = seed.spawn(len(params_list))
    cols = []
    labels = []
    for k, params in enumerate(params_list):
        if isinstance(params, str) and params == "white":
            rng = np.random.default_rng(streams[k])
            cols.append(rng.standard_normal(T))
        elif isinstance(params, Ar2Params):
            model = VarModel(np.array([[[params.phi1]], [[params.phi2]]]),
                             np.array([[params.noise_var]]))
            z = simulate_var(model, T, streams[k]).samples[:, 0]
            cols.append(z / np.sqrt(ar2_stationary_var(params)))
        else:
            raise ConfigError(f"source {k}: expected Ar2Params or 'white'")
        labels.append(f"Z{k + 1}")
    return MultiChannelSeries(np.column_stack(cols), sample_rate_hz, labels)


def mix(sources, spec, seed):
    """Apply a lagged mixture to latent sources plus per-channel noise.

    Lagged source values before the record start are zero-padded, so the
    first max(lags) samples are transient.
    """
    T = sources.n_samples
    P, K = spec.mixing.shape
    if sources.n_channels != K:
        raise ConfigError(f"spec expects {K} sources, series has {sources.n_channels}")
    if np.any(spec.lags >= T):
        raise ConfigError("lag exceeds series length")
    rng = np.random.default_rng(seed)
    out = np.zeros((T, P))
    for p in range(P):
        for k in range(K):
            c = spec.mixing[p, k]
            if c == 0.0:
                continue
            h = spec.lags[p, k]
            z = sources.channel(k)
            if h == 0:
                out[:, p] += c * z
            else:
                out[h:, p] += c * z[:-h]
    noise = rng.standard_normal((T, P)) * spec.noise_std
    out += noise
    return MultiChannelSeries(out, sources.sample_rate_hz)


def pdc_net_model(M=1.049787, fs=DEFAULT_FS, noise_cov=None):
    """The sparse four-channel VAR(2) network with band-specific self-loops.

    Channels 3 and 4 are autonomous delta and gamma oscillators; channel 2
    is driven by X3(t-1) and X4(t-2) with unit weights (no self term) and
    channel 1 is a beta oscillator also fed by X2(t-1) with weight 1/2.
    The default diagonal noise covariance scales each oscillator to unit
    stationary variance so the channels are comparable; near-unit-root
    oscillators otherwise dwarf the rest by orders of magnitude.
    """
    delta = ar2_from_peak(M, 2 / fs)
    beta = ar2_from_peak(M, 20 / fs)
    gamma = ar2_from_peak(M, 40 / fs)
    phi1 = np.zeros((4, 4))
    phi2 = np.zeros((4, 4))
    phi1[0, 0], phi2[0, 0] = beta.phi1, beta.phi2
    phi1[0, 1] = 0.5
    phi1[1, 2] = 1.0
    phi2[1, 3] = 1.0
    phi1[2, 2], phi2[2, 2] = delta.phi1, delta.phi2
    phi1[3, 3], phi2[3, 3] = gamma.phi1, gamma.phi2
    if noise_cov is None:
        noise_cov = np.diag([1.0 / ar2_stationary_var(beta), 1.0,
                             1.0 / ar2_stationary_var(delta),
                             1.0 / ar2_stationary_var(gamma)])
    return VarModel(np.stack([phi1, phi2]), noise_cov)


def _opts(overrides, **defaults):
    opts = dict(defaults)
    if overrides:
        unknown = set(overrides) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown overrides {sorted(unknown)}; "
                              f"accepted: {sorted(defaults)}")
        opts.update(overrides)
    return opts


def _two_source_mixture(T, seed, overrides, lagged):
    o = _opts(overrides, fs=DEFAULT_FS, M=DEFAULT_M, noise_std=0.5,
              low_freq_hz=2.0, high_freq_hz=40.0, lag=10, weight=1.0)
    fs = o["fs"]
    low = ar2_from_peak(o["M"], o["low_freq_hz"] / fs)
    high = ar2_from_peak(o["M"], o["high_freq_hz"] / fs)
    src_seed, mix_seed = np.random.SeedSequence(seed).spawn(2)
    sources = gen_sources([low, high], T, src_seed, fs)
    c = o["weight"]
    lags = np.array([[0, o["lag"]], [0, 0]]) if lagged else None
    spec = MixtureSpec([low, high], np.array([[c, c], [0.0, c]]), lags,
                       o["noise_std"])
    series = mix(sources, spec, mix_seed)
    truth = {
        "name": "lagged_mixture" if lagged else "instant_mixture",
        "sample_rate_hz": fs,
        "low_band_hz": [0.5, 4.0], "high_band_hz": [30.0, 50.0],
        "low_peak_hz": o["low_freq_hz"], "high_peak_hz": o["high_freq_hz"],
        "shared_source": "high",
        "coherent_band": "high",
        "lag": o["lag"] if lagged else 0,
    }
    return series, truth


def _gamma_net(T, seed, overrides, with_alpha_in_x2):
    # X3 is the pure gamma source and stays noise-free: partialling it out
    # then removes the shared oscillation exactly, which is what makes the
    # gamma-band partial coherence between X1 and X2 vanish.  X1 and X2
    # carry observation noise so the off-peak spectral tails of the other
    # sources stay below the noise floor.
    o = _opts(overrides, fs=DEFAULT_FS, M=DEFAULT_M, noise_std=0.5,
              delta_hz=2.0, alpha_hz=10.0, gamma_hz=40.0)
    fs = o["fs"]
    params = [ar2_from_peak(o["M"], o[k] / fs) for k in ("delta_hz", "alpha_hz", "gamma_hz")]
    src_seed, mix_seed = np.random.SeedSequence(seed).spawn(2)
    sources = gen_sources(params, T, src_seed, fs)
    if with_alpha_in_x2:
        A = np.array([[0.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    else:
        A = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
    spec = MixtureSpec(params, A, None, [o["noise_std"], o["noise_std"], 0.0])
    series = mix(sources, spec, mix_seed)
    truth = {
        "name": "gamma_alpha_net" if with_alpha_in_x2 else "gamma_net",
        "sample_rate_hz": fs,
        "mixing": A.tolist(),
        "source_peaks_hz": [o["delta_hz"], o["alpha_hz"], o["gamma_hz"]],
        "coherent_pairs": {"gamma": [[0, 1], [0, 2], [1, 2]]},
        "partial_coherence_zero": {"gamma": [[0, 1]]},
    }
    if with_alpha_in_x2:
        truth["band_truth"] = {
            "delta": {"coh_01": "zero", "pcoh_01": "zero"},
            "alpha": {"coh_01": "nonzero", "pcoh_01": "nonzero"},
            "gamma": {"coh_01": "nonzero", "pcoh_01": "zero"},
        }
    return series, truth


def _lead_lag(T, seed, overrides):
    o = _opts(overrides, fs=DEFAULT_FS, M=DEFAULT_M, noise_std=0.5,
              delta_hz=2.0, beta_hz=15.0, gamma_hz=30.0, lag=10)
    fs = o["fs"]
    params = [ar2_from_peak(o["M"], o[k] / fs) for k in ("delta_hz", "beta_hz", "gamma_hz")]
    src_seed, mix_seed = np.random.SeedSequence(seed).spawn(2)
    sources = gen_sources(params, T, src_seed, fs)
    h = o["lag"]
    spec = MixtureSpec(params,
                       np.array([[1.0, 0.0, 0.0], [1.0, 1.0, 1.0]]),
                       np.array([[0, 0, 0], [h, h, h]]),
                       o["noise_std"])
    series = mix(sources, spec, mix_seed)
    truth = {
        "name": "lead_lag", "sample_rate_hz": fs,
        "lead_channel": 0, "lag_channel": 1, "lag": h,
        "shared_band": "delta", "delta_peak_hz": o["delta_hz"],
    }
    return series, truth


def _pdc_net(T, seed, overrides):
    o = _opts(overrides, fs=DEFAULT_FS, M=1.049787)
    model = pdc_net_model(o["M"], o["fs"])
    series = simulate_var(model, T, seed, sample_rate_hz=o["fs"])
    truth = {
        "name": "pdc_net", "sample_rate_hz": o["fs"], "order": 2,
        "root_magnitude": o["M"],
        "peak_freqs": {"delta": 2 / o["fs"], "beta": 20 / o["fs"],
                       "gamma": 40 / o["fs"]},
        # directed edges (source q -> target p), lag of the nonzero coefficient
        "edges": [[2, 1, 1], [3, 1, 2], [1, 0, 1]],
        "self_edges": [0, 2, 3],
        "coeffs": [m.tolist() for m in model.coeffs],
    }
    return series, truth


def _pac(T, seed, overrides):
    o = _opts(overrides, fs=DEFAULT_FS, M=DEFAULT_M, theta_hz=6.0,
              gamma_hz=40.0, noise_var=0.1)
    fs = o["fs"]
    theta = ar2_from_peak(o["M"], o["theta_hz"] / fs)
    gamma = ar2_from_peak(o["M"], o["gamma_hz"] / fs)
    src_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    sources = gen_sources([theta, gamma], T, src_seed, fs)
    z_t = sources.channel(0)
    z_g = sources.channel(1)
    rng = np.random.default_rng(noise_seed)
    eps = rng.standard_normal((T, 2)) * np.sqrt(o["noise_var"])
    x1 = (z_g + 1.0) * z_t + 2.0 * z_g + eps[:, 0]
    x2 = 4.0 * z_t + z_t * z_g + eps[:, 1]
    series = MultiChannelSeries(np.column_stack([x1, x2]), fs)
    truth = {
        "name": "pac", "sample_rate_hz": fs,
        "phase_band": "theta", "amplitude_band": "gamma",
        "theta_peak_hz": o["theta_hz"], "gamma_peak_hz": o["gamma_hz"],
        "coupled_channels": [0, 1], "noise_var": o["noise_var"],
        "aux": {"sources": sources, "noise": eps},
    }
    return series, truth


def _spca_mix(T, seed, overrides):
    o = _opts(overrides, fs=DEFAULT_FS, M=DEFAULT_M, noise_std=0.5,
              delta_hz=2.0, alpha_hz=10.0, gamma_hz=40.0)
    fs = o["fs"]
    params = [ar2_from_peak(o["M"], o[k] / fs) for k in ("delta_hz", "alpha_hz", "gamma_hz")]
    src_seed, mix_seed = np.random.SeedSequence(seed).spawn(2)
    sources = gen_sources(params, T, src_seed, fs)
    A = np.array([[1.0, 0.0, 1.0],
                  [0.0, 0.0, 1.0],
                  [1.0, 0.0, 1.0],
                  [0.0, 1.0, 0.0],
                  [1.0, 1.0, 0.0]])
    spec = MixtureSpec(params, A, None, o["noise_std"])
    series = mix(sources, spec, mix_seed)
    truth = {
        "name": "spca_mix", "sample_rate_hz": fs, "mixing": A.tolist(),
        "source_peaks_hz": [o["delta_hz"], o["alpha_hz"], o["gamma_hz"]],
        "band_channels": {"delta": [0, 2, 4], "alpha": [3, 4],
                          "gamma": [0, 1, 2]},
    }
    return series, truth


def _chirp(T, seed, overrides):
    o = _opts(overrides, fs=DEFAULT_FS, f0_hz=2.0, slope_hz_per_s=0.4,
              amplitude=2.0, noise_std=1.0)
    fs = o["fs"]
    rng = np.random.default_rng(seed)
    t = np.arange(T) / fs
    x = o["amplitude"] * np.sin(2 * np.pi * (o["f0_hz"] + o["slope_hz_per_s"] * t) * t)
    x = x + rng.standard_normal(T) * o["noise_std"]
    series = MultiChannelSeries(x[:, None], fs)
    truth = {
        "name": "chirp", "sample_rate_hz": fs,
        "f0_hz": o["f0_hz"], "slope_hz_per_s": o["slope_hz_per_s"],
        "instantaneous_freq_hz": "f0 + 2 * slope * t_seconds",
    }
    return series, truth


_REGISTRY = {
    "instant_mixture": lambda T, s, o: _two_source_mixture(T, s, o, lagged=False),
    "lagged_mixture": lambda T, s, o: _two_source_mixture(T, s, o, lagged=True),
    "gamma_net": lambda T, s, o: _gamma_net(T, s, o, with_alpha_in_x2=False),
    "gamma_alpha_net": lambda T, s, o: _gamma_net(T, s, o, with_alpha_in_x2=True),
    "lead_lag": _lead_lag,
    "pdc_net": _pdc_net,
    "pac": _pac,
    "spca_mix": _spca_mix,
    "chirp": _chirp,
}


def example_names():
    return sorted(_REGISTRY)


def example(name, T, seed, overrides=None):
    """Generate a named worked example.

    Returns
    -------
    (series, truth) : (MultiChannelSeries, dict)
        ``truth`` is a plain-data descriptor of the structure the generator
        planted (edges, coupled bands, lags).  The "aux" key, when present,
        carries in-memory arrays (latent sources) and is stripped from file
        exports.
    """
    if name not in _REGISTRY:
        raise ConfigError(f"unknown example {name!r}; choose from {example_names()}")
    if T < 64:
        raise ConfigError("examples need T >= 64")
    return _REGISTRY[name](int(T), seed, overrides)
