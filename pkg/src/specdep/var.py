"""Vector autoregressive modelling and frequency-domain causality.

Covers VAR representation and simulation, conditional least-squares / LASSO /
LASSLE estimation, order selection, the VAR transfer function, partial
directed coherence (PDC) and its sliding-window version, Granger edge
extraction, and the spectral-VAR analysis that regresses one-sided
band-filtered oscillations on each other to obtain band-to-band directed
edges.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .core import ConfigError, FrequencyGrid, MultiChannelSeries, demean, standard_bands
from .filters import apply_filter, design_fir_bandpass

__all__ = [
    "VarModel",
    "PdcResult",
    "TvPdcResult",
    "SpectralVarSpec",
    "LassoConvergenceError",
    "simulate_var",
    "fit_ols",
    "fit_lasso",
    "fit_lassle",
    "lasso_kkt_residual",
    "select_order",
    "transfer_function",
    "pdc",
    "tv_pdc",
    "granger_edges",
    "spectral_var",
    "model_to_json",
    "model_from_json",
    "edges_to_csv",
]


class LassoConvergenceError(RuntimeError):
    """Coordinate descent failed to converge; carries the last iterate."""

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model


class VarModel:
    """A VAR(L) model: X(t) = sum_l Phi_l X(t-l) + W(t), cov W = Sigma_W.

    Parameters
    ----------
    coeffs : ndarray, shape (L, P, P)
        Coefficient matrices Phi_1..Phi_L (L may be 0).
    noise_cov : ndarray, shape (P, P)
        Symmetric PSD innovation covariance.
    coeff_se : ndarray, optional
        Standard errors of the coefficients for least-squares fits; used by
        :func:`granger_edges` when thresholding at 2 standard errors.
    """

    def __init__(self, coeffs, noise_cov, coeff_se=None):
        coeffs = np.asarray(coeffs, dtype=float)
        noise_cov = np.asarray(noise_cov, dtype=float)
        if noise_cov.ndim != 2 or noise_cov.shape[0] != noise_cov.shape[1]:
            raise ConfigError("noise_cov must be square")
        P = noise_cov.shape[0]
        if coeffs.size == 0:
            coeffs = coeffs.reshape(0, P, P)
        if coeffs.ndim != 3 or coeffs.shape[1:] != (P, P):
            raise ConfigError("coeffs must have shape (L, P, P)")
        scale = max(np.max(np.abs(noise_cov)), 1e-300)
        if np.max(np.abs(noise_cov - noise_cov.T)) > 1e-10 * scale:
            raise ConfigError("noise_cov must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (noise_cov + noise_cov.T))) < -1e-10 * scale:
            raise ConfigError("noise_cov must be positive semi-definite")
        self.coeffs = coeffs
        self.noise_cov = noise_cov
        self.coeff_se = None if coeff_se is None else np.asarray(coeff_se, dtype=float)

    @property
    def n_channels(self):
        return self.noise_cov.shape[0]

    @property
    def order(self):
        return self.coeffs.shape[0]

    def companion(self):
        P, L = self.n_channels, self.order
        if L == 0:
            return np.zeros((P, P))
        comp = np.zeros((P * L, P * L))
        comp[:P] = np.concatenate(list(self.coeffs), axis=1)
        if L > 1:
            comp[P:, :P * (L - 1)] = np.eye(P * (L - 1))
        return comp

    def spectral_radius(self):
        if self.order == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.companion()))))

    def is_stable(self):
        return self.spectral_radius() < 1.0

    def __repr__(self):
        return (f"VarModel(P={self.n_channels}, L={self.order}, "
                f"spectral_radius={self.spectral_radius():.4f})")


def simulate_var(model, T, seed, burn_in=None, sample_rate_hz=1.0,
                 channel_labels=None):
    """Simulate a Gaussian-driven realization of a stable VAR model.

    The first ``burn_in`` samples (default max(500, 10*L*P)) are discarded so
    the output is effectively stationary.  Identical arguments reproduce the
    realization bit for bit.
    """
    if T < 1:
        raise ConfigError("T must be >= 1")
    if not model.is_stable():
        raise ValueError("cannot simulate an unstable VAR model")
    P, L = model.n_channels, model.order
    if burn_in is None:
        burn_in = max(500, 10 * L * P)
    rng = np.random.default_rng(seed)
    total = T + burn_in
    w = rng.standard_normal((total, P))
    cov = 0.5 * (model.noise_cov + model.noise_cov.T)
    ev, U = np.linalg.eigh(cov)
    w = w @ (U * np.sqrt(np.maximum(ev, 0.0))).T
    if L == 0:
        x = w
    elif P == 1:
        a = np.concatenate(([1.0], -model.coeffs[:, 0, 0]))
        x = lfilter([1.0], a, w[:, 0])[:, None]
    else:
        x = np.zeros((total, P))
        coeffs = model.coeffs
        for t in range(total):
            acc = w[t].copy()
            for l in range(1, min(L, t) + 1):
                acc += coeffs[l - 1] @ x[t - l]
            x[t] = acc
    return MultiChannelSeries(x[burn_in:], sample_rate_hz, channel_labels)


def _lag_design(x, L, t_start=None):
    """Design matrix of stacked lags: row t has [x(t-1), ..., x(t-L)]."""
    T, P = x.shape
    t_start = L if t_start is None else t_start
    rows = T - t_start
    Z = np.empty((rows, P * L))
    for l in range(1, L + 1):
        Z[:, (l - 1) * P:l * P] = x[t_start - l:T - l]
    return Z, x[t_start:]


def fit_ols(series, L):
    """Conditional least-squares VAR fit.

    Regresses X(t) on its L stacked lags for t = L..T-1; Sigma_W is the
    residual covariance (normalized by the number of regression rows).
    Coefficient standard errors are stored for Granger thresholding.
    """
    x = demean(series).samples
    T, P = x.shape
    L = int(L)
    if L < 0:
        raise ConfigError("order must be >= 0")
    if L == 0:
        return VarModel(np.zeros((0, P, P)), (x.T @ x) / T)
    if T <= P * L + P:
        raise ConfigError(f"T={T} too short to identify a VAR({L}) in {P} channels")
    Z, Y = _lag_design(x, L)
    n = Z.shape[0]
    G = Z.T @ Z
    try:
        B = np.linalg.solve(G, Z.T @ Y)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("singular regressor Gram matrix in VAR fit")
    resid = Y - Z @ B
    sigma = (resid.T @ resid) / n
    coeffs = np.stack([B[(l - 1) * P:l * P].T for l in range(1, L + 1)])
    ginv_diag = np.diag(np.linalg.inv(G))
    se = np.empty((L, P, P))
    for p in range(P):
        se_flat = np.sqrt(np.maximum(sigma[p, p] * ginv_diag, 0.0))
        for l in range(1, L + 1):
            se[l - 1, p] = se_flat[(l - 1) * P:l * P]
    return VarModel(coeffs, sigma, coeff_se=se)


def _cd_lasso(Zs, ys, lam, tol, max_sweeps):
    """Cyclic coordinate descent for (1/2n)||y - Z b||^2 + lam ||b||_1.

    Expects regressor columns with unit sample standard deviation and a unit
    standard deviation response.  Returns the coefficient vector.
    """
    n, m = Zs.shape
    col_sq = np.einsum("ij,ij->j", Zs, Zs) / n
    b = np.zeros(m)
    r = ys.copy()
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(m):
            bj = b[j]
            if bj != 0.0:
                r += bj * Zs[:, j]
            rho = np.dot(Zs[:, j], r) / n
            bnew = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if bnew != 0.0:
                r -= bnew * Zs[:, j]
            b[j] = bnew
            delta = max(delta, abs(bnew - bj))
        if delta < tol:
            return b, True
    return b, False


def fit_lasso(series, L, lam, tol=1e-7, max_sweeps=10000):
    """L1-penalized per-equation VAR fit via cyclic coordinate descent.

    Regressors and each response are standardized to unit sample standard
    deviation internally, so ``lam`` is dimensionless; coefficients are
    reported on the original scale.  lam = 0 recovers the least-squares fit;
    lam >= max_j |z_j' y| / n (standardized) zeroes every coefficient.
    Convergence is declared when the largest coefficient update in a sweep
    falls below ``tol``; otherwise :class:`LassoConvergenceError` is raised
    with the partial model attached.
    """
    if lam < 0:
        raise ConfigError("lambda must be >= 0")
    x = demean(series).samples
    T, P = x.shape
    L = int(L)
    if L == 0:
        return VarModel(np.zeros((0, P, P)), (x.T @ x) / T)
    if T <= P * L + P:
        raise ConfigError(f"T={T} too short for a VAR({L}) in {P} channels")
    Z, Y = _lag_design(x, L)
    n = Z.shape[0]
    zsd = Z.std(axis=0)
    if np.any(zsd <= 0):
        raise np.linalg.LinAlgError("constant regressor column in LASSO fit")
    Zs = Z / zsd
    B = np.zeros((P * L, P))
    ok = True
    for p in range(P):
        ysd = Y[:, p].std()
        if ysd <= 0:
            continue
        b, conv = _cd_lasso(Zs, Y[:, p] / ysd, lam, tol, max_sweeps)
        ok = ok and conv
        B[:, p] = b * ysd / zsd
    resid = Y - Z @ B
    sigma = (resid.T @ resid) / n
    coeffs = np.stack([B[(l - 1) * P:l * P].T for l in range(1, L + 1)])
    model = VarModel(coeffs, sigma)
    if not ok:
        raise LassoConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps", model)
    return model


def lasso_kkt_residual(series, L, lam, model):
    """Largest KKT violation of a LASSO fit, in standardized coordinates.

    For each equation: |z_j'(y - Zb)/n| <= lam must hold at zero coefficients
    and equal lam sign(b_j) at nonzero ones.  Returns the max violation.
    """
    x = demean(series).samples
    Z, Y = _lag_design(x, int(L))
    n = Z.shape[0]
    zsd = Z.std(axis=0)
    Zs = Z / zsd
    P = x.shape[1]
    L = int(L)
    B = np.concatenate([model.coeffs[l].T for l in range(L)], axis=0)
    worst = 0.0
    for p in range(P):
        ysd = Y[:, p].std()
        if ysd <= 0:
            continue
        bstd = B[:, p] * zsd / ysd
        grad = Zs.T @ (Y[:, p] / ysd - Zs @ bstd) / n
        at_zero = bstd == 0
        worst = max(worst, float(np.max(np.abs(grad[at_zero]) - lam, initial=0.0)))
        if np.any(~at_zero):
            worst = max(worst, float(
                np.max(np.abs(grad[~at_zero] - lam * np.sign(bstd[~at_zero])))))
    return worst


def fit_lassle(series, L, lam, tol=1e-7, max_sweeps=10000):
    """Two-stage fit: LASSO support selection, then least squares on it.

    Stage one runs :func:`fit_lasso`; stage two refits each equation by OLS
    restricted to the surviving regressors, so nonzero coefficients lose the
    L1 shrinkage bias while LASSO zeros stay exactly zero.
    """
    stage1 = fit_lasso(series, L, lam, tol, max_sweeps)
    L = int(L)
    if L == 0:
        return stage1
    x = demean(series).samples
    P = x.shape[1]
    Z, Y = _lag_design(x, L)
    n = Z.shape[0]
    B1 = np.concatenate([stage1.coeffs[l].T for l in range(L)], axis=0)
    B = np.zeros_like(B1)
    for p in range(P):
        support = np.nonzero(B1[:, p])[0]
        if support.size == 0:
            continue
        Zp = Z[:, support]
        B[support, p] = np.linalg.solve(Zp.T @ Zp, Zp.T @ Y[:, p])
    resid = Y - Z @ B
    sigma = (resid.T @ resid) / n
    coeffs = np.stack([B[(l - 1) * P:l * P].T for l in range(1, L + 1)])
    return VarModel(coeffs, sigma)


def select_order(series, L_max, criterion="BIC"):
    """Pick a VAR order by AIC or BIC over OLS fits.

    All candidate orders are fit on the same target samples (t = L_max..T-1)
    so the likelihoods are comparable.  The criterion is
    log det Sigma_hat + penalty * L P^2 / n with penalty 2 (AIC) or log n (BIC).
    """
    criterion = criterion.upper()
    if criterion not in ("AIC", "BIC"):
        raise ConfigError(f"criterion must be AIC or BIC, got {criterion!r}")
    L_max = int(L_max)
    if L_max < 1:
        raise ConfigError("L_max must be >= 1")
    x = demean(series).samples
    T, P = x.shape
    if T <= P * L_max + P:
        raise ConfigError(f"T={T} too short for order selection up to {L_max}")
    n = T - L_max
    best_L, best_score = None, np.inf
    for L in range(1, L_max + 1):
        Z, Y = _lag_design(x, L, t_start=L_max)
        B = np.linalg.solve(Z.T @ Z, Z.T @ Y)
        resid = Y - Z @ B
        sigma = (resid.T @ resid) / n
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            continue
        penalty = 2.0 if criterion == "AIC" else np.log(n)
        score = logdet + penalty * L * P * P / n
        if score < best_score:
            best_L, best_score = L, score
    if best_L is None:
        raise np.linalg.LinAlgError("degenerate residual covariance at every order")
    return best_L


def transfer_function(model, grid):
    """Phi(w) = I - sum_{l=1..L} Phi_l exp(-i 2 pi w l) on the grid, (n, P, P)."""
    P, L = model.n_channels, model.order
    w = grid.frequencies
    out = np.broadcast_to(np.eye(P, dtype=complex), (grid.n, P, P)).copy()
    for l in range(1, L + 1):
        out -= np.exp(-2j * np.pi * w * l)[:, None, None] * model.coeffs[l - 1]
    return out


class PdcResult:
    """Partial directed coherence: per-frequency P x P matrix, columns sum to 1."""

    def __init__(self, grid, values):
        self.grid = grid
        self.values = np.asarray(values, dtype=float)

    @property
    def n_channels(self):
        return self.values.shape[1]

    def entry(self, p, q):
        """Information flow q -> p across the grid."""
        return self.values[:, p, q]


def pdc(model, grid):
    """PDC pi_pq(w) = |Phi_pq(w)|^2 / sum_r |Phi_rq(w)|^2.

    Column q at frequency w is the distribution of outgoing information flow
    from channel q; each column sums to one.
    """
    phi = transfer_function(model, grid)
    num = np.abs(phi) ** 2
    denom = num.sum(axis=1, keepdims=True)
    bad = np.nonzero(denom[:, 0, :] <= 0)
    if bad[0].size:
        k, q = bad[0][0], bad[1][0]
        raise ValueError(
            f"all-zero transfer-function column {q} at grid index {k} "
            f"(frequency {grid.frequencies[k]:.6f})")
    return PdcResult(grid, num / denom)


@dataclass
class TvPdcResult:
    """Sliding-window PDC: one PdcResult per window centre (rescaled time)."""

    centers: np.ndarray
    window: int
    step: int
    results: list = field(default_factory=list)


def tv_pdc(series, L, N, step, method="ols", lam=0.05, grid=None):
    """Time-varying PDC from per-window VAR fits.

    Each window of N samples gets its own fit (OLS or LASSLE) and PDC; the
    window centre is reported in rescaled time t/T.
    """
    T = series.n_samples
    P = series.n_channels
    N = int(N)
    if N % 2 != 0 or N > T:
        raise ConfigError("window length N must be even and <= T")
    if N <= P * L + P:
        raise ConfigError(f"window N={N} too small for a VAR({L}) in {P} channels")
    if step < 1:
        raise ConfigError("step must be >= 1")
    if grid is None:
        grid = FrequencyGrid(N)
    centers = []
    results = []
    for start in range(0, T - N + 1, step):
        win = MultiChannelSeries(series.samples[start:start + N],
                                 series.sample_rate_hz, series.channel_labels)
        if method == "ols":
            model = fit_ols(win, L)
        elif method == "lassle":
            model = fit_lassle(win, L, lam)
        else:
            raise ConfigError(f"unknown tv_pdc method {method!r}")
        results.append(pdc(model, grid))
        centers.append((start + N // 2) / T)
    return TvPdcResult(np.asarray(centers), N, int(step), results)


def granger_edges(model, threshold=0.0):
    """Boolean edge matrix: edge[p, q] says channel q Granger-leads channel p.

    An edge is present when max_l |Phi_pq,l| exceeds ``threshold``.  With
    threshold 0 this is the exact coefficient support (natural for LASSLE
    fits).  Passing ``threshold=None`` uses twice the per-coefficient
    standard error (least-squares fits only).
    """
    P = model.n_channels
    if model.order == 0:
        return np.zeros((P, P), dtype=bool)
    mags = np.abs(model.coeffs)
    if threshold is None:
        if model.coeff_se is None:
            raise ConfigError("threshold=None needs a model with coefficient "
                              "standard errors (an OLS fit)")
        return np.any(mags > 2.0 * model.coeff_se, axis=0)
    return np.max(mags, axis=0) > threshold


@dataclass
class SpectralVarSpec:
    """Configuration of the band-to-band spectral-VAR causality analysis.

    ``channels`` selects series columns (all by default); each is split into
    ``bands`` with one-sided FIR filters of order ``filter_order``.  The
    stacked (channel, band) series is fit with ``method``; ``order`` None
    means BIC selection up to ``order_max``.
    """

    channels: list = None
    bands: list = None
    filter_order: int = 100
    filter_mode: str = "causal"
    order: int = None
    order_max: int = 8
    method: str = "lassle"
    lam: float = 0.05


def spectral_var(series, spec):
    """Fit a VAR on stacked one-sided band-filtered oscillations.

    Builds X_{p,band}(t) for every selected (channel, band) through causal
    FIR filters, discards the filter start-up, stacks the results into one
    multichannel series, fits it (LASSLE by default, order by BIC when not
    given), and reads band-to-band directed edges off the coefficient
    support.

    Returns
    -------
    (model, edges) : (VarModel, list of dict)
        Each edge dict has from_channel, from_band, to_channel, to_band,
        lag, coefficient.
    """
    if spec.filter_mode != "causal":
        raise ConfigError("spectral-VAR requires one-sided (causal) filters; "
                          "zero-phase filtering destroys the causal time base")
    channels = spec.channels if spec.channels is not None else list(range(series.n_channels))
    bands = spec.bands if spec.bands is not None else standard_bands()
    fs = series.sample_rate_hz
    cols, labels, tags = [], [], []
    for c in channels:
        chan = MultiChannelSeries(series.samples[:, [c]], fs,
                                  [series.channel_labels[c]])
        for band in bands:
            filt = design_fir_bandpass(band, spec.filter_order, fs, mode="causal")
            y = apply_filter(filt, chan).samples[:, 0]
            cols.append(y)
            labels.append(f"{series.channel_labels[c]}:{band.name}")
            tags.append((c, band.name))
    x = np.column_stack(cols)[spec.filter_order:]
    x = x - x.mean(axis=0, keepdims=True)
    stacked = MultiChannelSeries(x, fs, labels)
    dim = stacked.n_channels
    L = spec.order
    if L is None:
        L = select_order(stacked, spec.order_max, "BIC")
    if stacked.n_samples <= 5 * dim * L:
        raise ConfigError(f"stacked dimension {dim} with order {L} needs "
                          f"T > {5 * dim * L}, have {stacked.n_samples}")
    if spec.method == "lassle":
        model = fit_lassle(stacked, L, spec.lam)
    elif spec.method == "lasso":
        model = fit_lasso(stacked, L, spec.lam)
    elif spec.method == "ols":
        model = fit_ols(stacked, L)
    else:
        raise ConfigError(f"unknown spectral-VAR method {spec.method!r}")
    edges = []
    for l in range(model.order):
        nz = np.argwhere(model.coeffs[l] != 0.0)
        for p, q in nz:
            edges.append({
                "from_channel": tags[q][0], "from_band": tags[q][1],
                "to_channel": tags[p][0], "to_band": tags[p][1],
                "lag": l + 1, "coefficient": float(model.coeffs[l, p, q]),
            })
    return model, edges


def model_to_json(model):
    return {
        "P": model.n_channels,
        "L": model.order,
        "coeffs": [m.tolist() for m in model.coeffs],
        "noise_cov": model.noise_cov.tolist(),
    }


def model_from_json(obj):
    P, L = obj["P"], obj["L"]
    coeffs = np.asarray(obj["coeffs"], dtype=float).reshape(L, P, P)
    return VarModel(coeffs, np.asarray(obj["noise_cov"], dtype=float))


def save_model_json(model, path):
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh)


def edges_to_csv(edges, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["from_channel", "from_band", "to_channel", "to_band",
                     "lag", "coefficient"])
        for e in edges:
            wr.writerow([e["from_channel"], e["from_band"], e["to_channel"],
                         e["to_band"], e["lag"], f"{e['coefficient']:.17g}"])
