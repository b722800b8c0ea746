"""Command-line front end.

Subcommands mirror the library one-to-one and stay thin: parse and validate
the configuration, call the module function, write results.  CSV is the only
ingestion format (header row of channel labels, one row per sample); the
sampling rate is always an explicit flag.  Values are written at 17
significant digits so a round trip through disk is exact to 1e-12.

Exit codes: 0 success, 1 malformed input, 2 invalid configuration,
3 numerical failure (diagnostics on standard error).
"""

import argparse
import csv as _csv
import json
import sys

import numpy as np

import specdep.dualfreq as df
import specdep.filters as flt
import specdep.pac as pacmod
import specdep.simulate as sim
import specdep.spca as spcamod
import specdep.spectrum as spec
import specdep.var as varmod
from .coherence import (coherence_matrix, estimate_spectrum, partial_coherence,
                        tv_coherence, tv_partial_coherence)
from .core import (Band, ConfigError, FrequencyGrid, MalformedInputError,
                   MultiChannelSeries, band_by_name, standard_bands)

FLOAT_FMT = "{:.17g}"


def write_series_csv(series, path):
    with open(path, "w", newline="") as fh:
        wr = _csv.writer(fh)
        wr.writerow(series.channel_labels)
        for row in series.samples:
            wr.writerow([FLOAT_FMT.format(v) for v in row])


def read_series_csv(path, sample_rate_hz):
    try:
        with open(path, newline="") as fh:
            rd = _csv.reader(fh)
            header = next(rd, None)
            if not header:
                raise MalformedInputError(f"{path}: empty file")
            rows = []
            for i, row in enumerate(rd):
                if not row:
                    continue
                try:
                    rows.append([float(v) for v in row])
                except ValueError:
                    raise MalformedInputError(f"{path}: non-numeric value on row {i + 2}")
                if len(rows[-1]) != len(header):
                    raise MalformedInputError(f"{path}: row {i + 2} has "
                                              f"{len(rows[-1])} fields, expected {len(header)}")
    except OSError as exc:
        raise MalformedInputError(f"cannot read {path}: {exc}")
    if not rows:
        raise MalformedInputError(f"{path}: no data rows")
    return MultiChannelSeries(np.asarray(rows), sample_rate_hz, header)


def parse_band(text):
    """'alpha', 'low:high', or 'name:low:high' -> Band."""
    parts = text.split(":")
    if len(parts) == 1:
        return band_by_name(parts[0])
    if len(parts) == 2:
        return Band(f"{parts[0]}-{parts[1]}Hz", float(parts[0]), float(parts[1]))
    if len(parts) == 3:
        return Band(parts[0], float(parts[1]), float(parts[2]))
    raise ConfigError(f"cannot parse band {text!r}")


def parse_window(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"window must be N:step, got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_overrides(pairs):
    out = {}
    for kv in pairs or []:
        if "=" not in kv:
            raise ConfigError(f"override must be key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        try:
            out[k] = float(v) if "." in v or "e" in v.lower() else int(v)
        except ValueError:
            out[k] = v
    return out


def _kernel(args, T):
    b = args.bandwidth if args.bandwidth is not None else spec.default_bandwidth(T)
    return spec.SmoothingKernel(getattr(args, "kernel", "daniell"), b)


def _load(args):
    return read_series_csv(args.infile, args.sample_rate)


def _write_matrix_csv(path, grid, values, fs, extra=None):
    """Tidy per-frequency matrix export: [u,] freq, freq_hz, p, q, value."""
    P = values.shape[-1]
    with open(path, "w", newline="") as fh:
        wr = _csv.writer(fh)
        head = (["u"] if extra is not None else []) + ["freq", "freq_hz", "p", "q", "value"]
        wr.writerow(head)
        blocks = values if extra is not None else values[None]
        us = extra if extra is not None else [None]
        for u, block in zip(us, blocks):
            for k, f in enumerate(grid.frequencies):
                for p in range(P):
                    for q in range(P):
                        row = ([] if u is None else [FLOAT_FMT.format(u)]) + [
                            FLOAT_FMT.format(f), FLOAT_FMT.format(f * fs),
                            p, q, FLOAT_FMT.format(block[k, p, q])]
                        wr.writerow(row)


def cmd_simulate(args):
    series, truth = sim.example(args.example, args.T, args.seed,
                                _parse_overrides(args.set))
    write_series_csv(series, args.out)
    truth = {k: v for k, v in truth.items() if k != "aux"}
    with open(_truth_path(args.out), "w") as fh:
        json.dump(truth, fh, indent=1)
    return 0


def _truth_path(out):
    return (out[:-4] if out.endswith(".csv") else out) + ".truth.json"


def cmd_filter(args):
    series = _load(args)
    band = parse_band(args.band)
    order = args.order or flt.default_order(band, series.sample_rate_hz)
    filt = flt.design_fir_bandpass(band, order, series.sample_rate_hz, args.mode)
    write_series_csv(flt.apply_filter(filt, series), args.out)
    return 0


def cmd_spectrum(args):
    series = _load(args)
    f = estimate_spectrum(series, _kernel(args, series.n_samples),
                              args.shrink_order)
    if args.format == "json":
        spec.save_csm_json(f, args.out)
    else:
        spec.csm_to_csv(f, args.out)
    return 0


def cmd_coherence(args, partial=False):
    series = _load(args)
    f = estimate_spectrum(series, _kernel(args, series.n_samples),
                              args.shrink_order)
    vals = partial_coherence(f) if partial else coherence_matrix(f).values
    _write_matrix_csv(args.out, f.grid, vals, series.sample_rate_hz)
    return 0


def cmd_tvcoh(args):
    series = _load(args)
    N, step = parse_window(args.window)
    kernel = spec.SmoothingKernel("daniell", args.bandwidth) \
        if args.bandwidth is not None else None
    if args.partial:
        res = tv_partial_coherence(series, N, step, kernel)
    else:
        res = tv_coherence(series, N, step, kernel)
    _write_matrix_csv(args.out, res.grid, res.values, series.sample_rate_hz,
                      extra=res.centers)
    return 0


def cmd_dualfreq(args):
    series = _load(args)
    pairs = []
    for txt in args.pair:
        p, fj, q, fk = txt.split(":")
        pairs.append((int(p), float(fj) / series.sample_rate_hz,
                      int(q), float(fk) / series.sample_rate_hz))
    if args.centers:
        a, b, c = (int(v) for v in args.centers.split(":"))
        centers = range(a, b, c)
    else:
        centers = [series.n_samples // 2]
    smoothing = None
    if args.smooth:
        h, hop = args.smooth.split(":")
        smoothing = (int(h), int(hop))
    res = df.dualfreq_scan(series, centers, args.window, pairs, smoothing)
    res.to_csv(args.out)
    return 0


def cmd_pac(args):
    series = _load(args)
    low = [parse_band(b) for b in args.low.split(",")]
    high = [parse_band(b) for b in args.high.split(",")]
    pairs = None
    if args.channels:
        pairs = []
        for pr in args.channels.split(";"):
            a, b = pr.split(",")
            pairs.append((int(a), int(b)))
    if pairs is None:
        pairs = [(c, c) for c in range(series.n_channels)]
    mi = pacmod.pac_scan(series, low, high, args.bins, pairs, args.filter_order)
    pacmod.mi_table_to_csv(args.out, mi, pairs, low, high)
    return 0


def _fit(series, args):
    if args.method == "ols":
        return varmod.fit_ols(series, args.order)
    if args.method == "lasso":
        return varmod.fit_lasso(series, args.order, args.lam)
    if args.method == "lassle":
        return varmod.fit_lassle(series, args.order, args.lam)
    raise ConfigError(f"unknown method {args.method!r}")


def cmd_var_fit(args):
    series = _load(args)
    if args.order is None:
        args.order = varmod.select_order(series, args.select_max)
    model = _fit(series, args)
    varmod.save_model_json(model, args.out)
    return 0


def cmd_pdc(args):
    series = _load(args)
    if args.order is None:
        args.order = varmod.select_order(series, args.select_max)
    model = _fit(series, args)
    grid = FrequencyGrid(args.grid_size)
    res = varmod.pdc(model, grid)
    edges = varmod.granger_edges(model, None if args.method == "ols" else 0.0)
    out = {
        "model": varmod.model_to_json(model),
        "frequencies": grid.frequencies.tolist(),
        "pdc": res.values.tolist(),
        "edges": [[int(q), int(p)] for p, q in zip(*np.nonzero(edges))],
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh)
    if args.plot_data:
        _write_matrix_csv(args.plot_data, grid, res.values, series.sample_rate_hz)
    return 0


def cmd_tvpdc(args):
    series = _load(args)
    N, step = parse_window(args.window)
    res = varmod.tv_pdc(series, args.order, N, step, args.method, args.lam)
    vals = np.stack([r.values for r in res.results])
    _write_matrix_csv(args.out, res.results[0].grid, vals,
                      series.sample_rate_hz, extra=res.centers)
    return 0


def cmd_scau(args):
    series = _load(args)
    bands = [parse_band(b) for b in args.bands.split(",")] if args.bands else None
    channels = [int(c) for c in args.channels.split(",")] if args.channels else None
    s = varmod.SpectralVarSpec(channels=channels, bands=bands,
                               filter_order=args.filter_order,
                               order=args.order, order_max=args.select_max,
                               method=args.method, lam=args.lam)
    model, edges = varmod.spectral_var(series, s)
    varmod.edges_to_csv(edges, args.out)
    if args.model_out:
        varmod.save_model_json(model, args.model_out)
    return 0


def cmd_spca(args):
    series = _load(args)
    f = estimate_spectrum(series, _kernel(args, series.n_samples),
                              args.shrink_order)
    sol = spcamod.spca_fit(f, args.components, args.lags)
    spcamod.save_spca_json(sol, args.out)
    if args.encode:
        write_series_csv(spcamod.spca_encode(series, sol), args.encode)
    return 0


def _add_io(p, needs_input=True):
    if needs_input:
        p.add_argument("--in", dest="infile", required=True, help="input CSV")
        p.add_argument("--sample-rate", type=float, required=True,
                       help="sampling rate in Hz")
    p.add_argument("-o", "--out", required=True, help="output path")


def _add_smoothing(p):
    p.add_argument("--bandwidth", type=int, default=None,
                   help="smoothing half-width in grid bins (default T^0.6/8)")
    p.add_argument("--kernel", choices=["daniell", "triangular"], default="daniell")
    p.add_argument("--shrink-order", type=int, default=None,
                   help="shrink toward a VAR spectrum of this order")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="specdep",
        description="Spectral dependence analyses for multivariate time series. "
                    "Bands are given as a name (delta, theta, alpha, beta, gamma) "
                    "or low:high in Hz; windows as N:step in samples.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a worked example dataset")
    p.add_argument("--example", required=True, choices=sim.example_names())
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a generator parameter")
    _add_io(p, needs_input=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("filter", help="band-pass filter every channel")
    _add_io(p)
    p.add_argument("--band", required=True)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--mode", choices=["causal", "zero_phase"], default="zero_phase")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("spectrum", help="estimate the cross-spectral matrix")
    _add_io(p)
    _add_smoothing(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("coherence", help="all-pairs coherence per frequency")
    _add_io(p)
    _add_smoothing(p)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("pcoh", help="all-pairs partial coherence per frequency")
    _add_io(p)
    _add_smoothing(p)
    p.set_defaults(func=lambda a: cmd_coherence(a, partial=True))

    p = sub.add_parser("tvcoh", help="sliding-window (partial) coherence")
    _add_io(p)
    p.add_argument("--window", required=True, metavar="N:STEP")
    p.add_argument("--bandwidth", type=int, default=None)
    p.add_argument("--partial", action="store_true")
    p.set_defaults(func=cmd_tvcoh)

    p = sub.add_parser("dualfreq", help="time-localized dual-frequency coherence")
    _add_io(p)
    p.add_argument("--pair", action="append", required=True,
                   metavar="P:FJ_HZ:Q:FK_HZ")
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--centers", default=None, metavar="START:STOP:STEP")
    p.add_argument("--smooth", default=None, metavar="HALF:HOP")
    p.set_defaults(func=cmd_dualfreq)

    p = sub.add_parser("pac", help="phase-amplitude coupling (modulation index)")
    _add_io(p)
    p.add_argument("--low", required=True, help="phase band(s), comma separated")
    p.add_argument("--high", required=True, help="amplitude band(s)")
    p.add_argument("--bins", type=int, default=18)
    p.add_argument("--channels", default=None,
                   help="phase,amp channel pairs like '0,0;0,1'")
    p.add_argument("--filter-order", type=int, default=None)
    p.set_defaults(func=cmd_pac)

    p = sub.add_parser("var-fit", help="fit a VAR model")
    _add_io(p)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--select-max", type=int, default=8)
    p.add_argument("--method", choices=["ols", "lasso", "lassle"], default="ols")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.set_defaults(func=cmd_var_fit)

    p = sub.add_parser("pdc", help="partial directed coherence")
    _add_io(p)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--select-max", type=int, default=8)
    p.add_argument("--method", choices=["ols", "lasso", "lassle"], default="lassle")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--grid-size", type=int, default=1024)
    p.add_argument("--plot-data", default=None, help="also write tidy CSV here")
    p.set_defaults(func=cmd_pdc)

    p = sub.add_parser("tvpdc", help="sliding-window PDC")
    _add_io(p)
    p.add_argument("--window", required=True, metavar="N:STEP")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--method", choices=["ols", "lassle"], default="ols")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.set_defaults(func=cmd_tvpdc)

    p = sub.add_parser("scau", help="band-to-band spectral-VAR causality")
    _add_io(p)
    p.add_argument("--bands", default=None, help="comma-separated bands")
    p.add_argument("--channels", default=None, help="comma-separated indices")
    p.add_argument("--filter-order", type=int, default=100)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--select-max", type=int, default=8)
    p.add_argument("--method", choices=["ols", "lasso", "lassle"], default="lassle")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--model-out", default=None)
    p.set_defaults(func=cmd_scau)

    p = sub.add_parser("spca", help="spectral principal components")
    _add_io(p)
    _add_smoothing(p)
    p.add_argument("-Q", "--components", type=int, required=True)
    p.add_argument("--lags", type=int, default=None)
    p.add_argument("--encode", default=None,
                   help="also write the encoded components to this CSV")
    p.set_defaults(func=cmd_spca)

    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except MalformedInputError as exc:
        print(f"specdep: malformed input: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"specdep: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (np.linalg.LinAlgError, varmod.LassoConvergenceError, ValueError,
            FloatingPointError, ZeroDivisionError) as exc:
        print(f"specdep: numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
