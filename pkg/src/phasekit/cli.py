"""Command-line front end.

Every subcommand prints one JSON document (stdout, or the file given with
--out) that echoes the resolved parameter map, so a run can be reproduced
from its own output.  Floats in that document are formatted at 12
significant digits; rerunning any command with the same inputs and seed
yields byte-identical JSON.  Exit codes: 0 success, 1 computation failure,
2 usage error (bad flags, missing files).

Randomness is confined to the --seed flag (default DEFAULT_SEED = 0).  The
PHASEKIT_OUT_DIR environment variable, when set, prefixes relative output
paths.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import contours as ct
from . import dimensions as dim
from . import identify as idn
from . import lyapunov as lyap
from . import predict as prd
from . import systems
from .embedding import (NeighborIndex, embed, embedding_to_series,
                        mutual_information_profile, select_delay)
from .errors import NoInteriorMinimumWarning, PhasekitError
from .series import TimeSeries, load_csv, save_csv

DEFAULT_SEED = 0

_USAGE_ERRORS = (FileNotFoundError, IsADirectoryError, PermissionError,
                 NotADirectoryError, ValueError)


def canonical(obj):
    """Rounded, JSON-safe copy: floats at 12 significant digits, non-finite
    values as strings, numpy scalars and arrays as plain Python."""
    if isinstance(obj, dict):
        return {k: canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [canonical(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    return obj


def _resolve_out(path):
    if path is None:
        return None
    p = Path(path)
    base = os.environ.get("PHASEKIT_OUT_DIR")
    if base and not p.is_absolute():
        p = Path(base) / p
        p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(payload: dict, out=None) -> None:
    text = json.dumps(canonical(payload), sort_keys=True, indent=2) + "\n"
    out = _resolve_out(out)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _write_curve_csv(path, xname, x, yname, y) -> None:
    lines = [f"{xname},{yname}"]
    for a, b in zip(x, y):
        lines.append(f"{repr(float(a))},{repr(float(b))}")
    _resolve_out(path).write_text("\n".join(lines) + "\n")


def _parse_floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")


def _parse_ints(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")


def _load_series(args):
    if args.time_column:
        if args.dt is not None:
            raise ValueError(
                "--dt conflicts with --time-column; the step comes from the file")
        series = load_csv(args.input, time_column=True)
        args.dt = series.dt  # params echo the dt resolved from the file
        return series
    if args.dt is None:
        args.dt = 1.0
    return load_csv(args.input, dt=args.dt)


def _load_embedding(args):
    series = _load_series(args)
    if args.channel is not None:
        series = series.channel(args.channel)
    return series, embed(series, args.m, args.tau)


def _fit_range(args):
    lo = getattr(args, "fit_lo", None)
    hi = getattr(args, "fit_hi", None)
    if (lo is None) != (hi is None):
        raise ValueError("--fit-lo and --fit-hi must be given together")
    return None if lo is None else (lo, hi)


def cmd_simulate(args) -> dict:
    system = systems.catalog(args.system)
    x0 = _parse_floats(args.x0) if args.x0 else None
    if x0 is not None and len(x0) != system.dim:
        raise ValueError(f"--x0 needs {system.dim} components for {system.name}")
    dt = system.dt_default if args.dt is None else args.dt
    values = systems.sample(system, args.steps, x0=x0, dt=dt,
                            transient=args.transient)
    if args.noise > 0.0:
        rng = np.random.default_rng(args.seed)
        values = values + rng.normal(0.0, args.noise, size=values.shape)
    series = TimeSeries(values, dt=dt if system.kind == "flow" else 1.0)
    out = _resolve_out(args.out)
    save_csv(series, out)
    params = {"system": args.system, "steps": args.steps, "dt": dt,
              "x0": list(x0) if x0 is not None else list(system.x0_default),
              "transient": args.transient, "noise": args.noise,
              "seed": args.seed, "out": str(args.out)}
    payload = {"command": "simulate", "params": params,
               "n_samples": series.n_samples, "n_channels": series.n_channels,
               "kind": system.kind}
    _emit(payload)
    return payload


def cmd_mi(args) -> dict:
    series = _load_series(args)
    tau_max = args.tau_max
    if tau_max is None:
        tau_max = max(2, min(100, series.n_samples // 4))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        profile = mutual_information_profile(series, tau_max,
                                             channel=args.channel,
                                             bins=args.bins)
        tau = select_delay(profile)
    interior = not any(issubclass(w.category, NoInteriorMinimumWarning)
                       for w in caught)
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "tau_max": tau_max,
              "bins": profile.bins, "channel": args.channel, "seed": args.seed}
    payload = {"command": "mi", "params": params,
               "taus": profile.taus, "values": profile.values,
               "selected_tau": tau, "interior_minimum": interior}
    _emit(payload, args.out)
    return payload


def cmd_embed(args) -> dict:
    series, emb = _load_embedding(args)
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "m": args.m,
              "tau": args.tau, "channel": args.channel, "seed": args.seed,
              "out": str(args.out) if args.out else None}
    if args.out:
        save_csv(embedding_to_series(emb), _resolve_out(args.out))
    payload = {"command": "embed", "params": params,
               "n_points": emb.n_points, "width": emb.width,
               "n_channels": emb.n_channels,
               "theiler_default": emb.default_theiler()}
    _emit(payload)
    return payload


def cmd_dimension(args) -> dict:
    series, emb = _load_embedding(args)
    theiler = emb.default_theiler() if args.theiler is None else args.theiler
    fit_range = _fit_range(args)
    if args.q == 2.0:
        curve = dim.correlation_integral(emb, theiler=theiler)
        est = dim.correlation_dimension(curve, fit_range=fit_range)
        usable = curve.values > 0.0
        log_eps = np.log2(curve.epsilons[usable])
        ordinate = np.log2(curve.values[usable])
    else:
        epsilons, y = dim.generalized_curve(emb, args.q)
        est = dim.generalized_dimension(emb, args.q, epsilons=epsilons,
                                        fit_range=fit_range)
        log_eps = np.log2(epsilons)
        ordinate = y
    if args.curve_out:
        _write_curve_csv(args.curve_out, "log2_eps", log_eps,
                         "ordinate", ordinate)
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "m": args.m,
              "tau": args.tau, "channel": args.channel, "q": args.q, "theiler": theiler,
              "fit_lo": args.fit_lo, "fit_hi": args.fit_hi,
              "curve_out": str(args.curve_out) if args.curve_out else None,
              "seed": args.seed}
    payload = {"command": "dimension", "params": params,
               "value": est.value, "stderr": est.stderr, "q": est.q,
               "window": list(est.window), "n_fit_points": est.n_fit_points,
               "curve": {"log2_eps": log_eps, "ordinate": ordinate}}
    _emit(payload, args.out)
    return payload


def cmd_lyapunov(args) -> dict:
    series, emb = _load_embedding(args)
    theiler = emb.default_theiler() if args.theiler is None else args.theiler
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "m": args.m,
              "tau": args.tau, "channel": args.channel, "method": args.method, "theiler": theiler,
              "seed": args.seed}
    payload = {"command": "lyapunov", "params": params, "method": args.method}

    if args.method == "wolf":
        res = lyap.wolf_lambda1(emb, evolve_steps=args.evolve_steps,
                                theiler=theiler)
        params.update({"evolve_steps": args.evolve_steps})
        payload.update({"lambda1_per_sample": res.lambda1,
                        "lambda1_per_time": res.lambda1 / series.dt,
                        "segments": res.segments,
                        "total_steps": res.total_steps})
    elif args.method in ("rosenstein", "kantz"):
        if args.method == "rosenstein":
            curve = lyap.rosenstein_curve(emb, args.horizon, theiler=theiler)
            params.update({"horizon": args.horizon})
        else:
            eps0 = args.eps0
            if eps0 is None:
                eps0 = 0.05 * dim.data_diameter(emb.points)
            curve = lyap.kantz_curve(emb, eps0, args.horizon, theiler=theiler,
                                     n_refs=args.n_refs)
            params.update({"horizon": args.horizon, "eps0": eps0,
                           "n_refs": args.n_refs})
        rate = lyap.divergence_rate(curve, fit_range=_fit_range(args))
        if args.curve_out:
            _write_curve_csv(args.curve_out, "offset", curve.offsets,
                             "mean_log_distance", curve.values)
        params.update({"fit_lo": args.fit_lo, "fit_hi": args.fit_hi})
        payload.update({"lambda1_per_sample": rate.value,
                        "lambda1_per_time": rate.value / series.dt,
                        "stderr": rate.stderr, "window": list(rate.window),
                        "n_refs": curve.n_refs,
                        "curve": {"offsets": curve.offsets,
                                  "values": curve.values}})
    else:  # benettin, data-driven
        spectrum = lyap.benettin_data(emb, k_neighbors=args.k_neighbors,
                                      renorm_interval=args.renorm_interval,
                                      theiler=theiler)
        checks = lyap.spectrum_checks(spectrum, kind=args.kind)
        params.update({"kind": args.kind, "k_neighbors": args.k_neighbors,
                       "renorm_interval": args.renorm_interval})
        payload.update({
            "exponents": list(spectrum.exponents),
            "per_time": list(spectrum.per_time),
            "steps": spectrum.steps,
            "checks": {"sum_exponents": checks.sum_exponents,
                       "dissipative": checks.dissipative,
                       "zero_exponent_ok": checks.zero_exponent_ok,
                       "entropy_rate": checks.entropy_rate}})
    _emit(payload, args.out)
    return payload


def cmd_identify(args) -> dict:
    series, emb = _load_embedding(args)
    states, record = idn.build_state_sequence(emb, args.n)
    outputs = series.values[emb.times]
    basis = idn.parse_basis(args.basis) if args.basis else idn.TimeBasis(())
    t0 = float(emb.times[0]) * series.dt
    model = idn.fit_model(states, outputs, basis=basis, mode=args.mode,
                          dt=series.dt, t0=t0,
                          smooth_window=args.smooth_window)
    model_json = json.loads(model.to_json())
    if args.model_out:
        _resolve_out(args.model_out).write_text(model.to_json() + "\n")
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "m": args.m,
              "tau": args.tau, "channel": args.channel, "n": args.n, "basis": args.basis,
              "mode": args.mode, "smooth_window": args.smooth_window,
              "model_out": str(args.model_out) if args.model_out else None,
              "seed": args.seed}
    payload = {"command": "identify", "params": params, "model": model_json,
               "fit": list(model.fit) if model.fit is not None else None,
               "residual_rms": list(model.residual_rms)}
    _emit(payload, args.out)
    return payload


def cmd_predict(args) -> dict:
    series, emb = _load_embedding(args)
    theiler = emb.default_theiler() if args.theiler is None else args.theiler
    sub = prd.successor_index(emb)
    row = emb.n_points - 1
    nbrs, _ = sub.query_point(emb.points[row], emb.times[row],
                              args.n_neighbors, theiler)
    stab = prd.local_stability(emb, nbrs)
    j = prd.composite_J(stab.j1, stab.j2, args.lambda_min)
    successors = emb.points[np.asarray(nbrs) + 1]
    forecast = successors.mean(axis=0)
    # Training residual of the constant local-mean model over the neighbors.
    e_val = float(np.sum((successors - forecast) ** 2))
    gated = j == 0.0 or (args.gate is not None and e_val >= args.gate)
    if gated:
        forecast = np.zeros_like(forecast)
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column, "m": args.m,
              "tau": args.tau, "channel": args.channel,
              "n_neighbors": args.n_neighbors,
              "lambda_min": args.lambda_min, "gate": args.gate,
              "theiler": theiler, "seed": args.seed}
    payload = {"command": "predict", "params": params,
               "config": {"m": args.m, "tau": args.tau,
                          "features": ["local_mean"]},
               "lambda_D": stab.lambda_d, "J": j, "forecast": forecast,
               "gated": bool(gated), "e_psi": e_val,
               "n_neighbors": int(stab.j2)}
    _emit(payload, args.out)
    return payload


_FEATURES = {"value": prd.value_feature, "step_sign": prd.step_sign_feature}


def cmd_stepwise(args) -> dict:
    series = _load_series(args)
    names = [tok.strip() for tok in args.features.split(",") if tok.strip()]
    unknown = [n for n in names if n not in _FEATURES]
    if unknown:
        raise ValueError(f"unknown features {unknown}; choose from "
                         f"{sorted(_FEATURES)}")
    feats = [_FEATURES[n]() for n in names]
    report = prd.stepwise_reconstruct(series, feats,
                                      _parse_ints(args.m_values),
                                      _parse_ints(args.tau_values),
                                      args.lambda_min, channel=args.channel,
                                      radius_frac=args.radius_frac)
    params = {"input": str(args.input), "dt": args.dt,
              "time_column": args.time_column,
              "features": names, "m_values": list(_parse_ints(args.m_values)),
              "tau_values": list(_parse_ints(args.tau_values)),
              "lambda_min": args.lambda_min, "radius_frac": args.radius_frac,
              "channel": args.channel, "seed": args.seed}
    payload = {"command": "stepwise", "params": params,
               "config": {"m": report.m, "tau": report.tau,
                          "features": list(report.features)},
               "lambda_D": report.lambda_d, "J": report.j,
               "forecast": list(report.forecast), "gated": False,
               "e_psi": None, "n_neighbors": report.n_neighbors,
               "configs_evaluated": report.configs_evaluated,
               "configs_gated": report.configs_gated}
    _emit(payload, args.out)
    return payload


def _descriptor_dict(desc: ct.ContourDescriptors) -> dict:
    return {"translate": desc.translate, "scale": desc.scale,
            "angles": list(desc.angles)}


def cmd_symmetry(args) -> dict:
    pts_a = ct.load_contour(args.input)
    spec_a = ct.dft(pts_a)
    _, desc_a = ct.normalize(spec_a)
    if args.spectrum_out:
        ct.save_spectrum(_resolve_out(args.spectrum_out), spec_a)
    params = {"input": str(args.input),
              "input_b": str(args.input_b) if args.input_b else None,
              "spectrum_out": (str(args.spectrum_out)
                               if args.spectrum_out else None),
              "seed": args.seed}
    payload = {"command": "symmetry", "params": params,
               "a": _descriptor_dict(desc_a),
               "b": None, "comparison": None}
    if args.input_b:
        pts_b = ct.load_contour(args.input_b)
        _, desc_b = ct.normalize(ct.dft(pts_b))
        report = ct.symmetry_between(pts_a, pts_b)
        payload["b"] = _descriptor_dict(desc_b)
        payload["comparison"] = {
            "translation": report.translation,
            "scale_ratio": report.scale_ratio,
            "rotation": list(report.rotation),
            "closeness": report.closeness,
            "matched_closeness": report.matched_closeness,
            "ratio": report.ratio,
        }
    _emit(payload, args.out)
    return payload


def _add_common(p, with_embedding=True):
    p.add_argument("--input", required=True, help="input CSV path")
    p.add_argument("--dt", type=float, default=None,
                   help="sampling step of the input series (default 1.0)")
    p.add_argument("--time-column", action="store_true",
                   help="read dt from a leading time column instead of --dt")
    if with_embedding:
        p.add_argument("--m", type=int, required=True, help="embedding dimension")
        p.add_argument("--tau", type=int, required=True, help="delay in samples")
        p.add_argument("--channel", type=int, default=None,
                       help="embed one channel of the input (default: all)")
    p.add_argument("--out", default=None, help="write the JSON result here")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"seed for all randomness (default {DEFAULT_SEED})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasekit",
        description="Attractor reconstruction, invariants, reduced models, "
                    "neighborhood forecasting and contour symmetry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a built-in system to CSV")
    p.add_argument("--system", required=True,
                   choices=sorted(systems.catalog()),
                   help="built-in system name")
    p.add_argument("--steps", type=int, required=True,
                   help="post-transient samples to write")
    p.add_argument("--dt", type=float, default=None,
                   help="integration step (flows); system default if omitted")
    p.add_argument("--x0", default=None, help="comma-separated initial state")
    p.add_argument("--transient", type=int, default=systems.DEFAULT_TRANSIENT,
                   help="leading samples to discard")
    p.add_argument("--noise", type=float, default=0.0,
                   help="additive Gaussian observation noise (std dev)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"seed for all randomness (default {DEFAULT_SEED})")
    p.add_argument("--out", required=True, help="CSV destination")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mi", help="mutual information profile and delay choice")
    _add_common(p, with_embedding=False)
    p.add_argument("--tau-max", type=int, default=None,
                   help="largest delay to scan (default n/4, capped at 100)")
    p.add_argument("--bins", type=int, default=None,
                   help="histogram bins (default cube-root rule)")
    p.add_argument("--channel", type=int, default=0)
    p.set_defaults(func=cmd_mi)

    p = sub.add_parser("embed", help="delay-embed a series")
    _add_common(p)
    p.set_defaults(func=cmd_embed)
    # --out holds the embedded-points CSV for this command
    for a in p._actions:
        if a.dest == "out":
            a.help = "write embedded points CSV here"

    p = sub.add_parser("dimension", help="correlation or box-counting dimension")
    _add_common(p)
    p.add_argument("--q", type=float, default=2.0,
                   help="order: 2 = pairwise correlation route, else boxes")
    p.add_argument("--theiler", type=int, default=None)
    p.add_argument("--fit-lo", type=float, default=None,
                   help="lower eps bound of a manual fit window")
    p.add_argument("--fit-hi", type=float, default=None,
                   help="upper eps bound of a manual fit window")
    p.add_argument("--curve-out", default=None,
                   help="write the log-log curve CSV here")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("lyapunov", help="largest exponent or full spectrum")
    _add_common(p)
    p.add_argument("--method", required=True,
                   choices=("wolf", "rosenstein", "kantz", "benettin"))
    p.add_argument("--theiler", type=int, default=None)
    p.add_argument("--evolve-steps", type=int, default=1,
                   help="wolf: steps between replacements")
    p.add_argument("--horizon", type=int, default=50,
                   help="rosenstein/kantz: divergence curve length")
    p.add_argument("--eps0", type=float, default=None,
                   help="kantz: neighborhood radius (default 5%% of diameter)")
    p.add_argument("--n-refs", type=int, default=1000,
                   help="kantz: reference point budget")
    p.add_argument("--fit-lo", type=float, default=None,
                   help="first offset of a manual fit window")
    p.add_argument("--fit-hi", type=float, default=None,
                   help="last offset of a manual fit window")
    p.add_argument("--renorm-interval", type=int, default=1,
                   help="benettin: steps between re-orthonormalizations")
    p.add_argument("--k-neighbors", type=int, default=None,
                   help="benettin: neighbors per local Jacobian fit "
                        "(default 2m+1)")
    p.add_argument("--kind", choices=("flow", "map"), default="flow",
                   help="benettin: neutral-direction check applies to flows")
    p.add_argument("--curve-out", default=None,
                   help="write the divergence curve CSV here")
    p.set_defaults(func=cmd_lyapunov)

    p = sub.add_parser("identify", help="fit a reduced linear-plus-basis model")
    _add_common(p)
    p.add_argument("--n", type=int, required=True, help="state order")
    p.add_argument("--basis", default="",
                   help="comma list of terms: 1, t, t^p, sin(w,phi), exp(a)")
    p.add_argument("--mode", choices=("discrete", "continuous"),
                   default="discrete")
    p.add_argument("--smooth-window", type=int, default=0,
                   help="moving-average width for continuous-mode derivatives")
    p.add_argument("--model-out", default=None,
                   help="write the full-precision model JSON here")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("predict", help="one-step local-average forecast")
    _add_common(p)
    p.add_argument("--n-neighbors", type=int, default=4)
    p.add_argument("--lambda-min", type=float, default=0.0,
                   help="stability gate on 1/max successor spread")
    p.add_argument("--gate", type=float, default=None,
                   help="error gate: e_psi at or above this zeroes the forecast")
    p.add_argument("--theiler", type=int, default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stepwise", help="stepwise reconstruction search")
    _add_common(p, with_embedding=False)
    p.add_argument("--features", default="value,step_sign",
                   help="comma list from: " + ",".join(sorted(_FEATURES)))
    p.add_argument("--m-values", default="1,2,3")
    p.add_argument("--tau-values", default="1,2,3")
    p.add_argument("--lambda-min", type=float, required=True)
    p.add_argument("--radius-frac", type=float, default=0.25,
                   help="neighborhood radius per sqrt(m), standardized units")
    p.add_argument("--channel", type=int, default=0)
    p.set_defaults(func=cmd_stepwise)

    p = sub.add_parser("symmetry", help="contour descriptors and comparison")
    p.add_argument("--input", required=True, help="contour CSV (vertices)")
    p.add_argument("--input-b", default=None, help="second contour to compare")
    p.add_argument("--spectrum-out", default=None,
                   help="write the raw spectrum CSV here")
    p.add_argument("--out", default=None, help="write the JSON result here")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"seed for all randomness (default {DEFAULT_SEED})")
    p.set_defaults(func=cmd_symmetry)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except PhasekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
