"""Command-line front end: ``dpnarx <command> [options]``.

Every artifact carries the hash of the run configuration that produced it
(command, options and the SHA-256 of every input file), so a rerun with the
same configuration and inputs produces byte-identical files.

Exit codes: 0 success, 2 bad input or layout, 3 numerical failure,
4 unstable free-run simulation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_LAYOUT, EXIT_NUMERIC, EXIT_UNSTABLE = 0, 2, 3, 4

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    exit_code = EXIT_LAYOUT


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True, allow_nan=True) + "\n"


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


class RunConfig:
    """Serializable record of one invocation (paths, options, input hashes)."""

    # options that do not influence results
    _EXCLUDED = {"out_dir", "threads", "func"}

    def __init__(self, args: argparse.Namespace, inputs: dict[str, Path]):
        params = {k: v for k, v in sorted(vars(args).items()) if k not in self._EXCLUDED}
        self.record = {
            "command": args.command,
            "params": _jsonable(params),
            "inputs": {k: {"name": p.name, "sha256": _sha256(p)} for k, p in sorted(inputs.items())},
        }
        from . import __version__

        self.record["tool_version"] = f"v{__version__}"
        self.hash = hashlib.sha256(json.dumps(self.record, sort_keys=True).encode()).hexdigest()

    def stamp(self, payload: dict) -> dict:
        return {"run_config": self.record, "run_config_hash": self.hash, **payload}


class _Writer:
    def __init__(self, out_dir: Path, rc: RunConfig):
        self.out_dir = out_dir
        self.rc = rc
        self.written: list[Path] = []

    def json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        path.write_text(_dumps(self.rc.stamp(payload)))
        self.written.append(path)
        return path

    def csv(self, name: str, header: list[str], columns) -> Path:
        import numpy as np

        path = self.out_dir / name
        cols = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
        with open(path, "w", newline="") as fh:
            fh.write(f"# run_config_hash: {self.rc.hash}\n")
            fh.write(",".join(header) + "\n")
            for row in zip(*cols):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        self.written.append(path)
        return path


def _input(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        from .errors import LayoutError

        raise LayoutError(f"{path}: invalid JSON ({exc})") from None


def _load_model(path: Path):
    """Decoupled model or coupled polynomial (with its NARX configuration)."""
    from .decouple import DecoupledModel
    from .errors import LayoutError
    from .narx import NarxConfig
    from .poly import CoupledPolynomial

    data = _load_json(path)
    body = data.get("model", data)
    try:
        if "branches" in body:
            return DecoupledModel.from_dict(body)
        poly = CoupledPolynomial.from_dict(body["polynomial"])
        return _CoupledModel(poly, NarxConfig.from_dict(body["config"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise LayoutError(f"{path}: not a model file ({exc})") from None


class _CoupledModel:
    def __init__(self, poly, cfg):
        self.polynomial = poly
        self.cfg = cfg

    def predict(self, Z):
        return self.polynomial.evaluate(Z)

    @property
    def n_params(self) -> int:
        return self.polynomial.n_terms


def _cfg_from_args(args):
    from .narx import NarxConfig

    return NarxConfig(n_u=args.n_u, n_y=args.n_y, n_k=args.n_k, degree=args.degree)


def _selection(args):
    from .narx import Frols

    if args.frols_threshold is None and args.max_terms is None:
        return None
    thr = 1e-6 if args.frols_threshold is None else args.frols_threshold
    return Frols(err_threshold=thr, max_terms=args.max_terms)


def _options(args):
    from .decouple import DecoupleOptions

    return DecoupleOptions(
        n_hessian=args.n_hessian,
        als_restarts=args.als_restarts,
        seed=args.seed,
        random_restarts=args.random_restarts,
        budget_bytes=int(args.mem_budget_gb * 1024**3),
    )


# -- commands ---------------------------------------------------------------


def cmd_gen(args, out: Path) -> int:
    import numpy as np

    from . import benchmarks as bm
    from .narx import Dataset, write_dataset_csv

    kind = args.kind
    prov: dict = {"kind": kind, "seed": args.seed}
    if kind == "boucwen":
        params = bm.BoucWenParams()
        d = bm.boucwen_dataset(
            rms=args.rms if args.rms is not None else 55.0,
            seed=args.seed,
            n_period=args.period or 8192,
            n_periods=args.periods,
            fs=args.fs or bm.BOUCWEN_FS,
            f_band=(args.f_lo if args.f_lo is not None else 5.0, args.f_hi if args.f_hi is not None else 150.0),
            oversample=args.oversample,
            params=params,
        )
        prov.update(params=params.to_dict(), newmark={"beta": 0.25, "gamma": 0.5, "tol": 1e-10, "max_newton": 50},
                    oversample=args.oversample, transient_periods_dropped=1)
    elif kind in ("duffing", "multisine"):
        fs = args.fs or (bm.SILVERBOX_FS if kind == "duffing" else 1.0)
        n = args.period or 8192
        lo = args.f_lo if args.f_lo is not None else (1.0 if kind == "duffing" else 0.0)
        hi = args.f_hi if args.f_hi is not None else (200.0 if kind == "duffing" else fs / 2)
        lines = bm.band_lines(n, fs, lo, hi)
        rms = args.rms if args.rms is not None else (0.05 if kind == "duffing" else 1.0)
        u = bm.gen_multisine(n, lines, rms, odd_only=args.odd, seed=args.seed, n_periods=args.periods)
        prov.update(period=n, periods=args.periods, lines=[int(lines[0]), int(lines[-1])] if lines.size else [],
                    odd_only=args.odd, rms=rms)
        if kind == "duffing":
            p = bm.DuffingParams()
            y = bm.simulate_duffing(p, u, 1.0 / fs, oversample=args.oversample)
            prov.update(params=p.to_dict(), integrator="rk4", oversample=args.oversample,
                        note="synthetic parameters, not identified from the physical device")
        else:
            y = np.zeros_like(u)
        d = Dataset(u, y, fs)
    elif kind == "sweptsine":
        fs = args.fs or bm.BOUCWEN_FS
        f0 = args.f_lo if args.f_lo is not None else 1.0
        f1 = args.f_hi if args.f_hi is not None else 150.0
        amp = args.rms * np.sqrt(2) if args.rms is not None else 50.0 * np.sqrt(2)
        u = bm.gen_swept_sine(f0, f1, args.duration, fs, amp)
        y = bm.simulate_boucwen(bm.BoucWenParams(), u, 1.0 / fs, oversample=args.oversample) \
            if args.system == "boucwen" else np.zeros_like(u)
        d = Dataset(u, y, fs)
        prov.update(f_start=f0, f_end=f1, duration=args.duration, amplitude=amp, system=args.system)
    elif kind == "synthetic":
        noisy, clean = bm.synthetic_dataset(n=args.period or 4000, snr_db=args.snr_db, seed=args.seed)
        d = noisy
        truth = bm.synthetic_truth()
        prov.update(snr_db=args.snr_db, truth=truth.to_dict())
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown kind {kind}")
    name = args.name or kind
    rc = args._rc
    prov["sample_rate_hz"] = d.sample_rate_hz
    path = out / f"{name}.csv"
    write_dataset_csv(path, d, comment=f"dpnarx gen {kind}\nrun_config_hash: {rc.hash}")
    _Writer(out, rc).json(f"{name}.provenance.json", {"provenance": prov})
    print(f"wrote {path} ({len(d)} samples)")
    return EXIT_OK


def cmd_fit(args, out: Path) -> int:
    from .metrics import compute_metrics
    from .narx import build_regressors, fit_full_pnarx, read_dataset_csv

    d = read_dataset_csv(args.data)
    cfg = _cfg_from_args(args)
    tab = build_regressors(d, cfg)
    fit = fit_full_pnarx(tab, cfg, _selection(args))
    w = _Writer(out, args._rc)
    w.json("coupled.json", {"model": {"config": cfg.to_dict(), "polynomial": fit.polynomial.to_dict()}})
    m = compute_metrics(tab.target, tab.target - fit.residuals)
    w.json("fit_report.json", {
        "n_candidates": fit.n_candidates,
        "n_params": fit.polynomial.n_terms,
        "condition": fit.condition,
        "rows": len(tab),
        "training_prediction": m.to_dict(),
    })
    print(f"coupled model: {fit.polynomial.n_terms} of {fit.n_candidates} terms, training FIT {m.fit_percent:.4f}%")
    return EXIT_OK


def cmd_decouple(args, out: Path) -> int:
    from .decouple import branch_curves, decouple, filter_responses
    from .narx import build_regressors, read_dataset_csv

    d = read_dataset_csv(args.data)
    coupled = _load_model(Path(args.coupled))
    if not hasattr(coupled, "polynomial"):
        raise UsageError("--coupled must be a coupled model from 'fit'")
    cfg = coupled.cfg
    tab = build_regressors(d, cfg)
    model, rep = decouple(coupled.polynomial, tab, cfg, args.r, args.M, args.init, _options(args))
    rep["n_params_coupled"] = coupled.polynomial.n_terms
    rep["n_params_decoupled"] = model.n_params
    _write_decoupled(_Writer(out, args._rc), model, rep, tab, d.sample_rate_hz,
                     branch_curves, filter_responses)
    print(f"decoupled model: r={model.r}, M={model.degree}, {model.n_params} parameters,"
          f" SLS {rep['sls']['iterations']} iterations ({rep['sls']['status']})")
    return EXIT_OK


def _write_decoupled(w, model, rep, tab, fs, branch_curves, filter_responses):
    w.json("model.json", {"model": model.to_dict()})
    w.json("decouple_report.json", {"report": rep})
    costs = rep["sls"]["costs"]
    w.csv("cost_trajectory.csv", ["iteration", "cost"], [range(len(costs)), costs])
    for c in branch_curves(model, tab.Z):
        w.csv(f"branch_{c['branch']}.csv", ["x", "x_normalized", "g_nonlinear", "g_normalized"],
              [c["x"], c["x_normalized"], c["g_nonlinear"], c["g_normalized"]])
    for f in filter_responses(model, fs):
        w.csv(f"filters_{f['branch']}.csv",
              ["omega_rad_per_sample", "freq_hz", "mag_output_filter", "mag_input_filter"],
              [f["omega_rad_per_sample"], f["freq_hz"], f["mag_output_filter"], f["mag_input_filter"]])


def cmd_eval(args, out: Path) -> int:
    from .decouple import evaluate_model
    from .narx import read_dataset_csv

    model = _load_model(Path(args.model))
    d = read_dataset_csv(args.data)
    res = evaluate_model(model, d, model.cfg)
    res["n_params"] = model.n_params
    name = f"eval_{Path(args.model).stem}_on_{Path(args.data).stem}.json"
    _Writer(out, args._rc).json(name, {"metrics": res})
    p = res["prediction"]
    print(f"prediction: FIT {p['fit_percent']:.4f}%  e_RMS {p['e_rms']:.6g}")
    s = res["simulation"]
    if s["status"] == "unstable":
        print("simulation: unstable")
    else:
        print(f"simulation: FIT {s['fit_percent']:.4f}%  e_RMS {s['e_rms']:.6g}")
    print(json.dumps(_jsonable(res), sort_keys=True))
    return EXIT_UNSTABLE if s["status"] == "unstable" else EXIT_OK


def cmd_sweep(args, out: Path) -> int:
    import math

    from .decouple import run_algorithm1
    from .errors import DPNarxError
    from .narx import read_dataset_csv

    d = read_dataset_csv(args.data)
    val = read_dataset_csv(args.validation) if args.validation else None
    cfg = _cfg_from_args(args)
    rows = []
    for r in args.r_list:
        for M in args.M_list:
            try:
                _, rep = run_algorithm1(d, cfg, r, M, args.init, _selection(args), _options(args), val)
                met = rep["decoupled"]["metrics"]
                sim = met["simulation"]
                rows.append({"r": r, "M": M, "n_params": rep["decoupled"]["n_params"],
                             "pred_fit": met["prediction"]["fit_percent"],
                             "sim_fit": sim.get("fit_percent", math.nan), "sim_status": sim["status"],
                             "sls_iterations": rep["decouple"]["sls"]["iterations"], "error": None})
            except DPNarxError as exc:
                rows.append({"r": r, "M": M, "n_params": math.nan, "pred_fit": math.nan, "sim_fit": math.nan,
                             "sim_status": "failed", "sls_iterations": math.nan, "error": str(exc)})
            print(f"r={r} M={M}: pred FIT {rows[-1]['pred_fit']:.4f}%  sim FIT {rows[-1]['sim_fit']:.4f}%")
    w = _Writer(out, args._rc)
    w.json("sweep.json", {"grid": rows})
    w.csv("sweep.csv", ["r", "M", "n_params", "pred_fit", "sim_fit"],
          [[x[k] for x in rows] for k in ("r", "M", "n_params", "pred_fit", "sim_fit")])
    return EXIT_OK


def cmd_demo_jacobian(args, out: Path) -> int:
    from .cpd import demo_jacobian_matrix_nonuniqueness
    from .decouple import DecoupledModel
    from .narx import build_regressors, read_dataset_csv

    model = _load_model(Path(args.model))
    if not isinstance(model, DecoupledModel):
        raise UsageError("demo-jacobian needs a decoupled model")
    tab = build_regressors(read_dataset_csv(args.data), model.cfg)
    rep = demo_jacobian_matrix_nonuniqueness(model, tab.Z, seed=args.seed)
    _Writer(out, args._rc).json("demo_jacobian.json", {"demo": rep})
    print(f"alternative factors differ by {rep['factor_change']:.3g} (relative),"
          f" reproduce the Jacobian to {rep['reconstruction_error']:.3g}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_narx(p):
    p.add_argument("--n-u", type=int, required=True, help="number of past inputs")
    p.add_argument("--n-y", type=int, required=True, help="number of past outputs")
    p.add_argument("--n-k", type=int, default=0, help="input delay (default 0)")
    p.add_argument("--degree", type=int, default=3, help="coupled polynomial degree (default 3)")
    p.add_argument("--frols-threshold", type=float, default=None,
                   help="enable forward regression; stop when 1 - sum(ERR) falls below this")
    p.add_argument("--max-terms", type=int, default=None, help="cap on forward-regression terms")


def _add_decouple(p):
    p.add_argument("-r", "--r", type=int, required=True, help="number of branches")
    p.add_argument("-M", "--M", type=int, required=True, help="branch polynomial degree")
    _add_decouple_opts(p)


def _add_decouple_opts(p):
    p.add_argument("--init", choices=["structured", "unstructured", "random"], default="structured",
                   help="initialization of the mixing matrix (default structured)")
    p.add_argument("--n-hessian", type=int, default=4096,
                   help="max regressor points used for the Hessian tensor (default 4096)")
    p.add_argument("--als-restarts", type=int, default=5, help="ALS restarts (default 5)")
    p.add_argument("--random-restarts", type=int, default=100,
                   help="restarts for --init random; the best is kept (default 100)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dpnarx", description=__doc__.split("\n\n")[0])
    ap.add_argument("--seed", type=int, required=True, help="seed for every stochastic step (mandatory)")
    ap.add_argument("--threads", type=int, default=None, help="cap on BLAS worker threads")
    ap.add_argument("--mem-budget-gb", type=float, default=4.0,
                    help="memory budget for the structured-CPD Jacobian in GiB (default 4)")
    ap.add_argument("--out-dir", required=True, help="existing directory for all artifacts")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a benchmark or excitation dataset")
    g.add_argument("kind", choices=["boucwen", "duffing", "multisine", "sweptsine", "synthetic"])
    g.add_argument("--name", default=None, help="output file stem (default: kind)")
    g.add_argument("--rms", type=float, default=None,
                   help="input RMS (boucwen 55 N, duffing 0.05, multisine 1, sweptsine 50)")
    g.add_argument("--period", type=int, default=None,
                   help="multisine period in samples (default 8192; synthetic: record length 4000)")
    g.add_argument("--periods", type=int, default=1, help="number of periods (default 1)")
    g.add_argument("--odd", action="store_true", help="odd harmonic lines only")
    g.add_argument("--fs", type=float, default=None, help="sample rate in Hz")
    g.add_argument("--f-lo", type=float, default=None, help="lowest excited / start frequency in Hz")
    g.add_argument("--f-hi", type=float, default=None, help="highest excited / end frequency in Hz")
    g.add_argument("--duration", type=float, default=10.0, help="swept-sine duration in s (default 10)")
    g.add_argument("--system", choices=["none", "boucwen"], default="boucwen",
                   help="system driven by the swept sine (default boucwen)")
    g.add_argument("--oversample", type=int, default=20, help="integrator steps per sample (default 20)")
    g.add_argument("--snr-db", type=float, default=40.0, help="output SNR for the synthetic kind (default 40)")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("fit", help="fit a coupled polynomial NARX model")
    f.add_argument("--data", required=True, help="dataset CSV (t,u,y)")
    _add_narx(f)
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("decouple", help="decouple a coupled model")
    d.add_argument("--data", required=True, help="identification dataset CSV")
    d.add_argument("--coupled", required=True, help="coupled.json from 'fit'")
    _add_decouple(d)
    d.set_defaults(func=cmd_decouple)

    e = sub.add_parser("eval", help="prediction and simulation accuracy of a model")
    e.add_argument("--model", required=True, help="model.json or coupled.json")
    e.add_argument("--data", required=True, help="dataset CSV")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="run the full pipeline over an r x M grid")
    s.add_argument("--data", required=True, help="identification dataset CSV")
    s.add_argument("--validation", default=None, help="dataset CSV used for the reported metrics")
    _add_narx(s)
    s.add_argument("--r-list", type=_int_list, required=True, help="comma-separated branch counts")
    s.add_argument("--M-list", type=_int_list, required=True, help="comma-separated branch degrees")
    _add_decouple_opts(s)
    s.set_defaults(func=cmd_sweep)

    j = sub.add_parser("demo-jacobian", help="show that Jacobian-matrix factorizations are not unique")
    j.add_argument("--model", required=True, help="decoupled model.json")
    j.add_argument("--data", required=True, help="dataset CSV supplying the regressor points")
    j.set_defaults(func=cmd_demo_jacobian)
    return ap


_INPUT_ARGS = ("data", "coupled", "model", "validation")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            ap.error("--threads must be >= 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)
    from .errors import DPNarxError, MemoryBudgetError

    out = Path(args.out_dir)
    try:
        if not out.is_dir():
            raise UsageError(f"output directory does not exist: {out}")
        inputs = {k: _input(getattr(args, k)) for k in _INPUT_ARGS if getattr(args, k, None)}
        args._rc = RunConfig(args, inputs)
        return args.func(args, out)
    except (UsageError, DPNarxError) as exc:
        cause = getattr(exc, "cause", exc)
        if isinstance(cause, MemoryBudgetError):
            print(f"error: {cause}; jacobian_storage_elements = {cause.elements}", file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return int(getattr(exc, "exit_code", 1))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LAYOUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
