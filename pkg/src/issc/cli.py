"""Command-line entry point: solve, sweep, baseline, fit and check."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import driver
from .distortion import ModelBank, fit_logistic, read_samples
from .errors import (
    AllModelsInfeasible, ConfigError, FitDataInsufficient, FitDiverged, HcrbInfeasible, IsscError,
    RateInfeasible, ZfDegenerate,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2
_INFEASIBLE = (AllModelsInfeasible, HcrbInfeasible, RateInfeasible, ZfDegenerate)


def _summary(rep):
    return (f"{rep.scheme}: R_s={rep.R_s:g} R_c={rep.R_c:.6g} gamma={rep.gamma_dB:.4f} dB "
            f"D_o={rep.D_o:.6e} (-log10 D_o={-rep.log10_D_o:.4f}) Tr(HCRB)={rep.trace_hcrb:.6e} m^2 "
            f"status={rep.status}")


def _emit_report(rep, out, name):
    if out is None:
        print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    driver.write_report(rep, d / name)
    print(_summary(rep))


def _cmd_solve(args):
    cfg = driver.ExperimentConfig.from_file(args.config)
    _emit_report(driver.solve_issc(cfg), args.out, "report.json")
    return EXIT_OK


def _cmd_baseline(args):
    cfg = driver.ExperimentConfig.from_file(args.config)
    _emit_report(driver.baseline_wf_zf(cfg), args.out, "baseline.json")
    return EXIT_OK


def _cmd_sweep(args):
    cfg = driver.ExperimentConfig.from_file(args.config)
    axis = args.axis or cfg.sweep_axis
    lo = args.start if args.start is not None else cfg.sweep_from
    hi = args.stop if args.stop is not None else cfg.sweep_to
    k = args.points if args.points is not None else cfg.sweep_points
    if lo is None or hi is None:
        raise ConfigError("sweep needs --from and --to (or sweep_from/sweep_to in the config)")
    grid = list(np.linspace(lo, hi, k)) if k > 0 else []
    # transmit-power sweep bounds are given in dBm, on the command line and in files
    values = [driver.dbm_to_watt(v) for v in grid] if axis == "P_T" else grid
    rows = driver.sweep(cfg, axis, values, workers=args.workers)
    text = driver.rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_fit(args):
    samples = read_samples(args.samples)
    try:
        res = fit_logistic(samples, args.rs)
    except FitDiverged as exc:
        print(f"fit did not converge: {exc}", file=sys.stderr)
        return EXIT_ERROR
    ModelBank([res.model]).to_csv(args.out)
    m = res.model
    print(f"R_s={m.R_s:g} Ds_hat={m.Ds_hat:.6g} Dc_hat={m.Dc_hat:.6g} E1={m.E1:.6g} E2={m.E2:.6g} "
          f"rmse={res.rmse:.3g}{'' if res.identifiable else ' (flat curve)'}")
    return EXIT_OK


def _cmd_check(args):
    cfg = driver.ExperimentConfig.from_file(args.config)
    ok = True
    for c in driver.self_check(cfg):
        ok &= c.passed
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: error={c.error:.3e} threshold={c.threshold:.1e} {c.detail}")
    return EXIT_OK if ok else EXIT_ERROR


def build_parser():
    p = argparse.ArgumentParser(prog="issc", description="Joint semantic-link and sensing beam design toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimise codec, coding rate and beams")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="directory for report.json (stdout when absent)")
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("sweep", help="sweep one parameter for both schemes")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", choices=driver.SWEEP_AXES)
    s.add_argument("--from", dest="start", type=float, help="first grid value (P_T in dBm)")
    s.add_argument("--to", dest="stop", type=float, help="last grid value (P_T in dBm)")
    s.add_argument("--points", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--out", help="CSV path (stdout when absent)")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("baseline", help="zero-forcing water-filling benchmark")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_baseline)

    s = sub.add_parser("fit", help="fit a logistic distortion model to samples")
    s.add_argument("--samples", required=True, help="CSV with header rho_b,D_o")
    s.add_argument("--rs", type=float, required=True, help="source rate of the codec")
    s.add_argument("--out", required=True, help="bank CSV to write")
    s.set_defaults(func=_cmd_fit)

    s = sub.add_parser("check", help="run numerical self checks")
    s.add_argument("--config", required=True)
    s.set_defaults(func=_cmd_check)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INFEASIBLE as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IsscError, ConfigError, FitDataInsufficient, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
