"""Command-line front end.

Exit codes: 0 when every hard check passes, 1 when one fails, 2 on
configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import logging
import sys

import numpy as np

from .barrier import (alpha_margin, build_barrier_spec, bump_inequality, make_bump,
                      verify_subsolution)
from .config import CHECK_NAMES, ExperimentConfig
from .errors import ConfigError, RicciLabError
from .families import generate_family
from .flow import estimate_extinction, run_flow
from .reports import ReportError, emit_document, emit_reports
from .sweep import run_checks, run_rigidity_sweep
from .warped import WarpedProfile
from .width import width_flow_probe

log = logging.getLogger("ricci_lab")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment configuration")
    p.add_argument("--seed", type=int, help="experiment seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--grid", type=int, help="grid size m (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ricci-lab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    flow = sub.add_parser("flow", help="flow runs").add_subparsers(dest="action", required=True)
    _common(flow.add_parser("run", help="run the flow for every family member"))

    ver = sub.add_parser("verify", help="run one inequality check on every member")
    ver.add_argument("check", choices=CHECK_NAMES)
    _common(ver)

    bar = sub.add_parser("barrier", help="barrier construction").add_subparsers(
        dest="action", required=True)
    _common(bar.add_parser("verify", help="build and verify the cutoff barrier"))

    sw = sub.add_parser("sweep", help="parameter sweeps").add_subparsers(dest="action", required=True)
    _common(sw.add_parser("rigidity", help="extinction deficit versus distance to round"))

    wd = sub.add_parser("width", help="width probes").add_subparsers(dest="action", required=True)
    _common(wd.add_parser("probe", help="width proxy along the flow"))
    return ap


def load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    elif args.seed is not None:
        cfg = ExperimentConfig(seed=args.seed)
    else:
        raise ConfigError("a seed is required: pass --seed or --config")
    try:
        return cfg.with_overrides(seed=args.seed, grid=args.grid, workers=args.workers,
                                  output_dir=args.out)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _series_csv(trace) -> str:
    buf = io.StringIO()
    buf.write("t,r_min,r_max,diam,width_proxy\n")
    for row in zip(trace.times, trace.r_min, trace.r_max, trace.diam, trace.width_proxy):
        buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
    return buf.getvalue()


def cmd_flow_run(cfg: ExperimentConfig) -> int:
    members, extra = [], {}
    for i, (eps, state) in enumerate(generate_family(cfg)):
        trace = run_flow(state, cfg.flow_config())
        T = estimate_extinction(trace)
        members.append({"eps": eps, "trace": trace.summary(),
                        "T_est": T[0], "T_lo": T[1], "T_hi": T[2]})
        extra[f"series_{i:03d}.csv"] = _series_csv(trace)
        print(f"eps={eps:g}: T_est={T[0]:.10g} bracket=[{T[1]:.10g}, {T[2]:.10g}] "
              f"stop={trace.stop_reason}")
    emit_document(cfg, cfg.output_dir, "report.json",
                  {"config": cfg.to_dict(results_only=True), "members": members}, extra)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, check: str) -> int:
    params = {check: cfg.checks.get(check, {})}
    members, failed = [], False
    for i, (eps, state) in enumerate(generate_family(cfg)):
        trace = run_flow(state, cfg.flow_config())
        rep = run_checks(trace, params, cfg.member_seed(i))[check]
        failed |= rep.status == "fail"
        members.append({"eps": eps, "report": rep.as_dict()})
        print(f"eps={eps:g}: {check} {rep.status} worst_margin={rep.worst_margin:.6g}")
    emit_document(cfg, cfg.output_dir, "report.json",
                  {"config": cfg.to_dict(results_only=True), "check": check, "members": members})
    return EXIT_FAIL if failed else EXIT_OK


def cmd_barrier(cfg: ExperimentConfig) -> int:
    b = cfg.barrier
    t2, cadence = float(b["t2"]), float(b["cadence"])
    bump = make_bump(float(b["sharpness"]))
    flow_cfg = dataclasses.replace(cfg.flow_config(), max_time=t2, sample_cadence=cadence,
                                   record_width=False)
    members, failed = [], False
    for eps, state in generate_family(cfg):
        if not isinstance(state, WarpedProfile):
            raise ConfigError("barrier verification needs a rotationally symmetric family")
        trace = run_flow(state, flow_cfg)
        spec = build_barrier_spec(trace, t2, bump)
        rep = verify_subsolution(spec, trace)
        doubled = verify_subsolution(dataclasses.replace(spec, alpha=2 * spec.alpha), trace) \
            if 2 * spec.alpha < 1.0 / (2 * spec.n) else None
        r02 = np.linspace(0.0, 2.0, 10_000)
        failed |= rep.status == "fail"
        members.append({
            "eps": eps, "alpha": spec.alpha, "A": spec.A, "K": spec.K, "t1": spec.t1, "t2": t2,
            "constraints": spec.constraints(), "bump_margins": bump.margins,
            "alpha_margin_dense": alpha_margin(bump, spec.alpha, spec.n, 100_000),
            "lhs_max_on_0_2": float(np.max(bump_inequality(bump, 0.0, spec.n, r02)[0])),
            "subsolution": rep.as_dict(),
            "doubled_alpha": doubled.as_dict() if doubled else None,
        })
        print(f"eps={eps:g}: alpha={spec.alpha:.6g} A={spec.A:.6g} K={spec.K:.6g} "
              f"t1={spec.t1:.6g} subsolution {rep.status} "
              f"max_excess={rep.details.get('max_excess', float('nan')):.6g}")
    emit_document(cfg, cfg.output_dir, "report.json",
                  {"config": cfg.to_dict(results_only=True), "members": members})
    return EXIT_FAIL if failed else EXIT_OK


def cmd_sweep(cfg: ExperimentConfig) -> int:
    res = run_rigidity_sweep(cfg)
    if not res.rows:
        print("warning: empty family, writing a header-only table", file=sys.stderr)
    emit_reports(res, cfg.output_dir)
    for r in res.rows:
        print(f"eps={r.eps:g}: status={r.status} deficit={r.deficit:.6g} c0={r.c0_dist:.6g}")
    for col, c in res.correlations.items():
        print(f"spearman(c0_dist, {col}) = {c['spearman']:.4f} over {c['rows']} rows")
    return EXIT_FAIL if res.hard_failures else EXIT_OK


def cmd_width(cfg: ExperimentConfig) -> int:
    if cfg.n != 3 or cfg.family == "berger":
        raise ConfigError("width probes need an n = 3 rotationally symmetric family")
    members, failed = [], False
    for eps, state in generate_family(cfg):
        trace = run_flow(state, dataclasses.replace(cfg.flow_config(), record_width=True))
        probe = width_flow_probe(trace)
        failed |= not probe.passed
        members.append({"eps": eps, "probe": dataclasses.asdict(probe)})
        print(f"eps={eps:g}: width(0)={trace.width_proxy[0]:.10g} final={probe.final_width:.3g} "
              f"probe_min={probe.probe_min:.3g} passed={probe.passed}")
    emit_document(cfg, cfg.output_dir, "report.json",
                  {"config": cfg.to_dict(results_only=True), "members": members})
    return EXIT_FAIL if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "flow":
            return cmd_flow_run(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.check)
        if args.command == "barrier":
            return cmd_barrier(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_width(cfg)
    except (RicciLabError, ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
