"""Rigidity sweeps over a family and check orchestration."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from . import checks as C
from .config import ExperimentConfig
from .errors import GenerationError, RicciLabError
from .families import family_eps, generate_member
from .flow import FlowTrace, estimate_extinction, run_flow
from .homogeneous import berger_c0_distance
from .warped import WarpedProfile, c0_distance_to_round

log = logging.getLogger(__name__)

CSV_COLUMNS = ("eps", "c0_dist", "T_est", "T_lo", "T_hi", "deficit", "pinch_t",
               "width_proxy_0", "status")
STATUS_OK = "ok"
STATUS_CONE = "cone_failure"
STATUS_FLOW = "flow_error"
STATUS_NO_CHECKPOINT = "extinct_before_checkpoint"

CHECKS = {
    "max_principle": C.check_max_principle,
    "extinction_bound": C.check_extinction_bound,
    "scalar_evolution": C.check_scalar_evolution,
    "harnack": C.check_harnack,
    "rm_le_scalar": C.check_rm_le_scalar,
    "distance_distortion": C.check_distance_distortion,
}
_SEEDED = ("harnack", "distance_distortion")


@dataclass(frozen=True)
class RigidityRow:
    eps: float
    c0_dist: float = math.nan
    T_est: float = math.nan
    T_lo: float = math.nan
    T_hi: float = math.nan
    deficit: float = math.nan
    pinch_t: float = math.nan
    width_proxy_0: float = math.nan
    status: str = STATUS_OK

    def values(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    reports: list = field(default_factory=list)  # one dict per member
    correlations: dict = field(default_factory=dict)

    @property
    def hard_failures(self) -> list:
        out = []
        for rep in self.reports:
            for name, r in rep.get("checks", {}).items():
                if r["status"] == C.FAIL:
                    out.append((rep["eps"], name))
            if rep.get("bracket_ok") is False:
                out.append((rep["eps"], "bracket"))
        return out


def run_checks(trace: FlowTrace, checks: dict, seed: int) -> dict:
    """Run the named checks on ``trace``; returns ``{name: CheckReport}``."""
    out = {}
    for name, params in checks.items():
        kw = dict(params)
        if name in _SEEDED:
            kw.setdefault("seed", seed)
        out[name] = CHECKS[name](trace, **kw)
    return out


def _c0(state) -> float:
    if isinstance(state, WarpedProfile):
        return c0_distance_to_round(state)
    return berger_c0_distance(state)


def _pinch(trace: FlowTrace, t: float) -> float:
    i = trace.index_of(t)
    obj = trace.fields[i] if trace.kind == "warped" else trace.states[i]
    return C.pinching_deficit(obj, t)


def run_member(config: ExperimentConfig, index: int, eps: float,
               bracket_tol: float = 1e-3) -> tuple[RigidityRow, dict]:
    """Flow one family member and summarize it; failures land in the row status."""
    n = config.n
    report = {"eps": eps, "index": index}
    try:
        state = generate_member(config, eps)
    except GenerationError as exc:
        report["error"] = str(exc)
        return RigidityRow(eps, status=STATUS_CONE), report
    c0 = _c0(state)
    tc = config.pinch_checkpoint
    try:
        trace = run_flow(state, config.flow_config(extra_times=(tc,)))
        T_est, T_lo, T_hi = estimate_extinction(trace)
    except RicciLabError as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        return RigidityRow(eps, c0_dist=c0, status=STATUS_FLOW), report
    status = STATUS_OK
    if trace.t_last >= tc and np.any(np.abs(trace.times - tc) < 1e-12):
        pinch = _pinch(trace, tc)
    else:
        pinch, status = math.nan, STATUS_NO_CHECKPOINT
    w0 = float(trace.width_proxy[0]) if n == 3 and trace.kind == "warped" else math.nan
    row = RigidityRow(eps, c0, T_est, T_lo, T_hi, 1.0 / (2 * (n - 1)) - T_est, pinch, w0, status)
    reps = run_checks(trace, config.checks, config.member_seed(index))
    report["trace"] = trace.summary()
    report["checks"] = {k: r.as_dict() for k, r in reps.items()}
    report["bracket_ok"] = bool(T_lo <= T_est <= T_hi and row.deficit >= -bracket_tol)
    return row, report


def _task(args):
    return run_member(*args)


def rank_correlations(rows) -> dict:
    """Spearman correlation of ``deficit`` and ``pinch_t`` against ``c0_dist``."""
    out = {}
    for col in ("deficit", "pinch_t"):
        pts = [(r.c0_dist, getattr(r, col)) for r in rows
               if np.isfinite(r.c0_dist) and np.isfinite(getattr(r, col))]
        if len(pts) >= 3:
            x, y = zip(*pts)
            rho = float(spearmanr(x, y).statistic)
        else:
            rho = math.nan
        out[col] = {"spearman": rho, "rows": len(pts)}
    return out


def run_rigidity_sweep(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """One :class:`RigidityRow` per family member, in ``eps`` order.

    Members run in a process pool when ``workers > 1``; the merge is ordered,
    so results do not depend on the worker count.
    """
    eps = family_eps(config)
    if not eps:
        log.warning("empty family: nothing to sweep")
        return SweepResult(config, [], [], {})
    workers = config.workers if workers is None else workers
    tasks = [(config, i, e) for i, e in enumerate(eps)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
            results = list(ex.map(_task, tasks))
    else:
        results = [_task(t) for t in tasks]
    rows = [r for r, _ in results]
    reports = [rep for _, rep in results]
    return SweepResult(config, rows, reports, rank_correlations(rows))
