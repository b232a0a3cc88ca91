"""Executable curvature inequalities evaluated over flow traces.

Every check returns a :class:`CheckReport`.  Margins are signed so that
negative means violated; a check passes iff ``worst_margin >= -tolerance_used``.
When a hypothesis of the underlying inequality fails, the report has status
``"inapplicable"`` (``passed`` False, ``worst_margin`` NaN) rather than
``"fail"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, ParameterError, PreconditionError
from .flow import FlowTrace
from .homogeneous import BergerState, berger_curvature
from .warped import (CurvatureField, check_curvature_cone, distance_and_balls, laplacian_radial,
                     spectral_curvature)

PASS, FAIL, INAPPLICABLE = "pass", "fail", "inapplicable"


@dataclass(frozen=True)
class CheckReport:
    check_name: str
    status: str
    passed: bool
    worst_margin: float
    worst_location: tuple
    samples_checked: int
    tolerance_used: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "check_name": self.check_name, "status": self.status, "passed": self.passed,
            "worst_margin": self.worst_margin, "worst_location": list(self.worst_location),
            "samples_checked": self.samples_checked, "tolerance_used": self.tolerance_used,
            "details": self.details,
        }


def _report(name, worst, loc, count, tol, **details) -> CheckReport:
    ok = bool(worst >= -tol)
    return CheckReport(name, PASS if ok else FAIL, ok, float(worst), loc, int(count), float(tol),
                       details)


def _inapplicable(name, reason, tol=0.0, **details) -> CheckReport:
    details["reason"] = reason
    return CheckReport(name, INAPPLICABLE, False, float("nan"), (float("nan"), -1), 0,
                       float(tol), details)


# ------------------------------------------------------------- comparisons

def blowup_time(n: int) -> float:
    return 1.0 / (2.0 * (n - 1))


def rho(n: int, t):
    """Scalar curvature ``n(n-1)/(1-2(n-1)t)`` of the shrinking round sphere."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("rho is defined for t >= 0")
    d = 1.0 - 2.0 * (n - 1) * t_arr
    if np.any(d <= 0):
        raise DomainError(f"t at or past the blow-up time {blowup_time(n)}", blowup_time(n))
    out = n * (n - 1) / d
    return float(out) if out.ndim == 0 else out


def ode_comparison(R0: float, t0: float, t: float, n: int) -> float:
    """Solution of ``R' = (2/n) R^2`` with ``R(t0) = R0``, evaluated at ``t``."""
    if not R0 > 0:
        raise DomainError("R0 must be positive")
    if t < t0:
        raise DomainError("t must not precede t0")
    tb = t0 + n / (2.0 * R0)
    d = 1.0 - (2.0 / n) * R0 * (t - t0)
    if not d > 0:
        raise DomainError(f"comparison solution blows up at t = {tb}", tb)
    return R0 / d


def _argmin_sample(trace: FlowTrace, i: int) -> int:
    if trace.kind == "warped":
        return int(np.argmin(trace.fields[i].R))
    return 0


def check_max_principle(trace: FlowTrace, tol: float = 1e-3,
                        norm_tol: float = 1e-6) -> CheckReport:
    """``min R(t) >= rho(t)`` and the ODE comparison chain between all sample pairs.

    Margins are relative: ``min R(t) / bound - 1``.
    """
    n = trace.n
    r0 = n * (n - 1.0)
    if abs(trace.times[0]) > 0 or abs(trace.r_min[0] - r0) > norm_tol * r0:
        raise PreconditionError(
            f"trace must start at t=0 with min R = {r0:g} (got {trace.r_min[0]:.12g} "
            f"at t={trace.times[0]:g})")
    t = np.asarray(trace.times)
    r = np.asarray(trace.r_min)
    d = 1.0 - 2.0 * (n - 1) * t
    bound = np.where(d > 0, r0 / np.where(d > 0, d, 1.0), np.inf)
    m_rho = r / bound - 1.0
    # chain over all pairs t0 < t
    i, j = np.triu_indices(t.size, k=1)
    dd = 1.0 - (2.0 / n) * r[i] * (t[j] - t[i])
    comp = np.where(dd > 0, r[i] / np.where(dd > 0, dd, 1.0), np.inf)
    m_chain = r[j] / comp - 1.0
    k_rho = int(np.argmin(m_rho))
    worst_rho = float(m_rho[k_rho])
    if m_chain.size:
        k_ch = int(np.argmin(m_chain))
        worst_chain = float(m_chain[k_ch])
        chain_pair = (float(t[i[k_ch]]), float(t[j[k_ch]]))
    else:
        worst_chain, chain_pair = np.inf, None
    if worst_chain < worst_rho:
        worst, idx = worst_chain, int(j[k_ch])
    else:
        worst, idx = worst_rho, k_rho
    loc = (float(t[idx]), _argmin_sample(trace, idx))
    return _report("max_principle", worst, loc, t.size + m_chain.size, tol,
                   worst_rho_margin=worst_rho, worst_rho_time=float(t[k_rho]),
                   worst_chain_margin=worst_chain, worst_chain_pair=chain_pair)


def check_extinction_bound(trace: FlowTrace, tol: float = 1e-3) -> CheckReport:
    """``T <= 1/(2(n-1))`` for an instance normalized to ``min R(0) = n(n-1)``."""
    tb = blowup_time(trace.n)
    margin = tb - trace.t_extinct_est
    return _report("extinction_bound", margin, (trace.t_last, -1), 1, tol,
                   t_extinct_est=trace.t_extinct_est, t_lo=trace.t_lo, t_hi=trace.t_hi,
                   bound=tb)


# -------------------------------------------------------- scalar evolution

def default_residual_model(n: int, ds: float, dt: float, R: float) -> float:
    """Error allowance for the scalar-evolution residual.

    Centered time differences err by ``dt^2 R'''/6``, which for the round
    solution is ``8 R^4 dt^2 / n^3``; the spatial part is 4th order in the
    arclength spacing.  Both carry a safety factor of 4.
    """
    return 4.0 * (8.0 * R ** 4 * dt ** 2 / n ** 3 + R ** 4 * ds ** 4)


def check_scalar_evolution(trace: FlowTrace, base: int | None = None, tol_model=None,
                           t_max: float | None = None, ineq_tol: float = 1e-9) -> CheckReport:
    """Residual of ``dR/dt = Delta R + 2|Ric|^2`` at a tracked base point.

    ``base`` is a grid node of the arclength-gauge grid (default: the middle
    node).  ``dR/dt`` is the material derivative: a centered difference at the
    fixed node plus the gauge velocity times ``dR/dsigma``.  Each sample with
    two equally spaced neighbours contributes; ``t_max`` truncates the window.
    Curvatures come from :func:`spectral_curvature`: ``R`` computed by finite
    differences carries rounding noise of order ``eps/h^2``, which the
    Laplacian would amplify by another ``h^-2``.
    The margin of a sample is ``tol_model - |residual|``; the inequality form
    ``2(|Ric|^2 - R^2/n) >= -ineq_tol R^2`` is checked as well.
    """
    if trace.kind != "warped":
        raise ParameterError("scalar evolution check needs a warped trace")
    model = tol_model or default_residual_model
    t = np.asarray(trace.times)
    n = trace.n
    cache = {}

    def fld(k):
        if k not in cache:
            cache[k] = spectral_curvature(trace.states[k])
        return cache[k]

    m = trace.states[0].m
    j = m // 2 if base is None else int(base)
    if not 0 <= j < m:
        raise ParameterError(f"base node {j} outside the grid")
    res_list, worst, loc, count = [], np.inf, (np.nan, j), 0
    ineq_worst = np.inf
    h = 1.0 / (m - 1)
    for k in range(1, t.size - 1):
        if t_max is not None and t[k] > t_max:
            break
        dt1, dt2 = t[k] - t[k - 1], t[k + 1] - t[k]
        if abs(dt1 - dt2) > 1e-9 * dt1:
            continue
        p = trace.states[k]
        f = fld(k)
        L = float(p.phi[0])
        v = K.gauge_rhs(np.asarray(p.psi), L, h, n)[2]
        dR_sig = K.d1(np.asarray(f.R), h, False)
        dRdt = (fld(k + 1).R[j] - fld(k - 1).R[j]) / (2 * dt1) + v[j] * dR_sig[j]
        lap = laplacian_radial(p, f.R)[j]
        ric2 = f.ric_norm_sq[j]
        Rj = f.R[j]
        res = dRdt - lap - 2 * ric2
        allow = model(n, L * h, dt1, float(np.max(np.abs(f.R))))
        ineq = 2 * (ric2 - Rj ** 2 / n)
        ineq_worst = min(ineq_worst, ineq / Rj ** 2)
        margin = min(allow - abs(res), (ineq + ineq_tol * Rj ** 2))
        res_list.append(float(res))
        count += 1
        if margin < worst:
            worst, loc = margin, (float(t[k]), j)
    if count == 0:
        raise PreconditionError("trace cadence gives no centered time differences")
    res_arr = np.abs(res_list)
    return _report("scalar_evolution", worst, loc, count, 0.0,
                   residual_max=float(res_arr.max()), residuals=[float(x) for x in res_list],
                   inequality_min_relative=float(ineq_worst), base_node=j)


# ---------------------------------------------------------------- Harnack

def harnack_log_factor(R_y_t1, R_x_t2, d, t1, t2):
    """``log(RHS/LHS)`` of the Harnack inequality (positive means slack)."""
    return (np.log(t2 / t1) + d ** 2 / (2.0 * (t2 - t1)) + np.log(R_x_t2) - np.log(R_y_t1))


def harnack_factor(R_y_t1, R_x_t2, d, t1, t2):
    """Ratio ``RHS / LHS``; the inequality holds iff this is at least 1."""
    return np.exp(np.minimum(harnack_log_factor(R_y_t1, R_x_t2, d, t1, t2), 700.0))


def _cone_all(trace: FlowTrace) -> tuple[bool, float, float]:
    if trace.kind == "warped":
        margins = [check_curvature_cone(f).margin for f in trace.fields]
    else:
        margins = [berger_curvature(b).sec_min for b in trace.states]
    k = int(np.argmin(margins))
    return bool(margins[k] > 0), float(margins[k]), float(trace.times[k])


def _values_at_material(trace: FlowTrace, i: int, labels, values) -> np.ndarray:
    grid = np.linspace(0.0, 1.0, values.size)
    return np.interp(trace.material[i][labels], grid, values)


def check_harnack(trace: FlowTrace, sample_budget: int = 10_000, seed: int = 0,
                  tol: float = 1e-2) -> CheckReport:
    """Harnack inequality on seeded random quadruples ``(x, y, t1, t2)``.

    Points are material grid points; the distance between two points on the
    same meridian is the arclength between them.  For Berger traces the
    curvature is constant in space and ``d = 0`` is used (the strictest case).
    """
    name = "harnack"
    ok, margin, tbad = _cone_all(trace)
    if not ok:
        return _inapplicable(name, "curvature cone fails", tol / (1 + tol),
                             cone_margin=margin, time=tbad)
    t = np.asarray(trace.times)
    valid = np.flatnonzero(t > 0)
    if valid.size < 2:
        raise PreconditionError("Harnack check needs two positive sample times")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, valid.size, sample_budget)
    b = rng.integers(0, valid.size - 1, sample_budget)
    b = b + (b >= a)
    i1 = valid[np.minimum(a, b)]
    i2 = valid[np.maximum(a, b)]
    if trace.kind == "warped":
        m = trace.states[0].m
        x = rng.integers(0, m, sample_budget)
        y = rng.integers(0, m, sample_budget)
        R = np.array([f.R for f in trace.fields])
        mat = trace.material
        grid = np.linspace(0.0, 1.0, m)
        Ry = np.empty(sample_budget)
        Rx = np.empty(sample_budget)
        d = np.empty(sample_budget)
        for q in range(sample_budget):
            p1, p2 = i1[q], i2[q]
            sx1, sy1 = mat[p1][x[q]], mat[p1][y[q]]
            Ry[q] = np.interp(sy1, grid, R[p1])
            Rx[q] = np.interp(mat[p2][x[q]], grid, R[p2])
            d[q] = trace.diam[p1] * abs(sx1 - sy1)
    else:
        x = y = np.zeros(sample_budget, dtype=int)
        Ry = np.asarray(trace.r_min)[i1]
        Rx = np.asarray(trace.r_min)[i2]
        d = np.zeros(sample_budget)
    logf = harnack_log_factor(Ry, Rx, d, t[i1], t[i2])
    k = int(np.argmin(logf))
    factor = float(np.exp(min(logf[k], 700.0)))
    return _report(name, factor - 1.0, (float(t[i1[k]]), int(y[k])), sample_budget,
                   tol / (1 + tol), worst_factor=factor, seed=int(seed),
                   worst_quadruple={"x": int(x[k]), "y": int(y[k]), "t1": float(t[i1[k]]),
                                    "t2": float(t[i2[k]]), "d": float(d[k])})


# --------------------------------------------------------- |Rm| <= R

def _rm_fields(obj):
    if isinstance(obj, FlowTrace):
        if obj.kind == "warped":
            return list(zip(obj.times, obj.fields))
        out = []
        for t, b in zip(obj.times, obj.states):
            c = berger_curvature(b)
            out.append((t, (c.sec_min, c.sec_max, c.R)))
        return out
    if isinstance(obj, CurvatureField):
        return [(obj.time, obj)]
    return [(f.time, f) for f in obj]


def check_rm_le_scalar(trace, rel: float = 1e-8) -> CheckReport:
    """``|Rm| <= R`` at every sample (accepts a trace or curvature fields)."""
    name = "rm_le_scalar"
    items = _rm_fields(trace)
    worst, loc, count = np.inf, (np.nan, -1), 0
    for t, f in items:
        if isinstance(f, CurvatureField):
            cone = check_curvature_cone(f)
            if not cone.ok:
                return _inapplicable(name, "curvature cone fails", rel, cone_margin=cone.margin,
                                     time=float(t))
            marg = (f.R - f.rm_norm) / np.abs(f.R)
            j = int(np.argmin(marg))
            val, count = float(marg[j]), count + f.R.size
        else:
            smin, smax, R = f
            if not smin > 0:
                return _inapplicable(name, "curvature cone fails", rel, cone_margin=smin,
                                     time=float(t))
            val, j, count = (R - max(abs(smin), abs(smax))) / abs(R), 0, count + 1
        if val < worst:
            worst, loc = val, (float(t), j)
    return _report(name, worst, loc, count, rel)


# ------------------------------------------------- backward propagation

def check_backward_propagation(trace: FlowTrace, t1: float, t2: float, theta: float, A: float,
                               pole: str = "north", delta: float = 1.0) -> CheckReport:
    """Search ``B(pole, t1, A sqrt(t2-t1))`` for ``y`` with ``R(y,t1) < rho(t1) + theta``.

    The margin is ``rho(t1) + theta - min R`` over the ball, so a witness exists
    iff the margin is positive.
    """
    name = "backward_propagation"
    n = trace.n
    if not (t2 / 2 < t1 < t2):
        raise PreconditionError("need t2/2 < t1 < t2")
    try:
        i1, i2 = trace.index_of(t1), trace.index_of(t2)
    except ParameterError as exc:
        raise PreconditionError(str(exc)) from exc
    rho1, rho2 = rho(n, t1), rho(n, t2)
    radius = A * np.sqrt(t2 - t1)
    if trace.kind == "warped":
        j = 0 if pole == "north" else -1
        R2 = float(trace.fields[i2].R[j])
    else:
        R2 = float(trace.r_min[i2])
    if not R2 < rho2 + delta:
        return _inapplicable(name, "R at the center is not below rho(t2) + delta",
                             R_center_t2=R2, threshold=rho2 + delta)
    if trace.kind == "warped":
        p = trace.states[i1]
        s = p.arclength
        ball = distance_and_balls(p, 0.0 if pole == "north" else p.length, radius)
        inside = np.flatnonzero(ball.contains(s))
        R1 = trace.fields[i1].R[inside]
        k = int(np.argmin(R1))
        y, Rmin = int(inside[k]), float(R1[k])
        count = inside.size
    else:
        y, Rmin, count = 0, float(trace.r_min[i1]), 1
    margin = rho1 + theta - Rmin
    return _report(name, margin, (float(t1), y), count, 0.0, witness=y, R_witness=Rmin,
                   threshold=rho1 + theta, radius=float(radius), R_center_t2=R2)


# ------------------------------------------------------------- pinching

def pinching_deficit(field, t: float) -> float:
    """``max |K - rho(t)/(n(n-1))|`` over samples and planes.

    ``field`` is a :class:`CurvatureField` or a :class:`BergerState`.
    """
    if isinstance(field, BergerState):
        c = berger_curvature(field)
        target = rho(3, t) / 6.0
        return float(max(abs(c.sec_min - target), abs(c.sec_max - target)))
    n = field.n
    target = rho(n, t) / (n * (n - 1))
    return float(max(np.max(np.abs(field.k_rad - target)), np.max(np.abs(field.k_sph - target))))


# ---------------------------------------------------- distance distortion

def check_distance_distortion(trace: FlowTrace, pairs=None, n_pairs: int = 64, seed: int = 0,
                              tol: float = 1e-10) -> CheckReport:
    """Distances between material points never increase; also fits ``C''``.

    The margin of a pair at step ``k`` is ``(d_{k-1} - d_k) / d_0``.  The
    reported ``c_fit`` is the smallest ``C`` with ``d_0 - d_t <= C sqrt(t)``.
    """
    name = "distance_distortion"
    if trace.kind != "warped":
        return _inapplicable(name, "distances are only tracked for warped traces", tol)
    ok, margin, tbad = _cone_all(trace)
    if not ok:
        return _inapplicable(name, "curvature cone fails", tol, cone_margin=margin, time=tbad)
    m = trace.states[0].m
    if pairs is None:
        rng = np.random.default_rng(seed)
        a = rng.integers(0, m, n_pairs)
        b = rng.integers(0, m, n_pairs)
        pairs = [(0, m - 1)] + [(int(u), int(v)) for u, v in zip(a, b) if u != v]
    pairs = np.asarray(pairs, dtype=int)
    mat = trace.material
    d = trace.diam[:, None] * np.abs(mat[:, pairs[:, 0]] - mat[:, pairs[:, 1]])
    marg = (d[:-1] - d[1:]) / d[0]
    k, q = np.unravel_index(int(np.argmin(marg)), marg.shape)
    t = np.asarray(trace.times)
    pos = t > t[0]
    c_fit = float(np.max((d[0] - d[pos]) / np.sqrt(t[pos, None] - t[0]))) if pos.any() else 0.0
    return _report(name, float(marg[k, q]), (float(t[k + 1]), int(pairs[q, 0])),
                   marg.size, tol, c_fit=c_fit, pairs=len(pairs))
