"""Cutoff barrier ``u = sqrt(t2 - t) * phi(alpha d^2 / (t2 - t))`` around a pole.

``phi`` is piecewise polynomial with C^2 joins at r = 1, 2, 3:

* ``phi = 1`` on [0, 1];
* a quintic Hermite transition on [1, 2];
* the convex tail ``v w^3 (2 - w)`` with ``w = 3 - r`` on [2, 3];
* ``phi = 0`` beyond 3.

The shoulder height ``v = phi(2)`` is ``1 - sharpness``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.polynomial import polynomial as P

from . import _kernels as K
from .checks import CheckReport, _inapplicable, _report
from .errors import (ConstructionError, GeometryError, InfeasibleError, ParameterError,
                     PreconditionError)
from .flow import FlowTrace
from .warped import WarpedProfile, check_curvature_cone, laplacian_radial

JOINS = (1.0, 2.0, 3.0)
BUMP_GRID = 10_000
ALPHA_GRID = 10_000
EDGE = 1e-3  # relative safety margin used by the constant selectors


def _hermite5(a, b) -> np.ndarray:
    """Quintic on u in [0, 1] with value/slope/curvature ``a`` at 0 and ``b`` at 1."""
    M = np.array([[1, 0, 0, 0, 0, 0], [0, 1, 0, 0, 0, 0], [0, 0, 2, 0, 0, 0],
                  [1, 1, 1, 1, 1, 1], [0, 1, 2, 3, 4, 5], [0, 0, 2, 6, 12, 20]], float)
    return np.linalg.solve(M, np.array([*a, *b], dtype=float))


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """Smooth cutoff ``phi`` with exact first and second derivatives."""

    sharpness: float
    transition: np.ndarray  # quintic in u = r - 1 on [1, 2]
    tail: np.ndarray  # polynomial in w = 3 - r on [2, 3]
    margins: dict = field(default_factory=dict)

    @property
    def shoulder(self) -> float:
        return 1.0 - self.sharpness

    def _eval(self, r, order: int) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        if order == 0:
            out[r <= 1.0] = 1.0
        mid = (r > 1.0) & (r <= 2.0)
        out[mid] = P.polyval(r[mid] - 1.0, P.polyder(self.transition, order) if order
                             else self.transition)
        end = (r > 2.0) & (r < 3.0)
        tail = P.polyder(self.tail, order) if order else self.tail
        out[end] = (-1.0) ** order * P.polyval(3.0 - r[end], tail)
        return out

    def phi(self, r) -> np.ndarray:
        return self._eval(r, 0)

    def dphi(self, r) -> np.ndarray:
        return self._eval(r, 1)

    def d2phi(self, r) -> np.ndarray:
        return self._eval(r, 2)


def bump_margins(b: BumpProfile, npts: int = BUMP_GRID) -> dict:
    """Signed margins (nonnegative = holds) of the five shape properties."""
    r = np.linspace(0.0, 4.0, npts)
    ph, d1, d2 = b.phi(r), b.dphi(r), b.d2phi(r)
    m = {
        "phi == 1 on [0,1]": -float(np.max(np.abs(ph[r <= 1] - 1.0))),
        "phi >= 1/2 on [0,2]": float(np.min(ph[r <= 2] - 0.5)),
        "phi' <= 0 on [0,inf)": -float(np.max(d1)),
        "phi'' >= 0 on [2,inf)": float(np.min(d2[r >= 2])),
        "phi == 0 on [3,inf)": -float(np.max(np.abs(ph[r >= 3]))),
    }
    jumps = 0.0
    for x in JOINS:
        lo, hi = np.nextafter(x, -np.inf), np.nextafter(x, np.inf)
        for f in (b.phi, b.dphi, b.d2phi):
            jumps = max(jumps, abs(float(f(hi)) - float(f(lo))))
    m["C2 joins"] = -jumps
    return m


def make_bump(sharpness: float = 0.45, tol: float = 1e-12) -> BumpProfile:
    """Build the cutoff with shoulder ``phi(2) = 1 - sharpness``.

    ``sharpness`` must lie in (0, 1/2]; values below about 0.44 make the
    transition overshoot and are rejected by the monotonicity check.
    """
    if not (0.0 < sharpness <= 0.5):
        raise ParameterError(f"sharpness must lie in (0, 0.5], got {sharpness}")
    v = 1.0 - sharpness
    tail = np.array([0.0, 0.0, 0.0, 2.0 * v, -v])  # v w^3 (2 - w)
    t0 = P.polyval(1.0, tail)
    t1 = -P.polyval(1.0, P.polyder(tail))
    t2 = P.polyval(1.0, P.polyder(tail, 2))
    trans = _hermite5((1.0, 0.0, 0.0), (t0, t1, t2))
    b = BumpProfile(float(sharpness), trans, tail)
    margins = bump_margins(b)
    for name, val in margins.items():
        jt = 1e-8 if name == "C2 joins" else tol
        if val < -jt:
            raise ConstructionError(f"bump violates '{name}' (margin {val:.3g})")
    object.__setattr__(b, "margins", margins)
    return b


# ------------------------------------------------------------ constants

def bump_inequality(b: BumpProfile, alpha: float, n: int, r) -> tuple[np.ndarray, np.ndarray]:
    """Left and right sides of the bump differential inequality at ``r``."""
    r = np.asarray(r, dtype=float)
    ph, d1, d2 = b.phi(r), b.dphi(r), b.d2phi(r)
    lhs = -0.5 * ph + 0.5 * r * d1
    rhs = alpha * (4.0 * r * d2 + 2.0 * n * d1)
    return lhs, rhs


def alpha_margin(b: BumpProfile, alpha: float, n: int, npts: int = ALPHA_GRID) -> float:
    """``min (rhs - lhs)`` over a uniform grid on [0, 3]."""
    r = np.linspace(0.0, 3.0, npts)
    lhs, rhs = bump_inequality(b, alpha, n, r)
    return float(np.min(rhs - lhs))


def select_alpha(b: BumpProfile, n: int, npts: int = ALPHA_GRID, factor: float = 0.9,
                 max_tries: int = 400) -> float:
    """Largest ``alpha`` on the geometric grid below ``1/(2n)`` satisfying the inequality.

    Feasibility is required both on ``npts`` points and at ten times that
    density.  On [0, 2] the left side must not exceed -1/4.
    """
    if int(n) != n or n < 3:
        raise ParameterError(f"dimension must be an integer >= 3, got {n}")
    r02 = np.linspace(0.0, 2.0, npts)
    lhs02 = bump_inequality(b, 0.0, n, r02)[0]
    if np.max(lhs02) > -0.25 + 1e-12:
        raise InfeasibleError(f"left side exceeds -1/4 on [0,2] (max {np.max(lhs02):.6g})")
    alpha = (1.0 - EDGE) / (2.0 * n)
    for _ in range(max_tries):
        if alpha_margin(b, alpha, n, npts) >= 0 and alpha_margin(b, alpha, n, 10 * npts) >= 0:
            return float(alpha)
        alpha *= factor
    raise InfeasibleError("no feasible alpha on the search grid")


def select_A(alpha: float) -> float:
    """Smallest admissible ``A`` (``alpha A^2 > 3``) times ``1 + 1e-3``."""
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    A = np.sqrt(3.0 / alpha) * (1.0 + EDGE)
    assert alpha * A * A > 3.0 and A > 1.0
    return float(A)


def select_t1(K: float, t2: float) -> float:
    """Start time with ``t2/2 < t1 < t2`` and ``2 K (t2 - t1) < 1/2``."""
    if not (K > 0 and t2 > 0):
        raise ParameterError("K and t2 must be positive")
    t1 = max(t2 / 2.0 * (1.0 + EDGE), t2 - (1.0 - EDGE) / (8.0 * K))
    assert t2 / 2.0 < t1 < t2 and 2.0 * K * (t2 - t1) < 0.5
    return float(t1)


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    """All constants of the barrier, validated on construction."""

    n: int
    t2: float
    alpha: float
    A: float
    K: float
    t1: float
    bump: BumpProfile
    center: str = "north"

    def __post_init__(self):
        n = self.n
        if not (0.0 < self.alpha < 1.0):
            raise ParameterError("alpha must lie in (0, 1)")
        if not self.alpha < 1.0 / (2 * n):
            raise ParameterError(f"alpha = {self.alpha} is not below 1/(2n) = {1 / (2 * n)}")
        if not self.A > 1.0:
            raise ParameterError("A must exceed 1")
        if not self.alpha * self.A ** 2 > 3.0:
            raise ParameterError(f"alpha A^2 = {self.alpha * self.A ** 2} is not above 3")
        if not self.K > 0:
            raise ParameterError("K must be positive")
        if not (self.t2 / 2.0 < self.t1 < self.t2):
            raise ParameterError("need t2/2 < t1 < t2")
        if not 2.0 * self.K * (self.t2 - self.t1) < 0.5:
            raise ParameterError(f"2 K (t2 - t1) = {2 * self.K * (self.t2 - self.t1)} is not below 1/2")
        if self.center not in ("north", "south"):
            raise ParameterError("center must be 'north' or 'south'")

    def constraints(self) -> dict:
        return {
            "alpha < 1/(2n)": 1.0 / (2 * self.n) - self.alpha,
            "alpha A^2 > 3": self.alpha * self.A ** 2 - 3.0,
            "2 K tau < 1/2": 0.5 - 2.0 * self.K * (self.t2 - self.t1),
            "t1 > t2/2": self.t1 - self.t2 / 2.0,
        }


def _center_distance(p: WarpedProfile, center: str) -> np.ndarray:
    s = p.arclength
    return s if center == "north" else s[-1] - s


def measure_K(trace: FlowTrace, t2: float, A: float, t_from: float | None = None,
              center: str = "north") -> float:
    """Largest ``|Rm|`` over ``B(center, t, A sqrt(t2 - t))`` for samples in ``[t_from, t2)``."""
    if trace.kind != "warped":
        raise ParameterError("barrier constants need a warped trace")
    lo = t2 / 2.0 if t_from is None else t_from
    worst = 0.0
    found = False
    for t, p, f in zip(trace.times, trace.states, trace.fields):
        if t < lo - 1e-12 or t >= t2:
            continue
        d = _center_distance(p, center)
        inside = d < A * np.sqrt(t2 - t)
        worst = max(worst, float(np.max(f.rm_norm[inside])))
        found = True
    if not found:
        raise PreconditionError(f"trace has no samples in [{lo}, {t2})")
    return worst


def build_barrier_spec(trace: FlowTrace, t2: float, bump: BumpProfile | None = None,
                       safety: float = 1.1, center: str = "north") -> BarrierSpec:
    """Select alpha, A, K and t1 for a checkpoint ``t2`` of ``trace``.

    ``K`` is measured over ``[t2/2, t2)``, which contains every admissible
    ``[t1, t2)``, times ``safety``.
    """
    bump = bump or make_bump()
    n = trace.n
    alpha = select_alpha(bump, n)
    A = select_A(alpha)
    K = safety * measure_K(trace, t2, A, center=center)
    t1 = select_t1(K, t2)
    return BarrierSpec(n, float(t2), alpha, A, K, t1, bump, center)


def _u(spec: BarrierSpec, p: WarpedProfile, t: float):
    tau = spec.t2 - t
    d = _center_distance(p, spec.center)
    r = spec.alpha * d ** 2 / tau
    return np.sqrt(tau) * spec.bump.phi(r), r, d, tau


def eval_barrier(spec: BarrierSpec, state: WarpedProfile) -> np.ndarray:
    """Barrier values at every sample of ``state`` (at its own time stamp)."""
    t = state.time
    if not (spec.t1 - 1e-12 <= t < spec.t2):
        raise ParameterError(f"time {t} outside [t1, t2) = [{spec.t1}, {spec.t2})")
    radius = spec.A * np.sqrt(spec.t2 - t)
    if not radius < state.length:
        raise GeometryError(f"support radius {radius:.6g} reaches the diameter {state.length:.6g}")
    return _u(spec, state, t)[0]


def _straddles(r_lo, r_hi) -> np.ndarray:
    bad = np.zeros(r_lo.shape, dtype=bool)
    for x in JOINS:
        bad |= (r_lo <= x) & (r_hi >= x)
    return bad


def barrier_excess(spec: BarrierSpec, trace: FlowTrace, k: int, collar: int = 1):
    """``du/dt - Delta u`` at every node of sample ``k`` of ``trace``.

    Returns ``(excess, r, ok)`` where ``r = alpha d^2 / tau`` and ``ok`` marks
    the nodes inside the open support whose space-time stencil, widened by
    ``collar`` cells, stays clear of the joins.  Samples ``k - 1`` and
    ``k + 1`` must be equally spaced around ``k`` and precede ``t2``.
    """
    t = trace.times
    p = trace.states[k]
    if not spec.A * np.sqrt(spec.t2 - t[k]) < p.length:
        raise GeometryError("barrier support reaches the diameter")
    h = p.h
    dt = t[k + 1] - t[k]
    u, r, d, tau = _u(spec, p, t[k])
    u_prev, r_prev = _u(spec, trace.states[k - 1], t[k - 1])[:2]
    u_next, r_next = _u(spec, trace.states[k + 1], t[k + 1])[:2]
    L = float(p.phi[0])
    v = K.gauge_rhs(np.asarray(p.psi), L, h, p.n)[2]
    sgn = 1.0 if spec.center == "north" else -1.0
    du_dsig = np.sqrt(tau) * spec.bump.dphi(r) * 2.0 * spec.alpha * d * L / tau * sgn
    u_t = (u_next - u_prev) / (2 * dt) + v * du_dsig
    lap = laplacian_radial(p, u)
    # r range seen by the space-time stencil; even reflection across the poles
    half = 2 + collar
    win = sliding_window_view(np.pad(r, half, mode="reflect"), 2 * half + 1)
    r_lo = np.minimum(win.min(axis=1), np.minimum(r_prev, r_next))
    r_hi = np.maximum(win.max(axis=1), np.maximum(r_prev, r_next))
    ok = (r < 3.0) & ~_straddles(r_lo, r_hi)
    return u_t - lap, r, ok


def verify_subsolution(spec: BarrierSpec, trace: FlowTrace, collar: int = 1, tol: float = 1e-6,
                       r_window: tuple | None = None) -> CheckReport:
    """Check ``du/dt <= Delta u`` on the open support along ``trace``.

    ``du/dt`` is a centered difference at fixed grid nodes plus the gauge
    transport term; ``Delta u`` comes from :func:`laplacian_radial`.  Nodes
    whose finite-difference stencils, widened by ``collar`` cells, meet a join
    of the bump (r = 1, 2, 3) are skipped, as are nodes outside the support.
    ``r_window`` optionally restricts the checked nodes to ``r`` in a range.
    The exact margin tends to zero at the support edge, so the unrestricted
    worst margin depends on how close the outermost node lies to ``r = 3``;
    a window such as ``(0, 2.9)`` gives a grid-convergent value.

    The margin is ``Delta u - du/dt`` (positive = strict subsolution);
    ``details["max_excess"]`` is the largest ``du/dt - Delta u``.
    """
    name = "subsolution"
    if trace.kind != "warped":
        raise ParameterError("barrier verification needs a warped trace")
    t = np.asarray(trace.times)
    ks = [k for k in range(1, t.size - 1)
          if spec.t1 - 1e-12 <= t[k - 1] and t[k + 1] < spec.t2
          and abs((t[k + 1] - t[k]) - (t[k] - t[k - 1])) <= 1e-9 * (t[k] - t[k - 1])]
    if not ks:
        return _inapplicable(name, "no equally spaced sample triples inside [t1, t2)", tol)
    measured = measure_K(trace, spec.t2, spec.A, t_from=spec.t1, center=spec.center)
    if measured > spec.K:
        return _inapplicable(name, "curvature exceeds K on the barrier window", tol,
                             K=spec.K, measured_K=measured)
    for k in ks:
        if not check_curvature_cone(trace.fields[k]).ok:
            return _inapplicable(name, "curvature cone fails", tol, time=float(t[k]))
    worst, loc, count = np.inf, (np.nan, -1), 0
    cap_checked = 0
    for k in ks:
        excess, r, ok = barrier_excess(spec, trace, k, collar)
        if r_window is not None:
            ok &= (r >= r_window[0]) & (r <= r_window[1])
        idx = np.flatnonzero(ok)
        if idx.size == 0:
            continue
        marg = -excess[idx]
        q = int(np.argmin(marg))
        count += idx.size
        cap_checked += int(np.count_nonzero(r[idx] < 1.0))
        if marg[q] < worst:
            worst, loc = float(marg[q]), (float(t[k]), int(idx[q]))
    if count == 0:
        return _inapplicable(name, "no admissible nodes in the support", tol)
    return _report(name, worst, loc, count, tol, max_excess=-worst, K=spec.K,
                   measured_K=measured, alpha=spec.alpha, A=spec.A, t1=spec.t1, t2=spec.t2,
                   times_checked=len(ks), cap_nodes=cap_checked)
