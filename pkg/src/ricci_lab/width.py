"""Latitude-sphere sweepouts of rotationally symmetric S^3 metrics.

The latitude sphere at arclength ``s`` has area ``4 pi psi(s)^2`` and mean
curvature ``2 psi_s / psi``.  The largest latitude area is an upper bound for
the min-max width, and the critical latitudes are the minimal ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ParameterError, UnsupportedDimension
from .warped import WarpedProfile

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class WidthReport:
    width_proxy: float
    argmax_s: float
    minimal_slices: tuple = ()
    times: np.ndarray | None = None
    series: np.ndarray | None = None


def _require_s3(p: WarpedProfile) -> None:
    if p.n != 3:
        raise UnsupportedDimension(f"latitude sweepouts are implemented for S^3 only, got n={p.n}")


def psi_spline(p: WarpedProfile) -> CubicSpline:
    """Cubic spline of ``psi`` against arclength, odd-extended past both poles."""
    s = p.arclength
    L = s[-1]
    k = min(4, p.m - 2)
    s_ext = np.concatenate([-s[k:0:-1], s, 2 * L - s[-2:-k - 2:-1]])
    psi_ext = np.concatenate([-p.psi[k:0:-1], p.psi, -p.psi[-2:-k - 2:-1]])
    return CubicSpline(s_ext, psi_ext)


def golden_max(f, a: float, b: float, tol: float = 1e-13) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal ``f`` on ``[a, b]``."""
    g = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _max_psi(p: WarpedProfile, spl: CubicSpline) -> tuple[float, float]:
    s = p.arclength
    j = int(np.argmax(p.psi))
    best_s, best = float(s[j]), float(p.psi[j])
    if 0 < j < p.m - 1:
        x, v = golden_max(lambda u: float(spl(u)), s[j - 1], s[j + 1])
        if v > best:
            best_s, best = x, v
    return best_s, best


def sweepout_sup_area(p: WarpedProfile) -> WidthReport:
    """Largest latitude-sphere area, refined between grid points."""
    _require_s3(p)
    spl = psi_spline(p)
    s_star, psi_max = _max_psi(p, spl)
    return WidthReport(FOUR_PI * psi_max ** 2, s_star, tuple(minimal_latitude_spheres(p, spl)))


def width_proxy(p: WarpedProfile) -> float:
    """``4 pi max psi^2`` without the minimal-slice search."""
    _require_s3(p)
    return FOUR_PI * _max_psi(p, psi_spline(p))[1] ** 2


def minimal_latitude_spheres(p: WarpedProfile, spl: CubicSpline | None = None) -> list:
    """All interior latitudes with ``psi_s = 0`` as ``(s, area)`` pairs."""
    _require_s3(p)
    spl = psi_spline(p) if spl is None else spl
    dspl = spl.derivative()
    s = p.arclength
    d = dspl(s)
    out = []
    j = 1
    while j < p.m - 2:
        a, b = d[j], d[j + 1]
        if a == 0.0:
            out.append(s[j])
        elif a * b < 0:
            out.append(brentq(lambda u: float(dspl(u)), s[j], s[j + 1], xtol=1e-15, rtol=1e-15))
        j += 1
    if d[p.m - 2] == 0.0:
        out.append(s[p.m - 2])
    return [(float(u), float(FOUR_PI * spl(u) ** 2)) for u in out]


@dataclass(frozen=True)
class WidthProbe:
    """Outcome of the width checks along a flow.

    ``round_deviation`` is the largest ``|W(t) - (W(0) - 16 pi t)|`` over the
    checked window (only asserted for round traces); ``probe_min`` is the
    smallest ``W(t) - W(0) + 16 pi t`` (reported only).
    """

    is_round: bool
    round_deviation: float
    round_passed: bool | None
    probe_min: float
    final_width: float
    vanishing_passed: bool | None
    passed: bool
    details: dict = field(default_factory=dict)


def width_flow_probe(trace, smallness: float = 1e-2, round_tol: float = 1e-4,
                     t_window: float = 0.24, round_c0: float = 1e-8) -> WidthProbe:
    """Width-along-the-flow checks for an S^3 warped trace."""
    from .warped import c0_distance_to_round

    if trace.n != 3 or trace.width_proxy is None or len(trace.width_proxy) == 0 \
            or not np.all(np.isfinite(trace.width_proxy)):
        raise ParameterError("trace has no width series (S^3 warped traces only)")
    t = np.asarray(trace.times)
    w = np.asarray(trace.width_proxy)
    lin = w - w[0] + 16 * np.pi * t
    is_round = isinstance(trace.states[0], WarpedProfile) and \
        c0_distance_to_round(trace.states[0]) < round_c0
    if is_round:
        sel = t <= t_window + 1e-12
        dev = float(np.max(np.abs(lin[sel])))
        round_ok = dev <= round_tol
    else:
        dev, round_ok = float("nan"), None
    if trace.stop_reason == "curvature_ceiling":
        vanish_ok = bool(w[-1] < smallness)
    else:
        vanish_ok = None
    passed = (round_ok is not False) and (vanish_ok is not False)
    return WidthProbe(is_round, dev, round_ok, float(np.min(lin)), float(w[-1]), vanish_ok,
                      bool(passed), {"smallness": smallness, "round_tol": round_tol,
                                     "t_window": t_window, "t_last": float(t[-1])})
