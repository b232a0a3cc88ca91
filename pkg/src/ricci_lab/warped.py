"""Rotationally symmetric metrics ``g = phi^2 dx^2 + psi^2 g_{S^{n-1}}`` on S^n.

The coordinate ``x`` runs over ``[0, 1]`` on a uniform grid whose end points
are the two poles.  Arclength is ``s(x) = int_0^x phi``.  Everything here is a
pure function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.fft import dst

from . import _kernels as K
from .errors import DegenerateProfileError, ParameterError

MIN_GRID = 16
POLE_SLOPE_TOL = 1e-3


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class WarpedProfile:
    """Sampled warped-product metric on S^n.

    Parameters
    ----------
    n : int
        Manifold dimension, at least 3.
    phi : ndarray
        Radial factor at the grid points, strictly positive.
    psi : ndarray
        Warping factor, zero at both poles and positive inside.
    time : float
        Flow time stamp.
    """

    n: int
    phi: np.ndarray
    psi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ParameterError(f"dimension must be an integer >= 3, got {self.n}")
        phi = _frozen(self.phi)
        psi = _frozen(self.psi)
        if phi.ndim != 1 or phi.shape != psi.shape:
            raise ParameterError("phi and psi must be 1-D arrays of equal length")
        if phi.size < MIN_GRID:
            raise ParameterError(f"grid size must be >= {MIN_GRID}, got {phi.size}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(psi))):
            raise ParameterError("profile samples must be finite")
        if np.any(phi <= 0):
            raise ParameterError("phi must be positive")
        if psi[0] != 0.0 or psi[-1] != 0.0:
            raise ParameterError("psi must vanish at both poles")
        if np.any(psi[1:-1] <= 0):
            raise ParameterError("psi must be positive away from the poles")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "time", float(self.time))

    @property
    def m(self) -> int:
        return self.psi.size

    @property
    def h(self) -> float:
        return 1.0 / (self.m - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.m)

    @property
    def arclength(self) -> np.ndarray:
        """Arclength from the north pole at every sample."""
        return K.cumint_even(np.asarray(self.phi), self.h)

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    @property
    def is_arclength_gauge(self) -> bool:
        return bool(np.all(self.phi == self.phi[0]))

    def pole_slopes(self) -> tuple[float, float]:
        """``d psi/ds`` at the north and south poles (both 1 when smooth)."""
        a, b = K.pole_slopes(np.asarray(self.psi), np.asarray(self.phi), self.h)
        return float(a), float(b)

    def scaled(self, lam: float) -> "WarpedProfile":
        """The metric ``lam * g`` (time stamp scaled alike)."""
        if not lam > 0:
            raise ParameterError("scale factor must be positive")
        r = np.sqrt(lam)
        return WarpedProfile(self.n, self.phi * r, self.psi * r, self.time * lam)

    def reflected(self) -> "WarpedProfile":
        """The same metric with the poles exchanged."""
        return WarpedProfile(self.n, self.phi[::-1], self.psi[::-1], self.time)

    def with_time(self, t: float) -> "WarpedProfile":
        return WarpedProfile(self.n, self.phi, self.psi, t)


def scale(p: WarpedProfile, lam: float) -> WarpedProfile:
    """Return ``lam * g``."""
    return p.scaled(lam)


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-sample curvature of a warped profile.

    ``ric_eigs`` has shape ``(m, 2)``: the Ricci eigenvalue on the radial
    direction, then the one on the sphere directions.  ``rm_norm`` is the
    largest absolute sectional curvature.
    """

    n: int
    k_rad: np.ndarray
    k_sph: np.ndarray
    ric_eigs: np.ndarray
    R: np.ndarray
    rm_norm: np.ndarray
    time: float = 0.0

    @property
    def ric_norm_sq(self) -> np.ndarray:
        """|Ric|^2 (radial eigenvalue once, sphere eigenvalue n-1 times)."""
        r = self.ric_eigs
        return r[:, 0] ** 2 + (self.n - 1) * r[:, 1] ** 2


def field_from_sectional(n: int, k_rad, k_sph, time: float = 0.0) -> CurvatureField:
    """Assemble a :class:`CurvatureField` from the two sectional curvatures."""
    k_rad = _frozen(k_rad)
    k_sph = _frozen(k_sph)
    ric = np.stack([(n - 1) * k_rad, k_rad + (n - 2) * k_sph], axis=1)
    ric.setflags(write=False)
    R = _frozen(2 * (n - 1) * k_rad + (n - 1) * (n - 2) * k_sph)
    rm = _frozen(np.maximum(np.abs(k_rad), np.abs(k_sph)))
    return CurvatureField(n, k_rad, k_sph, ric, R, rm, float(time))


def check_smooth(p: WarpedProfile, tol: float = POLE_SLOPE_TOL) -> None:
    """Raise :class:`DegenerateProfileError` if a pole has a cone angle."""
    north, south = p.pole_slopes()
    for name, val in (("north", north), ("south", south)):
        if not abs(val - 1.0) <= tol:
            raise DegenerateProfileError(
                f"{name} pole slope d(psi)/ds = {val:.6g} deviates from 1 by more than {tol:g}")


def curvature(p: WarpedProfile) -> CurvatureField:
    """Sectional, Ricci and scalar curvature at every sample of ``p``."""
    check_smooth(p)
    k_rad, k_sph = K.sectional(np.asarray(p.psi), np.asarray(p.phi), p.h)
    return field_from_sectional(p.n, k_rad, k_sph, p.time)


def make_round_profile(n: int, c: float, m: int) -> WarpedProfile:
    """Round metric of constant sectional curvature ``c`` on S^n.

    The radial factor is the constant ``L = pi / sqrt(c)`` so that arclength
    is ``s = L x``; then ``psi(s) = sin(sqrt(c) s) / sqrt(c)``.
    """
    if int(n) != n or n < 3:
        raise ParameterError(f"dimension must be an integer >= 3, got {n}")
    if not (np.isfinite(c) and c > 0):
        raise ParameterError(f"curvature must be positive, got {c}")
    if int(m) != m or m < MIN_GRID:
        raise ParameterError(f"grid size must be an integer >= {MIN_GRID}, got {m}")
    m = int(m)
    x = np.linspace(0.0, 1.0, m)
    rc = np.sqrt(c)
    psi = np.sin(np.pi * x) / rc
    psi[0] = psi[-1] = 0.0
    return WarpedProfile(int(n), np.full(m, np.pi / rc), psi)


def profile_from_function(n: int, psi_fn, m: int, length: float = np.pi) -> WarpedProfile:
    """Sample ``psi = psi_fn(s)`` on ``s in [0, length]`` in arclength gauge."""
    if int(m) != m or m < MIN_GRID:
        raise ParameterError(f"grid size must be an integer >= {MIN_GRID}, got {m}")
    x = np.linspace(0.0, 1.0, int(m))
    psi = np.asarray(psi_fn(length * x), dtype=float)
    psi[0] = psi[-1] = 0.0
    return WarpedProfile(n, np.full(int(m), float(length)), psi)


def to_arclength_gauge(p: WarpedProfile) -> tuple[WarpedProfile, np.ndarray]:
    """Resample ``p`` so that ``phi`` is constant.

    Returns the resampled profile and the normalized arclength ``s/L`` of the
    original grid points (where those material points sit on the new grid).
    """
    s = p.arclength
    L = s[-1]
    sigma = s / L
    if p.is_arclength_gauge:
        return p, np.linspace(0.0, 1.0, p.m)
    # odd reflection at both poles keeps the spline accurate at the ends
    k = min(4, p.m - 2)
    s_ext = np.concatenate([-s[k:0:-1], s, 2 * L - s[-2:-k - 2:-1]])
    psi_ext = np.concatenate([-p.psi[k:0:-1], p.psi, -p.psi[-2:-k - 2:-1]])
    spl = CubicSpline(s_ext, psi_ext)
    x = np.linspace(0.0, 1.0, p.m)
    psi = spl(L * x)
    psi[0] = psi[-1] = 0.0
    return WarpedProfile(p.n, np.full(p.m, L), psi, p.time), sigma


def c0_distance_to_round(p: WarpedProfile) -> float:
    """C^0 operator-norm distance to the unit round metric.

    ``p`` is pulled back by the arclength-proportional polar map; both factors
    of the metric are then compared with those of the round metric.
    """
    s = p.arclength
    L = s[-1]
    q = (L / np.pi) ** 2
    sig = np.pi * s[1:-1] / L
    ratio = p.psi[1:-1] ** 2 / np.sin(sig) ** 2
    return float(max(abs(q - 1.0), np.max(np.abs(ratio - 1.0))))


def laplacian_radial(p: WarpedProfile, f) -> np.ndarray:
    """Laplace-Beltrami operator applied to a radial function.

    ``Delta f = f_ss + (n-1) (psi_s/psi) f_s``; at a pole the second term has
    the limit ``(n-1) f_ss``, so ``Delta f = n f_ss`` there.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != p.psi.shape:
        raise ParameterError("f must be sampled on the profile grid")
    if not np.all(np.isfinite(f)):
        raise ParameterError("f must be finite")
    h = p.h
    phi = np.asarray(p.phi)
    fx = K.d1(f, h, False)
    fxx = K.d2(f, h, False)
    phix = K.d1(phi, h, False)
    f_s = fx / phi
    f_ss = (fxx - phix * fx / phi) / phi ** 2
    psi_s, _ = K.s_derivatives(np.asarray(p.psi), phi, h)
    out = np.empty_like(f)
    out[1:-1] = f_ss[1:-1] + (p.n - 1) * psi_s[1:-1] / p.psi[1:-1] * f_s[1:-1]
    out[0] = p.n * f_ss[0]
    out[-1] = p.n * f_ss[-1]
    return out


def spectral_curvature(p: WarpedProfile, rel_cut: float = 1e-13) -> CurvatureField:
    """Curvature from a truncated sine series of ``psi`` (arclength gauge only).

    ``psi`` is odd about both poles, so it is exactly a sine series in
    ``sigma = s/L``.  Dropping the modes below ``rel_cut`` of the largest
    removes rounding noise, which finite differences would amplify.
    """
    if not p.is_arclength_gauge:
        raise ParameterError("spectral curvature needs an arclength-gauge profile")
    m = p.m
    L = float(p.phi[0])
    b = dst(np.asarray(p.psi[1:-1]), type=1) / (m - 1)
    keep = np.flatnonzero(np.abs(b) > rel_cut * np.max(np.abs(b)))
    k = keep + 1.0
    b = b[keep]
    w = np.pi * k / L
    s = np.linspace(0.0, L, m)
    S = np.sin(np.outer(s, w))
    C = np.cos(np.outer(s, w))
    psi = S @ b
    psi_s = C @ (b * w)
    psi_ss = -(S @ (b * w ** 2))
    k_rad = np.zeros(m)
    k_sph = np.zeros(m)
    k_rad[2:-2] = -psi_ss[2:-2] / psi[2:-2]
    k_sph[2:-2] = (1.0 - psi_s[2:-2] ** 2) / psi[2:-2] ** 2
    K.fill_poles(k_rad)
    K.fill_poles(k_sph)
    return field_from_sectional(p.n, k_rad, k_sph, p.time)


class ConeCheck(NamedTuple):
    ok: bool
    margin: float


def check_curvature_cone(c: CurvatureField) -> ConeCheck:
    """Both curvature-operator eigenvalues positive at every sample."""
    margin = float(min(np.min(c.k_rad), np.min(c.k_sph)))
    return ConeCheck(bool(margin > 0), margin)


@dataclass(frozen=True)
class Ball:
    """Arclength interval ``[lo, hi)`` (``hi`` included when it is a pole).

    ``exact`` is False when the interval only contains the true ball.
    """

    lo: float
    hi: float
    length: float
    exact: bool = True
    whole: bool = False
    lo_open: bool = False

    def contains(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        lo_ok = s > self.lo if self.lo_open else s >= self.lo
        if self.whole or (self.hi >= self.length and not self.exact):
            hi_ok = s <= self.hi
        else:
            hi_ok = s < self.hi
        return lo_ok & hi_ok


def distance_and_balls(p: WarpedProfile, s0: float, r: float) -> Ball:
    """Open metric ball of radius ``r`` around the point at arclength ``s0``.

    Pole-centered balls are exact.  For interior centers the returned interval
    is the set of latitudes within radial distance ``r``; it contains the
    ball and is flagged as an over-approximation.
    """
    if not r > 0:
        raise ParameterError(f"radius must be positive, got {r}")
    L = p.length
    if not (0.0 <= s0 <= L):
        raise ParameterError(f"base point {s0} outside [0, {L}]")
    if s0 == 0.0:
        return Ball(0.0, min(r, L), L, exact=True, whole=r >= L)
    if s0 == L:
        lo = max(L - r, 0.0)
        return Ball(lo, L, L, exact=True, whole=r >= L, lo_open=r < L)
    lo = max(s0 - r, 0.0)
    hi = min(s0 + r, L)
    return Ball(lo, hi, L, exact=False, whole=False, lo_open=s0 - r > 0)
