"""Left-invariant metrics on S^3 = SU(2) and their Ricci flow ODE.

A metric is ``lambda_1 th1^2 + lambda_2 th2^2 + lambda_3 th3^2`` in a Milnor
frame ``X_i`` with ``[X_2, X_3] = 2 X_1`` (and cyclic).  With these brackets
``lambda_i = 1`` is the round metric of curvature one, ``R = 6``.

Curvature is computed from the structure constants of the orthonormal frame
``e_i = X_i / sqrt(lambda_i)`` via Koszul's formula, not from closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

_CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class BergerState:
    """Three positive metric eigenvalues, stored ascending."""

    lambda1: float
    lambda2: float
    lambda3: float
    time: float = 0.0

    def __post_init__(self):
        lam = np.array([self.lambda1, self.lambda2, self.lambda3], dtype=float)
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise DomainError(f"Berger eigenvalues must be positive and finite, got {lam}")
        lam.sort()
        object.__setattr__(self, "lambda1", float(lam[0]))
        object.__setattr__(self, "lambda2", float(lam[1]))
        object.__setattr__(self, "lambda3", float(lam[2]))
        object.__setattr__(self, "time", float(self.time))

    @classmethod
    def from_array(cls, lam, time: float = 0.0) -> "BergerState":
        a, b, c = (float(v) for v in lam)
        return cls(a, b, c, time)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2, self.lambda3])

    def scaled(self, mu: float) -> "BergerState":
        return BergerState.from_array(self.lambdas * mu, self.time * mu)


def _as_lambdas(b) -> np.ndarray:
    lam = b.lambdas if isinstance(b, BergerState) else np.asarray(b, dtype=float)
    if lam.shape != (3,) or not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise DomainError(f"Berger eigenvalues must be three positive numbers, got {lam}")
    return lam


def structure_constants(lam) -> np.ndarray:
    """``c[i, j, k] = <[e_i, e_j], e_k>`` for the orthonormal frame."""
    lam = _as_lambdas(lam)
    r = np.sqrt(lam)
    c = np.zeros((3, 3, 3))
    for i, j, k in _CYCLIC:
        # [e_i, e_j] = 2 X_k / (r_i r_j) = 2 r_k / (r_i r_j) e_k
        val = 2.0 * r[k] / (r[i] * r[j])
        c[i, j, k] = val
        c[j, i, k] = -val
    return c


def riemann_tensor(lam) -> np.ndarray:
    """``Rm[i, j, k, l] = <R(e_i, e_j) e_k, e_l>``.

    Convention ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``,
    so the sectional curvature of the plane ``e_i ^ e_j`` is ``Rm[i, j, j, i]``.
    """
    c = structure_constants(lam)
    # Koszul: G[i, j, k] = <nabla_{e_i} e_j, e_k>
    G = 0.5 * (c - np.einsum("jki->ijk", c) + np.einsum("kij->ijk", c))
    # nabla_i nabla_j e_k = sum_l G[j,k,l] G[i,l,p] e_p
    nn = np.einsum("jkl,ilp->ijkp", G, G)
    br = np.einsum("ijq,qkp->ijkp", c, G)
    return nn - np.transpose(nn, (1, 0, 2, 3)) - br


class BergerCurvature(NamedTuple):
    ricci: np.ndarray  # Ric(e_i, e_i) in the orthonormal frame
    R: float
    sec_min: float
    sec_max: float


def curvature_operator(lam) -> np.ndarray:
    """Curvature operator on 2-vectors in the basis e2^e3, e3^e1, e1^e2."""
    Rm = riemann_tensor(lam)
    pairs = [(1, 2), (2, 0), (0, 1)]
    Q = np.empty((3, 3))
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            Q[a, b] = Rm[i, j, l, k]
    return 0.5 * (Q + Q.T)


def berger_curvature(b) -> BergerCurvature:
    """Ricci eigenvalues, scalar curvature and sectional-curvature extremes.

    In three dimensions every 2-vector is decomposable, so the sectional
    curvatures are exactly the Rayleigh quotients of the curvature operator.
    """
    lam = _as_lambdas(b)
    Rm = riemann_tensor(lam)
    ric = np.einsum("ijki->jk", Rm)
    ricci = np.diag(ric).copy()
    ev = np.linalg.eigvalsh(curvature_operator(lam))
    return BergerCurvature(ricci, float(ricci.sum()), float(ev[0]), float(ev[-1]))


def milnor_ricci(lam) -> np.ndarray:
    """Closed-form Ricci eigenvalues (independent oracle for the frame computation)."""
    lam = _as_lambdas(lam)
    r = np.sqrt(lam)
    # Milnor's structure constants for the orthonormal frame
    L = np.array([2 * r[0] / (r[1] * r[2]), 2 * r[1] / (r[2] * r[0]), 2 * r[2] / (r[0] * r[1])])
    mu = 0.5 * L.sum() - L
    return np.array([2 * mu[1] * mu[2], 2 * mu[2] * mu[0], 2 * mu[0] * mu[1]])


def ricci_velocity(lam) -> np.ndarray:
    """``d lambda_i / dt = -2 Ric(X_i, X_i) = -2 lambda_i Ric(e_i, e_i)`` (any order)."""
    lam = _as_lambdas(lam)
    return -2.0 * lam * berger_curvature(lam).ricci


def berger_rhs(b: BergerState) -> np.ndarray:
    """Eigenvalue velocities of the Ricci flow, ordered like ``b.lambdas``."""
    return ricci_velocity(b.lambdas)


def round_berger(R: float = 6.0) -> BergerState:
    """Round state with scalar curvature ``R``."""
    lam = 6.0 / R
    return BergerState(lam, lam, lam)


def normalize_berger(b: BergerState, R: float = 6.0) -> BergerState:
    """Rescale so that the (constant) scalar curvature equals ``R``."""
    return b.scaled(berger_curvature(b).R / R)


def berger_c0_distance(b: BergerState) -> float:
    """C^0 distance to the unit round metric in the Milnor frame."""
    return float(np.max(np.abs(b.lambdas - 1.0)))
