"""Initial-data families, normalized to ``min R = n(n-1)``."""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .errors import GenerationError, RicciLabError
from .homogeneous import BergerState, berger_curvature, curvature_operator, normalize_berger
from .warped import (WarpedProfile, check_curvature_cone, curvature, make_round_profile,
                     profile_from_function)


def sin_cubed_profile(n: int, eps: float, m: int) -> WarpedProfile:
    """``psi = sin s + eps sin^3 s`` on ``[0, pi]`` (unnormalized)."""
    return profile_from_function(n, lambda s: np.sin(s) + eps * np.sin(s) ** 3, m)


def dumbbell_profile(n: int, depth: float, m: int) -> WarpedProfile:
    """``psi = (sin s + a sin 3s) / (1 + 3a)``; for ``a > 1/9`` a neck forms at ``s = pi/2``."""
    return profile_from_function(n, lambda s: (np.sin(s) + depth * np.sin(3 * s)) / (1 + 3 * depth), m)


def berger_member(lambdas, eps: float) -> BergerState:
    """Base eigenvalues with the third one stretched by ``1 + eps``."""
    lam = np.asarray(lambdas, dtype=float) * np.array([1.0, 1.0, 1.0 + eps])
    return BergerState.from_array(lam)


def normalize_profile(p: WarpedProfile, eps: float) -> WarpedProfile:
    """Cone-check ``p`` and rescale it so ``min R = n(n-1)``."""
    c = curvature(p)
    cone = check_curvature_cone(c)
    if not cone.ok:
        raise GenerationError(f"member eps={eps:g} fails the curvature cone check "
                              f"(margin {cone.margin:.4g})", eps)
    target = p.n * (p.n - 1)
    return p.scaled(float(np.min(c.R)) / target)


def generate_member(config: ExperimentConfig, eps: float):
    """One normalized initial state of the configured family."""
    n, m = config.n, config.grid
    try:
        if config.family == "round":
            return make_round_profile(n, 1.0, m)
        if config.family == "sin_cubed_perturbation":
            return normalize_profile(sin_cubed_profile(n, eps, m), eps)
        if config.family == "dumbbell":
            return normalize_profile(dumbbell_profile(n, eps, m), eps)
        b = berger_member(config.lambdas, eps)
    except GenerationError:
        raise
    except RicciLabError as exc:
        raise GenerationError(f"member eps={eps:g}: {exc}", eps) from exc
    ev = np.linalg.eigvalsh(curvature_operator(b.lambdas))
    if not ev[0] > 0:
        raise GenerationError(f"member eps={eps:g} has a curvature operator that is not "
                              f"positive (min eigenvalue {ev[0]:.4g})", eps)
    b = normalize_berger(b, 6.0)
    assert abs(berger_curvature(b).R - 6.0) < 1e-9
    return b


def family_eps(config: ExperimentConfig) -> tuple:
    return (0.0,) if config.family == "round" else config.eps


def generate_family(config: ExperimentConfig) -> list:
    """All members as ``(eps, state)`` pairs in ``eps`` order.

    Raises :class:`GenerationError` naming the first inadmissible ``eps``.
    """
    return [(e, generate_member(config, e)) for e in family_eps(config)]
