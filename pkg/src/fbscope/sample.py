"""The functional tuple (D, H, M, N, V) and the dimensional constant alpha(n)."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .field import sphere_rule, unit_ball_volume

__all__ = ["FunctionalSample", "alpha_n", "build_sample", "NEG_INF"]

NEG_INF = float("-inf")


@lru_cache(maxsize=None)
def alpha_n(dim: int) -> float:
    """alpha(n) = (int_{dB_1} x_n^2)^(-1/2), by a rule exact on quadratics."""
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    omega, w = sphere_rule(dim, 64)
    return 1.0 / math.sqrt(float(np.dot(w, omega[:, -1] ** 2)))


@dataclass(frozen=True)
class FunctionalSample:
    """Weiss/frequency functionals of a field at centre ``x`` and radius ``r``.

    ``quad_err`` bounds the error of D and H (and hence M); ``n_err`` is the
    same budget propagated to N.  ``n_defined`` records that H > 0 and
    M >= |B_1| held within tolerance, so the frequency bound N >= 1 applies.
    """

    x: tuple[float, ...]
    r: float
    D: float
    H: float
    M: float
    N: float
    V: float
    quad_err: float = 0.0
    n_err: float = 0.0
    n_defined: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


def build_sample(x, r: float, dim: int, grad2: float, deficit: float, sphere_u2: float,
                 err_ball: float = 0.0, err_sphere: float = 0.0,
                 certify_tol: float | None = None) -> FunctionalSample:
    """Assemble a sample from the raw integrals.

    grad2 = int_{B_r} |grad u|^2, deficit = int_{B_r} (1 - chi),
    sphere_u2 = int_{dB_r} u^2.
    """
    b1 = unit_ball_volume(dim)
    rn = r ** dim
    D = grad2 / rn + b1 - deficit / rn
    H = sphere_u2 / (rn * r)
    M = D - H
    err_D = err_ball / rn
    err_H = err_sphere / (rn * r)
    quad_err = err_D + err_H
    if H > 0:
        N = (grad2 - deficit) / rn / H
        V = deficit / rn / H
        n_err = (err_D + abs(N) * err_H) / H
    else:
        N = NEG_INF
        V = float("nan")
        n_err = 0.0
    tol = 2 * quad_err + 1e-9 * b1 if certify_tol is None else certify_tol
    n_defined = bool(H > 0 and M >= b1 - tol)
    xt = tuple(float(v) for v in np.asarray(x, float).ravel())
    return FunctionalSample(xt, float(r), float(D), float(H), float(M), float(N), float(V),
                            float(quad_err), float(n_err), n_defined)
