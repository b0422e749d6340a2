"""Semilinear approximation Delta u = beta_eps(u) on a box, with Dirichlet data.

``beta_eps(s) = beta(s / eps) / eps`` where ``beta`` is a nonnegative bump on
(0, 1) normalised so that int_0^1 beta = 1/2.  Writing B for the primitive of
beta, B_eps(u) = B(u / eps) rises from 0 to 1/2 across the layer 0 < u < eps
and chi_eps = 2 B_eps(u) is the companion that enters the domain-variation
identity.

The discrete problem uses the standard (2n+1)-point Laplacian on interior
nodes.  Its Jacobian ``A - diag(beta_eps'(u))`` is indefinite wherever
u > eps/2, so the linear solves are direct (sparse LU) rather than CG.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, optimize, sparse
from scipy.interpolate import CubicHermiteSpline
from scipy.sparse.linalg import splu

from .analytic import AnalyticSolution
from .field import GridSpec, ScalarField

__all__ = [
    "BetaSpec",
    "SolverConfig",
    "SolveResult",
    "ContinuationResult",
    "Profile1D",
    "UnderResolvedWarning",
    "default_beta",
    "solve",
    "continuation",
    "shoot_1d",
]


class UnderResolvedWarning(UserWarning):
    """eps is below two grid cells, so the transition layer is not resolved."""


# (raw profile, its derivative, its primitive) on [0, 1]
_PROFILES: dict[str, tuple[Callable, Callable, Callable]] = {
    "poly": (
        lambda s: s * (1 - s),
        lambda s: 1 - 2 * s,
        lambda s: s * s / 2 - s ** 3 / 3,
    ),
    "sine": (
        lambda s: np.sin(np.pi * s),
        lambda s: np.pi * np.cos(np.pi * s),
        lambda s: (1 - np.cos(np.pi * s)) / np.pi,
    ),
}


@dataclass(frozen=True)
class BetaSpec:
    """beta = c * profile on (0, 1), zero elsewhere; ``c`` fixes int beta = 1/2."""

    epsilon: float
    profile: str = "poly"
    c: float = dc_field(init=False)

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown beta profile {self.profile!r}; have {sorted(_PROFILES)}")
        raw, _, prim = _PROFILES[self.profile]
        c = 0.5 / float(prim(1.0))
        check = c * integrate.quad(raw, 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)[0]
        if abs(check - 0.5) > 1e-10:
            raise ValueError("profile normalisation failed")
        object.__setattr__(self, "c", c)

    def beta(self, s):
        s = np.asarray(s, float)
        raw = _PROFILES[self.profile][0]
        inside = (s > 0) & (s < 1)
        return np.where(inside, self.c * raw(np.clip(s, 0, 1)), 0.0)

    def dbeta(self, s):
        s = np.asarray(s, float)
        d = _PROFILES[self.profile][1]
        inside = (s > 0) & (s < 1)
        return np.where(inside, self.c * d(np.clip(s, 0, 1)), 0.0)

    def B(self, s):
        """Primitive of beta from 0, constant 1/2 above 1."""
        s = np.clip(np.asarray(s, float), 0.0, 1.0)
        return self.c * _PROFILES[self.profile][2](s)

    def beta_eps(self, u):
        return self.beta(np.asarray(u, float) / self.epsilon) / self.epsilon

    def dbeta_eps(self, u):
        return self.dbeta(np.asarray(u, float) / self.epsilon) / self.epsilon ** 2

    def B_eps(self, u):
        return self.B(np.asarray(u, float) / self.epsilon)

    def chi_eps(self, u):
        return 2.0 * self.B_eps(u)

    def with_epsilon(self, eps: float) -> "BetaSpec":
        return BetaSpec(float(eps), self.profile)


def default_beta(eps: float) -> BetaSpec:
    """beta(s) = 3 s (1 - s) on (0, 1)."""
    return BetaSpec(float(eps), "poly")


# solver ----------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 200
    damping_floor: float = 2.0 ** -10


@dataclass
class SolveResult:
    """Outcome of :func:`solve`.

    ``residual_norm`` is max |h^2 (Delta_h u - beta_eps(u))| over interior
    nodes.  ``min_raw`` is the smallest iterate value before clipping to 0.
    """

    field: ScalarField
    residual_norm: float
    iterations: int
    converged: bool
    epsilon: float
    under_resolved: bool = False
    newton_steps: int = 0
    picard_steps: int = 0
    min_raw: float = 0.0
    history: tuple[float, ...] = ()

    def diagnostics(self) -> dict:
        return {
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "epsilon": self.epsilon,
            "under_resolved": self.under_resolved,
            "newton_steps": self.newton_steps,
            "picard_steps": self.picard_steps,
            "min_raw": self.min_raw,
        }


Dirichlet = Union[float, Callable, AnalyticSolution, ScalarField]


def _boundary_values(spec: GridSpec, dirichlet: Dirichlet) -> np.ndarray:
    """Node array carrying the data (interior entries are the data too, as a start)."""
    if isinstance(dirichlet, ScalarField):
        if dirichlet.spec != spec:
            raise ValueError("dirichlet field lives on a different grid")
        g = np.array(dirichlet.values)
    elif isinstance(dirichlet, AnalyticSolution):
        g = np.asarray(dirichlet.eval(spec.nodes()), float).reshape(spec.shape)
    elif callable(dirichlet):
        g = np.asarray(dirichlet(spec.nodes()), float).reshape(spec.shape)
    else:
        g = np.full(spec.shape, float(dirichlet))
    if not np.all(np.isfinite(g)):
        raise ValueError("dirichlet data must be finite")
    if g.min() < 0:
        raise ValueError("dirichlet data must be nonnegative")
    return g


def _stencil_matrix(interior: tuple[int, ...]) -> sparse.csc_matrix:
    """Unscaled Laplacian (sum of neighbours - 2n * centre) on interior nodes."""
    mats = []
    for m in interior:
        mats.append(sparse.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]))
    n = len(interior)
    A = None
    for k in range(n):
        term = None
        for j in range(n):
            f = mats[j] if j == k else sparse.identity(interior[j])
            term = f if term is None else sparse.kron(term, f)
        A = term if A is None else A + term
    return sparse.csc_matrix(A)


def _apply(U: np.ndarray) -> np.ndarray:
    """Unscaled stencil applied to the full node array, interior output."""
    n = U.ndim
    inner = tuple([slice(1, -1)] * n)
    out = -2.0 * n * U[inner]
    for k in range(n):
        for d in (-1, 1):
            sl = [slice(1, -1)] * n
            sl[k] = slice(1 + d, U.shape[k] - 1 + d)
            out = out + U[tuple(sl)]
    return out


def solve(spec: GridSpec, beta: BetaSpec, dirichlet: Dirichlet,
          config: SolverConfig | None = None, initial=None) -> SolveResult:
    """Damped Newton for Delta_h u = beta_eps(u) with u = data on the box walls.

    The step is halved until the residual decreases in the max norm or the
    l2 norm (the max norm alone stalls across the kink of beta at 0), down to
    ``config.damping_floor``; if no damped Newton step helps, a Picard step
    (solve Delta_h u_new = beta_eps(u_old)) is tried with the same line search.
    ``initial`` may be a node array or field to warm-start from; it defaults to
    the data sampled everywhere.
    """
    cfg = config or SolverConfig()
    h = spec.h
    eps = beta.epsilon
    under = eps < 2 * h
    if under:
        warnings.warn(f"epsilon={eps:g} < 2h={2 * h:g}: layer under-resolved", UnderResolvedWarning,
                      stacklevel=2)
    G = _boundary_values(spec, dirichlet)
    U = G.copy()
    if initial is not None:
        init = initial.values if isinstance(initial, ScalarField) else np.asarray(initial, float)
        if init.shape != spec.shape:
            raise ValueError("initial guess has the wrong shape")
        inner = tuple([slice(1, -1)] * spec.dim)
        U[inner] = init[inner]
    inner = tuple([slice(1, -1)] * spec.dim)
    interior = tuple(c - 1 for c in spec.cells)
    A = _stencil_matrix(interior)
    h2 = h * h

    def residual(V: np.ndarray) -> np.ndarray:
        return _apply(V) - h2 * beta.beta_eps(V[inner])

    F = residual(U)
    rn = float(np.abs(F).max())
    l2 = float(np.dot(F.ravel(), F.ravel()))
    history = [rn]
    newton = picard = 0
    lu_A = None
    it = 0
    while rn > cfg.tol and it < cfg.max_iter:
        it += 1
        J = A - sparse.diags(h2 * beta.dbeta_eps(U[inner]).ravel())
        directions = []
        try:
            directions.append(("newton", splu(sparse.csc_matrix(J)).solve(-F.ravel())))
        except RuntimeError:
            pass  # singular Jacobian; go straight to Picard
        accepted = False
        for kind in ("newton", "picard"):
            if kind == "picard":
                if lu_A is None:
                    lu_A = splu(A)
                step = lu_A.solve(-F.ravel())
            else:
                found = [d for k, d in directions if k == kind]
                if not found:
                    continue
                step = found[0]
            step = step.reshape(interior)
            lam = 1.0
            while lam >= cfg.damping_floor:
                trial = U.copy()
                trial[inner] += lam * step
                Ft = residual(trial)
                rt = float(np.abs(Ft).max())
                if rt < rn or float(np.dot(Ft.ravel(), Ft.ravel())) < l2:
                    U, F, rn = trial, Ft, rt
                    l2 = float(np.dot(F.ravel(), F.ravel()))
                    accepted = True
                    break
                lam *= 0.5
            if accepted:
                if kind == "newton":
                    newton += 1
                else:
                    picard += 1
                break
        history.append(rn)
        if not accepted:
            break
    min_raw = float(U.min())
    Uc = np.maximum(U, 0.0)
    fld = ScalarField(spec, Uc, beta.chi_eps(Uc))
    return SolveResult(fld, rn, it, bool(rn <= cfg.tol), eps, under, newton, picard, min_raw,
                       tuple(history))


@dataclass
class ContinuationResult:
    """Solves along a decreasing eps ladder.

    ``cauchy_sup[k]`` = max |u_{k+1} - u_k|, ``chi_l1[k]`` = int |chi_{k+1} - chi_k|.
    """

    epsilons: tuple[float, ...]
    results: list[SolveResult]
    cauchy_sup: tuple[float, ...]
    chi_l1: tuple[float, ...]

    def __iter__(self):
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)


def continuation(spec: GridSpec, base_beta: BetaSpec, dirichlet: Dirichlet,
                 eps_ladder: Sequence[float], config: SolverConfig | None = None,
                 initial=None) -> ContinuationResult:
    """Warm-started solves from the largest eps down."""
    eps = [float(e) for e in eps_ladder]
    if not eps:
        raise ValueError("empty eps ladder")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("eps ladder must be strictly decreasing")
    results: list[SolveResult] = []
    guess = initial
    for e in eps:
        res = solve(spec, base_beta.with_epsilon(e), dirichlet, config, initial=guess)
        results.append(res)
        guess = res.field
    vol = spec.h ** spec.dim
    sup = tuple(float(np.abs(b.field.values - a.field.values).max()) for a, b in zip(results, results[1:]))
    l1 = tuple(float(np.abs(b.field.chi - a.field.chi).sum() * vol) for a, b in zip(results, results[1:]))
    return ContinuationResult(tuple(eps), results, sup, l1)


# 1D shooting oracle ----------------------------------------------------------

@dataclass(frozen=True)
class Profile1D:
    """RK4 trajectory of u'' = beta_eps(u) with its first integral.

    ``energy`` is the conserved (u')^2/2 - B_eps(u) at the start; ``drift`` the
    largest deviation from it along the trajectory.
    """

    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    beta: BetaSpec
    energy: float
    drift: float

    def __call__(self, xq):
        xs, us, ds = self.x, self.u, self.du
        if xs[0] > xs[-1]:
            xs, us, ds = xs[::-1], us[::-1], ds[::-1]
        keep = np.concatenate([[True], np.diff(xs) > 0])
        spline = CubicHermiteSpline(xs[keep], us[keep], ds[keep])
        return spline(np.asarray(xq, float))


def _rk4(beta: BetaSpec, u: float, p: float, dx: float) -> tuple[float, float]:
    def f(uu, pp):
        return pp, float(beta.beta_eps(uu))
    k1u, k1p = f(u, p)
    k2u, k2p = f(u + 0.5 * dx * k1u, p + 0.5 * dx * k1p)
    k3u, k3p = f(u + 0.5 * dx * k2u, p + 0.5 * dx * k2p)
    k4u, k4p = f(u + dx * k3u, p + dx * k3p)
    return (u + dx / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
            p + dx / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def _band(beta: BetaSpec, u: float) -> int:
    if u <= 0:
        return 0
    return 1 if u < beta.epsilon else 2


def _integrate(beta: BetaSpec, x0: float, x1: float, u0: float, p0: float,
               blowup: float = 1e6) -> Profile1D:
    eps = beta.epsilon
    direction = 1.0 if x1 >= x0 else -1.0
    dx_max = eps / 64
    xs, us, ps = [x0], [u0], [p0]
    x, u, p = x0, u0, p0
    while direction * (x1 - x) > 1e-15 * max(1.0, abs(x1)):
        dx = direction * min(dx_max, abs(x1 - x))
        un, pn = _rk4(beta, u, p, dx)
        b0, b1 = _band(beta, u), _band(beta, un)
        if b0 != b1:
            # split the step at the first band edge so RK4 never straddles a kink
            edge = (0.0 if min(b0, b1) == 0 else eps)
            def gap(t):
                return _rk4(beta, u, p, t)[0] - edge
            if gap(0.0) == 0.0:
                t_star = None
            else:
                try:
                    t_star = optimize.brentq(gap, 0.0, dx, xtol=1e-15, rtol=1e-15, maxiter=200)
                except ValueError:
                    t_star = None
            if t_star is not None and abs(t_star) > 1e-14:
                un, pn = _rk4(beta, u, p, t_star)
                un = edge
                dx = t_star
        x, u, p = x + dx, un, pn
        if not (math.isfinite(u) and math.isfinite(p)) or abs(u) > blowup:
            raise ValueError("trajectory blew up; parameters outside the admissible basin")
        xs.append(x)
        us.append(u)
        ps.append(p)
    X, Uv, P = np.array(xs), np.array(us), np.array(ps)
    E = P * P / 2 - beta.B_eps(Uv)
    return Profile1D(X, Uv, P, beta, float(E[0]), float(np.abs(E - E[0]).max()))


def shoot_1d(beta: BetaSpec, slope: float | None = None, values: tuple[float, float] | None = None,
             interval: tuple[float, float] = (-1.0, 1.0)) -> Profile1D:
    """Exact-solution surrogate for u'' = beta_eps(u) on ``interval``.

    Either ``slope``: the trajectory leaving u = 0 at the left end with that
    slope; or ``values``: the monotone solution with u(a), u(b) prescribed,
    found by bisecting on the slope at the lower end.  RK4 with step eps/64,
    steps split where u crosses 0 or eps.
    """
    a, b = map(float, interval)
    if not b > a:
        raise ValueError("interval must be increasing")
    if (slope is None) == (values is None):
        raise ValueError("give exactly one of slope, values")
    if slope is not None:
        return _integrate(beta, a, b, 0.0, float(slope))
    left, right = map(float, values)
    if min(left, right) < 0:
        raise ValueError("boundary values must be nonnegative")
    # integrate from the lower end towards the higher one; sigma = |u'| there
    if right <= left:
        start, stop, u_lo, target = b, a, right, left
    else:
        start, stop, u_lo, target = a, b, left, right
    sgn = 1.0 if stop < start else -1.0  # du/dx sign at the start

    def reach(sig: float) -> float:
        prof = _integrate(beta, start, stop, u_lo, -sgn * sig)
        return prof.u[-1] - target

    f0 = reach(0.0)
    if f0 > 0:
        raise ValueError("no monotone solution connects these values")
    if f0 == 0:
        return _orient(_integrate(beta, start, stop, u_lo, 0.0))
    hi = max(1.0, abs(target - u_lo) / (b - a))
    while reach(hi) < 0:
        hi *= 2
        if hi > 1e6:
            raise ValueError("could not bracket the boundary slope")
    sig = optimize.brentq(reach, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return _orient(_integrate(beta, start, stop, u_lo, -sgn * sig))


def _orient(prof: Profile1D) -> Profile1D:
    """Return the trajectory with increasing x."""
    if prof.x[0] <= prof.x[-1]:
        return prof
    return Profile1D(prof.x[::-1].copy(), prof.u[::-1].copy(), prof.du[::-1].copy(),
                     prof.beta, prof.energy, prof.drift)
