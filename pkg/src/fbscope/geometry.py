"""Jones beta numbers, frequency-drop probes and the terminal-ball covering.

Everything here works on point sets plus a *frequency oracle*: a map from
(centres, radius) to frequencies N_y(r) with a definedness flag.  Oracles can
be backed by a grid field, an analytic solution, or a synthetic formula, so the
covering and the probes also run on inputs that no solution could produce
(the negative controls).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize
from scipy.spatial import cKDTree

from .analytic import AnalyticSolution, NotAvailableError, exact_functionals
from .field import OutOfDomainError, ScalarField, sphere_rule
from .functionals import _jsonable, sample

__all__ = [
    "EmptyMeasureError",
    "DiscreteMeasure",
    "BetaResult",
    "beta_number",
    "beta_number_bruteforce",
    "FrequencyOracle",
    "synthetic_curve",
    "synthetic_point",
    "synthetic_line",
    "synthetic_constant",
    "subspace_inequality_probe",
    "DichotomyResult",
    "dichotomy_probe",
    "CoveringNode",
    "CoveringReport",
    "covering_tree",
    "ray_candidates",
    "minkowski_estimate",
    "disjoint_packing_count",
]


class EmptyMeasureError(ValueError):
    """The measure has no mass in the requested ball."""


# measures and beta numbers ---------------------------------------------------

@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted point masses in R^dim."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        P = np.atleast_2d(np.asarray(self.points, float))
        w = np.asarray(self.weights, float).ravel()
        if len(P) != len(w):
            raise ValueError("points and weights differ in length")
        if len(w) and (np.any(~np.isfinite(w)) or w.min() <= 0):
            raise ValueError("weights must be positive and finite")
        if np.any(~np.isfinite(P)):
            raise ValueError("points must be finite")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points, mass: float = 1.0) -> "DiscreteMeasure":
        P = np.atleast_2d(np.asarray(points, float))
        return cls(P, np.full(len(P), float(mass)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def restrict(self, x, r: float) -> "DiscreteMeasure":
        """mu restricted to the closed ball B_r(x)."""
        d = np.linalg.norm(self.points - np.asarray(x, float), axis=1)
        keep = d <= r * (1 + 1e-12)
        return DiscreteMeasure(self.points[keep], self.weights[keep])

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.weights * c)


@dataclass(frozen=True)
class BetaResult:
    """beta^2 with its minimising hyperplane {y : (y - centroid) . normal = 0}."""

    beta2: float
    centroid: np.ndarray
    normal: np.ndarray
    eigenvalues: np.ndarray


def _moment(mu: DiscreteMeasure) -> tuple[np.ndarray, np.ndarray]:
    w = mu.weights
    c = (w[:, None] * mu.points).sum(axis=0) / w.sum()
    Y = mu.points - c
    return c, (w[:, None] * Y).T @ Y


def beta_number(mu: DiscreteMeasure, x, r: float) -> BetaResult:
    """Jones number beta^2 = min_L r^-(n+1) int_{B_r(x)} dist(y, L)^2 dmu.

    The optimal hyperplane passes through the centroid with normal along the
    smallest eigenvector of the weighted second-moment matrix.  Eigenvalues
    below 64 machine epsilons of the largest are rank deficiency and read 0.
    """
    sub = mu.restrict(x, r)
    if len(sub.weights) == 0:
        raise EmptyMeasureError(f"mu(B_{r:g}({tuple(np.asarray(x, float))})) = 0")
    n = sub.dim
    c, S = _moment(sub)
    lam, V = np.linalg.eigh(S)
    lmin = float(lam[0])
    if lmin <= 64 * np.finfo(float).eps * max(float(lam[-1]), 0.0):
        lmin = 0.0
    return BetaResult(max(lmin, 0.0) / r ** (n + 1), c, V[:, 0], lam)


def _directions(n: int, n_dirs: int) -> np.ndarray:
    if n == 2:
        th = np.pi * np.arange(n_dirs) / n_dirs
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    # Fibonacci points on the upper hemisphere
    i = np.arange(n_dirs) + 0.5
    z = i / n_dirs
    phi = np.pi * (1 + 5 ** 0.5) * i
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def _plane_cost(P: np.ndarray, w: np.ndarray, nu: np.ndarray) -> float:
    """min over offsets c of sum w (y . nu - c)^2; the minimiser is the weighted mean."""
    t = P @ nu
    c = float(np.dot(w, t)) / float(w.sum())
    return float(np.dot(w, (t - c) ** 2))


def beta_number_bruteforce(mu: DiscreteMeasure, x, r: float, n_dirs: int = 10_000) -> float:
    """Independent beta^2 by direct search over hyperplane normals.

    Every sampled normal gets its best offset in closed form (the weighted
    mean of y . nu); the two best directions are then polished by a local
    search over angles (golden section in 2D, Nelder-Mead on the sphere in
    3D).  No eigen-decomposition is used.
    """
    sub = mu.restrict(x, r)
    if len(sub.weights) == 0:
        raise EmptyMeasureError(f"mu(B_{r:g}({tuple(np.asarray(x, float))})) = 0")
    P, w = sub.points, sub.weights
    n = sub.dim
    if len(w) <= n:
        return 0.0  # n points always lie on a hyperplane
    dirs = _directions(n, n_dirs)
    T = P @ dirs.T
    mean = (w @ T) / w.sum()
    cost = w @ (T - mean) ** 2
    best = float(cost.min())
    step = math.pi / n_dirs if n == 2 else math.sqrt(4 * math.pi / n_dirs)
    for j in np.argsort(cost, kind="stable")[:2]:
        d = dirs[j]
        if n == 2:
            th0 = math.atan2(d[1], d[0])
            f = lambda th: _plane_cost(P, w, np.array([math.cos(th), math.sin(th)]))
            res = optimize.minimize_scalar(f, bracket=(th0 - step, th0 + step),
                                           method="golden", options={"xtol": 1e-9})
            best = min(best, float(res.fun))
        else:
            th0 = math.acos(max(-1.0, min(1.0, d[2])))
            ph0 = math.atan2(d[1], d[0])
            def f3(a):
                th, ph = a
                nu = np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])
                return _plane_cost(P, w, nu)
            res = optimize.minimize(f3, [th0, ph0], method="Nelder-Mead",
                                    options={"xatol": 1e-9, "fatol": 1e-9 * best, "maxiter": 2000,
                                             "initial_simplex": [[th0, ph0], [th0 + step, ph0],
                                                                 [th0, ph0 + step]]})
            best = min(best, float(res.fun))
    return max(best, 0.0) / r ** (n + 1)


# frequency oracles -----------------------------------------------------------

Evaluator = Callable[[np.ndarray, float], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class FrequencyOracle:
    """(centres (m, dim), r) -> (N values, defined flags).

    ``provenance`` is "grid", "analytic" or "synthetic"; only the first two
    are realizable by an actual solution.
    """

    evaluate: Evaluator
    provenance: str
    dim: int
    label: str = ""

    def __post_init__(self) -> None:
        if self.provenance not in ("grid", "analytic", "synthetic"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def realizable(self) -> bool:
        return self.provenance != "synthetic"

    def __call__(self, points, r: float) -> tuple[np.ndarray, np.ndarray]:
        P = np.atleast_2d(np.asarray(points, float))
        if len(P) == 0:
            return np.zeros(0), np.zeros(0, bool)
        N, ok = self.evaluate(P, float(r))
        return np.asarray(N, float), np.asarray(ok, bool)

    @classmethod
    def from_field(cls, field: ScalarField) -> "FrequencyOracle":
        """N_y(r) from grid quadrature; balls leaving the grid are undefined."""

        def ev(P: np.ndarray, r: float):
            N = np.full(len(P), np.nan)
            ok = np.zeros(len(P), bool)
            for i, y in enumerate(P):
                try:
                    s = sample(field, y, r)
                except OutOfDomainError:
                    continue
                N[i] = s.N
                ok[i] = s.n_defined
            return N, ok

        return cls(ev, "grid", field.dim, repr(field))

    @classmethod
    def from_analytic(cls, sol: AnalyticSolution) -> "FrequencyOracle":
        """Exact N_y(r).

        For |v| with v a harmonic polynomial, chi = 1 a.e. and Green's
        identity give N = r int v d_r v / int v^2 on the sphere, which a
        trapezoid/Gauss rule integrates exactly; batched over centres.
        """
        n = sol.dim
        if sol.is_polynomial:
            omega, wq = sphere_rule(n, max(64, 4 * sol.poly.degree + 8))
            def ev(P: np.ndarray, r: float):
                Z = (P[:, None, :] + r * omega[None, :, :]).reshape(-1, n)
                v = sol.poly(Z).reshape(len(P), -1)
                g = sol.poly.gradient(Z).reshape(len(P), -1, n)
                dr = np.einsum("mqk,qk->mq", g, omega)
                num = r * ((v * dr) @ wq)
                den = (v * v) @ wq
                with np.errstate(invalid="ignore", divide="ignore"):
                    N = np.where(den > 0, num / den, -np.inf)
                # M = |B_1| + H (N) >= |B_1| whenever H > 0 and N >= 0
                ok = (den > 0) & (N >= -1e-12)
                return N, ok

            return cls(ev, "analytic", n, str(sol))

        def ev_generic(P: np.ndarray, r: float):
            N = np.full(len(P), np.nan)
            ok = np.zeros(len(P), bool)
            for i, y in enumerate(P):
                try:
                    s = exact_functionals(sol, y, r)
                except NotAvailableError:
                    continue
                N[i] = s.N
                ok[i] = s.n_defined
            return N, ok

        return cls(ev_generic, "analytic", n, str(sol))

    @classmethod
    def synthetic(cls, fn: Callable[[np.ndarray, float], np.ndarray], dim: int,
                  label: str = "") -> "FrequencyOracle":
        def ev(P: np.ndarray, r: float):
            N = np.asarray(fn(P, r), float)
            return N, np.isfinite(N)
        return cls(ev, "synthetic", dim, label)


def synthetic_curve(delta1: float, dim: int = 2, width: float = 1e-9) -> FrequencyOracle:
    """N = 1 + 2 delta1 on the x_1-axis (within ``width``), 1 elsewhere; constant in r."""
    def fn(P, r):
        d = np.linalg.norm(P[:, 1:], axis=1)
        return np.where(d <= width, 1 + 2 * delta1, 1.0)
    return FrequencyOracle.synthetic(fn, dim, f"curve:{delta1:g}")


def synthetic_point(c: float = 1.0, dim: int = 2) -> FrequencyOracle:
    """N_y(r) = 1 + c r / (r + |y|): a single frequency-(1+c) point, nondecreasing in r."""
    def fn(P, r):
        return 1 + c * r / (r + np.linalg.norm(P, axis=1))
    return FrequencyOracle.synthetic(fn, dim, f"point:{c:g}")


def synthetic_line(value: float = 2.0, dim: int = 2) -> FrequencyOracle:
    """N = value on the whole x_1-axis, 1 elsewhere (not realizable for value > 1)."""
    def fn(P, r):
        d = np.linalg.norm(P[:, 1:], axis=1)
        return np.where(d <= 1e-9, value, 1.0)
    return FrequencyOracle.synthetic(fn, dim, f"line:{value:g}")


def synthetic_constant(value: float = 1.0, dim: int = 2) -> FrequencyOracle:
    def fn(P, r):
        return np.full(len(P), float(value))
    return FrequencyOracle.synthetic(fn, dim, f"const:{value:g}")


# probes ----------------------------------------------------------------------

def subspace_inequality_probe(mu: DiscreteMeasure, oracle: FrequencyOracle, x, r: float) -> dict:
    """lhs = beta^2_mu(x, r) against rhs = r^(1-n) int_{B_r(x)} [N_y(20r) - N_y(r)] dmu(y).

    ``violation`` marks lhs > 0 with rhs = 0, which no realizable oracle can
    produce; it is reported, not raised.
    """
    sub = mu.restrict(x, r)
    n = mu.dim
    lhs = beta_number(mu, x, r).beta2
    N20, ok20 = oracle(sub.points, 20 * r)
    N1, ok1 = oracle(sub.points, r)
    ok = ok20 & ok1
    contaminated = bool(not np.all(ok))
    drops = np.where(ok, N20 - N1, 0.0)
    rhs = float(np.dot(sub.weights, drops)) * r ** (1 - n)
    if abs(rhs) < 1e-13 * max(1.0, float(np.dot(sub.weights, np.abs(np.where(ok, N20, 0.0))))):
        rhs = 0.0
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs <= 1e-12 else math.inf)
    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "ratio": float(ratio),
        "violation": bool(rhs == 0.0 and lhs > 1e-6),
        "contaminated": contaminated,
        "realizable": oracle.realizable,
        "mass": sub.total,
    }


@dataclass(frozen=True)
class DichotomyResult:
    """Outcome of the frequency-pinching dichotomy at one ball.

    ``first_alternative``: N^max < 1 + delta.  Otherwise ``E`` holds the
    candidate indices with N^max - N_y(r) < eps and ``fit_point``/``fit_basis``
    the best (n-2)-dimensional affine subspace through them; ``max_dist`` is
    the largest distance of E to it, divided by r.
    """

    nmax: float
    first_alternative: bool
    E: np.ndarray
    fit_point: np.ndarray | None
    fit_basis: np.ndarray | None
    max_dist: float
    within_delta: bool | None

    def as_dict(self) -> dict:
        return {
            "nmax": self.nmax,
            "first_alternative": self.first_alternative,
            "E": self.E.tolist(),
            "fit_point": None if self.fit_point is None else self.fit_point.tolist(),
            "fit_basis": None if self.fit_basis is None else self.fit_basis.tolist(),
            "max_dist": self.max_dist,
            "within_delta": self.within_delta,
        }


def dichotomy_probe(candidates, oracle: FrequencyOracle, x, r: float, delta: float,
                    eps: float) -> DichotomyResult:
    P = np.atleast_2d(np.asarray(candidates, float))
    x = np.asarray(x, float)
    inside = np.linalg.norm(P - x, axis=1) <= r * (1 + 1e-12)
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        raise ValueError("no candidates in B_r(x)")
    N20, ok20 = oracle(P[idx], 20 * r)
    nmax = float(np.max(np.where(ok20, N20, -np.inf)))
    if nmax < 1 + delta:
        return DichotomyResult(nmax, True, np.zeros(0, int), None, None, 0.0, None)
    Nr, okr = oracle(P[idx], r)
    E = idx[okr & (nmax - Nr < eps)]
    if len(E) == 0:
        return DichotomyResult(nmax, False, E, None, None, 0.0, True)
    Q = P[E]
    c = Q.mean(axis=0)
    Y = Q - c
    _, V = np.linalg.eigh(Y.T @ Y)
    basis = V[:, 2:]  # drop the two smallest-variance directions
    resid = Y - (Y @ basis) @ basis.T
    md = float(np.linalg.norm(resid, axis=1).max()) / r
    return DichotomyResult(nmax, False, E, c, basis.T, md, bool(md <= delta))


# covering --------------------------------------------------------------------

@dataclass
class CoveringNode:
    """A ball of the covering.

    ``status``: terminal (N^max < 1 + delta1), subdivided, stopped (radius
    below r_stop and not terminal) or flagged (oracle undefined somewhere).
    ``drop``: large / small relative to the parent's pinched set E, n/a at the root.
    """

    index: int
    center: np.ndarray
    radius: float
    generation: int
    parent: int | None
    drop: str = "n/a"
    status: str = ""
    nmax: float = float("nan")
    n_candidates: int = 0
    children: list[int] = dc_field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "center": [float(v) for v in self.center],
            "radius": self.radius,
            "generation": self.generation,
            "parent": self.parent,
            "drop": self.drop,
            "status": self.status,
            "nmax": self.nmax,
            "n_candidates": self.n_candidates,
            "children": list(self.children),
        }


@dataclass
class CoveringReport:
    nodes: list[CoveringNode]
    dim: int
    delta1: float
    delta2: float
    eps: float
    r_stop: float
    tau: float = 0.5

    @property
    def root(self) -> CoveringNode:
        return self.nodes[0]

    @property
    def terminals(self) -> list[CoveringNode]:
        return [nd for nd in self.nodes if nd.status == "terminal"]

    def generation_counts(self) -> list[dict]:
        gmax = max(nd.generation for nd in self.nodes)
        out = []
        for k in range(gmax + 1):
            gen = [nd for nd in self.nodes if nd.generation == k]
            out.append({
                "generation": k,
                "nodes": len(gen),
                "terminal": sum(nd.status == "terminal" for nd in gen),
                "non_terminal": sum(nd.status != "terminal" for nd in gen),
                "large_drops": sum(nd.drop == "large" for nd in gen),
            })
        return out

    def max_non_terminal(self) -> int:
        return max(c["non_terminal"] for c in self.generation_counts())

    def packing_sum(self, q: float | None = None) -> float:
        """sum over terminal balls of r_i^q (q defaults to n - 1)."""
        q = self.dim - 1 if q is None else q
        return float(sum(nd.radius ** q for nd in self.terminals))

    @property
    def budget(self) -> int:
        return int(math.ceil((self.root.nmax - 1) / self.eps)) + 1 if math.isfinite(self.root.nmax) else 0

    def max_large_drops(self) -> int:
        """Largest number of large-drop labels on any root-to-leaf path."""
        best = 0
        stack = [(0, 0)]
        while stack:
            i, k = stack.pop()
            nd = self.nodes[i]
            k += nd.drop == "large"
            if nd.children:
                stack.extend((c, k) for c in nd.children)
            else:
                best = max(best, k)
        return best

    def budget_ok(self) -> bool:
        return self.max_large_drops() <= self.budget

    def summary(self) -> dict:
        return {
            "dim": self.dim,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "eps": self.eps,
            "r_stop": self.r_stop,
            "root_nmax": self.root.nmax,
            "root_status": self.root.status,
            "n_nodes": len(self.nodes),
            "n_terminal": len(self.terminals),
            "generations": self.generation_counts(),
            "max_non_terminal": self.max_non_terminal(),
            "packing_sum_n_minus_1": self.packing_sum(),
            "packing_sum_tau": self.packing_sum(self.dim - 2 + self.tau),
            "tau": self.tau,
            "budget": self.budget,
            "max_large_drops": self.max_large_drops(),
            "budget_ok": self.budget_ok(),
        }

    def to_json(self, extra: dict | None = None) -> str:
        doc = {"summary": self.summary(), "nodes": [nd.as_dict() for nd in self.nodes]}
        if extra:
            doc.update(extra)
        return json.dumps(_jsonable(doc), sort_keys=True, indent=2)

    def to_dot(self) -> str:
        lines = ["digraph covering {", "  node [shape=circle, fontsize=8];"]
        colour = {"terminal": "palegreen", "subdivided": "lightblue", "stopped": "khaki",
                  "flagged": "salmon"}
        for nd in self.nodes:
            lab = f"{nd.index}\\nk={nd.generation}\\nN={nd.nmax:.3g}"
            lines.append(f'  n{nd.index} [label="{lab}", style=filled, fillcolor={colour.get(nd.status, "white")}];')
        for nd in self.nodes:
            for c in nd.children:
                style = "bold" if self.nodes[c].drop == "large" else "solid"
                lines.append(f"  n{nd.index} -> n{c} [style={style}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _greedy_centers(P: np.ndarray, sep: float) -> np.ndarray:
    """Farthest-point selection until every point is within ``sep`` of a centre.

    Starts from index 0; ties go to the lowest index.  Selected centres are
    pairwise at least ``sep`` apart.
    """
    chosen = [0]
    dmin = np.linalg.norm(P - P[0], axis=1)
    while True:
        j = int(np.argmax(dmin))
        if dmin[j] < sep:
            break
        chosen.append(j)
        dmin = np.minimum(dmin, np.linalg.norm(P - P[j], axis=1))
    return np.array(chosen, int)


def covering_tree(candidates, oracle: FrequencyOracle, center, radius: float, delta1: float,
                  delta2: float, eps: float, r_stop: float, tau: float = 0.5,
                  max_nodes: int = 2_000_000) -> CoveringReport:
    """Generation-by-generation terminal-ball covering of the candidate set.

    A node is terminal when N^max = max over its candidates of N_y(20 r) is
    below 1 + delta1.  Otherwise its candidates are covered by balls of
    radius delta2 r centred at greedily separated candidates; a child is a
    large drop when it holds no point of E = {y : N^max - N_y(r) < eps}.
    Nodes below r_stop are not subdivided.
    """
    if not delta2 <= min(delta1, 1 / 20):
        raise ValueError("need delta2 <= min(delta1, 1/20)")
    if eps <= 0 or r_stop <= 0 or radius <= 0:
        raise ValueError("eps, r_stop and radius must be positive")
    P = np.atleast_2d(np.asarray(candidates, float))
    n = P.shape[1]
    c0 = np.asarray(center, float)
    root_idx = np.flatnonzero(np.linalg.norm(P - c0, axis=1) <= radius * (1 + 1e-12))
    nodes = [CoveringNode(0, c0, float(radius), 0, None)]
    members = {0: root_idx}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            nd = nodes[i]
            idx = members.pop(i)
            nd.n_candidates = int(len(idx))
            if len(idx) == 0:
                nd.status, nd.nmax = "terminal", -math.inf
                continue
            N20, ok = oracle(P[idx], 20 * nd.radius)
            if not np.all(ok):
                nd.status = "flagged"
                nd.nmax = float(np.max(np.where(ok, N20, -np.inf)))
                continue
            nd.nmax = float(N20.max())
            if nd.nmax < 1 + delta1:
                nd.status = "terminal"
                continue
            if nd.radius < r_stop:
                nd.status = "stopped"
                continue
            Nr, okr = oracle(P[idx], nd.radius)
            inE = okr & (nd.nmax - Nr < eps)
            rc = delta2 * nd.radius
            Q = P[idx]
            for j in _greedy_centers(Q, rc):
                near = np.linalg.norm(Q - Q[j], axis=1) <= rc * (1 + 1e-12)
                child = CoveringNode(len(nodes), Q[j].copy(), rc, nd.generation + 1, i,
                                     drop="small" if np.any(near & inE) else "large")
                nodes.append(child)
                nd.children.append(child.index)
                members[child.index] = idx[near]
                nxt.append(child.index)
            nd.status = "subdivided"
            if len(nodes) > max_nodes:
                raise RuntimeError(f"covering exceeded {max_nodes} nodes")
        frontier = nxt
    return CoveringReport(nodes, n, float(delta1), float(delta2), float(eps), float(r_stop), float(tau))


def ray_candidates(angles_deg: Sequence[float], r_max: float, d_min: float = 1e-6,
                   growth: float = 1.005, center=(0.0, 0.0)) -> np.ndarray:
    """2D candidate points on rays from ``center``, log-spaced in distance, plus the centre.

    Log spacing keeps every dyadic scale populated down to ``d_min``, which
    the covering needs near a singular point.
    """
    if not (0 < d_min < r_max and growth > 1):
        raise ValueError("need 0 < d_min < r_max and growth > 1")
    k = int(math.floor(math.log(r_max / d_min) / math.log(growth))) + 1
    d = d_min * growth ** np.arange(k)
    c = np.asarray(center, float)
    out = [c[None, :]]
    for a in angles_deg:
        t = math.radians(a)
        out.append(c + d[:, None] * np.array([math.cos(t), math.sin(t)]))
    return np.concatenate(out)


# Minkowski content and packings ---------------------------------------------

def minkowski_estimate(points, s: float, window: tuple | None = None, h: float | None = None) -> float:
    """Volume of the s-neighbourhood of a point set, by counting grid cells.

    ``window`` = (centre, radius) restricts to a ball; by default the
    neighbourhood is measured in full.  The counting grid has spacing
    ``h`` (default s / 16).
    """
    P = np.atleast_2d(np.asarray(points, float))
    if P.size == 0:
        return 0.0
    n = P.shape[1]
    h = s / 16 if h is None else float(h)
    if h <= 0 or s <= 0:
        raise ValueError("s and h must be positive")
    if window is not None:
        wc, wr = np.asarray(window[0], float), float(window[1])
        lo, hi = wc - wr, wc + wr
    else:
        lo, hi = P.min(axis=0) - s, P.max(axis=0) + s
    tree = cKDTree(P)
    counts = np.maximum(np.ceil((hi - lo) / h).astype(int), 1)
    total = 0
    # sweep slabs along the first axis to bound memory
    rest = [lo[k] + h * (np.arange(counts[k]) + 0.5) for k in range(1, n)]
    R = np.stack([m.ravel() for m in np.meshgrid(*rest, indexing="ij")], axis=1)
    for i in range(counts[0]):
        x0 = lo[0] + h * (i + 0.5)
        C = np.column_stack([np.full(len(R), x0), R])
        d, _ = tree.query(C, distance_upper_bound=s)
        hit = np.isfinite(d) & (d <= s)
        if window is not None:
            hit &= np.linalg.norm(C - wc, axis=1) <= wr
        total += int(hit.sum())
    return total * h ** n


def disjoint_packing_count(points, s: float, window: tuple | None = None) -> int:
    """Greedy count of pairwise disjoint s-balls centred at the points (in input order)."""
    if s <= 0:
        raise ValueError("s must be positive")
    P = np.atleast_2d(np.asarray(points, float))
    if P.size == 0:
        return 0
    if window is not None:
        P = P[np.linalg.norm(P - np.asarray(window[0], float), axis=1) <= float(window[1])]
    tree = cKDTree(P)
    taken = np.zeros(len(P), bool)
    blocked = np.zeros(len(P), bool)
    for i in range(len(P)):
        if blocked[i]:
            continue
        taken[i] = True
        for j in tree.query_ball_point(P[i], 2 * s * (1 - 1e-12)):
            blocked[j] = True
    return int(taken.sum())
