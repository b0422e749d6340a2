"""Closed-form variational solutions used as exact oracles.

The catalogue: the zero solution, half-planes a(x.nu)^+, wedges q|x.nu|,
absolute values of harmonic polynomials |v|, the homogeneous profiles
|Re z^k| in 2D, and the two-log-pole cusp (values only).  Solutions are
addressed by strings such as ``wedge:q=0.5,nu=en`` or ``absharm:v=x2-y2``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Mapping

import numpy as np

from .field import GridSpec, ScalarField, sphere_rule, unit_ball_volume
from .sample import FunctionalSample, build_sample

__all__ = [
    "NotAvailableError",
    "Polynomial",
    "AnalyticSolution",
    "zero",
    "halfplane",
    "wedge",
    "wedge_chi_one",
    "absharm",
    "homabs",
    "cusp",
    "parse_solution",
    "exact_functionals",
    "exact_laplacian_mass",
    "nodal_mass_oracle",
    "to_field",
]

KINDS = ("Zero", "HalfPlane", "Wedge", "WedgeWithChiOne", "AbsHarmonic", "HomogeneousAbs", "Cusp")


class NotAvailableError(LookupError):
    """No closed form for this solution/centre combination."""


# polynomials -----------------------------------------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Real polynomial as a mapping exponent-tuple -> coefficient."""

    dim: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    @classmethod
    def from_dict(cls, dim: int, coeffs: Mapping[tuple[int, ...], float]) -> "Polynomial":
        items = tuple(sorted((tuple(e), float(c)) for e, c in coeffs.items() if c != 0))
        return cls(dim, items)

    @classmethod
    def parse(cls, text: str, dim: int) -> "Polynomial":
        """Parse e.g. ``x2-y2``, ``3x2y-y3``, ``xy``, ``x^2 - z^2``."""
        s = text.replace(" ", "").replace("*", "").replace("^", "")
        if not s:
            raise ValueError("empty polynomial")
        names = "xyz"[:dim]
        coeffs: dict[tuple[int, ...], float] = {}
        pos = 0
        term_re = re.compile(r"([+-]?)(\d+(?:\.\d*)?|\.\d+)?((?:[a-z]\d*)*)")
        while pos < len(s):
            m = term_re.match(s, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse polynomial {text!r} at {s[pos:]!r}")
            sign, num, mono = m.groups()
            if not num and not mono:
                raise ValueError(f"cannot parse polynomial {text!r}")
            c = float(num) if num else 1.0
            if sign == "-":
                c = -c
            exps = [0] * dim
            for var, power in re.findall(r"([a-z])(\d*)", mono):
                if var not in names:
                    raise ValueError(f"variable {var!r} not available in dim {dim}")
                exps[names.index(var)] += int(power) if power else 1
            key = tuple(exps)
            coeffs[key] = coeffs.get(key, 0.0) + c
            pos = m.end()
        return cls.from_dict(dim, coeffs)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.terms:
            return np.zeros((0, self.dim), int), np.zeros(0)
        return (np.array([e for e, _ in self.terms], int),
                np.array([c for _, c in self.terms], float))

    def __call__(self, pts) -> np.ndarray:
        p = np.atleast_2d(np.asarray(pts, float))
        exps, coef = self._table
        if not len(coef):
            return np.zeros(len(p))
        # powers[k][j] = p_k ** j, built by repeated products
        deg = int(exps.max())
        mono = np.ones((len(p), len(coef)))
        for k in range(self.dim):
            pw = np.ones((deg + 1, len(p)))
            for j in range(1, deg + 1):
                pw[j] = pw[j - 1] * p[:, k]
            mono *= pw[exps[:, k]].T
        return mono @ coef

    @lru_cache(maxsize=None)
    def derivative(self, k: int) -> "Polynomial":
        d: dict[tuple[int, ...], float] = {}
        for e, c in self.terms:
            if e[k] > 0:
                ne = list(e)
                ne[k] -= 1
                d[tuple(ne)] = d.get(tuple(ne), 0.0) + c * e[k]
        return Polynomial.from_dict(self.dim, d)

    def gradient(self, pts) -> np.ndarray:
        return np.stack([self.derivative(k)(pts) for k in range(self.dim)], axis=1)

    def laplacian(self) -> "Polynomial":
        acc: dict[tuple[int, ...], float] = {}
        for k in range(self.dim):
            for e, c in self.derivative(k).derivative(k).terms:
                acc[e] = acc.get(e, 0.0) + c
        return Polynomial.from_dict(self.dim, {e: c for e, c in acc.items() if abs(c) > 1e-14})

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e, _ in self.terms}) <= 1


def _re_zk(k: int) -> Polynomial:
    """Re (x + iy)^k expanded binomially."""
    coeffs = {}
    for j in range(0, k + 1, 2):
        coeffs[(k - j, j)] = math.comb(k, j) * (-1) ** (j // 2)
    return Polynomial.from_dict(2, coeffs)


# solutions -------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticSolution:
    """A closed-form pair (u, chi).

    Conventions: at kinks ``grad`` returns the one-sided limit from the +nu
    side (for |v|, the side where v > 0).
    """

    kind: str
    dim: int
    slope: float = 1.0
    nu: tuple[float, ...] = ()
    poly: Polynomial | None = None
    degree: int = 0
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if self.kind in ("HalfPlane", "Wedge", "WedgeWithChiOne"):
            if self.slope <= 0:
                raise ValueError("slope must be positive")
            nu = np.asarray(self.nu, float)
            if nu.shape != (self.dim,) or abs(np.linalg.norm(nu) - 1) > 1e-12:
                raise ValueError("nu must be a unit vector of length dim")
        if self.kind in ("AbsHarmonic", "HomogeneousAbs"):
            if self.poly is None or self.poly.dim != self.dim:
                raise ValueError("harmonic profile missing")
            if self.poly.laplacian().terms:
                raise ValueError("polynomial is not harmonic")
            if self.poly.degree < 1:
                raise ValueError("need a sign-changing (non-constant) harmonic polynomial")
        if self.kind in ("HomogeneousAbs", "Cusp") and self.dim != 2:
            raise ValueError(f"{self.kind} is two-dimensional")

    @property
    def is_polynomial(self) -> bool:
        return self.kind in ("AbsHarmonic", "HomogeneousAbs")

    def _nu(self) -> np.ndarray:
        return np.asarray(self.nu, float)

    def eval(self, p) -> np.ndarray | float:
        pts, single = _pts(p, self.dim)
        k = self.kind
        if k == "Zero":
            out = np.zeros(len(pts))
        elif k == "HalfPlane":
            out = self.slope * np.maximum(pts @ self._nu(), 0.0)
        elif k in ("Wedge", "WedgeWithChiOne"):
            out = self.slope * np.abs(pts @ self._nu())
        elif self.is_polynomial:
            out = np.abs(self.poly(pts))
        else:
            out = _cusp_terms(pts)[0]
        return float(out[0]) if single else out

    def grad(self, p) -> np.ndarray:
        pts, single = _pts(p, self.dim)
        k = self.kind
        if k == "Zero":
            g = np.zeros_like(pts)
        elif k == "HalfPlane":
            s = (pts @ self._nu() >= 0).astype(float)
            g = self.slope * s[:, None] * self._nu()[None, :]
        elif k in ("Wedge", "WedgeWithChiOne"):
            s = np.where(pts @ self._nu() >= 0, 1.0, -1.0)
            g = self.slope * s[:, None] * self._nu()[None, :]
        elif self.is_polynomial:
            s = np.where(self.poly(pts) >= 0, 1.0, -1.0)
            g = s[:, None] * self.poly.gradient(pts)
        else:
            g = _cusp_terms(pts)[1]
        return g[0] if single else g

    def chi(self, p) -> np.ndarray | float:
        pts, single = _pts(p, self.dim)
        k = self.kind
        if k == "Zero":
            out = np.zeros(len(pts))
        elif k == "HalfPlane":
            out = (pts @ self._nu() > 0).astype(float)
        elif k == "Cusp":
            out = (_cusp_terms(pts)[0] > 0).astype(float)
        else:
            out = np.ones(len(pts))
        return float(out[0]) if single else out

    def lipschitz_on(self, spec: GridSpec) -> float:
        if self.kind == "Zero":
            return 0.0
        if self.kind in ("HalfPlane", "Wedge", "WedgeWithChiOne"):
            return float(self.slope)
        g = self.grad(spec.nodes())
        return float(np.sqrt((g * g).sum(axis=1)).max())

    def __str__(self) -> str:
        return self.label or self.kind


def _pts(p, dim: int) -> tuple[np.ndarray, bool]:
    a = np.asarray(p, float)
    single = a.ndim == 1
    return a.reshape(-1, dim), single


def _cusp_terms(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u = np.zeros(len(pts))
    g = np.zeros_like(pts)
    for c in (np.array([1.0, 0.0]), np.array([-1.0, 0.0])):
        d = pts - c
        rho = np.sqrt((d * d).sum(axis=1))
        inside = rho < 1
        with np.errstate(divide="ignore", invalid="ignore"):
            u += np.where(inside, -np.log(np.where(inside, rho, 1.0)), 0.0)
            g += np.where(inside[:, None], -d / np.where(inside, rho * rho, 1.0)[:, None], 0.0)
    return u, g


def _unit(dim: int, axis: int) -> tuple[float, ...]:
    e = [0.0] * dim
    e[axis] = 1.0
    return tuple(e)


def zero(dim: int = 2) -> AnalyticSolution:
    return AnalyticSolution("Zero", dim, label="zero")


def halfplane(a: float = 1.0, nu=None, dim: int = 2) -> AnalyticSolution:
    nu = _unit(dim, dim - 1) if nu is None else tuple(np.asarray(nu, float) / np.linalg.norm(nu))
    return AnalyticSolution("HalfPlane", dim, slope=a, nu=nu, label=f"halfplane:a={a:g}")


def wedge(q: float, nu=None, dim: int = 2) -> AnalyticSolution:
    nu = _unit(dim, dim - 1) if nu is None else tuple(np.asarray(nu, float) / np.linalg.norm(nu))
    return AnalyticSolution("Wedge", dim, slope=q, nu=nu, label=f"wedge:q={q:g}")


def wedge_chi_one(q: float, nu=None, dim: int = 2) -> AnalyticSolution:
    nu = _unit(dim, dim - 1) if nu is None else tuple(np.asarray(nu, float) / np.linalg.norm(nu))
    return AnalyticSolution("WedgeWithChiOne", dim, slope=q, nu=nu, label=f"wedgechi1:q={q:g}")


def absharm(v: str | Polynomial, dim: int = 2) -> AnalyticSolution:
    poly = v if isinstance(v, Polynomial) else Polynomial.parse(v, dim)
    return AnalyticSolution("AbsHarmonic", dim, poly=poly, degree=poly.degree,
                            label=f"absharm:v={v}" if isinstance(v, str) else "absharm")


def homabs(k: int = 2) -> AnalyticSolution:
    if k < 2:
        raise ValueError("degree k must be >= 2")
    return AnalyticSolution("HomogeneousAbs", 2, poly=_re_zk(k), degree=k, label=f"homabs:k={k}")


def cusp() -> AnalyticSolution:
    return AnalyticSolution("Cusp", 2, label="cusp")


def _parse_nu(text: str, dim: int) -> tuple[float, ...]:
    t = text.strip().lower()
    if t == "en":
        return _unit(dim, dim - 1)
    m = re.fullmatch(r"e(\d)", t)
    if m:
        k = int(m.group(1))
        if not 1 <= k <= dim:
            raise ValueError(f"axis {t} not available in dim {dim}")
        return _unit(dim, k - 1)
    vec = np.array([float(v) for v in re.split(r"[;:/ ]+", t) if v], float)
    if vec.shape != (dim,) or np.linalg.norm(vec) == 0:
        raise ValueError(f"bad normal {text!r}")
    return tuple(vec / np.linalg.norm(vec))


def parse_solution(text: str, dim: int = 2) -> AnalyticSolution:
    """Parse the solution grammar, e.g. ``wedge:q=0.5,nu=en`` or ``homabs:k=2``.

    Normals are ``en``, ``e1``..``e3`` or semicolon-separated components.
    """
    name, _, rest = text.strip().partition(":")
    name = name.lower()
    params: dict[str, str] = {}
    if rest:
        for part in rest.split(","):
            if "=" not in part:
                raise ValueError(f"bad parameter {part!r} in {text!r}")
            k, v = part.split("=", 1)
            params[k.strip().lower()] = v.strip()
    known = {
        "zero": set(), "halfplane": {"a", "nu"}, "wedge": {"q", "nu"}, "wedgechi1": {"q", "nu"},
        "absharm": {"v"}, "homabs": {"k"}, "cusp": set(),
    }
    if name not in known:
        raise ValueError(f"unknown solution {name!r}; expected one of {sorted(known)}")
    extra = set(params) - known[name]
    if extra:
        raise ValueError(f"unknown parameters {sorted(extra)} for {name}")
    nu = _parse_nu(params["nu"], dim) if "nu" in params else None
    if name == "zero":
        sol = zero(dim)
    elif name == "halfplane":
        sol = halfplane(float(params.get("a", 1.0)), nu, dim)
    elif name == "wedge":
        sol = wedge(float(params.get("q", 1.0)), nu, dim)
    elif name == "wedgechi1":
        sol = wedge_chi_one(float(params.get("q", 1.0)), nu, dim)
    elif name == "absharm":
        sol = absharm(params.get("v", "x2-y2"), dim)
    elif name == "homabs":
        if dim != 2:
            raise ValueError("homabs is two-dimensional")
        sol = homabs(int(params.get("k", 2)))
    else:
        if dim != 2:
            raise ValueError("cusp is two-dimensional")
        sol = cusp()
    return AnalyticSolution(sol.kind, sol.dim, sol.slope, sol.nu, sol.poly, sol.degree, label=text.strip())


def to_field(sol: AnalyticSolution, spec: GridSpec) -> ScalarField:
    """Sample u and chi at the grid nodes."""
    if sol.dim != spec.dim:
        raise ValueError("dimension mismatch")
    pts = spec.nodes()
    return ScalarField(spec, sol.eval(pts).reshape(spec.shape), sol.chi(pts).reshape(spec.shape),
                       sol.lipschitz_on(spec))


# exact functionals -----------------------------------------------------------

def _cap_fraction_integrals(dim: int, r: float, t: float) -> tuple[float, float]:
    """For the half-space {y_n > -t} relative to B_r(0): (volume inside, int_{dB_r} (y_n + t)_+^2)."""
    b = unit_ball_volume(dim) * r ** dim
    if t >= r:
        vol_pos = b
    elif t <= -r:
        vol_pos = 0.0
    elif dim == 2:
        vol_pos = b - (r * r * math.acos(t / r) - t * math.sqrt(r * r - t * t))
    else:
        hcap = r - t
        vol_pos = b - math.pi * hcap * hcap * (3 * r - hcap) / 3
    tt = max(min(t, r), -r)
    if dim == 2:
        th0 = math.asin(-tt / r)
        length = math.pi - 2 * th0
        s1 = 2 * math.cos(th0)
        s2 = 0.5 * length + 0.5 * math.sin(2 * th0)
        sph = r * (r * r * s2 + 2 * r * t * s1 + t * t * length)
        if t >= r:
            sph = r * (r * r * math.pi + t * t * 2 * math.pi)
    else:
        if t >= r:
            sph = 4 * math.pi * r * r * (r * r / 3 + t * t)
        else:
            sph = 2 * math.pi * r * (r + tt) ** 3 / 3
    return vol_pos, sph


def exact_functionals(sol: AnalyticSolution, x, r: float) -> FunctionalSample:
    """Closed-form (D, H, M, N, V) of ``sol`` at ``x``, radius ``r``.

    Wedges and half-planes are exact at every centre; |harmonic polynomial|
    profiles use Green's identity and a sphere rule exact on polynomials.
    """
    n = sol.dim
    x = np.asarray(x, float).reshape(n)
    b1 = unit_ball_volume(n)
    ball = b1 * r ** n
    k = sol.kind
    if k == "Zero":
        return build_sample(x, r, n, 0.0, ball, 0.0)
    if k in ("Wedge", "WedgeWithChiOne"):
        t = float(x @ sol._nu())
        q2 = sol.slope ** 2
        sph = q2 * (r ** (n + 1) * b1 + t * t * n * b1 * r ** (n - 1))
        return build_sample(x, r, n, q2 * ball, 0.0, sph)
    if k == "HalfPlane":
        t = float(x @ sol._nu())
        vol_pos, sph = _cap_fraction_integrals(n, r, t)
        return build_sample(x, r, n, sol.slope ** 2 * vol_pos, ball - vol_pos, sol.slope ** 2 * sph)
    if sol.is_polynomial:
        m = max(64, 2 * (2 * sol.poly.degree + 2))
        omega, w = sphere_rule(n, m)
        pts = x + r * omega
        v = sol.poly(pts)
        dv = np.einsum("ij,ij->i", sol.poly.gradient(pts), omega)
        rs = r ** (n - 1)
        grad2 = float(np.dot(w, v * dv)) * rs
        sph = float(np.dot(w, v * v)) * rs
        return build_sample(x, r, n, grad2, 0.0, sph)
    raise NotAvailableError(f"no closed form for {sol} at {tuple(x)}")


def exact_laplacian_mass(sol: AnalyticSolution, x, r: float) -> float:
    """Closed-form mass of the distributional Laplacian of u on B_r(x)."""
    n = sol.dim
    x = np.asarray(x, float).reshape(n)
    k = sol.kind
    if k == "Zero":
        return 0.0
    if k in ("Wedge", "WedgeWithChiOne", "HalfPlane"):
        t = abs(float(x @ sol._nu()))
        if t >= r:
            return 0.0
        disk = unit_ball_volume(n - 1) * (r * r - t * t) ** ((n - 1) / 2)
        jump = 2 * sol.slope if k != "HalfPlane" else sol.slope
        return jump * disk
    if sol.is_polynomial and n == 2 and sol.poly.is_homogeneous() and np.allclose(x, 0):
        deg = sol.poly.degree
        th = 2 * math.pi * np.arange(256) / 256
        p = sol.poly(np.stack([np.cos(th), np.sin(th)], axis=1))
        amp = math.sqrt(2 * float(np.mean(p * p)))
        return 4 * deg * amp * r ** deg
    raise NotAvailableError(f"no closed-form Laplacian mass for {sol} at {tuple(x)}")


def nodal_mass_oracle(sol: AnalyticSolution, x, r: float, sigma: float, cells: int = 2048) -> float:
    """Brute-force 2 int_{v=0} |grad v| eta(|z - x|) dH^1 for u = |v| in 2D.

    The nodal lines are traced with marching squares on a fine grid over the
    cutoff's support; the line integral uses segment midpoints.  ``eta`` is the
    centred cutoff of :func:`fbscope.field.radial_cutoff`.
    """
    from skimage.measure import find_contours

    from .field import radial_cutoff

    if not (sol.is_polynomial and sol.dim == 2):
        raise NotAvailableError("nodal-line oracle needs a 2D harmonic polynomial")
    x = np.asarray(x, float).reshape(2)
    R = r + 0.5 * sigma
    ax = np.linspace(-R, R, cells + 1)
    X, Y = np.meshgrid(ax + x[0], ax + x[1], indexing="ij")
    V = sol.poly(np.stack([X.ravel(), Y.ravel()], axis=1)).reshape(X.shape)
    step = ax[1] - ax[0]
    total = 0.0
    for c in find_contours(V, 0.0):
        P = x - R + step * c
        mid = 0.5 * (P[1:] + P[:-1])
        seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
        g = np.linalg.norm(sol.poly.gradient(mid), axis=1)
        eta = radial_cutoff(np.linalg.norm(mid - x, axis=1), r, sigma)[0]
        total += float(np.sum(seg * g * eta))
    return 2.0 * total
