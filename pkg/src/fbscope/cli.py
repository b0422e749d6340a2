"""``fbscope``: solve / functionals / classify / cover / verify from an INI config.

Usage::

    fbscope <command> [--config PATH] [--set section.key=value ...] [--out DIR] [--seed N]

Exit codes: 0 ok, 1 acceptance failure, 2 solver failure, 3 config error.
Every JSON artifact carries ``config_hash`` and ``version``; CSV artifacts
carry them as leading columns.  Field containers (.fbsf) are binary and
get the pair through their JSON sidecar.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import analytic as an
from .acceptance import CRITERIA, criterion_ids, run_criteria
from .fb_analysis import (ClassifyConfig, boundary_to_csv, classify, extract_boundary,
                          measure_profile, measure_profiles_to_json)
from .field import GridSpec, OutOfDomainError, ScalarField, read_fbsf, write_fbsf
from .functionals import _jsonable, m_derivative_check, n_derivative_check, profile, variational_residual
from .geometry import (FrequencyOracle, covering_tree, ray_candidates, synthetic_constant,
                       synthetic_curve, synthetic_line, synthetic_point)
from .singular_perturb import BetaSpec, SolverConfig, UnderResolvedWarning, continuation

__all__ = ["main", "RunConfig", "ConfigError", "load_config", "determinism_pipeline", "tree_digest"]

EXIT_OK, EXIT_ACCEPTANCE, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3
COMMANDS = ("solve", "functionals", "classify", "cover", "verify")


class ConfigError(ValueError):
    """Bad or inconsistent configuration (exit code 3)."""


# configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict[str, dict[str, str]]
    out: Path
    seed: int
    base_dir: Path

    def get(self, section: str, key: str, default=None):
        return self.values.get(section, {}).get(key, default)

    def has(self, section: str, key: str | None = None) -> bool:
        if key is None:
            return section in self.values
        return key in self.values.get(section, {})

    def num(self, section: str, key: str, default: float) -> float:
        v = self.get(section, key)
        if v is None:
            return float(default)
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{section}.{key}: expected a number, got {v!r}") from None

    def integer(self, section: str, key: str, default: int) -> int:
        v = self.num(section, key, default)
        if v != int(v):
            raise ConfigError(f"{section}.{key}: expected an integer, got {v!r}")
        return int(v)

    def flag(self, section: str, key: str, default: bool = False) -> bool:
        v = self.get(section, key)
        if v is None:
            return default
        t = v.strip().lower()
        if t in ("1", "true", "yes", "on"):
            return True
        if t in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{section}.{key}: expected a boolean, got {v!r}")

    def canonical(self) -> str:
        """Sorted ``section.key=value`` lines; the output directory is excluded."""
        lines = [f"command={self.command}", f"run.seed={self.seed}"]
        for sec in sorted(self.values):
            for key in sorted(self.values[sec]):
                if (sec, key) in (("run", "out"), ("run", "seed")):
                    continue
                lines.append(f"{sec}.{key}={self.values[sec][key]}")
        return "\n".join(lines) + "\n"

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"config_hash": self.config_hash, "version": __version__}


def load_config(command: str, path: str | None = None, overrides: Sequence[str] = (),
                out: str | None = None, seed: int | None = None) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {path} not found")
        try:
            cp.read(p)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        base = p.resolve().parent
    values = {s: dict(cp[s]) for s in cp.sections()}
    for item in overrides:
        key, eq, val = item.partition("=")
        sec, dot, name = key.strip().partition(".")
        if not eq or not dot or not sec or not name:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        values.setdefault(sec, {})[name] = val.strip()
    if out is not None:
        values.setdefault("run", {})["out"] = out
    if seed is not None:
        values.setdefault("run", {})["seed"] = str(seed)
    run = values.get("run", {})
    try:
        s = int(run.get("seed", "0"))
    except ValueError:
        raise ConfigError(f"run.seed must be an integer, got {run.get('seed')!r}") from None
    cfg = RunConfig(command, values, Path(run.get("out", "fbscope-out")), s, base)
    _validate(cfg)
    return cfg


def _field_sources(cfg: RunConfig) -> list[str]:
    return [k for k, present in (("field.analytic", cfg.has("field", "analytic")),
                                 ("field.path", cfg.has("field", "path")),
                                 ("solver", cfg.has("solver"))) if present]


def _validate(cfg: RunConfig) -> None:
    src = _field_sources(cfg)
    synthetic = str(cfg.get("cover", "oracle", "")).startswith("synthetic:")
    if cfg.command == "solve" and src != ["solver"]:
        raise ConfigError("solve needs a [solver] block and no other field source")
    if cfg.command in ("functionals", "classify") or (cfg.command == "cover" and not synthetic):
        if len(src) != 1:
            raise ConfigError(f"exactly one field source required, found {src or 'none'}")
    if cfg.command == "cover" and synthetic and src:
        raise ConfigError("a synthetic oracle takes no field source")
    if cfg.has("field", "path"):
        p = _resolve(cfg, cfg.get("field", "path"))
        if not p.is_file():
            raise ConfigError(f"field.path {p} does not exist")
    if cfg.has("field", "analytic"):
        try:
            an.parse_solution(cfg.get("field", "analytic"), _dim(cfg))
        except ValueError as exc:
            raise ConfigError(f"field.analytic: {exc}") from None


def _resolve(cfg: RunConfig, path: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else cfg.base_dir / p


def _dim(cfg: RunConfig) -> int:
    d = cfg.integer("grid", "dim", 2)
    if d not in (2, 3):
        raise ConfigError("grid.dim must be 2 or 3")
    return d


def _grid(cfg: RunConfig) -> GridSpec:
    cells = cfg.integer("grid", "cells", 128)
    if cells < 4:
        raise ConfigError("grid.cells must be at least 4")
    hw = cfg.num("grid", "half_width", 1.0)
    if not hw > 0:
        raise ConfigError("grid.half_width must be positive")
    return GridSpec.cube(_dim(cfg), cells, hw)


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _points(text: str, dim: int, what: str) -> list[tuple[float, ...]]:
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        v = _floats(chunk, what)
        if len(v) != dim:
            raise ConfigError(f"{what}: point {chunk.strip()!r} is not {dim}-dimensional")
        pts.append(tuple(v))
    if not pts:
        raise ConfigError(f"{what}: no points given")
    return pts


# shared helpers --------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(doc: dict) -> str:
    return json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _solver_parts(cfg: RunConfig) -> tuple[GridSpec, BetaSpec, object, list[float], SolverConfig]:
    spec = _grid(cfg)
    if cfg.has("solver", "ladder"):
        ladder = _floats(cfg.get("solver", "ladder"), "solver.ladder")
    else:
        ladder = [cfg.num("solver", "epsilon", 0.1)]
    if not ladder or any(e <= 0 for e in ladder):
        raise ConfigError("solver epsilons must be positive")
    try:
        beta = BetaSpec(ladder[0], cfg.get("solver", "profile", "poly"))
    except ValueError as exc:
        raise ConfigError(f"solver.profile: {exc}") from None
    data = cfg.get("solver", "dirichlet", "1.0")
    try:
        dirichlet: object = float(data)
    except ValueError:
        try:
            dirichlet = an.parse_solution(data, spec.dim)
        except ValueError as exc:
            raise ConfigError(f"solver.dirichlet: {exc}") from None
    sc = SolverConfig(cfg.num("solver", "tol", 1e-10), cfg.integer("solver", "max_iter", 200),
                      cfg.num("solver", "damping_floor", 2.0 ** -10))
    return spec, beta, dirichlet, ladder, sc


def _run_solver(cfg: RunConfig):
    spec, beta, dirichlet, ladder, sc = _solver_parts(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UnderResolvedWarning)
        try:
            lad = continuation(spec, beta, dirichlet, ladder, sc)
        except ValueError as exc:
            raise ConfigError(f"solver: {exc}") from None
    notes = sorted({str(w.message) for w in caught if issubclass(w.category, UnderResolvedWarning)})
    return lad, notes


def _load_field(cfg: RunConfig, grid: bool = True):
    """The configured field: an AnalyticSolution (``grid=False``) or a ScalarField."""
    if cfg.has("field", "analytic"):
        sol = an.parse_solution(cfg.get("field", "analytic"), _dim(cfg))
        return sol if not grid else an.to_field(sol, _grid(cfg))
    if cfg.has("field", "path"):
        try:
            return read_fbsf(_resolve(cfg, cfg.get("field", "path")))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"field.path: {exc}") from None
    lad, _ = _run_solver(cfg)
    last = lad.results[-1]
    if not last.converged:
        raise SolverFailure(last.diagnostics())
    return last.field


class SolverFailure(RuntimeError):
    def __init__(self, diagnostics: dict):
        super().__init__("solver did not converge")
        self.diagnostics = diagnostics


# commands --------------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    lad, notes = _run_solver(cfg)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    with_residual = cfg.flag("solver", "residual", True)
    failed = []
    for k, res in enumerate(lad.results):
        stem = f"rung{k}"
        write_fbsf(res.field, out / f"{stem}.fbsf")
        side = {**cfg.stamp(), **res.diagnostics(), "rung": k, "container": f"{stem}.fbsf",
                "cauchy_sup_to_previous": lad.cauchy_sup[k - 1] if k else None,
                "chi_l1_to_previous": lad.chi_l1[k - 1] if k else None,
                "warnings": [n for n in notes if f"epsilon={res.epsilon:g} " in n]}
        if with_residual and res.converged:
            rep = variational_residual(res.field, seed=cfg.seed)
            side["domain_variation_residual"] = rep.value
            side["domain_variation_tolerance"] = rep.tolerance
        _write(out / f"{stem}.json", _dump(side))
        if not res.converged:
            failed.append(k)
    summary = {**cfg.stamp(), "epsilons": list(lad.epsilons), "cauchy_sup": list(lad.cauchy_sup),
               "chi_l1": list(lad.chi_l1), "converged": [r.converged for r in lad.results]}
    _write(out / "solve.json", _dump(summary))
    if failed:
        diag = {**cfg.stamp(), "failed_rungs": failed,
                "diagnostics": [lad.results[k].diagnostics() | {"history": list(lad.results[k].history)}
                                for k in failed]}
        _write(out / "diagnostics.json", _dump(diag))
        print(f"solver failed on rungs {failed}; see {out / 'diagnostics.json'}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


FUNCTIONAL_COLUMNS = ("center", "x", "r", "D", "H", "M", "N", "V", "quad_err", "n_err", "n_defined",
                      "m_monotone_next", "n_monotone_next", "m_check_rel", "n_check_rel", "error")


def cmd_functionals(cfg: RunConfig) -> int:
    exact = cfg.flag("functionals", "exact", False)
    fld = _load_field(cfg, grid=not exact)
    dim = fld.dim
    centers = _points(cfg.get("functionals", "centers", ",".join(["0"] * dim)), dim, "functionals.centers")
    r_min = cfg.num("functionals", "r_min", 0.05)
    r_max = cfg.num("functionals", "r_max", 0.5)
    n_radii = cfg.integer("functionals", "n_radii", 8)
    checks = cfg.flag("functionals", "derivative_checks", True)
    if n_radii < 8 or not 0 < r_min < r_max:
        raise ConfigError("functionals: need n_radii >= 8 and 0 < r_min < r_max")
    stamp = cfg.stamp()
    rows, summary = [], []
    for ci, x in enumerate(centers):
        xs = ";".join(_fmt(v) for v in x)
        try:
            prof = profile(fld, x, r_min, r_max, n_radii)
        except OutOfDomainError as exc:
            rows.append({"center": str(ci), "x": xs, "error": f"out_of_domain: {exc}"})
            summary.append({"center": list(x), "error": "out_of_domain"})
            continue
        for i, s in enumerate(prof.samples):
            row = {"center": str(ci), "x": xs, **{k: getattr(s, k) for k in
                                                   ("r", "D", "H", "M", "N", "V", "quad_err", "n_err",
                                                    "n_defined")}}
            if i < len(prof.m_monotone):
                row["m_monotone_next"] = prof.m_monotone[i]
                row["n_monotone_next"] = prof.n_monotone[i]
            if s.H <= 0:
                row["error"] = "sentinel: H = 0"
            elif checks:
                try:
                    row["m_check_rel"] = m_derivative_check(fld, x, s.r).relative
                    if s.n_defined:
                        row["n_check_rel"] = n_derivative_check(fld, x, s.r).relative
                except (OutOfDomainError, ValueError):
                    pass
            rows.append(row)
        summary.append({"center": list(x), "m_monotone": all(prof.m_monotone),
                        "n_monotone": all(v is not False for v in prof.n_monotone),
                        "certified_from": prof.certified_from})
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "functionals.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config_hash", "version", *FUNCTIONAL_COLUMNS])
        for row in rows:
            w.writerow([stamp["config_hash"], stamp["version"],
                        *(_fmt(row.get(c)) if c not in ("center", "x", "error") else row.get(c, "")
                          for c in FUNCTIONAL_COLUMNS)])
    _write(out / "functionals.json", _dump({**stamp, "centers": summary}))
    return EXIT_OK


def _classify_config(cfg: RunConfig) -> ClassifyConfig:
    base = ClassifyConfig()
    kw = {}
    for name in ("r_min_cells", "r_max_cells", "tol_class", "gap", "h0_cells", "rel_tol", "normal_cells"):
        if cfg.has("classify", name):
            kw[name] = cfg.num("classify", name, 0.0)
    if cfg.has("classify", "n_radii"):
        kw["n_radii"] = cfg.integer("classify", "n_radii", 8)
    return replace(base, **kw)


def cmd_classify(cfg: RunConfig, labels_only: bool = False) -> int:
    fld = _load_field(cfg)
    labels_only = labels_only or cfg.flag("classify", "labels_only", False)
    stamp = cfg.stamp()
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    pts = extract_boundary(fld)
    summary: dict = {**stamp, "u_zero": bool(pts.u_zero)}
    if not pts.u_zero:
        pts = classify(fld, pts, _classify_config(cfg))
        sig = pts.mask("sigmaH")
        high = sig & (pts.N0 > 1.1)
        summary.update(counts=pts.counts(), length=pts.length,
                       sigmaH_high_frequency_share=float(pts.weights[high].sum() / pts.weights[sig].sum())
                       if sig.any() else None)
    boundary_to_csv(pts, out / "boundary.csv", extra={"config_hash": stamp["config_hash"],
                                                       "version": stamp["version"]})
    if not labels_only and not pts.u_zero:
        centers = _points(cfg.get("classify", "centers", ",".join(["0"] * fld.dim)), fld.dim, "classify.centers")
        radii = _floats(cfg.get("classify", "radii", "0.1,0.2,0.3,0.4"), "classify.radii")
        profs = []
        for x in centers:
            try:
                profs.append(measure_profile(fld, x, pts, radii))
            except OutOfDomainError as exc:
                raise ConfigError(f"classify.centers: {exc}") from None
        summary["max_mismatch"] = [float(np.max(p.mismatch)) for p in profs]
        _write(out / "measure_profiles.json", measure_profiles_to_json(profs, extra=stamp) + "\n")
    _write(out / "summary.json", _dump(summary))
    return EXIT_OK


def _synthetic(spec: str, dim: int) -> FrequencyOracle:
    _, _, rest = spec.partition(":")
    kind, _, params = rest.partition(":")
    kv = {}
    for part in filter(None, params.split(",")):
        k, eq, v = part.partition("=")
        if not eq:
            raise ConfigError(f"cover.oracle: bad parameter {part!r}")
        kv[k.strip()] = float(v)
    makers = {"line": lambda: synthetic_line(kv.get("value", 2.0), dim),
              "curve": lambda: synthetic_curve(kv.get("delta1", 0.2), dim),
              "point": lambda: synthetic_point(kv.get("c", 1.0), dim),
              "constant": lambda: synthetic_constant(kv.get("value", 1.0), dim)}
    if kind not in makers:
        raise ConfigError(f"cover.oracle: unknown synthetic oracle {kind!r}; expected {sorted(makers)}")
    return makers[kind]()


def _candidates(cfg: RunConfig, dim: int, fld) -> np.ndarray:
    text = cfg.get("cover", "candidates", "segment")
    kind, _, params = text.partition(":")
    kv = dict(p.split("=", 1) for p in params.split(",") if "=" in p)
    if kind == "segment":
        n = int(float(kv.get("n", 2001)))
        half = float(kv.get("half_length", 0.5))
        P = np.zeros((n, dim))
        P[:, 0] = np.linspace(-half, half, n)
        return P
    if kind == "rays":
        if dim != 2:
            raise ConfigError("cover.candidates rays are two-dimensional")
        angles = _floats(kv.get("angles", "0/180").replace("/", ","), "cover.candidates angles")
        return ray_candidates(angles, float(kv.get("r_max", 0.5)), float(kv.get("dmin", 1e-6)),
                              float(kv.get("growth", 1.005)))
    if kind == "boundary":
        if fld is None:
            raise ConfigError("cover.candidates=boundary needs a field source")
        grid_field = fld if isinstance(fld, ScalarField) else an.to_field(fld, _grid(cfg))
        return extract_boundary(grid_field).points
    raise ConfigError(f"cover.candidates: unknown kind {kind!r}; expected segment, rays or boundary")


def cmd_cover(cfg: RunConfig) -> int:
    dim = _dim(cfg)
    spec = cfg.get("cover", "oracle", "field")
    fld = None
    if spec.startswith("synthetic:"):
        oracle = _synthetic(spec, dim)
    else:
        fld = _load_field(cfg, grid=cfg.has("solver") or cfg.has("field", "path"))
        oracle = (FrequencyOracle.from_analytic(fld) if isinstance(fld, an.AnalyticSolution)
                  else FrequencyOracle.from_field(fld))
    P = _candidates(cfg, dim, fld)
    center = _points(cfg.get("cover", "center", ",".join(["0"] * dim)), dim, "cover.center")[0]
    try:
        rep = covering_tree(P, oracle, center, cfg.num("cover", "radius", 0.5),
                            cfg.num("cover", "delta1", 0.2), cfg.num("cover", "delta2", 0.05),
                            cfg.num("cover", "eps", 0.1), cfg.num("cover", "r_stop", 1e-3),
                            cfg.num("cover", "tau", 0.5))
    except ValueError as exc:
        raise ConfigError(f"cover: {exc}") from None
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "covering.json", rep.to_json(extra={**cfg.stamp(), "oracle": oracle.label,
                                                     "provenance": oracle.provenance}) + "\n")
    stamp = cfg.stamp()
    dot = rep.to_dot()
    _write(out / "covering.dot",
           f"// fbscope {stamp['version']} config {stamp['config_hash']}\n{dot}\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    ids_text = cfg.get("verify", "criteria", "all")
    if ids_text.strip().lower() == "all":
        ids = criterion_ids()
    else:
        ids = [int(v) for v in _floats(ids_text, "verify.criteria")]
        bad = [i for i in ids if i not in CRITERIA]
        if bad:
            raise ConfigError(f"verify.criteria: unknown ids {bad}")
    ts = cfg.num("verify", "tol_scale", 1.0)
    if not ts > 0:
        raise ConfigError("verify.tol_scale must be positive")
    results = run_criteria(ids, ts, echo=None if cfg.flag("verify", "quiet") else print)
    failed = [r.cid for r in results if not r.passed]
    doc = {**cfg.stamp(), "tol_scale": ts, "criteria": [r.as_dict() for r in results],
           "passed": not failed, "failed": failed}
    _write(cfg.out / "verify.json", _dump(doc))
    if failed:
        print("FAILED criteria: " + ", ".join(str(i) for i in failed), file=sys.stderr)
        return EXIT_ACCEPTANCE
    return EXIT_OK


# determinism helpers ---------------------------------------------------------

def determinism_pipeline(out: Path, seed: int = 0) -> None:
    """A small run of every command into ``out`` (used by the determinism check)."""
    out = Path(out)
    runs = [
        ("functionals", ["field.analytic=homabs:k=2", "grid.cells=64", "functionals.r_max=0.4"]),
        ("classify", ["field.analytic=absharm:v=x2-y2", "grid.cells=96", "classify.radii=0.2,0.4"]),
        ("cover", ["cover.oracle=synthetic:point:c=1", "cover.candidates=rays:angles=0/90,dmin=1e-4,growth=1.05",
                   "cover.r_stop=1e-3"]),
        ("solve", ["solver.ladder=0.4,0.2", "solver.dirichlet=wedge:q=1", "grid.cells=32"]),
        ("verify", ["verify.criteria=1,7", "verify.quiet=1"]),
    ]
    for cmd, sets in runs:
        cfg = load_config(cmd, None, sets, str(out / cmd), seed)
        code = _dispatch(cfg)
        if code not in (EXIT_OK, EXIT_ACCEPTANCE):
            raise RuntimeError(f"{cmd} exited with {code}")


def tree_digest(root: Path) -> dict[str, str]:
    root = Path(root)
    return {str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file()}


# entry point -----------------------------------------------------------------

def _dispatch(cfg: RunConfig, labels_only: bool = False) -> int:
    if cfg.command == "solve":
        return cmd_solve(cfg)
    if cfg.command == "functionals":
        return cmd_functionals(cfg)
    if cfg.command == "classify":
        return cmd_classify(cfg, labels_only)
    if cfg.command == "cover":
        return cmd_cover(cfg)
    return cmd_verify(cfg)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fbscope", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fbscope {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="random seed (default 0)")
        if name == "verify":
            sp.add_argument("--list", action="store_true", help="print criterion ids and exit")
        if name == "classify":
            sp.add_argument("--labels-only", action="store_true", help="skip measure profiles")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.command == "verify" and args.list:
        for cid in criterion_ids():
            print(f"{cid}\t{CRITERIA[cid].name}")
        return EXIT_OK
    try:
        cfg = load_config(args.command, args.config, args.overrides, args.out, args.seed)
        return _dispatch(cfg, getattr(args, "labels_only", False))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc.diagnostics}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
