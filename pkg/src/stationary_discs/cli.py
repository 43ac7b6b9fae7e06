"""Command line front end: run scenarios from a JSON config and write reports.

Config schema
-------------
A JSON object; every key is optional.  Complex scalars are written as
``[re, im]`` pairs (plain numbers are read as real).  A complex tensor is a
nested array whose innermost axis holds the ``[re, im]`` pair, or a real
nested array of the plain shape.

``n``
    Dimension (default 2).
``seed``
    Seed for randomized inputs (overridden by ``--seed``).
``tol``
    Pass/fail tolerance of the command (each command has its own default).
``structure``
    ``L_mixed`` and ``L_anti`` with index order ``[i, j, k]``: coefficient of
    ``z^k`` (resp. ``zbar^k``) in the ``Q[i, j]`` block of ``J``.  ``higher``
    is a list of ``{"z": [...], "zbar": [...], "coeff": n x n}`` monomials of
    degree at least two.  Omitted: the standard structure.  The string
    ``"random"`` draws a random graded pair from the seed (in standard form
    for ``continue``).
``hypersurface``
    ``K`` (symmetric), ``H`` (Hermitian), both ``(n-1) x (n-1)``; ``remainder``
    is a list of ``{"z", "zbar", "coeff"}`` monomials whose real part is added
    to ``rho``.  Omitted: the Siegel model.
``model``
    ``A`` (antisymmetric, ``(n-1) x (n-1)``; random when omitted), ``a``,
    ``lambda``, ``N``.
``levi``
    ``vectors`` (list of complex ``(n-1)``-vectors; random when omitted) and
    ``count``.
``continuation``
    ``z_o``, ``v`` (complex ``n``-vectors), ``N``, ``schedule``,
    ``newton_tol``, ``residual_tol``, ``max_iter``, ``min_step``.
``samples``
    Disc sample grid: ``boundary`` nodes, ``rays`` and ``radii`` for the
    interior.
``scenarios``
    Optional list of configs; each is merged over the top level and run as a
    separate scenario writing to its own subdirectory of ``--out``.

Exit codes: 0 when every check passes, 1 on a validation failure, 2 when the
config cannot be parsed, 3 on a runtime failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import PolyMap
from .continuation import (ContinuationProblem, continue_disc, tangency_angle,
                           verify_stationary)
from .cotangent import LiftedDisc, LiftedStructure, conormal_residual, holo_residual
from .rhmodel import (BasePoint, ModelProblem, explicit_disc, kernel_rank_report,
                      model_boundary_residual, model_pde_residual)
from .structures import (AcsModel, HypersurfaceModel, default_samples, is_standard_form,
                         levi_correction, levi_matrix, levi_numeric, normalize_to_standard_form,
                         random_pair, validate_acs)

log = logging.getLogger(__name__)

COMMANDS = ("validate", "levi", "normalize", "model", "kernel", "continue")

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULTS = {
    "n": 2,
    "seed": 0,
    "tol": None,
    "structure": None,
    "hypersurface": None,
    "model": {"A": None, "a": [1.0, 0.0], "lambda": 1.0, "N": 12},
    "levi": {"vectors": None, "count": 10},
    "continuation": {"z_o": None, "v": None, "N": 8, "schedule": [0.0, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0],
                     "newton_tol": 1e-11, "residual_tol": 1e-8, "max_iter": 12, "min_step": 1e-3},
    "samples": {"boundary": 64, "rays": 8, "radii": 4},
}

DEFAULT_TOL = {"validate": 1e-10, "levi": 1e-10, "normalize": 1e-12, "model": 1e-12,
               "kernel": 1e6, "continue": 1e-8}


class ConfigError(ValueError):
    """The config document is malformed (exit code 2)."""


class ValidationError(ValueError):
    """The config parses but violates a mathematical requirement (exit code 1)."""


# ---------------------------------------------------------------------------
# parsing


def parse_complex(obj, shape: tuple, name: str) -> np.ndarray:
    """Complex array of ``shape`` from nested lists with ``[re, im]`` leaves."""
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: not a numeric array") from exc
    if arr.shape == tuple(shape) + (2,):
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.shape == tuple(shape):
        return arr.astype(complex)
    raise ValidationError(f"{name}: expected shape {tuple(shape)} (complex entries as [re, im]), "
                          f"got {arr.shape}")


def encode(obj):
    """JSON-friendly copy: complex numbers as ``[re, im]``, arrays as lists."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class ScenarioConfig:
    """A resolved scenario: the command plus the full config with defaults."""

    command: str
    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, command: str, raw: dict | None, seed: int | None = None) -> "ScenarioConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        raw = {} if raw is None else raw
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - set(DEFAULTS) - {"scenarios", "command"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = _merge(DEFAULTS, {k: v for k, v in raw.items() if k not in ("scenarios", "command")})
        if seed is not None:
            data["seed"] = seed
        if data["tol"] is None:
            data["tol"] = DEFAULT_TOL[command]
        if not isinstance(data["n"], int) or data["n"] < 2:
            raise ConfigError("n must be an integer >= 2")
        return cls(command, data)

    @property
    def n(self) -> int:
        return self.data["n"]

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.data["seed"])

    def resolved(self) -> dict:
        return {"command": self.command, **encode(self.data)}


def _monomials(items, n: int, value_shape: tuple, name: str) -> PolyMap:
    if not isinstance(items, list):
        raise ConfigError(f"{name}: expected a list of monomials")
    terms = {}
    for k, item in enumerate(items):
        try:
            p = tuple(int(x) for x in item["z"])
            q = tuple(int(x) for x in item["zbar"])
            c = item["coeff"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{name}[{k}]: needs integer lists 'z', 'zbar' and 'coeff'") from exc
        if len(p) != n or len(q) != n:
            raise ValidationError(f"{name}[{k}]: exponent lists must have length {n}")
        coeff = parse_complex(c, value_shape, f"{name}[{k}].coeff")
        terms[(p, q)] = terms.get((p, q), 0) + coeff
    return PolyMap(n, terms, value_shape)


def build_pair(cfg: ScenarioConfig) -> tuple[AcsModel, HypersurfaceModel]:
    """Structure and hypersurface described by the config."""
    n, m = cfg.n, cfg.n - 1
    s, h = cfg.data["structure"], cfg.data["hypersurface"]
    if s == "random" or h == "random":
        Jr, rr = random_pair(cfg.rng, n, standard=cfg.command == "continue")
    try:
        if s == "random":
            J = Jr
        elif s is None:
            J = AcsModel.standard(n)
        else:
            Lm = parse_complex(s.get("L_mixed", np.zeros((n, n, n))), (n, n, n), "structure.L_mixed")
            La = parse_complex(s.get("L_anti", np.zeros((n, n, n))), (n, n, n), "structure.L_anti")
            hi = _monomials(s["higher"], n, (n, n), "structure.higher") if s.get("higher") else None
            J = AcsModel(n, Lm, La, hi)
        if h == "random":
            rho = rr
        elif h is None:
            rho = HypersurfaceModel.siegel(n)
        else:
            K = parse_complex(h.get("K", np.zeros((m, m))), (m, m), "hypersurface.K")
            H = parse_complex(h.get("H", np.eye(m)), (m, m), "hypersurface.H")
            rem = None
            if h.get("remainder"):
                rem = _monomials(h["remainder"], n, (), "hypersurface.remainder").real_part()
            rho = HypersurfaceModel(n, K, H, rem)
    except (AttributeError, TypeError) as exc:
        raise ConfigError(f"structure/hypersurface: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, (ConfigError, ValidationError)):
            raise
        raise ValidationError(str(exc)) from exc
    return J, rho


def build_model(cfg: ScenarioConfig) -> tuple[ModelProblem, BasePoint]:
    n, m = cfg.n, cfg.n - 1
    mc = cfg.data["model"]
    if mc.get("A") is None:
        rng = cfg.rng
        A = rng.uniform(-1, 1, (m, m)) + 1j * rng.uniform(-1, 1, (m, m))
        A = 0.5 * (A - A.T)
        mc["A"] = encode(A)
    A = parse_complex(mc["A"], (m, m), "model.A")
    if np.abs(A + A.T).max(initial=0.0) > 1e-14:
        raise ValidationError("model.A must be antisymmetric")
    a = parse_complex(mc["a"], (), "model.a")[()]
    try:
        return ModelProblem(n, A, int(mc["N"])), BasePoint(a, float(mc["lambda"]))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


# ---------------------------------------------------------------------------
# disc samples


def sample_grid(boundary: int, rays: int, radii: int) -> tuple[np.ndarray, np.ndarray]:
    """Boundary circle points and interior points on rays (radii strictly inside)."""
    bd = np.exp(2j * np.pi * np.arange(boundary) / boundary) if boundary > 0 else np.zeros(0, complex)
    r = np.arange(1, radii + 1) / (radii + 1)
    ang = np.exp(2j * np.pi * np.arange(rays) / rays) if rays > 0 else np.zeros(0, complex)
    inner = (ang[:, None] * r[None, :]).ravel()
    return bd, inner


def emit_samples(fd: LiftedDisc, grid: dict, path, J: AcsModel, rho: HypersurfaceModel) -> Path:
    """Write disc samples as CSV with 17 significant digits.

    One row per sample point; columns are the region, ``zeta``, ``f`` and
    ``g`` (real and imaginary parts), the holomorphicity residual norm and, on
    the boundary, ``|rho(f)|`` and the conormal residual norm (empty inside).
    """
    n = fd.n
    bd, inner = sample_grid(int(grid.get("boundary", 0)), int(grid.get("rays", 0)),
                            int(grid.get("radii", 0)))
    header = ["region", "zeta_re", "zeta_im"]
    header += [f"f{i}_{part}" for i in range(1, n + 1) for part in ("re", "im")]
    header += [f"g{i}_{part}" for i in range(1, n + 1) for part in ("re", "im")]
    header += ["holomorphic_residual", "boundary_membership", "conormal_residual"]
    lift = LiftedStructure(J)
    fmt = lambda x: format(float(x), ".17g")
    rows = []
    for region, pts in (("boundary", bd), ("interior", inner)):
        if pts.size == 0:
            continue
        F, G = fd.f(pts), fd.g(pts)
        hol = np.abs(holo_residual(lift, fd, pts)).max(axis=1)
        if region == "boundary":
            cr = conormal_residual(rho, J, fd, pts, check_section=False)
            memb, con = np.abs(cr.r0), np.abs(cr.r).max(axis=1)
        for k, z in enumerate(pts):
            row = [region, fmt(z.real), fmt(z.imag)]
            row += [fmt(x) for i in range(n) for x in (F[k, i].real, F[k, i].imag)]
            row += [fmt(x) for i in range(n) for x in (G[k, i].real, G[k, i].imag)]
            row += [fmt(hol[k])]
            row += [fmt(memb[k]), fmt(con[k])] if region == "boundary" else ["", ""]
            rows.append(row)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ---------------------------------------------------------------------------
# commands


def _run_validate(cfg: ScenarioConfig) -> tuple[bool, dict]:
    J, rho = build_pair(cfg)
    tol = cfg.data["tol"]
    rep = validate_acs(J, tol=tol)
    lift = LiftedStructure(J)
    pts = default_samples(cfg.n, count=10)
    rng = cfg.rng
    fib = 0.5 * (rng.normal(size=pts.shape) + 1j * rng.normal(size=pts.shape))
    lift_res = max(lift.validate(z, p) for z, p in zip(pts, fib))
    std = is_standard_form(J, rho)
    ok = rep.passed and lift_res <= tol
    return ok, {"involution_residual": rep.max_residual, "lift_involution_residual": lift_res,
                "standard_form": std.ok, "standard_form_violations": std.violations}


def _levi_vectors(cfg: ScenarioConfig) -> np.ndarray:
    m = cfg.n - 1
    lc = cfg.data["levi"]
    if lc.get("vectors") is not None:
        vecs = lc["vectors"]
        if not isinstance(vecs, list):
            raise ConfigError("levi.vectors must be a list")
        return np.stack([parse_complex(v, (m,), f"levi.vectors[{k}]") for k, v in enumerate(vecs)])
    rng = cfg.rng
    count = int(lc["count"])
    return rng.normal(size=(count, m)) + 1j * rng.normal(size=(count, m))


def _run_levi(cfg: ScenarioConfig) -> tuple[bool, dict]:
    J, rho = build_pair(cfg)
    tol = cfg.data["tol"]
    origin = np.zeros(cfg.n)
    Jst = AcsModel.standard(cfg.n)
    rows = []
    for v in _levi_vectors(cfg):
        val = levi_numeric(J, rho, origin, v)
        st = levi_numeric(Jst, rho, origin, v)
        corr = levi_correction(J, v)
        rows.append({"v": v, "levi": val, "levi_standard": st, "correction": corr,
                     "identity_error": abs(val - st - corr)})
    M = levi_matrix(J, rho)
    eig = np.linalg.eigvalsh(M)
    err = max((r["identity_error"] for r in rows), default=0.0)
    return err <= tol, {"values": rows, "identity_error": err, "levi_matrix": M,
                        "eigenvalues": eig, "strongly_pseudoconvex": bool(np.all(eig < 0))}


def _run_normalize(cfg: ScenarioConfig) -> tuple[bool, dict]:
    J, rho = build_pair(cfg)
    tol = cfg.data["tol"]
    try:
        J2, rho2, chart = normalize_to_standard_form(J, rho)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    std = is_standard_form(J2, rho2, tol)
    m = cfg.n - 1
    e = np.eye(m)
    origin = np.zeros(cfg.n)
    Jst = AcsModel.standard(cfg.n)
    siegel = HypersurfaceModel.siegel(cfg.n)
    levi_err = max(abs(levi_numeric(J2, rho2, origin, e[a]) - levi_numeric(Jst, siegel, origin, e[a]))
                   for a in range(m))
    A = J2.L_anti[cfg.n - 1, :m, :m]
    chart_lin = np.array([[c.coeff(tuple(np.eye(cfg.n, dtype=int)[k]), (0,) * cfg.n)
                           for k in range(cfg.n)] for c in chart])
    ok = std.ok and levi_err <= 1e-10
    return ok, {"standard_form": std.ok, "violations": std.violations, "A": A,
                "levi_error_vs_model": levi_err, "chart_linear_part": chart_lin}


def _run_model(cfg: ScenarioConfig, out: Path | None) -> tuple[bool, dict]:
    P, b = build_model(cfg)
    tol = cfg.data["tol"]
    fd = explicit_disc(P, b)
    pde = max(float(np.abs(r.coeffs).max()) for r in model_pde_residual(P, fd))
    bdry = model_boundary_residual(P, fd).max_abs()
    ver = verify_stationary(P.acs(), P.hypersurface(), fd, tol=max(tol, 1e-12))
    report = {"pde_residual": pde, "boundary_residual": bdry, "verify": ver.as_dict()}
    if out is not None:
        report["samples"] = str(emit_samples(fd, cfg.data["samples"], out / "samples.csv",
                                             P.acs(), P.hypersurface()))
    ok = pde <= tol and bdry <= tol and ver.passed
    return ok, report


def _run_kernel(cfg: ScenarioConfig) -> tuple[bool, dict]:
    P, b = build_model(cfg)
    rep = kernel_rank_report(P, b)
    expected = 4 * cfg.n
    ok = rep["rank"] == expected and rep["rank_gap"] >= cfg.data["tol"]
    return ok, {**rep, "expected_rank": expected}


def _run_continue(cfg: ScenarioConfig, out: Path | None) -> tuple[bool, dict]:
    n = cfg.n
    cc = cfg.data["continuation"]
    J, rho = build_pair(cfg)
    z_o = np.zeros(n, complex)
    z_o[-1] = 0.01
    z_o = parse_complex(cc["z_o"], (n,), "continuation.z_o") if cc.get("z_o") is not None else z_o
    v = np.zeros(n, complex)
    v[0] = 1.0
    v = parse_complex(cc["v"], (n,), "continuation.v") if cc.get("v") is not None else v
    cc["z_o"], cc["v"] = encode(z_o), encode(v)
    try:
        prob = ContinuationProblem(J, rho, z_o, v, N=int(cc["N"]), schedule=tuple(cc["schedule"]),
                                   newton_tol=float(cc["newton_tol"]),
                                   residual_tol=float(cc["residual_tol"]),
                                   max_iter=int(cc["max_iter"]), min_step=float(cc["min_step"]))
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    fd, trace = continue_disc(prob)
    tol = cfg.data["tol"]
    ver = verify_stationary(J, rho, fd, tol=tol)
    point_err = float(np.abs(fd.f(0.0) - z_o).max())
    angle = tangency_angle(fd, v)
    report = {
        "status": trace.status,
        "trace": [{"t": s.t, "iterations": s.iterations, "residual": s.residual,
                   "accepted": s.accepted} for s in trace.steps],
        "verify": ver.as_dict(),
        "center_error": point_err,
        "tangency_angle": angle,
    }
    if out is not None:
        report["samples"] = str(emit_samples(fd, cfg.data["samples"], out / "samples.csv", J, rho))
    ok = trace.status == "converged" and ver.passed and point_err <= tol and angle <= 1e-6
    return ok, report


def run_scenario(cfg: ScenarioConfig, out: Path | None = None) -> tuple[int, dict]:
    """Run one scenario; returns the exit status and the report document."""
    report = {"config": None, "command": cfg.command}
    try:
        if cfg.command == "validate":
            ok, body = _run_validate(cfg)
        elif cfg.command == "levi":
            ok, body = _run_levi(cfg)
        elif cfg.command == "normalize":
            ok, body = _run_normalize(cfg)
        elif cfg.command == "model":
            ok, body = _run_model(cfg, out)
        elif cfg.command == "kernel":
            ok, body = _run_kernel(cfg)
        else:
            ok, body = _run_continue(cfg, out)
        status = EXIT_OK if ok else EXIT_INVALID
        report.update(body)
    except ConfigError as exc:
        status = EXIT_PARSE
        report["error"] = str(exc)
    except ValidationError as exc:
        status = EXIT_INVALID
        report["error"] = str(exc)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        status = EXIT_RUNTIME
        report["error"] = f"{type(exc).__name__}: {exc}"
    report["config"] = cfg.resolved()
    report["passed"] = status == EXIT_OK
    report["exit_status"] = status
    return status, encode(report)


# ---------------------------------------------------------------------------
# report output


def _flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    if isinstance(obj, dict):
        out = []
        for k, v in obj.items():
            out += _flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list):
        out = []
        for k, v in enumerate(obj):
            out += _flatten(v, f"{prefix}[{k}]")
        return out
    return [(prefix, obj)]


def _csv_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g") if math.isfinite(v) else str(v)
    return "" if v is None else str(v)


def write_report(report: dict, out: Path | None, fmt: str) -> None:
    if out is None:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        with (out / "report.json").open("w") as fh:
            json.dump(report, fh, indent=2)
    else:
        with (out / "report.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["key", "value"])
            for key, val in _flatten(report):
                writer.writerow([key, _csv_value(val)])


def _run_one(args: tuple) -> int:
    command, raw, seed, out, fmt = args
    try:
        cfg = ScenarioConfig.from_dict(command, raw, seed)
    except ConfigError as exc:
        write_report({"command": command, "error": str(exc), "exit_status": EXIT_PARSE,
                      "passed": False}, out, fmt)
        return EXIT_PARSE
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    status, report = run_scenario(cfg, out)
    write_report(report, out, fmt)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stationary-discs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config file (defaults when omitted)")
        p.add_argument("--out", type=Path, help="output directory (report on stdout when omitted)")
        p.add_argument("--seed", type=int, help="seed for randomized inputs")
        p.add_argument("--format", choices=("csv", "json"), default="json", help="report format")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for batch configs")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    raw: object = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except json.JSONDecodeError as exc:
            print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
            return EXIT_PARSE
    if not isinstance(raw, dict):
        print("error: config must be a JSON object", file=sys.stderr)
        return EXIT_PARSE
    scenarios = raw.get("scenarios")
    if scenarios is None:
        return _run_one((args.command, raw, args.seed, args.out, args.format))
    if not isinstance(scenarios, list) or not all(isinstance(s, dict) for s in scenarios):
        print("error: scenarios must be a list of objects", file=sys.stderr)
        return EXIT_PARSE
    if args.out is None:
        print("error: batch configs need --out", file=sys.stderr)
        return EXIT_PARSE
    top = {k: v for k, v in raw.items() if k != "scenarios"}
    jobs = [(args.command, _merge(top, s), args.seed, args.out / f"scenario_{k:03d}", args.format)
            for k, s in enumerate(scenarios)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_one, jobs))
    else:
        codes = [_run_one(j) for j in jobs]
    return max(codes, default=EXIT_OK)


if __name__ == "__main__":
    sys.exit(main())
