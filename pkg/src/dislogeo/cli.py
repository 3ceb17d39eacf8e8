"""Command-line driver: ``dislogeo <command> --config run.ini [--out DIR] [--grid N] [--tol T] [--frame NAME]``.

Exit codes: 0 all checks pass, 1 a residual exceeds its tolerance, 2 bad
configuration or expression, 3 numeric failure (singular frame, open loop, ...).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .config import RunConfig, grid_points, load_config
from .density import (
    burgers_via_surface,
    cube_boundary,
    decompose_density,
    density_divergence_residual,
    density_tensor_at,
    frank_vector,
    self_balance_residual,
)
from .errors import ConfigError, DislogeoError, ExpressionSyntaxError, UnknownIdentifier
from .exprfield import lie_bracket
from .frame import ExpressionFrame, anholonomy_at, anholonomy_tensor_at, brackets_from_jet, develop_loop
from .metric import (
    CurvatureReport,
    ExpressionMetric,
    bianchi_residual,
    christoffel_at,
    killing_residual,
    metric_compatibility_residual,
    riemann_at,
)
from .surfaces import (
    ConstantCurvatureSurface,
    Distribution2D,
    gauss_relation_residual,
    gaussian_curvature_2d,
    involutivity_residual,
    mean_curvature,
)
from .weyl import (
    WeylStructure,
    parallel_transport_length_check,
    thermal_lambda,
    thermal_rescale_frame,
    weyl_compatibility_residual,
    weyl_connection_at,
    weyl_nonmetricity_residual,
)

EXIT_PASS, EXIT_RESIDUAL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_TOL = {
    "anholonomy": 1e-8,
    "density": 1e-8,
    "burgers": 1e-4,
    "curvature": 1e-8,
    "surfaces": 1e-6,
    "thermal": 1e-8,
    "frank": 1e-4,
}


@dataclass
class ResultRecord:
    command: str
    input_digest: str
    version: str = __version__
    results: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def add_residual(self, name: str, values, tol: float):
        arr = np.abs(np.asarray(values, dtype=float)).ravel()
        self.residuals[name] = {"max": float(arr.max()) if arr.size else 0.0, "mean": float(arr.mean()) if arr.size else 0.0}
        self.tolerances[name] = float(tol)
        self.flags[name] = bool(arr.size == 0 or arr.max() <= tol)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**json.loads(text))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def thread_count() -> int | None:
    raw = os.environ.get("DISLOGEO_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"DISLOGEO_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("DISLOGEO_THREADS must be a positive integer")
    return n


def sweep(func: Callable, X: np.ndarray, chunk: int = 256):
    """Evaluate ``func`` on chunks of ``X`` in a thread pool; results are reassembled in order."""
    parts = [X[s : s + chunk] for s in range(0, len(X), chunk)]
    workers = thread_count()
    if workers == 1 or len(parts) == 1:
        outs = [func(p) for p in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(func, parts))
    if isinstance(outs[0], tuple):
        return tuple(np.concatenate(o) for o in zip(*outs))
    return np.concatenate(outs)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_anholonomy(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["anholonomy"] if tol is None else tol
    frame = cfg.require_frame()
    X = grid_points(cfg)

    def work(P):
        jet = frame.jet(P, 1)
        raw = np.einsum("ncA,nabA->nabc", frame.coframe(P, jet.M), brackets_from_jet(jet.M, jet.dM))
        return anholonomy_at(frame, P).C, anholonomy_tensor_at(frame, P).S, raw

    C, S, raw = sweep(work, X)
    rec = ResultRecord("anholonomy", cfg.digest)
    rec.results = {"points": X, "C": C, "S": S}
    rec.add_residual("antisymmetry", raw + raw.transpose(0, 2, 1, 3), tol)
    if isinstance(frame, ExpressionFrame):
        E = frame.vector_fields()
        K = frame.coframe(X)
        sym = np.zeros_like(C)
        for a in range(3):
            for b in range(3):
                sym[:, a, b] = np.einsum("ncA,nA->nc", K, lie_bracket(E[a], E[b])(X))
        rec.add_residual("symbolic_bracket_crosscheck", sym - C, tol)
    fields = {"C": C, "S": S}
    return rec, (X, fields)


def cmd_density(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["density"] if tol is None else tol
    frame = cfg.require_frame()
    X = grid_points(cfg)

    def work(P):
        dec = decompose_density(frame, P)
        return (
            density_tensor_at(frame, P).alpha_frame,
            dec.gamma_sym,
            dec.t,
            dec.t - dec.t_from_anholonomy,
            np.full(len(P), dec.reconstruction_residual),
            self_balance_residual(frame, P),
            density_divergence_residual(frame, P),
        )

    alpha, gamma, t, t_gap, recon, balance, div = sweep(work, X)
    rec = ResultRecord("density", cfg.digest)
    rec.results = {"points": X, "alpha": alpha, "gamma": gamma, "t": t}
    rec.add_residual("t_consistency", t_gap, tol)
    rec.add_residual("reconstruction", recon, tol)
    rec.add_residual("self_balance", balance, tol)
    rec.add_residual("density_divergence", div, max(tol, 1e-7))
    return rec, (X, {"alpha": alpha, "t": t})


def cmd_burgers(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["burgers"] if tol is None else tol
    frame = cfg.require_frame()
    if cfg.loop is None:
        raise ConfigError("burgers needs a [loop] section")
    dev = develop_loop(frame, cfg.loop, cfg.loop_quad)
    rec = ResultRecord("burgers", cfg.digest)
    rec.results = {"developed_curve": dev.points, "b_loop": dev.burgers}
    if cfg.patch is not None:
        b_surf = burgers_via_surface(frame, cfg.patch, cfg.patch_quad)
        rec.results["b_surface"] = b_surf
        rec.add_residual("stokes_gap", [np.linalg.norm(dev.burgers - b_surf)], tol)
    return rec, None


def cmd_curvature(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["curvature"] if tol is None else tol
    g = cfg.require_metric()
    X = grid_points(cfg)

    def work(P):
        rep = riemann_at(g, P)
        return rep.riemann, rep.ricci, np.atleast_1d(rep.scalar), metric_compatibility_residual(g, P), christoffel_at(g, P).gamma

    R, ricci, scalar, compat, gamma = sweep(work, X)
    rec = ResultRecord("curvature", cfg.digest)
    max_r = float(np.max(np.abs(R)))
    rec.results = {"points": X, "christoffel": gamma, "ricci": ricci, "scalar": scalar, "max_abs_riemann": max_r, "flat": max_r <= tol}
    rec.add_residual("metric_compatibility", compat, tol)
    rec.add_residual("bianchi", [bianchi_residual(CurvatureReport(R, ricci, scalar, max_r))], tol)
    return rec, (X, {"scalar": scalar})


def cmd_surfaces(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["surfaces"] if tol is None else tol
    study = cfg.surfaces
    if study is None:
        raise ConfigError("surfaces needs a [surfaces] section")
    rec = ResultRecord("surfaces", cfg.digest)
    if study.family is not None:
        slices = []
        gauss = []
        for c in study.slices:
            row = {"c": c, "H": mean_curvature(study.family, c), "K_c": gaussian_curvature_2d(study.family.geodesic_form().slice(c), study.point)}
            try:
                row["gauss_residual"] = gauss_relation_residual(study.family, c, study.point)
                gauss.append(row["gauss_residual"])
            except DislogeoError as exc:
                row["gauss_residual"] = None
                row["note"] = str(exc)
            slices.append(row)
        rec.results["slices"] = slices
        if gauss:
            rec.add_residual("gauss_relation", gauss, tol)
    rng = np.random.default_rng(0)
    surfaces = []
    for K in study.curvatures:
        surf = ConstantCurvatureSurface(K)
        Q = surf.sample(20, rng)
        computed = gaussian_curvature_2d(surf.metric, Q)
        killing = [float(np.max(killing_residual(surf.metric, u, Q))) for u in surf.killing_fields()]
        surfaces.append({"K": K, "computed_mean": float(np.mean(computed)), "killing": killing})
        rec.add_residual(f"constant_curvature_{K:g}", computed - K, tol)
        rec.add_residual(f"killing_{K:g}", killing, max(tol, 1e-8))
    if surfaces:
        rec.results["constant_curvature"] = surfaces
    if isinstance(cfg.frame, ExpressionFrame):
        X = grid_points(cfg)
        rec.results["involutivity"] = {
            f"{i}{j}": float(np.max(involutivity_residual(Distribution2D.from_frame(cfg.frame, (i, j)), X))) for i, j in ((1, 2), (2, 3), (1, 3))
        }
    return rec, None


def cmd_thermal(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["thermal"] if tol is None else tol
    rec = ResultRecord("thermal", cfg.digest)
    X = grid_points(cfg)
    fields = {}
    if cfg.thermal is not None:
        tm = cfg.thermal
        from .frame import holonomic

        base = cfg.frame or holonomic(domain=cfg.domain)
        heated = thermal_rescale_frame(base, tm)
        theta = tm.temperature(X)
        lam = np.array([thermal_lambda(tm, th) for th in theta])
        mu = np.exp(0.5 * lam)
        rec.results.update({"points": X, "theta": theta, "lambda": lam, "mu": mu})
        fields.update({"theta": theta, "mu": mu})
        if not tm.beta.tree.free_vars:
            b0 = tm.beta(0.0)
            rec.add_residual("mu_closed_form", mu / np.exp(b0 * (theta - tm.theta0)) - 1.0, 1e-10)
        w = tm.weyl_structure(base)
        gap = weyl_connection_at(w, X).gamma - christoffel_at(heated, X).gamma
        rec.add_residual("weyl_equals_levi_civita", gap, tol)
    if cfg.weyl is not None:
        g = cfg.metric if cfg.metric is not None else (cfg.frame if cfg.frame is not None else ExpressionMetric.euclidean())
        w = WeylStructure(g, cfg.weyl.kappa, cfg.weyl.lam, cfg.params)
        rec.add_residual("nonmetricity", weyl_nonmetricity_residual(w, X), tol)
        if w.lam is not None:
            rec.add_residual("compatibility", weyl_compatibility_residual(w, X), tol)
        if cfg.loop is not None:
            res = parallel_transport_length_check(w, cfg.loop, np.array([1.0, 0.3, -0.2]), cfg.loop_quad)
            rec.results["transport"] = {"log_length_change": res.log_length_change, "predicted": res.predicted, "steps": res.steps}
            rec.add_residual("length_law", [res.discrepancy], max(tol, 1e-6))
    if cfg.thermal is None and cfg.weyl is None:
        raise ConfigError("thermal needs a [thermal] or [weyl] section")
    return rec, (X, fields) if fields else None


def cmd_frank(cfg: RunConfig, tol=None):
    tol = DEFAULT_TOL["frank"] if tol is None else tol
    frame = cfg.require_frame()
    lo, hi = cfg.frank_box or (cfg.domain.lo_array + 0.1 * (cfg.domain.hi_array - cfg.domain.lo_array), cfg.domain.hi_array - 0.1 * (cfg.domain.hi_array - cfg.domain.lo_array))
    F = frank_vector(frame, cube_boundary(lo, hi), cfg.patch_quad)
    rec = ResultRecord("frank", cfg.digest)
    rec.results = {"box": [list(map(float, lo)), list(map(float, hi))], "frank": F}
    rec.add_residual("frank_norm", [np.linalg.norm(F)], tol)
    return rec, None


def cmd_selftest(cfg=None, tol=None):
    from .acceptance import run_all

    results = run_all(echo=lambda line: print(line, file=sys.stderr))
    rec = ResultRecord("selftest", "acceptance")
    for r in results:
        key = f"{r.number:02d}_{r.name}"
        rec.results[key] = {"passed": r.passed, "line": r.line()}
        rec.flags[key] = r.passed
    return rec, None


COMMANDS = {
    "anholonomy": cmd_anholonomy,
    "density": cmd_density,
    "burgers": cmd_burgers,
    "curvature": cmd_curvature,
    "surfaces": cmd_surfaces,
    "thermal": cmd_thermal,
    "frank": cmd_frank,
    "selftest": cmd_selftest,
}


def write_csv(path: Path, X: np.ndarray, fields: dict):
    header = ["X1", "X2", "X3"]
    columns = []
    for name, arr in fields.items():
        arr = np.asarray(arr).reshape(len(X), -1)
        if arr.shape[1] == 1:
            header.append(name)
        else:
            shape = np.asarray(fields[name]).shape[1:]
            header += [name + "_" + "".join(str(i + 1) for i in idx) for idx in np.ndindex(*shape)]
        columns.append(arr)
    data = np.hstack([X] + columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dislogeo", description="Geometry of continuously dislocated crystals.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--out", help="directory for <command>.json (and .csv); stdout if omitted")
    parser.add_argument("--grid", type=int, help="points per axis for field sweeps")
    parser.add_argument("--tol", type=float, help="override the pass/fail tolerance")
    parser.add_argument("--frame", help="catalog frame name (overrides [frame])")
    parser.add_argument("--csv", action="store_true", help="also write the field sweep as CSV")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            rec, sweep_data = cmd_selftest()
            cfg = None
        else:
            if args.config is None and args.frame is None:
                raise ConfigError("--config is required (or --frame for frame-only commands)")
            if args.config:
                cfg = load_config(args.config, args.frame)
            else:
                from .config import parse_config

                cfg = parse_config("", args.frame)
            if args.grid is not None:
                if args.grid < 1:
                    raise ConfigError("--grid must be >= 1")
                cfg.grid = args.grid
            rec, sweep_data = COMMANDS[args.command](cfg, args.tol)
    except (ConfigError, ExpressionSyntaxError, UnknownIdentifier) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DislogeoError as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    text = rec.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text + "\n")
        want_csv = args.csv or (cfg is not None and cfg.output_format == "csv")
        if want_csv and sweep_data is not None:
            write_csv(out / f"{args.command}.csv", *sweep_data)
        status = "pass" if rec.passed else "FAIL"
        print(f"{args.command}: {status} -> {out / (args.command + '.json')}")
    else:
        print(text)
    return EXIT_PASS if rec.passed else EXIT_RESIDUAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
