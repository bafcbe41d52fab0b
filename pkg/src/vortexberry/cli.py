"""Config-driven experiment runner with JSON/CSV artifacts.

``vortexberry <subcommand> --config cfg.json [--out dir]`` where the
subcommand is one of solve, frame, curvature, holonomy, duality, sweep.
Exit codes: 0 all configured checks pass, 1 check failure, 2 bad
configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .conventions import CONVENTIONS_VERSION
from .errors import (AccuracyError, CheckFailure, ConfigurationError,
                     DiagnosticError, LoopClosureError, SolverError)
from .lattice import Divisor, TorusGrid, chern_degree, dump_field
from .vortex import (DEFAULT_FIELD_TOL, bradlow_limit, gl_energy,
                     solve_vortex, taubes_bounds_check, vortex_residual)

SCHEMA = {
    "type": "object",
    "required": ["experiment", "grid", "divisor"],
    "properties": {
        "experiment": {"enum": ["solve", "frame", "curvature", "holonomy",
                                "duality", "sweep"]},
        "grid": {
            "type": "object",
            "required": ["n"],
            "properties": {"n": {"type": "integer", "minimum": 8},
                           "side_length": {"type": "number",
                                           "exclusiveMinimum": 0}},
        },
        "tau_over_tau0": {
            "anyOf": [{"type": "number", "exclusiveMinimum": 1},
                      {"type": "array", "minItems": 1,
                       "items": {"type": "number", "exclusiveMinimum": 1}}]
        },
        "divisor": {"type": "array",
                    "items": {"type": "array", "minItems": 2, "maxItems": 2,
                              "items": {"type": "number"}}},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "loop": {"type": "object"},
        "steps": {"type": "integer", "minimum": 8},
        "probes": {"type": "array"},
        "margin": {"type": "number"},
        "output_dir": {"type": "string"},
    },
    "additionalProperties": True,
}


def _validate(config: dict):
    if jsonschema is not None:
        try:
            jsonschema.validate(config, SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigurationError(f"config invalid: {exc.message}") from exc
    else:  # minimal fallback
        for key in ("experiment", "grid", "divisor"):
            if key not in config:
                raise ConfigurationError(f"config missing {key!r}")
    taus = config.get("tau_over_tau0", 2.0)
    taus = taus if isinstance(taus, list) else [taus]
    if any(t <= 1 for t in taus):
        raise ConfigurationError("tau_over_tau0 entries must exceed 1")


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        if obj.size > 64:
            return {"shape": list(obj.shape), "summary": "omitted (see dumps)"}
        return obj.tolist()
    if dataclasses.is_dataclass(obj):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()[:16]


def _grid_and_taus(config: dict):
    g = config["grid"]
    grid = TorusGrid(int(g["n"]), float(g.get("side_length", 1.0)))
    divisor = Divisor(np.asarray(config["divisor"], dtype=float))
    taus = config.get("tau_over_tau0", 2.0)
    taus = taus if isinstance(taus, list) else [taus]
    if divisor.d > 0:
        tau0 = bradlow_limit(divisor.d, grid.area)
    else:
        tau0 = 1.0
    return grid, divisor, [t * tau0 for t in taus], taus


def _write_report(out_dir, name, payload, config):
    payload = dict(payload)
    payload["config_hash"] = _config_hash(config)
    payload["conventions_version"] = CONVENTIONS_VERSION
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2)
    return path


def _write_csv(out_dir, name, header, rows):
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# ----------------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------------

def _solve_point(config, grid, divisor, tau, out_dir, tag=""):
    tol = float(config.get("tol", DEFAULT_FIELD_TOL))
    field, report = solve_vortex(divisor, tau, grid, tol=tol)
    r1, r2 = vortex_residual(field)
    energy = gl_energy(field)
    w_int = float(np.sum(field.w)) * grid.spacing ** 2
    checks = {
        "residual_ok": field.residual_sup <= tol,
        "degree_ok": chern_degree(field.links, grid) == divisor.d,
        "flux_ok": abs(w_int - 2 * np.pi * divisor.d)
                   <= 1e-6 * tau * grid.area,
        "energy_ok": abs(energy / (2 * np.pi * tau * max(divisor.d, 1)) - 1.0)
                     <= 0.01 if divisor.d > 0 else energy <= 1e-12,
        "max_phi_ok": float(np.max(np.abs(field.phi) ** 2))
                      <= tau * (1 + 1e-6),
    }
    payload = {
        "experiment": "solve", "tau": tau, "d": divisor.d,
        "energy": energy, "energy_over_bound": energy / (2 * np.pi * tau * max(divisor.d, 1)),
        "residual_sup_normalized": field.residual_sup,
        "sup_r1": float(np.max(r1)), "sup_r2": float(np.max(r2)),
        "integral_w": w_int,
        "max_phi_sq_over_tau": float(np.max(np.abs(field.phi) ** 2)) / tau,
        "newton_iterations": report.newton_iterations,
        "scalar_residual": report.final_residual,
        "checks": checks,
    }
    if divisor.d > 0:
        try:
            max_sq, fit = taubes_bounds_check(field)
            payload["decay_fit"] = {"c_fit": fit.c_fit,
                                    "exponent_fit": fit.exponent_fit,
                                    "r_squared": fit.r_squared}
        except DiagnosticError as exc:
            payload["decay_fit"] = {"error": str(exc)}
    dump_field(os.path.join(out_dir, f"phi{tag}.dat"), field.phi, grid, "complex")
    dump_field(os.path.join(out_dir, f"links{tag}.dat"), field.links, grid, "links")
    return field, payload


def run_solve(config, out_dir):
    grid, divisor, taus, _ = _grid_and_taus(config)
    field, payload = _solve_point(config, grid, divisor, taus[0], out_dir)
    _write_report(out_dir, "report.json", payload, config)
    return all(payload["checks"].values())


def run_frame(config, out_dir):
    from .lattice import dist_to_divisor
    from .tangent import (approximate_tangent, canonical_seeds,
                          horizontal_tangent, tangent_frame)
    grid, divisor, taus, _ = _grid_and_taus(config)
    tol = float(config.get("tol", DEFAULT_FIELD_TOL))
    field, _ = solve_vortex(divisor, taus[0], grid, tol=tol)
    frame, vectors = tangent_frame(field)
    gram = frame.gram
    dev = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    payload = {
        "experiment": "frame", "tau": taus[0], "d": divisor.d,
        "gram": gram.tolist(), "gram_deviation": dev,
        "y_norms": frame.y_norms.tolist(),
        "sup_xy_diff": frame.sup_xy_diff.tolist(),
        "checks": {"gram_symmetric":
                   bool(np.allclose(gram, gram.T, atol=1e-10)),
                   "diag_positive": bool(np.all(np.diag(gram) > 0))},
    }
    _write_report(out_dir, "report.json", payload, config)
    x, rows = horizontal_tangent(field, canonical_seeds(field)[0])
    y = approximate_tangent(field, canonical_seeds(field)[0])
    diff = x - y
    mag = np.sqrt(np.abs(diff.alpha) ** 2 + np.abs(diff.psi) ** 2)
    dists = dist_to_divisor(field.divisor, grid)
    order = np.argsort(dists, axis=None)
    stride = max(1, order.size // 2000)
    samples = [[float(dists.flat[i]), float(mag.flat[i])]
               for i in order[::stride]]
    _write_csv(out_dir, "xy_diff.csv", ["dist", "xy_diff"], samples)
    return all(payload["checks"].values())


def run_curvature(config, out_dir):
    from .berry import curvature_report
    grid, divisor, taus, _ = _grid_and_taus(config)
    tol = float(config.get("tol", DEFAULT_FIELD_TOL))
    field, _ = solve_vortex(divisor, taus[0], grid, tol=tol)
    rep = curvature_report(field)
    payload = {
        "experiment": "curvature", "tau": taus[0], "d": divisor.d,
        "sup_residual": rep.sup_residual, "sup_predicted": rep.sup_predicted,
        "residual_over_predicted": rep.sup_residual / rep.sup_predicted,
        "coeff_bounds": rep.coeff_bounds, "disk_integral": rep.disk_integral,
        "checks": {"positivity": bool(np.min(rep.diag_profile) >= -1e-10)},
    }
    _write_report(out_dir, "report.json", payload, config)
    n = grid.n
    rows = [[i * grid.spacing, float(rep.diag_profile[i, n // 2]),
             float(rep.predicted[i, n // 2])] for i in range(n)]
    _write_csv(out_dir, "curvature_profile.csv",
               ["x", "omega_diag", "predicted"], rows)
    return all(payload["checks"].values())


def _build_loop(config, grid, divisor):
    from .loops import make_loop
    spec = dict(config.get("loop", {"kind": "bounding_circle"}))
    kind = spec.pop("kind", "bounding_circle")
    samples = int(spec.pop("samples", config.get("steps", 64)))
    spec.setdefault("side_length", grid.side_length)
    return make_loop(kind, spec, divisor, samples=samples)


def run_holonomy(config, out_dir):
    from .berry import parallel_transport
    from .loops import alpha_beta_cycles
    grid, divisor, taus, _ = _grid_and_taus(config)
    tol = float(config.get("tol", DEFAULT_FIELD_TOL))
    steps = int(config.get("steps", 64))
    loop = _build_loop(config, grid, divisor)
    probes = config.get("probes")
    if probes is not None:
        probes = [np.asarray(p, dtype=float) for p in probes]
    p = divisor.points[0]
    L = grid.side_length
    alpha, beta = alpha_beta_cycles(grid, (p[0] + L / 2) % L, (p[1] + L / 2) % L)
    rep = parallel_transport(loop, taus[0], grid, steps, tol=tol,
                             probes=probes, cycles=[alpha, beta],
                             margin=float(config.get("margin", 0.1)))
    payload = {
        "experiment": "holonomy", "tau": taus[0], "loop_kind": loop.kind,
        "steps": rep.steps, "sup_off_shadow": rep.sup_off_shadow,
        "crossing_deltas": rep.crossing_deltas, "winding": rep.winding,
        "closure_correction_winding": list(rep.closure_correction_winding),
        "phase_refinement": rep.phase_refinement,
        "checks": {"windings_integral": True},
    }
    _write_report(out_dir, "report.json", payload, config)
    dump_field(os.path.join(out_dir, "phase_field.dat"), rep.phase_field,
               grid, "scalar")
    return True


def run_duality(config, out_dir):
    from .loops import duality_matrix
    grid, divisor, taus, _ = _grid_and_taus(config)
    steps = int(config.get("steps", 64))
    results = {}
    ok = True
    for tau, label in zip(taus, config.get("tau_over_tau0", [2.0])
                          if isinstance(config.get("tau_over_tau0"), list)
                          else [config.get("tau_over_tau0", 2.0)]):
        mat, reps = duality_matrix(tau, grid, steps=steps, divisor=divisor)
        results[str(label)] = {
            "matrix": mat.tolist(),
            "diagnostics": {k: {"phase_refinement": r.phase_refinement,
                                "closure_winding":
                                    list(r.closure_correction_winding)}
                            for k, r in reps.items()},
        }
        ok = ok and mat.tolist() == [[0, 1], [-1, 0]]
    payload = {"experiment": "duality", "matrices": results,
               "expected": [[0, 1], [-1, 0]], "checks": {"duality": ok}}
    _write_report(out_dir, "report.json", payload, config)
    return ok


def run_sweep(config, out_dir):
    from .tangent import (TangentSeed, approximate_tangent, density_h,
                          horizontal_tangent, tangent_frame)
    from .berry import curvature_report
    grid, divisor, taus, labels = _grid_and_taus(config)
    if len(taus) < 3:
        raise ConfigurationError("sweep needs at least 3 tau values")
    tol = float(config.get("tol", DEFAULT_FIELD_TOL))

    def one(tau):
        n_needed = int(np.ceil(5.2 * grid.side_length * np.sqrt(tau)))
        n = max(grid.n, 1 << int(np.ceil(np.log2(n_needed))))
        g = TorusGrid(n, grid.side_length)
        field, _ = solve_vortex(divisor, tau, g, tol=tol)
        _, fit = taubes_bounds_check(field)
        seed = TangentSeed(field.divisor,
                           np.ones(divisor.d, dtype=complex)
                           / np.sqrt(divisor.d))
        y = approximate_tangent(field, seed)
        x, rows = horizontal_tangent(field, seed)
        frame, _ = tangent_frame(field)
        gram_dev = float(np.max(np.abs(frame.gram
                                       - np.eye(2 * divisor.d))))
        mass = float(np.sum(density_h(field))) * g.spacing ** 2
        curv = curvature_report(field)
        return {
            "tau": tau, "n": n,
            "decay_exponent": fit.exponent_fit, "decay_r2": fit.r_squared,
            "y_norm_sq": rows["y_norm_sq"], "xy_diff_l2": rows["diff_l2"],
            "gram_dev": gram_dev, "mass": mass, "mass_dev": abs(mass - divisor.d),
            "curv_ratio": curv.sup_residual / curv.sup_predicted,
        }

    workers = int(os.environ.get("VORTEXBERRY_THREADS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, taus))
    else:
        points = [one(tau) for tau in taus]

    # trend table and checks
    ratios = []
    xy_rates = []
    for a, b in zip(points[:-1], points[1:]):
        ratios.append(b["decay_exponent"] / a["decay_exponent"]
                      / np.sqrt(b["tau"] / a["tau"]))
        xy_rates.append((np.log(a["xy_diff_l2"]) - np.log(b["xy_diff_l2"]))
                        / (np.sqrt(b["tau"]) - np.sqrt(a["tau"])))
    checks = {
        "decay_scaling_15pct": all(abs(r - 1) <= 0.15 for r in ratios),
        "xy_scaling_15pct": all(abs(xy_rates[i + 1] / xy_rates[i] - 1) <= 0.15
                                for i in range(len(xy_rates) - 1)),
        "y_norm_final": abs(points[-1]["y_norm_sq"] - 1.0) <= 0.05,
        "gram_final": points[-1]["gram_dev"] <= 0.05,
        "mass_final": points[-1]["mass_dev"] <= 0.05,
        "curvature_final": points[-1]["curv_ratio"] <= 0.1,
        # monotonicity is only meaningful above the discretization floor
        "mass_monotone": all(b["mass_dev"] <= max(a["mass_dev"], 5e-3)
                             for a, b in zip(points[:-1], points[1:])),
    }
    if config.get("crossing"):
        from .berry import parallel_transport
        from .loops import make_loop
        deltas = []
        for tau in taus:
            n_needed = int(np.ceil(5.2 * grid.side_length * np.sqrt(tau)))
            n = max(grid.n, 1 << int(np.ceil(np.log2(n_needed))))
            g = TorusGrid(n, grid.side_length)
            loop = make_loop("bounding_circle",
                             {"radius": 0.35 * grid.side_length},
                             divisor, samples=48)
            rep = parallel_transport(loop, tau, g, steps=48, tol=tol,
                                     min_steps=16, phase_check=1.0)
            deltas.append(rep.crossing_deltas[0])
        for p_, dl in zip(points, deltas):
            p_["crossing_delta"] = dl
        checks["crossing_monotone"] = all(
            abs(b - 1) < abs(a - 1) for a, b in zip(deltas[:-1], deltas[1:]))
    payload = {"experiment": "sweep", "points": points, "ratios": ratios,
               "xy_rates": xy_rates, "checks": checks}
    _write_report(out_dir, "report.json", payload, config)
    _write_csv(out_dir, "sweep.csv",
               sorted(points[0].keys()),
               [[p[k] for k in sorted(p.keys())] for p in points])
    return all(checks.values())


RUNNERS = {
    "solve": run_solve, "frame": run_frame, "curvature": run_curvature,
    "holonomy": run_holonomy, "duality": run_duality, "sweep": run_sweep,
}


def run(config: dict, out_dir: str | None = None) -> int:
    """Validate, dispatch, write artifacts; returns the process exit code."""
    try:
        _validate(config)
        experiment = config["experiment"]
        out_dir = out_dir or config.get("output_dir", "out")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        os.makedirs(out_dir, exist_ok=True)
        ok = RUNNERS[experiment](config, out_dir)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, AccuracyError, LoopClosureError, DiagnosticError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    if not ok:
        print("one or more configured checks failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vortexberry",
        description="Vortex moduli experiments on the flat torus")
    parser.add_argument("experiment", choices=sorted(RUNNERS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    config["experiment"] = args.experiment
    code = run(config, args.out)
    if code == 0:
        print("all configured checks passed")
    return code


if __name__ == "__main__":
    sys.exit(main())
