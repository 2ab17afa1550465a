"""Command-line pipeline: forward model evaluation, scene simulation,
unmixing, metric sweeps and cube verification.

Exit codes are a stable scripting contract: 0 success, 1 invalid input or
failed validation, 2 model-domain error (the message names the violated
precondition).  Every file-producing run writes a JSON manifest next to its
outputs recording the command, configuration echo, paths, seed, tool
version and wall-clock duration; outputs are byte-deterministic given the
same inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, io
from .core import Geometry, HyperCube, cos_deg, validate_cube
from .hapke import MODELS, ModelDomainError, endmember_variant
from .metrics import SweepGrid, albedo_curve, angle_sweep
from .simulate import SceneConfig, simulate_cube
from .solver import SOLVER_MODELS, SolverConfig, unmix_cube

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MODEL = 2


def _manifest(
    out_base: Path,
    command: str,
    config: dict[str, Any],
    inputs: dict[str, str],
    outputs: list[Path],
    seed: int | None,
    started: float,
) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": inputs,
        "outputs": [p.name for p in outputs],
        "seed": seed,
        "duration_s": round(time.perf_counter() - started, 6),
    }
    path = out_base.parent / (out_base.name + ".manifest.json")
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _load_json(path: str) -> dict[str, Any]:
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return raw


def _out_base(out: str) -> Path:
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.parent / path.name.removesuffix(".csv").removesuffix(".json")


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------

def _cmd_forward(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    albedos = io.read_albedos(args.albedo)
    photometry = io.read_photometry(args.photometry) if args.photometry else None
    params_list = io.photometry_for(photometry, [a.material for a in albedos])
    geom = Geometry(theta0=args.theta0, theta=args.theta, phi=args.phi)
    columns = [
        endmember_variant(albedo, geom, args.model, params)
        for albedo, params in zip(albedos, params_list)
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_spectra_table(
        out, albedos[0].axis, [a.material for a in albedos], np.column_stack(columns)
    )
    _manifest(
        _out_base(args.out),
        "forward",
        {
            "model": args.model,
            "theta0": args.theta0,
            "theta": args.theta,
            "phi": args.phi,
        },
        {"albedo": args.albedo, "photometry": args.photometry or ""},
        [out],
        None,
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    raw = _load_json(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.model is not None:
        raw["model"] = args.model
    config = SceneConfig.from_dict(raw)
    albedos = io.read_albedos(args.albedo)
    if len(albedos) != config.n_materials:
        raise ValueError(
            f"config expects {config.n_materials} materials, albedo file has {len(albedos)}"
        )
    photometry = io.read_photometry(args.photometry) if args.photometry else None
    params_list = io.photometry_for(photometry, [a.material for a in albedos])
    cube = simulate_cube(albedos, params_list, config)
    meta = {
        "model": config.model,
        "seed": config.seed,
        "snr_db": config.snr_db,
        "reference_geometry": {
            "theta0": config.reference.theta0,
            "theta": config.reference.theta,
            "phi": config.reference.phi,
        },
    }
    sidecar = io.write_cube(args.out, cube, meta=meta)
    stem = Path(args.out)
    outputs = sorted(
        p for p in stem.parent.glob(stem.name + "*") if not p.name.endswith(".manifest.json")
    )
    _manifest(
        _out_base(args.out),
        "simulate",
        config.to_dict(),
        {"config": args.config, "albedo": args.albedo, "photometry": args.photometry or ""},
        [sidecar, *outputs],
        config.seed,
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# unmix
# ---------------------------------------------------------------------------

def _cmd_unmix(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    raw = _load_json(args.config) if args.config else {}
    if args.model is not None:
        raw["model"] = args.model
    config = SolverConfig.from_dict(raw)
    cube = io.read_cube(args.cube)
    axis, endmembers = io.read_endmembers(args.endmembers)
    if not np.allclose(axis.values, cube.axis.values, rtol=0.0, atol=1e-12):
        raise ValueError("endmember wavelength axis does not match the cube")
    result = unmix_cube(cube, endmembers, config)
    summary: dict[str, Any] = {"solver": config.to_dict(), "cube": str(args.cube)}
    gt = cube.ground_truth
    if gt is not None and gt.abundances.shape == result.abundances.shape:
        summary["abundance_rmse"] = float(
            np.sqrt(np.mean((result.abundances - gt.abundances) ** 2))
        )
        if gt.scales is not None:
            summary["psi_rmse"] = float(np.sqrt(np.mean((result.scales - gt.scales) ** 2)))
    out_json = io.write_unmix_result(args.out, result, summary=summary)
    stem = Path(args.out)
    binaries = [
        stem.parent / (stem.name + ".a.bin"),
        stem.parent / (stem.name + ".psi.bin"),
        stem.parent / (stem.name + ".rmse.bin"),
    ]
    _manifest(
        _out_base(args.out),
        "unmix",
        config.to_dict(),
        {"cube": args.cube, "endmembers": args.endmembers, "config": args.config or ""},
        [out_json, *binaries],
        None,
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _angle_list(spec: Any, default: np.ndarray) -> np.ndarray:
    if spec is None:
        return default
    if isinstance(spec, dict):
        start = float(spec.get("start", 0.0))
        stop = float(spec.get("stop", 90.0))
        step = float(spec.get("step", 1.0))
        return np.arange(start, stop + 0.5 * step, step)
    return np.asarray(spec, dtype=float)


def _cmd_sweep(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    raw = _load_json(args.config) if args.config else {}
    albedos = io.read_albedos(args.albedo)
    kind = raw.get("kind", "angle")
    out_base = _out_base(args.out)
    outputs: list[Path] = []
    if kind == "curve":
        model = args.model or raw.get("model", "relative")
        theta0 = args.theta0 if args.theta0 is not None else float(raw.get("theta0", 0.0))
        theta = args.theta if args.theta is not None else float(raw.get("theta", 0.0))
        omega_spec = raw.get("omega", {"start": 0.0, "stop": 1.0, "num": 101})
        if isinstance(omega_spec, dict):
            omega = np.linspace(
                float(omega_spec.get("start", 0.0)),
                float(omega_spec.get("stop", 1.0)),
                int(omega_spec.get("num", 101)),
            )
        else:
            omega = np.asarray(omega_spec, dtype=float)
        photometry = io.read_photometry(args.photometry) if args.photometry else None
        params_list = io.photometry_for(photometry, [a.material for a in albedos])
        mu = float(cos_deg(theta))
        mu0 = float(cos_deg(theta0))
        for albedo, params in zip(albedos, params_list):
            rho = albedo_curve(mu, mu0, model, omega, params=params, phi=args.phi)
            path = out_base.parent / f"{out_base.name}.{albedo.material}.csv"
            io.write_curve_csv(path, omega, rho)
            outputs.append(path)
        config_echo: dict[str, Any] = {
            "kind": "curve",
            "model": model,
            "theta0": theta0,
            "theta": theta,
            "omega_points": int(omega.size),
        }
    elif kind == "angle":
        pair = tuple(raw.get("model_pair", ("relative", "linear")))
        grid = SweepGrid(
            theta0_values=_angle_list(raw.get("theta0_values"), np.arange(91, dtype=float)),
            theta_values=_angle_list(raw.get("theta_values"), np.arange(91, dtype=float)),
            model_pair=pair,  # type: ignore[arg-type]
            omega_source=str(args.albedo),
        )
        for albedo in albedos:
            result = angle_sweep(albedo, grid)
            path = out_base.parent / f"{out_base.name}.{albedo.material}.csv"
            io.write_sweep_csv(path, result)
            outputs.append(path)
        config_echo = {
            "kind": "angle",
            "model_pair": list(grid.model_pair),
            "theta0_cells": int(grid.theta0_values.size),
            "theta_cells": int(grid.theta_values.size),
            "albedo_source": str(args.albedo),
            "materials": [a.material for a in albedos],
        }
    else:
        raise ValueError(f"unknown sweep kind {kind!r}; expected 'angle' or 'curve'")
    _manifest(
        out_base,
        "sweep",
        config_echo,
        {"albedo": args.albedo, "config": args.config or ""},
        outputs,
        None,
        started,
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _conservation_violations(cube: HyperCube, meta: dict[str, Any]) -> list[str]:
    gt = cube.ground_truth
    if gt is None or gt.scales is None or gt.endmembers is None:
        return []
    if meta.get("snr_db") is not None:
        return []  # additive noise breaks the exact generative identity
    expected = gt.endmembers.values @ (gt.scales * gt.abundances)
    worst = float(np.max(np.abs(expected - cube.values)))
    if worst > 1e-12:
        return [f"scaled-mixture conservation violated: max |X - S0 (psi * A)| = {worst:.3e}"]
    return []


def _cmd_verify(args: argparse.Namespace) -> int:
    cube = io.read_cube(args.cube)
    meta = io.cube_meta(args.cube)
    violations = validate_cube(cube)
    violations.extend(_conservation_violations(cube, meta))
    report = {"cube": str(args.cube), "violations": violations, "ok": not violations}
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2) + "\n")
    if violations:
        for line in violations:
            print(f"violation: {line}", file=sys.stderr)
        return EXIT_INPUT
    print(f"ok: {args.cube}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specmix",
        description="Reflectance models, scene simulation, unmixing and metric sweeps.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    forward = sub.add_parser("forward", help="evaluate a reflectance model on albedo spectra")
    forward.add_argument("--albedo", required=True, help="spectra CSV of albedos")
    forward.add_argument("--photometry", help="photometric parameters JSON (full model)")
    forward.add_argument("--model", required=True, choices=MODELS)
    forward.add_argument("--theta0", type=float, required=True, help="incidence angle, degrees")
    forward.add_argument("--theta", type=float, required=True, help="emergence angle, degrees")
    forward.add_argument("--phi", type=float, default=0.0, help="azimuth angle, degrees")
    forward.add_argument("--out", required=True, help="output reflectance CSV")
    forward.set_defaults(func=_cmd_forward)

    simulate = sub.add_parser("simulate", help="generate a synthetic scene cube")
    simulate.add_argument("--config", required=True, help="scene configuration JSON")
    simulate.add_argument("--albedo", required=True, help="spectra CSV of albedos")
    simulate.add_argument("--photometry", help="photometric parameters JSON")
    simulate.add_argument("--model", choices=MODELS, help="override the configured model")
    simulate.add_argument("--seed", type=int, help="override the configured seed")
    simulate.add_argument("--out", required=True, help="output cube stem (writes .bin/.json)")
    simulate.set_defaults(func=_cmd_simulate)

    unmix = sub.add_parser("unmix", help="estimate abundances and scaling factors")
    unmix.add_argument("--cube", required=True, help="cube sidecar JSON")
    unmix.add_argument("--endmembers", required=True, help="reference endmember CSV")
    unmix.add_argument("--config", help="solver configuration JSON")
    unmix.add_argument("--model", choices=SOLVER_MODELS, help="override the configured model")
    unmix.add_argument("--out", required=True, help="output stem (writes .a.bin/.psi.bin/.json)")
    unmix.set_defaults(func=_cmd_unmix)

    sweep = sub.add_parser("sweep", help="angle sweeps and albedo curves")
    sweep.add_argument("--albedo", required=True, help="spectra CSV of albedos")
    sweep.add_argument("--photometry", help="photometric parameters JSON (full-model curves)")
    sweep.add_argument("--config", help="sweep configuration JSON")
    sweep.add_argument("--model", choices=MODELS, help="curve model override")
    sweep.add_argument("--theta0", type=float, help="curve incidence angle override")
    sweep.add_argument("--theta", type=float, help="curve emergence angle override")
    sweep.add_argument("--phi", type=float, default=0.0, help="azimuth for full-model curves")
    sweep.add_argument("--out", required=True, help="output stem (one CSV per material)")
    sweep.set_defaults(func=_cmd_sweep)

    verify = sub.add_parser("verify", help="check cube invariants and generative identity")
    verify.add_argument("--cube", required=True, help="cube sidecar JSON")
    verify.add_argument("--out", help="optional report JSON path")
    verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except ModelDomainError as exc:
        print(f"model-domain error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
