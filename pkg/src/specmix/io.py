"""File formats: spectra CSV, photometry JSON, cube binary + JSON sidecar,
unmixing result files, and sweep/curve CSV outputs.

Reals are written at full round-trip precision (shortest decimal form that
recovers the 64-bit value), so write/read cycles are bit-exact for binary
matrices and within one representation of exact for text formats.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .core import (
    AlbedoSpectrum,
    EndmemberMatrix,
    FloatArray,
    Geometry,
    GroundTruth,
    HyperCube,
    PhotometricParams,
    UnmixResult,
    WavelengthAxis,
)
from .metrics import SweepResult

_PARAM_KEYS = {"b", "c", "B0", "h"}


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# spectra CSV: header "wavelength,<material>...", one row per band
# ---------------------------------------------------------------------------

def _read_spectra_table(path: str | Path) -> tuple[WavelengthAxis, list[str], FloatArray]:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty spectra file") from None
        if len(header) < 2 or header[0].strip().lower() != "wavelength":
            raise ValueError(f"{path}: expected header 'wavelength,<material>...'")
        materials = [name.strip() for name in header[1:]]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
            rows.append([float(cell) for cell in row])
    if not rows:
        raise ValueError(f"{path}: no spectral bands")
    table = np.asarray(rows, dtype=float)
    axis = WavelengthAxis(table[:, 0])
    return axis, materials, table[:, 1:]


def read_albedos(path: str | Path) -> list[AlbedoSpectrum]:
    """Read a spectra CSV as albedo spectra (values validated to [0, 1])."""
    axis, materials, columns = _read_spectra_table(path)
    return [
        AlbedoSpectrum(material=name, omega=columns[:, k], axis=axis)
        for k, name in enumerate(materials)
    ]


def write_albedos(path: str | Path, albedos: list[AlbedoSpectrum]) -> None:
    axis = albedos[0].axis
    matrix = np.column_stack([albedo.omega for albedo in albedos])
    write_spectra_table(path, axis, [a.material for a in albedos], matrix)


def read_endmembers(path: str | Path) -> tuple[WavelengthAxis, EndmemberMatrix]:
    """Read a spectra CSV as reference endmember reflectances (>= 0)."""
    axis, materials, columns = _read_spectra_table(path)
    return axis, EndmemberMatrix(values=columns, materials=tuple(materials))


def write_endmembers(path: str | Path, axis: WavelengthAxis, endmembers: EndmemberMatrix) -> None:
    write_spectra_table(path, axis, list(endmembers.materials), endmembers.values)


def write_spectra_table(
    path: str | Path, axis: WavelengthAxis, materials: list[str], matrix: np.ndarray
) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["wavelength", *materials])
        for band, wavelength in enumerate(axis.values):
            writer.writerow([_fmt(wavelength), *(_fmt(v) for v in matrix[band])])


# ---------------------------------------------------------------------------
# photometry JSON: one {"b","c","B0","h"} object, or a mapping per material
# ---------------------------------------------------------------------------

def read_photometry(path: str | Path):
    """Read photometric parameters.

    Returns a single PhotometricParams when the file holds one parameter
    object, else a dict keyed by material name.
    """
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    if set(raw) <= _PARAM_KEYS:
        return _params_from(raw, str(path))
    return {name: _params_from(entry, f"{path}[{name}]") for name, entry in raw.items()}


def _params_from(raw: Any, where: str) -> PhotometricParams:
    if not isinstance(raw, dict) or not _PARAM_KEYS <= set(raw):
        raise ValueError(f"{where}: expected keys b, c, B0, h")
    return PhotometricParams(
        b=float(raw["b"]), c=float(raw["c"]), B0=float(raw["B0"]), h=float(raw["h"])
    )


def write_photometry(path: str | Path, photometry) -> None:
    if hasattr(photometry, "b"):
        payload: Any = {"b": photometry.b, "c": photometry.c, "B0": photometry.B0, "h": photometry.h}
    else:
        payload = {
            name: {"b": p.b, "c": p.c, "B0": p.B0, "h": p.h} for name, p in photometry.items()
        }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def photometry_for(photometry, materials: list[str]):
    """Resolve per-material parameter list from a single object or mapping."""
    if photometry is None:
        return [None] * len(materials)
    if hasattr(photometry, "b"):
        return [photometry] * len(materials)
    missing = [name for name in materials if name not in photometry]
    if missing:
        raise ValueError(f"photometry missing for materials: {', '.join(missing)}")
    return [photometry[name] for name in materials]


# ---------------------------------------------------------------------------
# cube: flat little-endian float64 binary (column-major bands x pixels)
# plus a JSON sidecar with dimensions, axis, geometries, ground-truth paths
# ---------------------------------------------------------------------------

def _write_matrix(path: Path, matrix: np.ndarray) -> None:
    path.write_bytes(np.asfortranarray(matrix, dtype="<f8").tobytes(order="F"))


def _read_matrix(path: Path, rows: int, cols: int) -> np.ndarray:
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape((rows, cols), order="F")


def write_cube(stem: str | Path, cube: HyperCube, meta: dict[str, Any] | None = None) -> Path:
    """Write <stem>.bin plus the <stem>.json sidecar; returns the sidecar path.

    Ground-truth matrices and the reference endmember matrix, when present,
    go to sibling files referenced from the sidecar by relative path.
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data_path = stem.with_suffix(".bin")
    _write_matrix(data_path, cube.values)
    sidecar: dict[str, Any] = {
        "bands": cube.n_bands,
        "pixels": cube.n_pixels,
        "dtype": "<f8",
        "order": "column-major",
        "data": data_path.name,
        "wavelengths_um": [float(v) for v in cube.axis.values],
        "geometries": None,
        "ground_truth": None,
        "endmembers": None,
    }
    if meta:
        sidecar.update(meta)
    if cube.geometries is not None:
        sidecar["geometries"] = [
            {"theta0": g.theta0, "theta": g.theta, "phi": g.phi} for g in cube.geometries
        ]
    gt = cube.ground_truth
    if gt is not None:
        a_path = stem.parent / (stem.name + ".gt_a.bin")
        _write_matrix(a_path, gt.abundances)
        gt_entry: dict[str, Any] = {
            "materials": int(gt.abundances.shape[0]),
            "abundances": a_path.name,
            "scales": None,
        }
        if gt.scales is not None:
            psi_path = stem.parent / (stem.name + ".gt_psi.bin")
            _write_matrix(psi_path, gt.scales)
            gt_entry["scales"] = psi_path.name
        sidecar["ground_truth"] = gt_entry
        if gt.endmembers is not None:
            em_path = stem.parent / (stem.name + ".endmembers.csv")
            write_endmembers(em_path, cube.axis, gt.endmembers)
            sidecar["endmembers"] = em_path.name
    sidecar_path = stem.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n")
    return sidecar_path


def read_cube(sidecar_path: str | Path) -> HyperCube:
    """Read a cube from its JSON sidecar (paths resolved relative to it)."""
    sidecar_path = Path(sidecar_path)
    raw = json.loads(sidecar_path.read_text())
    base = sidecar_path.parent
    bands, pixels = int(raw["bands"]), int(raw["pixels"])
    values = _read_matrix(base / raw["data"], bands, pixels)
    axis = WavelengthAxis(np.asarray(raw["wavelengths_um"], dtype=float))
    geometries = None
    if raw.get("geometries") is not None:
        geometries = tuple(
            Geometry(theta0=g["theta0"], theta=g["theta"], phi=g.get("phi", 0.0))
            for g in raw["geometries"]
        )
    ground_truth = None
    gt_raw = raw.get("ground_truth")
    if gt_raw is not None:
        n_materials = int(gt_raw["materials"])
        abundances = _read_matrix(base / gt_raw["abundances"], n_materials, pixels)
        scales = None
        if gt_raw.get("scales") is not None:
            scales = _read_matrix(base / gt_raw["scales"], n_materials, pixels)
        endmembers = None
        if raw.get("endmembers") is not None:
            _, endmembers = read_endmembers(base / raw["endmembers"])
        ground_truth = GroundTruth(abundances=abundances, scales=scales, endmembers=endmembers)
    return HyperCube(values=values, axis=axis, geometries=geometries, ground_truth=ground_truth)


def cube_meta(sidecar_path: str | Path) -> dict[str, Any]:
    """Raw sidecar dictionary (generation metadata such as model and seed)."""
    return json.loads(Path(sidecar_path).read_text())


# ---------------------------------------------------------------------------
# unmixing result: binary matrices + JSON summary
# ---------------------------------------------------------------------------

def write_unmix_result(
    stem: str | Path, result: UnmixResult, summary: dict[str, Any] | None = None
) -> Path:
    """Write <stem>.a.bin, .psi.bin, .rmse.bin and the <stem>.json summary."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    a_path = stem.parent / (stem.name + ".a.bin")
    psi_path = stem.parent / (stem.name + ".psi.bin")
    rmse_path = stem.parent / (stem.name + ".rmse.bin")
    _write_matrix(a_path, result.abundances)
    _write_matrix(psi_path, result.scales)
    _write_matrix(rmse_path, result.residual_rmse.reshape(-1, 1))
    trace = aggregate_objective_trace(result.objective_traces)
    payload: dict[str, Any] = {
        "materials": result.n_materials,
        "pixels": result.n_pixels,
        "abundances": a_path.name,
        "scales": psi_path.name,
        "residual_rmse": rmse_path.name,
        "converged": bool(result.converged),
        "sum_to_one": bool(result.sum_to_one),
        "iterations": [int(k) for k in result.iterations],
        "objective_trace": [float(v) for v in trace],
        "residual_stats": {
            "mean": float(np.mean(result.residual_rmse)),
            "median": float(np.median(result.residual_rmse)),
            "max": float(np.max(result.residual_rmse)),
        },
        "degenerate_pixels": int(np.count_nonzero(result.degenerate))
        if result.degenerate is not None
        else 0,
    }
    if summary:
        payload.update(summary)
    out = stem.with_suffix(".json")
    out.write_text(json.dumps(payload, indent=2) + "\n")
    return out


def aggregate_objective_trace(traces: tuple[FloatArray, ...]) -> FloatArray:
    """Sum per-pixel objective traces into one run-level trace.

    Pixels that stopped early contribute their final objective to later
    entries, so a sum of non-increasing traces stays non-increasing.
    """
    if not traces:
        return np.zeros(0)
    length = max(t.size for t in traces)
    total = np.zeros(length)
    for t in traces:
        total[: t.size] += t
        if t.size < length:
            total[t.size:] += t[-1]
    return total


# ---------------------------------------------------------------------------
# sweep and curve CSV outputs
# ---------------------------------------------------------------------------

def write_sweep_csv(path: str | Path, result: SweepResult) -> None:
    """Long-form rows 'theta0,theta,sam_rad,rmse' in grid order."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta0", "theta", "sam_rad", "rmse"])
        for i, theta0 in enumerate(result.grid.theta0_values):
            for j, theta in enumerate(result.grid.theta_values):
                writer.writerow(
                    [_fmt(theta0), _fmt(theta), _fmt(result.sam[i, j]), _fmt(result.rmse[i, j])]
                )


def write_curve_csv(path: str | Path, omega_grid, reflectance) -> None:
    """Albedo-to-reflectance curve rows 'omega,reflectance'."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "reflectance"])
        for w, r in zip(np.asarray(omega_grid, dtype=float), np.asarray(reflectance, dtype=float)):
            writer.writerow([_fmt(w), _fmt(r)])
