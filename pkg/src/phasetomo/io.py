"""JSON/CSV readers and writers for states, tomograms and sample sets.

Floats are written with ``repr`` so that reading them back is exact.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import PhasetomoError, ValidationError
from .forward import RadialProfile, SampleSet
from .recon_tomogram import Tomogram
from .states import DensityMatrix

__all__ = [
    "density_to_dict",
    "density_from_dict",
    "write_density",
    "read_density",
    "tomogram_to_dict",
    "tomogram_from_dict",
    "write_tomogram",
    "read_tomogram",
    "write_samples",
    "read_samples",
    "sidecar_path",
    "write_json",
    "file_hash",
]


class FormatError(ValidationError):
    """Malformed input file."""


def _floats(a) -> list:
    return [float(v) + 0.0 for v in np.asarray(a, float).ravel()]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise PhasetomoError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def density_to_dict(rho: DensityMatrix) -> dict:
    a = rho.entries
    return {
        "dim": rho.dim,
        "re": [_floats(row) for row in a.real],
        "im": [_floats(row) for row in a.imag],
    }


def density_from_dict(d: dict) -> DensityMatrix:
    try:
        dim = int(d["dim"])
        re = np.array(d["re"], float)
        im = np.array(d.get("im", np.zeros_like(re)), float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad density-matrix JSON: {exc}") from None
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise FormatError(f"density-matrix JSON: expected {dim}x{dim} 're' and 'im'")
    return DensityMatrix(re + 1j * im)


def write_density(path, rho: DensityMatrix) -> None:
    write_json(path, density_to_dict(rho))


def read_density(path) -> DensityMatrix:
    return density_from_dict(_read_json(path))


def _profile_to_dict(p: RadialProfile) -> dict:
    out = {
        "s": p.s,
        "l": p.l,
        "kind": p.kind,
        "radii": _floats(p.radii),
        "re": _floats(p.values.real),
        "im": _floats(p.values.imag),
        "stderr": None if p.stderr is None else _floats(p.stderr),
    }
    if p.edges is not None:
        out["edges"] = _floats(p.edges)
    return out


def tomogram_to_dict(t: Tomogram) -> dict:
    keys = sorted(t.profiles)
    return {"dim_hint": t.dim_hint, "profiles": [_profile_to_dict(t.profiles[k]) for k in keys]}


def tomogram_from_dict(d: dict) -> Tomogram:
    try:
        profiles = {}
        for item in d["profiles"]:
            re = np.array(item["re"], float)
            im = np.array(item.get("im", np.zeros_like(re)), float)
            se = item.get("stderr")
            edges = item.get("edges")
            p = RadialProfile(
                int(item["s"]), int(item["l"]), item["kind"], np.array(item["radii"], float), re + 1j * im,
                None if se is None else np.array(se, float), None if edges is None else np.array(edges, float),
            )
            profiles[(p.s, p.l)] = p
        return Tomogram(profiles, int(d["dim_hint"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad tomogram JSON: {exc}") from None


def write_tomogram(path, t: Tomogram) -> None:
    write_json(path, tomogram_to_dict(t))


def read_tomogram(path) -> Tomogram:
    return tomogram_from_dict(_read_json(path))


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_suffix(".json")


def write_samples(csv_path, samples: SampleSet) -> None:
    """CSV with header ``r,theta`` plus the metadata sidecar next to it."""
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "theta"])
        w.writerows(zip(map(repr, samples.r.tolist()), map(repr, samples.theta.tolist())))
    write_json(sidecar_path(csv_path), samples.metadata())


def read_samples(csv_path) -> SampleSet:
    meta = _read_json(sidecar_path(csv_path))
    try:
        with open(csv_path, newline="") as fh:
            header = fh.readline().strip()
            if header != "r,theta":
                raise FormatError(f"{csv_path}: expected header 'r,theta', got {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except FileNotFoundError:
        raise PhasetomoError(f"no such file: {csv_path}") from None
    except ValueError as exc:
        raise FormatError(f"{csv_path}: {exc}") from None
    if data.size == 0:
        data = np.zeros((0, 2))
    if data.shape[1] != 2:
        raise FormatError(f"{csv_path}: expected two columns")
    if int(meta.get("count", data.shape[0])) != data.shape[0]:
        raise FormatError(f"{csv_path}: sidecar count {meta['count']} != {data.shape[0]} rows")
    return SampleSet(int(meta["s"]), data[:, 0], data[:, 1], int(meta["seed"]),
                     float(meta["r_max"]), float(meta["truncated_mass"]))
