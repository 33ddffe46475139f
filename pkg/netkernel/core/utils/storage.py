"""Artifact I/O: binary trajectory files with JSON sidecars, CSV tables and JSON summaries."""

import csv
import json
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Union

import numpy as np

from netkernel.core.errors import TrajectoryFormatError
from netkernel.core.model import SystemSpec
from netkernel.core.simulate import TrajectoryData
from netkernel.core.utils.logging import get_logger

logger = get_logger(__name__)

MAGIC = b"IPSTRAJ1"
HEADER = struct.Struct("<8sIIIId")
SCHEMA_VERSION = 1

PathLike = Union[str, Path]


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_trajectories(data: TrajectoryData, path: PathLike) -> Path:
    """Write the 32-byte header, little-endian f64 states and the JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    M, L1, N, d = data.states.shape
    with open(path, "wb") as f:
        f.write(HEADER.pack(MAGIC, M, L1, N, d, float(data.dt)))
        f.write(np.ascontiguousarray(data.states, dtype="<f8").tobytes())
    with open(sidecar_path(path), "w") as f:
        json.dump(data.sidecar(), f, indent=2, default=str)
    logger.info(f"Wrote {M} trajectories to {path}")
    return path


def read_trajectories(path: PathLike) -> TrajectoryData:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise TrajectoryFormatError(f"Cannot read trajectory file {path}: {e}", path=str(path)) from e
    if len(raw) < HEADER.size:
        raise TrajectoryFormatError(f"{path} is shorter than the {HEADER.size}-byte header", path=str(path))

    magic, M, L1, N, d, dt = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TrajectoryFormatError(f"{path} has bad magic {magic!r}", path=str(path))
    expected = HEADER.size + 8 * M * L1 * N * d
    if len(raw) != expected:
        raise TrajectoryFormatError(
            f"{path} has {len(raw)} bytes, header implies {expected}", path=str(path), M=M, L1=L1, N=N, d=d
        )
    states = np.frombuffer(raw, dtype="<f8", offset=HEADER.size).reshape(M, L1, N, d).astype(float)

    spec, meta = None, {}
    side = sidecar_path(path)
    if side.exists():
        try:
            sidecar = json.loads(side.read_text())
        except json.JSONDecodeError as e:
            raise TrajectoryFormatError(f"Sidecar {side} is not valid JSON: {e}", path=str(side)) from e
        if sidecar.get("spec"):
            spec = SystemSpec.from_dict(sidecar["spec"])
        meta = sidecar.get("meta") or {}
    else:
        logger.warning(f"No sidecar found for {path}; metadata is empty")
    return TrajectoryData(states=states, dt=dt, spec=spec, meta=meta)


def write_csv(rows: Iterable[Mapping[str, Any]], path: PathLike, columns: Sequence[str]) -> Path:
    """Write rows with a leading ``schema_version`` column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["schema_version"] + [c for c in columns if c != "schema_version"]
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=header, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({"schema_version": SCHEMA_VERSION, **row})
    logger.info(f"Wrote table {path}")
    return path


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


def to_json(payload: Mapping[str, Any]) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2, default=_default)


def write_json(payload: Mapping[str, Any], path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(payload))
    logger.info(f"Wrote summary {path}")
    return path
