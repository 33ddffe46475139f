import json

import numpy as np
import numpy.testing as npt
import pytest

from netkernel.core.errors import TrajectoryFormatError
from netkernel.core.utils.storage import (
    HEADER,
    SCHEMA_VERSION,
    read_csv,
    read_trajectories,
    sidecar_path,
    to_json,
    write_csv,
    write_json,
    write_trajectories,
)


def test_trajectory_file_round_trip_is_exact(lj_data, tmp_path):
    path = write_trajectories(lj_data, tmp_path / "run" / "trajectories.bin")
    assert path.stat().st_size == HEADER.size + 8 * lj_data.states.size
    restored = read_trajectories(path)
    npt.assert_array_equal(restored.states, lj_data.states)
    assert restored.dt == lj_data.dt
    assert restored.spec == lj_data.spec
    assert restored.meta["a_hash"] == lj_data.meta["a_hash"]
    assert json.loads(sidecar_path(path).read_text())["schema_version"] == SCHEMA_VERSION


def test_missing_sidecar_leaves_metadata_empty(lj_data, tmp_path):
    path = write_trajectories(lj_data, tmp_path / "trajectories.bin")
    sidecar_path(path).unlink()
    restored = read_trajectories(path)
    assert restored.spec is None
    assert restored.meta == {}


def test_bad_magic_rejected(lj_data, tmp_path):
    path = write_trajectories(lj_data, tmp_path / "trajectories.bin")
    raw = bytearray(path.read_bytes())
    raw[:8] = b"NOTTRAJ!"
    path.write_bytes(bytes(raw))
    with pytest.raises(TrajectoryFormatError):
        read_trajectories(path)


def test_truncated_file_rejected(lj_data, tmp_path):
    path = write_trajectories(lj_data, tmp_path / "trajectories.bin")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(TrajectoryFormatError):
        read_trajectories(path)


def test_short_and_missing_files_rejected(tmp_path):
    short = tmp_path / "short.bin"
    short.write_bytes(b"IPSTRAJ1")
    with pytest.raises(TrajectoryFormatError):
        read_trajectories(short)
    with pytest.raises(TrajectoryFormatError):
        read_trajectories(tmp_path / "absent.bin")


def test_csv_has_leading_schema_version(tmp_path):
    path = write_csv([{"M": 100, "error": 0.5, "ignored": 1}], tmp_path / "table.csv", ("M", "error"))
    assert path.read_text().splitlines()[0] == "schema_version,M,error"
    assert read_csv(path) == [{"schema_version": str(SCHEMA_VERSION), "M": "100", "error": "0.5"}]


def test_json_summary_carries_schema_version(tmp_path):
    payload = {"errors": np.array([1.0, 2.0]), "count": np.int64(3), "pair": (1, 2)}
    decoded = json.loads(to_json(payload))
    assert decoded == {"schema_version": SCHEMA_VERSION, "errors": [1.0, 2.0], "count": 3, "pair": [1, 2]}
    path = write_json(payload, tmp_path / "out" / "summary.json")
    assert json.loads(path.read_text()) == decoded
