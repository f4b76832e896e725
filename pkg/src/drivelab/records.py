"""Trajectory persistence: a self-describing columnar record format.

A record is a JSON header line followed by one whitespace-separated row
per simulation step. Floats are written with repr precision, so a text
round trip is lossless and two runs with identical inputs produce byte
identical files, which makes records directly diff-able and usable as
golden fixtures. Files ending in .npz use a binary container instead
(same header, same columns) for long runs.

Schema versions: v2 is current. v1 lacked the per-step u_source column
(plant input provenance, 0 = driver, 1 = controller); v1 files still load,
with the column filled in from the record's mode and a migration warning.

Fixed columns, in order:

    t x y theta v xdot ydot b delta_cmd a_cmd delta_act a_act
    ux uy sat stale u_source

then phi_h{i} omega_h{i} for each lane-center hypothesis i, then w_h{i}
for each hypothesis in autonomy-in-control records only. delta_cmd/a_cmd
is the driver's command (the applied command in human-in-control mode,
the advisory suggestion in autonomy-in-control mode); delta_act/a_act is
what actually reached the actuators; ux/uy is the realized linearized
plant input.
"""

import hashlib
import json
import warnings

import numpy as np

SCHEMA_VERSION = 2

BASE_COLUMNS = [
    "t", "x", "y", "theta", "v", "xdot", "ydot", "b",
    "delta_cmd", "a_cmd", "delta_act", "a_act",
    "ux", "uy", "sat", "stale", "u_source",
]

MODE_HUMAN = "human-in-control"
MODE_AUTONOMY = "autonomy-in-control"
U_SOURCE_DRIVER = 0.0
U_SOURCE_CONTROLLER = 1.0


class MalformedRecordError(ValueError):
    pass


class SchemaVersionError(ValueError):
    pass


class RecordMigrationWarning(UserWarning):
    """An older schema version was loaded and migrated in memory."""


def record_columns(n_hypotheses: int, mode: str):
    cols = list(BASE_COLUMNS)
    for i in range(n_hypotheses):
        cols += [f"phi_h{i}", f"omega_h{i}"]
    if mode == MODE_AUTONOMY:
        cols += [f"w_h{i}" for i in range(n_hypotheses)]
    return cols


def config_hash(config_dict: dict) -> str:
    """Stable hash of a canonicalized configuration dictionary."""
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class TrajectoryRecord:
    """Header dict plus a float64 data matrix with named columns."""

    def __init__(self, header: dict, data: np.ndarray):
        self.header = header
        self.data = np.asarray(data, dtype=float)
        cols = header["columns"]
        if self.data.ndim != 2 or self.data.shape[1] != len(cols):
            raise MalformedRecordError(
                f"data shape {self.data.shape} does not match {len(cols)} columns"
            )
        self._index = {name: i for i, name in enumerate(cols)}

    # -- column access ----------------------------------------------------
    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self._index[name]]
        except KeyError:
            raise KeyError(f"record has no column {name!r}") from None

    def weights(self, hypothesis: int) -> np.ndarray:
        return self.column(f"w_h{hypothesis}")

    @property
    def columns(self):
        return list(self.header["columns"])

    @property
    def n_steps(self) -> int:
        return self.data.shape[0]

    @property
    def mode(self) -> str:
        return self.header["mode"]

    @property
    def Ts(self) -> float:
        return float(self.header["Ts"])

    @property
    def n_hypotheses(self) -> int:
        return int(self.header["n_hypotheses"])

    @property
    def believed_hypothesis(self) -> int:
        return int(self.header["believed_hypothesis"])

    @property
    def trajectory_id(self) -> str:
        return f"{self.header.get('config_hash', '')[:12]}-{self.header.get('seed', '')}"

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return NotImplemented
        return (
            self.header == other.header
            and self.data.shape == other.data.shape
            and bool(np.all(self.data == other.data))
        )


def _header_json(record: TrajectoryRecord) -> str:
    return json.dumps(record.header, sort_keys=True, separators=(",", ":"))


def save_record(record: TrajectoryRecord, path):
    """Write a record; the format is chosen by extension (.npz is binary)."""
    path = str(path)
    if path.endswith(".npz"):
        np.savez(path, header=np.array(_header_json(record)), data=record.data)
        return
    lines = [_header_json(record)]
    for row in record.data:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def _migrate_v1(header: dict, data: np.ndarray):
    """v1 records lack the u_source column; derive it from the mode."""
    warnings.warn(
        "loaded a schema v1 record; filling u_source from the record mode",
        RecordMigrationWarning,
    )
    cols = list(header["columns"])
    insert_at = cols.index("stale") + 1
    cols.insert(insert_at, "u_source")
    source = (
        U_SOURCE_CONTROLLER if header["mode"] == MODE_AUTONOMY else U_SOURCE_DRIVER
    )
    col = np.full((data.shape[0], 1), source)
    data = np.hstack([data[:, :insert_at], col, data[:, insert_at:]])
    header = dict(header)
    header["columns"] = cols
    header["schema_version"] = SCHEMA_VERSION
    return header, data


def _validate_loaded(header, data):
    required = ["schema_version", "mode", "Ts", "n_steps", "columns", "n_hypotheses"]
    for key in required:
        if key not in header:
            raise MalformedRecordError(f"header missing {key!r}")
    if data.shape[0] != int(header["n_steps"]):
        raise MalformedRecordError(
            f"truncated record: {data.shape[0]} rows, header says {header['n_steps']}"
        )
    t = data[:, header["columns"].index("t")]
    if len(t) > 1:
        dt = np.diff(t)
        if np.any(dt <= 0) or np.any(np.abs(dt - float(header["Ts"])) > 1e-9):
            raise MalformedRecordError("time column is not a strict Ts grid")


def load_record(path) -> TrajectoryRecord:
    """Load a record saved by save_record; migrates older schema versions."""
    path = str(path)
    if path.endswith(".npz"):
        with np.load(path) as npz:
            try:
                header = json.loads(str(npz["header"]))
                data = np.asarray(npz["data"], dtype=float)
            except (KeyError, json.JSONDecodeError) as exc:
                raise MalformedRecordError(f"malformed npz record: {exc}") from exc
    else:
        with open(path) as fh:
            text = fh.read()
        lines = [ln for ln in text.split("\n") if ln.strip()]
        if not lines:
            raise MalformedRecordError("empty record file")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise MalformedRecordError(f"bad header line: {exc}") from exc
        if not isinstance(header, dict):
            raise MalformedRecordError("header is not an object")
        rows = []
        ncols = len(header.get("columns", []))
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != ncols:
                raise MalformedRecordError(
                    f"row has {len(parts)} fields, expected {ncols}"
                )
            rows.append([float(p) for p in parts])
        data = np.array(rows, dtype=float) if rows else np.empty((0, ncols))
    version = header.get("schema_version")
    if version == 1:
        header, data = _migrate_v1(header, data)
    elif version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"unsupported schema version {version!r} (current {SCHEMA_VERSION})"
        )
    _validate_loaded(header, data)
    return TrajectoryRecord(header, data)
