"""
Result writers: JSON reports, CSV sweeps and time series, run manifests.

Every file is written to a temporary sibling and renamed into place, so a
failed run never leaves a partial output behind.
"""

import csv
import io
import json
import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

from strichartz.models import RunManifest, ThresholdScan, Trajectory

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text to path via write-then-rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return target


def dumps(data: Any) -> str:
    """Stable JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    return atomic_write_text(path, dumps(data))


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a CSV file with a header row."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return atomic_write_text(path, buffer.getvalue())


def manifest_path(path: PathLike) -> Path:
    """out.json -> out.manifest.json; out.csv -> out.manifest.json."""
    return Path(path).with_suffix(".manifest.json")


def write_manifest(path: PathLike, manifest: RunManifest) -> Path:
    """Write the manifest beside an output file, stamping created_at."""
    if manifest.created_at is None:
        manifest.created_at = datetime.now().isoformat(timespec="seconds")
    return write_json(manifest_path(path), manifest.to_dict())


def sweep_rows(scan: ThresholdScan) -> List[List[Any]]:
    rows = []
    for B, result in scan.rows:
        params = list(result.argmax.params)
        params += [""] * (2 - len(params))
        rows.append([B, scan.family_id, result.value, *params])
    return rows


def write_threshold_sweep(path: PathLike, scan: ThresholdScan) -> Path:
    """Plot-ready sweep of max A_B against B, ordered by B."""
    return write_csv(path, ["B", "family_id", "max_A", "param_1", "param_2"], sweep_rows(scan))


def write_trace(path: PathLike, trace: Sequence[Any]) -> Path:
    """Ascent trace as (iteration, value) rows."""
    return write_csv(path, ["iteration", "value"], [list(row) for row in trace])


def write_trajectory(
    path: PathLike,
    trajectory: Trajectory,
    orbit_distances: Optional[Sequence[float]] = None,
) -> Path:
    """Time series of H_L, P and, when given, the orbit distance."""
    rows = []
    for k, (t, (H, P)) in enumerate(zip(trajectory.times, trajectory.ledger)):
        distance = orbit_distances[k] if orbit_distances is not None else ""
        rows.append([t, H, P, distance])
    return write_csv(path, ["t", "H", "P", "orbit_distance"], rows)


def write_snapshots(directory: PathLike, trajectory: Trajectory, stride: int = 1) -> List[Path]:
    """JSON state files state_00000.json, ... for every stride-th recorded state."""
    directory = Path(directory)
    written = []
    for k in range(0, len(trajectory.states), max(1, stride)):
        data: Dict[str, Any] = {"t": trajectory.times[k]}
        data.update(trajectory.states[k].to_dict())
        written.append(write_json(directory / f"state_{k:05d}.json", data))
    return written


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)
