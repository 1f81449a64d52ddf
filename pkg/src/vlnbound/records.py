"""CSV formats for sweep records and per-grid metrics."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import List, Sequence

from .sim import EpisodeOutcome, MetricsReport, SweepRecord

RECORD_FIELDS = (
    "mode", "grid_index", "grid_value", "scene_id", "episode_id", "seed",
    "success", "oracle_success", "path_length", "shortest_length", "final_distance", "min_distance",
    "steps", "s_match", "s_obj", "s_edge", "precision", "edge_precision",
    "failure_reason", "failure_skill", "trajectory",
)
METRIC_FIELDS = ("grid_value", "SR", "OSR", "SPL", "n")

_FLOATS = ("path_length", "shortest_length", "final_distance", "min_distance",
           "s_match", "s_obj", "s_edge", "precision", "edge_precision")


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def _parse_float(text: str) -> float:
    return math.nan if text == "" else float(text)


def record_row(rec: SweepRecord) -> dict:
    o = rec.outcome
    row = {
        "mode": rec.mode,
        "grid_index": rec.grid_index,
        "grid_value": repr(float(rec.grid_value)),
        "scene_id": o.scene_id,
        "episode_id": o.episode_id,
        "seed": rec.seed,
        "success": int(o.success),
        "oracle_success": int(o.oracle_success),
        "steps": o.steps,
        "failure_reason": o.failure_reason,
        "failure_skill": o.failure_skill,
        "trajectory": " ".join(o.trajectory),
    }
    for name in _FLOATS:
        row[name] = _fmt(getattr(o, name))
    return row


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=RECORD_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(record_row(rec))
    return buf.getvalue()


def write_records(records: Sequence[SweepRecord], path) -> None:
    Path(path).write_text(records_to_csv(records))


def read_records(path) -> List[SweepRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: records header lacks columns {sorted(missing)}")
        out = []
        for row in reader:
            outcome = EpisodeOutcome(
                scene_id=row["scene_id"],
                episode_id=row["episode_id"],
                success=row["success"] == "1",
                oracle_success=row["oracle_success"] == "1",
                steps=int(row["steps"]),
                trajectory=tuple(row["trajectory"].split()),
                failure_reason=row["failure_reason"],
                failure_skill=row["failure_skill"],
                **{name: _parse_float(row[name]) for name in _FLOATS},
            )
            out.append(SweepRecord(row["mode"], int(row["grid_index"]), float(row["grid_value"]),
                                   int(row["seed"]), outcome))
    return out


def metrics_to_csv(rows: Sequence[tuple]) -> str:
    """``rows`` holds ``(grid_value, MetricsReport)`` pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_FIELDS)
    for value, m in rows:
        writer.writerow([repr(float(value)), f"{m.sr:.4f}", f"{m.osr:.4f}", f"{m.spl:.4f}", m.n_episodes])
    return buf.getvalue()
