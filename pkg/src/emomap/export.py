"""Bit-exact CSV export of effective tag events.

The format is a reproducibility contract: fixed header, fixed column order,
6-decimal half-even numeric formatting, ISO-8601 UTC timestamps with a
trailing Z, LF line endings, UTF-8, standard CSV quoting. Exporting, parsing,
and re-exporting must reproduce the same bytes, so row order is pinned to
the sort of (tagged_at, participant_id, picture_id) as printed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .model import TagEvent, format_utc

CSV_COLUMNS = (
    "experiment_id",
    "participant_id",
    "picture_id",
    "picture_source",
    "tagged_at",
    "x",
    "y",
    "angle_deg",
    "radius",
    "sector_index",
    "band_index",
    "label",
    "lat",
    "lon",
)


@dataclass(frozen=True)
class ExportRow:
    experiment_id: str
    participant_id: str
    picture_id: str
    picture_source: str
    tagged_at: str
    x: float
    y: float
    angle_deg: float
    radius: float
    sector_index: int
    band_index: int
    label: str
    lat: Optional[float]
    lon: Optional[float]


def _num(value: float) -> str:
    # Python's fixed-point float formatting rounds the exact binary value
    # half-to-even, which keeps this reproducible across platforms.
    return f"{value:.6f}"


def row_from_event(event: TagEvent) -> ExportRow:
    return ExportRow(
        experiment_id=event.experiment_id,
        participant_id=event.participant_id,
        picture_id=event.picture_id,
        picture_source=event.picture_source.value,
        tagged_at=format_utc(event.tagged_at),
        x=event.placement.x,
        y=event.placement.y,
        angle_deg=event.classification.angle_deg,
        radius=event.classification.radius,
        sector_index=event.classification.sector_index,
        band_index=event.classification.band_index,
        label=event.classification.label,
        lat=event.location.lat if event.location else None,
        lon=event.location.lon if event.location else None,
    )


def _sort_key(row: ExportRow):
    return (row.tagged_at, row.participant_id, row.picture_id)


def write_csv(rows: Iterable[ExportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in sorted(rows, key=_sort_key):
        writer.writerow(
            [
                row.experiment_id,
                row.participant_id,
                row.picture_id,
                row.picture_source,
                row.tagged_at,
                _num(row.x),
                _num(row.y),
                _num(row.angle_deg),
                _num(row.radius),
                str(row.sector_index),
                str(row.band_index),
                row.label,
                _num(row.lat) if row.lat is not None else "",
                _num(row.lon) if row.lon is not None else "",
            ]
        )
    return buf.getvalue()


def read_csv(text: str) -> list[ExportRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header: {header}")
    rows = []
    for record in reader:
        if len(record) != len(CSV_COLUMNS):
            raise ValueError(f"row has {len(record)} fields, expected {len(CSV_COLUMNS)}")
        rows.append(
            ExportRow(
                experiment_id=record[0],
                participant_id=record[1],
                picture_id=record[2],
                picture_source=record[3],
                tagged_at=record[4],
                x=float(record[5]),
                y=float(record[6]),
                angle_deg=float(record[7]),
                radius=float(record[8]),
                sector_index=int(record[9]),
                band_index=int(record[10]),
                label=record[11],
                lat=float(record[12]) if record[12] else None,
                lon=float(record[13]) if record[13] else None,
            )
        )
    return rows


def export_events(events: Sequence[TagEvent]) -> str:
    """CSV document for the effective events of one experiment."""
    return write_csv(row_from_event(e) for e in events)
