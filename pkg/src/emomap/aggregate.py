"""Circular-statistics summaries and geographic grid aggregation.

Angles live on a wheel, so plain averaging is meaningless across the
0/360 seam; directions are averaged as unit vectors. The resultant length
rho measures agreement: 1 when every placement points the same way, near 0
when placements cancel (dispersion or polarization). Intensity (radius) is
deliberately kept out of the direction average and reported separately as
mean_radius, so disagreement is never conflated with mildness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import EmptyInput, InvalidCellSize
from .model import TagEvent
from .wheel import TagMap, sector_of_angle

# Below this resultant length the mean direction is numerically meaningless.
DEGENERATE_RESULTANT = 1e-9

MAX_CELL_SIZE_DEG = 10.0


@dataclass(frozen=True)
class CircularSummary:
    n: int
    mean_angle_deg: Optional[float]
    resultant_length: float
    dominant_sector: Optional[int]
    sector_histogram: tuple[int, ...]
    mean_radius: float

    def to_doc(self) -> dict:
        return {
            "n": self.n,
            "mean_angle_deg": self.mean_angle_deg,
            "resultant_length": self.resultant_length,
            "dominant_sector": self.dominant_sector,
            "sector_histogram": list(self.sector_histogram),
            "mean_radius": self.mean_radius,
        }


@dataclass(frozen=True)
class EmotionMapCell:
    cell_lat_index: int
    cell_lon_index: int
    cell_size_deg: float
    summary: CircularSummary

    def to_doc(self) -> dict:
        # Pinned cell-document fields; mean_radius stays internal.
        return {
            "cell_lat_index": self.cell_lat_index,
            "cell_lon_index": self.cell_lon_index,
            "cell_size_deg": self.cell_size_deg,
            "n": self.summary.n,
            "mean_angle_deg": self.summary.mean_angle_deg,
            "resultant_length": self.summary.resultant_length,
            "dominant_sector": self.summary.dominant_sector,
            "sector_histogram": list(self.summary.sector_histogram),
        }


@dataclass(frozen=True)
class GridAggregate:
    cell_size_deg: float
    cells: tuple[EmotionMapCell, ...]
    skipped: int

    def to_doc(self) -> dict:
        return {
            "cell_size_deg": self.cell_size_deg,
            "cells": [cell.to_doc() for cell in self.cells],
            "skipped": self.skipped,
        }


def empty_summary(tag_map: TagMap) -> CircularSummary:
    return CircularSummary(
        n=0,
        mean_angle_deg=None,
        resultant_length=0.0,
        dominant_sector=None,
        sector_histogram=tuple(0 for _ in range(tag_map.sector_count)),
        mean_radius=0.0,
    )


def summarize(events: Sequence[TagEvent], tag_map: TagMap) -> CircularSummary:
    """Mean direction, resultant length, and sector histogram of tag events.

    All events must come from the same tag map. Raises EmptyInput for an
    empty list.
    """
    if not events:
        raise EmptyInput("cannot summarize zero events")
    n = len(events)
    # clockwise-from-top convention: x-component is sin, y-component is cos
    angles = [math.radians(e.classification.angle_deg) for e in events]
    mean_x = math.fsum(math.sin(a) for a in angles) / n
    mean_y = math.fsum(math.cos(a) for a in angles) / n
    rho = min(math.hypot(mean_x, mean_y), 1.0)

    if rho < DEGENERATE_RESULTANT:
        mean_angle: Optional[float] = None
        dominant: Optional[int] = None
    else:
        mean_angle = math.degrees(math.atan2(mean_x, mean_y)) % 360.0
        if mean_angle >= 360.0:
            mean_angle = 0.0
        dominant = sector_of_angle(tag_map, mean_angle)

    histogram = [0] * tag_map.sector_count
    for e in events:
        histogram[e.classification.sector_index] += 1

    return CircularSummary(
        n=n,
        mean_angle_deg=mean_angle,
        resultant_length=rho,
        dominant_sector=dominant,
        sector_histogram=tuple(histogram),
        mean_radius=math.fsum(e.classification.radius for e in events) / n,
    )


def grid_cell_index(value: float, cell_size_deg: float) -> int:
    return math.floor(value / cell_size_deg)


def grid_aggregate(events: Iterable[TagEvent], cell_size_deg: float, tag_map: TagMap) -> GridAggregate:
    """Bucket located events into a floor-based lat/lon grid and summarize each cell.

    Events without a location are skipped and counted in ``skipped``.
    """
    if not (isinstance(cell_size_deg, (int, float))
            and 0.0 < cell_size_deg <= MAX_CELL_SIZE_DEG):
        raise InvalidCellSize(f"cell size {cell_size_deg!r} not in (0, {MAX_CELL_SIZE_DEG}]")
    cell_size_deg = float(cell_size_deg)

    buckets: dict[tuple[int, int], list[TagEvent]] = {}
    skipped = 0
    for event in events:
        if event.location is None:
            skipped += 1
            continue
        key = (
            grid_cell_index(event.location.lat, cell_size_deg),
            grid_cell_index(event.location.lon, cell_size_deg),
        )
        buckets.setdefault(key, []).append(event)

    cells = tuple(
        EmotionMapCell(
            cell_lat_index=lat_idx,
            cell_lon_index=lon_idx,
            cell_size_deg=cell_size_deg,
            summary=summarize(bucket, tag_map),
        )
        for (lat_idx, lon_idx), bucket in sorted(buckets.items())
    )
    return GridAggregate(cell_size_deg=cell_size_deg, cells=cells, skipped=skipped)
