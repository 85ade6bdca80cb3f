"""Tag-map geometry: labeled partitions of the unit disc.

A tag map divides the disc into N equal angular sectors times M radial
bands and labels every cell. The Plutchik wheel is the canonical instance
(8 sectors, 3 bands); custom maps carry arbitrary labels on the same grid.

Coordinate conventions, fixed once for the whole platform:

* placements are (x, y) on the unit disc, +x rightward, +y upward;
* angles are degrees in [0, 360), measured clockwise from "up", so a
  point straight above the center has angle 0 and a point to the right
  has angle 90;
* sector s is centered at ``sector_offset_deg + s * (360 / N)`` and owns
  its counterclockwise boundary (half-open intervals);
* band b covers radii ``(band_boundaries[b-1], band_boundaries[b]]``; a
  boundary radius belongs to the inner band.

All types are immutable values and all functions are pure.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import CenterAmbiguous, OutOfDisc

# Placements closer to the center than this have no meaningful direction.
CENTER_DEAD_ZONE = 0.02
# Radii this far over 1.0 are treated as UI float noise and clamped.
DISC_EPSILON = 1e-9


@dataclass(frozen=True)
class TagMap:
    """A labeled sector-by-band partition of the unit disc."""

    id: str
    sector_count: int
    sector_offset_deg: float
    band_boundaries: tuple[float, ...]
    labels: tuple[tuple[str, ...], ...]
    locale_labels: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    @property
    def band_count(self) -> int:
        return len(self.band_boundaries) + 1

    @property
    def sector_width_deg(self) -> float:
        return 360.0 / self.sector_count

    def label_matrix(self, locale: Optional[str] = None) -> tuple[tuple[str, ...], ...]:
        """Label matrix for a locale, falling back to the default labels.

        Unknown locales are not an error; the default matrix is returned.
        """
        if locale and locale in self.locale_labels:
            return self.locale_labels[locale]
        return self.labels


@dataclass(frozen=True)
class Placement:
    """An exact position on the unit disc where a picture was dropped."""

    x: float
    y: float

    @property
    def radius(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class Classification:
    """Where a placement landed: sector, band, label, and polar coordinates."""

    sector_index: int
    band_index: int
    label: str
    angle_deg: float
    radius: float


@dataclass(frozen=True)
class Violation:
    """One tag-map invariant violation, identified by a stable code."""

    code: str
    message: str


def angle_from_top_deg(x: float, y: float) -> float:
    """Clockwise-from-top angle of (x, y) in [0, 360)."""
    deg = math.degrees(math.atan2(x, y)) % 360.0
    # % can return 360.0 when the argument is a tiny negative float.
    return 0.0 if deg >= 360.0 else deg


def sector_of_angle(tag_map: TagMap, angle_deg: float) -> int:
    """Sector owning ``angle_deg``; the counterclockwise edge is included."""
    width = tag_map.sector_width_deg
    shifted = (angle_deg - tag_map.sector_offset_deg + width / 2.0) % 360.0
    sector = int(shifted // width)
    # Float division may round shifted/width up to exactly N; the true
    # quotient is < N, so such a point belongs to the last sector.
    return min(sector, tag_map.sector_count - 1)


def band_of_radius(tag_map: TagMap, radius: float) -> int:
    """Smallest band b with radius <= band_boundaries[b], else the outer band."""
    return bisect_left(tag_map.band_boundaries, radius)


def classify(tag_map: TagMap, placement: Placement, locale: Optional[str] = None) -> Classification:
    """Classify a placement into its (sector, band) cell and label.

    Raises CenterAmbiguous for radii under the dead zone and OutOfDisc for
    radii more than ``DISC_EPSILON`` over 1; radii inside that epsilon are
    clamped to 1.
    """
    r = placement.radius
    if r > 1.0 + DISC_EPSILON:
        raise OutOfDisc(f"radius {r:.6g} outside the unit disc", radius=r)
    if r < CENTER_DEAD_ZONE:
        raise CenterAmbiguous(
            f"radius {r:.6g} is inside the {CENTER_DEAD_ZONE} center dead zone", radius=r
        )
    r = min(r, 1.0)
    angle = angle_from_top_deg(placement.x, placement.y)
    sector = sector_of_angle(tag_map, angle)
    band = band_of_radius(tag_map, r)
    label = tag_map.label_matrix(locale)[sector][band]
    return Classification(
        sector_index=sector,
        band_index=band,
        label=label,
        angle_deg=angle,
        radius=r,
    )


def angular_distance(a: Classification, b: Classification) -> float:
    """Shortest angular separation of two classifications, in [0, 180]."""
    delta = abs(a.angle_deg - b.angle_deg) % 360.0
    return min(delta, 360.0 - delta)


def validate_tag_map(tag_map: TagMap) -> list[Violation]:
    """Check every tag-map invariant; an empty list means the map is valid."""
    violations: list[Violation] = []
    if not tag_map.id:
        violations.append(Violation("id_empty", "tag map id must be non-empty"))
    if tag_map.sector_count < 2:
        violations.append(
            Violation("sector_count_too_small", f"need at least 2 sectors, got {tag_map.sector_count}")
        )
    if not (0.0 <= tag_map.sector_offset_deg < 360.0):
        violations.append(
            Violation("sector_offset_out_of_range", f"offset {tag_map.sector_offset_deg} not in [0, 360)")
        )
    bounds = tag_map.band_boundaries
    if any(not (0.0 < b < 1.0) for b in bounds):
        violations.append(Violation("band_out_of_range", f"band boundaries {bounds} must lie in (0, 1)"))
    if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
        violations.append(Violation("bands_not_ascending", f"band boundaries {bounds} must be strictly ascending"))

    n, m = tag_map.sector_count, tag_map.band_count
    violations.extend(_check_matrix(tag_map.labels, n, m, "label_matrix_shape", "label_empty", "labels"))
    for locale, matrix in tag_map.locale_labels.items():
        violations.extend(
            _check_matrix(matrix, n, m, "locale_matrix_shape", "locale_label_empty", f"locale {locale!r}")
        )
    return violations


def _check_matrix(matrix: Sequence[Sequence[str]], n: int, m: int,
                  shape_code: str, empty_code: str, what: str) -> list[Violation]:
    if len(matrix) != n or any(len(row) != m for row in matrix):
        shape = f"{len(matrix)}x{max((len(r) for r in matrix), default=0)}"
        return [Violation(shape_code, f"{what} matrix is {shape}, expected {n}x{m}")]
    out = []
    for s, row in enumerate(matrix):
        for b, cell in enumerate(row):
            if not cell:
                out.append(Violation(empty_code, f"{what} cell [{s}][{b}] is empty"))
    return out


# Canonical Plutchik wheel: clockwise from the top, each emotion with its
# intense form innermost and its mild form outermost.
PLUTCHIK_SECTORS = ("joy", "trust", "fear", "surprise", "sadness", "disgust", "anger", "anticipation")

_PLUTCHIK_LABELS = (
    ("ecstasy", "joy", "serenity"),
    ("admiration", "trust", "acceptance"),
    ("terror", "fear", "apprehension"),
    ("amazement", "surprise", "distraction"),
    ("grief", "sadness", "pensiveness"),
    ("loathing", "disgust", "boredom"),
    ("rage", "anger", "annoyance"),
    ("vigilance", "anticipation", "interest"),
)

_PLUTCHIK_LABELS_PL = (
    ("ekstaza", "radość", "spokój"),
    ("podziw", "zaufanie", "akceptacja"),
    ("przerażenie", "strach", "obawa"),
    ("zdumienie", "zaskoczenie", "roztargnienie"),
    ("rozpacz", "smutek", "zaduma"),
    ("odraza", "wstręt", "znudzenie"),
    ("wściekłość", "gniew", "irytacja"),
    ("czujność", "oczekiwanie", "zainteresowanie"),
)

PLUTCHIK_MAP_ID = "plutchik"


def plutchik_wheel() -> TagMap:
    """The canonical 8-sector, 3-band Plutchik wheel with joy at the top."""
    return TagMap(
        id=PLUTCHIK_MAP_ID,
        sector_count=8,
        sector_offset_deg=0.0,
        band_boundaries=(1.0 / 3.0, 2.0 / 3.0),
        labels=_PLUTCHIK_LABELS,
        locale_labels={"pl": _PLUTCHIK_LABELS_PL},
    )


def opposite_sector(tag_map: TagMap, sector: int) -> int:
    """Diametrically opposite sector (bipolar pairing for even sector counts)."""
    return (sector + tag_map.sector_count // 2) % tag_map.sector_count
