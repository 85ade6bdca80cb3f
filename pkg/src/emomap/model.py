"""Domain types for experiments, participants, invitations, and tag events.

Each entity knows how to round-trip to its stored JSON document; field names
in those documents are a stable external contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from .wheel import Classification, Placement

SCHEMA_VERSION = 1


class Mode(str, Enum):
    CURATED = "CURATED"
    FIELD = "FIELD"


class ExperimentState(str, Enum):
    DRAFT = "DRAFT"
    ACTIVE = "ACTIVE"
    FINISHED = "FINISHED"


class OrderingPolicy(str, Enum):
    FIXED = "FIXED"
    RANDOM_PER_PARTICIPANT = "RANDOM_PER_PARTICIPANT"


class Handedness(str, Enum):
    RIGHT = "RIGHT"
    LEFT = "LEFT"


class PictureSource(str, Enum):
    CURATED = "CURATED"
    PARTICIPANT = "PARTICIPANT"


def format_utc(dt: datetime) -> str:
    """ISO-8601 UTC with trailing Z; microseconds printed only when non-zero."""
    dt = dt.astimezone(timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        base += f".{dt.microsecond:06d}"
    return base + "Z"


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    cleaned = text.strip()
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1] + "+00:00"
    dt = datetime.fromisoformat(cleaned)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass
class Experiment:
    id: str
    mode: Mode
    state: ExperimentState
    start_time: datetime
    finish_time: datetime
    tag_map_id: str
    picture_ids: list[str] = field(default_factory=list)
    ordering: OrderingPolicy = OrderingPolicy.FIXED
    participant_ids: set[str] = field(default_factory=set)
    locale_default: str = "en"

    def is_active(self, now: datetime) -> bool:
        """Active means the state flag is set and the clock is inside [start, finish)."""
        return (
            self.state is ExperimentState.ACTIVE
            and self.start_time <= now < self.finish_time
        )

    def to_doc(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "id": self.id,
            "mode": self.mode.value,
            "state": self.state.value,
            "start_time": format_utc(self.start_time),
            "finish_time": format_utc(self.finish_time),
            "tag_map_id": self.tag_map_id,
            "picture_ids": list(self.picture_ids),
            "ordering": self.ordering.value,
            "participant_ids": sorted(self.participant_ids),
            "locale_default": self.locale_default,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Experiment":
        return cls(
            id=doc["id"],
            mode=Mode(doc["mode"]),
            state=ExperimentState(doc["state"]),
            start_time=parse_utc(doc["start_time"]),
            finish_time=parse_utc(doc["finish_time"]),
            tag_map_id=doc["tag_map_id"],
            picture_ids=list(doc.get("picture_ids", [])),
            ordering=OrderingPolicy(doc.get("ordering", "FIXED")),
            participant_ids=set(doc.get("participant_ids", [])),
            locale_default=doc.get("locale_default", "en"),
        )


@dataclass
class Participant:
    id: str
    display_name: str
    username: Optional[str] = None
    password_hash: Optional[dict] = None
    handedness: Handedness = Handedness.RIGHT

    def to_doc(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "id": self.id,
            "display_name": self.display_name,
            "username": self.username,
            "password_hash": self.password_hash,
            "handedness": self.handedness.value,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Participant":
        return cls(
            id=doc["id"],
            display_name=doc["display_name"],
            username=doc.get("username"),
            password_hash=doc.get("password_hash"),
            handedness=Handedness(doc.get("handedness", "RIGHT")),
        )


@dataclass
class Researcher:
    id: str
    username: str
    password_hash: dict

    def to_doc(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "id": self.id,
            "username": self.username,
            "password_hash": self.password_hash,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Researcher":
        return cls(id=doc["id"], username=doc["username"], password_hash=doc["password_hash"])


@dataclass
class Invitation:
    token: str
    experiment_id: str
    participant_id: str
    url_payload: str
    expires_at: Optional[datetime] = None

    def to_doc(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "token": self.token,
            "experiment_id": self.experiment_id,
            "participant_id": self.participant_id,
            "url_payload": self.url_payload,
            "expires_at": format_utc(self.expires_at) if self.expires_at else None,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Invitation":
        expires = doc.get("expires_at")
        return cls(
            token=doc["token"],
            experiment_id=doc["experiment_id"],
            participant_id=doc["participant_id"],
            url_payload=doc["url_payload"],
            expires_at=parse_utc(expires) if expires else None,
        )


@dataclass
class Picture:
    """Registration record binding an uploaded blob to an experiment."""

    id: str
    experiment_id: str
    blob_id: str
    media_type: str
    source: PictureSource
    uploaded_by: str
    uploaded_at: datetime
    location: Optional[GeoPoint] = None

    def to_doc(self) -> dict:
        doc = {
            "version": SCHEMA_VERSION,
            "id": self.id,
            "experiment_id": self.experiment_id,
            "blob_id": self.blob_id,
            "media_type": self.media_type,
            "source": self.source.value,
            "uploaded_by": self.uploaded_by,
            "uploaded_at": format_utc(self.uploaded_at),
        }
        if self.location is not None:
            doc["location"] = {"lat": self.location.lat, "lon": self.location.lon}
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "Picture":
        loc = doc.get("location")
        return cls(
            id=doc["id"],
            experiment_id=doc["experiment_id"],
            blob_id=doc["blob_id"],
            media_type=doc["media_type"],
            source=PictureSource(doc["source"]),
            uploaded_by=doc["uploaded_by"],
            uploaded_at=parse_utc(doc["uploaded_at"]),
            location=GeoPoint(loc["lat"], loc["lon"]) if loc else None,
        )


@dataclass
class Session:
    token: str
    participant_id: str
    experiment_id: str
    cursor: int
    created_at: datetime
    live: bool = True


@dataclass(frozen=True)
class TagEvent:
    """The atomic record: who tagged which picture, where, and when."""

    event_id: str
    experiment_id: str
    participant_id: str
    picture_id: str
    placement: Placement
    classification: Classification
    tagged_at: datetime
    client_time: Optional[str] = None
    location: Optional[GeoPoint] = None
    picture_source: PictureSource = PictureSource.CURATED

    def to_record(self) -> dict:
        record = {
            "event_id": self.event_id,
            "experiment_id": self.experiment_id,
            "participant_id": self.participant_id,
            "picture_id": self.picture_id,
            "placement": {"x": self.placement.x, "y": self.placement.y},
            "classification": {
                "sector_index": self.classification.sector_index,
                "band_index": self.classification.band_index,
                "label": self.classification.label,
                "angle_deg": self.classification.angle_deg,
                "radius": self.classification.radius,
            },
            "tagged_at": format_utc(self.tagged_at),
            "client_time": self.client_time,
            "picture_source": self.picture_source.value,
        }
        if self.location is not None:
            record["location"] = {"lat": self.location.lat, "lon": self.location.lon}
        return record

    @classmethod
    def from_record(cls, record: dict) -> "TagEvent":
        loc = record.get("location")
        c = record["classification"]
        return cls(
            event_id=record["event_id"],
            experiment_id=record["experiment_id"],
            participant_id=record["participant_id"],
            picture_id=record["picture_id"],
            placement=Placement(record["placement"]["x"], record["placement"]["y"]),
            classification=Classification(
                sector_index=c["sector_index"],
                band_index=c["band_index"],
                label=c["label"],
                angle_deg=c["angle_deg"],
                radius=c["radius"],
            ),
            tagged_at=parse_utc(record["tagged_at"]),
            client_time=record.get("client_time"),
            location=GeoPoint(loc["lat"], loc["lon"]) if loc else None,
            picture_source=PictureSource(record["picture_source"]),
        )


def tag_map_to_doc(tag_map) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "id": tag_map.id,
        "sector_count": tag_map.sector_count,
        "sector_offset_deg": tag_map.sector_offset_deg,
        "band_boundaries": list(tag_map.band_boundaries),
        "labels": [list(row) for row in tag_map.labels],
        "locale_labels": {
            locale: [list(row) for row in matrix]
            for locale, matrix in tag_map.locale_labels.items()
        },
    }


def tag_map_from_doc(doc: dict):
    from .wheel import TagMap

    return TagMap(
        id=doc["id"],
        sector_count=doc["sector_count"],
        sector_offset_deg=doc["sector_offset_deg"],
        band_boundaries=tuple(doc["band_boundaries"]),
        labels=tuple(tuple(row) for row in doc["labels"]),
        locale_labels={
            locale: tuple(tuple(row) for row in matrix)
            for locale, matrix in doc.get("locale_labels", {}).items()
        },
    )
