"""emomap: crowdsensing platform for tagging urban places with emotions on a wheel."""

from .aggregate import CircularSummary, EmotionMapCell, GridAggregate, grid_aggregate, summarize
from .errors import EmomapError
from .export import export_events, read_csv, write_csv
from .model import (
    Experiment,
    ExperimentState,
    GeoPoint,
    Handedness,
    Invitation,
    Mode,
    OrderingPolicy,
    Participant,
    PictureSource,
    Session,
    TagEvent,
)
from .ordering import participant_order
from .service import Platform
from .store import FileStore, ServeLock
from .wheel import (
    Classification,
    Placement,
    TagMap,
    angular_distance,
    classify,
    plutchik_wheel,
    validate_tag_map,
)

__version__ = "0.1.0"

__all__ = [
    "CircularSummary",
    "Classification",
    "EmomapError",
    "EmotionMapCell",
    "Experiment",
    "ExperimentState",
    "FileStore",
    "GeoPoint",
    "GridAggregate",
    "Handedness",
    "Invitation",
    "Mode",
    "OrderingPolicy",
    "Participant",
    "PictureSource",
    "Placement",
    "Platform",
    "ServeLock",
    "Session",
    "TagEvent",
    "TagMap",
    "angular_distance",
    "classify",
    "export_events",
    "grid_aggregate",
    "participant_order",
    "plutchik_wheel",
    "read_csv",
    "summarize",
    "validate_tag_map",
    "write_csv",
]
