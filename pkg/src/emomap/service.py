"""Platform service: experiment lifecycle, sessions, ingest, and analysis views.

One Platform instance owns a FileStore. Entities are cached in memory and
written through on mutation; tag events are appended to the per-experiment
log (fsynced before acknowledgment) and mirrored into an effective-event
index (latest wins per participant and picture). Mutations on a single
experiment serialize through that experiment's lock; different experiments
never contend.

Sessions and bearer tokens are process-lifetime state: after a restart
participants and researchers simply log in again. Everything durable lives
in the store.
"""

from __future__ import annotations

import hashlib
import hmac
import io
import secrets
import threading
import uuid
from datetime import datetime, timedelta, timezone
from typing import Callable, Optional

from PIL import Image, UnidentifiedImageError

from . import store as storage
from .aggregate import GridAggregate, empty_summary, grid_aggregate, summarize
from .errors import (
    BadCredentials,
    ExperimentFinished,
    ExperimentNotActive,
    ImageTooLarge,
    InvalidSchedule,
    InvalidTagMap,
    MissingLocation,
    ModeImmutable,
    NoPictures,
    NoSession,
    ParticipantNotAssigned,
    TokenExpired,
    UndecodableImage,
    UnknownExperiment,
    UnknownParticipant,
    UnknownPicture,
    UnknownTagMap,
    WrongMode,
)
from .export import export_events
from .model import (
    Experiment,
    ExperimentState,
    GeoPoint,
    Handedness,
    Invitation,
    Mode,
    OrderingPolicy,
    Participant,
    Picture,
    PictureSource,
    Researcher,
    Session,
    TagEvent,
    format_utc,
    tag_map_from_doc,
    tag_map_to_doc,
)
from .ordering import participant_order
from .wheel import Placement, TagMap, Violation, classify, plutchik_wheel, validate_tag_map

RESEARCHER_TOKEN_TTL = timedelta(hours=24)

_ID_SAFE = storage._SAFE_ID


# -- password hashing ----------------------------------------------------------

_SCRYPT_N = 2**14
_SCRYPT_R = 8
_SCRYPT_P = 1


def hash_password(password: str) -> dict:
    """Salted scrypt record; deliberately slow to brute-force."""
    salt = secrets.token_bytes(16)
    digest = hashlib.scrypt(
        password.encode("utf-8"), salt=salt, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P, dklen=32
    )
    return {
        "algo": "scrypt",
        "n": _SCRYPT_N,
        "r": _SCRYPT_R,
        "p": _SCRYPT_P,
        "salt": salt.hex(),
        "hash": digest.hex(),
    }


def verify_password(password: str, record: Optional[dict]) -> bool:
    if not record or record.get("algo") != "scrypt":
        return False
    digest = hashlib.scrypt(
        password.encode("utf-8"),
        salt=bytes.fromhex(record["salt"]),
        n=record["n"],
        r=record["r"],
        p=record["p"],
        dklen=32,
    )
    return hmac.compare_digest(digest.hex(), record["hash"])


def _default_clock() -> datetime:
    return datetime.now(timezone.utc)


def _default_id_factory(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


class Platform:
    """Application service wiring the store, geometry, and aggregation together."""

    def __init__(
        self,
        store: storage.FileStore,
        *,
        clock: Callable[[], datetime] = _default_clock,
        id_factory: Callable[[str], str] = _default_id_factory,
        base_url: str = "http://localhost:8000",
        max_image_bytes: int = storage.MAX_BLOB_BYTES,
    ):
        self.store = store
        self.clock = clock
        self.id_factory = id_factory
        self.base_url = base_url.rstrip("/")
        self.max_image_bytes = max_image_bytes

        self._lock = threading.RLock()
        self._experiment_locks: dict[str, threading.RLock] = {}

        self._tag_maps: dict[str, TagMap] = {}
        self._experiments: dict[str, Experiment] = {}
        self._participants: dict[str, Participant] = {}
        self._participants_by_username: dict[str, str] = {}
        self._researchers: dict[str, Researcher] = {}
        self._researchers_by_username: dict[str, str] = {}
        self._invitations: dict[str, Invitation] = {}
        self._pictures: dict[str, Picture] = {}
        self._events: dict[str, list[TagEvent]] = {}
        self._effective: dict[str, dict[tuple[str, str], TagEvent]] = {}

        self._sessions: dict[str, Session] = {}
        self._participant_session: dict[str, str] = {}
        self._researcher_tokens: dict[str, tuple[str, datetime]] = {}

        self._load()

    # -- bootstrap ---------------------------------------------------------

    def _load(self) -> None:
        for doc in self.store.list_entities("tag_maps"):
            self._tag_maps[doc["id"]] = tag_map_from_doc(doc)
        if plutchik_wheel().id not in self._tag_maps:
            wheel = plutchik_wheel()
            self.store.put_entity("tag_maps", wheel.id, tag_map_to_doc(wheel))
            self._tag_maps[wheel.id] = wheel
        for doc in self.store.list_entities("participants"):
            p = Participant.from_doc(doc)
            self._participants[p.id] = p
            if p.username:
                self._participants_by_username[p.username] = p.id
        for doc in self.store.list_entities("researchers"):
            r = Researcher.from_doc(doc)
            self._researchers[r.id] = r
            self._researchers_by_username[r.username] = r.id
        for doc in self.store.list_entities("invitations"):
            inv = Invitation.from_doc(doc)
            self._invitations[inv.token] = inv
        for doc in self.store.list_entities("pictures"):
            pic = Picture.from_doc(doc)
            self._pictures[pic.id] = pic
        for doc in self.store.list_entities("experiments"):
            exp = Experiment.from_doc(doc)
            self._experiments[exp.id] = exp
            events = [TagEvent.from_record(r) for r in self.store.read_events(exp.id)]
            self._events[exp.id] = events
            self._effective[exp.id] = storage.resolve_effective(events)

    def _experiment_lock(self, experiment_id: str) -> threading.RLock:
        with self._lock:
            return self._experiment_locks.setdefault(experiment_id, threading.RLock())

    def _require_experiment(self, experiment_id: str) -> Experiment:
        exp = self._experiments.get(experiment_id)
        if exp is None:
            raise UnknownExperiment(f"no experiment {experiment_id!r}")
        return exp

    # -- tag maps ------------------------------------------------------------

    def create_tag_map(self, tag_map: TagMap) -> TagMap:
        violations = validate_tag_map(tag_map)
        if tag_map.id and not _ID_SAFE.match(tag_map.id):
            violations = violations + [Violation("id_unsafe", f"id {tag_map.id!r} has unsafe characters")]
        if violations:
            raise InvalidTagMap(violations)
        with self._lock:
            self.store.put_entity("tag_maps", tag_map.id, tag_map_to_doc(tag_map))
            self._tag_maps[tag_map.id] = tag_map
        return tag_map

    def get_tag_map(self, tag_map_id: str) -> TagMap:
        tag_map = self._tag_maps.get(tag_map_id)
        if tag_map is None:
            raise UnknownTagMap(f"no tag map {tag_map_id!r}")
        return tag_map

    def list_tag_maps(self) -> list[TagMap]:
        return list(self._tag_maps.values())

    # -- accounts --------------------------------------------------------------

    def create_participant(
        self,
        display_name: str,
        *,
        username: Optional[str] = None,
        password: Optional[str] = None,
        handedness: Handedness = Handedness.RIGHT,
    ) -> Participant:
        with self._lock:
            participant = Participant(
                id=self.id_factory("part"),
                display_name=display_name,
                username=username,
                password_hash=hash_password(password) if password else None,
                handedness=handedness,
            )
            self.store.put_entity("participants", participant.id, participant.to_doc())
            self._participants[participant.id] = participant
            if username:
                self._participants_by_username[username] = participant.id
        return participant

    def get_participant(self, participant_id: str) -> Participant:
        p = self._participants.get(participant_id)
        if p is None:
            raise UnknownParticipant(f"no participant {participant_id!r}")
        return p

    def create_researcher(self, username: str, password: str) -> Researcher:
        with self._lock:
            researcher = Researcher(
                id=self.id_factory("res"),
                username=username,
                password_hash=hash_password(password),
            )
            self.store.put_entity("researchers", researcher.id, researcher.to_doc())
            self._researchers[researcher.id] = researcher
            self._researchers_by_username[username] = researcher.id
        return researcher

    def researcher_login(self, username: str, password: str) -> tuple[str, datetime]:
        researcher_id = self._researchers_by_username.get(username)
        researcher = self._researchers.get(researcher_id) if researcher_id else None
        if researcher is None or not verify_password(password, researcher.password_hash):
            raise BadCredentials("researcher credentials rejected")
        token = secrets.token_urlsafe(32)
        expires = self.clock() + RESEARCHER_TOKEN_TTL
        with self._lock:
            self._researcher_tokens[token] = (researcher.id, expires)
        return token, expires

    def verify_researcher_token(self, token: str) -> Researcher:
        entry = self._researcher_tokens.get(token)
        if entry is None:
            raise BadCredentials("unknown researcher token")
        researcher_id, expires = entry
        if self.clock() >= expires:
            with self._lock:
                self._researcher_tokens.pop(token, None)
            raise BadCredentials("researcher token expired")
        return self._researchers[researcher_id]

    # -- experiments --------------------------------------------------------------

    def create_experiment(
        self,
        *,
        mode: Mode,
        start_time: datetime,
        finish_time: datetime,
        tag_map_id: str = "plutchik",
        picture_ids: Optional[list[str]] = None,
        ordering: OrderingPolicy = OrderingPolicy.FIXED,
        participant_ids: Optional[set[str]] = None,
        locale_default: str = "en",
    ) -> Experiment:
        if start_time >= finish_time:
            raise InvalidSchedule(f"start {format_utc(start_time)} not before finish {format_utc(finish_time)}")
        self.get_tag_map(tag_map_id)
        for pid in participant_ids or set():
            self.get_participant(pid)
        experiment = Experiment(
            id=self.id_factory("exp"),
            mode=mode,
            state=ExperimentState.DRAFT,
            start_time=start_time,
            finish_time=finish_time,
            tag_map_id=tag_map_id,
            picture_ids=list(picture_ids or []),
            ordering=ordering,
            participant_ids=set(participant_ids or set()),
            locale_default=locale_default,
        )
        with self._lock:
            self.store.put_entity("experiments", experiment.id, experiment.to_doc())
            self._experiments[experiment.id] = experiment
            self._events[experiment.id] = []
            self._effective[experiment.id] = {}
        return experiment

    def get_experiment(self, experiment_id: str) -> Experiment:
        return self._require_experiment(experiment_id)

    def list_experiments(self) -> list[Experiment]:
        return sorted(self._experiments.values(), key=lambda e: e.id)

    UPDATABLE_FIELDS = ("start_time", "finish_time", "picture_ids", "ordering", "participant_ids", "locale_default")

    def update_experiment(self, experiment_id: str, patch: dict) -> Experiment:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            if "mode" in patch:
                raise ModeImmutable("experiment mode is fixed at creation")
            if "state" in patch:
                raise ValueError("state changes go through activate/finish")
            unknown = set(patch) - set(self.UPDATABLE_FIELDS)
            if unknown:
                raise ValueError(f"unknown patch fields: {sorted(unknown)}")
            if exp.state is ExperimentState.FINISHED:
                raise ExperimentFinished("finished experiments accept no changes")

            start = patch.get("start_time", exp.start_time)
            finish = patch.get("finish_time", exp.finish_time)
            if start >= finish:
                raise InvalidSchedule(f"start {format_utc(start)} not before finish {format_utc(finish)}")
            if "participant_ids" in patch:
                for pid in patch["participant_ids"]:
                    self.get_participant(pid)
            if "picture_ids" in patch:
                for pic_id in patch["picture_ids"]:
                    pic = self._pictures.get(pic_id)
                    if pic is None or pic.experiment_id != experiment_id:
                        raise UnknownPicture(f"picture {pic_id!r} is not registered to this experiment")
            if "ordering" in patch:
                patch["ordering"] = OrderingPolicy(patch["ordering"])

            exp.start_time = start
            exp.finish_time = finish
            if "picture_ids" in patch:
                exp.picture_ids = list(patch["picture_ids"])
            if "ordering" in patch:
                exp.ordering = patch["ordering"]
            if "participant_ids" in patch:
                exp.participant_ids = set(patch["participant_ids"])
            if "locale_default" in patch:
                exp.locale_default = patch["locale_default"]
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return exp

    def add_participant_to_experiment(self, experiment_id: str, participant_id: str) -> Experiment:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            if exp.state is ExperimentState.FINISHED:
                raise ExperimentFinished("finished experiments accept no changes")
            self.get_participant(participant_id)
            exp.participant_ids.add(participant_id)
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return exp

    def activate_experiment(self, experiment_id: str) -> Experiment:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            if exp.state is ExperimentState.FINISHED:
                raise ExperimentFinished("cannot activate a finished experiment")
            if exp.state is ExperimentState.ACTIVE:
                return exp
            if exp.mode is Mode.CURATED and not exp.picture_ids:
                raise NoPictures("curated experiments need at least one picture before activation")
            exp.state = ExperimentState.ACTIVE
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return exp

    def finish_experiment(self, experiment_id: str) -> Experiment:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            if exp.state is ExperimentState.FINISHED:
                return exp
            if exp.state is not ExperimentState.ACTIVE:
                raise ExperimentNotActive("only active experiments can be finished")
            exp.state = ExperimentState.FINISHED
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return exp

    # -- pictures -------------------------------------------------------------------

    def _decode_image(self, data: bytes) -> str:
        if len(data) > self.max_image_bytes:
            raise ImageTooLarge(f"{len(data)} bytes exceeds the {self.max_image_bytes}-byte limit")
        try:
            with Image.open(io.BytesIO(data)) as img:
                fmt = img.format
                img.verify()
        except (UnidentifiedImageError, OSError, SyntaxError) as exc:
            raise UndecodableImage(str(exc)) from exc
        if fmt not in ("JPEG", "PNG"):
            raise UndecodableImage(f"unsupported image format {fmt!r}")
        return "image/jpeg" if fmt == "JPEG" else "image/png"

    def add_curated_picture(
        self,
        experiment_id: str,
        data: bytes,
        *,
        uploaded_by: str,
        location: Optional[GeoPoint] = None,
    ) -> Picture:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            if exp.mode is not Mode.CURATED:
                raise WrongMode("researcher picture sets belong to curated experiments")
            if exp.state is ExperimentState.FINISHED:
                raise ExperimentFinished("finished experiments accept no changes")
            media_type = self._decode_image(data)
            now = self.clock()
            blob_id = self.store.put_blob(
                data,
                {
                    "media_type": media_type,
                    "uploader": uploaded_by,
                    "location": {"lat": location.lat, "lon": location.lon} if location else None,
                    "uploaded_at": format_utc(now),
                },
            )
            picture = Picture(
                id=self.id_factory("pic"),
                experiment_id=experiment_id,
                blob_id=blob_id,
                media_type=media_type,
                source=PictureSource.CURATED,
                uploaded_by=uploaded_by,
                uploaded_at=now,
                location=location,
            )
            self.store.put_entity("pictures", picture.id, picture.to_doc())
            self._pictures[picture.id] = picture
            exp.picture_ids.append(picture.id)
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return picture

    def get_picture(self, picture_id: str) -> Picture:
        pic = self._pictures.get(picture_id)
        if pic is None:
            raise UnknownPicture(f"no picture {picture_id!r}")
        return pic

    def picture_bytes(self, picture_id: str) -> tuple[bytes, str]:
        pic = self.get_picture(picture_id)
        data = self.store.get_blob(pic.blob_id)
        if data is None:
            raise UnknownPicture(f"blob for picture {picture_id!r} is missing")
        return data, pic.media_type

    # -- invitations -----------------------------------------------------------------

    def mint_invitation(
        self,
        experiment_id: str,
        participant_id: str,
        *,
        expires_at: Optional[datetime] = None,
    ) -> Invitation:
        with self._experiment_lock(experiment_id):
            exp = self._require_experiment(experiment_id)
            self.get_participant(participant_id)
            if exp.state is ExperimentState.FINISHED:
                raise ExperimentFinished("finished experiments accept no invitations")
            token = secrets.token_urlsafe(16)  # 128 bits
            invitation = Invitation(
                token=token,
                experiment_id=experiment_id,
                participant_id=participant_id,
                url_payload=f"{self.base_url}/join/{token}",
                expires_at=expires_at,
            )
            # an invitation is an assignment: the invitee joins the experiment
            exp.participant_ids.add(participant_id)
            with self._lock:
                self.store.put_entity("invitations", token, invitation.to_doc())
                self._invitations[token] = invitation
            self.store.put_entity("experiments", exp.id, exp.to_doc())
            return invitation

    # -- sessions ---------------------------------------------------------------------

    def _open_session(self, experiment_id: str, participant_id: str) -> Session:
        exp = self._require_experiment(experiment_id)
        if not exp.is_active(self.clock()):
            raise ExperimentNotActive(f"experiment {experiment_id!r} is not accepting sessions")
        if participant_id not in exp.participant_ids:
            raise ParticipantNotAssigned(f"participant {participant_id!r} is not in experiment {experiment_id!r}")
        with self._lock:
            previous = self._participant_session.pop(participant_id, None)
            if previous is not None:
                old = self._sessions.get(previous)
                if old is not None:
                    old.live = False
            session = Session(
                token=secrets.token_urlsafe(32),
                participant_id=participant_id,
                experiment_id=experiment_id,
                cursor=0,
                created_at=self.clock(),
            )
            self._sessions[session.token] = session
            self._participant_session[participant_id] = session.token
        return session

    def open_session_with_token(self, token: str) -> Session:
        invitation = self._invitations.get(token)
        if invitation is None:
            raise BadCredentials("unknown invitation token")
        if invitation.expires_at is not None and self.clock() >= invitation.expires_at:
            raise TokenExpired("invitation token has expired")
        return self._open_session(invitation.experiment_id, invitation.participant_id)

    def open_session_with_credentials(self, experiment_id: str, username: str, password: str) -> Session:
        participant_id = self._participants_by_username.get(username)
        participant = self._participants.get(participant_id) if participant_id else None
        if participant is None or not verify_password(password, participant.password_hash):
            raise BadCredentials("participant credentials rejected")
        return self._open_session(experiment_id, participant.id)

    def get_session(self, token: str) -> Session:
        session = self._sessions.get(token)
        if session is None or not session.live:
            raise NoSession("no live session for this token")
        return session

    # -- picture ordering and the tagging loop ---------------------------------------

    def picture_order(self, experiment: Experiment, participant_id: str) -> list[str]:
        if experiment.mode is not Mode.CURATED:
            raise WrongMode("picture ordering exists only in curated mode")
        if experiment.ordering is OrderingPolicy.FIXED:
            return list(experiment.picture_ids)
        return participant_order(experiment.id, participant_id, experiment.picture_ids)

    def next_picture(self, session: Session) -> Optional[str]:
        exp = self._require_experiment(session.experiment_id)
        order = self.picture_order(exp, session.participant_id)
        if session.cursor >= len(order):
            return None
        return order[session.cursor]

    def submit_tag(
        self,
        session: Session,
        picture_id: str,
        placement: Placement,
        *,
        location: Optional[GeoPoint] = None,
        client_time: Optional[str] = None,
    ) -> TagEvent:
        with self._experiment_lock(session.experiment_id):
            exp = self._require_experiment(session.experiment_id)
            if not exp.is_active(self.clock()):
                raise ExperimentNotActive("experiment is not accepting tags")
            if exp.mode is Mode.CURATED:
                if picture_id not in exp.picture_ids:
                    raise UnknownPicture(f"picture {picture_id!r} is not part of this experiment")
                source = PictureSource.CURATED
            else:
                pic = self._pictures.get(picture_id)
                if (
                    pic is None
                    or pic.experiment_id != exp.id
                    or pic.uploaded_by != session.participant_id
                ):
                    raise UnknownPicture(f"picture {picture_id!r} was not uploaded by this participant")
                source = PictureSource.PARTICIPANT
                if location is None:
                    raise MissingLocation("field-mode tags require coordinates")

            classification = classify(self.get_tag_map(exp.tag_map_id), placement)
            event = TagEvent(
                event_id=self.id_factory("evt"),
                experiment_id=exp.id,
                participant_id=session.participant_id,
                picture_id=picture_id,
                placement=placement,
                classification=classification,
                tagged_at=self.clock(),
                client_time=client_time,
                location=location,
                picture_source=source,
            )
            self.store.append_event(exp.id, event.to_record())
            self._events[exp.id].append(event)
            self._effective[exp.id][(event.participant_id, event.picture_id)] = event

            if exp.mode is Mode.CURATED:
                order = self.picture_order(exp, session.participant_id)
                if session.cursor < len(order) and order[session.cursor] == picture_id:
                    session.cursor += 1
            return event

    def submit_field_picture(
        self,
        session: Session,
        data: bytes,
        location: Optional[GeoPoint],
        *,
        client_time: Optional[str] = None,
    ) -> Picture:
        with self._experiment_lock(session.experiment_id):
            exp = self._require_experiment(session.experiment_id)
            if exp.mode is not Mode.FIELD:
                raise WrongMode("only field-mode participants upload pictures")
            if not exp.is_active(self.clock()):
                raise ExperimentNotActive("experiment is not accepting uploads")
            if location is None:
                raise MissingLocation("field pictures require coordinates")
            media_type = self._decode_image(data)
            now = self.clock()
            blob_id = self.store.put_blob(
                data,
                {
                    "media_type": media_type,
                    "uploader": session.participant_id,
                    "location": {"lat": location.lat, "lon": location.lon},
                    "uploaded_at": format_utc(now),
                    "client_time": client_time,
                },
            )
            picture = Picture(
                id=self.id_factory("pic"),
                experiment_id=exp.id,
                blob_id=blob_id,
                media_type=media_type,
                source=PictureSource.PARTICIPANT,
                uploaded_by=session.participant_id,
                uploaded_at=now,
                location=location,
            )
            self.store.put_entity("pictures", picture.id, picture.to_doc())
            self._pictures[picture.id] = picture
            return picture

    # -- analysis views ------------------------------------------------------------------

    def effective_events(self, experiment_id: str) -> list[TagEvent]:
        with self._experiment_lock(experiment_id):
            self._require_experiment(experiment_id)
            return list(self._effective[experiment_id].values())

    def export_csv(self, experiment_id: str) -> str:
        return export_events(self.effective_events(experiment_id))

    def per_user_view(self, experiment_id: str, participant_id: str) -> list[TagEvent]:
        exp = self._require_experiment(experiment_id)
        if participant_id not in exp.participant_ids:
            raise UnknownParticipant(f"participant {participant_id!r} is not in this experiment")
        events = [e for e in self.effective_events(experiment_id) if e.participant_id == participant_id]
        events.sort(key=lambda e: (e.tagged_at, e.picture_id))
        return events

    def per_picture_view(self, experiment_id: str, picture_id: str):
        exp = self._require_experiment(experiment_id)
        known = picture_id in exp.picture_ids or (
            picture_id in self._pictures and self._pictures[picture_id].experiment_id == experiment_id
        )
        if not known:
            raise UnknownPicture(f"picture {picture_id!r} is not part of this experiment")
        events = [e for e in self.effective_events(experiment_id) if e.picture_id == picture_id]
        events.sort(key=lambda e: (e.tagged_at, e.participant_id))
        tag_map = self.get_tag_map(exp.tag_map_id)
        summary = summarize(events, tag_map) if events else empty_summary(tag_map)
        return summary, events

    def emotion_map(self, experiment_id: str, cell_size_deg: float) -> GridAggregate:
        exp = self._require_experiment(experiment_id)
        tag_map = self.get_tag_map(exp.tag_map_id)
        return grid_aggregate(self.effective_events(experiment_id), cell_size_deg, tag_map)
