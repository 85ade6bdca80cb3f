"""HTTP facade over the platform service.

Researchers authenticate with username/password and get a 24-hour bearer
token; participants authenticate with an invitation token (or experiment
credentials) and get a session bearer token. Every domain error surfaces
as ``{"error": {"code": ..., "message": ..., "details": ...}}`` with a
stable machine-readable code.

Mutating endpoints honor an Idempotency-Key header: a retry with the same
key replays the original response instead of repeating the side effect.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from typing import Optional

from fastapi import Body, Depends, FastAPI, File, Form, Query, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

from .errors import (
    BadCredentials,
    CenterAmbiguous,
    CorruptRecord,
    EmomapError,
    EmptyInput,
    ExperimentFinished,
    ExperimentNotActive,
    ImageTooLarge,
    InvalidCellSize,
    InvalidSchedule,
    InvalidTagMap,
    MissingLocation,
    ModeImmutable,
    NoPictures,
    NoSession,
    OutOfDisc,
    ParticipantNotAssigned,
    SerializationFailure,
    StorageFull,
    StoreLocked,
    TokenExpired,
    UndecodableImage,
    UnknownExperiment,
    UnknownParticipant,
    UnknownPicture,
    UnknownTagMap,
    WrongMode,
)
from .model import GeoPoint, Handedness, Mode, OrderingPolicy, parse_utc, tag_map_from_doc, tag_map_to_doc
from .service import Platform
from .wheel import Placement

STATUS_BY_ERROR = {
    BadCredentials: 401,
    NoSession: 401,
    TokenExpired: 403,
    ExperimentNotActive: 403,
    ParticipantNotAssigned: 403,
    UnknownExperiment: 404,
    UnknownParticipant: 404,
    UnknownPicture: 404,
    UnknownTagMap: 404,
    ModeImmutable: 409,
    ExperimentFinished: 409,
    WrongMode: 409,
    NoPictures: 409,
    ImageTooLarge: 413,
    CenterAmbiguous: 422,
    OutOfDisc: 422,
    MissingLocation: 422,
    UndecodableImage: 422,
    InvalidSchedule: 422,
    InvalidCellSize: 422,
    InvalidTagMap: 422,
    EmptyInput: 422,
    CorruptRecord: 500,
    SerializationFailure: 500,
    StorageFull: 507,
    StoreLocked: 503,
}


class RequestError(EmomapError):
    """Malformed request body or parameters."""

    code = "invalid_request"


STATUS_BY_ERROR[RequestError] = 422


def error_response(exc: EmomapError, status: int) -> JSONResponse:
    payload = {"code": exc.code, "message": exc.message}
    if getattr(exc, "details", None):
        payload["details"] = exc.details
    if isinstance(exc, InvalidTagMap):
        payload["violations"] = [{"code": v.code, "message": v.message} for v in exc.violations]
    return JSONResponse(status_code=status, content={"error": payload})


class IdempotencyMiddleware(BaseHTTPMiddleware):
    """Replay the original response for a repeated Idempotency-Key."""

    MUTATING = {"POST", "PUT", "PATCH", "DELETE"}
    MAX_ENTRIES = 10_000

    def __init__(self, app):
        super().__init__(app)
        self._cache: "OrderedDict[tuple[str, str, str], tuple[int, str, bytes]]" = OrderedDict()
        self._lock = threading.Lock()

    async def dispatch(self, request: Request, call_next):
        key = request.headers.get("Idempotency-Key")
        if not key or request.method not in self.MUTATING:
            return await call_next(request)
        cache_key = (key, request.method, request.url.path)
        with self._lock:
            hit = self._cache.get(cache_key)
        if hit is not None:
            status, media_type, body = hit
            return Response(content=body, status_code=status, media_type=media_type)
        response = await call_next(request)
        body = b"".join([chunk async for chunk in response.body_iterator])
        if response.status_code < 500:
            with self._lock:
                self._cache[cache_key] = (
                    response.status_code,
                    response.headers.get("content-type", "application/json"),
                    body,
                )
                while len(self._cache) > self.MAX_ENTRIES:
                    self._cache.popitem(last=False)
        return Response(
            content=body,
            status_code=response.status_code,
            media_type=response.headers.get("content-type"),
        )


def _require(body: dict, field: str):
    if field not in body or body[field] is None:
        raise RequestError(f"missing required field {field!r}", field=field)
    return body[field]


def _parse_enum(enum_cls, value, field: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = [e.value for e in enum_cls]
        raise RequestError(f"{field} must be one of {choices}", field=field)


def _parse_time(value, field: str):
    try:
        return parse_utc(str(value))
    except ValueError:
        raise RequestError(f"{field} is not an ISO-8601 timestamp", field=field)


def _geo_point(lat, lon) -> GeoPoint:
    try:
        return GeoPoint(float(lat), float(lon))
    except (TypeError, ValueError) as exc:
        raise RequestError(f"invalid coordinates: {exc}", fields=["lat", "lon"])


def _parse_location(body: dict) -> Optional[GeoPoint]:
    lat, lon = body.get("lat"), body.get("lon")
    if lat is None and lon is None:
        return None
    if lat is None or lon is None:
        raise MissingLocation("lat and lon must be supplied together",
                              fields=[f for f, v in (("lat", lat), ("lon", lon)) if v is None])
    return _geo_point(lat, lon)


def accept_language_order(header: Optional[str]) -> list[str]:
    """Locale codes from an Accept-Language header, highest q first."""
    if not header:
        return []
    entries = []
    for i, part in enumerate(header.split(",")):
        piece = part.strip()
        if not piece:
            continue
        code, _, params = piece.partition(";")
        q = 1.0
        if params.strip().startswith("q="):
            try:
                q = float(params.strip()[2:])
            except ValueError:
                q = 0.0
        entries.append((-q, i, code.strip()))
    return [code for _, _, code in sorted(entries)]


def negotiate_locale(tag_map, query_locale, accept_header, experiment_default) -> Optional[str]:
    """Explicit query parameter wins, then Accept-Language, then the experiment default.

    Each level fully overrides the ones below it; an unknown locale at the
    winning level falls back to the default label matrix, not to the next level.
    """
    if query_locale:
        return query_locale if query_locale in tag_map.locale_labels else None
    for code in accept_language_order(accept_header):
        if code in tag_map.locale_labels:
            return code
        primary = code.split("-")[0]
        if primary in tag_map.locale_labels:
            return primary
    if experiment_default and experiment_default in tag_map.locale_labels:
        return experiment_default
    return None


def _mount_ui(app: FastAPI, ui_dir) -> None:
    """Serve a built web UI from a directory (participant app + admin panel)."""
    from pathlib import Path

    from fastapi.responses import FileResponse
    from fastapi.staticfiles import StaticFiles

    ui = Path(ui_dir)
    for sub in ("dist", "vendor"):
        if (ui / sub).is_dir():
            app.mount(f"/{sub}", StaticFiles(directory=ui / sub), name=sub)

    @app.get("/styles.css", include_in_schema=False)
    def styles():
        return FileResponse(ui / "styles.css")

    @app.get("/", include_in_schema=False)
    def participant_app():
        return FileResponse(ui / "index.html")

    @app.get("/join/{token}", include_in_schema=False)
    def join_link(token: str):
        # the client reads the token from the path
        return FileResponse(ui / "index.html")

    @app.get("/admin", include_in_schema=False)
    def admin_app():
        return FileResponse(ui / "admin.html")


def _participant_doc(participant) -> dict:
    doc = participant.to_doc()
    doc["has_credentials"] = doc.pop("password_hash") is not None
    return doc


def _session_doc(session, platform: Platform, accept_language: Optional[str] = None) -> dict:
    participant = platform.get_participant(session.participant_id)
    experiment = platform.get_experiment(session.experiment_id)
    tag_map = platform.get_tag_map(experiment.tag_map_id)
    resolved = negotiate_locale(tag_map, None, accept_language, experiment.locale_default)
    map_doc = tag_map_to_doc(tag_map)
    map_doc.pop("locale_labels", None)
    return {
        "session_token": session.token,
        "participant_id": session.participant_id,
        "experiment_id": session.experiment_id,
        "mode": experiment.mode.value,
        "cursor": session.cursor,
        "handedness": participant.handedness.value,
        "created_at": session.created_at.isoformat().replace("+00:00", "Z"),
        "tag_map": map_doc,
        "labels": [list(row) for row in tag_map.label_matrix(resolved)],
        "locale": resolved,
    }


def create_app(platform: Platform, ui_dir=None) -> FastAPI:
    app = FastAPI(title="emomap", docs_url=None, redoc_url=None)
    app.state.platform = platform
    app.add_middleware(IdempotencyMiddleware)

    if ui_dir is not None:
        _mount_ui(app, ui_dir)

    @app.exception_handler(EmomapError)
    async def handle_domain_error(request: Request, exc: EmomapError):
        return error_response(exc, STATUS_BY_ERROR.get(type(exc), 400))

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return error_response(RequestError(str(exc.errors()[:3])), 422)

    def bearer_token(request: Request) -> str:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise NoSession("missing bearer token")
        return header[len("Bearer "):]

    def researcher_auth(request: Request):
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise BadCredentials("researcher endpoints require a bearer token")
        return platform.verify_researcher_token(header[len("Bearer "):])

    def session_auth(request: Request):
        return platform.get_session(bearer_token(request))

    # -- health ------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    # -- auth ---------------------------------------------------------------

    @app.post("/api/login")
    def login(body: dict = Body(...)):
        token, expires = platform.researcher_login(
            str(_require(body, "username")), str(_require(body, "password"))
        )
        return {"token": token, "expires_at": expires.isoformat().replace("+00:00", "Z")}

    @app.post("/api/session")
    def open_session(request: Request, body: dict = Body(...)):
        if "token" in body and body["token"]:
            session = platform.open_session_with_token(str(body["token"]))
        else:
            session = platform.open_session_with_credentials(
                str(_require(body, "experiment_id")),
                str(_require(body, "username")),
                str(_require(body, "password")),
            )
        return _session_doc(session, platform, request.headers.get("Accept-Language"))

    # -- participant flow ------------------------------------------------------

    @app.get("/api/session/next")
    def session_next(
        request: Request,
        session=Depends(session_auth),
        locale: Optional[str] = Query(default=None),
    ):
        picture_id = platform.next_picture(session)
        if picture_id is None:
            return {"done": True}
        experiment = platform.get_experiment(session.experiment_id)
        tag_map = platform.get_tag_map(experiment.tag_map_id)
        resolved = negotiate_locale(
            tag_map, locale, request.headers.get("Accept-Language"), experiment.locale_default
        )
        doc = tag_map_to_doc(tag_map)
        doc.pop("locale_labels", None)
        return {
            "picture_id": picture_id,
            "picture_url": f"/api/pictures/{picture_id}/image",
            "tag_map": doc,
            "labels": [list(row) for row in tag_map.label_matrix(resolved)],
            "locale": resolved,
        }

    @app.post("/api/tags", status_code=201)
    def submit_tag(session=Depends(session_auth), body: dict = Body(...)):
        picture_id = str(_require(body, "picture_id"))
        try:
            placement = Placement(float(_require(body, "x")), float(_require(body, "y")))
        except (TypeError, ValueError):
            raise RequestError("x and y must be numbers", fields=["x", "y"])
        event = platform.submit_tag(
            session,
            picture_id,
            placement,
            location=_parse_location(body),
            client_time=body.get("client_time"),
        )
        return event.to_record()

    @app.post("/api/field-pictures", status_code=201)
    def upload_field_picture(
        session=Depends(session_auth),
        image: UploadFile = File(...),
        lat: Optional[float] = Form(default=None),
        lon: Optional[float] = Form(default=None),
        client_time: Optional[str] = Form(default=None),
    ):
        if lat is None or lon is None:
            raise MissingLocation("field pictures require lat and lon",
                                  fields=[f for f, v in (("lat", lat), ("lon", lon)) if v is None])
        data = image.file.read(platform.max_image_bytes + 1)
        if len(data) > platform.max_image_bytes:
            raise ImageTooLarge(f"image exceeds the {platform.max_image_bytes}-byte limit")
        picture = platform.submit_field_picture(
            session, data, _geo_point(lat, lon), client_time=client_time
        )
        return {"picture_id": picture.id}

    @app.get("/api/pictures/{picture_id}/image")
    def picture_image(picture_id: str, request: Request):
        picture = platform.get_picture(picture_id)
        header = request.headers.get("Authorization", "")
        if header.startswith("Bearer "):
            token = header[len("Bearer "):]
            try:
                platform.verify_researcher_token(token)
            except BadCredentials:
                session = platform.get_session(token)
                if session.experiment_id != picture.experiment_id:
                    raise ParticipantNotAssigned("picture belongs to another experiment")
        else:
            raise NoSession("missing bearer token")
        data, media_type = platform.picture_bytes(picture_id)
        return Response(content=data, media_type=media_type)

    # -- researcher: experiments -------------------------------------------------

    @app.post("/api/experiments", status_code=201)
    def create_experiment(_=Depends(researcher_auth), body: dict = Body(...)):
        experiment = platform.create_experiment(
            mode=_parse_enum(Mode, _require(body, "mode"), "mode"),
            start_time=_parse_time(_require(body, "start_time"), "start_time"),
            finish_time=_parse_time(_require(body, "finish_time"), "finish_time"),
            tag_map_id=body.get("tag_map_id", "plutchik"),
            ordering=_parse_enum(OrderingPolicy, body.get("ordering", "FIXED"), "ordering"),
            participant_ids=set(body.get("participant_ids", [])),
            locale_default=body.get("locale_default", "en"),
        )
        return experiment.to_doc()

    @app.get("/api/experiments")
    def list_experiments(_=Depends(researcher_auth)):
        return [e.to_doc() for e in platform.list_experiments()]

    @app.get("/api/experiments/{experiment_id}")
    def get_experiment(experiment_id: str, _=Depends(researcher_auth)):
        return platform.get_experiment(experiment_id).to_doc()

    @app.patch("/api/experiments/{experiment_id}")
    def patch_experiment(experiment_id: str, _=Depends(researcher_auth), body: dict = Body(...)):
        patch = dict(body)
        for field in ("start_time", "finish_time"):
            if field in patch:
                patch[field] = _parse_time(patch[field], field)
        try:
            experiment = platform.update_experiment(experiment_id, patch)
        except ValueError as exc:
            raise RequestError(str(exc))
        return experiment.to_doc()

    @app.post("/api/experiments/{experiment_id}/activate")
    def activate(experiment_id: str, _=Depends(researcher_auth)):
        return platform.activate_experiment(experiment_id).to_doc()

    @app.post("/api/experiments/{experiment_id}/finish")
    def finish(experiment_id: str, _=Depends(researcher_auth)):
        return platform.finish_experiment(experiment_id).to_doc()

    @app.post("/api/experiments/{experiment_id}/pictures", status_code=201)
    def add_picture(
        experiment_id: str,
        researcher=Depends(researcher_auth),
        image: UploadFile = File(...),
        lat: Optional[float] = Form(default=None),
        lon: Optional[float] = Form(default=None),
    ):
        data = image.file.read(platform.max_image_bytes + 1)
        if len(data) > platform.max_image_bytes:
            raise ImageTooLarge(f"image exceeds the {platform.max_image_bytes}-byte limit")
        location = _geo_point(lat, lon) if lat is not None and lon is not None else None
        picture = platform.add_curated_picture(
            experiment_id, data, uploaded_by=researcher.id, location=location
        )
        return {"picture_id": picture.id}

    # -- researcher: people and invitations -----------------------------------------

    @app.post("/api/participants", status_code=201)
    def create_participant(_=Depends(researcher_auth), body: dict = Body(...)):
        participant = platform.create_participant(
            str(_require(body, "display_name")),
            username=body.get("username"),
            password=body.get("password"),
            handedness=_parse_enum(Handedness, body.get("handedness", "RIGHT"), "handedness"),
        )
        return _participant_doc(participant)

    @app.get("/api/participants")
    def list_participants(_=Depends(researcher_auth)):
        return [_participant_doc(p) for p in platform._participants.values()]

    @app.post("/api/invitations", status_code=201)
    def mint_invitation(_=Depends(researcher_auth), body: dict = Body(...)):
        expires = body.get("expires_at")
        invitation = platform.mint_invitation(
            str(_require(body, "experiment_id")),
            str(_require(body, "participant_id")),
            expires_at=_parse_time(expires, "expires_at") if expires else None,
        )
        return invitation.to_doc()

    # -- researcher: tag maps ----------------------------------------------------------

    @app.post("/api/tag-maps", status_code=201)
    def create_tag_map(_=Depends(researcher_auth), body: dict = Body(...)):
        for field in ("id", "sector_count", "sector_offset_deg", "band_boundaries", "labels"):
            _require(body, field)
        body.setdefault("locale_labels", {})
        tag_map = platform.create_tag_map(tag_map_from_doc(body))
        return tag_map_to_doc(tag_map)

    @app.get("/api/tag-maps")
    def list_tag_maps(_=Depends(researcher_auth)):
        return [tag_map_to_doc(m) for m in platform.list_tag_maps()]

    @app.get("/api/tag-maps/{tag_map_id}")
    def get_tag_map(tag_map_id: str, _=Depends(researcher_auth)):
        return tag_map_to_doc(platform.get_tag_map(tag_map_id))

    # -- researcher: results ---------------------------------------------------------------

    @app.get("/api/experiments/{experiment_id}/results/users/{participant_id}")
    def results_for_user(experiment_id: str, participant_id: str, _=Depends(researcher_auth)):
        events = platform.per_user_view(experiment_id, participant_id)
        return {
            "experiment_id": experiment_id,
            "participant_id": participant_id,
            "entries": [
                {
                    "picture_id": e.picture_id,
                    "picture_url": f"/api/pictures/{e.picture_id}/image"
                    if e.picture_id in platform._pictures else None,
                    "placement": {"x": e.placement.x, "y": e.placement.y},
                    "classification": e.to_record()["classification"],
                    "tagged_at": e.to_record()["tagged_at"],
                }
                for e in events
            ],
        }

    @app.get("/api/experiments/{experiment_id}/results/pictures/{picture_id}")
    def results_for_picture(experiment_id: str, picture_id: str, _=Depends(researcher_auth)):
        summary, events = platform.per_picture_view(experiment_id, picture_id)
        return {
            "experiment_id": experiment_id,
            "picture_id": picture_id,
            "summary": summary.to_doc(),
            "placements": [
                {
                    "participant_id": e.participant_id,
                    "x": e.placement.x,
                    "y": e.placement.y,
                }
                for e in events
            ],
        }

    @app.get("/api/experiments/{experiment_id}/export.csv")
    def export_csv(experiment_id: str, _=Depends(researcher_auth)):
        text = platform.export_csv(experiment_id)
        return Response(content=text.encode("utf-8"), media_type="text/csv; charset=utf-8")

    @app.get("/api/experiments/{experiment_id}/map")
    def emotion_map(experiment_id: str, _=Depends(researcher_auth),
                    cell_size: Optional[float] = Query(default=None)):
        if cell_size is None:
            raise InvalidCellSize("cell_size query parameter is required")
        return platform.emotion_map(experiment_id, cell_size).to_doc()

    return app
