"""File-based durable store.

Layout under one root directory:

* ``<kind>/<id>.json`` — one document per entity (experiments, participants,
  researchers, tag_maps, invitations, pictures);
* ``events-<experiment_id>.log`` — append-only JSON-lines tag-event log,
  one experiment per file, never rewritten;
* ``blobs/<sha256-hex>`` — content-addressed image bytes, with an
  append-only ``blobs/<sha256-hex>.meta`` sidecar of upload records.

Durability discipline: entity documents are written temp-then-rename with
fsync; event appends are fsynced before the call returns, so an
acknowledged tag survives a hard kill. Recovery tolerates exactly one
torn tail: a trailing half-written line is dropped (and truncated before
the next append); a corrupt line anywhere else is an error, never skipped
silently.
"""

from __future__ import annotations

import errno
import fcntl
import hashlib
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import CorruptRecord, SerializationFailure, StorageFull, StoreLocked
from .model import Experiment, TagEvent

ENTITY_KINDS = ("experiments", "participants", "researchers", "tag_maps", "invitations", "pictures")

MAX_BLOB_BYTES = 20 * 1024 * 1024

# no separators, no leading dot: ids double as filenames
_SAFE_ID = re.compile(r"^[A-Za-z0-9_~-][A-Za-z0-9._~-]*$")

LOCK_FILE = ".serve.lock"


def _fsync_dir(path: Path):
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _wrap_oserror(exc: OSError):
    if exc.errno == errno.ENOSPC:
        return StorageFull(str(exc))
    return exc


class FileStore:
    """Entity documents, per-experiment event logs, and content-addressed blobs."""

    def __init__(self, root: os.PathLike | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        for kind in ENTITY_KINDS:
            (self.root / kind).mkdir(exist_ok=True)
        (self.root / "blobs").mkdir(exist_ok=True)
        self._log_locks: dict[str, threading.Lock] = {}
        self._log_locks_guard = threading.Lock()

    # -- entities -----------------------------------------------------------

    def _entity_path(self, kind: str, entity_id: str) -> Path:
        if kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {kind!r}")
        if not _SAFE_ID.match(entity_id):
            raise ValueError(f"unsafe entity id {entity_id!r}")
        return self.root / kind / f"{entity_id}.json"

    def put_entity(self, kind: str, entity_id: str, doc: dict) -> None:
        path = self._entity_path(kind, entity_id)
        try:
            data = json.dumps(doc, ensure_ascii=False, indent=2).encode("utf-8")
        except (TypeError, ValueError) as exc:
            raise SerializationFailure(str(exc)) from exc
        tmp = path.with_suffix(".json.tmp")
        try:
            with open(tmp, "wb") as f:
                f.write(data)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
            _fsync_dir(path.parent)
        except OSError as exc:
            raise _wrap_oserror(exc) from exc

    def get_entity(self, kind: str, entity_id: str) -> Optional[dict]:
        try:
            path = self._entity_path(kind, entity_id)
        except ValueError:
            return None
        try:
            with open(path, "rb") as f:
                return json.loads(f.read().decode("utf-8"))
        except FileNotFoundError:
            return None

    def list_entities(self, kind: str) -> list[dict]:
        if kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {kind!r}")
        docs = []
        for path in sorted((self.root / kind).glob("*.json")):
            with open(path, "rb") as f:
                docs.append(json.loads(f.read().decode("utf-8")))
        return docs

    # -- event log ----------------------------------------------------------

    def _log_path(self, experiment_id: str) -> Path:
        if not _SAFE_ID.match(experiment_id):
            raise ValueError(f"unsafe experiment id {experiment_id!r}")
        return self.root / f"events-{experiment_id}.log"

    def _log_lock(self, experiment_id: str) -> threading.Lock:
        with self._log_locks_guard:
            return self._log_locks.setdefault(experiment_id, threading.Lock())

    def append_event(self, experiment_id: str, record: dict) -> None:
        """Append one record as one line; durable before return."""
        try:
            line = json.dumps(record, ensure_ascii=False, separators=(",", ":"))
        except (TypeError, ValueError) as exc:
            raise SerializationFailure(str(exc)) from exc
        if "\n" in line or "\r" in line:
            raise SerializationFailure("record serialized with a raw newline")
        path = self._log_path(experiment_id)
        with self._log_lock(experiment_id):
            try:
                with open(path, "a+b") as f:
                    self._truncate_torn_tail(f)
                    f.write(line.encode("utf-8") + b"\n")
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as exc:
                raise _wrap_oserror(exc) from exc

    @staticmethod
    def _truncate_torn_tail(f) -> None:
        """Drop a half-written final line left by a crash before appending."""
        size = f.seek(0, os.SEEK_END)
        if size == 0:
            return
        f.seek(size - 1)
        if f.read(1) == b"\n":
            return
        # walk back to the last newline, or the file start
        pos = size - 1
        chunk = 4096
        while pos > 0:
            start = max(0, pos - chunk)
            f.seek(start)
            data = f.read(pos - start)
            idx = data.rfind(b"\n")
            if idx >= 0:
                f.truncate(start + idx + 1)
                f.seek(0, os.SEEK_END)
                return
            pos = start
        f.truncate(0)

    def read_events(self, experiment_id: str) -> list[dict]:
        """All complete records in log order; a torn tail is ignored."""
        path = self._log_path(experiment_id)
        try:
            with open(path, "rb") as f:
                data = f.read()
        except FileNotFoundError:
            return []
        records = []
        lines = data.split(b"\n")
        complete, tail = lines[:-1], lines[-1]
        # tail is b"" when the file ends in a newline; anything else is a
        # torn final line and is dropped, never a mid-file skip.
        for line_no, line in enumerate(complete, start=1):
            try:
                records.append(json.loads(line.decode("utf-8")))
            except (ValueError, UnicodeDecodeError) as exc:
                raise CorruptRecord(path, line_no, str(exc)) from exc
        del tail
        return records

    def event_log_exists(self, experiment_id: str) -> bool:
        return self._log_path(experiment_id).exists()

    # -- blobs ---------------------------------------------------------------

    def put_blob(self, data: bytes, metadata: dict) -> str:
        """Store bytes under their SHA-256; same bytes are stored once."""
        if len(data) > MAX_BLOB_BYTES:
            raise ValueError(f"blob of {len(data)} bytes exceeds {MAX_BLOB_BYTES}")
        blob_id = hashlib.sha256(data).hexdigest()
        path = self.root / "blobs" / blob_id
        try:
            if not path.exists():
                tmp = path.with_name(f"{blob_id}.tmp-{os.getpid()}-{threading.get_ident()}")
                with open(tmp, "wb") as f:
                    f.write(data)
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(tmp, path)
                _fsync_dir(path.parent)
            meta_line = json.dumps(metadata, ensure_ascii=False, separators=(",", ":"))
            with open(path.with_name(f"{blob_id}.meta"), "ab") as f:
                f.write(meta_line.encode("utf-8") + b"\n")
                f.flush()
                os.fsync(f.fileno())
        except OSError as exc:
            raise _wrap_oserror(exc) from exc
        return blob_id

    def get_blob(self, blob_id: str) -> Optional[bytes]:
        if not _SAFE_ID.match(blob_id):
            return None
        try:
            with open(self.root / "blobs" / blob_id, "rb") as f:
                return f.read()
        except FileNotFoundError:
            return None

    def blob_metadata(self, blob_id: str) -> list[dict]:
        try:
            with open(self.root / "blobs" / f"{blob_id}.meta", "rb") as f:
                return [json.loads(line) for line in f.read().splitlines() if line]
        except FileNotFoundError:
            return []


# ---------------------------------------------------------------------------
# snapshots


@dataclass
class ExperimentSnapshot:
    """Consistent in-memory view of one experiment's entities and events."""

    experiment: Experiment
    events: list[TagEvent] = field(default_factory=list)
    effective: dict[tuple[str, str], TagEvent] = field(default_factory=dict)

    @property
    def effective_events(self) -> list[TagEvent]:
        return list(self.effective.values())


def resolve_effective(events: list[TagEvent]) -> dict[tuple[str, str], TagEvent]:
    """Latest-wins per (participant, picture), by log order."""
    effective: dict[tuple[str, str], TagEvent] = {}
    for event in events:
        effective[(event.participant_id, event.picture_id)] = event
    return effective


def load_snapshot(store: FileStore, experiment_id: str) -> Optional[ExperimentSnapshot]:
    doc = store.get_entity("experiments", experiment_id)
    if doc is None:
        return None
    experiment = Experiment.from_doc(doc)
    events = [TagEvent.from_record(r) for r in store.read_events(experiment_id)]
    return ExperimentSnapshot(
        experiment=experiment,
        events=events,
        effective=resolve_effective(events),
    )


# ---------------------------------------------------------------------------
# serve lock


class ServeLock:
    """Advisory exclusive lock guarding direct-store mutations.

    Held by a running service; released automatically if the process dies,
    so a crash never wedges the store.
    """

    def __init__(self, root: os.PathLike | str):
        self.path = Path(root) / LOCK_FILE
        self._fd: Optional[int] = None

    def acquire(self) -> "ServeLock":
        if self._fd is not None:
            return self
        fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(fd)
            raise StoreLocked(f"store at {self.path.parent} is locked by a running service")
        os.ftruncate(fd, 0)
        os.write(fd, str(os.getpid()).encode())
        self._fd = fd
        return self

    def release(self) -> None:
        if self._fd is not None:
            fcntl.flock(self._fd, fcntl.LOCK_UN)
            os.close(self._fd)
            self._fd = None

    def __enter__(self) -> "ServeLock":
        return self.acquire()

    def __exit__(self, *exc) -> None:
        self.release()
