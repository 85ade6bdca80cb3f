"""Shared builders for tests: events, live-service subprocesses, fixtures."""

import math
import socket
import subprocess
import sys
import time
from datetime import datetime, timedelta, timezone

from emomap.model import GeoPoint, PictureSource, TagEvent
from emomap.wheel import Placement, TagMap, classify, plutchik_wheel

BASE_TIME = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)


def free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def spawn_serve(store_root, port, base_url=None):
    """Start `emomap serve` and wait for its listening line."""
    cmd = [
        sys.executable, "-m", "emomap.cli", "serve",
        "--store", str(store_root), "--bind", f"127.0.0.1:{port}",
    ]
    if base_url:
        cmd += ["--base-url", base_url]
    proc = subprocess.Popen(
        cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, bufsize=1
    )
    line = proc.stdout.readline()
    if "listening on" not in line:
        err = proc.stderr.read() if proc.poll() is not None else ""
        raise RuntimeError(f"serve did not start: {line!r} {err}")
    return proc


def start_service(store_root, attempts=3):
    """Spawn a service on a free port, retrying if another process steals it."""
    last = None
    for _ in range(attempts):
        port = free_port()
        try:
            proc = spawn_serve(store_root, port)
        except RuntimeError as exc:
            last = exc
            continue
        wait_http_ready(port)
        return proc, f"http://127.0.0.1:{port}"
    raise RuntimeError(f"could not start service: {last}")


def wait_http_ready(port, timeout=10.0):
    import requests

    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            if requests.get(f"http://127.0.0.1:{port}/api/health", timeout=1).ok:
                return
        except requests.RequestException:
            time.sleep(0.05)
    raise TimeoutError("service never became ready")


def placement_at(angle_deg, radius):
    a = math.radians(angle_deg)
    return Placement(radius * math.sin(a), radius * math.cos(a))


def event_at(
    angle_deg,
    radius=0.5,
    tag_map=None,
    event_id="e1",
    experiment_id="exp",
    participant_id="p1",
    picture_id="pic1",
    tagged_at=None,
    location=None,
    client_time=None,
    picture_source=PictureSource.CURATED,
):
    tag_map = tag_map or plutchik_wheel()
    placement = placement_at(angle_deg, radius)
    return TagEvent(
        event_id=event_id,
        experiment_id=experiment_id,
        participant_id=participant_id,
        picture_id=picture_id,
        placement=placement,
        classification=classify(tag_map, placement),
        tagged_at=tagged_at or BASE_TIME,
        client_time=client_time,
        location=location,
        picture_source=picture_source,
    )


# Custom map with awkward labels, to exercise CSV quoting end to end.
QUOTED_MAP = TagMap(
    id="walkability",
    sector_count=4,
    sector_offset_deg=0.0,
    band_boundaries=(0.5,),
    labels=(
        ('very "safe"', "calm, safe"),
        ("busy", "lively, loud"),
        ("unsafe", 'risky "avoid"'),
        ("dull", "quiet\nempty"),
    ),
)


def golden_events():
    """Fifty fully pinned events for the byte-stable golden export."""
    wheel = plutchik_wheel()
    events = []
    for i in range(50):
        angle = (i * 37.0 + 5.0) % 360.0
        radius = 0.05 + 0.9 * ((i * 13) % 17) / 17.0
        participant = f"p{i % 7:02d}"
        picture = f"pic{i % 10:02d}"
        tagged = BASE_TIME + timedelta(minutes=i, microseconds=123456 if i % 5 == 0 else 0)
        if i % 3 == 0:
            location = GeoPoint(52.20 + i * 0.001, 21.00 + i * 0.002)
        else:
            location = None
        tag_map = QUOTED_MAP if i % 11 == 0 else wheel
        events.append(
            event_at(
                angle,
                radius,
                tag_map=tag_map,
                event_id=f"evt{i:03d}",
                experiment_id="exp-golden",
                participant_id=participant,
                picture_id=picture,
                tagged_at=tagged,
                location=location,
                picture_source=PictureSource.PARTICIPANT if i % 4 == 0 else PictureSource.CURATED,
            )
        )
    return events
