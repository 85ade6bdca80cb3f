import io
from collections import defaultdict
from datetime import timedelta

import pytest
from PIL import Image

from emomap.service import Platform
from emomap.store import FileStore

from helpers import BASE_TIME


class FakeClock:
    """Test clock: starts at BASE_TIME, advances only when told to."""

    def __init__(self, start=BASE_TIME):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, **kwargs):
        self.now += timedelta(**kwargs)


def sequential_ids():
    counters = defaultdict(int)

    def factory(prefix):
        counters[prefix] += 1
        return f"{prefix}{counters[prefix]:04d}"

    return factory


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def file_store(tmp_path):
    return FileStore(tmp_path / "store")


@pytest.fixture
def platform(file_store, clock):
    return Platform(
        file_store,
        clock=clock,
        id_factory=sequential_ids(),
        base_url="http://emomap.test",
    )


def jpeg_bytes(size=(64, 48), color=(200, 40, 90)):
    img = Image.new("RGB", size, color)
    buf = io.BytesIO()
    img.save(buf, "JPEG")
    return buf.getvalue()


def png_bytes(size=(32, 32), color=(10, 120, 200)):
    img = Image.new("RGB", size, color)
    buf = io.BytesIO()
    img.save(buf, "PNG")
    return buf.getvalue()
