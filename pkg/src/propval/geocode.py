"""Address-to-coordinates resolution behind a narrow interface.

Real backends (e.g. a hosted geocoding API) plug in via ``Geocoder``; the
bundled stub hashes the address to a stable point inside a configured
bounding box so the whole system runs offline and deterministically.
Resolution failure is never fatal — callers proceed without coordinates.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol

#: (south, west, north, east) — roughly Taiwan.
DEFAULT_BBOX = (21.8, 119.9, 25.4, 122.1)


class Geocoder(Protocol):
    def resolve(self, address: str) -> tuple[float, float] | None: ...


@dataclass(frozen=True)
class StubGeocoder:
    """Deterministic offline geocoder: same address, same coordinates,
    always inside the bounding box."""

    bbox: tuple[float, float, float, float] = DEFAULT_BBOX

    def resolve(self, address: str) -> tuple[float, float] | None:
        if not address or not address.strip():
            return None
        digest = hashlib.sha256(address.strip().encode("utf-8")).digest()
        a = int.from_bytes(digest[:8], "big") / 2**64
        b = int.from_bytes(digest[8:16], "big") / 2**64
        south, west, north, east = self.bbox
        return (south + a * (north - south), west + b * (east - west))


@dataclass(frozen=True)
class NullGeocoder:
    """Backend that never resolves; exercises the degraded path."""

    def resolve(self, address: str) -> tuple[float, float] | None:
        return None
