"""Default resource caps shared by the enumerating operations."""

from __future__ import annotations

ENUM_CAP = 1 << 26
BASIS_CAP = 64
SEQ_CAP = 10**9


class CapExceeded(ValueError):
    """A requested enumeration or search exceeds its configured cap."""


class NotRepresentable(CapExceeded):
    """A quantity is too large to hold as an exact integer."""
