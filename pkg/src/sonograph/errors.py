"""Shared error type: every failure carries a machine-readable code."""

from __future__ import annotations

from typing import Optional


class SonographError(Exception):
    """Base error with a stable code and an optional field path."""

    def __init__(self, code: str, message: str, path: Optional[str] = None):
        self.code = code
        self.message = message
        self.path = path
        super().__init__(f"{code}: {message}" + (f" (at {path})" if path else ""))
