"""Helpers shared by the whitespace-delimited text formats."""

from __future__ import annotations

from pathlib import Path

from .errors import FormatError


def check_id(sample_id: str) -> str:
    if not sample_id or any(ch.isspace() for ch in sample_id):
        raise FormatError(f"sample id {sample_id!r} must be non-empty and contain no whitespace")
    return sample_id


def format_vector(values) -> str:
    # repr() round-trips doubles exactly
    return " ".join(repr(float(v)) for v in values)


def open_for_write(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")
