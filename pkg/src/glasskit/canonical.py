"""Canonical JSON: the single byte encoding used for signing and hashing.

Rules: UTF-8, object keys sorted by code point, no insignificant
whitespace, integers in shortest decimal form. Floats and non-text keys
are rejected outright so two platforms can never disagree on the bytes.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import CanonicalizationError

Json = None | bool | int | str | list | dict


def _check(value: Any, path: str) -> None:
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return
    if isinstance(value, float):
        raise CanonicalizationError(f"floating-point value at {path}")
    if isinstance(value, int):
        return
    if isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            _check(item, f"{path}[{i}]")
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise CanonicalizationError(f"non-text key {key!r} at {path}")
            _check(item, f"{path}.{key}")
        return
    raise CanonicalizationError(f"unsupported type {type(value).__name__} at {path}")


def canonical_serialize(value: Json) -> bytes:
    """Serialize ``value`` to canonical JSON bytes.

    Only maps, lists, text, integers, booleans and null are accepted;
    anything else raises :class:`CanonicalizationError`.
    """
    _check(value, "$")
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def canonical_parse(data: bytes | str) -> Json:
    """Parse JSON produced by (or destined for) :func:`canonical_serialize`.

    Numbers with a fractional or exponent part are rejected to keep the
    serialize-parse-serialize roundtrip exact.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    def _no_floats(s: str) -> int:
        raise CanonicalizationError(f"floating-point literal {s!r}")

    try:
        return json.loads(data, parse_float=_no_floats)
    except json.JSONDecodeError as exc:
        raise CanonicalizationError(f"invalid JSON: {exc}") from exc
