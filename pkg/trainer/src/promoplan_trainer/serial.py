"""Canonical JSON helpers shared with the recommender's artifacts.

Compact separators, sorted keys, one object per line for collections.
Field names and money-in-cents conventions follow the interchange
contract; nothing here may drift without breaking the other side.
"""

from __future__ import annotations

import json
from typing import Any, Iterable

from .errors import DataError


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def write_jsonl(path, objs: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(dumps_canonical(obj))
            fh.write("\n")


def read_jsonl(path) -> list[dict]:
    out = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except ValueError as e:
                raise DataError(f"{path}: malformed JSON on line {lineno}: {e}") from e
            if not isinstance(obj, dict):
                raise DataError(f"{path}: line {lineno} is not an object")
            out.append(obj)
    return out
